//! Logistic regression and linear SVM on standardized commit metrics.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, LabelledRow, LearnerError};
use crate::corpus::{FeatureVector, FEATURE_COUNT};
use crate::linear::{self, Example, LinearConfig, LinearModel, Loss};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLinearModel {
    pub loss: Loss,
    /// Per-feature training mean and standard deviation used for z-scoring.
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    pub model: LinearModel,
}

impl DenseLinearModel {
    fn standardize(&self, features: &FeatureVector) -> Vec<f64> {
        features.iter().zip(&self.means).zip(&self.scales).map(|((x, m), s)| (x - m) / s).collect()
    }

    pub fn decision(&self, features: &FeatureVector) -> f64 {
        self.model.decision_dense(&self.standardize(features))
    }

    /// `1 / (1 + e^{-t})` of the decision value.
    pub fn probability(&self, features: &FeatureVector) -> f64 {
        linear::sigmoid(self.decision(features))
    }

    /// Positive when `u ≥ 0.5`, equivalently `t ≥ 0`.
    pub fn predict(&self, features: &FeatureVector) -> bool {
        self.decision(features) >= 0.0
    }
}

fn fit(rows: &[LabelledRow], config: &LinearConfig, loss: Loss) -> Result<DenseLinearModel, LearnerError> {
    check_both_classes(rows)?;
    config.validate().map_err(LearnerError::InvalidConfig)?;
    let n = rows.len() as f64;
    let mut means = vec![0.0; FEATURE_COUNT];
    let mut scales = vec![0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        let mu = rows.iter().map(|r| r.features[j]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r.features[j] - mu).powi(2)).sum::<f64>() / n;
        means[j] = mu;
        scales[j] = if var > 0.0 { var.sqrt() } else { 1.0 };
    }
    let pairs: Vec<Vec<(u32, f64)>> = rows
        .iter()
        .map(|r| (0..FEATURE_COUNT).map(|j| (j as u32, (r.features[j] - means[j]) / scales[j])).collect())
        .collect();
    let examples: Vec<Example> = pairs.iter().zip(rows).map(|(x, r)| Example::new(x, r.label)).collect();
    let model = linear::train(FEATURE_COUNT, &examples, loss, config);
    Ok(DenseLinearModel { loss, means, scales, model })
}

pub fn train_logistic(rows: &[LabelledRow], config: &LinearConfig) -> Result<DenseLinearModel, LearnerError> {
    fit(rows, config, Loss::Logistic)
}

pub fn train_linear_svm(rows: &[LabelledRow], config: &LinearConfig) -> Result<DenseLinearModel, LearnerError> {
    fit(rows, config, Loss::Hinge)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{row, separable};
    use super::*;
    use crate::corpus::Feature;

    fn cfg() -> LinearConfig {
        LinearConfig { l2_lambda: 0.01, epochs: 50 }
    }

    fn accuracy(m: &DenseLinearModel, rows: &[LabelledRow]) -> f64 {
        rows.iter().filter(|r| m.predict(&r.features) == r.label).count() as f64 / rows.len() as f64
    }

    #[test]
    fn separable_fixture_is_fit_perfectly() {
        let rows: Vec<LabelledRow> = (0..40).map(|i| row(&[(Feature::La, f64::from(i))], i >= 20)).collect();
        assert_eq!(accuracy(&train_logistic(&rows, &cfg()).unwrap(), &rows), 1.0);
        assert_eq!(accuracy(&train_linear_svm(&rows, &cfg()).unwrap(), &rows), 1.0);
    }

    #[test]
    fn probability_at_zero_decision_is_half() {
        assert_eq!(linear::sigmoid(0.0), 0.5);
    }

    #[test]
    fn duplicated_rows_keep_signs() {
        let rows = separable(30);
        let twice: Vec<LabelledRow> = rows.iter().flat_map(|r| [*r, *r]).collect();
        for loss_fit in [train_logistic, train_linear_svm] {
            let a = loss_fit(&rows, &cfg()).unwrap();
            let b = loss_fit(&twice, &cfg()).unwrap();
            for r in &rows {
                assert_eq!(a.predict(&r.features), b.predict(&r.features));
            }
        }
    }

    #[test]
    fn symmetric_pair_has_zero_decision_at_origin() {
        // standardized features of the two rows are +1 and -1 on LA
        let rows = vec![row(&[(Feature::La, 1.0)], true), row(&[(Feature::La, -1.0)], false)];
        let m = train_linear_svm(&rows, &cfg()).unwrap();
        assert_eq!(m.decision(&row(&[(Feature::La, 0.0)], false).features), 0.0);
    }

    #[test]
    fn label_flip_negates_decisions() {
        let rows = separable(30);
        let flipped: Vec<LabelledRow> = rows.iter().map(|r| LabelledRow { label: !r.label, ..*r }).collect();
        for loss_fit in [train_logistic, train_linear_svm] {
            let a = loss_fit(&rows, &cfg()).unwrap();
            let b = loss_fit(&flipped, &cfg()).unwrap();
            for r in &rows {
                assert_eq!(a.decision(&r.features), -b.decision(&r.features));
            }
        }
    }
}
