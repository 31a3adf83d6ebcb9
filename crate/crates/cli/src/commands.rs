//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use emblem_core::corpus::{
    ingest_csv, propagate_inducing, ColumnSchema, CorpusOptions, FixInducingLinks, StopList,
};
use emblem_core::cost::{estimate_cost, CostAssumptions, Method};
use emblem_core::emblem::{random_baseline_recall, run_with_oracle};
use emblem_core::eval::{evaluate_release_pairs, win_table, FarMode, RigConfig, TreatmentSpec, WinTable};
use emblem_core::keyword::{label_corpus, KeywordRuleSet};
use emblem_core::labels::{read_labels, write_labels, Labels};
use emblem_core::learners::{LearnerConfig, LearnerKind, SmoteConfig, TrainGoal};
use emblem_core::seed::derive_seed;
use emblem_core::stats::ScottKnottConfig;
use emblem_core::{Corpus, EmblemParams};
use serde_json::json;

use crate::{
    Compare, CorpusSource, CostArgs, CostMethod, EvaluateArgs, IngestArgs, KeywordArgs, ServeArgs, SimulateArgs,
};

fn open(path: &Path) -> Result<File> {
    File::open(path).with_context(|| format!("cannot open {}", path.display()))
}

fn read_schema(path: Option<&Path>) -> Result<ColumnSchema> {
    match path {
        None => Ok(ColumnSchema::default()),
        Some(p) => serde_json::from_reader(open(p)?).with_context(|| format!("invalid schema {}", p.display())),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

/// Reads a corpus file, or ingests a CSV (reporting skipped rows on stderr).
fn load_corpus(source: &CorpusSource) -> Result<Corpus> {
    if is_csv(&source.corpus) {
        let schema = read_schema(source.schema.as_deref())?;
        let report = ingest_csv(open(&source.corpus)?, &schema, CorpusOptions::default())
            .with_context(|| format!("cannot ingest {}", source.corpus.display()))?;
        report_skipped(&report.skipped);
        Ok(report.corpus)
    } else {
        Corpus::load(&source.corpus).with_context(|| format!("cannot load corpus {}", source.corpus.display()))
    }
}

fn report_skipped(skipped: &[emblem_core::corpus::RowError]) {
    for s in skipped {
        eprintln!("skipped line {}: {}", s.line, s.message);
    }
    if !skipped.is_empty() {
        eprintln!("skipped {} malformed row(s)", skipped.len());
    }
}

fn load_labels(path: &Path) -> Result<Labels> {
    read_labels(open(path)?).with_context(|| format!("invalid labels file {}", path.display()))
}

fn load_links(path: &Path) -> Result<FixInducingLinks> {
    FixInducingLinks::from_json_reader(open(path)?).with_context(|| format!("invalid links file {}", path.display()))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let schema = read_schema(args.schema.as_deref())?;
    let stopwords = match &args.stopwords {
        Some(p) => StopList::from_path(p).with_context(|| format!("cannot read {}", p.display()))?,
        None => StopList::default(),
    };
    let options = CorpusOptions { n1: args.n1, stopwords };
    let report = ingest_csv(open(&args.csv)?, &schema, options)
        .with_context(|| format!("cannot ingest {}", args.csv.display()))?;
    report_skipped(&report.skipped);
    report.corpus.save(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    let c = &report.corpus;
    if args.json {
        let v = json!({
            "out": args.out,
            "n_commits": c.len(),
            "n_releases": c.releases().len(),
            "vocabulary": c.vocabulary().len(),
            "skipped": report.skipped,
        });
        println!("{v:#}");
    } else {
        println!(
            "ingested {} commits in {} releases ({} terms); skipped {} rows; wrote {}",
            c.len(),
            c.releases().len(),
            c.vocabulary().len(),
            report.skipped.len(),
            args.out.display()
        );
    }
    Ok(())
}

pub fn keyword_label(args: KeywordArgs) -> Result<()> {
    let corpus = load_corpus(&args.source)?;
    let custom = args.rules.is_some() || !args.fixing_categories.is_empty();
    let mut rules = match &args.rules {
        Some(p) => KeywordRuleSet::from_json_reader(open(p)?).with_context(|| format!("invalid rules {}", p.display()))?,
        None => KeywordRuleSet::default(),
    };
    if !args.fixing_categories.is_empty() {
        rules = rules.with_fixing_categories(args.fixing_categories.clone())?;
    }
    let mut labels = label_corpus(&corpus, &rules);
    if let Some(p) = &args.links {
        labels = propagate_inducing(corpus.ids(), &labels, &load_links(p)?)?;
    }
    let comment = custom.then(|| {
        let fixing: Vec<&str> = rules.fixing_categories.iter().map(String::as_str).collect();
        format!("rules: {}\nfixing categories: {}", rules.to_json(), fixing.join(", "))
    });
    let mut out = output(args.out.as_deref())?;
    let rows = corpus.commits().iter().map(|c| (c.id.as_str(), labels[&c.id]));
    write_labels(&mut out, rows, comment.as_deref())?;
    out.flush()?;
    Ok(())
}

pub fn serve(args: ServeArgs) -> Result<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let store = Arc::new(
            emblem_service::Store::open(&args.data_dir)
                .with_context(|| format!("cannot open data directory {}", args.data_dir.display()))?,
        );
        let (listener, local) = emblem_service::bind(&args.addr).await?;
        println!("listening on {local}");
        std::io::stdout().flush()?;
        emblem_service::serve(listener, store, emblem_service::shutdown_signal()).await?;
        eprintln!("shut down");
        Ok(())
    })
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let corpus = Arc::new(load_corpus(&args.source)?);
    let truth = load_labels(&args.truth)?;
    let params = EmblemParams {
        n1: args.params.n1,
        n2: args.params.n2,
        n3: args.params.n3,
        n4: args.params.n4,
        retrain_every: args.params.retrain_every,
        seed: args.seed,
        ..EmblemParams::default()
    };
    let t = run_with_oracle(corpus.clone(), &truth, params)?;
    if let Some(p) = &args.transcript {
        std::fs::write(p, t.to_csv()).with_context(|| format!("cannot write {}", p.display()))?;
    }
    let truth_vec: Vec<bool> = corpus.commits().iter().map(|c| truth[&c.id]).collect();
    let baseline = random_baseline_recall(&truth_vec, t.reads, args.seed);
    let estimated = t.rows.last().and_then(|r| r.estimated_recall);
    if args.json {
        let v = json!({
            "commits": t.corpus_size,
            "reads": t.reads,
            "fraction_read": t.fraction_read,
            "positives_found": t.positives_found,
            "total_positives": t.total_positives,
            "true_recall": t.true_recall,
            "estimated_recall": estimated,
            "stopped": t.stopped,
            "exhausted": t.exhausted,
            "random_baseline_recall": baseline,
        });
        println!("{v:#}");
        return Ok(());
    }
    let f4 = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!("commits           {}", t.corpus_size);
    println!("read              {} ({:.2}%)", t.reads, 100.0 * t.fraction_read);
    println!("positives found   {} of {}", t.positives_found, t.total_positives);
    println!("true recall       {}", f4(t.true_recall));
    println!("estimated recall  {}", f4(estimated));
    println!("stopped           {}", if t.stopped { "yes" } else { "no" });
    println!("random baseline   {} (recall of {} random reads)", f4(baseline), t.reads);
    if t.exhausted {
        if t.total_positives == 0 {
            println!("exhausted: every commit was read and the truth has no positives");
        } else {
            println!("exhausted: every commit was read before the stopping rule fired");
        }
    }
    Ok(())
}

fn to_inducing(labels: Labels, corpus: &Corpus, links: Option<&FixInducingLinks>) -> Result<Labels> {
    match links {
        Some(l) => Ok(propagate_inducing(corpus.ids(), &labels, l)?),
        None => Ok(labels),
    }
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let corpus = load_corpus(&args.source)?;
    let links = args.links.as_deref().map(load_links).transpose()?;
    let mut sets: Vec<(String, Arc<Labels>)> = vec![(
        args.name_a.clone(),
        Arc::new(to_inducing(load_labels(&args.labels_a)?, &corpus, links.as_ref())?),
    )];
    if let Some(b) = &args.labels_b {
        if args.name_b == args.name_a {
            bail!("--name-a and --name-b must differ");
        }
        sets.push((args.name_b.clone(), Arc::new(to_inducing(load_labels(b)?, &corpus, links.as_ref())?)));
    }
    let truth = args.truth.as_deref().map(load_labels).transpose()?;
    let truth = truth.map(|t| to_inducing(t, &corpus, links.as_ref())).transpose()?;

    let mut learners = Vec::new();
    for name in &args.learners {
        let kind: LearnerKind = name.parse().map_err(anyhow::Error::msg)?;
        if !learners.contains(&kind) {
            learners.push(kind);
        }
    }
    if learners.is_empty() {
        bail!("no learners given");
    }
    let goal: TrainGoal = args.goal.parse().map_err(anyhow::Error::msg)?;
    let far_mode: FarMode = args.far_mode.parse().map_err(anyhow::Error::msg)?;
    let mut learner = LearnerConfig { goal, fft_depth: args.fft_depth, ..LearnerConfig::default() };
    learner.forest.n_trees = args.n_trees;
    let config = RigConfig {
        learner,
        goal,
        repeats: args.repeats,
        seed: args.seed,
        smote: args.smote.then(SmoteConfig::default),
        far_mode,
    };

    let treatment_name = |set: &str, kind: LearnerKind| format!("{set}/{kind}");
    let treatments: Vec<TreatmentSpec> = sets
        .iter()
        .flat_map(|(name, labels)| {
            learners.iter().map(move |&k| TreatmentSpec {
                name: treatment_name(name, k),
                labels: labels.clone(),
                learner: k,
            })
        })
        .collect();
    let report = evaluate_release_pairs(&corpus, &treatments, truth.as_ref(), &config)?;

    // (group, rows: display name -> treatment name)
    let groups: Vec<(String, Vec<(String, String)>)> = match args.compare {
        Compare::Labels => learners
            .iter()
            .map(|&k| (k.to_string(), sets.iter().map(|(s, _)| (s.clone(), treatment_name(s, k))).collect()))
            .collect(),
        Compare::Learners => sets
            .iter()
            .map(|(s, _)| (s.clone(), learners.iter().map(|&k| (k.to_string(), treatment_name(s, k))).collect()))
            .collect(),
    };
    let sk = ScottKnottConfig::default();
    let mut tables: Vec<(String, WinTable)> = Vec::new();
    for (group, members) in &groups {
        let per_pair: Vec<BTreeMap<String, Vec<f64>>> = report
            .pairs
            .iter()
            .map(|p| members.iter().map(|(display, t)| (display.clone(), p.values[t].clone())).collect())
            .collect();
        let table = win_table(&per_pair, &sk, derive_seed(args.seed, &format!("evaluate/wintable/{group}")))?;
        tables.push((group.clone(), table));
    }

    if let Some(p) = &args.csv {
        let mut out = String::from("group,treatment,wins,pairs,percent,cell\n");
        for (group, t) in &tables {
            for line in t.to_csv().lines().skip(1) {
                out.push_str(&format!("{group},{line}\n"));
            }
        }
        std::fs::write(p, out).with_context(|| format!("cannot write {}", p.display()))?;
    }

    let metric = match goal {
        TrainGoal::GScore => "g",
        TrainGoal::Popt20 => "popt20",
    };
    if args.json {
        let v = json!({
            "metric": metric,
            "config": config,
            "pairs": report.pairs,
            "skipped": report.skipped,
            "tables": tables.iter().map(|(g, t)| json!({ "group": g, "rows": t.rows })).collect::<Vec<_>>(),
        });
        println!("{v:#}");
        return Ok(());
    }
    println!(
        "metric {metric}; {} release pair(s) evaluated, {} skipped; {} repeat(s)",
        report.pairs.len(),
        report.skipped.len(),
        config.repeats
    );
    for s in &report.skipped {
        println!("skipped {} -> {}: {}", s.train_release, s.test_release, s.reason);
    }
    let width = treatments.iter().map(|t| t.name.len()).max().unwrap_or(0);
    for p in &report.pairs {
        println!("\nrelease {} -> {} (median {metric})", p.train_release, p.test_release);
        for (name, values) in &p.values {
            println!("  {name:<width$}  {:.4}", median(values));
        }
    }
    for (group, t) in &tables {
        let label = match args.compare {
            Compare::Labels => "learner",
            Compare::Learners => "labels",
        };
        println!("\nwin table ({label} {group})");
        print!("{}", t.render());
    }
    Ok(())
}

pub fn cost(args: CostArgs) -> Result<()> {
    let method = match args.method {
        CostMethod::Manual => Method::Manual,
        CostMethod::Emblem => Method::Emblem,
    };
    let mut a = CostAssumptions::for_method(method);
    if let Some(v) = args.projects {
        a.projects = v;
    }
    if let Some(v) = args.seconds_per_commit {
        a.seconds_per_commit = v;
    }
    if let Some(v) = args.commits {
        a.commits_to_read = v;
    }
    if let Some(v) = args.wage {
        a.wage_per_hour = v;
    }
    if let Some(v) = args.readers {
        a.readers_per_commit = v;
    }
    if let Some(v) = args.cull {
        a.cull_multiplier = v;
    }
    if let Some(v) = args.overhead {
        a.overhead_multiplier = v;
    }
    let report = estimate_cost(&a)?;
    if args.json {
        println!("{:#}", json!({ "method": method, "assumptions": a, "report": report }));
    } else {
        print!("{}", report.render(&a));
    }
    Ok(())
}
