use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::Serialize;

use relex_core::annotate::{annotate_corpus, AnnotateOptions, LabeledPair};
use relex_core::classify::{ClassifierConfig, FeatureMode, MaxEntConfig, Model, ModelKind, TrainConfig};
use relex_core::conllu::{read_corpus_dir, Corpus};
use relex_core::eval::report::write_report_dir;
use relex_core::eval::{evaluate, run_experiment, Confusion, ExperimentPlan};
use relex_core::fact_index::{build_bloom, BloomFilter};
use relex_core::features::{featurize, BrownClusters, FeatureConfig, FeatureSource, FeaturizedExample};
use relex_core::fsio::{atomic_write, read_jsonl, write_jsonl};
use relex_core::kb::{load_kb, KbConfig, KbPaths, KnowledgeBase, RelationId};
use relex_core::synth;

use crate::{
    AnnotateArgs, BuildBloomArgs, Command, EvaluateArgs, ExperimentArgs, FeaturizeArgs, FixtureKind, GenFixtureArgs,
    KbArgs, LoadCheckArgs, ModelArg, PredictArgs, Source, TrainArgs,
};

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::LoadCheck(a) => load_check(a),
        Command::BuildBloom(a) => build_bloom_cmd(a),
        Command::Annotate(a) => annotate(a),
        Command::Featurize(a) => featurize_cmd(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::GenFixture(a) => gen_fixture(a),
    }
}

/// 1 for bad invocations, 3 when the optimizer gives up, 2 for everything
/// else (unreadable or malformed data).
pub fn exit_code(e: &anyhow::Error) -> u8 {
    use relex_core::Error as E;
    match e.chain().find_map(|c| c.downcast_ref::<E>()) {
        Some(E::NonConvergence { .. }) => 3,
        Some(E::InvalidParam(_)) => 1,
        _ if e.chain().any(|c| c.downcast_ref::<UsageError>().is_some()) => 1,
        _ => 2,
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl KbArgs {
    fn paths(&self) -> Result<KbPaths> {
        let pick = |explicit: &Option<PathBuf>, name: &str| {
            explicit.clone().or_else(|| {
                let p = self.kb.as_ref()?.join(name);
                p.exists().then_some(p)
            })
        };
        let Some(triples) = self.triples.clone().or_else(|| self.kb.as_ref().map(|d| d.join("triples.tsv"))) else {
            return Err(UsageError("either --kb or --triples is required".into()).into());
        };
        Ok(KbPaths {
            triples,
            denotations: pick(&self.denotations, "denotations.tsv"),
            signatures: pick(&self.signatures, "signatures.tsv"),
            url_map: pick(&self.urls, "urls.tsv"),
        })
    }

    fn load(&self) -> Result<KnowledgeBase> {
        let (kb, report) = load_kb(&self.paths()?, KbConfig::default())?;
        for m in &report.malformed {
            warn!("{}:{}: {}", m.source, m.line, m.reason);
        }
        for w in &report.warnings {
            warn!("{w}");
        }
        info!(
            "KB: {} facts, {} denotations, {} signatures, {} page urls",
            report.facts, report.denotations, report.signatures, report.urls
        );
        Ok(kb)
    }
}

fn load_corpus(dir: &Path) -> Result<Corpus> {
    let docs = read_corpus_dir(dir)?;
    let corpus = Corpus::new(docs);
    info!("corpus: {} documents, {} sentences", corpus.documents().len(), corpus.num_sentences());
    Ok(corpus)
}

fn load_check(a: LoadCheckArgs) -> Result<()> {
    let (kb, report) = load_kb(&a.kb.paths()?, KbConfig::default())?;
    println!("facts\t{}", report.facts);
    println!("entities\t{}", kb.entities().len());
    println!("denotations\t{}", report.denotations);
    println!("signatures\t{}", report.signatures);
    println!("page_urls\t{}", report.urls);
    println!("malformed_lines\t{}", report.malformed.len());
    for m in &report.malformed {
        println!("malformed\t{}:{}\t{}", m.source, m.line, m.reason);
    }
    for w in &report.warnings {
        println!("warning\t{w}");
    }
    if let Some(dir) = &a.corpus {
        let corpus = Corpus::new(read_corpus_dir(dir)?);
        let mut bad_trees = 0;
        for doc in corpus.documents() {
            for s in &doc.sentences {
                if let Err(e) = s.validate() {
                    bad_trees += 1;
                    println!("bad_tree\t{}\t{e}", doc.url);
                }
            }
        }
        let unmapped = corpus
            .documents()
            .iter()
            .filter(|d| kb.main_entity(&d.url).is_none())
            .count();
        println!("documents\t{}", corpus.documents().len());
        println!("sentences\t{}", corpus.num_sentences());
        println!("documents_without_main_entity\t{unmapped}");
        println!("malformed_trees\t{bad_trees}");
        if bad_trees > 0 && a.strict {
            bail!("{bad_trees} malformed dependency trees");
        }
    }
    if let Some(path) = &a.brown {
        let clusters = BrownClusters::load(path)?;
        println!("brown_words\t{}", clusters.len());
        println!("brown_clusters\t{}", clusters.cluster_count());
    }
    if a.strict && !report.malformed.is_empty() {
        bail!("{} malformed KB lines", report.malformed.len());
    }
    Ok(())
}

fn build_bloom_cmd(a: BuildBloomArgs) -> Result<()> {
    let kb = a.kb.load()?;
    let filter = build_bloom(kb.facts(), a.fpr, a.seed)?;
    atomic_write(&a.out, |w| filter.write_to(w))?;
    info!(
        "wrote {}: {} facts, {} bits, {} hashes",
        a.out.display(),
        filter.num_inserted(),
        filter.num_bits(),
        filter.num_hashes()
    );
    Ok(())
}

fn with_threads<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("starting worker pool")?;
    Ok(pool.install(f))
}

fn annotate(a: AnnotateArgs) -> Result<()> {
    let kb = a.kb.load()?;
    let corpus = load_corpus(&a.corpus)?;
    let bloom = match &a.bloom {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("cannot read {}", p.display()))?;
            Some(BloomFilter::read_from(BufReader::new(f))?)
        }
        None => None,
    };
    let opts = AnnotateOptions {
        hops: a.hops,
        max_path_len: a.max_path_len,
        min_path_freq: a.min_path_freq,
        negative_ratio: a.negative_ratio,
        seed: a.seed,
    };
    let mut all: Vec<LabeledPair> = Vec::new();
    for r in &a.relation {
        let relation = RelationId::from(r.as_str());
        let (pairs, stats) =
            with_threads(a.jobs, || annotate_corpus(&corpus, &kb, &relation, bloom.as_ref(), &opts))??;
        info!(
            "{relation}: {} labeled, {} after path filter, {} kept ({} positive / {} negative groups), {} pages skipped",
            stats.labeled,
            stats.after_path_filter,
            stats.kept,
            stats.positive_groups,
            stats.negative_groups,
            stats.skipped_documents
        );
        all.extend(pairs);
    }
    write_jsonl(&a.out, &all)?;
    info!("wrote {} labeled pairs to {}", all.len(), a.out.display());
    Ok(())
}

fn featurize_cmd(a: FeaturizeArgs) -> Result<()> {
    let kb = a.kb.load()?;
    let corpus = load_corpus(&a.corpus)?;
    let clusters = BrownClusters::load(&a.brown)?;
    let pairs: Vec<LabeledPair> = read_jsonl(&a.pairs)?;
    let cfg = FeatureConfig {
        use_brown: !a.no_brown,
        use_lemma: !a.no_lemma,
        use_pos: !a.no_pos,
        use_dep: !a.no_dep,
        use_entities: !a.no_entities,
        use_satellites: a.satellites,
        source: match a.source {
            Source::Path => FeatureSource::DependencyPath,
            Source::Sentence => FeatureSource::FullSentence,
            Source::Entities => FeatureSource::EntitiesOnly,
        },
        max_path_len: a.max_path_len,
        min_path_freq: a.min_path_freq,
        top_k_supports: a.top_k,
        grouped: !a.ungrouped,
    };
    let examples = featurize(&pairs, &corpus, &clusters, &kb, &cfg)?;
    write_jsonl(&a.out, &examples)?;
    let pos = examples.iter().filter(|e| e.is_positive()).count();
    info!(
        "wrote {} examples ({pos} positive) to {} [{}]",
        examples.len(),
        a.out.display(),
        cfg.fingerprint()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let examples: Vec<FeaturizedExample> = read_jsonl(&a.examples)?;
    let kind = match a.model {
        ModelArg::Ngram => ModelKind::Ngram,
        ModelArg::Maxent => ModelKind::MaxEnt,
    };
    let cfg = ClassifierConfig {
        ngram: TrainConfig {
            seed: a.seed,
            dim: a.dim,
            bucket_count: a.buckets,
            epochs: a.epochs,
            learning_rate: a.lr,
            ngram_order: a.ngram_order,
            hash_seed: 0,
        },
        maxent: MaxEntConfig {
            sigma2: a.sigma2,
            mode: if a.counts { FeatureMode::Count } else { FeatureMode::Presence },
            max_iter: a.max_iter,
            grad_tol: a.grad_tol,
        },
    };
    let start = std::time::Instant::now();
    let model = Model::train(kind, &examples, &cfg)?;
    info!("trained {kind} on {} examples in {:.2}s", examples.len(), start.elapsed().as_secs_f64());
    atomic_write(&a.out, |w| model.write_to(w))?;
    Ok(())
}

fn read_model(path: &Path) -> Result<Model> {
    let f = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(Model::read_from(BufReader::new(f))?)
}

#[derive(Serialize)]
struct Prediction<'a> {
    x: &'a str,
    y: &'a str,
    relation: &'a str,
    label: u8,
    probability: f64,
    predicted: u8,
}

fn predict(a: PredictArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let examples: Vec<FeaturizedExample> = read_jsonl(&a.examples)?;
    let rows: Vec<Prediction> = examples
        .iter()
        .map(|e| {
            let p = model.predict_proba(&e.features);
            Prediction {
                x: e.x.as_str(),
                y: e.y.as_str(),
                relation: e.relation.as_str(),
                label: e.label,
                probability: p,
                predicted: u8::from(p >= a.threshold),
            }
        })
        .collect();
    write_jsonl(&a.out, &rows)?;
    info!("wrote {} predictions to {}", rows.len(), a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct Scores {
    model: ModelKind,
    threshold: f64,
    examples: usize,
    confusion: Confusion,
    precision: f64,
    recall: f64,
    f_score: f64,
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let model = read_model(&a.model)?;
    let examples: Vec<FeaturizedExample> = read_jsonl(&a.examples)?;
    let c = evaluate(&model, &examples, a.threshold)?;
    let scores = Scores {
        model: model.kind(),
        threshold: a.threshold,
        examples: examples.len(),
        confusion: c,
        precision: c.precision(),
        recall: c.recall(),
        f_score: c.f_score(),
    };
    println!("precision\t{:.4}", scores.precision);
    println!("recall\t{:.4}", scores.recall);
    println!("f_score\t{:.4}", scores.f_score);
    println!("tp\t{}\nfp\t{}\nfn\t{}\ntn\t{}", c.tp, c.fp, c.fn_, c.tn);
    if let Some(out) = &a.out {
        atomic_write(out, |w| {
            serde_json::to_writer_pretty(&mut *w, &scores)?;
            writeln!(w)
        })?;
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut plan = ExperimentPlan::load(&a.plan)?;
    if let Some(j) = a.jobs {
        plan.matrix.jobs = j;
    }
    if let Some(out) = a.out {
        plan.output = out;
    }
    let outcome = run_experiment(&plan)?;
    write_report_dir(&plan.output, &outcome.reports)?;
    let annotation: Vec<_> = outcome
        .annotation
        .iter()
        .map(|(r, s)| serde_json::json!({ "relation": r, "stats": s }))
        .collect();
    atomic_write(&plan.output.join("annotation.json"), |w| {
        serde_json::to_writer_pretty(&mut *w, &annotation)?;
        writeln!(w)
    })?;
    for r in &outcome.reports {
        println!(
            "{}\t{}\t{}\t{}\tF={:.4}\tstd={:.4}\tP={:.4}\tR={:.4}",
            r.relation, r.model, r.variant, r.setting, r.f_score, r.f_std, r.precision, r.recall
        );
    }
    info!("wrote {} report rows to {}", outcome.reports.len(), plan.output.display());
    Ok(())
}

fn gen_fixture(a: GenFixtureArgs) -> Result<()> {
    let fixture = match a.kind {
        FixtureKind::World => synth::world(&synth::WorldConfig {
            seed: a.seed,
            ..synth::WorldConfig::default()
        }),
        FixtureKind::Noise => synth::noise(&synth::NoiseConfig {
            seed: a.seed,
            ..synth::NoiseConfig::default()
        }),
    };
    fixture.write_to_dir(&a.out)?;
    info!(
        "wrote {} sentences, {} facts, {} gold mentions to {}",
        fixture.num_sentences(),
        fixture.facts.len(),
        fixture.gold.len(),
        a.out.display()
    );
    Ok(())
}
