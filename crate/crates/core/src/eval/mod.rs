//! Evaluation protocol: P/R/F at a fixed threshold, repeated trials that
//! differ only in the model seed, key-disjoint splits and the experiment
//! grid.

pub mod matrix;
pub mod metrics;
pub mod plan;
pub mod report;
pub mod split;

use std::time::Instant;

use serde::Serialize;

use crate::annotate::{annotate_corpus, AnnotateStats, LabeledPair};
use crate::classify::{ClassifierConfig, Model, ModelKind};
use crate::conllu::{read_corpus_dir, Corpus};
use crate::error::{Error, Result};
use crate::fact_index::build_bloom;
use crate::features::{BrownClusters, FeaturizedExample};
use crate::fsio::read_jsonl;
use crate::kb::{load_kb, KbConfig, RelationId};

pub use matrix::{cells, run_matrix, Cell, MatrixInputs, MatrixSettings, Variant};
pub use metrics::{evaluate, mean_std, Confusion};
pub use plan::ExperimentPlan;
pub use split::{KeySplit, Part, SplitSizes, Splits};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    pub confusion: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    #[serde(skip)]
    pub train_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub relation: RelationId,
    pub model: ModelKind,
    pub variant: Variant,
    pub setting: String,
    pub fingerprint: String,
    pub threshold: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub f_std: f64,
    pub trials: Vec<TrialResult>,
}

impl EvalReport {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        relation: RelationId,
        model: ModelKind,
        variant: Variant,
        setting: String,
        fingerprint: String,
        threshold: f64,
        train_size: usize,
        test_size: usize,
        trials: Vec<TrialResult>,
    ) -> Self {
        let f: Vec<f64> = trials.iter().map(|t| t.f_score).collect();
        let p: Vec<f64> = trials.iter().map(|t| t.precision).collect();
        let r: Vec<f64> = trials.iter().map(|t| t.recall).collect();
        let (f_score, f_std) = mean_std(&f);
        EvalReport {
            relation,
            model,
            variant,
            setting,
            fingerprint,
            threshold,
            train_size,
            test_size,
            precision: mean_std(&p).0,
            recall: mean_std(&r).0,
            f_score,
            f_std,
            trials,
        }
    }
}

/// Train and score `trials` models; trial `i` uses model seed `seed + i`.
/// MaxEnt has a unique optimum, so any spread across its trials is a bug
/// and is reported as an invariant violation.
pub fn run_trials(
    kind: ModelKind,
    train: &[FeaturizedExample],
    test: &[FeaturizedExample],
    cfg: &ClassifierConfig,
    trials: usize,
    seed: u64,
    threshold: f64,
) -> Result<Vec<TrialResult>> {
    if trials == 0 {
        return Err(Error::InvalidParam("at least one trial is required".into()));
    }
    let mut out = Vec::with_capacity(trials);
    for i in 0..trials {
        let trial_seed = seed.wrapping_add(i as u64);
        let mut cfg = cfg.clone();
        cfg.ngram.seed = trial_seed;
        let start = Instant::now();
        let model = Model::train(kind, train, &cfg)?;
        let train_seconds = start.elapsed().as_secs_f64();
        let confusion = evaluate(&model, test, threshold)?;
        out.push(TrialResult {
            trial: i,
            seed: trial_seed,
            confusion,
            precision: confusion.precision(),
            recall: confusion.recall(),
            f_score: confusion.f_score(),
            train_seconds,
        });
    }
    if kind == ModelKind::MaxEnt {
        let f: Vec<f64> = out.iter().map(|t| t.f_score).collect();
        let (_, std) = mean_std(&f);
        if std != 0.0 {
            return Err(Error::Invariant(format!("MaxEnt trials disagree (F std {std})")));
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ExperimentOutcome {
    pub reports: Vec<EvalReport>,
    pub annotation: Vec<(RelationId, AnnotateStats)>,
}

/// Load every input named by the plan, label (or read) pairs per relation
/// and run the grid.
pub fn run_experiment(plan: &ExperimentPlan) -> Result<ExperimentOutcome> {
    let (kb, load) = load_kb(&plan.kb, KbConfig::default())?;
    for w in &load.warnings {
        log::warn!("{w}");
    }
    let corpus = Corpus::new(read_corpus_dir(&plan.corpus)?);
    let clusters = BrownClusters::load(&plan.brown)?;
    let bloom = match plan.bloom_fpr {
        Some(p) => Some(build_bloom(kb.facts(), p, plan.seed)?),
        None => None,
    };

    let stored: Option<Vec<LabeledPair>> = match &plan.pairs {
        Some(p) => Some(read_jsonl(p)?),
        None => None,
    };
    let mut data = Vec::new();
    let mut annotation = Vec::new();
    for relation in &plan.relations {
        let pairs = match &stored {
            Some(all) => all.iter().filter(|p| &p.relation == relation).cloned().collect(),
            None => {
                let (pairs, stats) = annotate_corpus(&corpus, &kb, relation, bloom.as_ref(), &plan.annotate)?;
                log::info!(
                    "{relation}: {} positive and {} negative groups",
                    stats.positive_groups,
                    stats.negative_groups
                );
                annotation.push((relation.clone(), stats));
                pairs
            }
        };
        data.push((relation.clone(), pairs));
    }

    let inputs = MatrixInputs {
        corpus: &corpus,
        clusters: &clusters,
        kb: &kb,
    };
    let reports = run_matrix(&inputs, &data, &plan.matrix)?;
    Ok(ExperimentOutcome { reports, annotation })
}
