//! The experiment grid: feature ablations, grouping, satellites, top-k
//! supports and training-size sweeps.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::split::{KeySplit, SplitSizes};
use super::{run_trials, EvalReport};
use crate::annotate::LabeledPair;
use crate::classify::{ClassifierConfig, ModelKind};
use crate::conllu::Corpus;
use crate::error::{Error, Result};
use crate::features::{featurize, BrownClusters, FeatureConfig, FeatureSource, FeaturizedExample};
use crate::kb::{KnowledgeBase, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Ablation,
    Grouping,
    Satellites,
    Supports,
    Sweep,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Ablation,
        Variant::Grouping,
        Variant::Satellites,
        Variant::Supports,
        Variant::Sweep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Ablation => "ablation",
            Variant::Grouping => "grouping",
            Variant::Satellites => "satellites",
            Variant::Supports => "supports",
            Variant::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidParam(format!("unknown variant {s:?}")))
    }
}

/// Default training-size sweep points.
pub const DEFAULT_SWEEP: [usize; 5] = [1_000, 5_000, 10_000, 25_000, 50_000];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cell {
    pub variant: Variant,
    pub setting: String,
    pub features: FeatureConfig,
    pub train_limit: Option<usize>,
}

impl Cell {
    fn new(variant: Variant, setting: &str, features: FeatureConfig) -> Self {
        Cell {
            variant,
            setting: setting.to_owned(),
            features,
            train_limit: None,
        }
    }

    pub fn name(&self, relation: &RelationId, model: ModelKind) -> String {
        format!("{relation}/{model}/{}/{}", self.variant, self.setting)
    }
}

/// The baseline system of the grid: satellites on, five most frequent
/// supports, grouped.
pub fn baseline(base: &FeatureConfig) -> FeatureConfig {
    FeatureConfig {
        use_brown: true,
        use_lemma: true,
        use_pos: true,
        use_dep: true,
        use_entities: true,
        use_satellites: true,
        source: FeatureSource::DependencyPath,
        top_k_supports: Some(5),
        grouped: true,
        ..base.clone()
    }
}

pub fn ablation_cells(base: &FeatureConfig) -> Vec<Cell> {
    let full = baseline(base);
    let with = |f: &dyn Fn(&mut FeatureConfig)| {
        let mut c = full.clone();
        f(&mut c);
        c
    };
    vec![
        Cell::new(Variant::Ablation, "full", full.clone()),
        Cell::new(Variant::Ablation, "-brown", with(&|c| c.use_brown = false)),
        Cell::new(Variant::Ablation, "-lemma", with(&|c| c.use_lemma = false)),
        Cell::new(Variant::Ablation, "-pos", with(&|c| c.use_pos = false)),
        Cell::new(Variant::Ablation, "-dep", with(&|c| c.use_dep = false)),
        Cell::new(Variant::Ablation, "-entities", with(&|c| c.use_entities = false)),
        Cell::new(
            Variant::Ablation,
            "xy-only",
            with(&|c| {
                c.source = FeatureSource::EntitiesOnly;
                c.use_satellites = false;
            }),
        ),
        Cell::new(
            Variant::Ablation,
            "full-sentence",
            with(&|c| {
                c.source = FeatureSource::FullSentence;
                c.use_entities = false;
                c.use_satellites = false;
            }),
        ),
    ]
}

pub fn cells(variants: &[Variant], base: &FeatureConfig, sweep: &[usize]) -> Vec<Cell> {
    let full = baseline(base);
    let all_supports = FeatureConfig {
        top_k_supports: None,
        ..full.clone()
    };
    let mut out = Vec::new();
    for v in variants {
        match v {
            Variant::Ablation => out.extend(ablation_cells(base)),
            Variant::Grouping => {
                out.push(Cell::new(*v, "grouped", all_supports.clone()));
                out.push(Cell::new(
                    *v,
                    "ungrouped",
                    FeatureConfig {
                        grouped: false,
                        ..all_supports.clone()
                    },
                ));
            }
            Variant::Satellites => {
                out.push(Cell::new(*v, "satellites", all_supports.clone()));
                out.push(Cell::new(
                    *v,
                    "no-satellites",
                    FeatureConfig {
                        use_satellites: false,
                        ..all_supports.clone()
                    },
                ));
            }
            Variant::Supports => {
                out.push(Cell::new(*v, "top5", full.clone()));
                out.push(Cell::new(*v, "all", all_supports.clone()));
            }
            Variant::Sweep => {
                for &n in sweep {
                    let mut c = Cell::new(*v, &format!("n={n}"), full.clone());
                    c.train_limit = Some(n);
                    out.push(c);
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixSettings {
    pub models: Vec<ModelKind>,
    pub variants: Vec<Variant>,
    pub sizes: SplitSizes,
    pub trials: usize,
    pub seed: u64,
    pub sweep: Vec<usize>,
    pub threshold: f64,
    pub base_features: FeatureConfig,
    pub classifier: ClassifierConfig,
    /// Worker threads for grid cells; 1 runs everything on the caller.
    pub jobs: usize,
}

impl Default for MatrixSettings {
    fn default() -> Self {
        MatrixSettings {
            models: vec![ModelKind::Ngram, ModelKind::MaxEnt],
            variants: Variant::ALL.to_vec(),
            sizes: SplitSizes::default(),
            trials: 3,
            seed: 0,
            sweep: DEFAULT_SWEEP.to_vec(),
            threshold: 0.5,
            base_features: FeatureConfig::default(),
            classifier: ClassifierConfig::default(),
            jobs: 1,
        }
    }
}

pub struct MatrixInputs<'a> {
    pub corpus: &'a Corpus,
    pub clusters: &'a BrownClusters,
    pub kb: &'a KnowledgeBase,
}

struct Task<'a> {
    relation: &'a RelationId,
    cell: &'a Cell,
    model: ModelKind,
    examples: &'a [FeaturizedExample],
    split: &'a KeySplit,
}

/// Run every (relation, cell, model) combination. Rows come back in grid
/// order whatever the number of jobs.
pub fn run_matrix(
    inputs: &MatrixInputs<'_>,
    data: &[(RelationId, Vec<LabeledPair>)],
    settings: &MatrixSettings,
) -> Result<Vec<EvalReport>> {
    let grid = cells(&settings.variants, &settings.base_features, &settings.sweep);

    let mut splits = Vec::with_capacity(data.len());
    let mut featurized: Vec<HashMap<String, Vec<FeaturizedExample>>> = Vec::with_capacity(data.len());
    for (relation, pairs) in data {
        splits.push(KeySplit::new(pairs.iter().map(|p| p.key()), settings.sizes, settings.seed)?);
        let mut cache = HashMap::new();
        for cell in &grid {
            let fp = cell.features.fingerprint();
            if let std::collections::hash_map::Entry::Vacant(slot) = cache.entry(fp) {
                let ex = featurize(pairs, inputs.corpus, inputs.clusters, inputs.kb, &cell.features)?;
                log::debug!("{relation}: {} examples for {}", ex.len(), slot.key());
                slot.insert(ex);
            }
        }
        featurized.push(cache);
    }

    let mut tasks = Vec::new();
    for (i, (relation, _)) in data.iter().enumerate() {
        for cell in &grid {
            for &model in &settings.models {
                tasks.push(Task {
                    relation,
                    cell,
                    model,
                    examples: &featurized[i][&cell.features.fingerprint()],
                    split: &splits[i],
                });
            }
        }
    }

    let run = |t: &Task<'_>| run_cell(t, settings);
    if settings.jobs > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(settings.jobs)
            .build()
            .map_err(|e| Error::InvalidParam(format!("cannot start worker pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    } else {
        tasks.iter().map(run).collect()
    }
}

fn run_cell(t: &Task<'_>, settings: &MatrixSettings) -> Result<EvalReport> {
    let name = t.cell.name(t.relation, t.model);
    let splits = t.split.apply(t.examples, t.cell.train_limit);
    splits.check_disjoint()?;
    let missing = |msg: &str| Error::MissingInput {
        cell: name.clone(),
        msg: msg.to_owned(),
    };
    if splits.test.is_empty() {
        return Err(missing("no test examples"));
    }
    let pos = splits.train.iter().filter(|e| e.is_positive()).count();
    if pos == 0 || pos == splits.train.len() {
        return Err(missing("training split does not contain both classes"));
    }
    log::info!("running {name}: {} train, {} test", splits.train.len(), splits.test.len());
    let trials = run_trials(
        t.model,
        &splits.train,
        &splits.test,
        &settings.classifier,
        settings.trials,
        settings.seed,
        settings.threshold,
    )?;
    Ok(EvalReport::new(
        t.relation.clone(),
        t.model,
        t.cell.variant,
        t.cell.setting.clone(),
        t.cell.features.fingerprint(),
        settings.threshold,
        splits.train_keys(),
        splits.test.len(),
        trials,
    ))
}
