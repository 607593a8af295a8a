//! Distant-supervision relation extraction toolkit.
//!
//! The pipeline runs in stages that communicate through files:
//!
//! 1. [`kb`] loads triples, denotations, class signatures and the page map.
//! 2. [`gazetteer`] builds a per-page gazetteer from the main entity's
//!    one-hop KB neighborhood.
//! 3. [`annotate`] resolves mentions with greedy longest match and labels
//!    candidate pairs through [`fact_index`] (class-signature filter, then
//!    exact or Bloom-filter lookup), then down-samples negatives.
//! 4. [`features`] turns labeled pairs into discrete dependency-path tokens.
//! 5. [`classify`] trains a hashed n-gram linear model or a MaxEnt model.
//! 6. [`eval`] measures P/R/F and runs the experiment grid.

pub mod annotate;
pub mod classify;
pub mod conllu;
pub mod error;
pub mod eval;
pub mod fact_index;
pub mod features;
pub mod fsio;
pub mod gazetteer;
pub mod kb;
pub mod synth;

pub use annotate::{
    annotate_corpus, annotate_page, resolve_mentions, sample_negatives, AnnotateOptions, AnnotateStats, Label, LabeledPair,
    Mention, PairKey,
};
pub use conllu::{Corpus, Document, ParsedSentence, Span, Token};
pub use error::{Error, Result};
pub use fact_index::{build_bloom, decide_label, BloomFilter, LabelDecision, Verdict, Via};
pub use features::{BrownClusters, FeatureConfig, FeatureSource, FeaturizedExample, GroupedExample};
pub use gazetteer::Gazetteer;
pub use kb::{load_kb, EntityId, Fact, KbConfig, KbPaths, KnowledgeBase, RelationId};
pub use classify::{ClassifierConfig, FeatureMode, MaxEntConfig, Model, ModelKind, TrainConfig};
pub use eval::{run_experiment, EvalReport, ExperimentOutcome, ExperimentPlan, MatrixSettings, SplitSizes, Variant};
