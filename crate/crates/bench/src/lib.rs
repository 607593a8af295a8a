//! Shared inputs for the benchmarks: the checked-in world fixture, loaded
//! and labeled once.

use std::path::{Path, PathBuf};

use relex_core::annotate::{annotate_corpus, AnnotateOptions, LabeledPair};
use relex_core::conllu::{read_corpus_dir, Corpus};
use relex_core::features::{featurize, BrownClusters, FeatureConfig, FeaturizedExample};
use relex_core::kb::{load_kb, KbConfig, KbPaths, KnowledgeBase, RelationId};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/world")
}

pub struct World {
    pub kb: KnowledgeBase,
    pub corpus: Corpus,
    pub clusters: BrownClusters,
}

pub fn load_world() -> World {
    let dir = fixture_dir();
    let paths = KbPaths {
        triples: dir.join("kb/triples.tsv"),
        denotations: Some(dir.join("kb/denotations.tsv")),
        signatures: Some(dir.join("kb/signatures.tsv")),
        url_map: Some(dir.join("kb/urls.tsv")),
    };
    World {
        kb: load_kb(&paths, KbConfig::default()).expect("fixture KB").0,
        corpus: Corpus::new(read_corpus_dir(&dir.join("corpus")).expect("fixture corpus")),
        clusters: BrownClusters::load(&dir.join("brown.txt")).expect("fixture clusters"),
    }
}

impl World {
    pub fn pairs(&self, relation: &str) -> Vec<LabeledPair> {
        annotate_corpus(&self.corpus, &self.kb, &RelationId::from(relation), None, &AnnotateOptions::default())
            .expect("annotation")
            .0
    }

    pub fn examples(&self, relation: &str) -> Vec<FeaturizedExample> {
        featurize(&self.pairs(relation), &self.corpus, &self.clusters, &self.kb, &FeatureConfig::default())
            .expect("featurize")
    }
}
