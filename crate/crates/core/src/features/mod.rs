//! Discrete relation-extraction features: dependency paths between the two
//! entities with lemma, Brown-prefix, POS, dependency-label and direction
//! fields, optional satellite tokens, and per-pair support grouping.

pub mod brown;
pub mod group;
pub mod path;
pub mod render;

pub use brown::BrownClusters;
pub use group::{featurize, group_supports, select_top_supports, FeaturizedExample, GroupedExample, Support};
pub use path::{extract_path, span_head, Direction, EntitySlot, PathNode};
pub use render::{render_entity, render_node, render_support, Satellites};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureSource {
    DependencyPath,
    /// Every lowercased word of each support sentence, no path.
    FullSentence,
    /// Only the X and Y entity tokens.
    EntitiesOnly,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub use_brown: bool,
    pub use_lemma: bool,
    pub use_pos: bool,
    /// Dependency label and path direction together.
    pub use_dep: bool,
    pub use_entities: bool,
    pub use_satellites: bool,
    pub source: FeatureSource,
    /// Maximum interior nodes between X and Y.
    pub max_path_len: usize,
    /// Corpus-wide minimum occurrence count of a rendered path; `None` disables.
    pub min_path_freq: Option<usize>,
    pub top_k_supports: Option<usize>,
    /// Concatenate all supports of a pair into one example.
    pub grouped: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            use_brown: true,
            use_lemma: true,
            use_pos: true,
            use_dep: true,
            use_entities: true,
            use_satellites: false,
            source: FeatureSource::DependencyPath,
            max_path_len: 5,
            min_path_freq: None,
            top_k_supports: None,
            grouped: true,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<()> {
        let any_path_field = self.use_brown || self.use_lemma || self.use_pos || self.use_dep;
        let any = match self.source {
            FeatureSource::FullSentence => true,
            FeatureSource::DependencyPath => any_path_field || self.use_entities,
            FeatureSource::EntitiesOnly => self.use_entities,
        };
        if !any {
            return Err(Error::InvalidParam("no feature family enabled".into()));
        }
        if self.top_k_supports == Some(0) {
            return Err(Error::InvalidParam("top-k supports must be at least 1".into()));
        }
        Ok(())
    }

    /// Short stable description used in report rows.
    pub fn fingerprint(&self) -> String {
        let b = |v: bool| if v { '1' } else { '0' };
        let source = match self.source {
            FeatureSource::DependencyPath => "path",
            FeatureSource::FullSentence => "sentence",
            FeatureSource::EntitiesOnly => "entities",
        };
        format!(
            "{source}:b{}l{}p{}d{}e{}s{}:len{}:top{}:{}",
            b(self.use_brown),
            b(self.use_lemma),
            b(self.use_pos),
            b(self.use_dep),
            b(self.use_entities),
            b(self.use_satellites),
            self.max_path_len,
            self.top_k_supports.map_or("all".to_owned(), |k| k.to_string()),
            if self.grouped { "grouped" } else { "ungrouped" },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn everything_off_is_invalid() {
        let cfg = FeatureConfig {
            use_brown: false,
            use_lemma: false,
            use_pos: false,
            use_dep: false,
            use_entities: false,
            ..FeatureConfig::default()
        };
        assert!(cfg.validate().is_err());
        let sentence = FeatureConfig {
            source: FeatureSource::FullSentence,
            ..cfg
        };
        assert!(sentence.validate().is_ok());
        let xy = FeatureConfig {
            source: FeatureSource::EntitiesOnly,
            ..cfg
        };
        assert!(xy.validate().is_err());
    }

    #[test]
    fn fingerprint_distinguishes_configs() {
        let a = FeatureConfig::default();
        let b = FeatureConfig {
            use_pos: false,
            ..FeatureConfig::default()
        };
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), "path:b1l1p1d1e1s0:len5:topall:grouped");
    }
}
