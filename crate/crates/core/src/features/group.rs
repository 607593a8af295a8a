//! Support grouping: every sentence occurrence of an `(x, relation, y)`
//! triple becomes one support, and a grouped example's feature sequence is
//! the X entity token, each support's rendering in order, then the Y entity
//! token.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::brown::BrownClusters;
use super::path::{extract_path, span_head, PathNode};
use super::render::{render_entity, render_sentence, render_support, Satellites};
use super::{FeatureConfig, FeatureSource};
use crate::annotate::{Label, LabeledPair, PairKey};
use crate::conllu::Corpus;
use crate::error::{Error, Result};
use crate::kb::{EntityId, KnowledgeBase, RelationId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    pub doc_url: String,
    pub sent_id: String,
    pub path: Vec<PathNode>,
    pub satellites: Satellites,
    pub rendered: Vec<String>,
    /// Number of supports of the same pair with an identical rendering.
    pub frequency: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupedExample {
    pub x: EntityId,
    pub y: EntityId,
    pub relation: RelationId,
    pub label: Label,
    pub x_surface: String,
    pub y_surface: String,
    pub x_brown: String,
    pub y_brown: String,
    pub supports: Vec<Support>,
}

/// One line of the featurized JSON Lines file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizedExample {
    pub x: EntityId,
    pub y: EntityId,
    pub relation: RelationId,
    pub label: u8,
    pub features: Vec<String>,
    pub n_supports: usize,
}

impl FeaturizedExample {
    pub fn key(&self) -> PairKey {
        PairKey {
            x: self.x.clone(),
            relation: self.relation.clone(),
            y: self.y.clone(),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.label == 1
    }
}

impl GroupedExample {
    pub fn key(&self) -> PairKey {
        PairKey {
            x: self.x.clone(),
            relation: self.relation.clone(),
            y: self.y.clone(),
        }
    }

    pub fn features(&self, cfg: &FeatureConfig) -> Vec<String> {
        let mut out = Vec::new();
        if cfg.use_entities {
            out.push(render_entity(&self.x_surface, &self.x_brown, cfg));
        }
        for s in &self.supports {
            out.extend(s.rendered.iter().cloned());
        }
        if cfg.use_entities {
            out.push(render_entity(&self.y_surface, &self.y_brown, cfg));
        }
        out
    }

    /// One single-support example per support.
    pub fn ungrouped(&self) -> Vec<GroupedExample> {
        self.supports
            .iter()
            .map(|s| GroupedExample {
                supports: vec![s.clone()],
                ..self.without_supports()
            })
            .collect()
    }

    fn without_supports(&self) -> GroupedExample {
        GroupedExample {
            x: self.x.clone(),
            y: self.y.clone(),
            relation: self.relation.clone(),
            label: self.label,
            x_surface: self.x_surface.clone(),
            y_surface: self.y_surface.clone(),
            x_brown: self.x_brown.clone(),
            y_brown: self.y_brown.clone(),
            supports: Vec::new(),
        }
    }

    pub fn to_featurized(&self, cfg: &FeatureConfig) -> FeaturizedExample {
        FeaturizedExample {
            x: self.x.clone(),
            y: self.y.clone(),
            relation: self.relation.clone(),
            label: self.label.as_u8(),
            features: self.features(cfg),
            n_supports: self.supports.len(),
        }
    }
}

fn assign_frequencies(supports: &mut [Support]) {
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for s in supports.iter() {
        *counts.entry(s.rendered.clone()).or_default() += 1;
    }
    for s in supports.iter_mut() {
        s.frequency = counts[&s.rendered];
    }
}

/// Group labeled pairs by `(x, relation, y)` in first-appearance order.
/// Pairs without an admissible path contribute no support; groups left with
/// no support are dropped.
pub fn group_supports(
    pairs: &[LabeledPair],
    corpus: &Corpus,
    clusters: &BrownClusters,
    kb: &KnowledgeBase,
    cfg: &FeatureConfig,
) -> Result<Vec<GroupedExample>> {
    cfg.validate()?;
    let mut order: Vec<PairKey> = Vec::new();
    let mut groups: HashMap<PairKey, GroupedExample> = HashMap::new();

    for p in pairs {
        let s = corpus.get(&p.doc_url, &p.sent_id).ok_or_else(|| {
            Error::InvalidParam(format!("pair references unknown sentence {}#{}", p.doc_url, p.sent_id))
        })?;
        let Some(path) = extract_path(s, p.x_span, p.y_span, Some(cfg.max_path_len))? else {
            continue;
        };
        let satellites = Satellites::around(s, p.x_span, p.y_span);
        let rendered = match cfg.source {
            FeatureSource::DependencyPath => render_support(&path, Some(&satellites), clusters, cfg),
            FeatureSource::FullSentence => render_sentence(s),
            FeatureSource::EntitiesOnly => Vec::new(),
        };
        let key = p.key();
        let group = groups.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            GroupedExample {
                x: p.x.clone(),
                y: p.y.clone(),
                relation: p.relation.clone(),
                label: p.label,
                x_surface: kb.canonical_surface(&p.x),
                y_surface: kb.canonical_surface(&p.y),
                x_brown: clusters.prefix4(&s.token(span_head(s, p.x_span)).lemma),
                y_brown: clusters.prefix4(&s.token(span_head(s, p.y_span)).lemma),
                supports: Vec::new(),
            }
        });
        group.supports.push(Support {
            doc_url: p.doc_url.clone(),
            sent_id: p.sent_id.clone(),
            path,
            satellites,
            rendered,
            frequency: 0,
        });
    }

    if let Some(min) = cfg.min_path_freq {
        let mut corpus_freq: HashMap<&Vec<String>, usize> = HashMap::new();
        for g in groups.values() {
            for s in &g.supports {
                *corpus_freq.entry(&s.rendered).or_default() += 1;
            }
        }
        let rare: Vec<Vec<String>> = corpus_freq
            .into_iter()
            .filter(|(_, c)| *c < min)
            .map(|(r, _)| r.clone())
            .collect();
        for g in groups.values_mut() {
            g.supports.retain(|s| !rare.contains(&s.rendered));
        }
    }

    let mut out = Vec::with_capacity(order.len());
    for key in order {
        let mut g = groups.remove(&key).unwrap();
        if g.supports.is_empty() {
            continue;
        }
        assign_frequencies(&mut g.supports);
        out.push(g);
    }
    Ok(out)
}

/// Keep the `k` most frequent supports; ties go to the earlier support.
pub fn select_top_supports(ex: &GroupedExample, k: usize) -> GroupedExample {
    let k = k.max(1);
    if ex.supports.len() <= k {
        return ex.clone();
    }
    let mut ranked: Vec<(usize, &Support)> = ex.supports.iter().enumerate().collect();
    ranked.sort_by(|(ia, a), (ib, b)| b.frequency.cmp(&a.frequency).then(ia.cmp(ib)));
    GroupedExample {
        supports: ranked.into_iter().take(k).map(|(_, s)| s.clone()).collect(),
        ..ex.without_supports()
    }
}

/// Group, apply top-k selection, and flatten into featurized examples
/// (one per pair when grouped, one per support otherwise).
pub fn featurize(
    pairs: &[LabeledPair],
    corpus: &Corpus,
    clusters: &BrownClusters,
    kb: &KnowledgeBase,
    cfg: &FeatureConfig,
) -> Result<Vec<FeaturizedExample>> {
    let groups = group_supports(pairs, corpus, clusters, kb, cfg)?;
    Ok(flatten(&groups, cfg))
}

pub(crate) fn flatten(groups: &[GroupedExample], cfg: &FeatureConfig) -> Vec<FeaturizedExample> {
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        let g = match cfg.top_k_supports {
            Some(k) => select_top_supports(g, k),
            None => g.clone(),
        };
        if cfg.grouped {
            out.push(g.to_featurized(cfg));
        } else {
            out.extend(g.ungrouped().iter().map(|u| u.to_featurized(cfg)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn support(tag: &str, frequency: usize) -> Support {
        Support {
            doc_url: "d".into(),
            sent_id: tag.into(),
            path: Vec::new(),
            satellites: Satellites::default(),
            rendered: vec![tag.to_owned()],
            frequency,
        }
    }

    fn example(supports: Vec<Support>) -> GroupedExample {
        GroupedExample {
            x: "x".into(),
            y: "y".into(),
            relation: "r".into(),
            label: Label::Positive,
            x_surface: "X_Thing".into(),
            y_surface: "Y_Thing".into(),
            x_brown: "0101".into(),
            y_brown: "UNK".into(),
            supports,
        }
    }

    fn tags(ex: &GroupedExample) -> Vec<&str> {
        ex.supports.iter().map(|s| s.sent_id.as_str()).collect()
    }

    #[test]
    fn top_k_by_frequency() {
        let freqs = [5, 5, 3, 2, 1, 1, 1, 1];
        let ex = example(
            freqs
                .iter()
                .enumerate()
                .map(|(i, &f)| support(&format!("s{i}"), f))
                .collect(),
        );
        assert_eq!(tags(&select_top_supports(&ex, 5)), ["s0", "s1", "s2", "s3", "s4"]);
    }

    #[test]
    fn top_k_ties_keep_document_order() {
        let ex = example((0..6).map(|i| support(&format!("s{i}"), 2)).collect());
        assert_eq!(tags(&select_top_supports(&ex, 3)), ["s0", "s1", "s2"]);
        let freq_last = example(vec![support("a", 1), support("b", 1), support("c", 4)]);
        assert_eq!(tags(&select_top_supports(&freq_last, 2)), ["c", "a"]);
    }

    #[test]
    fn fewer_supports_than_k_is_unchanged() {
        let ex = example(vec![support("a", 1), support("b", 1), support("c", 1)]);
        assert_eq!(select_top_supports(&ex, 5), ex);
    }

    #[test]
    fn grouped_sequence_brackets_supports() {
        let ex = example(vec![support("a", 1), support("b", 1)]);
        let cfg = FeatureConfig::default();
        assert_eq!(ex.features(&cfg), ["X_Thing/0101", "a", "b", "Y_Thing/UNK"]);
        let no_entities = FeatureConfig {
            use_entities: false,
            ..FeatureConfig::default()
        };
        assert_eq!(ex.features(&no_entities), ["a", "b"]);
    }

    #[test]
    fn grouped_equals_concatenated_ungrouped() {
        let ex = example(vec![support("a", 1), support("b", 1), support("c", 1)]);
        let cfg = FeatureConfig::default();
        let grouped = ex.features(&cfg);
        let mut joined = Vec::new();
        let parts = ex.ungrouped();
        for (i, u) in parts.iter().enumerate() {
            let f = u.features(&cfg);
            let lo = if i == 0 { 0 } else { 1 };
            let hi = if i + 1 == parts.len() { f.len() } else { f.len() - 1 };
            joined.extend_from_slice(&f[lo..hi]);
        }
        assert_eq!(grouped, joined);
    }

    #[test]
    fn frequencies_count_identical_renderings() {
        let mut s = vec![support("a", 0), support("b", 0), support("a", 0)];
        assign_frequencies(&mut s);
        let f: Vec<usize> = s.iter().map(|s| s.frequency).collect();
        assert_eq!(f, [2, 1, 2]);
    }
}
