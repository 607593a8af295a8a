//! Distant-supervision annotation: greedy longest-match mention resolution
//! against a page gazetteer, pair labeling, path filters and negative
//! down-sampling at the grouped-pair level.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::conllu::{Corpus, ParsedSentence, Span};
use crate::error::{Error, Result};
use crate::fact_index::{decide_label, BloomFilter, Verdict};
use crate::features::path::extract_path;
use crate::gazetteer::{normalize, Gazetteer};
use crate::kb::{EntityId, KnowledgeBase, RelationId};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mention {
    pub entity: EntityId,
    pub span: Span,
    pub surface: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

/// Identity of a grouped example.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub x: EntityId,
    pub relation: RelationId,
    pub y: EntityId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub x: EntityId,
    pub y: EntityId,
    pub relation: RelationId,
    pub label: Label,
    pub doc_url: String,
    pub sent_id: String,
    pub x_span: Span,
    pub y_span: Span,
}

impl LabeledPair {
    pub fn key(&self) -> PairKey {
        PairKey {
            x: self.x.clone(),
            relation: self.relation.clone(),
            y: self.y.clone(),
        }
    }
}

/// Left-to-right scan taking, at each position, the longest token window
/// (up to the gazetteer's longest entry) whose normalized text is a key.
pub fn resolve_mentions(s: &ParsedSentence, g: &Gazetteer) -> Vec<Mention> {
    let forms: Vec<String> = s.tokens.iter().map(|t| normalize(&t.form)).collect();
    let n = forms.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let longest = g.max_entry_tokens().min(n - i);
        let hit = (1..=longest).rev().find_map(|len| {
            let window = &forms[i..i + len];
            if window.iter().any(String::is_empty) {
                return None;
            }
            g.get(&window.join(" ")).map(|e| (len, e))
        });
        match hit {
            Some((len, entity)) => {
                let surface = s.tokens[i..i + len]
                    .iter()
                    .map(|t| t.form.as_str())
                    .collect::<Vec<_>>()
                    .join(" ");
                out.push(Mention {
                    entity: entity.clone(),
                    span: Span::new(i + 1, i + len),
                    surface,
                });
                i += len;
            }
            None => i += 1,
        }
    }
    out
}

/// Label both orientations of every mention pair in every sentence.
/// Constraint-rejected orientations are dropped.
pub fn annotate_page(
    doc: &[ParsedSentence],
    g: &Gazetteer,
    relation: &RelationId,
    kb: &KnowledgeBase,
    bloom: Option<&BloomFilter>,
) -> Vec<LabeledPair> {
    let mut out = Vec::new();
    for s in doc {
        let mentions = resolve_mentions(s, g);
        for (i, a) in mentions.iter().enumerate() {
            for b in &mentions[i + 1..] {
                if a.entity == b.entity {
                    continue;
                }
                for (x, y) in [(a, b), (b, a)] {
                    let decision = decide_label(&x.entity, &y.entity, relation, kb, bloom);
                    let label = match decision.verdict {
                        Verdict::Positive => Label::Positive,
                        Verdict::NegativeCandidate => Label::Negative,
                        Verdict::ConstraintRejected => continue,
                    };
                    out.push(LabeledPair {
                        x: x.entity.clone(),
                        y: y.entity.clone(),
                        relation: relation.clone(),
                        label,
                        doc_url: s.doc_url.clone(),
                        sent_id: s.sent_id.clone(),
                        x_span: x.span,
                        y_span: y.span,
                    });
                }
            }
        }
    }
    out
}

/// Drop pairs whose dependency path is missing or longer than
/// `max_path_len` interior nodes and, when `min_path_freq` is set, pairs
/// whose (lemma, POS, deprel, direction) path occurs fewer times corpus-wide.
pub fn filter_by_path(
    pairs: Vec<LabeledPair>,
    corpus: &Corpus,
    max_path_len: usize,
    min_path_freq: Option<usize>,
) -> Result<Vec<LabeledPair>> {
    let mut kept = Vec::with_capacity(pairs.len());
    for p in pairs {
        let s = corpus.get(&p.doc_url, &p.sent_id).ok_or_else(|| {
            Error::InvalidParam(format!("pair references unknown sentence {}#{}", p.doc_url, p.sent_id))
        })?;
        if let Some(path) = extract_path(s, p.x_span, p.y_span, Some(max_path_len))? {
            let key: Vec<String> = path
                .iter()
                .map(|n| format!("{}/{}/{}/{:?}", n.lemma, n.upos, n.deprel, n.direction))
                .collect();
            kept.push((p, key.join(" ")));
        }
    }
    if let Some(min) = min_path_freq {
        let mut freq: HashMap<&str, usize> = HashMap::new();
        for (_, key) in &kept {
            *freq.entry(key.as_str()).or_default() += 1;
        }
        let keep: Vec<bool> = kept.iter().map(|(_, k)| freq[k.as_str()] >= min).collect();
        return Ok(kept
            .into_iter()
            .zip(keep)
            .filter_map(|((p, _), k)| k.then_some(p))
            .collect());
    }
    Ok(kept.into_iter().map(|(p, _)| p).collect())
}

/// Keep every positive group and `min(available, round(ratio * positives))`
/// negative groups per relation, chosen uniformly without replacement.
/// A group is all pairs sharing `(x, relation, y)`.
pub fn sample_negatives(pairs: Vec<LabeledPair>, ratio: f64, seed: u64) -> Result<Vec<LabeledPair>> {
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParam(format!("negative ratio must be positive, got {ratio}")));
    }
    let mut positives: BTreeMap<&RelationId, BTreeSet<PairKey>> = BTreeMap::new();
    let mut negatives: BTreeMap<&RelationId, BTreeSet<PairKey>> = BTreeMap::new();
    for p in &pairs {
        let bucket = match p.label {
            Label::Positive => &mut positives,
            Label::Negative => &mut negatives,
        };
        bucket.entry(&p.relation).or_default().insert(p.key());
    }

    let mut kept: BTreeSet<PairKey> = BTreeSet::new();
    for pos in positives.values() {
        kept.extend(pos.iter().cloned());
    }
    for (rel, neg) in &negatives {
        let pos_count = positives.get(rel).map_or(0, BTreeSet::len);
        let neg: Vec<&PairKey> = neg
            .iter()
            .filter(|k| !positives.get(rel).is_some_and(|p| p.contains(*k)))
            .collect();
        let want = ((ratio * pos_count as f64).round() as usize).min(neg.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ relation_salt(rel));
        for idx in sample(&mut rng, neg.len(), want).into_iter() {
            kept.insert(neg[idx].clone());
        }
    }
    Ok(pairs.into_iter().filter(|p| kept.contains(&p.key())).collect())
}

fn relation_salt(rel: &RelationId) -> u64 {
    xxhash_rust::xxh3::xxh3_64(rel.as_str().as_bytes())
}

/// Counts of distinct positive and negative groups per relation.
pub fn group_counts(pairs: &[LabeledPair]) -> BTreeMap<RelationId, (usize, usize)> {
    let mut keys: BTreeMap<RelationId, (BTreeSet<PairKey>, BTreeSet<PairKey>)> = BTreeMap::new();
    for p in pairs {
        let e = keys.entry(p.relation.clone()).or_default();
        match p.label {
            Label::Positive => e.0.insert(p.key()),
            Label::Negative => e.1.insert(p.key()),
        };
    }
    keys.into_iter()
        .map(|(r, (p, n))| (r, (p.len(), n.len())))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnnotateOptions {
    pub hops: usize,
    pub max_path_len: usize,
    pub min_path_freq: Option<usize>,
    pub negative_ratio: f64,
    pub seed: u64,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            hops: 1,
            max_path_len: 5,
            min_path_freq: None,
            negative_ratio: 4.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnnotateStats {
    pub documents: usize,
    /// Documents whose URL has no main entity in the KB.
    pub skipped_documents: usize,
    pub labeled: usize,
    pub after_path_filter: usize,
    pub kept: usize,
    pub positive_groups: usize,
    pub negative_groups: usize,
}

/// Run the full labeling stage over a corpus: page gazetteers, pair
/// labeling, path filtering and negative sampling. Pages are processed in
/// parallel; output order is document order regardless.
pub fn annotate_corpus(
    corpus: &Corpus,
    kb: &KnowledgeBase,
    relation: &RelationId,
    bloom: Option<&BloomFilter>,
    opts: &AnnotateOptions,
) -> Result<(Vec<LabeledPair>, AnnotateStats)> {
    use rayon::prelude::*;

    let per_doc: Vec<Option<Vec<LabeledPair>>> = corpus
        .documents()
        .par_iter()
        .map(|doc| match Gazetteer::for_page(kb, &doc.url, opts.hops) {
            Ok((g, _)) => Ok(Some(annotate_page(&doc.sentences, &g, relation, kb, bloom))),
            Err(Error::NoMainEntity(url)) => {
                log::warn!("no main entity for page {url}; skipped");
                Ok(None)
            }
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;

    let mut stats = AnnotateStats {
        documents: per_doc.len(),
        skipped_documents: per_doc.iter().filter(|d| d.is_none()).count(),
        ..AnnotateStats::default()
    };
    let labeled: Vec<LabeledPair> = per_doc.into_iter().flatten().flatten().collect();
    stats.labeled = labeled.len();
    let filtered = filter_by_path(labeled, corpus, opts.max_path_len, opts.min_path_freq)?;
    stats.after_path_filter = filtered.len();
    let kept = sample_negatives(filtered, opts.negative_ratio, opts.seed)?;
    stats.kept = kept.len();
    if let Some(&(pos, neg)) = group_counts(&kept).get(relation) {
        stats.positive_groups = pos;
        stats.negative_groups = neg;
    }
    Ok((kept, stats))
}
