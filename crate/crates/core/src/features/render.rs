//! Feature-token rendering: `lemma/brown4/UPOS/deprel[/dir]` per path node,
//! with disabled fields removed entirely (no empty slots).

use std::borrow::Cow;

use super::brown::BrownClusters;
use super::path::{Direction, PathNode};
use super::FeatureConfig;
use crate::conllu::{ParsedSentence, Span, Token};

/// Brown prefix rendered for the `X` / `Y` placeholder nodes.
pub const PLACEHOLDER_CLUSTER: &str = "0000";

/// `\` and `/` are backslash-escaped so field boundaries stay unambiguous.
pub fn escape_field(s: &str) -> Cow<'_, str> {
    if s.contains(['/', '\\']) {
        Cow::Owned(s.replace('\\', "\\\\").replace('/', "\\/"))
    } else {
        Cow::Borrowed(s)
    }
}

/// Split a rendered token on unescaped `/`.
pub fn split_fields(token: &str) -> Vec<String> {
    let mut fields = vec![String::new()];
    let mut chars = token.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                if let Some(next) = chars.next() {
                    fields.last_mut().unwrap().push(next);
                }
            }
            '/' => fields.push(String::new()),
            c => fields.last_mut().unwrap().push(c),
        }
    }
    fields
}

fn render_fields(
    lemma: &str,
    brown: &str,
    upos: &str,
    deprel: &str,
    direction: Direction,
    cfg: &FeatureConfig,
) -> Option<String> {
    let mut fields: Vec<Cow<str>> = Vec::with_capacity(5);
    if cfg.use_lemma {
        fields.push(escape_field(lemma));
    }
    if cfg.use_brown {
        fields.push(escape_field(brown));
    }
    if cfg.use_pos {
        fields.push(escape_field(upos));
    }
    if cfg.use_dep {
        fields.push(escape_field(deprel));
        if let Some(mark) = direction.mark() {
            fields.push(Cow::Owned(mark.to_string()));
        }
    }
    if fields.is_empty() {
        None
    } else {
        Some(fields.join("/"))
    }
}

pub fn render_node(node: &PathNode, clusters: &BrownClusters, cfg: &FeatureConfig) -> Option<String> {
    let brown = if node.entity.is_some() {
        PLACEHOLDER_CLUSTER.to_owned()
    } else {
        clusters.prefix4(&node.lemma)
    };
    render_fields(&node.lemma, &brown, &node.upos, &node.deprel, node.direction, cfg)
}

/// Linear context tokens: the one before the X span and the one after the Y span.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Satellites {
    pub pre: Option<Token>,
    pub post: Option<Token>,
}

impl Satellites {
    pub fn around(s: &ParsedSentence, x_span: Span, y_span: Span) -> Self {
        Satellites {
            pre: (x_span.start > 1).then(|| s.token(x_span.start - 1).clone()),
            post: (y_span.end < s.len()).then(|| s.token(y_span.end + 1).clone()),
        }
    }
}

fn render_satellite(t: &Token, direction: Direction, clusters: &BrownClusters, cfg: &FeatureConfig) -> Option<String> {
    render_fields(&t.lemma, &clusters.prefix4(&t.lemma), &t.upos, &t.deprel, direction, cfg)
}

/// Tokens for one support: optional pre-satellite, path nodes, optional post-satellite.
pub fn render_support(
    path: &[PathNode],
    satellites: Option<&Satellites>,
    clusters: &BrownClusters,
    cfg: &FeatureConfig,
) -> Vec<String> {
    let mut out = Vec::with_capacity(path.len() + 2);
    let sats = satellites.filter(|_| cfg.use_satellites);
    if let Some(t) = sats.and_then(|s| s.pre.as_ref()) {
        out.extend(render_satellite(t, Direction::Up, clusters, cfg));
    }
    out.extend(path.iter().filter_map(|n| render_node(n, clusters, cfg)));
    if let Some(t) = sats.and_then(|s| s.post.as_ref()) {
        out.extend(render_satellite(t, Direction::Down, clusters, cfg));
    }
    out
}

/// `Surface_String/brown4`, or the bare surface when Brown features are off.
pub fn render_entity(surface: &str, brown4: &str, cfg: &FeatureConfig) -> String {
    if cfg.use_brown {
        format!("{}/{}", escape_field(surface), escape_field(brown4))
    } else {
        escape_field(surface).into_owned()
    }
}

/// All lowercased word forms of the sentence.
pub fn render_sentence(s: &ParsedSentence) -> Vec<String> {
    s.tokens.iter().map(|t| t.form.to_lowercase()).collect()
}
