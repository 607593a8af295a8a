//! Shortest dependency path between two entity spans.

use std::collections::HashSet;

use crate::conllu::{ParsedSentence, Span};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Between X and the LCA, walking toward the root (`>`).
    Up,
    /// Between the LCA and Y, walking away from the root (`<`).
    Down,
    /// The lowest common ancestor; rendered without a direction mark.
    Lca,
}

impl Direction {
    pub fn mark(self) -> Option<char> {
        match self {
            Direction::Up => Some('>'),
            Direction::Down => Some('<'),
            Direction::Lca => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntitySlot {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathNode {
    /// 1-based index of the token in the sentence.
    pub token: usize,
    /// Token lemma, or the literal `X` / `Y` at entity heads.
    pub lemma: String,
    pub upos: String,
    pub deprel: String,
    pub direction: Direction,
    pub entity: Option<EntitySlot>,
}

/// The span token whose head lies outside the span; the last one if several do.
pub fn span_head(s: &ParsedSentence, span: Span) -> usize {
    (span.start..=span.end)
        .rev()
        .find(|&i| !span.contains(s.token(i).head))
        .unwrap_or(span.end)
}

fn chain_to_root(s: &ParsedSentence, mut i: usize) -> Vec<usize> {
    let mut chain = Vec::new();
    while i != 0 {
        chain.push(i);
        i = s.token(i).head;
    }
    chain
}

/// Walk X head → LCA → Y head. Returns `None` when the spans overlap or
/// share a head, or when the path has more than `max_interior` nodes
/// between X and Y.
pub fn extract_path(
    s: &ParsedSentence,
    x_span: Span,
    y_span: Span,
    max_interior: Option<usize>,
) -> Result<Option<Vec<PathNode>>> {
    s.validate()?;
    let n = s.len();
    if x_span.start < 1 || y_span.start < 1 || x_span.end > n || y_span.end > n {
        return Ok(None);
    }
    if x_span.overlaps(&y_span) {
        return Ok(None);
    }
    let xh = span_head(s, x_span);
    let yh = span_head(s, y_span);
    if xh == yh {
        return Ok(None);
    }

    let x_chain = chain_to_root(s, xh);
    let y_chain = chain_to_root(s, yh);
    let y_set: HashSet<usize> = y_chain.iter().copied().collect();
    let lca_pos = x_chain
        .iter()
        .position(|i| y_set.contains(i))
        .expect("a validated tree has a common root");
    let lca = x_chain[lca_pos];
    let y_lca_pos = y_chain.iter().position(|&i| i == lca).unwrap();

    let total = lca_pos + 1 + y_lca_pos;
    if let Some(max) = max_interior {
        if total > max + 2 {
            return Ok(None);
        }
    }

    let node = |i: usize, direction: Direction| {
        let t = s.token(i);
        let entity = if i == xh {
            Some(EntitySlot::X)
        } else if i == yh {
            Some(EntitySlot::Y)
        } else {
            None
        };
        let lemma = match entity {
            Some(EntitySlot::X) => "X".to_owned(),
            Some(EntitySlot::Y) => "Y".to_owned(),
            None => t.lemma.clone(),
        };
        PathNode {
            token: i,
            lemma,
            upos: t.upos.clone(),
            deprel: t.deprel.clone(),
            direction,
            entity,
        }
    };

    let mut path = Vec::with_capacity(total);
    path.extend(x_chain[..lca_pos].iter().map(|&i| node(i, Direction::Up)));
    path.push(node(lca, Direction::Lca));
    path.extend(y_chain[..y_lca_pos].iter().rev().map(|&i| node(i, Direction::Down)));
    Ok(Some(path))
}
