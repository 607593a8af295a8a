//! Labeling decision for a candidate pair: ontological pre-filter on the
//! relation's class signature, then exact or Bloom-filter fact lookup.

mod bloom;

pub use bloom::{build_bloom, optimal_params, BloomFilter};

use crate::kb::{ClassConstraint, EntityId, Fact, KnowledgeBase, RelationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Positive,
    NegativeCandidate,
    ConstraintRejected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Via {
    ExactLookup,
    BloomLookup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LabelDecision {
    pub verdict: Verdict,
    pub via: Via,
}

/// Label `(left, relation, right)`. Without a signature both sides are
/// unconstrained. A constraint rejection never consults the fact test.
pub fn decide_label(
    left: &EntityId,
    right: &EntityId,
    relation: &RelationId,
    kb: &KnowledgeBase,
    bloom: Option<&BloomFilter>,
) -> LabelDecision {
    let via = if bloom.is_some() {
        Via::BloomLookup
    } else {
        Via::ExactLookup
    };
    let (lc, rc) = kb
        .signature(relation)
        .map(|s| (&s.left, &s.right))
        .unwrap_or((&ClassConstraint::Any, &ClassConstraint::Any));
    if !kb.satisfies(left, lc) || !kb.satisfies(right, rc) {
        return LabelDecision {
            verdict: Verdict::ConstraintRejected,
            via,
        };
    }
    let fact = Fact::new(left.clone(), relation.clone(), right.clone());
    let present = match bloom {
        Some(b) => b.contains_fact(&fact),
        None => kb.has_fact(&fact),
    };
    LabelDecision {
        verdict: if present {
            Verdict::Positive
        } else {
            Verdict::NegativeCandidate
        },
        via,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{KbBuilder, KbConfig};

    fn kb() -> KnowledgeBase {
        let mut b = KbBuilder::new(KbConfig::default());
        b.read_triples(
            "t",
            "paris\tP31\tcity\n\
             city\tP279\tgeo\n\
             lyon\tP31\tcity\n\
             anna\tP31\thuman\n\
             bob\tP31\thuman\n\
             paris\tbirthplace\tanna\n"
                .as_bytes(),
        )
        .unwrap();
        b.read_signatures("s", "birthplace\tgeo\thuman\t0\n".as_bytes())
            .unwrap();
        b.finish().0
    }

    fn id(s: &str) -> EntityId {
        EntityId::from(s)
    }

    #[test]
    fn positive_through_subclass_closure() {
        let kb = kb();
        let d = decide_label(&id("paris"), &id("anna"), &"birthplace".into(), &kb, None);
        assert_eq!(d.verdict, Verdict::Positive);
        assert_eq!(d.via, Via::ExactLookup);
    }

    #[test]
    fn person_cannot_be_a_birthplace() {
        let kb = kb();
        let d = decide_label(&id("anna"), &id("bob"), &"birthplace".into(), &kb, None);
        assert_eq!(d.verdict, Verdict::ConstraintRejected);
    }

    #[test]
    fn absent_fact_is_negative_candidate() {
        let kb = kb();
        let d = decide_label(&id("lyon"), &id("anna"), &"birthplace".into(), &kb, None);
        assert_eq!(d.verdict, Verdict::NegativeCandidate);
    }

    #[test]
    fn rejection_ignores_the_fact_set() {
        // a bloom filter that answers yes to everything still cannot rescue a rejected pair
        let mut bloom = BloomFilter::with_capacity(1, 0.5, 0).unwrap();
        bloom.insert(b"x");
        let saturated = {
            let mut b = bloom.clone();
            for i in 0..64 {
                b.insert(format!("{i}").as_bytes());
            }
            b
        };
        let kb = kb();
        let d = decide_label(&id("anna"), &id("bob"), &"birthplace".into(), &kb, Some(&saturated));
        assert_eq!(d.verdict, Verdict::ConstraintRejected);
        assert_eq!(d.via, Via::BloomLookup);
    }

    #[test]
    fn missing_signature_is_unconstrained() {
        let kb = kb();
        let d = decide_label(&id("anna"), &id("bob"), &"knows".into(), &kb, None);
        assert_eq!(d.verdict, Verdict::NegativeCandidate);
    }

    #[test]
    fn bloom_path_matches_exact_on_positives() {
        let kb = kb();
        let bloom = build_bloom(kb.facts(), 0.001, 3).unwrap();
        let d = decide_label(&id("paris"), &id("anna"), &"birthplace".into(), &kb, Some(&bloom));
        assert_eq!(d.verdict, Verdict::Positive);
    }
}
