//! Page-specific gazetteers: the denotations of a page's main entity and its
//! KB neighborhood, keyed by normalized surface string.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;

use serde::Serialize;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::kb::{EntityId, KnowledgeBase};

/// NFC, lowercase, single spaces between whitespace-separated words.
pub fn normalize(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    nfc.to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub candidates: usize,
    pub denotations: usize,
    /// Surface strings claimed by more than one candidate entity.
    pub collisions: usize,
}

#[derive(Clone, Debug)]
pub struct Gazetteer {
    main: Option<EntityId>,
    entries: HashMap<String, EntityId>,
    max_entry_tokens: usize,
}

impl Gazetteer {
    /// Gazetteer for the page at `page_url`, restricted to entities within
    /// `hops` non-literal edges of the page's main entity (`hops = 1` is the
    /// standard setting).
    pub fn for_page(kb: &KnowledgeBase, page_url: &str, hops: usize) -> Result<(Self, BuildReport)> {
        let main = kb
            .main_entity(page_url)
            .ok_or_else(|| Error::NoMainEntity(page_url.to_owned()))?
            .clone();
        let mut candidates = kb.neighbors_within(&main, hops);
        candidates.insert(main.clone());
        let (entries, report) = collect(kb, &candidates);
        let max_entry_tokens = max_tokens(&entries);
        Ok((
            Gazetteer {
                main: Some(main),
                entries,
                max_entry_tokens,
            },
            report,
        ))
    }

    /// Every denotation in the KB. This is the noisy cross-page baseline the
    /// page-specific gazetteer replaces; it exists for comparison runs only.
    pub fn global_baseline(kb: &KnowledgeBase) -> (Self, BuildReport) {
        let (entries, report) = collect(kb, &kb.entities());
        let max_entry_tokens = max_tokens(&entries);
        (
            Gazetteer {
                main: None,
                entries,
                max_entry_tokens,
            },
            report,
        )
    }

    /// Build directly from `(surface, entity)` pairs; later duplicates lose.
    pub fn from_entries<I, S>(main: Option<EntityId>, entries: I) -> Self
    where
        I: IntoIterator<Item = (S, EntityId)>,
        S: AsRef<str>,
    {
        let mut map = HashMap::new();
        for (surface, entity) in entries {
            let key = normalize(surface.as_ref());
            if !key.is_empty() {
                map.entry(key).or_insert(entity);
            }
        }
        let max_entry_tokens = max_tokens(&map);
        Gazetteer {
            main,
            entries: map,
            max_entry_tokens,
        }
    }

    pub fn main(&self) -> Option<&EntityId> {
        self.main.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_entry_tokens(&self) -> usize {
        self.max_entry_tokens
    }

    /// Lookup by an already-normalized key.
    pub fn get(&self, normalized: &str) -> Option<&EntityId> {
        self.entries.get(normalized)
    }

    /// Entries sorted by surface string.
    pub fn sorted_entries(&self) -> Vec<(&str, &EntityId)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, e)| (k.as_str(), e)).collect();
        v.sort();
        v
    }

    /// JSON Lines dump, one `{"surface", "entity"}` object per entry, sorted.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        #[derive(Serialize)]
        struct Row<'a> {
            surface: &'a str,
            entity: &'a EntityId,
        }
        for (surface, entity) in self.sorted_entries() {
            serde_json::to_writer(&mut w, &Row { surface, entity })?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn max_tokens(entries: &HashMap<String, EntityId>) -> usize {
    entries
        .keys()
        .map(|k| k.split(' ').count())
        .max()
        .unwrap_or(0)
}

/// Collision rule: the entity with more KB facts wins, then the smaller id.
fn collect(
    kb: &KnowledgeBase,
    candidates: &BTreeSet<EntityId>,
) -> (HashMap<String, EntityId>, BuildReport) {
    let mut report = BuildReport {
        candidates: candidates.len(),
        ..BuildReport::default()
    };
    let mut claims: HashMap<String, BTreeSet<&EntityId>> = HashMap::new();
    for e in candidates {
        for surface in kb.denotations(e) {
            let key = normalize(surface);
            if key.is_empty() {
                continue;
            }
            report.denotations += 1;
            claims.entry(key).or_default().insert(e);
        }
    }
    let entries = claims
        .into_iter()
        .map(|(key, ents)| {
            if ents.len() > 1 {
                report.collisions += 1;
            }
            let winner = ents
                .into_iter()
                .min_by(|a, b| kb.fact_count(b).cmp(&kb.fact_count(a)).then(a.cmp(b)))
                .expect("claims are never empty");
            (key, winner.clone())
        })
        .collect();
    (entries, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{KbBuilder, KbConfig};

    fn kb(triples: &str, denotations: &str, urls: &str) -> KnowledgeBase {
        let mut b = KbBuilder::new(KbConfig::default());
        b.read_triples("t", triples.as_bytes()).unwrap();
        b.read_denotations("d", denotations.as_bytes()).unwrap();
        b.read_url_map("u", urls.as_bytes()).unwrap();
        b.finish().0
    }

    #[test]
    fn normalizes_case_and_whitespace() {
        assert_eq!(normalize("  McGill   University "), "mcgill university");
        // decomposed e + combining acute composes under NFC
        assert_eq!(normalize("Cafe\u{301}"), "caf\u{e9}");
    }

    #[test]
    fn unknown_url_is_distinct_error() {
        let kb = kb("a\tr\tb\n", "", "");
        let err = Gazetteer::for_page(&kb, "http://nope", 1).unwrap_err();
        assert!(matches!(err, Error::NoMainEntity(_)));
    }

    #[test]
    fn isolated_main_has_only_its_denotations() {
        let kb = kb("", "m\tMain Thing\nm\tThing\nz\tOther\n", "p\tm\n");
        let (g, _) = Gazetteer::for_page(&kb, "p", 1).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g.get("main thing"), Some(&EntityId::from("m")));
        assert_eq!(g.max_entry_tokens(), 2);
        assert!(g.get("other").is_none());
    }

    #[test]
    fn collision_prefers_entity_with_more_facts() {
        // both b1 and b2 are neighbors of m and denote "Chicago"; b2 has two facts
        let kb = kb(
            "m\tr\tb1\nm\tr\tb2\nb2\tq\tx\n",
            "m\tMain\nb1\tChicago\nb2\tChicago\n",
            "p\tm\n",
        );
        let (g, report) = Gazetteer::for_page(&kb, "p", 1).unwrap();
        assert_eq!(g.get("chicago"), Some(&EntityId::from("b2")));
        assert_eq!(report.collisions, 1);
        assert_eq!(g.len(), 2);
    }

    #[test]
    fn collision_tie_breaks_on_id() {
        let kb = kb(
            "m\tr\tzeta\nm\tr\talpha\n",
            "zeta\tChicago\nalpha\tChicago\n",
            "p\tm\n",
        );
        let (g, _) = Gazetteer::for_page(&kb, "p", 1).unwrap();
        assert_eq!(g.get("chicago"), Some(&EntityId::from("alpha")));
    }

    #[test]
    fn two_hops_extends_reach() {
        let kb = kb(
            "m\tr\ta\na\tr\tb\n",
            "a\tAlpha\nb\tBeta\n",
            "p\tm\n",
        );
        let (g1, _) = Gazetteer::for_page(&kb, "p", 1).unwrap();
        let (g2, _) = Gazetteer::for_page(&kb, "p", 2).unwrap();
        assert!(g1.get("beta").is_none());
        assert_eq!(g2.get("beta"), Some(&EntityId::from("b")));
    }

    #[test]
    fn dump_is_sorted_jsonl() {
        let kb = kb("m\tr\ta\n", "m\tZed\na\tAlpha\n", "p\tm\n");
        let (g, _) = Gazetteer::for_page(&kb, "p", 1).unwrap();
        let mut out = Vec::new();
        g.write_jsonl(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"surface\":\"alpha\",\"entity\":\"a\"}\n{\"surface\":\"zed\",\"entity\":\"m\"}\n"
        );
    }
}
