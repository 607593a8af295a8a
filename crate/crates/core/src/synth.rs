//! Deterministic synthetic worlds: a KB, a parsed corpus whose sentences
//! come from templates with hand-specified dependency trees, Brown clusters
//! for every word, and the gold entity mentions.
//!
//! `world` is the classification fixture: birthplace (P19), instance-of
//! (P31) and has-part (P527) are each signaled by a fixed path pattern.
//! `noise` is the gazetteer fixture: work pages whose sentences use generic
//! words ("intro", "war", ...) that are also titles of other works in the KB.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::conllu::{write_conllu, Document, ParsedSentence, Span, Token};
use crate::error::Result;
use crate::fsio::atomic_write;
use crate::kb::{EntityId, Fact};

/// A gold entity mention.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GoldMention {
    pub doc_url: String,
    pub sent_id: String,
    pub span: Span,
    pub entity: EntityId,
}

#[derive(Clone, Debug, Default)]
pub struct Fixture {
    pub facts: Vec<Fact>,
    pub denotations: Vec<(EntityId, String)>,
    /// `relation, left, right, literal` rows.
    pub signatures: Vec<[String; 4]>,
    pub urls: Vec<(String, EntityId)>,
    /// Corpus files by name.
    pub corpus: BTreeMap<String, Vec<Document>>,
    pub brown: BTreeMap<String, String>,
    pub gold: Vec<GoldMention>,
}

impl Fixture {
    pub fn num_sentences(&self) -> usize {
        self.corpus
            .values()
            .flatten()
            .map(|d| d.sentences.len())
            .sum()
    }

    pub fn documents(&self) -> Vec<Document> {
        self.corpus.values().flatten().cloned().collect()
    }

    /// Layout: `kb/{triples,denotations,signatures,urls}.tsv`,
    /// `corpus/*.conllu`, `brown.txt`, `gold_mentions.tsv`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        let kb = dir.join("kb");
        atomic_write(&kb.join("triples.tsv"), |w| {
            for f in &self.facts {
                writeln!(w, "{}\t{}\t{}", f.subject, f.relation, f.object)?;
            }
            Ok(())
        })?;
        atomic_write(&kb.join("denotations.tsv"), |w| {
            for (e, s) in &self.denotations {
                writeln!(w, "{e}\t{s}")?;
            }
            Ok(())
        })?;
        atomic_write(&kb.join("signatures.tsv"), |w| {
            for row in &self.signatures {
                writeln!(w, "{}", row.join("\t"))?;
            }
            Ok(())
        })?;
        atomic_write(&kb.join("urls.tsv"), |w| {
            for (u, e) in &self.urls {
                writeln!(w, "{u}\t{e}")?;
            }
            Ok(())
        })?;
        for (name, docs) in &self.corpus {
            atomic_write(&dir.join("corpus").join(name), |w| write_conllu(w, docs))?;
        }
        atomic_write(&dir.join("brown.txt"), |w| {
            for (word, bits) in &self.brown {
                writeln!(w, "{bits}\t{word}\t1")?;
            }
            Ok(())
        })?;
        atomic_write(&dir.join("gold_mentions.tsv"), |w| {
            writeln!(w, "doc_url\tsent_id\tstart\tend\tentity")?;
            for g in &self.gold {
                writeln!(w, "{}\t{}\t{}\t{}\t{}", g.doc_url, g.sent_id, g.span.start, g.span.end, g.entity)?;
            }
            Ok(())
        })
    }
}

/// Parse a `gold_mentions.tsv` file.
pub fn read_gold(path: &Path) -> Result<Vec<GoldMention>> {
    let text = std::fs::read_to_string(path).map_err(|e| crate::error::Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || crate::error::Error::parse(path, i + 1, "expected doc_url, sent_id, start, end, entity");
        if f.len() != 5 {
            return Err(bad());
        }
        out.push(GoldMention {
            doc_url: f[0].to_owned(),
            sent_id: f[1].to_owned(),
            span: Span::new(f[2].parse().map_err(|_| bad())?, f[3].parse().map_err(|_| bad())?),
            entity: EntityId::from(f[4]),
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sentence templates

/// One template element. Heads are 1-based template positions, 0 = root.
#[derive(Clone, Copy)]
enum P {
    /// form, lemma, upos, head, deprel
    W(&'static str, &'static str, &'static str, usize, &'static str),
    /// slot index, upos, head, deprel
    S(usize, &'static str, usize, &'static str),
}

struct Slot<'a> {
    entity: Option<&'a EntityId>,
    surface: &'a str,
}

fn ent<'a>(e: &'a Entity) -> Slot<'a> {
    Slot {
        entity: Some(&e.id),
        surface: &e.name,
    }
}

fn word(s: &str) -> Slot<'_> {
    Slot {
        entity: None,
        surface: s,
    }
}

/// Expand a template. Multiword slots become a chain of `compound`
/// dependents of their last token.
fn build(doc_url: &str, sent_id: &str, template: &[P], slots: &[Slot<'_>]) -> (ParsedSentence, Vec<GoldMention>) {
    let widths: Vec<usize> = template
        .iter()
        .map(|p| match p {
            P::W(..) => 1,
            P::S(i, ..) => slots[*i].surface.split(' ').count(),
        })
        .collect();
    // position of each piece's head token (its last token)
    let mut head_pos = Vec::with_capacity(template.len());
    let mut next = 1;
    for w in &widths {
        head_pos.push(next + w - 1);
        next += w;
    }
    let resolve = |h: usize| if h == 0 { 0 } else { head_pos[h - 1] };

    let mut tokens = Vec::new();
    let mut gold = Vec::new();
    for p in template {
        match *p {
            P::W(form, lemma, upos, head, deprel) => {
                tokens.push(Token::new(tokens.len() + 1, form, lemma, upos, resolve(head), deprel));
            }
            P::S(i, upos, head, deprel) => {
                let slot = &slots[i];
                let parts: Vec<&str> = slot.surface.split(' ').collect();
                let start = tokens.len() + 1;
                let last = start + parts.len() - 1;
                for (k, part) in parts.iter().enumerate() {
                    let idx = start + k;
                    let lemma = if upos == "PROPN" { part.to_string() } else { part.to_lowercase() };
                    if idx == last {
                        tokens.push(Token::new(idx, part, &lemma, upos, resolve(head), deprel));
                    } else {
                        tokens.push(Token::new(idx, part, &lemma, upos, last, "compound"));
                    }
                }
                if let Some(e) = slot.entity {
                    gold.push(GoldMention {
                        doc_url: doc_url.to_owned(),
                        sent_id: sent_id.to_owned(),
                        span: Span::new(start, last),
                        entity: e.clone(),
                    });
                }
            }
        }
    }
    let s = ParsedSentence {
        doc_url: doc_url.to_owned(),
        sent_id: sent_id.to_owned(),
        tokens,
    };
    debug_assert!(s.validate().is_ok(), "template produced a malformed tree");
    (s, gold)
}

use P::{S, W};

// person pages
const BORN_IN: &[P] = &[
    S(0, "PROPN", 3, "nsubjpass"),
    W("was", "be", "AUX", 3, "auxpass"),
    W("born", "bear", "VERB", 0, "ROOT"),
    W("in", "in", "ADP", 3, "prep"),
    S(1, "PROPN", 4, "pobj"),
    W(".", ".", "PUNCT", 3, "punct"),
];
const BORN_IN_APPOSITIVE: &[P] = &[
    S(0, "PROPN", 7, "nsubj"),
    W(",", ",", "PUNCT", 1, "punct"),
    W("born", "bear", "VERB", 1, "acl"),
    W("in", "in", "ADP", 3, "prep"),
    S(1, "PROPN", 4, "pobj"),
    W(",", ",", "PUNCT", 1, "punct"),
    W("was", "be", "AUX", 0, "ROOT"),
    W("a", "a", "DET", 9, "det"),
    S(2, "NOUN", 7, "attr"),
    W(".", ".", "PUNCT", 7, "punct"),
];
const NATIVE_OF: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("is", "be", "AUX", 0, "ROOT"),
    W("a", "a", "DET", 4, "det"),
    W("native", "native", "NOUN", 2, "attr"),
    W("of", "of", "ADP", 4, "prep"),
    S(1, "PROPN", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const MOVED_TO: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("moved", "move", "VERB", 0, "ROOT"),
    W("to", "to", "ADP", 2, "prep"),
    S(1, "PROPN", 3, "pobj"),
    W("in", "in", "ADP", 2, "prep"),
    S(2, "NUM", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const PERFORMED_IN: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("performed", "perform", "VERB", 0, "ROOT"),
    W("in", "in", "ADP", 2, "prep"),
    S(1, "PROPN", 3, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const LIVED_IN: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("lived", "live", "VERB", 0, "ROOT"),
    W("in", "in", "ADP", 2, "prep"),
    S(1, "PROPN", 3, "pobj"),
    W("for", "for", "ADP", 2, "prep"),
    W("years", "year", "NOUN", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const TOURED: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("toured", "tour", "VERB", 0, "ROOT"),
    S(1, "PROPN", 2, "dobj"),
    W("in", "in", "ADP", 2, "prep"),
    S(2, "NUM", 4, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const VISITED: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("visited", "visit", "VERB", 0, "ROOT"),
    S(1, "PROPN", 2, "dobj"),
    W("twice", "twice", "ADV", 2, "advmod"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const WAS_A: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("was", "be", "AUX", 0, "ROOT"),
    W("a", "a", "DET", 5, "det"),
    S(1, "ADJ", 5, "amod"),
    S(2, "NOUN", 2, "attr"),
    W(".", ".", "PUNCT", 2, "punct"),
];

// album and song pages
const IS_AN_ALBUM_BY: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("is", "be", "AUX", 0, "ROOT"),
    W("an", "an", "DET", 4, "det"),
    S(1, "NOUN", 2, "attr"),
    W("by", "by", "ADP", 4, "prep"),
    S(2, "PROPN", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const IS_A_SONG_BY: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("is", "be", "AUX", 0, "ROOT"),
    W("a", "a", "DET", 4, "det"),
    S(1, "NOUN", 2, "attr"),
    W("by", "by", "ADP", 4, "prep"),
    S(2, "PROPN", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const INCLUDES: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("includes", "include", "VERB", 0, "ROOT"),
    S(1, "PROPN", 2, "dobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const APPEARS_ON: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("appears", "appear", "VERB", 0, "ROOT"),
    W("on", "on", "ADP", 2, "prep"),
    S(1, "PROPN", 3, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const RELEASED_AFTER: &[P] = &[
    S(0, "PROPN", 3, "nsubjpass"),
    W("was", "be", "AUX", 3, "auxpass"),
    W("released", "release", "VERB", 0, "ROOT"),
    W("after", "after", "ADP", 3, "prep"),
    S(1, "PROPN", 4, "pobj"),
    W(".", ".", "PUNCT", 3, "punct"),
];
const LEFT_OFF: &[P] = &[
    S(0, "PROPN", 3, "nsubjpass"),
    W("was", "be", "AUX", 3, "auxpass"),
    W("left", "leave", "VERB", 0, "ROOT"),
    W("off", "off", "ADP", 3, "prep"),
    S(1, "PROPN", 4, "pobj"),
    W(".", ".", "PUNCT", 3, "punct"),
];
const RECORDED: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("recorded", "record", "VERB", 0, "ROOT"),
    S(1, "PROPN", 2, "dobj"),
    W("in", "in", "ADP", 2, "prep"),
    S(2, "NUM", 4, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const WROTE: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("wrote", "write", "VERB", 0, "ROOT"),
    S(1, "PROPN", 2, "dobj"),
    W("in", "in", "ADP", 2, "prep"),
    S(2, "NUM", 4, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];

// noise pages
const IS_A_CLASS_BY: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("is", "be", "AUX", 0, "ROOT"),
    W("a", "a", "DET", 4, "det"),
    S(1, "NOUN", 2, "attr"),
    W("by", "by", "ADP", 4, "prep"),
    S(2, "PROPN", 5, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const OPENS_WITH: &[P] = &[
    S(0, "PROPN", 2, "nsubj"),
    W("opens", "open", "VERB", 0, "ROOT"),
    W("with", "with", "ADP", 2, "prep"),
    W("a", "a", "DET", 6, "det"),
    W("long", "long", "ADJ", 6, "amod"),
    S(1, "NOUN", 3, "pobj"),
    W(",", ",", "PUNCT", 2, "punct"),
    W("unusual", "unusual", "ADJ", 2, "advcl"),
    W("for", "for", "ADP", 8, "prep"),
    W("a", "a", "DET", 11, "det"),
    S(2, "NOUN", 9, "pobj"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const CRITICS_CALLED: &[P] = &[
    W("Critics", "critic", "NOUN", 2, "nsubj"),
    W("called", "call", "VERB", 0, "ROOT"),
    W("the", "the", "DET", 4, "det"),
    S(0, "NOUN", 8, "nsubj"),
    W("of", "of", "ADP", 4, "prep"),
    S(1, "PROPN", 5, "pobj"),
    W("a", "a", "DET", 8, "det"),
    S(2, "NOUN", 2, "oprd"),
    W(".", ".", "PUNCT", 2, "punct"),
];
const RELEASED_IN: &[P] = &[
    S(0, "PROPN", 3, "nsubjpass"),
    W("was", "be", "AUX", 3, "auxpass"),
    W("released", "release", "VERB", 0, "ROOT"),
    W("in", "in", "ADP", 3, "prep"),
    S(1, "NUM", 4, "pobj"),
    W(".", ".", "PUNCT", 3, "punct"),
];

// ---------------------------------------------------------------------------
// Vocabulary

const FIRST_NAMES: &[&str] = &[
    "Ada", "Bruno", "Clara", "Dmitri", "Elena", "Farid", "Greta", "Hugo", "Ines", "Jonas", "Kira", "Luca", "Mira",
    "Nils", "Olga", "Pavel", "Quinn", "Rosa", "Sven", "Tara", "Umar", "Vera", "Wim", "Xenia", "Yusuf", "Zora",
    "Anton", "Beatriz", "Cyril", "Dalia", "Emil", "Flora", "Goran", "Hana", "Ivo", "Jana", "Kaspar", "Lena",
    "Marek", "Nadia",
];
const LAST_NAMES: &[&str] = &[
    "Abbot", "Brandt", "Castell", "Dorsey", "Ellwood", "Fischer", "Grummond", "Halloran", "Ibsen", "Jovanic",
    "Kessler", "Lindqvist", "Moreau", "Nakamura", "Okafor", "Petrov", "Quarry", "Rinaldi", "Sorensen", "Tamura",
    "Ulrich", "Varga", "Whitlock", "Xavier", "Yilmaz", "Zeller", "Arden", "Bishop", "Corwin", "Delacroix",
    "Eastman", "Fontaine", "Garrick", "Hollis", "Irving", "Jarrett", "Kowal", "Lacroix", "Marlow", "Novak",
    "Oakley", "Prescott", "Rourke", "Sterling", "Thorne", "Vance", "Winslow", "Yardley", "Zamora", "Ashby",
];
const CITY_HEADS: &[&str] = &[
    "Bel", "Cor", "Dun", "Esh", "Fal", "Gal", "Har", "Kel", "Lor", "Mar", "Nor", "Ost", "Pel", "Quin", "Ros", "Sel",
    "Tor", "Val", "Wyn", "Zan",
];
const CITY_TAILS: &[&str] = &["mora", "haven", "ford", "stead", "bury", "wick", "ton", "field", "port", "dale"];
const TITLE_ADJ: &[&str] = &[
    "Silver", "Broken", "Golden", "Quiet", "Hollow", "Crimson", "Distant", "Electric", "Frozen", "Gentle",
    "Midnight", "Restless", "Wild", "Paper", "Velvet", "Burning", "Lonely", "Secret", "Endless", "Fading",
    "Neon", "Amber", "Scarlet", "Northern", "Stolen", "Sleeping", "Bitter", "Shallow", "Hidden", "Faded",
];
const TITLE_NOUN: &[&str] = &[
    "Morning", "River", "Lanterns", "Echoes", "Highway", "Garden", "Mirror", "Harbor", "Letters", "Horizon",
    "Shadows", "Voices", "Window", "Thunder", "Machine", "Ocean", "Summer", "Winter", "Streets", "Candles",
    "Wires", "Feathers", "Bridges", "Satellites", "Roses", "Tides", "Fires", "Ghosts", "Stars", "Rain",
];
const ALBUM_NOUNS: &[&str] = &[
    "Atlas", "Chronicle", "Almanac", "Archive", "Ledger", "Compass", "Pilgrim", "Harvest", "Monument", "Carnival",
    "Lighthouse", "Mosaic", "Orchard", "Parade", "Quiver", "Reverie", "Sanctuary", "Tapestry", "Vessel", "Zenith",
];
const ALBUM_OF: &[&str] = &[
    "Dust", "Glass", "Salt", "Iron", "Smoke", "Stone", "Silk", "Ash", "Light", "Snow",
];
const OCCUPATIONS: &[&str] = &["singer", "painter", "novelist", "drummer", "poet", "composer", "sculptor", "guitarist"];
const ADJECTIVES: &[&str] = &["famous", "prolific", "celebrated", "reclusive", "gifted", "popular"];
const GENERIC_WORKS: &[&str] = &[
    "intro", "home", "war", "hello", "cover", "end", "outro", "interlude", "remix", "demo", "overture",
    "epilogue", "prelude", "finale", "chorus", "sequel", "prologue", "encore", "medley", "ballad",
];

#[derive(Clone, Debug)]
struct Entity {
    id: EntityId,
    name: String,
}

impl Entity {
    fn new(id: String, name: impl Into<String>) -> Self {
        Entity {
            id: EntityId::new(id),
            name: name.into(),
        }
    }

    fn url(&self) -> String {
        format!("https://wiki.example/{}", self.name.replace(' ', "_"))
    }
}

struct Builder {
    fx: Fixture,
    seen_facts: BTreeSet<Fact>,
}

impl Builder {
    fn new() -> Self {
        Builder {
            fx: Fixture::default(),
            seen_facts: BTreeSet::new(),
        }
    }

    fn fact(&mut self, s: &EntityId, r: &str, o: &str) {
        let f = Fact::new(s.as_str(), r, o);
        if self.seen_facts.insert(f.clone()) {
            self.fx.facts.push(f);
        }
    }

    fn denote(&mut self, e: &Entity) {
        self.fx.denotations.push((e.id.clone(), e.name.clone()));
    }

    fn signature(&mut self, r: &str, left: &str, right: &str, literal: bool) {
        self.fx
            .signatures
            .push([r.into(), left.into(), right.into(), if literal { "1" } else { "0" }.into()]);
    }

    fn page(&mut self, file: &str, url: String, main: &EntityId, sentences: Vec<(ParsedSentence, Vec<GoldMention>)>) {
        self.fx.urls.push((url.clone(), main.clone()));
        let mut doc = Document {
            url,
            sentences: Vec::with_capacity(sentences.len()),
        };
        for (s, g) in sentences {
            self.fx.gold.extend(g);
            doc.sentences.push(s);
        }
        self.fx.corpus.entry(file.to_owned()).or_default().push(doc);
    }

    /// Deterministic clusters: a semantic 4-bit prefix per word group plus
    /// a per-word suffix.
    fn clusters(&mut self, rng: &mut ChaCha8Rng) {
        let groups: &[(&str, &[&str])] = &[
            ("1110", &["bear", "born", "native"]),
            ("1111", &["move", "moved", "perform", "performed", "live", "lived", "tour", "toured", "visit", "visited"]),
            ("1011", &["include", "includes", "appear", "appears", "release", "released", "leave", "left", "record", "recorded", "write", "wrote", "open", "opens", "call", "called"]),
            ("1101", &["in", "to", "on", "after", "off", "by", "of", "for", "with"]),
            ("1100", &["a", "an", "the", "be", "is", "was"]),
            ("1001", &[".", ","]),
            ("0001", &["city", "song", "album", "film", "novel", "poem", "human", "settlement"]),
            ("0101", OCCUPATIONS),
            ("0100", ADJECTIVES),
            ("1000", &["year", "years", "twice", "long", "unusual", "critic", "critics"]),
            ("0110", GENERIC_WORKS),
        ];
        let mut put = |w: &str, prefix: &str, rng: &mut ChaCha8Rng| {
            let suffix: String = (0..rng.gen_range(2..6)).map(|_| if rng.gen() { '1' } else { '0' }).collect();
            self.fx.brown.entry(w.to_lowercase()).or_insert_with(|| format!("{prefix}{suffix}"));
        };
        for (prefix, words) in groups {
            for w in *words {
                put(w, prefix, rng);
            }
        }
        for w in FIRST_NAMES.iter().chain(LAST_NAMES) {
            put(w, "0111", rng);
        }
        for h in CITY_HEADS {
            for t in CITY_TAILS {
                put(&format!("{h}{t}"), "0011", rng);
            }
        }
        for w in TITLE_ADJ.iter().chain(TITLE_NOUN).chain(ALBUM_NOUNS).chain(ALBUM_OF) {
            put(w, "0010", rng);
        }
        for y in 1950..2021 {
            put(&y.to_string(), "1000", rng);
        }
    }
}

fn people(n: usize, base_id: usize, rng: &mut ChaCha8Rng) -> Vec<Entity> {
    let mut names: Vec<(usize, usize)> = (0..FIRST_NAMES.len())
        .flat_map(|f| (0..LAST_NAMES.len()).map(move |l| (f, l)))
        .collect();
    names.shuffle(rng);
    assert!(n <= names.len(), "not enough distinct person names");
    names[..n]
        .iter()
        .enumerate()
        .map(|(i, &(f, l))| Entity::new(format!("Q{}", base_id + i), format!("{} {}", FIRST_NAMES[f], LAST_NAMES[l])))
        .collect()
}

fn cities(base_id: usize) -> Vec<Entity> {
    CITY_HEADS
        .iter()
        .flat_map(|h| CITY_TAILS.iter().map(move |t| format!("{h}{t}")))
        .enumerate()
        .map(|(i, name)| Entity::new(format!("Q{}", base_id + i), name))
        .collect()
}

fn song_titles(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut t: Vec<String> = TITLE_ADJ
        .iter()
        .flat_map(|a| TITLE_NOUN.iter().map(move |n| format!("{a} {n}")))
        .collect();
    t.shuffle(rng);
    t
}

fn album_titles(rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut t: Vec<String> = ALBUM_NOUNS
        .iter()
        .flat_map(|a| ALBUM_OF.iter().map(move |n| format!("{a} of {n}")))
        .collect();
    t.shuffle(rng);
    t
}

fn year(rng: &mut ChaCha8Rng) -> String {
    rng.gen_range(1950..2021).to_string()
}

fn surname(p: &Entity) -> &str {
    p.name.rsplit(' ').next().unwrap_or(&p.name)
}

#[derive(Clone, Debug)]
pub struct WorldConfig {
    pub seed: u64,
    pub persons: usize,
    pub albums: usize,
    /// Fraction of persons whose birth city also appears in a
    /// "performed in" sentence, a positive support with a negative pattern.
    pub mixed_support_rate: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            seed: 20,
            persons: 1000,
            albums: 150,
            mixed_support_rate: 0.15,
        }
    }
}

const HUMAN: &str = "Q5";
const CITY: &str = "Q515";
const SETTLEMENT: &str = "Q486972";
const ALBUM: &str = "Q482994";
const SONG: &str = "Q7366";
const MUSICAL_WORK: &str = "Q2188189";

/// The classification fixture. Every person page has 1-3 birthplace
/// sentences and five sentences pairing the person with other cities;
/// album and song pages carry instance-of and has-part sentences.
pub fn world(cfg: &WorldConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = Builder::new();
    let persons = people(cfg.persons, 100_000, &mut rng);
    let cities = cities(200_000);
    let city_class = Entity::new(CITY.into(), "city");
    let album_class = Entity::new(ALBUM.into(), "album");
    let song_class = Entity::new(SONG.into(), "song");

    b.signature("P19", HUMAN, SETTLEMENT, false);
    b.signature("P551", HUMAN, SETTLEMENT, false);
    b.signature("P31", "*", "*", false);
    b.signature("P527", ALBUM, MUSICAL_WORK, false);
    b.signature("P175", "*", HUMAN, false);
    b.signature("P155", "*", "*", false);
    b.signature("P569", HUMAN, "*", true);
    b.fact(&EntityId::from(CITY), "P279", SETTLEMENT);
    b.fact(&EntityId::from(SONG), "P279", MUSICAL_WORK);
    b.fact(&EntityId::from(ALBUM), "P279", MUSICAL_WORK);
    for c in [&city_class, &album_class, &song_class] {
        b.denote(c);
    }
    for c in &cities {
        b.fact(&c.id, "P31", CITY);
        b.denote(c);
    }

    for (pi, p) in persons.iter().enumerate() {
        b.fact(&p.id, "P31", HUMAN);
        b.fact(&p.id, "P569", &year(&mut rng));
        b.denote(p);
        b.fx.denotations.push((p.id.clone(), surname(p).to_owned()));

        let mut picks: Vec<&Entity> = cities.choose_multiple(&mut rng, 6).collect();
        picks.shuffle(&mut rng);
        let birth = picks[0];
        b.fact(&p.id, "P19", birth.id.as_str());
        for c in &picks[1..] {
            b.fact(&p.id, "P551", c.id.as_str());
        }

        let url = p.url();
        let sid = |n: usize| format!("w{pi}-{n}");
        let mut sents = Vec::new();
        let name = |rng: &mut ChaCha8Rng| -> Slot<'_> {
            if rng.gen_bool(0.3) {
                Slot {
                    entity: Some(&p.id),
                    surface: surname(p),
                }
            } else {
                ent(p)
            }
        };
        let occ = OCCUPATIONS.choose(&mut rng).unwrap();
        let adj = ADJECTIVES.choose(&mut rng).unwrap();
        sents.push(build(&url, &sid(sents.len()), WAS_A, &[ent(p), word(adj), word(occ)]));

        let n_pos = rng.gen_range(1..=3);
        // (template, takes an occupation slot)
        let mut positive = [(BORN_IN, false), (BORN_IN_APPOSITIVE, true), (NATIVE_OF, false)];
        positive.shuffle(&mut rng);
        for (t, occupation) in &positive[..n_pos] {
            let mut slots = vec![name(&mut rng), ent(birth)];
            if *occupation {
                slots.push(word(OCCUPATIONS.choose(&mut rng).unwrap()));
            }
            sents.push(build(&url, &sid(sents.len()), t, &slots));
        }
        if rng.gen_bool(cfg.mixed_support_rate) {
            sents.push(build(&url, &sid(sents.len()), PERFORMED_IN, &[name(&mut rng), ent(birth)]));
        }
        let negative = [MOVED_TO, PERFORMED_IN, LIVED_IN, TOURED, VISITED];
        for (t, c) in negative.iter().zip(&picks[1..]) {
            let y = year(&mut rng);
            let slots = vec![name(&mut rng), ent(c), word(&y)];
            sents.push(build(&url, &sid(sents.len()), t, &slots));
        }
        let first = sents.remove(0);
        sents[..].shuffle(&mut rng);
        sents.insert(0, first);
        let sents = renumber(sents, &sid);
        b.page("people.conllu", url, &p.id, sents);
    }

    let musicians = &persons[..cfg.persons.min(100)];
    let songs = song_titles(&mut rng);
    let albums = album_titles(&mut rng);
    let mut song_iter = songs.into_iter().enumerate();
    let mut next_song = |b: &mut Builder, artist: &Entity| {
        let (i, title) = song_iter.next().expect("song titles exhausted");
        let s = Entity::new(format!("Q{}", 300_000 + i), title);
        b.fact(&s.id, "P31", SONG);
        b.fact(&s.id, "P175", artist.id.as_str());
        b.denote(&s);
        s
    };
    for (ai, title) in albums.iter().take(cfg.albums).enumerate() {
        let artist = musicians.choose(&mut rng).unwrap();
        let al = Entity::new(format!("Q{}", 400_000 + ai), title.clone());
        b.fact(&al.id, "P31", ALBUM);
        b.fact(&al.id, "P175", artist.id.as_str());
        b.denote(&al);
        let tracks: Vec<Entity> = (0..3).map(|_| next_song(&mut b, artist)).collect();
        for t in &tracks {
            b.fact(&al.id, "P527", t.id.as_str());
        }
        let previous = next_song(&mut b, artist);
        b.fact(&al.id, "P155", previous.id.as_str());
        let outtake = next_song(&mut b, artist);
        b.fact(&outtake.id, "P155", al.id.as_str());

        let url = al.url();
        let sid = |n: usize| format!("a{ai}-{n}");
        let mut sents = vec![build(&url, &sid(0), IS_AN_ALBUM_BY, &[ent(&al), ent(&album_class), ent(artist)])];
        for t in &tracks {
            let s = if rng.gen_bool(0.5) {
                build(&url, &sid(sents.len()), INCLUDES, &[ent(&al), ent(t)])
            } else {
                build(&url, &sid(sents.len()), APPEARS_ON, &[ent(t), ent(&al)])
            };
            sents.push(s);
        }
        sents.push(build(&url, &sid(sents.len()), RELEASED_AFTER, &[ent(&al), ent(&previous)]));
        sents.push(build(&url, &sid(sents.len()), LEFT_OFF, &[ent(&outtake), ent(&al)]));
        let y = year(&mut rng);
        sents.push(build(&url, &sid(sents.len()), RECORDED, &[ent(artist), ent(&al), word(&y)]));
        b.page("music.conllu", url, &al.id, sents);

        // the first two tracks get pages of their own
        for (ti, t) in tracks.iter().take(2).enumerate() {
            let url = t.url();
            let sid = |n: usize| format!("s{ai}-{ti}-{n}");
            let y = year(&mut rng);
            let sents = vec![
                build(&url, &sid(0), IS_A_SONG_BY, &[ent(t), ent(&song_class), ent(artist)]),
                build(&url, &sid(1), APPEARS_ON, &[ent(t), ent(&al)]),
                build(&url, &sid(2), WROTE, &[ent(artist), ent(t), word(&y)]),
            ];
            b.page("music.conllu", url, &t.id, sents);
        }
    }

    b.clusters(&mut rng);
    b.fx
}

/// Give shuffled sentences sequential ids again.
fn renumber(
    sents: Vec<(ParsedSentence, Vec<GoldMention>)>,
    sid: &dyn Fn(usize) -> String,
) -> Vec<(ParsedSentence, Vec<GoldMention>)> {
    sents
        .into_iter()
        .enumerate()
        .map(|(i, (mut s, mut g))| {
            s.sent_id = sid(i);
            for m in &mut g {
                m.sent_id = s.sent_id.clone();
            }
            (s, g)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct NoiseConfig {
    pub seed: u64,
    pub pages: usize,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { seed: 61, pages: 200 }
    }
}

const WORK_CLASSES: &[(&str, &str)] = &[
    ("Q7366", "song"),
    ("Q482994", "album"),
    ("Q11424", "film"),
    ("Q8261", "novel"),
    ("Q5185279", "poem"),
];

/// The gazetteer-noise fixture: five sentences per work page, two of which
/// use generic words that are titles of unrelated works of the named class.
pub fn noise(cfg: &NoiseConfig) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut b = Builder::new();
    b.signature("P31", "*", "*", false);
    b.signature("P50", "*", HUMAN, false);
    b.signature("P577", "*", "*", true);

    let classes: Vec<Entity> = WORK_CLASSES.iter().map(|(id, n)| Entity::new((*id).into(), *n)).collect();
    for c in &classes {
        b.denote(c);
    }
    let creators = people(cfg.pages.min(400), 500_000, &mut rng);
    for c in &creators {
        b.fact(&c.id, "P31", HUMAN);
        b.denote(c);
    }

    let generic: Vec<(Entity, &Entity)> = GENERIC_WORKS
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let mut title = w.to_string();
            title[..1].make_ascii_uppercase();
            (Entity::new(format!("Q{}", 600_000 + i), title), classes.choose(&mut rng).unwrap())
        })
        .collect();
    for (g, class) in &generic {
        b.fact(&g.id, "P31", class.id.as_str());
        let author = creators.choose(&mut rng).unwrap();
        b.fact(&g.id, "P50", author.id.as_str());
        b.denote(g);
    }

    let titles = song_titles(&mut rng);
    for (wi, title) in titles.iter().take(cfg.pages).enumerate() {
        let w = Entity::new(format!("Q{}", 700_000 + wi), title.clone());
        let class = classes.choose(&mut rng).unwrap();
        let author = &creators[wi % creators.len()];
        b.fact(&w.id, "P31", class.id.as_str());
        b.fact(&w.id, "P50", author.id.as_str());
        let released = year(&mut rng);
        b.fact(&w.id, "P577", &released);
        b.denote(&w);

        let url = w.url();
        let sid = |n: usize| format!("n{wi}-{n}");
        let picks: Vec<&(Entity, &Entity)> = generic.choose_multiple(&mut rng, 2).collect();
        let (g1, c1) = picks[0];
        let (g2, c2) = picks[1];
        let written = year(&mut rng);
        let sents = vec![
            build(&url, &sid(0), IS_A_CLASS_BY, &[ent(&w), ent(class), ent(author)]),
            build(&url, &sid(1), OPENS_WITH, &[ent(&w), word(&g1.name.to_lowercase()), ent(c1)]),
            build(&url, &sid(2), CRITICS_CALLED, &[word(&g2.name.to_lowercase()), ent(&w), ent(c2)]),
            build(&url, &sid(3), WROTE, &[ent(author), ent(&w), word(&written)]),
            build(&url, &sid(4), RELEASED_IN, &[ent(&w), word(&released)]),
        ];
        b.page("works.conllu", url, &w.id, sents);
    }

    b.clusters(&mut rng);
    b.fx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{annotate_corpus, group_counts, AnnotateOptions};
    use crate::conllu::Corpus;
    use crate::kb::{KbBuilder, KbConfig, KnowledgeBase, RelationId};

    fn small_world() -> Fixture {
        world(&WorldConfig {
            persons: 40,
            albums: 10,
            ..WorldConfig::default()
        })
    }

    fn kb_of(fx: &Fixture) -> KnowledgeBase {
        let mut b = KbBuilder::new(KbConfig::default());
        let triples: String = fx
            .facts
            .iter()
            .map(|f| format!("{}\t{}\t{}\n", f.subject, f.relation, f.object))
            .collect();
        let den: String = fx.denotations.iter().map(|(e, s)| format!("{e}\t{s}\n")).collect();
        let sig: String = fx.signatures.iter().map(|r| r.join("\t") + "\n").collect();
        let urls: String = fx.urls.iter().map(|(u, e)| format!("{u}\t{e}\n")).collect();
        b.read_triples("t", triples.as_bytes()).unwrap();
        b.read_denotations("d", den.as_bytes()).unwrap();
        b.read_signatures("s", sig.as_bytes()).unwrap();
        b.read_url_map("u", urls.as_bytes()).unwrap();
        let (kb, report) = b.finish();
        assert!(report.malformed.is_empty());
        kb
    }

    #[test]
    fn sentences_are_valid_trees() {
        for fx in [small_world(), noise(&NoiseConfig { pages: 20, ..NoiseConfig::default() })] {
            for d in fx.documents() {
                for s in &d.sentences {
                    s.validate().unwrap();
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = small_world();
        let b = small_world();
        assert_eq!(a.facts, b.facts);
        assert_eq!(a.documents(), b.documents());
        assert_eq!(a.brown, b.brown);
    }

    #[test]
    fn gold_spans_match_surfaces() {
        let fx = small_world();
        let corpus = Corpus::new(fx.documents());
        let kb = kb_of(&fx);
        for g in &fx.gold {
            let s = corpus.get(&g.doc_url, &g.sent_id).unwrap();
            let text: Vec<&str> = (g.span.start..=g.span.end).map(|i| s.token(i).form.as_str()).collect();
            assert!(kb.denotations(&g.entity).iter().any(|d| d == &text.join(" ")));
        }
    }

    #[test]
    fn birthplace_pairs_have_expected_shape() {
        let fx = small_world();
        let corpus = Corpus::new(fx.documents());
        let kb = kb_of(&fx);
        let p19 = RelationId::from("P19");
        let (pairs, stats) =
            annotate_corpus(&corpus, &kb, &p19, None, &AnnotateOptions::default()).unwrap();
        assert_eq!(stats.skipped_documents, 0);
        assert_eq!(stats.positive_groups, 40);
        assert_eq!(group_counts(&pairs)[&p19], (40, 160));
        // five other cities per person are available before sampling
        let opts = AnnotateOptions {
            negative_ratio: 100.0,
            ..AnnotateOptions::default()
        };
        let (all, _) = annotate_corpus(&corpus, &kb, &p19, None, &opts).unwrap();
        assert_eq!(group_counts(&all)[&p19], (40, 200));
    }
}
