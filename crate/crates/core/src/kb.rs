//! In-memory knowledge base: typed triples, entity denotations, relation
//! class signatures and the page-URL to main-entity map.
//!
//! All four sources are tab-separated UTF-8 text. Lines starting with `#`
//! and blank lines are skipped; lines with the wrong column count are
//! counted in the [`LoadReport`] rather than silently dropped.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                $name(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

string_id!(
    /// Opaque entity identifier, e.g. a Wikidata Q-id.
    EntityId
);
string_id!(
    /// Opaque relation identifier, e.g. `P31`.
    RelationId
);

/// A directed `relation(subject, object)` triple.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Fact {
    pub subject: EntityId,
    pub relation: RelationId,
    pub object: EntityId,
}

impl Fact {
    pub fn new(
        subject: impl Into<EntityId>,
        relation: impl Into<RelationId>,
        object: impl Into<EntityId>,
    ) -> Self {
        Fact {
            subject: subject.into(),
            relation: relation.into(),
            object: object.into(),
        }
    }

    /// Key used by the Bloom filter. The unit separator keeps
    /// `("a", "b c")` and `("a b", "c")` apart.
    pub fn canonical_key(&self) -> String {
        format!(
            "{}\x1F{}\x1F{}",
            self.subject, self.relation, self.object
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ClassConstraint {
    Any,
    Class(EntityId),
}

impl ClassConstraint {
    fn parse(field: &str) -> Self {
        if field == "*" {
            ClassConstraint::Any
        } else {
            ClassConstraint::Class(EntityId::new(field))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSignature {
    pub relation: RelationId,
    pub left: ClassConstraint,
    pub right: ClassConstraint,
}

#[derive(Clone, Debug)]
pub struct KbConfig {
    pub instance_of: RelationId,
    pub subclass_of: RelationId,
    /// Maximum number of subclass-of edges followed by [`KnowledgeBase::classes_of`].
    pub max_class_depth: usize,
}

impl Default for KbConfig {
    fn default() -> Self {
        KbConfig {
            instance_of: RelationId::new("P31"),
            subclass_of: RelationId::new("P279"),
            max_class_depth: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Malformed {
    pub source: String,
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default)]
pub struct LoadReport {
    pub facts: usize,
    pub denotations: usize,
    pub signatures: usize,
    pub urls: usize,
    pub malformed: Vec<Malformed>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct KnowledgeBase {
    config: KbConfig,
    facts: HashSet<Fact>,
    by_subject: HashMap<EntityId, Vec<(RelationId, EntityId)>>,
    by_object: HashMap<EntityId, Vec<(RelationId, EntityId)>>,
    denotations: HashMap<EntityId, Vec<String>>,
    main_entity_by_url: HashMap<String, EntityId>,
    signatures: HashMap<RelationId, RelationSignature>,
    literal_relations: HashSet<RelationId>,
}

/// File locations for [`load_kb`]. Only the triples file is mandatory.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KbPaths {
    pub triples: PathBuf,
    pub denotations: Option<PathBuf>,
    pub signatures: Option<PathBuf>,
    pub url_map: Option<PathBuf>,
}

pub fn load_kb(paths: &KbPaths, config: KbConfig) -> Result<(KnowledgeBase, LoadReport)> {
    fn open(path: &Path) -> Result<BufReader<File>> {
        File::open(path)
            .map(BufReader::new)
            .map_err(|e| Error::io(path, e))
    }

    let mut builder = KbBuilder::new(config);
    builder.read_triples(&paths.triples.display().to_string(), open(&paths.triples)?)?;
    if let Some(p) = &paths.denotations {
        builder.read_denotations(&p.display().to_string(), open(p)?)?;
    }
    if let Some(p) = &paths.signatures {
        builder.read_signatures(&p.display().to_string(), open(p)?)?;
    }
    if let Some(p) = &paths.url_map {
        builder.read_url_map(&p.display().to_string(), open(p)?)?;
    }
    Ok(builder.finish())
}

/// Incremental loader; each `read_*` call ingests one TSV source.
pub struct KbBuilder {
    kb: KnowledgeBase,
    report: LoadReport,
}

impl KbBuilder {
    pub fn new(config: KbConfig) -> Self {
        KbBuilder {
            kb: KnowledgeBase {
                config,
                ..KnowledgeBase::empty()
            },
            report: LoadReport::default(),
        }
    }

    fn for_each_record<R, F>(&mut self, name: &str, reader: R, columns: usize, mut f: F) -> Result<()>
    where
        R: BufRead,
        F: FnMut(&mut Self, usize, &[&str]) -> Result<()>,
    {
        for (idx, line) in reader.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(name, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != columns || fields.iter().any(|f| f.is_empty()) {
                self.report.malformed.push(Malformed {
                    source: name.to_owned(),
                    line: lineno,
                    reason: format!("expected {} non-empty columns, found {}", columns, fields.len()),
                });
                continue;
            }
            f(self, lineno, &fields)?;
        }
        Ok(())
    }

    pub fn read_triples<R: BufRead>(&mut self, name: &str, reader: R) -> Result<()> {
        self.for_each_record(name, reader, 3, |b, _, fields| {
            b.kb.insert_fact(Fact::new(fields[0], fields[1], fields[2]));
            Ok(())
        })
    }

    pub fn read_denotations<R: BufRead>(&mut self, name: &str, reader: R) -> Result<()> {
        self.for_each_record(name, reader, 2, |b, _, fields| {
            let list = b.kb.denotations.entry(EntityId::new(fields[0])).or_default();
            if !list.iter().any(|s| s == fields[1]) {
                list.push(fields[1].to_owned());
            }
            Ok(())
        })
    }

    pub fn read_signatures<R: BufRead>(&mut self, name: &str, reader: R) -> Result<()> {
        self.for_each_record(name, reader, 4, |b, lineno, fields| {
            let relation = RelationId::new(fields[0]);
            match fields[3] {
                "0" => {}
                "1" => {
                    b.kb.literal_relations.insert(relation.clone());
                }
                other => {
                    b.report.malformed.push(Malformed {
                        source: name.to_owned(),
                        line: lineno,
                        reason: format!("literal flag must be 0 or 1, found {other:?}"),
                    });
                    return Ok(());
                }
            }
            b.kb.signatures.insert(
                relation.clone(),
                RelationSignature {
                    relation,
                    left: ClassConstraint::parse(fields[1]),
                    right: ClassConstraint::parse(fields[2]),
                },
            );
            Ok(())
        })
    }

    pub fn read_url_map<R: BufRead>(&mut self, name: &str, reader: R) -> Result<()> {
        self.for_each_record(name, reader, 2, |b, _, fields| {
            let entity = EntityId::new(fields[1]);
            match b.kb.main_entity_by_url.get(fields[0]) {
                Some(existing) if *existing != entity => Err(Error::AmbiguousUrl {
                    url: fields[0].to_owned(),
                    first: existing.to_string(),
                    second: entity.to_string(),
                }),
                _ => {
                    b.kb.main_entity_by_url.insert(fields[0].to_owned(), entity);
                    Ok(())
                }
            }
        })
    }

    pub fn finish(mut self) -> (KnowledgeBase, LoadReport) {
        let known_relations: HashSet<&RelationId> =
            self.kb.facts.iter().map(|f| &f.relation).collect();
        let entities = self.kb.entities();
        let mut sigs: Vec<&RelationSignature> = self.kb.signatures.values().collect();
        sigs.sort_by(|a, b| a.relation.cmp(&b.relation));
        for sig in sigs {
            if !known_relations.contains(&sig.relation) {
                self.report.warnings.push(format!(
                    "signature for relation {} which has no facts",
                    sig.relation
                ));
            }
            for side in [&sig.left, &sig.right] {
                if let ClassConstraint::Class(c) = side {
                    if !entities.contains(c) {
                        self.report.warnings.push(format!(
                            "signature for {} references unknown class {}",
                            sig.relation, c
                        ));
                    }
                }
            }
        }
        self.report.facts = self.kb.facts.len();
        self.report.denotations = self.kb.denotations.values().map(Vec::len).sum();
        self.report.signatures = self.kb.signatures.len();
        self.report.urls = self.kb.main_entity_by_url.len();
        (self.kb, self.report)
    }
}

impl KnowledgeBase {
    fn empty() -> Self {
        KnowledgeBase {
            config: KbConfig::default(),
            facts: HashSet::new(),
            by_subject: HashMap::new(),
            by_object: HashMap::new(),
            denotations: HashMap::new(),
            main_entity_by_url: HashMap::new(),
            signatures: HashMap::new(),
            literal_relations: HashSet::new(),
        }
    }

    fn insert_fact(&mut self, fact: Fact) {
        if self.facts.contains(&fact) {
            return;
        }
        self.by_subject
            .entry(fact.subject.clone())
            .or_default()
            .push((fact.relation.clone(), fact.object.clone()));
        self.by_object
            .entry(fact.object.clone())
            .or_default()
            .push((fact.relation.clone(), fact.subject.clone()));
        self.facts.insert(fact);
    }

    pub fn config(&self) -> &KbConfig {
        &self.config
    }

    pub fn num_facts(&self) -> usize {
        self.facts.len()
    }

    pub fn facts(&self) -> impl Iterator<Item = &Fact> + Clone {
        self.facts.iter()
    }

    /// Exact membership; relations are directed.
    pub fn has_fact(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    /// Every entity mentioned by a fact or carrying a denotation.
    pub fn entities(&self) -> BTreeSet<EntityId> {
        self.by_subject
            .keys()
            .chain(self.by_object.keys())
            .chain(self.denotations.keys())
            .cloned()
            .collect()
    }

    /// Objects of `(subject, relation, ?)`.
    pub fn objects<'a>(
        &'a self,
        subject: &'a EntityId,
        relation: &'a RelationId,
    ) -> impl Iterator<Item = &'a EntityId> + 'a {
        self.by_subject
            .get(subject)
            .into_iter()
            .flatten()
            .filter(move |(r, _)| r == relation)
            .map(|(_, o)| o)
    }

    /// Outgoing `(relation, object)` edges of `subject`.
    pub fn outgoing(&self, subject: &EntityId) -> &[(RelationId, EntityId)] {
        self.by_subject.get(subject).map_or(&[], Vec::as_slice)
    }

    /// Number of facts in which `e` is subject or object.
    pub fn fact_count(&self, e: &EntityId) -> usize {
        self.by_subject.get(e).map_or(0, Vec::len) + self.by_object.get(e).map_or(0, Vec::len)
    }

    pub fn denotations(&self, e: &EntityId) -> &[String] {
        self.denotations.get(e).map_or(&[], Vec::as_slice)
    }

    /// First listed denotation with spaces replaced by `_`, or the id itself.
    pub fn canonical_surface(&self, e: &EntityId) -> String {
        match self.denotations(e).first() {
            Some(s) => s.split_whitespace().collect::<Vec<_>>().join("_"),
            None => e.to_string(),
        }
    }

    pub fn main_entity(&self, url: &str) -> Option<&EntityId> {
        self.main_entity_by_url.get(url)
    }

    pub fn urls(&self) -> impl Iterator<Item = (&str, &EntityId)> {
        self.main_entity_by_url.iter().map(|(u, e)| (u.as_str(), e))
    }

    pub fn signature(&self, relation: &RelationId) -> Option<&RelationSignature> {
        self.signatures.get(relation)
    }

    pub fn is_literal(&self, relation: &RelationId) -> bool {
        self.literal_relations.contains(relation)
    }

    /// Entities one non-literal edge away from `main`, in either direction.
    pub fn one_hop_neighbors(&self, main: &EntityId) -> BTreeSet<EntityId> {
        self.neighbors_within(main, 1)
    }

    /// Entities at graph distance `1..=hops` from `main` over non-literal edges.
    pub fn neighbors_within(&self, main: &EntityId, hops: usize) -> BTreeSet<EntityId> {
        let mut seen: HashSet<&EntityId> = HashSet::new();
        seen.insert(main);
        let mut frontier = vec![main];
        let mut out = BTreeSet::new();
        for _ in 0..hops {
            let mut next = Vec::new();
            for e in frontier {
                let edges = self
                    .by_subject
                    .get(e)
                    .into_iter()
                    .chain(self.by_object.get(e))
                    .flatten();
                for (rel, other) in edges {
                    if self.is_literal(rel) || !seen.insert(other) {
                        continue;
                    }
                    out.insert(other.clone());
                    next.push(other);
                }
            }
            frontier = next;
        }
        out
    }

    /// Classes reachable by one instance-of edge followed by up to
    /// `max_class_depth` subclass-of edges.
    pub fn classes_of(&self, e: &EntityId) -> BTreeSet<EntityId> {
        let cfg = &self.config;
        let mut out = BTreeSet::new();
        let mut queue: VecDeque<(&EntityId, usize)> = VecDeque::new();
        for class in self.objects(e, &cfg.instance_of) {
            if out.insert(class.clone()) {
                queue.push_back((class, 0));
            }
        }
        while let Some((class, depth)) = queue.pop_front() {
            if depth >= cfg.max_class_depth {
                continue;
            }
            for parent in self.objects(class, &cfg.subclass_of) {
                if out.insert(parent.clone()) {
                    queue.push_back((parent, depth + 1));
                }
            }
        }
        out
    }

    /// True when `e` satisfies one side of a relation signature.
    pub fn satisfies(&self, e: &EntityId, constraint: &ClassConstraint) -> bool {
        match constraint {
            ClassConstraint::Any => true,
            ClassConstraint::Class(c) => self.classes_of(e).contains(c),
        }
    }
}
