//! Train/validation/test splits by grouped-pair key.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::annotate::PairKey;
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes {
            train: 50_000,
            val: 10_000,
            test: 10_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    Train,
    Val,
    Test,
}

/// Assignment of pair keys to splits. Keys are ordered by a seeded hash;
/// the first `test` keys go to test, the next `val` to validation and the
/// next `train` to training. When there are fewer keys than requested the
/// sizes are scaled down proportionally.
#[derive(Clone, Debug)]
pub struct KeySplit {
    assignment: HashMap<PairKey, (Part, usize)>,
    counts: [usize; 3],
}

fn key_hash(k: &PairKey, seed: u64) -> u64 {
    let s = format!("{}\x1f{}\x1f{}", k.x, k.relation, k.y);
    xxhash_rust::xxh3::xxh3_64_with_seed(s.as_bytes(), seed)
}

impl KeySplit {
    pub fn new<I>(keys: I, sizes: SplitSizes, seed: u64) -> Result<Self>
    where
        I: IntoIterator<Item = PairKey>,
    {
        let unique: BTreeSet<PairKey> = keys.into_iter().collect();
        let mut ranked: Vec<(u64, PairKey)> = unique.into_iter().map(|k| (key_hash(&k, seed), k)).collect();
        ranked.sort();
        let n = ranked.len();
        let requested = sizes.train + sizes.val + sizes.test;
        if requested == 0 {
            return Err(Error::InvalidParam("split sizes are all zero".into()));
        }
        let (train, val, test) = if n >= requested {
            (sizes.train, sizes.val, sizes.test)
        } else {
            let scale = |s: usize| (s as f64 * n as f64 / requested as f64).round() as usize;
            let test = scale(sizes.test);
            let val = scale(sizes.val).min(n - test);
            (n - test - val, val, test)
        };
        let mut assignment = HashMap::with_capacity(train + val + test);
        for (i, (_, k)) in ranked.into_iter().enumerate() {
            let entry = if i < test {
                (Part::Test, i)
            } else if i < test + val {
                (Part::Val, i - test)
            } else if i < test + val + train {
                (Part::Train, i - test - val)
            } else {
                break;
            };
            assignment.insert(k, entry);
        }
        Ok(KeySplit {
            assignment,
            counts: [train, val, test],
        })
    }

    pub fn part(&self, key: &PairKey) -> Option<Part> {
        self.assignment.get(key).map(|(p, _)| *p)
    }

    /// Number of keys in train, validation and test.
    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    /// Distribute examples by key, preserving input order within each part.
    /// `train_limit` keeps only the first `n` training keys in rank order.
    pub fn apply(&self, examples: &[FeaturizedExample], train_limit: Option<usize>) -> Splits {
        let mut out = Splits::default();
        for e in examples {
            match self.assignment.get(&e.key()) {
                Some((Part::Train, rank)) if train_limit.is_none_or(|n| *rank < n) => out.train.push(e.clone()),
                Some((Part::Val, _)) => out.val.push(e.clone()),
                Some((Part::Test, _)) => out.test.push(e.clone()),
                _ => {}
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct Splits {
    pub train: Vec<FeaturizedExample>,
    pub val: Vec<FeaturizedExample>,
    pub test: Vec<FeaturizedExample>,
}

impl Splits {
    /// Hard check that no pair key occurs in two parts.
    pub fn check_disjoint(&self) -> Result<()> {
        let keys = |v: &[FeaturizedExample]| v.iter().map(|e| e.key()).collect::<BTreeSet<_>>();
        let (tr, va, te) = (keys(&self.train), keys(&self.val), keys(&self.test));
        let leak = tr.intersection(&va).chain(tr.intersection(&te)).chain(va.intersection(&te)).next();
        match leak {
            Some(k) => Err(Error::Invariant(format!(
                "pair ({}, {}, {}) appears in two splits",
                k.x, k.relation, k.y
            ))),
            None => Ok(()),
        }
    }

    /// Number of distinct training keys.
    pub fn train_keys(&self) -> usize {
        self.train.iter().map(|e| e.key()).collect::<BTreeSet<_>>().len()
    }
}
