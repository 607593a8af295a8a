//! Bloom filter over canonical fact keys.
//!
//! Sizing follows the usual optimum for `n` items at false-positive rate `p`:
//! `m = ceil(-n ln p / (ln 2)^2)` bits and `k = round(m/n ln 2)` hashes.
//! Probe positions use double hashing `h1 + i*h2 mod m` over two seeded
//! xxh3 hashes, so a filter file plus its seed reproduces the same answers.

use std::io::{Read, Write};

use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};
use crate::kb::Fact;

const MAGIC: &[u8; 8] = b"RLXBLOOM";
const SECOND_HASH_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    bits: Vec<u64>,
    num_bits: u64,
    num_hashes: u64,
    num_inserted: u64,
    seed: u64,
}

/// Optimal `(m, k)` for `n` items at rate `p`.
pub fn optimal_params(n: u64, p: f64) -> Result<(u64, u64)> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParam(format!(
            "false positive rate must be in (0, 1), got {p}"
        )));
    }
    if n == 0 {
        return Ok((1, 1));
    }
    let ln2 = std::f64::consts::LN_2;
    let m = (-(n as f64) * p.ln() / (ln2 * ln2)).ceil().max(1.0) as u64;
    let k = ((m as f64 / n as f64) * ln2).round().max(1.0) as u64;
    Ok((m, k))
}

impl BloomFilter {
    /// Empty filter sized for `capacity` items.
    pub fn with_capacity(capacity: u64, target_fpr: f64, seed: u64) -> Result<Self> {
        let (m, k) = optimal_params(capacity, target_fpr)?;
        Ok(BloomFilter {
            bits: vec![0; m.div_ceil(64) as usize],
            num_bits: m,
            num_hashes: k,
            num_inserted: 0,
            seed,
        })
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn num_hashes(&self) -> u64 {
        self.num_hashes
    }

    pub fn num_inserted(&self) -> u64 {
        self.num_inserted
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn probes(&self, key: &[u8]) -> impl Iterator<Item = u64> {
        let m = self.num_bits as u128;
        let h1 = xxh3_64_with_seed(key, self.seed) as u128 % m;
        let h2 = xxh3_64_with_seed(key, self.seed ^ SECOND_HASH_SALT) as u128 % m;
        (0..self.num_hashes as u128).map(move |i| ((h1 + i * h2) % m) as u64)
    }

    pub fn insert(&mut self, key: &[u8]) {
        let positions: Vec<u64> = self.probes(key).collect();
        for bit in positions {
            self.bits[(bit / 64) as usize] |= 1 << (bit % 64);
        }
        self.num_inserted += 1;
    }

    pub fn contains(&self, key: &[u8]) -> bool {
        self.probes(key)
            .all(|bit| self.bits[(bit / 64) as usize] & (1 << (bit % 64)) != 0)
    }

    pub fn insert_fact(&mut self, fact: &Fact) {
        self.insert(fact.canonical_key().as_bytes());
    }

    pub fn contains_fact(&self, fact: &Fact) -> bool {
        self.contains(fact.canonical_key().as_bytes())
    }

    /// Little-endian `RLXBLOOM m k n seed` header followed by the bit words.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        for v in [self.num_bits, self.num_hashes, self.num_inserted, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for word in &self.bits {
            w.write_all(&word.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let fail = |e: std::io::Error| Error::Format(format!("truncated bloom filter: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(fail)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing RLXBLOOM magic".into()));
        }
        let mut header = [0u64; 4];
        for v in header.iter_mut() {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf).map_err(fail)?;
            *v = u64::from_le_bytes(buf);
        }
        let [num_bits, num_hashes, num_inserted, seed] = header;
        if num_bits == 0 || num_hashes == 0 {
            return Err(Error::Format("zero-sized bloom filter".into()));
        }
        let words = num_bits.div_ceil(64) as usize;
        let mut raw = vec![0u8; words * 8];
        r.read_exact(&mut raw).map_err(fail)?;
        let bits = raw
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(BloomFilter {
            bits,
            num_bits,
            num_hashes,
            num_inserted,
            seed,
        })
    }
}

/// Size a filter for the facts (two passes over a cloneable iterator) and insert them.
pub fn build_bloom<'a, I>(facts: I, target_fpr: f64, seed: u64) -> Result<BloomFilter>
where
    I: IntoIterator<Item = &'a Fact>,
    I::IntoIter: Clone,
{
    let iter = facts.into_iter();
    let n = iter.clone().count() as u64;
    let mut filter = BloomFilter::with_capacity(n, target_fpr, seed)?;
    for fact in iter {
        filter.insert_fact(fact);
    }
    Ok(filter)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sizing_matches_formula() {
        let (m, k) = optimal_params(100_000, 0.001).unwrap();
        assert_eq!(m, 1_437_759);
        assert_eq!(k, 10);
    }

    #[test]
    fn rejects_out_of_range_rate() {
        assert!(optimal_params(10, 0.0).is_err());
        assert!(optimal_params(10, 1.0).is_err());
        assert!(optimal_params(10, f64::NAN).is_err());
    }

    #[test]
    fn single_fact_is_found() {
        let f = Fact::new("a", "r", "b");
        let bloom = build_bloom([&f], 0.3, 7).unwrap();
        assert!(bloom.contains_fact(&f));
    }

    #[test]
    fn empty_filter_contains_nothing() {
        let bloom = build_bloom(std::iter::empty::<&Fact>(), 0.001, 1).unwrap();
        assert!(!bloom.contains_fact(&Fact::new("a", "r", "b")));
    }

    #[test]
    fn file_round_trip() {
        let facts: Vec<Fact> = (0..50).map(|i| Fact::new(format!("s{i}"), "r", "o")).collect();
        let bloom = build_bloom(&facts, 0.01, 99).unwrap();
        let mut buf = Vec::new();
        bloom.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"RLXBLOOM");
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), bloom.num_bits());
        let back = BloomFilter::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, bloom);
        assert!(BloomFilter::read_from(&buf[..20]).is_err());
        assert!(BloomFilter::read_from(&b"NOTBLOOM"[..]).is_err());
    }

    proptest! {
        #[test]
        fn no_false_negatives(keys in proptest::collection::vec("[a-z]{1,8}", 1..200), seed: u64) {
            let facts: Vec<Fact> = keys.iter().map(|k| Fact::new(k.as_str(), "r", "o")).collect();
            let bloom = build_bloom(&facts, 0.01, seed).unwrap();
            for f in &facts {
                prop_assert!(bloom.contains_fact(f));
            }
        }
    }
}
