use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::error::{Error, Result};

pub const UNKNOWN_CLUSTER: &str = "UNK";

/// Word to Brown-cluster bit-string, read from the standard
/// `bits<TAB>word<TAB>count` cluster output.
#[derive(Clone, Debug, Default)]
pub struct BrownClusters {
    paths: HashMap<String, String>,
    cluster_count: usize,
}

impl BrownClusters {
    pub fn from_pairs<I, W, B>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (W, B)>,
        W: Into<String>,
        B: Into<String>,
    {
        let mut paths = HashMap::new();
        for (word, bits) in pairs {
            let bits = bits.into();
            if !is_bit_string(&bits) {
                return Err(Error::InvalidParam(format!("bad cluster bit-string {bits:?}")));
            }
            paths.insert(word.into(), bits);
        }
        Ok(Self::finish(paths))
    }

    fn finish(paths: HashMap<String, String>) -> Self {
        let cluster_count = paths.values().collect::<HashSet<_>>().len();
        BrownClusters {
            paths,
            cluster_count,
        }
    }

    pub fn read<R: BufRead>(name: &str, reader: R) -> Result<Self> {
        let mut paths = HashMap::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io(name, e))?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(bits), Some(word)) = (cols.next(), cols.next()) else {
                return Err(Error::parse(name, idx + 1, "expected bits<TAB>word[<TAB>count]"));
            };
            if !is_bit_string(bits) || word.is_empty() {
                return Err(Error::parse(name, idx + 1, format!("bad cluster bit-string {bits:?}")));
            }
            // first occurrence wins, as cluster files list each word once
            paths.entry(word.to_owned()).or_insert_with(|| bits.to_owned());
        }
        Ok(Self::finish(paths))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(&path.display().to_string(), BufReader::new(f))
    }

    pub fn cluster_count(&self) -> usize {
        self.cluster_count
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// Exact lookup, then lowercase fallback.
    pub fn path(&self, word: &str) -> Option<&str> {
        self.paths
            .get(word)
            .or_else(|| self.paths.get(&word.to_lowercase()))
            .map(String::as_str)
    }

    /// First four bits of the cluster path, right-padded with `0`, or `UNK`.
    pub fn prefix4(&self, word: &str) -> String {
        match self.path(word) {
            Some(bits) => {
                let mut p: String = bits.chars().take(4).collect();
                while p.len() < 4 {
                    p.push('0');
                }
                p
            }
            None => UNKNOWN_CLUSTER.to_owned(),
        }
    }
}

fn is_bit_string(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b == b'0' || b == b'1')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_truncates_pads_and_falls_back() {
        let c = BrownClusters::read(
            "c",
            "0111010\tfisher\t12\n011\tstar\t4\n1\tThe\t100\n".as_bytes(),
        )
        .unwrap();
        assert_eq!(c.prefix4("fisher"), "0111");
        assert_eq!(c.prefix4("star"), "0110");
        assert_eq!(c.prefix4("nothing"), "UNK");
        assert_eq!(c.prefix4("the"), "UNK");
        assert_eq!(c.prefix4("The"), "1000");
        assert_eq!(c.prefix4("FISHER"), "0111");
        assert_eq!(c.cluster_count(), 3);
    }

    #[test]
    fn rejects_non_binary_paths() {
        assert!(BrownClusters::read("c", "01x\tword\t1\n".as_bytes()).is_err());
        assert!(BrownClusters::from_pairs([("w", "")]).is_err());
    }
}
