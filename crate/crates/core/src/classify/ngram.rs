//! Hashed bag-of-ngrams linear classifier: token and n-gram embeddings are
//! averaged into a hidden vector, followed by a two-class softmax.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeaturizedExample;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub dim: usize,
    pub bucket_count: u64,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to zero over training.
    pub learning_rate: f64,
    pub ngram_order: usize,
    pub hash_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            dim: 100,
            bucket_count: 2_000_000,
            epochs: 5,
            learning_rate: 0.1,
            ngram_order: 4,
            hash_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.bucket_count == 0 || self.epochs == 0 || self.ngram_order == 0 {
            return Err(Error::InvalidParam(
                "dim, bucket count, epochs and ngram order must all be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

const FNV_OFFSET: u32 = 2_166_136_261;
const FNV_PRIME: u32 = 16_777_619;
const NGRAM_MULT: u64 = 116_049_371;

/// 32-bit FNV-1a of a token, with the seed folded into the offset basis.
pub fn token_hash(token: &str, hash_seed: u64) -> u32 {
    let mut h = FNV_OFFSET ^ (hash_seed as u32) ^ ((hash_seed >> 32) as u32);
    for &b in token.as_bytes() {
        h ^= u32::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bucket indices of all n-grams of order 2..=`order`.
pub fn ngram_buckets(tokens: &[String], order: usize, bucket_count: u64, hash_seed: u64) -> Vec<u64> {
    let hashes: Vec<u32> = tokens.iter().map(|t| token_hash(t, hash_seed)).collect();
    let mut out = Vec::new();
    for i in 0..hashes.len() {
        let mut h = u64::from(hashes[i]);
        for j in (i + 1)..hashes.len().min(i + order) {
            h = h.wrapping_mul(NGRAM_MULT).wrapping_add(u64::from(hashes[j]));
            out.push(h % bucket_count);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct NgramLinearModel {
    pub(crate) config: TrainConfig,
    pub(crate) vocab: Vec<String>,
    pub(crate) vocab_index: HashMap<String, u64>,
    /// Embedding rows materialized so far, in first-touch order.
    pub(crate) row_ids: Vec<u64>,
    pub(crate) row_slot: HashMap<u64, usize>,
    pub(crate) arena: Vec<f32>,
    /// `output[d * 2 + c]`.
    pub(crate) output: Vec<f32>,
    pub(crate) epoch_loss: Vec<f64>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl NgramLinearModel {
    /// An untrained model with an empty vocabulary and zero output weights.
    pub fn new(config: TrainConfig) -> Result<Self> {
        config.validate()?;
        let output = vec![0.0; config.dim * 2];
        Ok(NgramLinearModel {
            config,
            vocab: Vec::new(),
            vocab_index: HashMap::new(),
            row_ids: Vec::new(),
            row_slot: HashMap::new(),
            arena: Vec::new(),
            output,
            epoch_loss: Vec::new(),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    /// Number of embedding rows (vocabulary plus buckets).
    pub fn num_rows(&self) -> u64 {
        self.vocab.len() as u64 + self.config.bucket_count
    }

    /// Mean training loss of each epoch.
    pub fn epoch_loss(&self) -> &[f64] {
        &self.epoch_loss
    }

    /// Row ids for a token sequence: known unigrams, then hashed n-grams
    /// offset past the vocabulary.
    pub fn feature_rows(&self, tokens: &[String]) -> Vec<u64> {
        let mut rows: Vec<u64> = tokens
            .iter()
            .filter_map(|t| self.vocab_index.get(t).copied())
            .collect();
        if self.config.ngram_order > 1 {
            let base = self.vocab.len() as u64;
            rows.extend(
                ngram_buckets(tokens, self.config.ngram_order, self.config.bucket_count, self.config.hash_seed)
                    .into_iter()
                    .map(|b| base + b),
            );
        }
        rows
    }

    fn init_row(&self, row: u64) -> Vec<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.config.seed ^ splitmix64(row)));
        let bound = 1.0 / self.config.dim as f32;
        (0..self.config.dim).map(|_| rng.gen_range(-bound..=bound)).collect()
    }

    fn slot(&mut self, row: u64) -> usize {
        if let Some(&s) = self.row_slot.get(&row) {
            return s;
        }
        let values = self.init_row(row);
        let s = self.row_ids.len();
        self.row_ids.push(row);
        self.row_slot.insert(row, s);
        self.arena.extend_from_slice(&values);
        s
    }

    fn hidden(&self, rows: &[u64], hidden: &mut [f32]) {
        hidden.iter_mut().for_each(|h| *h = 0.0);
        if rows.is_empty() {
            return;
        }
        let dim = self.config.dim;
        let mut fresh = None;
        for &r in rows {
            let values: &[f32] = match self.row_slot.get(&r) {
                Some(&s) => &self.arena[s * dim..(s + 1) * dim],
                None => fresh.insert(self.init_row(r)),
            };
            hidden.iter_mut().zip(values).for_each(|(h, v)| *h += v);
        }
        let inv = 1.0 / rows.len() as f32;
        hidden.iter_mut().for_each(|h| *h *= inv);
    }

    fn softmax(&self, hidden: &[f32]) -> [f32; 2] {
        let mut s = [0.0f32; 2];
        for (d, h) in hidden.iter().enumerate() {
            s[0] += h * self.output[2 * d];
            s[1] += h * self.output[2 * d + 1];
        }
        let m = s[0].max(s[1]);
        let e0 = (s[0] - m).exp();
        let e1 = (s[1] - m).exp();
        [e0 / (e0 + e1), e1 / (e0 + e1)]
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, tokens: &[String]) -> f64 {
        let rows = self.feature_rows(tokens);
        let mut hidden = vec![0.0; self.config.dim];
        self.hidden(&rows, &mut hidden);
        f64::from(self.softmax(&hidden)[1])
    }
}

/// Train with plain SGD on the negative log-likelihood, single-threaded and
/// deterministic for a fixed seed.
pub fn train_ngram_linear(examples: &[FeaturizedExample], cfg: &TrainConfig) -> Result<NgramLinearModel> {
    let pos = examples.iter().filter(|e| e.is_positive()).count();
    if pos == 0 || pos == examples.len() {
        return Err(Error::SingleClass);
    }
    let mut model = NgramLinearModel::new(cfg.clone())?;
    for e in examples {
        for t in &e.features {
            if !model.vocab_index.contains_key(t) {
                model.vocab_index.insert(t.clone(), model.vocab.len() as u64);
                model.vocab.push(t.clone());
            }
        }
    }
    let encoded: Vec<(Vec<u64>, usize)> = examples
        .iter()
        .map(|e| (model.feature_rows(&e.features), usize::from(e.is_positive())))
        .collect();

    let dim = cfg.dim;
    let total = (cfg.epochs * examples.len()) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut hidden = vec![0.0f32; dim];
    let mut grad = vec![0.0f32; dim];
    let mut slots = Vec::new();
    let mut processed = 0usize;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        for &i in &order {
            let lr = (cfg.learning_rate * (1.0 - processed as f64 / total)) as f32;
            processed += 1;
            let (rows, label) = &encoded[i];
            if rows.is_empty() {
                loss += std::f64::consts::LN_2;
                continue;
            }
            slots.clear();
            for &r in rows {
                let s = model.slot(r);
                slots.push(s);
            }
            hidden.iter_mut().for_each(|h| *h = 0.0);
            for &s in &slots {
                let row = &model.arena[s * dim..(s + 1) * dim];
                hidden.iter_mut().zip(row).for_each(|(h, v)| *h += v);
            }
            let inv = 1.0 / slots.len() as f32;
            hidden.iter_mut().for_each(|h| *h *= inv);

            let p = model.softmax(&hidden);
            loss -= f64::from(p[*label].max(1e-12)).ln();
            grad.iter_mut().for_each(|g| *g = 0.0);
            for c in 0..2 {
                let target = if c == *label { 1.0 } else { 0.0 };
                let alpha = lr * (target - p[c]);
                for d in 0..dim {
                    grad[d] += alpha * model.output[2 * d + c];
                    model.output[2 * d + c] += alpha * hidden[d];
                }
            }
            grad.iter_mut().for_each(|g| *g *= inv);
            for &s in &slots {
                let row = &mut model.arena[s * dim..(s + 1) * dim];
                row.iter_mut().zip(&grad).for_each(|(v, g)| *v += g);
            }
        }
        let mean = loss / examples.len() as f64;
        log::debug!("epoch {} mean loss {:.6}", epoch + 1, mean);
        model.epoch_loss.push(mean);
    }
    Ok(model)
}
