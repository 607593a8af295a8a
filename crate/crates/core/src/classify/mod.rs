//! Binary classifiers over feature-token sequences and their model files.

mod codec;
pub mod lbfgs;
pub mod maxent;
pub mod ngram;

use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeaturizedExample;
use codec::{Decoder, Encoder};

pub use maxent::{train_maxent, FeatureMode, MaxEntConfig, MaxEntModel, MaxEntProblem};
pub use ngram::{train_ngram_linear, NgramLinearModel, TrainConfig};

const MAGIC: &[u8; 8] = b"RLXMODEL";
const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ngram,
    MaxEnt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Ngram => "ngram",
            ModelKind::MaxEnt => "maxent",
        }
    }

    fn tag(self) -> u8 {
        match self {
            ModelKind::Ngram => 1,
            ModelKind::MaxEnt => 2,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ngram" | "fasttext" => Ok(ModelKind::Ngram),
            "maxent" => Ok(ModelKind::MaxEnt),
            other => Err(Error::InvalidParam(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Hyperparameters for either classifier.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassifierConfig {
    pub ngram: TrainConfig,
    pub maxent: MaxEntConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Ngram(NgramLinearModel),
    MaxEnt(MaxEntModel),
}

impl Model {
    pub fn train(kind: ModelKind, examples: &[FeaturizedExample], cfg: &ClassifierConfig) -> Result<Model> {
        match kind {
            ModelKind::Ngram => train_ngram_linear(examples, &cfg.ngram).map(Model::Ngram),
            ModelKind::MaxEnt => train_maxent(examples, &cfg.maxent).map(Model::MaxEnt),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Ngram(_) => ModelKind::Ngram,
            Model::MaxEnt(_) => ModelKind::MaxEnt,
        }
    }

    pub fn predict_proba(&self, features: &[String]) -> f64 {
        match self {
            Model::Ngram(m) => m.predict_proba(features),
            Model::MaxEnt(m) => m.predict_proba(features),
        }
    }

    /// Serialize as `RLXMODEL`, version, kind tag, then the kind's body.
    pub fn write_to<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut e = Encoder::new(w);
        e.bytes(MAGIC)?;
        e.u32(VERSION)?;
        e.u8(self.kind().tag())?;
        match self {
            Model::Ngram(m) => write_ngram(&mut e, m),
            Model::MaxEnt(m) => write_maxent(&mut e, m),
        }
    }

    pub fn read_from<R: Read>(r: R) -> Result<Model> {
        let mut d = Decoder::new(r);
        if &d.array::<8>()? != MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let version = d.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model file version {version}")));
        }
        match d.u8()? {
            1 => read_ngram(&mut d).map(Model::Ngram),
            2 => read_maxent(&mut d).map(Model::MaxEnt),
            t => Err(Error::Format(format!("unknown model kind tag {t}"))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to memory cannot fail");
        out
    }
}

fn write_ngram<W: Write>(e: &mut Encoder<W>, m: &NgramLinearModel) -> std::io::Result<()> {
    let c = &m.config;
    e.u64(c.seed)?;
    e.u32(c.dim as u32)?;
    e.u64(c.bucket_count)?;
    e.u32(c.epochs as u32)?;
    e.f64(c.learning_rate)?;
    e.u32(c.ngram_order as u32)?;
    e.u64(c.hash_seed)?;
    e.u64(m.vocab.len() as u64)?;
    for t in &m.vocab {
        e.str(t)?;
    }
    e.u64(m.row_ids.len() as u64)?;
    for (s, &row) in m.row_ids.iter().enumerate() {
        e.u64(row)?;
        for &v in &m.arena[s * c.dim..(s + 1) * c.dim] {
            e.f32(v)?;
        }
    }
    for &v in &m.output {
        e.f32(v)?;
    }
    e.u32(m.epoch_loss.len() as u32)?;
    for &l in &m.epoch_loss {
        e.f64(l)?;
    }
    Ok(())
}

fn read_ngram<R: Read>(d: &mut Decoder<R>) -> Result<NgramLinearModel> {
    let config = TrainConfig {
        seed: d.u64()?,
        dim: d.u32()? as usize,
        bucket_count: d.u64()?,
        epochs: d.u32()? as usize,
        learning_rate: d.f64()?,
        ngram_order: d.u32()? as usize,
        hash_seed: d.u64()?,
    };
    let mut m = NgramLinearModel::new(config)
        .map_err(|e| Error::Format(format!("bad model configuration: {e}")))?;
    let dim = m.config.dim;
    let nv = d.u64()?;
    for i in 0..nv {
        let t = d.str()?;
        m.vocab_index.insert(t.clone(), i);
        m.vocab.push(t);
    }
    let nr = d.u64()?;
    for s in 0..nr as usize {
        let row = d.u64()?;
        if row >= m.num_rows() {
            return Err(Error::Format(format!("embedding row {row} out of range")));
        }
        m.row_ids.push(row);
        m.row_slot.insert(row, s);
        for _ in 0..dim {
            m.arena.push(d.f32()?);
        }
    }
    for v in m.output.iter_mut() {
        *v = d.f32()?;
    }
    let nl = d.u32()?;
    for _ in 0..nl {
        m.epoch_loss.push(d.f64()?);
    }
    Ok(m)
}

fn write_maxent<W: Write>(e: &mut Encoder<W>, m: &MaxEntModel) -> std::io::Result<()> {
    e.f64(m.sigma2)?;
    e.u8(match m.mode {
        FeatureMode::Presence => 0,
        FeatureMode::Count => 1,
    })?;
    e.f64(m.grad_norm)?;
    e.u64(m.names.len() as u64)?;
    for (i, n) in m.names.iter().enumerate() {
        e.str(n)?;
        e.f64(m.weights[2 * i])?;
        e.f64(m.weights[2 * i + 1])?;
    }
    e.f64(m.bias[0])?;
    e.f64(m.bias[1])?;
    e.u32(m.trace.len() as u32)?;
    for &v in &m.trace {
        e.f64(v)?;
    }
    Ok(())
}

fn read_maxent<R: Read>(d: &mut Decoder<R>) -> Result<MaxEntModel> {
    let sigma2 = d.f64()?;
    let mode = match d.u8()? {
        0 => FeatureMode::Presence,
        1 => FeatureMode::Count,
        t => return Err(Error::Format(format!("unknown feature mode tag {t}"))),
    };
    let grad_norm = d.f64()?;
    let nf = d.u64()? as usize;
    let mut names = Vec::with_capacity(nf);
    let mut index = HashMap::with_capacity(nf);
    let mut weights = Vec::with_capacity(2 * nf);
    for i in 0..nf {
        let n = d.str()?;
        index.insert(n.clone(), i as u32);
        names.push(n);
        weights.push(d.f64()?);
        weights.push(d.f64()?);
    }
    let bias = [d.f64()?, d.f64()?];
    let nt = d.u32()?;
    let mut trace = Vec::with_capacity(nt as usize);
    for _ in 0..nt {
        trace.push(d.f64()?);
    }
    Ok(MaxEntModel {
        names,
        index,
        weights,
        bias,
        sigma2,
        mode,
        trace,
        grad_norm,
    })
}
