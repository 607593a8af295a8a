//! Maximum-entropy classifier: two-class logistic regression with a Gaussian
//! prior, fitted by L-BFGS.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsConfig};
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    /// Each distinct token counts once per example.
    #[default]
    Presence,
    Count,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntConfig {
    /// Gaussian prior variance on every weight and bias.
    pub sigma2: f64,
    pub mode: FeatureMode,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for MaxEntConfig {
    fn default() -> Self {
        MaxEntConfig {
            sigma2: 1.0,
            mode: FeatureMode::Presence,
            max_iter: 2000,
            grad_tol: 1e-5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxEntModel {
    pub(crate) names: Vec<String>,
    pub(crate) index: HashMap<String, u32>,
    /// `weights[2 * f + c]` for feature `f` and class `c`.
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: [f64; 2],
    pub(crate) sigma2: f64,
    pub(crate) mode: FeatureMode,
    pub(crate) trace: Vec<f64>,
    pub(crate) grad_norm: f64,
}

/// Sparse design matrix plus labels; exposes the penalized objective so it
/// can be checked against finite differences.
#[derive(Clone, Debug)]
pub struct MaxEntProblem {
    rows: Vec<Vec<(u32, f64)>>,
    labels: Vec<usize>,
    num_features: usize,
    sigma2: f64,
}

fn encode(features: &[String], index: &HashMap<String, u32>, mode: FeatureMode) -> Vec<(u32, f64)> {
    let mut counts: HashMap<u32, f64> = HashMap::new();
    for f in features {
        if let Some(&id) = index.get(f) {
            let c = counts.entry(id).or_default();
            match mode {
                FeatureMode::Presence => *c = 1.0,
                FeatureMode::Count => *c += 1.0,
            }
        }
    }
    let mut row: Vec<(u32, f64)> = counts.into_iter().collect();
    row.sort_unstable_by_key(|(id, _)| *id);
    row
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl MaxEntProblem {
    pub fn new(examples: &[FeaturizedExample], mode: FeatureMode, sigma2: f64) -> Result<(Self, Vec<String>)> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParam(format!("prior variance must be positive, got {sigma2}")));
        }
        let pos = examples.iter().filter(|e| e.is_positive()).count();
        if pos == 0 || pos == examples.len() {
            return Err(Error::SingleClass);
        }
        let mut names = Vec::new();
        let mut index: HashMap<String, u32> = HashMap::new();
        for e in examples {
            for f in &e.features {
                if !index.contains_key(f) {
                    index.insert(f.clone(), names.len() as u32);
                    names.push(f.clone());
                }
            }
        }
        let rows = examples.iter().map(|e| encode(&e.features, &index, mode)).collect();
        let labels = examples.iter().map(|e| usize::from(e.is_positive())).collect();
        Ok((
            MaxEntProblem {
                rows,
                labels,
                num_features: names.len(),
                sigma2,
            },
            names,
        ))
    }

    /// Number of parameters: two weights per feature plus two biases.
    pub fn dim(&self) -> usize {
        2 * self.num_features + 2
    }

    /// Negative log-likelihood plus `Σθ²/(2σ²)`; writes the gradient.
    pub fn value_and_gradient(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        let nf = self.num_features;
        let bias = &theta[2 * nf..];
        let inv = 1.0 / self.sigma2;
        let mut value = 0.0;
        for (g, t) in grad.iter_mut().zip(theta) {
            *g = t * inv;
            value += 0.5 * t * t * inv;
        }
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            let mut s = [bias[0], bias[1]];
            for &(f, v) in row {
                let f = f as usize;
                s[0] += theta[2 * f] * v;
                s[1] += theta[2 * f + 1] * v;
            }
            let z = log_sum_exp(s[0], s[1]);
            value += z - s[y];
            for c in 0..2 {
                let p = (s[c] - z).exp();
                let d = p - f64::from(u8::from(c == y));
                grad[2 * nf + c] += d;
                for &(f, v) in row {
                    grad[2 * f as usize + c] += d * v;
                }
            }
        }
        value
    }
}

/// Fit a MaxEnt model. Deterministic: the objective is strictly convex and
/// the optimizer starts from zero.
pub fn train_maxent(examples: &[FeaturizedExample], cfg: &MaxEntConfig) -> Result<MaxEntModel> {
    let (problem, names) = MaxEntProblem::new(examples, cfg.mode, cfg.sigma2)?;
    let lcfg = LbfgsConfig {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
        ..LbfgsConfig::default()
    };
    let result = minimize(
        |t, g| problem.value_and_gradient(t, g),
        vec![0.0; problem.dim()],
        &lcfg,
    )?;
    log::debug!(
        "maxent converged in {} iterations, objective {:.6}, |g| {:.3e}",
        result.iterations,
        result.value,
        result.grad_norm
    );
    let nf = problem.num_features;
    let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
    Ok(MaxEntModel {
        names,
        index,
        weights: result.x[..2 * nf].to_vec(),
        bias: [result.x[2 * nf], result.x[2 * nf + 1]],
        sigma2: cfg.sigma2,
        mode: cfg.mode,
        trace: result.trace,
        grad_norm: result.grad_norm,
    })
}

impl MaxEntModel {
    /// Build a model from explicit per-class weights.
    pub fn from_weights<I, S>(weights: I, bias: [f64; 2], mode: FeatureMode) -> Self
    where
        I: IntoIterator<Item = (S, [f64; 2])>,
        S: Into<String>,
    {
        let mut names = Vec::new();
        let mut flat = Vec::new();
        for (name, w) in weights {
            names.push(name.into());
            flat.extend_from_slice(&w);
        }
        let index = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        MaxEntModel {
            names,
            index,
            weights: flat,
            bias,
            sigma2: 1.0,
            mode,
            trace: Vec::new(),
            grad_norm: 0.0,
        }
    }

    pub fn predict_proba(&self, features: &[String]) -> f64 {
        let mut s = self.bias;
        for (f, v) in encode(features, &self.index, self.mode) {
            let f = f as usize;
            s[0] += self.weights[2 * f] * v;
            s[1] += self.weights[2 * f + 1] * v;
        }
        1.0 / (1.0 + (s[0] - s[1]).exp())
    }

    pub fn num_features(&self) -> usize {
        self.names.len()
    }

    /// Per-class weights of a feature token, if it was seen in training.
    pub fn weight(&self, feature: &str) -> Option<[f64; 2]> {
        self.index.get(feature).map(|&f| {
            let f = f as usize;
            [self.weights[2 * f], self.weights[2 * f + 1]]
        })
    }

    pub fn bias(&self) -> [f64; 2] {
        self.bias
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    /// Objective value after each accepted optimizer step.
    pub fn objective_trace(&self) -> &[f64] {
        &self.trace
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.grad_norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn ex(features: &[&str], positive: bool) -> FeaturizedExample {
        FeaturizedExample {
            x: "x".into(),
            y: "y".into(),
            relation: "r".into(),
            label: u8::from(positive),
            features: features.iter().map(|s| s.to_string()).collect(),
            n_supports: 1,
        }
    }

    fn separable() -> Vec<FeaturizedExample> {
        let mut v = Vec::new();
        for i in 0..50 {
            let noise = format!("n{}", i % 7);
            v.push(ex(&["good", &noise], true));
            v.push(ex(&["bad", &noise], false));
        }
        v
    }

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn fits_separable_set() {
        let data = separable();
        let m = train_maxent(&data, &MaxEntConfig::default()).unwrap();
        for e in &data {
            let p = m.predict_proba(&e.features);
            assert_eq!(p > 0.5, e.is_positive());
        }
        assert!(m.weights.iter().all(|w| w.is_finite() && w.abs() < 20.0));
        assert!(m.final_grad_norm() <= 1e-5);
        assert!(m.objective_trace().windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn tiny_prior_shrinks_toward_half() {
        let data = separable();
        let cfg = MaxEntConfig {
            sigma2: 0.001,
            ..MaxEntConfig::default()
        };
        let m = train_maxent(&data, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 0.1));
        for e in &data {
            assert!((m.predict_proba(&e.features) - 0.5).abs() < 0.05);
        }
    }

    #[test]
    fn closed_form_predictions() {
        let zero = MaxEntModel::from_weights([("a", [0.0, 0.0])], [0.0, 0.0], FeatureMode::Presence);
        assert_eq!(zero.predict_proba(&toks(&["a"])), 0.5);
        let w = 1.3;
        let m = MaxEntModel::from_weights([("a", [0.0, w])], [0.0, 0.0], FeatureMode::Presence);
        let expected = 1.0 / (1.0 + (-w).exp());
        assert!((m.predict_proba(&toks(&["a"])) - expected).abs() < 1e-12);
        // presence: repeats change nothing
        assert_eq!(m.predict_proba(&toks(&["a", "a"])), m.predict_proba(&toks(&["a"])));
        let b = MaxEntModel::from_weights([("a", [0.0, w])], [0.2, -0.4], FeatureMode::Presence);
        let sig = 1.0 / (1.0 + (0.6f64).exp());
        assert!((b.predict_proba(&toks(&["zzz", "unseen"])) - sig).abs() < 1e-12);
    }

    #[test]
    fn count_mode_accumulates() {
        let m = MaxEntModel::from_weights([("a", [0.0, 1.0])], [0.0, 0.0], FeatureMode::Count);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((m.predict_proba(&toks(&["a", "a"])) - expected).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![ex(&["a"], true), ex(&["b"], true)];
        assert!(matches!(
            train_maxent(&data, &MaxEntConfig::default()),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let data = separable();
        let (p, _) = MaxEntProblem::new(&data, FeatureMode::Presence, 1.0).unwrap();
        let theta: Vec<f64> = (0..p.dim()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let mut g = vec![0.0; p.dim()];
        p.value_and_gradient(&theta, &mut g);
        let mut scratch = vec![0.0; p.dim()];
        let h = 1e-5;
        for i in 0..p.dim() {
            let mut t = theta.clone();
            t[i] += h;
            let fp = p.value_and_gradient(&t, &mut scratch);
            t[i] -= 2.0 * h;
            let fm = p.value_and_gradient(&t, &mut scratch);
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-4 * fd.abs().max(1.0), "param {i}: {fd} vs {}", g[i]);
        }
    }
}
