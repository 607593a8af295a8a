//! Precision, recall and F-score over the positive class.

use serde::{Deserialize, Serialize};

use crate::classify::Model;
use crate::error::{Error, Result};
use crate::features::FeaturizedExample;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    /// A prediction is positive iff its probability is at least `threshold`.
    pub fn from_scores<I>(scored: I, threshold: f64) -> Self
    where
        I: IntoIterator<Item = (f64, bool)>,
    {
        let mut c = Confusion::default();
        for (p, gold) in scored {
            match (p >= threshold, gold) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Zero when nothing is predicted positive.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f_score(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r > 0.0 {
            2.0 * p * r / (p + r)
        } else {
            0.0
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn evaluate(model: &Model, test: &[FeaturizedExample], threshold: f64) -> Result<Confusion> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    Ok(Confusion::from_scores(
        test.iter().map(|e| (model.predict_proba(&e.features), e.is_positive())),
        threshold,
    ))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.iter().all(|v| *v == values[0]) {
        return (values[0], 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let c = Confusion::from_scores([(0.9, true), (0.1, false), (0.5, true)], 0.5);
        assert_eq!((c.precision(), c.recall(), c.f_score()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn three_tp_one_fp_one_fn() {
        let c = Confusion {
            tp: 3,
            fp: 1,
            fn_: 1,
            tn: 7,
        };
        assert_eq!(c.precision(), 0.75);
        assert_eq!(c.recall(), 0.75);
        assert!((c.f_score() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn no_predicted_positives() {
        let c = Confusion::from_scores([(0.1, true), (0.2, false)], 0.5);
        assert_eq!(c.precision(), 0.0);
        assert_eq!(c.f_score(), 0.0);
    }

    #[test]
    fn population_std() {
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[0.1, 0.1, 0.1]).1, 0.0);
    }

    #[test]
    fn empty_test_set_is_error() {
        let m = crate::classify::Model::MaxEnt(crate::classify::MaxEntModel::from_weights(
            Vec::<(String, [f64; 2])>::new(),
            [0.0, 0.0],
            crate::classify::FeatureMode::Presence,
        ));
        assert!(matches!(evaluate(&m, &[], 0.5), Err(Error::EmptyTestSet)));
    }

    proptest! {
        #[test]
        fn matches_brute_force(scored in prop::collection::vec((0.0f64..1.0, any::<bool>()), 0..200), t in 0.0f64..1.0) {
            let c = Confusion::from_scores(scored.iter().copied(), t);
            let tp = scored.iter().filter(|(p, g)| *p >= t && *g).count() as f64;
            let pred = scored.iter().filter(|(p, _)| *p >= t).count() as f64;
            let gold = scored.iter().filter(|(_, g)| *g).count() as f64;
            let p = if pred > 0.0 { tp / pred } else { 0.0 };
            let r = if gold > 0.0 { tp / gold } else { 0.0 };
            let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
            prop_assert!((c.f_score() - f).abs() < 1e-12);
            prop_assert_eq!(c.total(), scored.len());
        }
    }
}
