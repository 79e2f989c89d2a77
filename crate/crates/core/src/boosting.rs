//! AdaBoost with exhaustive stump and interval weak learners.

use serde::{Deserialize, Serialize};

use crate::data::{BaseHypothesis, Dataset, Orientation, VotingClassifier};
use crate::error::{Error, Result};
use crate::sweep::FeatureSort;

/// Per-sample weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::input("weight vector needs at least one sample"));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    /// Rescales nonnegative weights to sum to one.
    pub fn from_unnormalized(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(Error::input("weights must not all be zero"));
        }
        Ok(Self(w.into_iter().map(|v| v / total).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeakLearner {
    Stump,
    Interval,
}

impl WeakLearner {
    pub fn learn(self, data: &Dataset, w: &WeightVector) -> Result<(BaseHypothesis, f64)> {
        match self {
            WeakLearner::Stump => weak_learn_stump(data, w),
            WeakLearner::Interval => weak_learn_interval(data, w),
        }
    }
}

struct Masses {
    // prefix sums of positive- and negative-label weight in sorted order
    pos: Vec<f64>,
    neg: Vec<f64>,
}

impl Masses {
    fn new(fs: &FeatureSort, labels: &[f64], w: &[f64]) -> Self {
        let n = fs.order.len();
        let mut pos = Vec::with_capacity(n + 1);
        let mut neg = Vec::with_capacity(n + 1);
        pos.push(0.0);
        neg.push(0.0);
        for &i in &fs.order {
            let (p, q) = if labels[i] > 0.0 { (w[i], 0.0) } else { (0.0, w[i]) };
            pos.push(pos.last().unwrap() + p);
            neg.push(neg.last().unwrap() + q);
        }
        Self { pos, neg }
    }

    fn pos_in(&self, a: usize, b: usize) -> f64 {
        self.pos[b] - self.pos[a]
    }

    fn neg_in(&self, a: usize, b: usize) -> f64 {
        self.neg[b] - self.neg[a]
    }
}

fn check_inputs(data: &Dataset, w: &WeightVector) -> Result<Vec<f64>> {
    if w.len() != data.n() {
        return Err(Error::input(format!("{} weights for {} samples", w.len(), data.n())));
    }
    data.signed_labels()
}

/// Weighted error of `h` under `w`.
pub fn weighted_error(h: &BaseHypothesis, data: &Dataset, w: &WeightVector) -> Result<f64> {
    let labels = check_inputs(data, w)?;
    let vals = h.values_on(data)?;
    Ok(vals
        .iter()
        .zip(&labels)
        .zip(w.as_slice())
        .filter(|((v, y), _)| **v * **y <= 0.0)
        .fold(0.0, |a, (_, wi)| a + wi))
}

/// Minimum weighted-error stump over every feature, threshold and
/// orientation. Ties go to the lowest feature, then the lowest threshold,
/// then orientation `+1`.
pub fn weak_learn_stump(data: &Dataset, w: &WeightVector) -> Result<(BaseHypothesis, f64)> {
    let labels = check_inputs(data, w)?;
    let mut best: Option<(BaseHypothesis, f64)> = None;
    for j in 0..data.dim() {
        let fs = FeatureSort::new(data, j);
        let m = Masses::new(&fs, &labels, w.as_slice());
        let n = fs.order.len();
        for &cut in &fs.cuts {
            // orientation +1 predicts -1 on positions < cut, +1 on the rest
            let e_pos = m.pos_in(0, cut) + m.neg_in(cut, n);
            let e_neg = m.neg_in(0, cut) + m.pos_in(cut, n);
            let t = fs.stump_threshold(cut);
            for (e, o) in [(e_pos, Orientation::Positive), (e_neg, Orientation::Negative)] {
                if best.as_ref().is_none_or(|b| e < b.1) {
                    best = Some((BaseHypothesis::stump(j, t, o), e));
                }
            }
        }
    }
    best.ok_or_else(|| Error::input("dataset has no features"))
}

/// Minimum weighted-error interval indicator over every feature, pair of
/// cuts and orientation. Ties go to the lowest feature, then the lowest
/// left end, then the lowest right end, then orientation `+1`.
pub fn weak_learn_interval(data: &Dataset, w: &WeightVector) -> Result<(BaseHypothesis, f64)> {
    let labels = check_inputs(data, w)?;
    let mut best: Option<(BaseHypothesis, f64)> = None;
    for j in 0..data.dim() {
        let fs = FeatureSort::new(data, j);
        let m = Masses::new(&fs, &labels, w.as_slice());
        let n = fs.order.len();
        let (pt, nt) = (m.pos_in(0, n), m.neg_in(0, n));
        for (si, &s) in fs.cuts.iter().enumerate() {
            for &e in &fs.cuts[si + 1..] {
                let (pi, ni) = (m.pos_in(s, e), m.neg_in(s, e));
                // orientation +1 predicts +1 inside
                let e_pos = ni + (pt - pi);
                let e_neg = pi + (nt - ni);
                for (err, o) in [(e_pos, Orientation::Positive), (e_neg, Orientation::Negative)] {
                    if best.as_ref().is_none_or(|b| err < b.1) {
                        let (a, b) = fs.interval_bounds(s, e);
                        best = Some((BaseHypothesis::interval(j, a, b, o), err));
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::input("dataset has no features"))
}

/// One boosting round. `raw_error` is the weak learner's weighted error,
/// `error` the clamped value used for `alpha`, and `z` the normalizer of
/// the weight update actually applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub hypothesis: BaseHypothesis,
    pub raw_error: f64,
    pub error: f64,
    pub alpha: f64,
    pub z: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// The best weak hypothesis at this (1-based) round had error exactly ½.
    NoEdge { round: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostingTrace {
    pub rounds: Vec<Round>,
    pub stop_reason: StopReason,
    pub e_clamp: f64,
    pub learner: WeakLearner,
}

impl BoostingTrace {
    /// `f_S = Σ α_k h_k / Σ α_k` over all rounds.
    pub fn classifier(&self) -> Result<VotingClassifier> {
        self.classifier_after(self.rounds.len())
    }

    /// The normalized combination of the first `k` rounds.
    pub fn classifier_after(&self, k: usize) -> Result<VotingClassifier> {
        if k == 0 || k > self.rounds.len() {
            return Err(Error::Trace(format!("no classifier after {k} of {} rounds", self.rounds.len())));
        }
        let rounds = &self.rounds[..k];
        VotingClassifier::new(
            rounds.iter().map(|r| r.hypothesis.clone()).collect(),
            rounds.iter().map(|r| r.alpha).collect(),
        )
    }

    pub fn alpha_sum(&self, k: usize) -> f64 {
        self.rounds[..k].iter().map(|r| r.alpha).sum()
    }

    pub fn any_clamped(&self) -> bool {
        self.rounds.iter().any(|r| r.clamped)
    }
}

/// Default clamp `1/(2n)`, capped at `1/4` so the clamp range is non-empty.
pub fn default_e_clamp(n: usize) -> f64 {
    (0.5 / n as f64).min(0.25)
}

/// Runs up to `rounds` rounds of AdaBoost. Weighted errors are clamped into
/// `[e_clamp, 1/2 - e_clamp]` before computing `α_k = ½ ln((1-e)/e)`;
/// boosting stops early when the best hypothesis has no edge.
pub fn adaboost(data: &Dataset, rounds: usize, learner: WeakLearner, e_clamp: Option<f64>) -> Result<BoostingTrace> {
    if rounds == 0 {
        return Err(Error::input("at least one boosting round is required"));
    }
    let n = data.n();
    let labels = data.signed_labels()?;
    let e_clamp = e_clamp.unwrap_or_else(|| default_e_clamp(n));
    if !(e_clamp > 0.0 && e_clamp <= 0.25) {
        return Err(Error::domain(format!("error clamp must lie in (0, 1/4], got {e_clamp}")));
    }
    let mut w = WeightVector::uniform(n)?;
    let mut out = Vec::with_capacity(rounds);
    let mut stop_reason = StopReason::Completed;
    for k in 1..=rounds {
        let (h, raw) = learner
            .learn(data, &w)
            .map_err(|e| Error::Trace(format!("weak learner failed at round {k}: {e}")))?;
        if raw >= 0.5 {
            stop_reason = StopReason::NoEdge { round: k };
            break;
        }
        let error = raw.clamp(e_clamp, 0.5 - e_clamp);
        let clamped = error != raw;
        let alpha = 0.5 * ((1.0 - error) / error).ln();
        let preds = h.values_on(data)?;
        let next: Vec<f64> = w
            .as_slice()
            .iter()
            .zip(&preds)
            .zip(&labels)
            .map(|((wi, h), y)| wi * (-y * alpha * h).exp())
            .collect();
        let z: f64 = next.iter().sum();
        w = WeightVector(next.into_iter().map(|v| v / z).collect());
        out.push(Round { hypothesis: h, raw_error: raw, error, alpha, z, clamped });
    }
    Ok(BoostingTrace { rounds: out, stop_reason, e_clamp, learner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_best(data: &Dataset, w: &WeightVector, cands: &[BaseHypothesis]) -> f64 {
        cands
            .iter()
            .map(|h| weighted_error(h, data, w).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn separable_stump_has_zero_error() {
        let d = Dataset::from_1d(&[0.1, 0.2, 0.6, 0.9], &[-1, -1, 1, 1]).unwrap();
        let (h, e) = weak_learn_stump(&d, &WeightVector::uniform(4).unwrap()).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(weighted_error(&h, &d, &WeightVector::uniform(4).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn uninformative_labels_give_minority_fraction() {
        // same x for everything: only constant stumps
        let d = Dataset::from_1d(&[0.5; 6], &[1, 1, -1, 1, -1, 1]).unwrap();
        let (_, e) = weak_learn_stump(&d, &WeightVector::uniform(6).unwrap()).unwrap();
        assert_relative_eq!(e, 2.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn stump_tie_break_prefers_low_threshold_positive() {
        let d = Dataset::from_1d(&[0.0, 1.0], &[1, 1]).unwrap();
        let (h, e) = weak_learn_stump(&d, &WeightVector::uniform(2).unwrap()).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(h, BaseHypothesis::stump(0, -1.0, Orientation::Positive));
    }

    #[test]
    fn interval_learner_matches_brute_force() {
        let xs = [0.05, 0.3, 0.12, 0.77, 0.5, 0.91, 0.64, 0.2];
        let ys = [1, -1, -1, 1, 1, -1, 1, -1];
        let d = Dataset::from_1d(&xs, &ys).unwrap();
        let w = WeightVector::from_unnormalized(vec![1.0, 2.0, 1.0, 3.0, 1.0, 1.0, 2.0, 1.0]).unwrap();
        let (h, e) = weak_learn_interval(&d, &w).unwrap();
        assert_relative_eq!(weighted_error(&h, &d, &w).unwrap(), e, epsilon = 1e-15);
        let brute = brute_best(&d, &w, &crate::complexity::candidate_intervals(&d));
        assert_relative_eq!(e, brute, epsilon = 1e-15);
    }

    #[test]
    fn single_interval_target_learned_in_one_round() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<i64> = xs.iter().map(|&x| if (0.3..=0.6).contains(&x) { 1 } else { -1 }).collect();
        let d = Dataset::from_1d(&xs, &ys).unwrap();
        let (_, e) = weak_learn_interval(&d, &WeightVector::uniform(20).unwrap()).unwrap();
        assert_eq!(e, 0.0);
    }

    #[test]
    fn single_point_interval() {
        let d = Dataset::from_1d(&[0.4], &[1]).unwrap();
        let (h, e) = weak_learn_interval(&d, &WeightVector::uniform(1).unwrap()).unwrap();
        assert_eq!(e, 0.0);
        assert_eq!(h.predict(&[0.4]).unwrap(), 1.0);
    }

    #[test]
    fn four_point_trace() {
        // best stump misclassifies exactly one point: e1 = 1/4
        let d = Dataset::from_1d(&[0.1, 0.2, 0.3, 0.4], &[-1, 1, -1, 1]).unwrap();
        let tr = adaboost(&d, 3, WeakLearner::Stump, None).unwrap();
        let r = &tr.rounds[0];
        assert_relative_eq!(r.error, 0.25, epsilon = 1e-15);
        assert_relative_eq!(r.alpha, 0.5 * 3f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(r.z, 2.0 * 0.1875f64.sqrt(), epsilon = 1e-12);
        assert!(!r.clamped);
    }

    #[test]
    fn separable_data_clamps() {
        let d = Dataset::from_1d(&[0.1, 0.2, 0.6, 0.9], &[-1, -1, 1, 1]).unwrap();
        let tr = adaboost(&d, 2, WeakLearner::Stump, None).unwrap();
        assert!(tr.rounds[0].clamped);
        assert_eq!(tr.rounds[0].error, 0.125);
        let f = tr.classifier().unwrap();
        assert_relative_eq!(f.weights().iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn no_edge_stops() {
        let d = Dataset::from_1d(&[0.5, 0.5], &[1, -1]).unwrap();
        let tr = adaboost(&d, 5, WeakLearner::Stump, None).unwrap();
        assert!(tr.rounds.is_empty());
        assert_eq!(tr.stop_reason, StopReason::NoEdge { round: 1 });
        assert!(tr.classifier().is_err());
    }

    #[test]
    fn rejects_zero_rounds() {
        let d = Dataset::from_1d(&[0.5], &[1]).unwrap();
        assert!(adaboost(&d, 0, WeakLearner::Stump, None).is_err());
    }
}
