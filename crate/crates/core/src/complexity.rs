//! Rademacher and Gaussian complexities of function classes on a sample.
//!
//! For a class `F` and sample `X_1..X_n` the estimators average, over `B`
//! independent multiplier vectors `ξ` (Rademacher signs or standard normals),
//! the supremum `sup_{f ∈ F} |n^{-1} Σ ξ_i f(X_i)|`. One multiplier vector is
//! shared by the whole class within a draw. Draw `b` uses substream `b` of the
//! seed, so estimates do not depend on how draws are scheduled.
//!
//! Stump and interval classes are handled by exact sweeps over the sorted
//! sample; finite classes (and max-classes built from them) by tabulation.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BaseHypothesis, Dataset, Orientation};
use crate::error::{Error, Result};
use crate::rng;
use crate::sweep::FeatureSort;

/// Largest sample size accepted by [`exact_rademacher_small_n`].
pub const EXACT_ENUMERATION_MAX_N: usize = 14;

pub const DEFAULT_DRAWS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionClass {
    /// An explicit list of hypotheses.
    Finite { hypotheses: Vec<BaseHypothesis> },
    /// Every decision stump on every feature, both orientations.
    Stumps,
    /// Every interval indicator on every feature, both orientations.
    Intervals,
    /// Convex hull of a class.
    ConvexHull { base: Box<FunctionClass> },
    /// Pointwise maxima `max(h_1, .., h_l)` of `arity` members of `base`.
    Max { arity: usize, base: Box<FunctionClass> },
}

impl FunctionClass {
    pub fn finite(hypotheses: Vec<BaseHypothesis>) -> Self {
        FunctionClass::Finite { hypotheses }
    }

    pub fn convex_hull(base: FunctionClass) -> Self {
        FunctionClass::ConvexHull { base: Box::new(base) }
    }

    pub fn max_of(arity: usize, base: FunctionClass) -> Self {
        FunctionClass::Max { arity, base: Box::new(base) }
    }

    /// Tabulates the class on `data`.
    pub fn evaluate(&self, data: &Dataset) -> Result<EvaluatedClass> {
        Ok(EvaluatedClass { n: data.n(), inner: self.evaluate_inner(data)? })
    }

    fn evaluate_inner(&self, data: &Dataset) -> Result<Evaluated> {
        Ok(match self {
            FunctionClass::Finite { hypotheses } => {
                if hypotheses.is_empty() {
                    return Err(Error::input("finite class must not be empty"));
                }
                let rows = hypotheses.iter().map(|h| h.values_on(data)).collect::<Result<Vec<_>>>()?;
                Evaluated::Table(rows)
            }
            FunctionClass::Stumps => Evaluated::Stumps(FeatureSort::all(data)),
            FunctionClass::Intervals => Evaluated::Intervals(FeatureSort::all(data)),
            FunctionClass::ConvexHull { base } => Evaluated::Hull(Box::new(base.evaluate_inner(data)?)),
            FunctionClass::Max { arity, base } => {
                if *arity == 0 {
                    return Err(Error::domain("max-class arity must be positive"));
                }
                let rows = base.materialize(data)?;
                Evaluated::Table(max_combinations(&rows, *arity))
            }
        })
    }

    /// Value vectors of every member; only possible for classes with finitely
    /// many distinct restrictions to the sample that are not convex hulls.
    pub fn materialize(&self, data: &Dataset) -> Result<Vec<Vec<f64>>> {
        match self {
            FunctionClass::Finite { hypotheses } => hypotheses.iter().map(|h| h.values_on(data)).collect(),
            FunctionClass::Stumps => candidate_stumps(data).iter().map(|h| h.values_on(data)).collect(),
            FunctionClass::Intervals => candidate_intervals(data).iter().map(|h| h.values_on(data)).collect(),
            FunctionClass::Max { arity, base } => Ok(max_combinations(&base.materialize(data)?, *arity)),
            FunctionClass::ConvexHull { .. } => {
                Err(Error::Unsupported("a convex hull has no finite tabulation".into()))
            }
        }
    }
}

/// All stumps with thresholds between consecutive distinct feature values
/// (plus the two constant stumps per feature), both orientations.
pub fn candidate_stumps(data: &Dataset) -> Vec<BaseHypothesis> {
    let mut out = Vec::new();
    for (j, fs) in FeatureSort::all(data).iter().enumerate() {
        for &cut in &fs.cuts {
            let t = fs.stump_threshold(cut);
            out.push(BaseHypothesis::stump(j, t, Orientation::Positive));
            out.push(BaseHypothesis::stump(j, t, Orientation::Negative));
        }
    }
    out
}

/// All non-empty interval indicators with endpoints between consecutive
/// distinct feature values, both orientations.
pub fn candidate_intervals(data: &Dataset) -> Vec<BaseHypothesis> {
    let mut out = Vec::new();
    for (j, fs) in FeatureSort::all(data).iter().enumerate() {
        for (si, &start) in fs.cuts.iter().enumerate() {
            for &end in &fs.cuts[si + 1..] {
                let (a, b) = fs.interval_bounds(start, end);
                out.push(BaseHypothesis::interval(j, a, b, Orientation::Positive));
                out.push(BaseHypothesis::interval(j, a, b, Orientation::Negative));
            }
        }
    }
    out
}

fn max_combinations(rows: &[Vec<f64>], arity: usize) -> Vec<Vec<f64>> {
    // multisets of size `arity`; repeats give the base functions themselves
    let mut out = Vec::new();
    let mut idx = vec![0usize; arity];
    if rows.is_empty() {
        return out;
    }
    loop {
        let n = rows[0].len();
        let row: Vec<f64> = (0..n)
            .map(|i| idx.iter().map(|&k| rows[k][i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        out.push(row);
        let mut pos = arity;
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            if idx[pos] + 1 < rows.len() {
                idx[pos] += 1;
                let v = idx[pos];
                for later in idx.iter_mut().skip(pos + 1) {
                    *later = v;
                }
                break;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Evaluated {
    Table(Vec<Vec<f64>>),
    Stumps(Vec<FeatureSort>),
    Intervals(Vec<FeatureSort>),
    Hull(Box<Evaluated>),
}

/// A function class restricted to a fixed sample.
#[derive(Debug, Clone)]
pub struct EvaluatedClass {
    n: usize,
    inner: Evaluated,
}

impl EvaluatedClass {
    /// Explicit finite class given by its value vectors on the sample.
    pub fn from_table(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.first().map(Vec::len).ok_or_else(|| Error::input("empty class"))?;
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(Error::input("all rows must have the same nonzero length"));
        }
        Ok(Self { n, inner: Evaluated::Table(rows) })
    }

    pub fn convex_hull(self) -> Self {
        Self { n: self.n, inner: Evaluated::Hull(Box::new(self.inner)) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `sup_f |n^{-1} Σ ξ_i f(X_i)|` for one multiplier vector.
    pub fn supremum(&self, multipliers: &[f64]) -> f64 {
        assert_eq!(multipliers.len(), self.n, "one multiplier per sample");
        let raw = match &self.inner {
            Evaluated::Table(rows) => rows
                .iter()
                .map(|r| dot(r, multipliers).abs())
                .fold(0.0, f64::max),
            other => {
                let (hi, lo) = extremes(other, multipliers);
                hi.max(-lo)
            }
        };
        raw / self.n as f64
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `(max_f Σ ξ_i f(X_i), min_f Σ ξ_i f(X_i))` over the class.
fn extremes(class: &Evaluated, xi: &[f64]) -> (f64, f64) {
    match class {
        Evaluated::Table(rows) => rows.iter().map(|r| dot(r, xi)).fold(
            (f64::NEG_INFINITY, f64::INFINITY),
            |(hi, lo), v| (hi.max(v), lo.min(v)),
        ),
        Evaluated::Stumps(sorts) => {
            // stump at cut k: Σ_right ξ - Σ_left ξ = total - 2·prefix_k;
            // the negated orientation makes the class symmetric
            let total: f64 = xi.iter().sum();
            let mut best = 0.0f64;
            for fs in sorts {
                let mut prefix = 0.0;
                let mut pos = 0;
                for &cut in &fs.cuts {
                    while pos < cut {
                        prefix += xi[fs.order[pos]];
                        pos += 1;
                    }
                    best = best.max((total - 2.0 * prefix).abs());
                }
            }
            (best, -best)
        }
        Evaluated::Intervals(sorts) => {
            // interval over groups i..j: 2·S_in - total; |.| is convex in S_in
            // so only the largest and smallest contiguous group sums matter
            let total: f64 = xi.iter().sum();
            let mut best = 0.0f64;
            for fs in sorts {
                let groups: Vec<f64> = fs
                    .cuts
                    .windows(2)
                    .map(|w| fs.order[w[0]..w[1]].iter().map(|&i| xi[i]).sum())
                    .collect();
                let (max_sub, min_sub) = kadane(&groups);
                best = best.max((2.0 * max_sub - total).abs()).max((2.0 * min_sub - total).abs());
            }
            (best, -best)
        }
        // a linear functional over a convex hull is extremal at the generators
        Evaluated::Hull(base) => extremes(base, xi),
    }
}

/// Largest and smallest sums over non-empty contiguous runs.
fn kadane(xs: &[f64]) -> (f64, f64) {
    let (mut best_hi, mut best_lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut cur_hi, mut cur_lo) = (0.0f64, 0.0f64);
    for (k, &x) in xs.iter().enumerate() {
        if k == 0 {
            cur_hi = x;
            cur_lo = x;
        } else {
            cur_hi = x.max(cur_hi + x);
            cur_lo = x.min(cur_lo + x);
        }
        best_hi = best_hi.max(cur_hi);
        best_lo = best_lo.min(cur_lo);
    }
    (best_hi, best_lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplier {
    Rademacher,
    Gaussian,
}

impl Multiplier {
    pub fn draw(self, rng: &mut rng::Rng, n: usize) -> Vec<f64> {
        match self {
            Multiplier::Rademacher => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
            Multiplier::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        }
    }
}

/// Monte Carlo complexity estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub value: f64,
    pub std_error: f64,
    pub draws: usize,
    pub kind: Multiplier,
    pub seed: u64,
}

impl ComplexityEstimate {
    pub fn from_draws(suprema: &[f64], kind: Multiplier, seed: u64) -> Self {
        let b = suprema.len();
        let mean = suprema.iter().sum::<f64>() / b as f64;
        let std_error = if b > 1 {
            let var = suprema.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
            var.sqrt() / (b as f64).sqrt()
        } else {
            0.0
        };
        Self { value: mean, std_error, draws: b, kind, seed }
    }
}

/// Per-draw suprema for draws `0..draws` of `seed`.
pub fn draw_suprema(class: &EvaluatedClass, kind: Multiplier, draws: usize, seed: u64) -> Vec<f64> {
    (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::substream(seed, b as u64);
            class.supremum(&kind.draw(&mut r, class.n()))
        })
        .collect()
}

pub fn estimate(class: &EvaluatedClass, kind: Multiplier, draws: usize, seed: u64) -> Result<ComplexityEstimate> {
    if draws == 0 {
        return Err(Error::input("need at least one draw"));
    }
    Ok(ComplexityEstimate::from_draws(&draw_suprema(class, kind, draws, seed), kind, seed))
}

/// Monte Carlo estimate of `R_n(F)` on `data`.
pub fn estimate_rademacher(class: &FunctionClass, data: &Dataset, draws: usize, seed: u64) -> Result<ComplexityEstimate> {
    estimate(&class.evaluate(data)?, Multiplier::Rademacher, draws, seed)
}

/// Monte Carlo estimate of `G_n(F)` on `data`.
pub fn estimate_gaussian(class: &FunctionClass, data: &Dataset, draws: usize, seed: u64) -> Result<ComplexityEstimate> {
    estimate(&class.evaluate(data)?, Multiplier::Gaussian, draws, seed)
}

/// Exact conditional Rademacher average by enumerating all `2^n` sign vectors.
pub fn exact_rademacher_small_n(class: &FunctionClass, data: &Dataset) -> Result<f64> {
    exact_rademacher_evaluated(&class.evaluate(data)?)
}

pub fn exact_rademacher_evaluated(class: &EvaluatedClass) -> Result<f64> {
    let n = class.n();
    if n > EXACT_ENUMERATION_MAX_N {
        return Err(Error::domain(format!(
            "exact enumeration supports n <= {EXACT_ENUMERATION_MAX_N}, got n = {n}"
        )));
    }
    let total: f64 = (0u32..1 << n)
        .into_par_iter()
        .map(|mask| {
            let signs: Vec<f64> = (0..n).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect();
            class.supremum(&signs)
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(total / f64::from(1u32 << n))
}

/// Closed-form VC bound `C·sqrt(V/n)` on the Rademacher complexity.
pub fn vc_complexity_bound(vc_dim: u32, n: usize, c: f64) -> Result<f64> {
    if vc_dim < 1 || n < 1 || c <= 0.0 {
        return Err(Error::domain("need V >= 1, n >= 1, C > 0"));
    }
    Ok(c * (f64::from(vc_dim) / n as f64).sqrt())
}
