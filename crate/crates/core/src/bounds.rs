//! Data-dependent margin bounds on generalization error.
//!
//! Every evaluator returns a [`BoundReport`] whose `bound_value` is the sum of
//! its four named terms at the minimizing scale `delta`:
//!
//! ```text
//! empirical_cost + complexity_term + loglog_term + confidence_term
//! ```
//!
//! Logarithms are natural except for the `log₂` inside `log log₂(2/δ)`.

use serde::{Deserialize, Serialize};

use crate::boosting::BoostingTrace;
use crate::complexity::{ComplexityEstimate, Multiplier};
use crate::data::MarginDistribution;
use crate::error::{Error, Result};

pub const DEFAULT_T: f64 = 2.0;

/// Constant in front of `R_n / δ`.
pub const RADEMACHER_FACTOR: f64 = 8.0;

/// Constant `2√(2π)` in front of `G_n / δ`.
pub fn gaussian_factor() -> f64 {
    2.0 * (2.0 * std::f64::consts::PI).sqrt()
}

/// Lipschitz margin cost functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostFunction {
    /// 1 on `(-∞, 0]`, 0 on `[1, ∞)`, linear in between.
    UpperStep,
    /// 1 on `(-∞, -1]`, 0 on `[0, ∞)`, linear in between.
    LowerStep,
    /// Linear interpolation of knots sorted by abscissa, constant outside.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl Default for CostFunction {
    fn default() -> Self {
        CostFunction::UpperStep
    }
}

impl CostFunction {
    pub fn piecewise_linear(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.is_empty() || knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(Error::input("piecewise-linear cost needs finite knots"));
        }
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::input("knot abscissae must be distinct"));
        }
        Ok(CostFunction::PiecewiseLinear { knots })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CostFunction::UpperStep => (1.0 - x).clamp(0.0, 1.0),
            CostFunction::LowerStep => (-x).clamp(0.0, 1.0),
            CostFunction::PiecewiseLinear { knots } => {
                let k = knots.partition_point(|p| p.0 <= x);
                if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let (x0, y0) = knots[k - 1];
                    let (x1, y1) = knots[k];
                    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
                }
            }
        }
    }

    /// Lipschitz constant: the largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        match self {
            CostFunction::UpperStep | CostFunction::LowerStep => 1.0,
            CostFunction::PiecewiseLinear { knots } => knots
                .windows(2)
                .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// Where the complexity number fed into a bound came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum ComplexitySource {
    MonteCarlo { kind: Multiplier, draws: usize, seed: u64 },
    VcClosedForm { vc_dim: u32, constant: f64 },
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInput {
    pub value: f64,
    pub std_error: f64,
    /// Rademacher or Gaussian; fixes the constants of the bound.
    pub kind: Multiplier,
    #[serde(flatten)]
    pub source: ComplexitySource,
}

impl ComplexityInput {
    pub fn rademacher(value: f64) -> Self {
        Self { value, std_error: 0.0, kind: Multiplier::Rademacher, source: ComplexitySource::Given }
    }

    pub fn gaussian(value: f64) -> Self {
        Self { value, std_error: 0.0, kind: Multiplier::Gaussian, source: ComplexitySource::Given }
    }

    pub fn vc(vc_dim: u32, n: usize, constant: f64) -> Result<Self> {
        Ok(Self {
            value: crate::complexity::vc_complexity_bound(vc_dim, n, constant)?,
            std_error: 0.0,
            kind: Multiplier::Rademacher,
            source: ComplexitySource::VcClosedForm { vc_dim, constant },
        })
    }

    fn check(&self) -> Result<()> {
        if !(self.value >= 0.0) || !self.value.is_finite() {
            return Err(Error::domain("complexity must be finite and nonnegative"));
        }
        Ok(())
    }
}

impl From<&ComplexityEstimate> for ComplexityInput {
    fn from(e: &ComplexityEstimate) -> Self {
        Self {
            value: e.value,
            std_error: e.std_error,
            kind: e.kind,
            source: ComplexitySource::MonteCarlo { kind: e.kind, draws: e.draws, seed: e.seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// One-sided upper bound via a margin cost function.
    T2,
    /// Two-sided deviation bound.
    T4,
    /// Multiclass upper bound.
    T11,
    /// Exponential-loss product bound for AdaBoost.
    Adaboost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    pub empirical_cost: f64,
    pub complexity_term: f64,
    pub loglog_term: f64,
    pub confidence_term: f64,
}

impl BoundTerms {
    pub fn total(&self) -> f64 {
        self.empirical_cost + self.complexity_term + self.loglog_term + self.confidence_term
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub variant: BoundVariant,
    pub bound_value: f64,
    pub terms: BoundTerms,
    pub delta: f64,
    pub t: f64,
    pub n: usize,
    pub complexity: ComplexityInput,
    /// Probability with which the bound holds; clamped below at zero.
    pub confidence: f64,
}

fn report(variant: BoundVariant, terms: BoundTerms, delta: f64, t: f64, n: usize, complexity: ComplexityInput, failure_factor: f64) -> BoundReport {
    BoundReport {
        variant,
        bound_value: terms.total(),
        terms,
        delta,
        t,
        n,
        complexity,
        confidence: (1.0 - failure_factor * (-2.0 * t * t).exp()).max(0.0),
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(())
}

fn check_common(n: usize, t: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size must be positive"));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("t must be positive"));
    }
    Ok(())
}

/// `sqrt(log log₂(2/δ) / n)`.
pub fn loglog_term(delta: f64, n: usize) -> f64 {
    ((2.0 / delta).log2().ln().max(0.0) / n as f64).sqrt()
}

/// `Δ_n(F; δ) = 8 R_n / δ + sqrt(log log₂(2/δ) / n)`.
pub fn delta_n(rn: f64, delta: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if !(rn >= 0.0) || n == 0 {
        return Err(Error::domain("need R_n >= 0 and n >= 1"));
    }
    Ok(RADEMACHER_FACTOR * rn / delta + loglog_term(delta, n))
}

/// Dyadic scales `2^-k, k = 0..=ceil(log₂ n)`, together with the distinct
/// positive margins clipped to `(0, 1]`; sorted, duplicates removed.
pub fn default_delta_grid(margins: &MarginDistribution, n: usize) -> Vec<f64> {
    let kmax = (n.max(1) as f64).log2().ceil() as i32;
    let mut grid: Vec<f64> = (0..=kmax).map(|k| 2f64.powi(-k)).collect();
    grid.extend(margins.positive_values_clipped());
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::input("delta grid must not be empty"));
    }
    grid.iter().try_for_each(|&d| check_delta(d))
}

/// Minimizes `terms(δ)` over the grid; first minimizer in grid order wins.
fn minimize(grid: &[f64], terms: impl Fn(f64) -> BoundTerms) -> (f64, BoundTerms) {
    let mut best: Option<(f64, BoundTerms)> = None;
    for &d in grid {
        let t = terms(d);
        if best.as_ref().map_or(true, |(_, b)| t.total() < b.total()) {
            best = Some((d, t));
        }
    }
    best.expect("grid checked non-empty")
}

/// Upper bound on `P{f <= 0}` from a margin cost function:
/// `inf_δ [P_n φ(f/δ) + c L(φ) Rn/δ + loglog(δ)] + offset`, where
/// `(c, offset) = (8, t/√n)` for Rademacher and `(2√(2π), (t+2)/√n)` for
/// Gaussian complexities.
pub fn theorem2_bound(
    margins: &MarginDistribution,
    complexity: &ComplexityInput,
    cost: &CostFunction,
    n: usize,
    t: f64,
    grid: &[f64],
) -> Result<BoundReport> {
    check_common(n, t)?;
    check_grid(grid)?;
    complexity.check()?;
    let (factor, offset) = match complexity.kind {
        Multiplier::Rademacher => (RADEMACHER_FACTOR, t),
        Multiplier::Gaussian => (gaussian_factor(), t + 2.0),
    };
    let lip = cost.lipschitz();
    let rn = complexity.value;
    let sqrt_n = (n as f64).sqrt();
    let (delta, terms) = minimize(grid, |d| BoundTerms {
        empirical_cost: margins.expect(|m| cost.eval(m / d)),
        complexity_term: factor * lip * rn / d,
        loglog_term: loglog_term(d, n),
        confidence_term: offset / sqrt_n,
    });
    Ok(report(BoundVariant::T2, terms, delta, t, n, complexity.clone(), 2.0))
}

/// Two-sided bound on `|P_n{f <= 0} - P{f <= 0}|`:
/// `inf_δ [P_n{|f| <= δ} + Δ_n(F; δ)] + t/√n`, failure probability `4e^{-2t²}`.
pub fn theorem4_two_sided(
    margins: &MarginDistribution,
    complexity: &ComplexityInput,
    n: usize,
    t: f64,
    grid: &[f64],
) -> Result<BoundReport> {
    check_common(n, t)?;
    check_grid(grid)?;
    complexity.check()?;
    let rn = complexity.value;
    let sqrt_n = (n as f64).sqrt();
    let (delta, terms) = minimize(grid, |d| BoundTerms {
        empirical_cost: margins.mass_abs_le(d),
        complexity_term: RADEMACHER_FACTOR * rn / d,
        loglog_term: loglog_term(d, n),
        confidence_term: t / sqrt_n,
    });
    Ok(report(BoundVariant::T4, terms, delta, t, n, complexity.clone(), 4.0))
}

/// Plug-in scale `H_{n,f}^{-1}(R_n) ∧ 1` with `H_{n,f}(δ) = δ P_n{|f| <= δ}`:
/// the supremum of `{δ ∈ (0, 1] : H_{n,f}(δ) <= R_n}`, found by an exact sweep
/// over the sorted `|margins|`.
pub fn plug_in_delta(margins: &MarginDistribution, rn: f64) -> Result<f64> {
    if !(rn >= 0.0) {
        return Err(Error::domain("R_n must be nonnegative"));
    }
    let mut abs: Vec<(f64, f64)> = margins.points().iter().map(|&(v, w)| (v.abs(), w)).collect();
    abs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // segments [lo, hi) on which P_n{|f| <= δ} is constant
    let mut mass = 0.0;
    let mut lo = 0.0;
    let mut k = 0;
    while k < abs.len() && abs[k].0 <= 0.0 {
        mass += abs[k].1;
        k += 1;
    }
    loop {
        let hi = if k < abs.len() { abs[k].0.min(1.0) } else { 1.0 };
        let reach = if mass > 0.0 { rn / mass } else { f64::INFINITY };
        if hi >= 1.0 {
            // last segment, closed at 1
            return Ok(if reach >= 1.0 { 1.0 } else if reach >= lo { reach } else { lo });
        }
        if reach < lo {
            return Ok(lo);
        }
        if reach < hi {
            return Ok(reach);
        }
        lo = hi;
        let v = abs[k].0;
        while k < abs.len() && abs[k].0 == v {
            mass += abs[k].1;
            k += 1;
        }
    }
}

/// Two-sided bound evaluated at the plug-in scale:
/// `9 R_n/δ + sqrt(log log₂(2/δ)/n) + t/√n`.
pub fn plug_in_two_sided_bound(margins: &MarginDistribution, complexity: &ComplexityInput, n: usize, t: f64) -> Result<BoundReport> {
    check_common(n, t)?;
    complexity.check()?;
    let rn = complexity.value;
    let delta = plug_in_delta(margins, rn)?;
    if delta <= 0.0 {
        return Err(Error::domain("plug-in scale is zero; margins have an atom at 0 and R_n = 0"));
    }
    let terms = BoundTerms {
        empirical_cost: 0.0,
        complexity_term: 9.0 * rn / delta,
        loglog_term: loglog_term(delta, n),
        confidence_term: t / (n as f64).sqrt(),
    };
    Ok(report(BoundVariant::T4, terms, delta, t, n, complexity.clone(), 4.0))
}

/// Multiclass factor `8 M (2M - 1)`.
pub fn multiclass_factor(classes: usize) -> Result<f64> {
    if classes < 2 {
        return Err(Error::domain(format!("need M >= 2 classes, got {classes}")));
    }
    let m = classes as f64;
    Ok(8.0 * m * (2.0 * m - 1.0))
}

/// Multiclass bound
/// `inf_δ [P_n{m_f <= δ} + 8M(2M-1) R_n/δ + loglog(δ)] + t/√n`,
/// with `R_n` the complexity of the per-label score class.
pub fn theorem11_multiclass_bound(
    margins: &MarginDistribution,
    complexity: &ComplexityInput,
    classes: usize,
    n: usize,
    t: f64,
    grid: &[f64],
) -> Result<BoundReport> {
    let factor = multiclass_factor(classes)?;
    check_common(n, t)?;
    check_grid(grid)?;
    complexity.check()?;
    let rn = complexity.value;
    let sqrt_n = (n as f64).sqrt();
    let (delta, terms) = minimize(grid, |d| BoundTerms {
        empirical_cost: margins.cdf(d),
        complexity_term: factor * rn / d,
        loglog_term: loglog_term(d, n),
        confidence_term: t / sqrt_n,
    });
    Ok(report(BoundVariant::T11, terms, delta, t, n, complexity.clone(), 2.0))
}

/// `2 sqrt(e (1 - e))`.
pub fn exp_loss_factor(e: f64) -> f64 {
    2.0 * (e * (1.0 - e)).sqrt()
}

/// AdaBoost bound
/// `∏ 2√(e_k(1-e_k)) + 8 (Σα_k ∨ 1) R_n(H) + sqrt(log log₂(2(Σα_k ∨ 1))/n) + t/√n`.
///
/// Rounds whose error was clamped contribute their recorded normalizer `Z_k`
/// (the exact exponential-loss factor) instead of the closed form.
pub fn adaboost_product_bound(trace: &BoostingTrace, complexity: &ComplexityInput, n: usize, t: f64) -> Result<BoundReport> {
    check_common(n, t)?;
    complexity.check()?;
    if trace.rounds.is_empty() {
        return Err(Error::Trace("boosting trace has no rounds".into()));
    }
    let mut product = 1.0;
    let mut alpha_sum = 0.0;
    for (k, r) in trace.rounds.iter().enumerate() {
        if !(r.error > 0.0 && r.error <= 0.5) {
            return Err(Error::Trace(format!("round {}: weighted error {} outside (0, 1/2]", k + 1, r.error)));
        }
        product *= if r.clamped { r.z } else { exp_loss_factor(r.error) };
        alpha_sum += r.alpha;
    }
    let scale = alpha_sum.max(1.0);
    let terms = BoundTerms {
        empirical_cost: product,
        complexity_term: RADEMACHER_FACTOR * scale * complexity.value,
        loglog_term: ((2.0 * scale).log2().ln().max(0.0) / n as f64).sqrt(),
        confidence_term: t / (n as f64).sqrt(),
    };
    Ok(report(BoundVariant::Adaboost, terms, 1.0 / scale, t, n, complexity.clone(), 2.0))
}

/// `(δ, bound(δ))` pairs of the margin-cost bound at each fixed δ, for plotting.
pub fn theorem2_curve(
    margins: &MarginDistribution,
    complexity: &ComplexityInput,
    cost: &CostFunction,
    n: usize,
    t: f64,
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    grid.iter()
        .map(|&d| theorem2_bound(margins, complexity, cost, n, t, &[d]).map(|r| (d, r.bound_value)))
        .collect()
}
