//! γ-margins and γ-bounds.
//!
//! For `γ ∈ (0, 1]` and a margin distribution `F`, the γ-margin is
//!
//! ```text
//! sup{ δ ∈ (0, 1) : δ^γ F(δ) <= n^{-1+γ/2} }
//! ```
//!
//! (capped at 1), computed exactly: `δ ↦ δ^γ F(δ)` is nondecreasing, so the
//! feasible set is an initial interval and a sweep over the sorted margins
//! with a closed-form solve inside each constant-mass segment finds its end.
//! With the empirical distribution this is the empirical γ-margin; with an
//! exact distribution it is the true γ-margin.

use serde::{Deserialize, Serialize};

use crate::data::MarginDistribution;
use crate::error::{Error, Result};

/// How the supremum was determined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaMarginEnd {
    /// The constraint holds on all of `(0, 1)`.
    Capped,
    /// `δ^γ · mass = T` inside a segment of constant mass.
    Binding { mass: f64 },
    /// The constraint fails right at a jump of the distribution; the
    /// supremum is the (excluded) jump location.
    Jump,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaMarginResult {
    pub gamma: f64,
    pub delta_hat: f64,
    pub gamma_bound: f64,
    pub n: usize,
    pub c_gamma: f64,
    pub end: GammaMarginEnd,
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::domain(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

/// `n^{-1+γ/2}`.
pub fn gamma_threshold(gamma: f64, n: usize) -> f64 {
    (n as f64).powf(-1.0 + gamma / 2.0)
}

/// γ-margin of `margins` together with the way the supremum was reached.
pub fn gamma_margin_detailed(margins: &MarginDistribution, gamma: f64, n: usize) -> Result<(f64, GammaMarginEnd)> {
    check_gamma(gamma)?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let target = gamma_threshold(gamma, n);
    let pts = margins.points();
    // mass of {m <= δ} for δ just above 0
    let mut k = pts.partition_point(|p| p.0 <= 0.0);
    let mut mass: f64 = pts[..k].iter().map(|p| p.1).sum();
    let mut lo = 0.0;
    loop {
        let hi = if k < pts.len() { pts[k].0.min(1.0) } else { 1.0 };
        let reach = if mass > 0.0 { (target / mass).powf(1.0 / gamma) } else { f64::INFINITY };
        if reach < lo {
            return Ok((lo, GammaMarginEnd::Jump));
        }
        if reach < hi {
            return Ok((reach, GammaMarginEnd::Binding { mass }));
        }
        if hi >= 1.0 {
            return Ok((1.0, GammaMarginEnd::Capped));
        }
        lo = hi;
        mass += pts[k].1;
        k += 1;
    }
}

/// Empirical γ-margin `δ̂_n(γ; f)` of an empirical margin distribution.
pub fn empirical_gamma_margin(margins: &MarginDistribution, gamma: f64, n: usize) -> Result<f64> {
    gamma_margin_detailed(margins, gamma, n).map(|r| r.0)
}

/// True γ-margin `δ_n(γ; f)` of an exact margin distribution.
pub fn true_gamma_margin(exact: &MarginDistribution, gamma: f64, n: usize) -> Result<f64> {
    gamma_margin_detailed(exact, gamma, n).map(|r| r.0)
}

/// γ-bound `C_γ / (n^{1-γ/2} δ̂^γ)`.
pub fn gamma_bound(delta_hat: f64, gamma: f64, n: usize, c_gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !(delta_hat > 0.0) || n == 0 || !(c_gamma > 0.0) {
        return Err(Error::domain("gamma bound needs positive inputs"));
    }
    Ok(c_gamma * gamma_threshold(gamma, n) / delta_hat.powf(gamma))
}

/// γ-margin and γ-bound. When the constraint binds inside a segment,
/// `δ̂^γ = n^{-1+γ/2} / mass` and the bound reduces to `C_γ · mass`.
pub fn gamma_margin_result(margins: &MarginDistribution, gamma: f64, n: usize, c_gamma: f64) -> Result<GammaMarginResult> {
    let (delta_hat, end) = gamma_margin_detailed(margins, gamma, n)?;
    let bound = match end {
        GammaMarginEnd::Binding { mass } => c_gamma * mass,
        _ => gamma_bound(delta_hat, gamma, n, c_gamma)?,
    };
    Ok(GammaMarginResult { gamma, delta_hat, gamma_bound: bound, n, c_gamma, end })
}

/// Entropy exponent `α = 2(V-1)/V` of the convex hull of a VC class and the
/// smallest admissible `γ* = 2α/(2+α) = 2(V-1)/(2V-1)`.
pub fn gamma_threshold_from_vc(vc_dim: u32) -> Result<(f64, f64)> {
    if vc_dim < 1 {
        return Err(Error::domain("VC dimension must be at least 1"));
    }
    let v = f64::from(vc_dim);
    let alpha = 2.0 * (v - 1.0) / v;
    Ok((alpha, 2.0 * alpha / (2.0 + alpha)))
}
