//! Lévy distance between step distribution functions, the concentration
//! bound for margin distributions, truncation, and the convergence-rate
//! experiment on the class of coordinate projections.

use rand::Rng as _;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::MarginDistribution;
use crate::error::{Error, Result};
use crate::rng::{self, tags};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_K_MAX: u64 = 10_000;

/// A right-continuous step CDF: `F(t) = masses[i]` for
/// `points[i] <= t < points[i + 1]`, zero left of the first point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl StepCdf {
    pub fn new(points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != masses.len() {
            return Err(Error::input("step CDF needs equally many (nonzero) points and masses"));
        }
        if points.windows(2).any(|w| !(w[0] < w[1])) || points.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("step CDF points must be finite and strictly increasing"));
        }
        if masses.windows(2).any(|w| w[0] > w[1]) || masses[0] < 0.0 {
            return Err(Error::input("step CDF masses must be nondecreasing and nonnegative"));
        }
        if (masses[masses.len() - 1] - 1.0).abs() > 1e-9 {
            return Err(Error::input("step CDF must end at 1"));
        }
        let mut masses = masses;
        *masses.last_mut().unwrap() = 1.0;
        Ok(Self { points, masses })
    }

    pub fn from_distribution(d: &MarginDistribution) -> Self {
        let mut acc = 0.0;
        let mut points = Vec::with_capacity(d.len());
        let mut masses = Vec::with_capacity(d.len());
        for &(v, w) in d.points() {
            acc += w;
            points.push(v);
            masses.push(acc);
        }
        *masses.last_mut().unwrap() = 1.0;
        Self { points, masses }
    }

    pub fn to_distribution(&self) -> MarginDistribution {
        let mut prev = 0.0;
        let pts = self
            .points
            .iter()
            .zip(&self.masses)
            .map(|(&p, &m)| {
                let w = m - prev;
                prev = m;
                (p, w)
            })
            .collect();
        MarginDistribution::from_weighted(pts).expect("a valid step CDF is a valid distribution")
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn eval(&self, t: f64) -> f64 {
        let k = self.points.partition_point(|&p| p <= t);
        if k == 0 {
            0.0
        } else {
            self.masses[k - 1]
        }
    }
}

impl From<&MarginDistribution> for StepCdf {
    fn from(d: &MarginDistribution) -> Self {
        StepCdf::from_distribution(d)
    }
}

/// `F(x) <= G(x + δ) + δ` at every jump `x` of `F`, which suffices because
/// `F` is constant between jumps and `G(· + δ)` is nondecreasing.
fn one_sided(f: &StepCdf, g: &StepCdf, delta: f64) -> bool {
    let mut j = 0;
    for (&x, &fx) in f.points.iter().zip(&f.masses) {
        let y = x + delta;
        while j < g.points.len() && g.points[j] <= y {
            j += 1;
        }
        let gy = if j == 0 { 0.0 } else { g.masses[j - 1] };
        if fx > gy + delta {
            return false;
        }
    }
    true
}

fn feasible(f: &StepCdf, g: &StepCdf, delta: f64) -> bool {
    one_sided(f, g, delta) && one_sided(g, f, delta)
}

/// `sup_t |F(t) - G(t)|`, attained at a jump of either function.
pub fn kolmogorov_distance(f: &StepCdf, g: &StepCdf) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fv, mut gv) = (0.0f64, 0.0f64);
    let mut best = 0.0f64;
    while i < f.points.len() || j < g.points.len() {
        let x = match (f.points.get(i), g.points.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < f.points.len() && f.points[i] == x {
            fv = f.masses[i];
            i += 1;
        }
        while j < g.points.len() && g.points[j] == x {
            gv = g.masses[j];
            j += 1;
        }
        best = best.max((fv - gv).abs());
    }
    best
}

/// Lévy distance `inf{δ > 0 : F(t) <= G(t+δ)+δ, G(t) <= F(t+δ)+δ ∀t}`,
/// by bisection to within `tol` from above. The Kolmogorov distance is
/// always feasible and seeds the upper end, so the result never exceeds it.
pub fn levy_distance(f: &StepCdf, g: &StepCdf, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    if feasible(f, g, 0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, kolmogorov_distance(f, g).min(1.0));
    while hi - lo > tol {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(f, g, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Lévy distance between margin distributions.
pub fn levy_distance_margins(f: &MarginDistribution, g: &MarginDistribution, tol: f64) -> Result<f64> {
    levy_distance(&StepCdf::from(f), &StepCdf::from(g), tol)
}

/// Concentration bound `2 (R_n + M/√n)^{1/2} + t/√n` on
/// `sup_f L(F_{n,f}, F_f)`, valid with probability at least `1 - e^{-2t²}`.
pub fn theorem10_bound(rn: f64, m: f64, n: usize, t: f64) -> Result<f64> {
    if !(rn >= 0.0) || !(m > 0.0) || !(t > 0.0) || n == 0 {
        return Err(Error::domain("need R_n >= 0, M > 0, t > 0 and n >= 1"));
    }
    let sn = (n as f64).sqrt();
    Ok(2.0 * (rn + m / sn).sqrt() + t / sn)
}

/// Confidence `1 - e^{-2t²}` of [`theorem10_bound`].
pub fn theorem10_confidence(t: f64) -> f64 {
    1.0 - (-2.0 * t * t).exp()
}

/// Clamps every value into `[-M, M]`, merging mass at the ends.
pub fn truncate_margins(d: &MarginDistribution, m: f64) -> Result<MarginDistribution> {
    if !(m > 0.0) {
        return Err(Error::domain("truncation level must be positive"));
    }
    Ok(d.map_values(|v| v.clamp(-m, m)))
}

pub fn truncate_cdf(f: &StepCdf, m: f64) -> Result<StepCdf> {
    truncate_margins(&f.to_distribution(), m).map(|d| StepCdf::from(&d))
}

/// Coordinate-projection class with coordinates
/// `ε_k (2 ln(k+1))^{-1/2-β}`, `β = 1/α - 1/2`, and i.i.d. signs `ε_k`.
/// `k_max = None` keeps every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionClassConfig {
    pub alpha: f64,
    pub k_max: Option<u64>,
}

impl ProjectionClassConfig {
    pub fn new(alpha: f64, k_max: Option<u64>) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!("alpha must lie in (0, 2], got {alpha}")));
        }
        if k_max == Some(0) {
            return Err(Error::domain("k_max must be at least 1"));
        }
        Ok(Self { alpha, k_max })
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.alpha - 0.5
    }

    /// `|x_k| = (2 ln(k+1))^{-1/2-β} = (2 ln(k+1))^{-1/α}`.
    pub fn amplitude(&self, k: u64) -> f64 {
        (2.0 * ((k + 1) as f64).ln()).powf(-1.0 / self.alpha)
    }

    /// Number of coordinates with `2|x_k| > x`.
    fn count_above(&self, x: f64) -> CoordCount {
        // 2 a_k > x  <=>  ln(k+1) < (2/x)^α / 2
        let l = (2.0 / x).powf(self.alpha) / 2.0;
        let raw = if l < 700.0 {
            let e = l.exp();
            let c = e.ceil() - 2.0;
            CoordCount::Finite(c.max(0.0))
        } else {
            CoordCount::Log(l)
        };
        match (raw, self.k_max) {
            (CoordCount::Finite(c), Some(k)) => CoordCount::Finite(c.min(k as f64)),
            (CoordCount::Log(_), Some(k)) => CoordCount::Finite(k as f64),
            (r, None) => r,
        }
    }

    /// Expected rate exponent `-1/(2+α)`.
    pub fn expected_slope(&self) -> f64 {
        -1.0 / (2.0 + self.alpha)
    }
}

#[derive(Debug, Clone, Copy)]
enum CoordCount {
    Finite(f64),
    /// Natural log of an astronomically large count.
    Log(f64),
}

/// Lévy distance between the laws with masses `1-p, p` and `1-q, q` on
/// `{-a, a}`: `min(|p - q|, 2a)`.
pub fn two_point_levy(p: f64, q: f64, a: f64) -> f64 {
    (p - q).abs().min(2.0 * a)
}

/// Two-point CDF with mass `1-p` at `-a` and `p` at `a`.
pub fn two_point_cdf(p: f64, a: f64) -> StepCdf {
    if p <= 0.0 {
        StepCdf { points: vec![-a], masses: vec![1.0] }
    } else if p >= 1.0 {
        StepCdf { points: vec![a], masses: vec![1.0] }
    } else {
        StepCdf { points: vec![-a, a], masses: vec![1.0 - p, 1.0] }
    }
}

/// Result of one simulated supremum over the projection class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSup {
    pub value: f64,
    /// Maximizing coordinate (direct simulation only).
    pub argmax: Option<u64>,
    pub hit_boundary: bool,
}

/// Simulates `n` draws of the truncated sequence and returns
/// `max_{k <= K_max} L(F_{n,f_k}, F_{f_k})`. Each coordinate's positive
/// count is drawn directly as `Binomial(n, 1/2)`.
pub fn projection_class_levy_sup(config: &ProjectionClassConfig, n: usize, seed: u64) -> Result<ProjectionSup> {
    let k_max = config
        .k_max
        .ok_or_else(|| Error::input("direct simulation needs a finite k_max"))?;
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let mut r = rng::substream(seed, 0);
    let bin = Binomial::new(n as u64, 0.5).map_err(|e| Error::domain(e.to_string()))?;
    let mut best = (f64::NEG_INFINITY, 1);
    for k in 1..=k_max {
        let p = bin.sample(&mut r) as f64 / n as f64;
        let d = two_point_levy(p, 0.5, config.amplitude(k));
        if d > best.0 {
            best = (d, k);
        }
    }
    Ok(ProjectionSup { value: best.0, argmax: Some(best.1), hit_boundary: best.1 == k_max })
}

/// Law of `D = |Bin(n, 1/2)/n - 1/2|` in log space.
struct HalfBinomial {
    n: usize,
    // ln P(Bin <= j) for j = 0..=n
    log_cdf: Vec<f64>,
}

impl HalfBinomial {
    fn new(n: usize) -> Self {
        let mut log_pmf = Vec::with_capacity(n + 1);
        let mut lp = -(n as f64) * std::f64::consts::LN_2;
        log_pmf.push(lp);
        for j in 0..n {
            lp += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
            log_pmf.push(lp);
        }
        let mut log_cdf = Vec::with_capacity(n + 1);
        let mut acc = f64::NEG_INFINITY;
        for &l in &log_pmf {
            acc = log_add(acc, l);
            log_cdf.push(acc);
        }
        Self { n, log_cdf }
    }

    fn d_value(&self, j: usize) -> f64 {
        (j as f64 / self.n as f64 - 0.5).abs()
    }

    /// `ln P(D > x)`.
    fn log_tail(&self, x: f64) -> f64 {
        // count j with D(j) > x among j < n/2; by symmetry the upper tail matches
        let half = self.n / 2;
        let mut lo = 0usize;
        let mut hi = if self.n % 2 == 0 { half } else { half + 1 };
        // D is decreasing on 0..hi: find first j with D(j) <= x
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.d_value(mid) > x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            f64::NEG_INFINITY
        } else {
            std::f64::consts::LN_2 + self.log_cdf[lo - 1]
        }
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (m, s) = if a > b { (a, b) } else { (b, a) };
    m + (s - m).exp().ln_1p()
}

/// `ln(-ln G(x))` for `G(x) = P(sup <= x) = P(D <= x)^{N(x)}`, or
/// `-inf` when `G(x) = 1`.
fn log_neg_log_sup_cdf(config: &ProjectionClassConfig, law: &HalfBinomial, x: f64) -> f64 {
    let lt = law.log_tail(x);
    if lt == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let tail = lt.exp();
    // -ln P(D <= x) = -ln(1 - tail)
    let neg_log_p = if tail > 1e-8 { (-(-tail).ln_1p()).ln() } else { lt + (tail / 2.0).ln_1p() };
    let log_count = match config.count_above(x) {
        CoordCount::Finite(c) if c <= 0.0 => return f64::NEG_INFINITY,
        CoordCount::Finite(c) => c.ln(),
        CoordCount::Log(l) => l,
    };
    log_count + neg_log_p
}

/// Draws `sup_k L(F_{n,f_k}, F_{f_k})` exactly by inverting
/// `P(sup <= x) = P(D <= x)^{N(x)}`, where `D = |p̂ - 1/2|` and `N(x)`
/// counts coordinates with `2|x_k| > x`. Handles `k_max = None`.
pub fn sample_projection_sup(config: &ProjectionClassConfig, n: usize, rng: &mut rng::Rng) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("n must be positive"));
    }
    let law = HalfBinomial::new(n);
    Ok(sample_with_law(config, &law, rng))
}

fn sample_with_law(config: &ProjectionClassConfig, law: &HalfBinomial, rng: &mut rng::Rng) -> f64 {
    let u: f64 = rng.random::<f64>();
    let u = u.max(f64::MIN_POSITIVE);
    // G(x) >= u  <=>  ln(-ln G(x)) <= ln(-ln u)
    let target = (-u.ln()).ln();
    let ok = |x: f64| log_neg_log_sup_cdf(config, law, x) <= target;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if ok(lo) {
        return 0.0;
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) / 2.0;
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyRatePoint {
    pub n: usize,
    pub median_distance: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyRateReport {
    pub alpha: f64,
    pub k_max: Option<u64>,
    pub replicates: usize,
    pub seed: u64,
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
    pub expected_slope: f64,
    pub points: Vec<LevyRatePoint>,
}

/// `npoints` log-spaced sample sizes from `nmin` to `nmax`.
pub fn log_spaced(nmin: usize, nmax: usize, npoints: usize) -> Result<Vec<usize>> {
    if nmin == 0 || nmax < nmin || npoints < 2 {
        return Err(Error::domain("need 1 <= nmin <= nmax and at least two points"));
    }
    let (a, b) = ((nmin as f64).ln(), (nmax as f64).ln());
    let mut out: Vec<usize> = (0..npoints)
        .map(|i| (a + (b - a) * i as f64 / (npoints - 1) as f64).exp().round() as usize)
        .collect();
    out.dedup();
    Ok(out)
}

/// Ordinary least squares of `y` on `x`: `(slope, intercept, slope stderr)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = if x.len() > 2 { (sse / (k - 2.0) / sxx).sqrt() } else { 0.0 };
    (slope, intercept, stderr)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        (v[m / 2 - 1] + v[m / 2]) / 2.0
    }
}

/// Median over replicates of the projection-class supremum at every `n`,
/// and the least-squares slope of `ln(median)` against `ln(n)`. Replicate
/// `r` at the `i`-th sample size uses substream `(i << 32) | r`.
pub fn levy_rate_experiment(config: &ProjectionClassConfig, ns: &[usize], replicates: usize, seed: u64) -> Result<LevyRateReport> {
    if ns.len() < 2 || replicates == 0 {
        return Err(Error::input("need at least two sample sizes and one replicate"));
    }
    if ns.contains(&0) {
        return Err(Error::domain("sample sizes must be positive"));
    }
    let base = rng::derive_seed(seed, tags::LEVY);
    let medians: Vec<f64> = ns
        .par_iter()
        .enumerate()
        .map(|(i, &n)| {
            let law = HalfBinomial::new(n);
            let mut vals: Vec<f64> = (0..replicates)
                .map(|r| {
                    let mut g = rng::substream(base, ((i as u64) << 32) | r as u64);
                    sample_with_law(config, &law, &mut g)
                })
                .collect();
            median(&mut vals)
        })
        .collect();
    if medians.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::domain("a median distance is zero; increase replicates or n"));
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (slope, intercept, stderr) = least_squares(&lx, &ly);
    let points = ns
        .iter()
        .zip(&medians)
        .zip(lx.iter().zip(&ly))
        .map(|((&n, &m), (x, y))| LevyRatePoint { n, median_distance: m, residual: y - intercept - slope * x })
        .collect();
    Ok(LevyRateReport {
        alpha: config.alpha,
        k_max: config.k_max,
        replicates,
        seed,
        slope,
        stderr,
        intercept,
        expected_slope: config.expected_slope(),
        points,
    })
}
