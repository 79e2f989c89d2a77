//! Feedforward networks over a base class, their ℓ₁-weight complexity
//! quantities, and penalized selection among candidate networks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{gaussian_factor, loglog_term};
use crate::data::{BaseHypothesis, Dataset, MarginDistribution};
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 3.0;
const ZETA_TERMS: u32 = 1_000_000;

/// Bounded nondecreasing activation into `[-1, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Sigmoid {
    Clamp,
    Tanh,
    /// Linear interpolation between knots, constant outside, clipped to
    /// `[-1, 1]`. The Lipschitz constant is taken as given.
    PiecewiseLinear { knots: Vec<(f64, f64)>, lipschitz: f64 },
}

impl Sigmoid {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Sigmoid::Clamp => u.clamp(-1.0, 1.0),
            Sigmoid::Tanh => u.tanh(),
            Sigmoid::PiecewiseLinear { knots, .. } => {
                let k = knots.partition_point(|p| p.0 <= u);
                let v = if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let (x0, y0) = knots[k - 1];
                    let (x1, y1) = knots[k];
                    y0 + (y1 - y0) * (u - x0) / (x1 - x0)
                };
                v.clamp(-1.0, 1.0)
            }
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            Sigmoid::Clamp | Sigmoid::Tanh => 1.0,
            Sigmoid::PiecewiseLinear { lipschitz, .. } => *lipschitz,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Sigmoid::PiecewiseLinear { knots, lipschitz } = self {
            if knots.is_empty() || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
                return Err(Error::Structure("piecewise-linear sigmoid needs increasing knots".into()));
            }
            if knots.windows(2).any(|w| w[0].1 > w[1].1) {
                return Err(Error::Structure("piecewise-linear sigmoid must be nondecreasing".into()));
            }
            if !(*lipschitz >= 0.0) {
                return Err(Error::Structure("sigmoid Lipschitz constant must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Input {
    /// Global neuron index: base neurons first, then each layer in order.
    pub source: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neuron {
    pub inputs: Vec<Input>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub sigmoid: Sigmoid,
    /// Floor `b_k` on the layer's weight norm; defaults to 1.
    #[serde(default = "default_floor")]
    pub floor: f64,
    pub neurons: Vec<Neuron>,
}

fn default_floor() -> f64 {
    1.0
}

impl Layer {
    pub fn new(sigmoid: Sigmoid, neurons: Vec<Neuron>) -> Self {
        Self { sigmoid, floor: default_floor(), neurons }
    }

    /// `W_k = max_N ‖w^{(N)}‖₁ ∨ b_k`.
    pub fn weight_norm(&self) -> f64 {
        self.neurons
            .iter()
            .map(|n| n.inputs.iter().map(|i| i.weight.abs()).sum::<f64>())
            .fold(self.floor, f64::max)
    }
}

/// A network whose layer 0 is a list of base hypotheses and whose last
/// layer holds the single output neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetSpec", into = "NetSpec")]
pub struct FeedforwardNet {
    base: Vec<BaseHypothesis>,
    layers: Vec<Layer>,
}

#[derive(Serialize, Deserialize)]
struct NetSpec {
    base: Vec<BaseHypothesis>,
    layers: Vec<Layer>,
}

impl TryFrom<NetSpec> for FeedforwardNet {
    type Error = Error;
    fn try_from(s: NetSpec) -> Result<Self> {
        FeedforwardNet::new(s.base, s.layers)
    }
}

impl From<FeedforwardNet> for NetSpec {
    fn from(n: FeedforwardNet) -> Self {
        NetSpec { base: n.base, layers: n.layers }
    }
}

impl FeedforwardNet {
    pub fn new(base: Vec<BaseHypothesis>, layers: Vec<Layer>) -> Result<Self> {
        if base.is_empty() {
            return Err(Error::Structure("network needs at least one base neuron".into()));
        }
        let mut available = base.len();
        for (j, layer) in layers.iter().enumerate() {
            layer.sigmoid.validate()?;
            if layer.neurons.is_empty() {
                return Err(Error::Structure(format!("layer {} has no neurons", j + 1)));
            }
            if !(layer.floor >= 0.0 && layer.floor.is_finite()) {
                return Err(Error::Structure(format!("layer {} floor must be nonnegative", j + 1)));
            }
            for input in layer.neurons.iter().flat_map(|n| &n.inputs) {
                if input.source >= available {
                    return Err(Error::Structure(format!(
                        "layer {} references neuron {} but only {available} precede it",
                        j + 1,
                        input.source
                    )));
                }
                if !input.weight.is_finite() {
                    return Err(Error::Structure(format!("layer {} has a non-finite weight", j + 1)));
                }
            }
            available += layer.neurons.len();
        }
        let outputs = layers.last().map_or(base.len(), |l| l.neurons.len());
        if outputs != 1 {
            return Err(Error::Structure(format!("output layer must have exactly one neuron, found {outputs}")));
        }
        Ok(Self { base, layers })
    }

    pub fn base(&self) -> &[BaseHypothesis] {
        &self.base
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Appends a single-neuron layer over the current output.
    pub fn stacked(&self, layer: Layer) -> Result<Self> {
        let mut layers = self.layers.clone();
        layers.push(layer);
        Self::new(self.base.clone(), layers)
    }

    /// Index of the current output neuron.
    pub fn output_index(&self) -> usize {
        self.base.len() + self.layers.iter().map(|l| l.neurons.len()).sum::<usize>() - 1
    }

    fn run(&self, base_values: Vec<f64>) -> f64 {
        let mut vals = base_values;
        for layer in &self.layers {
            let outs: Vec<f64> = layer
                .neurons
                .iter()
                .map(|n| layer.sigmoid.eval(n.inputs.iter().map(|i| i.weight * vals[i.source]).sum()))
                .collect();
            vals.extend(outs);
        }
        *vals.last().unwrap()
    }

    /// Output at a fresh instance.
    pub fn forward_eval(&self, x: &[f64]) -> Result<f64> {
        let b = self.base.iter().map(|h| h.predict(x)).collect::<Result<Vec<_>>>()?;
        Ok(self.run(b))
    }

    /// Output at sample `index` (tabulated base neurons allowed).
    pub fn eval_sample(&self, index: usize, x: &[f64]) -> Result<f64> {
        let b = self.base.iter().map(|h| h.value(index, x)).collect::<Result<Vec<_>>>()?;
        Ok(self.run(b))
    }

    /// Binary margins `y f(x)` on a dataset.
    pub fn margins(&self, data: &Dataset) -> Result<MarginDistribution> {
        let ys = data.signed_labels()?;
        let m = data
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| self.eval_sample(i, &s.features).map(|v| v * ys[i]))
            .collect::<Result<Vec<_>>>()?;
        MarginDistribution::from_values(&m)
    }
}

/// Upper bound on `ζ(α)`: the first 10⁶ terms plus the integral tail.
pub fn zeta_upper(alpha: f64) -> f64 {
    if !(alpha > 1.0) {
        return f64::INFINITY;
    }
    let head: f64 = (1..=ZETA_TERMS).rev().map(|k| f64::from(k).powf(-alpha)).sum();
    head + f64::from(ZETA_TERMS).powf(1.0 - alpha) / (alpha - 1.0)
}

/// Accepts `α` only when `ζ(α) < 3/2` (judged by the upper bound).
pub fn check_alpha(alpha: f64) -> Result<()> {
    let z = zeta_upper(alpha);
    if z < 1.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("alpha = {alpha} violates zeta(alpha) < 3/2 (zeta upper bound {z:.6})")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyBreakdown {
    pub weight_norms: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub lambda: f64,
    pub gamma_alpha: f64,
    pub alpha: f64,
    pub delta: Option<f64>,
    pub psi: Option<f64>,
    pub pi_hat: Option<f64>,
}

/// `Λ = ∏ (4 L_k W_k + 1)`.
pub fn lambda_from(lipschitz: &[f64], weights: &[f64]) -> f64 {
    lipschitz.iter().zip(weights).map(|(l, w)| 4.0 * l * w + 1.0).product()
}

/// `Γ_α = Σ sqrt(α/2 · ln(2 + |log₂ W_k|))`.
pub fn gamma_alpha_from(weights: &[f64], alpha: f64) -> f64 {
    weights
        .iter()
        .map(|w| (alpha / 2.0 * (2.0 + w.log2().abs()).ln()).sqrt())
        .sum()
}

/// `W_k`, `Λ` and `Γ_α` of a network.
pub fn penalty_quantities(net: &FeedforwardNet, alpha: f64) -> Result<PenaltyBreakdown> {
    check_alpha(alpha)?;
    quantities_unchecked(net, alpha)
}

fn quantities_unchecked(net: &FeedforwardNet, alpha: f64) -> Result<PenaltyBreakdown> {
    let weight_norms: Vec<f64> = net.layers.iter().map(Layer::weight_norm).collect();
    let lipschitz: Vec<f64> = net.layers.iter().map(|l| l.sigmoid.lipschitz()).collect();
    if weight_norms.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::domain("a layer has zero weight norm and zero floor; log2 W_k is undefined"));
    }
    Ok(PenaltyBreakdown {
        lambda: lambda_from(&lipschitz, &weight_norms),
        gamma_alpha: gamma_alpha_from(&weight_norms, alpha),
        weight_norms,
        lipschitz,
        alpha,
        delta: None,
        psi: None,
        pi_hat: None,
    })
}

/// `∏ (2 L_j A_j + 1)`.
pub fn theorem13_factor(lipschitz: &[f64], bounds: &[f64]) -> Result<f64> {
    if lipschitz.len() != bounds.len() {
        return Err(Error::input("need one weight bound per Lipschitz constant"));
    }
    if lipschitz.iter().chain(bounds).any(|v| !(*v > 0.0)) {
        return Err(Error::domain("Lipschitz constants and weight bounds must be positive"));
    }
    Ok(lipschitz.iter().zip(bounds).map(|(l, a)| 2.0 * l * a + 1.0).product())
}

/// `Ψ_n = 2√(2π)/δ · Λ G_n + sqrt(log log₂(2/δ)/n) + Γ_α/√n` from the
/// precomputed quantities.
pub fn psi_from(lambda: f64, gamma_alpha: f64, delta: f64, n: usize, gn: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::domain(format!("delta must lie in (0, 1], got {delta}")));
    }
    if n == 0 || !(gn >= 0.0) {
        return Err(Error::domain("need n >= 1 and G_n >= 0"));
    }
    Ok(gaussian_factor() / delta * lambda * gn + loglog_term(delta, n) + gamma_alpha / (n as f64).sqrt())
}

pub fn penalty_psi(net: &FeedforwardNet, delta: f64, n: usize, gn: f64, alpha: f64) -> Result<f64> {
    let q = penalty_quantities(net, alpha)?;
    psi_from(q.lambda, q.gamma_alpha, delta, n, gn)
}

/// Distribution-dependent penalty `P{0 < f̃ <= 2δ} + 2Ψ_n` from an exact
/// margin distribution.
pub fn distribution_penalty(exact: &MarginDistribution, delta: f64, psi: f64) -> f64 {
    exact.mass_in(0.0, 2.0 * delta) + 2.0 * psi
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub net: FeedforwardNet,
    pub margins: MarginDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub name: String,
    pub train_error: f64,
    pub objective: f64,
    pub penalty: PenaltyBreakdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub winner: usize,
    pub winner_name: String,
    pub n: usize,
    pub gn: f64,
    pub alpha: f64,
    pub rows: Vec<CandidateRow>,
}

fn evaluate_candidate(c: &Candidate, n: usize, gn: f64, alpha: f64, grid: &[f64]) -> Result<CandidateRow> {
    let mut q = quantities_unchecked(&c.net, alpha)?;
    let mut best: Option<(f64, f64, f64)> = None;
    for &d in grid {
        let psi = psi_from(q.lambda, q.gamma_alpha, d, n, gn)?;
        let pi = c.margins.mass_in(0.0, d) + psi;
        // ties go to the smaller δ so the result is order independent
        let better = match best {
            None => true,
            Some((bd, _, bp)) => pi < bp || (pi == bp && d < bd),
        };
        if better {
            best = Some((d, psi, pi));
        }
    }
    let (d, psi, pi) = best.ok_or_else(|| Error::input("delta grid is empty"))?;
    q.delta = Some(d);
    q.psi = Some(psi);
    q.pi_hat = Some(pi);
    let train_error = c.margins.error_rate();
    Ok(CandidateRow { name: c.name.clone(), train_error, objective: train_error + pi, penalty: q })
}

/// Minimizes `P_n{f̃ <= 0} + inf_δ [P_n{0 < f̃ <= δ} + Ψ_n(f; δ)]` over the
/// candidates; ties go to the earliest candidate.
pub fn penalized_select(candidates: &[Candidate], n: usize, gn: f64, alpha: f64, grid: &[f64]) -> Result<SelectionReport> {
    if candidates.is_empty() {
        return Err(Error::input("no candidate networks"));
    }
    check_alpha(alpha)?;
    let rows = candidates
        .par_iter()
        .map(|c| evaluate_candidate(c, n, gn, alpha, grid))
        .collect::<Result<Vec<_>>>()?;
    let mut winner = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.objective < rows[winner].objective {
            winner = i;
        }
    }
    Ok(SelectionReport { winner, winner_name: rows[winner].name.clone(), n, gn, alpha, rows })
}
