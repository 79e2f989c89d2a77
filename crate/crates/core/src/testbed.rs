//! The intervals problem: `X ~ Uniform[0, 1]`, label `+1` on a union of
//! disjoint closed intervals (flipped with probability `η`), with exact
//! generalization error and exact margin distributions for classifiers
//! built from stumps and intervals, plus replicated experiments.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boosting::{adaboost, BoostingTrace, WeakLearner};
use crate::bounds::{adaboost_product_bound, default_delta_grid, theorem2_bound, ComplexityInput, CostFunction};
use crate::complexity::{estimate_rademacher, ComplexityEstimate, FunctionClass};
use crate::data::{empirical_margin_distribution, BaseHypothesis, Dataset, MarginDistribution, VotingClassifier};
use crate::error::{Error, Result};
use crate::gamma::{gamma_margin_result, gamma_threshold_from_vc, true_gamma_margin};
use crate::levy::{levy_distance_margins, theorem10_bound, theorem10_confidence, DEFAULT_TOL};
use crate::rng::{self, tags};

pub const SCHEMA_VERSION: u32 = 1;

pub fn default_intervals() -> Vec<(f64, f64)> {
    vec![(0.1, 0.25), (0.4, 0.6), (0.8, 0.95)]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalsProblem {
    intervals: Vec<(f64, f64)>,
    noise: f64,
}

impl IntervalsProblem {
    pub fn new(intervals: Vec<(f64, f64)>, noise: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&noise) {
            return Err(Error::domain(format!("noise must lie in [0, 1/2), got {noise}")));
        }
        let mut prev = f64::NEG_INFINITY;
        for &(a, b) in &intervals {
            if !(0.0 <= a && a <= b && b <= 1.0) || a <= prev {
                return Err(Error::domain("target intervals must be disjoint, sorted and inside [0, 1]"));
            }
            prev = b;
        }
        Ok(Self { intervals, noise })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Noise-free label at `x`.
    pub fn target(&self, x: f64) -> f64 {
        if self.intervals.iter().any(|&(a, b)| a <= x && x <= b) {
            1.0
        } else {
            -1.0
        }
    }

    /// `n` labeled draws.
    pub fn sample(&self, n: usize, rng: &mut rng::Rng) -> Result<Dataset> {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random();
            let flip = self.noise > 0.0 && rng.random::<f64>() < self.noise;
            let y = self.target(x) * if flip { -1.0 } else { 1.0 };
            xs.push(x);
            ys.push(y as i64);
        }
        Dataset::from_1d(&xs, &ys)
    }

    /// Open cells of `[0, 1]` on which both `f` and the target are constant,
    /// as `(length, midpoint)`.
    fn cells(&self, f: &VotingClassifier) -> Result<Vec<(f64, f64)>> {
        let mut cuts = vec![0.0, 1.0];
        for h in f.hypotheses() {
            match h {
                BaseHypothesis::Stump { feature: 0, .. } | BaseHypothesis::Interval { feature: 0, .. } => {
                    cuts.extend(h.breakpoints(0).unwrap())
                }
                _ => {
                    return Err(Error::Unsupported(
                        "exact oracle needs stumps or intervals on feature 0".into(),
                    ))
                }
            }
        }
        for &(a, b) in &self.intervals {
            cuts.push(a);
            cuts.push(b);
        }
        cuts.retain(|c| (0.0..=1.0).contains(c));
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Ok(cuts
            .windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| (w[1] - w[0], w[0] + (w[1] - w[0]) / 2.0))
            .collect())
    }

    /// Exact law of the margin `Y f(X)`.
    pub fn exact_margin_distribution(&self, f: &VotingClassifier) -> Result<MarginDistribution> {
        let mut pts = Vec::new();
        for (len, mid) in self.cells(f)? {
            let m = self.target(mid) * f.predict(&[mid])?;
            pts.push((m, (1.0 - self.noise) * len));
            if self.noise > 0.0 {
                pts.push((-m, self.noise * len));
            }
        }
        MarginDistribution::from_weighted(pts)
    }

    /// Exact `P{Y f(X) <= 0}`.
    pub fn exact_generalization_error(&self, f: &VotingClassifier) -> Result<f64> {
        let mut err = 0.0;
        for (len, mid) in self.cells(f)? {
            let m = self.target(mid) * f.predict(&[mid])?;
            if m == 0.0 {
                err += len;
            } else if m < 0.0 {
                err += (1.0 - self.noise) * len;
            } else {
                err += self.noise * len;
            }
        }
        Ok(err)
    }
}

/// Configuration of a replicated intervals experiment; echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalsConfig {
    pub intervals: Vec<(f64, f64)>,
    pub noise: f64,
    pub n: usize,
    pub rounds: usize,
    pub replicates: usize,
    pub learner: WeakLearner,
    pub gammas: Vec<f64>,
    pub c_gamma: f64,
    pub t: f64,
    pub draws: usize,
    pub levy_m: f64,
    pub e_clamp: Option<f64>,
    pub seed: u64,
}

impl Default for IntervalsConfig {
    fn default() -> Self {
        Self {
            intervals: default_intervals(),
            noise: 0.0,
            n: 500,
            rounds: 50,
            replicates: 200,
            learner: WeakLearner::Stump,
            gammas: vec![1.0, 0.8, 2.0 / 3.0],
            c_gamma: 1.0,
            t: 2.0,
            draws: 500,
            levy_m: 1.0,
            e_clamp: None,
            seed: 7,
        }
    }
}

impl IntervalsConfig {
    pub fn problem(&self) -> Result<IntervalsProblem> {
        IntervalsProblem::new(self.intervals.clone(), self.noise)
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.rounds == 0 || self.replicates == 0 || self.draws == 0 {
            return Err(Error::input("n, rounds, replicates and draws must be positive"));
        }
        if !(self.t > 0.0) || !(self.c_gamma > 0.0) || !(self.levy_m > 0.0) {
            return Err(Error::domain("t, c_gamma and levy_m must be positive"));
        }
        self.problem().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub true_error: f64,
    pub train_error: f64,
    pub bound_t2: f64,
    pub delta_t2: f64,
    /// One entry per configured γ, in configuration order.
    pub bound_gamma: Vec<f64>,
    pub delta_gamma: Vec<f64>,
    pub bound_adaboost: f64,
    pub levy_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub sample_seed: u64,
    pub complexity: ComplexityEstimate,
    pub stop_reason: crate::boosting::StopReason,
    pub rounds: Vec<RoundRecord>,
    pub theorem2_covered: bool,
    pub levy_sup: f64,
    pub levy_bound: f64,
    pub levy_covered: bool,
    pub gamma_ordered: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    pub covered: usize,
    pub replicates: usize,
    pub fraction: f64,
    pub nominal: f64,
    /// `floor(R p - 3 sqrt(R p (1 - p)))`.
    pub binomial_threshold: usize,
}

impl Coverage {
    fn new(covered: usize, replicates: usize, nominal: f64) -> Self {
        let r = replicates as f64;
        let thr = (r * nominal - 3.0 * (r * nominal * (1.0 - nominal)).sqrt()).floor().max(0.0) as usize;
        Self { covered, replicates, fraction: covered as f64 / r, nominal, binomial_threshold: thr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub config: IntervalsConfig,
    pub theorem2: Coverage,
    pub levy: Coverage,
    pub gamma_ordering_holds: bool,
    pub replicates: Vec<ReplicateRecord>,
}

fn gamma_ordering(gammas: &[f64], bounds: &[f64]) -> bool {
    let mut pairs: Vec<(f64, f64)> = gammas.iter().copied().zip(bounds.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.windows(2).all(|w| w[0].1 <= w[1].1)
}

fn sample_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, tags::SAMPLE)
}

/// Seeds of replicate `r`: sample substream and complexity seed.
fn replicate_seeds(seed: u64, r: usize) -> (u64, u64) {
    let rep = rng::derive_seed(rng::derive_seed(seed, tags::REPLICATE), r as u64);
    (sample_seed(rep), rng::derive_seed(rep, tags::COMPLEXITY))
}

/// Runs one replicate: fresh sample, boosting, and per-round evaluation.
pub fn run_replicate(config: &IntervalsConfig, r: usize) -> Result<(ReplicateRecord, BoostingTrace)> {
    let problem = config.problem()?;
    let (s_seed, c_seed) = replicate_seeds(config.seed, r);
    let data = problem.sample(config.n, &mut rng::substream(s_seed, 0))?;
    let rn = estimate_rademacher(&FunctionClass::Stumps, &data, config.draws, c_seed)?;
    let input = ComplexityInput::from(&rn);
    let trace = adaboost(&data, config.rounds, config.learner, config.e_clamp)?;
    let cost = CostFunction::UpperStep;
    let mut rounds = Vec::with_capacity(trace.rounds.len());
    for k in 1..=trace.rounds.len() {
        let f = trace.classifier_after(k)?;
        let emp = empirical_margin_distribution(&f, &data)?;
        let exact = problem.exact_margin_distribution(&f)?;
        let t2 = theorem2_bound(&emp, &input, &cost, config.n, config.t, &default_delta_grid(&emp, config.n))?;
        let gammas = config
            .gammas
            .iter()
            .map(|&g| gamma_margin_result(&emp, g, config.n, config.c_gamma))
            .collect::<Result<Vec<_>>>()?;
        let prefix = BoostingTrace { rounds: trace.rounds[..k].to_vec(), ..trace.clone() };
        let ada = adaboost_product_bound(&prefix, &input, config.n, config.t)?;
        rounds.push(RoundRecord {
            round: k,
            true_error: problem.exact_generalization_error(&f)?,
            train_error: emp.error_rate(),
            bound_t2: t2.bound_value,
            delta_t2: t2.delta,
            bound_gamma: gammas.iter().map(|g| g.gamma_bound).collect(),
            delta_gamma: gammas.iter().map(|g| g.delta_hat).collect(),
            bound_adaboost: ada.bound_value,
            levy_distance: levy_distance_margins(&emp, &exact, DEFAULT_TOL)?,
        });
    }
    let levy_sup = rounds.iter().map(|r| r.levy_distance).fold(0.0, f64::max);
    let levy_bound = theorem10_bound(rn.value, config.levy_m, config.n, config.t)?;
    let record = ReplicateRecord {
        replicate: r,
        sample_seed: s_seed,
        theorem2_covered: rounds.iter().all(|x| x.bound_t2 >= x.true_error),
        gamma_ordered: rounds.iter().all(|x| gamma_ordering(&config.gammas, &x.bound_gamma)),
        complexity: rn,
        stop_reason: trace.stop_reason,
        rounds,
        levy_sup,
        levy_bound,
        levy_covered: levy_sup <= levy_bound,
    };
    Ok((record, trace))
}

/// Replicated boosting runs on the intervals problem with per-round
/// bounds, exact errors and coverage aggregates. Replicate `r` draws all of
/// its randomness from substreams keyed by `r`, so the report does not
/// depend on scheduling.
pub fn run_intervals_experiment(config: &IntervalsConfig) -> Result<ExperimentReport> {
    config.check()?;
    let replicates = (0..config.replicates)
        .into_par_iter()
        .map(|r| run_replicate(config, r).map(|x| x.0))
        .collect::<Result<Vec<_>>>()?;
    let t2 = replicates.iter().filter(|r| r.theorem2_covered).count();
    let lv = replicates.iter().filter(|r| r.levy_covered).count();
    let nominal_t2 = 1.0 - 2.0 * (-2.0 * config.t * config.t).exp();
    Ok(ExperimentReport {
        schema: SCHEMA_VERSION,
        config: config.clone(),
        theorem2: Coverage::new(t2, config.replicates, nominal_t2.max(0.0)),
        levy: Coverage::new(lv, config.replicates, theorem10_confidence(config.t)),
        gamma_ordering_holds: replicates.iter().all(|r| r.gamma_ordered),
        replicates,
    })
}

/// Per-round means over replicates, as CSV rows matching
/// `round,true_error,train_error,bound_t2,bound_gamma_<γ>...,bound_adaboost`.
pub fn curves_csv(report: &ExperimentReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["round".to_string(), "true_error".into(), "train_error".into(), "bound_t2".into()];
    header.extend(report.config.gammas.iter().map(|g| format!("bound_gamma_{}", gamma_label(*g))));
    header.push("bound_adaboost".into());
    w.write_record(&header).map_err(csv_err)?;
    let max_rounds = report.replicates.iter().map(|r| r.rounds.len()).max().unwrap_or(0);
    for k in 0..max_rounds {
        let rows: Vec<&RoundRecord> = report.replicates.iter().filter_map(|r| r.rounds.get(k)).collect();
        let c = rows.len() as f64;
        let mean = |g: &dyn Fn(&RoundRecord) -> f64| rows.iter().map(|r| g(r)).sum::<f64>() / c;
        let mut rec = vec![
            (k + 1).to_string(),
            mean(&|r| r.true_error).to_string(),
            mean(&|r| r.train_error).to_string(),
            mean(&|r| r.bound_t2).to_string(),
        ];
        for j in 0..report.config.gammas.len() {
            rec.push(mean(&|r| r.bound_gamma[j]).to_string());
        }
        rec.push(mean(&|r| r.bound_adaboost).to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

/// Short label for a γ column, e.g. `1`, `0.8`, `0.667`.
pub fn gamma_label(g: f64) -> String {
    let s = format!("{:.3}", g);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub gamma: f64,
    pub min: f64,
    pub median: f64,
    pub max: f64,
    /// `γ` is below the admissible threshold of the base class.
    pub below_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub config: IntervalsConfig,
    pub vc_dim: u32,
    pub gamma_star: f64,
    /// `ratios[i][r]`: empirical over true γ-margin for `gammas[i]`, replicate `r`.
    pub ratios: Vec<Vec<f64>>,
    pub summary: Vec<RatioSummary>,
}

/// VC dimension of the weak learner's class on the line.
pub fn learner_vc_dim(learner: WeakLearner) -> u32 {
    match learner {
        WeakLearner::Stump => 2,
        WeakLearner::Interval => 3,
    }
}

/// Ratios `δ̂_n(γ; f) / δ_n(γ; f)` of the final boosted classifier per
/// replicate. No claim about the ratio is made; the summary only reports.
pub fn margin_ratio_experiment(config: &IntervalsConfig) -> Result<RatioReport> {
    config.check()?;
    let problem = config.problem()?;
    let per_rep = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let (s_seed, _) = replicate_seeds(config.seed, r);
            let data = problem.sample(config.n, &mut rng::substream(s_seed, 0))?;
            let trace = adaboost(&data, config.rounds, config.learner, config.e_clamp)?;
            let f = trace.classifier()?;
            let emp = empirical_margin_distribution(&f, &data)?;
            let exact = problem.exact_margin_distribution(&f)?;
            config
                .gammas
                .iter()
                .map(|&g| Ok(crate::gamma::empirical_gamma_margin(&emp, g, config.n)? / true_gamma_margin(&exact, g, config.n)?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let vc = learner_vc_dim(config.learner);
    let (_, gamma_star) = gamma_threshold_from_vc(vc)?;
    let ratios: Vec<Vec<f64>> = (0..config.gammas.len()).map(|i| per_rep.iter().map(|v| v[i]).collect()).collect();
    let summary = config
        .gammas
        .iter()
        .zip(&ratios)
        .map(|(&g, v)| {
            let mut s = v.clone();
            s.sort_by(f64::total_cmp);
            let m = s.len();
            let median = if m % 2 == 1 { s[m / 2] } else { (s[m / 2 - 1] + s[m / 2]) / 2.0 };
            RatioSummary { gamma: g, min: s[0], median, max: s[m - 1], below_threshold: g < gamma_star }
        })
        .collect();
    Ok(RatioReport { config: config.clone(), vc_dim: vc, gamma_star, ratios, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Orientation;
    use approx::assert_relative_eq;

    fn stump(t: f64) -> VotingClassifier {
        VotingClassifier::single(BaseHypothesis::stump(0, t, Orientation::Positive))
    }

    #[test]
    fn exact_error_examples() {
        let p = IntervalsProblem::new(vec![(0.3, 1.0)], 0.0).unwrap();
        assert_eq!(p.exact_generalization_error(&stump(0.3)).unwrap(), 0.0);
        let p = IntervalsProblem::new(vec![(0.5, 1.0)], 0.0).unwrap();
        assert_relative_eq!(p.exact_generalization_error(&stump(0.3)).unwrap(), 0.2, epsilon = 1e-15);
        let p = IntervalsProblem::new(vec![(0.5, 1.0)], 0.5 - 1e-12).unwrap();
        assert!((p.exact_generalization_error(&stump(0.3)).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn exact_margin_examples() {
        let p = IntervalsProblem::new(vec![(0.0, 1.0)], 0.0).unwrap();
        let d = p.exact_margin_distribution(&stump(-1.0)).unwrap();
        assert_eq!(d.points(), &[(1.0, 1.0)]);
        let p = IntervalsProblem::new(vec![(0.5, 1.0)], 0.0).unwrap();
        let d = p.exact_margin_distribution(&stump(0.3)).unwrap();
        assert_eq!(d.len(), 2);
        assert_relative_eq!(d.points()[0].1, 0.2, epsilon = 1e-12);
        assert_eq!(d.points()[0].0, -1.0);
        let p = IntervalsProblem::new(vec![(0.5, 1.0)], 0.25).unwrap();
        let d = p.exact_margin_distribution(&stump(0.3)).unwrap();
        // -1 carries 0.75*0.2 + 0.25*0.8, +1 carries 0.75*0.8 + 0.25*0.2
        assert_relative_eq!(d.points()[0].1, 0.35, epsilon = 1e-12);
        assert_relative_eq!(d.points()[1].1, 0.65, epsilon = 1e-12);
    }

    #[test]
    fn noise_formula_without_ties() {
        let p = IntervalsProblem::new(default_intervals(), 0.1).unwrap();
        let f = stump(0.35);
        let clean = IntervalsProblem::new(default_intervals(), 0.0).unwrap();
        let dis = clean.exact_generalization_error(&f).unwrap();
        assert_relative_eq!(p.exact_generalization_error(&f).unwrap(), 0.1 + 0.8 * dis, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(IntervalsProblem::new(vec![(0.5, 0.2)], 0.0).is_err());
        assert!(IntervalsProblem::new(vec![(0.1, 0.5), (0.4, 0.6)], 0.0).is_err());
        assert!(IntervalsProblem::new(vec![(0.1, 0.5)], 0.5).is_err());
    }

    #[test]
    fn gamma_labels() {
        assert_eq!(gamma_label(1.0), "1");
        assert_eq!(gamma_label(0.8), "0.8");
        assert_eq!(gamma_label(2.0 / 3.0), "0.667");
    }

    #[test]
    fn separable_single_round() {
        let cfg = IntervalsConfig {
            intervals: vec![(0.5, 1.0)],
            n: 50,
            rounds: 1,
            replicates: 1,
            draws: 50,
            ..IntervalsConfig::default()
        };
        let rep = run_intervals_experiment(&cfg).unwrap();
        let r = &rep.replicates[0].rounds[0];
        assert!(r.true_error < 0.05);
        assert!(r.bound_t2 >= 0.0 && r.bound_gamma.iter().all(|b| *b >= 0.0));
    }
}
