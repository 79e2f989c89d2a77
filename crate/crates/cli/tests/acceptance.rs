//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary (`harness = false`).

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use marginlab::boosting::{adaboost, WeakLearner};
use marginlab::bounds::exp_loss_factor;
use marginlab::complexity::{
    estimate_rademacher, exact_rademacher_small_n, EvaluatedClass, FunctionClass, Multiplier,
};
use marginlab::data::{
    empirical_margin_distribution, BaseHypothesis, Dataset, LabelKind, LabeledSample,
    MarginDistribution, Orientation,
};
use marginlab::gamma::{empirical_gamma_margin, gamma_margin_result, gamma_threshold};
use marginlab::levy::{
    kolmogorov_distance, levy_distance, levy_rate_experiment, log_spaced, truncate_cdf,
    ProjectionClassConfig, StepCdf, DEFAULT_TOL,
};
use marginlab::network::{check_alpha, lambda_from, theorem13_factor, Input, Layer, Neuron, Sigmoid};
use marginlab::network::FeedforwardNet;
use marginlab::testbed::{run_intervals_experiment, IntervalsConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two features, a noisy linear target.
fn random_dataset(r: &mut ChaCha8Rng, n: usize) -> Dataset {
    let samples = (0..n)
        .map(|_| {
            let x0: f64 = r.random();
            let x1: f64 = r.random();
            let mut y = if x0 - 0.5 + 0.3 * (x1 - 0.5) > 0.0 { 1 } else { -1 };
            if r.random::<f64>() < 0.15 {
                y = -y;
            }
            LabeledSample { features: vec![x0, x1], label: y }
        })
        .collect();
    Dataset::new(samples, LabelKind::Binary).unwrap()
}

fn random_margins(r: &mut ChaCha8Rng) -> (MarginDistribution, usize) {
    let n = r.random_range(5..=300);
    let coarse = r.random_bool(0.3);
    let shift: f64 = r.random_range(-0.3..0.5);
    let vals: Vec<f64> = (0..n)
        .map(|_| {
            let v: f64 = (r.random_range(-1.0..1.0) + shift).clamp(-1.0, 1.0);
            if coarse { (v * 10.0).round() / 10.0 } else { v }
        })
        .collect();
    (MarginDistribution::from_values(&vals).unwrap(), n)
}

fn random_cdf(r: &mut ChaCha8Rng) -> StepCdf {
    let k = r.random_range(1..=10);
    let mut pts: Vec<f64> = (0..k).map(|_| r.random_range(-2.0..2.0)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let w: Vec<f64> = pts.iter().map(|_| r.random_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    let masses = w
        .iter()
        .map(|x| {
            acc += x / total;
            acc
        })
        .collect();
    StepCdf::new(pts, masses).unwrap()
}

fn c1_c2() -> (Check, Check) {
    let mut worst = 0.0f64;
    let mut dominance_fail = 0;
    let mut datasets = 0;
    let mut rejected = 0;
    let mut seed = 0u64;
    while datasets < 50 {
        seed += 1;
        let mut r = rng(1000 + seed);
        let n = r.random_range(20..=200);
        let rounds = r.random_range(5..=30);
        let data = random_dataset(&mut r, n);
        let trace = adaboost(&data, rounds, WeakLearner::Stump, None).unwrap();
        if trace.any_clamped() {
            rejected += 1;
            continue;
        }
        datasets += 1;
        let ys = data.signed_labels().unwrap();
        let mut scores = vec![0.0; n];
        let mut product = 1.0;
        for (k, round) in trace.rounds.iter().enumerate() {
            for (i, s) in data.samples().iter().enumerate() {
                scores[i] += round.alpha * round.hypothesis.predict(&s.features).unwrap();
            }
            product *= exp_loss_factor(round.error);
            let loss = scores.iter().zip(&ys).map(|(f, y)| (-y * f).exp()).sum::<f64>() / n as f64;
            worst = worst.max((loss - product).abs());
            let f = trace.classifier_after(k + 1).unwrap();
            let train = empirical_margin_distribution(&f, &data).unwrap().error_rate();
            if train > product {
                dominance_fail += 1;
            }
        }
    }
    let c1 = format!("max |exp-loss - product| = {worst:.3e} over 50 datasets ({rejected} clamped rejected)");
    let c2 = format!("{dominance_fail} prefixes with training error above the product");
    (
        if worst <= 1e-9 { Ok(c1) } else { Err(c1) },
        if dominance_fail == 0 { Ok(c2) } else { Err(c2) },
    )
}

fn c3() -> Check {
    let mut worst_z = 0.0f64;
    for inst in 0..20u64 {
        let mut r = rng(3000 + inst);
        let n = r.random_range(4..=12);
        let data = random_dataset(&mut r, n);
        let exact = exact_rademacher_small_n(&FunctionClass::Stumps, &data).unwrap();
        let mc = estimate_rademacher(&FunctionClass::Stumps, &data, 5000, 77 + inst).unwrap();
        worst_z = worst_z.max((mc.value - exact).abs() / mc.std_error);
    }
    let msg = format!("max |MC - exact| / std_error = {worst_z:.3} over 20 instances");
    if worst_z <= 3.0 { Ok(msg) } else { Err(msg) }
}

fn c4() -> Check {
    let mut mismatches = 0;
    for c in 0..10u64 {
        let mut r = rng(4000 + c);
        let n = r.random_range(5..=30);
        let m = r.random_range(2..=8);
        let rows: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| r.random_range(-1.0..=1.0)).collect()).collect();
        let base = EvaluatedClass::from_table(rows).unwrap();
        let hull = base.clone().convex_hull();
        for d in 0..100 {
            let kind = if d % 2 == 0 { Multiplier::Rademacher } else { Multiplier::Gaussian };
            let xi = kind.draw(&mut marginlab::rng::substream(c, d), n);
            if hull.supremum(&xi) != base.supremum(&xi) {
                mismatches += 1;
            }
        }
    }
    let msg = format!("{mismatches} of 1000 draws differ");
    if mismatches == 0 { Ok(msg) } else { Err(msg) }
}

fn c5() -> Check {
    let mut worst = f64::NEG_INFINITY;
    for p in 0..10u64 {
        let mut r = rng(5000 + p);
        let n = 30;
        let data = Dataset::from_1d(&vec![0.0; n], &vec![1; n]).unwrap();
        let hyps: Vec<BaseHypothesis> = (0..4)
            .map(|_| BaseHypothesis::tabulated((0..n).map(|_| r.random_range(-1.0..=1.0)).collect()).unwrap())
            .collect();
        let base = FunctionClass::finite(hyps);
        let rb = estimate_rademacher(&base, &data, 2000, 10 * p).unwrap();
        for l in [2usize, 3] {
            let mx = FunctionClass::max_of(l, base.clone());
            let rm = estimate_rademacher(&mx, &data, 2000, 10 * p + l as u64).unwrap();
            let scale = 2.0 * l as f64;
            let pooled = (rm.std_error.powi(2) + (scale * rb.std_error).powi(2)).sqrt();
            worst = worst.max(rm.value - scale * rb.value - 3.0 * pooled);
        }
    }
    let msg = format!("max R(max-class) - 2l R(base) - 3 se = {worst:.4} (must be <= 0)");
    if worst <= 0.0 { Ok(msg) } else { Err(msg) }
}

fn c6() -> Check {
    let gammas = [0.5, 2.0 / 3.0, 0.8, 1.0];
    let mut bad = 0;
    for s in 0..200u64 {
        let (m, n) = random_margins(&mut rng(6000 + s));
        let b: Vec<f64> = gammas.iter().map(|&g| gamma_margin_result(&m, g, n, 1.0).unwrap().gamma_bound).collect();
        if b.windows(2).any(|w| w[0] > w[1]) {
            bad += 1;
        }
    }
    let msg = format!("{bad} of 200 multisets violate monotonicity");
    if bad == 0 { Ok(msg) } else { Err(msg) }
}

fn c7() -> Check {
    let gammas = [0.5, 2.0 / 3.0, 0.8, 1.0];
    let mut worst = 0.0f64;
    for s in 0..200u64 {
        let (m, n) = random_margins(&mut rng(7000 + s));
        for &g in &gammas {
            let target = gamma_threshold(g, n);
            let scan = (1..10_000)
                .map(|i| i as f64 / 1e4)
                .filter(|&d| d.powf(g) * m.cdf(d) <= target)
                .fold(0.0, f64::max);
            let sweep = empirical_gamma_margin(&m, g, n).unwrap();
            worst = worst.max((sweep - scan).abs());
        }
    }
    let msg = format!("max |sweep - grid| = {worst:.2e} (step 1e-4)");
    if worst <= 1e-4 + 1e-12 { Ok(msg) } else { Err(msg) }
}

fn c8() -> Check {
    let mut fails = Vec::new();
    let (mut sym, mut ident, mut tri, mut dom, mut trunc) = (0, 0, 0, 0, 0);
    for s in 0..200u64 {
        let mut r = rng(8000 + s);
        let (f, g, h) = (random_cdf(&mut r), random_cdf(&mut r), random_cdf(&mut r));
        let fg = levy_distance(&f, &g, DEFAULT_TOL).unwrap();
        let gf = levy_distance(&g, &f, DEFAULT_TOL).unwrap();
        let gh = levy_distance(&g, &h, DEFAULT_TOL).unwrap();
        let fh = levy_distance(&f, &h, DEFAULT_TOL).unwrap();
        sym += usize::from(fg != gf);
        ident += usize::from(levy_distance(&f, &f, DEFAULT_TOL).unwrap() > DEFAULT_TOL);
        tri += usize::from(fh > fg + gh + 2e-9);
        dom += usize::from(fg > kolmogorov_distance(&f, &g));
        let m = r.random_range(0.1..2.0);
        let tfg = levy_distance(&truncate_cdf(&f, m).unwrap(), &truncate_cdf(&g, m).unwrap(), DEFAULT_TOL).unwrap();
        trunc += usize::from(tfg > fg + 2.0 * DEFAULT_TOL);
    }
    for (name, c) in [("symmetry", sym), ("identity", ident), ("triangle", tri), ("domination", dom), ("truncation", trunc)] {
        if c > 0 {
            fails.push(format!("{name}: {c}"));
        }
    }
    if fails.is_empty() {
        Ok("symmetry, identity, triangle, Kolmogorov domination, truncation hold on 200 draws".into())
    } else {
        Err(format!("violations: {}", fails.join(", ")))
    }
}

fn c9() -> Check {
    let ns = log_spaced(100, 100_000, 7).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for alpha in [2.0, 1.0] {
        let cfg = ProjectionClassConfig::new(alpha, None).unwrap();
        let rep = levy_rate_experiment(&cfg, &ns, 20, 20_240).unwrap();
        let want = if alpha == 2.0 { -0.25 } else { -1.0 / 3.0 };
        ok &= (rep.slope - want).abs() <= 0.08;
        parts.push(format!("alpha={alpha}: slope {:.4} (se {:.4}, target {want:.4})", rep.slope, rep.stderr));
    }
    let msg = parts.join("; ");
    if ok { Ok(msg) } else { Err(msg) }
}

fn c10_c11() -> (Check, Check) {
    let cfg = IntervalsConfig::default();
    assert_eq!((cfg.replicates, cfg.n, cfg.rounds, cfg.t), (200, 500, 50, 2.0));
    let rep = run_intervals_experiment(&cfg).unwrap();
    let t2 = rep.theorem2.covered;
    let lv = &rep.levy;
    let msg = format!(
        "margin bound covered {t2}/200 (need 194); Levy covered {}/200 (need {}, nominal {:.5})",
        lv.covered, lv.binomial_threshold, lv.nominal
    );
    let c10 = if t2 >= 194 && lv.covered >= lv.binomial_threshold { Ok(msg) } else { Err(msg) };
    let bad = rep.replicates.iter().filter(|r| !r.gamma_ordered).count();
    let msg = format!("{bad} of 200 replicates break bound(2/3) <= bound(0.8) <= bound(1)");
    (c10, if bad == 0 && rep.gamma_ordering_holds { Ok(msg) } else { Err(msg) })
}

fn c12() -> Check {
    let lam = lambda_from(&[1.0], &[1.0]);
    let prod = theorem13_factor(&[1.0, 2.0], &[0.5, 1.0]).unwrap();
    let a3 = check_alpha(3.0).is_ok();
    let a2 = check_alpha(2.0).is_err();
    let msg = format!("Lambda(1,1) = {lam}; prod(2LA+1) = {prod}; alpha=3 accepted {a3}; alpha=2 rejected {a2}");
    if lam == 5.0 && prod == 10.0 && a3 && a2 { Ok(msg) } else { Err(msg) }
}

fn write_inputs(dir: &Path) {
    let mut r = rng(13);
    let data = random_dataset(&mut r, 60);
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    fs::write(dir.join("data.csv"), buf).unwrap();
    let small = random_dataset(&mut r, 10);
    let mut buf = Vec::new();
    small.write_csv(&mut buf).unwrap();
    fs::write(dir.join("small.csv"), buf).unwrap();
    let nets = dir.join("nets");
    fs::create_dir_all(&nets).unwrap();
    let base = vec![
        BaseHypothesis::stump(0, 0.5, Orientation::Positive),
        BaseHypothesis::stump(1, 0.5, Orientation::Positive),
    ];
    let out = |w: [f64; 2]| {
        Layer::new(
            Sigmoid::Tanh,
            vec![Neuron { inputs: vec![Input { source: 0, weight: w[0] }, Input { source: 1, weight: w[1] }] }],
        )
    };
    for (name, w) in [("a", [1.0, 0.2]), ("b", [3.0, 1.0])] {
        let net = FeedforwardNet::new(base.clone(), vec![out(w)]).unwrap();
        fs::write(nets.join(format!("{name}.json")), serde_json::to_string(&net).unwrap()).unwrap();
    }
}

/// Every file under `dir`, recursively, as (relative path, bytes).
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c13() -> Check {
    let bin = env!("CARGO_BIN_EXE_marginlab");
    let root = tempfile::tempdir().unwrap();
    let inp = root.path().join("in");
    fs::create_dir_all(&inp).unwrap();
    write_inputs(&inp);
    let data = inp.join("data.csv");
    let small = inp.join("small.csv");
    let d = data.to_str().unwrap();
    let runs: Vec<(&str, Vec<String>)> = vec![
        ("boost", vec!["boost", "--data", d, "--rounds", "10"].into_iter().map(String::from).collect()),
        ("bounds", vec!["bounds", "--data", d, "--trace", "{boost}/trace.json", "--variant", "adaboost", "--draws", "300"]
            .into_iter().map(String::from).collect()),
        ("gamma", vec!["gamma", "--data", d, "--rounds", "10"].into_iter().map(String::from).collect()),
        ("complexity", vec!["complexity", "--data", small.to_str().unwrap(), "--draws", "500", "--exact"]
            .into_iter().map(String::from).collect()),
        ("levy-rate", vec!["levy-rate", "--nmin", "100", "--nmax", "10000", "--npoints", "3", "--reps", "5"]
            .into_iter().map(String::from).collect()),
        ("nn-select", vec!["nn-select", "--data", d, "--nets", inp.join("nets").to_str().unwrap(), "--draws", "300"]
            .into_iter().map(String::from).collect()),
        ("intervals", vec!["intervals", "--n", "100", "--rounds", "5", "--reps", "4", "--draws", "100", "--ratios"]
            .into_iter().map(String::from).collect()),
    ];
    let mut diffs = Vec::new();
    for (name, args) in &runs {
        let mut snaps = Vec::new();
        for pass in 0..2 {
            // same output directory both times, emptied in between
            let out = root.path().join(name);
            if pass == 1 {
                fs::rename(&out, root.path().join(format!("{name}-first"))).unwrap();
            }
            fs::create_dir_all(&out).unwrap();
            let boost_dir = root.path().join("boost-first");
            let args: Vec<String> = args.iter().map(|a| a.replace("{boost}", boost_dir.to_str().unwrap())).collect();
            let res = Command::new(bin).args(&args).arg("--seed").arg("11").arg("--out").arg(&out).output().unwrap();
            if !res.status.success() {
                return Err(format!("{name} failed: {}", String::from_utf8_lossy(&res.stderr)));
            }
            let mut snap = snapshot(&out);
            snap.push(("<stdout>".into(), res.stdout));
            snaps.push(snap);
        }
        if snaps[0].len() <= 1 {
            diffs.push(format!("{name}: no output files"));
        } else if snaps[0] != snaps[1] {
            diffs.push(format!("{name}: outputs differ"));
        }
    }
    if diffs.is_empty() {
        Ok(format!("{} subcommands reproduce byte-identically", runs.len()))
    } else {
        Err(diffs.join("; "))
    }
}

fn report(id: &str, name: &str, check: Check, elapsed: Duration, limit: Option<Duration>) -> bool {
    let (mut ok, mut msg) = match check {
        Ok(m) => (true, m),
        Err(m) => (false, m),
    };
    if let Some(l) = limit {
        if elapsed > l {
            ok = false;
            msg.push_str(&format!(" [over time limit {:.0?}]", l));
        }
    }
    println!("{} {id:>2} {name}: {msg} ({:.2?})", if ok { "PASS" } else { "FAIL" }, elapsed);
    ok
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut all = true;

    let t = Instant::now();
    let (c1, c2) = c1_c2();
    let e = t.elapsed();
    all &= report("1", "exp-loss identity", c1, e, Some(secs(10)));
    all &= report("2", "training-error dominance", c2, e, None);

    let t = Instant::now();
    all &= report("3", "Rademacher oracle agreement", c3(), t.elapsed(), Some(secs(60)));
    let t = Instant::now();
    all &= report("4", "convex-hull identity", c4(), t.elapsed(), None);
    let t = Instant::now();
    all &= report("5", "max-class inequality", c5(), t.elapsed(), None);
    let t = Instant::now();
    all &= report("6", "gamma-bound monotonicity", c6(), t.elapsed(), None);
    let t = Instant::now();
    all &= report("7", "gamma-margin grid oracle", c7(), t.elapsed(), None);
    let t = Instant::now();
    all &= report("8", "Levy metric properties", c8(), t.elapsed(), Some(secs(30)));
    let t = Instant::now();
    all &= report("9", "Levy rate slopes", c9(), t.elapsed(), Some(secs(300)));

    let t = Instant::now();
    let (c10, c11) = c10_c11();
    let e = t.elapsed();
    all &= report("10", "intervals bound coverage", c10, e, Some(secs(600)));
    all &= report("11", "gamma-bound ordering", c11, e, None);

    let t = Instant::now();
    all &= report("12", "neural penalty spot values", c12(), t.elapsed(), None);
    let t = Instant::now();
    all &= report("13", "CLI determinism", c13(), t.elapsed(), None);

    if all { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
