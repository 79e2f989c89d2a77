use std::fs;
use std::path::{Path, PathBuf};

use marginlab::boosting::{adaboost, BoostingTrace, WeakLearner};
use marginlab::bounds::{
    adaboost_product_bound, default_delta_grid, theorem11_multiclass_bound, theorem2_bound, theorem4_two_sided,
    BoundReport, ComplexityInput, CostFunction,
};
use marginlab::complexity::{estimate, exact_rademacher_small_n, FunctionClass, Multiplier};
use marginlab::data::{empirical_margin_distribution, load_csv, multiclass_margin_distribution, Dataset, LabelKind, MarginDistribution, VotingClassifier};
use marginlab::gamma::{gamma_margin_result, gamma_threshold_from_vc};
use marginlab::levy::{levy_rate_experiment, log_spaced, ProjectionClassConfig};
use marginlab::network::{penalized_select, Candidate, FeedforwardNet};
use marginlab::testbed::{curves_csv, learner_vc_dim, margin_ratio_experiment, run_intervals_experiment, IntervalsConfig, SCHEMA_VERSION};
use marginlab::Error;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::args::*;

pub enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Outcome<T> {
    Err(Failure::Usage(msg.into()))
}

pub fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Boost(a) => boost(a),
        Command::Bounds(a) => bounds(a),
        Command::Gamma(a) => gamma(a),
        Command::Complexity(a) => complexity(a),
        Command::LevyRate(a) => levy_rate(a),
        Command::NnSelect(a) => nn_select(a),
        Command::Intervals(a) => intervals(a),
    }
}

fn resolve_seed(s: &SeedArg) -> Outcome<u64> {
    match std::env::var("MARGINLAB_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("MARGINLAB_SEED must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(s.seed),
    }
}

fn learner(w: Weak) -> WeakLearner {
    match w {
        Weak::Stump => WeakLearner::Stump,
        Weak::Interval => WeakLearner::Interval,
    }
}

fn multiplier(k: Kind) -> Multiplier {
    match k {
        Kind::Rademacher => Multiplier::Rademacher,
        Kind::Gaussian => Multiplier::Gaussian,
    }
}

fn class_of(c: ClassKind) -> FunctionClass {
    match c {
        ClassKind::Stumps => FunctionClass::Stumps,
        ClassKind::Intervals => FunctionClass::Intervals,
        ClassKind::HullStumps => FunctionClass::convex_hull(FunctionClass::Stumps),
    }
}

fn class_name(c: ClassKind) -> &'static str {
    match c {
        ClassKind::Stumps => "stumps",
        ClassKind::Intervals => "intervals",
        ClassKind::HullStumps => "hull-stumps",
    }
}

fn load(d: &DataArgs, kind: LabelKind) -> Outcome<Dataset> {
    Ok(load_csv(&d.data, kind, d.header)?)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Outcome<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    Ok(serde_json::from_str(&text).map_err(|e| Error::Json { path: path.into(), source: e })?)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

/// Writes `files` into `dir` (created if needed).
fn write_files(dir: &Path, files: &[(&str, &str)]) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.into(), source: e })?;
    for (name, body) in files {
        let p = dir.join(name);
        fs::write(&p, body).map_err(|e| Error::Io { path: p, source: e })?;
    }
    Ok(())
}

fn emit(out: Option<&PathBuf>, stdout: &str, files: &[(&str, &str)]) -> Outcome {
    if let Some(dir) = out {
        write_files(dir, files)?;
    }
    print!("{stdout}");
    Ok(())
}

fn check_gammas(gs: &[f64]) -> Outcome {
    if gs.is_empty() {
        return usage("at least one gamma is required");
    }
    if let Some(g) = gs.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
        return usage(format!("gamma values must lie in (0, 1], got {g}"));
    }
    Ok(())
}

fn boost(a: BoostArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    if a.rounds == 0 {
        return usage("--rounds must be at least 1");
    }
    let data = load(&a.data, LabelKind::Binary)?;
    let trace = adaboost(&data, a.rounds, learner(a.weak), a.e_clamp)?;
    let report = json!({
        "schema": SCHEMA_VERSION,
        "command": "boost",
        "seed": seed,
        "data": a.data.data,
        "n": data.n(),
        "trace": trace,
    });
    let body = to_json(&report);
    let classifier = trace.classifier().map(|f| to_json(&f));
    let mut files = vec![("trace.json", body.as_str())];
    if let Ok(c) = &classifier {
        files.push(("classifier.json", c.as_str()));
    }
    emit(a.out.as_ref(), &body, &files)
}

fn complexity_input(c: &ComplexitySource, data: &Dataset, seed: u64) -> Outcome<ComplexityInput> {
    if let Some(v) = c.rn {
        return Ok(match c.kind {
            Kind::Rademacher => ComplexityInput::rademacher(v),
            Kind::Gaussian => ComplexityInput::gaussian(v),
        });
    }
    if let Some(v) = c.vc {
        return Ok(ComplexityInput::vc(v, data.n(), c.vc_constant)?);
    }
    if c.draws == 0 {
        return usage("--draws must be at least 1");
    }
    let e = estimate(&class_of(c.class).evaluate(data)?, multiplier(c.kind), c.draws, seed)?;
    Ok(ComplexityInput::from(&e))
}

fn binary_classifier(a: &BoundsArgs) -> Outcome<VotingClassifier> {
    match (&a.classifier, &a.trace) {
        (Some(p), _) => read_json(p),
        (None, Some(p)) => Ok(read_trace(p)?.classifier()?),
        (None, None) => usage("this variant needs --classifier or --trace"),
    }
}

fn read_trace(p: &Path) -> Outcome<BoostingTrace> {
    // accepts both a bare trace and the `boost` report wrapping one
    let v: serde_json::Value = read_json(p)?;
    let inner = v.get("trace").cloned().unwrap_or(v);
    Ok(serde_json::from_value(inner).map_err(|e| Error::Json { path: p.into(), source: e })?)
}

fn read_scores(p: &Path, header: bool) -> Outcome<Vec<Vec<f64>>> {
    let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.into(), source: e })?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate().skip(usize::from(header)) {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { row: i + 1, message: format!("{}: {e}", p.display()) })?;
        rows.push(row);
    }
    Ok(rows)
}

fn bounds(a: BoundsArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    if !(a.t > 0.0) {
        return usage("--t must be positive");
    }
    let kind = match a.variant {
        Variant::T11 => match a.classes {
            Some(m) if m >= 2 => LabelKind::Multiclass(m),
            _ => return usage("t11 needs --classes M with M >= 2"),
        },
        _ => LabelKind::Binary,
    };
    let data = load(&a.data, kind)?;
    let n = data.n();
    let cx = complexity_input(&a.complexity, &data, seed)?;
    let (report, curve): (BoundReport, Vec<(f64, f64)>) = match a.variant {
        Variant::T2 | Variant::T4 => {
            let f = binary_classifier(&a)?;
            let m = empirical_margin_distribution(&f, &data)?;
            let grid = default_delta_grid(&m, n);
            let eval = |g: &[f64]| -> Outcome<BoundReport> {
                Ok(match a.variant {
                    Variant::T2 => theorem2_bound(&m, &cx, &CostFunction::UpperStep, n, a.t, g)?,
                    _ => theorem4_two_sided(&m, &cx, n, a.t, g)?,
                })
            };
            let curve = grid.iter().map(|&d| eval(&[d]).map(|r| (d, r.bound_value))).collect::<Outcome<Vec<_>>>()?;
            (eval(&grid)?, curve)
        }
        Variant::T11 => {
            let Some(p) = &a.scores else { return usage("t11 needs --scores") };
            let classes = a.classes.unwrap_or(0);
            let scores = read_scores(p, a.data.header)?;
            let m = multiclass_margin_distribution(&scores, &data)?;
            let grid = default_delta_grid(&m, n);
            let curve = grid
                .iter()
                .map(|&d| theorem11_multiclass_bound(&m, &cx, classes, n, a.t, &[d]).map(|r| (d, r.bound_value)))
                .collect::<marginlab::Result<Vec<_>>>()?;
            (theorem11_multiclass_bound(&m, &cx, classes, n, a.t, &grid)?, curve)
        }
        Variant::Adaboost => {
            let Some(p) = &a.trace else { return usage("adaboost needs --trace") };
            let trace = read_trace(p)?;
            let r = adaboost_product_bound(&trace, &cx, n, a.t)?;
            (r.clone(), vec![(r.delta, r.bound_value)])
        }
    };
    let body = to_json(&json!({
        "schema": SCHEMA_VERSION,
        "command": "bounds",
        "seed": seed,
        "data": a.data.data,
        "report": report,
    }));
    let mut csv = String::from("delta,bound\n");
    for (d, b) in curve {
        csv.push_str(&format!("{d},{b}\n"));
    }
    emit(a.out.as_ref(), &body, &[("report.json", &body), ("curves.csv", &csv)])
}

fn gamma(a: GammaArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    check_gammas(&a.gamma)?;
    if a.rounds == 0 {
        return usage("--rounds must be at least 1");
    }
    if !(a.c_gamma > 0.0) {
        return usage("--c-gamma must be positive");
    }
    let data = load(&a.data, LabelKind::Binary)?;
    let n = data.n();
    let wl = learner(a.weak);
    let trace = adaboost(&data, a.rounds, wl, None)?;
    let (_, gamma_star) = gamma_threshold_from_vc(learner_vc_dim(wl))?;
    let mut csv = String::from("round,gamma,delta_hat,bound\n");
    let mut last = Vec::new();
    for k in 1..=trace.rounds.len() {
        let m: MarginDistribution = empirical_margin_distribution(&trace.classifier_after(k)?, &data)?;
        last.clear();
        for &g in &a.gamma {
            let r = gamma_margin_result(&m, g, n, a.c_gamma)?;
            csv.push_str(&format!("{k},{g},{},{}\n", r.delta_hat, r.gamma_bound));
            last.push(json!({ "result": r, "below_threshold": g < gamma_star }));
        }
    }
    let body = to_json(&json!({
        "schema": SCHEMA_VERSION,
        "command": "gamma",
        "seed": seed,
        "data": a.data.data,
        "rounds": trace.rounds.len(),
        "gamma_star": gamma_star,
        "results": last,
    }));
    emit(a.out.as_ref(), &body, &[("report.json", &body), ("curves.csv", &csv)])
}

fn complexity(a: ComplexityArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    if a.draws == 0 {
        return usage("--draws must be at least 1");
    }
    let data = load(&a.data, LabelKind::Binary)?;
    let class = class_of(a.class);
    let e = estimate(&class.evaluate(&data)?, multiplier(a.kind), a.draws, seed)?;
    let exact = if a.exact { Some(exact_rademacher_small_n(&class, &data)?) } else { None };
    let body = to_json(&json!({
        "schema": SCHEMA_VERSION,
        "command": "complexity",
        "class": class_name(a.class),
        "value": e.value,
        "std_error": e.std_error,
        "draws": e.draws,
        "kind": e.kind,
        "seed": seed,
        "exact": exact,
    }));
    emit(a.out.as_ref(), &body, &[("report.json", &body)])
}

fn levy_rate(a: LevyRateArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    if a.reps == 0 {
        return usage("--reps must be at least 1");
    }
    let cfg = ProjectionClassConfig::new(a.alpha, a.k_max).map_err(|e| Failure::Usage(e.to_string()))?;
    let ns = log_spaced(a.nmin, a.nmax, a.npoints).map_err(|e| Failure::Usage(e.to_string()))?;
    let r = levy_rate_experiment(&cfg, &ns, a.reps, seed)?;
    let report = to_json(&json!({ "schema": SCHEMA_VERSION, "command": "levy-rate", "report": r }));
    let mut csv = String::from("n,median_distance\n");
    for p in &r.points {
        csv.push_str(&format!("{},{}\n", p.n, p.median_distance));
    }
    write_files(&a.out, &[("report.json", &report), ("curves.csv", &csv)])?;
    print!(
        "{}",
        to_json(&json!({ "slope": r.slope, "stderr": r.stderr, "alpha": r.alpha, "expected_slope": r.expected_slope }))
    );
    Ok(())
}

fn nn_select(a: NnSelectArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    let data = load(&a.data, LabelKind::Binary)?;
    let n = data.n();
    let dir = fs::read_dir(&a.nets).map_err(|e| Error::Io { path: a.nets.clone(), source: e })?;
    let mut paths: Vec<PathBuf> = dir
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("{}: no .json network files", a.nets.display())).into());
    }
    let mut candidates = Vec::with_capacity(paths.len());
    for p in &paths {
        let net: FeedforwardNet = read_json(p)?;
        let margins = net.margins(&data)?;
        let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        candidates.push(Candidate { name, net, margins });
    }
    let gn = match a.gn {
        Some(v) => json!({ "value": v, "source": "given" }),
        None => {
            if a.draws == 0 {
                return usage("--draws must be at least 1");
            }
            let e = estimate(&FunctionClass::Stumps.evaluate(&data)?, Multiplier::Gaussian, a.draws, seed)?;
            serde_json::to_value(&e).expect("estimate serializes")
        }
    };
    let gn_value = gn["value"].as_f64().unwrap_or(0.0);
    let mut grid: Vec<f64> = candidates.iter().flat_map(|c| default_delta_grid(&c.margins, n)).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let r = penalized_select(&candidates, n, gn_value, a.alpha, &grid)?;
    let body = to_json(&json!({
        "schema": SCHEMA_VERSION,
        "command": "nn-select",
        "seed": seed,
        "gn": gn,
        "selection": r,
    }));
    emit(a.out.as_ref(), &body, &[("report.json", &body)])
}

fn intervals(a: IntervalsArgs) -> Outcome {
    let seed = resolve_seed(&a.seed)?;
    check_gammas(&a.gammas)?;
    if a.n == 0 || a.rounds == 0 || a.reps == 0 || a.draws == 0 {
        return usage("--n, --rounds, --reps and --draws must be positive");
    }
    if !(0.0..0.5).contains(&a.noise) {
        return usage("--noise must lie in [0, 0.5)");
    }
    if !(a.t > 0.0) {
        return usage("--t must be positive");
    }
    let cfg = IntervalsConfig {
        n: a.n,
        rounds: a.rounds,
        replicates: a.reps,
        gammas: a.gammas.clone(),
        t: a.t,
        noise: a.noise,
        draws: a.draws,
        learner: learner(a.weak),
        seed,
        ..IntervalsConfig::default()
    };
    let report = run_intervals_experiment(&cfg)?;
    let body = to_json(&report);
    let csv = curves_csv(&report)?;
    let mut files = vec![("report.json", body.as_str()), ("curves.csv", csv.as_str())];
    let ratios = if a.ratios { Some(to_json(&margin_ratio_experiment(&cfg)?)) } else { None };
    if let Some(r) = &ratios {
        files.push(("ratios.json", r.as_str()));
    }
    write_files(&a.out, &files)?;
    print!(
        "{}",
        to_json(&json!({
            "schema": SCHEMA_VERSION,
            "theorem2": report.theorem2,
            "levy": report.levy,
            "gamma_ordering_holds": report.gamma_ordering_holds,
            "out": a.out,
        }))
    );
    Ok(())
}
