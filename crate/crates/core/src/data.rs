//! Datasets, base hypotheses, voting classifiers and margin distributions.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used for normalization checks on probability weights.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    /// Labels in {-1, +1}.
    Binary,
    /// Labels in `0..M`.
    Multiclass(usize),
}

impl LabelKind {
    pub fn accepts(&self, label: i64) -> bool {
        match *self {
            LabelKind::Binary => label == -1 || label == 1,
            LabelKind::Multiclass(m) => label >= 0 && (label as u64) < m as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: i64,
}

impl LabeledSample {
    pub fn new(features: Vec<f64>, label: i64) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::input("feature vector must be non-empty"));
        }
        Ok(Self { features, label })
    }
}

/// An immutable labeled sample `(X_1, Y_1), ..., (X_n, Y_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<LabeledSample>,
    label_kind: LabelKind,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<LabeledSample>, label_kind: LabelKind) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::input("dataset must contain at least one sample"))?;
        let dim = first.features.len();
        if let LabelKind::Multiclass(m) = label_kind {
            if m < 2 {
                return Err(Error::domain("multiclass label kind needs M >= 2"));
            }
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != dim {
                return Err(Error::Schema {
                    row: i + 1,
                    message: format!("expected {dim} features, found {}", s.features.len()),
                });
            }
            if !label_kind.accepts(s.label) {
                return Err(Error::Schema {
                    row: i + 1,
                    message: format!("label {} not valid for {:?}", s.label, label_kind),
                });
            }
        }
        Ok(Self { samples, label_kind, dim })
    }

    /// Binary dataset from a single feature column.
    pub fn from_1d(xs: &[f64], labels: &[i64]) -> Result<Self> {
        if xs.len() != labels.len() {
            return Err(Error::input("feature and label lengths differ"));
        }
        let samples = xs
            .iter()
            .zip(labels)
            .map(|(&x, &y)| LabeledSample { features: vec![x], label: y })
            .collect();
        Self::new(samples, LabelKind::Binary)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label_kind(&self) -> LabelKind {
        self.label_kind
    }

    pub fn samples(&self) -> &[LabeledSample] {
        &self.samples
    }

    pub fn feature(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |s| s.features[j])
    }

    /// Labels as ±1 reals. Fails on multiclass data.
    pub fn signed_labels(&self) -> Result<Vec<f64>> {
        if self.label_kind != LabelKind::Binary {
            return Err(Error::LabelKind("expected binary labels".into()));
        }
        Ok(self.samples.iter().map(|s| s.label as f64).collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.samples {
            let mut rec = vec![s.label.to_string()];
            rec.extend(s.features.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io {
        path: "<csv>".into(),
        source: std::io::Error::other(e.to_string()),
    }
}

fn parse_label(field: &str) -> Option<i64> {
    // accept the typographic minus sign some spreadsheets emit
    field.trim().replace('\u{2212}', "-").parse().ok()
}

/// Loads a dataset whose first column is the label and remaining columns are
/// real features. Row numbers in errors are 1-based and count the header.
pub fn load_csv(path: impl AsRef<Path>, label_kind: LabelKind, has_header: bool) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    read_csv(file, label_kind, has_header)
}

pub fn read_csv<R: std::io::Read>(input: R, label_kind: LabelKind, has_header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let offset = usize::from(has_header) + 1;
    let mut samples = Vec::new();
    let mut dim = None;
    for (i, rec) in reader.records().enumerate() {
        let row = i + offset;
        let rec = rec.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        if rec.len() < 2 {
            return Err(Error::Parse { row, message: "need a label and at least one feature".into() });
        }
        let label = parse_label(&rec[0])
            .ok_or_else(|| Error::Parse { row, message: format!("bad label {:?}", &rec[0]) })?;
        if !label_kind.accepts(label) {
            return Err(Error::Schema { row, message: format!("label {label} not valid for {label_kind:?}") });
        }
        let features = rec
            .iter()
            .skip(1)
            .map(|f| {
                f.replace('\u{2212}', "-")
                    .parse::<f64>()
                    .map_err(|_| Error::Parse { row, message: format!("bad number {f:?}") })
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(features.len()),
            Some(d) if d != features.len() => {
                return Err(Error::Schema {
                    row,
                    message: format!("expected {d} features, found {}", features.len()),
                })
            }
            _ => {}
        }
        samples.push(LabeledSample { features, label });
    }
    if samples.is_empty() {
        return Err(Error::input("dataset file has no data rows"));
    }
    Dataset::new(samples, label_kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

impl TryFrom<i8> for Orientation {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Orientation::Positive),
            -1 => Ok(Orientation::Negative),
            other => Err(format!("orientation must be +1 or -1, got {other}")),
        }
    }
}

impl From<Orientation> for i8 {
    fn from(o: Orientation) -> i8 {
        match o {
            Orientation::Positive => 1,
            Orientation::Negative => -1,
        }
    }
}

/// A base classifier `h` with outputs in `[-1, 1]`.
///
/// Stumps output `orientation` when `x[feature] > threshold` and
/// `-orientation` otherwise. Intervals output `orientation` on the closed
/// interval `[a, b]` and `-orientation` outside. Tabulated hypotheses carry one
/// value per sample index and can only be evaluated on their own dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseHypothesis {
    Stump {
        feature: usize,
        threshold: f64,
        orientation: Orientation,
    },
    Interval {
        feature: usize,
        a: f64,
        b: f64,
        orientation: Orientation,
    },
    Tabulated { values: Vec<f64> },
}

impl BaseHypothesis {
    pub fn stump(feature: usize, threshold: f64, orientation: Orientation) -> Self {
        BaseHypothesis::Stump { feature, threshold, orientation }
    }

    pub fn interval(feature: usize, a: f64, b: f64, orientation: Orientation) -> Self {
        BaseHypothesis::Interval { feature, a, b, orientation }
    }

    pub fn tabulated(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(-1.0..=1.0).contains(v)) {
            return Err(Error::input("tabulated hypothesis values must lie in [-1, 1]"));
        }
        Ok(BaseHypothesis::Tabulated { values })
    }

    /// Value at the sample with index `index` and features `x`.
    pub fn value(&self, index: usize, x: &[f64]) -> Result<f64> {
        match self {
            BaseHypothesis::Tabulated { values } => values.get(index).copied().ok_or_else(|| {
                Error::input(format!("tabulated hypothesis has no value for sample {index}"))
            }),
            _ => self.predict(x),
        }
    }

    /// Value at a fresh instance; tabulated hypotheses are rejected.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let feat = |j: usize| {
            x.get(j)
                .copied()
                .ok_or_else(|| Error::input(format!("instance has no feature {j}")))
        };
        match *self {
            BaseHypothesis::Stump { feature, threshold, orientation } => {
                let v = feat(feature)?;
                Ok(if v > threshold { orientation.sign() } else { -orientation.sign() })
            }
            BaseHypothesis::Interval { feature, a, b, orientation } => {
                let v = feat(feature)?;
                Ok(if a <= v && v <= b { orientation.sign() } else { -orientation.sign() })
            }
            BaseHypothesis::Tabulated { .. } => Err(Error::Unsupported(
                "tabulated hypotheses can only be evaluated on their own sample".into(),
            )),
        }
    }

    /// Points on `feature` where the output may change. `None` for tabulated.
    pub fn breakpoints(&self, feature: usize) -> Option<Vec<f64>> {
        match *self {
            BaseHypothesis::Stump { feature: f, threshold, .. } => {
                Some(if f == feature { vec![threshold] } else { vec![] })
            }
            BaseHypothesis::Interval { feature: f, a, b, .. } => {
                Some(if f == feature { vec![a, b] } else { vec![] })
            }
            BaseHypothesis::Tabulated { .. } => None,
        }
    }

    pub fn values_on(&self, data: &Dataset) -> Result<Vec<f64>> {
        data.samples()
            .iter()
            .enumerate()
            .map(|(i, s)| self.value(i, &s.features))
            .collect()
    }
}

/// A convex combination `f = Σ w_j h_j` of base hypotheses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VotingClassifier {
    hypotheses: Vec<BaseHypothesis>,
    weights: Vec<f64>,
}

impl VotingClassifier {
    /// Builds the classifier, rescaling nonnegative weights to sum to one.
    pub fn new(hypotheses: Vec<BaseHypothesis>, weights: Vec<f64>) -> Result<Self> {
        if hypotheses.is_empty() || hypotheses.len() != weights.len() {
            return Err(Error::input("need equal, nonzero numbers of hypotheses and weights"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::input("weights must not all be zero"));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { hypotheses, weights })
    }

    pub fn single(h: BaseHypothesis) -> Self {
        Self { hypotheses: vec![h], weights: vec![1.0] }
    }

    pub fn hypotheses(&self) -> &[BaseHypothesis] {
        &self.hypotheses
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn value(&self, index: usize, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (h, w) in self.hypotheses.iter().zip(&self.weights) {
            acc += w * h.value(index, x)?;
        }
        Ok(acc)
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (h, w) in self.hypotheses.iter().zip(&self.weights) {
            acc += w * h.predict(x)?;
        }
        Ok(acc)
    }
}

/// Binary margin `y f(x)`.
pub fn margin_binary(f: &VotingClassifier, s: &LabeledSample) -> Result<f64> {
    if s.label != 1 && s.label != -1 {
        return Err(Error::LabelKind(format!("binary margin needs a ±1 label, got {}", s.label)));
    }
    Ok(s.label as f64 * f.predict(&s.features)?)
}

/// Multiclass margin `f(x, y) - max_{y' != y} f(x, y')` from a score row.
pub fn margin_multiclass(scores: &[f64], label: i64, classes: usize) -> Result<f64> {
    if classes < 2 {
        return Err(Error::domain("multiclass margin needs M >= 2"));
    }
    if scores.len() != classes {
        return Err(Error::input(format!("expected {classes} scores, found {}", scores.len())));
    }
    if label < 0 || label as usize >= classes {
        return Err(Error::LabelKind(format!("label {label} outside 0..{classes}")));
    }
    let y = label as usize;
    let rival = scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(scores[y] - rival)
}

/// A discrete distribution of margins: sorted distinct values with masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginDistribution {
    points: Vec<(f64, f64)>,
}

impl MarginDistribution {
    /// Equal-weight distribution of raw values; duplicates are merged.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::input("margin distribution needs at least one value"));
        }
        let w = 1.0 / values.len() as f64;
        let mut sorted = values.to_vec();
        if sorted.iter().any(|v| v.is_nan()) {
            return Err(Error::input("margin values must not be NaN"));
        }
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut points: Vec<(f64, f64)> = Vec::new();
        let mut run = 0usize;
        for (i, &v) in sorted.iter().enumerate() {
            run += 1;
            if i + 1 == sorted.len() || sorted[i + 1] != v {
                points.push((v, run as f64 * w));
                run = 0;
            }
        }
        Ok(Self { points })
    }

    /// Weighted points in any order. Weights must be nonnegative and sum to 1
    /// within [`WEIGHT_TOL`]; zero-mass points are dropped.
    pub fn from_weighted(mut pts: Vec<(f64, f64)>) -> Result<Self> {
        if pts.iter().any(|(v, w)| v.is_nan() || !w.is_finite() || *w < 0.0) {
            return Err(Error::input("weighted margins must be finite with nonnegative weights"));
        }
        let total: f64 = pts.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("weights sum to {total}, expected 1")));
        }
        pts.retain(|p| p.1 > 0.0);
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (v, w) in pts {
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => points.push((v, w)),
            }
        }
        let total: f64 = points.iter().map(|p| p.1).sum();
        for p in &mut points {
            p.1 /= total;
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.points[0].0
    }

    /// Mass of `{m <= y}`.
    pub fn cdf(&self, y: f64) -> f64 {
        let k = self.points.partition_point(|p| p.0 <= y);
        self.mass_prefix(k)
    }

    /// Mass of `{m < y}`.
    pub fn mass_below(&self, y: f64) -> f64 {
        let k = self.points.partition_point(|p| p.0 < y);
        self.mass_prefix(k)
    }

    fn mass_prefix(&self, k: usize) -> f64 {
        if k == self.points.len() {
            1.0
        } else {
            self.points[..k].iter().fold(0.0, |a, p| a + p.1)
        }
    }

    /// Mass of `{lo < m <= hi}`.
    pub fn mass_in(&self, lo: f64, hi: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.0 > lo && p.0 <= hi)
            .fold(0.0, |a, p| a + p.1)
    }

    /// Mass of `{|m| <= delta}`.
    pub fn mass_abs_le(&self, delta: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.0.abs() <= delta)
            .fold(0.0, |a, p| a + p.1)
    }

    /// Training error `P_n{m <= 0}`; ties at zero count as errors.
    pub fn error_rate(&self) -> f64 {
        self.cdf(0.0)
    }

    /// Expectation of `g(m)`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().fold(0.0, |a, &(v, w)| a + w * g(v))
    }

    /// Distinct positive values, clipped to `(0, 1]`.
    pub fn positive_values_clipped(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .points
            .iter()
            .filter(|p| p.0 > 0.0)
            .map(|p| p.0.min(1.0))
            .collect();
        v.dedup();
        v
    }

    /// Applies `g` to every value and re-merges.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> Self {
        let mut pts: Vec<(f64, f64)> = self.points.iter().map(|&(v, w)| (g(v), w)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut points: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for (v, w) in pts {
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 += w,
                _ => points.push((v, w)),
            }
        }
        Self { points }
    }

    /// Writes `value,weight` rows with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["value", "weight"]).map_err(csv_io)?;
        for (v, p) in &self.points {
            w.write_record(&[v.to_string(), p.to_string()]).map_err(csv_io)?;
        }
        w.flush().map_err(|e| Error::Io { path: "<csv>".into(), source: e })?;
        Ok(())
    }
}

/// `P_n` of the binary margins `y f(x)` over a dataset.
pub fn empirical_margin_distribution(f: &VotingClassifier, data: &Dataset) -> Result<MarginDistribution> {
    MarginDistribution::from_values(&binary_margins(f, data)?)
}

/// Raw binary margins `y_i f(x_i)`, one per sample.
pub fn binary_margins(f: &VotingClassifier, data: &Dataset) -> Result<Vec<f64>> {
    if data.label_kind() != LabelKind::Binary {
        return Err(Error::LabelKind("binary margins need binary labels".into()));
    }
    data.samples()
        .iter()
        .enumerate()
        .map(|(i, s)| Ok(s.label as f64 * f.value(i, &s.features)?))
        .collect()
}

/// Multiclass margins for a table of per-sample score rows.
pub fn multiclass_margin_distribution(scores: &[Vec<f64>], data: &Dataset) -> Result<MarginDistribution> {
    let classes = match data.label_kind() {
        LabelKind::Multiclass(m) => m,
        LabelKind::Binary => return Err(Error::LabelKind("expected multiclass labels".into())),
    };
    if scores.len() != data.n() {
        return Err(Error::input("one score row per sample is required"));
    }
    let margins = scores
        .iter()
        .zip(data.samples())
        .map(|(row, s)| margin_multiclass(row, s.label, classes))
        .collect::<Result<Vec<_>>>()?;
    MarginDistribution::from_values(&margins)
}
