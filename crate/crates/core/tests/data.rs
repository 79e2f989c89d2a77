use std::fs;

use marginlab::data::{
    binary_margins, empirical_margin_distribution, load_csv, margin_multiclass, read_csv, BaseHypothesis,
    Dataset, LabelKind, MarginDistribution, Orientation, VotingClassifier,
};
use marginlab::Error;
use proptest::prelude::*;

fn stump_strategy() -> impl Strategy<Value = BaseHypothesis> {
    (0.0..1.0f64, any::<bool>()).prop_map(|(t, pos)| {
        BaseHypothesis::stump(0, t, if pos { Orientation::Positive } else { Orientation::Negative })
    })
}

fn classifier_strategy() -> impl Strategy<Value = VotingClassifier> {
    prop::collection::vec((stump_strategy(), 0.01..5.0f64), 1..8).prop_map(|hw| {
        let (h, w): (Vec<_>, Vec<_>) = hw.into_iter().unzip();
        VotingClassifier::new(h, w).unwrap()
    })
}

fn dataset_strategy() -> impl Strategy<Value = Dataset> {
    prop::collection::vec((0.0..1.0f64, any::<bool>()), 1..60).prop_map(|v| {
        let xs: Vec<f64> = v.iter().map(|p| p.0).collect();
        let ys: Vec<i64> = v.iter().map(|p| if p.1 { 1 } else { -1 }).collect();
        Dataset::from_1d(&xs, &ys).unwrap()
    })
}

proptest! {
    #[test]
    fn voting_values_stay_in_unit_interval(f in classifier_strategy(), x in -0.5..1.5f64) {
        let v = f.predict(&[x]).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        let total: f64 = f.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_error_is_cdf_at_zero(f in classifier_strategy(), data in dataset_strategy()) {
        let d = empirical_margin_distribution(&f, &data).unwrap();
        let m = binary_margins(&f, &data).unwrap();
        let count = m.iter().filter(|&&v| v <= 0.0).count() as f64 / m.len() as f64;
        prop_assert!((d.error_rate() - count).abs() < 1e-12);
        prop_assert_eq!(d.error_rate(), d.cdf(0.0));
    }

    #[test]
    fn cdf_is_a_distribution_function(vals in prop::collection::vec(-1.0..1.0f64, 1..80), a in -1.2..1.2f64, b in -1.2..1.2f64) {
        let d = MarginDistribution::from_values(&vals).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(d.cdf(lo) <= d.cdf(hi));
        prop_assert_eq!(d.cdf(1.0), 1.0);
        prop_assert_eq!(d.cdf(-1.0 - 1e-9), 0.0);
        prop_assert!((d.mass_in(lo, hi) - (d.cdf(hi) - d.cdf(lo))).abs() < 1e-12);
        let total: f64 = d.points().iter().map(|p| p.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_class_margin_matches_binary(s0 in -1.0..1.0f64, s1 in -1.0..1.0f64, label in 0i64..2) {
        let multi = margin_multiclass(&[s0, s1], label, 2).unwrap();
        let y = if label == 1 { 1.0 } else { -1.0 };
        prop_assert!((multi - y * (s1 - s0)).abs() < 1e-15);
    }
}

#[test]
fn csv_round_trip_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    let data = Dataset::from_1d(&[0.25, 0.5, 0.125], &[1, -1, 1]).unwrap();
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    fs::write(&path, buf).unwrap();
    let back = load_csv(&path, LabelKind::Binary, false).unwrap();
    assert_eq!(back, data);
}

#[test]
fn csv_errors_carry_the_row() {
    let err = read_csv("1,0.5\n-1,abc\n".as_bytes(), LabelKind::Binary, false).unwrap_err();
    assert!(matches!(err, Error::Parse { row: 2, .. }), "{err:?}");
    let err = read_csv("1,0.5\n1,0.5,0.7\n".as_bytes(), LabelKind::Binary, false).unwrap_err();
    assert!(matches!(err, Error::Schema { row: 2, .. }), "{err:?}");
    let err = read_csv("2,0.5\n".as_bytes(), LabelKind::Binary, false).unwrap_err();
    assert!(matches!(err, Error::Schema { row: 1, .. }), "{err:?}");
    assert!(load_csv("/nonexistent/x.csv", LabelKind::Binary, false).is_err());
}

#[test]
fn multiclass_labels_are_checked() {
    let ok = read_csv("0,1\n2,3\n".as_bytes(), LabelKind::Multiclass(3), false).unwrap();
    assert_eq!(ok.n(), 2);
    assert!(read_csv("3,1\n".as_bytes(), LabelKind::Multiclass(3), false).is_err());
    assert!(margin_multiclass(&[0.1, 0.2], 0, 3).is_err());
}
