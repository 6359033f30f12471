//! Properties of a seeded default study and of the files written from it.

use std::sync::OnceLock;

use assoc2x2::montecarlo::{run_study, DistributionKind, Execution, StudyConfig, StudyResult};
use assoc2x2::report::figures::{correlation_panel, power_vs_measure, Smoothing};
use assoc2x2::report::results::{parse_results, results_to_string};
use assoc2x2::report::{dominance_report, write_study_outputs};
use assoc2x2::TestKind;

fn default_study() -> &'static StudyResult {
    static STUDY: OnceLock<StudyResult> = OnceLock::new();
    STUDY.get_or_init(|| run_study(&StudyConfig::default(), Execution::Parallel).unwrap())
}

#[test]
fn spline_near_null_is_low() {
    for test in TestKind::ALL {
        let curve = power_vs_measure(&default_study().distributions, test, Smoothing::CubicSmoothingSpline);
        let at_zero = curve.spline.as_ref().expect("spline fit").eval(0.0);
        assert!(at_zero < 0.2, "{test}: spline(0) = {at_zero}");
    }
}

#[test]
fn power_series_are_positively_correlated() {
    let panel = correlation_panel(&default_study().distributions);
    for i in 0..4 {
        for j in (i + 1)..4 {
            assert!(panel.correlations[i][j] > 0.0, "corr({i},{j}) = {}", panel.correlations[i][j]);
        }
    }
    let z4_z2 = panel.correlations[TestKind::ScorePhi.index()][TestKind::ScoreLogOr.index()];
    assert!(z4_z2 > 0.8, "corr(Z4, Z2) = {z4_z2}");
    for h in panel.histograms {
        assert_eq!(h.len(), 20);
        assert_eq!(h.iter().sum::<u64>(), 100);
    }
}

#[test]
fn dominance_accounting() {
    let rows = &default_study().distributions;
    let report = dominance_report(rows);
    assert_eq!(report.pairs.len(), 12);
    for p in &report.pairs {
        assert_eq!(p.wins + p.losses + p.ties, rows.len());
        let mirror = report.pair(p.second, p.first).unwrap();
        assert_eq!((p.wins, p.losses, p.ties), (mirror.losses, mirror.wins, mirror.ties));
    }
    assert!(report.weakly_dominant.is_empty());
}

#[test]
fn results_file_shape_and_round_trip() {
    let study = default_study();
    let text = results_to_string(&study.distributions);
    assert_eq!(text.lines().count(), 101);
    let back = parse_results(&text, DistributionKind::Alternative).unwrap();
    assert_eq!(&back, &study.distributions);
    for row in &back {
        assert!(row.estimates.iter().all(|e| (0.0..=1.0).contains(&e.power)));
    }
}

#[test]
fn written_outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let files_a = write_study_outputs(default_study(), a.path()).unwrap();
    let again = run_study(&StudyConfig::default(), Execution::Sequential).unwrap();
    let files_b = write_study_outputs(&again, b.path()).unwrap();
    assert_eq!(files_a.len(), files_b.len());
    for name in [
        "results.csv",
        "fig_wald.svg",
        "fig_rao.svg",
        "fig_corr_panel.svg",
        "dominance.txt",
        "config_echo.txt",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty(), "{name} empty");
        assert_eq!(x, y, "{name} differs");
    }
}
