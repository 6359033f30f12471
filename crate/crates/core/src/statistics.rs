//! The four tests of independence and the policy layer that keeps them
//! total on degenerate tables.
//!
//! | test | estimate        | variance                         |
//! |------|-----------------|----------------------------------|
//! | Z1   | `ln theta_hat`  | `sum 1/n_ij`                     |
//! | Z2   | `ln theta_hat`  | null variance from the margins   |
//! | Z3   | `phi_hat`       | plug-in delta method             |
//! | Z4   | `phi_hat`       | `1/n`                            |
//!
//! Tables with a zero cell but positive margins go through the configured
//! [`ZeroCellPolicy`]. Tables with an empty row or column never reject.

use std::fmt;
use std::str::FromStr;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::assoc::{log_odds_of_cells, phi_hat, ContingencyTable};
use crate::asymptotics::{
    delta_var_of_cells, delta_var_phi_plugin, score_var_of_cells, wald_var_of_cells,
};
use crate::error::{Error, Result};
use crate::extended::ExtReal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestKind {
    WaldLogOr,
    ScoreLogOr,
    WaldPhi,
    ScorePhi,
}

impl TestKind {
    pub const ALL: [TestKind; 4] = [
        TestKind::WaldLogOr,
        TestKind::ScoreLogOr,
        TestKind::WaldPhi,
        TestKind::ScorePhi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `Z1` .. `Z4`
    pub fn label(self) -> &'static str {
        match self {
            TestKind::WaldLogOr => "Z1",
            TestKind::ScoreLogOr => "Z2",
            TestKind::WaldPhi => "Z3",
            TestKind::ScorePhi => "Z4",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            TestKind::WaldLogOr => "Wald, log odds ratio",
            TestKind::ScoreLogOr => "Rao score, log odds ratio",
            TestKind::WaldPhi => "Wald, phi",
            TestKind::ScorePhi => "Rao score, phi",
        }
    }

    /// True for the two tests built on the log odds ratio.
    pub fn uses_log_odds(self) -> bool {
        matches!(self, TestKind::WaldLogOr | TestKind::ScoreLogOr)
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How a zero cell in an otherwise usable table is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZeroCellPolicy {
    /// Add 0.5 to every cell before computing the affected statistic.
    #[default]
    Haldane,
    /// Leave the statistic undefined and count the table as a non-rejection.
    NeverReject,
}

impl ZeroCellPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            ZeroCellPolicy::Haldane => "haldane",
            ZeroCellPolicy::NeverReject => "never-reject",
        }
    }
}

impl fmt::Display for ZeroCellPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ZeroCellPolicy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "haldane" => Ok(ZeroCellPolicy::Haldane),
            "never-reject" | "fail-never-reject" => Ok(ZeroCellPolicy::NeverReject),
            other => Err(format!(
                "unknown zero-cell policy {other:?} (expected haldane or never-reject)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    None,
    /// A zero cell was replaced by the Haldane-Anscombe correction.
    ZeroCellAdjusted,
    /// A zero cell left the statistic undefined under `NeverReject`.
    ZeroCellUnresolved,
    /// An entire row or column is empty.
    MarginDegenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub kind: TestKind,
    pub statistic: ExtReal,
    pub reject: bool,
    pub degeneracy: Degeneracy,
    pub critical_value: f64,
    /// The zero-cell policy in force whenever `degeneracy` is not `None`.
    pub policy: Option<ZeroCellPolicy>,
    /// `n phi_hat^2`, reported by the score test on phi only.
    pub chi_squared: Option<f64>,
}

/// Two-sided standard normal quantile `z_{1 - alpha/2}`.
pub fn critical_value(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha {alpha} outside (0, 1)")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - alpha / 2.0))
}

/// Level, critical value and zero-cell policy shared by all four tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestSettings {
    alpha: f64,
    critical_value: f64,
    policy: ZeroCellPolicy,
}

impl TestSettings {
    pub fn new(alpha: f64, policy: ZeroCellPolicy) -> Result<Self> {
        Ok(Self {
            alpha,
            critical_value: critical_value(alpha)?,
            policy,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn critical_value(&self) -> f64 {
        self.critical_value
    }

    pub fn policy(&self) -> ZeroCellPolicy {
        self.policy
    }
}

impl Default for TestSettings {
    fn default() -> Self {
        Self::new(0.05, ZeroCellPolicy::Haldane).expect("0.05 is a valid level")
    }
}

impl TestSettings {
    fn outcome(&self, kind: TestKind, statistic: ExtReal, degeneracy: Degeneracy) -> TestOutcome {
        let reject = match statistic {
            ExtReal::Finite(z) => z.abs() > self.critical_value,
            ExtReal::PosInf | ExtReal::NegInf => true,
            ExtReal::Undefined => false,
        };
        TestOutcome {
            kind,
            statistic,
            reject,
            degeneracy,
            critical_value: self.critical_value,
            policy: (degeneracy != Degeneracy::None).then_some(self.policy),
            chi_squared: None,
        }
    }

    fn margin_degenerate(&self, kind: TestKind) -> TestOutcome {
        self.outcome(kind, ExtReal::Undefined, Degeneracy::MarginDegenerate)
    }

    /// Cells to feed a zero-sensitive statistic, or `None` when the policy
    /// leaves it undefined.
    fn resolve_zero_cells(&self, t: &ContingencyTable) -> Option<([f64; 4], Degeneracy)> {
        if !t.has_zero_cell() {
            return Some((t.cells_f64(), Degeneracy::None));
        }
        match self.policy {
            ZeroCellPolicy::Haldane => Some((
                t.cells_f64().map(|c| c + 0.5),
                Degeneracy::ZeroCellAdjusted,
            )),
            ZeroCellPolicy::NeverReject => None,
        }
    }
}

fn ratio(numerator: ExtReal, variance: f64) -> ExtReal {
    match numerator {
        ExtReal::Finite(x) => ExtReal::from_f64(x / variance.sqrt()),
        other => other,
    }
}

/// `ln theta_hat` of an observed table (no adjustment).
pub fn log_odds_hat(t: &ContingencyTable) -> ExtReal {
    log_odds_of_cells(&t.cells_f64())
}

/// Classical `sum (O - E)^2 / E` with `E_ij = n_i+ n_+j / n`.
pub fn pearson_chi_squared(t: &ContingencyTable) -> Result<f64> {
    if !t.has_positive_margins() {
        return Err(Error::DegenerateMargin);
    }
    let n = t.n() as f64;
    let rows = t.row_margins().map(|m| m as f64);
    let cols = t.col_margins().map(|m| m as f64);
    let observed = t.cells_f64();
    let mut total = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / n;
            let diff = observed[2 * i + j] - expected;
            total += diff * diff / expected;
        }
    }
    Ok(total)
}

/// Smallest expected count `n_i+ n_+j / n`; `None` for an empty table.
pub fn min_expected_count(t: &ContingencyTable) -> Option<f64> {
    let n = t.n();
    (n > 0).then(|| {
        let rows = t.row_margins();
        let cols = t.col_margins();
        (rows[0].min(rows[1]) as f64) * (cols[0].min(cols[1]) as f64) / n as f64
    })
}

pub fn z1_wald_log_or(t: &ContingencyTable, settings: &TestSettings) -> TestOutcome {
    let kind = TestKind::WaldLogOr;
    if !t.has_positive_margins() {
        return settings.margin_degenerate(kind);
    }
    match settings.resolve_zero_cells(t) {
        Some((cells, degeneracy)) => {
            let z = ratio(log_odds_of_cells(&cells), wald_var_of_cells(&cells));
            settings.outcome(kind, z, degeneracy)
        }
        None => settings.outcome(kind, ExtReal::Undefined, Degeneracy::ZeroCellUnresolved),
    }
}

pub fn z2_score_log_or(t: &ContingencyTable, settings: &TestSettings) -> TestOutcome {
    let kind = TestKind::ScoreLogOr;
    if !t.has_positive_margins() {
        return settings.margin_degenerate(kind);
    }
    match settings.resolve_zero_cells(t) {
        Some((cells, degeneracy)) => {
            let z = ratio(log_odds_of_cells(&cells), score_var_of_cells(&cells));
            settings.outcome(kind, z, degeneracy)
        }
        None => settings.outcome(kind, ExtReal::Undefined, Degeneracy::ZeroCellUnresolved),
    }
}

/// `phi_hat` over its plug-in delta-method standard error. With a zero cell
/// the estimate stays unadjusted; under `Haldane` only the variance is
/// evaluated on the corrected table.
pub fn z3_wald_phi(t: &ContingencyTable, settings: &TestSettings) -> TestOutcome {
    let kind = TestKind::WaldPhi;
    let Ok(estimate) = phi_hat(t) else {
        return settings.margin_degenerate(kind);
    };
    if let Ok(var) = delta_var_phi_plugin(t) {
        return settings.outcome(kind, ratio(ExtReal::Finite(estimate), var.value), Degeneracy::None);
    }
    match settings.resolve_zero_cells(t) {
        Some((cells, degeneracy)) => {
            let n: f64 = cells.iter().sum();
            let props = cells.map(|c| c / n);
            let var = delta_var_of_cells(&props, n);
            settings.outcome(kind, ratio(ExtReal::Finite(estimate), var), degeneracy)
        }
        None => settings.outcome(kind, ExtReal::Undefined, Degeneracy::ZeroCellUnresolved),
    }
}

/// `sqrt(n) phi_hat`; the outcome also carries `n phi_hat^2`.
pub fn z4_score_phi(t: &ContingencyTable, settings: &TestSettings) -> TestOutcome {
    let kind = TestKind::ScorePhi;
    let Ok(estimate) = phi_hat(t) else {
        return settings.margin_degenerate(kind);
    };
    let n = t.n() as f64;
    let mut outcome = settings.outcome(kind, ExtReal::Finite(n.sqrt() * estimate), Degeneracy::None);
    outcome.chi_squared = Some(n * estimate * estimate);
    outcome
}

/// All four outcomes in `Z1..Z4` order, sharing one table.
pub fn run_all_tests_with(t: &ContingencyTable, settings: &TestSettings) -> [TestOutcome; 4] {
    [
        z1_wald_log_or(t, settings),
        z2_score_log_or(t, settings),
        z3_wald_phi(t, settings),
        z4_score_phi(t, settings),
    ]
}

/// All four tests at level `alpha` with the default zero-cell policy.
pub fn run_all_tests(t: &ContingencyTable, alpha: f64) -> Result<[TestOutcome; 4]> {
    let settings = TestSettings::new(alpha, ZeroCellPolicy::default())?;
    Ok(run_all_tests_with(t, &settings))
}
