//! Pairwise power comparisons between the four tests.

use std::fmt::Write;

use crate::montecarlo::DistributionResult;
use crate::statistics::TestKind;

/// Outcome counts for one ordered pair of tests over all distributions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCount {
    pub first: TestKind,
    pub second: TestKind,
    /// Distributions where `first` has strictly higher power.
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub n_distributions: usize,
    /// All twelve ordered pairs, `first` major.
    pub pairs: Vec<PairCount>,
    /// Tests with power at least that of every other test on every distribution.
    pub weakly_dominant: Vec<TestKind>,
}

impl DominanceReport {
    pub fn pair(&self, first: TestKind, second: TestKind) -> Option<&PairCount> {
        self.pairs
            .iter()
            .find(|p| p.first == first && p.second == second)
    }

    /// True when `test` is strictly beaten by some other test on at least
    /// one distribution.
    pub fn is_ever_beaten(&self, test: TestKind) -> bool {
        self.pairs
            .iter()
            .any(|p| p.first == test && p.losses > 0)
    }

    pub fn headline(&self) -> String {
        match self.weakly_dominant.as_slice() {
            [] => "no test dominates all others on every distribution".to_string(),
            tests => {
                let names: Vec<&str> = tests.iter().map(|t| t.label()).collect();
                format!(
                    "{} weakly dominate(s) all other tests on every distribution",
                    names.join(", ")
                )
            }
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.headline());
        let _ = writeln!(out, "distributions: {}", self.n_distributions);
        let _ = writeln!(out);
        let _ = writeln!(out, "first,second,first_higher,second_higher,ties");
        for p in &self.pairs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                p.first, p.second, p.wins, p.losses, p.ties
            );
        }
        out
    }
}

pub fn dominance_report(rows: &[DistributionResult]) -> DominanceReport {
    let mut pairs = Vec::with_capacity(12);
    for first in TestKind::ALL {
        for second in TestKind::ALL {
            if first == second {
                continue;
            }
            let mut count = PairCount {
                first,
                second,
                wins: 0,
                losses: 0,
                ties: 0,
            };
            for row in rows {
                let (a, b) = (row.power(first), row.power(second));
                if a > b {
                    count.wins += 1;
                } else if a < b {
                    count.losses += 1;
                } else {
                    count.ties += 1;
                }
            }
            pairs.push(count);
        }
    }
    let weakly_dominant = TestKind::ALL
        .into_iter()
        .filter(|&t| pairs.iter().all(|p| p.first != t || p.losses == 0))
        .collect();
    DominanceReport {
        n_distributions: rows.len(),
        pairs,
        weakly_dominant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assoc::JointDistribution;
    use crate::montecarlo::{estimate_power_batch, run_study, DistributionKind, Execution, StudyConfig};

    #[test]
    fn accounting_identity() {
        let cfg = StudyConfig {
            n_distributions: 30,
            n_replicates: 100,
            ..StudyConfig::default()
        };
        let rows = run_study(&cfg, Execution::Parallel).unwrap().distributions;
        let report = dominance_report(&rows);
        assert_eq!(report.pairs.len(), 12);
        for p in &report.pairs {
            assert_eq!(p.wins + p.losses + p.ties, 30);
            let mirror = report.pair(p.second, p.first).unwrap();
            assert_eq!(p.wins, mirror.losses);
            assert_eq!(p.ties, mirror.ties);
        }
        let text = report.to_text();
        assert_eq!(text.lines().filter(|l| l.starts_with('Z')).count(), 12);
    }

    #[test]
    fn saturated_alternatives_tie() {
        let strong: Vec<_> = [
            [0.46, 0.04, 0.04, 0.46],
            [0.04, 0.46, 0.46, 0.04],
            [0.47, 0.03, 0.04, 0.46],
        ]
        .iter()
        .map(|c| JointDistribution::from_cells(*c).unwrap())
        .collect();
        let rows = estimate_power_batch(
            &strong,
            DistributionKind::Alternative,
            &StudyConfig::default(),
            Execution::Parallel,
        )
        .unwrap();
        let report = dominance_report(&rows);
        assert!(rows.iter().all(|r| r.true_phi.abs() > 0.8));
        for p in &report.pairs {
            assert!(p.ties >= p.wins + p.losses, "{p:?}");
        }
    }
}
