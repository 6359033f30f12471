//! `results.csv`: one row per distribution, fixed column order, floats at
//! 17 significant digits so a read-back is bit-exact.

use std::path::Path;

use crate::assoc::JointDistribution;
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::montecarlo::{DistributionKind, DistributionResult, PowerEstimate};
use crate::statistics::TestKind;

pub const HEADER: [&str; 20] = [
    "distribution_id",
    "p11",
    "p12",
    "p21",
    "p22",
    "log_odds",
    "phi",
    "power_z1",
    "power_z2",
    "power_z3",
    "power_z4",
    "se_z1",
    "se_z2",
    "se_z3",
    "se_z4",
    "degenerate_z1",
    "degenerate_z2",
    "degenerate_z3",
    "degenerate_z4",
    "cochran_violations",
];

fn fmt_f64(x: f64) -> String {
    ExtReal::from_f64(x).to_string()
}

fn record(row: &DistributionResult) -> Vec<String> {
    let mut fields = Vec::with_capacity(HEADER.len());
    fields.push(row.id.to_string());
    fields.extend(row.distribution.cells().map(fmt_f64));
    fields.push(row.true_log_odds.to_string());
    fields.push(fmt_f64(row.true_phi));
    fields.extend(row.estimates.iter().map(|e| fmt_f64(e.power)));
    fields.extend(row.estimates.iter().map(|e| fmt_f64(e.mc_std_error)));
    fields.extend(row.estimates.iter().map(|e| e.n_degenerate.to_string()));
    fields.push(row.cochran_violations.to_string());
    fields
}

/// Serializes rows to CSV text (header plus one line per row).
pub fn results_to_string(rows: &[DistributionResult]) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for row in rows {
        writer.write_record(record(row)).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn write_results_csv(rows: &[DistributionResult], path: &Path) -> Result<()> {
    std::fs::write(path, results_to_string(rows)).map_err(|e| Error::io(path, e))
}

fn parse_row(fields: &csv::StringRecord, kind: DistributionKind) -> std::result::Result<DistributionResult, String> {
    if fields.len() != HEADER.len() {
        return Err(format!("expected {} columns, found {}", HEADER.len(), fields.len()));
    }
    let ext = |i: usize| fields[i].parse::<ExtReal>();
    let real = |i: usize| ext(i).map(ExtReal::to_f64);
    let count = |i: usize| {
        fields[i]
            .trim()
            .parse::<u64>()
            .map_err(|e| format!("{}: {e}", HEADER[i]))
    };

    let id = count(0)? as usize;
    let cells = [real(1)?, real(2)?, real(3)?, real(4)?];
    let distribution = JointDistribution::from_cells(cells).map_err(|e| e.to_string())?;
    let true_log_odds = ext(5)?;
    let true_phi = real(6)?;
    let mut estimates = Vec::with_capacity(4);
    for test in TestKind::ALL {
        let i = test.index();
        let power = real(7 + i)?;
        if !(0.0..=1.0).contains(&power) {
            return Err(format!("{} = {power} outside [0, 1]", HEADER[7 + i]));
        }
        estimates.push(PowerEstimate {
            distribution_id: id,
            test,
            power,
            mc_std_error: real(11 + i)?,
            n_degenerate: count(15 + i)?,
            true_log_odds,
            true_phi,
        });
    }
    Ok(DistributionResult {
        id,
        kind,
        distribution,
        true_log_odds,
        true_phi,
        estimates: estimates.try_into().expect("four tests"),
        cochran_violations: count(19)?,
    })
}

pub fn parse_results(text: &str, kind: DistributionKind) -> std::result::Result<Vec<DistributionResult>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        return Err("unexpected header".to_string());
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(|e| e.to_string())?;
            parse_row(&rec, kind).map_err(|m| format!("row {}: {m}", i + 1))
        })
        .collect()
}

pub fn read_results_csv(path: &Path, kind: DistributionKind) -> Result<Vec<DistributionResult>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_results(&text, kind).map_err(|m| Error::parse(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{estimate_power, run_study, Execution, StudyConfig};
    use proptest::prelude::*;

    #[test]
    fn header_and_row_count() {
        let cfg = StudyConfig {
            n_distributions: 12,
            n_replicates: 20,
            ..StudyConfig::default()
        };
        let study = run_study(&cfg, Execution::Sequential).unwrap();
        let text = results_to_string(&study.distributions);
        assert!(text.ends_with('\n'));
        assert_eq!(text.lines().count(), 13);
        assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
        let back = parse_results(&text, DistributionKind::Alternative).unwrap();
        assert_eq!(back, study.distributions);
    }

    #[test]
    fn strong_alternative_reads_back_high() {
        let q = JointDistribution::new(0.45, 0.05, 0.05, 0.45).unwrap();
        let row = estimate_power(0, DistributionKind::Alternative, &q, &StudyConfig::default(), Execution::Parallel)
            .unwrap();
        let back = parse_results(&results_to_string(&[row]), DistributionKind::Alternative).unwrap();
        assert!(back[0].estimates.iter().all(|e| e.power > 0.99));
    }

    #[test]
    fn malformed_input() {
        assert!(parse_results("a,b\n1,2\n", DistributionKind::Alternative).is_err());
        let mut text = HEADER.join(",");
        text.push_str("\n1,2,3\n");
        assert!(parse_results(&text, DistributionKind::Alternative).is_err());
    }

    fn arb_row() -> impl Strategy<Value = DistributionResult> {
        (
            0usize..10_000,
            prop::array::uniform4(1e-9f64..1.0),
            prop::array::uniform4(0u64..=1000),
            prop::array::uniform4(0u64..=1000),
            any::<u64>(),
        )
            .prop_map(|(id, w, hits, degenerate, cochran)| {
                let q = JointDistribution::from_weights(w).unwrap();
                let truth = (crate::assoc::log_odds(&q), crate::assoc::phi(&q).unwrap());
                let estimates = TestKind::ALL.map(|test| {
                    let power = hits[test.index()] as f64 / 1000.0;
                    PowerEstimate {
                        distribution_id: id,
                        test,
                        power,
                        mc_std_error: crate::montecarlo::mc_std_error(power, 1000),
                        n_degenerate: degenerate[test.index()],
                        true_log_odds: truth.0,
                        true_phi: truth.1,
                    }
                });
                DistributionResult {
                    id,
                    kind: DistributionKind::Alternative,
                    distribution: q,
                    true_log_odds: truth.0,
                    true_phi: truth.1,
                    estimates,
                    cochran_violations: cochran,
                }
            })
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(rows in prop::collection::vec(arb_row(), 0..8)) {
            let text = results_to_string(&rows);
            let back = parse_results(&text, DistributionKind::Alternative).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
