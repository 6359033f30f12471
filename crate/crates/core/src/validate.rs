//! Self-checks run by the `validate` subcommand: structural identities,
//! the chi-squared identity, the phi gradient against finite differences,
//! sampler moments and the empirical size of every test.

use rand::Rng;

use crate::assoc::{
    canonical_singular_values, odds_ratio, phi, pillars, rho_signed, rho_squared, JointDistribution,
};
use crate::asymptotics::{delta_var_phi, phi_gradient};
use crate::montecarlo::{
    estimate_power_batch, sample_multinomial, sample_product_distribution,
    sample_uniform_dirichlet, substream, DistributionKind, Execution, StreamDomain, StudyConfig,
};
use crate::statistics::{pearson_chi_squared, z4_score_phi, TestKind, TestSettings};

/// Tolerances for identities that are closed-form arithmetic.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerances for identities that pass through a singular value or a ratio.
pub const SVD_TOL: f64 = 1e-10;
pub const FD_STEP: f64 = 1e-7;
pub const FD_REL_TOL: f64 = 1e-6;
/// Gradient components smaller than this are compared absolutely.
pub const FD_ABS_FLOOR: f64 = 1e-3;
pub const SIZE_BAND: (f64, f64) = (0.02, 0.09);
/// Two-sample Kolmogorov-Smirnov coefficient at the 1% level.
pub const KS_C_ALPHA_1PCT: f64 = 1.628;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationSizes {
    pub identity_draws: usize,
    pub chi_squared_tables: usize,
    pub gradient_draws: usize,
    pub null_variance_draws: usize,
    pub dirichlet_draws: usize,
    pub size_distributions: usize,
    pub size_replicates: usize,
}

impl Default for ValidationSizes {
    fn default() -> Self {
        Self {
            identity_draws: 10_000,
            chi_squared_tables: 1_000,
            gradient_draws: 1_000,
            null_variance_draws: 200,
            dirichlet_draws: 100_000,
            size_distributions: 20,
            size_replicates: 1_000,
        }
    }
}

/// Domain tag for validation draws: reuse the null-distribution stream
/// family with a high index range so no study stream is shared.
const VALIDATION_OFFSET: u64 = 1 << 48;

fn validation_rng(seed: u64, check: u64) -> rand_chacha::ChaCha8Rng {
    substream(seed, StreamDomain::NullDistribution, VALIDATION_OFFSET + check, 0)
}

/// Central difference of phi in cell `i`, perturbing that cell and
/// renormalizing the four cells back onto the simplex.
pub fn finite_difference_gradient(q: &JointDistribution, step: f64) -> [f64; 4] {
    std::array::from_fn(|i| {
        let at = |delta: f64| {
            let mut w = q.cells();
            w[i] += delta;
            JointDistribution::from_weights(w)
                .ok()
                .and_then(|p| phi(&p).ok())
                .unwrap_or(f64::NAN)
        };
        (at(step) - at(-step)) / (2.0 * step)
    })
}

/// Kolmogorov-Smirnov distance between two empirical distributions.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

pub fn ks_critical_value(na: usize, nb: usize, c_alpha: f64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    c_alpha * ((na + nb) / (na * nb)).sqrt()
}

/// False for NaN deviations.
fn within(dev: f64, tol: f64) -> bool {
    dev < tol
}

fn check(name: &'static str, failures: usize, total: usize, worst: f64) -> CheckResult {
    CheckResult {
        name,
        passed: failures == 0,
        detail: format!("{failures} of {total} violated; worst deviation {worst:.3e}"),
    }
}

pub fn check_identities(draws: usize, seed: u64) -> CheckResult {
    let mut rng = validation_rng(seed, 1);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let q = sample_uniform_dirichlet(&mut rng);
        let (Ok(phi), Ok(rho), Ok(p), Ok((s1, s2)), Ok(r2)) = (
            phi(&q),
            rho_signed(&q),
            pillars(&q),
            canonical_singular_values(&q),
            rho_squared(&q),
        ) else {
            failures += 1;
            continue;
        };
        let theta = odds_ratio(&q).finite().unwrap_or(f64::NAN);
        let theta_rel = ((theta - (p.g1 / p.g2).powi(2)) / theta).abs();
        let devs = [
            ((rho - phi).abs(), EXACT_TOL),
            (theta_rel, SVD_TOL),
            ((s1 - 1.0).abs(), SVD_TOL),
            ((s2 - phi.abs()).abs(), SVD_TOL),
            ((r2 - phi * phi).abs(), SVD_TOL),
        ];
        let mut bad = false;
        for (dev, tol) in devs {
            worst = worst.max(dev);
            bad |= !within(dev, tol);
        }
        failures += usize::from(bad);
    }
    check("phi = rho and canonical-correlation identities", failures, draws, worst)
}

pub fn check_chi_squared(tables: usize, seed: u64) -> CheckResult {
    let mut rng = validation_rng(seed, 2);
    let settings = TestSettings::default();
    let mut failures = 0;
    let mut worst = 0.0f64;
    let mut checked = 0;
    while checked < tables {
        let q = sample_uniform_dirichlet(&mut rng);
        let n = rng.random_range(2..=500);
        let t = sample_multinomial(&q, n, &mut rng);
        if !t.has_positive_margins() {
            continue;
        }
        checked += 1;
        let z = z4_score_phi(&t, &settings).statistic.finite().unwrap_or(f64::NAN);
        let dev = (z * z - pearson_chi_squared(&t).unwrap_or(f64::NAN)).abs();
        worst = worst.max(dev);
        failures += usize::from(!within(dev, SVD_TOL));
    }
    check("n phi_hat^2 = Pearson chi-squared", failures, tables, worst)
}

pub fn check_gradient(draws: usize, seed: u64) -> CheckResult {
    let mut rng = validation_rng(seed, 3);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let q = sample_uniform_dirichlet(&mut rng);
        let Ok(g) = phi_gradient(&q) else {
            failures += 1;
            continue;
        };
        let fd = finite_difference_gradient(&q, FD_STEP);
        let mut bad = false;
        for (a, b) in g.as_array().iter().zip(fd) {
            let rel = (a - b).abs() / a.abs().max(FD_ABS_FLOOR);
            worst = worst.max(rel);
            bad |= !within(rel, FD_REL_TOL);
        }
        failures += usize::from(bad);
    }
    check("phi gradient vs central finite differences", failures, draws, worst)
}

pub fn check_null_variance(draws: usize, seed: u64) -> CheckResult {
    let mut rng = validation_rng(seed, 4);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let q = sample_product_distribution(&mut rng, 0.01, 0.99);
        let n = rng.random_range(1..=10_000u64);
        let dev = delta_var_phi(&q, n)
            .map(|v| (v.value - 1.0 / n as f64).abs())
            .unwrap_or(f64::INFINITY);
        worst = worst.max(dev);
        failures += usize::from(!within(dev, SVD_TOL));
    }
    check("delta-method variance is 1/n under independence", failures, draws, worst)
}

pub fn check_dirichlet(draws: usize, seed: u64) -> CheckResult {
    let mut rng = validation_rng(seed, 5);
    // coordinate k is read from its own block of draws so the four samples
    // compared by Kolmogorov-Smirnov are independent
    let coords: Vec<Vec<f64>> = (0..4)
        .map(|k| {
            (0..draws)
                .map(|_| sample_uniform_dirichlet(&mut rng).cells()[k])
                .collect()
        })
        .collect();
    let n = draws as f64;
    let mean = coords[0].iter().sum::<f64>() / n;
    let var = coords[0].iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mut passed = (mean - 0.25).abs() <= 0.01 && (var - 3.0 / 80.0).abs() <= 0.003;
    let critical = ks_critical_value(draws, draws, KS_C_ALPHA_1PCT);
    let mut worst_ks = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            let d = ks_statistic(&coords[i], &coords[j]);
            worst_ks = worst_ks.max(d);
            passed &= d <= critical;
        }
    }
    CheckResult {
        name: "uniform Dirichlet moments and exchangeability",
        passed,
        detail: format!(
            "mean(p11) = {mean:.5} (0.25), var(p11) = {var:.5} (0.0375), max KS = {worst_ks:.5} (critical {critical:.5})"
        ),
    }
}

pub fn check_size(distributions: usize, replicates: usize, seed: u64, execution: Execution) -> CheckResult {
    let mut rng = validation_rng(seed, 6);
    let nulls: Vec<_> = (0..distributions)
        .map(|_| sample_product_distribution(&mut rng, 0.2, 0.8))
        .collect();
    let cfg = StudyConfig {
        n_replicates: replicates,
        master_seed: seed,
        ..StudyConfig::default()
    };
    let (lo, hi) = SIZE_BAND;
    match estimate_power_batch(&nulls, DistributionKind::NullCalibration, &cfg, execution) {
        Ok(rows) => {
            let sizes: Vec<f64> = rows.iter().flat_map(|r| r.estimates.map(|e| e.power)).collect();
            let min = sizes.iter().copied().fold(f64::INFINITY, f64::min);
            let max = sizes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut detail = format!("sizes in [{min:.3}, {max:.3}], band [{lo}, {hi}]");
            for test in TestKind::ALL {
                let mean = rows.iter().map(|r| r.power(test)).sum::<f64>() / rows.len() as f64;
                detail.push_str(&format!("; mean {test} {mean:.4}"));
            }
            CheckResult {
                name: "empirical size at alpha = 0.05",
                passed: min >= lo && max <= hi,
                detail,
            }
        }
        Err(e) => CheckResult {
            name: "empirical size at alpha = 0.05",
            passed: false,
            detail: e.to_string(),
        },
    }
}

pub fn run_validation(sizes: &ValidationSizes, seed: u64, execution: Execution) -> Vec<CheckResult> {
    vec![
        check_identities(sizes.identity_draws, seed),
        check_chi_squared(sizes.chi_squared_tables, seed),
        check_gradient(sizes.gradient_draws, seed),
        check_null_variance(sizes.null_variance_draws, seed),
        check_dirichlet(sizes.dirichlet_draws, seed),
        check_size(sizes.size_distributions, sizes.size_replicates, seed, execution),
    ]
}
