//! Random joint distributions, multinomial tables and the power study.
//!
//! Every random draw comes from a ChaCha8 generator seeded by
//! [`substream_seed`], a pure function of the master seed, a domain tag, the
//! distribution index and the replicate index. Work can therefore be split
//! across threads in any way without changing a single bit of the result:
//! rejection tallies are integers and are merged by addition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};

use crate::assoc::{log_odds, phi, ContingencyTable, JointDistribution};
use crate::error::{Error, Result};
use crate::extended::ExtReal;
use crate::statistics::{
    min_expected_count, run_all_tests_with, Degeneracy, TestKind, TestSettings, ZeroCellPolicy,
};

/// Expected-count threshold from Cochran's rule of thumb.
pub const COCHRAN_MIN_EXPECTED: f64 = 5.0;

/// Margin range for the product-form distributions of the null batch.
pub const NULL_MARGIN_RANGE: (f64, f64) = (0.1, 0.9);

/// Whether loops may be spread over the rayon pool. Without the `parallel`
/// feature both variants run sequentially.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

/// Separates the random streams of unrelated draws that share indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamDomain {
    AlternativeDistribution = 1,
    AlternativeReplicate = 2,
    NullDistribution = 3,
    NullReplicate = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `hash(master_seed, domain, distribution_index, replicate_index)`, built
/// by chaining the SplitMix64 finalizer over the four words.
pub fn substream_seed(
    master_seed: u64,
    domain: StreamDomain,
    distribution_index: u64,
    replicate_index: u64,
) -> u64 {
    let mut h = splitmix64(master_seed);
    h = splitmix64(h ^ domain as u64);
    h = splitmix64(h ^ distribution_index);
    splitmix64(h ^ replicate_index)
}

pub fn substream(
    master_seed: u64,
    domain: StreamDomain,
    distribution_index: u64,
    replicate_index: u64,
) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(
        master_seed,
        domain,
        distribution_index,
        replicate_index,
    ))
}

/// Uniform draw from the 3-simplex (Dirichlet(1,1,1,1)): four unit
/// exponentials divided by their sum.
pub fn sample_uniform_dirichlet<R: Rng + ?Sized>(rng: &mut R) -> JointDistribution {
    loop {
        let w: [f64; 4] = std::array::from_fn(|_| Exp1.sample(rng));
        if let Ok(q) = JointDistribution::from_weights(w) {
            return q;
        }
    }
}

/// Product distribution with both `P(X=1)` and `P(Y=1)` uniform on `[lo, hi]`.
pub fn sample_product_distribution<R: Rng + ?Sized>(
    rng: &mut R,
    lo: f64,
    hi: f64,
) -> JointDistribution {
    let row1 = rng.random_range(lo..=hi);
    let col1 = rng.random_range(lo..=hi);
    JointDistribution::independent(row1, col1).expect("margins inside [0, 1]")
}

/// Exact binomial draw (inversion for small means, BTPE otherwise).
pub fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p)
        .expect("p checked to lie in (0, 1)")
        .sample(rng)
}

/// Multinomial counts by sequential conditional binomials:
/// `n11 ~ Bin(n, p11)`, `n12 | n11 ~ Bin(n - n11, p12 / (1 - p11))`, ...
pub fn sample_multinomial<R: Rng + ?Sized>(
    q: &JointDistribution,
    n: u64,
    rng: &mut R,
) -> ContingencyTable {
    let p = q.cells();
    let mut counts = [0u64; 4];
    let mut remaining = n;
    for i in 0..3 {
        if remaining == 0 {
            break;
        }
        let rest: f64 = p[i..].iter().sum();
        let cond = if rest > 0.0 { (p[i] / rest).min(1.0) } else { 0.0 };
        counts[i] = sample_binomial(remaining, cond, rng);
        remaining -= counts[i];
    }
    counts[3] = remaining;
    ContingencyTable::from_counts(counts)
}

/// Knobs of the power study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub n_distributions: usize,
    pub n_replicates: usize,
    pub sample_size: u64,
    pub alpha: f64,
    pub master_seed: u64,
    pub zero_cell_policy: ZeroCellPolicy,
    /// Also run a batch of product-form (null) distributions to check size.
    pub include_null_calibration: bool,
    pub n_null_distributions: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_distributions: 100,
            n_replicates: 1000,
            sample_size: 100,
            alpha: 0.05,
            master_seed: 42,
            zero_cell_policy: ZeroCellPolicy::Haldane,
            include_null_calibration: false,
            n_null_distributions: 20,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.n_distributions == 0 {
            return fail("distributions must be at least 1");
        }
        if self.n_replicates == 0 {
            return fail("replicates must be at least 1");
        }
        if self.sample_size == 0 {
            return fail("sample size must be at least 1");
        }
        if self.include_null_calibration && self.n_null_distributions == 0 {
            return fail("null calibration needs at least 1 distribution");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn test_settings(&self) -> Result<TestSettings> {
        TestSettings::new(self.alpha, self.zero_cell_policy)
    }
}

/// Rejection proportion of one test at one distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub distribution_id: usize,
    pub test: TestKind,
    pub power: f64,
    pub mc_std_error: f64,
    /// Replicates on which this test's table needed a degeneracy rule.
    pub n_degenerate: u64,
    pub true_log_odds: ExtReal,
    pub true_phi: f64,
}

impl PowerEstimate {
    fn from_counts(
        distribution_id: usize,
        test: TestKind,
        rejections: u64,
        n_degenerate: u64,
        n_replicates: usize,
        truth: (ExtReal, f64),
    ) -> Self {
        let r = n_replicates as f64;
        let power = rejections as f64 / r;
        Self {
            distribution_id,
            test,
            power,
            mc_std_error: mc_std_error(power, n_replicates),
            n_degenerate,
            true_log_odds: truth.0,
            true_phi: truth.1,
        }
    }
}

/// `sqrt(p (1 - p) / R)`
pub fn mc_std_error(power: f64, n_replicates: usize) -> f64 {
    (power * (1.0 - power) / n_replicates as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Drawn from the uniform Dirichlet; associated with probability one.
    Alternative,
    /// Product-form distribution used to check the size of the tests.
    NullCalibration,
}

/// Everything measured at one joint distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionResult {
    pub id: usize,
    pub kind: DistributionKind,
    pub distribution: JointDistribution,
    pub true_log_odds: ExtReal,
    /// `NaN` only if the distribution has an empty margin.
    pub true_phi: f64,
    /// Indexed by [`TestKind::index`].
    pub estimates: [PowerEstimate; 4],
    /// Replicates whose smallest expected count fell below 5.
    pub cochran_violations: u64,
}

impl DistributionResult {
    pub fn power(&self, test: TestKind) -> f64 {
        self.estimates[test.index()].power
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub distributions: Vec<DistributionResult>,
    pub null_calibration: Vec<DistributionResult>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    rejections: [u64; 4],
    degenerate: [u64; 4],
    cochran_violations: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for i in 0..4 {
            self.rejections[i] += other.rejections[i];
            self.degenerate[i] += other.degenerate[i];
        }
        self.cochran_violations += other.cochran_violations;
        self
    }

    fn record(&mut self, table: &ContingencyTable, settings: &TestSettings) {
        for outcome in run_all_tests_with(table, settings) {
            let i = outcome.kind.index();
            self.rejections[i] += u64::from(outcome.reject);
            self.degenerate[i] += u64::from(outcome.degeneracy != Degeneracy::None);
        }
        if min_expected_count(table).is_none_or(|e| e < COCHRAN_MIN_EXPECTED) {
            self.cochran_violations += 1;
        }
    }
}

/// Replicates per rayon work item; each item still reseeds per replicate.
const REPLICATE_CHUNK: usize = 64;

fn tally_replicates(
    q: &JointDistribution,
    cfg: &StudyConfig,
    settings: &TestSettings,
    domain: StreamDomain,
    distribution_index: u64,
    execution: Execution,
) -> Tally {
    let run_chunk = |chunk: usize| {
        let start = chunk * REPLICATE_CHUNK;
        let end = (start + REPLICATE_CHUNK).min(cfg.n_replicates);
        let mut tally = Tally::default();
        for r in start..end {
            let mut rng = substream(cfg.master_seed, domain, distribution_index, r as u64);
            let table = sample_multinomial(q, cfg.sample_size, &mut rng);
            tally.record(&table, settings);
        }
        tally
    };
    let chunks = cfg.n_replicates.div_ceil(REPLICATE_CHUNK);
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..chunks)
                .into_par_iter()
                .map(run_chunk)
                .reduce(Tally::default, Tally::merge)
        }
        _ => (0..chunks).map(run_chunk).fold(Tally::default(), Tally::merge),
    }
}

fn replicate_domain(kind: DistributionKind) -> StreamDomain {
    match kind {
        DistributionKind::Alternative => StreamDomain::AlternativeReplicate,
        DistributionKind::NullCalibration => StreamDomain::NullReplicate,
    }
}

/// Power of all four tests at `q`: `cfg.n_replicates` multinomial tables of
/// size `cfg.sample_size`, each fed to every test.
pub fn estimate_power(
    id: usize,
    kind: DistributionKind,
    q: &JointDistribution,
    cfg: &StudyConfig,
    execution: Execution,
) -> Result<DistributionResult> {
    cfg.validate()?;
    let settings = cfg.test_settings()?;
    let tally = tally_replicates(q, cfg, &settings, replicate_domain(kind), id as u64, execution);
    let truth = (log_odds(q), phi(q).unwrap_or(f64::NAN));
    let estimates = TestKind::ALL.map(|test| {
        let i = test.index();
        PowerEstimate::from_counts(
            id,
            test,
            tally.rejections[i],
            tally.degenerate[i],
            cfg.n_replicates,
            truth,
        )
    });
    Ok(DistributionResult {
        id,
        kind,
        distribution: *q,
        true_log_odds: truth.0,
        true_phi: truth.1,
        estimates,
        cochran_violations: tally.cochran_violations,
    })
}

/// The `i`-th alternative of a study seeded with `master_seed`.
pub fn alternative_distribution(master_seed: u64, index: usize) -> JointDistribution {
    let mut rng = substream(
        master_seed,
        StreamDomain::AlternativeDistribution,
        index as u64,
        0,
    );
    sample_uniform_dirichlet(&mut rng)
}

/// The `i`-th product-form distribution of the null-calibration batch.
pub fn null_distribution(master_seed: u64, index: usize) -> JointDistribution {
    let mut rng = substream(master_seed, StreamDomain::NullDistribution, index as u64, 0);
    sample_product_distribution(&mut rng, NULL_MARGIN_RANGE.0, NULL_MARGIN_RANGE.1)
}

fn map_indices<T: Send>(
    count: usize,
    execution: Execution,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Vec<T> {
    match execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..count).into_par_iter().map(f).collect()
        }
        _ => (0..count).map(f).collect(),
    }
}

/// Power of each test at each distribution in `distributions`, in order.
pub fn estimate_power_batch(
    distributions: &[JointDistribution],
    kind: DistributionKind,
    cfg: &StudyConfig,
    execution: Execution,
) -> Result<Vec<DistributionResult>> {
    cfg.validate()?;
    map_indices(distributions.len(), execution, |i| {
        estimate_power(i, kind, &distributions[i], cfg, execution)
    })
    .into_iter()
    .collect()
}

/// Runs the whole study. The result depends only on `cfg`, never on the
/// execution mode or thread count.
pub fn run_study(cfg: &StudyConfig, execution: Execution) -> Result<StudyResult> {
    cfg.validate()?;
    let alternatives: Vec<_> = (0..cfg.n_distributions)
        .map(|i| alternative_distribution(cfg.master_seed, i))
        .collect();
    let distributions =
        estimate_power_batch(&alternatives, DistributionKind::Alternative, cfg, execution)?;
    let null_calibration = if cfg.include_null_calibration {
        let nulls: Vec<_> = (0..cfg.n_null_distributions)
            .map(|i| null_distribution(cfg.master_seed, i))
            .collect();
        estimate_power_batch(&nulls, DistributionKind::NullCalibration, cfg, execution)?
    } else {
        Vec::new()
    };
    Ok(StudyResult {
        config: cfg.clone(),
        distributions,
        null_calibration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q(p: [f64; 4]) -> JointDistribution {
        JointDistribution::from_cells(p).unwrap()
    }

    fn small_config() -> StudyConfig {
        StudyConfig {
            n_distributions: 5,
            n_replicates: 50,
            ..StudyConfig::default()
        }
    }

    #[test]
    fn substreams_differ_by_every_index() {
        let base = substream_seed(42, StreamDomain::AlternativeReplicate, 3, 7);
        assert_ne!(base, substream_seed(43, StreamDomain::AlternativeReplicate, 3, 7));
        assert_ne!(base, substream_seed(42, StreamDomain::NullReplicate, 3, 7));
        assert_ne!(base, substream_seed(42, StreamDomain::AlternativeReplicate, 4, 7));
        assert_ne!(base, substream_seed(42, StreamDomain::AlternativeReplicate, 3, 8));
        assert_ne!(
            substream_seed(42, StreamDomain::AlternativeReplicate, 3, 7),
            substream_seed(42, StreamDomain::AlternativeReplicate, 7, 3)
        );
    }

    #[test]
    fn point_mass_multinomial() {
        let mut rng = substream(1, StreamDomain::AlternativeReplicate, 0, 0);
        for _ in 0..100 {
            let t = sample_multinomial(&q([1.0, 0.0, 0.0, 0.0]), 100, &mut rng);
            assert_eq!(t.counts(), [100, 0, 0, 0]);
            let t = sample_multinomial(&q([0.0, 0.0, 0.0, 1.0]), 100, &mut rng);
            assert_eq!(t.counts(), [0, 0, 0, 100]);
        }
    }

    #[test]
    fn multinomial_counts_sum_to_n() {
        let mut rng = substream(2, StreamDomain::AlternativeReplicate, 0, 0);
        for n in [1, 2, 17, 100, 10_000] {
            for _ in 0..200 {
                let dist = sample_uniform_dirichlet(&mut rng);
                assert_eq!(sample_multinomial(&dist, n, &mut rng).n(), n);
            }
        }
    }

    #[test]
    fn multinomial_mean_of_first_cell() {
        let mut rng = substream(3, StreamDomain::AlternativeReplicate, 0, 0);
        let draws = 100_000;
        let total: u64 = (0..draws)
            .map(|_| sample_multinomial(&q([0.25; 4]), 100, &mut rng).counts()[0])
            .sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 25.0).abs() < 0.15, "{mean}");
    }

    #[test]
    fn multinomial_diagonal_covariance() {
        let mut rng = substream(4, StreamDomain::AlternativeReplicate, 0, 0);
        let dist = q([0.4, 0.1, 0.2, 0.3]);
        let draws = 100_000;
        let pairs: Vec<(f64, f64)> = (0..draws)
            .map(|_| {
                let c = sample_multinomial(&dist, 100, &mut rng).counts();
                (c[0] as f64, c[3] as f64)
            })
            .collect();
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / draws as f64;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / draws as f64;
        let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / (draws - 1) as f64;
        assert!((cov + 12.0).abs() < 1.0, "{cov}");
    }

    #[test]
    fn dirichlet_first_two_moments() {
        let mut rng = substream(5, StreamDomain::AlternativeDistribution, 0, 0);
        let draws = 100_000;
        let xs: Vec<f64> = (0..draws)
            .map(|_| sample_uniform_dirichlet(&mut rng).p11())
            .collect();
        let mean = xs.iter().sum::<f64>() / draws as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws - 1) as f64;
        assert!((mean - 0.25).abs() < 0.01);
        assert!((var - 3.0 / 80.0).abs() < 0.003);
    }

    #[test]
    fn product_distributions_are_independent() {
        let mut rng = substream(6, StreamDomain::NullDistribution, 0, 0);
        for _ in 0..100 {
            let dist = sample_product_distribution(&mut rng, 0.2, 0.8);
            assert!(phi(&dist).unwrap().abs() < 1e-12);
            let [r1, _] = dist.row_margins();
            assert!((0.2..=0.8).contains(&r1));
        }
    }

    #[test]
    fn power_is_rejection_proportion() {
        let cfg = small_config();
        let res = estimate_power(0, DistributionKind::Alternative, &q([0.4, 0.1, 0.2, 0.3]), &cfg, Execution::Sequential)
            .unwrap();
        for e in res.estimates {
            let k = (e.power * 50.0).round();
            assert_eq!(e.power, k / 50.0);
            assert_eq!(e.mc_std_error, (e.power * (1.0 - e.power) / 50.0).sqrt());
            assert_relative_eq!(e.true_phi, 0.408248290463863, epsilon = 1e-12);
        }
    }

    #[test]
    fn null_size_in_band() {
        let cfg = StudyConfig::default();
        let res = estimate_power(0, DistributionKind::NullCalibration, &q([0.25; 4]), &cfg, Execution::Parallel)
            .unwrap();
        for e in res.estimates {
            assert!((0.02..=0.09).contains(&e.power), "{:?}", e);
        }
    }

    #[test]
    fn strong_alternative_has_full_power() {
        let cfg = StudyConfig::default();
        let strong = q([0.45, 0.05, 0.05, 0.45]);
        assert_relative_eq!(phi(&strong).unwrap(), 0.8, epsilon = 1e-12);
        let res = estimate_power(0, DistributionKind::Alternative, &strong, &cfg, Execution::Parallel).unwrap();
        for e in res.estimates {
            assert!(e.power > 0.99, "{:?}", e);
        }
    }

    #[test]
    fn seeded_power_is_deterministic_across_execution_modes() {
        let cfg = small_config();
        let dist = q([0.3, 0.2, 0.1, 0.4]);
        let a = estimate_power(3, DistributionKind::Alternative, &dist, &cfg, Execution::Sequential).unwrap();
        let b = estimate_power(3, DistributionKind::Alternative, &dist, &cfg, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn smoke_study() {
        let cfg = StudyConfig {
            include_null_calibration: true,
            n_null_distributions: 3,
            ..small_config()
        };
        let started = std::time::Instant::now();
        let res = run_study(&cfg, Execution::Parallel).unwrap();
        assert!(started.elapsed().as_secs_f64() < 1.0);
        assert_eq!(res.distributions.len(), 5);
        assert_eq!(res.null_calibration.len(), 3);
        for d in &res.distributions {
            assert_eq!(d.kind, DistributionKind::Alternative);
            assert!(d.true_phi.abs() > 0.0);
            assert!(d.estimates.iter().all(|e| (0.0..=1.0).contains(&e.power)));
        }
        let again = run_study(&cfg, Execution::Sequential).unwrap();
        assert_eq!(res, again);
    }

    #[test]
    fn config_validation() {
        assert!(StudyConfig::default().validate().is_ok());
        for bad in [
            StudyConfig { n_replicates: 0, ..StudyConfig::default() },
            StudyConfig { sample_size: 0, ..StudyConfig::default() },
            StudyConfig { alpha: 1.0, ..StudyConfig::default() },
            StudyConfig { n_distributions: 0, ..StudyConfig::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
        }
    }
}
