use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use assoc2x2::montecarlo::{run_study, DistributionKind, Execution, StudyConfig};
use assoc2x2::report::{self, config, dominance_report, read_results_csv, write_figures};
use assoc2x2::statistics::{pearson_chi_squared, run_all_tests_with, TestSettings};
use assoc2x2::validate::{run_validation, ValidationSizes};
use assoc2x2::assoc::phi_hat;
use assoc2x2::{ContingencyTable, Degeneracy, ZeroCellPolicy};

#[derive(Parser)]
#[command(name = "assoc2x2", version, about = "Tests of independence for 2x2 tables and their power study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the four tests on one table of counts.
    Test {
        /// Counts in row-major order: n11,n12,n21,n22.
        #[arg(long, value_name = "a,b,c,d")]
        table: ContingencyTable,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = ZeroCellPolicy::Haldane)]
        zero_cell_policy: ZeroCellPolicy,
    },
    /// Run the Monte Carlo power study and write every output.
    Study(StudyArgs),
    /// Redraw the figures and dominance report from a results file.
    Figures {
        #[arg(long, value_name = "FILE")]
        results: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, value_name = "DIR", default_value = ".")]
        out: PathBuf,
    },
    /// Run the identity, oracle and calibration checks.
    Validate {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[command(flatten)]
        exec: ExecArgs,
    },
}

#[derive(Args)]
struct ExecArgs {
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct StudyArgs {
    /// Key = value file; flags given on the command line win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    distributions: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    sample_size: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    zero_cell_policy: Option<ZeroCellPolicy>,
    /// Also estimate size over product-form null distributions.
    #[arg(long)]
    null_calibration: bool,
    #[arg(long)]
    null_distributions: Option<usize>,
    #[arg(long, value_name = "DIR", default_value = "results")]
    out: PathBuf,
    #[command(flatten)]
    exec: ExecArgs,
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Usage(anyhow::Error),
    Validation,
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

impl From<assoc2x2::Error> for Failure {
    fn from(e: assoc2x2::Error) -> Self {
        Failure::Usage(e.into())
    }
}

impl StudyArgs {
    fn resolve(&self) -> anyhow::Result<StudyConfig> {
        let mut cfg = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => StudyConfig::default(),
        };
        if let Some(v) = self.distributions {
            cfg.n_distributions = v;
        }
        if let Some(v) = self.replicates {
            cfg.n_replicates = v;
        }
        if let Some(v) = self.sample_size {
            cfg.sample_size = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.seed {
            cfg.master_seed = v;
        }
        if let Some(v) = self.zero_cell_policy {
            cfg.zero_cell_policy = v;
        }
        if self.null_calibration {
            cfg.include_null_calibration = true;
        }
        if let Some(v) = self.null_distributions {
            cfg.n_null_distributions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn with_execution<T>(exec: &ExecArgs, f: impl FnOnce(Execution) -> T + Send) -> anyhow::Result<T>
where
    T: Send,
{
    if exec.sequential {
        return Ok(f(Execution::Sequential));
    }
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(exec.threads)
            .build()
            .context("cannot start thread pool")?;
        Ok(pool.install(|| f(Execution::Parallel)))
    }
    #[cfg(not(feature = "parallel"))]
    {
        Ok(f(Execution::Parallel))
    }
}

fn degeneracy_note(d: Degeneracy) -> &'static str {
    match d {
        Degeneracy::None => "",
        Degeneracy::ZeroCellAdjusted => "  [zero cell: +0.5 to every cell]",
        Degeneracy::ZeroCellUnresolved => "  [zero cell: not rejected]",
        Degeneracy::MarginDegenerate => "  [empty margin: undefined]",
    }
}

fn cmd_test(table: ContingencyTable, alpha: f64, policy: ZeroCellPolicy) -> Result<(), Failure> {
    let settings = TestSettings::new(alpha, policy)?;
    println!(
        "table {table}  n = {}  alpha = {alpha}  critical value {:.6}",
        table.n(),
        settings.critical_value()
    );
    if let (Ok(phi), Ok(chi2)) = (phi_hat(&table), pearson_chi_squared(&table)) {
        println!("phi_hat = {phi:.6}  Pearson chi-squared = {chi2:.6}");
    }
    for outcome in run_all_tests_with(&table, &settings) {
        let stat = match outcome.statistic.finite() {
            Some(z) => format!("{z:>12.6}"),
            None => format!("{:>12}", outcome.statistic.to_string()),
        };
        println!(
            "{}  {:<26} {stat}  {}{}",
            outcome.kind.label(),
            outcome.kind.description(),
            if outcome.reject { "reject" } else { "do not reject" },
            degeneracy_note(outcome.degeneracy)
        );
    }
    Ok(())
}

fn cmd_study(args: &StudyArgs) -> Result<(), Failure> {
    let cfg = args.resolve()?;
    let study = with_execution(&args.exec, |exec| run_study(&cfg, exec))??;
    let written = report::write_study_outputs(&study, &args.out)?;
    println!("{}", dominance_report(&study.distributions).headline());
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_figures(results: &Path, alpha: f64, out: &Path) -> Result<(), Failure> {
    let rows = read_results_csv(results, DistributionKind::Alternative)?;
    if rows.is_empty() {
        return Err(anyhow::anyhow!("{} holds no rows", results.display()).into());
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(anyhow::anyhow!("alpha must lie in (0, 1)").into());
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let mut written = write_figures(&rows, alpha, out)?;
    let path = out.join(report::DOMINANCE_FILE);
    std::fs::write(&path, dominance_report(&rows).to_text())
        .with_context(|| format!("cannot write {}", path.display()))?;
    written.push(path);
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_validate(seed: u64, exec: &ExecArgs) -> Result<(), Failure> {
    let checks = with_execution(exec, |e| run_validation(&ValidationSizes::default(), seed, e))?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        println!("{failed} of {} checks failed", checks.len());
        return Err(Failure::Validation);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Test {
            table,
            alpha,
            zero_cell_policy,
        } => cmd_test(table, alpha, zero_cell_policy),
        Command::Study(args) => cmd_study(&args),
        Command::Figures { results, alpha, out } => cmd_figures(&results, alpha, &out),
        Command::Validate { seed, exec } => cmd_validate(seed, &exec),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
