//! `zds`: exact uniformity-statistic distributions from the command line.

mod cache;
mod output;

use std::fmt;
use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use zds::rational::exact_decimal_string;
use zds::{
    binomial_coefficient, brute_force_counts, chi2_from_s_f64, chi2_survival, implied_s,
    monte_carlo_pmf, nist_report, synthesize_with_budget, threshold_scan_with_budget,
    type1_error, Contribution, ExactDistribution, KsConvention, PValueMethod,
    SynthesisSpec, DEFAULT_CELL_BUDGET,
};

use output::{build_file, to_csv, to_json};

#[derive(Debug)]
pub enum CliError {
    Lib(zds::Error),
    Io { path: PathBuf, source: std::io::Error },
    Cache { path: PathBuf, reason: String },
    Usage(String),
    EngineMismatch,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(err) => err.fmt(f),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Cache { path, reason } => {
                write!(f, "corrupt cache file {}: {reason}", path.display())
            }
            CliError::Usage(message) => f.write_str(message),
            CliError::EngineMismatch => {
                f.write_str("engine and enumeration disagree; see the rows above")
            }
        }
    }
}

impl From<zds::Error> for CliError {
    fn from(err: zds::Error) -> Self {
        CliError::Lib(err)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(err) => match err {
                zds::Error::ResourceGuard { .. } | zds::Error::OracleGuard { .. } => 3,
                zds::Error::InvalidSpec(_)
                | zds::Error::BadParameter { .. }
                | zds::Error::BadValue { .. }
                | zds::Error::ZeroDof
                | zds::Error::NegativeChi2(_)
                | zds::Error::NotInSupport { .. }
                | zds::Error::BinomialDomain { .. } => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "zds",
    version,
    about = "Exact distributions of the squared-counts uniformity statistic, \
             with chi-squared comparison reports"
)]
struct Cli {
    /// Directory for cached distribution tables (overrides ZDS_CACHE_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Bypass the distribution cache
    #[arg(long, global = true)]
    no_cache: bool,
    /// Refuse syntheses estimated above this many table cells
    #[arg(long, global = true, value_name = "CELLS")]
    cell_budget: Option<u128>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the exact distribution table as JSON or CSV
    Dist {
        /// Sample size N
        #[arg(long = "N")]
        sample_size: u64,
        /// Bin count n
        #[arg(long = "n")]
        bins: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Output path (stdout when omitted)
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Statistic: squared bin counts, or absolute deviations from N/n
        #[arg(long, value_enum, default_value_t = StatArg::Chi2)]
        stat: StatArg,
    },
    /// Exact and approximate p-values at an observed statistic
    Pvalue {
        #[arg(long = "N")]
        sample_size: u64,
        #[arg(long = "n")]
        bins: u64,
        /// Observed chi-squared value (snapped to the nearest achievable s)
        #[arg(long)]
        chi2: Option<f64>,
        /// Observed integer statistic (must be achievable)
        #[arg(long)]
        s: Option<u64>,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// K-S distance between the exact and chi-squared CDFs
    Ks {
        #[arg(long = "N")]
        sample_size: u64,
        #[arg(long = "n")]
        bins: u64,
        #[arg(long, value_enum, default_value_t = ConventionArg::RealLine)]
        convention: ConventionArg,
    },
    /// First sample size whose K-S distance drops below a threshold
    Threshold {
        #[arg(long = "n")]
        bins: u64,
        /// K-S threshold to cross
        #[arg(long)]
        ks: f64,
        #[arg(long = "max-N")]
        max_sample_size: u64,
        /// Jump-point reads reproduce the documented crossings
        #[arg(long, value_enum, default_value_t = ConventionArg::JumpPoints)]
        convention: ConventionArg,
    },
    /// True type-I error rate of a p-value rejection rule
    Type1 {
        #[arg(long = "N")]
        sample_size: u64,
        #[arg(long = "n")]
        bins: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Reject on p <= alpha instead of the default strict p < alpha
        #[arg(long)]
        le: bool,
    },
    /// Type-I error rates over a range of sample sizes, as CSV
    Type1Sweep {
        #[arg(long = "n")]
        bins: u64,
        #[arg(long)]
        alpha: f64,
        #[arg(long = "N-from")]
        sample_size_from: u64,
        #[arg(long = "N-to")]
        sample_size_to: u64,
    },
    /// The fixed N=55, n=10 uniformity-testing report
    Nist,
    /// Brute-force enumeration cross-check against the engine
    Oracle {
        #[arg(long = "N")]
        sample_size: u64,
        #[arg(long = "n")]
        bins: u64,
    },
    /// Monte Carlo estimate of the statistic's pmf
    Mc {
        #[arg(long = "N")]
        sample_size: u64,
        #[arg(long = "n")]
        bins: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StatArg {
    Chi2,
    Absdev,
}

impl StatArg {
    fn tag(self) -> &'static str {
        match self {
            StatArg::Chi2 => "chi2",
            StatArg::Absdev => "absdev",
        }
    }

    fn contribution(self) -> Contribution {
        match self {
            StatArg::Chi2 => Contribution::Squared,
            StatArg::Absdev => Contribution::AbsDeviation,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Exact,
    Approx,
    Both,
}

impl MethodArg {
    fn methods(self) -> &'static [PValueMethod] {
        match self {
            MethodArg::Exact => &[PValueMethod::Exact],
            MethodArg::Approx => &[PValueMethod::Approx],
            MethodArg::Both => &[PValueMethod::Exact, PValueMethod::Approx],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConventionArg {
    RealLine,
    JumpPoints,
}

impl From<ConventionArg> for KsConvention {
    fn from(arg: ConventionArg) -> Self {
        match arg {
            ConventionArg::RealLine => KsConvention::RealLineSup,
            ConventionArg::JumpPoints => KsConvention::JumpPointsOnly,
        }
    }
}

struct Ctx {
    cache_dir: Option<PathBuf>,
    budget: u128,
}

/// Twelve significant digits, locale-independent.
fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

fn main() {
    let cli = Cli::parse();
    let cache_dir = if cli.no_cache {
        None
    } else {
        cli.cache_dir.clone().or_else(|| {
            std::env::var("ZDS_CACHE_DIR")
                .ok()
                .filter(|dir| !dir.is_empty())
                .map(PathBuf::from)
        })
    };
    let ctx = Ctx { cache_dir, budget: cli.cell_budget.unwrap_or(DEFAULT_CELL_BUDGET) };
    if let Err(err) = run(cli.command, &ctx) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

/// Cache-backed distribution fetch; falls back to synthesis and fills the
/// cache on a miss.
fn distribution(
    ctx: &Ctx,
    sample_size: u64,
    bins: u64,
    stat: StatArg,
) -> Result<ExactDistribution, CliError> {
    if let Some(dir) = &ctx.cache_dir {
        if let Some(dist) = cache::load(dir, sample_size, bins, stat.tag())? {
            return Ok(dist);
        }
    }
    let mut spec = SynthesisSpec::new(sample_size, bins);
    spec.contribution = stat.contribution();
    let table = synthesize_with_budget(&spec, ctx.budget)?;
    let dist = ExactDistribution::from_counts(&table)?;
    if let Some(dir) = &ctx.cache_dir {
        cache::store(dir, &dist, stat.tag(), stat == StatArg::Chi2)?;
    }
    Ok(dist)
}

fn run(command: Command, ctx: &Ctx) -> Result<(), CliError> {
    match command {
        Command::Dist { sample_size, bins, format, out, stat } => {
            let dist = distribution(ctx, sample_size, bins, stat)?;
            let file = build_file(&dist, stat.tag(), stat == StatArg::Chi2);
            let body = match format {
                FormatArg::Json => to_json(&file),
                FormatArg::Csv => to_csv(&file),
            };
            match out {
                Some(path) => fs::write(&path, body)
                    .map_err(|source| CliError::Io { path, source })?,
                None => print!("{body}"),
            }
            Ok(())
        }
        Command::Pvalue { sample_size, bins, chi2, s, method } => {
            let dist = distribution(ctx, sample_size, bins, StatArg::Chi2)?;
            let (s_observed, chi2_observed) = match (chi2, s) {
                (Some(_), Some(_)) | (None, None) => {
                    return Err(CliError::Usage(
                        "pass exactly one of --chi2 or --s".into(),
                    ))
                }
                (Some(value), None) => {
                    if !value.is_finite() {
                        return Err(CliError::Lib(zds::Error::BadValue {
                            name: "chi2",
                            value,
                        }));
                    }
                    let snapped =
                        dist.snap_observed(implied_s(sample_size, bins, value))?;
                    (snapped, value)
                }
                (None, Some(value)) => {
                    (value, chi2_from_s_f64(sample_size, bins, value))
                }
            };
            println!("N = {sample_size}, n = {bins}, s = {s_observed}, chi2 = {chi2_observed}");
            for m in method.methods() {
                match m {
                    PValueMethod::Exact => {
                        let p = dist.exact_p_value_f64(s_observed)?;
                        println!("exact  = {}", fmt12(p));
                    }
                    PValueMethod::Approx => {
                        let p = chi2_survival(bins.saturating_sub(1), chi2_observed)?;
                        println!("approx = {}", fmt12(p));
                    }
                }
            }
            Ok(())
        }
        Command::Ks { sample_size, bins, convention } => {
            let dist = distribution(ctx, sample_size, bins, StatArg::Chi2)?;
            let report = zds::ks_statistic_with(&dist, convention.into())?;
            println!(
                "K-S distance: N = {sample_size}, n = {bins} (convention: {})",
                report.convention.label()
            );
            println!(
                "D = {} at s = {} ({})",
                fmt12(report.d),
                report.s_at_sup,
                side_label(report.side)
            );
            Ok(())
        }
        Command::Threshold { bins, ks, max_sample_size, convention } => {
            let result = threshold_scan_with_budget(
                bins,
                ks,
                max_sample_size,
                convention.into(),
                ctx.budget,
            )?;
            println!(
                "threshold scan: n = {bins}, K-S threshold {ks} (convention: {})",
                result.convention.label()
            );
            match result.first_sample_size {
                Some(found) => println!("first N below threshold: {found}"),
                None => println!(
                    "first N below threshold: none up to max-N = {max_sample_size}"
                ),
            }
            println!("trace:");
            println!("N,D");
            for (sample_size, d) in result.trace {
                println!("{sample_size},{d}");
            }
            Ok(())
        }
        Command::Type1 { sample_size, bins, alpha, method, le } => {
            let dist = distribution(ctx, sample_size, bins, StatArg::Chi2)?;
            for m in method.methods() {
                let report = type1_error(&dist, alpha, *m, !le)?;
                let rule = if report.strict { "p < alpha" } else { "p <= alpha" };
                println!(
                    "type-I error: N = {sample_size}, n = {bins}, alpha = {alpha}, \
                     method = {}, rule: {rule}",
                    report.method.label()
                );
                match report.rejection_min_s {
                    Some(s) => println!("rejection region: s >= {s}"),
                    None => println!("rejection region: empty"),
                }
                println!(
                    "rate = {} (exactly {})",
                    fmt12(report.rate_f64),
                    exact_decimal_string(&report.rate)
                );
            }
            Ok(())
        }
        Command::Type1Sweep { bins, alpha, sample_size_from, sample_size_to } => {
            if sample_size_from > sample_size_to {
                return Err(CliError::Usage(
                    "--N-from must not exceed --N-to".into(),
                ));
            }
            let mut rows = Vec::new();
            for sample_size in sample_size_from..=sample_size_to {
                let table = synthesize_with_budget(
                    &SynthesisSpec::new(sample_size, bins),
                    ctx.budget,
                )?;
                let dist = ExactDistribution::from_counts(&table)?;
                let exact = type1_error(&dist, alpha, PValueMethod::Exact, true)?;
                let approx = type1_error(&dist, alpha, PValueMethod::Approx, true)?;
                rows.push((sample_size, exact.rate_f64, approx.rate_f64));
            }
            println!("N,n,alpha,rate_exact,rate_approx");
            for (sample_size, exact, approx) in rows {
                println!("{sample_size},{bins},{alpha},{exact},{approx}");
            }
            Ok(())
        }
        Command::Nist => {
            let report = nist_report()?;
            println!(
                "uniformity test at N = {}, n = {}, alpha = {}",
                report.sample_size, report.bins, report.alpha
            );
            println!("s,chi2,pvalue_exact,pvalue_approx");
            for row in &report.rows {
                println!(
                    "{},{},{},{}",
                    row.s,
                    row.chi2,
                    fmt12(row.exact_p),
                    fmt12(row.approx_p)
                );
            }
            print_rate("exact", &report.type1_exact);
            print_rate("approx", &report.type1_approx);
            Ok(())
        }
        Command::Oracle { sample_size, bins } => {
            let enumerated = brute_force_counts(sample_size, bins)?;
            let engine = distribution(ctx, sample_size, bins, StatArg::Chi2)?;
            let histograms =
                binomial_coefficient(sample_size + bins - 1, bins - 1)?;
            println!(
                "brute-force enumeration: N = {sample_size}, n = {bins} \
                 ({histograms} histograms)"
            );
            println!("s,count");
            for (s, count) in &enumerated {
                println!("{s},{count}");
            }
            let engine_cells: std::collections::BTreeMap<u64, num_bigint::BigUint> =
                engine
                    .support()
                    .iter()
                    .cloned()
                    .zip(engine.counts().iter().cloned())
                    .collect();
            if engine_cells == enumerated {
                println!("verdict: EQUAL");
                Ok(())
            } else {
                println!("verdict: MISMATCH");
                Err(CliError::EngineMismatch)
            }
        }
        Command::Mc { sample_size, bins, trials, seed } => {
            let estimate = monte_carlo_pmf(sample_size, bins, trials, seed)?;
            println!(
                "monte carlo: N = {sample_size}, n = {bins}, trials = {trials}, \
                 seed = {seed}, generator = {}",
                estimate.generator
            );
            println!("s,count,pmf");
            for (&s, &tally) in &estimate.tallies {
                println!("{s},{tally},{}", tally as f64 / trials as f64);
            }
            Ok(())
        }
    }
}

fn side_label(side: zds::Side) -> &'static str {
    match side {
        zds::Side::Right => "right value",
        zds::Side::Left => "left limit",
    }
}

fn print_rate(label: &str, report: &zds::Type1Report) {
    let from = report
        .rejection_min_s
        .map(|s| format!("rejects from s = {s}"))
        .unwrap_or_else(|| "never rejects".into());
    println!("type-I rate ({label} method): {} ({from})", fmt12(report.rate_f64));
}
