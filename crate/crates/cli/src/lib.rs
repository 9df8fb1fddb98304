//! Command implementations behind the `mhlab` binary.
//!
//! Every experiment is one subcommand reading a TOML configuration document
//! and writing CSV (plus one-line JSON records for verdicts) into the output
//! directory. Exit codes: 0 on success, 1 on numeric failure, 2 on
//! configuration errors. Identical config + seed produce byte-identical
//! output files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use mhlab::config::ExperimentConfig;
use mhlab::kernel::{empirical_measure, MhKernel};
use mhlab::lyapunov::{
    classify_regime, cross_validate, probe_limits, CrossValidation, RegimeParams,
};
use mhlab::model::ProposalVariant;
use mhlab::rate::{rate_function, slope_experiment};
use mhlab::report;
use mhlab::Point;

#[derive(Debug, Parser)]
#[command(
    name = "mhlab",
    about = "Metropolis-Hastings kernel laboratory: regime classification, tail-limit probes, rate functions and ergodicity diagnostics",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify configured parameter cells analytically.
    Classify(CommonArgs),
    /// Probe the two tail limits along a radius schedule.
    Probe(CommonArgs),
    /// Evaluate the rate function at a configured measure.
    Rate(CommonArgs),
    /// Exact decay-rate experiment on a small chain.
    Slope(CommonArgs),
    /// Total-variation decay and minorization diagnostics.
    Ergodicity(CommonArgs),
    /// Simulate the configured kernel and dump the trace.
    Simulate(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the TOML configuration document.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for CSV reports.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed from the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Thread count for parallel probe/mesh evaluation.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Errors split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration could not be loaded, parsed or validated (exit 2).
    Config(String),
    /// A numeric computation failed (exit 1).
    Numeric(String),
    /// Output files could not be written (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

fn cfg_err(e: mhlab::Error) -> CliError {
    CliError::Config(e.to_string())
}

fn num_err(e: mhlab::Error) -> CliError {
    CliError::Numeric(e.to_string())
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn run(cli: Cli, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(args) => cmd_classify(&args, stdout),
        Command::Probe(args) => cmd_probe(&args, stdout),
        Command::Rate(args) => cmd_rate(&args, stdout),
        Command::Slope(args) => cmd_slope(&args, stdout),
        Command::Ergodicity(args) => cmd_ergodicity(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
    }
}

fn prepare(args: &CommonArgs) -> Result<ExperimentConfig, CliError> {
    if let Some(n) = args.threads {
        // Ignore the error when a global pool already exists (tests call
        // run() repeatedly in one process).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = ExperimentConfig::load(&args.config).map_err(cfg_err)?;
    fs::create_dir_all(&args.out).map_err(io_err)?;
    Ok(config)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut f = fs::File::create(path).map_err(io_err)?;
    f.write_all(contents).map_err(io_err)
}

fn cmd_classify(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let cells = config.classify_cells().map_err(cfg_err)?;
    // Parameter validation is part of the configuration contract.
    let verdicts: Vec<(String, mhlab::lyapunov::RegimeVerdict<f64>)> = cells
        .into_iter()
        .map(|(label, params)| classify_regime(params).map(|v| (label, v)).map_err(cfg_err))
        .collect::<Result<_, _>>()?;

    writeln!(stdout, "label\tfamily\texists_lyapunov\tldp\tclause").map_err(io_err)?;
    let mut records = String::new();
    for (label, v) in &verdicts {
        writeln!(stdout, "{label}\t{}\t{}\t{}\t{}", v.family, v.existence, v.ldp, v.clause)
            .map_err(io_err)?;
        records.push_str(&report::verdict_record(label, v));
        records.push('\n');
    }
    write_file(&args.out.join("verdicts.jsonl"), records.as_bytes())
}

/// Recovers the classifier parameters of the configured kernel.
fn regime_params_of(kernel: &MhKernel<f64>) -> RegimeParams<f64> {
    let target = kernel.target();
    match kernel.proposal().variant() {
        ProposalVariant::Independent(f) => RegimeParams::Imh {
            eta: target.eta(),
            alpha: target.alpha(),
            gamma: f.coeff(),
            beta: f.exponent(),
        },
        ProposalVariant::Langevin { epsilon } => RegimeParams::Mala {
            eta: target.eta(),
            alpha: target.alpha(),
            epsilon: *epsilon,
        },
        ProposalVariant::RandomWalk(_) => RegimeParams::Rwm,
    }
}

fn cmd_probe(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let kernel = config.build_kernel().map_err(cfg_err)?;
    let candidates = config.build_candidates(&kernel).map_err(cfg_err)?;
    let radii = config.probe_radii(kernel.dim());
    let directions = config.probe_directions(kernel.dim()).map_err(cfg_err)?;
    let thresholds = config.probe_thresholds();
    let verdict = classify_regime(regime_params_of(&kernel)).map_err(cfg_err)?;

    for candidate in &candidates {
        let report_data =
            probe_limits(&kernel, candidate, &radii, &directions, &thresholds).map_err(num_err)?;
        let mut csv = Vec::new();
        report::write_probe_csv(&report_data, &mut csv).map_err(io_err)?;
        let file = args.out.join(format!("probe_{}.csv", sanitize(&report_data.candidate_label)));
        write_file(&file, &csv)?;
        let cross = match cross_validate(&verdict, &report_data) {
            CrossValidation::Consistent => "consistent".to_string(),
            CrossValidation::Inconsistent => "inconsistent".to_string(),
            CrossValidation::Inconclusive(reason) => format!("inconclusive ({reason})"),
        };
        writeln!(
            stdout,
            "candidate={} acceptance_to_one={} exp_integral_to_zero={} analytic={} cross_validation={}",
            report_data.candidate_label,
            report_data.verdict_acceptance_to_one,
            report_data.verdict_exp_integral_to_zero,
            verdict.existence,
            cross,
        )
        .map_err(io_err)?;
    }
    Ok(())
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '_' || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

fn cmd_rate(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let chain = config.build_chain().map_err(cfg_err)?;
    let mu = config.rate_measure(&chain).map_err(cfg_err)?;
    let result = rate_function(&chain, &mu).map_err(num_err)?;

    let mut csv = Vec::new();
    report::write_rate_csv(&result, &mut csv).map_err(io_err)?;
    write_file(&args.out.join("rate.csv"), &csv)?;
    let mut coupling = Vec::new();
    report::write_coupling_csv(&result, &mut coupling).map_err(io_err)?;
    write_file(&args.out.join("coupling.csv"), &coupling)?;
    let mut chain_csv = Vec::new();
    report::write_chain_csv(&chain, &mut chain_csv).map_err(io_err)?;
    write_file(&args.out.join("chain.csv"), &chain_csv)?;

    writeln!(
        stdout,
        "value={} dual={} gap={} iterations={} marginal_violation={}{}",
        report::fmt_float(result.value),
        report::fmt_float(result.dual_value),
        report::fmt_float(result.gap),
        result.iterations,
        report::fmt_float(result.marginal_violation),
        result
            .infeasibility
            .as_ref()
            .map(|c| format!(" infeasible=\"{c}\""))
            .unwrap_or_default(),
    )
    .map_err(io_err)
}

fn cmd_slope(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let chain = config.build_chain().map_err(cfg_err)?;
    let (event, section) = config.slope_event(chain.n_states()).map_err(cfg_err)?;
    let mesh_step = section.mesh_step.unwrap_or(0.002);
    let report_data = slope_experiment(&chain, &event, section.x0, &section.n_values, mesh_step)
        .map_err(num_err)?;

    let mut csv = Vec::new();
    report::write_slope_csv(&report_data, &mut csv).map_err(io_err)?;
    write_file(&args.out.join("slope.csv"), &csv)?;

    for i in 0..report_data.n_values.len() {
        writeln!(
            stdout,
            "n={} slope={}",
            report_data.n_values[i],
            report::fmt_float(report_data.slopes[i]),
        )
        .map_err(io_err)?;
    }
    writeln!(stdout, "rate_infimum={}", report::fmt_float(report_data.rate_infimum))
        .map_err(io_err)
}

fn cmd_ergodicity(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let chain = config.build_chain().map_err(cfg_err)?;
    let section = config
        .ergodicity
        .clone()
        .ok_or_else(|| CliError::Config("config is missing the [ergodicity] section".into()))?;
    let decay = mhlab::ergodicity::tv_decay(&chain, section.x0, section.i_max).map_err(num_err)?;

    let mut csv = Vec::new();
    report::write_tv_csv(&decay, &mut csv).map_err(io_err)?;
    write_file(&args.out.join("tv_decay.csv"), &csv)?;
    writeln!(
        stdout,
        "fitted_rate={} fitted_prefactor={}",
        report::fmt_float(decay.fitted_rate),
        report::fmt_float(decay.fitted_prefactor),
    )
    .map_err(io_err)?;

    if let Some(j) = section.minorization_j {
        let c_states = section
            .small_set
            .clone()
            .unwrap_or_else(|| (0..chain.n_states()).collect());
        match mhlab::ergodicity::check_minorization(&chain, &c_states, j).map_err(cfg_err)? {
            mhlab::ergodicity::Minorization::Found { epsilon, .. } => {
                writeln!(stdout, "minorization_epsilon={}", report::fmt_float(epsilon))
                    .map_err(io_err)?;
            }
            mhlab::ergodicity::Minorization::None => {
                writeln!(stdout, "minorization_epsilon=0").map_err(io_err)?;
            }
        }
    }
    Ok(())
}

fn cmd_simulate(args: &CommonArgs, stdout: &mut impl std::io::Write) -> Result<(), CliError> {
    let config = prepare(args)?;
    let kernel = config.build_kernel().map_err(cfg_err)?;
    let section = config
        .simulate
        .clone()
        .ok_or_else(|| CliError::Config("config is missing the [simulate] section".into()))?;
    let x0 = Point::new(section.x0.clone()).map_err(cfg_err)?;
    let seed = args.seed.unwrap_or_else(|| config.seed());
    let trace = kernel.simulate(&x0, section.steps, seed).map_err(num_err)?;

    let mut csv = Vec::new();
    report::write_trace_csv(&trace, &mut csv).map_err(io_err)?;
    write_file(&args.out.join("trace.csv"), &csv)?;

    let grid = match config.grid {
        Some(_) => Some(config.build_grid().map_err(cfg_err)?),
        None => None,
    };
    let mu = empirical_measure(&trace, grid.as_ref());
    let mut mu_csv = Vec::new();
    report::write_empirical_csv(&mu, &mut mu_csv).map_err(io_err)?;
    write_file(&args.out.join("empirical.csv"), &mu_csv)?;

    writeln!(
        stdout,
        "steps={} seed={seed} acceptance_rate={}",
        section.steps,
        report::fmt_float(trace.acceptance_rate()),
    )
    .map_err(io_err)
}
