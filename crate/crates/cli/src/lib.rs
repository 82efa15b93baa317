//! `phat`: evaluate, optimize, sweep and simulate HTT and PHAT policies.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 on a numerical or I/O
//! failure (including a sweep with failed points).

mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use phat_core::optimize::{solve, sweep, EvalMethod, SnrRange, Solution, SolveConfig};
use phat_core::schemes::{
    evaluate, htt_ergodic_throughput, quad_throughput_oracle, HttMethod, Policy, Scheme,
    SystemParams, TauRule,
};
use phat_core::sim::{run_policy_trace_with, FrameRecord};

pub use output::Format;
use output::{num, opt, round12, write_rows, Row};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numerical(phat_core::Error),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
    #[error("{0} result rows failed")]
    PartialFailure(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    fn io(context: &str, source: io::Error) -> Self {
        CliError::Io {
            context: context.to_string(),
            source,
        }
    }

    fn csv(e: csv::Error) -> Self {
        CliError::io("writing csv", e.into())
    }
}

impl From<phat_core::Error> for CliError {
    fn from(e: phat_core::Error) -> Self {
        match e {
            phat_core::Error::Invalid { .. } => CliError::Usage(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "phat",
    version,
    about = "Ergodic uplink throughput of HTT and PHAT duplexing schemes"
)]
pub struct Cli {
    /// JSON or key=value file whose keys mirror the long flag names
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Throughput and UL power of one policy
    Evaluate(EvaluateArgs),
    /// Optimal thresholds for one scheme or all of them
    Optimize(OptimizeArgs),
    /// Optimized throughput of each scheme over a range of SNRs
    Sweep(SweepArgs),
    /// Frame-by-frame trace of a policy
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct LinkArgs {
    /// HAP downlink power in W
    #[arg(long, conflicts_with = "snr_db")]
    pub p_d: Option<f64>,
    /// Sets p_d so that p_d gbar^2 / sigma2 equals this many dB
    #[arg(long, allow_negative_numbers = true)]
    pub snr_db: Option<f64>,
    /// Mean channel power gain
    #[arg(long, default_value_t = 1.0)]
    pub gbar: f64,
    /// Noise variance in W
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
}

impl LinkArgs {
    fn params(&self) -> Result<SystemParams, CliError> {
        match (self.p_d, self.snr_db) {
            (Some(p_d), None) => Ok(SystemParams::new(p_d, self.gbar, self.sigma2)?),
            (None, Some(db)) => Ok(SystemParams::from_snr_db(db, self.gbar, self.sigma2)?),
            _ => Err(CliError::Usage(
                "one of --p-d or --snr-db is required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Largest threshold searched
    #[arg(long, default_value_t = 10.0)]
    pub gain_cap: f64,
    /// Scan spacing for IP/PI and lattice spacing for PIP
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// How throughputs are computed inside the solvers
    #[arg(long, value_enum, default_value_t = MethodArg::ClosedForm)]
    pub method: MethodArg,
    /// Channel realizations for Monte-Carlo evaluation
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Seed for every random draw
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl SolveArgs {
    fn config(&self) -> Result<SolveConfig, CliError> {
        let method = match self.method {
            MethodArg::ClosedForm => EvalMethod::ClosedForm,
            MethodArg::Quadrature => EvalMethod::Quadrature,
            MethodArg::MonteCarlo => EvalMethod::MonteCarlo {
                samples: self.samples,
                seed: self.seed,
            },
        };
        let cfg = SolveConfig {
            gain_cap: self.gain_cap,
            grid_step: self.grid_step,
            method,
            ..SolveConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write here instead of standard output
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

/// One scheme, or `all`, or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeList(pub Vec<Scheme>);

fn parse_scheme_list(s: &str) -> Result<SchemeList, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.eq_ignore_ascii_case("all") {
            out.extend(Scheme::ALL);
        } else {
            out.push(part.parse::<Scheme>().map_err(|e| e.to_string())?);
        }
    }
    if out.is_empty() {
        return Err("no scheme given".into());
    }
    out.sort();
    out.dedup();
    Ok(SchemeList(out))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: phat_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct EvaluateArgs {
    /// htt, ip, pi or pip
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    /// Lower threshold (pi, pip)
    #[arg(long)]
    pub g_l: Option<f64>,
    /// Upper threshold (ip, pip)
    #[arg(long)]
    pub g_u: Option<f64>,
    /// Also report the gap to an independent quadrature evaluation
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct OptimizeArgs {
    /// htt, ip, pi, pip, all, or a comma-separated list
    #[arg(long, value_parser = parse_scheme_list, default_value = "all")]
    pub scheme: SchemeList,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SweepArgs {
    /// First SNR point in dB
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub start: f64,
    /// Last SNR point in dB (inclusive)
    #[arg(long, default_value_t = 30.0, allow_negative_numbers = true)]
    pub stop: f64,
    /// SNR spacing in dB
    #[arg(long, default_value_t = 2.0)]
    pub step: f64,
    /// htt, ip, pi, pip, all, or a comma-separated list
    #[arg(long, value_parser = parse_scheme_list, default_value = "all")]
    pub scheme: SchemeList,
    #[arg(long, default_value_t = 1.0)]
    pub gbar: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Args)]
#[command(args_override_self = true)]
pub struct SimulateArgs {
    /// htt, ip, pi or pip
    #[arg(long, value_parser = parse_scheme)]
    pub scheme: Scheme,
    #[arg(long)]
    pub g_l: Option<f64>,
    #[arg(long)]
    pub g_u: Option<f64>,
    /// Solve for the thresholds instead of taking them from --g-l/--g-u
    #[arg(long)]
    pub optimize_first: bool,
    #[arg(long, default_value_t = 100_000)]
    pub frames: u64,
    /// Turn WIT frames into WPT frames while the stored energy is short of p_u
    #[arg(long)]
    pub causal: bool,
    /// Stored energy before the first frame, in J
    #[arg(long, default_value_t = 0.0)]
    pub initial_energy: f64,
    /// Write every frame as CSV to this path
    #[arg(long, value_name = "PATH")]
    pub dump_frames: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
    #[command(flatten)]
    pub solve: SolveArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Builds a policy, insisting on exactly the thresholds the scheme uses.
pub fn build_policy(
    scheme: Scheme,
    g_l: Option<f64>,
    g_u: Option<f64>,
) -> Result<Policy, CliError> {
    let usage = |msg: &str| Err(CliError::Usage(format!("{scheme}: {msg}")));
    let policy = match (scheme, g_l, g_u) {
        (Scheme::Htt, None, None) => Policy::htt(),
        (Scheme::Htt, _, _) => return usage("takes no thresholds"),
        (Scheme::Ip, None, Some(g_u)) => Policy::Ip { g_u },
        (Scheme::Ip, _, _) => return usage("needs --g-u and no --g-l"),
        (Scheme::Pi, Some(g_l), None) => Policy::Pi { g_l },
        (Scheme::Pi, _, _) => return usage("needs --g-l and no --g-u"),
        (Scheme::Pip, Some(g_l), Some(g_u)) => Policy::Pip { g_l, g_u },
        (Scheme::Pip, _, _) => return usage("needs both --g-l and --g-u"),
    };
    policy.validate()?;
    Ok(policy)
}

fn open_output(path: Option<&Path>) -> Result<Option<BufWriter<File>>, CliError> {
    path.map(|p| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| CliError::io(&format!("creating {}", p.display()), e))
    })
    .transpose()
}

fn emit<R: Row>(rows: &[R], out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    match open_output(out.output.as_deref())? {
        Some(mut file) => {
            write_rows(&mut file, rows, out.format)?;
            file.flush().map_err(|e| CliError::io("writing output", e))
        }
        None => write_rows(stdout, rows, out.format),
    }
}

#[derive(Debug, Serialize)]
struct EvaluateRow {
    scheme: Scheme,
    g_l: Option<f64>,
    g_u: Option<f64>,
    throughput_bits: f64,
    ul_power_w: f64,
    gammabar: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_delta: Option<f64>,
}

impl Row for EvaluateRow {
    fn header() -> &'static [&'static str] {
        &[
            "scheme",
            "g_l",
            "g_u",
            "throughput_bits",
            "ul_power_w",
            "gammabar",
            "oracle_delta",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.scheme.to_string(),
            opt(self.g_l),
            opt(self.g_u),
            num(self.throughput_bits),
            num(self.ul_power_w),
            num(self.gammabar),
            opt(self.oracle_delta),
        ]
    }
}

fn cmd_evaluate(a: &EvaluateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let params = a.link.params()?;
    let policy = build_policy(a.scheme, a.g_l, a.g_u)?;
    let eval = evaluate(&policy, &params)?;
    let oracle_delta = if a.verify {
        let reference = match policy.partition() {
            // the numerical tau rule never touches the Lambert-W closed form
            None => {
                htt_ergodic_throughput(&params, TauRule::Numerical, HttMethod::Quadrature)?
                    .throughput_bits
            }
            Some(partition) => quad_throughput_oracle(&partition?, eval.ul_power, &params)?,
        };
        Some(round12((eval.throughput_bits - reference).abs()))
    } else {
        None
    };
    let (g_l, g_u) = policy.thresholds();
    let row = EvaluateRow {
        scheme: a.scheme,
        g_l: g_l.map(round12),
        g_u: g_u.map(round12),
        throughput_bits: round12(eval.throughput_bits),
        ul_power_w: round12(eval.ul_power),
        gammabar: round12(eval.expected_ul_snr_gammabar),
        oracle_delta,
    };
    emit(&[row], &a.out, stdout)
}

/// Sweep row; the CSV header is exactly these column names.
#[derive(Debug, Serialize)]
struct CurveRow {
    snr_db: f64,
    scheme: Scheme,
    g_l: Option<f64>,
    g_u: Option<f64>,
    tau_mean: Option<f64>,
    ul_power_w: Option<f64>,
    throughput_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl CurveRow {
    fn new(
        snr_db: f64,
        scheme: Scheme,
        solution: Option<&Solution>,
        error: Option<String>,
    ) -> Self {
        let (g_l, g_u) = solution.map_or((None, None), |s| s.policy.thresholds());
        CurveRow {
            snr_db: round12(snr_db),
            scheme,
            g_l: g_l.map(round12),
            g_u: g_u.map(round12),
            tau_mean: solution.and_then(|s| s.tau_mean).map(round12),
            ul_power_w: solution.map(|s| round12(s.ul_power)),
            throughput_bits: solution.map(|s| round12(s.throughput_bits)),
            error,
        }
    }
}

impl Row for CurveRow {
    fn header() -> &'static [&'static str] {
        &[
            "snr_db",
            "scheme",
            "g_l",
            "g_u",
            "tau_mean",
            "ul_power_w",
            "throughput_bits",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            num(self.snr_db),
            self.scheme.to_string(),
            opt(self.g_l),
            opt(self.g_u),
            opt(self.tau_mean),
            opt(self.ul_power_w),
            opt(self.throughput_bits),
        ]
    }
}

#[derive(Debug, Serialize)]
struct OptimizeRow {
    #[serde(flatten)]
    curve: CurveRow,
    at_boundary: bool,
    resolution_bound: Option<f64>,
}

impl Row for OptimizeRow {
    fn header() -> &'static [&'static str] {
        &[
            "snr_db",
            "scheme",
            "g_l",
            "g_u",
            "tau_mean",
            "ul_power_w",
            "throughput_bits",
            "at_boundary",
            "resolution_bound",
        ]
    }

    fn fields(&self) -> Vec<String> {
        let mut f = self.curve.fields();
        f.push(self.at_boundary.to_string());
        f.push(opt(self.resolution_bound));
        f
    }
}

fn warn_boundary(stderr: &mut dyn Write, snr_db: f64, scheme: Scheme, s: &Solution, cap: f64) {
    if s.at_boundary {
        let _ = writeln!(
            stderr,
            "warning: {scheme} maximizer at {snr_db} dB lies within one grid step of the gain cap {cap}"
        );
    }
}

fn cmd_optimize(
    a: &OptimizeArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let params = a.link.params()?;
    let cfg = a.solve.config()?;
    let snr_db = params.dl_snr_db();
    let mut rows = Vec::new();
    for &scheme in &a.scheme.0 {
        let s = solve(scheme, &params, &cfg)?;
        warn_boundary(stderr, snr_db, scheme, &s, cfg.gain_cap);
        rows.push(OptimizeRow {
            curve: CurveRow::new(snr_db, scheme, Some(&s), None),
            at_boundary: s.at_boundary,
            resolution_bound: s.resolution_bound.map(round12),
        });
    }
    emit(&rows, &a.out, stdout)
}

fn cmd_sweep(
    a: &SweepArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let range = SnrRange::new(a.start, a.stop, a.step)?;
    let template = SystemParams::new(1.0, a.gbar, a.sigma2)?;
    let cfg = a.solve.config()?;
    let curve = sweep(range, &a.scheme.0, &template, &cfg)?;
    let mut rows = Vec::with_capacity(curve.points.len());
    for p in &curve.points {
        if let Some(s) = &p.solution {
            warn_boundary(stderr, p.snr_db, p.scheme, s, cfg.gain_cap);
        }
        if let Some(e) = &p.error {
            let _ = writeln!(stderr, "error: {} at {} dB: {e}", p.scheme, p.snr_db);
        }
        rows.push(CurveRow::new(
            p.snr_db,
            p.scheme,
            p.solution.as_ref(),
            p.error.clone(),
        ));
    }
    emit(&rows, &a.out, stdout)?;
    match curve.failures() {
        0 => Ok(()),
        n => Err(CliError::PartialFailure(n)),
    }
}

#[derive(Debug, Serialize)]
struct SimulateRow {
    scheme: Scheme,
    g_l: Option<f64>,
    g_u: Option<f64>,
    causal: bool,
    n_frames: u64,
    mean_rate_bits: f64,
    rate_std_error: f64,
    closed_form_bits: f64,
    mean_harvested_j: f64,
    mean_consumed_j: f64,
    min_stored_j: f64,
    final_stored_j: f64,
    skipped_wit_frames: u64,
}

impl Row for SimulateRow {
    fn header() -> &'static [&'static str] {
        &[
            "scheme",
            "g_l",
            "g_u",
            "causal",
            "n_frames",
            "mean_rate_bits",
            "rate_std_error",
            "closed_form_bits",
            "mean_harvested_j",
            "mean_consumed_j",
            "min_stored_j",
            "final_stored_j",
            "skipped_wit_frames",
        ]
    }

    fn fields(&self) -> Vec<String> {
        vec![
            self.scheme.to_string(),
            opt(self.g_l),
            opt(self.g_u),
            self.causal.to_string(),
            self.n_frames.to_string(),
            num(self.mean_rate_bits),
            num(self.rate_std_error),
            num(self.closed_form_bits),
            num(self.mean_harvested_j),
            num(self.mean_consumed_j),
            num(self.min_stored_j),
            num(self.final_stored_j),
            self.skipped_wit_frames.to_string(),
        ]
    }
}

fn frame_fields(r: &FrameRecord) -> [String; 7] {
    [
        r.index.to_string(),
        num(r.gain),
        r.mode.to_string(),
        num(r.harvested_j),
        num(r.consumed_j),
        num(r.stored_j),
        num(r.rate_bits),
    ]
}

fn cmd_simulate(
    a: &SimulateArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let params = a.link.params()?;
    let policy = if a.optimize_first {
        if a.g_l.is_some() || a.g_u.is_some() {
            return Err(CliError::Usage(
                "--optimize-first replaces --g-l/--g-u".into(),
            ));
        }
        let cfg = a.solve.config()?;
        let s = solve(a.scheme, &params, &cfg)?;
        warn_boundary(stderr, params.dl_snr_db(), a.scheme, &s, cfg.gain_cap);
        s.policy
    } else {
        build_policy(a.scheme, a.g_l, a.g_u)?
    };
    let closed_form = evaluate(&policy, &params)?.throughput_bits;

    let mut writer = match &a.dump_frames {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::io(&format!("creating {}", path.display()), e))?;
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            w.write_record([
                "index",
                "gain",
                "mode",
                "harvested_j",
                "consumed_j",
                "stored_j",
                "rate_bits",
            ])
            .map_err(CliError::csv)?;
            Some(w)
        }
        None => None,
    };
    let mut write_error = None;
    let summary = run_policy_trace_with(
        &policy,
        &params,
        a.frames,
        a.solve.seed,
        a.causal,
        a.initial_energy,
        |r| {
            if let (Some(w), None) = (writer.as_mut(), &write_error) {
                if let Err(e) = w.write_record(frame_fields(r)) {
                    write_error = Some(e);
                }
            }
        },
    )?;
    if let Some(e) = write_error {
        return Err(CliError::csv(e));
    }
    if let Some(mut w) = writer {
        w.flush().map_err(|e| CliError::io("writing frames", e))?;
    }

    let (g_l, g_u) = policy.thresholds();
    let row = SimulateRow {
        scheme: a.scheme,
        g_l: g_l.map(round12),
        g_u: g_u.map(round12),
        causal: a.causal,
        n_frames: summary.n_frames,
        mean_rate_bits: round12(summary.mean_rate_bits),
        rate_std_error: round12(summary.rate_std_error),
        closed_form_bits: round12(closed_form),
        mean_harvested_j: round12(summary.mean_harvested),
        mean_consumed_j: round12(summary.mean_consumed),
        min_stored_j: round12(summary.min_stored),
        final_stored_j: round12(summary.final_stored),
        skipped_wit_frames: summary.skipped_wit_frames,
    };
    emit(&[row], &a.out, stdout)
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Evaluate(a) => cmd_evaluate(a, stdout),
        Command::Optimize(a) => cmd_optimize(a, stdout, stderr),
        Command::Sweep(a) => cmd_sweep(a, stdout, stderr),
        Command::Simulate(a) => cmd_simulate(a, stdout, stderr),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let result = config::expand(args).and_then(|args| match Cli::try_parse_from(args) {
        Ok(cli) => dispatch(&cli, stdout, stderr),
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                Ok(())
            } else {
                let _ = write!(stderr, "{e}");
                Err(CliError::Usage(String::new()))
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            if !matches!(&e, CliError::Usage(m) if m.is_empty()) {
                let _ = writeln!(stderr, "error: {e}");
            }
            e.exit_code()
        }
    }
}
