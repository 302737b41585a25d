//! `condtel`: conditional teleportation with photon counting, and the
//! quadrature-measurement baseline.
//!
//! Exit codes: 0 ok, 1 other failure, 2 usage, 3 precision loss,
//! 4 impossible outcome, 5 cutoff not converged.

mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use condtel::analysis::{
    compare_cutoffs, conditional_success, diagonal_sweep, sweep_grid, OutcomeFilter, Quantity, DEFAULT_N_MAX,
};
use condtel::bk::{
    bk_scan, success_from_points, BkConfig, BkSummary, DEFAULT_BK_CUTOFF, DEFAULT_HALF_WIDTH, DEFAULT_STEP,
};
use condtel::export::{fmt_f64, write_bk_csv, write_csv, write_diagonal_csv, write_grid_csv, write_profile_csv};
use condtel::fock::DEFAULT_CUTOFF;
use condtel::squeeze::{coeff_profile, relative_variation};
use condtel::teleport::{teleport_event, MeasurementOutcome};
use condtel::{Error, FockVector, SqueezeParams};

use report::{pairs, ConvergenceSummary, Format, Reproducibility, Sink};

#[derive(Parser)]
#[command(
    name = "condtel",
    version,
    about = "Conditional teleportation through two-mode squeezers with photon counting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient product along Bob's photon number.
    Coeffs(CoeffsArgs),
    /// One measurement outcome: conditional state, probability, fidelity.
    Teleport(TeleportArgs),
    /// Fidelity and probability for every outcome up to --nmax.
    Sweep(SweepArgs),
    /// The n = n' outcomes only.
    Diagonal(SweepArgs),
    /// Probability of reaching fidelity --fu.
    Pu(PuArgs),
    /// Quadrature-measurement scheme on an outcome grid.
    Bk(BkArgs),
}

#[derive(Args)]
struct Common {
    /// Write to this file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Fock cutoff.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Recompute the headline quantity at twice the cutoff and fail (exit 5)
    /// when it moves by 1e-6 or more.
    #[arg(long)]
    check_convergence: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct StateArgs {
    /// Amplitudes "re,im;re,im;..." indexed by photon number.
    #[arg(long, allow_hyphen_values = true)]
    state: Option<String>,
    /// JSON file with [[re, im], ...] or {"amplitudes": [[re, im], ...]}.
    #[arg(long)]
    state_file: Option<PathBuf>,
}

#[derive(Args)]
struct SqueezeArgs {
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    alpha_phase: f64,
    #[arg(long, default_value_t = 1.5, allow_hyphen_values = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    beta_phase: f64,
}

impl SqueezeArgs {
    fn params(&self) -> Result<(SqueezeParams, SqueezeParams)> {
        Ok((
            SqueezeParams::new(self.alpha, self.alpha_phase)?,
            SqueezeParams::new(self.beta, self.beta_phase)?,
        ))
    }
}

#[derive(Args)]
struct CoeffsArgs {
    /// Photon count in mode 0.
    #[arg(long)]
    n: usize,
    /// Count difference n' - n.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    d: i64,
    #[arg(long, default_value_t = 20)]
    mmax: usize,
    #[command(flatten)]
    squeeze: SqueezeArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct TeleportArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    nprime: usize,
    #[command(flatten)]
    squeeze: SqueezeArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    nmax: usize,
    #[command(flatten)]
    squeeze: SqueezeArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PuArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, default_value_t = 0.9)]
    fu: f64,
    /// Count only n = n' outcomes.
    #[arg(long)]
    diagonal: bool,
    #[arg(long, default_value_t = DEFAULT_N_MAX)]
    nmax: usize,
    #[command(flatten)]
    squeeze: SqueezeArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct BkArgs {
    #[command(flatten)]
    state: StateArgs,
    /// Resource squeezing.
    #[arg(long, default_value_t = 1.5)]
    r: f64,
    #[arg(long, default_value_t = DEFAULT_HALF_WIDTH)]
    half_width: f64,
    #[arg(long, default_value_t = DEFAULT_STEP)]
    step: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    gain: f64,
    #[arg(long, default_value_t = 0.9)]
    fu: f64,
    #[command(flatten)]
    common: Common,
}

/// Bad input found after argument parsing.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow!(UsageError(msg.into()))
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, Default, Serialize)]
struct RunConfig {
    subcommand: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    state: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<SqueezeParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<SqueezeParams>,
    cutoff: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nprime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    d: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    n_max: Option<usize>,
    #[serde(rename = "F_u", skip_serializing_if = "Option::is_none")]
    f_u: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filter: Option<OutcomeFilter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bk: Option<BkConfig>,
    format: Format,
}

/// The padded state and the normalized amplitudes as given.
fn load_state(args: &StateArgs, cutoff: usize) -> Result<(FockVector, Vec<[f64; 2]>)> {
    let mut amps = match (&args.state, &args.state_file) {
        (Some(s), _) => input::parse_state(s).map_err(|e| usage(format!("--state: {e:#}")))?,
        (None, Some(p)) => input::read_state_file(p).map_err(|e| usage(format!("--state-file: {e:#}")))?,
        (None, None) => return Err(usage("an input state is required")),
    };
    let norm = input::normalize_amplitudes(&mut amps).map_err(|e| usage(e.to_string()))?;
    if (norm - 1.0).abs() > input::RENORM_WARN {
        eprintln!("warning: input state had norm {norm}; renormalized");
    }
    Ok((FockVector::new(&amps, cutoff)?, pairs(&amps)))
}

fn check_fu(f_u: f64) -> Result<()> {
    if !f_u.is_finite() {
        return Err(usage("--fu must be finite"));
    }
    Ok(())
}

/// Fails with exit code 5 after the output is written, if requested.
fn finish(convergence: &Option<ConvergenceSummary>) -> Result<ExitCode> {
    match convergence {
        Some(c) if !c.passed => Err(anyhow!(Error::NotConverged {
            quantity: c.quantity.clone(),
            cutoff_low: c.cutoff_low,
            cutoff_high: c.cutoff_high,
            value_low: c.value_low,
            value_high: c.value_high,
            difference: c.difference,
        })),
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn check(
    enabled: bool,
    psi: &FockVector,
    alpha: SqueezeParams,
    beta: SqueezeParams,
    quantity: Quantity,
    cutoff: usize,
) -> Result<Option<ConvergenceSummary>> {
    if !enabled {
        return Ok(None);
    }
    let r = compare_cutoffs(psi, alpha, beta, quantity, cutoff, 2 * cutoff)?;
    Ok(Some(ConvergenceSummary::from(&r)))
}

#[derive(Serialize)]
struct ProfileRow {
    m: usize,
    real: f64,
    imag: f64,
}

#[derive(Serialize)]
struct ProfileResult {
    profile: Vec<ProfileRow>,
    relative_variation: f64,
}

fn cmd_coeffs(a: CoeffsArgs) -> Result<ExitCode> {
    let (alpha, beta) = a.squeeze.params()?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let format = a.common.format.unwrap_or(Format::Csv);
    let profile = coeff_profile(a.n, a.d, alpha, beta, a.mmax)?;
    let config = RunConfig {
        subcommand: "coeffs",
        alpha: Some(alpha),
        beta: Some(beta),
        cutoff,
        n: Some(a.n),
        d: Some(a.d),
        m_max: Some(a.mmax),
        format,
        ..Default::default()
    };
    let convergence = if a.common.check_convergence {
        let vac = FockVector::basis(0, cutoff)?;
        let q = Quantity::ProfilePoint {
            n: a.n,
            d: a.d,
            m: a.mmax,
        };
        check(true, &vac, alpha, beta, q, cutoff)?
    } else {
        None
    };
    let repro = Reproducibility::new(cutoff, convergence.clone());
    let sink = Sink { path: a.common.output };
    match format {
        Format::Csv => sink.csv(&config, &repro, |w, c| write_profile_csv(w, c, &profile))?,
        Format::Json => {
            let result = ProfileResult {
                relative_variation: relative_variation(&profile),
                profile: profile
                    .iter()
                    .enumerate()
                    .map(|(m, z)| ProfileRow {
                        m,
                        real: z.re,
                        imag: z.im,
                    })
                    .collect(),
            };
            sink.json(&result, &config, &repro)?
        }
    }
    finish(&convergence)
}

#[derive(Serialize)]
struct TeleportOutput {
    status: &'static str,
    n: usize,
    nprime: usize,
    probability: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    fidelity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_out: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    psi_tel: Option<Vec<[f64; 2]>>,
}

fn cmd_teleport(a: TeleportArgs) -> Result<ExitCode> {
    let (alpha, beta) = a.squeeze.params()?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    if a.common.format == Some(Format::Csv) {
        return Err(usage("teleport writes JSON only"));
    }
    let (psi, given) = load_state(&a.state, cutoff)?;
    let config = RunConfig {
        subcommand: "teleport",
        state: Some(given.clone()),
        alpha: Some(alpha),
        beta: Some(beta),
        cutoff,
        n: Some(a.n),
        nprime: Some(a.nprime),
        format: Format::Json,
        ..Default::default()
    };
    let sink = Sink { path: a.common.output };
    let outcome = MeasurementOutcome::new(a.n, a.nprime);
    let result = match teleport_event(&psi, alpha, beta, outcome) {
        Ok(r) => r,
        Err(Error::ImpossibleOutcome { probability, .. }) => {
            let body = TeleportOutput {
                status: "impossible-outcome",
                n: a.n,
                nprime: a.nprime,
                probability,
                fidelity: None,
                psi_out: None,
                psi_tel: None,
            };
            sink.json(&body, &config, &Reproducibility::new(cutoff, None))?;
            eprintln!(
                "error: outcome (n={}, n'={}) is impossible for this input",
                a.n, a.nprime
            );
            return Ok(ExitCode::from(4));
        }
        Err(e) => return Err(e.into()),
    };
    let convergence = if a.common.check_convergence {
        let f = check(
            true,
            &psi,
            alpha,
            beta,
            Quantity::Fidelity {
                n: a.n,
                nprime: a.nprime,
            },
            cutoff,
        )?;
        let p = check(
            true,
            &psi,
            alpha,
            beta,
            Quantity::Probability {
                n: a.n,
                nprime: a.nprime,
            },
            cutoff,
        )?;
        // report whichever moved more
        match (f, p) {
            (Some(f), Some(p)) => Some(if p.difference > f.difference { p } else { f }),
            _ => None,
        }
    } else {
        None
    };
    let body = TeleportOutput {
        status: "ok",
        n: a.n,
        nprime: a.nprime,
        probability: result.probability,
        fidelity: Some(result.fidelity),
        psi_out: Some(pairs(result.psi_out.amplitudes())),
        psi_tel: Some(pairs(result.psi_tel.amplitudes())),
    };
    let repro = Reproducibility::new(cutoff, convergence.clone());
    sink.json(&body, &config, &repro)?;
    finish(&convergence)
}

fn sweep_config(
    name: &'static str,
    a: &SweepArgs,
    given: &[[f64; 2]],
    cutoff: usize,
    format: Format,
) -> Result<RunConfig> {
    let (alpha, beta) = a.squeeze.params()?;
    Ok(RunConfig {
        subcommand: name,
        state: Some(given.to_vec()),
        alpha: Some(alpha),
        beta: Some(beta),
        cutoff,
        n_max: Some(a.nmax),
        format,
        ..Default::default()
    })
}

fn cmd_sweep(a: SweepArgs) -> Result<ExitCode> {
    let (alpha, beta) = a.squeeze.params()?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let format = a.common.format.unwrap_or(Format::Csv);
    let (psi, given) = load_state(&a.state, cutoff)?;
    let grid = sweep_grid(&psi, alpha, beta, a.nmax)?;
    let config = sweep_config("sweep", &a, &given, cutoff, format)?;
    let q = Quantity::SuccessProbability {
        f_u: 0.0,
        filter: OutcomeFilter::All,
        n_max: a.nmax,
    };
    let convergence = check(a.common.check_convergence, &psi, alpha, beta, q, cutoff)?;
    let repro = Reproducibility::new(cutoff, convergence.clone());
    let sink = Sink { path: a.common.output };
    match format {
        Format::Json => sink.json(&grid, &config, &repro)?,
        Format::Csv => sink.csv(&config, &repro, |w, c| write_grid_csv(w, c, &grid))?,
    }
    finish(&convergence)
}

#[derive(Serialize)]
struct DiagonalResult {
    points: Vec<condtel::analysis::DiagonalPoint>,
}

fn cmd_diagonal(a: SweepArgs) -> Result<ExitCode> {
    let (alpha, beta) = a.squeeze.params()?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let format = a.common.format.unwrap_or(Format::Csv);
    let (psi, given) = load_state(&a.state, cutoff)?;
    let points = diagonal_sweep(&psi, alpha, beta, a.nmax)?;
    let config = sweep_config("diagonal", &a, &given, cutoff, format)?;
    let q = Quantity::SuccessProbability {
        f_u: 0.0,
        filter: OutcomeFilter::Diagonal,
        n_max: a.nmax,
    };
    let convergence = check(a.common.check_convergence, &psi, alpha, beta, q, cutoff)?;
    let repro = Reproducibility::new(cutoff, convergence.clone());
    let sink = Sink { path: a.common.output };
    match format {
        Format::Json => sink.json(&DiagonalResult { points }, &config, &repro)?,
        Format::Csv => sink.csv(&config, &repro, |w, c| write_diagonal_csv(w, c, &points))?,
    }
    finish(&convergence)
}

#[derive(Serialize)]
struct PuResult {
    #[serde(rename = "F_u")]
    f_u: f64,
    #[serde(rename = "P_u")]
    p_u: f64,
    filter: OutcomeFilter,
    total_probability: f64,
}

fn cmd_pu(a: PuArgs) -> Result<ExitCode> {
    check_fu(a.fu)?;
    let (alpha, beta) = a.squeeze.params()?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_CUTOFF);
    let format = a.common.format.unwrap_or(Format::Json);
    let (psi, given) = load_state(&a.state, cutoff)?;
    let filter = if a.diagonal {
        OutcomeFilter::Diagonal
    } else {
        OutcomeFilter::All
    };
    let grid = sweep_grid(&psi, alpha, beta, a.nmax)?;
    let result = PuResult {
        f_u: a.fu,
        p_u: conditional_success(&grid, a.fu, filter),
        filter,
        total_probability: grid.total_probability(),
    };
    let config = RunConfig {
        subcommand: "pu",
        state: Some(given.clone()),
        alpha: Some(alpha),
        beta: Some(beta),
        cutoff,
        n_max: Some(a.nmax),
        f_u: Some(a.fu),
        filter: Some(filter),
        format,
        ..Default::default()
    };
    let q = Quantity::SuccessProbability {
        f_u: a.fu,
        filter,
        n_max: a.nmax,
    };
    let convergence = check(a.common.check_convergence, &psi, alpha, beta, q, cutoff)?;
    let repro = Reproducibility::new(cutoff, convergence.clone());
    let sink = Sink { path: a.common.output };
    match format {
        Format::Json => sink.json(&result, &config, &repro)?,
        Format::Csv => sink.csv(&config, &repro, |w, c| {
            let filter = serde_json::to_value(result.filter).expect("filter serializes");
            let row = [
                fmt_f64(result.f_u),
                fmt_f64(result.p_u),
                filter.as_str().unwrap_or_default().to_string(),
                fmt_f64(result.total_probability),
            ];
            write_csv(w, c, &["F_u", "P_u", "filter", "total_probability"], [row])
        })?,
    }
    finish(&convergence)
}

fn cmd_bk(a: BkArgs) -> Result<ExitCode> {
    check_fu(a.fu)?;
    let cutoff = a.common.cutoff.unwrap_or(DEFAULT_BK_CUTOFF);
    let format = a.common.format.unwrap_or(Format::Json);
    let config = BkConfig {
        r: a.r,
        half_width: a.half_width,
        step: a.step,
        gain: a.gain,
        cutoff,
    }
    .validated()?;
    let (psi, given) = load_state(&a.state, cutoff)?;
    let points = bk_scan(&psi, &config)?;
    let p_u = success_from_points(&points, config.step, a.fu);
    let run = RunConfig {
        subcommand: "bk",
        state: Some(given.clone()),
        cutoff,
        f_u: Some(a.fu),
        bk: Some(config),
        format,
        ..Default::default()
    };
    let convergence = if a.common.check_convergence {
        let high = BkConfig {
            cutoff: 2 * cutoff,
            ..config
        };
        let pts = bk_scan(&psi.with_cutoff(2 * cutoff)?, &high)?;
        let value_high = success_from_points(&pts, config.step, a.fu);
        let difference = (value_high - p_u).abs();
        Some(ConvergenceSummary {
            quantity: format!("{{\"kind\":\"bk_success_probability\",\"f_u\":{}}}", a.fu),
            cutoff_low: cutoff,
            cutoff_high: 2 * cutoff,
            value_low: p_u,
            value_high,
            difference,
            tolerance: condtel::analysis::CONVERGENCE_TOL,
            passed: difference < condtel::analysis::CONVERGENCE_TOL,
        })
    } else {
        None
    };
    let repro = Reproducibility::new(cutoff, convergence.clone());
    let sink = Sink { path: a.common.output };
    match format {
        Format::Json => sink.json(&BkSummary::new(&config, a.fu, p_u), &run, &repro)?,
        Format::Csv => sink.csv(&run, &repro, |w, c| write_bk_csv(w, c, &points))?,
    }
    finish(&convergence)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidArgument(_)
                | Error::InvalidSqueeze(_)
                | Error::TooManyAmplitudes { .. }
                | Error::NonFinite { .. }
                | Error::NormExceedsOne { .. }
                | Error::NotNormalized { .. }
                | Error::DimensionTooLarge { .. } => 2,
                Error::PrecisionLoss { .. } => 3,
                Error::ImpossibleOutcome { .. } => 4,
                Error::NotConverged { .. } => 5,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Coeffs(a) => cmd_coeffs(a),
        Command::Teleport(a) => cmd_teleport(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Diagonal(a) => cmd_diagonal(a),
        Command::Pu(a) => cmd_pu(a),
        Command::Bk(a) => cmd_bk(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
