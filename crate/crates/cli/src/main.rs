//! `singlet-lab`: command-line laboratory for the singlet hidden-variable
//! model.
//!
//! Every experiment in the core crate is exposed behind a subcommand with
//! reproducible seeds and machine-readable output. JSON is the default
//! format; CSV is reserved for event logs and the correlation sweep. Every
//! emitted artifact embeds the crate version, the resolved configuration,
//! and the seed (explicitly `null` for purely deterministic reports).
//!
//! Exit codes: 0 on success or the expected verdict, 1 when a computed
//! verdict does not match the expected one, 2 on usage or I/O errors.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng as _;
use serde_json::{json, Value};

use singlet_core::analysis::{
    check_malus, check_measurement_independence, check_outcome_independence,
    check_setting_independence, chsh_optimize, evaluate_chsh, sample_grid,
    sample_remote_change_grid, ChshSettings, Verdict,
};
use singlet_core::geometry::{dot, planar_direction};
use singlet_core::model::{correlator, exact_joint_table, qm_singlet_joint};
use singlet_core::montecarlo::{
    run_experiment, run_experiment_logged, sweep_correlator, tally_to_joint, write_event_csv,
};
use singlet_core::protocols::{
    binned_joint_check, locality_audit, run_conspiracy, run_signaling, write_conspiracy_csv,
    BitSource, ConspiracyConfig,
};
use singlet_core::rng::derive_seed;
use singlet_core::{JointTable, Outcome, Settings, UnitVec3};

/// Largest deviation from the singlet law `exact` tolerates before
/// reporting a verdict mismatch.
const EXACT_TOLERANCE: f64 = 1e-10;

/// Index convention of every emitted 2x2 table.
const LAYOUT: &str = "rows sigma, columns tau, index 0 = +1, index 1 = -1";

/// Hard cap on sweep grid size; protects against degenerate step values.
const MAX_SWEEP_POINTS: u64 = 100_000;

#[derive(Parser)]
#[command(
    name = "singlet-lab",
    version,
    about = "Simulation laboratory for a measurement-dependent hidden-variable model of the spin singlet"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact joint table at fixed settings, checked against the singlet law.
    Exact(ExactArgs),
    /// Seeded Monte Carlo run at fixed settings.
    Sample(SampleArgs),
    /// Exact and empirical correlation curve over an angle grid.
    Sweep(SweepArgs),
    /// Bell-hypothesis checkers: setting/outcome independence, Malus
    /// marginals, measurement independence.
    Hypotheses(HypothesesArgs),
    /// CHSH statistic against the brute-force classical bound.
    Chsh(ChshArgs),
    /// Superluminal bit channel over observable hidden variables.
    Signal(SignalArgs),
    /// Delayed-shared-randomness realization with per-bin joint checks and
    /// an optional locality audit.
    Conspiracy(ConspiracyArgs),
}

/// Detector settings, either explicit vectors or a coplanar angle.
#[derive(Args)]
struct SettingsArgs {
    /// Station A direction as "x,y,z" (normalized on input).
    #[arg(long, value_parser = parse_unit_vec, requires = "b", conflicts_with = "angle_ab")]
    a: Option<UnitVec3>,
    /// Station B direction as "x,y,z" (normalized on input).
    #[arg(long, value_parser = parse_unit_vec, requires = "a", conflicts_with = "angle_ab")]
    b: Option<UnitVec3>,
    /// Angle between coplanar settings in degrees, a along +x.
    #[arg(long, value_name = "DEG")]
    angle_ab: Option<f64>,
}

impl SettingsArgs {
    fn resolve(&self, default_angle_deg: f64) -> Result<Settings, CliError> {
        match (self.a, self.b, self.angle_ab) {
            (Some(a), Some(b), None) => Ok(Settings::new(a, b)),
            (None, None, Some(deg)) => Ok(Settings::from_angle(deg.to_radians())?),
            (None, None, None) => Ok(Settings::from_angle(default_angle_deg.to_radians())?),
            // clap enforces the pairing and the angle exclusion.
            _ => unreachable!("argument conflicts are handled by the parser"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    /// Number of trials.
    #[arg(long)]
    n: u64,
    /// Master seed; generated and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json = tally report, csv = per-trial event log.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct SweepArgs {
    /// Grid start, degrees.
    #[arg(long, default_value_t = 0.0)]
    start: f64,
    /// Grid stop, degrees (inclusive).
    #[arg(long, default_value_t = 180.0)]
    stop: f64,
    /// Grid step, degrees.
    #[arg(long, default_value_t = 5.0)]
    step: f64,
    /// Trials per grid point.
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Master seed; generated and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv = plot-ready curve (default), json = the same points as a report.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args)]
struct HypothesesArgs {
    /// Grid points per hypothesis check.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Master seed for the evaluation grids; generated and recorded when
    /// absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ChshArgs {
    /// Use the standard maximal-violation angles 0, 90, 45, 135 degrees
    /// (also the default when no directions are given).
    #[arg(long)]
    optimal: bool,
    /// Exhaustive coplanar grid search instead of fixed settings.
    #[arg(long)]
    optimize: bool,
    /// Angles per direction for --optimize.
    #[arg(long, default_value_t = 360)]
    resolution: usize,
    /// First station-A direction as "x,y,z".
    #[arg(long, value_parser = parse_unit_vec)]
    a: Option<UnitVec3>,
    /// Second station-A direction as "x,y,z".
    #[arg(long, value_parser = parse_unit_vec)]
    a2: Option<UnitVec3>,
    /// First station-B direction as "x,y,z".
    #[arg(long, value_parser = parse_unit_vec)]
    b: Option<UnitVec3>,
    /// Second station-B direction as "x,y,z".
    #[arg(long, value_parser = parse_unit_vec)]
    b2: Option<UnitVec3>,
    /// First station-A angle, degrees in the xy-plane.
    #[arg(long, value_name = "DEG")]
    angle_a: Option<f64>,
    /// Second station-A angle, degrees in the xy-plane.
    #[arg(long, value_name = "DEG")]
    angle_a2: Option<f64>,
    /// First station-B angle, degrees in the xy-plane.
    #[arg(long, value_name = "DEG")]
    angle_b: Option<f64>,
    /// Second station-B angle, degrees in the xy-plane.
    #[arg(long, value_name = "DEG")]
    angle_b2: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SignalArgs {
    #[command(flatten)]
    settings: SettingsArgs,
    /// Number of random message bits.
    #[arg(long, default_value_t = 1000, conflicts_with = "bits")]
    pairs: u64,
    /// Explicit message as a string of 0s and 1s.
    #[arg(long)]
    bits: Option<String>,
    /// Master seed; generated and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConspiracyArgs {
    /// Number of emission events.
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    /// Master seed; generated and recorded when absent.
    #[arg(long)]
    seed: Option<u64>,
    /// Emission-to-detection delay in ticks (bookkeeping only).
    #[arg(long, default_value_t = 1)]
    delay: u64,
    /// Station stream desync in ticks; nonzero breaks the anchoring.
    #[arg(long, default_value_t = 0)]
    desync: u64,
    /// Free-choice override: both stations apply fixed coplanar settings at
    /// this angle (degrees) instead of their stream entries.
    #[arg(long, value_name = "DEG")]
    override_angle_ab: Option<f64>,
    /// Settings-dot bins for the per-bin joint check.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Run the locality audit with this many remote-seed variations instead
    /// of the binned report.
    #[arg(long, value_name = "COUNT")]
    audit: Option<usize>,
    /// Write the artifact here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json = run report (default), csv = full event log.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(std::io::Error),
    Core(singlet_core::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io(err) => write!(f, "{err}"),
            CliError::Core(err) => write!(f, "{err}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

impl From<singlet_core::Error> for CliError {
    fn from(err: singlet_core::Error) -> Self {
        CliError::Core(err)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Exact(args) => cmd_exact(args),
        Command::Sample(args) => cmd_sample(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Hypotheses(args) => cmd_hypotheses(args),
        Command::Chsh(args) => cmd_chsh(args),
        Command::Signal(args) => cmd_signal(args),
        Command::Conspiracy(args) => cmd_conspiracy(args),
    }
}

/// Parses "x,y,z", normalizes, and warns on stderr when the input norm is
/// off by more than 1e-6.
fn parse_unit_vec(text: &str) -> Result<UnitVec3, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!(
            "expected three comma-separated components, got {}",
            parts.len()
        ));
    }
    let mut c = [0.0f64; 3];
    for (slot, part) in c.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|err| format!("bad component {part:?}: {err}"))?;
    }
    let norm = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
    let v = UnitVec3::new(c[0], c[1], c[2]).map_err(|err| err.to_string())?;
    if (norm - 1.0).abs() > 1e-6 {
        eprintln!("warning: direction ({text}) normalized, input norm was {norm}");
    }
    Ok(v)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

fn emit(out: Option<&PathBuf>, content: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => std::io::stdout().lock().write_all(content)?,
    }
    Ok(())
}

/// Wraps a payload object with the replay metadata every artifact carries.
fn envelope(command: &str, seed: Option<u64>, config: Value, payload: Value) -> String {
    let mut doc = serde_json::Map::new();
    doc.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert("command".into(), json!(command));
    doc.insert("seed".into(), json!(seed));
    doc.insert("config".into(), config);
    if let Value::Object(extra) = payload {
        doc.extend(extra);
    }
    let mut text =
        serde_json::to_string_pretty(&Value::Object(doc)).expect("report serializes to JSON");
    text.push('\n');
    text
}

/// Replay metadata as comment lines atop a CSV artifact.
fn csv_preamble(command: &str, seed: u64, config: &Value) -> String {
    format!(
        "# version: {}\n# command: {}\n# seed: {}\n# config: {}\n",
        env!("CARGO_PKG_VERSION"),
        command,
        seed,
        serde_json::to_string(config).expect("config serializes to JSON"),
    )
}

fn stderr_entries(t: &JointTable) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for o in Outcome::ALL {
        out[o.sigma.index()][o.tau.index()] = t.stderr(o).unwrap_or(0.0);
    }
    out
}

fn cmd_exact(args: ExactArgs) -> Result<u8, CliError> {
    let s = args.settings.resolve(90.0)?;
    let table = exact_joint_table(s);
    let qm = JointTable::from_fn(|out| qm_singlet_joint(out, s));
    let max_deviation = table.max_abs_diff(&qm);
    let config = json!({ "a": s.a, "b": s.b });
    let payload = json!({
        "settings": s,
        "layout": LAYOUT,
        "table": table.entries(),
        "qm_table": qm.entries(),
        "correlator": table.correlator(),
        "qm_correlator": -dot(s.a, s.b),
        "max_deviation": max_deviation,
        "tolerance": EXACT_TOLERANCE,
    });
    emit(args.out.as_ref(), envelope("exact", None, config, payload).as_bytes())?;
    Ok(if max_deviation <= EXACT_TOLERANCE { 0 } else { 1 })
}

fn cmd_sample(args: SampleArgs) -> Result<u8, CliError> {
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let seed = resolve_seed(args.seed);
    let s = args.settings.resolve(90.0)?;
    let config = json!({ "a": s.a, "b": s.b, "n": args.n });
    match args.format {
        Format::Json => {
            let tally = run_experiment(s, args.n, seed);
            let joint = tally_to_joint(&tally)?;
            let payload = json!({
                "settings": s,
                "layout": LAYOUT,
                "n": tally.n_trials,
                "counts": tally.counts,
                "freqs": joint.entries(),
                "stderr": stderr_entries(&joint),
                "empirical_correlator": joint.correlator(),
                "exact_correlator": correlator(s),
            });
            emit(args.out.as_ref(), envelope("sample", Some(seed), config, payload).as_bytes())?;
        }
        Format::Csv => {
            let (_, records) = run_experiment_logged(s, args.n, seed);
            let mut buf = csv_preamble("sample", seed, &config).into_bytes();
            write_event_csv(&mut buf, &records)?;
            emit(args.out.as_ref(), &buf)?;
        }
    }
    Ok(0)
}

/// Inclusive degree grid; errors on empty or degenerate grids.
fn degree_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !start.is_finite() || !stop.is_finite() || !step.is_finite() || step <= 0.0 {
        return Err(usage("sweep needs finite --start/--stop and --step > 0"));
    }
    if stop < start {
        return Err(usage("empty angle grid: --stop is below --start"));
    }
    // Tolerance keeps the endpoint in the grid when (stop-start)/step is an
    // integer up to rounding.
    let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
    if count > MAX_SWEEP_POINTS {
        return Err(usage(format!(
            "angle grid has {count} points; cap is {MAX_SWEEP_POINTS}"
        )));
    }
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

fn cmd_sweep(args: SweepArgs) -> Result<u8, CliError> {
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let seed = resolve_seed(args.seed);
    let degrees = degree_grid(args.start, args.stop, args.step)?;
    let radians: Vec<f64> = degrees.iter().map(|d| d.to_radians()).collect();
    let points = sweep_correlator(&radians, args.n, seed)?;
    let config = json!({
        "start": args.start,
        "stop": args.stop,
        "step": args.step,
        "n": args.n,
    });
    match args.format {
        Format::Csv => {
            let mut buf = csv_preamble("sweep", seed, &config).into_bytes();
            writeln!(buf, "angle,E_exact,E_emp,stderr")?;
            for (deg, p) in degrees.iter().zip(&points) {
                writeln!(
                    buf,
                    "{},{:.16e},{:.16e},{:.16e}",
                    deg, p.e_exact, p.e_empirical, p.stderr
                )?;
            }
            emit(args.out.as_ref(), &buf)?;
        }
        Format::Json => {
            let rows: Vec<Value> = degrees
                .iter()
                .zip(&points)
                .map(|(deg, p)| {
                    json!({
                        "angle_deg": deg,
                        "angle_rad": p.angle,
                        "e_exact": p.e_exact,
                        "e_empirical": p.e_empirical,
                        "stderr": p.stderr,
                    })
                })
                .collect();
            let payload = json!({ "points": rows });
            emit(args.out.as_ref(), envelope("sweep", Some(seed), config, payload).as_bytes())?;
        }
    }
    Ok(0)
}

fn cmd_hypotheses(args: HypothesesArgs) -> Result<u8, CliError> {
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let seed = resolve_seed(args.seed);
    let remote = sample_remote_change_grid(args.n, derive_seed(seed, 0));
    let grid_oi = sample_grid(args.n, derive_seed(seed, 1));
    let grid_malus = sample_grid(args.n, derive_seed(seed, 2));
    // Generic distinct axes: one station axis changes, the other stays.
    let s1 = Settings::new(UnitVec3::X, UnitVec3::Y);
    let s2 = Settings::new(UnitVec3::Z, UnitVec3::Y);
    let reports = vec![
        check_setting_independence(&remote)?,
        check_outcome_independence(&grid_oi)?,
        check_malus(&grid_malus)?,
        check_measurement_independence(s1, s2),
    ];
    let expected = [
        Verdict::Satisfied,
        Verdict::Satisfied,
        Verdict::Satisfied,
        Verdict::Violated,
    ];
    let matched = reports
        .iter()
        .zip(expected)
        .all(|(report, want)| report.verdict == want);
    let config = json!({
        "n_grid": args.n,
        "mi_settings": [s1, s2],
    });
    let payload = json!({
        "reports": reports,
        "expected_profile_matched": matched,
    });
    emit(args.out.as_ref(), envelope("hypotheses", Some(seed), config, payload).as_bytes())?;
    Ok(if matched { 0 } else { 1 })
}

/// Resolves one CHSH direction from its vector flag or its angle flag.
fn direction(vec: Option<UnitVec3>, angle_deg: Option<f64>, name: &str) -> Result<UnitVec3, CliError> {
    match (vec, angle_deg) {
        (Some(v), None) => Ok(v),
        (None, Some(deg)) => Ok(planar_direction(deg.to_radians())?),
        (Some(_), Some(_)) => Err(usage(format!(
            "pass either --{name} or --angle-{name}, not both"
        ))),
        (None, None) => Err(usage(format!(
            "direction {name} missing: pass --{name} or --angle-{name}"
        ))),
    }
}

/// The standard maximal-violation settings 0, 90, 45, 135 degrees.
fn optimal_chsh_settings() -> ChshSettings {
    let at = |deg: f64| planar_direction(deg.to_radians()).expect("finite angle");
    ChshSettings {
        a: at(0.0),
        a_alt: at(90.0),
        b: at(45.0),
        b_alt: at(135.0),
    }
}

fn cmd_chsh(args: ChshArgs) -> Result<u8, CliError> {
    let model_corr = |x: UnitVec3, y: UnitVec3| -dot(x, y);
    let any_direction = args.a.is_some()
        || args.a2.is_some()
        || args.b.is_some()
        || args.b2.is_some()
        || args.angle_a.is_some()
        || args.angle_a2.is_some()
        || args.angle_b.is_some()
        || args.angle_b2.is_some();
    let (result, mode) = if args.optimize {
        if args.optimal || any_direction {
            return Err(usage("--optimize excludes --optimal and fixed directions"));
        }
        (chsh_optimize(model_corr, args.resolution)?, "optimize")
    } else if any_direction {
        if args.optimal {
            return Err(usage("--optimal excludes explicit directions"));
        }
        let settings = ChshSettings {
            a: direction(args.a, args.angle_a, "a")?,
            a_alt: direction(args.a2, args.angle_a2, "a2")?,
            b: direction(args.b, args.angle_b, "b")?,
            b_alt: direction(args.b2, args.angle_b2, "b2")?,
        };
        (evaluate_chsh(settings, model_corr), "fixed")
    } else {
        (evaluate_chsh(optimal_chsh_settings(), model_corr), "optimal")
    };
    let config = json!({
        "mode": mode,
        "resolution": if mode == "optimize" { json!(args.resolution) } else { Value::Null },
    });
    let payload = serde_json::to_value(result).expect("report serializes to JSON");
    emit(args.out.as_ref(), envelope("chsh", None, config, payload).as_bytes())?;
    Ok(if result.violated { 0 } else { 1 })
}

fn parse_bits(text: &str) -> Result<Vec<bool>, CliError> {
    if text.is_empty() {
        return Err(usage("--bits message is empty"));
    }
    text.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(usage(format!("--bits takes only 0s and 1s, got {other:?}"))),
        })
        .collect()
}

fn cmd_signal(args: SignalArgs) -> Result<u8, CliError> {
    let seed = resolve_seed(args.seed);
    let s = args.settings.resolve(90.0)?;
    let message = match &args.bits {
        Some(text) => parse_bits(text)?,
        None => {
            if args.pairs == 0 {
                return Err(usage("--pairs must be at least 1"));
            }
            BitSource::Seeded(derive_seed(seed, 1)).bits(args.pairs as usize)
        }
    };
    let session = run_signaling(&message, s, derive_seed(seed, 0))?;
    let config = json!({
        "a": s.a,
        "b": s.b,
        "n_bits": message.len(),
        "explicit_message": args.bits.is_some(),
    });
    let payload = json!({
        "realization": "signaling",
        "settings": s,
        "n": session.n(),
        "successes": session.successes,
        "success_rate": session.success_rate(),
        "sender_a_fraction": session.sender_a_fraction(),
        "seeds": { "session": derive_seed(seed, 0), "message": derive_seed(seed, 1) },
    });
    emit(args.out.as_ref(), envelope("signal", Some(seed), config, payload).as_bytes())?;
    Ok(if session.success_rate() == 1.0 { 0 } else { 1 })
}

fn cmd_conspiracy(args: ConspiracyArgs) -> Result<u8, CliError> {
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let seed = resolve_seed(args.seed);
    let mut cfg = ConspiracyConfig::from_master_seed(seed, args.n);
    cfg.delay = args.delay;
    cfg.desync = args.desync;
    if let Some(deg) = args.override_angle_ab {
        cfg.override_settings = Some(Settings::from_angle(deg.to_radians())?);
    }
    let config = serde_json::to_value(cfg).expect("config serializes to JSON");

    if let Some(variations) = args.audit {
        if variations == 0 {
            return Err(usage("--audit needs at least one variation"));
        }
        if args.format == Format::Csv {
            return Err(usage("the locality audit has no CSV form"));
        }
        // Offset keeps the varied seeds clear of the run's own derived ones.
        let remote: Vec<u64> = (0..variations as u64)
            .map(|k| derive_seed(seed, 1000 + k))
            .collect();
        let report = locality_audit(&cfg, &remote);
        let threshold = 4.0 * (0.25 / args.n as f64).sqrt();
        let passed = report.audit_max_shift < threshold;
        let mut payload = serde_json::to_value(&report).expect("report serializes to JSON");
        if let Value::Object(map) = &mut payload {
            map.insert("threshold".into(), json!(threshold));
            map.insert("passed".into(), json!(passed));
        }
        emit(args.out.as_ref(), envelope("conspiracy", Some(seed), config, payload).as_bytes())?;
        return Ok(if passed { 0 } else { 1 });
    }

    let run = run_conspiracy(&cfg);
    match args.format {
        Format::Csv => {
            let mut buf = csv_preamble("conspiracy", seed, &config).into_bytes();
            write_conspiracy_csv(&mut buf, &run.events)?;
            emit(args.out.as_ref(), &buf)?;
            Ok(0)
        }
        Format::Json => {
            let bins = binned_joint_check(&run.events, args.bins)?;
            let all_within = bins.iter().all(|b| b.within_four_stderr);
            let anticorrelated = run.events.iter().all(|e| {
                e.hidden
                    .u
                    .components()
                    .iter()
                    .zip(e.hidden.v.components())
                    .all(|(uc, vc)| *uc == -vc)
            });
            let payload = json!({
                "realization": "conspiracy",
                "n": run.config.n_events,
                "seeds": {
                    "m": cfg.seed_m,
                    "n": cfg.seed_n,
                    "pair": cfg.seed_pair,
                    "outcome": cfg.seed_outcome,
                },
                "counts": run.counts,
                "layout": LAYOUT,
                "all_anticorrelated": anticorrelated,
                "bins": bins,
                "all_bins_within_four_stderr": all_within,
            });
            emit(args.out.as_ref(), envelope("conspiracy", Some(seed), config, payload).as_bytes())?;
            Ok(if all_within && anticorrelated { 0 } else { 1 })
        }
    }
}
