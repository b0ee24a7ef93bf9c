//! Command-line front end: argument types and one function per subcommand.
//!
//! Each command returns the text it would print, so the binary stays a thin
//! wrapper and the commands can be exercised directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::characterization::{
    average_gate_fidelity, calibrate_sigma_delta, monte_carlo_fidelity, noise_averaged_process, simulate_qpt,
    NoiseModel, Process,
};
use crate::error::{Error, Result};
use crate::nv::{single_qubit_frame, two_qubit_frame, FrameKind, NvParameters, RotatingFrameModel};
use crate::propagate::{
    bloch_series, final_unitary, fmt_sig9, propagate_dense, write_atomic, ControlProtocol, Series, DEFAULT_SUBSTEPS,
};
use crate::pulse::PulseFile;
use crate::qbe::{selective_pulse_baseline, synthesize, ControlSpaceSpec, PenaltyConfig, ShootingConfig};
use crate::quantum::{c, controlled_u, gate_fidelity, parse_matrix_csv, Ket, Operator};
use crate::single::{
    equatorial_state, euler_baseline, parse_angle, solve, state_crossing_time, z_rotation_time, Branch, RotationTarget,
    SingleControlSpace,
};

/// Environment variable overriding the default RNG seed (0).
pub const SEED_VAR: &str = "BRACHIST_SEED";

#[derive(Debug, Parser)]
#[command(name = "brachist", version, about = "Time-optimal gate synthesis and simulation for NV-center spin qubits")]
pub struct Cli {
    /// NV parameter file (flat key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time-optimal single-qubit rotation.
    TocSingle(TocSingleArgs),
    /// Brachistochrone synthesis of a general gate, or the selective-pulse baseline.
    TocQbe(TocQbeArgs),
    /// Propagate a pulse file and write observables over time.
    Simulate(SimulateArgs),
    /// Simulated process tomography of a pulse or named gate.
    Qpt(QptArgs),
    /// Time-optimal versus Euler-rotation durations for z rotations.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SpaceArg {
    /// Drive along x and y only.
    Transverse,
    /// Drive along x, y and z.
    Full,
}

#[derive(Debug, Args)]
pub struct TocSingleArgs {
    /// Rotation axis: x, y, z (optionally signed) or nx,ny,nz.
    #[arg(long, default_value = "z", allow_hyphen_values = true)]
    pub axis: String,
    /// Rotation angle: radians or a multiple of pi such as 7pi/4.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: String,
    /// Detuning (MHz). Ignored when --f-mw is given with --config.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    /// Drive amplitude (MHz).
    #[arg(long, default_value_t = 5.0)]
    pub nu1: f64,
    /// Microwave frequency (MHz); with --config it sets the detuning.
    #[arg(long)]
    pub f_mw: Option<f64>,
    #[arg(long, value_enum, default_value_t = SpaceArg::Transverse)]
    pub space: SpaceArg,
    /// Pulse file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Selective,
}

#[derive(Debug, Args)]
pub struct TocQbeArgs {
    /// Target: controlled-u, identity, rx:<angle>, ry:<angle>, rz:<angle>,
    /// r:<axis>:<angle>, or file:<path> (CSV of re,im pairs).
    #[arg(long, default_value = "controlled-u")]
    pub target: String,
    /// Number of qubits for dimension-agnostic targets.
    #[arg(long, default_value_t = 2)]
    pub qubits: u32,
    #[arg(long, default_value_t = 2.5)]
    pub nu1: f64,
    /// Hyperfine coupling (MHz); defaults to the config value or -2.16.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Detuning (MHz) for single-qubit targets.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    /// Penalty weight of the initial optimization.
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub segments: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Initial duration guess (µs).
    #[arg(long, default_value_t = 0.45)]
    pub t_init: f64,
    /// Report the selective-pulse baseline instead of synthesizing.
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineArg>,
    #[arg(long, default_value_t = 1)]
    pub k1: u32,
    #[arg(long, default_value_t = 2)]
    pub k2: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Shooting convergence history (CSV).
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub pulse: PathBuf,
    /// Initial state: 0, -1, equator, plus (one qubit) or 0,1 / 0,0 / -1,1 / -1,0 (two qubits).
    #[arg(long, allow_hyphen_values = true)]
    pub initial: String,
    /// Comma-separated observable columns to keep (default: all).
    #[arg(long)]
    pub observables: Option<String>,
    /// Recording interval (µs).
    #[arg(long, default_value_t = 0.001)]
    pub dt: f64,
    /// Output CSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct QptArgs {
    #[arg(long, conflicts_with = "gate")]
    pub pulse: Option<PathBuf>,
    /// Named gate, same syntax as toc-qbe --target.
    #[arg(long)]
    pub gate: Option<String>,
    /// Reference gate for F_a; defaults to the pulse's recorded target or the named gate.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub qubits: u32,
    /// Quasi-static detuning spread (MHz).
    #[arg(long, default_value_t = 0.0)]
    pub sigma_delta: f64,
    /// Relative drive-amplitude spread.
    #[arg(long, default_value_t = 0.0)]
    pub amp_sigma: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    /// Find the detuning spread at which the mean F_a equals this value.
    #[arg(long)]
    pub calibrate: Option<f64>,
    /// Output prefix: writes <prefix>_re.csv and <prefix>_im.csv.
    #[arg(long)]
    pub out_prefix: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Comma-separated angles.
    #[arg(long, default_value = "pi/8,pi/4,pi/2,pi")]
    pub thetas: String,
    /// Use an N-point uniform grid over (0, pi] instead of --thetas.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 5.0)]
    pub nu1: f64,
    /// Also report when the equatorial state reaches its rotated image.
    #[arg(long)]
    pub crossing: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Seed from `BRACHIST_SEED`, default 0.
pub fn seed_from_env() -> Result<u64> {
    match std::env::var(SEED_VAR) {
        Ok(v) => {
            v.trim().parse().map_err(|_| Error::Parse(format!("{SEED_VAR} must be an unsigned integer, got {v:?}")))
        }
        Err(_) => Ok(0),
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    let params = cli.config.as_deref().map(NvParameters::load).transpose()?;
    match &cli.command {
        Command::TocSingle(a) => toc_single(a, params.as_ref()),
        Command::TocQbe(a) => toc_qbe(a, params.as_ref()),
        Command::Simulate(a) => simulate(a),
        Command::Qpt(a) => qpt(a, seed_from_env()?),
        Command::Compare(a) => compare(a),
    }
}

/// Resolves a target name for dimension `dim` (used by `identity`).
pub fn parse_target(spec: &str, dim: usize) -> Result<Operator> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("file:") {
        let u = parse_matrix_csv(&std::fs::read_to_string(path)?)?;
        if !u.is_unitary(1e-9) {
            return Err(Error::InvalidArgument(format!("matrix in {path} is not unitary")));
        }
        return Ok(u);
    }
    if let Some((head, angle)) = spec.rsplit_once(':') {
        let theta = parse_angle(angle)?;
        let axis = match head {
            "rx" => [1.0, 0.0, 0.0],
            "ry" => [0.0, 1.0, 0.0],
            "rz" => [0.0, 0.0, 1.0],
            _ => match head.strip_prefix("r:") {
                Some(axis) => RotationTarget::parse_axis(axis)?,
                None => return Err(Error::Parse(format!("unknown target '{spec}'"))),
            },
        };
        return Ok(RotationTarget::new(theta, axis)?.unitary());
    }
    match spec {
        "controlled-u" => Ok(controlled_u()),
        "identity" => Ok(Operator::identity(dim)),
        _ => Err(Error::Parse(format!("unknown target '{spec}'"))),
    }
}

fn is_identity(u: &Operator) -> bool {
    gate_fidelity(u, &Operator::identity(u.dim())).is_ok_and(|f| f > 1.0 - 1e-12)
}

fn branch_name(b: Branch) -> &'static str {
    match b {
        Branch::Trivial => "trivial",
        Branch::BelowThreshold => "closed form (below threshold)",
        Branch::AboveThreshold => "closed form (above threshold)",
        Branch::Numerical => "numerical",
        Branch::Longitudinal => "longitudinal",
    }
}

fn ns(t_us: f64) -> String {
    format!("{:.1} ns", t_us * 1e3)
}

pub fn toc_single(a: &TocSingleArgs, params: Option<&NvParameters>) -> Result<String> {
    let theta = parse_angle(&a.theta)?;
    let target = RotationTarget::new(theta, RotationTarget::parse_axis(&a.axis)?)?;
    let model = match (params, a.f_mw) {
        (Some(p), Some(f)) => single_qubit_frame(p, f),
        (None, Some(_)) => return Err(Error::InvalidArgument("--f-mw needs --config".into())),
        _ => RotatingFrameModel::single_qubit(a.delta),
    };
    let delta = model.delta0().unwrap_or(a.delta);
    let space = match a.space {
        SpaceArg::Transverse => SingleControlSpace::Transverse,
        SpaceArg::Full => SingleControlSpace::Full,
    };
    let sol = solve(&target, delta, a.nu1, space)?;
    let mut out = String::new();
    if sol.branch == Branch::Trivial {
        let _ = writeln!(out, "identity target: no pulse needed, T = 0");
    }
    let (_, nu_z, eta, phi0) = sol.parameters();
    let _ = writeln!(out, "T = {}", ns(sol.duration));
    let _ = writeln!(out, "eta = {eta:.6} MHz");
    let _ = writeln!(out, "phi0 = {phi0:.6} rad");
    if nu_z != 0.0 {
        let _ = writeln!(out, "nu_z = {nu_z:.6} MHz");
    }
    let _ = writeln!(out, "branch = {}", branch_name(sol.branch));
    let _ = writeln!(out, "fidelity = {:.10}", sol.fidelity);
    if let Some(path) = &a.out {
        let label = format!("r:{}:{}", a.axis.trim(), a.theta.trim());
        PulseFile::new(&model, a.nu1, &sol.protocol, &target.unitary(), &label, "toc-single")?.write(path)?;
    }
    Ok(out)
}

fn qbe_model(a: &TocQbeArgs, params: Option<&NvParameters>, dim: usize) -> Result<RotatingFrameModel> {
    match dim {
        2 => Ok(RotatingFrameModel::single_qubit(a.delta)),
        4 => Ok(match (a.a, params) {
            (Some(x), _) => RotatingFrameModel::two_qubit(x),
            (None, Some(p)) => two_qubit_frame(p),
            (None, None) => RotatingFrameModel::two_qubit(NvParameters::default().a_mhz),
        }),
        d => Err(Error::InvalidArgument(format!("targets must be 2x2 or 4x4, got {d}x{d}"))),
    }
}

pub fn toc_qbe(a: &TocQbeArgs, params: Option<&NvParameters>) -> Result<String> {
    let mut out = String::new();
    if a.baseline == Some(BaselineArg::Selective) {
        let model = qbe_model(a, params, 4)?;
        let FrameKind::TwoQubit { a_mhz } = model.kind else { unreachable!("two-qubit model") };
        let p = selective_pulse_baseline(a_mhz, a.k1, a.k2)?;
        let u = final_unitary(&model, &p.protocol, DEFAULT_SUBSTEPS)?;
        let _ = writeln!(out, "selective pulse (k1 = {}, k2 = {}): T = {}", a.k1, a.k2, ns(p.duration));
        let _ = writeln!(out, "nu1 = {:.6} MHz", p.nu1);
        let _ = writeln!(out, "fidelity = {:.10}", gate_fidelity(&u, &controlled_u())?);
        let _ = writeln!(
            out,
            "phase-corrected fidelity = {:.10}",
            crate::quantum::phase_corrected_fidelity(&u, &controlled_u())?
        );
        if let Some(path) = &a.out {
            PulseFile::new(&model, p.nu1, &p.protocol, &controlled_u(), "controlled-u", "selective")?.write(path)?;
        }
        return Ok(out);
    }
    let dim = 1usize << a.qubits;
    let target = parse_target(&a.target, dim)?;
    let model = qbe_model(a, params, target.dim())?;
    if is_identity(&target) {
        let _ = writeln!(out, "identity target: no pulse needed, T = 0");
        if let Some(path) = &a.out {
            PulseFile::new(&model, a.nu1, &ControlProtocol::empty(), &target, &a.target, "toc-qbe")?.write(path)?;
        }
        return Ok(out);
    }
    let spec = ControlSpaceSpec::transverse(&model, a.nu1)?;
    let mut cfg = PenaltyConfig::new(a.nu1);
    if let Some(q) = a.q {
        cfg.q = q;
    }
    if let Some(k) = a.kappa {
        cfg.kappa = k;
    }
    if let Some(s) = a.segments {
        cfg.segments = s;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    let shooting = ShootingConfig { homotopy_schedule: cfg.homotopy_schedule.clone(), ..ShootingConfig::default() };
    let (guess, sol) = synthesize(&model, &target, &spec, &cfg, &shooting, a.t_init)?;
    let _ = writeln!(
        out,
        "penalty optimum (q = {}): T = {}, fidelity = {:.6}",
        guess.metric.q(),
        ns(guess.duration),
        guess.fidelity
    );
    let _ = writeln!(out, "T = {}", ns(sol.duration));
    let _ = writeln!(out, "fidelity = {:.10}", sol.achieved_fidelity);
    let _ = writeln!(out, "max constraint residual = {:.3e}", sol.max_constraint_residual);
    let _ = writeln!(out, "max norm residual = {:.3e}", sol.max_norm_residual);
    if let Some(path) = &a.history {
        write_atomic(path, sol.history_csv().as_bytes())?;
    }
    if let Some(path) = &a.out {
        PulseFile::new(&model, a.nu1, &sol.protocol, &target, &a.target, "toc-qbe")?.write(path)?;
    }
    Ok(out)
}

/// Parses an initial-state label for a model of dimension `dim`.
pub fn parse_initial_state(label: &str, dim: usize) -> Result<Ket> {
    let t = label.trim().trim_start_matches('|').trim_end_matches('>').replace(' ', "");
    let s = 0.5f64.sqrt();
    let ket = match (dim, t.as_str()) {
        (2, "0") => Ket::basis(2, 0),
        (2, "-1" | "1") => Ket::basis(2, 1),
        (2, "equator") => equatorial_state(),
        (2, "plus") => Ket::new(&[c(s, 0.0), c(s, 0.0)])?,
        (4, "0,1") => Ket::basis(4, 0),
        (4, "0,0") => Ket::basis(4, 1),
        (4, "-1,1") => Ket::basis(4, 2),
        (4, "-1,0") => Ket::basis(4, 3),
        _ => return Err(Error::Parse(format!("unknown initial state '{label}' for dimension {dim}"))),
    };
    Ok(ket)
}

pub fn simulate_series(pulse: &PulseFile, initial: &Ket, dt: f64) -> Result<Series> {
    let model = pulse.model();
    let traj = propagate_dense(&model, &pulse.protocol()?, DEFAULT_SUBSTEPS, dt)?;
    bloch_series(&traj, initial, &model)
}

pub fn simulate(a: &SimulateArgs) -> Result<String> {
    let pulse = PulseFile::read(&a.pulse)?;
    let initial = parse_initial_state(&a.initial, pulse.model().dim())?;
    let mut series = simulate_series(&pulse, &initial, a.dt)?;
    if let Some(list) = &a.observables {
        let keep: Vec<&str> = list.split(',').map(str::trim).collect();
        let mut names = Vec::new();
        let mut columns = Vec::new();
        for k in keep {
            let col = series
                .column(k)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown observable '{k}' (have {:?})", series.names)))?;
            names.push(k.to_string());
            columns.push(col.to_vec());
        }
        series = Series { times: series.times, names, columns };
    }
    match &a.out {
        Some(path) => {
            series.write_csv(path)?;
            Ok(format!("wrote {} rows to {}\n", series.times.len(), path.display()))
        }
        None => Ok(series.to_csv()),
    }
}

pub fn qpt(a: &QptArgs, seed: u64) -> Result<String> {
    let mut out = String::new();
    let (process, target, dim) = match (&a.pulse, &a.gate) {
        (Some(path), None) => {
            let pulse = PulseFile::read(path)?;
            let model = pulse.model();
            let protocol = pulse.protocol()?;
            let dim = model.dim();
            let target = parse_target(a.target.as_deref().unwrap_or(&pulse.metadata.target), dim)?;
            let mut noise = NoiseModel::new(a.sigma_delta, a.amp_sigma, a.samples, seed);
            if let Some(f) = a.calibrate {
                let cal = calibrate_sigma_delta(&model, &protocol, &target, &noise, f, 1.0, 1e-5)?;
                let _ = writeln!(
                    out,
                    "calibrated sigma_delta = {:.6} MHz (mean F_a = {:.6} +/- {:.6})",
                    cal.sigma_delta, cal.mean_fidelity, cal.std_fidelity
                );
                noise.sigma_delta = cal.sigma_delta;
            }
            let process = if noise.sigma_delta > 0.0 || noise.amplitude_rel_sigma > 0.0 {
                let (m, s) = monte_carlo_fidelity(&model, &protocol, &target, &noise)?;
                let _ = writeln!(out, "Monte Carlo F_a = {m:.6} +/- {s:.6} ({} samples)", noise.samples);
                noise_averaged_process(&model, &protocol, &noise)?
            } else {
                Process::Unitary(final_unitary(&model, &protocol, DEFAULT_SUBSTEPS)?)
            };
            (process, target, dim)
        }
        (None, Some(name)) => {
            let u = parse_target(name, 1usize << a.qubits)?;
            let target = match &a.target {
                Some(t) => parse_target(t, u.dim())?,
                None => u.clone(),
            };
            let dim = u.dim();
            (Process::Unitary(u), target, dim)
        }
        _ => return Err(Error::InvalidArgument("give exactly one of --pulse or --gate".into())),
    };
    let chi = simulate_qpt(&process, dim)?;
    let fa = average_gate_fidelity(&chi, &target)?;
    let labels = chi.labels();
    let (m, n) =
        (0..labels.len())
            .map(|i| (i, chi.chi[(i, i)].re))
            .fold((0, f64::MIN), |acc, x| if x.1 > acc.1 { x } else { acc });
    let _ = writeln!(out, "F_a = {fa:.10}");
    let _ = writeln!(out, "largest diagonal chi entry: chi_{},{} = {}", labels[m], labels[m], fmt_sig9(n));
    if let Some(prefix) = &a.out_prefix {
        let with = |suffix: &str| -> PathBuf {
            let mut s = prefix.as_os_str().to_owned();
            s.push(suffix);
            PathBuf::from(s)
        };
        chi.write_csv(with("_re.csv"), with("_im.csv"))?;
    }
    Ok(out)
}

/// Time at which the equatorial state first reaches its image under
/// `R(ẑ, θ)` (overlap ≥ 1 − 1e−6), sampled every 0.05 ns.
pub fn crossing_time(model: &RotatingFrameModel, protocol: &ControlProtocol, theta: f64) -> Result<Option<f64>> {
    let psi0 = equatorial_state();
    let target = RotationTarget::z(theta).unitary().apply(&psi0);
    state_crossing_time(model, protocol, &psi0, &target, 1.0 - 1e-6, 5e-5)
}

pub fn compare(a: &CompareArgs) -> Result<String> {
    if a.delta != 0.0 {
        return Err(Error::InvalidArgument("the Euler baseline is defined for delta = 0 only".into()));
    }
    let thetas: Vec<f64> = match a.grid {
        Some(n) if n > 0 => (1..=n).map(|k| std::f64::consts::PI * k as f64 / n as f64).collect(),
        Some(_) => return Err(Error::InvalidArgument("grid needs at least one point".into())),
        None => a.thetas.split(',').map(parse_angle).collect::<Result<_>>()?,
    };
    let model = RotatingFrameModel::single_qubit(0.0);
    let mut table = String::from("theta_rad,toc_ns,euler_ns,difference_ns");
    if a.crossing {
        table.push_str(",toc_crossing_ns,euler_crossing_ns");
    }
    table.push('\n');
    let cell = |t: Option<f64>| t.map_or_else(|| "nan".to_string(), |v| format!("{:.3}", v * 1e3));
    for &theta in &thetas {
        let toc = z_rotation_time(theta, 0.0, a.nu1)?;
        let euler_protocol = euler_baseline(theta, a.nu1)?;
        let euler = euler_protocol.duration();
        let _ = write!(table, "{},{:.3},{:.3},{:.3}", fmt_sig9(theta), toc * 1e3, euler * 1e3, (euler - toc) * 1e3);
        if a.crossing {
            let sol = solve(&RotationTarget::z(theta), 0.0, a.nu1, SingleControlSpace::Transverse)?;
            let tc = crossing_time(&model, &sol.protocol, theta)?;
            let te = crossing_time(&model, &euler_protocol, theta)?;
            let _ = write!(table, ",{},{}", cell(tc), cell(te));
        }
        table.push('\n');
    }
    match &a.out {
        Some(path) => {
            write_atomic(path, table.as_bytes())?;
            Ok(format!("wrote {} rows to {}\n", thetas.len(), path.display()))
        }
        None => Ok(table),
    }
}

/// Reads a pulse file and reports whether it re-simulates to its recorded
/// fidelity within `tol`.
pub fn verify_pulse(path: &Path, target: &Operator, tol: f64) -> Result<bool> {
    let pulse = PulseFile::read(path)?;
    let u = final_unitary(&pulse.model(), &pulse.protocol()?, DEFAULT_SUBSTEPS)?;
    Ok((gate_fidelity(&u, target)? - pulse.metadata.achieved_fidelity).abs() < tol)
}
