//! Schrödinger-equation propagation of control protocols.
//!
//! Every protocol is reduced to a list of constant-Hamiltonian pieces, each
//! propagated with its exact exponential. Piecewise-constant protocols are
//! therefore propagated exactly; linear-phase protocols are discretized on a
//! ~1 ns grid with a midpoint phase per substep.
//!
//! Global phases are kept as they come out of the exponentials; only fidelity
//! comparisons are phase-insensitive.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nv::{FrameKind, RotatingFrameModel};
use crate::quantum::{Eigh, Ket, Operator};

/// Default sample spacing for parametric protocols (µs).
pub const DEFAULT_SAMPLE_DT: f64 = 0.001;
/// Default midpoint substeps per sample for parametric protocols.
pub const DEFAULT_SUBSTEPS: usize = 4;

const AMPLITUDE_TOL: f64 = 1e-9;

/// One piecewise-constant control value (MHz).
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ControlSample {
    pub nu_x: f64,
    pub nu_y: f64,
    pub nu_z: f64,
}

impl ControlSample {
    pub fn new(nu_x: f64, nu_y: f64) -> Self {
        Self { nu_x, nu_y, nu_z: 0.0 }
    }

    pub fn polar(nu1: f64, phase: f64) -> Self {
        Self::new(nu1 * phase.cos(), nu1 * phase.sin())
    }

    pub fn amplitude(&self) -> f64 {
        (self.nu_x * self.nu_x + self.nu_y * self.nu_y + self.nu_z * self.nu_z).sqrt()
    }
}

/// A constant control held for `duration` µs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub control: ControlSample,
}

/// A control Hamiltonian trajectory.
#[derive(Clone, Debug, PartialEq)]
pub enum ControlProtocol {
    /// Constant transverse amplitude `nu1` with phase `φ(t) = 2πηt + φ₀`,
    /// plus an optional constant longitudinal component `nu_z`.
    LinearPhase { nu1: f64, nu_z: f64, eta: f64, phi0: f64, duration: f64 },
    /// Uniformly sampled piecewise-constant controls.
    Sampled { dt: f64, samples: Vec<ControlSample> },
    /// Piecewise-constant controls with individual durations.
    Segments(Vec<Segment>),
}

impl ControlProtocol {
    pub fn linear_phase(nu1: f64, eta: f64, phi0: f64, duration: f64) -> Self {
        Self::LinearPhase { nu1, nu_z: 0.0, eta, phi0, duration }
    }

    /// The zero-length protocol.
    pub fn empty() -> Self {
        Self::Sampled { dt: DEFAULT_SAMPLE_DT, samples: Vec::new() }
    }

    pub fn duration(&self) -> f64 {
        match self {
            Self::LinearPhase { duration, .. } => *duration,
            Self::Sampled { dt, samples } => dt * samples.len() as f64,
            Self::Segments(segs) => segs.iter().map(|s| s.duration).sum(),
        }
    }

    /// Control amplitude (MHz); `None` if the protocol is empty.
    pub fn amplitude(&self) -> Option<f64> {
        match self {
            Self::LinearPhase { nu1, nu_z, .. } => Some((nu1 * nu1 + nu_z * nu_z).sqrt()),
            Self::Sampled { samples, .. } => samples.first().map(ControlSample::amplitude),
            Self::Segments(segs) => segs.first().map(|s| s.control.amplitude()),
        }
    }

    /// Checks durations and the constant-amplitude constraint.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProtocol(msg));
        match self {
            Self::LinearPhase { nu1, nu_z, eta, phi0, duration } => {
                if ![*nu1, *nu_z, *eta, *phi0, *duration].iter().all(|x| x.is_finite()) {
                    return bad("non-finite parameter".into());
                }
                if *nu1 < 0.0 {
                    return bad(format!("transverse amplitude must be non-negative, got {nu1}"));
                }
                if *duration < 0.0 {
                    return bad(format!("negative duration {duration}"));
                }
                if *duration > 0.0 && nu1 * nu1 + nu_z * nu_z == 0.0 {
                    return bad("parametric protocol needs a nonzero amplitude".into());
                }
            }
            Self::Sampled { dt, samples } => {
                if !(dt.is_finite() && *dt > 0.0) {
                    return bad(format!("sample spacing must be positive, got {dt}"));
                }
                check_amplitudes(samples.iter().copied())?;
            }
            Self::Segments(segs) => {
                if let Some(s) = segs.iter().find(|s| !(s.duration.is_finite() && s.duration >= 0.0)) {
                    return bad(format!("segment duration must be non-negative, got {}", s.duration));
                }
                check_amplitudes(segs.iter().map(|s| s.control))?;
            }
        }
        Ok(())
    }

    /// Control value at time `t` for parametric protocols.
    pub fn linear_phase_at(&self, t: f64) -> Option<ControlSample> {
        match self {
            Self::LinearPhase { nu1, nu_z, eta, phi0, .. } => {
                let phase = 2.0 * PI * eta * t + phi0;
                Some(ControlSample { nu_x: nu1 * phase.cos(), nu_y: nu1 * phase.sin(), nu_z: *nu_z })
            }
            _ => None,
        }
    }

    /// The protocol restricted to `[start, start + duration]` of a parametric
    /// protocol, or to samples `[from, to)` of a sampled one.
    pub fn window(&self, from: usize, to: usize) -> Option<Self> {
        match self {
            Self::Sampled { dt, samples } if from <= to && to <= samples.len() => {
                Some(Self::Sampled { dt: *dt, samples: samples[from..to].to_vec() })
            }
            Self::Segments(segs) if from <= to && to <= segs.len() => Some(Self::Segments(segs[from..to].to_vec())),
            _ => None,
        }
    }

    /// Parametric protocol shifted to start at `t0` and last `duration`.
    pub fn linear_phase_window(&self, t0: f64, duration: f64) -> Option<Self> {
        match self {
            Self::LinearPhase { nu1, nu_z, eta, phi0, .. } => Some(Self::LinearPhase {
                nu1: *nu1,
                nu_z: *nu_z,
                eta: *eta,
                phi0: phi0 + 2.0 * PI * eta * t0,
                duration,
            }),
            _ => None,
        }
    }

    /// Samples the protocol on a uniform grid with spacing close to
    /// `target_dt`, taking the control at each sample midpoint.
    pub fn resample(&self, target_dt: f64) -> Self {
        let total = self.duration();
        if total == 0.0 {
            return Self::empty();
        }
        let n = grid_count(total, target_dt);
        let dt = total / n as f64;
        let samples = (0..n).map(|k| self.control_at((k as f64 + 0.5) * dt)).collect();
        Self::Sampled { dt, samples }
    }

    /// Control value at time `t` (the value of the piece containing `t`).
    pub fn control_at(&self, t: f64) -> ControlSample {
        match self {
            Self::LinearPhase { .. } => self.linear_phase_at(t).unwrap_or_default(),
            Self::Sampled { dt, samples } => {
                if samples.is_empty() {
                    return ControlSample::default();
                }
                let k = ((t / dt).floor().max(0.0) as usize).min(samples.len() - 1);
                samples[k]
            }
            Self::Segments(segs) => {
                let mut start = 0.0;
                for s in segs {
                    if t < start + s.duration {
                        return s.control;
                    }
                    start += s.duration;
                }
                segs.last().map(|s| s.control).unwrap_or_default()
            }
        }
    }

    /// The same protocol with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale =
            |c: ControlSample| ControlSample { nu_x: c.nu_x * factor, nu_y: c.nu_y * factor, nu_z: c.nu_z * factor };
        match self {
            Self::LinearPhase { nu1, nu_z, eta, phi0, duration } => Self::LinearPhase {
                nu1: nu1 * factor,
                nu_z: nu_z * factor,
                eta: *eta,
                phi0: *phi0,
                duration: *duration,
            },
            Self::Sampled { dt, samples } => {
                Self::Sampled { dt: *dt, samples: samples.iter().copied().map(scale).collect() }
            }
            Self::Segments(segs) => Self::Segments(
                segs.iter().map(|s| Segment { duration: s.duration, control: scale(s.control) }).collect(),
            ),
        }
    }
}

fn check_amplitudes(mut samples: impl Iterator<Item = ControlSample>) -> Result<()> {
    let Some(first) = samples.next() else { return Ok(()) };
    let reference = first.amplitude();
    if !reference.is_finite() {
        return Err(Error::InvalidProtocol("non-finite control amplitude".into()));
    }
    for (k, s) in samples.enumerate() {
        let a = s.amplitude();
        if !((a - reference).abs() <= AMPLITUDE_TOL * reference.max(1.0)) {
            return Err(Error::InvalidProtocol(format!(
                "sample {} has amplitude {a} but the protocol amplitude is {reference}",
                k + 1
            )));
        }
    }
    Ok(())
}

/// Number of samples for a uniform grid over `total` close to spacing `dt`.
pub fn grid_count(total: f64, dt: f64) -> usize {
    ((total / dt) - 1e-9).ceil().max(1.0) as usize
}

/// Unitaries (and optionally states) on a time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub unitaries: Vec<Operator>,
}

impl Trajectory {
    pub fn final_unitary(&self) -> &Operator {
        self.unitaries.last().expect("trajectory always holds U(0)")
    }

    pub fn duration(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn states(&self, initial: &Ket) -> Result<Vec<Ket>> {
        let d = self.final_unitary().dim();
        if initial.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: initial.dim() });
        }
        Ok(self.unitaries.iter().map(|u| u.apply(initial)).collect())
    }
}

struct Piece {
    duration: f64,
    hamiltonian: Operator,
    /// Whether a sample-grid boundary follows this piece.
    record: bool,
}

fn pieces(model: &RotatingFrameModel, protocol: &ControlProtocol, substeps: usize) -> Vec<Piece> {
    let h = |c: ControlSample| model.hamiltonian(c.nu_x, c.nu_y, c.nu_z);
    match protocol {
        ControlProtocol::Sampled { dt, samples } => {
            samples.iter().map(|&c| Piece { duration: *dt, hamiltonian: h(c), record: true }).collect()
        }
        ControlProtocol::Segments(segs) => {
            segs.iter().map(|s| Piece { duration: s.duration, hamiltonian: h(s.control), record: true }).collect()
        }
        ControlProtocol::LinearPhase { duration, .. } => {
            if *duration == 0.0 {
                return Vec::new();
            }
            let n = grid_count(*duration, DEFAULT_SAMPLE_DT);
            let dt = duration / n as f64;
            let sub = dt / substeps as f64;
            let mut out = Vec::with_capacity(n * substeps);
            for k in 0..n {
                for s in 0..substeps {
                    let mid = k as f64 * dt + (s as f64 + 0.5) * sub;
                    let c = protocol.linear_phase_at(mid).unwrap_or_default();
                    out.push(Piece { duration: sub, hamiltonian: h(c), record: s + 1 == substeps });
                }
            }
            out
        }
    }
}

/// Propagates `protocol` under `model`, returning `U(t)` on the protocol's
/// sample grid (segment boundaries for segment protocols). A zero-length
/// protocol yields the single point `U(0) = I`.
pub fn propagate(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    substeps_per_sample: usize,
) -> Result<Trajectory> {
    propagate_dense(model, protocol, substeps_per_sample, f64::INFINITY)
}

/// Like [`propagate`], but constant pieces are additionally split (exactly)
/// so that recorded times are at most `record_dt` apart.
pub fn propagate_dense(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    substeps_per_sample: usize,
    record_dt: f64,
) -> Result<Trajectory> {
    if substeps_per_sample == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    if !(record_dt > 0.0) {
        return Err(Error::InvalidArgument("record spacing must be positive".into()));
    }
    protocol.validate()?;
    let d = model.dim();
    let mut times = vec![0.0];
    let mut unitaries = vec![Operator::identity(d)];
    let mut u = Operator::identity(d);
    let mut t = 0.0;
    for piece in pieces(model, protocol, substeps_per_sample) {
        if piece.duration == 0.0 {
            continue;
        }
        let eig = Eigh::new(&piece.hamiltonian)?;
        let splits = if record_dt.is_finite() { grid_count(piece.duration, record_dt) } else { 1 };
        let step = piece.duration / splits as f64;
        let step_u = eig.propagator(step);
        for s in 0..splits {
            u = &step_u * &u;
            if s + 1 < splits && record_dt.is_finite() {
                times.push(t + (s + 1) as f64 * step);
                unitaries.push(u.clone());
            }
        }
        t += piece.duration;
        if piece.record || record_dt.is_finite() {
            times.push(t);
            unitaries.push(u.clone());
        }
    }
    Ok(Trajectory { times, unitaries })
}

/// Final unitary of a protocol.
pub fn final_unitary(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    substeps_per_sample: usize,
) -> Result<Operator> {
    protocol.validate()?;
    let mut u = Operator::identity(model.dim());
    for piece in pieces(model, protocol, substeps_per_sample) {
        if piece.duration > 0.0 {
            u = Eigh::new(&piece.hamiltonian)?.propagator(piece.duration) * &u;
        }
    }
    Ok(u)
}

/// Named observables sampled along a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub names: Vec<String>,
    /// One column per name, each the same length as `times`.
    pub columns: Vec<Vec<f64>>,
}

impl Series {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|i| self.columns[i].as_slice())
    }

    /// CSV with a `time_us` column followed by one column per observable;
    /// every number is written in scientific notation with 9 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_us");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, t) in self.times.iter().enumerate() {
            let _ = write!(out, "{}", fmt_sig9(*t));
            for col in &self.columns {
                let _ = write!(out, ",{}", fmt_sig9(col[i]));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_csv().as_bytes())
    }
}

/// Scientific notation with 9 significant digits; `-0` is written as `0`.
pub fn fmt_sig9(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

/// Writes a file through a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Population labels of the two-qubit basis, in basis order.
pub const TWO_QUBIT_LABELS: [&str; 4] = ["P_0_1", "P_0_0", "P_-1_1", "P_-1_0"];

/// Spin expectation values (one qubit) or level populations (two qubits)
/// along a trajectory.
pub fn bloch_series(traj: &Trajectory, initial: &Ket, model: &RotatingFrameModel) -> Result<Series> {
    let states = traj.states(initial)?;
    let (names, columns): (Vec<String>, Vec<Vec<f64>>) = match model.kind {
        FrameKind::SingleQubit { .. } => {
            let ops = [&model.sx, &model.sy, &model.sz];
            let names = vec!["Sx".to_string(), "Sy".into(), "Sz".into(), "P_0".into()];
            let mut cols: Vec<Vec<f64>> =
                ops.iter().map(|op| states.iter().map(|s| s.expectation(op).re).collect()).collect();
            cols.push(states.iter().map(|s| s.populations()[0]).collect());
            (names, cols)
        }
        FrameKind::TwoQubit { .. } => {
            let names = TWO_QUBIT_LABELS.iter().map(|s| s.to_string()).collect();
            let cols = (0..4).map(|i| states.iter().map(|s| s.populations()[i]).collect()).collect();
            (names, cols)
        }
    };
    Ok(Series { times: traj.times.clone(), names, columns })
}
