//! Time-optimal single-qubit rotations under a static detuning.
//!
//! The drift is `2πδ Sz` and the drive has fixed amplitude ν₁. With a
//! transverse drive the optimal protocols have a linearly varying phase
//! `φ(t) = 2πηt + φ₀`; z-axis targets have a closed form, general axes are
//! found by solving the four rotation-matching equations for `(T, η, φ₀)`.
//! When the drive may also point along z, the optimum is a constant control
//! vector seen from the drift's interaction picture.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::optim::{bisect, levenberg_marquardt, LmOptions, Serial};
use crate::propagate::{propagate_dense, ControlProtocol, ControlSample, Segment};
use crate::quantum::{c, gate_fidelity, paulis, rotation, Ket, Operator};

/// A rotation by `theta` about the unit axis `axis`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationTarget {
    pub theta: f64,
    pub axis: [f64; 3],
}

impl RotationTarget {
    pub fn new(theta: f64, axis: [f64; 3]) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !(n > 0.0 && n.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad rotation ({theta}, {axis:?})")));
        }
        Ok(Self { theta, axis: [axis[0] / n, axis[1] / n, axis[2] / n] })
    }

    pub fn z(theta: f64) -> Self {
        Self { theta, axis: [0.0, 0.0, 1.0] }
    }

    pub fn x(theta: f64) -> Self {
        Self { theta, axis: [1.0, 0.0, 0.0] }
    }

    /// Axis `(sinγ cosφ, sinγ sinφ, cosγ)`.
    pub fn from_angles(theta: f64, gamma: f64, phi: f64) -> Self {
        Self { theta, axis: [gamma.sin() * phi.cos(), gamma.sin() * phi.sin(), gamma.cos()] }
    }

    /// Parses an axis name (`x`, `y`, `z`, `-x`, ...) or `nx,ny,nz`.
    pub fn parse_axis(text: &str) -> Result<[f64; 3]> {
        let t = text.trim();
        let (sign, name) = match t.strip_prefix('-') {
            Some(rest) => (-1.0, rest),
            None => (1.0, t.strip_prefix('+').unwrap_or(t)),
        };
        match name {
            "x" => return Ok([sign, 0.0, 0.0]),
            "y" => return Ok([0.0, sign, 0.0]),
            "z" => return Ok([0.0, 0.0, sign]),
            _ => {}
        }
        let parts: Vec<f64> = t
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse(format!("unrecognized axis '{text}'")))?;
        match parts.as_slice() {
            [x, y, z] => Ok([*x, *y, *z]),
            _ => Err(Error::Parse(format!("axis needs three components, got '{text}'"))),
        }
    }

    pub fn unitary(&self) -> Operator {
        rotation(self.axis, self.theta)
    }

    pub fn is_z(&self) -> bool {
        self.axis[0].abs() < 1e-14 && self.axis[1].abs() < 1e-14
    }

    /// Angle reduced to `[0, 2π)`, with the axis flipped to `+z` for z targets.
    fn reduced(&self) -> Self {
        let mut r = *self;
        if self.is_z() && self.axis[2] < 0.0 {
            r.axis = [0.0, 0.0, 1.0];
            r.theta = -r.theta;
        }
        r.theta = r.theta.rem_euclid(2.0 * PI);
        r
    }
}

/// Which drive directions are available.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SingleControlSpace {
    /// span{Sx, Sy}.
    Transverse,
    /// span{Sx, Sy, Sz}.
    Full,
}

/// How a solution was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// Identity target, zero duration.
    Trivial,
    /// Closed form, `θ` below the branch threshold.
    BelowThreshold,
    /// Closed form, `θ` at or above the branch threshold.
    AboveThreshold,
    /// Numerical solution of the rotation-matching equations.
    Numerical,
    /// Constant control vector in the drift's interaction picture.
    Longitudinal,
}

#[derive(Clone, Debug)]
pub struct TocSolution {
    /// Gate duration (µs).
    pub duration: f64,
    pub protocol: ControlProtocol,
    pub branch: Branch,
    /// Gate fidelity of the exact protocol unitary against the target.
    pub fidelity: f64,
}

impl TocSolution {
    pub fn eta(&self) -> f64 {
        self.parameters().2
    }

    pub fn phi0(&self) -> f64 {
        self.parameters().3
    }

    /// `(nu1, nu_z, eta, phi0)` of the linear-phase protocol.
    pub fn parameters(&self) -> (f64, f64, f64, f64) {
        match self.protocol {
            ControlProtocol::LinearPhase { nu1, nu_z, eta, phi0, .. } => (nu1, nu_z, eta, phi0),
            _ => (0.0, 0.0, 0.0, 0.0),
        }
    }
}

/// Exact unitary of a linear-phase protocol under the single-qubit drift:
/// `R_z(2πηT) exp(−i 2π[(δ − η + ν_z) Sz + ν₁(cos φ₀ Sx + sin φ₀ Sy)] T)`.
pub fn linear_phase_unitary(delta: f64, protocol: &ControlProtocol) -> Result<Operator> {
    let ControlProtocol::LinearPhase { nu1, nu_z, eta, phi0, duration } = *protocol else {
        return Err(Error::InvalidProtocol("expected a linear-phase protocol".into()));
    };
    let field = [nu1 * phi0.cos(), nu1 * phi0.sin(), delta - eta + nu_z];
    let omega = (field[0] * field[0] + field[1] * field[1] + field[2] * field[2]).sqrt();
    let inner = if omega > 0.0 {
        rotation([field[0] / omega, field[1] / omega, field[2] / omega], 2.0 * PI * omega * duration)
    } else {
        Operator::identity(2)
    };
    Ok(rotation([0.0, 0.0, 1.0], 2.0 * PI * eta * duration) * inner)
}

fn check_drive(delta: f64, nu1: f64) -> Result<()> {
    if !(nu1 > 0.0 && nu1.is_finite()) {
        return Err(Error::InvalidArgument(format!("drive amplitude must be positive, got {nu1}")));
    }
    if !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("detuning must be finite, got {delta}")));
    }
    Ok(())
}

fn finish(delta: f64, target: &RotationTarget, protocol: ControlProtocol, branch: Branch) -> Result<TocSolution> {
    let u = linear_phase_unitary(delta, &protocol)?;
    let fidelity = gate_fidelity(&u, &target.unitary())?;
    Ok(TocSolution { duration: protocol.duration(), protocol, branch, fidelity })
}

fn trivial(nu1: f64) -> TocSolution {
    TocSolution {
        duration: 0.0,
        protocol: ControlProtocol::linear_phase(nu1, 0.0, 0.0, 0.0),
        branch: Branch::Trivial,
        fidelity: 1.0,
    }
}

/// Branch threshold `π(1 + √3 δ/ν₁)` for z rotations (δ ≥ 0).
pub fn branch_threshold(delta: f64, nu1: f64) -> f64 {
    PI * (1.0 + 3f64.sqrt() * delta.abs() / nu1)
}

/// Duration of the closed-form branch `branch` for a z rotation by `theta`
/// (in `(0, 2π)`) at `delta ≥ 0`, together with `ηT`.
pub fn branch_duration(theta: f64, delta: f64, nu1: f64, branch: Branch) -> Result<(f64, f64)> {
    let u = theta / (2.0 * PI);
    let x = match branch {
        Branch::BelowThreshold => u - 1.0,
        Branch::AboveThreshold => u,
        _ => return Err(Error::InvalidArgument("not a closed-form branch".into())),
    };
    let denom = nu1 * nu1 + delta * delta;
    let disc = denom - nu1 * nu1 * x * x;
    if disc < 0.0 {
        return Err(Error::NoRoot { diagnostics: format!("negative discriminant {disc} for θ={theta}, δ={delta}") });
    }
    Ok(((delta * x + disc.sqrt()) / denom, x))
}

/// Minimal duration of a z rotation by `theta` with a transverse drive.
pub fn z_rotation_time(theta: f64, delta: f64, nu1: f64) -> Result<f64> {
    solve_z_rotation(theta, delta, nu1).map(|s| s.duration)
}

/// Closed-form time-optimal z rotation with a transverse drive.
pub fn solve_z_rotation(theta: f64, delta: f64, nu1: f64) -> Result<TocSolution> {
    check_drive(delta, nu1)?;
    let target = RotationTarget::z(theta);
    let theta = target.reduced().theta;
    if theta == 0.0 {
        return Ok(trivial(nu1));
    }
    // δ < 0 maps to δ > 0 by conjugation with σx, which sends θ to 2π − θ
    // and reflects the phase.
    let (th, d, flip) = if delta < 0.0 { (2.0 * PI - theta, -delta, -1.0) } else { (theta, delta, 1.0) };
    let branch = if th < branch_threshold(d, nu1) { Branch::BelowThreshold } else { Branch::AboveThreshold };
    let (duration, x) = branch_duration(th, d, nu1, branch)?;
    let eta = flip * x / duration;
    let protocol = ControlProtocol::linear_phase(nu1, eta, 0.0, duration);
    finish(delta, &RotationTarget::z(theta), protocol, branch)
}

/// Multistart settings for the general-axis solver.
#[derive(Clone, Debug)]
pub struct GeneralSolverOptions {
    /// Duration seeds, spread over `(0, t_max_factor / ν₁]`.
    pub duration_seeds: usize,
    pub t_max_factor: f64,
    /// Frequency seeds, spread over `±eta_span·(ν₁ + |δ|)`.
    pub eta_seeds: usize,
    pub eta_span: f64,
    pub phase_seeds: usize,
    /// Largest accepted residual norm.
    pub residual_tol: f64,
}

impl Default for GeneralSolverOptions {
    fn default() -> Self {
        Self {
            duration_seeds: 40,
            t_max_factor: 2.0,
            eta_seeds: 13,
            eta_span: 3.0,
            phase_seeds: 4,
            residual_tol: 1e-10,
        }
    }
}

/// Residuals of the rotation-matching equations for `(T, η, φ₀)` and overall
/// sign `sign`.
fn matching_residual(x: &[f64], delta: f64, nu1: f64, rhs: &[f64; 4], sign: f64) -> Option<Vec<f64>> {
    let (t, eta, phi0) = (x[0], x[1], x[2]);
    if !(t > 0.0) {
        return None;
    }
    let omega = (nu1 * nu1 + (delta - eta) * (delta - eta)).sqrt();
    let (a, b) = (PI * eta * t, PI * omega * t);
    let (cz, s) = ((delta - eta) / omega, nu1 / omega);
    let lhs = [
        a.cos() * b.cos() - a.sin() * b.sin() * cz,
        a.sin() * b.cos() + a.cos() * b.sin() * cz,
        s * (a + phi0).cos() * b.sin(),
        s * (a + phi0).sin() * b.sin(),
    ];
    Some(lhs.iter().zip(rhs).map(|(l, r)| l - sign * r).collect())
}

/// Time-optimal rotation about an arbitrary axis with a transverse drive,
/// found by multistart Levenberg–Marquardt on the matching equations. The
/// shortest converged duration is returned.
pub fn solve_general(
    target: &RotationTarget,
    delta: f64,
    nu1: f64,
    opts: &GeneralSolverOptions,
) -> Result<TocSolution> {
    check_drive(delta, nu1)?;
    let r = target.reduced();
    if r.theta == 0.0 {
        return Ok(trivial(nu1));
    }
    let (h, sh) = ((r.theta / 2.0).cos(), (r.theta / 2.0).sin());
    let rhs = [h, r.axis[2] * sh, r.axis[0] * sh, r.axis[1] * sh];
    let t_max = opts.t_max_factor / nu1;
    let eta_max = opts.eta_span * (nu1 + delta.abs());
    let mut seeds = Vec::new();
    for i in 0..opts.duration_seeds {
        let t = t_max * (i as f64 + 1.0) / opts.duration_seeds as f64;
        for j in 0..opts.eta_seeds {
            let eta = if opts.eta_seeds > 1 {
                -eta_max + 2.0 * eta_max * j as f64 / (opts.eta_seeds - 1) as f64
            } else {
                0.0
            };
            for k in 0..opts.phase_seeds {
                let phi = 2.0 * PI * k as f64 / opts.phase_seeds as f64;
                for sign in [1.0, -1.0] {
                    seeds.push(([t, eta, phi], sign));
                }
            }
        }
    }
    let lm = LmOptions { max_iterations: 100, ..LmOptions::default() };
    let best = seeds
        .par_iter()
        .filter_map(|(x0, sign)| {
            let problem = Serial(|x: &[f64]| matching_residual(x, delta, nu1, &rhs, *sign));
            let rep = levenberg_marquardt(&problem, x0, &lm)?;
            (rep.residual_norm < opts.residual_tol && rep.x[0] > 0.0).then_some(rep.x)
        })
        .min_by(|a, b| a[0].total_cmp(&b[0]));
    let Some(x) = best else {
        return Err(Error::NoRoot {
            diagnostics: format!(
                "no converged root among {} seeds for θ={}, axis={:?}, δ={delta}, ν₁={nu1}",
                seeds.len(),
                target.theta,
                target.axis
            ),
        });
    };
    let phi0 = x[2].rem_euclid(2.0 * PI);
    let protocol = ControlProtocol::linear_phase(nu1, x[1], phi0, x[0]);
    finish(delta, target, protocol, Branch::Numerical)
}

/// Time-optimal rotation when the drive can also point along z.
///
/// In the interaction picture of the drift a constant control vector `ν₁ m̂`
/// produces `U(T) = e^{−iH₀T} e^{−i2πν₁ m̂·S T}`, so the shortest `T` is the
/// first root of `|Tr W(T)|/2 = |cos(πν₁T)|` with `W(T) = R_z(−2πδT) U_F`.
/// Seen from the rotating frame the transverse part of the control precesses
/// at the detuning.
pub fn solve_with_z_control(target: &RotationTarget, delta: f64, nu1: f64) -> Result<TocSolution> {
    check_drive(delta, nu1)?;
    let r = target.reduced();
    if r.theta == 0.0 {
        return Ok(trivial(nu1));
    }
    let uf = target.unitary();
    let w = |t: f64| rotation([0.0, 0.0, 1.0], -2.0 * PI * delta * t) * &uf;
    let g = |t: f64| {
        let c0 = w(t).trace().re / 2.0;
        c0 * c0 - (PI * nu1 * t).cos().powi(2)
    };
    // g(0) < 0 and g(1/2ν₁) ≥ 0, so a sign change lies in between.
    let t_end = 0.5 / nu1;
    let steps = 4000;
    let mut prev = 0.0;
    let mut root = None;
    for k in 1..=steps {
        let t = t_end * k as f64 / steps as f64;
        if g(t) >= 0.0 {
            root = Some(bisect(g, prev, t, 1e-15));
            break;
        }
        prev = t;
    }
    let Some(duration) = root else {
        return Err(Error::NoRoot { diagnostics: format!("no sign change up to {t_end} µs") });
    };
    let wt = w(duration);
    let c0 = wt.trace().re / 2.0;
    let p = paulis();
    let v: Vec<f64> = (1..4).map(|k| -(&wt * &p[k]).trace().im / 2.0).collect();
    let half = PI * nu1 * duration;
    let sign = if c0 * half.cos() < 0.0 { -1.0 } else { 1.0 };
    let mut m: Vec<f64> = v.iter().map(|x| sign * x / half.sin()).collect();
    let n = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    m.iter_mut().for_each(|x| *x /= n);
    let transverse = (m[0] * m[0] + m[1] * m[1]).sqrt();
    let protocol = ControlProtocol::LinearPhase {
        nu1: nu1 * transverse,
        nu_z: nu1 * m[2],
        eta: delta,
        phi0: if transverse > 0.0 { m[1].atan2(m[0]) } else { 0.0 },
        duration,
    };
    finish(delta, target, protocol, Branch::Longitudinal)
}

/// Dispatches to the closed form, the general solver or the z-control solver.
pub fn solve(target: &RotationTarget, delta: f64, nu1: f64, space: SingleControlSpace) -> Result<TocSolution> {
    match space {
        SingleControlSpace::Full => solve_with_z_control(target, delta, nu1),
        SingleControlSpace::Transverse if target.is_z() => {
            let r = target.reduced();
            solve_z_rotation(r.theta, delta, nu1)
        }
        SingleControlSpace::Transverse => solve_general(target, delta, nu1, &GeneralSolverOptions::default()),
    }
}

/// Parses an angle in radians or as a multiple of π: `1.2`, `pi`, `-pi/2`,
/// `7pi/4`, `3*pi/8`, `π/3`.
pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("unrecognized angle '{text}'"));
    let t: String = text.trim().replace('π', "pi").replace(' ', "");
    if let Ok(v) = t.parse::<f64>() {
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let coeff = num.strip_suffix("pi").ok_or_else(bad)?;
    let coeff = coeff.strip_suffix('*').unwrap_or(coeff);
    let k = match coeff {
        "" | "+" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    if den == 0.0 {
        return Err(bad());
    }
    Ok(k * PI / den)
}

/// Resonant Euler-angle z rotation `R_x(π/2) R_y(θ) R_{−x}(π/2)`, with the
/// segments applied in the order −x, y, x. Duration `(π + θ)/(2πν₁)`.
pub fn euler_baseline(theta: f64, nu1: f64) -> Result<ControlProtocol> {
    check_drive(0.0, nu1)?;
    let theta = theta.rem_euclid(2.0 * PI);
    let quarter = 0.25 / nu1;
    Ok(ControlProtocol::Segments(vec![
        Segment { duration: quarter, control: ControlSample::polar(nu1, PI) },
        Segment { duration: theta / (2.0 * PI * nu1), control: ControlSample::polar(nu1, PI / 2.0) },
        Segment { duration: quarter, control: ControlSample::polar(nu1, 0.0) },
    ]))
}

/// Minimal z-rotation durations on a grid: `out[i][j]` is the time for
/// `deltas[i]` and `thetas[j]`.
pub fn time_surface(deltas: &[f64], thetas: &[f64], nu1: f64) -> Result<Vec<Vec<f64>>> {
    deltas.iter().map(|&d| thetas.iter().map(|&th| z_rotation_time(th, d, nu1)).collect()).collect()
}

/// First recorded time at which `|⟨target|ψ(t)⟩|²` reaches `threshold`.
pub fn state_crossing_time(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    initial: &Ket,
    target: &Ket,
    threshold: f64,
    record_dt: f64,
) -> Result<Option<f64>> {
    let traj = propagate_dense(model, protocol, 4, record_dt)?;
    let states = traj.states(initial)?;
    Ok(states.iter().zip(&traj.times).find(|(s, _)| target.overlap(s).norm_sqr() >= threshold).map(|(_, t)| *t))
}

/// `(|0⟩ + i|1⟩)/√2`, the equatorial initial state used for z-rotation demos.
pub fn equatorial_state() -> Ket {
    Ket::new(&[c(1.0, 0.0), c(0.0, 1.0)]).expect("nonzero")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::final_unitary;

    const NU1: f64 = 5.0;

    #[test]
    fn angle_parsing() {
        let cases = [
            ("pi", PI),
            ("-pi/2", -PI / 2.0),
            ("7pi/4", 7.0 * PI / 4.0),
            ("3*pi/8", 3.0 * PI / 8.0),
            ("π/3", PI / 3.0),
            ("0.25", 0.25),
            (" 2pi ", 2.0 * PI),
        ];
        for (text, want) in cases {
            assert_eq!(parse_angle(text).unwrap(), want, "{text}");
        }
        for text in ["", "pie", "pi/0", "x", "1/2pi", "inf"] {
            assert!(parse_angle(text).is_err(), "{text}");
        }
    }

    fn assert_exact(sol: &TocSolution) {
        assert!(sol.fidelity > 1.0 - 1e-12, "fidelity {}", sol.fidelity);
    }

    #[test]
    fn resonant_pi_rotation() {
        let sol = solve_z_rotation(PI, 0.0, NU1).unwrap();
        assert!((sol.duration - 3f64.sqrt() / (2.0 * NU1)).abs() < 1e-14);
        assert_eq!(sol.branch, Branch::AboveThreshold);
        assert_exact(&sol);
    }

    #[test]
    fn closed_form_is_exact_for_both_branches_and_signs() {
        for &delta in &[0.0, 1.5, -1.5, 5.5, -5.5, 20.0] {
            for k in 1..24 {
                let theta = 2.0 * PI * k as f64 / 24.0;
                let sol = solve_z_rotation(theta, delta, NU1).unwrap();
                assert_exact(&sol);
            }
        }
    }

    #[test]
    fn branches_meet_at_threshold() {
        for ratio in [0.0, 0.3, 1.1] {
            let delta = ratio * NU1;
            let th = branch_threshold(delta, NU1);
            if th >= 2.0 * PI {
                continue;
            }
            let (a, _) = branch_duration(th, delta, NU1, Branch::BelowThreshold).unwrap();
            let (b, _) = branch_duration(th, delta, NU1, Branch::AboveThreshold).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn general_solver_matches_closed_form_on_z_axis() {
        for &(theta, delta) in &[(PI / 2.0, 1.5), (5.0 * PI / 4.0, 1.5), (PI / 2.0, 5.5), (PI, 0.0)] {
            let closed = solve_z_rotation(theta, delta, NU1).unwrap();
            let general =
                solve_general(&RotationTarget::z(theta), delta, NU1, &GeneralSolverOptions::default()).unwrap();
            assert!((closed.duration - general.duration).abs() < 1e-9);
        }
    }

    #[test]
    fn resonant_x_rotation_is_a_plain_pulse() {
        let sol = solve_general(&RotationTarget::x(PI / 2.0), 0.0, NU1, &GeneralSolverOptions::default()).unwrap();
        assert!((sol.duration - 0.05).abs() < 1e-10);
        assert_exact(&sol);
    }

    #[test]
    fn z_control_beats_transverse_control() {
        for &(target, delta) in &[
            (RotationTarget::z(PI / 2.0), 1.5),
            (RotationTarget::x(PI / 4.0), 1.5),
            (RotationTarget::z(7.0 * PI / 4.0), 5.5),
        ] {
            let full = solve_with_z_control(&target, delta, NU1).unwrap();
            let transverse = solve(&target, delta, NU1, SingleControlSpace::Transverse).unwrap();
            assert_exact(&full);
            assert!(full.duration <= transverse.duration + 1e-12);
        }
    }

    #[test]
    fn z_control_propagates_to_target() {
        let target = RotationTarget::x(PI / 2.0);
        let sol = solve_with_z_control(&target, 1.5, NU1).unwrap();
        let model = RotatingFrameModel::single_qubit(1.5);
        let u = final_unitary(&model, &sol.protocol, 4).unwrap();
        assert!(gate_fidelity(&u, &target.unitary()).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn euler_baseline_is_a_z_rotation() {
        let model = RotatingFrameModel::single_qubit(0.0);
        for theta in [PI / 3.0, PI, 1.5 * PI] {
            let p = euler_baseline(theta, NU1).unwrap();
            assert!((p.duration() - (PI + theta) / (2.0 * PI * NU1)).abs() < 1e-15);
            let u = final_unitary(&model, &p, 1).unwrap();
            assert!(gate_fidelity(&u, &RotationTarget::z(theta).unitary()).unwrap() > 1.0 - 1e-12);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(solve_z_rotation(PI, 0.0, 0.0).is_err());
        assert!(solve_z_rotation(PI, f64::NAN, 1.0).is_err());
        assert_eq!(solve_z_rotation(2.0 * PI, 1.0, 1.0).unwrap().branch, Branch::Trivial);
        assert!(RotationTarget::new(1.0, [0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(RotationTarget::parse_axis("-y").unwrap(), [0.0, -1.0, 0.0]);
        assert_eq!(RotationTarget::parse_axis("1,0,1").unwrap(), [1.0, 0.0, 1.0]);
        assert!(RotationTarget::parse_axis("w").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn duration_is_positive_and_exact(theta in 0.01..(2.0 * PI - 0.01), delta in -10.0..10.0f64) {
                let sol = solve_z_rotation(theta, delta, NU1).unwrap();
                prop_assert!(sol.duration > 0.0);
                prop_assert!(sol.fidelity > 1.0 - 1e-11);
            }

            #[test]
            fn detuning_symmetry(theta in 0.01..(2.0 * PI - 0.01), delta in 0.0..10.0f64) {
                let plus = z_rotation_time(theta, delta, NU1).unwrap();
                let minus = z_rotation_time(2.0 * PI - theta, -delta, NU1).unwrap();
                prop_assert!((plus - minus).abs() < 1e-12);
            }
        }
    }
}
