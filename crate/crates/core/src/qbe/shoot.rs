use std::f64::consts::PI;
use std::fmt::Write as _;

use super::flow::{integrate_qbe, FlowKernel, Metric, QbeState, MIN_STEPS};
use super::space::ControlSpaceSpec;
use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::optim::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::propagate::{final_unitary, fmt_sig9, grid_count, ControlProtocol, ControlSample};
use crate::quantum::{c, gate_fidelity, Operator, C64};

#[derive(Clone, Debug)]
pub struct ShootingConfig {
    /// RK4 steps per integration.
    pub steps: usize,
    /// Levenberg–Marquardt iterations per homotopy stage.
    pub max_iterations: usize,
    /// Accepted norm of `U(T) − e^{iα} U_F`.
    pub tolerance: f64,
    /// Penalty weights visited before the exact solve; entries below the
    /// guess's own weight are skipped.
    pub homotopy_schedule: Vec<f64>,
    /// How many consecutive times a failed step may be split.
    pub max_subdivisions: usize,
    /// Sample spacing of the exported protocol (µs).
    pub resample_dt: f64,
    /// Each entry runs one continuation in which a step moving `T` by more
    /// than that fraction is split; the shortest exact solution wins. An
    /// infinite limit lets the path jump between branches, a small one
    /// follows a single branch.
    pub duration_step_limits: Vec<f64>,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            steps: 1000,
            max_iterations: 100,
            tolerance: 1e-9,
            homotopy_schedule: vec![10.0, 100.0, 1000.0],
            max_subdivisions: 8,
            resample_dt: 0.001,
            duration_step_limits: vec![f64::INFINITY, 0.05],
        }
    }
}

/// One accepted shooting step.
#[derive(Clone, Debug, PartialEq)]
pub struct ShootRecord {
    pub iteration: usize,
    pub residual: f64,
    pub duration: f64,
    /// Penalty weight of the stage; infinite for the exact solve.
    pub q: f64,
}

#[derive(Clone, Debug)]
pub struct QbeSolution {
    pub duration: f64,
    pub state: QbeState,
    /// Exported protocol, sampled at about `resample_dt`.
    pub protocol: ControlProtocol,
    /// Fidelity of the exported protocol, propagated exactly.
    pub achieved_fidelity: f64,
    /// Fidelity of the integrated flow itself.
    pub flow_fidelity: f64,
    pub max_constraint_residual: f64,
    pub max_norm_residual: f64,
    pub history: Vec<ShootRecord>,
}

impl QbeSolution {
    /// `iteration,residual,T_us,q` rows, one per accepted shooting step.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,residual,T_us,q\n");
        for r in &self.history {
            let q = if r.q.is_infinite() { "inf".to_string() } else { fmt_sig9(r.q) };
            let _ = writeln!(out, "{},{},{},{}", r.iteration, fmt_sig9(r.residual), fmt_sig9(r.duration), q);
        }
        out
    }
}

/// Unknowns: unit-free P coordinates of `F(0)`, Q coordinates over the unit
/// Q basis, and `T`.
struct Shooter<'a> {
    kernel: FlowKernel,
    spec: &'a ControlSpaceSpec,
    p_unit: Vec<Operator>,
    q_unit: Vec<Operator>,
    target: Operator,
    steps: usize,
}

impl Shooter<'_> {
    fn costate(&self, x: &[f64]) -> Option<Operator> {
        let np = self.p_unit.len();
        let n = x[..np].iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return None;
        }
        let mut f = Operator::zeros(self.spec.dim());
        for (w, b) in x[..np].iter().zip(&self.p_unit) {
            f.add_scaled(self.spec.e * w / n, b);
        }
        for (m, b) in x[np..np + self.q_unit.len()].iter().zip(&self.q_unit) {
            f.add_scaled(*m, b);
        }
        Some(f)
    }

    fn unitary(&self, x: &[f64]) -> Option<Operator> {
        let t = *x.last()?;
        if !(t > 0.0 && t.is_finite()) {
            return None;
        }
        let f = self.costate(x)?;
        Some(Operator::from_matrix(self.kernel.run(f.matrix(), t, self.steps, |_, _, _| {})))
    }

    fn encode(&self, state: &QbeState) -> Vec<f64> {
        let mut x: Vec<f64> = self.p_unit.iter().map(|b| state.hc0.tr_product_re(b)).collect();
        x.extend(state.lambdas.iter().zip(&self.spec.q_basis).map(|(l, b)| l * b.norm()));
        x.push(state.duration);
        x
    }

    fn decode(&self, x: &[f64]) -> Result<QbeState> {
        let f = self.costate(x).ok_or_else(|| Error::InvalidArgument("zero allowed component".into()))?;
        QbeState::from_costate(self.spec, &f, *x.last().expect("nonempty"))
    }
}

impl LeastSquares for Shooter<'_> {
    fn residual(&self, x: &[f64]) -> Option<Vec<f64>> {
        let u = self.unitary(x)?;
        Some(phase_aligned_difference(&u, &self.target))
    }

    fn fd_step(&self, x: &[f64], index: usize) -> f64 {
        if index + 1 == x.len() {
            1e-7 * x[index].abs().max(1e-3)
        } else {
            1e-7 * x[index].abs().max(1.0)
        }
    }
}

/// Real and imaginary parts of `U − e^{iα} V` with `α = arg Tr(V† U)`.
pub fn phase_aligned_difference(u: &Operator, v: &Operator) -> Vec<f64> {
    let z = v.hs_inner(u);
    let phase = if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) };
    let diff = u - &v.scale_c(phase);
    diff.matrix().iter().flat_map(|z| [z.re, z.im]).collect()
}

fn solve_stage(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    x0: &[f64],
    q: f64,
    cfg: &ShootingConfig,
    history: &mut Vec<ShootRecord>,
) -> Option<Vec<f64>> {
    let space = spec.normalized();
    let shooter = Shooter {
        kernel: FlowKernel::new(model, spec, Metric::from_q(q)),
        spec,
        p_unit: space.p,
        q_unit: space.q,
        target: target.clone(),
        steps: cfg.steps,
    };
    let opts =
        LmOptions { max_iterations: cfg.max_iterations, residual_tol: cfg.tolerance * 1e-2, ..LmOptions::default() };
    let rep = levenberg_marquardt(&shooter, x0, &opts)?;
    let offset = history.len();
    for (i, (r, x)) in rep.history.iter().enumerate() {
        history.push(ShootRecord { iteration: offset + i + 1, residual: *r, duration: *x.last()?, q });
    }
    (rep.residual_norm < cfg.tolerance).then_some(rep.x)
}

/// Shooting on `(H_c0 direction, λ_k, T)` so that the brachistochrone flow
/// reaches `target` up to a global phase. The guess (built for
/// `guess_metric`) is continued through the penalty weights of the schedule
/// that are at least its own, then solved with the forbidden directions
/// excluded exactly. A step that fails, or moves `T` by more than the step
/// limit, is split geometrically. One continuation is run per
/// entry of `duration_step_limits` and the shortest solution is returned.
pub fn shoot_qbe(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    guess: &QbeState,
    guess_metric: Metric,
    cfg: &ShootingConfig,
) -> Result<QbeSolution> {
    if target.dim() != spec.dim() || model.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: target.dim() });
    }
    guess.validate(spec)?;
    let d = spec.dim();
    if gate_fidelity(&Operator::identity(d), target)? > 1.0 - 1e-12 {
        return Ok(QbeSolution {
            duration: 0.0,
            state: QbeState { duration: 0.0, ..guess.clone() },
            protocol: ControlProtocol::empty(),
            achieved_fidelity: 1.0,
            flow_fidelity: 1.0,
            max_constraint_residual: 0.0,
            max_norm_residual: 0.0,
            history: Vec::new(),
        });
    }
    let q0 = guess_metric.q();
    let mut stages: Vec<f64> = cfg.homotopy_schedule.iter().copied().filter(|q| *q >= q0).collect();
    if q0.is_finite() && stages.first() != Some(&q0) {
        stages.insert(0, q0);
    }
    stages.push(f64::INFINITY);
    let space = spec.normalized();
    let probe = Shooter {
        kernel: FlowKernel::new(model, spec, Metric::Exact),
        spec,
        p_unit: space.p,
        q_unit: space.q,
        target: target.clone(),
        steps: cfg.steps,
    };
    if cfg.duration_step_limits.is_empty() || cfg.duration_step_limits.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidArgument("duration step limits must be positive and nonempty".into()));
    }
    let mut history = Vec::new();
    let Some(first) = solve_stage(model, target, spec, &probe.encode(guess), stages[0], cfg, &mut history) else {
        let residual = history.last().map_or(f64::INFINITY, |r| r.residual);
        return Err(Error::ShootingDivergence { residual, stage: format!("q = {} (first stage)", stages[0]) });
    };
    let mut best: Option<(Vec<f64>, Vec<ShootRecord>)> = None;
    let mut failure = None;
    for &limit in &cfg.duration_step_limits {
        let mut h = history.clone();
        match continue_path(model, target, spec, &first, stages[0], &stages[1..], limit, cfg, &mut h) {
            Ok(x) => {
                if best.as_ref().is_none_or(|(b, _)| x.last() < b.last()) {
                    best = Some((x, h));
                }
            }
            Err(e) => failure = Some(e),
        }
    }
    let Some((x, history)) = best else {
        return Err(failure.expect("at least one continuation ran"));
    };
    let state = probe.decode(&x)?;
    finalize(model, target, spec, state, history, cfg)
}

#[allow(clippy::too_many_arguments)]
fn continue_path(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    x0: &[f64],
    q0: f64,
    stages: &[f64],
    limit: f64,
    cfg: &ShootingConfig,
    history: &mut Vec<ShootRecord>,
) -> Result<Vec<f64>> {
    let mut x = x0.to_vec();
    let mut current = q0;
    for &goal in stages {
        let mut attempt = goal;
        let mut splits = 0;
        loop {
            let t_prev = *x.last().expect("nonempty");
            let step = solve_stage(model, target, spec, &x, attempt, cfg, history)
                .filter(|x| (x.last().expect("nonempty") - t_prev).abs() <= limit * t_prev);
            match step {
                Some(next) => {
                    x = next;
                    current = attempt;
                    if attempt == goal {
                        break;
                    }
                    attempt = goal;
                    splits = 0;
                }
                None => {
                    splits += 1;
                    if splits > cfg.max_subdivisions {
                        return Err(Error::ShootingDivergence {
                            residual: history.last().map_or(f64::NAN, |r| r.residual),
                            stage: format!("continuation from q = {current} towards q = {goal}"),
                        });
                    }
                    attempt = if attempt.is_infinite() { current * 10.0 } else { (current * attempt).sqrt() };
                }
            }
        }
    }
    Ok(x)
}

fn finalize(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    state: QbeState,
    history: Vec<ShootRecord>,
    cfg: &ShootingConfig,
) -> Result<QbeSolution> {
    let n = grid_count(state.duration, cfg.resample_dt);
    // An even number of RK4 steps per sample puts a grid point at each
    // sample midpoint.
    let per = {
        let s = cfg.steps.max(MIN_STEPS).div_ceil(n).max(2);
        s + s % 2
    };
    let flow = integrate_qbe(model, spec, &state, n * per, Metric::Exact)?;
    let flow_fidelity = gate_fidelity(&flow.u_final, target)?;
    let comp = |h: &Operator, s: &Operator| h.tr_product_re(s) / (2.0 * PI * s.tr_product_re(s));
    let nz = spec.p_basis.iter().any(|p| p.max_abs_diff(&model.sz) < 1e-12);
    let samples: Vec<ControlSample> = (0..n)
        .map(|k| {
            let h = &flow.controls[k * per + per / 2];
            ControlSample {
                nu_x: comp(h, &model.sx),
                nu_y: comp(h, &model.sy),
                nu_z: if nz { comp(h, &model.sz) } else { 0.0 },
            }
        })
        .collect();
    let protocol = ControlProtocol::Sampled { dt: state.duration / n as f64, samples };
    protocol.validate()?;
    let achieved_fidelity = gate_fidelity(&final_unitary(model, &protocol, 1)?, target)?;
    Ok(QbeSolution {
        duration: state.duration,
        max_constraint_residual: flow.constraint_residuals.iter().copied().fold(0.0, f64::max),
        max_norm_residual: flow.norm_residuals.iter().copied().fold(0.0, f64::max),
        state,
        protocol,
        achieved_fidelity,
        flow_fidelity,
        history,
    })
}

/// Brachistochrone initial data from a piecewise-constant protocol that
/// (approximately) maximizes the fidelity at its duration; see
/// [`super::penalty::optimize_penalty`] for how the costate is read off.
pub fn costate_from_unitaries(
    spec: &ControlSpaceSpec,
    target: &Operator,
    u_final: &Operator,
    duration: f64,
) -> Result<QbeState> {
    let z = target.hs_inner(u_final);
    let phase = C64::from_polar(1.0, -z.arg());
    let m = (&target.dagger() * u_final).scale_c(c(0.0, -1.0) * phase).hermitian_part();
    QbeState::from_costate(spec, &m, duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::rotation;
    use crate::single::solve_z_rotation;

    #[test]
    fn identity_target_is_immediate() {
        let model = RotatingFrameModel::two_qubit(-2.16);
        let spec = ControlSpaceSpec::transverse(&model, 2.5).unwrap();
        let guess = QbeState { hc0: model.control(2.5, 0.0, 0.0), lambda0: 1.0, lambdas: vec![0.0; 13], duration: 0.4 };
        let sol = shoot_qbe(&model, &Operator::identity(4), &spec, &guess, Metric::Exact, &ShootingConfig::default())
            .unwrap();
        assert_eq!(sol.duration, 0.0);
    }

    #[test]
    fn single_qubit_z_rotation_from_nearby_guess() {
        let (delta, nu1) = (1.5, 5.0);
        let model = RotatingFrameModel::single_qubit(delta);
        let spec = ControlSpaceSpec::transverse(&model, nu1).unwrap();
        let exact = solve_z_rotation(PI / 2.0, delta, nu1).unwrap();
        // λ for a precession at η: η = δ − λ/2π.
        let lambda = 2.0 * PI * (delta - exact.eta());
        let guess = QbeState {
            hc0: model.control(nu1 * 0.1f64.cos(), nu1 * 0.1f64.sin(), 0.0),
            lambda0: 1.0,
            lambdas: vec![lambda * 1.05],
            duration: exact.duration * 1.03,
        };
        let target = rotation([0.0, 0.0, 1.0], PI / 2.0);
        let sol = shoot_qbe(&model, &target, &spec, &guess, Metric::Exact, &ShootingConfig::default()).unwrap();
        assert!((sol.duration - exact.duration).abs() < 1e-6, "{} vs {}", sol.duration, exact.duration);
        assert!(sol.achieved_fidelity > 0.9999);
        assert!(sol.max_constraint_residual < 1e-6 && sol.max_norm_residual < 1e-6);
    }
}
