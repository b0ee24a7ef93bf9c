use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::flow::{Metric, QbeState};
use super::space::ControlSpaceSpec;
use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::optim::{lbfgs, LbfgsOptions};
use crate::propagate::{ControlProtocol, ControlSample};
use crate::quantum::{c, Eigh, Operator, C64};

/// Settings of the penalty-metric optimization and of the homotopy that
/// follows it.
#[derive(Clone, Debug)]
pub struct PenaltyConfig {
    /// Penalty weight of the forbidden directions during optimization.
    pub q: f64,
    /// Weight of the duration in `J = −F + κT` (per µs).
    pub kappa: f64,
    /// Number of piecewise-constant segments.
    pub segments: usize,
    /// Penalty weights visited by the shooting homotopy.
    pub homotopy_schedule: Vec<f64>,
    /// Number of deterministic multistart seeds.
    pub seeds: usize,
    /// Every seed is started at each of `t_init × factor`.
    pub duration_factors: Vec<f64>,
    pub max_iterations: usize,
    /// How many times κ may be halved when the fidelity stays below 0.999.
    pub max_kappa_halvings: usize,
}

impl PenaltyConfig {
    /// Defaults for drive amplitude `nu1` (MHz): `q = 10`, `κ = 0.01 ν₁`,
    /// 64 segments, schedule {10, 100, 1000}, 8 seeds started at
    /// `t_init × {2/3, 1, 3/2}`.
    pub fn new(nu1: f64) -> Self {
        Self {
            q: 10.0,
            kappa: 0.01 * nu1,
            segments: 64,
            homotopy_schedule: vec![10.0, 100.0, 1000.0],
            seeds: 8,
            duration_factors: vec![2.0 / 3.0, 1.0, 1.5],
            max_iterations: 3000,
            max_kappa_halvings: 6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.q >= 1.0) {
            return bad("penalty weight q must be at least 1");
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("κ must be positive");
        }
        if self.segments == 0 || self.seeds == 0 {
            return bad("segments and seeds must be positive");
        }
        if self.duration_factors.is_empty() || self.duration_factors.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
            return bad("duration factors must be positive");
        }
        let s = &self.homotopy_schedule;
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return bad("homotopy schedule must be strictly increasing");
        }
        if s.last().is_none_or(|q| *q < 1000.0) {
            return bad("homotopy schedule must end at q ≥ 1000");
        }
        Ok(())
    }
}

/// Result of a piecewise-constant optimization.
#[derive(Clone, Debug)]
pub struct PenaltySolution {
    pub duration: f64,
    /// Control Hamiltonian of each segment (rad/µs).
    pub controls: Vec<Operator>,
    pub final_unitary: Operator,
    /// `|Tr(U_F† U(T))| / d`.
    pub fidelity: f64,
    pub objective: f64,
    pub gradient_norm: f64,
    pub kappa: f64,
    pub metric: Metric,
    /// Brachistochrone initial data read off the optimized controls.
    pub guess: QbeState,
}

impl PenaltySolution {
    /// Sampled protocol keeping the electron-spin components of each
    /// segment, rescaled to amplitude `nu1`.
    pub fn protocol(&self, model: &RotatingFrameModel, nu1: f64) -> ControlProtocol {
        let dt = self.duration / self.controls.len() as f64;
        let comp = |h: &Operator, s: &Operator| h.tr_product_re(s) / (2.0 * PI * s.tr_product_re(s));
        let samples = self
            .controls
            .iter()
            .map(|h| {
                let v = [comp(h, &model.sx), comp(h, &model.sy), comp(h, &model.sz)];
                let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                let s = if n > 0.0 { nu1 / n } else { 0.0 };
                ControlSample { nu_x: v[0] * s, nu_y: v[1] * s, nu_z: v[2] * s }
            })
            .collect();
        ControlProtocol::Sampled { dt, samples }
    }
}

/// Piecewise-constant gate-synthesis objective with exact gradients.
///
/// Segment `k` carries coordinates `w_k` over the directions `C_j` (unit
/// P directions, and unit Q directions divided by `√q`); its control is
/// `E Σ w_j C_j / |w_k|`, which has `‖H_c‖_q = E` by construction.
struct Grape {
    h0: Operator,
    target_dag: Operator,
    directions: Vec<Operator>,
    e: f64,
    segments: usize,
    kappa: f64,
    fixed_duration: Option<f64>,
}

struct Forward {
    duration: f64,
    controls: Vec<Operator>,
    hams: Vec<Operator>,
    eigs: Vec<Eigh>,
    steps: Vec<Operator>,
    /// `prefix[k] = U_k ⋯ U_1`, with `prefix[0] = I`.
    prefix: Vec<Operator>,
}

impl Grape {
    fn new(
        model: &RotatingFrameModel,
        target: &Operator,
        spec: &ControlSpaceSpec,
        metric: Metric,
        segments: usize,
        kappa: f64,
        fixed_duration: Option<f64>,
    ) -> Self {
        let space = spec.normalized();
        let mut directions = space.p.clone();
        if let Metric::Penalized(q) = metric {
            directions.extend(space.q.iter().map(|b| b.scale(1.0 / q.sqrt())));
        }
        Self {
            h0: model.h0.clone(),
            target_dag: target.dagger(),
            directions,
            e: spec.e,
            segments,
            kappa,
            fixed_duration,
        }
    }

    fn m(&self) -> usize {
        self.directions.len()
    }

    fn n_params(&self) -> usize {
        self.segments * self.m() + usize::from(self.fixed_duration.is_none())
    }

    fn duration(&self, x: &[f64]) -> f64 {
        self.fixed_duration.unwrap_or_else(|| x[self.segments * self.m()].exp())
    }

    fn forward(&self, x: &[f64]) -> Forward {
        let duration = self.duration(x);
        let dt = duration / self.segments as f64;
        let d = self.h0.dim();
        let m = self.m();
        let mut f = Forward {
            duration,
            controls: Vec::with_capacity(self.segments),
            hams: Vec::with_capacity(self.segments),
            eigs: Vec::with_capacity(self.segments),
            steps: Vec::with_capacity(self.segments),
            prefix: vec![Operator::identity(d)],
        };
        for k in 0..self.segments {
            let w = &x[k * m..(k + 1) * m];
            let n = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let mut hc = Operator::zeros(d);
            for (wj, cj) in w.iter().zip(&self.directions) {
                hc.add_scaled(self.e * wj / n, cj);
            }
            let h = &self.h0 + &hc;
            let eig = Eigh::new_unchecked(&h);
            let u = eig.propagator(dt);
            let next = &u * &f.prefix[k];
            f.controls.push(hc);
            f.hams.push(h);
            f.eigs.push(eig);
            f.steps.push(u);
            f.prefix.push(next);
        }
        f
    }

    fn overlap(&self, fwd: &Forward) -> C64 {
        (&self.target_dag * &fwd.prefix[self.segments]).trace()
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let fwd = self.forward(x);
        let d = self.h0.dim() as f64;
        let z = self.overlap(&fwd);
        let phi = z.norm_sqr() / (d * d);
        let dt = fwd.duration / self.segments as f64;
        let m = self.m();
        let mut grad = vec![0.0; self.n_params()];
        let mut dz_dt = c(0.0, 0.0);
        // suffix = U_F† U_N ⋯ U_{k+1}
        let mut suffix = self.target_dag.clone();
        for k in (0..self.segments).rev() {
            let x_k = &fwd.prefix[k] * &suffix;
            let gamma = adjoint_derivative(&fwd.eigs[k], &x_k, dt);
            let w = &x[k * m..(k + 1) * m];
            let n = w.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            let g: Vec<f64> =
                self.directions.iter().map(|cj| 2.0 * (z.conj() * gamma.tr_product(cj)).re / (d * d)).collect();
            let gw: f64 = g.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() / n;
            for j in 0..m {
                grad[k * m + j] = -(self.e / n) * (g[j] - gw * w[j] / n);
            }
            if self.fixed_duration.is_none() {
                let du = (&fwd.hams[k] * &fwd.steps[k]).scale_c(c(0.0, -1.0));
                dz_dt += (&x_k * &du).trace() / self.segments as f64;
            }
            suffix = &suffix * &fwd.steps[k];
        }
        let mut value = -phi;
        if self.fixed_duration.is_none() {
            let dphi_dt = 2.0 * (z.conj() * dz_dt).re / (d * d);
            value += self.kappa * fwd.duration;
            grad[self.segments * m] = fwd.duration * (self.kappa - dphi_dt);
        }
        (value, grad)
    }
}

/// `Γ` with `Tr(X dU) = Tr(Γ dH)` for `U = exp(−iH dt)`, from the
/// spectral form of the exponential's derivative.
fn adjoint_derivative(eig: &Eigh, x: &Operator, dt: f64) -> Operator {
    let v = &eig.vectors;
    let y = v.adjoint() * x.matrix() * v;
    let n = eig.values.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let ai = c(0.0, -eig.values[i] * dt);
            let aj = c(0.0, -eig.values[j] * dt);
            let f = if (eig.values[i] - eig.values[j]).abs() * dt > 1e-9 {
                (ai.exp() - aj.exp()) / (ai - aj)
            } else {
                let diff = aj - ai;
                ai.exp() * (c(1.0, 0.0) + diff * 0.5 + diff * diff / 6.0)
            };
            // Γ̃_ji = −i dt Y_ji f_ij
            g[(j, i)] = y[(j, i)] * f * c(0.0, -dt);
        }
    }
    Operator::from_matrix(v * g * v.adjoint())
}

/// Brachistochrone initial data consistent with a stationary point of the
/// fidelity: `F(0) = Herm(−i e^{−iα} U_F† U(T))`, `α = arg Tr(U_F† U(T))`,
/// with its sign chosen so that the controls follow `+F(t)`.
fn extract_guess(grape: &Grape, spec: &ControlSpaceSpec, fwd: &Forward) -> Result<QbeState> {
    let z = grape.overlap(fwd);
    let phase = C64::from_polar(1.0, -z.arg());
    let u_t = &fwd.prefix[grape.segments];
    let mut m0 = (&grape.target_dag * u_t).scale_c(c(0.0, -1.0) * phase).hermitian_part();
    let corr: f64 = (0..grape.segments)
        .map(|k| {
            let a = &fwd.prefix[k];
            let f = a * &m0 * a.dagger();
            fwd.controls[k].tr_product_re(&f)
        })
        .sum();
    if corr < 0.0 {
        m0 = -m0;
    }
    QbeState::from_costate(spec, &m0, fwd.duration)
}

fn seed_point(grape: &Grape, seed: usize, seeds: usize, t_init: f64, p_dim: usize) -> Vec<f64> {
    let m = grape.m();
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let seed = seed % seeds;
    let noise = Normal::new(0.0, 0.2).expect("valid normal");
    let phase = 2.0 * PI * seed as f64 / seeds as f64;
    let mut x = Vec::with_capacity(grape.n_params());
    for _ in 0..grape.segments {
        for j in 0..m {
            let base = match (j, p_dim) {
                (0, 1) => 1.0,
                (0, _) => phase.cos(),
                (1, _) => phase.sin(),
                _ => 0.0,
            };
            x.push(base + noise.sample(&mut rng));
        }
    }
    if grape.fixed_duration.is_none() {
        x.push(t_init.ln());
    }
    x
}

struct Run {
    x: Vec<f64>,
    value: f64,
    gradient_norm: f64,
    duration: f64,
}

fn run_multistart(grape: &Grape, seeds: usize, starts: &[f64], p_dim: usize, max_iterations: usize) -> Run {
    let opts = LbfgsOptions { max_iterations, ..LbfgsOptions::default() };
    let runs: Vec<Run> = (0..seeds * starts.len())
        .into_par_iter()
        .map(|s| {
            let x0 = seed_point(grape, s, seeds, starts[s / seeds], p_dim);
            let rep = lbfgs(|x| grape.eval(x), &x0, &opts);
            let duration = grape.duration(&rep.x);
            Run { x: rep.x, value: rep.value, gradient_norm: rep.gradient_norm, duration }
        })
        .collect();
    runs.into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.duration.total_cmp(&b.duration)))
        .expect("at least one seed")
}

fn finish(grape: &Grape, spec: &ControlSpaceSpec, run: &Run, metric: Metric) -> Result<PenaltySolution> {
    let fwd = grape.forward(&run.x);
    let d = grape.h0.dim() as f64;
    let fidelity = grape.overlap(&fwd).norm() / d;
    let guess = extract_guess(grape, spec, &fwd)?;
    Ok(PenaltySolution {
        duration: fwd.duration,
        final_unitary: fwd.prefix[grape.segments].clone(),
        controls: fwd.controls,
        fidelity,
        objective: run.value,
        gradient_norm: run.gradient_norm,
        kappa: grape.kappa,
        metric,
        guess,
    })
}

fn check_inputs(model: &RotatingFrameModel, target: &Operator, spec: &ControlSpaceSpec) -> Result<()> {
    if target.dim() != model.dim() || spec.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: target.dim() });
    }
    if !target.is_unitary(1e-9) {
        return Err(Error::InvalidArgument("target is not unitary".into()));
    }
    Ok(())
}

/// Minimizes `J = −|Tr(U_F† U(T))|²/d² + κT` over piecewise-constant
/// controls with `‖H_c‖_q = E` and over `T`, from `cfg.seeds` deterministic
/// control seeds at each initial duration. κ is halved while the best
/// fidelity stays below 0.999.
pub fn optimize_penalty(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    cfg: &PenaltyConfig,
    t_init: f64,
) -> Result<PenaltySolution> {
    cfg.validate()?;
    check_inputs(model, target, spec)?;
    if !(t_init > 0.0 && t_init.is_finite()) {
        return Err(Error::InvalidArgument(format!("initial duration must be positive, got {t_init}")));
    }
    let metric = Metric::Penalized(cfg.q);
    let mut kappa = cfg.kappa;
    let mut grape = Grape::new(model, target, spec, metric, cfg.segments, kappa, None);
    let starts: Vec<f64> = cfg.duration_factors.iter().map(|f| f * t_init).collect();
    let mut best = run_multistart(&grape, cfg.seeds, &starts, spec.p_basis.len(), cfg.max_iterations);
    let mut sol = finish(&grape, spec, &best, metric)?;
    let opts = LbfgsOptions { max_iterations: cfg.max_iterations, ..LbfgsOptions::default() };
    for _ in 0..cfg.max_kappa_halvings {
        if sol.fidelity >= 0.999 {
            break;
        }
        kappa *= 0.5;
        grape.kappa = kappa;
        let rep = lbfgs(|x| grape.eval(x), &best.x, &opts);
        let duration = grape.duration(&rep.x);
        best = Run { x: rep.x, value: rep.value, gradient_norm: rep.gradient_norm, duration };
        sol = finish(&grape, spec, &best, metric)?;
    }
    if !sol.objective.is_finite() {
        return Err(Error::NonConvergence {
            iterations: cfg.max_iterations,
            best_objective: sol.objective,
            gradient_norm: sol.gradient_norm,
        });
    }
    Ok(sol)
}

/// Maximizes the gate fidelity at fixed duration with controls restricted
/// to span(P) (no penalty directions), from `seeds` deterministic starts.
pub fn optimize_fixed_time(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    duration: f64,
    segments: usize,
    seeds: usize,
    max_iterations: usize,
) -> Result<PenaltySolution> {
    check_inputs(model, target, spec)?;
    if !(duration > 0.0) || segments == 0 || seeds == 0 {
        return Err(Error::InvalidArgument("duration, segments and seeds must be positive".into()));
    }
    let grape = Grape::new(model, target, spec, Metric::Exact, segments, 0.0, Some(duration));
    let best = run_multistart(&grape, seeds, &[duration], spec.p_basis.len(), max_iterations);
    finish(&grape, spec, &best, Metric::Exact)
}

/// Fixed-duration fidelity maximization in span(P) started from given
/// piecewise-constant controls (one Hermitian operator per segment; only
/// their P components are used).
pub fn refine_fixed_time(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    duration: f64,
    initial: &[Operator],
    max_iterations: usize,
) -> Result<PenaltySolution> {
    check_inputs(model, target, spec)?;
    if !(duration > 0.0) || initial.is_empty() {
        return Err(Error::InvalidArgument("duration and initial controls must be nonempty".into()));
    }
    let grape = Grape::new(model, target, spec, Metric::Exact, initial.len(), 0.0, Some(duration));
    let mut x0 = Vec::with_capacity(grape.n_params());
    for h in initial {
        h.check_dim(&grape.h0)?;
        let w: Vec<f64> = grape.directions.iter().map(|c| h.tr_product_re(c)).collect();
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidArgument("initial control has no component in span(P)".into()));
        }
        x0.extend(w);
    }
    let opts = LbfgsOptions { max_iterations, ..LbfgsOptions::default() };
    let rep = lbfgs(|x| grape.eval(x), &x0, &opts);
    let run = Run { duration, x: rep.x, value: rep.value, gradient_norm: rep.gradient_norm };
    finish(&grape, spec, &run, Metric::Exact)
}
