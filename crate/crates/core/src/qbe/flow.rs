use nalgebra::DMatrix;

use super::space::{ControlSpaceSpec, NormalizedSpace};
use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::quantum::{c, Operator, C64};

/// Minimum number of RK4 steps accepted by [`integrate_qbe`].
pub const MIN_STEPS: usize = 100;

/// How the costate is mapped to a control Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    /// `H_c = E P(F)/‖P(F)‖`: forbidden directions are excluded exactly.
    Exact,
    /// `H_c = E (P(F) + Q(F)/q)/‖·‖_q` with `‖X‖_q² = ‖PX‖² + q‖QX‖²`.
    Penalized(f64),
}

impl Metric {
    pub fn q(&self) -> f64 {
        match self {
            Metric::Exact => f64::INFINITY,
            Metric::Penalized(q) => *q,
        }
    }

    pub fn from_q(q: f64) -> Self {
        if q.is_infinite() {
            Metric::Exact
        } else {
            Metric::Penalized(q)
        }
    }
}

/// Initial data of a brachistochrone trajectory.
///
/// The costate is `F(0) = λ₀ H_c0 + Σ λ_k B_k`. Because the flow is
/// invariant under rescaling `F`, `λ₀` is fixed to 1 and `H_c0 ∈ span(P)`
/// carries the norm `E`. Under a penalized metric the `λ_k` play the role of
/// `qλ_k`, the unpenalized multipliers.
#[derive(Clone, Debug, PartialEq)]
pub struct QbeState {
    pub hc0: Operator,
    pub lambda0: f64,
    pub lambdas: Vec<f64>,
    /// Duration (µs).
    pub duration: f64,
}

impl QbeState {
    pub fn costate(&self, spec: &ControlSpaceSpec) -> Operator {
        let mut f = self.hc0.scale(self.lambda0);
        for (l, b) in self.lambdas.iter().zip(&spec.q_basis) {
            f.add_scaled(*l, b);
        }
        f
    }

    /// Builds the state whose costate is a positive multiple of `f0`.
    pub fn from_costate(spec: &ControlSpaceSpec, f0: &Operator, duration: f64) -> Result<Self> {
        let p = spec.project_p(f0);
        let n = p.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("costate has no allowed component".into()));
        }
        let s = spec.e / n;
        Ok(Self { hc0: p.scale(s), lambda0: 1.0, lambdas: spec.q_coords(f0).iter().map(|x| x * s).collect(), duration })
    }

    pub fn validate(&self, spec: &ControlSpaceSpec) -> Result<()> {
        if self.hc0.dim() != spec.dim() {
            return Err(Error::DimensionMismatch { expected: spec.dim(), found: self.hc0.dim() });
        }
        if self.lambdas.len() != spec.q_basis.len() {
            return Err(Error::DimensionMismatch { expected: spec.q_basis.len(), found: self.lambdas.len() });
        }
        if !self.hc0.is_hermitian(1e-12 * spec.e.max(1.0)) {
            return Err(Error::NotHermitian { deviation: self.hc0.max_abs_diff(&self.hc0.dagger()) });
        }
        if spec.constraint_residual(&self.hc0) > 1e-9 || spec.norm_residual(&self.hc0) > 1e-9 {
            return Err(Error::InvalidArgument("H_c0 must lie in span(P) with norm E".into()));
        }
        if !(self.lambda0 > 0.0) || self.lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidArgument("multipliers must be finite with λ₀ > 0".into()));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad duration {}", self.duration)));
        }
        Ok(())
    }
}

/// Output of [`integrate_qbe`], sampled at every RK4 grid point.
#[derive(Clone, Debug)]
pub struct QbeFlow {
    pub times: Vec<f64>,
    pub u_final: Operator,
    pub controls: Vec<Operator>,
    /// `max_k |Tr(H_c B_k)| / (E‖B_k‖)`.
    pub constraint_residuals: Vec<f64>,
    /// `|Tr(H_c²) − E²| / E²`.
    pub norm_residuals: Vec<f64>,
    /// `Tr(F²)`.
    pub f_norms: Vec<f64>,
}

/// Precomputed pieces of the flow, shared by repeated integrations.
pub(crate) struct FlowKernel {
    h0: DMatrix<C64>,
    space: NormalizedSpace,
    e: f64,
    metric: Metric,
}

fn tr_re(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let d = a.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            s += x.re * y.re - x.im * y.im;
        }
    }
    s
}

impl FlowKernel {
    pub fn new(model: &RotatingFrameModel, spec: &ControlSpaceSpec, metric: Metric) -> Self {
        Self { h0: model.h0.matrix().clone(), space: spec.normalized(), e: spec.e, metric }
    }

    pub fn control(&self, f: &DMatrix<C64>) -> DMatrix<C64> {
        let d = f.nrows();
        let mut out = DMatrix::zeros(d, d);
        let mut norm2 = 0.0;
        for b in &self.space.p {
            let w = tr_re(f, b.matrix());
            norm2 += w * w;
            out += b.matrix() * c(w, 0.0);
        }
        if let Metric::Penalized(q) = self.metric {
            for b in &self.space.q {
                let w = tr_re(f, b.matrix()) / q;
                norm2 += q * w * w;
                out += b.matrix() * c(w, 0.0);
            }
        }
        if norm2 > 0.0 {
            out *= c(self.e / norm2.sqrt(), 0.0);
        }
        out
    }

    fn rhs(&self, u: &DMatrix<C64>, f: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>, DMatrix<C64>) {
        let hc = self.control(f);
        let h = &self.h0 + &hc;
        let mi = c(0.0, -1.0);
        let du = (&h * u) * mi;
        let df = (&h * f - f * &h) * mi;
        (du, df, hc)
    }

    /// RK4 integration of `U̇ = −iHU`, `Ḟ = −i[H, F]`; `visit` sees
    /// `(t, H_c, F)` at every grid point.
    pub fn run(
        &self,
        f0: &DMatrix<C64>,
        duration: f64,
        steps: usize,
        mut visit: impl FnMut(f64, &DMatrix<C64>, &DMatrix<C64>),
    ) -> DMatrix<C64> {
        let d = f0.nrows();
        let mut u = DMatrix::<C64>::identity(d, d);
        let mut f = f0.clone();
        let dt = duration / steps as f64;
        let half = c(0.5 * dt, 0.0);
        let full = c(dt, 0.0);
        let sixth = c(dt / 6.0, 0.0);
        for k in 0..steps {
            let (k1u, k1f, hc) = self.rhs(&u, &f);
            visit(k as f64 * dt, &hc, &f);
            let (k2u, k2f, _) = self.rhs(&(&u + &k1u * half), &(&f + &k1f * half));
            let (k3u, k3f, _) = self.rhs(&(&u + &k2u * half), &(&f + &k2f * half));
            let (k4u, k4f, _) = self.rhs(&(&u + &k3u * full), &(&f + &k3f * full));
            u += (k1u + (k2u + k3u) * c(2.0, 0.0) + k4u) * sixth;
            f += (k1f + (k2f + k3f) * c(2.0, 0.0) + k4f) * sixth;
        }
        let hc = self.control(&f);
        visit(duration, &hc, &f);
        u
    }
}

/// Co-integrates the propagator and the costate along the brachistochrone
/// flow with `H(t) = H₀ + H_c(F(t))`, using `steps` RK4 steps.
pub fn integrate_qbe(
    model: &RotatingFrameModel,
    spec: &ControlSpaceSpec,
    state: &QbeState,
    steps: usize,
    metric: Metric,
) -> Result<QbeFlow> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidArgument(format!("at least {MIN_STEPS} steps are required, got {steps}")));
    }
    if model.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: model.dim() });
    }
    state.validate(spec)?;
    let kernel = FlowKernel::new(model, spec, metric);
    let f0 = state.costate(spec);
    let mut flow = QbeFlow {
        times: Vec::with_capacity(steps + 1),
        u_final: Operator::identity(spec.dim()),
        controls: Vec::with_capacity(steps + 1),
        constraint_residuals: Vec::with_capacity(steps + 1),
        norm_residuals: Vec::with_capacity(steps + 1),
        f_norms: Vec::with_capacity(steps + 1),
    };
    let u = kernel.run(f0.matrix(), state.duration, steps, |t, hc, f| {
        let hc = Operator::from_matrix(hc.clone());
        flow.times.push(t);
        flow.constraint_residuals.push(spec.constraint_residual(&hc));
        flow.norm_residuals.push(spec.norm_residual(&hc));
        flow.f_norms.push(tr_re(f, f));
        flow.controls.push(hc);
    });
    flow.u_final = Operator::from_matrix(u);
    Ok(flow)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{expm_skew, gate_fidelity};
    use std::f64::consts::PI;

    #[test]
    fn rejects_too_few_steps() {
        let model = RotatingFrameModel::single_qubit(1.0);
        let spec = ControlSpaceSpec::transverse(&model, 5.0).unwrap();
        let state = QbeState { hc0: model.control(5.0, 0.0, 0.0), lambda0: 1.0, lambdas: vec![0.0], duration: 0.1 };
        assert!(integrate_qbe(&model, &spec, &state, 99, Metric::Exact).is_err());
        assert!(integrate_qbe(&model, &spec, &state, 100, Metric::Exact).is_ok());
    }

    #[test]
    fn constant_control_without_drift() {
        let model = RotatingFrameModel::single_qubit(0.0);
        let spec = ControlSpaceSpec::transverse(&model, 5.0).unwrap();
        let hc0 = model.control(3.0, 4.0, 0.0);
        let state = QbeState { hc0: hc0.clone(), lambda0: 1.0, lambdas: vec![0.0], duration: 0.13 };
        let flow = integrate_qbe(&model, &spec, &state, 400, Metric::Exact).unwrap();
        let exact = expm_skew(&hc0, 0.13).unwrap();
        assert!(flow.u_final.max_abs_diff(&exact) < 1e-10);
    }

    #[test]
    fn single_qubit_phase_is_linear() {
        let (delta, nu1, lambda) = (1.5, 5.0, 7.0);
        let model = RotatingFrameModel::single_qubit(delta);
        let spec = ControlSpaceSpec::transverse(&model, nu1).unwrap();
        let phi0: f64 = 0.4;
        let hc0 = model.control(nu1 * phi0.cos(), nu1 * phi0.sin(), 0.0);
        let state = QbeState { hc0, lambda0: 1.0, lambdas: vec![lambda], duration: 0.2 };
        let flow = integrate_qbe(&model, &spec, &state, 2000, Metric::Exact).unwrap();
        // Ḟ = −i(2πδ − λ)[Sz, H_c]: the control precesses at η = δ − λ/2π.
        let eta = delta - lambda / (2.0 * PI);
        for (t, hc) in flow.times.iter().zip(&flow.controls) {
            let phase = hc.tr_product_re(&model.sy).atan2(hc.tr_product_re(&model.sx));
            let expected = 2.0 * PI * eta * t + phi0;
            let diff = (phase - expected + PI).rem_euclid(2.0 * PI) - PI;
            assert!(diff.abs() < 1e-6, "t={t} diff={diff}");
        }
    }

    #[test]
    fn costate_norm_is_conserved() {
        let model = RotatingFrameModel::two_qubit(-2.16);
        let spec = ControlSpaceSpec::transverse(&model, 2.5).unwrap();
        let lambdas: Vec<f64> = (0..13).map(|k| 3.0 * ((k as f64) * 1.7).sin()).collect();
        let hc0 = model.control(1.5, 2.0, 0.0);
        let state = QbeState { hc0: hc0.scale(spec.e / hc0.norm()), lambda0: 1.0, lambdas, duration: 0.45 };
        for metric in [Metric::Exact, Metric::Penalized(10.0)] {
            let flow = integrate_qbe(&model, &spec, &state, 1000, metric).unwrap();
            let f0 = flow.f_norms[0];
            assert!(flow.f_norms.iter().all(|n| ((n - f0) / f0).abs() < 1e-9));
            assert!(flow.u_final.is_unitary(1e-9));
        }
    }

    #[test]
    fn exact_metric_keeps_constraints() {
        let model = RotatingFrameModel::two_qubit(-2.16);
        let spec = ControlSpaceSpec::transverse(&model, 2.5).unwrap();
        let f0 = &model.control(2.5, 0.0, 0.0) + &spec.q_basis[5].scale(40.0);
        let state = QbeState::from_costate(&spec, &f0, 0.3).unwrap();
        let flow = integrate_qbe(&model, &spec, &state, 500, Metric::Exact).unwrap();
        assert!(flow.constraint_residuals.iter().all(|r| *r < 1e-12));
        assert!(flow.norm_residuals.iter().all(|r| *r < 1e-12));
        let g = gate_fidelity(&flow.u_final, &flow.u_final).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }
}
