//! Small numerical optimizers: Levenberg–Marquardt, L-BFGS and bisection.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// A nonlinear least-squares problem `min |r(x)|²`.
pub trait LeastSquares: Sync {
    /// Residual vector, or `None` if `x` is outside the domain.
    fn residual(&self, x: &[f64]) -> Option<Vec<f64>>;

    fn fd_step(&self, x: &[f64], index: usize) -> f64 {
        1e-7 * x[index].abs().max(1.0)
    }

    /// Forward-difference Jacobian, columns evaluated in parallel.
    fn jacobian(&self, x: &[f64], r: &[f64]) -> Option<DMatrix<f64>> {
        let cols: Vec<Option<Vec<f64>>> = (0..x.len())
            .into_par_iter()
            .map(|j| {
                let h = self.fd_step(x, j);
                let mut xp = x.to_vec();
                xp[j] += h;
                self.residual(&xp).map(|rp| rp.iter().zip(r).map(|(a, b)| (a - b) / h).collect())
            })
            .collect();
        let mut jac = DMatrix::zeros(r.len(), x.len());
        for (j, col) in cols.into_iter().enumerate() {
            let col = col?;
            for (i, v) in col.into_iter().enumerate() {
                jac[(i, j)] = v;
            }
        }
        Some(jac)
    }
}

impl<F> LeastSquares for F
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    fn residual(&self, x: &[f64]) -> Option<Vec<f64>> {
        self(x)
    }
}

/// Wraps a cheap residual function so its Jacobian is built sequentially.
pub struct Serial<F>(pub F);

impl<F> LeastSquares for Serial<F>
where
    F: Fn(&[f64]) -> Option<Vec<f64>> + Sync,
{
    fn residual(&self, x: &[f64]) -> Option<Vec<f64>> {
        (self.0)(x)
    }

    fn jacobian(&self, x: &[f64], r: &[f64]) -> Option<DMatrix<f64>> {
        let mut jac = DMatrix::zeros(r.len(), x.len());
        let mut xp = x.to_vec();
        for j in 0..x.len() {
            let h = self.fd_step(x, j);
            xp[j] = x[j] + h;
            let rp = (self.0)(&xp)?;
            xp[j] = x[j];
            for (i, (a, b)) in rp.iter().zip(r).enumerate() {
                jac[(i, j)] = (a - b) / h;
            }
        }
        Some(jac)
    }
}

#[derive(Clone, Debug)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once the residual norm falls below this.
    pub residual_tol: f64,
    /// Stop when a step changes `x` by less than this (relative).
    pub step_tol: f64,
    pub initial_damping: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self { max_iterations: 200, residual_tol: 1e-14, step_tol: 1e-15, initial_damping: 1e-3 }
    }
}

#[derive(Clone, Debug)]
pub struct LmReport {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Residual norm and parameters after each accepted step.
    pub history: Vec<(f64, Vec<f64>)>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt with Marquardt diagonal scaling. Returns `None` if
/// the residual cannot be evaluated at `x0`.
pub fn levenberg_marquardt<P: LeastSquares + ?Sized>(problem: &P, x0: &[f64], opts: &LmOptions) -> Option<LmReport> {
    let mut x = x0.to_vec();
    let mut r = problem.residual(&x)?;
    let mut cost = norm(&r);
    let mut lambda = opts.initial_damping;
    let n = x.len();
    let mut iterations = 0;
    let mut history = Vec::new();
    while iterations < opts.max_iterations && cost > opts.residual_tol {
        iterations += 1;
        let Some(jac) = problem.jacobian(&x, &r) else { break };
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);
        let diag_max = (0..n).map(|i| jtj[(i, i)]).fold(0.0, f64::max).max(1e-300);
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * diag_max);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&jtr));
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            match problem.residual(&trial) {
                Some(rt) if norm(&rt) < cost => {
                    let rel = step.norm() / (norm(&x) + 1e-300);
                    x = trial;
                    r = rt;
                    cost = norm(&r);
                    lambda = (lambda / 3.0).max(1e-15);
                    accepted = true;
                    history.push((cost, x.clone()));
                    if rel < opts.step_tol {
                        return Some(LmReport { x, residual_norm: cost, iterations, history });
                    }
                    break;
                }
                _ => lambda *= 4.0,
            }
            if lambda > 1e16 {
                break;
            }
        }
        if !accepted {
            break;
        }
    }
    Some(LmReport { x, residual_norm: cost, iterations, history })
}

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub max_iterations: usize,
    pub memory: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub gradient_tol: f64,
    /// Stop when the objective improves by less than this (relative) over
    /// ten iterations.
    pub stall_tol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, memory: 12, gradient_tol: 1e-10, stall_tol: 1e-13 }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsReport {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Limited-memory BFGS with a backtracking Armijo line search. `f` returns
/// the objective and its gradient.
pub fn lbfgs<F>(mut f: F, x0: &[f64], opts: &LbfgsOptions) -> LbfgsReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut history = vec![fx];
    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        if inf_norm(&g) < opts.gradient_tol {
            converged = true;
            break;
        }
        iterations += 1;
        // Two-loop recursion.
        let mut q = g.clone();
        let k = s_hist.len();
        let mut alphas = vec![0.0; k];
        for i in (0..k).rev() {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            alphas[i] = rho * dot(&s_hist[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_hist[i]) {
                *qj -= alphas[i] * yj;
            }
        }
        let gamma = if k > 0 {
            dot(&s_hist[k - 1], &y_hist[k - 1]) / dot(&y_hist[k - 1], &y_hist[k - 1])
        } else {
            1.0 / inf_norm(&g).max(1.0)
        };
        for qj in q.iter_mut() {
            *qj *= gamma;
        }
        for i in 0..k {
            let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
            let beta = rho * dot(&y_hist[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_hist[i]) {
                *qj += (alphas[i] - beta) * sj;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&dir, &g);
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v / inf_norm(&g).max(1.0)).collect();
            slope = dot(&dir, &g);
        }
        let mut step = 1.0;
        let mut next = None;
        for _ in 0..50 {
            let xt: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let (ft, gt) = f(&xt);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope {
                next = Some((xt, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = next else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        if dot(&s, &y) > 1e-14 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > opts.memory {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        x = xn;
        fx = fnew;
        g = gn;
        history.push(fx);
        if history.len() > 10 {
            let old = history[history.len() - 11];
            if (old - fx).abs() <= opts.stall_tol * fx.abs().max(1.0) {
                converged = true;
                break;
            }
        }
    }
    let gradient_norm = inf_norm(&g);
    LbfgsReport { x, value: fx, gradient_norm, iterations, converged }
}

/// Bisection for a sign change of `f` on `[a, b]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lm_rosenbrock_residuals() {
        let f = |x: &[f64]| Some(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]);
        let rep = levenberg_marquardt(&f, &[-1.2, 1.0], &LmOptions::default()).unwrap();
        assert!((rep.x[0] - 1.0).abs() < 1e-9 && (rep.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lm_rank_deficient() {
        // x[2] does not enter the residual.
        let f = |x: &[f64]| Some(vec![x[0] - 2.0, x[0] + x[1] - 1.0]);
        let rep = levenberg_marquardt(&f, &[0.0, 0.0, 5.0], &LmOptions::default()).unwrap();
        assert!(rep.residual_norm < 1e-10);
        assert_eq!(rep.x[2], 5.0);
    }

    #[test]
    fn lbfgs_quadratic() {
        let f = |x: &[f64]| {
            let v = (x[0] - 3.0).powi(2) + 10.0 * (x[1] + 1.0).powi(2);
            (v, vec![2.0 * (x[0] - 3.0), 20.0 * (x[1] + 1.0)])
        };
        let rep = lbfgs(f, &[0.0, 0.0], &LbfgsOptions::default());
        assert!(rep.converged);
        assert!((rep.x[0] - 3.0).abs() < 1e-8 && (rep.x[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14);
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }
}
