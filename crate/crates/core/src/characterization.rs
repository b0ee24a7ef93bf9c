//! Simulated process tomography, average gate fidelity and Monte Carlo
//! fidelity under quasi-static noise.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::propagate::{final_unitary, fmt_sig9, write_atomic, ControlProtocol, DEFAULT_SUBSTEPS};
use crate::quantum::{c, paulis, Eigh, Ket, Operator, C64};

/// A linear map on density matrices.
pub trait Channel {
    fn dim(&self) -> usize;
    fn apply(&self, rho: &Operator) -> Operator;
}

/// A unitary gate or a convex mixture of unitaries (for instance a
/// noise-averaged gate).
#[derive(Clone, Debug)]
pub enum Process {
    Unitary(Operator),
    Mixture(Vec<(f64, Operator)>),
}

impl Process {
    /// Mixture with weights normalized to one.
    pub fn mixture(terms: Vec<(f64, Operator)>) -> Result<Self> {
        let total: f64 = terms.iter().map(|(w, _)| w).sum();
        if terms.is_empty() || terms.iter().any(|(w, _)| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative with positive sum".into()));
        }
        let d = terms[0].1.dim();
        for (_, u) in &terms {
            if u.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: u.dim() });
            }
        }
        Ok(Self::Mixture(terms.into_iter().map(|(w, u)| (w / total, u)).collect()))
    }

    /// `ρ ↦ Σ_{P ∈ Paulis} P ρ P / d²` on one qubit per factor.
    pub fn depolarizing(dim: usize) -> Result<Self> {
        let basis = pauli_basis(dim)?;
        let w = 1.0 / basis.len() as f64;
        Ok(Self::Mixture(basis.into_iter().map(|p| (w, p)).collect()))
    }
}

impl Channel for Process {
    fn dim(&self) -> usize {
        match self {
            Self::Unitary(u) => u.dim(),
            Self::Mixture(t) => t[0].1.dim(),
        }
    }

    fn apply(&self, rho: &Operator) -> Operator {
        match self {
            Self::Unitary(u) => u * rho * u.dagger(),
            Self::Mixture(terms) => {
                let mut out = Operator::zeros(rho.dim());
                for (w, u) in terms {
                    out.add_scaled(*w, &(u * rho * u.dagger()));
                }
                out
            }
        }
    }
}

/// Pauli products `σ_i ⊗ σ_j` (first factor slowest), for `d = 2` or `4`.
pub fn pauli_basis(dim: usize) -> Result<Vec<Operator>> {
    let p = paulis();
    match dim {
        2 => Ok(p.to_vec()),
        4 => Ok(p.iter().flat_map(|a| p.iter().map(move |b| a.kron(b))).collect()),
        _ => Err(Error::InvalidArgument(format!("process tomography supports d = 2 or 4, got {dim}"))),
    }
}

/// Labels `I, X, Y, Z` or `II, IX, …, ZZ` in basis order.
pub fn pauli_labels(dim: usize) -> Result<Vec<String>> {
    const L: [&str; 4] = ["I", "X", "Y", "Z"];
    match dim {
        2 => Ok(L.iter().map(|s| s.to_string()).collect()),
        4 => Ok(L.iter().flat_map(|a| L.iter().map(move |b| format!("{a}{b}"))).collect()),
        _ => Err(Error::InvalidArgument(format!("process tomography supports d = 2 or 4, got {dim}"))),
    }
}

/// Tomography inputs: `|0⟩, |1⟩, |+⟩, |+i⟩` on one qubit and their pairwise
/// tensor products on two.
pub fn tomography_inputs(dim: usize) -> Result<Vec<Operator>> {
    let s = 0.5f64.sqrt();
    let kets =
        [Ket::basis(2, 0), Ket::basis(2, 1), Ket::new(&[c(s, 0.0), c(s, 0.0)])?, Ket::new(&[c(s, 0.0), c(0.0, s)])?];
    match dim {
        2 => Ok(kets.iter().map(Ket::projector).collect()),
        4 => Ok(kets.iter().flat_map(|a| kets.iter().map(move |b| a.kron(b).projector())).collect()),
        _ => Err(Error::InvalidArgument(format!("process tomography supports d = 2 or 4, got {dim}"))),
    }
}

/// χ matrix in the Pauli product basis: `E(ρ) = Σ χ_mn A_m ρ A_n†`.
#[derive(Clone, Debug)]
pub struct ProcessMatrix {
    pub dim: usize,
    pub chi: DMatrix<C64>,
}

impl ProcessMatrix {
    pub fn labels(&self) -> Vec<String> {
        pauli_labels(self.dim).expect("dimension checked at construction")
    }

    pub fn hermiticity_residual(&self) -> f64 {
        (&self.chi - self.chi.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |Σ χ_mn A_n† A_m − I|`.
    pub fn trace_preservation_residual(&self) -> f64 {
        let basis = pauli_basis(self.dim).expect("dimension checked at construction");
        let mut s = Operator::zeros(self.dim);
        for (m, am) in basis.iter().enumerate() {
            for (n, an) in basis.iter().enumerate() {
                let term = (an.dagger() * am).scale_c(self.chi[(m, n)]);
                s = s + term;
            }
        }
        s.max_abs_diff(&Operator::identity(self.dim))
    }

    /// Eigenvalues of χ, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = Operator::from_matrix((&self.chi + self.chi.adjoint()) * c(0.5, 0.0));
        let mut v = Eigh::new(&h).expect("Hermitian part").values;
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().iter().filter(|v| **v > tol).count()
    }

    /// Real and imaginary parts as CSV: a header of basis labels, then one
    /// row per basis label.
    pub fn to_csv(&self) -> (String, String) {
        let labels = self.labels();
        let table = |f: fn(&C64) -> f64| {
            let mut out = String::from("label");
            for l in &labels {
                out.push(',');
                out.push_str(l);
            }
            out.push('\n');
            for (m, l) in labels.iter().enumerate() {
                out.push_str(l);
                for n in 0..labels.len() {
                    let _ = write!(out, ",{}", fmt_sig9(f(&self.chi[(m, n)])));
                }
                out.push('\n');
            }
            out
        };
        (table(|z| z.re), table(|z| z.im))
    }

    pub fn write_csv(&self, real_path: impl AsRef<Path>, imag_path: impl AsRef<Path>) -> Result<()> {
        let (re, im) = self.to_csv();
        write_atomic(real_path.as_ref(), re.as_bytes())?;
        write_atomic(imag_path.as_ref(), im.as_bytes())
    }
}

impl Channel for ProcessMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, rho: &Operator) -> Operator {
        let basis = pauli_basis(self.dim).expect("dimension checked at construction");
        let mut out = Operator::zeros(self.dim);
        for (m, am) in basis.iter().enumerate() {
            let left = am * rho;
            for (n, an) in basis.iter().enumerate() {
                if self.chi[(m, n)] != c(0.0, 0.0) {
                    out = out + (&left * an.dagger()).scale_c(self.chi[(m, n)]);
                }
            }
        }
        out
    }
}

fn vectorize(a: &Operator) -> DVector<C64> {
    DVector::from_iterator(a.dim() * a.dim(), a.matrix().iter().copied())
}

/// Reconstructs χ from the images of the `d²` tomography inputs by linear
/// inversion.
pub fn simulate_qpt(process: &dyn Channel, dim: usize) -> Result<ProcessMatrix> {
    if process.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: process.dim() });
    }
    let inputs = tomography_inputs(dim)?;
    let outputs: Vec<Operator> = inputs.iter().map(|r| process.apply(r)).collect();
    let d2 = dim * dim;
    let mut m = DMatrix::<C64>::zeros(d2, d2);
    for (j, r) in inputs.iter().enumerate() {
        m.set_column(j, &vectorize(r));
    }
    let lu = m.lu();
    // Choi matrix J = Σ_ab |a⟩⟨b| ⊗ E(|a⟩⟨b|), from E on the matrix units.
    let mut choi = DMatrix::<C64>::zeros(d2, d2);
    for a in 0..dim {
        for b in 0..dim {
            let mut unit = Operator::zeros(dim);
            unit[(a, b)] = c(1.0, 0.0);
            let coeffs = lu.solve(&vectorize(&unit)).expect("tomography inputs span the operator space");
            let mut image = Operator::zeros(dim);
            for (cj, out) in coeffs.iter().zip(&outputs) {
                image = image + out.scale_c(*cj);
            }
            for i in 0..dim {
                for k in 0..dim {
                    choi[(a * dim + i, b * dim + k)] = image[(i, k)];
                }
            }
        }
    }
    // |A⟩⟩ = Σ_a |a⟩ ⊗ A|a⟩; Pauli products satisfy ⟨⟨A_m|A_n⟩⟩ = d δ_mn.
    let basis = pauli_basis(dim)?;
    let kets: Vec<DVector<C64>> = basis.iter().map(|a| DVector::from_fn(d2, |r, _| a[(r % dim, r / dim)])).collect();
    let norm = (dim * dim) as f64;
    let chi = DMatrix::from_fn(d2, d2, |m, n| (kets[m].adjoint() * &choi * &kets[n])[(0, 0)] / norm);
    Ok(ProcessMatrix { dim, chi })
}

/// `F_a = [Σ_j Tr(U U_j† U† E(U_j)) + d²] / [d²(d+1)]` over the Pauli
/// products `U_j`.
pub fn average_gate_fidelity(process: &dyn Channel, target: &Operator) -> Result<f64> {
    let d = target.dim();
    if process.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: process.dim() });
    }
    let ud = target.dagger();
    let sum: f64 = pauli_basis(d)?.iter().map(|uj| (target * uj.dagger() * &ud * process.apply(uj)).trace().re).sum();
    let d = d as f64;
    Ok((sum + d * d) / (d * d * (d + 1.0)))
}

/// Closed form of [`average_gate_fidelity`] for a unitary process `V`:
/// `(|Tr(U†V)|² + d) / (d(d+1))`.
pub fn unitary_average_fidelity(v: &Operator, target: &Operator) -> Result<f64> {
    v.check_dim(target)?;
    let d = v.dim() as f64;
    Ok((target.hs_inner(v).norm_sqr() + d) / (d * (d + 1.0)))
}

/// Quasi-static noise: a Gaussian detuning shift of the electron transition
/// and a multiplicative Gaussian error of the drive amplitude, both constant
/// during one gate.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel {
    /// Detuning spread (MHz).
    pub sigma_delta: f64,
    /// Relative amplitude spread.
    pub amplitude_rel_sigma: f64,
    pub samples: usize,
    pub seed: u64,
}

impl NoiseModel {
    pub const MIN_SAMPLES: usize = 100;

    pub fn new(sigma_delta: f64, amplitude_rel_sigma: f64, samples: usize, seed: u64) -> Self {
        Self { sigma_delta, amplitude_rel_sigma, samples, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.samples < Self::MIN_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "at least {} samples required, got {}",
                Self::MIN_SAMPLES,
                self.samples
            )));
        }
        if !(self.sigma_delta >= 0.0 && self.amplitude_rel_sigma >= 0.0) {
            return Err(Error::InvalidArgument("noise spreads must be nonnegative".into()));
        }
        Ok(())
    }

    /// `(δ shift, amplitude factor)` of sample `index`. Each sample has its
    /// own stream, so the draws do not depend on evaluation order.
    pub fn draw(&self, index: usize) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let z = Normal::new(0.0, 1.0).expect("unit normal");
        let (a, b) = (z.sample(&mut rng), z.sample(&mut rng));
        (self.sigma_delta * a, 1.0 + self.amplitude_rel_sigma * b)
    }
}

fn noisy_unitaries(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    noise: &NoiseModel,
) -> Result<Vec<Operator>> {
    (0..noise.samples)
        .into_par_iter()
        .map(|i| {
            let (shift, factor) = noise.draw(i);
            final_unitary(&model.with_detuning_shift(shift), &protocol.scaled(factor), DEFAULT_SUBSTEPS)
        })
        .collect()
}

/// Equal-weight mixture of the gates realized under each noise draw.
pub fn noise_averaged_process(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    noise: &NoiseModel,
) -> Result<Process> {
    noise.validate()?;
    let w = 1.0 / noise.samples as f64;
    Ok(Process::Mixture(noisy_unitaries(model, protocol, noise)?.into_iter().map(|u| (w, u)).collect()))
}

fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

/// Mean and standard deviation of `F_a` over the noise draws.
pub fn monte_carlo_fidelity(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    target: &Operator,
    noise: &NoiseModel,
) -> Result<(f64, f64)> {
    noise.validate()?;
    let fids = noisy_unitaries(model, protocol, noise)?
        .iter()
        .map(|u| unitary_average_fidelity(u, target))
        .collect::<Result<Vec<f64>>>()?;
    let n = fids.len() as f64;
    let mean = pairwise_sum(&fids) / n;
    let dev: Vec<f64> = fids.iter().map(|f| (f - mean) * (f - mean)).collect();
    Ok((mean, (pairwise_sum(&dev) / n).sqrt()))
}

/// Outcome of a detuning-spread calibration.
#[derive(Clone, Debug)]
pub struct NoiseCalibration {
    pub sigma_delta: f64,
    pub mean_fidelity: f64,
    pub std_fidelity: f64,
    /// Every `(σ_δ, mean F_a)` evaluated, in evaluation order.
    pub sweep: Vec<(f64, f64)>,
}

/// Finds `σ_δ` at which the mean `F_a` equals `target_fidelity`: a coarse
/// sweep over `(0, sigma_max]` brackets the crossing, bisection refines it
/// until the mean is within `tol`. All evaluations share the seed of
/// `template`, so the mean is a smooth function of `σ_δ`.
pub fn calibrate_sigma_delta(
    model: &RotatingFrameModel,
    protocol: &ControlProtocol,
    target: &Operator,
    template: &NoiseModel,
    target_fidelity: f64,
    sigma_max: f64,
    tol: f64,
) -> Result<NoiseCalibration> {
    if !(sigma_max > 0.0 && tol > 0.0) {
        return Err(Error::InvalidArgument("σ_max and tolerance must be positive".into()));
    }
    let mut sweep = Vec::new();
    let mut eval = |s: f64| -> Result<(f64, f64)> {
        let r = monte_carlo_fidelity(model, protocol, target, &NoiseModel { sigma_delta: s, ..template.clone() })?;
        sweep.push((s, r.0));
        Ok(r)
    };
    let f0 = eval(0.0)?;
    if f0.0 < target_fidelity {
        return Err(Error::NoRoot {
            diagnostics: format!("noiseless mean fidelity {} is already below {target_fidelity}", f0.0),
        });
    }
    const GRID: usize = 16;
    let (mut lo, mut hi) = (0.0, None);
    for k in 1..=GRID {
        let s = sigma_max * k as f64 / GRID as f64;
        let (m, sd) = eval(s)?;
        if (m - target_fidelity).abs() < tol {
            return Ok(NoiseCalibration { sigma_delta: s, mean_fidelity: m, std_fidelity: sd, sweep });
        }
        if m < target_fidelity {
            hi = Some(s);
            break;
        }
        lo = s;
    }
    let Some(mut hi) = hi else {
        return Err(Error::NoRoot {
            diagnostics: format!("mean fidelity stays above {target_fidelity} up to σ_δ = {sigma_max} MHz"),
        });
    };
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let (m, sd) = eval(mid)?;
        if (m - target_fidelity).abs() < tol {
            return Ok(NoiseCalibration { sigma_delta: mid, mean_fidelity: m, std_fidelity: sd, sweep });
        }
        if m < target_fidelity {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NoRoot { diagnostics: format!("bisection stalled in [{lo}, {hi}] MHz") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{controlled_u, rotation};

    fn chi_entry(p: &ProcessMatrix, label: &str) -> C64 {
        let i = p.labels().iter().position(|l| l == label).unwrap();
        p.chi[(i, i)]
    }

    #[test]
    fn identity_and_pauli_processes() {
        let id = simulate_qpt(&Process::Unitary(Operator::identity(2)), 2).unwrap();
        assert!((chi_entry(&id, "I") - c(1.0, 0.0)).norm() < 1e-12);
        assert!((id.chi.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() < 1e-12);

        let x = simulate_qpt(&Process::Unitary(paulis()[1].clone()), 2).unwrap();
        assert!((chi_entry(&x, "X") - c(1.0, 0.0)).norm() < 1e-12);
        assert!((x.chi.iter().map(|z| z.norm()).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn controlled_gate_chi() {
        let p = simulate_qpt(&Process::Unitary(controlled_u()), 4).unwrap();
        assert!(p.hermiticity_residual() < 1e-10);
        assert!(p.trace_preservation_residual() < 1e-8);
        assert_eq!(p.rank(1e-8), 1);
        let f = average_gate_fidelity(&p, &controlled_u()).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
    }

    #[test]
    fn depolarizing_fidelity_two_routes() {
        let dep = Process::depolarizing(2).unwrap();
        let fa = average_gate_fidelity(&dep, &Operator::identity(2)).unwrap();
        assert!((fa - 0.5).abs() < 1e-12);
        // Brute force over the six Pauli eigenstates, a state 2-design.
        let s = 0.5f64.sqrt();
        let states = [
            [c(1.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(1.0, 0.0)],
            [c(s, 0.0), c(s, 0.0)],
            [c(s, 0.0), c(-s, 0.0)],
            [c(s, 0.0), c(0.0, s)],
            [c(s, 0.0), c(0.0, -s)],
        ];
        let mean: f64 = states
            .iter()
            .map(|a| {
                let rho = Ket::new(a).unwrap().projector();
                dep.apply(&rho).tr_product_re(&rho)
            })
            .sum::<f64>()
            / 6.0;
        assert!((mean - fa).abs() < 1e-12);
        // (d F_pro + 1)/(d + 1) with F_pro = 1/d².
        assert!((mean - (2.0 * 0.25 + 1.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_closed_form_matches_definition() {
        let u = rotation([0.3, -0.4, 0.8], 1.1);
        let v = rotation([0.0, 1.0, 0.2], 0.7);
        let a = average_gate_fidelity(&Process::Unitary(v.clone()), &u).unwrap();
        let b = unitary_average_fidelity(&v, &u).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn chi_csv_layout() {
        let p = simulate_qpt(&Process::Unitary(controlled_u()), 4).unwrap();
        let (re, im) = p.to_csv();
        let header = re.lines().next().unwrap();
        assert!(header.starts_with("label,II,IX,IY,IZ,XI"));
        assert!(header.ends_with("ZZ"));
        assert_eq!(re.lines().count(), 17);
        assert_eq!(im.lines().count(), 17);
    }

    #[test]
    fn rejects_unsupported_dimension_and_small_samples() {
        assert!(pauli_basis(3).is_err());
        let model = RotatingFrameModel::single_qubit(0.0);
        let proto = ControlProtocol::empty();
        let noise = NoiseModel::new(0.1, 0.0, 10, 0);
        assert!(monte_carlo_fidelity(&model, &proto, &Operator::identity(2), &noise).is_err());
    }

    #[test]
    fn zero_noise_has_zero_spread() {
        let model = RotatingFrameModel::single_qubit(0.0);
        let proto = ControlProtocol::linear_phase(5.0, 0.0, 0.0, 0.1);
        let target = rotation([1.0, 0.0, 0.0], std::f64::consts::PI);
        let (m, s) = monte_carlo_fidelity(&model, &proto, &target, &NoiseModel::new(0.0, 0.0, 100, 3)).unwrap();
        let u = final_unitary(&model, &proto, DEFAULT_SUBSTEPS).unwrap();
        assert!((m - unitary_average_fidelity(&u, &target).unwrap()).abs() < 1e-14);
        assert_eq!(s, 0.0);
    }

    #[test]
    fn draws_are_order_independent() {
        let n = NoiseModel::new(0.2, 0.01, 100, 7);
        let forward: Vec<_> = (0..20).map(|i| n.draw(i)).collect();
        let backward: Vec<_> = (0..20).rev().map(|i| n.draw(i)).collect();
        assert!(forward.iter().zip(backward.iter().rev()).all(|(a, b)| a == b));
    }
}
