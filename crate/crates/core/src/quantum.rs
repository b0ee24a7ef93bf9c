//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here works on `d ≤ 8` matrices, so plain dense storage and
//! eigendecomposition-based exponentials are both exact and cheap. The
//! [`Operator`] newtype is the currency passed between every other module.
//!
//! Conventions: ħ = 1, Hamiltonians are in rad/µs (the 2π factor is applied
//! where a Hamiltonian is built) and times are in µs. Two-qubit operators are
//! ordered electron ⊗ nucleus with basis `{|0,1⟩, |0,0⟩, |−1,1⟩, |−1,0⟩}`;
//! the electron state `|m_S=0⟩` is the +1/2 eigenstate of `Sz`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const UNITARY_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Dense complex square matrix.
#[derive(Clone, PartialEq)]
pub struct Operator {
    m: DMatrix<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim(), self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        Self { m: DMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { m: DMatrix::identity(dim, dim) }
    }

    pub fn from_matrix(m: DMatrix<C64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "operators are square");
        Self { m }
    }

    /// Builds an operator from row-major entries.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "operators are square");
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = *z;
            }
        }
        Self { m }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = DMatrix::zeros(dim, dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "operators are square");
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = c(*x, 0.0);
            }
        }
        Self { m }
    }

    pub fn diagonal(entries: &[C64]) -> Self {
        Self { m: DMatrix::from_diagonal(&DVector::from_column_slice(entries)) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.m
    }

    pub fn dagger(&self) -> Self {
        Self { m: self.m.adjoint() }
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { m: &self.m * c(s, 0.0) }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self { m: &self.m * s }
    }

    /// `self + s·other`, in place.
    pub fn add_scaled(&mut self, s: f64, other: &Operator) {
        self.m.zip_apply(&other.m, |a, b| *a += b * s);
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self { m: &self.m * &other.m - &other.m * &self.m }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Operator) -> Self {
        Self { m: self.m.kronecker(&other.m) }
    }

    /// Hilbert–Schmidt inner product `Tr(self† · other)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        self.m.dotc(&other.m)
    }

    /// `Tr(self · other)`.
    pub fn tr_product(&self, other: &Operator) -> C64 {
        self.m.component_mul(&other.m.transpose()).sum()
    }

    /// `Re Tr(self · other)`; the natural real inner product for Hermitian operators.
    pub fn tr_product_re(&self, other: &Operator) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for k in 0..d {
                let a = self.m[(i, k)];
                let b = other.m[(k, i)];
                acc += a.re * b.re - a.im * b.im;
            }
        }
        acc
    }

    /// Frobenius norm `sqrt(Tr(A†A))`.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        self.m.iter().zip(other.m.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.dagger()) < tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let p = self.dagger() * self;
        p.max_abs_diff(&Operator::identity(self.dim())) < tol
    }

    pub fn apply(&self, ket: &Ket) -> Ket {
        Ket { v: &self.m * &ket.v }
    }

    /// Replaces the operator by its Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self { m: (&self.m + self.m.adjoint()) * c(0.5, 0.0) }
    }

    pub fn check_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.m[idx]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.m[idx]
    }
}

impl Mul<&Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m * &rhs.m }
    }
}

impl Mul<&Operator> for Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator { m: self.m * &rhs.m }
    }
}

impl Mul<Operator> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator { m: &self.m * rhs.m }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        Operator { m: self.m * rhs.m }
    }
}

impl Add<&Operator> for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m + &rhs.m }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        Operator { m: self.m + rhs.m }
    }
}

impl Sub<&Operator> for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator { m: &self.m - &rhs.m }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        Operator { m: self.m - rhs.m }
    }
}

impl Neg for Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator { m: -self.m }
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    v: DVector<C64>,
}

impl Ket {
    /// Builds a ket from amplitudes, normalizing them.
    pub fn new(amplitudes: &[C64]) -> Result<Self> {
        let v = DVector::from_column_slice(amplitudes);
        let n = v.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidArgument("ket must have a finite nonzero norm".into()));
        }
        Ok(Self { v: v / c(n, 0.0) })
    }

    /// Computational basis state `index` of a `dim`-level system.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = c(1.0, 0.0);
        Self { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.v.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.v.norm()
    }

    pub fn expectation(&self, op: &Operator) -> C64 {
        self.v.dotc(&(op.matrix() * &self.v))
    }

    pub fn overlap(&self, other: &Ket) -> C64 {
        self.v.dotc(&other.v)
    }

    pub fn populations(&self) -> Vec<f64> {
        self.v.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        Ket { v: self.v.kronecker(&other.v) }
    }

    /// Density matrix `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> Operator {
        Operator::from_matrix(&self.v * self.v.adjoint())
    }
}

/// Spin-1/2 operators `(Sx, Sy, Sz)`.
pub fn spin_half_operators() -> (Operator, Operator, Operator) {
    let z = c(0.0, 0.0);
    let h = c(0.5, 0.0);
    let sx = Operator::from_rows(&[&[z, h], &[h, z]]);
    let sy = Operator::from_rows(&[&[z, c(0.0, -0.5)], &[c(0.0, 0.5), z]]);
    let sz = Operator::from_rows(&[&[h, z], &[z, -h]]);
    (sx, sy, sz)
}

/// Parses a square complex matrix from CSV text: one row per line, each
/// entry given as a `re,im` pair, so a `d × d` matrix has `2d` columns.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_matrix_csv(text: &str) -> Result<Operator> {
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{v}'"))))
                .collect()
        })
        .collect::<Result<_>>()?;
    let d = rows.len();
    if d == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != 2 * d) {
        return Err(Error::Parse(format!("expected {} columns (re,im pairs), found {}", 2 * d, r.len())));
    }
    let m = DMatrix::from_fn(d, d, |i, j| c(rows[i][2 * j], rows[i][2 * j + 1]));
    Ok(Operator::from_matrix(m))
}

/// Pauli matrices `(I, X, Y, Z)`.
pub fn paulis() -> [Operator; 4] {
    let (sx, sy, sz) = spin_half_operators();
    [Operator::identity(2), sx.scale(2.0), sy.scale(2.0), sz.scale(2.0)]
}

/// Spin-1 `S_z = diag(+1, 0, −1)`.
pub fn spin_one_z() -> Operator {
    Operator::from_real_rows(&[&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, -1.0]])
}

/// Electron and nuclear spin-1/2 operators embedded in the 4-dimensional
/// two-qubit space (electron factor first).
#[derive(Clone, Debug)]
pub struct TwoQubitOps {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub ix: Operator,
    pub iy: Operator,
    pub iz: Operator,
}

impl TwoQubitOps {
    pub fn new() -> Self {
        let (sx, sy, sz) = spin_half_operators();
        let id = Operator::identity(2);
        Self {
            sx: sx.kron(&id),
            sy: sy.kron(&id),
            sz: sz.kron(&id),
            ix: id.kron(&sx),
            iy: id.kron(&sy),
            iz: id.kron(&sz),
        }
    }
}

impl Default for TwoQubitOps {
    fn default() -> Self {
        Self::new()
    }
}

/// Names of the 13 forbidden directions, in basis order.
pub const TWO_QUBIT_BASIS_NAMES: [&str; 13] =
    ["Ix", "Iy", "Iz", "SxIx", "SxIy", "SxIz", "SyIx", "SyIy", "SyIz", "Sz", "SzIx", "SzIy", "SzIz"];

/// The ordered 13-element basis of directions a two-qubit control
/// Hamiltonian restricted to `span{Sx, Sy}` must avoid.
pub fn two_qubit_basis() -> Vec<Operator> {
    let o = TwoQubitOps::new();
    vec![
        o.ix.clone(),
        o.iy.clone(),
        o.iz.clone(),
        &o.sx * &o.ix,
        &o.sx * &o.iy,
        &o.sx * &o.iz,
        &o.sy * &o.ix,
        &o.sy * &o.iy,
        &o.sy * &o.iz,
        o.sz.clone(),
        &o.sz * &o.ix,
        &o.sz * &o.iy,
        &o.sz * &o.iz,
    ]
}

/// Spectral decomposition of a Hermitian operator, `H = V diag(w) V†`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigh {
    pub fn new(h: &Operator) -> Result<Self> {
        if !h.is_hermitian(hermitian_tol_for(h)) {
            return Err(Error::NotHermitian { deviation: h.max_abs_diff(&h.dagger()) });
        }
        Ok(Self::new_unchecked(h))
    }

    pub(crate) fn new_unchecked(h: &Operator) -> Self {
        let eig = h.hermitian_part().into_matrix().symmetric_eigen();
        let mut vectors = eig.eigenvectors;
        // Fix each eigenvector's phase so its largest component is real positive.
        for mut col in vectors.column_iter_mut() {
            let (mut best, mut arg) = (0.0, 0.0);
            for z in col.iter() {
                if z.norm() > best + 1e-12 {
                    best = z.norm();
                    arg = z.arg();
                }
            }
            let phase = C64::from_polar(1.0, -arg);
            let n = col.norm();
            col.iter_mut().for_each(|z| *z = *z * phase / n);
        }
        Self { values: eig.eigenvalues.iter().copied().collect(), vectors }
    }

    /// `exp(−i H t)`.
    pub fn propagator(&self, t: f64) -> Operator {
        let phases: Vec<C64> = self.values.iter().map(|w| C64::from_polar(1.0, -w * t)).collect();
        self.reconstruct(&phases)
    }

    fn reconstruct(&self, diag: &[C64]) -> Operator {
        let v = &self.vectors;
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= diag[j];
        }
        Operator::from_matrix(scaled * v.adjoint())
    }

    /// Directional derivative of `exp(−i H t)` along the Hermitian direction
    /// `k`, i.e. `d/dε exp(−i (H + ε K) t)` at ε = 0 (Daleckii–Krein formula).
    pub fn propagator_derivative(&self, k: &Operator, t: f64) -> Operator {
        let v = &self.vectors;
        let kt = v.adjoint() * k.matrix() * v;
        let d = self.values.len();
        let mut g = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let ai = c(0.0, -self.values[i] * t);
                let aj = c(0.0, -self.values[j] * t);
                let ei = ai.exp();
                let ej = aj.exp();
                let factor = if (self.values[i] - self.values[j]).abs() * t.abs() > 1e-9 {
                    (ei - ej) / (ai - aj)
                } else {
                    // Second-order expansion around the degenerate point.
                    let diff = aj - ai;
                    ei * (c(1.0, 0.0) + diff * 0.5 + diff * diff / 6.0)
                };
                g[(i, j)] = kt[(i, j)] * factor * c(0.0, -t);
            }
        }
        Operator::from_matrix(v * g * v.adjoint())
    }
}

fn hermitian_tol_for(h: &Operator) -> f64 {
    // Absolute tolerance on a scale of the operator's magnitude; Hamiltonians
    // carry 2π·MHz entries of order 10–10⁴.
    HERMITIAN_TOL * h.max_abs().max(1.0)
}

/// `exp(−i H t)` for Hermitian `H`, by eigendecomposition.
pub fn expm_skew(h: &Operator, t: f64) -> Result<Operator> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite, got {t}")));
    }
    Ok(Eigh::new(h)?.propagator(t))
}

/// Phase-insensitive overlap `|Tr(U† V)| / d`.
pub fn gate_fidelity(u: &Operator, v: &Operator) -> Result<f64> {
    u.check_dim(v)?;
    Ok(u.hs_inner(v).norm() / u.dim() as f64)
}

/// Gate fidelity after the best diagonal (per-level phase) correction applied
/// to `u`: `Σ_i |(U V†)_ii| / d`.
pub fn phase_corrected_fidelity(u: &Operator, v: &Operator) -> Result<f64> {
    u.check_dim(v)?;
    let p = u * &v.dagger();
    let d = u.dim();
    Ok((0..d).map(|i| p[(i, i)].norm()).sum::<f64>() / d as f64)
}

/// The controlled gate that flips the electron qubit iff the nucleus is in
/// `|m_I=0⟩`.
pub fn controlled_u() -> Operator {
    Operator::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
        &[0.0, -1.0, 0.0, 0.0],
    ])
}

/// Single-qubit rotation `exp(−i θ n̂·S)`.
pub fn rotation(axis: [f64; 3], theta: f64) -> Operator {
    let (sx, sy, sz) = spin_half_operators();
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut gen = sx.scale(axis[0]);
    gen.add_scaled(axis[1], &sy);
    gen.add_scaled(axis[2], &sz);
    Operator::identity(2).scale(ch) + gen.scale_c(c(0.0, -2.0 * sh))
}
