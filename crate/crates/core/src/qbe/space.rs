use crate::error::{Error, Result};
use crate::nv::RotatingFrameModel;
use crate::quantum::{paulis, Operator};

/// Allowed (P) and forbidden (Q) control directions and the control norm `E`
/// (rad/µs, `E² = Tr(H_c²)`).
#[derive(Clone, Debug)]
pub struct ControlSpaceSpec {
    pub p_basis: Vec<Operator>,
    pub q_basis: Vec<Operator>,
    pub e: f64,
}

const ORTHO_TOL: f64 = 1e-10;

impl ControlSpaceSpec {
    pub fn new(p_basis: Vec<Operator>, q_basis: Vec<Operator>, e: f64) -> Result<Self> {
        if !(e > 0.0 && e.is_finite()) {
            return Err(Error::InvalidArgument(format!("control norm must be positive, got {e}")));
        }
        let Some(first) = p_basis.first() else {
            return Err(Error::InvalidArgument("empty control space".into()));
        };
        let d = first.dim();
        let all: Vec<&Operator> = p_basis.iter().chain(&q_basis).collect();
        for (i, a) in all.iter().enumerate() {
            if a.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, found: a.dim() });
            }
            if !a.is_hermitian(1e-12) {
                return Err(Error::NotHermitian { deviation: a.max_abs_diff(&a.dagger()) });
            }
            if a.norm() < ORTHO_TOL {
                return Err(Error::InvalidArgument(format!("basis element {i} is zero")));
            }
            for b in &all[..i] {
                let overlap = a.tr_product_re(b) / (a.norm() * b.norm());
                if overlap.abs() > ORTHO_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "basis elements are not orthogonal (normalized overlap {overlap:.3e})"
                    )));
                }
            }
        }
        Ok(Self { p_basis, q_basis, e })
    }

    /// `P = {Sx, Sy}` of the model's electron spin, `Q` the rest of the
    /// traceless operators, and `E = 2πν₁‖Sx‖`.
    pub fn transverse(model: &RotatingFrameModel, nu1: f64) -> Result<Self> {
        let p = vec![model.sx.clone(), model.sy.clone()];
        let q = complement(&p, model.dim())?;
        Self::new(p, q, model.control_norm(nu1))
    }

    /// `P = {Sx, Sy, Sz}` of the electron spin, `Q` the rest.
    pub fn with_z(model: &RotatingFrameModel, nu1: f64) -> Result<Self> {
        let p = vec![model.sx.clone(), model.sy.clone(), model.sz.clone()];
        let q = complement(&p, model.dim())?;
        Self::new(p, q, model.control_norm(nu1))
    }

    pub fn dim(&self) -> usize {
        self.p_basis[0].dim()
    }

    pub fn p_coords(&self, x: &Operator) -> Vec<f64> {
        coords(&self.p_basis, x)
    }

    pub fn q_coords(&self, x: &Operator) -> Vec<f64> {
        coords(&self.q_basis, x)
    }

    pub fn project_p(&self, x: &Operator) -> Operator {
        combine(&self.p_basis, &self.p_coords(x), self.dim())
    }

    pub fn project_q(&self, x: &Operator) -> Operator {
        combine(&self.q_basis, &self.q_coords(x), self.dim())
    }

    /// Largest `|Tr(H_c B_k)| / (E ‖B_k‖)` over the forbidden directions.
    pub fn constraint_residual(&self, hc: &Operator) -> f64 {
        self.q_basis.iter().map(|b| (hc.tr_product_re(b) / b.norm()).abs() / self.e).fold(0.0, f64::max)
    }

    /// `|Tr(H_c²) − E²| / E²`.
    pub fn norm_residual(&self, hc: &Operator) -> f64 {
        (hc.tr_product_re(hc) - self.e * self.e).abs() / (self.e * self.e)
    }

    /// Normalized basis for fast coordinate work.
    pub(crate) fn normalized(&self) -> NormalizedSpace {
        let unit = |b: &Operator| b.scale(1.0 / b.norm());
        NormalizedSpace { p: self.p_basis.iter().map(unit).collect(), q: self.q_basis.iter().map(unit).collect() }
    }
}

pub(crate) struct NormalizedSpace {
    pub p: Vec<Operator>,
    pub q: Vec<Operator>,
}

fn coords(basis: &[Operator], x: &Operator) -> Vec<f64> {
    basis.iter().map(|b| x.tr_product_re(b) / b.tr_product_re(b)).collect()
}

fn combine(basis: &[Operator], c: &[f64], d: usize) -> Operator {
    let mut out = Operator::zeros(d);
    for (b, w) in basis.iter().zip(c) {
        out.add_scaled(*w, b);
    }
    out
}

/// Pauli-product basis of the traceless Hermitian operators on `d = 2ⁿ`.
pub fn traceless_basis(d: usize) -> Result<Vec<Operator>> {
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::InvalidArgument(format!("dimension {d} is not a power of two")));
    }
    // Factors I, Sx, Sy, Sz, so that products read Ix, SxIx, ... unscaled.
    let p = paulis();
    let factors: Vec<Operator> =
        p.iter().enumerate().map(|(i, s)| if i == 0 { s.clone() } else { s.scale(0.5) }).collect();
    let mut basis = vec![Operator::identity(1)];
    let mut n = 1;
    while n < d {
        basis = basis.iter().flat_map(|b| factors.iter().map(move |s| b.kron(s))).collect();
        n *= 2;
    }
    Ok(basis.into_iter().skip(1).collect())
}

/// Orthogonal complement of `p` within the traceless operators, built by
/// Gram–Schmidt over the Pauli-product basis.
pub fn complement(p: &[Operator], d: usize) -> Result<Vec<Operator>> {
    let mut span: Vec<Operator> = Vec::new();
    for b in p {
        let mut v = b.clone();
        for s in &span {
            v.add_scaled(-v.tr_product_re(s) / s.tr_product_re(s), s);
        }
        if v.norm() > ORTHO_TOL {
            span.push(v);
        }
    }
    let mut out: Vec<Operator> = Vec::new();
    for cand in traceless_basis(d)? {
        let mut v = cand.clone();
        for s in span.iter().chain(&out) {
            v.add_scaled(-v.tr_product_re(s) / s.tr_product_re(s), s);
        }
        if v.norm() > 1e-9 * cand.norm() {
            out.push(v);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::two_qubit_basis;

    #[test]
    fn transverse_two_qubit_complement_is_the_named_basis() {
        let model = RotatingFrameModel::two_qubit(-2.16);
        let spec = ControlSpaceSpec::transverse(&model, 2.5).unwrap();
        assert_eq!(spec.q_basis.len(), 13);
        for (a, b) in spec.q_basis.iter().zip(two_qubit_basis()) {
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
        assert!((spec.e - 2.0 * std::f64::consts::PI * 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_spaces() {
        let model = RotatingFrameModel::single_qubit(1.0);
        assert_eq!(ControlSpaceSpec::transverse(&model, 5.0).unwrap().q_basis.len(), 1);
        assert!(ControlSpaceSpec::with_z(&model, 5.0).unwrap().q_basis.is_empty());
    }

    #[test]
    fn rejects_overlapping_bases() {
        let model = RotatingFrameModel::single_qubit(1.0);
        let bad = ControlSpaceSpec::new(vec![model.sx.clone()], vec![&model.sx + &model.sz], 1.0);
        assert!(bad.is_err());
    }

    #[test]
    fn projections_split_an_operator() {
        let model = RotatingFrameModel::two_qubit(1.0);
        let spec = ControlSpaceSpec::transverse(&model, 1.0).unwrap();
        let mut x = Operator::zeros(4);
        for (i, b) in traceless_basis(4).unwrap().iter().enumerate() {
            x.add_scaled(0.3 * i as f64 - 1.0, b);
        }
        let sum = spec.project_p(&x) + spec.project_q(&x);
        assert!(sum.max_abs_diff(&x) < 1e-13);
    }
}
