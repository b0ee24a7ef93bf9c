//! NV-center spin Hamiltonians and their rotating-frame reductions.
//!
//! The full model is the secular Hamiltonian of the electron spin-1 and the
//! ¹⁴N nuclear spin-1. Driving one electron transition (and, for two qubits,
//! working in a frame that also rotates at the nuclear transition) and dropping
//! counter-rotating terms gives the effective qubit models the solvers use:
//!
//! * one qubit: `H = 2π(δ₀ Sz + ν₁(cos φ Sx + sin φ Sy))`
//! * two qubits: `H = 2π(A Sz Iz + ν₁(cos φ Sx + sin φ Sy))`
//!
//! The transverse hyperfine term `A⊥(SxIx + SyIy)` is suppressed by the
//! electron zero-field and Zeeman splittings and is not part of the model;
//! `a_perp_mhz` is carried only so a configuration can record it.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quantum::{c, spin_half_operators, spin_one_z, Eigh, Operator, TwoQubitOps};

/// Physical constants of one NV center. Frequencies in MHz, field in gauss.
#[derive(Clone, Debug, PartialEq)]
pub struct NvParameters {
    /// Zero-field splitting.
    pub d_mhz: f64,
    /// Nuclear quadrupolar splitting.
    pub p_mhz: f64,
    /// Secular hyperfine coupling.
    pub a_mhz: f64,
    /// Transverse hyperfine coupling; not used by the secular model.
    pub a_perp_mhz: Option<f64>,
    pub b0_gauss: f64,
    /// Electron gyromagnetic ratio / 2π (negative for the electron).
    pub gamma_e_mhz_per_g: f64,
    /// ¹⁴N gyromagnetic ratio / 2π.
    pub gamma_n_mhz_per_g: f64,
}

impl Default for NvParameters {
    fn default() -> Self {
        Self {
            d_mhz: 2870.0,
            p_mhz: -4.95,
            a_mhz: -2.16,
            a_perp_mhz: None,
            b0_gauss: 500.0,
            gamma_e_mhz_per_g: -2.8025,
            gamma_n_mhz_per_g: 0.0003077,
        }
    }
}

impl NvParameters {
    /// Electron Zeeman splitting `ω_S = −γ_e B₀ / 2π` in MHz.
    pub fn omega_s(&self) -> f64 {
        -self.gamma_e_mhz_per_g * self.b0_gauss
    }

    /// Nuclear Zeeman splitting `ω_I = γ_N B₀ / 2π` in MHz.
    pub fn omega_i(&self) -> f64 {
        self.gamma_n_mhz_per_g * self.b0_gauss
    }

    /// Microwave frequency resonant with `|0⟩ ↔ |−1⟩` at `m_I = +1`.
    pub fn single_qubit_resonance(&self) -> f64 {
        self.d_mhz - self.omega_s() - self.a_mhz
    }

    /// Parses a flat `key = value` configuration. Unknown keys are rejected;
    /// missing keys keep their defaults. `#` starts a comment.
    ///
    /// Keys: `D_mhz`, `P_mhz`, `A_mhz`, `A_perp_mhz`, `B0_gauss`,
    /// `gamma_e_mhz_per_g`, `gamma_n_mhz_per_g`.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut p = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: '{}' is not a number", lineno + 1, value.trim())))?;
            if !value.is_finite() {
                return Err(Error::Parse(format!("line {}: value must be finite", lineno + 1)));
            }
            match key.trim() {
                "D_mhz" => p.d_mhz = value,
                "P_mhz" => p.p_mhz = value,
                "A_mhz" => p.a_mhz = value,
                "A_perp_mhz" => p.a_perp_mhz = Some(value),
                "B0_gauss" => p.b0_gauss = value,
                "gamma_e_mhz_per_g" => p.gamma_e_mhz_per_g = value,
                "gamma_n_mhz_per_g" => p.gamma_n_mhz_per_g = value,
                other => return Err(Error::Parse(format!("line {}: unknown key '{other}'", lineno + 1))),
            }
        }
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_config(&std::fs::read_to_string(path)?)
    }

    pub fn to_config(&self) -> String {
        let mut s = format!(
            "D_mhz = {}\nP_mhz = {}\nA_mhz = {}\nB0_gauss = {}\ngamma_e_mhz_per_g = {}\ngamma_n_mhz_per_g = {}\n",
            self.d_mhz, self.p_mhz, self.a_mhz, self.b0_gauss, self.gamma_e_mhz_per_g, self.gamma_n_mhz_per_g
        );
        if let Some(a) = self.a_perp_mhz {
            s.push_str(&format!("A_perp_mhz = {a}\n"));
        }
        s
    }
}

/// Index of `|m_S, m_I⟩` in the 9-level product basis, both quantum numbers
/// ordered `+1, 0, −1`.
pub fn spin_one_index(m_s: i32, m_i: i32) -> usize {
    assert!((-1..=1).contains(&m_s) && (-1..=1).contains(&m_i));
    ((1 - m_s) * 3 + (1 - m_i)) as usize
}

/// Secular NV Hamiltonian on the 9-dimensional spin-1 ⊗ spin-1 space, in rad/µs.
pub fn secular_hamiltonian(p: &NvParameters) -> Operator {
    let sz = spin_one_z();
    let id = Operator::identity(3);
    let s = sz.kron(&id);
    let i = id.kron(&sz);
    let mut h = (&s * &s).scale(p.d_mhz);
    h.add_scaled(p.omega_s(), &s);
    h.add_scaled(p.a_mhz, &(&s * &i));
    h.add_scaled(p.p_mhz, &(&i * &i));
    h.add_scaled(-p.omega_i(), &i);
    h.scale(2.0 * PI)
}

/// Which effective model a frame describes.
#[derive(Clone, Debug, PartialEq)]
pub enum FrameKind {
    /// Electron qubit with the nucleus fixed in `m_I = +1`.
    SingleQubit { delta0_mhz: f64 },
    /// Electron and nuclear qubits coupled by the secular hyperfine term.
    TwoQubit { a_mhz: f64 },
}

/// Effective rotating-frame model: a drift Hamiltonian plus the operators a
/// microwave drive couples to.
#[derive(Clone, Debug)]
pub struct RotatingFrameModel {
    pub kind: FrameKind,
    /// Drift Hamiltonian in rad/µs.
    pub h0: Operator,
    /// Electron spin operators in the model's Hilbert space.
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
    pub f_mw_mhz: Option<f64>,
    pub f_rf_mhz: Option<f64>,
}

impl RotatingFrameModel {
    /// Pure single-qubit model with detuning `delta` (MHz).
    pub fn single_qubit(delta: f64) -> Self {
        let (sx, sy, sz) = spin_half_operators();
        Self {
            kind: FrameKind::SingleQubit { delta0_mhz: delta },
            h0: sz.scale(2.0 * PI * delta),
            sx,
            sy,
            sz,
            f_mw_mhz: None,
            f_rf_mhz: None,
        }
    }

    /// Pure two-qubit model with hyperfine coupling `a` (MHz).
    pub fn two_qubit(a: f64) -> Self {
        let o = TwoQubitOps::new();
        Self {
            kind: FrameKind::TwoQubit { a_mhz: a },
            h0: (&o.sz * &o.iz).scale(2.0 * PI * a),
            sx: o.sx,
            sy: o.sy,
            sz: o.sz,
            f_mw_mhz: None,
            f_rf_mhz: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    /// Control Hamiltonian `2π(νx Sx + νy Sy + νz Sz)` for amplitudes in MHz.
    pub fn control(&self, nu_x: f64, nu_y: f64, nu_z: f64) -> Operator {
        let mut h = self.sx.scale(2.0 * PI * nu_x);
        h.add_scaled(2.0 * PI * nu_y, &self.sy);
        if nu_z != 0.0 {
            h.add_scaled(2.0 * PI * nu_z, &self.sz);
        }
        h
    }

    /// Total Hamiltonian for one control sample.
    pub fn hamiltonian(&self, nu_x: f64, nu_y: f64, nu_z: f64) -> Operator {
        &self.h0 + &self.control(nu_x, nu_y, nu_z)
    }

    /// Copy of the model with an extra static electron detuning (MHz).
    pub fn with_detuning_shift(&self, shift_mhz: f64) -> Self {
        let mut m = self.clone();
        m.h0.add_scaled(2.0 * PI * shift_mhz, &self.sz);
        m
    }

    /// Norm `‖Hc‖ = 2π ν₁ ‖Sx‖` of a constant-amplitude control.
    pub fn control_norm(&self, nu1: f64) -> f64 {
        2.0 * PI * nu1 * self.sx.norm()
    }

    /// Single-qubit detuning, if this is a single-qubit frame.
    pub fn delta0(&self) -> Option<f64> {
        match self.kind {
            FrameKind::SingleQubit { delta0_mhz } => Some(delta0_mhz),
            FrameKind::TwoQubit { .. } => None,
        }
    }
}

/// Electron-qubit frame rotating at `f_mw` with the nucleus in `m_I = +1`.
/// The detuning is `δ₀ = −(D − ω_S − A − f_MW)`.
pub fn single_qubit_frame(p: &NvParameters, f_mw_mhz: f64) -> RotatingFrameModel {
    let delta0 = -(p.d_mhz - p.omega_s() - p.a_mhz - f_mw_mhz);
    let mut m = RotatingFrameModel::single_qubit(delta0);
    m.f_mw_mhz = Some(f_mw_mhz);
    m
}

/// Two-qubit frame rotating at `f_MW = D − ω_S − A/2` and
/// `f_RF = −P + ω_I + A/2`, leaving `H₀ = 2π A Sz Iz`.
pub fn two_qubit_frame(p: &NvParameters) -> RotatingFrameModel {
    let mut m = RotatingFrameModel::two_qubit(p.a_mhz);
    m.f_mw_mhz = Some(p.d_mhz - p.omega_s() - p.a_mhz / 2.0);
    m.f_rf_mhz = Some(-p.p_mhz + p.omega_i() + p.a_mhz / 2.0);
    m
}

/// Embeds the 4-level qubit subspace `{|0,1⟩, |0,0⟩, |−1,1⟩, |−1,0⟩}` into the
/// 9-level spin-1 ⊗ spin-1 space; returns the 9-level indices in qubit order.
pub fn qubit_subspace_indices() -> [usize; 4] {
    [spin_one_index(0, 1), spin_one_index(0, 0), spin_one_index(-1, 1), spin_one_index(-1, 0)]
}

/// Lab-frame microwave drive `2π·2ν₁cos(2πf t − φ)·Sx` on the 9-level model.
/// The electron operator is the spin-1 `Sx` rescaled by `1/√2`, so each
/// `|0⟩ ↔ |±1⟩` matrix element equals that of a spin-1/2 `Sx` and `ν₁` keeps
/// its qubit-model meaning.
pub fn lab_frame_drive(nu1: f64, f_mhz: f64, phase: f64, t: f64) -> Operator {
    let mut h = Operator::zeros(9);
    let amp = 2.0 * PI * 2.0 * nu1 * (2.0 * PI * f_mhz * t - phase).cos() * 0.5;
    for m_i in [1, 0, -1] {
        for m_s in [1, -1] {
            let a = spin_one_index(0, m_i);
            let b = spin_one_index(m_s, m_i);
            h[(a, b)] = c(amp, 0.0);
            h[(b, a)] = c(amp, 0.0);
        }
    }
    h
}

/// Propagator of the secular model plus [`lab_frame_drive`] over
/// `duration` µs, with `steps` midpoint steps. No rotating-wave
/// approximation is made, so the step must resolve the drive frequency.
pub fn lab_frame_propagator(
    p: &NvParameters,
    nu1: f64,
    f_mhz: f64,
    phase: f64,
    duration: f64,
    steps: usize,
) -> Result<Operator> {
    if steps == 0 || !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidArgument("need a finite duration and at least one step".into()));
    }
    let h0 = secular_hamiltonian(p);
    let dt = duration / steps as f64;
    let mut u = Operator::identity(9);
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        let h = &h0 + &lab_frame_drive(nu1, f_mhz, phase, t);
        u = Eigh::new(&h)?.propagator(dt) * &u;
    }
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::two_qubit_basis;

    #[test]
    fn secular_is_diagonal() {
        let h = secular_hamiltonian(&NvParameters::default());
        let mut off = 0.0f64;
        for i in 0..9 {
            for j in 0..9 {
                if i != j {
                    off = off.max(h[(i, j)].norm());
                }
            }
        }
        assert_eq!(off, 0.0);
    }

    #[test]
    fn nuclear_splitting_at_ms_zero() {
        let p = NvParameters::default();
        let h = secular_hamiltonian(&p);
        let e = |ms, mi| h[(spin_one_index(ms, mi), spin_one_index(ms, mi))].re;
        let expected = 2.0 * PI * (p.p_mhz - p.omega_i());
        assert!((e(0, 1) - e(0, 0) - expected).abs() < 1e-9);
    }

    #[test]
    fn zero_field_transition_frequency() {
        let p = NvParameters { b0_gauss: 0.0, ..Default::default() };
        let h = secular_hamiltonian(&p);
        let e = |ms, mi| h[(spin_one_index(ms, mi), spin_one_index(ms, mi))].re;
        let f = (e(-1, 1) - e(0, 1)) / (2.0 * PI);
        assert!((f - 2872.16).abs() < 1e-9, "{f}");
    }

    #[test]
    fn single_qubit_detuning() {
        let p = NvParameters::default();
        let res = p.single_qubit_resonance();
        assert!(single_qubit_frame(&p, res).delta0().unwrap().abs() < 1e-9);
        assert!((single_qubit_frame(&p, res + 1.5).delta0().unwrap() - 1.5).abs() < 1e-9);
        let a = single_qubit_frame(&p, 2000.0).delta0().unwrap();
        let b = single_qubit_frame(&p, 2000.0 + 0.25).delta0().unwrap();
        assert!((b - a - 0.25).abs() < 1e-9);
        assert!(single_qubit_frame(&p, res).h0.norm() < 1e-9);
    }

    #[test]
    fn two_qubit_drift() {
        let p = NvParameters::default();
        let m = two_qubit_frame(&p);
        let a = p.a_mhz;
        assert_eq!(m.kind, FrameKind::TwoQubit { a_mhz: -2.16 });
        let expected = [a / 4.0, -a / 4.0, -a / 4.0, a / 4.0];
        for (i, e) in expected.iter().enumerate() {
            assert!((m.h0[(i, i)].re - 2.0 * PI * e).abs() < 1e-12);
        }
        let basis = two_qubit_basis();
        for (k, b) in basis.iter().enumerate() {
            let t = (&m.h0 * b).trace().re;
            if k == 12 {
                assert!((t - 2.0 * PI * a / 4.0).abs() < 1e-12);
            } else {
                assert!(t.abs() < 1e-12);
            }
        }
        let f_mw = m.f_mw_mhz.unwrap();
        assert!((f_mw - (p.d_mhz - p.omega_s() - a / 2.0)).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_and_errors() {
        let p = NvParameters { b0_gauss: 512.5, a_perp_mhz: Some(-2.7), ..Default::default() };
        let q = NvParameters::parse_config(&p.to_config()).unwrap();
        assert_eq!(p, q);
        let q = NvParameters::parse_config("# comment\nA_mhz = -2.2 # trailing\n").unwrap();
        assert_eq!(q.a_mhz, -2.2);
        assert!(NvParameters::parse_config("Q = 1").is_err());
        assert!(NvParameters::parse_config("A_mhz").is_err());
        assert!(NvParameters::parse_config("A_mhz = abc").is_err());
    }
}
