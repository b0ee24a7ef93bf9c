//! Photoluminescence normalization for two-qubit readout.
//!
//! Levels are numbered 1..4 = `|0,1⟩, |0,0⟩, |−1,1⟩, |−1,0⟩`. `N_i` is the
//! photon count when all population sits in level `i`; the signal of a
//! state with populations `p` is `Σ p_i N_i`. Calibration sequences permute
//! the populations of the freshly polarized state before readout.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagate::{fmt_sig9, write_atomic};

/// Pulse sequences applied before a readout. `Pi` is the nonselective
/// electron flip (1↔3, 2↔4); `pi12` and `pi34` are selective nuclear flips.
/// Names list the pulses in the order they are applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sequence {
    None,
    Pi,
    Pi12,
    Pi34Pi,
    PiPi34,
    PiPi12,
}

impl Sequence {
    pub const CALIBRATION: [Sequence; 5] = [Self::None, Self::Pi, Self::Pi12, Self::Pi34Pi, Self::PiPi34];
    pub const POPULATION: [Sequence; 4] = [Self::None, Self::Pi12, Self::Pi, Self::PiPi12];

    pub fn label(self) -> &'static str {
        match self {
            Self::None => "N0",
            Self::Pi => "NPi",
            Self::Pi12 => "Npi12",
            Self::Pi34Pi => "Npi34Pi",
            Self::PiPi34 => "NPipi34",
            Self::PiPi12 => "NPipi12",
        }
    }

    /// Accepts labels with or without the leading `N`; `Pi` is the
    /// nonselective pulse and `pi` a selective one, so case matters.
    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let t = t.strip_prefix('N').unwrap_or(t);
        Ok(match t {
            "0" | "" => Self::None,
            "Pi" => Self::Pi,
            "pi12" => Self::Pi12,
            "pi34Pi" => Self::Pi34Pi,
            "Pipi34" => Self::PiPi34,
            "Pipi12" => Self::PiPi12,
            _ => return Err(Error::Parse(format!("unknown readout sequence {s:?}"))),
        })
    }

    /// Source level (0-based) of each level after the sequence: the
    /// populations become `p'_i = p_{σ(i)}`.
    fn source(self) -> [usize; 4] {
        match self {
            Self::None => [0, 1, 2, 3],
            Self::Pi => [2, 3, 0, 1],
            Self::Pi12 => [1, 0, 2, 3],
            Self::Pi34Pi => [3, 2, 0, 1],
            Self::PiPi34 => [2, 3, 1, 0],
            Self::PiPi12 => [3, 2, 0, 1],
        }
    }

    pub fn permute(self, p: &[f64; 4]) -> [f64; 4] {
        self.source().map(|j| p[j])
    }
}

/// PL rates and polarization of the initialized state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlCalibration {
    pub rates: [f64; 4],
    /// Population fraction in levels 1 and 2 (electron polarization).
    pub e: f64,
    /// Population fraction in levels 1 and 3 (nuclear polarization).
    pub n: f64,
}

impl PlCalibration {
    pub fn new(rates: [f64; 4], e: f64, n: f64) -> Result<Self> {
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(format!("PL rates must be positive, got {rates:?}")));
        }
        if !((0.0..=1.0).contains(&e) && (0.0..=1.0).contains(&n)) {
            return Err(Error::InvalidArgument(format!("polarizations must lie in [0, 1], got e = {e}, n = {n}")));
        }
        Ok(Self { rates, e, n })
    }

    /// Populations after initialization: `(en, e(1−n), (1−e)n, (1−e)(1−n))`.
    pub fn initial_populations(&self) -> [f64; 4] {
        initial_populations(self.e, self.n)
    }

    /// Signal of populations `p`.
    pub fn signal(&self, p: &[f64; 4]) -> f64 {
        p.iter().zip(&self.rates).map(|(a, b)| a * b).sum()
    }

    /// Calibration signals `[N⁰, N^Π, N^π12, N^π34Π, N^Ππ34]`.
    pub fn calibration_signals(&self) -> [f64; 5] {
        let p0 = self.initial_populations();
        Sequence::CALIBRATION.map(|s| self.signal(&s.permute(&p0)))
    }

    /// Population-readout signals `[N⁰, N^π12, N^Π, N^Ππ12]` of a state `p`.
    pub fn population_signals(&self, p: &[f64; 4]) -> [f64; 4] {
        Sequence::POPULATION.map(|s| self.signal(&s.permute(p)))
    }

    fn population_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        for (row, s) in Sequence::POPULATION.iter().enumerate() {
            for (i, j) in s.source().iter().enumerate() {
                m[(row, *j)] += self.rates[i];
            }
        }
        m
    }
}

fn initial_populations(e: f64, n: f64) -> [f64; 4] {
    [e * n, e * (1.0 - n), (1.0 - e) * n, (1.0 - e) * (1.0 - n)]
}

/// Rates recovered from calibration signals.
#[derive(Clone, Debug)]
pub struct RateSolution {
    pub calibration: PlCalibration,
    /// Euclidean norm of the least-squares residual.
    pub residual: f64,
}

fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    m.clone().svd(false, false).singular_values.iter().copied().collect()
}

/// Least-squares solution of the 5×4 calibration system for the rates,
/// given the electron polarization `e` and nuclear polarization `n`
/// (taken as 1 in practice).
pub fn solve_pl_rates(measured: &[f64; 5], e: f64, n: f64) -> Result<RateSolution> {
    if !(e > 0.5 && e <= 1.0) {
        return Err(Error::RankDeficient(format!(
            "electron polarization must lie in (1/2, 1], got {e}; at e = 1/2 the Π sequences duplicate the reference rows"
        )));
    }
    if !(0.0..=1.0).contains(&n) {
        return Err(Error::InvalidArgument(format!("nuclear polarization must lie in [0, 1], got {n}")));
    }
    if measured.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("measurements must be finite".into()));
    }
    let p0 = initial_populations(e, n);
    let a = DMatrix::from_fn(5, 4, |r, c| Sequence::CALIBRATION[r].permute(&p0)[c]);
    let sv = singular_values(&a);
    let (smax, smin) = (sv.iter().cloned().fold(0.0, f64::max), sv.iter().cloned().fold(f64::INFINITY, f64::min));
    if smin <= 1e-12 * smax {
        return Err(Error::RankDeficient(format!("calibration matrix is rank-deficient at e = {e}, n = {n}")));
    }
    let b = DVector::from_column_slice(measured);
    let x = a.clone().svd(true, true).solve(&b, 1e-14 * smax).map_err(|m| Error::Singular(m.to_string()))?;
    let residual = (&a * &x - &b).norm();
    let rates = [x[0], x[1], x[2], x[3]];
    Ok(RateSolution { calibration: PlCalibration { rates, e, n }, residual })
}

/// Raw populations from the four readout signals
/// `[N⁰, N^π12, N^Π, N^Ππ12]`; no clipping or renormalization.
pub fn solve_populations(cal: &PlCalibration, measured: &[f64; 4]) -> Result<[f64; 4]> {
    if measured.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("measurements must be finite".into()));
    }
    let m = cal.population_matrix();
    let sv = singular_values(&m);
    let (smax, smin) = (sv.iter().cloned().fold(0.0, f64::max), sv.iter().cloned().fold(f64::INFINITY, f64::min));
    if !(smin > 1e-12 * smax) {
        return Err(Error::Singular(format!("population matrix is singular for rates {:?}", cal.rates)));
    }
    let x = m
        .lu()
        .solve(&DVector::from_column_slice(measured))
        .ok_or_else(|| Error::Singular("population matrix".into()))?;
    Ok([x[0], x[1], x[2], x[3]])
}

/// Clips to `[0, 1]` and renormalizes to unit sum; also returns the total
/// amount removed or added by clipping.
pub fn normalize_populations(p: &[f64; 4]) -> Result<([f64; 4], f64)> {
    let clipped = p.map(|v| v.clamp(0.0, 1.0));
    let amount: f64 = p.iter().zip(&clipped).map(|(a, b)| (a - b).abs()).sum();
    let total: f64 = clipped.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("no positive population left after clipping".into()));
    }
    Ok((clipped.map(|v| v / total), amount))
}

/// Reads `(sequence, counts)` rows from CSV with a header line.
pub fn read_measurements(path: impl AsRef<Path>) -> Result<Vec<(Sequence, f64)>> {
    let mut reader = csv::Reader::from_path(path.as_ref()).map_err(|e| Error::Parse(e.to_string()))?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse(e.to_string()))?;
        if row.len() != 2 {
            return Err(Error::Parse(format!("expected 2 columns, found {}", row.len())));
        }
        let seq = Sequence::parse(&row[0])?;
        let counts: f64 = row[1].trim().parse().map_err(|_| Error::Parse(format!("bad count {:?}", &row[1])))?;
        out.push((seq, counts));
    }
    Ok(out)
}

/// Picks the signals of `order` out of labelled measurements.
pub fn select<const N: usize>(rows: &[(Sequence, f64)], order: [Sequence; N]) -> Result<[f64; N]> {
    let mut out = [0.0; N];
    for (slot, seq) in out.iter_mut().zip(order) {
        let mut hits = rows.iter().filter(|(s, _)| *s == seq);
        *slot = match (hits.next(), hits.next()) {
            (Some((_, v)), None) => *v,
            (None, _) => return Err(Error::Parse(format!("missing measurement {}", seq.label()))),
            _ => return Err(Error::Parse(format!("duplicate measurement {}", seq.label()))),
        };
    }
    Ok(out)
}

/// Writes populations as `level,population` CSV.
pub fn write_populations(path: impl AsRef<Path>, p: &[f64; 4]) -> Result<()> {
    const LEVELS: [&str; 4] = ["0,1", "0,0", "-1,1", "-1,0"];
    let mut out = String::from("level,population\n");
    for (l, v) in LEVELS.iter().zip(p) {
        out.push_str(&format!("\"|{l}>\",{}\n", fmt_sig9(*v)));
    }
    write_atomic(path.as_ref(), out.as_bytes())
}
