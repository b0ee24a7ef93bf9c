use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::propagate::ControlProtocol;

/// A weak resonant pulse that rotates the `m_I = 0` transition by
/// `(2k₁+1)π` while the detuned `m_I = 1` transition completes `k₂` full
/// cycles.
#[derive(Clone, Debug, PartialEq)]
pub struct SelectivePulse {
    /// Drive amplitude solving both conditions exactly (MHz).
    pub nu1: f64,
    pub duration: f64,
    pub protocol: ControlProtocol,
}

/// Solves `ν₁T = (2k₁+1)/2` and `√(ν₁² + A²) T = k₂`:
/// `T = √(k₂² − (2k₁+1)²/4)/|A|`. The pulse is a y-axis drive resonant with
/// the `m_I = 0` transition (frequency `−A/2` in the two-qubit frame).
pub fn selective_pulse_baseline(a_mhz: f64, k1: u32, k2: u32) -> Result<SelectivePulse> {
    if !(a_mhz.is_finite() && a_mhz != 0.0) {
        return Err(Error::InvalidArgument(format!("hyperfine coupling must be nonzero, got {a_mhz}")));
    }
    let odd = (2 * k1 + 1) as f64;
    let k2f = k2 as f64;
    let disc = k2f * k2f - odd * odd / 4.0;
    if k2 == 0 || !(disc > 0.0) {
        return Err(Error::InvalidArgument(format!("infeasible selective pulse (k1 = {k1}, k2 = {k2})")));
    }
    let duration = disc.sqrt() / a_mhz.abs();
    let nu1 = odd / (2.0 * duration);
    let protocol = ControlProtocol::linear_phase(nu1, -a_mhz / 2.0, PI / 2.0, duration);
    Ok(SelectivePulse { nu1, duration, protocol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nv::RotatingFrameModel;
    use crate::propagate::final_unitary;
    use crate::quantum::{controlled_u, phase_corrected_fidelity};

    #[test]
    fn durations() {
        let p = selective_pulse_baseline(-2.16, 1, 2).unwrap();
        assert!((p.duration - 1.75f64.sqrt() / 2.16).abs() < 1e-15);
        assert!((p.duration - 0.6124).abs() < 1e-4);
        let p = selective_pulse_baseline(-2.16, 0, 1).unwrap();
        assert!((p.duration - 0.75f64.sqrt() / 2.16).abs() < 1e-15);
        assert!((p.nu1 * p.duration - 0.5).abs() < 1e-15);
    }

    #[test]
    fn infeasible() {
        assert!(selective_pulse_baseline(-2.16, 1, 1).is_err());
        assert!(selective_pulse_baseline(-2.16, 0, 0).is_err());
        assert!(selective_pulse_baseline(0.0, 0, 1).is_err());
    }

    #[test]
    fn realizes_the_conditional_flip() {
        for (k1, k2) in [(0, 1), (1, 2)] {
            let p = selective_pulse_baseline(-2.16, k1, k2).unwrap();
            let model = RotatingFrameModel::two_qubit(-2.16);
            let u = final_unitary(&model, &p.protocol, 16).unwrap();
            let f = phase_corrected_fidelity(&u, &controlled_u()).unwrap();
            assert!(f > 0.999, "(k1, k2) = ({k1}, {k2}): {f}");
        }
    }
}
