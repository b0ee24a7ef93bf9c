//! Versioned JSON pulse files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nv::{FrameKind, RotatingFrameModel};
use crate::propagate::{final_unitary, write_atomic, ControlProtocol, ControlSample, Segment, DEFAULT_SUBSTEPS};
use crate::quantum::{gate_fidelity, Operator};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseFile {
    pub schema_version: String,
    pub model: ModelSpec,
    pub protocol: ProtocolSpec,
    pub metadata: Metadata,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub drift: Drift,
    pub nu1_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_mw_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_rf_mhz: Option<f64>,
}

/// Drift term of the rotating-frame Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Drift {
    /// `2π δ S_z`.
    SingleQubit { delta_mhz: f64 },
    /// `2π A S_z I_z`.
    TwoQubit { a_mhz: f64 },
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub duration_us: f64,
    pub nu_x: f64,
    pub nu_y: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub nu_z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolSpec {
    Parametric {
        nu1_mhz: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        nu_z_mhz: f64,
        eta_mhz: f64,
        phi0_rad: f64,
        #[serde(rename = "T_us")]
        t_us: f64,
    },
    Sampled {
        dt_us: f64,
        nu_x: Vec<f64>,
        nu_y: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nu_z: Option<Vec<f64>>,
    },
    Segments {
        segments: Vec<SegmentSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub target: String,
    pub solver: String,
    pub achieved_fidelity: f64,
    #[serde(rename = "T_us")]
    pub t_us: f64,
}

impl From<&ControlProtocol> for ProtocolSpec {
    fn from(p: &ControlProtocol) -> Self {
        match p {
            ControlProtocol::LinearPhase { nu1, nu_z, eta, phi0, duration } => {
                Self::Parametric { nu1_mhz: *nu1, nu_z_mhz: *nu_z, eta_mhz: *eta, phi0_rad: *phi0, t_us: *duration }
            }
            ControlProtocol::Sampled { dt, samples } => {
                let z: Vec<f64> = samples.iter().map(|s| s.nu_z).collect();
                Self::Sampled {
                    dt_us: *dt,
                    nu_x: samples.iter().map(|s| s.nu_x).collect(),
                    nu_y: samples.iter().map(|s| s.nu_y).collect(),
                    nu_z: z.iter().any(|v| *v != 0.0).then_some(z),
                }
            }
            ControlProtocol::Segments(segs) => Self::Segments {
                segments: segs
                    .iter()
                    .map(|s| SegmentSpec {
                        duration_us: s.duration,
                        nu_x: s.control.nu_x,
                        nu_y: s.control.nu_y,
                        nu_z: s.control.nu_z,
                    })
                    .collect(),
            },
        }
    }
}

impl ProtocolSpec {
    pub fn to_protocol(&self) -> Result<ControlProtocol> {
        let p = match self {
            Self::Parametric { nu1_mhz, nu_z_mhz, eta_mhz, phi0_rad, t_us } => ControlProtocol::LinearPhase {
                nu1: *nu1_mhz,
                nu_z: *nu_z_mhz,
                eta: *eta_mhz,
                phi0: *phi0_rad,
                duration: *t_us,
            },
            Self::Sampled { dt_us, nu_x, nu_y, nu_z } => {
                let n = nu_x.len();
                if nu_y.len() != n || nu_z.as_ref().is_some_and(|z| z.len() != n) {
                    return Err(Error::InvalidProtocol("sample arrays differ in length".into()));
                }
                let samples = (0..n)
                    .map(|i| ControlSample { nu_x: nu_x[i], nu_y: nu_y[i], nu_z: nu_z.as_ref().map_or(0.0, |z| z[i]) })
                    .collect();
                ControlProtocol::Sampled { dt: *dt_us, samples }
            }
            Self::Segments { segments } => ControlProtocol::Segments(
                segments
                    .iter()
                    .map(|s| Segment {
                        duration: s.duration_us,
                        control: ControlSample { nu_x: s.nu_x, nu_y: s.nu_y, nu_z: s.nu_z },
                    })
                    .collect(),
            ),
        };
        p.validate()?;
        Ok(p)
    }
}

impl PulseFile {
    /// Records `protocol` for `model` with `achieved_fidelity` against
    /// `target`, computed by propagation.
    pub fn new(
        model: &RotatingFrameModel,
        nu1: f64,
        protocol: &ControlProtocol,
        target: &Operator,
        target_label: &str,
        solver: &str,
    ) -> Result<Self> {
        let u = final_unitary(model, protocol, DEFAULT_SUBSTEPS)?;
        let drift = match model.kind {
            FrameKind::SingleQubit { delta0_mhz } => Drift::SingleQubit { delta_mhz: delta0_mhz },
            FrameKind::TwoQubit { a_mhz } => Drift::TwoQubit { a_mhz },
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION.to_string(),
            model: ModelSpec { drift, nu1_mhz: nu1, f_mw_mhz: model.f_mw_mhz, f_rf_mhz: model.f_rf_mhz },
            protocol: protocol.into(),
            metadata: Metadata {
                target: target_label.to_string(),
                solver: solver.to_string(),
                achieved_fidelity: gate_fidelity(&u, target)?,
                t_us: protocol.duration(),
            },
        })
    }

    pub fn model(&self) -> RotatingFrameModel {
        let mut m = match self.model.drift {
            Drift::SingleQubit { delta_mhz } => RotatingFrameModel::single_qubit(delta_mhz),
            Drift::TwoQubit { a_mhz } => RotatingFrameModel::two_qubit(a_mhz),
        };
        m.f_mw_mhz = self.model.f_mw_mhz;
        m.f_rf_mhz = self.model.f_rf_mhz;
        m
    }

    pub fn protocol(&self) -> Result<ControlProtocol> {
        self.protocol.to_protocol()
    }

    /// Checks the schema version, the protocol, and the recorded duration.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!(
                "unsupported schema version {:?} (expected {SCHEMA_VERSION:?})",
                self.schema_version
            )));
        }
        let p = self.protocol()?;
        if (p.duration() - self.metadata.t_us).abs() > 1e-9 * p.duration().max(1.0) {
            return Err(Error::Parse(format!(
                "metadata T_us = {} disagrees with the protocol duration {}",
                self.metadata.t_us,
                p.duration()
            )));
        }
        if !(0.0..=1.0 + 1e-12).contains(&self.metadata.achieved_fidelity) {
            return Err(Error::Parse("achieved_fidelity outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json()?.as_bytes())
    }
}
