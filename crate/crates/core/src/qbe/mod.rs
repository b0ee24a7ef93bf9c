//! Time-optimal gate synthesis with the quantum brachistochrone equation.
//!
//! The pipeline is: optimize piecewise-constant controls under a penalized
//! norm (cheap, tolerant of a bad start), read the costate off the optimum,
//! then shoot on the brachistochrone flow while the penalty weight grows, and
//! finish with the forbidden directions excluded exactly.

mod flow;
mod penalty;
mod selective;
mod shoot;
mod space;

pub use flow::{integrate_qbe, Metric, QbeFlow, QbeState, MIN_STEPS};
pub use penalty::{optimize_fixed_time, optimize_penalty, refine_fixed_time, PenaltyConfig, PenaltySolution};
pub use selective::{selective_pulse_baseline, SelectivePulse};
pub use shoot::{
    costate_from_unitaries, phase_aligned_difference, shoot_qbe, QbeSolution, ShootRecord, ShootingConfig,
};
pub use space::{complement, traceless_basis, ControlSpaceSpec};

use crate::error::Result;
use crate::nv::RotatingFrameModel;
use crate::quantum::Operator;

/// Penalty optimization followed by shooting from the extracted guess. If
/// shooting fails, the penalty stage is repeated at the larger weights of the
/// homotopy schedule; the first error is returned when every weight fails.
pub fn synthesize(
    model: &RotatingFrameModel,
    target: &Operator,
    spec: &ControlSpaceSpec,
    penalty: &PenaltyConfig,
    shooting: &ShootingConfig,
    t_init: f64,
) -> Result<(PenaltySolution, QbeSolution)> {
    let weights =
        std::iter::once(penalty.q).chain(penalty.homotopy_schedule.iter().copied().filter(|q| *q > penalty.q));
    let mut first_error = None;
    for q in weights {
        let cfg = PenaltyConfig { q, ..penalty.clone() };
        let guess = optimize_penalty(model, target, spec, &cfg, t_init)?;
        match shoot_qbe(model, target, spec, &guess.guess, guess.metric, shooting) {
            Ok(sol) => return Ok((guess, sol)),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    Err(first_error.expect("at least one penalty weight"))
}
