//! Time-optimal controlled-U gate on the electron-nuclear pair, compared
//! with a frequency-selective pulse. Pass a path to save the pulse as JSON.
//!
//!     cargo run --release --example controlled_gate -- uc.json

use std::time::Instant;

use brachist::nv::RotatingFrameModel;
use brachist::propagate::{final_unitary, DEFAULT_SUBSTEPS};
use brachist::pulse::PulseFile;
use brachist::qbe::{selective_pulse_baseline, synthesize, ControlSpaceSpec, PenaltyConfig, ShootingConfig};
use brachist::quantum::{controlled_u, phase_corrected_fidelity};

fn main() -> brachist::Result<()> {
    let (a, nu1) = (-2.16, 2.5);
    let model = RotatingFrameModel::two_qubit(a);
    let spec = ControlSpaceSpec::transverse(&model, nu1)?;
    let target = controlled_u();

    let start = Instant::now();
    let penalty = PenaltyConfig::new(nu1);
    let shooting = ShootingConfig::default();
    let (guess, sol) = synthesize(&model, &target, &spec, &penalty, &shooting, 0.45)?;
    println!(
        "penalty stage (q = {}): T = {:.2} ns, fidelity {:.6}",
        guess.metric.q(),
        guess.duration * 1e3,
        guess.fidelity
    );
    for r in &sol.history {
        println!(
            "  iter {:3}  q = {:>6}  residual {:.3e}  T = {:.3} ns",
            r.iteration,
            r.q,
            r.residual,
            r.duration * 1e3
        );
    }
    println!(
        "brachistochrone: T = {:.2} ns, fidelity {:.10}, constraint residual {:.1e}, {:.1?}",
        sol.duration * 1e3,
        sol.achieved_fidelity,
        sol.max_constraint_residual,
        start.elapsed()
    );

    let sel = selective_pulse_baseline(a, 1, 2)?;
    let u = final_unitary(&model, &sel.protocol, DEFAULT_SUBSTEPS)?;
    println!(
        "selective pulse: T = {:.1} ns at nu1 = {:.3} MHz, fidelity up to subspace phases {:.10}",
        sel.duration * 1e3,
        sel.nu1,
        phase_corrected_fidelity(&u, &target)?
    );

    if let Some(path) = std::env::args().nth(1) {
        PulseFile::new(&model, nu1, &sol.protocol, &target, "controlled-u", "qbe")?.write(&path)?;
        println!("wrote {path}");
    }
    Ok(())
}
