//! Finds the detuning spread at which the time-optimal controlled-U pulse
//! drops to a mean average gate fidelity of 0.9933. Pass a pulse file to
//! skip synthesis.
//!
//!     cargo run --release --example controlled_gate -- uc.json
//!     cargo run --release --example noise_calibration -- uc.json

use brachist::characterization::{calibrate_sigma_delta, NoiseModel};
use brachist::nv::RotatingFrameModel;
use brachist::propagate::ControlProtocol;
use brachist::pulse::PulseFile;
use brachist::qbe::{synthesize, ControlSpaceSpec, PenaltyConfig, ShootingConfig};
use brachist::quantum::controlled_u;

fn load_or_synthesize() -> brachist::Result<(RotatingFrameModel, ControlProtocol)> {
    if let Some(path) = std::env::args().nth(1) {
        let f = PulseFile::read(&path)?;
        return Ok((f.model(), f.protocol()?));
    }
    let model = RotatingFrameModel::two_qubit(-2.16);
    let spec = ControlSpaceSpec::transverse(&model, 2.5)?;
    let (_, sol) =
        synthesize(&model, &controlled_u(), &spec, &PenaltyConfig::new(2.5), &ShootingConfig::default(), 0.45)?;
    Ok((model, sol.protocol))
}

fn main() -> brachist::Result<()> {
    let (model, protocol) = load_or_synthesize()?;
    println!("pulse length {:.1} ns", protocol.duration() * 1e3);
    let template = NoiseModel::new(0.0, 0.0, 200, 0);
    let cal = calibrate_sigma_delta(&model, &protocol, &controlled_u(), &template, 0.9933, 1.0, 1e-5)?;
    for (s, f) in &cal.sweep {
        println!("  sigma_delta {s:.4} MHz  mean F_a {f:.6}");
    }
    println!(
        "sigma_delta = {:.4} MHz gives F_a = {:.5} +/- {:.5}",
        cal.sigma_delta, cal.mean_fidelity, cal.std_fidelity
    );
    Ok(())
}
