//! Time-optimal z rotations against the Euler sequence
//! `R(x, π/2) R(y, θ) R(x, −π/2)` at zero detuning, with the time at which
//! an equatorial state first reaches its rotated image.

use brachist::cli::crossing_time;
use brachist::nv::RotatingFrameModel;
use brachist::single::{euler_baseline, solve, RotationTarget, SingleControlSpace};

fn main() -> brachist::Result<()> {
    let nu1 = 5.0;
    let model = RotatingFrameModel::single_qubit(0.0);
    println!("theta/pi   toc_ns  euler_ns  toc_cross_ns  euler_cross_ns");
    for k in 1..=8 {
        let theta = std::f64::consts::PI * k as f64 / 8.0;
        let toc = solve(&RotationTarget::z(theta), 0.0, nu1, SingleControlSpace::Transverse)?;
        let euler = euler_baseline(theta, nu1)?;
        let cross = |p| crossing_time(&model, p, theta).map(|t| t.map_or(f64::NAN, |t| t * 1e3));
        println!(
            "{:8.3} {:8.1} {:9.1} {:13.3} {:15.3}",
            k as f64 / 8.0,
            toc.duration * 1e3,
            euler.duration() * 1e3,
            cross(&toc.protocol)?,
            cross(&euler)?
        );
    }
    Ok(())
}
