//! Minimum gate times for single-qubit rotations at ν₁ = 5 MHz, across
//! detunings and control spaces, next to the reference values.

use std::f64::consts::PI;
use std::time::Instant;

use brachist::single::{solve, RotationTarget, SingleControlSpace};

const NU1: f64 = 5.0;

fn main() -> brachist::Result<()> {
    use SingleControlSpace::{Full, Transverse};
    let z = |t: f64| RotationTarget::z(t);
    let x = |t: f64| RotationTarget::x(t);
    #[rustfmt::skip]
    let rows: Vec<(f64, SingleControlSpace, &str, RotationTarget, f64)> = vec![
        (0.0, Transverse, "R(z, pi/2)", z(PI / 2.0), 132.3),
        (0.0, Transverse, "R(z, 5pi/4)", z(5.0 * PI / 4.0), 156.1),
        (0.0, Transverse, "R(z, 7pi/4)", z(7.0 * PI / 4.0), 96.8),
        (0.3, Full, "R(z, pi/2)", z(PI / 2.0), 38.5),
        (0.3, Full, "R(z, 5pi/4)", z(5.0 * PI / 4.0), 96.2),
        (0.3, Full, "R(z, 7pi/4)", z(7.0 * PI / 4.0), 35.7),
        (0.3, Full, "R(x, pi/4)", x(PI / 4.0), 26.1),
        (0.3, Full, "R(x, pi/2)", x(PI / 2.0), 51.9),
        (0.3, Transverse, "R(z, pi/2)", z(PI / 2.0), 92.0),
        (0.3, Transverse, "R(z, 5pi/4)", z(5.0 * PI / 4.0), 158.1),
        (0.3, Transverse, "R(z, 7pi/4)", z(7.0 * PI / 4.0), 152.7),
        (0.3, Transverse, "R(x, pi/4)", x(PI / 4.0), 63.2),
        (0.3, Transverse, "R(x, pi/2)", x(PI / 2.0), 59.6),
        (1.1, Full, "R(z, pi/2)", z(PI / 2.0), 23.8),
        (1.1, Full, "R(z, 5pi/4)", z(5.0 * PI / 4.0), 59.5),
        (1.1, Full, "R(z, 7pi/4)", z(7.0 * PI / 4.0), 83.3),
        (1.1, Full, "R(x, pi/4)", x(PI / 4.0), 95.4),
        (1.1, Full, "R(x, pi/2)", x(PI / 2.0), 96.0),
        (1.1, Transverse, "R(z, pi/2)", z(PI / 2.0), 41.5),
        (1.1, Transverse, "R(z, 5pi/4)", z(5.0 * PI / 4.0), 92.9),
        (1.1, Transverse, "R(z, 7pi/4)", z(7.0 * PI / 4.0), 121.6),
        (1.1, Transverse, "R(x, pi/4)", x(PI / 4.0), 122.9),
        (1.1, Transverse, "R(x, pi/2)", x(PI / 2.0), 111.7),
    ];

    println!(
        "{:>5}  {:<10}  {:<12}  {:>8}  {:>8}  {:>12}  {:>9}",
        "d/nu1", "space", "target", "T (ns)", "ref.", "fidelity", "time"
    );
    for (ratio, space, label, target, measured) in rows {
        let start = Instant::now();
        let sol = solve(&target, ratio * NU1, NU1, space)?;
        let space = if space == Full { "Sx,Sy,Sz" } else { "Sx,Sy" };
        println!(
            "{ratio:>5.1}  {space:<10}  {label:<12}  {:>8.1}  {measured:>8.1}  {:>12.10}  {:>9.1?}",
            sol.duration * 1e3,
            sol.fidelity,
            start.elapsed()
        );
    }
    Ok(())
}
