//! Photoluminescence readout: calibrate the four level brightnesses from
//! five sequences, then turn four readout signals into level populations.

use brachist::readout::{normalize_populations, solve_pl_rates, solve_populations, PlCalibration, Sequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> brachist::Result<()> {
    let (rates, e) = ([100.0, 90.0, 60.0, 55.0], 0.95);
    let truth = PlCalibration::new(rates, e, 1.0)?;
    let p = [0.95, 0.0, 0.05, 0.0];

    let exact = solve_pl_rates(&truth.calibration_signals(), e, 1.0)?;
    println!("exact signals: rates {:?}", exact.calibration.rates);

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let z = Normal::new(0.0, 0.01).expect("valid spread");
    let mut noisy = |v: &mut [f64]| v.iter_mut().for_each(|x| *x *= 1.0 + z.sample(&mut rng));
    let mut cal = truth.calibration_signals();
    noisy(&mut cal);
    let sol = solve_pl_rates(&cal, e, 1.0)?;
    println!("1% noise: rates {:.2?}, residual {:.2e}", sol.calibration.rates, sol.residual);

    let mut signals = truth.population_signals(&p);
    for (s, v) in Sequence::POPULATION.iter().zip(signals) {
        println!("  {:5} {v:.3}", s.label());
    }
    noisy(&mut signals);
    let raw = solve_populations(&sol.calibration, &signals)?;
    let (q, clipped) = normalize_populations(&raw)?;
    println!("populations {:.3?} (true {p:?}), clipped mass {clipped:.3}", q);
    Ok(())
}
