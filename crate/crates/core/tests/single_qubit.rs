use std::f64::consts::PI;

use brachist::nv::RotatingFrameModel;
use brachist::propagate::{final_unitary, DEFAULT_SUBSTEPS};
use brachist::quantum::gate_fidelity;
use brachist::single::{
    branch_duration, branch_threshold, euler_baseline, solve, solve_general, solve_z_rotation, Branch,
    GeneralSolverOptions, RotationTarget, SingleControlSpace,
};
use proptest::prelude::*;

const NU1: f64 = 5.0;

/// Fidelity of a solution's protocol, propagated independently of the solver.
fn propagated(target: &RotationTarget, delta: f64, protocol: &brachist::propagate::ControlProtocol) -> f64 {
    let u = final_unitary(&RotatingFrameModel::single_qubit(delta), protocol, DEFAULT_SUBSTEPS).unwrap();
    gate_fidelity(&u, &target.unitary()).unwrap()
}

fn axis() -> impl Strategy<Value = [f64; 3]> {
    (0.0..PI, 0.0..(2.0 * PI)).prop_map(|(g, p)| [g.sin() * p.cos(), g.sin() * p.sin(), g.cos()])
}

#[test]
fn resonant_reduction() {
    // Resonant drive: T = √(u(2 − u))/ν₁ up to θ = π and √(1 − u²)/ν₁ beyond,
    // with u = θ/2π.
    for k in 1..64 {
        let theta = 2.0 * PI * k as f64 / 64.0;
        let u = theta / (2.0 * PI);
        let want = if theta < PI { (u * (2.0 - u)).sqrt() } else { (1.0 - u * u).sqrt() } / NU1;
        let got = solve_z_rotation(theta, 0.0, NU1).unwrap().duration;
        assert!((got - want).abs() < 1e-14, "θ = {theta}: {got} vs {want}");
    }
}

#[test]
fn branch_continuity() {
    for ratio in [0.0, 0.3, 1.1] {
        let delta = ratio * NU1;
        let th = branch_threshold(delta, NU1);
        let (a, _) = branch_duration(th, delta, NU1, Branch::BelowThreshold).unwrap();
        let (b, _) = branch_duration(th, delta, NU1, Branch::AboveThreshold).unwrap();
        assert!((a - b).abs() < 1e-12, "δ/ν₁ = {ratio}: {a} vs {b}");
        if th < 2.0 * PI {
            assert_eq!(solve_z_rotation(th, delta, NU1).unwrap().branch, Branch::AboveThreshold);
        }
    }
}

#[test]
fn toc_beats_euler_on_a_dense_grid() {
    for k in 1..=2048 {
        let theta = PI * k as f64 / 2048.0;
        let toc = solve_z_rotation(theta, 0.0, NU1).unwrap().duration;
        let euler = euler_baseline(theta, NU1).unwrap().duration();
        assert!(toc < euler, "θ = {theta}: {toc} ≥ {euler}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn general_solver_agrees_with_closed_form(theta in 0.2..(2.0 * PI - 0.2), delta in 0.0..6.0f64) {
        let closed = solve_z_rotation(theta, delta, NU1).unwrap();
        let general = solve_general(&RotationTarget::z(theta), delta, NU1, &GeneralSolverOptions::default()).unwrap();
        prop_assert!((closed.duration - general.duration).abs() < 1e-4);
    }

    #[test]
    fn transverse_solutions_reach_their_targets(theta in 0.2..(2.0 * PI - 0.2), n in axis(), delta in -6.0..6.0f64) {
        let target = RotationTarget::new(theta, n).unwrap();
        let sol = solve(&target, delta, NU1, SingleControlSpace::Transverse).unwrap();
        prop_assert!(propagated(&target, delta, &sol.protocol) >= 0.9999);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn full_space_is_never_slower(theta in 0.05..(2.0 * PI - 0.05), n in axis(), delta in -6.0..6.0f64) {
        let target = RotationTarget::new(theta, n).unwrap();
        let full = solve(&target, delta, NU1, SingleControlSpace::Full).unwrap();
        prop_assert!(propagated(&target, delta, &full.protocol) >= 0.9999);
        if target.is_z() {
            let transverse = solve_z_rotation(theta, delta, NU1).unwrap();
            prop_assert!(full.duration <= transverse.duration + 1e-12);
        }
    }

    #[test]
    fn closed_form_reaches_target(theta in 0.01..(2.0 * PI - 0.01), delta in -10.0..10.0f64) {
        let target = RotationTarget::z(theta);
        let sol = solve_z_rotation(theta, delta, NU1).unwrap();
        prop_assert!(propagated(&target, delta, &sol.protocol) >= 1.0 - 1e-9);
    }
}
