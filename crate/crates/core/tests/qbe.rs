use std::f64::consts::PI;

use brachist::nv::RotatingFrameModel;
use brachist::propagate::{final_unitary, DEFAULT_SUBSTEPS};
use brachist::qbe::{
    integrate_qbe, selective_pulse_baseline, synthesize, ControlSpaceSpec, Metric, PenaltyConfig, QbeState,
    ShootingConfig,
};
use brachist::quantum::{controlled_u, gate_fidelity, phase_corrected_fidelity, Operator};
use brachist::single::{solve, RotationTarget, SingleControlSpace};
use proptest::prelude::*;

const NU1: f64 = 5.0;

fn single_qubit_case(target: RotationTarget, delta: f64) {
    let model = RotatingFrameModel::single_qubit(delta);
    let spec = ControlSpaceSpec::transverse(&model, NU1).unwrap();
    let reference = solve(&target, delta, NU1, SingleControlSpace::Transverse).unwrap();
    let (_, sol) =
        synthesize(&model, &target.unitary(), &spec, &PenaltyConfig::new(NU1), &ShootingConfig::default(), 0.1)
            .unwrap();
    assert!(
        (sol.duration - reference.duration).abs() < 5e-4,
        "{target:?} at δ = {delta}: {} vs {}",
        sol.duration,
        reference.duration
    );
    assert!(sol.achieved_fidelity >= 0.9999);
    assert!(sol.max_constraint_residual < 1e-6);
    assert!(sol.max_norm_residual < 1e-6);
    let u = final_unitary(&model, &sol.protocol, DEFAULT_SUBSTEPS).unwrap();
    assert!((gate_fidelity(&u, &target.unitary()).unwrap() - sol.achieved_fidelity).abs() < 1e-9);
}

#[test]
fn matches_closed_form_z_rotation() {
    single_qubit_case(RotationTarget::z(PI / 2.0), 1.5);
}

#[test]
fn matches_closed_form_at_large_detuning() {
    single_qubit_case(RotationTarget::z(PI / 2.0), 5.5);
}

#[test]
fn matches_general_axis_solver() {
    single_qubit_case(RotationTarget::x(PI / 2.0), 1.5);
}

#[test]
fn selective_pulse_is_controlled_u_up_to_subspace_phases() {
    let p = selective_pulse_baseline(-2.16, 1, 2).unwrap();
    assert!((p.duration * 1e3 - 612.4).abs() < 0.1);
    let model = RotatingFrameModel::two_qubit(-2.16);
    let u = final_unitary(&model, &p.protocol, DEFAULT_SUBSTEPS).unwrap();
    assert!(phase_corrected_fidelity(&u, &controlled_u()).unwrap() >= 0.999);
}

#[test]
fn rejects_empty_step_limits() {
    let model = RotatingFrameModel::single_qubit(0.0);
    let spec = ControlSpaceSpec::transverse(&model, NU1).unwrap();
    let shooting = ShootingConfig { duration_step_limits: Vec::new(), ..ShootingConfig::default() };
    let target = RotationTarget::z(PI / 2.0).unitary();
    assert!(synthesize(&model, &target, &spec, &PenaltyConfig::new(NU1), &shooting, 0.1).is_err());
}

fn costate() -> impl Strategy<Value = (Vec<f64>, [f64; 2], f64)> {
    (prop::collection::vec(-20.0..20.0f64, 13), (0.0..(2.0 * PI)).prop_map(|p| [p.cos(), p.sin()]), 0.05..0.6f64)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn costate_norm_is_conserved((lambdas, dir, t) in costate(), q in 2.0..2000.0f64) {
        let model = RotatingFrameModel::two_qubit(-2.16);
        let spec = ControlSpaceSpec::transverse(&model, 2.5).unwrap();
        let hc0: Operator = model.control(dir[0], dir[1], 0.0);
        let state = QbeState { hc0: hc0.scale(spec.e / hc0.norm()), lambda0: 1.0, lambdas, duration: t };
        for metric in [Metric::Exact, Metric::Penalized(q)] {
            let flow = integrate_qbe(&model, &spec, &state, 1000, metric).unwrap();
            let f0 = flow.f_norms[0];
            prop_assert!(flow.f_norms.iter().all(|n| ((n - f0) / f0).abs() < 1e-9));
            prop_assert!(flow.u_final.is_unitary(1e-9));
            if metric == Metric::Exact {
                prop_assert!(flow.constraint_residuals.iter().all(|r| *r < 1e-6));
                prop_assert!(flow.norm_residuals.iter().all(|r| *r < 1e-6));
            }
        }
    }
}
