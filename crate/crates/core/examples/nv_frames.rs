//! Transition frequencies of the default NV parameters, the rotating frames
//! built from them, and a check of the rotating-wave approximation against
//! the lab-frame 9-level model.

use brachist::nv::{lab_frame_propagator, qubit_subspace_indices, single_qubit_frame, two_qubit_frame, NvParameters};
use brachist::propagate::{final_unitary, ControlProtocol, DEFAULT_SUBSTEPS};

fn main() -> brachist::Result<()> {
    let p = NvParameters::default();
    println!("omega_S = {:.3} MHz, omega_I = {:.4} MHz", p.omega_s(), p.omega_i());
    let f_res = p.single_qubit_resonance();
    println!("electron resonance at m_I = +1: {f_res:.3} MHz");
    let two = two_qubit_frame(&p);
    println!("two-qubit frame: f_MW = {:.3} MHz, f_RF = {:.4} MHz", two.f_mw_mhz.unwrap(), two.f_rf_mhz.unwrap());
    for offset in [0.0, 1.5] {
        let frame = single_qubit_frame(&p, f_res + offset);
        println!("f_MW = resonance + {offset} MHz gives delta0 = {:.3} MHz", frame.delta0().unwrap() + 0.0);
    }

    // A π pulse on resonance, simulated both ways. The lab-frame result is
    // compared after removing the free evolution of the two qubit levels.
    let (nu1, duration) = (2.0, 0.25);
    let rwa = final_unitary(
        &single_qubit_frame(&p, f_res),
        &ControlProtocol::linear_phase(nu1, 0.0, 0.0, duration),
        DEFAULT_SUBSTEPS,
    )?;
    let steps = (duration * f_res * 200.0) as usize;
    let lab = lab_frame_propagator(&p, nu1, f_res, 0.0, duration, steps)?;
    let idx = qubit_subspace_indices();
    let (a, b) = (idx[0], idx[2]);
    println!(
        "transfer |0,1> -> |-1,1>: rotating frame {:.6}, lab frame {:.6}",
        rwa[(1, 0)].norm_sqr(),
        lab[(b, a)].norm_sqr()
    );
    Ok(())
}
