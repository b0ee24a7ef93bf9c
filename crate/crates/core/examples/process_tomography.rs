//! Process tomography of a controlled-U pulse, with and without
//! quasi-static detuning noise. The pulse is read from the first argument,
//! or is the frequency-selective baseline. A second argument is a prefix
//! for the χ CSV files.
//!
//!     cargo run --release --example process_tomography -- uc.json chi

use brachist::characterization::{average_gate_fidelity, noise_averaged_process, simulate_qpt, NoiseModel, Process};
use brachist::nv::RotatingFrameModel;
use brachist::propagate::{final_unitary, DEFAULT_SUBSTEPS};
use brachist::pulse::PulseFile;
use brachist::qbe::selective_pulse_baseline;
use brachist::quantum::{controlled_u, phase_corrected_fidelity};

fn main() -> brachist::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (model, protocol) = match args.first() {
        Some(path) => {
            let f = PulseFile::read(path)?;
            (f.model(), f.protocol()?)
        }
        None => (RotatingFrameModel::two_qubit(-2.16), selective_pulse_baseline(-2.16, 1, 2)?.protocol),
    };
    let target = controlled_u();
    let u = final_unitary(&model, &protocol, DEFAULT_SUBSTEPS)?;

    let chi = simulate_qpt(&Process::Unitary(u.clone()), 4)?;
    println!(
        "noiseless: F_a = {:.6}, gate fidelity up to subspace phases {:.6}, chi rank {}",
        average_gate_fidelity(&chi, &target)?,
        phase_corrected_fidelity(&u, &target)?,
        chi.rank(1e-9)
    );

    let noise = NoiseModel::new(0.1, 0.0, 200, 0);
    let noisy = simulate_qpt(&noise_averaged_process(&model, &protocol, &noise)?, 4)?;
    println!(
        "sigma_delta = 0.1 MHz: F_a = {:.6}, largest chi eigenvalues {:.4?}",
        average_gate_fidelity(&noisy, &target)?,
        &noisy.eigenvalues()[..3]
    );
    if let Some(prefix) = args.get(1) {
        noisy.write_csv(format!("{prefix}_re.csv"), format!("{prefix}_im.csv"))?;
        println!("wrote {prefix}_re.csv and {prefix}_im.csv");
    }
    Ok(())
}
