//! Level populations along the time-optimal controlled-U pulse for each
//! basis input, as CSV on stdout. Pass a pulse file to skip synthesis.

use brachist::nv::RotatingFrameModel;
use brachist::propagate::{bloch_series, propagate_dense, ControlProtocol, DEFAULT_SUBSTEPS};
use brachist::pulse::PulseFile;
use brachist::qbe::{synthesize, ControlSpaceSpec, PenaltyConfig, ShootingConfig};
use brachist::quantum::{controlled_u, Ket};

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
    let traj = propagate_dense(&model, &protocol, DEFAULT_SUBSTEPS, 0.005)?;
    println!("input,t_us,P_0_1,P_0_0,P_-1_1,P_-1_0");
    for k in 0..4 {
        let s = bloch_series(&traj, &Ket::basis(4, k), &model)?;
        for (i, t) in s.times.iter().enumerate() {
            let row: Vec<String> = s.columns.iter().map(|c| format!("{:.6}", c[i])).collect();
            println!("{k},{t:.4},{}", row.join(","));
        }
    }
    Ok(())
}
