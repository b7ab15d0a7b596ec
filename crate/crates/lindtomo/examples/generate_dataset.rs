//! Generate a synthetic prepare-evolve-measure dataset from a single-qubit
//! model with published-scale dephasing and damping rates, and write both
//! the model file and the dataset to ./example_out/.

use lindtomo::dynamics::{restricted_jump_ops, LindbladModel};
use lindtomo::io::{write_json, ModelFile};
use lindtomo::linalg::CMat;
use lindtomo::synth::{generate, SpamTruth};

fn main() -> lindtomo::Result<()> {
    let jumps = restricted_jump_ops(1)?;
    // Dephasing 0.09 MHz, amplitude damping 0.06 MHz, no Hamiltonian.
    let model = LindbladModel::from_jumps(
        CMat::zeros(2, 2),
        &[(0.09, jumps[0].clone()), (0.06, jumps[1].clone())],
    )?;
    let spam = SpamTruth::ideal(1)?;
    let times: Vec<f64> = (0..20).map(|i| 80.0 * i as f64 / 19.0).collect();
    let ds = generate(&model, &spam, &times, 1000, 0)?;

    std::fs::create_dir_all("example_out")?;
    write_json(
        std::path::Path::new("example_out/model.json"),
        &ModelFile::from_model(&model, None),
    )?;
    write_json(std::path::Path::new("example_out/dataset.json"), &ds)?;

    println!(
        "wrote example_out/dataset.json: {} records ({} sequences x {} times), {} shots each",
        ds.records.len(),
        ds.records.len() / ds.times_us.len(),
        ds.times_us.len(),
        ds.shots_nominal
    );
    let r = &ds.records[0];
    println!(
        "first record: prep {} basis {} t = {} us counts {:?}",
        r.prep, r.basis, r.time_us, r.counts
    );
    Ok(())
}
