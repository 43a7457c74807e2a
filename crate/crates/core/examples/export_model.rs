//! Tabulate a zoo model, write it as JSON and read it back.

use ontoscope::quantum::{random_ket, ProjectiveContext};
use ontoscope::rng;
use ontoscope::zoo::{ZooModel, ZooSpec};
use ontoscope::{validate_model, OntologicalModel};

fn main() -> ontoscope::Result<()> {
    let spec = ZooSpec {
        model: ZooModel::Bell,
        dim: 3,
        sphere_points: 0,
        grid: 500,
        seed: 9,
    };
    spec.validate()?;
    let mut r = rng::stream(spec.seed, rng::streams::STATES);
    let states: Vec<_> = (0..3).map(|_| random_ket(3, &mut r)).collect::<Result<_, _>>()?;
    let model = spec.build(&states, &[ProjectiveContext::canonical(3)])?;
    let snapshot = model.snapshot(&states, &[])?;
    let json = snapshot.to_json()?;
    let back = OntologicalModel::from_json(&json)?;
    println!(
        "{}: {} bytes, {} ontic points, {} states, {} violations after reload",
        back.name(),
        json.len(),
        back.ontic().len(),
        back.states().len(),
        validate_model(&back).len()
    );
    Ok(())
}
