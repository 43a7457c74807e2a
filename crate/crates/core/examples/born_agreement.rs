//! Compare each zoo model's predicted probabilities with the Born rule.

use ontoscope::quantum::{random_completion, random_ket};
use ontoscope::rng;
use ontoscope::verify::check_born_agreement;
use ontoscope::zoo::{build_bb_model, build_bell_model, build_ks_qubit_model};

fn main() -> ontoscope::Result<()> {
    let mut r = rng::stream(1, rng::streams::STATES);
    let states: Vec<_> = (0..20).map(|_| random_ket(3, &mut r)).collect::<Result<_, _>>()?;
    let mut contexts = Vec::new();
    for k in 0..4 {
        let first = random_ket(3, &mut r)?;
        contexts.push(random_completion(format!("c{k}"), &[first], 3, &mut r)?);
    }

    let bb = build_bb_model(3, &states, &contexts)?;
    let bell = build_bell_model(3, 10_000, &contexts)?;
    for (name, model, tol) in [("bb", &bb, 1e-12), ("bell", &bell, 1e-4)] {
        let v = check_born_agreement(model, &states, &contexts, tol);
        println!("{name:<8} {:?} max defect {:.3e}", v.status, v.max_defect);
    }

    let ks = build_ks_qubit_model(100_000, 1)?;
    let qubits: Vec<_> = (0..20).map(|_| random_ket(2, &mut r)).collect::<Result<_, _>>()?;
    let v = check_born_agreement(&ks, &qubits, ks.contexts(), 1e-2);
    println!("ks_qubit {:?} max defect {:.3e}", v.status, v.max_defect);
    Ok(())
}
