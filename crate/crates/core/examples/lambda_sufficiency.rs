//! Detect responses that read the prepared state.

use ontoscope::quantum::{random_ket, ProjectiveContext};
use ontoscope::rng;
use ontoscope::verify::check_lambda_sufficiency;
use ontoscope::zoo::{build_bb_model, build_bell_model, build_ks_qubit_model};

fn main() -> ontoscope::Result<()> {
    let contexts = vec![ProjectiveContext::canonical(3)];
    let mut r = rng::stream(5, rng::streams::STATES);
    let states: Vec<_> = (0..8).map(|_| random_ket(3, &mut r)).collect::<Result<_, _>>()?;
    let qubits: Vec<_> = (0..8).map(|_| random_ket(2, &mut r)).collect::<Result<_, _>>()?;

    let bb = build_bb_model(3, &states, &contexts)?;
    let ks = build_ks_qubit_model(5_000, 5)?;
    let bell = build_bell_model(3, 1_000, &contexts)?;
    let verdicts = [
        ("bb", check_lambda_sufficiency(&bb, &states, &contexts)),
        ("ks_qubit", check_lambda_sufficiency(&ks, &qubits, ks.contexts())),
        ("bell", check_lambda_sufficiency(&bell, &states, &contexts)),
    ];
    for (name, v) in verdicts {
        println!("{name:<8} {:?} max defect {:.3}", v.status, v.max_defect);
        if let Some(w) = v.witnesses.first() {
            println!("         witness {}", serde_json::to_string(w)?);
        }
    }
    Ok(())
}
