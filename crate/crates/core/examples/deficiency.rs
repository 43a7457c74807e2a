//! Measure how far a state's support falls short of its own effect's support.

use ontoscope::quantum::{random_completion, random_ket};
use ontoscope::rng;
use ontoscope::verify::check_deficiency;
use ontoscope::zoo::build_bb_model;
use ontoscope::DEFAULT_PREP;

fn main() -> ontoscope::Result<()> {
    let mut r = rng::stream(3, rng::streams::STATES);
    let states: Vec<_> = (0..5).map(|_| random_ket(3, &mut r)).collect::<Result<_, _>>()?;
    let mut contexts = Vec::new();
    for (k, s) in states.iter().enumerate() {
        contexts.push(random_completion(format!("s{k}"), std::slice::from_ref(s), 3, &mut r)?);
    }
    let bb = build_bb_model(3, &states, &contexts)?;
    for (s, c) in states.iter().zip(&contexts) {
        let rep = check_deficiency(&bb, s, DEFAULT_PREP, c, &contexts)?;
        println!(
            "{}: rho support {}, xi support {}, deficient {}, gap measure {:.3}",
            c.label(),
            rep.rho_support,
            rep.xi_support,
            rep.deficient,
            rep.gap_measure
        );
    }
    Ok(())
}
