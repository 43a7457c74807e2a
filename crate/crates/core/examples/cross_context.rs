//! Compare responses to a shared effect across a family of contexts.

use ontoscope::quantum::{random_completion, random_ket, Ket, ProjectiveContext};
use ontoscope::rng;
use ontoscope::verify::{check_cross_context, ContextFamily};
use ontoscope::zoo::build_bell_model;

fn main() -> ontoscope::Result<()> {
    let n_grid = 10_000;
    let e1 = Ket::basis(3, 0);
    let mut r = rng::stream(4, rng::streams::CONTEXTS);
    let mut contexts = vec![ProjectiveContext::canonical(3)];
    for k in 1..10 {
        contexts.push(random_completion(format!("m{k}"), std::slice::from_ref(&e1), 3, &mut r)?);
    }
    // Move the shared effect to the end of one member.
    contexts[5] = contexts[5].reordered("m5-last", &[1, 2, 0])?;

    let mut s = rng::stream(4, rng::streams::STATES);
    let states: Vec<_> = (0..20).map(|_| random_ket(3, &mut s)).collect::<Result<_, _>>()?;
    let bell = build_bell_model(3, n_grid, &contexts)?;
    let family = ContextFamily::new(contexts[0].effects()[0].clone(), contexts.clone())?;
    let v = check_cross_context(&bell, &family, &states, &[], Some(2.0 / n_grid as f64))?;
    println!("{:?} max delta {:.3e}", v.status, v.max_defect);
    for (k, x) in &v.statistics {
        println!("  {k} = {x}");
    }
    Ok(())
}
