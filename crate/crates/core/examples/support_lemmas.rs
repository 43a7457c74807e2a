//! Run the three support lemmas on a model, then break one and show the witness.

use ontoscope::quantum::{random_completion, Ket, ProjectiveContext};
use ontoscope::rng;
use ontoscope::verify::check_support_lemmas;
use ontoscope::zoo::build_bell_model;

fn main() -> ontoscope::Result<()> {
    let mut r = rng::stream(2, rng::streams::CONTEXTS);
    let contexts = vec![
        ProjectiveContext::canonical(3),
        random_completion("m1", &[Ket::basis(3, 0)], 3, &mut r)?,
    ];
    let bell = build_bell_model(3, 200, &contexts)?;
    let l = check_support_lemmas(&bell, &[], &contexts, &[])?;
    for v in [&l.lemma1, &l.lemma2, &l.lemma3] {
        println!("{:<8} {:?}", v.id.as_str(), v.status);
    }

    let mut broken = bell.snapshot(&[], &[])?;
    if let Some(row) = broken.response_row_mut(contexts[0].label(), 0) {
        row.tables_mut().for_each(|t| t.iter_mut().for_each(|x| *x = 0.0));
    }
    let l = check_support_lemmas(&broken, &[], &contexts, &[])?;
    println!("after zeroing a row: lemma1 {:?}, {} witnesses", l.lemma1.status, l.lemma1.witness_count);
    if let Some(w) = l.lemma1.witnesses.first() {
        println!("first witness: {}", serde_json::to_string(w)?);
    }
    Ok(())
}
