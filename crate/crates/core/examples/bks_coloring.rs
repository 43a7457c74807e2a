//! Search for a noncontextual 0/1 assignment on a ray set given as JSON.
//!
//! `cargo run --example bks_coloring -- crates/core/fixtures/cabello18.json`

use ontoscope::feasibility::{ks_colorable, rays_from_contexts, RaySet};
use ontoscope::quantum::{complete_basis, Ket};

fn main() -> ontoscope::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/cabello18.json").into());
    let set = RaySet::from_json(&std::fs::read_to_string(&path)?)?;
    let cert = ks_colorable(&set);
    println!("{path}: {} rays, {} contexts", set.rays().len(), set.contexts().len());
    println!("{}", serde_json::to_string(&cert)?);

    let a = complete_basis("a", &[Ket::basis(3, 0)], 3)?;
    let b = complete_basis("b", &[Ket::from_real_normalized(&[0.0, 1.0, 1.0])?], 3)?;
    let pair = rays_from_contexts(&[a, b])?;
    println!("two contexts sharing a ray: feasible {}", ks_colorable(&pair).is_feasible());
    Ok(())
}
