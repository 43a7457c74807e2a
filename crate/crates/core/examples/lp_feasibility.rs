//! Solve a linear feasibility problem exactly and print its certificate.
//!
//! `cargo run --example lp_feasibility -- crates/core/fixtures/lp_equal_rho.json`

use ontoscope::feasibility::{lp_feasible, FeasibilityProblem, LpCertificate};

fn main() -> ontoscope::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let paths: Vec<String> = match std::env::args().nth(1) {
        Some(p) => vec![p],
        None => vec![format!("{dir}/lp_point_mass.json"), format!("{dir}/lp_equal_rho.json")],
    };
    for path in paths {
        let problem = FeasibilityProblem::from_json(&std::fs::read_to_string(&path)?)?;
        match lp_feasible(&problem)? {
            LpCertificate::Solution { residual, pivots, .. } => {
                println!("{path}: feasible, residual {residual:.2e}, {pivots} pivots")
            }
            LpCertificate::Infeasible { verified, multipliers, .. } => {
                println!("{path}: infeasible, certificate verified {verified}");
                for m in multipliers {
                    println!("  {} {}", m.row, m.value);
                }
            }
        }
    }
    Ok(())
}
