use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use ontoscope::feasibility::{
    born_targets, count_colorings_naive, ks_colorable, lp_feasible, rays_from_contexts, FeasibilityProblem, LpCertificate, LpMode, RaySet,
    Rational, SimplexOutcome, TOL_LP,
};
use ontoscope::quantum::{complete_basis, random_completion, random_ket, Ket, ProjectiveContext};
use ontoscope::rng::{self, SeededRng};
use ontoscope::verify::*;
use ontoscope::zoo::{build_bb_model, build_bell_model, build_ks_qubit_model};
use ontoscope::{OntologicalModel, ResponseFunction, DEFAULT_PREP};
use rand::seq::SliceRandom;
use rand::Rng;

fn verdict(criterion: u32, ok: bool, detail: String, elapsed: Duration, budget: Duration) {
    let in_time = elapsed <= budget;
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {status} ({detail}; {:.2}s of {}s)", elapsed.as_secs_f64(), budget.as_secs());
    assert!(ok, "criterion {criterion}: {detail}");
    assert!(in_time, "criterion {criterion}: took {elapsed:?}, budget {budget:?}");
}

fn haar_states(dim: usize, n: usize, seed: u64) -> Vec<Ket> {
    let mut r = rng::stream(seed, rng::streams::STATES);
    (0..n).map(|_| random_ket(dim, &mut r).unwrap()).collect()
}

fn random_contexts(dim: usize, n: usize, seed: u64) -> Vec<ProjectiveContext> {
    let mut r = rng::stream(seed, rng::streams::CONTEXTS);
    (0..n)
        .map(|k| {
            let first = random_ket(dim, &mut r).unwrap();
            random_completion(format!("r{k}"), &[first], dim, &mut r).unwrap()
        })
        .collect()
}

fn family_of_e1(dim: usize, members: usize, seed: u64) -> Vec<ProjectiveContext> {
    let e1 = Ket::basis(dim, 0);
    let mut r = rng::stream(seed, rng::streams::CONTEXTS);
    let mut out = vec![ProjectiveContext::canonical(dim)];
    for k in 1..members {
        out.push(random_completion(format!("m{k}"), std::slice::from_ref(&e1), dim, &mut r).unwrap());
    }
    out
}

fn witnesses_replay(model: &OntologicalModel, v: &Verdict, contexts: &[ProjectiveContext]) -> bool {
    !v.witnesses.is_empty()
        && v.witnesses
            .iter()
            .all(|w| replay_witness(model, v.id, w, contexts, &[]).is_ok_and(|d| (d - w.defect).abs() <= 1e-12))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn criterion_1_born_agreement() {
    let start = Instant::now();
    let states = haar_states(3, 100, 1);
    let contexts = random_contexts(3, 10, 1);

    let bb = build_bb_model(3, &states, &contexts).unwrap();
    let v_bb = check_born_agreement(&bb, &states, &contexts, 1e-12);

    let n_grid = 10_000;
    let bell = build_bell_model(3, n_grid, &contexts).unwrap();
    let v_bell = check_born_agreement(&bell, &states, &contexts, 1.0 / n_grid as f64);

    let ks = build_ks_qubit_model(100_000, 1).unwrap();
    let psis = haar_states(2, 100, 2);
    let phis = haar_states(2, 100, 3);
    let mut ks_max: f64 = 0.0;
    let mut ks_ok = true;
    for (k, (psi, phi)) in psis.iter().zip(&phis).enumerate() {
        let ctx = complete_basis(format!("p{k}"), std::slice::from_ref(phi), 2).unwrap();
        let v = check_born_agreement(&ks, std::slice::from_ref(psi), &[ctx], 1e-2);
        ks_max = ks_max.max(v.max_defect);
        ks_ok &= v.status == Status::Pass;
    }

    let ok = v_bb.status == Status::Pass && v_bell.status == Status::Pass && ks_ok;
    verdict(
        1,
        ok,
        format!(
            "bb max {:.2e} <= 1e-12, bell max {:.2e} <= 1e-4, ks max {:.2e} <= 1e-2",
            v_bb.max_defect, v_bell.max_defect, ks_max
        ),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_2_lemma_suite() {
    let start = Instant::now();
    let mut ok = true;
    let mut notes = Vec::new();

    let ctxs = family_of_e1(3, 4, 2);
    let bell = build_bell_model(3, 1000, &ctxs).unwrap();
    let l = check_support_lemmas(&bell, &[], &ctxs, &[]).unwrap();
    ok &= l.lemma1.pass && l.lemma2.pass && l.lemma3.status == Status::Pass;

    let ks = build_ks_qubit_model(10_000, 2).unwrap();
    let l = check_support_lemmas(&ks, &[], ks.contexts(), &[]).unwrap();
    ok &= l.lemma1.pass && l.lemma2.pass && l.lemma3.status == Status::Pass;

    let states = haar_states(3, 10, 2);
    let bb = build_bb_model(3, &states, &ctxs).unwrap();
    let l = check_support_lemmas(&bb, &[], &ctxs, &[]).unwrap();
    ok &= l.lemma1.pass && l.lemma2.pass && l.lemma3.status == Status::NotApplicable;
    notes.push(format!("zoo lemmas {}", if ok { "hold" } else { "broken" }));

    // Zeroed response row.
    let mut snap = bell.snapshot(&[], &[]).unwrap();
    for t in snap.response_row_mut(ctxs[0].label(), 0).unwrap().tables_mut() {
        t.iter_mut().for_each(|x| *x = 0.0);
    }
    let l = check_support_lemmas(&snap, &[], &ctxs, &[]).unwrap();
    let caught = l.lemma1.status == Status::Fail && witnesses_replay(&snap, &l.lemma1, &ctxs);
    notes.push(format!("zeroed row: {} witnesses", l.lemma1.witness_count));
    ok &= caught;

    // Overlapping basis supports.
    let ctx = ProjectiveContext::canonical(2);
    let qubit = build_bb_model(2, &[Ket::basis(2, 0), Ket::basis(2, 1)], std::slice::from_ref(&ctx)).unwrap();
    let mut snap = qubit.snapshot(&[], &[]).unwrap();
    snap.epistemic_mut(&Ket::basis(2, 1), DEFAULT_PREP).unwrap().density = vec![0.5, 0.5];
    let l = check_support_lemmas(&snap, &[], std::slice::from_ref(&ctx), &[]).unwrap();
    let caught = l.lemma2.status == Status::Fail && witnesses_replay(&snap, &l.lemma2, std::slice::from_ref(&ctx));
    notes.push(format!("overlapping densities: {} witnesses", l.lemma2.witness_count));
    ok &= caught;

    // Overlapping deterministic effect supports.
    let mut snap = ks.snapshot(&[], &[]).unwrap();
    let up = snap.response(&ctx, 0, None).unwrap();
    let at = up.iter().position(|&x| x == 1.0).unwrap();
    snap.response_row_mut(ctx.label(), 1).unwrap().table[at] = 1.0;
    let l = check_support_lemmas(&snap, &[], snap.contexts(), &[]).unwrap();
    let caught = l.lemma3.status == Status::Fail && witnesses_replay(&snap, &l.lemma3, &[]);
    notes.push(format!("overlapping responses: {} witnesses", l.lemma3.witness_count));
    ok &= caught;

    verdict(2, ok, notes.join(", "), start.elapsed(), Duration::from_secs(10));
}

#[test]
fn criterion_3_deficiency() {
    let start = Instant::now();
    let states = haar_states(3, 50, 3);
    let mut r = rng::stream(3, rng::streams::CONTEXTS);
    let contexts: Vec<ProjectiveContext> = states
        .iter()
        .enumerate()
        .map(|(k, s)| random_completion(format!("s{k}"), std::slice::from_ref(s), 3, &mut r).unwrap())
        .collect();
    let bb = build_bb_model(3, &states, &contexts).unwrap();
    let mut deficient = 0;
    for (s, c) in states.iter().zip(&contexts) {
        let rep = check_deficiency(&bb, s, DEFAULT_PREP, c, &[]).unwrap();
        if rep.deficient && rep.support_inclusion && rep.rho_support < rep.xi_support {
            deficient += 1;
        }
    }

    let family = family_of_e1(3, 5, 3);
    let bell = build_bell_model(3, 1000, &family).unwrap();
    let rep = check_deficiency(&bell, &Ket::basis(3, 0), DEFAULT_PREP, &family[0], &family).unwrap();
    println!(
        "  bell family: contextual effects {}, corollary flag {:?}",
        rep.contextual_effects, rep.corollary_holds
    );

    verdict(
        3,
        deficient == states.len(),
        format!("bb deficient at {deficient}/{} states", states.len()),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_4_cross_context() {
    let start = Instant::now();
    let n_grid = 10_000;
    let tol = 2.0 / n_grid as f64;
    let states = haar_states(3, 50, 4);
    let ctxs = family_of_e1(3, 20, 4);
    let shared = ctxs[0].effects()[0].clone();

    let bell = build_bell_model(3, n_grid, &ctxs).unwrap();
    let fam = ContextFamily::new(shared.clone(), ctxs.clone()).unwrap();
    let a = check_cross_context(&bell, &fam, &states, &[], Some(tol)).unwrap();
    let a_ok = a.status == Status::Pass && a.max_defect <= tol && a.statistics["interstitial_violations"] == 0.0;

    let mut moved = ctxs.clone();
    moved[7] = ctxs[7].reordered("m7-last", &[1, 2, 0]).unwrap();
    let bell_b = build_bell_model(3, n_grid, &moved).unwrap();
    let fam_b = ContextFamily::new(shared, moved).unwrap();
    let b = check_cross_context(&bell_b, &fam_b, &states, &[], Some(tol)).unwrap();
    let b_ok = b.status == Status::Pass
        && b.max_defect <= tol
        && b.statistics["pairs_with_lambda_c"] >= 1.0
        && b.statistics["interstitial_violations"] == 0.0;

    // A BB model whose tilted context hands |e2⟩ to E1.
    let e = |i| Ket::basis(3, i);
    let canon = ProjectiveContext::canonical(3);
    let tilted = ProjectiveContext::checked(
        "tilted",
        vec![
            e(0),
            Ket::from_real_normalized(&[0.0, 1.0, 1.0]).unwrap(),
            Ket::from_real_normalized(&[0.0, 1.0, -1.0]).unwrap(),
        ],
    )
    .unwrap();
    let pair = vec![canon.clone(), tilted];
    let mut bad = build_bb_model(3, &[e(0), e(1), e(2)], &pair).unwrap().snapshot(&[], &[]).unwrap();
    for (effect, value) in [(0, 1.0), (1, 0.0), (2, 0.0)] {
        bad.response_row_mut("tilted", effect).unwrap().table[1] = value;
    }
    let fam_bad = ContextFamily::new(canon.effects()[0].clone(), pair.clone()).unwrap();
    let c = check_cross_context(&bad, &fam_bad, &[e(1)], &[], None).unwrap();
    let c_ok = c.status == Status::Fail && witnesses_replay(&bad, &c, &pair);

    verdict(
        4,
        a_ok && b_ok && c_ok,
        format!(
            "E1-first max delta {:.2e}, lambda_c pairs {}; E1-last in one member max delta {:.2e}, lambda_c pairs {}, interstitial {}; violation caught {}",
            a.max_defect,
            a.statistics["pairs_with_lambda_c"],
            b.max_defect,
            b.statistics["pairs_with_lambda_c"],
            b.statistics["interstitial_violations"],
            c_ok
        ),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_5_lambda_sufficiency() {
    let start = Instant::now();
    let ctxs = family_of_e1(3, 4, 5);
    let states = haar_states(3, 10, 5);
    let bb = build_bb_model(3, &states, &ctxs).unwrap();
    let v_bb = check_lambda_sufficiency(&bb, &states, &ctxs);
    let ks = build_ks_qubit_model(10_000, 5).unwrap();
    let v_ks = check_lambda_sufficiency(&ks, &haar_states(2, 10, 5), ks.contexts());
    let bell = build_bell_model(3, 1000, &ctxs).unwrap();
    let v_bell = check_lambda_sufficiency(&bell, &states, &ctxs);
    let ok = v_bb.pass && v_ks.pass && v_bell.status == Status::Fail && witnesses_replay(&bell, &v_bell, &ctxs);
    verdict(
        5,
        ok,
        format!("bb {:?}, ks {:?}, bell {:?} (defect {:.3})", v_bb.status, v_ks.status, v_bell.status, v_bell.max_defect),
        start.elapsed(),
        Duration::from_secs(5),
    );
}

fn cabello_subset(cabello: &RaySet, r: &mut SeededRng) -> RaySet {
    let mut picks: Vec<usize> = (0..cabello.contexts().len()).collect();
    picks.shuffle(r);
    picks.truncate(r.random_range(1..=picks.len()));
    picks.sort_unstable();
    let mut used: Vec<usize> = picks.iter().flat_map(|&c| cabello.contexts()[c].clone()).collect();
    used.sort_unstable();
    used.dedup();
    let rays = used.iter().map(|&i| cabello.rays()[i].clone()).collect();
    let contexts = picks
        .iter()
        .map(|&c| cabello.contexts()[c].iter().map(|i| used.binary_search(i).unwrap()).collect())
        .collect();
    RaySet::new(cabello.dim(), rays, contexts).unwrap()
}

fn tree_set(dim: usize, r: &mut SeededRng) -> RaySet {
    let first = random_ket(dim, r).unwrap();
    let mut contexts = vec![random_completion("t0", &[first], dim, r).unwrap()];
    let mut rays: Vec<Ket> = contexts[0].rays().cloned().collect();
    while rays.len() + dim - 1 <= 20 && r.random_bool(0.8) {
        let anchor = rays[r.random_range(0..rays.len())].clone();
        let ctx = random_completion(format!("t{}", contexts.len()), &[anchor], dim, r).unwrap();
        rays.extend(ctx.rays().skip(1).cloned());
        contexts.push(ctx);
    }
    rays_from_contexts(&contexts).unwrap()
}

#[test]
fn criterion_6_bks_obstruction() {
    let start = Instant::now();
    let cabello = RaySet::from_json(&std::fs::read_to_string(fixture("cabello18.json")).unwrap()).unwrap();
    let t = Instant::now();
    let cert = ks_colorable(&cabello);
    let cabello_time = t.elapsed();
    let cabello_ok = !cert.is_feasible() && cert.nodes() > 0 && cabello_time < Duration::from_secs(5);

    let mut r = rng::stream(6, rng::streams::RAYSETS);
    let mut pairs_ok = true;
    for k in 0..50 {
        let a = complete_basis("a", &[random_ket(3, &mut r).unwrap()], 3).unwrap();
        let b = if k % 2 == 0 {
            let shared = a.ray(r.random_range(0..3)).clone();
            random_completion("b", &[shared], 3, &mut r).unwrap()
        } else {
            complete_basis("b", &[random_ket(3, &mut r).unwrap()], 3).unwrap()
        };
        let set = rays_from_contexts(&[a, b]).unwrap();
        let c = ks_colorable(&set);
        pairs_ok &= c.is_feasible() && c.assignment().is_some_and(|x| x.satisfies(&set.hypergraph()));
    }

    let mut agree = 0;
    let mut infeasible = 0;
    for k in 0..50 {
        let set = if k % 2 == 0 { cabello_subset(&cabello, &mut r) } else { tree_set(3, &mut r) };
        assert!(set.rays().len() <= 20);
        let cert = ks_colorable(&set);
        infeasible += usize::from(!cert.is_feasible());
        if cert.is_feasible() == (count_colorings_naive(&set.hypergraph()) > 0) {
            agree += 1;
        }
    }

    verdict(
        6,
        cabello_ok && pairs_ok && agree == 50,
        format!(
            "cabello infeasible after {} nodes in {:.3}s, two-context sets colorable {pairs_ok}, enumeration agrees {agree}/50 ({infeasible} infeasible)",
            cert.nodes(),
            cabello_time.as_secs_f64()
        ),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

fn bell_xi_problem() -> FeasibilityProblem {
    let psi = Ket::from_real_normalized(&[1.0, 1.0, 1.0]).unwrap();
    let ctx = ProjectiveContext::canonical(3);
    let bell = build_bell_model(3, 300, std::slice::from_ref(&ctx)).unwrap();
    let xi = (0..3)
        .map(|e| ResponseFunction {
            context: ctx.label().to_string(),
            effect: e,
            table: bell.response(&ctx, e, Some(&psi)).unwrap().to_vec(),
            state_dependent: None,
        })
        .collect();
    FeasibilityProblem {
        mode: LpMode::FixXiSolveRho,
        ontic: bell.ontic().clone(),
        targets: born_targets(std::slice::from_ref(&psi), std::slice::from_ref(&ctx)).unwrap(),
        states: vec![psi],
        contexts: vec![ctx],
        rho: None,
        xi: Some(xi),
        lambda_sufficient: true,
        noncontextual: true,
        tolerance: TOL_LP,
    }
}

#[test]
fn criterion_7_lp_feasibility() {
    let start = Instant::now();
    let load = |name: &str| FeasibilityProblem::from_json(&std::fs::read_to_string(fixture(name)).unwrap()).unwrap();

    let point_mass = lp_feasible(&load("lp_point_mass.json")).unwrap();
    let bell = lp_feasible(&bell_xi_problem()).unwrap();
    let feasible_ok = [&point_mass, &bell].iter().all(|c| c.residual().is_some_and(|r| r <= TOL_LP));

    let equal = load("lp_equal_rho.json");
    let infeasible_ok = matches!(lp_feasible(&equal).unwrap(), LpCertificate::Infeasible { verified: true, .. });

    let system = equal.to_system().unwrap();
    let mut r = rng::stream(7, rng::streams::RAYSETS);
    let mut scaled_ok = true;
    for _ in 0..20 {
        let mut scaled = system.clone();
        for i in 0..system.rows.len() {
            let num: i64 = r.random_range(1..1000);
            let den: i64 = r.random_range(1..1000);
            scaled.scale_row(i, &Rational::new(num.into(), den.into()));
        }
        scaled_ok &= match scaled.solve() {
            SimplexOutcome::Infeasible { y, .. } => scaled.certifies_infeasibility(&y),
            SimplexOutcome::Feasible { .. } => false,
        };
    }

    verdict(
        7,
        feasible_ok && infeasible_ok && scaled_ok,
        format!(
            "point-mass residual {:.1e}, bell residual {:.1e}, equal-density infeasible {infeasible_ok}, scaled rows keep certificate {scaled_ok}",
            point_mass.residual().unwrap_or(f64::NAN),
            bell.residual().unwrap_or(f64::NAN)
        ),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_8_reproducibility() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let cabello = fixture("cabello18.json").to_str().unwrap().to_string();
    let equal = fixture("lp_equal_rho.json").to_str().unwrap().to_string();
    let point_mass = fixture("lp_point_mass.json").to_str().unwrap().to_string();

    let zoo_bell = |out: &str| -> Vec<String> {
        ["zoo", "--model", "bell", "--dim", "3", "--grid", "2000", "--family", "4", "--random-states", "3", "--seed", "8", "--out", out]
            .map(String::from)
            .to_vec()
    };
    let runs: Vec<(Vec<String>, Option<String>)> = vec![
        (zoo_bell(&p("bell-a.json")), Some(p("bell-a.json"))),
        (
            ["zoo", "--model", "ks_qubit", "--n", "100000", "--seed", "7", "--out", &p("ks.json")].map(String::from).to_vec(),
            Some(p("ks.json")),
        ),
        (
            ["zoo", "--model", "bb", "--dim", "3", "--random-states", "5", "--family", "3", "--seed", "8", "--out", &p("bb.json")]
                .map(String::from)
                .to_vec(),
            Some(p("bb.json")),
        ),
        (["verify", "--model", &p("bell-a.json"), "--seed", "8"].map(String::from).to_vec(), None),
        (["verify", "--model", &p("bb.json"), "--out", &p("report.json")].map(String::from).to_vec(), Some(p("report.json"))),
        (["feasibility", "color", "--rays", &cabello].map(String::from).to_vec(), None),
        (["feasibility", "lp", "--problem", &equal].map(String::from).to_vec(), None),
        (["feasibility", "lp", "--problem", &point_mass].map(String::from).to_vec(), None),
    ];

    let mut identical = 0;
    for (args, file) in &runs {
        let mut outputs = Vec::new();
        for _ in 0..2 {
            let o = Command::new(env!("CARGO_BIN_EXE_ontoscope")).args(args).output().unwrap();
            let bytes = file.as_ref().map(|f| std::fs::read(f).unwrap()).unwrap_or_default();
            outputs.push((o.status.code(), o.stdout, bytes));
        }
        if outputs[0] == outputs[1] {
            identical += 1;
        } else {
            println!("  differs: {}", args.join(" "));
        }
    }

    verdict(
        8,
        identical == runs.len(),
        format!("{identical}/{} commands byte-identical across two runs", runs.len()),
        start.elapsed(),
        Duration::from_secs(120),
    );
}
