use ontoscope::quantum::{random_completion, random_ket, Ket, ProjectiveContext};
use ontoscope::rng;
use ontoscope::verify::*;
use ontoscope::zoo::{build_bb_model, build_bell_model, build_ks_qubit_model};
use ontoscope::{support, OntologicalModel, DEFAULT_PREP, DELTA_SUPP};

fn haar_states(dim: usize, n: usize, seed: u64) -> Vec<Ket> {
    let mut r = rng::stream(seed, rng::streams::STATES);
    (0..n).map(|_| random_ket(dim, &mut r).unwrap()).collect()
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

fn assert_replays(model: &OntologicalModel, v: &Verdict, contexts: &[ProjectiveContext]) {
    for w in &v.witnesses {
        let d = replay_witness(model, v.id, w, contexts, &[]).unwrap();
        assert!((d - w.defect).abs() <= 1e-12, "{:?}: replay {d} vs {}", v.id, w.defect);
    }
}

#[test]
fn lemmas_hold_on_zoo_models() {
    let ctxs = family_of_e1(3, 4, 1);
    let bell = build_bell_model(3, 500, &ctxs).unwrap();
    let l = check_support_lemmas(&bell, &[], &ctxs, &[]).unwrap();
    assert_eq!(l.lemma1.status, Status::Pass);
    assert_eq!(l.lemma2.status, Status::Pass);
    assert_eq!(l.lemma3.status, Status::Pass);

    let ks = build_ks_qubit_model(2000, 3).unwrap();
    let l = check_support_lemmas(&ks, &[], ks.contexts(), &[]).unwrap();
    assert!(l.lemma1.pass && l.lemma2.pass && l.lemma3.pass);

    let states = haar_states(3, 5, 2);
    let bb = build_bb_model(3, &states, &ctxs).unwrap();
    let l = check_support_lemmas(&bb, &[], &ctxs, &[]).unwrap();
    assert!(l.lemma1.pass && l.lemma2.pass);
    assert_eq!(l.lemma3.status, Status::NotApplicable);
}

#[test]
fn basis_mismatch_is_rejected() {
    let ks = build_ks_qubit_model(1000, 0).unwrap();
    let wrong = vec![vec![Ket::basis(2, 1), Ket::basis(2, 0)], vec![Ket::basis(2, 0), Ket::basis(2, 1)]];
    assert!(check_support_lemmas(&ks, &[], ks.contexts(), &wrong).is_err());
    assert!(check_support_lemmas(&ks, &[], ks.contexts(), &wrong[..1]).is_err());
}

#[test]
fn zeroed_row_breaks_lemma1_at_exactly_those_cells() {
    let ctxs = family_of_e1(3, 2, 4);
    let bell = build_bell_model(3, 120, &ctxs).unwrap();
    let mut snap = bell.snapshot(&[], &[]).unwrap();
    let label = ctxs[0].label().to_string();
    let mut zeroed = ontoscope::Support::empty();
    for s in snap.states().to_vec() {
        let row = snap.response(&ctxs[0], 0, Some(&s)).unwrap();
        zeroed = zeroed.union(&support(&row, DELTA_SUPP));
    }
    assert!(!zeroed.is_empty());
    for t in snap.response_row_mut(&label, 0).unwrap().tables_mut() {
        t.iter_mut().for_each(|x| *x = 0.0);
    }
    let l = check_support_lemmas(&snap, &[], &ctxs, &[]).unwrap();
    assert_eq!(l.lemma1.status, Status::Fail);
    let hit: ontoscope::Support = l.lemma1.witnesses.iter().filter_map(|w| w.lambda).collect();
    assert_eq!(hit, zeroed);
    assert_replays(&snap, &l.lemma1, &ctxs);
}

#[test]
fn density_on_other_effect_breaks_lemma2() {
    let ctx = ProjectiveContext::canonical(2);
    let bb = build_bb_model(2, &[Ket::basis(2, 0), Ket::basis(2, 1)], std::slice::from_ref(&ctx)).unwrap();
    let mut snap = bb.snapshot(&[], &[]).unwrap();
    let e = snap.epistemic_mut(&Ket::basis(2, 1), DEFAULT_PREP).unwrap();
    e.density = vec![0.5, 0.5];
    let l = check_support_lemmas(&snap, &[], std::slice::from_ref(&ctx), &[]).unwrap();
    assert_eq!(l.lemma2.status, Status::Fail);
    assert_eq!(l.lemma2.witnesses.len(), 1);
    assert_eq!(l.lemma2.witnesses[0].lambda, Some(0));
    assert_replays(&snap, &l.lemma2, &[ctx]);
}

#[test]
fn overlapping_sharp_supports_break_lemma3() {
    let ks = build_ks_qubit_model(1000, 5).unwrap();
    let mut snap = ks.snapshot(&[], &[]).unwrap();
    let ctx = ProjectiveContext::canonical(2);
    let up = snap.response(&ctx, 0, None).unwrap();
    let at = up.iter().position(|&x| x == 1.0).unwrap();
    snap.response_row_mut(ctx.label(), 1).unwrap().table[at] = 1.0;
    let l = check_support_lemmas(&snap, &[], snap.contexts(), &[]).unwrap();
    assert_eq!(l.lemma3.status, Status::Fail);
    assert_eq!(l.lemma3.witnesses.len(), 1);
    assert_eq!(l.lemma3.witnesses[0].lambda, Some(at));
    assert_replays(&snap, &l.lemma3, &[]);
}

#[test]
fn deficiency_examples() {
    let plus = Ket::from_real_normalized(&[1.0, 1.0]).unwrap();
    let states = [Ket::basis(2, 0), Ket::basis(2, 1), plus];
    let ctx = ProjectiveContext::canonical(2);
    let bb = build_bb_model(2, &states, std::slice::from_ref(&ctx)).unwrap();
    let r = check_deficiency(&bb, &Ket::basis(2, 0), DEFAULT_PREP, &ctx, &[]).unwrap();
    assert!(r.deficient);
    assert_eq!((r.rho_support, r.xi_support), (1, 2));

    let bell = build_bell_model(3, 200, &[]).unwrap();
    let c3 = ProjectiveContext::canonical(3);
    let r = check_deficiency(&bell, &Ket::basis(3, 0), DEFAULT_PREP, &c3, &[]).unwrap();
    assert!(!r.deficient);
    assert_eq!((r.rho_support, r.xi_support), (200, 200));

    assert!(check_deficiency(&bb, &states[2], DEFAULT_PREP, &ctx, &[]).is_err());
}

#[test]
fn ks_deficiency_is_a_boundary_effect() {
    let n = 4000;
    let ks = build_ks_qubit_model(n, 11).unwrap();
    let ctx = ProjectiveContext::canonical(2);
    let r = check_deficiency(&ks, &Ket::basis(2, 0), DEFAULT_PREP, &ctx, &[]).unwrap();
    // A generic rotation puts no lattice point on the great circle.
    assert!(r.support_inclusion);
    assert_eq!(r.gap_points, 0);
    assert!(!r.deficient);
    let half = n as f64 / 2.0;
    assert!((r.rho_support as f64 - half).abs() <= 2.0 * (n as f64).sqrt());
}

#[test]
fn cross_context_on_bell_family() {
    let n = 1000;
    let tol = 2.0 / n as f64;
    let ctxs = family_of_e1(3, 8, 6);
    let bell = build_bell_model(3, n, &ctxs).unwrap();
    let states = haar_states(3, 10, 6);
    let fam = ContextFamily::new(ctxs[0].effects()[0].clone(), ctxs.clone()).unwrap();
    let v = check_cross_context(&bell, &fam, &states, &[], Some(tol)).unwrap();
    assert_eq!(v.status, Status::Pass, "{v:?}");
    assert!(v.max_defect <= tol);
    assert_eq!(v.statistics["interstitial_violations"], 0.0);

    let mut swapped = ctxs.clone();
    swapped[3] = ctxs[3].reordered("m3-last", &[1, 2, 0]).unwrap();
    let bell = build_bell_model(3, n, &swapped).unwrap();
    let fam = ContextFamily::new(ctxs[0].effects()[0].clone(), swapped).unwrap();
    let v = check_cross_context(&bell, &fam, &states, &[], Some(tol)).unwrap();
    assert!(v.pass);
    assert!(v.statistics["lambda_c_points"] > 0.0);
    assert!(v.max_defect <= tol);
}

#[test]
fn enlarged_response_breaks_cross_context() {
    let e = |i| Ket::basis(3, i);
    let a = Ket::from_real_normalized(&[0.0, 1.0, 1.0]).unwrap();
    let b = Ket::from_real_normalized(&[0.0, 1.0, -1.0]).unwrap();
    let canon = ProjectiveContext::canonical(3);
    let other = ProjectiveContext::checked("tilted", vec![e(0), a, b]).unwrap();
    let ctxs = vec![canon.clone(), other.clone()];
    let bb = build_bb_model(3, &[e(0), e(1), e(2)], &ctxs).unwrap();
    let mut snap = bb.snapshot(&[], &[]).unwrap();
    let l2 = snap.ontic().ids().len();
    assert_eq!(l2, 5);
    // Point 1 is |e2⟩: hand it to E1 in the tilted context.
    snap.response_row_mut("tilted", 0).unwrap().table[1] = 1.0;
    snap.response_row_mut("tilted", 1).unwrap().table[1] = 0.0;
    snap.response_row_mut("tilted", 2).unwrap().table[1] = 0.0;
    let fam = ContextFamily::new(canon.effects()[0].clone(), ctxs.clone()).unwrap();
    let v = check_cross_context(&snap, &fam, &[e(1)], &[], None).unwrap();
    assert_eq!(v.status, Status::Fail);
    assert!((v.max_defect - 1.0).abs() < 1e-12);
    assert!(v.statistics["interstitial_violations"] >= 1.0);
    assert_replays(&snap, &v, &ctxs);
}

#[test]
fn shared_effect_must_be_present() {
    let canon = ProjectiveContext::canonical(2);
    let plus = Ket::from_real_normalized(&[1.0, 1.0]).unwrap();
    let minus = Ket::from_real_normalized(&[1.0, -1.0]).unwrap();
    let had = ProjectiveContext::checked("h", vec![plus, minus]).unwrap();
    assert!(ContextFamily::new(canon.effects()[0].clone(), vec![canon, had]).is_err());
}

#[test]
fn lambda_sufficiency_classification() {
    let ctxs = family_of_e1(3, 3, 8);
    let states = haar_states(3, 4, 8);
    let bb = build_bb_model(3, &states, &ctxs).unwrap();
    let v = check_lambda_sufficiency(&bb, &states, &ctxs);
    assert!(v.pass);
    assert_eq!(v.statistics["structural"], 1.0);

    let ks = build_ks_qubit_model(1000, 1).unwrap();
    assert!(check_lambda_sufficiency(&ks, &haar_states(2, 4, 1), ks.contexts()).pass);

    let bell = build_bell_model(3, 300, &ctxs).unwrap();
    let v = check_lambda_sufficiency(&bell, &states, &ctxs);
    assert_eq!(v.status, Status::Fail);
    let w = &v.witnesses[0];
    assert!(w.state.is_some() && w.other_state.is_some());
    assert_replays(&bell, &v, &ctxs);
}

#[test]
fn partitions_are_exact_for_sharp_models() {
    let ks = build_ks_qubit_model(1500, 2).unwrap();
    for p in context_partitions(&ks, ks.contexts(), None).unwrap() {
        assert!(p.is_exact(), "{p:?}");
    }
    let ctxs = family_of_e1(3, 4, 9);
    let bell = build_bell_model(3, 300, &ctxs).unwrap();
    for psi in haar_states(3, 3, 9) {
        for p in context_partitions(&bell, &ctxs, Some(&psi)).unwrap() {
            assert!(p.is_exact());
        }
    }
}

#[test]
fn reports_on_zoo_models() {
    let ctxs = family_of_e1(3, 5, 10);
    let bell = build_bell_model(3, 400, &ctxs).unwrap();
    let report = run_report(&bell, &SuiteConfig::full(10)).unwrap();
    assert_eq!(report.failing(), vec![CheckId::LambdaSufficiency]);
    assert_eq!(report.exit_code(), 2);
    for v in &report.checks {
        assert!(v.status != Status::Fail || !v.witnesses.is_empty());
        assert!(v.max_defect >= 0.0);
        assert_replays(&bell, v, &ctxs);
    }

    let states = haar_states(3, 6, 10);
    let bb = build_bb_model(3, &states, &ctxs).unwrap();
    let report = run_report(&bb, &SuiteConfig::full(10)).unwrap();
    assert_eq!(report.exit_code(), 0, "{:?}", report.failing());
    assert_eq!(report.verdict(CheckId::Lemma3).unwrap().status, Status::NotApplicable);

    let empty = run_report(&bb, &SuiteConfig::default()).unwrap();
    assert!(empty.checks.is_empty());
    assert_eq!(empty.exit_code(), 0);

    assert!(CheckId::parse_list(&["born", "nosuch"]).is_err());
    assert_eq!(CheckId::parse_list(&["all"]).unwrap().len(), 8);
}

#[test]
fn reports_are_deterministic() {
    let ctxs = family_of_e1(3, 4, 12);
    let bell = build_bell_model(3, 300, &ctxs).unwrap();
    let mut cfg = SuiteConfig::full(12);
    cfg.random_states = 5;
    let a = serde_json::to_string(&run_report(&bell, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&run_report(&bell, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn more_samples_never_turn_a_failure_into_a_pass() {
    let ctxs = family_of_e1(3, 3, 13);
    let bell = build_bell_model(3, 200, &ctxs).unwrap();
    let small = haar_states(3, 3, 13);
    let mut big = small.clone();
    big.extend(haar_states(3, 5, 14));
    let a = check_born_agreement(&bell, &small, &ctxs, 1e-6);
    let b = check_born_agreement(&bell, &big, &ctxs, 1e-6);
    assert_eq!(a.status, Status::Fail);
    assert_eq!(b.status, Status::Fail);
    assert!(b.max_defect >= a.max_defect);
}

#[test]
fn born_gaps_are_reported_not_raised() {
    let ctx = ProjectiveContext::canonical(2);
    let bb = build_bb_model(2, &[Ket::basis(2, 0)], std::slice::from_ref(&ctx)).unwrap();
    let stranger = Ket::from_real_normalized(&[0.6, 0.8]).unwrap();
    let v = check_born_agreement(&bb, &[Ket::basis(2, 0), stranger], &[ctx], 1e-9);
    assert_eq!(v.status, Status::CoverageGap);
    assert!(!v.coverage_gaps.is_empty());
}
