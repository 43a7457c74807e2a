//! Structural checks on ontological models.
//!
//! Every check returns a [`Verdict`]: a status, the largest defect found and a
//! canonically ordered list of [`Witness`] records. A witness names enough of
//! `(λ, state, effect, context)` for [`replay_witness`] to recompute its defect
//! from the model alone.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontic::{predicted_probability, validate_model, OntologicalModel, DEFAULT_PREP};
use crate::quantum::{born_probability, random_completion, random_ket, Effect, Ket, Measurement, Povm, ProjectiveContext};
use crate::rng;
use crate::support::{support, Support, DELTA_SUPP};

/// Witness lists are truncated to this many entries after canonical sorting.
pub const MAX_WITNESSES: usize = 256;

/// Entries of a response row within this of 0 or 1 count as sharp.
pub const DETERMINISM_TOL: f64 = 1e-9;

/// Two response values differing by more than this make λ state-sensitive.
pub const LAMBDA_SUFFICIENCY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    Model,
    Born,
    Lemma1,
    Lemma2,
    Lemma3,
    Deficiency,
    CrossContext,
    LambdaSufficiency,
}

impl CheckId {
    pub const ALL: [CheckId; 8] = [
        CheckId::Model,
        CheckId::Born,
        CheckId::Lemma1,
        CheckId::Lemma2,
        CheckId::Lemma3,
        CheckId::Deficiency,
        CheckId::CrossContext,
        CheckId::LambdaSufficiency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::Model => "model",
            CheckId::Born => "born",
            CheckId::Lemma1 => "lemma1",
            CheckId::Lemma2 => "lemma2",
            CheckId::Lemma3 => "lemma3",
            CheckId::Deficiency => "deficiency",
            CheckId::CrossContext => "cross_context",
            CheckId::LambdaSufficiency => "lambda_sufficiency",
        }
    }

    /// Parses a list of names; `"all"` expands to the full suite.
    pub fn parse_list<S: AsRef<str>>(names: &[S]) -> Result<Vec<CheckId>> {
        let mut out = Vec::new();
        for n in names {
            let n = n.as_ref().trim();
            if n == "all" {
                out.extend(CheckId::ALL);
            } else if !n.is_empty() {
                out.push(n.parse()?);
            }
        }
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for CheckId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckId::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::UnknownCheck(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
    CoverageGap,
}

/// A located defect. Which fields are set depends on the check.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Ket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_state: Option<Ket>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prep: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_context: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub other_effect: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    pub defect: f64,
}

fn canonical_order(a: &Witness, b: &Witness) -> Ordering {
    let key = |w: &Witness| {
        (
            w.context.clone(),
            w.other_context.clone(),
            w.effect,
            w.other_effect,
            w.lambda,
            w.state.as_ref().map(Ket::key),
            w.other_state.as_ref().map(Ket::key),
            w.kind.clone(),
        )
    };
    b.defect.total_cmp(&a.defect).then_with(|| key(a).cmp(&key(b)))
}

/// Result of one check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub id: CheckId,
    pub pass: bool,
    pub status: Status,
    pub max_defect: f64,
    pub witnesses: Vec<Witness>,
    /// Witnesses found before truncation.
    pub witness_count: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub coverage_gaps: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub statistics: BTreeMap<String, f64>,
}

impl Verdict {
    pub fn not_applicable(id: CheckId, reason: &str) -> Self {
        let mut v = VerdictBuilder::new(id).finish(false);
        v.status = Status::NotApplicable;
        v.statistics.insert(format!("not_applicable: {reason}"), 1.0);
        v
    }
}

struct VerdictBuilder {
    id: CheckId,
    max_defect: f64,
    witnesses: Vec<Witness>,
    gaps: Vec<String>,
    statistics: BTreeMap<String, f64>,
}

impl VerdictBuilder {
    fn new(id: CheckId) -> Self {
        VerdictBuilder {
            id,
            max_defect: 0.0,
            witnesses: Vec::new(),
            gaps: Vec::new(),
            statistics: BTreeMap::new(),
        }
    }

    fn defect(&mut self, d: f64) {
        if d > self.max_defect {
            self.max_defect = d;
        }
    }

    fn witness(&mut self, w: Witness) {
        self.defect(w.defect);
        self.witnesses.push(w);
    }

    fn gap(&mut self, e: &Error) {
        let s = e.to_string();
        if !self.gaps.contains(&s) {
            self.gaps.push(s);
        }
    }

    fn stat(&mut self, key: &str, value: f64) {
        self.statistics.insert(key.to_string(), value);
    }

    fn finish(mut self, failed: bool) -> Verdict {
        self.witnesses.sort_by(canonical_order);
        let witness_count = self.witnesses.len();
        self.witnesses.truncate(MAX_WITNESSES);
        self.gaps.sort();
        let status = if failed {
            Status::Fail
        } else if !self.gaps.is_empty() {
            Status::CoverageGap
        } else {
            Status::Pass
        };
        Verdict {
            id: self.id,
            pass: matches!(status, Status::Pass),
            status,
            max_defect: self.max_defect,
            witnesses: self.witnesses,
            witness_count,
            coverage_gaps: self.gaps,
            statistics: self.statistics,
        }
    }
}

/// Contexts sharing one effect.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextFamily {
    shared: Effect,
    contexts: Vec<ProjectiveContext>,
    positions: Vec<usize>,
}

impl ContextFamily {
    pub fn new(shared: Effect, contexts: Vec<ProjectiveContext>) -> Result<Self> {
        let positions = contexts
            .iter()
            .map(|c| {
                c.effects()
                    .iter()
                    .position(|e| e.approx_eq(&shared))
                    .ok_or_else(|| Error::SharedEffectMissing(c.label().to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ContextFamily {
            shared,
            contexts,
            positions,
        })
    }

    /// One family per ray that occurs in at least two of `contexts`, in order
    /// of first occurrence.
    pub fn derive(contexts: &[ProjectiveContext]) -> Vec<ContextFamily> {
        let mut rays: Vec<Ket> = Vec::new();
        for k in contexts.iter().flat_map(|c| c.rays()) {
            if !rays.iter().any(|r| r.same_ray(k)) {
                rays.push(k.clone());
            }
        }
        rays.into_iter()
            .filter_map(|r| {
                let members: Vec<ProjectiveContext> =
                    contexts.iter().filter(|c| c.position_of(&r).is_some()).cloned().collect();
                if members.len() < 2 {
                    return None;
                }
                // Use each member's own copy of the ray so phases match exactly.
                let shared = members[0].effects()[members[0].position_of(&r)?].clone();
                let positions = members.iter().map(|c| c.position_of(&r)).collect::<Option<Vec<_>>>()?;
                Some(ContextFamily {
                    shared,
                    contexts: members,
                    positions,
                })
            })
            .collect()
    }

    pub fn shared(&self) -> &Effect {
        &self.shared
    }

    pub fn contexts(&self) -> &[ProjectiveContext] {
        &self.contexts
    }

    /// Index of the shared effect inside each member.
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }
}

/// `|predicted − Born|` over every (state, context, effect) triple.
pub fn check_born_agreement(model: &OntologicalModel, states: &[Ket], contexts: &[ProjectiveContext], tol: f64) -> Verdict {
    let per_state: Vec<(Vec<Witness>, f64, Vec<String>, usize)> = states
        .par_iter()
        .map(|psi| {
            let mut witnesses = Vec::new();
            let mut max: f64 = 0.0;
            let mut gaps = Vec::new();
            let mut evaluated = 0;
            for ctx in contexts {
                for (i, e) in ctx.effects().iter().enumerate() {
                    let predicted = predicted_probability(model, psi, DEFAULT_PREP, ctx, i);
                    let born = born_probability(psi, e);
                    match (predicted, born) {
                        (Ok(p), Ok(b)) => {
                            evaluated += 1;
                            let d = (p - b).abs();
                            max = max.max(d);
                            if d > tol {
                                witnesses.push(Witness {
                                    state: Some(psi.clone()),
                                    context: Some(ctx.label().to_string()),
                                    effect: Some(i),
                                    defect: d,
                                    ..Witness::default()
                                });
                            }
                        }
                        (Err(e), _) | (_, Err(e)) => gaps.push(e.to_string()),
                    }
                }
            }
            (witnesses, max, gaps, evaluated)
        })
        .collect();
    let mut b = VerdictBuilder::new(CheckId::Born);
    let mut evaluated = 0;
    for (ws, max, gaps, n) in per_state {
        b.defect(max);
        ws.into_iter().for_each(|w| b.witness(w));
        for g in gaps {
            if !b.gaps.contains(&g) {
                b.gaps.push(g);
            }
        }
        evaluated += n;
    }
    b.stat("triples", evaluated as f64);
    b.stat("tolerance", tol);
    let failed = b.max_defect > tol;
    b.finish(failed)
}

/// Support of `ξ_i` for each effect of `m`, or the first lookup error.
fn effect_supports(model: &OntologicalModel, m: &dyn Measurement, cond: Option<&Ket>) -> Result<Vec<(Vec<f64>, Support)>> {
    (0..m.effects().len())
        .map(|i| {
            let row = model.response(m, i, cond)?;
            let s = support(&row, DELTA_SUPP);
            Ok((row.to_vec(), s))
        })
        .collect()
}

fn union_all(rows: &[(Vec<f64>, Support)]) -> Support {
    rows.iter().fold(Support::empty(), |acc, (_, s)| acc.union(s))
}

/// Verdicts for the three support lemmas.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupportLemmas {
    pub lemma1: Verdict,
    pub lemma2: Verdict,
    pub lemma3: Verdict,
}

fn basis_for(contexts: &[ProjectiveContext], basis_states: &[Vec<Ket>]) -> Result<Vec<Vec<Ket>>> {
    if basis_states.is_empty() {
        return Ok(contexts.iter().map(|c| c.rays().cloned().collect()).collect());
    }
    if basis_states.len() != contexts.len() {
        return Err(Error::BasisMismatch(format!(
            "{} basis lists for {} contexts",
            basis_states.len(),
            contexts.len()
        )));
    }
    for (c, b) in contexts.iter().zip(basis_states) {
        if b.len() != c.len() || b.iter().enumerate().any(|(j, k)| !k.same_ray(c.ray(j))) {
            return Err(Error::BasisMismatch(c.label().to_string()));
        }
    }
    Ok(basis_states.to_vec())
}

/// Lemma 1: `∪_i Supp ξ_{E_i}` is the same set for every listed measurement.
/// Lemma 2: `Supp ξ_{E_i}(·,M) ∩ Supp ρ(·|ψ_j) = ∅` for `i ≠ j`, `ψ_j` the
/// basis states of each context.
/// Lemma 3: for outcome-deterministic responses, effect supports within a
/// context are pairwise disjoint; "not applicable" otherwise.
///
/// State-dependent models are checked separately for each basis state.
/// `basis_states` may be empty, in which case each context's rays are used.
pub fn check_support_lemmas(
    model: &OntologicalModel,
    povms: &[Povm],
    contexts: &[ProjectiveContext],
    basis_states: &[Vec<Ket>],
) -> Result<SupportLemmas> {
    let basis = basis_for(contexts, basis_states)?;
    let mut all_states: Vec<Ket> = Vec::new();
    for k in basis.iter().flatten() {
        if !all_states.iter().any(|s| s.same_ray(k)) {
            all_states.push(k.clone());
        }
    }
    let conditions: Vec<Option<&Ket>> = if model.has_state_dependent_responses() {
        all_states.iter().map(Some).collect()
    } else {
        vec![None]
    };
    let measurements: Vec<&dyn Measurement> = povms
        .iter()
        .map(|p| p as &dyn Measurement)
        .chain(contexts.iter().map(|c| c as &dyn Measurement))
        .collect();

    // Lemma 1.
    let mut l1 = VerdictBuilder::new(CheckId::Lemma1);
    for &cond in &conditions {
        let mut reference: Option<(&dyn Measurement, Vec<(Vec<f64>, Support)>, Support)> = None;
        for &m in &measurements {
            let rows = match effect_supports(model, m, cond) {
                Ok(r) => r,
                Err(e) => {
                    l1.gap(&e);
                    continue;
                }
            };
            let union = union_all(&rows);
            match &reference {
                None => reference = Some((m, rows, union)),
                Some((rm, rrows, runion)) => {
                    let diff = runion.difference(&union).union(&union.difference(runion));
                    for lambda in diff.iter() {
                        let a: f64 = rrows.iter().map(|(r, _)| r[lambda]).sum();
                        let b: f64 = rows.iter().map(|(r, _)| r[lambda]).sum();
                        l1.witness(Witness {
                            lambda: Some(lambda),
                            state: cond.cloned(),
                            context: Some(rm.label().to_string()),
                            other_context: Some(m.label().to_string()),
                            defect: (a - b).abs(),
                            ..Witness::default()
                        });
                    }
                }
            }
        }
    }
    l1.stat("measurements", measurements.len() as f64);
    let failed = !l1.witnesses.is_empty();
    let lemma1 = l1.finish(failed);

    // Lemma 2.
    let mut l2 = VerdictBuilder::new(CheckId::Lemma2);
    let measure = model.ontic().measure();
    for (ctx, states) in contexts.iter().zip(&basis) {
        for (j, psi) in states.iter().enumerate() {
            let rho = match model.density(psi, DEFAULT_PREP) {
                Ok(r) => r,
                Err(e) => {
                    l2.gap(&e);
                    continue;
                }
            };
            let s_rho = support(&rho, DELTA_SUPP);
            for i in (0..ctx.len()).filter(|&i| i != j) {
                let xi = match model.response(ctx, i, Some(psi)) {
                    Ok(x) => x,
                    Err(e) => {
                        l2.gap(&e);
                        continue;
                    }
                };
                for lambda in support(&xi, DELTA_SUPP).intersection(&s_rho).iter() {
                    l2.witness(Witness {
                        lambda: Some(lambda),
                        state: Some(psi.clone()),
                        context: Some(ctx.label().to_string()),
                        effect: Some(i),
                        defect: xi[lambda] * rho[lambda] * measure[lambda],
                        ..Witness::default()
                    });
                }
            }
        }
    }
    let failed = !l2.witnesses.is_empty();
    let lemma2 = l2.finish(failed);

    // Lemma 3.
    let mut table: Vec<(&ProjectiveContext, Option<&Ket>, Vec<(Vec<f64>, Support)>)> = Vec::new();
    let mut l3 = VerdictBuilder::new(CheckId::Lemma3);
    for ctx in contexts {
        for &cond in &conditions {
            match effect_supports(model, ctx, cond) {
                Ok(rows) => table.push((ctx, cond, rows)),
                Err(e) => l3.gap(&e),
            }
        }
    }
    let sharp = table.iter().all(|(_, _, rows)| {
        rows.iter()
            .flat_map(|(r, _)| r.iter())
            .all(|&x| x.abs() <= DETERMINISM_TOL || (x - 1.0).abs() <= DETERMINISM_TOL)
    });
    let lemma3 = if !sharp {
        let mut v = Verdict::not_applicable(CheckId::Lemma3, "responses are not outcome-deterministic");
        v.coverage_gaps = l3.gaps;
        v
    } else {
        for (ctx, cond, rows) in &table {
            for i in 0..rows.len() {
                for j in i + 1..rows.len() {
                    for lambda in rows[i].1.intersection(&rows[j].1).iter() {
                        l3.witness(Witness {
                            lambda: Some(lambda),
                            state: cond.cloned(),
                            context: Some(ctx.label().to_string()),
                            effect: Some(i),
                            other_effect: Some(j),
                            defect: rows[i].0[lambda].min(rows[j].0[lambda]),
                            ..Witness::default()
                        });
                    }
                }
            }
        }
        let failed = !l3.witnesses.is_empty();
        l3.finish(failed)
    };
    Ok(SupportLemmas { lemma1, lemma2, lemma3 })
}

/// Effects (by ray) occurring in at least two of `contexts` whose response
/// support differs between occurrences, evaluated under `cond`.
pub fn contextual_effects(model: &OntologicalModel, contexts: &[ProjectiveContext], cond: Option<&Ket>) -> Result<Vec<Ket>> {
    let mut rays: Vec<Ket> = Vec::new();
    for k in contexts.iter().flat_map(|c| c.rays()) {
        if !rays.iter().any(|r| r.same_ray(k)) {
            rays.push(k.clone());
        }
    }
    let mut out = Vec::new();
    for r in rays {
        let mut seen: Option<Support> = None;
        let mut varies = false;
        for c in contexts {
            let Some(i) = c.position_of(&r) else { continue };
            let s = support(&model.response(c, i, cond)?, DELTA_SUPP);
            match &seen {
                None => seen = Some(s),
                Some(first) if *first != s => varies = true,
                Some(_) => {}
            }
        }
        if varies {
            out.push(r);
        }
    }
    Ok(out)
}

/// Deficiency data for one state that is a ray of one context.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeficiencyReport {
    pub state: Ket,
    pub prep: String,
    pub context: String,
    pub effect: usize,
    /// `Supp ρ(·|ψ) ⊆ Supp ξ_{E_ψ}(·,M)`.
    pub support_inclusion: bool,
    /// Inclusion holds and the difference has measure above [`DELTA_SUPP`].
    pub deficient: bool,
    pub rho_support: usize,
    pub xi_support: usize,
    pub gap_points: usize,
    pub gap_measure: f64,
    /// Effects whose support varies across the supplied family.
    pub contextual_effects: usize,
    /// For deterministic λ-sufficient models with at least one contextual
    /// effect: whether more than one outcome is contextual. `None` otherwise.
    pub corollary_holds: Option<bool>,
}

/// Compares `Supp ρ(·|ψ,P)` with `Supp ξ_{E_ψ}(·,M)` and reports how many
/// effects change support across `family`.
pub fn check_deficiency(
    model: &OntologicalModel,
    state: &Ket,
    prep: &str,
    context: &ProjectiveContext,
    family: &[ProjectiveContext],
) -> Result<DeficiencyReport> {
    let effect = context
        .position_of(state)
        .ok_or_else(|| Error::StateNotInContext(context.label().to_string()))?;
    let rho = model.density(state, prep)?;
    let xi = model.response(context, effect, Some(state))?;
    let s_rho = support(&rho, DELTA_SUPP);
    let s_xi = support(&xi, DELTA_SUPP);
    let gap = s_xi.difference(&s_rho);
    let gap_measure = gap.measure(model.ontic().measure());
    let inclusion = s_rho.is_subset(&s_xi);

    let mut members: Vec<ProjectiveContext> = vec![context.clone()];
    members.extend(family.iter().filter(|c| c.label() != context.label()).cloned());
    let contextual = contextual_effects(model, &members, Some(state))?.len();
    let meta = model.meta();
    let corollary_holds =
        (meta.claims_deterministic && meta.claims_lambda_sufficient && contextual >= 1).then_some(contextual >= 2);
    Ok(DeficiencyReport {
        state: state.clone(),
        prep: prep.to_string(),
        context: context.label().to_string(),
        effect,
        support_inclusion: inclusion,
        deficient: inclusion && gap_measure > DELTA_SUPP,
        rho_support: s_rho.len(),
        xi_support: s_xi.len(),
        gap_points: gap.len(),
        gap_measure,
        contextual_effects: contextual,
        corollary_holds,
    })
}

fn state_set(family: &ContextFamily, i: usize, j: usize) -> Vec<Ket> {
    let mut out: Vec<Ket> = Vec::new();
    for k in family.contexts[i].rays().chain(family.contexts[j].rays()) {
        if !out.iter().any(|s| s.same_ray(k)) {
            out.push(k.clone());
        }
    }
    out
}

fn differing(a: &[f64], b: &[f64]) -> Support {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| (*x - *y).abs() > DELTA_SUPP)
        .map(|(i, _)| i)
        .collect()
}

/// The probability of the shared effect must not depend on the rest of the
/// context: `Δ = |Σ_λ ξ_E(λ,M)ρ − Σ_λ ξ_E(λ,M′)ρ| ≤ tol` for every state and
/// pair of members. Also collects the contextual set
/// `λ_c = {λ : ξ_E(λ,M) ≠ ξ_E(λ,M′)}` and requires it to avoid the supports of
/// the pair's basis states (evaluated with responses conditioned on that
/// basis state for state-dependent models).
///
/// `tol` defaults to the model's context tolerance; `preps` to the default
/// preparation.
pub fn check_cross_context(
    model: &OntologicalModel,
    family: &ContextFamily,
    states: &[Ket],
    preps: &[&str],
    tol: Option<f64>,
) -> Result<Verdict> {
    for (c, &p) in family.contexts.iter().zip(&family.positions) {
        if !c.effects()[p].approx_eq(&family.shared) {
            return Err(Error::SharedEffectMissing(c.label().to_string()));
        }
    }
    let tol = tol.unwrap_or(model.meta().context_tolerance);
    let preps: Vec<&str> = if preps.is_empty() { vec![DEFAULT_PREP] } else { preps.to_vec() };
    let n_ctx = family.contexts.len();
    let measure = model.ontic().measure();

    struct StateOutcome {
        witnesses: Vec<Witness>,
        max: f64,
        gaps: Vec<String>,
        lambda_c: Vec<(usize, usize, Support)>,
        variance: Option<f64>,
    }

    let outcomes: Vec<StateOutcome> = states
        .par_iter()
        .flat_map_iter(|psi| preps.iter().map(move |p| (psi, *p)))
        .map(|(psi, prep)| {
            let mut out = StateOutcome {
                witnesses: Vec::new(),
                max: 0.0,
                gaps: Vec::new(),
                lambda_c: Vec::new(),
                variance: None,
            };
            let rho = match model.density(psi, prep) {
                Ok(r) => r,
                Err(e) => {
                    out.gaps.push(e.to_string());
                    return out;
                }
            };
            let mut rows: Vec<Option<std::sync::Arc<[f64]>>> = Vec::with_capacity(n_ctx);
            for (c, &pos) in family.contexts.iter().zip(&family.positions) {
                match model.response(c, pos, Some(psi)) {
                    Ok(r) => rows.push(Some(r)),
                    Err(e) => {
                        out.gaps.push(e.to_string());
                        rows.push(None);
                    }
                }
            }
            let probs: Vec<Option<f64>> = rows
                .iter()
                .map(|r| r.as_ref().map(|r| model.ontic().integrate(r, &rho)))
                .collect();
            for i in 0..n_ctx {
                for j in i + 1..n_ctx {
                    let (Some(a), Some(b)) = (probs[i], probs[j]) else { continue };
                    let delta = (a - b).abs();
                    out.max = out.max.max(delta);
                    if delta > tol {
                        out.witnesses.push(Witness {
                            state: Some(psi.clone()),
                            prep: Some(prep.to_string()),
                            context: Some(family.contexts[i].label().to_string()),
                            other_context: Some(family.contexts[j].label().to_string()),
                            effect: Some(family.positions[i]),
                            other_effect: Some(family.positions[j]),
                            defect: delta,
                            ..Witness::default()
                        });
                    }
                    if let (Some(ra), Some(rb)) = (&rows[i], &rows[j]) {
                        let lc = differing(ra, rb);
                        if !lc.is_empty() {
                            out.lambda_c.push((i, j, lc));
                        }
                    }
                }
            }
            // Spread of ρ over the points whose response to the shared effect
            // changes somewhere in the family.
            let supports: Vec<Support> = rows.iter().flatten().map(|r| support(r, DELTA_SUPP)).collect();
            if let Some(first) = supports.first() {
                let union = supports.iter().fold(Support::empty(), |a, s| a.union(s));
                let inter = supports.iter().skip(1).fold(first.clone(), |a, s| a.intersection(s));
                let region = union.difference(&inter);
                let mass = region.measure(measure);
                if mass > 0.0 {
                    let mean = region.iter().map(|l| rho[l] * measure[l]).sum::<f64>() / mass;
                    let var = region.iter().map(|l| (rho[l] - mean).powi(2) * measure[l]).sum::<f64>() / mass;
                    out.variance = Some(var);
                }
            }
            out
        })
        .collect();

    let mut b = VerdictBuilder::new(CheckId::CrossContext);
    let mut lambda_c_points = Support::empty();
    let mut pairs_with_lambda_c = std::collections::BTreeSet::new();
    let mut variances = Vec::new();
    for o in outcomes {
        b.defect(o.max);
        o.witnesses.into_iter().for_each(|w| b.witness(w));
        for g in o.gaps {
            if !b.gaps.contains(&g) {
                b.gaps.push(g);
            }
        }
        for (i, j, lc) in o.lambda_c {
            pairs_with_lambda_c.insert((i, j));
            lambda_c_points = lambda_c_points.union(&lc);
        }
        variances.extend(o.variance);
    }
    let max_delta = b.max_defect;

    // λ_c must stay out of the supports of the basis states of each pair.
    let mut interstitial_violations = 0usize;
    for i in 0..n_ctx {
        for j in i + 1..n_ctx {
            let (ci, cj) = (&family.contexts[i], &family.contexts[j]);
            let (pi, pj) = (family.positions[i], family.positions[j]);
            for phi in state_set(family, i, j) {
                let (ra, rb) = match (model.response(ci, pi, Some(&phi)), model.response(cj, pj, Some(&phi))) {
                    (Ok(a), Ok(b)) => (a, b),
                    (Err(e), _) | (_, Err(e)) => {
                        b.gap(&e);
                        continue;
                    }
                };
                let lc = differing(&ra, &rb);
                if lc.is_empty() {
                    continue;
                }
                for &prep in &preps {
                    let rho = match model.density(&phi, prep) {
                        Ok(r) => r,
                        Err(e) => {
                            b.gap(&e);
                            continue;
                        }
                    };
                    for lambda in lc.intersection(&support(&rho, DELTA_SUPP)).iter() {
                        interstitial_violations += 1;
                        b.witness(Witness {
                            lambda: Some(lambda),
                            state: Some(phi.clone()),
                            prep: Some(prep.to_string()),
                            context: Some(ci.label().to_string()),
                            other_context: Some(cj.label().to_string()),
                            effect: Some(pi),
                            other_effect: Some(pj),
                            kind: Some("interstitial".into()),
                            defect: (ra[lambda] - rb[lambda]).abs(),
                            ..Witness::default()
                        });
                    }
                }
            }
        }
    }
    b.stat("max_delta", max_delta);
    b.stat("tolerance", tol);
    b.stat("members", n_ctx as f64);
    b.stat("lambda_c_points", lambda_c_points.len() as f64);
    b.stat("pairs_with_lambda_c", pairs_with_lambda_c.len() as f64);
    b.stat("interstitial_violations", interstitial_violations as f64);
    if !variances.is_empty() {
        b.stat(
            "rho_variance_on_contextual_region",
            variances.iter().sum::<f64>() / variances.len() as f64,
        );
    }
    let failed = max_delta > tol || interstitial_violations > 0;
    Ok(b.finish(failed))
}

/// Structural pass when no response depends on the state; otherwise compares
/// every `ξ(λ; ψ)` across `states` and fails on any difference above
/// [`LAMBDA_SUFFICIENCY_TOL`].
pub fn check_lambda_sufficiency(model: &OntologicalModel, states: &[Ket], contexts: &[ProjectiveContext]) -> Verdict {
    let mut b = VerdictBuilder::new(CheckId::LambdaSufficiency);
    if !model.has_state_dependent_responses() {
        b.stat("structural", 1.0);
        return b.finish(false);
    }
    b.stat("structural", 0.0);
    for ctx in contexts {
        for e in 0..ctx.len() {
            let mut rows: Vec<(&Ket, std::sync::Arc<[f64]>)> = Vec::new();
            for psi in states {
                match model.response(ctx, e, Some(psi)) {
                    Ok(r) => rows.push((psi, r)),
                    Err(err) => b.gap(&err),
                }
            }
            if rows.len() < 2 {
                continue;
            }
            for lambda in 0..model.ontic().len() {
                let mut imin = 0;
                let mut imax = 0;
                for (k, (_, r)) in rows.iter().enumerate() {
                    if r[lambda] < rows[imin].1[lambda] {
                        imin = k;
                    }
                    if r[lambda] > rows[imax].1[lambda] {
                        imax = k;
                    }
                }
                let d = rows[imax].1[lambda] - rows[imin].1[lambda];
                if d > LAMBDA_SUFFICIENCY_TOL {
                    b.witness(Witness {
                        lambda: Some(lambda),
                        state: Some(rows[imax].0.clone()),
                        other_state: Some(rows[imin].0.clone()),
                        context: Some(ctx.label().to_string()),
                        effect: Some(e),
                        defect: d,
                        ..Witness::default()
                    });
                }
            }
        }
    }
    let failed = !b.witnesses.is_empty();
    b.finish(failed)
}

/// How one context's effect supports sit inside `Λ_ξ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Partition {
    pub context: String,
    /// Points of `Λ_ξ` outside every effect support of this context.
    pub uncovered: Support,
    /// Points in more than one effect support.
    pub overlaps: Support,
}

impl Partition {
    pub fn is_exact(&self) -> bool {
        self.uncovered.is_empty() && self.overlaps.is_empty()
    }
}

/// Splits `Λ_ξ`, the union of all response supports over `contexts`, by the
/// effects of each context. For deterministic models every part is exact.
pub fn context_partitions(model: &OntologicalModel, contexts: &[ProjectiveContext], cond: Option<&Ket>) -> Result<Vec<Partition>> {
    let rows = contexts
        .iter()
        .map(|c| effect_supports(model, c, cond))
        .collect::<Result<Vec<_>>>()?;
    let lambda_xi = rows.iter().fold(Support::empty(), |a, r| a.union(&union_all(r)));
    Ok(contexts
        .iter()
        .zip(&rows)
        .map(|(c, r)| {
            let mut overlaps = Support::empty();
            for i in 0..r.len() {
                for j in i + 1..r.len() {
                    overlaps = overlaps.union(&r[i].1.intersection(&r[j].1));
                }
            }
            Partition {
                context: c.label().to_string(),
                uncovered: lambda_xi.difference(&union_all(r)),
                overlaps,
            }
        })
        .collect())
}

/// Which checks to run and on what sample.
#[derive(Clone, Debug, Default)]
pub struct SuiteConfig {
    pub checks: Vec<CheckId>,
    pub seed: u64,
    /// States to test; defaults to the model's registered states.
    pub states: Option<Vec<Ket>>,
    /// Contexts to test; defaults to the model's registered contexts.
    pub contexts: Option<Vec<ProjectiveContext>>,
    /// Extra Haar-random states drawn from the seed.
    pub random_states: usize,
    /// Extra random contexts drawn from the seed.
    pub random_contexts: usize,
    pub born_tolerance: Option<f64>,
    pub context_tolerance: Option<f64>,
}

impl SuiteConfig {
    pub fn full(seed: u64) -> Self {
        SuiteConfig {
            checks: CheckId::ALL.to_vec(),
            seed,
            ..SuiteConfig::default()
        }
    }
}

/// All verdicts for one model.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub model: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, f64>,
    pub checks: Vec<Verdict>,
}

impl VerificationReport {
    pub fn verdict(&self, id: CheckId) -> Option<&Verdict> {
        self.checks.iter().find(|v| v.id == id)
    }

    pub fn failing(&self) -> Vec<CheckId> {
        self.checks.iter().filter(|v| v.status == Status::Fail).map(|v| v.id).collect()
    }

    /// 0 when everything passes, 2 on any failure, 4 on coverage gaps only.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|v| v.status == Status::Fail) {
            2
        } else if self.checks.iter().any(|v| v.status == Status::CoverageGap) {
            4
        } else {
            0
        }
    }
}

fn model_verdict(model: &OntologicalModel) -> Verdict {
    let mut b = VerdictBuilder::new(CheckId::Model);
    for v in validate_model(model) {
        b.witness(Witness {
            lambda: v.lambda,
            state: v.state,
            prep: v.prep,
            context: v.context,
            effect: v.effect,
            kind: Some(
                serde_json::to_value(v.kind)
                    .ok()
                    .and_then(|s| s.as_str().map(str::to_string))
                    .unwrap_or_default(),
            ),
            defect: v.defect,
            ..Witness::default()
        });
    }
    let failed = !b.witnesses.is_empty();
    b.finish(failed)
}

fn deficiency_verdict(model: &OntologicalModel, states: &[Ket], contexts: &[ProjectiveContext]) -> Verdict {
    let mut b = VerdictBuilder::new(CheckId::Deficiency);
    let mut tested = 0usize;
    let mut deficient = 0usize;
    let mut tested_witnesses = Vec::new();
    for ctx in contexts {
        for (i, ray) in ctx.rays().enumerate() {
            match check_deficiency(model, ray, DEFAULT_PREP, ctx, &[]) {
                Ok(r) => {
                    tested += 1;
                    if r.deficient {
                        deficient += 1;
                    }
                    tested_witnesses.push(Witness {
                        state: Some(ray.clone()),
                        prep: Some(DEFAULT_PREP.to_string()),
                        context: Some(ctx.label().to_string()),
                        effect: Some(i),
                        defect: r.gap_measure,
                        ..Witness::default()
                    });
                }
                Err(e) => b.gap(&e),
            }
        }
    }
    // Corollary 1 over the whole context list, once per conditioning state.
    let conditions: Vec<Option<&Ket>> = if model.has_state_dependent_responses() {
        states.iter().map(Some).collect()
    } else {
        vec![None]
    };
    let mut contextual: Vec<Ket> = Vec::new();
    for cond in conditions {
        match contextual_effects(model, contexts, cond) {
            Ok(found) => {
                for k in found {
                    if !contextual.iter().any(|c| c.same_ray(&k)) {
                        contextual.push(k);
                    }
                }
            }
            Err(e) => b.gap(&e),
        }
    }
    let meta = model.meta();
    let corollary = (meta.claims_deterministic && meta.claims_lambda_sufficient && !contextual.is_empty())
        .then_some(contextual.len() >= 2);
    b.stat("tested_pairs", tested as f64);
    b.stat("deficient_pairs", deficient as f64);
    b.stat("contextual_effects", contextual.len() as f64);
    if let Some(holds) = corollary {
        b.stat("corollary_holds", if holds { 1.0 } else { 0.0 });
    }
    // Deterministic λ-sufficient models in d ≥ 3 must be deficient somewhere.
    let must_be_deficient = meta.claims_deterministic && meta.claims_lambda_sufficient && model.dim() >= 3;
    let missing_deficiency = must_be_deficient && tested > 0 && deficient == 0;
    let failed = missing_deficiency || corollary == Some(false);
    if missing_deficiency {
        tested_witnesses.into_iter().for_each(|w| b.witness(w));
    }
    if corollary == Some(false) {
        for k in &contextual {
            b.witness(Witness {
                state: Some(k.clone()),
                kind: Some("single_contextual_effect".into()),
                defect: 1.0,
                ..Witness::default()
            });
        }
    }
    b.finish(failed)
}

/// Runs the configured checks.
pub fn run_report(model: &OntologicalModel, config: &SuiteConfig) -> Result<VerificationReport> {
    let mut states = config.states.clone().unwrap_or_else(|| model.states().to_vec());
    let mut contexts = config.contexts.clone().unwrap_or_else(|| model.contexts().to_vec());
    let dim = model.dim();
    if config.random_states > 0 {
        let mut rng = rng::stream(config.seed, rng::streams::STATES);
        for _ in 0..config.random_states {
            states.push(random_ket(dim, &mut rng)?);
        }
    }
    if config.random_contexts > 0 {
        let mut rng = rng::stream(config.seed, rng::streams::CONTEXTS);
        for k in 0..config.random_contexts {
            let first = random_ket(dim, &mut rng)?;
            contexts.push(random_completion(format!("random-{k}"), &[first], dim, &mut rng)?);
        }
    }
    let born_tol = config.born_tolerance.unwrap_or(model.meta().born_tolerance);
    let ctx_tol = config.context_tolerance.unwrap_or(model.meta().context_tolerance);

    let wants = |id| config.checks.contains(&id);
    let lemmas = if wants(CheckId::Lemma1) || wants(CheckId::Lemma2) || wants(CheckId::Lemma3) {
        Some(check_support_lemmas(model, &[], &contexts, &[])?)
    } else {
        None
    };
    let mut checks = Vec::new();
    for &id in &config.checks {
        let verdict = match id {
            CheckId::Model => model_verdict(model),
            CheckId::Born => check_born_agreement(model, &states, &contexts, born_tol),
            CheckId::Lemma1 => lemmas.as_ref().map(|l| l.lemma1.clone()).expect("computed above"),
            CheckId::Lemma2 => lemmas.as_ref().map(|l| l.lemma2.clone()).expect("computed above"),
            CheckId::Lemma3 => lemmas.as_ref().map(|l| l.lemma3.clone()).expect("computed above"),
            CheckId::Deficiency => deficiency_verdict(model, &states, &contexts),
            CheckId::CrossContext => {
                let families = ContextFamily::derive(&contexts);
                if families.is_empty() {
                    Verdict::not_applicable(id, "no effect is shared by two contexts")
                } else {
                    merge(
                        id,
                        families
                            .iter()
                            .map(|f| check_cross_context(model, f, &states, &[], Some(ctx_tol)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
            }
            CheckId::LambdaSufficiency => check_lambda_sufficiency(model, &states, &contexts),
        };
        checks.push(verdict);
    }
    let mut parameters = BTreeMap::new();
    parameters.insert("states".into(), states.len() as f64);
    parameters.insert("contexts".into(), contexts.len() as f64);
    parameters.insert("born_tolerance".into(), born_tol);
    parameters.insert("context_tolerance".into(), ctx_tol);
    parameters.insert("support_threshold".into(), DELTA_SUPP);
    Ok(VerificationReport {
        model: model.name().to_string(),
        seed: config.seed,
        parameters,
        checks,
    })
}

/// Combines verdicts of the same check run on several families.
fn merge(id: CheckId, parts: Vec<Verdict>) -> Verdict {
    let mut b = VerdictBuilder::new(id);
    let mut failed = false;
    for p in parts {
        failed |= p.status == Status::Fail;
        b.defect(p.max_defect);
        p.witnesses.into_iter().for_each(|w| b.witness(w));
        for g in p.coverage_gaps {
            if !b.gaps.contains(&g) {
                b.gaps.push(g);
            }
        }
        for (k, v) in p.statistics {
            match k.as_str() {
                "tolerance" | "members" => {
                    b.statistics.insert(k, v);
                }
                "max_delta" | "rho_variance_on_contextual_region" => {
                    let e = b.statistics.entry(k).or_insert(0.0);
                    *e = e.max(v);
                }
                _ => *b.statistics.entry(k).or_insert(0.0) += v,
            }
        }
    }
    b.statistics.remove("members");
    b.finish(failed)
}

/// Recomputes a witness's defect from the model. Measurements are resolved
/// by label among the model's contexts, then `contexts`, then `povms`.
pub fn replay_witness(
    model: &OntologicalModel,
    id: CheckId,
    w: &Witness,
    contexts: &[ProjectiveContext],
    povms: &[Povm],
) -> Result<f64> {
    let find = |label: &Option<String>| -> Result<&dyn Measurement> {
        let label = label.as_deref().ok_or_else(|| Error::UnknownMeasurement("<none>".into()))?;
        model
            .contexts()
            .iter()
            .chain(contexts)
            .find(|c| c.label() == label)
            .map(|c| c as &dyn Measurement)
            .or_else(|| povms.iter().find(|p| p.label() == label).map(|p| p as &dyn Measurement))
            .ok_or_else(|| Error::UnknownMeasurement(label.to_string()))
    };
    let need = |x: Option<usize>| x.ok_or_else(|| Error::InvalidModel("witness lacks an index".into()));
    let state = || w.state.as_ref().ok_or_else(|| Error::InvalidModel("witness lacks a state".into()));
    let prep = w.prep.as_deref().unwrap_or(DEFAULT_PREP);
    match id {
        CheckId::Born => {
            let m = find(&w.context)?;
            let e = need(w.effect)?;
            let p = predicted_probability(model, state()?, prep, m, e)?;
            Ok((p - born_probability(state()?, &m.effects()[e])?).abs())
        }
        CheckId::Lemma1 => {
            let (a, b) = (find(&w.context)?, find(&w.other_context)?);
            let l = need(w.lambda)?;
            let total = |m: &dyn Measurement| -> Result<f64> {
                (0..m.effects().len()).map(|i| Ok(model.response(m, i, w.state.as_ref())?[l])).sum()
            };
            Ok((total(a)? - total(b)?).abs())
        }
        CheckId::Lemma2 => {
            let m = find(&w.context)?;
            let l = need(w.lambda)?;
            let xi = model.response(m, need(w.effect)?, Some(state()?))?;
            let rho = model.density(state()?, prep)?;
            Ok(xi[l] * rho[l] * model.ontic().measure()[l])
        }
        CheckId::Lemma3 => {
            let m = find(&w.context)?;
            let l = need(w.lambda)?;
            let a = model.response(m, need(w.effect)?, w.state.as_ref())?;
            let b = model.response(m, need(w.other_effect)?, w.state.as_ref())?;
            Ok(a[l].min(b[l]))
        }
        CheckId::Deficiency => {
            let m = find(&w.context)?;
            let ctx = model
                .contexts()
                .iter()
                .chain(contexts)
                .find(|c| c.label() == m.label())
                .ok_or_else(|| Error::UnknownMeasurement(m.label().to_string()))?;
            Ok(check_deficiency(model, state()?, prep, ctx, &[])?.gap_measure)
        }
        CheckId::CrossContext => {
            let (a, b) = (find(&w.context)?, find(&w.other_context)?);
            let (ea, eb) = (need(w.effect)?, need(w.other_effect)?);
            let psi = state()?;
            let ra = model.response(a, ea, Some(psi))?;
            let rb = model.response(b, eb, Some(psi))?;
            match w.lambda {
                Some(l) => Ok((ra[l] - rb[l]).abs()),
                None => {
                    let rho = model.density(psi, prep)?;
                    Ok((model.ontic().integrate(&ra, &rho) - model.ontic().integrate(&rb, &rho)).abs())
                }
            }
        }
        CheckId::LambdaSufficiency => {
            let m = find(&w.context)?;
            let e = need(w.effect)?;
            let l = need(w.lambda)?;
            let other = w.other_state.as_ref().ok_or_else(|| Error::InvalidModel("witness lacks a second state".into()))?;
            let a = model.response(m, e, Some(state()?))?;
            let b = model.response(m, e, Some(other))?;
            Ok((a[l] - b[l]).abs())
        }
        CheckId::Model => {
            let kind = w.kind.as_deref().unwrap_or_default();
            match kind {
                "epistemic_normalization" => {
                    let rho = model.density(state()?, prep)?;
                    Ok((model.ontic().total(&rho) - 1.0).abs())
                }
                "negative_density" => Ok(-model.density(state()?, prep)?[need(w.lambda)?]),
                "response_range" => {
                    let m = find(&w.context)?;
                    let x = model.response(m, need(w.effect)?, w.state.as_ref())?[need(w.lambda)?];
                    Ok(if x < 0.0 { -x } else { x - 1.0 })
                }
                "response_normalization" => {
                    let m = find(&w.context)?;
                    let l = need(w.lambda)?;
                    let s: f64 = (0..m.effects().len())
                        .map(|i| Ok(model.response(m, i, w.state.as_ref())?[l]))
                        .sum::<Result<f64>>()?;
                    Ok((s - 1.0).abs())
                }
                "invalid_context" => {
                    let ctx = model
                        .context(w.context.as_deref().unwrap_or_default())
                        .ok_or_else(|| Error::UnknownMeasurement(format!("{:?}", w.context)))?;
                    let v = crate::quantum::validate_context(ctx);
                    Ok(v.orthogonality_defect.max(v.completeness_defect))
                }
                _ => Ok(w.defect),
            }
        }
    }
}
