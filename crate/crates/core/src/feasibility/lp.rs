//! Born-rule constraint systems with one side of the model held fixed.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::simplex::{rational, to_f64, LinearSystem, Rational, Sense, SimplexOutcome};
use crate::error::{Error, Result};
use crate::ontic::{predicted_probability, EpistemicState, ModelMeta, OnticSpace, OntologicalModel, ResponseFunction, StateTable, DEFAULT_PREP};
use crate::quantum::{born_probability, Ket, ProjectiveContext, EPS_NORM};

/// Half-width of the interval each Born equality is relaxed to.
pub const TOL_LP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpMode {
    FixRhoSolveXi,
    FixXiSolveRho,
    /// Both sides free. The constraints are bilinear; always rejected.
    Joint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BornTarget {
    /// Index into the problem's states.
    pub state: usize,
    pub context: String,
    pub effect: usize,
    pub target: f64,
}

/// Born targets for every state, context and effect.
pub fn born_targets(states: &[Ket], contexts: &[ProjectiveContext]) -> Result<Vec<BornTarget>> {
    let mut out = Vec::new();
    for (s, psi) in states.iter().enumerate() {
        for c in contexts {
            for (e, effect) in c.effects().iter().enumerate() {
                out.push(BornTarget {
                    state: s,
                    context: c.label().to_string(),
                    effect: e,
                    target: born_probability(psi, effect)?,
                });
            }
        }
    }
    Ok(out)
}

fn default_tolerance() -> f64 {
    TOL_LP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityProblem {
    pub mode: LpMode,
    pub ontic: OnticSpace,
    pub states: Vec<Ket>,
    pub contexts: Vec<ProjectiveContext>,
    pub targets: Vec<BornTarget>,
    /// Fixed `ρ(·|ψ_s)` per state, for [`LpMode::FixRhoSolveXi`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<Vec<Vec<f64>>>,
    /// Fixed response rows for every effect of every context, for
    /// [`LpMode::FixXiSolveRho`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<Vec<ResponseFunction>>,
    /// `ξ` may not depend on the prepared state.
    #[serde(default)]
    pub lambda_sufficient: bool,
    /// `ξ` for a ray must not depend on which context it is measured in.
    #[serde(default)]
    pub noncontextual: bool,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

impl FeasibilityProblem {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn context_index(&self, label: &str) -> Result<usize> {
        self.contexts
            .iter()
            .position(|c| c.label() == label)
            .ok_or_else(|| Error::MalformedProblem(format!("unknown context `{label}`")))
    }

    /// Pairs of `(context, effect)` naming the same ray, first occurrence first.
    fn ties(&self) -> Vec<((usize, usize), (usize, usize))> {
        let mut first: Vec<(Ket, (usize, usize))> = Vec::new();
        let mut out = Vec::new();
        for (c, ctx) in self.contexts.iter().enumerate() {
            for (e, ray) in ctx.rays().enumerate() {
                match first.iter().find(|(k, _)| k.same_ray(ray)) {
                    Some((_, at)) => out.push((*at, (c, e))),
                    None => first.push((ray.clone(), (c, e))),
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == LpMode::Joint {
            return Err(Error::Bilinear);
        }
        OnticSpace::new(self.ontic.ids().to_vec(), self.ontic.measure().to_vec())?;
        let n = self.ontic.len();
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::MalformedProblem(format!("tolerance {}", self.tolerance)));
        }
        let dim = self
            .contexts
            .first()
            .map(|c| c.dim())
            .ok_or_else(|| Error::MalformedProblem("no contexts".into()))?;
        for c in &self.contexts {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            let v = crate::quantum::validate_context(c);
            if !v.pass {
                return Err(Error::InvalidContext {
                    label: c.label().to_string(),
                    reason: "not an orthonormal basis".into(),
                });
            }
        }
        for (k, c) in self.contexts.iter().enumerate() {
            if self.contexts[..k].iter().any(|o| o.label() == c.label()) {
                return Err(Error::MalformedProblem(format!("context label `{}` repeated", c.label())));
            }
        }
        for s in &self.states {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.dim(),
                });
            }
        }
        let mut sums: Vec<Vec<(f64, usize)>> = vec![vec![(0.0, 0); self.contexts.len()]; self.states.len()];
        for t in &self.targets {
            if t.state >= self.states.len() {
                return Err(Error::MalformedProblem(format!("target names state {}", t.state)));
            }
            let c = self.context_index(&t.context)?;
            if t.effect >= self.contexts[c].len() {
                return Err(Error::MalformedProblem(format!("target names effect {} of `{}`", t.effect, t.context)));
            }
            if !(0.0..=1.0).contains(&t.target) {
                return Err(Error::InconsistentTargets(format!("target {} outside [0, 1]", t.target)));
            }
            let slot = &mut sums[t.state][c];
            slot.0 += t.target;
            slot.1 += 1;
        }
        for (s, row) in sums.iter().enumerate() {
            for (c, &(sum, count)) in row.iter().enumerate() {
                let complete = count == self.contexts[c].len();
                if sum > 1.0 + EPS_NORM || (complete && (sum - 1.0).abs() > EPS_NORM) {
                    return Err(Error::InconsistentTargets(format!(
                        "targets for state {s} in `{}` sum to {sum}",
                        self.contexts[c].label()
                    )));
                }
            }
        }
        match self.mode {
            LpMode::FixRhoSolveXi => {
                let rho = self
                    .rho
                    .as_ref()
                    .ok_or_else(|| Error::MalformedProblem("fix_rho_solve_xi needs `rho`".into()))?;
                if rho.len() != self.states.len() {
                    return Err(Error::MalformedProblem(format!("{} rho rows for {} states", rho.len(), self.states.len())));
                }
                for (s, r) in rho.iter().enumerate() {
                    if r.len() != n || r.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                        return Err(Error::MalformedProblem(format!("rho row {s} is not a nonnegative table on the ontic space")));
                    }
                    let total = self.ontic.total(r);
                    if (total - 1.0).abs() > EPS_NORM {
                        return Err(Error::MalformedProblem(format!("rho row {s} integrates to {total}")));
                    }
                }
            }
            LpMode::FixXiSolveRho => {
                let xi = self
                    .xi
                    .as_ref()
                    .ok_or_else(|| Error::MalformedProblem("fix_xi_solve_rho needs `xi`".into()))?;
                for c in &self.contexts {
                    for e in 0..c.len() {
                        let row = xi
                            .iter()
                            .find(|r| r.context == c.label() && r.effect == e)
                            .ok_or_else(|| Error::MissingResponse {
                                context: c.label().to_string(),
                                effect: e,
                            })?;
                        if self.lambda_sufficient && row.state_dependent.is_some() {
                            return Err(Error::MalformedProblem(format!(
                                "`{}` effect {e} depends on the state in a λ-sufficient problem",
                                c.label()
                            )));
                        }
                        for s in &self.states {
                            let t = row.lookup(Some(s)).ok_or_else(|| Error::MissingResponse {
                                context: c.label().to_string(),
                                effect: e,
                            })?;
                            if t.len() != n {
                                return Err(Error::MalformedProblem(format!("`{}` effect {e} has {} entries", c.label(), t.len())));
                            }
                        }
                    }
                }
                if self.noncontextual {
                    for ((c0, e0), (c1, e1)) in self.ties() {
                        for s in &self.states {
                            if self.fixed_xi(c0, e0, s)? != self.fixed_xi(c1, e1, s)? {
                                return Err(Error::MalformedProblem(format!(
                                    "`{}` and `{}` respond differently to a shared ray",
                                    self.contexts[c0].label(),
                                    self.contexts[c1].label()
                                )));
                            }
                        }
                    }
                }
            }
            LpMode::Joint => unreachable!(),
        }
        Ok(())
    }

    fn fixed_xi(&self, c: usize, e: usize, state: &Ket) -> Result<&[f64]> {
        let label = self.contexts[c].label();
        self.xi
            .as_ref()
            .and_then(|rows| rows.iter().find(|r| r.context == label && r.effect == e))
            .and_then(|r| r.lookup(Some(state)))
            .ok_or_else(|| Error::MissingResponse {
                context: label.to_string(),
                effect: e,
            })
    }

    fn state_slots(&self) -> usize {
        if self.lambda_sufficient {
            1
        } else {
            self.states.len()
        }
    }

    /// Index of `ξ(λ; context c, effect e, state slot s)` in fix-ρ mode.
    fn xi_var(&self, c: usize, e: usize, s: usize, lambda: usize) -> usize {
        let d = self.contexts[0].dim();
        let n = self.ontic.len();
        ((c * d + e) * self.state_slots() + s) * n + lambda
    }

    /// The exact constraint system. Born rows are labelled `born:…`.
    pub fn to_system(&self) -> Result<LinearSystem> {
        self.system_with_tolerance(self.tolerance)
    }

    fn system_with_tolerance(&self, tolerance: f64) -> Result<LinearSystem> {
        self.validate()?;
        let n = self.ontic.len();
        let measure = self
            .ontic
            .measure()
            .iter()
            .map(|&m| rational(m))
            .collect::<Result<Vec<_>>>()?;
        let tol = rational(tolerance)?;
        let one = Rational::from_integer(1.into());
        let mut sys = LinearSystem::default();
        let born_row = |sys: &mut LinearSystem, t: &BornTarget, coeffs: Vec<(usize, Rational)>| -> Result<()> {
            let target = rational(t.target)?;
            let label = format!("born:{}:{}:{}", t.state, t.context, t.effect);
            if tol.is_zero() {
                sys.add_row(label, coeffs, Sense::Eq, target);
                return Ok(());
            }
            let lo = &target - &tol;
            if lo.is_positive() {
                sys.add_row(format!("{label}:lo"), coeffs.clone(), Sense::Ge, lo);
            }
            sys.add_row(format!("{label}:hi"), coeffs, Sense::Le, &target + &tol);
            Ok(())
        };
        match self.mode {
            LpMode::FixRhoSolveXi => {
                let d = self.contexts[0].dim();
                let slots = self.state_slots();
                for c in 0..self.contexts.len() {
                    for e in 0..d {
                        for s in 0..slots {
                            for l in 0..n {
                                sys.add_variable(format!("xi:{}:{e}:{s}:{l}", self.contexts[c].label()));
                            }
                        }
                    }
                }
                for c in 0..self.contexts.len() {
                    for s in 0..slots {
                        for l in 0..n {
                            let coeffs = (0..d).map(|e| (self.xi_var(c, e, s, l), one.clone())).collect();
                            sys.add_row(format!("norm:{}:{s}:{l}", self.contexts[c].label()), coeffs, Sense::Eq, one.clone());
                        }
                    }
                }
                if self.noncontextual {
                    for ((c0, e0), (c1, e1)) in self.ties() {
                        for s in 0..slots {
                            for l in 0..n {
                                sys.add_row(
                                    format!("tie:{}:{e0}:{}:{e1}:{s}:{l}", self.contexts[c0].label(), self.contexts[c1].label()),
                                    vec![(self.xi_var(c0, e0, s, l), one.clone()), (self.xi_var(c1, e1, s, l), -one.clone())],
                                    Sense::Eq,
                                    Rational::zero(),
                                );
                            }
                        }
                    }
                }
                let rho = self.rho.as_ref().expect("validated");
                for t in &self.targets {
                    let c = self.context_index(&t.context)?;
                    let s = if self.lambda_sufficient { 0 } else { t.state };
                    let mut coeffs = Vec::new();
                    for l in 0..n {
                        let w = rational(rho[t.state][l])? * &measure[l];
                        if !w.is_zero() {
                            coeffs.push((self.xi_var(c, t.effect, s, l), w));
                        }
                    }
                    born_row(&mut sys, t, coeffs)?;
                }
            }
            LpMode::FixXiSolveRho => {
                for s in 0..self.states.len() {
                    for l in 0..n {
                        sys.add_variable(format!("rho:{s}:{l}"));
                    }
                }
                for s in 0..self.states.len() {
                    let coeffs = (0..n).map(|l| (s * n + l, measure[l].clone())).collect();
                    sys.add_row(format!("norm:{s}"), coeffs, Sense::Eq, one.clone());
                }
                for t in &self.targets {
                    let c = self.context_index(&t.context)?;
                    let xi = self.fixed_xi(c, t.effect, &self.states[t.state])?;
                    let mut coeffs = Vec::new();
                    for l in 0..n {
                        let w = rational(xi[l])? * &measure[l];
                        if !w.is_zero() {
                            coeffs.push((t.state * n + l, w));
                        }
                    }
                    born_row(&mut sys, t, coeffs)?;
                }
            }
            LpMode::Joint => unreachable!(),
        }
        Ok(sys)
    }

    /// Assembles the model a solution vector describes.
    fn model_from(&self, x: &[Rational]) -> Result<(Vec<Vec<f64>>, Vec<ResponseFunction>)> {
        let n = self.ontic.len();
        match self.mode {
            LpMode::FixRhoSolveXi => {
                let rho = self.rho.clone().expect("validated");
                let mut rows = Vec::new();
                for (c, ctx) in self.contexts.iter().enumerate() {
                    for e in 0..ctx.len() {
                        let table = |s| (0..n).map(|l| to_f64(&x[self.xi_var(c, e, s, l)])).collect::<Vec<_>>();
                        rows.push(if self.lambda_sufficient {
                            ResponseFunction {
                                context: ctx.label().to_string(),
                                effect: e,
                                table: table(0),
                                state_dependent: None,
                            }
                        } else {
                            ResponseFunction {
                                context: ctx.label().to_string(),
                                effect: e,
                                table: Vec::new(),
                                state_dependent: Some(
                                    self.states
                                        .iter()
                                        .enumerate()
                                        .map(|(s, k)| StateTable {
                                            state: k.clone(),
                                            table: table(s),
                                        })
                                        .collect(),
                                ),
                            }
                        });
                    }
                }
                Ok((rho, rows))
            }
            LpMode::FixXiSolveRho => {
                let rho = (0..self.states.len())
                    .map(|s| (0..n).map(|l| to_f64(&x[s * n + l])).collect())
                    .collect();
                Ok((rho, self.xi.clone().expect("validated")))
            }
            LpMode::Joint => Err(Error::Bilinear),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Multiplier {
    pub row: String,
    /// Exact value as `p/q`.
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LpCertificate {
    Solution {
        /// Largest `|predicted − target|` after replaying the solution.
        residual: f64,
        pivots: usize,
        rho: Vec<Vec<f64>>,
        xi: Vec<ResponseFunction>,
    },
    Infeasible {
        pivots: usize,
        /// Whether the multipliers were checked exactly against the system.
        verified: bool,
        multipliers: Vec<Multiplier>,
    },
}

impl LpCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, LpCertificate::Solution { .. })
    }

    pub fn residual(&self) -> Option<f64> {
        match self {
            LpCertificate::Solution { residual, .. } => Some(*residual),
            LpCertificate::Infeasible { .. } => None,
        }
    }
}

/// The model a feasible certificate describes, with every state prepared
/// under the default preparation.
pub fn solution_model(problem: &FeasibilityProblem, rho: &[Vec<f64>], xi: &[ResponseFunction]) -> Result<OntologicalModel> {
    let epistemic = problem
        .states
        .iter()
        .zip(rho)
        .map(|(s, r)| EpistemicState {
            state: s.clone(),
            prep: DEFAULT_PREP.to_string(),
            density: r.clone(),
        })
        .collect();
    OntologicalModel::from_tables(
        "lp-solution",
        problem.contexts[0].dim(),
        problem.ontic.clone(),
        problem.contexts.clone(),
        epistemic,
        xi.to_vec(),
        ModelMeta::default(),
    )
}

/// Largest deviation from the targets of the model built from `rho`, `xi`.
pub fn replay_residual(problem: &FeasibilityProblem, rho: &[Vec<f64>], xi: &[ResponseFunction]) -> Result<f64> {
    let model = solution_model(problem, rho, xi)?;
    let mut worst: f64 = 0.0;
    for t in &problem.targets {
        let c = problem.context_index(&t.context)?;
        let p = predicted_probability(&model, &problem.states[t.state], DEFAULT_PREP, &problem.contexts[c], t.effect)?;
        worst = worst.max((p - t.target).abs());
    }
    Ok(worst)
}

/// Decides the problem exactly. Narrower Born bands (none, then half the
/// tolerance) are tried first so that a returned vertex sits inside the band
/// rather than on its edge, where rounding to `f64` could push it out. Only
/// the full band decides infeasibility.
pub fn lp_feasible(problem: &FeasibilityProblem) -> Result<LpCertificate> {
    if problem.tolerance > 0.0 {
        for narrow in [0.0, problem.tolerance / 2.0] {
            if let SimplexOutcome::Feasible { x, pivots } = problem.system_with_tolerance(narrow)?.solve() {
                let (rho, xi) = problem.model_from(&x)?;
                let residual = replay_residual(problem, &rho, &xi)?;
                return Ok(LpCertificate::Solution { residual, pivots, rho, xi });
            }
        }
    }
    let sys = problem.to_system()?;
    Ok(match sys.solve() {
        SimplexOutcome::Feasible { x, pivots } => {
            let (rho, xi) = problem.model_from(&x)?;
            let residual = replay_residual(problem, &rho, &xi)?;
            LpCertificate::Solution { residual, pivots, rho, xi }
        }
        SimplexOutcome::Infeasible { y, pivots } => LpCertificate::Infeasible {
            pivots,
            verified: sys.certifies_infeasibility(&y),
            multipliers: sys
                .rows
                .iter()
                .zip(&y)
                .filter(|(_, v)| !v.is_zero())
                .map(|(r, v)| Multiplier {
                    row: r.label.clone(),
                    value: v.to_string(),
                })
                .collect(),
        },
    })
}
