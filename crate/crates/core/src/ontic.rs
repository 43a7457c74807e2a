//! Ontic spaces, epistemic states, response functions and the model container.
//!
//! A model evaluates `P(E|ψ,P,M) = Σ_λ ξ_E(λ,M) ρ(λ|ψ,P) μ(λ)` over a finite
//! ontic space with per-point measure `μ`. Epistemic states and responses are
//! either explicit tables (snapshots, JSON files, hand-built fixtures) or
//! rules evaluated on demand (zoo models over continuous state families).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{validate_context, Ket, Measurement, ProjectiveContext, StateKey, EPS_NORM};

/// Preparation label used when a model has a single preparation procedure.
pub const DEFAULT_PREP: &str = "P0";

/// Upper bound on cached density entries (in `f64`s).
const DENSITY_CACHE_CAPACITY: usize = 40_000_000;

/// A finite ontic space with per-point measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OnticSpace {
    ids: Vec<String>,
    measure: Vec<f64>,
}

impl OnticSpace {
    pub fn new(ids: Vec<String>, measure: Vec<f64>) -> Result<Self> {
        if ids.len() != measure.len() {
            return Err(Error::InvalidModel(format!(
                "{} ontic ids but {} weights",
                ids.len(),
                measure.len()
            )));
        }
        if ids.is_empty() {
            return Err(Error::InvalidModel("empty ontic space".into()));
        }
        if let Some((i, w)) = measure.iter().enumerate().find(|(_, w)| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidModel(format!("weight of point {i} is {w}, must be > 0")));
        }
        let mut sorted: Vec<&String> = ids.iter().collect();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidModel("duplicate ontic ids".into()));
        }
        Ok(OnticSpace { ids, measure })
    }

    /// `n` points named `{prefix}{i}`, all with the same weight.
    pub fn uniform(n: usize, weight: f64, prefix: &str) -> Result<Self> {
        Self::new((0..n).map(|i| format!("{prefix}{i}")).collect(), vec![weight; n])
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    /// `Σ_λ f(λ) g(λ) μ(λ)`.
    pub fn integrate(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter()
            .zip(g)
            .zip(&self.measure)
            .map(|((a, b), m)| a * b * m)
            .sum()
    }

    /// `Σ_λ f(λ) μ(λ)`.
    pub fn total(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.measure).map(|(a, m)| a * m).sum()
    }
}

/// `ρ(λ|ψ,P)` as a density with respect to the ontic measure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpistemicState {
    pub state: Ket,
    pub prep: String,
    pub density: Vec<f64>,
}

/// A per-state override of a response row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateTable {
    pub state: Ket,
    pub table: Vec<f64>,
}

/// `ξ_E(λ,M)` for one effect of one context. When `state_dependent` is set the
/// row also depends on the prepared state, which is how λ-insufficient models
/// are written down; `table` is then the fallback for states not listed and
/// may be empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseFunction {
    pub context: String,
    pub effect: usize,
    pub table: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_dependent: Option<Vec<StateTable>>,
}

impl ResponseFunction {
    pub fn lookup(&self, state: Option<&Ket>) -> Option<&[f64]> {
        if let (Some(rows), Some(psi)) = (&self.state_dependent, state) {
            if let Some(row) = rows.iter().find(|r| r.state.same_ray(psi)) {
                return Some(&row.table);
            }
        }
        if self.table.is_empty() {
            None
        } else {
            Some(&self.table)
        }
    }

    /// Every table in this row, fallback first.
    pub fn tables_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        std::iter::once(&mut self.table)
            .filter(|t| !t.is_empty())
            .chain(self.state_dependent.iter_mut().flatten().map(|r| &mut r.table))
    }
}

/// Claims and tolerances a model carries with it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub claims_deterministic: bool,
    pub claims_lambda_sufficient: bool,
    /// Allowed `|predicted − Born|`.
    pub born_tolerance: f64,
    /// Allowed difference of the same effect's probability across contexts.
    pub context_tolerance: f64,
}

impl Default for ModelMeta {
    fn default() -> Self {
        ModelMeta {
            claims_deterministic: false,
            claims_lambda_sufficient: true,
            born_tolerance: EPS_NORM,
            context_tolerance: EPS_NORM,
        }
    }
}

/// Density rule: `(state, prep) ↦ ρ(·|ψ,P)`, `None` if not covered.
pub type DensityRule = dyn Fn(&Ket, &str) -> Option<Vec<f64>> + Send + Sync;

/// Response rule: `(measurement, effect index, state) ↦ ξ(·)`, `None` if not
/// covered. State-independent rules ignore the state argument.
pub type ResponseRule = dyn Fn(&dyn Measurement, usize, Option<&Ket>) -> Option<Vec<f64>> + Send + Sync;

#[derive(Clone)]
enum EpistemicSource {
    Table(Vec<EpistemicState>),
    Rule(Arc<DensityRule>),
}

#[derive(Clone)]
enum ResponseSource {
    Table(Vec<ResponseFunction>),
    Rule { rule: Arc<ResponseRule>, state_dependent: bool },
}

#[derive(Default)]
struct DensityCache {
    entries: RwLock<(usize, HashMap<(StateKey, String), Arc<[f64]>>)>,
}

impl DensityCache {
    fn get(&self, key: &(StateKey, String)) -> Option<Arc<[f64]>> {
        self.entries.read().ok()?.1.get(key).cloned()
    }

    fn insert(&self, key: (StateKey, String), value: Arc<[f64]>) {
        if let Ok(mut guard) = self.entries.write() {
            let (size, map) = &mut *guard;
            if *size + value.len() <= DENSITY_CACHE_CAPACITY && !map.contains_key(&key) {
                *size += value.len();
                map.insert(key, value);
            }
        }
    }
}

/// An ontological model: ontic space, epistemic states, responses and the
/// contexts and states it is registered for.
pub struct OntologicalModel {
    name: String,
    dim: usize,
    ontic: OnticSpace,
    contexts: Vec<ProjectiveContext>,
    states: Vec<Ket>,
    meta: ModelMeta,
    epistemic: EpistemicSource,
    responses: ResponseSource,
    cache: DensityCache,
}

impl Clone for OntologicalModel {
    fn clone(&self) -> Self {
        OntologicalModel {
            name: self.name.clone(),
            dim: self.dim,
            ontic: self.ontic.clone(),
            contexts: self.contexts.clone(),
            states: self.states.clone(),
            meta: self.meta.clone(),
            epistemic: self.epistemic.clone(),
            responses: self.responses.clone(),
            cache: DensityCache::default(),
        }
    }
}

impl fmt::Debug for OntologicalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OntologicalModel")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("points", &self.ontic.len())
            .field("contexts", &self.contexts.len())
            .field("states", &self.states.len())
            .field("tabulated", &self.is_tabulated())
            .field("meta", &self.meta)
            .finish()
    }
}

fn push_unique(states: &mut Vec<Ket>, k: &Ket) {
    if !states.iter().any(|s| s.same_ray(k)) {
        states.push(k.clone());
    }
}

fn check_dims(dim: usize, contexts: &[ProjectiveContext]) -> Result<()> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    for c in contexts {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
    }
    let mut labels: Vec<&str> = contexts.iter().map(|c| c.label()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidModel("duplicate context labels".into()));
    }
    Ok(())
}

impl OntologicalModel {
    /// Model given entirely by tables.
    ///
    /// Structural consistency (lengths, labels, indices) is enforced here;
    /// normalization and range are left to [`validate_model`] so that broken
    /// models can still be built and inspected.
    #[allow(clippy::too_many_arguments)]
    pub fn from_tables(
        name: impl Into<String>,
        dim: usize,
        ontic: OnticSpace,
        contexts: Vec<ProjectiveContext>,
        epistemic: Vec<EpistemicState>,
        responses: Vec<ResponseFunction>,
        meta: ModelMeta,
    ) -> Result<Self> {
        check_dims(dim, &contexts)?;
        let n = ontic.len();
        let mut states = Vec::new();
        for e in &epistemic {
            if e.density.len() != n {
                return Err(Error::InvalidModel(format!(
                    "density has {} entries for {n} ontic points",
                    e.density.len()
                )));
            }
            if e.state.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.state.dim(),
                });
            }
            push_unique(&mut states, &e.state);
        }
        for r in &responses {
            let ctx = contexts
                .iter()
                .find(|c| c.label() == r.context)
                .ok_or_else(|| Error::InvalidModel(format!("response references unknown context `{}`", r.context)))?;
            if r.effect >= ctx.len() {
                return Err(Error::InvalidModel(format!(
                    "effect {} out of range for context `{}`",
                    r.effect, r.context
                )));
            }
            if !r.table.is_empty() && r.table.len() != n {
                return Err(Error::InvalidModel(format!(
                    "response table has {} entries for {n} ontic points",
                    r.table.len()
                )));
            }
            for row in r.state_dependent.iter().flatten() {
                if row.table.len() != n {
                    return Err(Error::InvalidModel("state-dependent row has wrong length".into()));
                }
                push_unique(&mut states, &row.state);
            }
        }
        Ok(OntologicalModel {
            name: name.into(),
            dim,
            ontic,
            contexts,
            states,
            meta,
            epistemic: EpistemicSource::Table(epistemic),
            responses: ResponseSource::Table(responses),
            cache: DensityCache::default(),
        })
    }

    /// Model given by rules, registered for `contexts` and `states` (used by
    /// whole-model checks and snapshots).
    #[allow(clippy::too_many_arguments)]
    pub fn from_rules(
        name: impl Into<String>,
        dim: usize,
        ontic: OnticSpace,
        contexts: Vec<ProjectiveContext>,
        states: Vec<Ket>,
        density: Arc<DensityRule>,
        response: Arc<ResponseRule>,
        state_dependent: bool,
        meta: ModelMeta,
    ) -> Result<Self> {
        check_dims(dim, &contexts)?;
        let mut registered = Vec::new();
        for s in &states {
            push_unique(&mut registered, s);
        }
        Ok(OntologicalModel {
            name: name.into(),
            dim,
            ontic,
            contexts,
            states: registered,
            meta,
            epistemic: EpistemicSource::Rule(density),
            responses: ResponseSource::Rule {
                rule: response,
                state_dependent,
            },
            cache: DensityCache::default(),
        })
    }

    /// Same rule-defined model registered for other contexts and states.
    pub fn registered_for(&self, contexts: Vec<ProjectiveContext>, states: Vec<Ket>) -> Result<Self> {
        if self.is_tabulated() {
            return Err(Error::InvalidModel("tabulated models cannot be re-registered".into()));
        }
        check_dims(self.dim, &contexts)?;
        let mut registered = Vec::new();
        for s in &states {
            push_unique(&mut registered, s);
        }
        let mut out = self.clone();
        out.contexts = contexts;
        out.states = registered;
        Ok(out)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ontic(&self) -> &OnticSpace {
        &self.ontic
    }

    pub fn contexts(&self) -> &[ProjectiveContext] {
        &self.contexts
    }

    pub fn context(&self, label: &str) -> Option<&ProjectiveContext> {
        self.contexts.iter().find(|c| c.label() == label)
    }

    pub fn states(&self) -> &[Ket] {
        &self.states
    }

    pub fn meta(&self) -> &ModelMeta {
        &self.meta
    }

    pub fn meta_mut(&mut self) -> &mut ModelMeta {
        &mut self.meta
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// True when both sides are explicit tables.
    pub fn is_tabulated(&self) -> bool {
        matches!(self.epistemic, EpistemicSource::Table(_)) && matches!(self.responses, ResponseSource::Table(_))
    }

    /// Whether any response may depend on the prepared state.
    pub fn has_state_dependent_responses(&self) -> bool {
        match &self.responses {
            ResponseSource::Table(rows) => rows.iter().any(|r| r.state_dependent.is_some()),
            ResponseSource::Rule { state_dependent, .. } => *state_dependent,
        }
    }

    /// States to condition responses on when sweeping a whole model: the
    /// registered states for state-dependent models, a single `None` otherwise.
    pub fn response_conditions(&self) -> Vec<Option<&Ket>> {
        if self.has_state_dependent_responses() {
            self.states.iter().map(Some).collect()
        } else {
            vec![None]
        }
    }

    /// `ρ(·|ψ,P)`.
    pub fn density(&self, state: &Ket, prep: &str) -> Result<Arc<[f64]>> {
        let missing = || Error::MissingEpistemic { prep: prep.to_string() };
        if state.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: state.dim(),
            });
        }
        match &self.epistemic {
            EpistemicSource::Table(rows) => rows
                .iter()
                .find(|e| e.prep == prep && e.state.same_ray(state))
                .map(|e| Arc::from(e.density.as_slice()))
                .ok_or_else(missing),
            EpistemicSource::Rule(rule) => {
                let key = (state.key(), prep.to_string());
                if let Some(hit) = self.cache.get(&key) {
                    return Ok(hit);
                }
                let density: Arc<[f64]> = rule(state, prep).ok_or_else(missing)?.into();
                if density.len() != self.ontic.len() {
                    return Err(Error::InvalidModel("density rule returned wrong length".into()));
                }
                self.cache.insert(key, density.clone());
                Ok(density)
            }
        }
    }

    /// `ξ_E(·,M)` for effect `effect` of `measurement`, conditioned on `state`
    /// when the model is state-dependent.
    pub fn response(&self, measurement: &dyn Measurement, effect: usize, state: Option<&Ket>) -> Result<Arc<[f64]>> {
        let missing = || Error::MissingResponse {
            context: measurement.label().to_string(),
            effect,
        };
        if effect >= measurement.effects().len() {
            return Err(missing());
        }
        match &self.responses {
            ResponseSource::Table(rows) => {
                // A table row is keyed by label; reject a measurement that reuses a
                // known label with different effects.
                let stored = self.context(measurement.label()).ok_or_else(missing)?;
                if stored.len() != measurement.effects().len()
                    || !stored.effects()[effect].approx_eq(&measurement.effects()[effect])
                {
                    return Err(missing());
                }
                rows.iter()
                    .find(|r| r.context == measurement.label() && r.effect == effect)
                    .and_then(|r| r.lookup(state))
                    .map(Arc::from)
                    .ok_or_else(missing)
            }
            ResponseSource::Rule { rule, .. } => {
                let table = rule(measurement, effect, state).ok_or_else(missing)?;
                if table.len() != self.ontic.len() {
                    return Err(Error::InvalidModel("response rule returned wrong length".into()));
                }
                Ok(table.into())
            }
        }
    }

    /// Explicit-table copy covering the registered states and contexts plus
    /// `extra_states` and `extra_contexts`. Every registered state gets an
    /// epistemic entry under [`DEFAULT_PREP`].
    pub fn snapshot(&self, extra_states: &[Ket], extra_contexts: &[ProjectiveContext]) -> Result<OntologicalModel> {
        let mut contexts = self.contexts.clone();
        for c in extra_contexts {
            match contexts.iter().find(|k| k.label() == c.label()) {
                Some(existing) if existing != c => {
                    return Err(Error::InvalidModel(format!("context label `{}` reused", c.label())))
                }
                Some(_) => {}
                None => contexts.push(c.clone()),
            }
        }
        let mut states = self.states.clone();
        for s in extra_states {
            push_unique(&mut states, s);
        }
        let epistemic = states
            .iter()
            .map(|s| {
                Ok(EpistemicState {
                    state: s.clone(),
                    prep: DEFAULT_PREP.to_string(),
                    density: self.density(s, DEFAULT_PREP)?.to_vec(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dependent = self.has_state_dependent_responses();
        let mut responses = Vec::new();
        for c in &contexts {
            for i in 0..c.len() {
                let row = if dependent {
                    let per_state = states
                        .iter()
                        .map(|s| {
                            Ok(StateTable {
                                state: s.clone(),
                                table: self.response(c, i, Some(s))?.to_vec(),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    ResponseFunction {
                        context: c.label().to_string(),
                        effect: i,
                        table: Vec::new(),
                        state_dependent: Some(per_state),
                    }
                } else {
                    ResponseFunction {
                        context: c.label().to_string(),
                        effect: i,
                        table: self.response(c, i, None)?.to_vec(),
                        state_dependent: None,
                    }
                };
                responses.push(row);
            }
        }
        OntologicalModel::from_tables(
            self.name.clone(),
            self.dim,
            self.ontic.clone(),
            contexts,
            epistemic,
            responses,
            self.meta.clone(),
        )
    }

    /// Mutable access to a response row of a tabulated model.
    pub fn response_row_mut(&mut self, context: &str, effect: usize) -> Option<&mut ResponseFunction> {
        match &mut self.responses {
            ResponseSource::Table(rows) => rows.iter_mut().find(|r| r.context == context && r.effect == effect),
            ResponseSource::Rule { .. } => None,
        }
    }

    /// Mutable access to an epistemic state of a tabulated model.
    pub fn epistemic_mut(&mut self, state: &Ket, prep: &str) -> Option<&mut EpistemicState> {
        match &mut self.epistemic {
            EpistemicSource::Table(rows) => rows.iter_mut().find(|e| e.prep == prep && e.state.same_ray(state)),
            EpistemicSource::Rule(_) => None,
        }
    }

    /// Epistemic entries of a tabulated model.
    pub fn epistemic_states(&self) -> Option<&[EpistemicState]> {
        match &self.epistemic {
            EpistemicSource::Table(rows) => Some(rows),
            EpistemicSource::Rule(_) => None,
        }
    }

    /// Response rows of a tabulated model.
    pub fn response_rows(&self) -> Option<&[ResponseFunction]> {
        match &self.responses {
            ResponseSource::Table(rows) => Some(rows),
            ResponseSource::Rule { .. } => None,
        }
    }

    /// Model JSON. Rule-defined models must be snapshotted first.
    pub fn to_json(&self) -> Result<String> {
        let (EpistemicSource::Table(epistemic), ResponseSource::Table(responses)) = (&self.epistemic, &self.responses) else {
            return Err(Error::InvalidModel("rule-defined model: take a snapshot before exporting".into()));
        };
        let file = ModelFile {
            name: self.name.clone(),
            dim: self.dim,
            ontic: self.ontic.clone(),
            meta: self.meta.clone(),
            contexts: self.contexts.clone(),
            responses: responses.clone(),
            epistemic: epistemic.clone(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(s)?;
        let ontic = OnticSpace::new(f.ontic.ids, f.ontic.measure)?;
        OntologicalModel::from_tables(f.name, f.dim, ontic, f.contexts, f.epistemic, f.responses, f.meta)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    name: String,
    dim: usize,
    ontic: OnticSpace,
    #[serde(default)]
    meta: ModelMeta,
    contexts: Vec<ProjectiveContext>,
    responses: Vec<ResponseFunction>,
    epistemic: Vec<EpistemicState>,
}

/// `Σ_λ ξ_E(λ,M) ρ(λ|ψ,P) μ(λ)`, clamped into `[0, 1]`.
pub fn predicted_probability(
    model: &OntologicalModel,
    state: &Ket,
    prep: &str,
    measurement: &dyn Measurement,
    effect: usize,
) -> Result<f64> {
    let rho = model.density(state, prep)?;
    let xi = model.response(measurement, effect, Some(state))?;
    Ok(model.ontic.integrate(&xi, &rho).clamp(0.0, 1.0))
}

/// What went wrong in a [`Violation`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    InvalidContext,
    EpistemicNormalization,
    NegativeDensity,
    ResponseRange,
    ResponseNormalization,
    MissingRow,
}

/// One failed invariant found by [`validate_model`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub lambda: Option<usize>,
    pub context: Option<String>,
    pub effect: Option<usize>,
    pub state: Option<Ket>,
    pub prep: Option<String>,
    pub defect: f64,
}

impl Violation {
    fn new(kind: ViolationKind, defect: f64) -> Self {
        Violation {
            kind,
            lambda: None,
            context: None,
            effect: None,
            state: None,
            prep: None,
            defect,
        }
    }
}

/// Checks contexts, epistemic normalization and response range and
/// normalization over every registered context and state. Empty means valid.
pub fn validate_model(model: &OntologicalModel) -> Vec<Violation> {
    let mut out = Vec::new();
    for c in model.contexts() {
        let v = validate_context(c);
        if !v.pass {
            let mut viol = Violation::new(
                ViolationKind::InvalidContext,
                v.orthogonality_defect.max(v.completeness_defect),
            );
            viol.context = Some(c.label().to_string());
            out.push(viol);
        }
    }

    let epistemic: Vec<(Ket, String, Result<Arc<[f64]>>)> = match model.epistemic_states() {
        Some(rows) => rows
            .iter()
            .map(|e| (e.state.clone(), e.prep.clone(), Ok(Arc::from(e.density.as_slice()))))
            .collect(),
        None => model
            .states()
            .iter()
            .map(|s| (s.clone(), DEFAULT_PREP.to_string(), model.density(s, DEFAULT_PREP)))
            .collect(),
    };
    for (state, prep, density) in epistemic {
        let base = |kind, defect| {
            let mut v = Violation::new(kind, defect);
            v.state = Some(state.clone());
            v.prep = Some(prep.clone());
            v
        };
        let density = match density {
            Ok(d) => d,
            Err(_) => {
                out.push(base(ViolationKind::MissingRow, 1.0));
                continue;
            }
        };
        let defect = (model.ontic().total(&density) - 1.0).abs();
        if defect > EPS_NORM {
            out.push(base(ViolationKind::EpistemicNormalization, defect));
        }
        for (i, &d) in density.iter().enumerate() {
            if d < 0.0 {
                let mut v = base(ViolationKind::NegativeDensity, -d);
                v.lambda = Some(i);
                out.push(v);
            }
        }
    }

    for ctx in model.contexts() {
        for cond in model.response_conditions() {
            let rows: Vec<Option<Arc<[f64]>>> = (0..ctx.len()).map(|i| model.response(ctx, i, cond).ok()).collect();
            let tag = |kind, defect, lambda: Option<usize>, effect: Option<usize>| {
                let mut v = Violation::new(kind, defect);
                v.context = Some(ctx.label().to_string());
                v.state = cond.cloned();
                v.lambda = lambda;
                v.effect = effect;
                v
            };
            if rows.iter().any(Option::is_none) {
                for (i, _) in rows.iter().enumerate().filter(|(_, r)| r.is_none()) {
                    out.push(tag(ViolationKind::MissingRow, 1.0, None, Some(i)));
                }
                continue;
            }
            let rows: Vec<Arc<[f64]>> = rows.into_iter().flatten().collect();
            for (e, row) in rows.iter().enumerate() {
                for (l, &x) in row.iter().enumerate() {
                    let defect = if x < 0.0 { -x } else { x - 1.0 };
                    if defect > EPS_NORM {
                        out.push(tag(ViolationKind::ResponseRange, defect, Some(l), Some(e)));
                    }
                }
            }
            for l in 0..model.ontic().len() {
                let sum: f64 = rows.iter().map(|r| r[l]).sum();
                let defect = (sum - 1.0).abs();
                if defect > EPS_NORM {
                    out.push(tag(ViolationKind::ResponseNormalization, defect, Some(l), None));
                }
            }
        }
    }
    out
}

/// First response entry found away from `{0, 1}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeterminismWitness {
    pub lambda: usize,
    pub context: String,
    pub effect: usize,
    pub state: Option<Ket>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Determinism {
    pub deterministic: bool,
    pub witness: Option<DeterminismWitness>,
}

/// True iff every response entry over registered contexts (and states, for
/// state-dependent models) lies within `tolerance` of 0 or 1.
pub fn is_outcome_deterministic(model: &OntologicalModel, tolerance: f64) -> Determinism {
    for ctx in model.contexts() {
        for cond in model.response_conditions() {
            for e in 0..ctx.len() {
                let Ok(row) = model.response(ctx, e, cond) else { continue };
                if let Some((lambda, &value)) = row
                    .iter()
                    .enumerate()
                    .find(|(_, &x)| x.abs() > tolerance && (x - 1.0).abs() > tolerance)
                {
                    return Determinism {
                        deterministic: false,
                        witness: Some(DeterminismWitness {
                            lambda,
                            context: ctx.label().to_string(),
                            effect: e,
                            state: cond.cloned(),
                            value,
                        }),
                    };
                }
            }
        }
    }
    Determinism {
        deterministic: true,
        witness: None,
    }
}
