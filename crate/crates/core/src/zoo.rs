//! Concrete ontological models.
//!
//! * [`build_bb_model`]: the wave function itself is the ontic state
//!   (ψ-complete, outcome-indeterministic, λ-sufficient).
//! * [`build_ks_qubit_model`]: Kochen–Specker's deterministic qubit model on a
//!   discretized Bloch sphere (λ-sufficient, measurement-noncontextual).
//! * [`build_bell_model`]: Bell's cumulative-interval model on `[0, 1]`, where
//!   responses read the prepared state (λ-insufficient, measurement-contextual
//!   through effect order).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ontic::{ModelMeta, OnticSpace, OntologicalModel, DEFAULT_PREP};
use crate::quantum::{validate_context, Effect, Ket, Measurement, ProjectiveContext, EPS_NORM};
use crate::rng;

pub const MIN_SPHERE_POINTS: usize = 1000;
pub const MIN_GRID_CELLS: usize = 100;

/// Which zoo model to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZooModel {
    Bb,
    KsQubit,
    Bell,
}

impl fmt::Display for ZooModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZooModel::Bb => "bb",
            ZooModel::KsQubit => "ks_qubit",
            ZooModel::Bell => "bell",
        })
    }
}

impl FromStr for ZooModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb" => Ok(ZooModel::Bb),
            "ks_qubit" => Ok(ZooModel::KsQubit),
            "bell" => Ok(ZooModel::Bell),
            other => Err(Error::InvalidSpec(format!("unknown model `{other}`"))),
        }
    }
}

/// Parameters for one zoo model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZooSpec {
    pub model: ZooModel,
    pub dim: usize,
    /// Fibonacci-lattice size for `ks_qubit`.
    pub sphere_points: usize,
    /// Interval cells for `bell`.
    pub grid: usize,
    pub seed: u64,
}

impl ZooSpec {
    pub fn validate(&self) -> Result<()> {
        match self.model {
            ZooModel::KsQubit if self.sphere_points < MIN_SPHERE_POINTS => Err(Error::InvalidSpec(format!(
                "ks_qubit needs at least {MIN_SPHERE_POINTS} sphere points, got {}",
                self.sphere_points
            ))),
            ZooModel::KsQubit if self.dim != 2 => Err(Error::InvalidSpec("ks_qubit is a qubit model (dim 2)".into())),
            ZooModel::Bell if self.grid < MIN_GRID_CELLS => Err(Error::InvalidSpec(format!(
                "bell needs at least {MIN_GRID_CELLS} grid cells, got {}",
                self.grid
            ))),
            _ if self.dim < 2 => Err(Error::DimensionTooSmall(self.dim)),
            _ => Ok(()),
        }
    }

    /// Builds the model. `states` is required (nonempty) for `bb`; `contexts`
    /// defaults per model when empty.
    pub fn build(&self, states: &[Ket], contexts: &[ProjectiveContext]) -> Result<OntologicalModel> {
        self.validate()?;
        match self.model {
            ZooModel::Bb => build_bb_model(self.dim, states, contexts),
            ZooModel::KsQubit => {
                let m = build_ks_qubit_model(self.sphere_points, self.seed)?;
                if contexts.is_empty() {
                    Ok(m)
                } else {
                    m.with_contexts(contexts)
                }
            }
            ZooModel::Bell => build_bell_model(self.dim, self.grid, contexts),
        }
    }
}

fn checked_contexts(dim: usize, contexts: &[ProjectiveContext]) -> Result<Vec<ProjectiveContext>> {
    if contexts.is_empty() {
        return Ok(vec![ProjectiveContext::canonical(dim)]);
    }
    for c in contexts {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        let v = validate_context(c);
        if !v.pass {
            return Err(Error::InvalidContext {
                label: c.label().to_string(),
                reason: format!(
                    "orthogonality defect {:e}, completeness defect {:e}",
                    v.orthogonality_defect, v.completeness_defect
                ),
            });
        }
    }
    Ok(contexts.to_vec())
}

/// ψ-complete model: the ontic points are the listed states plus every ray of
/// the registered contexts (the canonical basis when `contexts` is empty).
/// `ρ(·|ψ)` is a unit point mass at `λ = ψ` and `ξ_E(λ) = ⟨λ|E|λ⟩`.
pub fn build_bb_model(dim: usize, states: &[Ket], contexts: &[ProjectiveContext]) -> Result<OntologicalModel> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    if states.is_empty() {
        return Err(Error::InvalidSpec("bb needs a nonempty state list".into()));
    }
    let contexts = checked_contexts(dim, contexts)?;
    let mut points: Vec<Ket> = Vec::new();
    for k in states.iter().chain(contexts.iter().flat_map(|c| c.rays())) {
        if k.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: k.dim(),
            });
        }
        if (k.norm_sq() - 1.0).abs() > EPS_NORM {
            return Err(Error::NotNormalized { norm_sq: k.norm_sq() });
        }
        if !points.iter().any(|p| p.same_ray(k)) {
            points.push(k.clone());
        }
    }
    let ontic = OnticSpace::uniform(points.len(), 1.0, "psi")?;
    let points = Arc::new(points);

    let pts = points.clone();
    let density = move |psi: &Ket, prep: &str| {
        if prep != DEFAULT_PREP {
            return None;
        }
        let at = pts.iter().position(|p| p.same_ray(psi))?;
        let mut d = vec![0.0; pts.len()];
        d[at] = 1.0;
        Some(d)
    };
    let pts = points.clone();
    let response = move |m: &dyn Measurement, effect: usize, _: Option<&Ket>| {
        let e = m.effects().get(effect)?;
        if e.dim() != pts[0].dim() {
            return None;
        }
        Some(pts.iter().map(|l| e.expectation_unchecked(l).clamp(0.0, 1.0)).collect())
    };
    OntologicalModel::from_rules(
        "bb",
        dim,
        ontic,
        contexts,
        points.to_vec(),
        Arc::new(density),
        Arc::new(response),
        false,
        ModelMeta {
            claims_deterministic: false,
            claims_lambda_sufficient: true,
            born_tolerance: EPS_NORM,
            context_tolerance: EPS_NORM,
        },
    )
}

/// `n` near-uniform unit vectors: `z_i = 1 − (2i+1)/n`, azimuth advancing by
/// the golden angle.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Haar-random rotation from a normalized Gaussian quaternion.
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Matrix3<f64> {
    let q = Quaternion::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    );
    *UnitQuaternion::from_quaternion(q).to_rotation_matrix().matrix()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Orientation used to break `n·λ = 0` ties: the first nonzero component of
/// `n` is positive. Antipodal rays get opposite answers, so a context
/// `{φ, φ⊥}` still partitions the lattice.
fn positively_oriented(n: &[f64; 3]) -> bool {
    n.iter().find(|c| **c != 0.0).is_some_and(|c| *c > 0.0)
}

/// Unit Bloch vector of a rank-1 qubit projector.
fn projector_bloch(e: &Effect) -> Option<[f64; 3]> {
    let n = e.bloch_vector()?;
    let trace = (e.matrix()[(0, 0)] + e.matrix()[(1, 1)]).re;
    let len = dot(&n, &n).sqrt();
    ((trace - 1.0).abs() < 1e-9 && (len - 1.0).abs() < 1e-9).then_some(n)
}

/// Kochen–Specker qubit model on an `n`-point Fibonacci lattice rotated by a
/// seed-derived random rotation, each point with measure `4π/n`.
///
/// `ρ(λ|ψ) ∝ cos θ_{ψλ}` on the open hemisphere around ψ's Bloch vector,
/// renormalized on the lattice; `ξ_{E_φ}(λ) = 1` iff `cos θ_{φλ} > 0`, with
/// boundary points assigned by orientation of φ's Bloch vector.
pub fn build_ks_qubit_model(n: usize, seed: u64) -> Result<OntologicalModel> {
    if n < MIN_SPHERE_POINTS {
        return Err(Error::InvalidSpec(format!(
            "ks_qubit needs at least {MIN_SPHERE_POINTS} sphere points, got {n}"
        )));
    }
    let rot = random_rotation(&mut rng::stream(seed, rng::streams::LATTICE));
    let lattice: Vec<[f64; 3]> = fibonacci_sphere(n)
        .into_iter()
        .map(|p| {
            let v = rot * Vector3::new(p[0], p[1], p[2]);
            [v.x, v.y, v.z]
        })
        .collect();
    let weight = 4.0 * PI / n as f64;
    let ontic = OnticSpace::uniform(n, weight, "s")?;
    let lattice = Arc::new(lattice);

    let pts = lattice.clone();
    let density = move |psi: &Ket, prep: &str| {
        if prep != DEFAULT_PREP {
            return None;
        }
        let b = psi.bloch_vector()?;
        let mut d: Vec<f64> = pts
            .iter()
            .map(|l| {
                let c = dot(&b, l);
                if c > 0.0 {
                    c / PI
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = d.iter().sum::<f64>() * weight;
        d.iter_mut().for_each(|x| *x /= total);
        Some(d)
    };
    let pts = lattice.clone();
    let response = move |m: &dyn Measurement, effect: usize, _: Option<&Ket>| {
        let n = projector_bloch(m.effects().get(effect)?)?;
        let tie = if positively_oriented(&n) { 1.0 } else { 0.0 };
        Some(
            pts.iter()
                .map(|l| {
                    let c = dot(&n, l);
                    if c > 0.0 {
                        1.0
                    } else if c < 0.0 {
                        0.0
                    } else {
                        tie
                    }
                })
                .collect(),
        )
    };
    let plus = Ket::from_real_normalized(&[1.0, 1.0])?;
    let minus = Ket::from_real_normalized(&[1.0, -1.0])?;
    let contexts = vec![
        ProjectiveContext::canonical(2),
        ProjectiveContext::checked("hadamard", vec![plus, minus])?,
    ];
    let states: Vec<Ket> = contexts.iter().flat_map(|c| c.rays().cloned()).collect();
    OntologicalModel::from_rules(
        "ks_qubit",
        2,
        ontic,
        contexts,
        states,
        Arc::new(density),
        Arc::new(response),
        false,
        ModelMeta {
            claims_deterministic: true,
            claims_lambda_sufficient: true,
            born_tolerance: 3.0 / (n as f64).sqrt(),
            context_tolerance: EPS_NORM,
        },
    )
}

/// Outcome index assigned to each of `n` equal cells of `[0, 1]`: the cell
/// with midpoint `τ` goes to `min{ j : Σ_{i≤j} p_i ≥ τ }`.
pub fn cumulative_outcomes(probabilities: &[f64], n: usize) -> Vec<usize> {
    let mut cumulative = Vec::with_capacity(probabilities.len());
    let mut acc = 0.0;
    for p in probabilities {
        acc += p;
        cumulative.push(acc);
    }
    let last = probabilities.len().saturating_sub(1);
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let tau = (i as f64 + 0.5) / n as f64;
        while j < last && cumulative[j] < tau {
            j += 1;
        }
        out.push(j);
    }
    out
}

/// Bell's model on `n_grid` equal cells of `[0, 1]` with uniform `ρ` for every
/// state. The response to a context reads the prepared state: cells are
/// handed out to outcomes in the context's effect order, each outcome
/// receiving an interval as long as its Born weight.
pub fn build_bell_model(dim: usize, n_grid: usize, contexts: &[ProjectiveContext]) -> Result<OntologicalModel> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    if n_grid < MIN_GRID_CELLS {
        return Err(Error::InvalidSpec(format!(
            "bell needs at least {MIN_GRID_CELLS} grid cells, got {n_grid}"
        )));
    }
    let contexts = checked_contexts(dim, contexts)?;
    let ontic = OnticSpace::uniform(n_grid, 1.0 / n_grid as f64, "cell")?;
    let density = move |psi: &Ket, prep: &str| {
        (prep == DEFAULT_PREP && psi.dim() == dim).then(|| vec![1.0; n_grid])
    };
    let response = move |m: &dyn Measurement, effect: usize, state: Option<&Ket>| {
        let psi = state?;
        if psi.dim() != dim || effect >= m.effects().len() {
            return None;
        }
        let probs: Vec<f64> = m.effects().iter().map(|e| e.expectation_unchecked(psi)).collect();
        Some(
            cumulative_outcomes(&probs, n_grid)
                .into_iter()
                .map(|k| if k == effect { 1.0 } else { 0.0 })
                .collect(),
        )
    };
    let states: Vec<Ket> = contexts.iter().flat_map(|c| c.rays().cloned()).collect();
    OntologicalModel::from_rules(
        "bell",
        dim,
        ontic,
        contexts,
        states,
        Arc::new(density),
        Arc::new(response),
        true,
        ModelMeta {
            claims_deterministic: true,
            claims_lambda_sufficient: false,
            born_tolerance: 1.0 / n_grid as f64,
            context_tolerance: 2.0 / n_grid as f64,
        },
    )
}

impl OntologicalModel {
    /// Same rule-defined model registered for a different context list.
    pub(crate) fn with_contexts(&self, contexts: &[ProjectiveContext]) -> Result<OntologicalModel> {
        let checked = checked_contexts(self.dim(), contexts)?;
        let mut states: Vec<Ket> = Vec::new();
        for k in checked.iter().flat_map(|c| c.rays()) {
            if !states.iter().any(|s| s.same_ray(k)) {
                states.push(k.clone());
            }
        }
        self.registered_for(checked, states)
    }
}
