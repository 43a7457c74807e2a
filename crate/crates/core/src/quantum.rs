//! Finite-dimensional pure states, effects, projective contexts and the Born rule.
//!
//! Everything here is dense `d × d` complex algebra in double precision; the
//! intended range is `d ≤ 8`.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for every quantum-side invariant (normalization, orthogonality,
/// completeness, hermiticity).
pub const EPS_NORM: f64 = 1e-9;

/// Two unit vectors name the same ray when `|⟨u|v⟩| > 1 − RAY_IDENTITY_TOL`.
pub const RAY_IDENTITY_TOL: f64 = 1e-9;

/// Gram–Schmidt candidates with residual norm below this are skipped.
const COMPLETION_RESIDUAL_MIN: f64 = 1e-6;

/// A normalized pure state.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KetJson", into = "KetJson")]
pub struct Ket {
    amps: DVector<C64>,
}

impl Ket {
    /// Builds a ket from amplitudes that are already normalized.
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::DimensionTooSmall(0));
        }
        let ket = Ket {
            amps: DVector::from_vec(amps),
        };
        let norm_sq = ket.norm_sq();
        if (norm_sq - 1.0).abs() > EPS_NORM {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(ket)
    }

    /// Builds a ket by normalizing arbitrary nonzero amplitudes.
    pub fn normalized(amps: Vec<C64>) -> Result<Self> {
        let v = DVector::from_vec(amps);
        let norm = v.norm();
        if v.is_empty() || norm < 1e-300 {
            return Err(Error::ZeroVector);
        }
        Ok(Ket { amps: v / C64::new(norm, 0.0) })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self> {
        Self::new(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_real_normalized(amps: &[f64]) -> Result<Self> {
        Self::normalized(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Canonical basis vector `|i⟩`.
    pub fn basis(dim: usize, i: usize) -> Self {
        assert!(i < dim, "basis index {i} out of range for dimension {dim}");
        let mut amps = DVector::zeros(dim);
        amps[i] = C64::new(1.0, 0.0);
        Ket { amps }
    }

    /// Equal superposition of all basis vectors.
    pub fn uniform(dim: usize) -> Self {
        let a = 1.0 / (dim as f64).sqrt();
        Ket {
            amps: DVector::from_element(dim, C64::new(a, 0.0)),
        }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        self.amps.as_slice()
    }

    pub(crate) fn vector(&self) -> &DVector<C64> {
        &self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// `|⟨self|other⟩|`.
    pub fn overlap(&self, other: &Ket) -> f64 {
        self.inner(other).norm()
    }

    /// Phase-insensitive ray identity.
    pub fn same_ray(&self, other: &Ket) -> bool {
        self.dim() == other.dim() && self.overlap(other) > 1.0 - RAY_IDENTITY_TOL
    }

    pub fn with_global_phase(&self, phase: f64) -> Ket {
        Ket {
            amps: &self.amps * C64::from_polar(1.0, phase),
        }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> DMatrix<C64> {
        &self.amps * self.amps.adjoint()
    }

    /// Quantized, phase-canonical digest used as a cache key.
    pub fn key(&self) -> StateKey {
        // Rotate the largest amplitude onto the positive real axis. Ties go
        // to the lowest index, so identical inputs always produce identical keys.
        let (pivot, _) = self
            .amps
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, a)| {
                if a.norm() > best.1 + 1e-12 {
                    (i, a.norm())
                } else {
                    best
                }
            });
        let p = self.amps[pivot];
        let rot = p.conj() / p.norm();
        let q = |x: f64| (x * 1e10).round() as i64;
        StateKey(
            self.amps
                .iter()
                .flat_map(|a| {
                    let z = a * rot;
                    [q(z.re), q(z.im)]
                })
                .collect(),
        )
    }

    /// Bloch vector of a qubit state.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        let (a, b) = (self.amps[0], self.amps[1]);
        let ab = a.conj() * b;
        Some([2.0 * ab.re, 2.0 * ab.im, a.norm_sqr() - b.norm_sqr()])
    }
}

impl fmt::Debug for Ket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Ket[")?;
        for (i, a) in self.amps.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{:.6}{:+.6}i", a.re, a.im)?;
        }
        f.write_str("]")
    }
}

/// Quantized digest of a ray.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Vec<i64>);

#[derive(Serialize, Deserialize)]
struct KetJson {
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl TryFrom<KetJson> for Ket {
    type Error = Error;

    fn try_from(j: KetJson) -> Result<Self> {
        if j.re.len() != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                found: j.re.len(),
            });
        }
        if j.im.len() != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                found: j.im.len(),
            });
        }
        Ket::new(j.re.iter().zip(&j.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

impl From<Ket> for KetJson {
    fn from(k: Ket) -> Self {
        KetJson {
            dim: k.dim(),
            re: k.amps.iter().map(|a| a.re).collect(),
            im: k.amps.iter().map(|a| a.im).collect(),
        }
    }
}

/// A positive operator `0 ≤ E ≤ 1`, optionally known to be a rank-1 projector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EffectJson", into = "EffectJson")]
pub struct Effect {
    matrix: DMatrix<C64>,
    ray: Option<Ket>,
}

impl Effect {
    /// Rank-1 projector onto `ray`.
    pub fn from_ray(ray: Ket) -> Self {
        Effect {
            matrix: ray.projector(),
            ray: Some(ray),
        }
    }

    /// Dense effect; checked for hermiticity and spectrum in `[0, 1]`.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidEffect("matrix must be square and nonempty".into()));
        }
        let herm_defect = max_abs(&(&matrix - matrix.adjoint()));
        if herm_defect > EPS_NORM {
            return Err(Error::InvalidEffect(format!(
                "not Hermitian (defect {herm_defect:e})"
            )));
        }
        let eig = matrix.clone().symmetric_eigen();
        for &ev in eig.eigenvalues.iter() {
            if !(-EPS_NORM..=1.0 + EPS_NORM).contains(&ev) {
                return Err(Error::InvalidEffect(format!(
                    "eigenvalue {ev} outside [0, 1]"
                )));
            }
        }
        Ok(Effect { matrix, ray: None })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn ray(&self) -> Option<&Ket> {
        self.ray.as_ref()
    }

    /// `⟨ψ|E|ψ⟩` without input checks.
    pub(crate) fn expectation_unchecked(&self, state: &Ket) -> f64 {
        match &self.ray {
            Some(r) => r.inner(state).norm_sqr(),
            None => {
                let v = state.vector();
                v.dotc(&(&self.matrix * v)).re
            }
        }
    }

    /// Matrix equality within [`EPS_NORM`].
    pub fn approx_eq(&self, other: &Effect) -> bool {
        self.dim() == other.dim() && max_abs(&(&self.matrix - &other.matrix)) <= EPS_NORM
    }

    /// Bloch vector of a qubit effect `E = (a·1 + n·σ)/2`; for a rank-1
    /// projector `n` is the unit Bloch vector of its ray.
    pub fn bloch_vector(&self) -> Option<[f64; 3]> {
        if self.dim() != 2 {
            return None;
        }
        if let Some(r) = &self.ray {
            return r.bloch_vector();
        }
        let m = &self.matrix;
        Some([2.0 * m[(0, 1)].re, -2.0 * m[(0, 1)].im, (m[(0, 0)] - m[(1, 1)]).re])
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EffectJson {
    Ray { ray: Ket },
    Dense { dim: usize, re: Vec<Vec<f64>>, im: Vec<Vec<f64>> },
}

impl TryFrom<EffectJson> for Effect {
    type Error = Error;

    fn try_from(j: EffectJson) -> Result<Self> {
        match j {
            EffectJson::Ray { ray } => Ok(Effect::from_ray(ray)),
            EffectJson::Dense { dim, re, im } => {
                if re.len() != dim || im.len() != dim || re.iter().chain(&im).any(|row| row.len() != dim) {
                    return Err(Error::InvalidEffect(format!("expected {dim}x{dim} matrix")));
                }
                Effect::from_matrix(DMatrix::from_fn(dim, dim, |r, c| C64::new(re[r][c], im[r][c])))
            }
        }
    }
}

impl From<Effect> for EffectJson {
    fn from(e: Effect) -> Self {
        match e.ray {
            Some(ray) => EffectJson::Ray { ray },
            None => {
                let dim = e.dim();
                let rows = |f: fn(&C64) -> f64| (0..dim).map(|r| (0..dim).map(|c| f(&e.matrix[(r, c)])).collect()).collect();
                EffectJson::Dense { dim, re: rows(|z| z.re), im: rows(|z| z.im) }
            }
        }
    }
}

pub(crate) fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Anything that is a labelled list of effects.
pub trait Measurement {
    fn label(&self) -> &str;
    fn effects(&self) -> &[Effect];

    fn dim(&self) -> usize {
        self.effects().first().map_or(0, Effect::dim)
    }
}

/// A complete set of orthogonal rank-1 projectors, i.e. one measurement
/// setting `M`. The order of effects is part of the context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ContextJson", into = "ContextJson")]
pub struct ProjectiveContext {
    label: String,
    effects: Vec<Effect>,
}

impl ProjectiveContext {
    /// Builds a context from rays. Only dimensions are checked; call
    /// [`validate_context`] or [`ProjectiveContext::checked`] for the
    /// orthogonality and completeness invariants.
    pub fn from_rays(label: impl Into<String>, rays: Vec<Ket>) -> Result<Self> {
        let label = label.into();
        let dim = rays.first().map(Ket::dim).ok_or_else(|| Error::InvalidContext {
            label: label.clone(),
            reason: "no rays".into(),
        })?;
        if let Some(bad) = rays.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(ProjectiveContext {
            label,
            effects: rays.into_iter().map(Effect::from_ray).collect(),
        })
    }

    /// Like [`from_rays`](Self::from_rays) but rejects invalid contexts.
    pub fn checked(label: impl Into<String>, rays: Vec<Ket>) -> Result<Self> {
        let ctx = Self::from_rays(label, rays)?;
        let verdict = validate_context(&ctx);
        if !verdict.pass {
            return Err(Error::InvalidContext {
                label: ctx.label,
                reason: format!(
                    "orthogonality defect {:e}, completeness defect {:e}",
                    verdict.orthogonality_defect, verdict.completeness_defect
                ),
            });
        }
        Ok(ctx)
    }

    /// The computational basis `{|0⟩⟨0|, …, |d−1⟩⟨d−1|}`.
    pub fn canonical(dim: usize) -> Self {
        ProjectiveContext {
            label: format!("canonical-{dim}"),
            effects: (0..dim).map(|i| Effect::from_ray(Ket::basis(dim, i))).collect(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.effects[0].dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn rays(&self) -> impl Iterator<Item = &Ket> {
        self.effects
            .iter()
            .map(|e| e.ray().expect("context effects are rank-1"))
    }

    pub fn ray(&self, i: usize) -> &Ket {
        self.effects[i].ray().expect("context effects are rank-1")
    }

    /// Index of the effect projecting onto `ray`, if any.
    pub fn position_of(&self, ray: &Ket) -> Option<usize> {
        self.rays().position(|r| r.same_ray(ray))
    }

    /// Same effects in the order `perm` (new position `k` holds old `perm[k]`).
    pub fn reordered(&self, label: impl Into<String>, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len() || perm.iter().any(|&p| p >= self.len() || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidContext {
                label: self.label.clone(),
                reason: "reordering is not a permutation".into(),
            });
        }
        Ok(ProjectiveContext {
            label: label.into(),
            effects: perm.iter().map(|&p| self.effects[p].clone()).collect(),
        })
    }

    pub fn relabeled(&self, label: impl Into<String>) -> Self {
        ProjectiveContext {
            label: label.into(),
            effects: self.effects.clone(),
        }
    }
}

impl Measurement for ProjectiveContext {
    fn label(&self) -> &str {
        &self.label
    }

    fn effects(&self) -> &[Effect] {
        &self.effects
    }
}

#[derive(Serialize, Deserialize)]
struct ContextJson {
    label: String,
    rays: Vec<Ket>,
}

impl TryFrom<ContextJson> for ProjectiveContext {
    type Error = Error;

    fn try_from(j: ContextJson) -> Result<Self> {
        ProjectiveContext::from_rays(j.label, j.rays)
    }
}

impl From<ProjectiveContext> for ContextJson {
    fn from(c: ProjectiveContext) -> Self {
        let rays = c.rays().cloned().collect();
        ContextJson { label: c.label, rays }
    }
}

/// A general measurement `{E_i}` with `Σ E_i = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    label: String,
    effects: Vec<Effect>,
}

impl Povm {
    pub fn new(label: impl Into<String>, effects: Vec<Effect>) -> Result<Self> {
        let label = label.into();
        let dim = effects.first().map(Effect::dim).ok_or_else(|| Error::InvalidPovm {
            label: label.clone(),
            reason: "no effects".into(),
        })?;
        if let Some(bad) = effects.iter().find(|e| e.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        let sum = effects
            .iter()
            .fold(DMatrix::zeros(dim, dim), |acc, e| acc + e.matrix());
        let defect = max_abs(&(sum - DMatrix::identity(dim, dim)));
        if defect > EPS_NORM {
            return Err(Error::InvalidPovm {
                label,
                reason: format!("effects sum to identity only within {defect:e}"),
            });
        }
        Ok(Povm { label, effects })
    }

    /// Every projective context is also a POVM.
    pub fn from_context(ctx: &ProjectiveContext) -> Self {
        Povm {
            label: ctx.label.clone(),
            effects: ctx.effects.clone(),
        }
    }
}

impl Measurement for Povm {
    fn label(&self) -> &str {
        &self.label
    }

    fn effects(&self) -> &[Effect] {
        &self.effects
    }
}

/// `⟨ψ|E|ψ⟩`, with round-off below [`EPS_NORM`] clamped into `[0, 1]`.
pub fn born_probability(state: &Ket, effect: &Effect) -> Result<f64> {
    if state.dim() != effect.dim() {
        return Err(Error::DimensionMismatch {
            expected: effect.dim(),
            found: state.dim(),
        });
    }
    let norm_sq = state.norm_sq();
    if (norm_sq - 1.0).abs() > EPS_NORM {
        return Err(Error::NotNormalized { norm_sq });
    }
    let p = effect.expectation_unchecked(state);
    Ok(if p < 0.0 && p > -EPS_NORM {
        0.0
    } else if p > 1.0 && p < 1.0 + EPS_NORM {
        1.0
    } else {
        p
    })
}

/// Largest deviation from orthonormality of a list of kets.
fn orthonormality_defect(kets: &[Ket]) -> f64 {
    let mut defect: f64 = 0.0;
    for (i, a) in kets.iter().enumerate() {
        for (j, b) in kets.iter().enumerate().skip(i) {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((a.inner(b) - C64::new(target, 0.0)).norm());
        }
    }
    defect
}

/// Gram–Schmidt step: `v` minus its projection onto `basis` (applied twice
/// for numerical stability).
fn orthogonalize(mut v: DVector<C64>, basis: &[DVector<C64>]) -> DVector<C64> {
    for _ in 0..2 {
        for b in basis {
            let c = b.dotc(&v);
            v -= b * c;
        }
    }
    v
}

/// Extends orthonormal `partial` to a full context. The given rays come first,
/// followed by canonical basis vectors (ascending index) orthogonalized
/// against everything before them; candidates whose residual is below `1e-6`
/// are skipped.
pub fn complete_basis(label: impl Into<String>, partial: &[Ket], dim: usize) -> Result<ProjectiveContext> {
    if dim == 0 {
        return Err(Error::DimensionTooSmall(0));
    }
    if partial.len() > dim {
        return Err(Error::TooManyVectors {
            dim,
            count: partial.len(),
        });
    }
    if let Some(bad) = partial.iter().find(|k| k.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad.dim(),
        });
    }
    let defect = orthonormality_defect(partial);
    if defect > EPS_NORM {
        return Err(Error::NotOrthonormal { defect });
    }
    let mut basis: Vec<DVector<C64>> = partial.iter().map(|k| k.vector().clone()).collect();
    let mut rays: Vec<Ket> = partial.to_vec();
    for i in 0..dim {
        if rays.len() == dim {
            break;
        }
        let residual = orthogonalize(Ket::basis(dim, i).vector().clone(), &basis);
        let norm = residual.norm();
        if norm < COMPLETION_RESIDUAL_MIN {
            continue;
        }
        let unit = residual / C64::new(norm, 0.0);
        basis.push(unit.clone());
        rays.push(Ket { amps: unit });
    }
    debug_assert_eq!(rays.len(), dim);
    ProjectiveContext::from_rays(label, rays)
}

/// Haar-random pure state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_ket<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Ket> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    loop {
        let amps: Vec<C64> = (0..dim)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(k) = Ket::normalized(amps) {
            return Ok(k);
        }
    }
}

/// [`random_ket`] from a fresh generator seeded with `seed`.
pub fn random_ket_seeded(dim: usize, seed: u64) -> Result<Ket> {
    random_ket(dim, &mut crate::rng::stream(seed, crate::rng::streams::STATES))
}

/// Random context whose leading rays are `fixed`: further rays are
/// Haar-random vectors orthogonalized against the previous ones, and the
/// last ray comes from [`complete_basis`].
pub fn random_completion<R: Rng + ?Sized>(
    label: impl Into<String>,
    fixed: &[Ket],
    dim: usize,
    rng: &mut R,
) -> Result<ProjectiveContext> {
    let defect = orthonormality_defect(fixed);
    if defect > EPS_NORM {
        return Err(Error::NotOrthonormal { defect });
    }
    let mut rays = fixed.to_vec();
    while rays.len() + 1 < dim {
        let basis: Vec<DVector<C64>> = rays.iter().map(|k| k.vector().clone()).collect();
        let candidate = random_ket(dim, rng)?;
        let residual = orthogonalize(candidate.amps, &basis);
        if residual.norm() < COMPLETION_RESIDUAL_MIN {
            continue;
        }
        rays.push(Ket::normalized(residual.iter().copied().collect())?);
    }
    complete_basis(label, &rays, dim)
}

/// Outcome of [`validate_context`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContextVerdict {
    pub label: String,
    /// `max_{i≠j} max |(E_i E_j)_{ab}|`.
    pub orthogonality_defect: f64,
    /// `max |(Σ E_i − 1)_{ab}|`.
    pub completeness_defect: f64,
    pub pass: bool,
}

pub fn validate_context(ctx: &ProjectiveContext) -> ContextVerdict {
    let dim = ctx.dim();
    let mut orth: f64 = 0.0;
    for (i, a) in ctx.effects.iter().enumerate() {
        for b in ctx.effects.iter().skip(i + 1) {
            orth = orth.max(max_abs(&(a.matrix() * b.matrix())));
        }
    }
    let sum = ctx
        .effects
        .iter()
        .fold(DMatrix::zeros(dim, dim), |acc, e| acc + e.matrix());
    let completeness = max_abs(&(sum - DMatrix::identity(dim, dim)));
    ContextVerdict {
        label: ctx.label.clone(),
        orthogonality_defect: orth,
        completeness_defect: completeness,
        pass: orth <= EPS_NORM && completeness <= EPS_NORM,
    }
}
