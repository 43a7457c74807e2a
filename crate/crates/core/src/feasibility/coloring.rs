//! Deterministic noncontextual value assignments over finite ray sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{Ket, ProjectiveContext, C64, EPS_NORM};

/// Rays (up to phase) and the orthogonal bases they form.
#[derive(Clone, Debug, PartialEq)]
pub struct RaySet {
    dim: usize,
    rays: Vec<Ket>,
    contexts: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RayJson {
    Complex([Vec<f64>; 2]),
    Real(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
struct RaySetJson {
    dim: usize,
    rays: Vec<RayJson>,
    contexts: Vec<Vec<usize>>,
}

impl RaySet {
    /// Checks indices, context sizes, pairwise orthogonality and that no ray
    /// is listed twice.
    pub fn new(dim: usize, rays: Vec<Ket>, contexts: Vec<Vec<usize>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::DimensionTooSmall(dim));
        }
        for r in &rays {
            if r.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.dim(),
                });
            }
        }
        for i in 0..rays.len() {
            for j in i + 1..rays.len() {
                if rays[i].same_ray(&rays[j]) {
                    return Err(Error::MalformedRaySet(format!("rays {i} and {j} coincide")));
                }
            }
        }
        for (k, c) in contexts.iter().enumerate() {
            if c.len() != dim {
                return Err(Error::MalformedRaySet(format!("context {k} has {} rays, expected {dim}", c.len())));
            }
            if let Some(i) = c.iter().find(|&&i| i >= rays.len()) {
                return Err(Error::MalformedRaySet(format!("context {k} names ray {i}")));
            }
            for (a, &i) in c.iter().enumerate() {
                for &j in &c[a + 1..] {
                    if i == j || rays[i].inner(&rays[j]).norm() > EPS_NORM {
                        return Err(Error::MalformedRaySet(format!("context {k}: rays {i} and {j} not orthogonal")));
                    }
                }
            }
        }
        Ok(RaySet { dim, rays, contexts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rays(&self) -> &[Ket] {
        &self.rays
    }

    pub fn contexts(&self) -> &[Vec<usize>] {
        &self.contexts
    }

    pub fn hypergraph(&self) -> Hypergraph {
        Hypergraph {
            vertices: self.rays.len(),
            edges: self.contexts.clone(),
        }
    }

    /// Each context as a [`ProjectiveContext`] labelled `c{k}`.
    pub fn projective_contexts(&self) -> Result<Vec<ProjectiveContext>> {
        self.contexts
            .iter()
            .enumerate()
            .map(|(k, c)| ProjectiveContext::from_rays(format!("c{k}"), c.iter().map(|&i| self.rays[i].clone()).collect()))
            .collect()
    }

    /// Rays are normalized on load, so integer vectors are accepted.
    pub fn from_json(s: &str) -> Result<Self> {
        let j: RaySetJson = serde_json::from_str(s)?;
        let rays = j
            .rays
            .into_iter()
            .map(|r| match r {
                RayJson::Real(re) => Ket::from_real_normalized(&re),
                RayJson::Complex([re, im]) => {
                    if re.len() != im.len() {
                        return Err(Error::MalformedRaySet("real and imaginary parts differ in length".into()));
                    }
                    Ket::normalized(re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        RaySet::new(j.dim, rays, j.contexts)
    }

    pub fn to_json(&self) -> Result<String> {
        let j = RaySetJson {
            dim: self.dim,
            rays: self
                .rays
                .iter()
                .map(|r| RayJson::Complex([r.amplitudes().iter().map(|c| c.re).collect(), r.amplitudes().iter().map(|c| c.im).collect()]))
                .collect(),
            contexts: self.contexts.clone(),
        };
        Ok(serde_json::to_string(&j)?)
    }
}

/// Collects the distinct rays of `contexts` in order of first appearance.
pub fn rays_from_contexts(contexts: &[ProjectiveContext]) -> Result<RaySet> {
    let dim = contexts.first().map(|c| c.dim()).ok_or_else(|| Error::MalformedRaySet("no contexts".into()))?;
    let mut rays: Vec<Ket> = Vec::new();
    let mut tuples = Vec::with_capacity(contexts.len());
    for c in contexts {
        if c.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        let tuple = c
            .rays()
            .map(|r| match rays.iter().position(|k| k.same_ray(r)) {
                Some(i) => i,
                None => {
                    rays.push(r.clone());
                    rays.len() - 1
                }
            })
            .collect();
        tuples.push(tuple);
    }
    RaySet::new(dim, rays, tuples)
}

/// Exactly one vertex of every edge must get value 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraph {
    pub vertices: usize,
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Every vertex lies in an even number of edges while the edge count is
    /// odd: summing the edge constraints gives an even number equal to an odd
    /// one, so no assignment exists.
    pub fn parity_obstruction(&self) -> bool {
        let mut degree = vec![0usize; self.vertices];
        self.edges.iter().flatten().for_each(|&v| degree[v] += 1);
        self.edges.len() % 2 == 1 && degree.iter().all(|d| d % 2 == 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColoringAssignment {
    pub values: Vec<u8>,
}

impl ColoringAssignment {
    pub fn satisfies(&self, h: &Hypergraph) -> bool {
        self.values.len() == h.vertices
            && self.values.iter().all(|&v| v <= 1)
            && h.edges.iter().all(|e| e.iter().map(|&i| self.values[i] as u32).sum::<u32>() == 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColoringCertificate {
    Assignment { values: Vec<u8>, nodes: u64 },
    Exhaustion { nodes: u64, rays: usize, contexts: usize, parity_obstruction: bool },
}

impl ColoringCertificate {
    pub fn is_feasible(&self) -> bool {
        matches!(self, ColoringCertificate::Assignment { .. })
    }

    pub fn nodes(&self) -> u64 {
        match self {
            ColoringCertificate::Assignment { nodes, .. } | ColoringCertificate::Exhaustion { nodes, .. } => *nodes,
        }
    }

    pub fn assignment(&self) -> Option<ColoringAssignment> {
        match self {
            ColoringCertificate::Assignment { values, .. } => Some(ColoringAssignment { values: values.clone() }),
            ColoringCertificate::Exhaustion { .. } => None,
        }
    }
}

/// Complete search for a 0/1 assignment with exactly one 1 per context.
pub fn ks_colorable(rays: &RaySet) -> ColoringCertificate {
    solve_hypergraph(&rays.hypergraph())
}

struct Search<'a> {
    h: &'a Hypergraph,
    incident: Vec<Vec<usize>>,
    order: Vec<usize>,
    nodes: u64,
}

impl Search<'_> {
    /// Applies the forcing rules to a fixpoint; false on contradiction.
    fn propagate(&self, values: &mut [Option<bool>], mut queue: Vec<usize>) -> bool {
        while let Some(v) = queue.pop() {
            for &e in &self.incident[v] {
                let edge = &self.h.edges[e];
                let ones = edge.iter().filter(|&&i| values[i] == Some(true)).count();
                let open: Vec<usize> = edge.iter().copied().filter(|&i| values[i].is_none()).collect();
                match (ones, open.len()) {
                    (2.., _) => return false,
                    (1, _) => {
                        for i in open {
                            values[i] = Some(false);
                            queue.push(i);
                        }
                    }
                    (0, 0) => return false,
                    (0, 1) => {
                        values[open[0]] = Some(true);
                        queue.push(open[0]);
                    }
                    _ => {}
                }
            }
        }
        true
    }

    fn run(&mut self, values: &mut Vec<Option<bool>>) -> bool {
        let Some(&v) = self.order.iter().find(|&&v| values[v].is_none()) else {
            return true;
        };
        for choice in [true, false] {
            self.nodes += 1;
            let mut next = values.clone();
            next[v] = Some(choice);
            if self.propagate(&mut next, vec![v]) && self.run(&mut next) {
                *values = next;
                return true;
            }
        }
        false
    }
}

/// Backtracking with unit propagation. Vertices are branched on in order of
/// first appearance in the edge list, 1 before 0; `nodes` counts branches.
pub fn solve_hypergraph(h: &Hypergraph) -> ColoringCertificate {
    let mut incident = vec![Vec::new(); h.vertices];
    let mut order = Vec::with_capacity(h.vertices);
    let mut seen = vec![false; h.vertices];
    for (k, e) in h.edges.iter().enumerate() {
        for &v in e {
            incident[v].push(k);
            if !seen[v] {
                seen[v] = true;
                order.push(v);
            }
        }
    }
    let exhausted = |nodes| ColoringCertificate::Exhaustion {
        nodes,
        rays: h.vertices,
        contexts: h.edges.len(),
        parity_obstruction: h.parity_obstruction(),
    };
    if h.edges.iter().any(|e| e.is_empty()) {
        return exhausted(0);
    }
    let mut s = Search {
        h,
        incident,
        order,
        nodes: 0,
    };
    let mut values = vec![None; h.vertices];
    if s.run(&mut values) {
        ColoringCertificate::Assignment {
            values: values.iter().map(|v| u8::from(v == &Some(true))).collect(),
            nodes: s.nodes,
        }
    } else {
        exhausted(s.nodes)
    }
}

/// Number of satisfying assignments by trying all `2^vertices` of them.
pub fn count_colorings_naive(h: &Hypergraph) -> u64 {
    assert!(h.vertices <= 30, "naive enumeration is limited to 30 vertices");
    let masks: Vec<u32> = h.edges.iter().map(|e| e.iter().fold(0u32, |m, &v| m | 1 << v)).collect();
    (0u32..1 << h.vertices)
        .filter(|x| masks.iter().all(|m| (x & m).count_ones() == 1))
        .count() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(d: usize, i: usize) -> Ket {
        Ket::basis(d, i)
    }

    #[test]
    fn single_context_has_three_colorings() {
        let rs = RaySet::new(3, vec![e(3, 0), e(3, 1), e(3, 2)], vec![vec![0, 1, 2]]).unwrap();
        let cert = ks_colorable(&rs);
        assert!(cert.assignment().unwrap().satisfies(&rs.hypergraph()));
        assert_eq!(count_colorings_naive(&rs.hypergraph()), 3);
    }

    #[test]
    fn two_contexts_sharing_a_ray() {
        let a = Ket::from_real_normalized(&[0.0, 1.0, 1.0]).unwrap();
        let b = Ket::from_real_normalized(&[0.0, 1.0, -1.0]).unwrap();
        let rs = RaySet::new(3, vec![e(3, 0), e(3, 1), e(3, 2), a, b], vec![vec![0, 1, 2], vec![0, 3, 4]]).unwrap();
        assert!(ks_colorable(&rs).is_feasible());
        // 1 (shared ray on) + 2·2 (off, one in each remaining pair).
        assert_eq!(count_colorings_naive(&rs.hypergraph()), 5);
    }

    #[test]
    fn malformed_sets_are_rejected() {
        let plus = Ket::from_real_normalized(&[1.0, 1.0]).unwrap();
        assert!(RaySet::new(2, vec![e(2, 0), plus.clone()], vec![vec![0, 1]]).is_err());
        assert!(RaySet::new(2, vec![e(2, 0), e(2, 1)], vec![vec![0, 2]]).is_err());
        assert!(RaySet::new(2, vec![e(2, 0), e(2, 1)], vec![vec![0]]).is_err());
        assert!(RaySet::new(2, vec![e(2, 0), e(2, 0).with_global_phase(1.0)], vec![]).is_err());
    }

    #[test]
    fn rays_are_deduplicated_up_to_phase() {
        let c = ProjectiveContext::canonical(3);
        let rs = rays_from_contexts(&[c.clone(), c.relabeled("again")]).unwrap();
        assert_eq!(rs.rays().len(), 3);
        assert_eq!(rs.contexts().len(), 2);

        let plus = Ket::from_real_normalized(&[1.0, 1.0]).unwrap();
        let minus = Ket::from_real_normalized(&[1.0, -1.0]).unwrap();
        let h = ProjectiveContext::checked("h", vec![plus, minus.with_global_phase(0.3)]).unwrap();
        let rs = rays_from_contexts(&[ProjectiveContext::canonical(2), h]).unwrap();
        assert_eq!(rs.rays().len(), 4);
        assert_eq!(rs.contexts(), &[vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn json_round_trip() {
        let rs = RaySet::new(2, vec![e(2, 0), e(2, 1)], vec![vec![0, 1]]).unwrap();
        let back = RaySet::from_json(&rs.to_json().unwrap()).unwrap();
        assert_eq!(back, rs);
        let ints = RaySet::from_json(r#"{"dim":2,"rays":[[1,1],[[1,-1],[0,0]]],"contexts":[[0,1]]}"#).unwrap();
        assert!((ints.rays()[0].amplitudes()[0].re - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
