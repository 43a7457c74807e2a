//! Exact feasibility of `{x ≥ 0 : rows}` over the rationals.
//!
//! Phase one of the two-phase simplex method with Bland's rule. Infeasible
//! systems come with Farkas multipliers read off the final tableau.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// The exact rational equal to a finite `f64`.
pub fn rational(x: f64) -> Result<Rational> {
    BigRational::from_float(x).ok_or_else(|| Error::MalformedProblem(format!("non-finite coefficient {x}")))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub label: String,
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
}

/// Linear constraints on nonnegative variables.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearSystem {
    pub variables: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimplexOutcome {
    /// A point satisfying every row.
    Feasible { x: Vec<Rational>, pivots: usize },
    /// Multipliers `y`, one per row, with `Σ_i y_i a_ij ≤ 0` for every column,
    /// `y_i ≤ 0` on `Le` rows, `y_i ≥ 0` on `Ge` rows and `Σ_i y_i b_i > 0`.
    Infeasible { y: Vec<Rational>, pivots: usize },
}

impl LinearSystem {
    pub fn add_variable(&mut self, label: impl Into<String>) -> usize {
        self.variables.push(label.into());
        self.variables.len() - 1
    }

    pub fn add_row(&mut self, label: impl Into<String>, coeffs: Vec<(usize, Rational)>, sense: Sense, rhs: Rational) {
        self.rows.push(Row {
            label: label.into(),
            coeffs,
            sense,
            rhs,
        });
    }

    /// Multiplies row `i` by a positive constant; the feasible set is unchanged.
    pub fn scale_row(&mut self, i: usize, factor: &Rational) {
        assert!(factor.is_positive(), "row scale must be positive");
        let row = &mut self.rows[i];
        row.coeffs.iter_mut().for_each(|(_, c)| *c *= factor);
        row.rhs *= factor;
    }

    fn lhs(&self, row: &Row, x: &[Rational]) -> Rational {
        row.coeffs.iter().fold(Rational::zero(), |acc, (j, c)| acc + c * &x[*j])
    }

    /// Exact membership test.
    pub fn satisfied_by(&self, x: &[Rational]) -> bool {
        x.len() == self.variables.len()
            && x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|r| {
                let l = self.lhs(r, x);
                match r.sense {
                    Sense::Le => l <= r.rhs,
                    Sense::Ge => l >= r.rhs,
                    Sense::Eq => l == r.rhs,
                }
            })
    }

    /// Exact check of a Farkas certificate (see [`SimplexOutcome::Infeasible`]).
    pub fn certifies_infeasibility(&self, y: &[Rational]) -> bool {
        if y.len() != self.rows.len() {
            return false;
        }
        let mut column = vec![Rational::zero(); self.variables.len()];
        let mut by = Rational::zero();
        for (r, yi) in self.rows.iter().zip(y) {
            let sign_ok = match r.sense {
                Sense::Le => !yi.is_positive(),
                Sense::Ge => !yi.is_negative(),
                Sense::Eq => true,
            };
            if !sign_ok {
                return false;
            }
            for (j, c) in &r.coeffs {
                column[*j] += c * yi;
            }
            by += &r.rhs * yi;
        }
        by.is_positive() && column.iter().all(|c| !c.is_positive())
    }

    pub fn solve(&self) -> SimplexOutcome {
        Tableau::new(self).phase_one()
    }
}

/// Dense tableau for `[A | slacks | artificials] z = b`, `b ≥ 0`.
struct Tableau {
    m: usize,
    /// Structural variables; slacks follow them.
    nv: usize,
    n: usize,
    /// First artificial column.
    art: usize,
    /// `m` rows of `n + 1` entries; the last is the right-hand side.
    t: Vec<Vec<Rational>>,
    /// Reduced costs of the phase-one objective plus its negated value.
    cost: Vec<Rational>,
    basis: Vec<usize>,
    /// +1 or −1 per row, recording whether the row was negated.
    sign: Vec<Rational>,
}

impl Tableau {
    fn new(sys: &LinearSystem) -> Self {
        let m = sys.rows.len();
        let nv = sys.variables.len();
        let slacks: Vec<Option<usize>> = {
            let mut k = nv;
            sys.rows
                .iter()
                .map(|r| {
                    (r.sense != Sense::Eq).then(|| {
                        k += 1;
                        k - 1
                    })
                })
                .collect()
        };
        let art = nv + slacks.iter().flatten().count();
        let n = art + m;
        let mut t = vec![vec![Rational::zero(); n + 1]; m];
        let mut sign = Vec::with_capacity(m);
        for (i, r) in sys.rows.iter().enumerate() {
            for (j, c) in &r.coeffs {
                t[i][*j] += c;
            }
            if let Some(s) = slacks[i] {
                t[i][s] = if r.sense == Sense::Le { Rational::one() } else { -Rational::one() };
            }
            t[i][n] = r.rhs.clone();
            if r.rhs.is_negative() {
                t[i].iter_mut().for_each(|x| *x = -x.clone());
                sign.push(-Rational::one());
            } else {
                sign.push(Rational::one());
            }
            t[i][art + i] = Rational::one();
        }
        let mut cost = vec![Rational::zero(); n + 1];
        for row in &t {
            for j in 0..art {
                cost[j] -= &row[j];
            }
            cost[n] -= &row[n];
        }
        Tableau {
            m,
            nv,
            n,
            art,
            t,
            cost,
            basis: (art..art + m).collect(),
            sign,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c].clone();
        self.t[r].iter_mut().for_each(|x| *x /= &p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for (x, y) in self.cost.iter_mut().zip(&pivot_row) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
        }
        self.basis[r] = c;
    }

    fn phase_one(mut self) -> SimplexOutcome {
        let mut pivots = 0;
        loop {
            // Bland: lowest-index improving column, then lowest-index basic
            // variable among tied ratios.
            let Some(c) = (0..self.n).find(|&j| self.cost[j].is_negative()) else { break };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.m {
                if self.t[i][c].is_positive() {
                    let ratio = &self.t[i][self.n] / &self.t[i][c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            // Phase one is bounded below by zero, so a column always leaves.
            let (r, _) = best.expect("phase-one objective is bounded");
            self.pivot(r, c);
            pivots += 1;
        }
        let value = -self.cost[self.n].clone();
        if value.is_zero() {
            let mut x = vec![Rational::zero(); self.n];
            for (i, &b) in self.basis.iter().enumerate() {
                x[b] = self.t[i][self.n].clone();
            }
            x.truncate(self.nv);
            SimplexOutcome::Feasible { x, pivots }
        } else {
            // Dual prices of the negated-where-needed rows: y = 1 − reduced cost
            // of each artificial column; undo the negation row by row.
            let y = (0..self.m)
                .map(|i| (Rational::one() - &self.cost[self.art + i]) * &self.sign[i])
                .collect();
            SimplexOutcome::Infeasible { y, pivots }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn exact_conversion() {
        assert_eq!(rational(0.5).unwrap(), q(1, 2));
        assert_eq!(to_f64(&rational(0.1).unwrap()), 0.1);
        assert!(rational(f64::NAN).is_err());
    }

    #[test]
    fn feasible_point_satisfies_rows() {
        let mut s = LinearSystem::default();
        let x = s.add_variable("x");
        let y = s.add_variable("y");
        s.add_row("sum", vec![(x, q(1, 1)), (y, q(1, 1))], Sense::Eq, q(1, 1));
        s.add_row("x-big", vec![(x, q(1, 1))], Sense::Ge, q(2, 3));
        s.add_row("y-pos", vec![(y, q(1, 1))], Sense::Ge, q(1, 10));
        match s.solve() {
            SimplexOutcome::Feasible { x, .. } => assert!(s.satisfied_by(&x)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_system_yields_checked_certificate() {
        let mut s = LinearSystem::default();
        let x = s.add_variable("x");
        let y = s.add_variable("y");
        s.add_row("sum", vec![(x, q(1, 1)), (y, q(1, 1))], Sense::Eq, q(1, 1));
        s.add_row("x", vec![(x, q(1, 1))], Sense::Ge, q(3, 4));
        s.add_row("y", vec![(y, q(1, 1))], Sense::Ge, q(1, 2));
        match s.solve() {
            SimplexOutcome::Infeasible { y, .. } => assert!(s.certifies_infeasibility(&y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_right_hand_sides() {
        let mut s = LinearSystem::default();
        let x = s.add_variable("x");
        s.add_row("neg", vec![(x, q(-1, 1))], Sense::Le, q(-2, 1));
        s.add_row("cap", vec![(x, q(1, 1))], Sense::Le, q(3, 1));
        match s.solve() {
            SimplexOutcome::Feasible { x, .. } => {
                assert!(s.satisfied_by(&x));
                assert!(x[0] >= q(2, 1));
            }
            other => panic!("{other:?}"),
        }
        s.add_row("tight", vec![(x, q(1, 1))], Sense::Le, q(1, 1));
        match s.solve() {
            SimplexOutcome::Infeasible { y, .. } => assert!(s.certifies_infeasibility(&y)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_system_is_feasible() {
        let s = LinearSystem::default();
        assert!(matches!(s.solve(), SimplexOutcome::Feasible { .. }));
    }
}
