//! A small dense two-phase simplex solver with Bland's anti-cycling rule.
//!
//! Solves `min c·x` subject to row constraints `a·x (<=|=|>=) b` and `x >= 0`.
//! Intended for the tiny LPs arising from hypergraph flow feasibility.

use crate::error::{Error, Result};
use crate::{lit, tolerance, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    /// Sparse coefficients `(variable, value)`.
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub vars: usize,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, objective: T },
    Infeasible,
    Unbounded,
}

impl<T: Real> LinearProgram<T> {
    pub fn new(vars: usize) -> Self {
        Self {
            vars,
            objective: vec![T::zero(); vars],
            constraints: Vec::new(),
        }
    }

    pub fn add(&mut self, coeffs: Vec<(usize, T)>, sense: Sense, rhs: T) {
        self.constraints.push(Constraint { coeffs, sense, rhs });
    }

    pub fn solve(&self) -> Result<LpOutcome<T>> {
        Tableau::build(self).run(self)
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    /// Column index of the first artificial variable.
    art: usize,
    cols: usize,
}

fn pivot_tol<T: Real>() -> T {
    lit::<T>(1e-12).max(T::epsilon() * lit(16.0))
}

impl<T: Real> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let m = lp.constraints.len();
        let slacks = lp
            .constraints
            .iter()
            .filter(|c| c.sense != Sense::Eq)
            .count();
        let art = lp.vars + slacks;
        let cols = art + m;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut slack = lp.vars;
        for (r, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![T::zero(); cols];
            for &(j, v) in &c.coeffs {
                row[j] = row[j] + v;
            }
            match c.sense {
                Sense::Le => {
                    row[slack] = T::one();
                    slack += 1;
                }
                Sense::Ge => {
                    row[slack] = -T::one();
                    slack += 1;
                }
                Sense::Eq => {}
            }
            let mut b = c.rhs;
            if b < T::zero() {
                for v in row.iter_mut() {
                    *v = -*v;
                }
                b = -b;
            }
            row[art + r] = T::one();
            rows.push(row);
            rhs.push(b);
        }
        Self {
            rows,
            rhs,
            basis: (art..art + m).collect(),
            art,
            cols,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v = *v / p;
        }
        self.rhs[r] = self.rhs[r] / p;
        let (pivot_row, pivot_rhs) = (self.rows[r].clone(), self.rhs[r]);
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f != T::zero() {
                for (v, &pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                    *v = *v - f * pv;
                }
                self.rhs[i] = self.rhs[i] - f * pivot_rhs;
                if self.rhs[i].abs() < pivot_tol() {
                    self.rhs[i] = T::zero();
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations minimising `cost` over columns `< limit`.
    /// Returns `false` if the problem is unbounded.
    fn optimise(&mut self, cost: &[T], limit: usize, guard: &mut usize) -> Result<bool> {
        let tol = pivot_tol::<T>();
        loop {
            if *guard == 0 {
                return Err(Error::Guard("simplex iteration limit reached".into()));
            }
            *guard -= 1;
            // reduced costs; Bland: first improving column
            let entering = (0..limit).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut d = cost[j];
                for (i, &b) in self.basis.iter().enumerate() {
                    d = d - cost[b] * self.rows[i][j];
                }
                d < -tolerance::<T>()
            });
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, T)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > tol {
                    let ratio = self.rhs[i] / a;
                    let better = match leave {
                        None => true,
                        Some((l, best)) => {
                            ratio < best - tol
                                || (ratio <= best + tol && self.basis[i] < self.basis[l])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, c),
                None => return Ok(false),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
        let m = self.rows.len();
        let mut guard = 50 * (self.cols + m) + 1000;
        // phase 1: minimise the sum of artificials
        let mut cost1 = vec![T::zero(); self.cols];
        for c in cost1.iter_mut().skip(self.art) {
            *c = T::one();
        }
        self.optimise(&cost1, self.cols, &mut guard)?;
        let infeas: T = (0..m)
            .filter(|&i| self.basis[i] >= self.art)
            .map(|i| self.rhs[i])
            .sum();
        let scale = self.rhs_scale(lp);
        if infeas > tolerance::<T>() * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // drive remaining artificials out of the basis
        let mut keep = vec![true; m];
        #[allow(clippy::needless_range_loop)] // pivot() borrows self mutably
        for i in 0..m {
            if self.basis[i] < self.art {
                continue;
            }
            match (0..self.art).find(|&j| self.rows[i][j].abs() > pivot_tol::<T>()) {
                Some(j) => self.pivot(i, j),
                None => keep[i] = false,
            }
        }
        let mut r = 0;
        self.rows.retain(|_| {
            r += 1;
            keep[r - 1]
        });
        let mut r = 0;
        self.rhs.retain(|_| {
            r += 1;
            keep[r - 1]
        });
        let mut r = 0;
        self.basis.retain(|_| {
            r += 1;
            keep[r - 1]
        });
        // phase 2
        let mut cost2 = vec![T::zero(); self.cols];
        cost2[..lp.vars].copy_from_slice(&lp.objective);
        if !self.optimise(&cost2, self.art, &mut guard)? {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![T::zero(); lp.vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < lp.vars {
                x[b] = self.rhs[i].max(T::zero());
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(&a, &b)| a * b).sum();
        Ok(LpOutcome::Optimal { x, objective })
    }

    fn rhs_scale(&self, lp: &LinearProgram<T>) -> T {
        lp.constraints
            .iter()
            .map(|c| c.rhs.abs())
            .fold(T::one(), T::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(o: LpOutcome<f64>) -> (Vec<f64>, f64) {
        match o {
            LpOutcome::Optimal { x, objective } => (x, objective),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn textbook_max() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let (x, obj) = optimal(lp.solve().unwrap());
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((obj + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge() {
        // min x + y s.t. x + y = 2, x >= 0.5, y - x >= -1 (i.e. x - y <= 1)
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 1.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0);
        lp.add(vec![(0, 1.0)], Sense::Ge, 0.5);
        lp.add(vec![(1, 1.0), (0, -1.0)], Sense::Ge, -1.0);
        let (x, obj) = optimal(lp.solve().unwrap());
        assert!((obj - 2.0).abs() < 1e-12);
        assert!(x[0] >= 0.5 - 1e-12 && x[0] - x[1] <= 1.0 + 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add(vec![(0, 1.0)], Sense::Le, 1.0);
        lp.add(vec![(0, 1.0)], Sense::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![-1.0, 0.0];
        lp.add(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::<f64>::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp.add(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 2.0);
        let (x, obj) = optimal(lp.solve().unwrap());
        assert_eq!(x, vec![1.0, 0.0]);
        assert_eq!(obj, 1.0);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example, which cycles under the largest-coefficient rule.
        let mut lp = LinearProgram::<f64>::new(4);
        lp.objective = vec![-0.75, 20.0, -0.5, 6.0];
        lp.add(vec![(0, 0.25), (1, -8.0), (2, -1.0), (3, 9.0)], Sense::Le, 0.0);
        lp.add(vec![(0, 0.5), (1, -12.0), (2, -0.5), (3, 3.0)], Sense::Le, 0.0);
        lp.add(vec![(2, 1.0)], Sense::Le, 1.0);
        let (_, obj) = optimal(lp.solve().unwrap());
        assert!((obj + 1.25).abs() < 1e-12);
    }
}
