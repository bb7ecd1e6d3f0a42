//! Dense two-phase revised simplex for small equality-form programs:
//! minimise c·x subject to Ax = b, x ≥ 0.
//!
//! Row counts here are tiny (≲ 15) while column counts can reach a few
//! thousand, so the basis is refactorised every iteration and all effort
//! goes into pricing. An optimal basis can be fed back in to warm-start the
//! next solve, which is what makes dense parameter scans affordable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ThermoError};

/// Feasibility tolerance on constraint residuals and variable signs.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost threshold for optimality.
const OPT_TOL: f64 = 1e-9;
/// Minimum magnitude accepted for a pivot element.
const PIVOT_TOL: f64 = 1e-10;
/// Dantzig pricing switches to Bland's rule after this many iterations.
const BLAND_AFTER: usize = 500;
const MAX_ITERS: usize = 20_000;

#[derive(Clone, Debug)]
pub struct LinearProgram {
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: DVector<f64>,
}

#[derive(Clone, Debug)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
        /// Basic column indices; reusable via [`LinearProgram::solve_with_basis`].
        basis: Vec<usize>,
    },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(&[f64], f64)> {
        match self {
            LpOutcome::Optimal { x, objective, .. } => Some((x, *objective)),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. } | LpOutcome::Unbounded)
    }
}

enum CoreExit {
    Optimal,
    Unbounded,
}

impl LinearProgram {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(ThermoError::DimensionMismatch {
                expected: a.nrows(),
                got: b.len(),
            });
        }
        if a.ncols() != c.len() {
            return Err(ThermoError::DimensionMismatch {
                expected: a.ncols(),
                got: c.len(),
            });
        }
        if a.ncols() == 0 || a.nrows() == 0 {
            return Err(ThermoError::InvalidInput("empty linear program".into()));
        }
        Ok(Self { a, b, c })
    }

    /// Pure feasibility problem (zero objective).
    pub fn feasibility(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        let n = a.ncols();
        Self::new(a, b, DVector::zeros(n))
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a.ncols()
    }

    /// Cold solve: phase 1 with artificial variables, then phase 2.
    pub fn solve(&self) -> Result<LpOutcome> {
        // Orient rows so the phase-1 start b ≥ 0.
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for i in 0..b.len() {
            if b[i] < 0.0 {
                b[i] = -b[i];
                for j in 0..a.ncols() {
                    a[(i, j)] = -a[(i, j)];
                }
            }
        }
        let (m, n) = (a.nrows(), a.ncols());

        let mut a1 = DMatrix::zeros(m, n + m);
        a1.view_mut((0, 0), (m, n)).copy_from(&a);
        for i in 0..m {
            a1[(i, n + i)] = 1.0;
        }
        let mut c1 = DVector::zeros(n + m);
        for i in 0..m {
            c1[n + i] = 1.0;
        }
        let mut basis: Vec<usize> = (n..n + m).collect();
        let (exit, xb) = simplex_core(&a1, &b, &c1, &mut basis)?;
        if matches!(exit, CoreExit::Unbounded) {
            // Phase-1 objective is bounded below by zero.
            return Err(ThermoError::SolverFailure);
        }
        let residual: f64 = basis
            .iter()
            .zip(xb.iter())
            .filter(|&(&j, _)| j >= n)
            .map(|(_, &v)| v)
            .sum();
        if residual > 1e-7 {
            return Ok(LpOutcome::Infeasible);
        }
        // Pure feasibility problems are done: the phase-1 point is the
        // answer, and the (possibly ill-conditioned) phase-2 start is never
        // touched.
        if self.c.iter().all(|&v| v == 0.0) {
            return Ok(self.package(CoreExit::Optimal, &basis, &xb));
        }

        // Drive leftover artificials out of the basis; rows where no
        // original column can pivot in are linearly dependent and dropped.
        let mut drop_rows = Vec::new();
        for r in 0..m {
            if basis[r] < n {
                continue;
            }
            let bmat = gather(&a1, &basis);
            let lut = bmat.transpose().lu();
            let mut e_r = DVector::zeros(m);
            e_r[r] = 1.0;
            let z = lut.solve(&e_r).ok_or(ThermoError::SolverFailure)?;
            // Best-conditioned replacement: maximise the pivot magnitude.
            let pivot = (0..n)
                .filter(|j| !basis.contains(j))
                .map(|j| (j, z.dot(&a1.column(j).into_owned()).abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1));
            match pivot {
                Some((j, mag)) if mag > 1e-7 => basis[r] = j,
                _ => drop_rows.push(r),
            }
        }
        let keep: Vec<usize> = (0..m).filter(|r| !drop_rows.contains(r)).collect();
        let a2 = a.select_rows(keep.iter());
        let b2 = DVector::from_iterator(keep.len(), keep.iter().map(|&r| b[r]));
        let mut basis: Vec<usize> = keep.iter().map(|&r| basis[r]).collect();

        let (exit, xb) = simplex_core(&a2, &b2, &self.c, &mut basis)?;
        Ok(self.package(exit, &basis, &xb))
    }

    /// Warm-started solve from a candidate basis (typically the optimal
    /// basis of a nearby program). Falls back to a cold solve whenever the
    /// basis is unusable.
    pub fn solve_with_basis(&self, basis: &[usize]) -> Result<LpOutcome> {
        let (m, n) = (self.a.nrows(), self.a.ncols());
        let usable = basis.len() == m
            && basis.iter().all(|&j| j < n)
            && (0..basis.len()).all(|i| !basis[i + 1..].contains(&basis[i]));
        if !usable {
            return self.solve();
        }
        let bmat = gather(&self.a, basis);
        let lu = bmat.lu();
        let Some(xb) = lu.solve(&self.b) else {
            return self.solve();
        };
        if xb.iter().any(|&v| v < -FEAS_TOL) {
            return self.solve();
        }
        let mut basis = basis.to_vec();
        let (exit, xb) = simplex_core(&self.a, &self.b, &self.c, &mut basis)?;
        Ok(self.package(exit, &basis, &xb))
    }

    fn package(&self, exit: CoreExit, basis: &[usize], xb: &DVector<f64>) -> LpOutcome {
        match exit {
            CoreExit::Unbounded => LpOutcome::Unbounded,
            CoreExit::Optimal => {
                let mut x = vec![0.0; self.a.ncols()];
                for (r, &j) in basis.iter().enumerate() {
                    // Basic artificials (phase-1 bases only) carry ~0 value.
                    if j < x.len() {
                        x[j] = xb[r].max(0.0);
                    }
                }
                let objective = x.iter().zip(self.c.iter()).map(|(xi, ci)| xi * ci).sum();
                LpOutcome::Optimal {
                    x,
                    objective,
                    basis: basis.to_vec(),
                }
            }
        }
    }
}

fn gather(a: &DMatrix<f64>, basis: &[usize]) -> DMatrix<f64> {
    a.select_columns(basis.iter())
}

/// Primal simplex from a feasible basis. Returns the exit condition and the
/// final basic solution values (aligned with `basis`).
fn simplex_core(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    basis: &mut Vec<usize>,
) -> Result<(CoreExit, DVector<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    for iter in 0..MAX_ITERS {
        let bmat = gather(a, basis);
        let lu = bmat.clone().lu();
        let xb = lu.solve(b).ok_or(ThermoError::SolverFailure)?;
        let cb = DVector::from_iterator(m, basis.iter().map(|&j| c[j]));
        let y = bmat
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or(ThermoError::SolverFailure)?;

        let bland = iter >= BLAND_AFTER;
        let mut entering: Option<(usize, f64)> = None;
        for j in 0..n {
            if basis.contains(&j) {
                continue;
            }
            let d = c[j] - y.dot(&a.column(j).into_owned());
            if d < -OPT_TOL {
                if bland {
                    entering = Some((j, d));
                    break;
                }
                if entering.map_or(true, |(_, best)| d < best) {
                    entering = Some((j, d));
                }
            }
        }
        let Some((e, _)) = entering else {
            return Ok((CoreExit::Optimal, xb));
        };

        let w = lu
            .solve(&a.column(e).into_owned())
            .ok_or(ThermoError::SolverFailure)?;
        // Harris-style two-pass ratio test. Pass 1 bounds the step with a
        // feasibility slack; pass 2 picks, among rows whose exact ratio fits
        // the bound, the largest pivot (keeps the basis well conditioned) or
        // the smallest basic index once Bland's rule is active.
        let mut bound = f64::INFINITY;
        for r in 0..m {
            if w[r] > PIVOT_TOL {
                bound = bound.min((xb[r].max(0.0) + FEAS_TOL) / w[r]);
            }
        }
        if !bound.is_finite() {
            return Ok((CoreExit::Unbounded, xb));
        }
        let mut leaving: Option<usize> = None;
        for r in 0..m {
            if w[r] > PIVOT_TOL && xb[r].max(0.0) / w[r] <= bound {
                let better = match leaving {
                    None => true,
                    Some(lr) => {
                        if bland {
                            basis[r] < basis[lr]
                        } else {
                            w[r] > w[lr]
                        }
                    }
                };
                if better {
                    leaving = Some(r);
                }
            }
        }
        let r = leaving.expect("bounded step has a leaving row");
        basis[r] = e;
    }
    Err(ThermoError::SolverFailure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lp(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> LinearProgram {
        let m = a.len();
        let n = a[0].len();
        let a = DMatrix::from_fn(m, n, |i, j| a[i][j]);
        LinearProgram::new(a, DVector::from_vec(b), DVector::from_vec(c)).unwrap()
    }

    #[test]
    fn simple_optimum() {
        // min -x1 - 2 x2 s.t. x1 + x2 + s = 1 → x2 = 1.
        let p = lp(
            vec![vec![1.0, 1.0, 1.0]],
            vec![1.0],
            vec![-1.0, -2.0, 0.0],
        );
        let out = p.solve().unwrap();
        let (x, obj) = out.optimal().unwrap();
        assert_abs_diff_eq!(obj, -2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        // x1 + x2 = 1, x1 - x2 = 3 forces x2 < 0.
        let p = lp(
            vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            vec![1.0, 3.0],
            vec![0.0, 0.0],
        );
        assert!(matches!(p.solve().unwrap(), LpOutcome::Infeasible));
    }

    #[test]
    fn detects_unbounded() {
        // min -x1 s.t. x1 - x2 = 0: ray x1 = x2 → ∞.
        let p = lp(vec![vec![1.0, -1.0]], vec![0.0], vec![-1.0, 0.0]);
        assert!(matches!(p.solve().unwrap(), LpOutcome::Unbounded));
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        let p = lp(
            vec![vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, 2.0],
            vec![1.0, 3.0],
        );
        let out = p.solve().unwrap();
        let (x, obj) = out.optimal().unwrap();
        assert_abs_diff_eq!(obj, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn convex_hull_membership_via_feasibility() {
        // Is (0.3, 0.4) in conv{(0,0), (1,0), (0,1)}? Weights sum to 1.
        let verts = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let a = DMatrix::from_fn(3, 3, |i, j| if i < 2 { verts[j][i] } else { 1.0 });
        let b = DVector::from_vec(vec![0.3, 0.4, 1.0]);
        let p = LinearProgram::feasibility(a.clone(), b).unwrap();
        assert!(matches!(p.solve().unwrap(), LpOutcome::Optimal { .. }));

        let b_out = DVector::from_vec(vec![0.8, 0.8, 1.0]);
        let p_out = LinearProgram::feasibility(a, b_out).unwrap();
        assert!(matches!(p_out.solve().unwrap(), LpOutcome::Infeasible));
    }

    #[test]
    fn warm_start_matches_cold_solve() {
        let p = lp(
            vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            vec![4.0, 6.0],
            vec![-2.0, -3.0, 0.0, 0.0],
        );
        let LpOutcome::Optimal { basis, .. } = p.solve().unwrap() else {
            panic!("expected optimum");
        };
        // Perturb b; the old basis should remain a valid warm start.
        let p2 = lp(
            vec![vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            vec![4.1, 6.0],
            vec![-2.0, -3.0, 0.0, 0.0],
        );
        let warm = p2.solve_with_basis(&basis).unwrap();
        let cold = p2.solve().unwrap();
        let (xw, ow) = warm.optimal().unwrap();
        let (xc, oc) = cold.optimal().unwrap();
        assert_abs_diff_eq!(ow, oc, epsilon = 1e-9);
        for (a, b) in xw.iter().zip(xc.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn garbage_warm_basis_falls_back() {
        let p = lp(
            vec![vec![1.0, 1.0, 1.0]],
            vec![1.0],
            vec![-1.0, -2.0, 0.0],
        );
        let out = p.solve_with_basis(&[7]).unwrap();
        assert_abs_diff_eq!(out.optimal().unwrap().1, -2.0, epsilon = 1e-9);
        let out = p.solve_with_basis(&[0, 1]).unwrap();
        assert_abs_diff_eq!(out.optimal().unwrap().1, -2.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_vertex_terminates() {
        // Multiple rows active at the optimum; exercises tie-breaking.
        let p = lp(
            vec![
                vec![1.0, 0.0, 1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0, 1.0, 0.0],
                vec![1.0, 1.0, 0.0, 0.0, 1.0],
            ],
            vec![1.0, 1.0, 2.0],
            vec![-1.0, -1.0, 0.0, 0.0, 0.0],
        );
        let (_, obj) = p.solve().unwrap().optimal().unwrap();
        assert_abs_diff_eq!(obj, -2.0, epsilon = 1e-9);
    }
}
