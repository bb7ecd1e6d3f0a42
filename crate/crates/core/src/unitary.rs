//! Factorisation of energy-preserving unitaries into two-level rotations.
//!
//! An energy-preserving unitary is block-diagonal over the degenerate
//! subspaces of the reference Hamiltonian; each block factorises into
//! Givens-style two-level unitaries by a triangular elimination sweep,
//! leaving a diagonal of phases.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Result, ThermoError};

type C64 = Complex<f64>;

pub const UNITARITY_TOL: f64 = 1e-10;
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Absolute tolerance for grouping H0 eigenvalues into degenerate blocks.
pub const DEGENERACY_TOL: f64 = 1e-9;

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A d×d unitary together with its reference Hamiltonian (diagonal, real).
#[derive(Clone, Debug)]
pub struct ComplexUnitary {
    matrix: DMatrix<C64>,
    h0: Vec<f64>,
}

impl ComplexUnitary {
    pub fn new(matrix: DMatrix<C64>, h0: Vec<f64>) -> Result<Self> {
        let d = h0.len();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(ThermoError::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let residual = matrix.adjoint() * &matrix - DMatrix::<C64>::identity(d, d);
        if max_abs(&residual) > UNITARITY_TOL {
            return Err(ThermoError::InvalidInput(format!(
                "matrix is not unitary (‖U†U − 1‖_∞ = {:.3e})",
                max_abs(&residual)
            )));
        }
        Ok(Self { matrix, h0 })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn hamiltonian(&self) -> &[f64] {
        &self.h0
    }

    pub fn dim(&self) -> usize {
        self.h0.len()
    }

    pub fn is_energy_preserving(&self) -> bool {
        is_energy_preserving(&self.matrix, &self.h0)
    }
}

/// ‖UH0 − H0U‖_∞ ≤ tolerance, with H0 diagonal.
pub fn is_energy_preserving(u: &DMatrix<C64>, h0: &[f64]) -> bool {
    let d = h0.len();
    if u.nrows() != d || u.ncols() != d {
        return false;
    }
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            // (UH0 − H0U)_{rc} = U_{rc} (H0_c − H0_r).
            worst = worst.max((u[(r, c)] * (h0[c] - h0[r])).norm());
        }
    }
    worst <= COMMUTATOR_TOL
}

/// A unitary acting on two levels of the same degenerate subspace.
#[derive(Clone, Debug)]
pub struct TwoLevelUnitary {
    a: usize,
    b: usize,
    block: [[C64; 2]; 2],
}

impl TwoLevelUnitary {
    pub fn new(a: usize, b: usize, block: [[C64; 2]; 2], h0: &[f64]) -> Result<Self> {
        let d = h0.len();
        if a >= d || b >= d {
            return Err(ThermoError::IndexOutOfRange {
                index: a.max(b),
                dim: d,
            });
        }
        if a == b {
            return Err(ThermoError::InvalidInput(
                "a two-level unitary needs two distinct levels".into(),
            ));
        }
        if (h0[a] - h0[b]).abs() > 1e-12 {
            return Err(ThermoError::PreconditionViolated(format!(
                "levels {a} and {b} are not degenerate"
            )));
        }
        // Block unitarity within 1e-12.
        let [[p, q], [r, s]] = block;
        let rows = [
            p.norm_sqr() + q.norm_sqr() - 1.0,
            r.norm_sqr() + s.norm_sqr() - 1.0,
            (p * r.conj() + q * s.conj()).norm(),
        ];
        if rows.iter().any(|x| x.abs() > 1e-12) {
            return Err(ThermoError::InvalidInput("block is not unitary".into()));
        }
        Ok(Self { a, b, block })
    }

    pub fn levels(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    pub fn block(&self) -> &[[C64; 2]; 2] {
        &self.block
    }

    pub fn embed(&self, d: usize) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::identity(d, d);
        m[(self.a, self.a)] = self.block[0][0];
        m[(self.a, self.b)] = self.block[0][1];
        m[(self.b, self.a)] = self.block[1][0];
        m[(self.b, self.b)] = self.block[1][1];
        m
    }

    /// The doubly stochastic action |u_{ab}|² on populations.
    pub fn population_action(&self, d: usize) -> DMatrix<f64> {
        let mut m = DMatrix::<f64>::identity(d, d);
        m[(self.a, self.a)] = self.block[0][0].norm_sqr();
        m[(self.a, self.b)] = self.block[0][1].norm_sqr();
        m[(self.b, self.a)] = self.block[1][0].norm_sqr();
        m[(self.b, self.b)] = self.block[1][1].norm_sqr();
        m
    }
}

/// Indices grouped by H0 value within the degeneracy tolerance; blocks need
/// not be contiguous.
fn degenerate_blocks(h0: &[f64]) -> Vec<Vec<usize>> {
    let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &e) in h0.iter().enumerate() {
        match blocks.iter_mut().find(|(v, _)| (*v - e).abs() <= DEGENERACY_TOL) {
            Some((_, idx)) => idx.push(i),
            None => blocks.push((e, vec![i])),
        }
    }
    blocks.into_iter().map(|(_, idx)| idx).collect()
}

/// Factorises an energy-preserving unitary into two-level unitaries within
/// degenerate blocks plus a diagonal phase vector:
/// U = factors[0] · factors[1] · … · diag(phases).
pub fn decompose(u: &ComplexUnitary) -> Result<(Vec<TwoLevelUnitary>, Vec<C64>)> {
    if !u.is_energy_preserving() {
        return Err(ThermoError::PreconditionViolated(
            "unitary does not commute with the reference Hamiltonian".into(),
        ));
    }
    let h0 = u.hamiltonian();
    let m = u.matrix();
    let mut factors = Vec::new();
    let mut phases = vec![C64::new(1.0, 0.0); u.dim()];
    for idx in degenerate_blocks(h0) {
        let k = idx.len();
        let mut b = DMatrix::<C64>::from_fn(k, k, |r, c| m[(idx[r], idx[c])]);
        // Triangular Givens sweep: zero below-diagonal entries column by
        // column; a unitary triangular matrix is diagonal, so only phases
        // remain.
        for col in 0..k {
            for row in col + 1..k {
                let g = b[(row, col)];
                if g.norm() <= 1e-14 {
                    continue;
                }
                let f = b[(col, col)];
                let r = (f.norm_sqr() + g.norm_sqr()).sqrt();
                // G·(f,g) = (r,0); the factor recorded is G†.
                let g_rot = [
                    [f.conj() / r, g.conj() / r],
                    [-g / r, f / r],
                ];
                for c in 0..k {
                    let (top, bot) = (b[(col, c)], b[(row, c)]);
                    b[(col, c)] = g_rot[0][0] * top + g_rot[0][1] * bot;
                    b[(row, c)] = g_rot[1][0] * top + g_rot[1][1] * bot;
                }
                let adj = [
                    [g_rot[0][0].conj(), g_rot[1][0].conj()],
                    [g_rot[0][1].conj(), g_rot[1][1].conj()],
                ];
                factors.push(TwoLevelUnitary::new(idx[col], idx[row], adj, h0)?);
            }
        }
        for (r, &i) in idx.iter().enumerate() {
            phases[i] = b[(r, r)];
        }
    }
    Ok((factors, phases))
}

/// Multiplies the factors back: Π factors · diag(phases).
pub fn reconstruct(factors: &[TwoLevelUnitary], phases: &[C64]) -> DMatrix<C64> {
    let d = phases.len();
    let mut m = DMatrix::<C64>::from_diagonal(&nalgebra::DVector::from_row_slice(phases));
    for f in factors.iter().rev() {
        m = f.embed(d) * m;
    }
    m
}
