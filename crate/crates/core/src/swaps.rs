//! Two-level Gibbs-stochastic processes and their algebra.

use nalgebra::DMatrix;

use crate::error::{Result, ThermoError};
use crate::order::{BetaOrder, RATIO_TIE_TOL};
use crate::state::{PopulationVector, ThermalContext};

/// A (j,k,λ) two-level Gibbs-stochastic process. Levels are normalised on
/// construction so that E_j ≤ E_k; λ = 1 is the β-swap and λ = 1/(1+Δ) the
/// T-swap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelProcess {
    j: usize,
    k: usize,
    lambda: f64,
    delta: f64,
}

impl TwoLevelProcess {
    pub fn new(ctx: &ThermalContext, j: usize, k: usize, lambda: f64) -> Result<Self> {
        let d = ctx.dim();
        if j >= d || k >= d {
            return Err(ThermoError::IndexOutOfRange {
                index: j.max(k),
                dim: d,
            });
        }
        if j == k {
            return Err(ThermoError::InvalidInput(
                "a two-level process needs two distinct levels".into(),
            ));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ThermoError::InvalidInput(format!(
                "mixing parameter must lie in [0,1], got {lambda}"
            )));
        }
        let (j, k) = if ctx.energies()[j] <= ctx.energies()[k] {
            (j, k)
        } else {
            (k, j)
        };
        Ok(Self {
            j,
            k,
            lambda,
            delta: ctx.delta(j, k),
        })
    }

    /// The extremal λ = 1 process.
    pub fn beta_swap(ctx: &ThermalContext, j: usize, k: usize) -> Result<Self> {
        Self::new(ctx, j, k, 1.0)
    }

    /// The full two-level thermalisation, λ = 1/(1+Δ).
    pub fn t_swap(ctx: &ThermalContext, j: usize, k: usize) -> Result<Self> {
        let mut p = Self::new(ctx, j, k, 0.0)?;
        p.lambda = 1.0 / (1.0 + p.delta);
        Ok(p)
    }

    pub fn levels(&self) -> (usize, usize) {
        (self.j, self.k)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(ThermoError::InvalidInput(format!(
                "mixing parameter must lie in [0,1], got {lambda}"
            )));
        }
        Ok(Self { lambda, ..*self })
    }

    pub fn is_beta_swap(&self) -> bool {
        self.lambda == 1.0
    }

    /// Applies the process in place; touches only levels j and k.
    pub fn apply_in_place(&self, p: &mut [f64]) {
        let (pj, pk) = (p[self.j], p[self.k]);
        let l = self.lambda;
        p[self.j] = (1.0 - l * self.delta) * pj + l * pk;
        p[self.k] = l * self.delta * pj + (1.0 - l) * pk;
    }

    pub fn apply(&self, p: &PopulationVector) -> Result<PopulationVector> {
        let mut v = p.as_slice().to_vec();
        if self.k >= v.len() {
            return Err(ThermoError::DimensionMismatch {
                expected: self.k + 1,
                got: v.len(),
            });
        }
        self.apply_in_place(&mut v);
        PopulationVector::normalized(v)
    }

    /// Dense matrix form: identity except the (j,k) block
    /// [[1−λΔ, λ], [λΔ, 1−λ]].
    pub fn matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        if self.j >= d || self.k >= d {
            return Err(ThermoError::IndexOutOfRange {
                index: self.k,
                dim: d,
            });
        }
        let mut m = DMatrix::identity(d, d);
        let l = self.lambda;
        m[(self.j, self.j)] = 1.0 - l * self.delta;
        m[(self.j, self.k)] = l;
        m[(self.k, self.j)] = l * self.delta;
        m[(self.k, self.k)] = 1.0 - l;
        Ok(m)
    }
}

/// An ordered list of two-level processes; the first element acts first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SwapSequence {
    steps: Vec<TwoLevelProcess>,
}

impl SwapSequence {
    pub fn new(steps: Vec<TwoLevelProcess>) -> Self {
        Self { steps }
    }

    pub fn empty() -> Self {
        Self { steps: Vec::new() }
    }

    pub fn push(&mut self, step: TwoLevelProcess) {
        self.steps.push(step);
    }

    pub fn steps(&self) -> &[TwoLevelProcess] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn apply(&self, p: &PopulationVector) -> Result<PopulationVector> {
        let mut v = p.as_slice().to_vec();
        for s in &self.steps {
            if s.k >= v.len() {
                return Err(ThermoError::DimensionMismatch {
                    expected: s.k + 1,
                    got: v.len(),
                });
            }
            s.apply_in_place(&mut v);
        }
        PopulationVector::normalized(v)
    }

    /// Product matrix (first step rightmost).
    pub fn matrix(&self, d: usize) -> Result<DMatrix<f64>> {
        let mut m = DMatrix::identity(d, d);
        for s in &self.steps {
            m = s.matrix(d)? * m;
        }
        Ok(m)
    }
}

impl FromIterator<TwoLevelProcess> for SwapSequence {
    fn from_iter<I: IntoIterator<Item = TwoLevelProcess>>(iter: I) -> Self {
        Self {
            steps: iter.into_iter().collect(),
        }
    }
}

/// Entry-wise non-negativity, unit column sums, and Mγ = γ.
pub fn is_gibbs_stochastic(m: &DMatrix<f64>, ctx: &ThermalContext) -> Result<bool> {
    let d = ctx.dim();
    if m.nrows() != d || m.ncols() != d {
        return Err(ThermoError::DimensionMismatch {
            expected: d,
            got: m.nrows().max(m.ncols()),
        });
    }
    if m.iter().any(|&x| x < -1e-12) {
        return Ok(false);
    }
    for j in 0..d {
        let col_sum: f64 = m.column(j).iter().sum();
        if (col_sum - 1.0).abs() > 1e-10 {
            return Ok(false);
        }
    }
    let gamma = ctx.gibbs().as_slice();
    for i in 0..d {
        let row_dot: f64 = (0..d).map(|j| m[(i, j)] * gamma[j]).sum();
        if (row_dot - gamma[i]).abs() > 1e-10 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True when some valid β-order of `p` places the two levels of the process
/// next to each other: equivalently, no third level's ratio lies strictly
/// between theirs.
pub fn is_neighbouring(
    proc: &TwoLevelProcess,
    p: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<bool> {
    let ratios = ctx.element_ratios(p)?;
    let (j, k) = proc.levels();
    let lo = ratios[j].min(ratios[k]);
    let hi = ratios[j].max(ratios[k]);
    let tol = RATIO_TIE_TOL * hi.abs().max(1.0);
    Ok(ratios
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != j && i != k)
        .all(|(_, &g)| g <= lo + tol || g >= hi - tol))
}

/// The β-order after a neighbouring swap: entries at positions i and i±1
/// transposed (Eq.-level bookkeeping; the state itself is not touched).
pub fn order_after_neighbouring_swap(
    order: &BetaOrder,
    position: usize,
    towards_front: bool,
) -> Result<BetaOrder> {
    let other = if towards_front {
        position
            .checked_sub(1)
            .ok_or_else(|| ThermoError::PreconditionViolated("no position before the first".into()))?
    } else {
        position + 1
    };
    if position >= order.dim() || other >= order.dim() {
        return Err(ThermoError::PreconditionViolated(format!(
            "positions {position},{other} outside order of dimension {}",
            order.dim()
        )));
    }
    Ok(order.transpose_positions(position, other))
}
