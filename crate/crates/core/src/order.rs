//! β-orderings: permutations sorting the ratios p_i/γ_i non-increasingly.

use itertools::Itertools;

use crate::error::{Result, ThermoError};
use crate::state::{PopulationVector, ThermalContext};

/// Relative tolerance under which two ratios count as tied.
pub const RATIO_TIE_TOL: f64 = 1e-9;

/// A permutation of the level indices (0-based internally). Position k of
/// the permutation holds the level with the k-th largest ratio p_i/γ_i.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BetaOrder {
    perm: Vec<usize>,
}

impl BetaOrder {
    /// Wraps a raw permutation without checking monotonicity of ratios.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &i in &perm {
            if i >= d || seen[i] {
                return Err(ThermoError::InvalidInput(format!(
                    "not a permutation of 0..{d}"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { perm })
    }

    /// Accepts the paper's 1-based notation.
    pub fn from_one_based(perm: &[usize]) -> Result<Self> {
        if perm.iter().any(|&i| i == 0) {
            return Err(ThermoError::InvalidInput("1-based index cannot be 0".into()));
        }
        Self::from_perm(perm.iter().map(|&i| i - 1).collect())
    }

    pub fn identity(d: usize) -> Self {
        Self {
            perm: (0..d).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.perm.iter().map(|&i| i + 1).collect()
    }

    /// Level at the given order position.
    pub fn level_at(&self, position: usize) -> usize {
        self.perm[position]
    }

    /// Position of the given level in the order.
    pub fn position_of(&self, level: usize) -> usize {
        self.perm.iter().position(|&l| l == level).expect("level present")
    }

    /// True when the order is (0,1,...,d-1) or its reverse, i.e. monotonic
    /// in energy for sorted level energies.
    pub fn is_monotonic_in_energy(&self) -> bool {
        let d = self.dim();
        self.perm.iter().enumerate().all(|(k, &l)| l == k)
            || self.perm.iter().enumerate().all(|(k, &l)| l == d - 1 - k)
    }

    /// Transposes the entries at the two order positions.
    pub fn transpose_positions(&self, a: usize, b: usize) -> Self {
        let mut perm = self.perm.clone();
        perm.swap(a, b);
        Self { perm }
    }
}

fn ratios_tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= RATIO_TIE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// True when the permutation sorts the ratios non-increasingly within the
/// tie tolerance.
pub fn is_valid_order(ratios: &[f64], order: &BetaOrder) -> bool {
    order.as_slice().windows(2).all(|w| {
        let (a, b) = (ratios[w[0]], ratios[w[1]]);
        a >= b || ratios_tied(a, b)
    })
}

/// The canonical β-order: ratios sorted non-increasingly, ties broken by
/// the lower energy index first.
pub fn beta_order(p: &PopulationVector, ctx: &ThermalContext) -> Result<BetaOrder> {
    let ratios = ctx.element_ratios(p)?;
    Ok(canonical_order_of_ratios(&ratios))
}

pub(crate) fn canonical_order_of_ratios(ratios: &[f64]) -> BetaOrder {
    let mut perm: Vec<usize> = (0..ratios.len()).collect();
    perm.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(a.cmp(&b)));
    // Exact sorting can scramble near-tied ratios; re-sort each tied run by
    // the level index so the canonical tie-break holds at the tolerance.
    let mut start = 0;
    while start < perm.len() {
        let mut end = start + 1;
        while end < perm.len() && ratios_tied(ratios[perm[end - 1]], ratios[perm[end]]) {
            end += 1;
        }
        perm[start..end].sort_unstable();
        start = end;
    }
    BetaOrder { perm }
}

/// Every permutation whose induced ratio sequence is non-increasing within
/// the tie tolerance.
pub fn all_beta_orders(p: &PopulationVector, ctx: &ThermalContext) -> Result<Vec<BetaOrder>> {
    let ratios = ctx.element_ratios(p)?;
    let d = ratios.len();
    Ok((0..d)
        .permutations(d)
        .map(|perm| BetaOrder { perm })
        .filter(|o| is_valid_order(&ratios, o))
        .collect())
}
