//! Population vectors and thermal contexts.
//!
//! All energies are kept in units of 1/β: a user-supplied pair (β, E) is
//! collapsed to the dimensionless vector βE at ingestion, so the inverse
//! temperature is 1 everywhere downstream.

use crate::error::{Result, ThermoError};

/// Tolerance on probability normalisation accepted at construction.
const SUM_TOL: f64 = 1e-9;

/// A probability vector over energy levels.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationVector {
    entries: Vec<f64>,
}

impl PopulationVector {
    /// Builds a population vector, rejecting negative entries and vectors
    /// whose total mass is not 1 within `1e-9`. The stored entries are
    /// rescaled so they sum to 1 exactly.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(ThermoError::InvalidInput("empty population vector".into()));
        }
        let mut entries = entries;
        for e in &mut entries {
            if !e.is_finite() || *e < -1e-12 {
                return Err(ThermoError::InvalidInput(format!(
                    "population entry {e} is negative or non-finite"
                )));
            }
            if *e < 0.0 {
                *e = 0.0;
            }
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(ThermoError::InvalidInput(format!(
                "population entries sum to {sum}, expected 1"
            )));
        }
        for e in &mut entries {
            *e /= sum;
        }
        Ok(Self { entries })
    }

    /// Renormalises a non-negative vector of arbitrary positive mass.
    pub fn normalized(entries: Vec<f64>) -> Result<Self> {
        let sum: f64 = entries.iter().sum();
        if !(sum > 0.0) {
            return Err(ThermoError::InvalidInput("non-positive total mass".into()));
        }
        Self::new(entries.into_iter().map(|e| e / sum).collect())
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> f64 {
        self.entries[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().copied()
    }

    /// Max-norm distance to another vector of the same dimension.
    pub fn max_distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Energy levels together with the Gibbs population they induce.
///
/// Energies are stored sorted non-decreasing and already multiplied by β, so
/// the Gibbs weight of level i is e^{-E_i}/Z.
#[derive(Clone, Debug)]
pub struct ThermalContext {
    energies: Vec<f64>,
    gibbs: PopulationVector,
    partition_sum: f64,
}

impl ThermalContext {
    /// Creates a context from raw energies and an inverse temperature.
    /// Energies must be finite and sorted non-decreasing.
    pub fn new(energies: &[f64], beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(ThermoError::InvalidInput(format!(
                "inverse temperature must be positive, got {beta}"
            )));
        }
        let scaled: Vec<f64> = energies.iter().map(|e| beta * e).collect();
        Self::from_scaled_energies(scaled)
    }

    /// Creates a context from energies already expressed in units of 1/β.
    pub fn from_scaled_energies(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(ThermoError::InvalidInput("empty energy list".into()));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(ThermoError::InvalidInput("non-finite energy".into()));
        }
        if energies.windows(2).any(|w| w[0] > w[1]) {
            return Err(ThermoError::InvalidInput(
                "energies must be sorted non-decreasing".into(),
            ));
        }
        let (gibbs, partition_sum) = gibbs_population_with_z(&energies);
        Ok(Self {
            energies,
            gibbs,
            partition_sum,
        })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn gibbs(&self) -> &PopulationVector {
        &self.gibbs
    }

    pub fn partition_sum(&self) -> f64 {
        self.partition_sum
    }

    /// Boltzmann ratio Δ_jk = γ_k/γ_j = e^{-(E_k - E_j)} for E_j ≤ E_k.
    pub fn delta(&self, j: usize, k: usize) -> f64 {
        (-(self.energies[k] - self.energies[j])).exp()
    }

    fn check_dim(&self, p: &PopulationVector) -> Result<()> {
        if p.dim() != self.dim() {
            return Err(ThermoError::DimensionMismatch {
                expected: self.dim(),
                got: p.dim(),
            });
        }
        Ok(())
    }

    /// Element-wise ratios g_i = p_i/γ_i.
    pub fn element_ratios(&self, p: &PopulationVector) -> Result<Vec<f64>> {
        self.check_dim(p)?;
        Ok(p.iter()
            .zip(self.gibbs.iter())
            .map(|(pi, gi)| pi / gi)
            .collect())
    }
}

/// Gibbs population e^{-E_i}/Z for energies in units of 1/β.
pub fn gibbs_population(energies: &[f64]) -> PopulationVector {
    gibbs_population_with_z(energies).0
}

fn gibbs_population_with_z(energies: &[f64]) -> (PopulationVector, f64) {
    // Shift by the minimum energy for numerical stability; Z is reported
    // for the unshifted energies.
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies.iter().map(|e| (-(e - e_min)).exp()).collect();
    let shifted_z: f64 = weights.iter().sum();
    let z = shifted_z * (-e_min).exp();
    let gibbs = PopulationVector::new(weights.iter().map(|w| w / shifted_z).collect())
        .expect("Gibbs weights are positive and normalised");
    (gibbs, z)
}

/// Maps a 3-dimensional population vector onto the plane:
/// ((√3/2)(p₂ − p₃), p₁ − (p₂ + p₃)/2).
pub fn barycentric(p: &PopulationVector) -> Result<(f64, f64)> {
    if p.dim() != 3 {
        return Err(ThermoError::DimensionMismatch {
            expected: 3,
            got: p.dim(),
        });
    }
    let (p1, p2, p3) = (p.get(0), p.get(1), p.get(2));
    Ok((3f64.sqrt() / 2.0 * (p2 - p3), p1 - 0.5 * (p2 + p3)))
}

/// Inverse of [`barycentric`] on the simplex.
pub fn barycentric_inverse(x: f64, y: f64) -> Result<PopulationVector> {
    let p1 = (1.0 + 2.0 * y) / 3.0;
    let rest = 1.0 - p1;
    let diff = 2.0 * x / 3f64.sqrt();
    let p2 = (rest + diff) / 2.0;
    let p3 = (rest - diff) / 2.0;
    PopulationVector::new(vec![p1, p2, p3])
}
