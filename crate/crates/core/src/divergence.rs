//! Rényi divergences, generalised free energies, and mutual information.
//!
//! Everything is in nats; 0·log 0 is taken as 0 and support mismatches for
//! α ≥ 1 return +∞ rather than an error.

use crate::error::{Result, ThermoError};
use crate::state::{PopulationVector, ThermalContext};

/// D_α(p‖q). Accepts any α ≥ 0, with α = 1 the Kullback-Leibler divergence
/// and α = +∞ the max divergence log max_i p_i/q_i.
pub fn renyi_divergence(alpha: f64, p: &PopulationVector, q: &PopulationVector) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(ThermoError::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    if alpha.is_nan() || alpha < 0.0 {
        return Err(ThermoError::InvalidInput(format!(
            "Rényi order must be a non-negative real or +inf, got {alpha}"
        )));
    }
    let support_ok = p
        .iter()
        .zip(q.iter())
        .all(|(pi, qi)| pi == 0.0 || qi > 0.0);

    if alpha == 0.0 {
        let mass: f64 = p
            .iter()
            .zip(q.iter())
            .filter(|&(pi, _)| pi > 0.0)
            .map(|(_, qi)| qi)
            .sum();
        return Ok(if mass > 0.0 { -mass.ln() } else { f64::INFINITY });
    }
    if alpha >= 1.0 && !support_ok {
        return Ok(f64::INFINITY);
    }
    if alpha.is_infinite() {
        let max_ratio = p
            .iter()
            .zip(q.iter())
            .filter(|&(pi, _)| pi > 0.0)
            .map(|(pi, qi)| pi / qi)
            .fold(0.0, f64::max);
        return Ok(max_ratio.ln());
    }
    if alpha == 1.0 {
        let kl: f64 = p
            .iter()
            .zip(q.iter())
            .filter(|&(pi, _)| pi > 0.0)
            .map(|(pi, qi)| pi * (pi / qi).ln())
            .sum();
        return Ok(kl);
    }
    let sum: f64 = p
        .iter()
        .zip(q.iter())
        .filter(|&(pi, qi)| pi > 0.0 && qi > 0.0)
        .map(|(pi, qi)| pi.powf(alpha) * qi.powf(1.0 - alpha))
        .sum();
    Ok(sum.ln() / (alpha - 1.0))
}

/// Generalised free energy difference ΔF_α(p) = β⁻¹ D_α(p‖γ), with β = 1 in
/// internal units.
pub fn free_energy_delta(alpha: f64, p: &PopulationVector, ctx: &ThermalContext) -> Result<f64> {
    renyi_divergence(alpha, p, ctx.gibbs())
}

/// Shannon entropy in nats.
pub fn shannon_entropy(p: &PopulationVector) -> f64 {
    p.iter().filter(|&x| x > 0.0).map(|x| -x * x.ln()).sum()
}

/// Marginal over the catalyst index of a system-major flattened joint
/// vector: index (s, c) ↦ s·d_C + c.
pub fn system_marginal(p_joint: &PopulationVector, dims: (usize, usize)) -> Result<PopulationVector> {
    let (ds, dc) = dims;
    check_joint(p_joint, dims)?;
    let mut m = vec![0.0; ds];
    for s in 0..ds {
        for c in 0..dc {
            m[s] += p_joint.get(s * dc + c);
        }
    }
    PopulationVector::new(m)
}

/// Marginal over the system index.
pub fn catalyst_marginal(
    p_joint: &PopulationVector,
    dims: (usize, usize),
) -> Result<PopulationVector> {
    let (ds, dc) = dims;
    check_joint(p_joint, dims)?;
    let mut m = vec![0.0; dc];
    for s in 0..ds {
        for c in 0..dc {
            m[c] += p_joint.get(s * dc + c);
        }
    }
    PopulationVector::new(m)
}

fn check_joint(p_joint: &PopulationVector, dims: (usize, usize)) -> Result<()> {
    if p_joint.dim() != dims.0 * dims.1 {
        return Err(ThermoError::DimensionMismatch {
            expected: dims.0 * dims.1,
            got: p_joint.dim(),
        });
    }
    Ok(())
}

/// I(S:C) = H(p_S) + H(p_C) − H(p_SC) in nats.
pub fn mutual_information(p_joint: &PopulationVector, dims: (usize, usize)) -> Result<f64> {
    let ps = system_marginal(p_joint, dims)?;
    let pc = catalyst_marginal(p_joint, dims)?;
    Ok(shannon_entropy(&ps) + shannon_entropy(&pc) - shannon_entropy(p_joint))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ctx3() -> ThermalContext {
        ThermalContext::new(&[0.0, 0.2, 0.5], 1.0).unwrap()
    }

    #[test]
    fn divergence_to_self_vanishes() {
        let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
        for alpha in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            assert_abs_diff_eq!(renyi_divergence(alpha, &p, &p).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn max_divergence_is_log_max_ratio() {
        let ctx = ctx3();
        let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
        let d = renyi_divergence(f64::INFINITY, &p, ctx.gibbs()).unwrap();
        assert_abs_diff_eq!(d, 1.6292f64.ln(), epsilon = 1e-4);
    }

    #[test]
    fn kl_deterministic_vs_uniform() {
        let p = PopulationVector::new(vec![1.0, 0.0]).unwrap();
        let q = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        assert_abs_diff_eq!(renyi_divergence(1.0, &p, &q).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn support_mismatch_gives_infinity() {
        let p = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        let q = PopulationVector::new(vec![1.0, 0.0]).unwrap();
        assert!(renyi_divergence(1.0, &p, &q).unwrap().is_infinite());
        assert!(renyi_divergence(2.0, &p, &q).unwrap().is_infinite());
        // α < 1 stays finite.
        assert!(renyi_divergence(0.5, &p, &q).unwrap().is_finite());
    }

    #[test]
    fn order_zero_divergence() {
        let p = PopulationVector::new(vec![1.0, 0.0]).unwrap();
        let q = PopulationVector::new(vec![0.25, 0.75]).unwrap();
        assert_abs_diff_eq!(renyi_divergence(0.0, &p, &q).unwrap(), -(0.25f64.ln()), epsilon = 1e-14);
    }

    #[test]
    fn free_energy_of_gibbs_vanishes() {
        let ctx = ctx3();
        assert_abs_diff_eq!(free_energy_delta(1.0, ctx.gibbs(), &ctx).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pure_state_max_free_energy() {
        let ctx = ctx3();
        let p = PopulationVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        let expected = -ctx.gibbs().get(0).ln();
        assert_abs_diff_eq!(
            free_energy_delta(f64::INFINITY, &p, &ctx).unwrap(),
            expected,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mutual_information_of_product_is_zero() {
        let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
        let c = PopulationVector::new(vec![0.3, 0.7]).unwrap();
        let mut joint = Vec::new();
        for s in p.iter() {
            for cc in c.iter() {
                joint.push(s * cc);
            }
        }
        let joint = PopulationVector::new(joint).unwrap();
        assert_abs_diff_eq!(mutual_information(&joint, (3, 2)).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn correlated_state_has_positive_mutual_information() {
        let joint = PopulationVector::new(vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert_abs_diff_eq!(mutual_information(&joint, (2, 2)).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn negative_alpha_rejected() {
        let p = PopulationVector::new(vec![0.5, 0.5]).unwrap();
        assert!(renyi_divergence(-1.0, &p, &p).is_err());
    }
}
