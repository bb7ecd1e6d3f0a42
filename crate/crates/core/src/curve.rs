//! Thermomajorisation curves and the curve-dominance preorder.

use crate::error::{Result, ThermoError};
use crate::order::{beta_order, BetaOrder};
use crate::state::{PopulationVector, ThermalContext};

/// Piecewise-linear concave probability-probability curve. Elbows run from
/// (0,0) to (1,1) with strictly increasing x.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoCurve {
    elbows: Vec<(f64, f64)>,
}

impl ThermoCurve {
    pub fn elbows(&self) -> &[(f64, f64)] {
        &self.elbows
    }

    /// Linear interpolation between elbows; clamped to [0,1] outside.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let idx = self
            .elbows
            .partition_point(|&(ex, _)| ex < x)
            .clamp(1, self.elbows.len() - 1);
        let (x0, y0) = self.elbows[idx - 1];
        let (x1, y1) = self.elbows[idx];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Curve of `p` for an explicit β-order: elbows at the cumulative Gibbs
/// weights and cumulative populations along the order.
pub fn thermo_curve_for_order(
    p: &PopulationVector,
    ctx: &ThermalContext,
    order: &BetaOrder,
) -> ThermoCurve {
    let mut elbows = Vec::with_capacity(p.dim() + 1);
    elbows.push((0.0, 0.0));
    let (mut x, mut y) = (0.0, 0.0);
    for &level in order.as_slice() {
        x += ctx.gibbs().get(level);
        y += p.get(level);
        elbows.push((x, y));
    }
    // Snap the endpoint so downstream comparisons at x=1 are exact.
    let last = elbows.last_mut().unwrap();
    *last = (1.0, 1.0);
    ThermoCurve { elbows }
}

/// Thermomajorisation curve of `p` in its canonical β-order.
pub fn thermo_curve(p: &PopulationVector, ctx: &ThermalContext) -> Result<ThermoCurve> {
    Ok(thermo_curve_for_order(p, ctx, &beta_order(p, ctx)?))
}

/// Curve dominance p ≻_β q: L_p ≥ L_q everywhere. Piecewise linearity makes
/// it sufficient to compare at the elbows of both curves.
pub fn thermomajorises(
    p: &PopulationVector,
    q: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<bool> {
    let lp = thermo_curve(p, ctx)?;
    let lq = thermo_curve(q, ctx)?;
    Ok(curve_dominates(&lp, &lq))
}

pub(crate) fn curve_dominates(lp: &ThermoCurve, lq: &ThermoCurve) -> bool {
    lq.elbows()
        .iter()
        .all(|&(x, y)| lp.eval(x) >= y - 1e-12)
        && lp
            .elbows()
            .iter()
            .all(|&(x, _)| lp.eval(x) >= lq.eval(x) - 1e-12)
}

/// Tight thermomajorisation: every elbow of L_q lies on L_p.
///
/// Requires p ≻_β q.
pub fn is_tightly_thermomajorised(
    p: &PopulationVector,
    q: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<bool> {
    if !thermomajorises(p, q, ctx)? {
        return Err(ThermoError::PreconditionViolated(
            "tightness is only defined when p thermomajorises q".into(),
        ));
    }
    let lp = thermo_curve(p, ctx)?;
    let lq = thermo_curve(q, ctx)?;
    Ok(lq
        .elbows()
        .iter()
        .all(|&(x, y)| (lp.eval(x) - y).abs() <= 1e-10))
}

/// The unique state tightly thermomajorised by `p` with the given β-order:
/// q_{π(l)} = L_p(X_l) − L_p(X_{l−1}) at X_l = Σ_{k≤l} γ_{π(k)}.
pub fn tight_state(
    p: &PopulationVector,
    ctx: &ThermalContext,
    order: &BetaOrder,
) -> Result<PopulationVector> {
    if order.dim() != p.dim() {
        return Err(ThermoError::DimensionMismatch {
            expected: p.dim(),
            got: order.dim(),
        });
    }
    let lp = thermo_curve(p, ctx)?;
    let mut q = vec![0.0; p.dim()];
    let mut x_prev = 0.0;
    let mut y_prev = 0.0;
    for &level in order.as_slice() {
        let x = x_prev + ctx.gibbs().get(level);
        let y = lp.eval(x);
        q[level] = (y - y_prev).max(0.0);
        x_prev = x;
        y_prev = y;
    }
    PopulationVector::new(q)
}
