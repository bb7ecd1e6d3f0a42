//! Catalytic cooling: how far below the ambient temperature a hot thermal
//! state can be driven, per catalyst dimension.
//!
//! Searched catalysts are restricted to minimally-disturbing ones — those
//! that keep the composite β-order monotonic in energy — so the composite
//! source stays in the regime where standard formations enumerate the
//! elementary reachable set exactly.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::catalysis::{composite_beta_order, tensor, CompositeContext};
use crate::error::{Result, ThermoError};
use crate::lp::{LinearProgram, LpOutcome};
use crate::state::{gibbs_population, PopulationVector, ThermalContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoolingMode {
    /// Enumerate every standard formation of the composite (D! endpoints).
    Exact,
    /// Enumerate a deterministic subset of formations; reported β_c values
    /// are lower bounds.
    Heuristic,
}

#[derive(Clone, Debug)]
pub struct CoolingConfig {
    /// Lattice resolution of the catalyst-distribution grid.
    pub grid_divisions: usize,
    /// Binary-search tolerance on β_c.
    pub beta_tol: f64,
    /// Absolute cap on β_c during bracket expansion.
    pub beta_cap: f64,
    /// Maximum formations enumerated per candidate catalyst.
    pub formation_budget: u64,
}

impl Default for CoolingConfig {
    fn default() -> Self {
        Self {
            grid_divisions: 400,
            beta_tol: 1e-4,
            beta_cap: 1e3,
            formation_budget: 400_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoolingDimResult {
    pub dim: usize,
    pub best_catalyst: PopulationVector,
    pub best_beta: f64,
    pub worst_catalyst: PopulationVector,
    pub worst_beta: f64,
    /// Number of minimally-disturbing candidates scanned.
    pub candidates: usize,
    /// True in heuristic mode: β_c values are lower bounds.
    pub lower_bound_only: bool,
}

#[derive(Clone, Debug)]
pub struct CoolingReport {
    /// Non-catalytic elementary limit (dimension-1 catalyst).
    pub beta_eto: f64,
    /// Thermal-operations limit from curve dominance.
    pub beta_to: f64,
    pub dims: Vec<CoolingDimResult>,
}

/// A catalyst is minimally disturbing for a source when the canonical
/// β-order of source ⊗ c is monotonic in composite energy.
pub fn is_minimally_disturbing(
    source: &PopulationVector,
    c: &PopulationVector,
    cc: &CompositeContext,
) -> Result<bool> {
    let joint = tensor(source, c, cc)?;
    let order = composite_beta_order(&joint, cc)?;
    let e = cc.composite().energies();
    let along: Vec<f64> = order.as_slice().iter().map(|&i| e[i]).collect();
    let non_incr = along.windows(2).all(|w| w[0] >= w[1] - 1e-15);
    let non_decr = along.windows(2).all(|w| w[0] <= w[1] + 1e-15);
    Ok(non_incr || non_decr)
}

/// Thermal population at inverse temperature `beta`, given a context whose
/// stored energies are already scaled by the ambient β.
fn thermal_state(ctx: &ThermalContext, beta: f64, beta_ambient: f64) -> PopulationVector {
    let scaled: Vec<f64> = ctx.energies().iter().map(|e| e * (beta / beta_ambient)).collect();
    gibbs_population(&scaled)
}

/// Largest β ≥ β_ambient accepted by `member`, assuming membership is
/// monotone (cooling targets only get harder as β grows). Returns the cap
/// if it is still a member there.
fn largest_member_beta(
    beta_ambient: f64,
    tol: f64,
    cap: f64,
    mut member: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    if !member(beta_ambient)? {
        // The ambient Gibbs state is reachable from anything; failing here
        // means the membership oracle itself broke down.
        return Err(ThermoError::SolverFailure);
    }
    let mut lo = beta_ambient;
    let mut step = beta_ambient.abs().max(1.0);
    let mut hi = lo + step;
    while hi < cap && member(hi)? {
        lo = hi;
        step *= 2.0;
        hi = lo + step;
    }
    if hi >= cap {
        hi = cap;
        if member(hi)? {
            return Ok(hi);
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if member(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Flat column-major standard-formation endpoints of `joint` (one column
/// per enumerated target order), computed without materialising sequences.
fn formation_endpoints_flat(
    joint: &[f64],
    ctx: &ThermalContext,
    base: &[usize],
    stride: usize,
) -> Vec<f64> {
    use itertools::Itertools;
    let d = joint.len();
    let e = ctx.energies();
    // delta[lo*d + hi] for the energy-ordered pair.
    let mut delta = vec![0.0; d * d];
    for lo in 0..d {
        for hi in 0..d {
            delta[lo * d + hi] = (-(e[hi] - e[lo])).exp();
        }
    }
    let mut out = Vec::new();
    let mut state = vec![0.0; d];
    let mut cur = vec![0usize; d];
    for perm in (0..d).permutations(d).step_by(stride) {
        state.copy_from_slice(joint);
        cur.copy_from_slice(base);
        // Bubble each target level to its position front to back; every
        // swap acts on levels adjacent in the current order.
        for (t, &lvl) in perm.iter().enumerate() {
            let m = cur.iter().position(|&l| l == lvl).expect("level present");
            for i in (t..m).rev() {
                let (x, y) = (cur[i], cur[i + 1]);
                let (lo, hi) = if e[x] <= e[y] { (x, y) } else { (y, x) };
                let dlt = delta[lo * d + hi];
                let plo = state[lo];
                state[lo] = (1.0 - dlt) * plo + state[hi];
                state[hi] = dlt * plo;
                cur.swap(i, i + 1);
            }
        }
        out.extend_from_slice(&state);
    }
    out
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Membership oracle for conv(formation endpoints), reusing the optimal
/// basis across queries (only the right-hand side changes along a cooling
/// binary search).
struct EndpointHull {
    a: DMatrix<f64>,
    basis: Option<Vec<usize>>,
}

impl EndpointHull {
    fn new(
        joint: &PopulationVector,
        ctx: &ThermalContext,
        mode: CoolingMode,
        budget: u64,
    ) -> Result<Self> {
        let d = joint.dim();
        let total = factorial(d);
        let stride = match mode {
            CoolingMode::Exact => {
                if total > budget {
                    return Err(ThermoError::BudgetExceeded { budget });
                }
                1
            }
            CoolingMode::Heuristic => total.div_ceil(budget).max(1) as usize,
        };
        let base = crate::order::beta_order(joint, ctx)?;
        let flat = formation_endpoints_flat(joint.as_slice(), ctx, base.as_slice(), stride);
        let n = flat.len() / d;
        let a = DMatrix::from_fn(d + 1, n, |r, i| if r < d { flat[i * d + r] } else { 1.0 });
        Ok(Self { a, basis: None })
    }

    fn contains(&mut self, target: &PopulationVector) -> Result<bool> {
        let d = target.dim();
        let b = DVector::from_fn(d + 1, |r, _| if r < d { target.get(r) } else { 1.0 });
        let c = DVector::zeros(self.a.ncols());
        let lp = LinearProgram::new(self.a.clone(), b, c)?;
        let outcome = match &self.basis {
            Some(basis) => lp.solve_with_basis(basis)?,
            None => lp.solve()?,
        };
        match outcome {
            LpOutcome::Optimal { basis, .. } => {
                self.basis = Some(basis);
                Ok(true)
            }
            LpOutcome::Infeasible => Ok(false),
            LpOutcome::Unbounded => Err(ThermoError::SolverFailure),
        }
    }
}

/// Canonical (sorted non-increasing) lattice catalyst distributions with
/// `divisions` steps, plus the maximally mixed point.
fn candidate_catalysts(dim: usize, divisions: usize) -> Vec<PopulationVector> {
    fn rec(dim: usize, left: usize, max: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            if left <= max {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        // Keep parts non-increasing and large enough to finish the sum.
        let lo = left.div_ceil(dim);
        for k in (lo..=max.min(left)).rev() {
            prefix.push(k);
            rec(dim - 1, left - k, k, prefix, out);
            prefix.pop();
        }
    }
    let mut parts = Vec::new();
    let mut prefix = Vec::new();
    rec(dim, divisions, divisions, &mut prefix, &mut parts);
    let mut out: Vec<PopulationVector> = parts
        .into_iter()
        .map(|ks| {
            PopulationVector::new(ks.iter().map(|&k| k as f64 / divisions as f64).collect())
                .expect("lattice point is a distribution")
        })
        .collect();
    let uniform = PopulationVector::new(vec![1.0 / dim as f64; dim]).expect("uniform");
    if out.iter().all(|c| c.max_distance(&uniform) > 1e-12) {
        out.push(uniform);
    }
    out
}

/// Scans catalyst dimensions for the lowest reachable temperature: for each
/// minimally-disturbing catalyst, binary-searches the largest β_c with
/// γ^{β_c} ⊗ c elementarily reachable from γ^{β_h} ⊗ c. Also reports the
/// non-catalytic elementary limit and the thermal-operations limit.
pub fn cooling_scan(
    beta_h: f64,
    beta_ambient: f64,
    energies: &[f64],
    catalyst_dims: &[usize],
    mode: CoolingMode,
    config: &CoolingConfig,
) -> Result<CoolingReport> {
    if beta_h <= 0.0 || beta_ambient <= 0.0 {
        return Err(ThermoError::InvalidInput(
            "inverse temperatures must be positive".into(),
        ));
    }
    if beta_h > beta_ambient {
        return Err(ThermoError::PreconditionViolated(
            "source must be hotter than ambient (β_h ≤ β)".into(),
        ));
    }
    let ctx = ThermalContext::new(energies, beta_ambient)?;
    let hot = thermal_state(&ctx, beta_h, beta_ambient);

    let beta_to = largest_member_beta(beta_ambient, config.beta_tol, config.beta_cap, |b| {
        let target = thermal_state(&ctx, b, beta_ambient);
        crate::curve::thermomajorises(&hot, &target, &ctx)
    })?;

    let cooling_limit = |dim: usize| -> Result<(PopulationVector, f64, usize, Vec<(PopulationVector, f64)>)> {
        let cc = CompositeContext::with_degenerate_catalyst(ctx.clone(), dim)?;
        // Candidates are independent; evaluate them in parallel and keep
        // the grid order, so results do not depend on the worker count.
        let results: Vec<(PopulationVector, f64)> = candidate_catalysts(dim, config.grid_divisions)
            .into_par_iter()
            .map(|c| -> Result<Option<(PopulationVector, f64)>> {
                if !is_minimally_disturbing(&hot, &c, &cc)? {
                    return Ok(None);
                }
                let joint_hot = tensor(&hot, &c, &cc)?;
                let mut hull =
                    EndpointHull::new(&joint_hot, cc.composite(), mode, config.formation_budget)?;
                let beta =
                    largest_member_beta(beta_ambient, config.beta_tol, config.beta_cap, |b| {
                        let target = tensor(&thermal_state(&ctx, b, beta_ambient), &c, &cc)?;
                        hull.contains(&target)
                    })?;
                Ok(Some((c, beta)))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        if results.is_empty() {
            return Err(ThermoError::PreconditionViolated(format!(
                "no minimally-disturbing catalyst of dimension {dim} on the grid"
            )));
        }
        let best = results
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty")
            .clone();
        Ok((best.0, best.1, results.len(), results))
    };

    let (_, beta_eto, _, _) = cooling_limit(1)?;

    let mut dims = Vec::new();
    for &dim in catalyst_dims {
        if dim == 0 {
            return Err(ThermoError::InvalidInput("catalyst dimension 0".into()));
        }
        let (best_c, best_beta, candidates, all) = cooling_limit(dim)?;
        let (worst_c, worst_beta) = all
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty")
            .clone();
        dims.push(CoolingDimResult {
            dim,
            best_catalyst: best_c,
            best_beta,
            worst_catalyst: worst_c,
            worst_beta,
            candidates,
            lower_bound_only: mode == CoolingMode::Heuristic,
        });
    }
    Ok(CoolingReport {
        beta_eto,
        beta_to,
        dims,
    })
}
