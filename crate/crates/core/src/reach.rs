//! Reachable-state sets as vertex-represented polytopes.
//!
//! Three classes are built here: the thermal-operations set (tight states,
//! one per β-order), the elementary-thermal-operations set (β-swap sequence
//! endpoints), and the Markovian set (neighbouring full-thermalisation
//! endpoints plus their same-order fill closure). Membership and hull
//! reduction run through the LP solver with a 1e-9 feasibility tolerance.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::curve::{thermomajorises, tight_state};
use crate::error::{Result, ThermoError};
use crate::lp::{LinearProgram, LpOutcome};
use crate::order::{all_beta_orders, beta_order, BetaOrder};
use crate::state::{PopulationVector, ThermalContext};
use crate::swaps::{is_neighbouring, SwapSequence, TwoLevelProcess};

/// Default node cap for brute-force searches.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// Two vertices closer than this (∞-norm) are merged.
const VERTEX_MERGE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReachClass {
    /// All thermal operations (Gibbs-stochastic maps).
    TO,
    /// Sequences of two-level partial β-swaps.
    ETO,
    /// Markovian (memoryless) processes; vertices are candidates only.
    MTO,
}

/// How a vertex was obtained.
#[derive(Clone, Debug)]
pub enum Provenance {
    /// Tight-curve construction for the recorded β-order.
    Tight(BetaOrder),
    /// Endpoint of the recorded swap sequence applied to the source.
    Sequence(SwapSequence),
    /// Same-order fill closure of a sequence endpoint.
    Fill,
}

#[derive(Clone, Debug)]
pub struct ReachableSet {
    source: PopulationVector,
    ctx: ThermalContext,
    class: ReachClass,
    vertices: Vec<PopulationVector>,
    provenance: Vec<Provenance>,
}

impl ReachableSet {
    pub fn source(&self) -> &PopulationVector {
        &self.source
    }

    pub fn ctx(&self) -> &ThermalContext {
        &self.ctx
    }

    pub fn class(&self) -> ReachClass {
        self.class
    }

    pub fn vertices(&self) -> &[PopulationVector] {
        &self.vertices
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }
}

/// Convex-mixture witness for a membership query.
#[derive(Clone, Debug)]
pub struct MixtureCertificate {
    pub weights: Vec<f64>,
    pub vertex_indices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Member(MixtureCertificate),
    NotMember,
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

/// Extreme points of the thermal-operations set: the tight state for each
/// β-order, duplicates merged and convex-redundant points dropped.
pub fn to_extreme_points(p: &PopulationVector, ctx: &ThermalContext) -> Result<ReachableSet> {
    use itertools::Itertools;
    let d = p.dim();
    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    for perm in (0..d).permutations(d) {
        let order = BetaOrder::from_perm(perm)?;
        let q = tight_state(p, ctx, &order)?;
        if vertices
            .iter()
            .all(|v: &PopulationVector| v.max_distance(&q) > VERTEX_MERGE_TOL)
        {
            vertices.push(q);
            provenance.push(Provenance::Tight(order));
        }
    }
    let keep = hull_reduce_indices(&vertices)?;
    Ok(ReachableSet {
        source: p.clone(),
        ctx: ctx.clone(),
        class: ReachClass::TO,
        vertices: keep.iter().map(|&i| vertices[i].clone()).collect(),
        provenance: keep.iter().map(|&i| provenance[i].clone()).collect(),
    })
}

/// LP oracle for reachability under Gibbs-stochastic maps: does some M ≥ 0
/// with unit column sums, Mγ = γ and Mp = q exist?
pub fn gibbs_stochastic_feasible(
    p: &PopulationVector,
    q: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<bool> {
    let d = ctx.dim();
    if p.dim() != d || q.dim() != d {
        return Err(ThermoError::DimensionMismatch {
            expected: d,
            got: p.dim().max(q.dim()),
        });
    }
    // Variables M_ij flattened as i·d + j; rows: column sums, Mγ = γ, Mp = q.
    let gamma = ctx.gibbs();
    let mut a = DMatrix::zeros(3 * d, d * d);
    let mut b = DVector::zeros(3 * d);
    for j in 0..d {
        for i in 0..d {
            a[(j, i * d + j)] = 1.0;
        }
        b[j] = 1.0;
    }
    for i in 0..d {
        for j in 0..d {
            a[(d + i, i * d + j)] = gamma.get(j);
            a[(2 * d + i, i * d + j)] = p.get(j);
        }
        b[d + i] = gamma.get(i);
        b[2 * d + i] = q.get(i);
    }
    let lp = LinearProgram::feasibility(a, b)?;
    match lp.solve()? {
        LpOutcome::Optimal { .. } => Ok(true),
        LpOutcome::Infeasible => Ok(false),
        LpOutcome::Unbounded => Err(ThermoError::SolverFailure),
    }
}

/// The β-swap sequence realising a target β-order from a starting one:
/// levels are bubbled to their target positions front to back, so every
/// swap acts on levels adjacent in the current order and no swap repeats.
pub fn standard_formation(
    ctx: &ThermalContext,
    from: &BetaOrder,
    to: &BetaOrder,
) -> Result<SwapSequence> {
    if from.dim() != to.dim() {
        return Err(ThermoError::DimensionMismatch {
            expected: from.dim(),
            got: to.dim(),
        });
    }
    if from.dim() > ctx.dim() {
        return Err(ThermoError::DimensionMismatch {
            expected: ctx.dim(),
            got: from.dim(),
        });
    }
    let mut cur: Vec<usize> = from.as_slice().to_vec();
    let mut seq = SwapSequence::empty();
    for t in 0..to.dim() {
        let lvl = to.level_at(t);
        let m = cur.iter().position(|&l| l == lvl).expect("level present");
        for i in (t..m).rev() {
            seq.push(TwoLevelProcess::beta_swap(ctx, cur[i], cur[i + 1])?);
            cur.swap(i, i + 1);
        }
    }
    Ok(seq)
}

/// All standard-formation endpoints from a fixed starting order: one
/// candidate per target β-order. Exact extreme points when the source order
/// is monotonic in energy; a heuristic cloud otherwise.
pub fn eto_vertex_cloud(
    p: &PopulationVector,
    ctx: &ThermalContext,
    base: &BetaOrder,
) -> Result<Vec<(BetaOrder, SwapSequence, PopulationVector)>> {
    use itertools::Itertools;
    let d = p.dim();
    let mut out = Vec::new();
    for perm in (0..d).permutations(d) {
        let target = BetaOrder::from_perm(perm)?;
        let seq = standard_formation(ctx, base, &target)?;
        let q = seq.apply(p)?;
        out.push((target, seq, q));
    }
    Ok(out)
}

/// Extreme points of the elementary set for a source whose β-order is
/// monotonic in energy: the standard-formation endpoint per target order is
/// exhaustive in that regime.
pub fn eto_extreme_points_monotonic(
    p: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<ReachableSet> {
    let base = all_beta_orders(p, ctx)?
        .into_iter()
        .find(|o| o.is_monotonic_in_energy())
        .ok_or_else(|| {
            ThermoError::PreconditionViolated(
                "source has no β-order monotonic in energy".into(),
            )
        })?;
    let cloud = eto_vertex_cloud(p, ctx, &base)?;
    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    for (_, seq, q) in cloud {
        if vertices
            .iter()
            .all(|v: &PopulationVector| v.max_distance(&q) > VERTEX_MERGE_TOL)
        {
            vertices.push(q);
            provenance.push(Provenance::Sequence(seq));
        }
    }
    let keep = hull_reduce_indices(&vertices)?;
    Ok(ReachableSet {
        source: p.clone(),
        ctx: ctx.clone(),
        class: ReachClass::ETO,
        vertices: keep.iter().map(|&i| vertices[i].clone()).collect(),
        provenance: keep.iter().map(|&i| provenance[i].clone()).collect(),
    })
}

/// Elbow heights of a state's curve along a fixed order (internal elbows
/// only, positions 1..d-1).
fn elbow_heights(state: &[f64], order: &BetaOrder) -> Vec<f64> {
    let mut out = Vec::with_capacity(order.dim() - 1);
    let mut acc = 0.0;
    for pos in 0..order.dim() - 1 {
        acc += state[order.level_at(pos)];
        out.push(acc);
    }
    out
}

struct EtoSearch<'c> {
    ctx: &'c ThermalContext,
    swaps: Vec<TwoLevelProcess>,
    l_max: usize,
    budget: u64,
    nodes: u64,
    // Per-β-order store of mutually undominated endpoints.
    store: BTreeMap<Vec<usize>, Vec<(Vec<f64>, SwapSequence)>>,
}

impl EtoSearch<'_> {
    /// Records the state unless an equal or dominating same-order state is
    /// already known; returns whether the subtree should be explored.
    fn record(&mut self, state: &[f64], seq: &SwapSequence) -> Result<bool> {
        let pv = PopulationVector::normalized(state.to_vec())?;
        let order = beta_order(&pv, self.ctx)?;
        let key = order.as_slice().to_vec();
        let y_new = elbow_heights(state, &order);
        let bucket = self.store.entry(key).or_default();
        for (other, _) in bucket.iter() {
            let y_old = elbow_heights(other, &order);
            if y_new.iter().zip(&y_old).all(|(n, o)| n <= &(o + 1e-12)) {
                // Dominated (or identical): same-order dominated states are
                // reachable from the dominator, so nothing extremal is lost.
                return Ok(false);
            }
        }
        bucket.retain(|(other, _)| {
            let y_old = elbow_heights(other, &order);
            !y_old.iter().zip(&y_new).all(|(o, n)| o <= &(n + 1e-12))
        });
        bucket.push((state.to_vec(), seq.clone()));
        Ok(true)
    }

    fn dfs(&mut self, state: &[f64], seq: &SwapSequence, depth: usize) -> Result<()> {
        if depth == self.l_max {
            return Ok(());
        }
        for idx in 0..self.swaps.len() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(ThermoError::BudgetExceeded {
                    budget: self.budget,
                });
            }
            let swap = self.swaps[idx];
            let mut next = state.to_vec();
            swap.apply_in_place(&mut next);
            if next
                .iter()
                .zip(state)
                .all(|(a, b)| (a - b).abs() < 1e-14)
            {
                continue;
            }
            let mut next_seq = seq.clone();
            next_seq.push(swap);
            if self.record(&next, &next_seq)? {
                self.dfs(&next, &next_seq, depth + 1)?;
            }
        }
        Ok(())
    }
}

/// Brute-force elementary set: exhaustive β-swap sequences up to `l_max`,
/// pruning same-order dominated states, capped at `budget` expansions.
pub fn eto_extremes_bruteforce(
    p: &PopulationVector,
    ctx: &ThermalContext,
    l_max: usize,
    budget: u64,
) -> Result<ReachableSet> {
    let d = p.dim();
    let mut swaps = Vec::new();
    for j in 0..d {
        for k in j + 1..d {
            swaps.push(TwoLevelProcess::beta_swap(ctx, j, k)?);
        }
    }
    let mut search = EtoSearch {
        ctx,
        swaps,
        l_max,
        budget,
        nodes: 0,
        store: BTreeMap::new(),
    };
    let root = p.as_slice().to_vec();
    let empty = SwapSequence::empty();
    search.record(&root, &empty)?;
    search.dfs(&root, &empty, 0)?;

    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    for bucket in search.store.values() {
        for (state, seq) in bucket {
            let q = PopulationVector::normalized(state.clone())?;
            if vertices
                .iter()
                .all(|v: &PopulationVector| v.max_distance(&q) > VERTEX_MERGE_TOL)
            {
                vertices.push(q);
                provenance.push(Provenance::Sequence(seq.clone()));
            }
        }
    }
    let keep = hull_reduce_indices(&vertices)?;
    Ok(ReachableSet {
        source: p.clone(),
        ctx: ctx.clone(),
        class: ReachClass::ETO,
        vertices: keep.iter().map(|&i| vertices[i].clone()).collect(),
        provenance: keep.iter().map(|&i| provenance[i].clone()).collect(),
    })
}

/// Same-order states dominated by `m` form a polytope whose vertices make
/// each internal elbow either tight on the curve of `m` or collinear with
/// its neighbours; one candidate per tight/collinear pattern.
fn fill_closure(m: &PopulationVector, ctx: &ThermalContext) -> Result<Vec<PopulationVector>> {
    let d = m.dim();
    let order = beta_order(m, ctx)?;
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    let mut acc_x = 0.0;
    let mut acc_y = 0.0;
    for pos in 0..d {
        acc_x += ctx.gibbs().get(order.level_at(pos));
        acc_y += m.get(order.level_at(pos));
        xs.push(acc_x);
        ys.push(acc_y);
    }
    xs[d] = 1.0;
    ys[d] = 1.0;

    let mut out = Vec::new();
    for mask in 0u32..(1 << (d - 1)) {
        // Tight positions: 0 and d always, internal l when bit l-1 is set.
        let mut filled = ys.clone();
        let mut prev_tight = 0usize;
        for l in 1..=d {
            let tight = l == d || mask & (1 << (l - 1)) != 0;
            if !tight {
                continue;
            }
            for mid in prev_tight + 1..l {
                let t = (xs[mid] - xs[prev_tight]) / (xs[l] - xs[prev_tight]);
                filled[mid] = ys[prev_tight] + t * (ys[l] - ys[prev_tight]);
            }
            prev_tight = l;
        }
        let mut q = vec![0.0; d];
        for pos in 0..d {
            q[order.level_at(pos)] = (filled[pos + 1] - filled[pos]).max(0.0);
        }
        out.push(PopulationVector::normalized(q)?);
    }
    Ok(out)
}

/// Candidate extreme points of the Markovian set: endpoints of neighbouring
/// full-thermalisation sequences without repetition, closed under the
/// same-order fill construction, then hull-reduced. Labelled candidates:
/// extremality of each point is not guaranteed.
pub fn mto_extreme_candidates(
    p: &PopulationVector,
    ctx: &ThermalContext,
    budget: u64,
) -> Result<ReachableSet> {
    let d = p.dim();
    let mut pairs = Vec::new();
    for j in 0..d {
        for k in j + 1..d {
            pairs.push(TwoLevelProcess::t_swap(ctx, j, k)?);
        }
    }
    // DFS over no-repetition sequences of neighbouring full thermalisations.
    let mut endpoints: Vec<(Vec<f64>, SwapSequence)> = Vec::new();
    let mut nodes: u64 = 0;
    let mut stack: Vec<(Vec<f64>, SwapSequence, u32)> =
        vec![(p.as_slice().to_vec(), SwapSequence::empty(), 0)];
    while let Some((state, seq, used)) = stack.pop() {
        let pv = PopulationVector::normalized(state.clone())?;
        let duplicate = endpoints.iter().any(|(s, _)| {
            s.iter().zip(&state).all(|(a, b)| (a - b).abs() <= 1e-12)
        });
        if !duplicate {
            endpoints.push((state.clone(), seq.clone()));
        }
        for (idx, t) in pairs.iter().enumerate() {
            if used & (1 << idx) != 0 {
                continue;
            }
            nodes += 1;
            if nodes > budget {
                return Err(ThermoError::BudgetExceeded { budget });
            }
            if !is_neighbouring(t, &pv, ctx)? {
                continue;
            }
            let mut next = state.clone();
            t.apply_in_place(&mut next);
            let mut next_seq = seq.clone();
            next_seq.push(*t);
            stack.push((next, next_seq, used | (1 << idx)));
        }
    }

    let mut vertices = Vec::new();
    let mut provenance = Vec::new();
    let push = |q: PopulationVector,
                    prov: Provenance,
                    vertices: &mut Vec<PopulationVector>,
                    provenance: &mut Vec<Provenance>| {
        if vertices
            .iter()
            .all(|v: &PopulationVector| v.max_distance(&q) > VERTEX_MERGE_TOL)
        {
            vertices.push(q);
            provenance.push(prov);
        }
    };
    for (state, seq) in &endpoints {
        let q = PopulationVector::normalized(state.clone())?;
        for fill in fill_closure(&q, ctx)? {
            push(fill, Provenance::Fill, &mut vertices, &mut provenance);
        }
        push(
            q,
            Provenance::Sequence(seq.clone()),
            &mut vertices,
            &mut provenance,
        );
    }
    let keep = hull_reduce_indices(&vertices)?;
    Ok(ReachableSet {
        source: p.clone(),
        ctx: ctx.clone(),
        class: ReachClass::MTO,
        vertices: keep.iter().map(|&i| vertices[i].clone()).collect(),
        provenance: keep.iter().map(|&i| provenance[i].clone()).collect(),
    })
}

/// LP membership test for q in the convex hull of a point list.
pub fn hull_membership(points: &[&PopulationVector], q: &PopulationVector) -> Result<Membership> {
    if points.is_empty() {
        return Ok(Membership::NotMember);
    }
    let d = q.dim();
    let n = points.len();
    let a = DMatrix::from_fn(d + 1, n, |i, j| if i < d { points[j].get(i) } else { 1.0 });
    let mut b = DVector::zeros(d + 1);
    for i in 0..d {
        b[i] = q.get(i);
    }
    b[d] = 1.0;
    let lp = LinearProgram::feasibility(a, b)?;
    match lp.solve()? {
        LpOutcome::Infeasible => Ok(Membership::NotMember),
        LpOutcome::Unbounded => Err(ThermoError::SolverFailure),
        LpOutcome::Optimal { x, .. } => {
            // Validate the reconstruction before certifying.
            for i in 0..d {
                let rec: f64 = (0..n).map(|j| x[j] * points[j].get(i)).sum();
                if (rec - q.get(i)).abs() > 1e-9 {
                    return Err(ThermoError::SolverFailure);
                }
            }
            let mut weights = Vec::new();
            let mut vertex_indices = Vec::new();
            for (j, &w) in x.iter().enumerate() {
                if w > 1e-12 {
                    weights.push(w);
                    vertex_indices.push(j);
                }
            }
            Ok(Membership::Member(MixtureCertificate {
                weights,
                vertex_indices,
            }))
        }
    }
}

/// Membership of q in a reachable set (LP over its vertices).
pub fn membership(set: &ReachableSet, q: &PopulationVector) -> Result<Membership> {
    if q.dim() != set.source.dim() {
        return Err(ThermoError::DimensionMismatch {
            expected: set.source.dim(),
            got: q.dim(),
        });
    }
    let refs: Vec<&PopulationVector> = set.vertices.iter().collect();
    hull_membership(&refs, q)
}

/// Indices of points that are not convex combinations of the remaining
/// ones; input order is preserved among the survivors.
pub fn hull_reduce_indices(points: &[PopulationVector]) -> Result<Vec<usize>> {
    let mut keep: Vec<usize> = (0..points.len()).collect();
    let mut i = 0;
    while i < keep.len() {
        let idx = keep[i];
        let others: Vec<&PopulationVector> = keep
            .iter()
            .filter(|&&j| j != idx)
            .map(|&j| &points[j])
            .collect();
        if others.is_empty() {
            break;
        }
        match hull_membership(&others, &points[idx])? {
            Membership::Member(_) => {
                keep.remove(i);
            }
            Membership::NotMember => i += 1,
        }
    }
    Ok(keep)
}

/// A sequence of two-level partial thermalisations mapping p to q (within
/// 1e-9) when both share a β-order and p thermomajorises q. Elbows are
/// lowered in curve-x order, each as far as concavity and the target allow;
/// sweeps repeat until converged.
pub fn plt_sequence(
    p: &PopulationVector,
    q: &PopulationVector,
    ctx: &ThermalContext,
) -> Result<SwapSequence> {
    let orders_p = all_beta_orders(p, ctx)?;
    let orders_q = all_beta_orders(q, ctx)?;
    let shared = orders_p
        .iter()
        .find(|o| orders_q.contains(o))
        .ok_or_else(|| {
            ThermoError::PreconditionViolated("states share no β-order".into())
        })?
        .clone();
    if !thermomajorises(p, q, ctx)? {
        return Err(ThermoError::PreconditionViolated(
            "source does not thermomajorise target".into(),
        ));
    }
    let d = p.dim();
    let gamma = ctx.gibbs();
    let xs: Vec<f64> = {
        let mut v = vec![0.0];
        let mut acc = 0.0;
        for pos in 0..d {
            acc += gamma.get(shared.level_at(pos));
            v.push(acc);
        }
        v[d] = 1.0;
        v
    };
    let y_target = elbow_heights(q.as_slice(), &shared);

    let mut cur = p.as_slice().to_vec();
    let mut seq = SwapSequence::empty();
    const MAX_SWEEPS: usize = 10_000;
    for _ in 0..MAX_SWEEPS {
        let mut max_err: f64 = 0.0;
        for k in 1..d {
            let a = shared.level_at(k - 1);
            let b = shared.level_at(k);
            let y = elbow_heights(&cur, &shared);
            let y_prev = if k >= 2 { y[k - 2] } else { 0.0 };
            let y_next = if k < d - 1 { y[k] } else { 1.0 };
            let chord =
                y_prev + (y_next - y_prev) * (xs[k] - xs[k - 1]) / (xs[k + 1] - xs[k - 1]);
            let y_goal = y_target[k - 1].max(chord);
            let delta = y[k - 1] - y_goal;
            if delta <= 1e-14 {
                continue;
            }
            let t_swap = TwoLevelProcess::t_swap(ctx, a, b)?;
            let pa_thermal = (cur[a] + cur[b]) * gamma.get(a) / (gamma.get(a) + gamma.get(b));
            let denom = cur[a] - pa_thermal;
            if denom <= 1e-15 {
                continue;
            }
            let lambda = (t_swap.lambda() * delta / denom).min(t_swap.lambda());
            let step = t_swap.with_lambda(lambda)?;
            step.apply_in_place(&mut cur);
            seq.push(step);
        }
        let y = elbow_heights(&cur, &shared);
        for (yc, yt) in y.iter().zip(&y_target) {
            max_err = max_err.max((yc - yt).abs());
        }
        if max_err <= 1e-11 {
            return Ok(seq);
        }
    }
    Err(ThermoError::SolverFailure)
}
