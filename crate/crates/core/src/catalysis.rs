//! System-catalyst composites and catalytic reachability.
//!
//! A catalyst is a probability vector over ancilla levels (degenerate in
//! energy by default) that must return exactly, in product form, at the end
//! of the protocol. Catalytic sets are held implicitly: the embedding
//! q ↦ q ⊗ c is linear, so membership and linear-objective queries are LPs
//! over mixture weights of composite swap-sequence endpoints.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::divergence::{catalyst_marginal, free_energy_delta, mutual_information, system_marginal};
use crate::error::{Result, ThermoError};
use crate::lp::{LinearProgram, LpOutcome};
use crate::order::{beta_order, BetaOrder};
use crate::reach::{
    eto_vertex_cloud, hull_membership, hull_reduce_indices, standard_formation, Membership,
    MixtureCertificate,
};
use crate::state::{PopulationVector, ThermalContext};
use crate::swaps::{SwapSequence, TwoLevelProcess};

/// System and catalyst contexts plus their flattened composite. Composite
/// indices are system-major: (s, c) ↦ s·d_C + c.
#[derive(Clone, Debug)]
pub struct CompositeContext {
    system: ThermalContext,
    catalyst: ThermalContext,
    composite: ThermalContext,
}

impl CompositeContext {
    /// Builds the composite; the flattened energy list E_s + E_c must come
    /// out sorted (always true for a degenerate catalyst).
    pub fn new(system: ThermalContext, catalyst: ThermalContext) -> Result<Self> {
        let mut energies = Vec::with_capacity(system.dim() * catalyst.dim());
        for es in system.energies() {
            for ec in catalyst.energies() {
                energies.push(es + ec);
            }
        }
        let composite = ThermalContext::from_scaled_energies(energies).map_err(|_| {
            ThermoError::InvalidInput(
                "catalyst energies reorder the flattened composite spectrum".into(),
            )
        })?;
        Ok(Self {
            system,
            catalyst,
            composite,
        })
    }

    /// Composite with a fully degenerate (zero-energy) catalyst.
    pub fn with_degenerate_catalyst(system: ThermalContext, d_c: usize) -> Result<Self> {
        let catalyst = ThermalContext::from_scaled_energies(vec![0.0; d_c])?;
        Self::new(system, catalyst)
    }

    pub fn system(&self) -> &ThermalContext {
        &self.system
    }

    pub fn catalyst(&self) -> &ThermalContext {
        &self.catalyst
    }

    pub fn composite(&self) -> &ThermalContext {
        &self.composite
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.system.dim(), self.catalyst.dim())
    }

    pub fn flatten(&self, s: usize, c: usize) -> usize {
        s * self.catalyst.dim() + c
    }

    /// 1-based "s*c" label of a flattened index.
    pub fn label(&self, idx: usize) -> String {
        let dc = self.catalyst.dim();
        format!("{}*{}", idx / dc + 1, idx % dc + 1)
    }

    pub fn order_labels(&self, order: &BetaOrder) -> Vec<String> {
        order.as_slice().iter().map(|&i| self.label(i)).collect()
    }
}

/// System-major Kronecker product.
pub fn tensor(
    p: &PopulationVector,
    c: &PopulationVector,
    cc: &CompositeContext,
) -> Result<PopulationVector> {
    let (ds, dc) = cc.dims();
    if p.dim() != ds || c.dim() != dc {
        return Err(ThermoError::DimensionMismatch {
            expected: ds * dc,
            got: p.dim() * c.dim(),
        });
    }
    let mut joint = Vec::with_capacity(ds * dc);
    for ps in p.iter() {
        for cc_ in c.iter() {
            joint.push(ps * cc_);
        }
    }
    PopulationVector::new(joint)
}

/// Canonical β-order of a composite state.
pub fn composite_beta_order(joint: &PopulationVector, cc: &CompositeContext) -> Result<BetaOrder> {
    beta_order(joint, cc.composite())
}

/// Ground population of the optimal qubit catalyst for cooling a qutrit
/// whose β-order is (2,1,3):
/// c_1 = (−p_3 + √(p_3² + 8Δ_13 p_1 p_3)) / (4Δ_13 p_1).
pub fn optimal_qubit_catalyst_c1(p: &PopulationVector, ctx: &ThermalContext) -> Result<f64> {
    if p.dim() != 3 {
        return Err(ThermoError::DimensionMismatch {
            expected: 3,
            got: p.dim(),
        });
    }
    let order = beta_order(p, ctx)?;
    if order.one_based() != vec![2, 1, 3] {
        return Err(ThermoError::PreconditionViolated(format!(
            "closed form requires β-order (2,1,3), state has {:?}",
            order.one_based()
        )));
    }
    let (p1, p3) = (p.get(0), p.get(2));
    let delta13 = ctx.delta(0, 2);
    if p3 <= 0.0 {
        return Ok(0.0);
    }
    Ok((-p3 + (p3 * p3 + 8.0 * delta13 * p1 * p3).sqrt()) / (4.0 * delta13 * p1))
}

/// Lifts a system-level swap sequence to the composite: each system swap
/// becomes d_C composite swaps, one per catalyst level, sharing λ.
fn lift_sequence(seq: &SwapSequence, cc: &CompositeContext) -> Result<SwapSequence> {
    let dc = cc.catalyst.dim();
    let mut out = SwapSequence::empty();
    for step in seq.steps() {
        let (j, k) = step.levels();
        for c in 0..dc {
            out.push(TwoLevelProcess::new(
                cc.composite(),
                cc.flatten(j, c),
                cc.flatten(k, c),
                step.lambda(),
            )?);
        }
    }
    Ok(out)
}

/// Composite swap-sequence endpoints spanning the catalytic set for a fixed
/// catalyst: standard formations from the composite β-order toward every
/// target order, plus lifted system-local formations (which need not be
/// composite standard formations themselves).
fn composite_cloud(
    joint: &PopulationVector,
    p: &PopulationVector,
    cc: &CompositeContext,
) -> Result<(Vec<PopulationVector>, Vec<SwapSequence>)> {
    let base = composite_beta_order(joint, cc)?;
    let mut vertices = Vec::new();
    let mut sequences = Vec::new();
    for (_, seq, endpoint) in eto_vertex_cloud(joint, cc.composite(), &base)? {
        vertices.push(endpoint);
        sequences.push(seq);
    }
    let sys_base = beta_order(p, cc.system())?;
    for (_, seq, _) in eto_vertex_cloud(p, cc.system(), &sys_base)? {
        let lifted = lift_sequence(&seq, cc)?;
        vertices.push(lifted.apply(joint)?);
        sequences.push(lifted);
    }
    // Merge duplicates, keeping the first (shorter-provenance) sequence.
    let mut keep_v: Vec<PopulationVector> = Vec::new();
    let mut keep_s = Vec::new();
    for (v, s) in vertices.into_iter().zip(sequences) {
        if keep_v.iter().all(|u| u.max_distance(&v) > 1e-12) {
            keep_v.push(v);
            keep_s.push(s);
        }
    }
    Ok((keep_v, keep_s))
}

/// Implicit handle onto the catalytic reachable set for a fixed catalyst.
pub struct CetoHandle {
    cc: CompositeContext,
    p: PopulationVector,
    c: PopulationVector,
    vertices: Vec<PopulationVector>,
    sequences: Vec<SwapSequence>,
}

/// Composite dimensions beyond this would need more than 8! formations.
const EXACT_COMPOSITE_DIM_LIMIT: usize = 8;

impl CetoHandle {
    pub fn new(
        p: &PopulationVector,
        c: &PopulationVector,
        cc: &CompositeContext,
    ) -> Result<Self> {
        if cc.composite().dim() > EXACT_COMPOSITE_DIM_LIMIT {
            return Err(ThermoError::InvalidInput(format!(
                "composite dimension {} exceeds the exact-enumeration limit {}",
                cc.composite().dim(),
                EXACT_COMPOSITE_DIM_LIMIT
            )));
        }
        let joint = tensor(p, c, cc)?;
        let (vertices, sequences) = composite_cloud(&joint, p, cc)?;
        Ok(Self {
            cc: cc.clone(),
            p: p.clone(),
            c: c.clone(),
            vertices,
            sequences,
        })
    }

    pub fn vertices(&self) -> &[PopulationVector] {
        &self.vertices
    }

    pub fn sequences(&self) -> &[SwapSequence] {
        &self.sequences
    }

    pub fn source(&self) -> &PopulationVector {
        &self.p
    }

    pub fn catalyst(&self) -> &PopulationVector {
        &self.c
    }

    /// Is the system state q catalytically reachable (q⊗c from p⊗c)?
    pub fn membership(&self, q: &PopulationVector) -> Result<Membership> {
        let joint_q = tensor(q, &self.c, &self.cc)?;
        let refs: Vec<&PopulationVector> = self.vertices.iter().collect();
        hull_membership(&refs, &joint_q)
    }

    /// Optimises w·q over all q whose product embedding lies in the hull:
    /// the product-recovery constraints are linear in the mixture weights.
    /// The optimal face can be degenerate, so ties are broken
    /// deterministically by minimising populations from the highest energy
    /// level downward.
    pub fn optimize(&self, w: &[f64], minimize: bool) -> Result<(PopulationVector, f64)> {
        let (ds, dc) = self.cc.dims();
        if w.len() != ds {
            return Err(ThermoError::DimensionMismatch {
                expected: ds,
                got: w.len(),
            });
        }
        let n = self.vertices.len();
        // Base rows: for each (s, c) with c < d_C−1,
        // Σ α_i (v_i(s,c) − c_c·marg_s(v_i)) = 0, plus the weight-sum row.
        let m = ds * (dc - 1) + 1;
        let mut a = DMatrix::zeros(m, n);
        let mut b = DVector::zeros(m);
        b[m - 1] = 1.0;
        let mut marg = vec![DVector::zeros(n); ds];
        for (i, v) in self.vertices.iter().enumerate() {
            for s in 0..ds {
                let ms: f64 = (0..dc).map(|c| v.get(self.cc.flatten(s, c))).sum();
                marg[s][i] = ms;
                for c in 0..dc - 1 {
                    a[(s * (dc - 1) + c, i)] = v.get(self.cc.flatten(s, c)) - self.c.get(c) * ms;
                }
            }
            a[(m - 1, i)] = 1.0;
        }
        let mut primary = DVector::zeros(n);
        for s in 0..ds {
            primary.axpy(w[s], &marg[s], 1.0);
        }
        if !minimize {
            primary.neg_mut();
        }
        let mut stages = vec![primary];
        stages.extend((1..ds).rev().map(|s| marg[s].clone()));

        let mut value = 0.0;
        let mut x = Vec::new();
        for (stage, obj) in stages.iter().enumerate() {
            let lp = LinearProgram::new(a.clone(), b.clone(), obj.clone())?;
            let LpOutcome::Optimal {
                x: sol, objective, ..
            } = lp.solve()?
            else {
                return Err(ThermoError::SolverFailure);
            };
            if stage == 0 {
                value = if minimize { objective } else { -objective };
            }
            x = sol;
            // Pin the achieved value before refining the next level down.
            let rows = a.nrows();
            a = a.insert_row(rows, 0.0);
            for i in 0..n {
                a[(rows, i)] = obj[i];
            }
            b = b.insert_row(rows, objective);
        }
        let mut q = vec![0.0; ds];
        for (i, &alpha) in x.iter().enumerate() {
            if alpha > 0.0 {
                for s in 0..ds {
                    q[s] += alpha * marg[s][i];
                }
            }
        }
        Ok((PopulationVector::normalized(q)?, value))
    }
}

/// One grid point of a qubit-catalyst scan.
#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub c1: f64,
    pub objective: f64,
    pub q: PopulationVector,
}

/// Endpoint columns for one region of constant initial composite order, as
/// affine families in c1 (β-swap matrices do not depend on the catalyst
/// distribution).
struct ScanRegion {
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
    a2: DMatrix<f64>,
    obj0: DVector<f64>,
    obj1: DVector<f64>,
    /// marg_s(v_i) = m0 + c1·m1, needed to read q off a solution.
    m0: Vec<[f64; 8]>,
    m1: Vec<[f64; 8]>,
}

fn build_scan_region(
    p: &PopulationVector,
    cc: &CompositeContext,
    base: &BetaOrder,
    w: &[f64],
) -> Result<ScanRegion> {
    let ds = p.dim();
    assert!(ds <= 8);
    let d = 2 * ds;
    // joint(c1) = j0 + c1·dj with j0 = p⊗(0,1), dj = p⊗(1,−1).
    let mut j0 = vec![0.0; d];
    let mut dj = vec![0.0; d];
    for s in 0..ds {
        j0[2 * s + 1] = p.get(s);
        dj[2 * s] = p.get(s);
        dj[2 * s + 1] = -p.get(s);
    }
    // Columns: one formation endpoint per composite target order, plus the
    // lifted system-local formation endpoints.
    let mut bases: Vec<Vec<f64>> = Vec::new();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    let apply_cols = |seq: &SwapSequence, bases: &mut Vec<Vec<f64>>, dirs: &mut Vec<Vec<f64>>| {
        let mut b = j0.clone();
        let mut dv = dj.clone();
        for s in seq.steps() {
            s.apply_in_place(&mut b);
            s.apply_in_place(&mut dv);
        }
        bases.push(b);
        dirs.push(dv);
    };
    use itertools::Itertools;
    for perm in (0..d).permutations(d) {
        let target = BetaOrder::from_perm(perm)?;
        let seq = standard_formation(cc.composite(), base, &target)?;
        apply_cols(&seq, &mut bases, &mut dirs);
    }
    let sys_base = beta_order(p, cc.system())?;
    for (_, seq, _) in eto_vertex_cloud(p, cc.system(), &sys_base)? {
        let lifted = lift_sequence(&seq, cc)?;
        apply_cols(&lifted, &mut bases, &mut dirs);
    }

    let n = bases.len();
    let m = ds + 1;
    let mut a0 = DMatrix::zeros(m, n);
    let mut a1 = DMatrix::zeros(m, n);
    let a2_full = {
        let mut a2 = DMatrix::zeros(m, n);
        for i in 0..n {
            let (b, dv) = (&bases[i], &dirs[i]);
            for s in 0..ds {
                // Row (s, catalyst level 0): v(s,0) − c1·marg_s(v), with
                // v = b + c1·dv expanded into powers of c1.
                let (b0, b1) = (b[2 * s], b[2 * s + 1]);
                let (d0, d1) = (dv[2 * s], dv[2 * s + 1]);
                a0[(s, i)] = b0;
                a1[(s, i)] = d0 - (b0 + b1);
                a2[(s, i)] = -(d0 + d1);
            }
            a0[(ds, i)] = 1.0;
        }
        a2
    };
    let mut obj0 = DVector::zeros(n);
    let mut obj1 = DVector::zeros(n);
    let mut m0 = vec![[0.0; 8]; n];
    let mut m1 = vec![[0.0; 8]; n];
    for i in 0..n {
        for s in 0..ds {
            let marg0 = bases[i][2 * s] + bases[i][2 * s + 1];
            let marg1 = dirs[i][2 * s] + dirs[i][2 * s + 1];
            m0[i][s] = marg0;
            m1[i][s] = marg1;
            obj0[i] += w[s] * marg0;
            obj1[i] += w[s] * marg1;
        }
    }
    Ok(ScanRegion {
        a0,
        a1,
        a2: a2_full,
        obj0,
        obj1,
        m0,
        m1,
    })
}

/// Initial composite β-order of p ⊗ (c1, 1−c1) for a degenerate qubit
/// catalyst, computed without building the composite state.
fn qubit_scan_order(ratios: &[f64], c1: f64) -> Vec<usize> {
    let d = 2 * ratios.len();
    let mut keyed: Vec<(f64, usize)> = (0..d)
        .map(|i| {
            let r = ratios[i / 2] * if i % 2 == 0 { c1 } else { 1.0 - c1 };
            (r, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, i)| i).collect()
}

/// Scans qubit catalysts c = (c1, 1−c1) over a grid, minimising w·q over
/// the catalytic set at each point. Endpoint families are affine in c1
/// within regions of constant initial order, and each LP warm-starts from
/// its predecessor, so dense grids stay cheap.
pub fn ceto2_scan(
    p: &PopulationVector,
    ctx: &ThermalContext,
    grid: &[f64],
    w: &[f64],
) -> Result<Vec<ScanPoint>> {
    let ds = p.dim();
    if w.len() != ds {
        return Err(ThermoError::DimensionMismatch {
            expected: ds,
            got: w.len(),
        });
    }
    if ds > 4 {
        return Err(ThermoError::InvalidInput(
            "qubit-catalyst scan supports system dimension ≤ 4".into(),
        ));
    }
    let cc = CompositeContext::with_degenerate_catalyst(ctx.clone(), 2)?;
    let ratios = ctx.element_ratios(p)?;
    let m = ds + 1;

    let mut regions: HashMap<Vec<usize>, ScanRegion> = HashMap::new();
    let mut out = Vec::with_capacity(grid.len());
    let mut warm: Option<Vec<usize>> = None;
    for &c1 in grid {
        if !(0.0..=1.0).contains(&c1) {
            return Err(ThermoError::InvalidInput(format!(
                "catalyst ground population {c1} outside [0,1]"
            )));
        }
        let key = qubit_scan_order(&ratios, c1);
        if !regions.contains_key(&key) {
            let base = BetaOrder::from_perm(key.clone())?;
            regions.insert(key.clone(), build_scan_region(p, &cc, &base, w)?);
        }
        let reg = &regions[&key];
        let a = &reg.a0 + &reg.a1 * c1 + &reg.a2 * (c1 * c1);
        let obj = &reg.obj0 + &reg.obj1 * c1;
        let mut b = DVector::zeros(m);
        b[m - 1] = 1.0;
        let lp = LinearProgram::new(a, b, obj)?;
        let outcome = match &warm {
            Some(basis) => lp.solve_with_basis(basis)?,
            None => lp.solve()?,
        };
        let LpOutcome::Optimal {
            x,
            objective,
            basis,
        } = outcome
        else {
            return Err(ThermoError::SolverFailure);
        };
        let mut q = vec![0.0; ds];
        for (i, &alpha) in x.iter().enumerate() {
            if alpha > 0.0 {
                for s in 0..ds {
                    q[s] += alpha * (reg.m0[i][s] + c1 * reg.m1[i][s]);
                }
            }
        }
        warm = Some(basis);
        out.push(ScanPoint {
            c1,
            objective,
            q: PopulationVector::normalized(q)?,
        });
    }
    Ok(out)
}

/// Result of decomposing a catalytic transformation into swap sequences.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub certificate: MixtureCertificate,
    /// Provenance sequence of each support vertex (aligned with the
    /// certificate's vertex indices).
    pub sequences: Vec<SwapSequence>,
    /// Single sequence with partial-swap entries when the support follows
    /// the optional-swap product pattern; None for raw mixtures.
    pub recombined: Option<SwapSequence>,
}

/// Greedy subsequence match of `short` inside `long` (comparing swap level
/// pairs); returns the positions of `long` that carry `short`'s swaps.
fn matched_positions(long: &SwapSequence, short: &SwapSequence) -> Option<Vec<usize>> {
    let mut present = Vec::with_capacity(short.len());
    let mut it = short.steps().iter().peekable();
    for (pos, step) in long.steps().iter().enumerate() {
        if let Some(next) = it.peek() {
            if next.levels() == step.levels() {
                it.next();
                present.push(pos);
            }
        }
    }
    if it.peek().is_none() {
        Some(present)
    } else {
        None
    }
}

/// Builds the partial-swap sequence for a carrier with strengths `lambda`
/// at the listed free positions (full strength elsewhere).
fn carrier_with_lambdas(
    carrier: &SwapSequence,
    free: &[usize],
    lambda: &[f64],
    cc: &CompositeContext,
) -> Result<SwapSequence> {
    let mut seq = SwapSequence::empty();
    for (pos, step) in carrier.steps().iter().enumerate() {
        match free.iter().position(|&f| f == pos) {
            Some(o) => {
                let (j, k) = step.levels();
                seq.push(TwoLevelProcess::new(
                    cc.composite(),
                    j,
                    k,
                    lambda[o].clamp(0.0, 1.0) * step.lambda(),
                )?);
            }
            None => seq.push(*step),
        }
    }
    Ok(seq)
}

const RECOMBINE_MAX_FREE: usize = 4;
const RECOMBINE_EXTRA_LEN: usize = 2;

/// Solves the multilinear system endpoint(λ) = target over the unpinned
/// free positions by Gauss-Newton. The endpoint is affine in each λ
/// separately, so Jacobian columns are endpoint differences at λ_o ∈ {0,1}.
fn fit_lambdas(
    carrier: &SwapSequence,
    free: &[usize],
    init: &[f64],
    cc: &CompositeContext,
    joint_p: &PopulationVector,
    joint_q: &PopulationVector,
) -> Result<Option<Vec<f64>>> {
    let d = joint_q.dim();
    let endpoint = |lambda: &[f64]| -> Result<PopulationVector> {
        carrier_with_lambdas(carrier, free, lambda, cc)?.apply(joint_p)
    };
    let mut lambda = init.to_vec();
    for _ in 0..50 {
        let cur = endpoint(&lambda)?;
        let residual = DVector::from_fn(d, |r, _| joint_q.get(r) - cur.get(r));
        if residual.amax() <= 1e-11 {
            return Ok(Some(lambda));
        }
        if free.is_empty() {
            return Ok(None);
        }
        let mut jac = DMatrix::zeros(d, free.len());
        for o in 0..free.len() {
            let mut hi = lambda.clone();
            hi[o] = 1.0;
            let mut lo = lambda.clone();
            lo[o] = 0.0;
            let (ehi, elo) = (endpoint(&hi)?, endpoint(&lo)?);
            for r in 0..d {
                jac[(r, o)] = ehi.get(r) - elo.get(r);
            }
        }
        let svd = jac.svd(true, true);
        let Ok(step) = svd.solve(&residual, 1e-12) else {
            return Ok(None);
        };
        if step.amax() < 1e-14 {
            return Ok(None);
        }
        for (o, l) in lambda.iter_mut().enumerate() {
            *l = (*l + step[o]).clamp(0.0, 1.0);
        }
    }
    Ok(None)
}

/// Attempts to collapse the mixture into one in-line partial-swap sequence.
/// All support sequences must be subsequences of a common carrier from the
/// cloud; positions missed by some support sequence get strengths λ fitted
/// so the carrier reproduces the target exactly. Among the valid
/// recombinations the one leaving the most swaps at full strength wins
/// (support protocols should differ in as few optional swaps as possible),
/// so per carrier the free positions are pinned to λ = 1 greedily, largest
/// pin-sets first.
fn recombine(
    weights: &[f64],
    support: &[SwapSequence],
    cloud: &[SwapSequence],
    cc: &CompositeContext,
    joint_p: &PopulationVector,
    joint_q: &PopulationVector,
) -> Result<Option<SwapSequence>> {
    use itertools::Itertools;
    let min_len = support.iter().map(|s| s.len()).max().unwrap_or(0);
    let mut carriers: Vec<&SwapSequence> = cloud
        .iter()
        .filter(|s| s.len() >= min_len && s.len() <= min_len + RECOMBINE_EXTRA_LEN)
        .collect();
    carriers.sort_by_key(|s| s.len());

    // (full-strength count, shorter carriers preferred) → sequence.
    let mut best: Option<(usize, usize, SwapSequence)> = None;
    'carrier: for carrier in carriers {
        // Free positions: missed by at least one support sequence. Their
        // natural starting strengths are the mixture weights of the
        // sequences that do use them.
        let mut used = vec![0.0; carrier.len()];
        for (seq, &w) in support.iter().zip(weights) {
            let Some(present) = matched_positions(carrier, seq) else {
                continue 'carrier;
            };
            for pos in present {
                used[pos] += w;
            }
        }
        let free: Vec<usize> = (0..carrier.len())
            .filter(|&pos| used[pos] < 1.0 - 1e-12)
            .collect();
        if free.len() > RECOMBINE_MAX_FREE {
            continue;
        }
        for pinned in (0..=free.len()).rev().flat_map(|k| free.iter().combinations(k)) {
            let rest: Vec<usize> = free
                .iter()
                .copied()
                .filter(|pos| !pinned.contains(&pos))
                .collect();
            let init: Vec<f64> = rest.iter().map(|&pos| used[pos]).collect();
            // Pinned positions fold back into full strength.
            let Some(lambda) = fit_lambdas(carrier, &rest, &init, cc, joint_p, joint_q)? else {
                continue;
            };
            let full = carrier.len() - rest.len()
                + lambda.iter().filter(|&&l| l >= 1.0 - 1e-9).count();
            let seq = carrier_with_lambdas(carrier, &rest, &lambda, cc)?;
            if seq.apply(joint_p)?.max_distance(joint_q) > 1e-9 {
                continue;
            }
            let key = (full, usize::MAX - carrier.len());
            if best
                .as_ref()
                .map_or(true, |(bf, bl, _)| key > (*bf, *bl))
            {
                best = Some((key.0, key.1, seq));
            }
            continue 'carrier;
        }
    }
    Ok(best.map(|(_, _, seq)| seq))
}

/// Decomposes a catalytic transformation p⊗c → q⊗c into a mixture of swap
/// sequences over composite extreme points, recombining into a single
/// partial-swap sequence when the support allows it.
pub fn decompose_mixture(
    joint_p: &PopulationVector,
    joint_q: &PopulationVector,
    cc: &CompositeContext,
) -> Result<Decomposition> {
    let (ds, dc) = cc.dims();
    let p = system_marginal(joint_p, (ds, dc))?;
    let (vertices, sequences) = composite_cloud(joint_p, &p, cc)?;
    let keep = hull_reduce_indices(&vertices)?;
    let vertices: Vec<PopulationVector> = keep.iter().map(|&i| vertices[i].clone()).collect();
    let sequences: Vec<SwapSequence> = keep.iter().map(|&i| sequences[i].clone()).collect();

    // Mixture weights over the extreme points; among the many valid
    // certificates, minimising the expected sequence length concentrates the
    // support on a common carrier so recombination can succeed.
    let d = joint_q.dim();
    let n = vertices.len();
    let mut a = DMatrix::zeros(d + 1, n);
    let mut b = DVector::zeros(d + 1);
    let mut obj = DVector::zeros(n);
    for (i, v) in vertices.iter().enumerate() {
        for r in 0..d {
            a[(r, i)] = v.get(r);
        }
        a[(d, i)] = 1.0;
        obj[i] = sequences[i].len() as f64;
    }
    for r in 0..d {
        b[r] = joint_q.get(r);
    }
    b[d] = 1.0;
    let lp = LinearProgram::new(a, b, obj)?;
    let x = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible => {
            return Err(ThermoError::PreconditionViolated(
                "target is not a member of the catalytic set".into(),
            ));
        }
        LpOutcome::Unbounded => return Err(ThermoError::SolverFailure),
    };
    let mut certificate = MixtureCertificate {
        weights: Vec::new(),
        vertex_indices: Vec::new(),
    };
    for (i, &alpha) in x.iter().enumerate() {
        if alpha > 1e-12 {
            certificate.weights.push(alpha);
            certificate.vertex_indices.push(i);
        }
    }
    let total: f64 = certificate.weights.iter().sum();
    for w in &mut certificate.weights {
        *w /= total;
    }

    let support_seqs: Vec<SwapSequence> = certificate
        .vertex_indices
        .iter()
        .map(|&i| sequences[i].clone())
        .collect();
    let recombined = recombine(
        &certificate.weights,
        &support_seqs,
        &sequences,
        cc,
        joint_p,
        joint_q,
    )?;
    Ok(Decomposition {
        certificate,
        sequences: support_seqs,
        recombined,
    })
}

/// Composite/system/catalyst values of one free-energy functional.
#[derive(Clone, Copy, Debug)]
pub struct FreeEnergyTriple {
    pub composite: f64,
    pub system: f64,
    pub catalyst: f64,
}

/// Snapshot after one swap of a catalytic trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    /// 0 for the initial state, then one per applied swap.
    pub step: usize,
    pub state: PopulationVector,
    pub system: PopulationVector,
    pub catalyst: PopulationVector,
    pub delta_f_half: FreeEnergyTriple,
    pub delta_f_one: FreeEnergyTriple,
    pub delta_f_two: FreeEnergyTriple,
    pub mutual_information: f64,
    /// (λ, composite ΔF_1) sampled along the incoming swap's λ interval;
    /// empty for the initial record.
    pub lambda_samples: Vec<(f64, f64)>,
}

const LAMBDA_SAMPLES: usize = 100;

fn snapshot(
    step: usize,
    state: PopulationVector,
    cc: &CompositeContext,
    lambda_samples: Vec<(f64, f64)>,
) -> Result<TrajectoryRecord> {
    let dims = cc.dims();
    let system = system_marginal(&state, dims)?;
    let catalyst = catalyst_marginal(&state, dims)?;
    let triple = |alpha: f64| -> Result<FreeEnergyTriple> {
        Ok(FreeEnergyTriple {
            composite: free_energy_delta(alpha, &state, cc.composite())?,
            system: free_energy_delta(alpha, &system, cc.system())?,
            catalyst: free_energy_delta(alpha, &catalyst, cc.catalyst())?,
        })
    };
    Ok(TrajectoryRecord {
        step,
        delta_f_half: triple(0.5)?,
        delta_f_one: triple(1.0)?,
        delta_f_two: triple(2.0)?,
        mutual_information: mutual_information(&state, dims)?,
        state,
        system,
        catalyst,
        lambda_samples,
    })
}

/// Applies a sequence to a composite state, recording marginals, free
/// energies and mutual information after every swap, with a continuous-λ
/// sample of the composite free energy inside each swap.
pub fn trajectory_report(
    start: &PopulationVector,
    seq: &SwapSequence,
    cc: &CompositeContext,
) -> Result<Vec<TrajectoryRecord>> {
    let mut records = vec![snapshot(0, start.clone(), cc, Vec::new())?];
    let mut cur = start.clone();
    for (idx, step) in seq.steps().iter().enumerate() {
        let mut samples = Vec::with_capacity(LAMBDA_SAMPLES);
        for k in 0..LAMBDA_SAMPLES {
            let lam = step.lambda() * k as f64 / (LAMBDA_SAMPLES - 1) as f64;
            let partial = step.with_lambda(lam)?.apply(&cur)?;
            samples.push((lam, free_energy_delta(1.0, &partial, cc.composite())?));
        }
        cur = step.apply(&cur)?;
        records.push(snapshot(idx + 1, cur.clone(), cc, samples)?);
    }
    Ok(records)
}
