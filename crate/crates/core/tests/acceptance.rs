//! End-to-end regression gate: one timed pass/fail line per criterion.

use std::panic::AssertUnwindSafe;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thermocat::{
    barycentric, ceto2_scan, cooling_scan, decompose, decompose_mixture,
    eto_extreme_points_monotonic, eto_extremes_bruteforce, free_energy_delta,
    gibbs_stochastic_feasible, hull_membership, is_energy_preserving, is_gibbs_stochastic,
    mto_extreme_candidates, optimal_qubit_catalyst_c1, reconstruct, standard_formation, tensor,
    thermomajorises, trajectory_report, BetaOrder, CetoHandle, ComplexUnitary, CompositeContext,
    CoolingConfig, CoolingMode, PopulationVector, ThermalContext, TwoLevelProcess,
    DEFAULT_NODE_BUDGET,
};

type C64 = Complex<f64>;

/// Runs one criterion, prints its pass/fail line, and reports success.
fn criterion(name: &str, limit: Duration, body: impl FnOnce()) -> bool {
    let t = Instant::now();
    let outcome = std::panic::catch_unwind(AssertUnwindSafe(body));
    let dt = t.elapsed();
    let ok = outcome.is_ok() && dt <= limit;
    println!(
        "criterion {name}: {} ({:.3} s, limit {:.0} s)",
        if ok { "pass" } else { "fail" },
        dt.as_secs_f64(),
        limit.as_secs_f64()
    );
    if let Err(cause) = outcome {
        let msg = cause
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| cause.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        println!("  failure: {msg}");
    }
    ok
}

fn ctx3() -> ThermalContext {
    ThermalContext::new(&[0.0, 0.2, 0.5], 1.0).unwrap()
}

fn p1() -> PopulationVector {
    PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap()
}

fn random_state(d: usize, rng: &mut impl Rng) -> PopulationVector {
    PopulationVector::normalized((0..d).map(|_| rng.gen_range(1e-3..1.0)).collect()).unwrap()
}

fn random_context(d: usize, rng: &mut impl Rng) -> ThermalContext {
    let mut e: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..2.0)).collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e[0] = 0.0;
    ThermalContext::from_scaled_energies(e).unwrap()
}

/// A state whose β-order is monotonic in energy: non-increasing ratios glued
/// onto the Gibbs weights.
fn random_monotonic_state(ctx: &ThermalContext, rng: &mut impl Rng) -> PopulationVector {
    let mut ratios: Vec<f64> = (0..ctx.dim()).map(|_| rng.gen_range(0.05..1.0)).collect();
    ratios.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let raw: Vec<f64> = ratios
        .iter()
        .zip(ctx.gibbs().iter())
        .map(|(r, g)| r * g)
        .collect();
    PopulationVector::normalized(raw).unwrap()
}

fn acceptance_01_barycentric_regression() -> bool {
    criterion("1 (barycentric regression)", Duration::from_secs(1), || {
        let ctx = ctx3();
        let p = p1();
        let (x, y) = barycentric(&p).unwrap();
        assert!((x - 0.390).abs() <= 1e-3 && (y - 0.025).abs() <= 1e-3);
        let set = eto_extremes_bruteforce(&p, &ctx, 3, DEFAULT_NODE_BUDGET).unwrap();
        let mut coords: Vec<(f64, f64)> = set
            .vertices()
            .iter()
            .map(|v| barycentric(v).unwrap())
            .collect();
        coords.sort_by(|a, b| a.0.total_cmp(&b.0));
        let expected = [(-0.184, 0.097), (-0.171, 0.180)];
        for ((x, y), (ex, ey)) in coords.iter().zip(expected) {
            assert!(
                (x - ex).abs() <= 1e-3 && (y - ey).abs() <= 1e-3,
                "leftmost vertex ({x:.4},{y:.4}) vs ({ex},{ey})"
            );
        }
    })
}

fn acceptance_02_optimal_qubit_catalyst() -> bool {
    criterion("2 (optimal qubit catalyst)", Duration::from_secs(120), || {
        let ctx = ctx3();
        let p = p1();
        let c1 = optimal_qubit_catalyst_c1(&p, &ctx).unwrap();
        assert!((c1 - 0.3816).abs() <= 1e-4, "formula c1 = {c1}");
        let n = 1_000_000usize;
        let step = 1.0 / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
        let points = ceto2_scan(&p, &ctx, &grid, &[1.0, 0.0, 0.0]).unwrap();
        let best = points
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .unwrap();
        assert!(
            (best.c1 - c1).abs() <= step,
            "scan argmin {} vs formula {c1}",
            best.c1
        );
    })
}

fn acceptance_03_trajectory_regression() -> bool {
    criterion("3 (trajectory regression)", Duration::from_secs(10), || {
        let ctx = ctx3();
        let p = p1();
        let cc = CompositeContext::with_degenerate_catalyst(ctx, 2).unwrap();
        let c = PopulationVector::new(vec![0.3816, 0.6184]).unwrap();
        let joint_p = tensor(&p, &c, &cc).unwrap();

        // β-order report of the composite start.
        let order = thermocat::composite_beta_order(&joint_p, &cc).unwrap();
        assert_eq!(order.one_based(), vec![4, 3, 2, 1, 6, 5]);
        assert_eq!(
            cc.order_labels(&order),
            vec!["2*2", "2*1", "1*2", "1*1", "3*2", "3*1"]
        );

        let close = |v: &PopulationVector, e: &[f64], tol: f64| {
            e.iter().enumerate().all(|(i, x)| (v.get(i) - x).abs() <= tol)
        };
        assert!(close(&joint_p, &[0.1336, 0.2164, 0.2099, 0.3401, 0.0382, 0.0618], 1e-4));

        let handle = CetoHandle::new(&p, &c, &cc).unwrap();
        let (q, _) = handle.optimize(&[1.0, 0.0, 0.0], true).unwrap();
        let joint_q = tensor(&q, &c, &cc).unwrap();
        let decomp = decompose_mixture(&joint_p, &joint_q, &cc).unwrap();
        let seq = decomp.recombined.expect("recombined sequence");
        let records = trajectory_report(&joint_p, &seq, &cc).unwrap();

        let r1 = &records[4];
        assert!(close(&r1.state, &[0.1144, 0.1662, 0.1857, 0.3323, 0.0382, 0.1633], 1e-4));
        assert!(close(&r1.system, &[0.2806, 0.5180, 0.2015], 1e-4));
        assert!(close(&r1.catalyst, &[0.3382, 0.6618], 1e-4));
        let r2 = &records[5];
        assert!(close(&r2.state, &[0.1144, 0.1662, 0.1977, 0.3203, 0.0382, 0.1633], 1e-4));
        assert!(close(&r2.system, &[0.2806, 0.5180, 0.2015], 1e-4));
        assert!(close(&r2.catalyst, &[0.3502, 0.6498], 1e-4));
        let last = records.last().unwrap();
        assert!(close(&last.state, &[0.0832, 0.1348, 0.1977, 0.3203, 0.1008, 0.1633], 1e-4));
        assert!(close(&last.system, &[0.2179, 0.5180, 0.2641], 1e-4));
    })
}

fn acceptance_04_standard_formation() -> bool {
    let ctx = ThermalContext::new(&[0.0, 0.1, 0.2, 0.3], 1.0).unwrap();
    let from = BetaOrder::from_one_based(&[1, 2, 3, 4]).unwrap();
    let to = BetaOrder::from_one_based(&[4, 2, 3, 1]).unwrap();
    // Warm up before timing the single sub-millisecond call.
    let _ = standard_formation(&ctx, &from, &to).unwrap();
    criterion("4 (standard formation)", Duration::from_millis(1), || {
        let seq = standard_formation(&ctx, &from, &to).unwrap();
        let pairs: Vec<(usize, usize)> = seq.steps().iter().map(|s| s.levels()).collect();
        assert_eq!(pairs, vec![(2, 3), (1, 3), (0, 3), (0, 1), (0, 2)]);
        assert!(seq.steps().iter().all(|s| s.is_beta_swap()));
        // Intermediate orders along the bubble.
        let mut cur = from.as_slice().to_vec();
        let expected_orders = [
            vec![1, 2, 4, 3],
            vec![1, 4, 2, 3],
            vec![4, 1, 2, 3],
            vec![4, 2, 1, 3],
            vec![4, 2, 3, 1],
        ];
        for (s, exp) in seq.steps().iter().zip(expected_orders) {
            let (j, k) = s.levels();
            let a = cur.iter().position(|&l| l == j).unwrap();
            let b = cur.iter().position(|&l| l == k).unwrap();
            cur.swap(a, b);
            let one_based: Vec<usize> = cur.iter().map(|l| l + 1).collect();
            assert_eq!(one_based, exp);
        }
    })
}

fn acceptance_05_formation_extremes_vs_bruteforce() -> bool {
    criterion("5 (formation vs brute force)", Duration::from_secs(300), || {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cases = std::iter::repeat(3).take(100).chain(std::iter::repeat(4).take(20));
        for d in cases {
            let ctx = random_context(d, &mut rng);
            let p = random_monotonic_state(&ctx, &mut rng);
            let exact = eto_extreme_points_monotonic(&p, &ctx).unwrap();
            let l_max = d * (d - 1) / 2;
            let brute = eto_extremes_bruteforce(&p, &ctx, l_max, DEFAULT_NODE_BUDGET).unwrap();
            assert_eq!(exact.vertices().len(), brute.vertices().len());
            for v in exact.vertices() {
                assert!(brute.vertices().iter().any(|w| w.max_distance(v) <= 1e-9));
            }
        }
    })
}

fn acceptance_06_majorisation_duality() -> bool {
    criterion("6 (majorisation duality)", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let d = rng.gen_range(2..=5);
            let ctx = random_context(d, &mut rng);
            let p = random_state(d, &mut rng);
            let q = random_state(d, &mut rng);
            assert_eq!(
                thermomajorises(&p, &q, &ctx).unwrap(),
                gibbs_stochastic_feasible(&p, &q, &ctx).unwrap()
            );
        }
    })
}

fn acceptance_07_monotone_suite() -> bool {
    criterion("7 (monotones and identities)", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alphas = [0.0, 0.5, 1.0, 2.0, f64::INFINITY];
        for _ in 0..10_000 {
            let d = rng.gen_range(2..=4);
            let ctx = random_context(d, &mut rng);
            let p = random_state(d, &mut rng);
            let j = rng.gen_range(0..d);
            let k = (j + rng.gen_range(1..d)) % d;
            let proc = TwoLevelProcess::new(&ctx, j, k, rng.gen_range(0.0..=1.0)).unwrap();
            let m = proc.matrix(d).unwrap();
            assert!(is_gibbs_stochastic(&m, &ctx).unwrap());
            let g = ctx.gibbs();
            let gv = nalgebra::DVector::from_row_slice(g.as_slice());
            assert!((&m * &gv - &gv).amax() <= 1e-12);
            let q = proc.apply(&p).unwrap();
            for alpha in alphas {
                let before = free_energy_delta(alpha, &p, &ctx).unwrap();
                let after = free_energy_delta(alpha, &q, &ctx).unwrap();
                assert!(after <= before + 1e-10, "α={alpha}: {after} > {before}");
            }
        }

        // Matrix identities on a generic 4-level ladder.
        let ctx = ThermalContext::new(&[0.0, 0.3, 0.7, 1.2], 1.0).unwrap();
        let beta = |j: usize, k: usize| {
            TwoLevelProcess::beta_swap(&ctx, j, k).unwrap().matrix(4).unwrap()
        };
        // Two equal-pair β-swaps compose to a partial process with λ = 1 − Δ.
        for (j, k) in [(0, 1), (0, 2), (1, 3)] {
            let b = beta(j, k);
            let m = TwoLevelProcess::new(&ctx, j, k, 1.0 - ctx.delta(j, k))
                .unwrap()
                .matrix(4)
                .unwrap();
            assert!((&b * &b - m).amax() <= 1e-12);
        }
        // Disjoint swaps commute.
        assert!((beta(0, 1) * beta(2, 3) - beta(2, 3) * beta(0, 1)).amax() <= 1e-12);
        // Triple-product identity on levels k < l < m.
        for (k, l, m) in [(0usize, 1usize, 2usize), (1, 2, 3), (0, 2, 3)] {
            let lhs = beta(k, l) * beta(k, m) * beta(l, m);
            let rhs = beta(l, m) * beta(k, m) * beta(k, l);
            assert!((&lhs - &rhs).amax() <= 1e-12);
            let (dkl, dkm) = (ctx.delta(k, l), ctx.delta(k, m));
            let explicit3 = [
                [(1.0 - dkl) * (1.0 - dkm), 1.0 - dkm, 1.0],
                [dkl * (1.0 - dkm), dkm, 0.0],
                [dkm, 0.0, 0.0],
            ];
            let idx = [k, l, m];
            for (r, row) in explicit3.iter().enumerate() {
                for (c, val) in row.iter().enumerate() {
                    assert!(
                        (lhs[(idx[r], idx[c])] - val).abs() <= 1e-12,
                        "triple product ({k},{l},{m}) entry ({r},{c})"
                    );
                }
            }
        }
    })
}

fn acceptance_08_cooling_reproduction() -> bool {
    criterion("8 (cooling reproduction)", Duration::from_secs(600), || {
        let report = cooling_scan(
            0.5,
            1.0,
            &[0.0, 0.4, 0.5],
            &[2, 3],
            CoolingMode::Exact,
            &CoolingConfig::default(),
        )
        .unwrap();
        assert!(report.beta_eto < report.beta_to, "ETO limit below TO limit");
        let tol = CoolingConfig::default().beta_tol;
        let qubit = &report.dims[0];
        let qutrit = &report.dims[1];
        assert_eq!((qubit.dim, qutrit.dim), (2, 3));
        assert!(qubit.best_beta > report.beta_eto + tol, "qubit catalyst helps");
        // Worst qubit candidate is the maximally mixed one.
        assert!(qubit.worst_catalyst.max_distance(
            &PopulationVector::new(vec![0.5, 0.5]).unwrap()
        ) <= 1e-9);
        assert!(qubit.worst_beta >= report.beta_eto - tol);
        assert!(qutrit.best_beta >= qubit.best_beta - tol, "monotone in dimension");
    })
}

fn acceptance_09_mto_behaviour() -> bool {
    criterion("9 (markovian behaviour)", Duration::from_secs(120), || {
        let ctx = ThermalContext::new(&[0.0, 0.3], 1.0).unwrap();
        let excited = PopulationVector::new(vec![0.0, 1.0]).unwrap();
        let ground = PopulationVector::new(vec![1.0, 0.0]).unwrap();
        let mto = mto_extreme_candidates(&excited, &ctx, DEFAULT_NODE_BUDGET).unwrap();
        let refs: Vec<&PopulationVector> = mto.vertices().iter().collect();
        assert!(!hull_membership(&refs, &ground).unwrap().is_member());
        assert!(thermomajorises(&excited, &ground, &ctx).unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let ctx = random_context(3, &mut rng);
            let p = random_state(3, &mut rng);
            let mto = mto_extreme_candidates(&p, &ctx, DEFAULT_NODE_BUDGET).unwrap();
            let eto = eto_extremes_bruteforce(&p, &ctx, 3, DEFAULT_NODE_BUDGET).unwrap();
            let eto_refs: Vec<&PopulationVector> = eto.vertices().iter().collect();
            for v in mto.vertices() {
                assert!(hull_membership(&eto_refs, v).unwrap().is_member());
            }
            for v in eto.vertices() {
                assert!(thermomajorises(&p, v, &ctx).unwrap());
            }
        }
    })
}

fn random_unitary(k: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(k, k, |_, _| {
        C64::new(
            rng.sample(rand_distr::StandardNormal),
            rng.sample(rand_distr::StandardNormal),
        )
    });
    g.qr().q()
}

fn acceptance_10_unitary_decomposition() -> bool {
    criterion("10 (unitary decomposition)", Duration::from_secs(30), || {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let d = rng.gen_range(2..=8);
            // Random degeneracy pattern: each level draws from a few energies.
            let levels = rng.gen_range(1..=d);
            let h0: Vec<f64> = (0..d)
                .map(|_| rng.gen_range(0..levels) as f64 * 0.5)
                .collect();
            // Block-diagonal unitary over the degenerate subspaces.
            let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
            for (i, &e) in h0.iter().enumerate() {
                match blocks.iter_mut().find(|(v, _)| (*v - e).abs() < 1e-12) {
                    Some((_, idx)) => idx.push(i),
                    None => blocks.push((e, vec![i])),
                }
            }
            let mut m = DMatrix::<C64>::zeros(d, d);
            let mut bound = 0usize;
            for (_, idx) in &blocks {
                bound += idx.len() * (idx.len() - 1) / 2;
                let u = random_unitary(idx.len(), &mut rng);
                for (r, &ir) in idx.iter().enumerate() {
                    for (c, &ic) in idx.iter().enumerate() {
                        m[(ir, ic)] = u[(r, c)];
                    }
                }
            }
            assert!(is_energy_preserving(&m, &h0));
            let cu = ComplexUnitary::new(m.clone(), h0).unwrap();
            let (factors, phases) = decompose(&cu).unwrap();
            assert!(factors.len() <= bound);
            let rec = reconstruct(&factors, &phases);
            let err = (&rec - &m).iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(err <= 1e-10, "reconstruction error {err}");
        }
    })
}

fn main() {
    let results = [
        acceptance_01_barycentric_regression(),
        acceptance_02_optimal_qubit_catalyst(),
        acceptance_03_trajectory_regression(),
        acceptance_04_standard_formation(),
        acceptance_05_formation_extremes_vs_bruteforce(),
        acceptance_06_majorisation_duality(),
        acceptance_07_monotone_suite(),
        acceptance_08_cooling_reproduction(),
        acceptance_09_mto_behaviour(),
        acceptance_10_unitary_decomposition(),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
