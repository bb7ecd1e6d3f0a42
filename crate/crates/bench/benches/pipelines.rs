use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use thermocat::{
    ceto2_scan, eto_extremes_bruteforce, gibbs_stochastic_feasible, standard_formation,
    thermo_curve, thermomajorises, BetaOrder, PopulationVector, ThermalContext,
    DEFAULT_NODE_BUDGET,
};

fn bench_curves(c: &mut Criterion) {
    let ctx = ThermalContext::new(&[0.0, 0.2, 0.5], 1.0).unwrap();
    let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
    c.bench_function("thermo_curve_dim3", |b| {
        b.iter_batched(
            || p.clone(),
            |p| thermo_curve(&p, &ctx).unwrap(),
            BatchSize::SmallInput,
        )
    });
    c.bench_function("thermomajorises_dim3", |b| {
        b.iter(|| thermomajorises(&p, ctx.gibbs(), &ctx).unwrap())
    });
}

fn bench_reachability(c: &mut Criterion) {
    let ctx = ThermalContext::new(&[0.0, 0.2, 0.5], 1.0).unwrap();
    let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
    c.bench_function("lp_feasibility_dim3", |b| {
        b.iter(|| gibbs_stochastic_feasible(&p, ctx.gibbs(), &ctx).unwrap())
    });
    c.bench_function("eto_bruteforce_dim3", |b| {
        b.iter(|| eto_extremes_bruteforce(&p, &ctx, 3, DEFAULT_NODE_BUDGET).unwrap())
    });
    let ctx4 = ThermalContext::new(&[0.0, 0.1, 0.2, 0.3], 1.0).unwrap();
    let from = BetaOrder::from_one_based(&[1, 2, 3, 4]).unwrap();
    let to = BetaOrder::from_one_based(&[4, 2, 3, 1]).unwrap();
    c.bench_function("standard_formation_dim4", |b| {
        b.iter(|| standard_formation(&ctx4, &from, &to).unwrap())
    });
}

fn bench_catalysis(c: &mut Criterion) {
    let ctx = ThermalContext::new(&[0.0, 0.2, 0.5], 1.0).unwrap();
    let p = PopulationVector::new(vec![0.35, 0.55, 0.1]).unwrap();
    let grid: Vec<f64> = (0..100).map(|k| k as f64 / 99.0).collect();
    c.bench_function("qubit_catalyst_scan_100", |b| {
        b.iter(|| ceto2_scan(&p, &ctx, &grid, &[1.0, 0.0, 0.0]).unwrap())
    });
}

criterion_group!(benches, bench_curves, bench_reachability, bench_catalysis);
criterion_main!(benches);
