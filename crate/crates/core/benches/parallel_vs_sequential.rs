//! Monte Carlo sweep throughput: independent seeded runs mapped over
//! `Execution::Parallel` versus `Execution::Sequential`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use std::hint::black_box;
use swarmlab_core::dynamics::{integrate, IntegratorSpec, Model, ModelSpec};
use swarmlab_core::meanfield::{boltzmann_mc_step, OpinionPopulation};
use swarmlab_core::network::NetworkSpec;
use swarmlab_core::par::{map_indexed, Execution};
use swarmlab_core::potential::PotentialSpec;
use swarmlab_core::rng::stream;
use swarmlab_core::Ensemble;

fn hk_sweep(exec: Execution, runs: usize) -> Vec<usize> {
    let model = ModelSpec::new(Model::Hk { network: NetworkSpec::metric(0.1) });
    let integ = IntegratorSpec::rk4(0.05, 10.0).with_stride(10);
    map_indexed(runs, exec, |r| {
        let mut rng = stream(1, 0, r as u32);
        let x = (0..100).map(|_| rng.random::<f64>()).collect();
        let e = Ensemble::from_scalars(x).unwrap();
        integrate(&model, &e, &integ, &mut rng).unwrap().samples.len()
    })
}

fn cs_sweep(exec: Execution, runs: usize) -> Vec<f64> {
    let model = ModelSpec::new(Model::CuckerSmale { potential: PotentialSpec::power_law(1.0) });
    let integ = IntegratorSpec::rk4(1e-2, 2.0).with_stride(50).without_early_exit();
    map_indexed(runs, exec, |r| {
        let mut rng = stream(2, 0, r as u32);
        let x = (0..80).map(|_| rng.random::<f64>()).collect();
        let v = (0..80).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e = Ensemble::second_order(2, x, v).unwrap();
        integrate(&model, &e, &integ, &mut rng).unwrap().final_time()
    })
}

fn boltzmann_sweep(exec: Execution, runs: usize) -> Vec<f64> {
    map_indexed(runs, exec, |r| {
        let mut rng = stream(3, 0, r as u32);
        let s = (0..2000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut pop = OpinionPopulation::new(s, 0.5, 1.0, 0.05).unwrap();
        for _ in 0..20 {
            pop = boltzmann_mc_step(&pop, &|_: f64, _: f64| 1.0, &mut rng).unwrap();
        }
        pop.mean()
    })
}

fn bench(c: &mut Criterion) {
    let runs = 16;
    let mut g = c.benchmark_group("monte_carlo_sweep");
    g.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        let label = format!("{exec:?}");
        g.bench_with_input(BenchmarkId::new("hk_metric", &label), &exec, |b, &e| {
            b.iter(|| black_box(hk_sweep(e, runs)))
        });
        g.bench_with_input(BenchmarkId::new("cucker_smale", &label), &exec, |b, &e| {
            b.iter(|| black_box(cs_sweep(e, runs)))
        });
        g.bench_with_input(BenchmarkId::new("boltzmann", &label), &exec, |b, &e| {
            b.iter(|| black_box(boltzmann_sweep(e, runs)))
        });
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
