//! Fast invariant suite behind `swarm-lab check`.

use rand::Rng;
use swarmlab_core::dynamics::{integrate, rk4_step, IntegratorSpec, Model, ModelSpec};
use swarmlab_core::meanfield::{boltzmann_mc_step, empirical_cs_step, OpinionPopulation, ParticleMeasure};
use swarmlab_core::network::{Network, NetworkSpec, StaticGraph};
use swarmlab_core::potential::PotentialSpec;
use swarmlab_core::rng::seeded;
use swarmlab_core::stats::barycenter_and_mean_velocity;
use swarmlab_core::{dynamics, Ensemble};

use crate::{run_experiment, ExperimentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<String, String>;

fn determinism() -> Result<String, String> {
    let cfg =
        ExperimentConfig::parse("agents=40\nruns=3\nsweep.variable=r\nsweep.values=0.1,0.25\nintegrator.t_end=15\n")
            .map_err(|e| e.to_string())?;
    let a = run_experiment(&cfg, None).map_err(|e| e.to_string())?;
    let b = run_experiment(&cfg, Some(1)).map_err(|e| e.to_string())?;
    if a == b {
        Ok(format!("{} runs identical across schedules", a.runs.len()))
    } else {
        Err("repeated experiment differs".into())
    }
}

fn cs_momentum() -> Result<String, String> {
    let mut rng = seeded(1);
    let x: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
    let v: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e = Ensemble::second_order(2, x, v).map_err(|e| e.to_string())?;
    let model = ModelSpec::new(Model::CuckerSmale { potential: PotentialSpec::power_law(1.0) });
    let rec = integrate(&model, &e, &IntegratorSpec::rk4(1e-2, 5.0), &mut rng).map_err(|e| e.to_string())?;
    let (_, m0) = barycenter_and_mean_velocity(&e).map_err(|e| e.to_string())?;
    let (_, m1) = barycenter_and_mean_velocity(&rec.final_state).map_err(|e| e.to_string())?;
    let drift = m0.iter().zip(&m1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let v: Vec<f64> = rec.samples.iter().filter_map(|s| s.velocity_variance).collect();
    let monotone = v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    if drift <= 1e-10 && monotone {
        Ok(format!("mean-velocity drift {drift:.1e}, V nonincreasing"))
    } else {
        Err(format!("drift {drift:.1e}, monotone V {monotone}"))
    }
}

fn hk_order() -> Result<String, String> {
    let mut rng = seeded(2);
    let x: Vec<f64> = (0..60).map(|_| rng.random::<f64>()).collect();
    let e = Ensemble::from_scalars(x.clone()).map_err(|e| e.to_string())?;
    let model = ModelSpec::new(Model::Hk { network: NetworkSpec::metric(0.15) });
    let rec = integrate(&model, &e, &IntegratorSpec::rk4(0.05, 20.0), &mut rng).map_err(|e| e.to_string())?;
    let y = rec.final_state.positions();
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let kept = order.windows(2).all(|w| y[w[0]] <= y[w[1]] + 1e-12);
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let hull = y.iter().all(|v| *v >= lo - 1e-12 && *v <= hi + 1e-12);
    if kept && hull {
        Ok("order preserved, hull shrinks".into())
    } else {
        Err(format!("order {kept}, hull {hull}"))
    }
}

fn sphere_norm() -> Result<String, String> {
    let mut rng = seeded(3);
    let mut x = Vec::new();
    for _ in 0..6 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        x.extend(p.iter().map(|c| c / n));
    }
    let e = Ensemble::first_order(3, x).map_err(|e| e.to_string())?;
    let model = ModelSpec::new(Model::SphereConsensus { weights: StaticGraph::complete(6) });
    let rec = integrate(&model, &e, &IntegratorSpec::rk4(1e-3, 2.0), &mut rng).map_err(|e| e.to_string())?;
    let worst = rec
        .final_state
        .positions()
        .chunks_exact(3)
        .map(|r| (r.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    if worst <= 1e-6 {
        Ok(format!("max |‖x‖ − 1| = {worst:.1e}"))
    } else {
        Err(format!("norm drift {worst:.1e}"))
    }
}

fn meanfield_equivalence() -> Result<String, String> {
    let mut rng = seeded(4);
    let x: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
    let v: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let e = Ensemble::second_order(2, x, v).map_err(|e| e.to_string())?;
    let p = PotentialSpec::power_law(0.8);
    let mu = ParticleMeasure::new(e.clone()).map_err(|e| e.to_string())?;
    let a = empirical_cs_step(&mu, &p, 0.01).map_err(|e| e.to_string())?;
    let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> swarmlab_core::Result<()> {
        let (dx, dv) = dynamics::cs_rhs(s, &p)?;
        o[..dx.len()].copy_from_slice(&dx);
        o[dx.len()..].copy_from_slice(&dv);
        Ok(())
    };
    let b = rk4_step(&field, 0.0, &e, 0.01).map_err(|e| e.to_string())?;
    let gap = a
        .particles()
        .positions()
        .iter()
        .chain(a.particles().velocities().unwrap_or_default())
        .zip(b.positions().iter().chain(b.velocities().unwrap_or_default()))
        .map(|(u, w)| (u - w).abs())
        .fold(0.0, f64::max);
    if gap <= 1e-12 {
        Ok(format!("max gap {gap:.1e}"))
    } else {
        Err(format!("gap {gap:.1e}"))
    }
}

fn boltzmann_mean() -> Result<String, String> {
    let mut rng = seeded(5);
    let s: Vec<f64> = (0..200).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut pop = OpinionPopulation::new(s, 0.4, 1.0, 0.05).map_err(|e| e.to_string())?;
    let one = |_: f64, _: f64| 1.0;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = pop.mean();
        let expected = m + pop.beta() * (pop.target - m);
        pop = boltzmann_mc_step(&pop, &one, &mut rng).map_err(|e| e.to_string())?;
        worst = worst.max((pop.mean() - expected).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("mean recursion error {worst:.1e}"))
    } else {
        Err(format!("mean recursion error {worst:.1e}"))
    }
}

fn long_range_reproducible() -> Result<String, String> {
    let mut rng = seeded(6);
    let x: Vec<f64> = (0..50).map(|_| rng.random::<f64>()).collect();
    let e = Ensemble::from_scalars(x).map_err(|e| e.to_string())?;
    let spec = NetworkSpec::metric(0.1).with_long_range(swarmlab_core::network::LongRange::new(0.5));
    let a = Network::sample(spec.clone(), &e, &mut seeded(9)).map_err(|e| e.to_string())?;
    let b = Network::sample(spec, &e, &mut seeded(9)).map_err(|e| e.to_string())?;
    if a == b {
        Ok("distant links fixed by the seed".into())
    } else {
        Err("same seed gave different links".into())
    }
}

const CHECKS: &[(&str, Check)] = &[
    ("experiment determinism", determinism),
    ("alignment momentum and variance", cs_momentum),
    ("bounded-confidence order", hk_order),
    ("sphere norm", sphere_norm),
    ("empirical measure step", meanfield_equivalence),
    ("binary control mean", boltzmann_mean),
    ("distant-link sampling", long_range_reproducible),
];

pub fn run_checks() -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .map(|(name, f)| {
            let (passed, detail) = match f() {
                Ok(d) => (true, d),
                Err(d) => (false, d),
            };
            CheckOutcome { name, passed, detail }
        })
        .collect()
}
