//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! line fails. Runs as a plain binary (`harness = false`).

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use swarmlab::experiment::mean_std;
use swarmlab::{presets, run_experiment, ExperimentConfig, ExperimentResult};
use swarmlab_core::control::{
    flocking_region, simulate_controlled_cs, sparse_optimality_probe, ControlLaw, ControlSpec,
};
use swarmlab_core::dynamics::{
    cs_rhs, hk_rhs, integrate, integrate_observed, ptw_step, rk4_step, sphere_rhs, IntegratorSpec, Model, ModelSpec,
    PtwParams, PtwState, SampleOptions, Trajectory,
};
use swarmlab_core::meanfield::{boltzmann_mc_step, empirical_cs_step, OpinionPopulation, ParticleMeasure};
use swarmlab_core::network::{Network, NetworkSpec, StaticGraph};
use swarmlab_core::potential::{Influence, PotentialSpec};
use swarmlab_core::rng::{seeded, SimRng};
use swarmlab_core::stats::{barycenter_and_mean_velocity, clusters_of, velocity_variance};
use swarmlab_core::Ensemble;

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform(rng: &mut SimRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_cs(rng: &mut SimRng, n: usize, d: usize) -> Ensemble {
    let x = uniform(rng, n * d, 0.0, 1.0);
    let v = uniform(rng, n * d, -1.0, 1.0);
    Ensemble::second_order(d, x, v).unwrap()
}

/// Same positions, velocity deviations rescaled so that `√V = target`.
fn with_velocity_spread(e: &Ensemble, target: f64) -> Ensemble {
    let d = e.dim();
    let (_, vbar) = barycenter_and_mean_velocity(e).unwrap();
    let s = target / velocity_variance(e).unwrap().sqrt();
    let v: Vec<f64> =
        e.velocities().unwrap().iter().enumerate().map(|(k, vk)| vbar[k % d] + s * (vk - vbar[k % d])).collect();
    Ensemble::second_order(d, e.positions().to_vec(), v).unwrap()
}

fn preset_result(name: &str) -> (ExperimentConfig, ExperimentResult) {
    let cfg = presets::preset(name).unwrap_or_else(|| panic!("missing preset {name}"));
    let res = run_experiment(&cfg, None).unwrap();
    (cfg, res)
}

/// `m[i+1] ≤ m[i] + s[i]` along the sweep.
fn nonincreasing_within_std(m: &[f64], s: &[f64]) -> bool {
    m.windows(2).zip(s).all(|(w, s)| w[1] <= w[0] + s)
}

fn fmt_list(x: &[f64]) -> String {
    x.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(", ")
}

fn cs_invariants() -> Outcome {
    let mut rng = seeded(101);
    let model = ModelSpec::new(Model::CuckerSmale { potential: PotentialSpec::power_law(1.0) });
    let integ = IntegratorSpec::rk4(1e-3, 20.0).with_stride(10).without_early_exit();
    let (mut drift, mut rise) = (0.0_f64, f64::NEG_INFINITY);
    for _ in 0..100 {
        let e0 = random_cs(&mut rng, 20, 2);
        let (_, m0) = barycenter_and_mean_velocity(&e0).unwrap();
        let mut traj = Trajectory::default();
        let rec =
            integrate_observed(&model, &e0, &integ, SampleOptions::default(), &mut rng, &mut [&mut traj]).unwrap();
        for s in &traj.states {
            let (_, m) = barycenter_and_mean_velocity(s).unwrap();
            drift = drift.max(m.iter().zip(&m0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
        }
        let v: Vec<f64> = rec.samples.iter().map(|s| s.velocity_variance.unwrap()).collect();
        for w in v.windows(2) {
            rise = rise.max(w[1] - w[0]);
        }
    }
    verdict(drift <= 1e-8 && rise <= 1e-10, format!("max |v̄(t) − v̄(0)| = {drift:.2e}, largest V increase = {rise:.2e}"))
}

fn two_agent() -> Outcome {
    // Relative coordinates of a two-agent alignment system with a(s) = 1/(1+s²)
    // obey x' = v, v' = −v/(1+x²), the reduced system for a(x) = 2/(1+x²).
    let e0 = Ensemble::second_order(1, vec![0.0, 0.0], vec![1.0, -1.0]).unwrap();
    let model = ModelSpec::new(Model::CuckerSmale { potential: PotentialSpec::PowerLaw { beta: 1.0, amplitude: 1.0 } });
    let integ = IntegratorSpec::rk4(1e-3, 100.0).with_stride(10).without_early_exit();
    let mut traj = Trajectory::default();
    integrate_observed(&model, &e0, &integ, SampleOptions::default(), &mut seeded(0), &mut [&mut traj]).unwrap();
    let (mut err, mut vmin) = (0.0_f64, f64::INFINITY);
    for s in &traj.states {
        let p = s.positions();
        let v = s.velocities().unwrap();
        let (x, w) = (p[0] - p[1], v[0] - v[1]);
        err = err.max((w - (2.0 - x.atan())).abs());
        vmin = vmin.min(w);
    }
    let floor = 2.0 - std::f64::consts::FRAC_PI_2;
    verdict(
        err <= 1e-6 && vmin > floor - 1e-6,
        format!(
            "max |v − (2 − arctan x)| = {err:.2e}, min v = {vmin:.6} (floor {floor:.6}), {} samples",
            traj.states.len()
        ),
    )
}

fn flocking_region_decay() -> Outcome {
    let mut rng = seeded(103);
    let p = PotentialSpec::power_law(1.0);
    let integ = IntegratorSpec::rk4(1e-2, 50.0).with_stride(100).without_early_exit();
    let model = ModelSpec::new(Model::CuckerSmale { potential: p.clone() });
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let base = random_cs(&mut rng, 20, 2);
        let threshold = flocking_region(&base, &p).unwrap().threshold;
        let e0 = with_velocity_spread(&base, 0.9 * threshold * rng.random_range(0.05..=1.0));
        let v0 = velocity_variance(&e0).unwrap();
        let rec = integrate(&model, &e0, &integ, &mut rng).unwrap();
        worst = worst.max(velocity_variance(&rec.final_state).unwrap() / v0);
    }
    verdict(worst <= 1e-3, format!("max V(50)/V(0) = {worst:.2e} over 50 states"))
}

fn sparse_decay() -> Outcome {
    let mut rng = seeded(104);
    let p = PotentialSpec::power_law(1.0);
    let (n, m) = (10usize, 1.0);
    let spec = ControlSpec::new(ControlLaw::Sparse { bound: m });
    let integ = IntegratorSpec::rk4(1e-2, 200.0).with_stride(10).without_early_exit();
    let rate = 2.0 * m / n as f64;
    let (mut excess, mut late, mut max_active, mut entered) = (f64::NEG_INFINITY, 0.0_f64, 0usize, 0usize);
    let mut entry_times = Vec::new();
    let mut states = 0;
    while states < 20 {
        let base = random_cs(&mut rng, n, 2);
        let threshold = flocking_region(&base, &p).unwrap().threshold;
        let e0 = with_velocity_spread(&base, threshold * rng.random_range(2.0..6.0));
        if flocking_region(&e0, &p).unwrap().inside {
            continue;
        }
        states += 1;
        let v0 = velocity_variance(&e0).unwrap();
        let run = simulate_controlled_cs(&e0, &p, &spec, &integ).unwrap();
        let off = run.switched_off_at.unwrap_or(f64::INFINITY);
        if off.is_finite() {
            entered += 1;
            entry_times.push(off);
        }
        for s in &run.record.samples {
            let c = s.control.as_ref().unwrap();
            max_active = max_active.max(c.active_count());
            if s.t <= off {
                let bound = v0.sqrt() - rate * s.t + 1e-3;
                excess = excess.max(s.velocity_variance.unwrap().sqrt() - bound);
            }
        }
        late = late.max(velocity_variance(&run.record.final_state).unwrap() / v0);
    }
    verdict(
        excess <= 0.0 && entered == 20 && late < 1e-6 && max_active <= 1,
        format!(
            "largest √V − (√V0 − 2(M/N)t + 1e-3) = {excess:.3e}; {entered}/20 entered the region (mean entry t = {:.2}); max V(T)/V0 = {late:.2e}; max active = {max_active}",
            mean_std(&entry_times).0
        ),
    )
}

fn sparse_optimality() -> Outcome {
    let mut rng = seeded(105);
    let p = PotentialSpec::power_law(1.0);
    let (mut violations, mut active) = (0, 0);
    for _ in 0..50 {
        let e = random_cs(&mut rng, 10, 2);
        let r = sparse_optimality_probe(&e, &p, 1.0, 100, &mut rng).unwrap();
        violations += r.violations;
        active += usize::from(r.sparse_active);
    }
    verdict(
        violations == 0,
        format!("{violations} of 5000 random controls beat the sparse law ({active}/50 states had it active)"),
    )
}

fn fig4() -> Outcome {
    let (_, metric) = preset_result("fig4_metric");
    let (_, topo) = preset_result("fig4_topological");
    let stats = |res: &ExperimentResult| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let v = res.points.iter().map(|p| p.value.to_string().parse::<f64>().unwrap()).collect();
        (v, res.aggregate.iter().map(|a| a.mean_clusters).collect(), res.aggregate.iter().map(|a| a.std).collect())
    };
    let (r, mr, sr) = stats(&metric);
    let (k, mk, sk) = stats(&topo);
    let ok_r = nonincreasing_within_std(&mr, &sr) && r.iter().zip(&mr).all(|(r, m)| *r > 0.2 + 1e-12 || *m > 1.0);
    let ok_k = nonincreasing_within_std(&mk, &sk) && k.iter().zip(&mk).all(|(k, m)| *k >= 10.0 || *m > 1.0);
    verdict(ok_r && ok_k, format!("metric r={:?}: [{}]; topological k={:?}: [{}]", r, fmt_list(&mr), k, fmt_list(&mk)))
}

fn fig5b() -> Outcome {
    let (_, res) = preset_result("fig5b");
    let f = res.aggregate[0].consensus_fraction;
    verdict((0.01..=0.06).contains(&f), format!("consensus in {:.1}% of {} runs", 100.0 * f, res.runs.len()))
}

fn fig6() -> Outcome {
    let (cfg, res) = preset_result("fig6_twocluster");
    let total = res.runs.len();
    let near = cfg.agents.saturating_sub(5);
    let two: Vec<&[usize]> =
        res.runs.iter().map(|r| r.sizes.as_slice()).filter(|s| s.len() >= 2 && s[0] + s[1] >= near).collect();
    let exact2 = res.runs.iter().filter(|r| r.sizes.len() == 2).count();
    let mut larger: BTreeMap<usize, usize> = BTreeMap::new();
    for s in &two {
        *larger.entry(s[0]).or_default() += 1;
    }
    let (mode, mode_count) =
        larger.iter().max_by_key(|(s, c)| (**c, std::cmp::Reverse(**s))).map(|(s, c)| (*s, *c)).unwrap_or((0, 0));
    let even = two.iter().filter(|s| s[0] == 50 && s[1] == 50).count();
    let frac = two.len() as f64 / total as f64;
    verdict(
        frac >= 0.8 && (50..=58).contains(&mode) && even < mode_count,
        format!(
            "{:.1}% of runs have two clusters holding ≥ {near} agents ({exact2} with no stragglers); larger-cluster mode {mode} ({mode_count} runs); (50,50) in {even} runs",
            100.0 * frac
        ),
    )
}

fn fig7() -> Outcome {
    let (_, res) = preset_result("fig7_longrange");
    let mut with = None;
    let mut without = None;
    for (p, a) in res.points.iter().zip(&res.aggregate) {
        if p.value.to_string() == "off" {
            without = Some(a.consensus_fraction);
        } else {
            with = Some(a.consensus_fraction);
        }
    }
    let (w, wo) = (with.unwrap(), without.unwrap());
    verdict(
        w >= 0.95 && wo <= 0.05,
        format!("consensus with distant links {:.1}%, without {:.1}%", 100.0 * w, 100.0 * wo),
    )
}

fn fig8() -> Outcome {
    let (cfg, times) = preset_result("fig8_consensus_time");
    let t_end = cfg.integrator.t_end;
    let (mut mt, mut st) = (Vec::new(), Vec::new());
    for k in 0..times.points.len() {
        let t: Vec<f64> = times.runs_at(k).map(|r| r.censored_consensus_time(t_end)).collect();
        let (m, s) = mean_std(&t);
        mt.push(m);
        st.push(s);
    }
    let (_, counts) = preset_result("fig8_cluster_count");
    let mc: Vec<f64> = counts.aggregate.iter().map(|a| a.mean_clusters).collect();
    let sc: Vec<f64> = counts.aggregate.iter().map(|a| a.std).collect();
    let a: Vec<String> = times.points.iter().map(|p| p.value.to_string()).collect();
    verdict(
        nonincreasing_within_std(&mt, &st) && nonincreasing_within_std(&mc, &sc),
        format!(
            "a = {}: consensus time [{}] (censored at {t_end}); topological clusters [{}]",
            a.join(", "),
            fmt_list(&mt),
            fmt_list(&mc)
        ),
    )
}

fn jm_separation() -> Outcome {
    let mut rng = seeded(111);
    let model = ModelSpec::new(Model::JabinMotsch { phi: PotentialSpec::JabinMotsch(Influence::Power { p: 2.0 }) });
    let integ = IntegratorSpec::rk4(0.05, 500.0).with_stride(100);
    let mut closest = f64::INFINITY;
    let mut counts = Vec::new();
    for _ in 0..100 {
        let e0 = Ensemble::from_scalars(uniform(&mut rng, 50, 0.0, 5.0)).unwrap();
        let rec = integrate(&model, &e0, &integ, &mut rng).unwrap();
        let c = clusters_of(&rec.final_state, 1e-6).unwrap();
        let mut centers: Vec<f64> = c.centers.iter().map(|x| x[0]).collect();
        centers.sort_by(f64::total_cmp);
        for w in centers.windows(2) {
            closest = closest.min(w[1] - w[0]);
        }
        counts.push(centers.len() as f64);
    }
    verdict(
        closest >= 0.99,
        format!("closest pair of centers {closest:.4}; mean cluster count {:.2}", mean_std(&counts).0),
    )
}

fn empirical_equivalence() -> Outcome {
    let mut rng = seeded(112);
    let p = PotentialSpec::power_law(0.7);
    let mut gap = 0.0_f64;
    let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> swarmlab_core::Result<()> {
        let (dx, dv) = cs_rhs(s, &p)?;
        o[..dx.len()].copy_from_slice(&dx);
        o[dx.len()..].copy_from_slice(&dv);
        Ok(())
    };
    for _ in 0..100 {
        let n = rng.random_range(2..40);
        let e = random_cs(&mut rng, n, 2);
        let mu = ParticleMeasure::new(e.clone()).unwrap();
        let a = empirical_cs_step(&mu, &p, 0.01).unwrap().into_ensemble();
        let b = rk4_step(&field, 0.0, &e, 0.01).unwrap();
        let pa = a.positions().iter().chain(a.velocities().unwrap());
        let pb = b.positions().iter().chain(b.velocities().unwrap());
        gap = pa.zip(pb).map(|(u, w)| (u - w).abs()).fold(gap, f64::max);
    }
    verdict(gap <= 1e-12, format!("max gap {gap:.2e} over 100 states"))
}

fn boltzmann() -> Outcome {
    let mut rng = seeded(113);
    let target = 0.5;
    let mut pop = OpinionPopulation::new(uniform(&mut rng, 1000, -1.0, 1.0), target, 1.0, 0.05).unwrap();
    let one = |_: f64, _: f64| 1.0;
    let mut rec_err = 0.0_f64;
    for _ in 0..500 {
        let m = pop.mean();
        let expect = m + pop.beta() * (target - m);
        pop = boltzmann_mc_step(&pop, &one, &mut rng).unwrap();
        rec_err = rec_err.max((pop.mean() - expect).abs());
    }
    let (gap, var) = ((pop.mean() - target).abs(), pop.variance());
    verdict(
        rec_err <= 1e-12 && gap <= 1e-6 && var <= 1e-4 && pop.clamped == 0,
        format!("recursion error {rec_err:.2e}; |m − x_d| = {gap:.2e}; variance {var:.2e}; {} clamped", pop.clamped),
    )
}

fn sphere() -> Outcome {
    let mut rng = seeded(114);
    let mut anti = 0.0_f64;
    for _ in 0..20 {
        let g: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
        let r = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        let x: Vec<f64> = g.iter().map(|c| c / r).chain(g.iter().map(|c| -c / r)).collect();
        let mut w = StaticGraph::empty(2);
        w.connect(0, 1, rng.random_range(0.1..2.0));
        let e = Ensemble::first_order(3, x).unwrap();
        let f = sphere_rhs(&e, &w).unwrap();
        anti = anti.max(f.iter().map(|c| c * c).sum::<f64>().sqrt());
    }
    let model = ModelSpec::new(Model::SphereConsensus { weights: StaticGraph::complete(10) });
    let integ = IntegratorSpec::rk4(1e-3, 10.0).with_stride(100).without_early_exit();
    let mut drift = 0.0_f64;
    for _ in 0..10 {
        let mut x = Vec::new();
        for _ in 0..10 {
            let g: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let r = g.iter().map(|c| c * c).sum::<f64>().sqrt();
            x.extend(g.iter().map(|c| c / r));
        }
        let e0 = Ensemble::first_order(3, x).unwrap();
        let mut traj = Trajectory::default();
        integrate_observed(&model, &e0, &integ, SampleOptions::default(), &mut rng, &mut [&mut traj]).unwrap();
        for s in &traj.states {
            for xi in s.positions().chunks_exact(3) {
                drift = drift.max((xi.iter().map(|c| c * c).sum::<f64>().sqrt() - 1.0).abs());
            }
        }
    }
    verdict(
        anti <= 1e-14 && drift <= 1e-6,
        format!("antipodal rhs norm {anti:.1e}; max |‖x‖ − 1| = {drift:.2e} over 10 runs"),
    )
}

fn stationary(x: &[f64], spec: &NetworkSpec) -> bool {
    let e = Ensemble::from_scalars(x.to_vec()).unwrap();
    hk_rhs(&e, &Network::local(spec.clone())).unwrap().iter().all(|v| *v == 0.0)
}

fn equilibrium_strata() -> Outcome {
    let mut rng = seeded(115);
    let r = 0.3;
    let metric = NetworkSpec::metric(r);
    let mut checked = 0;
    let mut bad = Vec::new();
    let gap = |rng: &mut SimRng| r + rng.random_range(1e-3..2.0);
    for _ in 0..20 {
        let a = rng.random_range(-2.0..2.0);
        let mut sets: Vec<(&str, Vec<f64>)> = vec![
            ("N=2 line", vec![a, a]),
            ("N=2 x1 − x2 > r", vec![a + gap(&mut rng), a]),
            ("N=2 x2 − x1 > r", vec![a, a + gap(&mut rng)]),
            ("N=3 line", vec![a, a, a]),
        ];
        for k in 0..3 {
            let mut up = vec![a; 3];
            up[k] = a + gap(&mut rng);
            sets.push(("N=3 pair below single", up));
            let mut down = vec![a; 3];
            down[k] = a - gap(&mut rng);
            sets.push(("N=3 pair above single", down));
        }
        for perm in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            let lo = a;
            let mid = lo + gap(&mut rng);
            let hi = mid + gap(&mut rng);
            let mut x = vec![0.0; 3];
            x[perm[0]] = lo;
            x[perm[1]] = mid;
            x[perm[2]] = hi;
            sets.push(("N=3 separated", x));
        }
        for (name, x) in sets {
            checked += 1;
            if !stationary(&x, &metric) {
                bad.push(format!("{name} {x:?}"));
            }
        }
        let topo = NetworkSpec::topological(2);
        let b = a + rng.random_range(0.01..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        checked += 1;
        if !stationary(&[a; 5], &topo) {
            bad.push("k=2 line".into());
        }
        for i in 0..5 {
            for j in (i + 1)..5 {
                let mut x = vec![b; 5];
                x[i] = a;
                x[j] = a;
                checked += 1;
                if !stationary(&x, &topo) {
                    bad.push(format!("k=2 pair ({i},{j}) {x:?}"));
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{checked} sampled equilibria have zero rhs")
        } else {
            format!("{} of {checked} moved, first: {}", bad.len(), bad[0])
        },
    )
}

fn ptw() -> Outcome {
    let mut rng = seeded(116);
    let p = PtwParams { speed: 1.0, relax: 1.0, diffusion: 0.5 };
    let (kappa0, dt, paths) = (1.0, 1e-3, 10_000);
    let mut w: Vec<PtwState> = (0..paths)
        .map(|_| PtwState { x: [0.0, 0.0], theta: rng.random_range(0.0..std::f64::consts::TAU), kappa: kappa0 })
        .collect();
    let checkpoints = [500usize, 1000, 2000];
    let mut worst = 0.0_f64;
    let mut parts = Vec::new();
    let mut step = 0;
    for &c in &checkpoints {
        while step < c {
            ptw_step(&mut w, &p, dt, &mut rng).unwrap();
            step += 1;
        }
        let t = c as f64 * dt;
        let k: Vec<f64> = w.iter().map(|s| s.kappa).collect();
        let (m, s) = mean_std(&k);
        let se = s / (paths as f64).sqrt();
        let z = (m - kappa0 * (-p.relax * t).exp()).abs() / se;
        worst = worst.max(z);
        parts.push(format!("t={t}: {z:.2} SE"));
    }
    verdict(worst <= 3.0, parts.join(", "))
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("alignment invariants", cs_invariants),
    ("two-agent closed form", two_agent),
    ("flocking region", flocking_region_decay),
    ("sparse control decay", sparse_decay),
    ("sparse instantaneous optimality", sparse_optimality),
    ("cluster count trends", fig4),
    ("consensus fraction at r = 0.2", fig5b),
    ("two-cluster structure", fig6),
    ("distant-link consensus", fig7),
    ("distant-link exponent monotonicity", fig8),
    ("influence-kernel cluster separation", jm_separation),
    ("empirical-measure equivalence", empirical_equivalence),
    ("binary control convergence", boltzmann),
    ("sphere dynamics", sphere),
    ("equilibrium strata", equilibrium_strata),
    ("turning-walker curvature mean", ptw),
];

fn main() -> ExitCode {
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in CRITERIA {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = f();
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(d) => println!("PASS {name} [{secs:.1}s]: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {d}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
