//! Seeded Monte Carlo runs over a sweep grid.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use swarmlab_core::control::simulate_controlled_cs;
use swarmlab_core::dynamics::{integrate_observed, Model, ModelSpec, Observer, SampleOptions, Trajectory};
use swarmlab_core::potential::{Influence, PotentialSpec};
use swarmlab_core::rng::{stream, stream_id, SimRng};
use swarmlab_core::stats::{clusters_of, consensus_time, max_radius};
use swarmlab_core::{Ensemble, RunRecord};

use crate::config::{ExperimentConfig, Initial, ModelKind, SweepPoint};
use crate::LabError;

/// Terminal summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub point: usize,
    pub run: usize,
    /// Identifier of the random stream the run drew from.
    pub stream: u64,
    /// Cluster sizes, largest first.
    pub sizes: Vec<usize>,
    pub consensus: bool,
    pub consensus_time: Option<f64>,
    pub final_time: f64,
    pub equilibrium_at: Option<f64>,
    /// Full sample log, kept for the first run of a point when series are
    /// requested.
    pub record: Option<RunRecord>,
    pub trajectory: Option<Trajectory>,
}

impl RunSummary {
    pub fn clusters(&self) -> usize {
        self.sizes.len()
    }

    /// Consensus time, or `t_end` for runs that never got there.
    pub fn censored_consensus_time(&self, t_end: f64) -> f64 {
        self.consensus_time.unwrap_or(t_end)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub variable: String,
    pub value: String,
    pub runs: usize,
    pub mean_clusters: f64,
    /// Sample standard deviation of the cluster count.
    pub std: f64,
    pub consensus_fraction: f64,
    /// Mean over the runs that reached consensus.
    pub mean_consensus_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config_hash: String,
    pub points: Vec<SweepPoint>,
    /// Ordered by sweep point, then run index.
    pub runs: Vec<RunSummary>,
    pub aggregate: Vec<AggregateRow>,
}

impl ExperimentResult {
    pub fn runs_at(&self, point: usize) -> impl Iterator<Item = &RunSummary> {
        self.runs.iter().filter(move |r| r.point == point)
    }
}

pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() == 1 {
        return (m, 0.0);
    }
    let v = x.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn initial_state(cfg: &ExperimentConfig, rng: &mut SimRng) -> Result<Ensemble, LabError> {
    let len = cfg.agents * cfg.dim;
    let x: Vec<f64> = match &cfg.initial {
        Initial::Uniform01 => (0..len).map(|_| rng.random::<f64>()).collect(),
        Initial::Gaussian { mean, sd } => {
            let normal = Normal::new(*mean, *sd).map_err(|e| crate::ConfigError::single("init", e.to_string()))?;
            (0..len).map(|_| normal.sample(rng)).collect()
        }
        Initial::Explicit(x) => x.clone(),
    };
    Ok(match cfg.model {
        ModelKind::CuckerSmale { .. } => {
            let v = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
            Ensemble::second_order(cfg.dim, x, v)?
        }
        _ => Ensemble::first_order(cfg.dim, x)?,
    })
}

fn model_for(cfg: &ExperimentConfig, point: &SweepPoint) -> ModelSpec {
    ModelSpec::new(match cfg.model {
        ModelKind::Hk => Model::Hk { network: point.network.clone() },
        ModelKind::JabinMotsch { p } => Model::JabinMotsch { phi: PotentialSpec::JabinMotsch(Influence::Power { p }) },
        ModelKind::CuckerSmale { beta } => Model::CuckerSmale { potential: PotentialSpec::power_law(beta) },
    })
}

fn one_run(
    cfg: &ExperimentConfig,
    hash: &str,
    points: &[SweepPoint],
    point: usize,
    run: usize,
) -> Result<RunSummary, LabError> {
    let (p, r) = (point as u32, run as u32);
    let mut rng = stream(cfg.seed, p, r);
    let e0 = initial_state(cfg, &mut rng)?;
    let model = model_for(cfg, &points[point]);
    let first = run == 0;
    let opts =
        SampleOptions { edges: first && cfg.series, cluster_eps: (first && cfg.series).then_some(cfg.cluster_eps) };
    let mut traj = Trajectory::default();
    let mut observers: Vec<&mut dyn Observer> = Vec::new();
    if first && cfg.trajectory {
        observers.push(&mut traj);
    }
    let control = match cfg.model {
        ModelKind::CuckerSmale { beta } => {
            cfg.control.to_spec(cfg.integrator.dt, cfg.control_latch).map(|c| (PotentialSpec::power_law(beta), c))
        }
        _ => None,
    };
    let mut record = match control {
        Some((potential, spec)) => simulate_controlled_cs(&e0, &potential, &spec, &cfg.integrator)?.record,
        None => integrate_observed(&model, &e0, &cfg.integrator, opts, &mut rng, &mut observers)?,
    };
    record.seed = cfg.seed;
    record.config_hash = Some(hash.to_string());
    let invariant = |what: &str| LabError::Invariant { point, run, what: what.to_string() };
    if !record.is_time_monotone() {
        return Err(invariant("sample times are not strictly increasing"));
    }
    let clusters = clusters_of(&record.final_state, cfg.cluster_eps)?;
    if clusters.total() != cfg.agents {
        return Err(invariant("cluster sizes do not sum to N"));
    }
    let consensus = max_radius(&record.final_state) <= cfg.consensus_eps;
    Ok(RunSummary {
        point,
        run,
        stream: stream_id(cfg.seed, p, r),
        sizes: clusters.sizes,
        consensus,
        consensus_time: if consensus { consensus_time(&record, cfg.consensus_eps)? } else { None },
        final_time: record.final_time(),
        equilibrium_at: record.equilibrium_at,
        trajectory: (first && cfg.trajectory).then_some(traj),
        record: (first && cfg.series).then_some(record),
    })
}

#[cfg(feature = "parallel")]
fn execute<F>(tasks: &[(usize, usize)], jobs: Option<usize>, f: F) -> Result<Vec<RunSummary>, LabError>
where
    F: Fn(usize, usize) -> Result<RunSummary, LabError> + Sync,
{
    use rayon::prelude::*;
    let work = || tasks.par_iter().map(|&(p, r)| f(p, r)).collect();
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| crate::ConfigError::single("jobs", e.to_string()))?
            .install(work),
        None => work(),
    }
}

#[cfg(not(feature = "parallel"))]
fn execute<F>(tasks: &[(usize, usize)], _jobs: Option<usize>, f: F) -> Result<Vec<RunSummary>, LabError>
where
    F: Fn(usize, usize) -> Result<RunSummary, LabError> + Sync,
{
    tasks.iter().map(|&(p, r)| f(p, r)).collect()
}

/// `R` runs per sweep point; run `r` of point `p` draws from
/// `stream(seed, p, r)`, so results do not depend on `jobs`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentResult, LabError> {
    cfg.validate()?;
    if jobs == Some(0) {
        return Err(crate::ConfigError::single("jobs", "must be at least 1").into());
    }
    let hash = cfg.hash();
    let points = cfg.sweep_points();
    let tasks: Vec<(usize, usize)> = (0..points.len()).flat_map(|p| (0..cfg.runs).map(move |r| (p, r))).collect();
    let runs = execute(&tasks, jobs, |p, r| one_run(cfg, &hash, &points, p, r))?;
    let aggregate = points
        .iter()
        .enumerate()
        .map(|(k, pt)| {
            let here: Vec<&RunSummary> = runs.iter().filter(|r| r.point == k).collect();
            let counts: Vec<f64> = here.iter().map(|r| r.clusters() as f64).collect();
            let (mean, std) = mean_std(&counts);
            let times: Vec<f64> = here.iter().filter_map(|r| r.consensus_time).collect();
            AggregateRow {
                variable: pt.variable.to_string(),
                value: pt.value.to_string(),
                runs: here.len(),
                mean_clusters: mean,
                std,
                consensus_fraction: here.iter().filter(|r| r.consensus).count() as f64 / here.len() as f64,
                mean_consensus_time: (!times.is_empty()).then(|| mean_std(&times).0),
            }
        })
        .collect();
    Ok(ExperimentResult { config_hash: hash, points, runs, aggregate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig::parse("agents=30\nruns=4\nsweep.variable=r\nsweep.values=0.1,0.3\nintegrator.t_end=20\n")
            .unwrap()
    }

    #[test]
    fn deterministic_and_ordered() {
        let cfg = small();
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, Some(1)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs.len(), 8);
        assert!(a.runs.windows(2).all(|w| (w[0].point, w[0].run) < (w[1].point, w[1].run)));
        assert_eq!(a.aggregate.len(), 2);
        assert!(a.aggregate[0].mean_clusters >= a.aggregate[1].mean_clusters);
    }

    #[test]
    fn runs_differ_across_streams() {
        let a = run_experiment(&small(), None).unwrap();
        assert_ne!(a.runs[0].stream, a.runs[1].stream);
        assert!(a.runs.iter().all(|r| r.sizes.iter().sum::<usize>() == 30));
    }

    #[test]
    fn mean_std_small_cases() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
    }
}
