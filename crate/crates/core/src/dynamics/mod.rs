//! Model right-hand sides, discrete update rules and time steppers.
//!
//! [`integrate`] advances any [`ModelSpec`] from an initial [`Ensemble`]
//! and returns a [`RunRecord`] sampled every `stride` steps. ODE models go
//! through explicit Euler, RK4 or Euler–Maruyama; Vicsek, voter and Sznajd
//! apply their own per-step rules.

pub mod discrete;
pub mod first_order;
pub mod ptw;
pub mod second_order;

pub use discrete::{sznajd_apply, sznajd_step, vicsek_step, voter_step, SpinEvent};
pub use first_order::{hk_rhs, jm_rhs, linear_protocol_rhs, sphere_rhs};
pub use ptw::{ptw_step, PtwParams, PtwState};
pub use second_order::{cs_rhs, dorsogna_rhs, migration_rhs};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{max_row_norm, norm};
use crate::network::{edge_count, graph_edge_count, metric_neighbors, Network, NetworkSpec, Scaling, StaticGraph};
use crate::potential::{Morse, PotentialSpec};
use crate::record::{RunRecord, Sample};
use crate::stats::{clusters_of, max_radius, spatial_variance, velocity_variance};
use crate::{Ensemble, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    /// Bounded confidence; the degree scaling lives in the network spec.
    Hk {
        network: NetworkSpec,
    },
    JabinMotsch {
        phi: PotentialSpec,
    },
    LinearProtocol {
        weights: StaticGraph,
        scaling: Scaling,
    },
    SphereConsensus {
        weights: StaticGraph,
    },
    CuckerSmale {
        potential: PotentialSpec,
    },
    /// Migration towards `target` with fixed per-agent gains `alpha`.
    Migration {
        potential: PotentialSpec,
        target: Vec<f64>,
        alpha: Vec<f64>,
    },
    DOrsogna {
        propulsion: f64,
        friction: f64,
        morse: Morse,
    },
    Vicsek {
        radius: f64,
        speed: f64,
        noise: f64,
    },
    Voter {
        graph: StaticGraph,
    },
    /// One-dimensional ring.
    Sznajd {
        ferro_prob: f64,
    },
    /// Headings come from the initial velocities; every walker starts with
    /// curvature `kappa0`.
    Ptw {
        params: PtwParams,
        kappa0: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    /// Additive white-noise amplitude `σ` on the consensus variable.
    pub noise: f64,
}

impl ModelSpec {
    pub fn new(model: Model) -> Self {
        Self { model, noise: 0.0 }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise = sigma;
        self
    }

    pub fn is_stochastic(&self) -> bool {
        self.noise > 0.0 || matches!(self.model, Model::Ptw { .. })
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self.model, Model::Vicsek { .. } | Model::Voter { .. } | Model::Sznajd { .. })
    }

    pub fn is_second_order(&self) -> bool {
        matches!(
            self.model,
            Model::CuckerSmale { .. }
                | Model::Migration { .. }
                | Model::DOrsogna { .. }
                | Model::Vicsek { .. }
                | Model::Ptw { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise >= 0.0) {
            return Err(Error::invalid("noise", "must be nonnegative"));
        }
        if self.noise > 0.0 && self.is_discrete() {
            return Err(Error::Unsupported("additive noise on a discrete-time model".into()));
        }
        match &self.model {
            Model::Hk { network } => network.validate(),
            Model::JabinMotsch { phi } | Model::CuckerSmale { potential: phi } => phi.validate(),
            Model::Migration { potential, alpha, .. } => {
                potential.validate()?;
                second_order::check_alpha(alpha, alpha.len())
            }
            Model::DOrsogna { propulsion, friction, morse } => {
                if !(*propulsion >= 0.0 && *friction >= 0.0) {
                    return Err(Error::invalid("propulsion/friction", "must be nonnegative"));
                }
                Morse::new(morse.c_r, morse.c_a, morse.l_r, morse.l_a).map(|_| ())
            }
            Model::Vicsek { radius, speed, noise } => {
                if !(*radius > 0.0) {
                    return Err(Error::invalid("radius", "must be positive"));
                }
                if !(*speed >= 0.0 && *noise >= 0.0) {
                    return Err(Error::invalid("speed/noise", "must be nonnegative"));
                }
                Ok(())
            }
            Model::Sznajd { ferro_prob } if !(0.0..=1.0).contains(ferro_prob) => {
                Err(Error::invalid("ferro_prob", "must lie in [0, 1]"))
            }
            Model::Ptw { params, .. } => params.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    ExplicitEuler,
    #[default]
    Rk4,
    EulerMaruyama,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Steps between logged samples.
    pub stride: usize,
    pub renormalize_sphere: bool,
    /// Stop once the largest per-agent rhs norm falls below this value.
    pub early_exit: Option<f64>,
}

impl Default for IntegratorSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::Rk4,
            dt: 1e-3,
            t_end: 1.0,
            stride: 100,
            renormalize_sphere: false,
            early_exit: Some(1e-12),
        }
    }
}

impl IntegratorSpec {
    pub fn rk4(dt: f64, t_end: f64) -> Self {
        Self { dt, t_end, ..Self::default() }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    pub fn without_early_exit(mut self) -> Self {
        self.early_exit = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("{} is not positive", self.dt)));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::invalid("t_end", format!("{} is not positive", self.t_end)));
        }
        if self.dt > self.t_end {
            return Err(Error::invalid("dt", "exceeds t_end"));
        }
        if self.stride == 0 {
            return Err(Error::invalid("stride", "must be at least 1"));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn steps(&self) -> usize {
        ((self.t_end / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    fn time_at(&self, k: usize) -> f64 {
        (k as f64 * self.dt).min(self.t_end)
    }
}

/// What to record at each sample besides `X`, `V` and the radius.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SampleOptions {
    pub edges: bool,
    pub cluster_eps: Option<f64>,
}

/// Called with the state at every logged sample.
pub trait Observer {
    fn observe(&mut self, t: f64, e: &Ensemble) -> Result<()>;
}

/// Stores every sampled state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Ensemble>,
}

impl Observer for Trajectory {
    fn observe(&mut self, t: f64, e: &Ensemble) -> Result<()> {
        self.times.push(t);
        self.states.push(e.clone());
        Ok(())
    }
}

/// Time derivative of the flattened state `[x; v]` (or `x` for first-order
/// ensembles).
pub trait VectorField {
    fn eval(&self, t: f64, e: &Ensemble, out: &mut [f64]) -> Result<()>;
}

impl<F> VectorField for F
where
    F: Fn(f64, &Ensemble, &mut [f64]) -> Result<()>,
{
    fn eval(&self, t: f64, e: &Ensemble, out: &mut [f64]) -> Result<()> {
        self(t, e, out)
    }
}

pub(crate) fn flatten(e: &Ensemble) -> Vec<f64> {
    let mut y = e.positions().to_vec();
    if let Some(v) = e.velocities() {
        y.extend_from_slice(v);
    }
    y
}

pub(crate) fn unflatten(dim: usize, second_order: bool, y: Vec<f64>) -> Ensemble {
    if second_order {
        let half = y.len() / 2;
        let mut x = y;
        let v = x.split_off(half);
        Ensemble::from_parts_unchecked(dim, x, Some(v))
    } else {
        Ensemble::from_parts_unchecked(dim, y, None)
    }
}

fn shifted(e: &Ensemble, y: &[f64], k: &[f64], h: f64) -> Ensemble {
    let z: Vec<f64> = y.iter().zip(k).map(|(a, b)| a + h * b).collect();
    unflatten(e.dim(), e.has_velocities(), z)
}

/// One explicit Euler step.
pub fn euler_step<F: VectorField + ?Sized>(field: &F, t: f64, e: &Ensemble, dt: f64) -> Result<Ensemble> {
    let y = flatten(e);
    let mut k = vec![0.0; y.len()];
    field.eval(t, e, &mut k)?;
    Ok(shifted(e, &y, &k, dt))
}

/// One classical Runge–Kutta step.
pub fn rk4_step<F: VectorField + ?Sized>(field: &F, t: f64, e: &Ensemble, dt: f64) -> Result<Ensemble> {
    let y = flatten(e);
    let mut k1 = vec![0.0; y.len()];
    field.eval(t, e, &mut k1)?;
    rk4_from(field, t, e, &y, &k1, dt)
}

fn rk4_from<F: VectorField + ?Sized>(
    field: &F,
    t: f64,
    e: &Ensemble,
    y: &[f64],
    k1: &[f64],
    dt: f64,
) -> Result<Ensemble> {
    let n = y.len();
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    field.eval(t + 0.5 * dt, &shifted(e, y, k1, 0.5 * dt), &mut k2)?;
    field.eval(t + 0.5 * dt, &shifted(e, y, &k2, 0.5 * dt), &mut k3)?;
    field.eval(t + dt, &shifted(e, y, &k3, dt), &mut k4)?;
    let z: Vec<f64> = (0..n).map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    Ok(unflatten(e.dim(), e.has_velocities(), z))
}

/// Largest per-agent norm of a flattened derivative.
pub(crate) fn max_rhs_norm(k: &[f64], dim: usize) -> f64 {
    max_row_norm(k, dim)
}

/// The ODE models as a [`VectorField`].
struct ModelField<'a> {
    model: &'a Model,
    network: Option<Network>,
}

impl VectorField for ModelField<'_> {
    fn eval(&self, _t: f64, e: &Ensemble, out: &mut [f64]) -> Result<()> {
        let npos = e.positions().len();
        match self.model {
            Model::Hk { .. } => {
                let net = self.network.as_ref().ok_or_else(|| Error::Unsupported("network not bound".into()))?;
                first_order::hk_rhs_into(e, net, out)
            }
            Model::JabinMotsch { phi } => first_order::jm_rhs_into(e, phi, out),
            Model::LinearProtocol { weights, scaling } => first_order::linear_protocol_into(e, weights, *scaling, out),
            Model::SphereConsensus { weights } => first_order::sphere_into(e, weights, out),
            Model::CuckerSmale { potential } => {
                let v = e.require_velocities()?;
                let (dx, dv) = out.split_at_mut(npos);
                dx.copy_from_slice(v);
                second_order::alignment_into(e.positions(), v, e.dim(), potential, dv);
                Ok(())
            }
            Model::Migration { potential, target, alpha } => {
                let v = e.require_velocities()?;
                let (dx, dv) = out.split_at_mut(npos);
                dx.copy_from_slice(v);
                second_order::migration_into(e.positions(), v, e.dim(), potential, target, alpha, dv);
                Ok(())
            }
            Model::DOrsogna { propulsion, friction, morse } => {
                let v = e.require_velocities()?;
                let (dx, dv) = out.split_at_mut(npos);
                dx.copy_from_slice(v);
                second_order::dorsogna_into(e, *propulsion, *friction, morse, dv)
            }
            _ => Err(Error::Unsupported("model has no continuous-time vector field".into())),
        }
    }
}

fn check_initial(model: &ModelSpec, e: &Ensemble) -> Result<()> {
    let second = model.is_second_order();
    if second && !e.has_velocities() {
        return Err(Error::MissingVelocities);
    }
    match &model.model {
        Model::SphereConsensus { weights } => {
            sphere_rhs(e, weights)?;
        }
        Model::Migration { target, alpha, .. } => {
            second_order::check_alpha(alpha, e.len())?;
            if target.len() != e.dim() {
                return Err(Error::DimensionMismatch { expected: e.dim(), found: target.len() });
            }
        }
        Model::Vicsek { .. } | Model::Ptw { .. } if e.dim() != 2 => {
            return Err(Error::Unsupported(format!("model needs d = 2, got d = {}", e.dim())));
        }
        Model::Voter { graph } if graph.nodes() != e.len() => {
            return Err(Error::DimensionMismatch { expected: e.len(), found: graph.nodes() });
        }
        Model::Voter { .. } | Model::Sznajd { .. } if e.spins().is_none() => return Err(Error::MissingSpins),
        _ => {}
    }
    Ok(())
}

struct Sampler<'a, 'b> {
    opts: SampleOptions,
    model: &'a Model,
    network: Option<&'a Network>,
    observers: &'a mut [&'b mut dyn Observer],
}

impl Sampler<'_, '_> {
    fn take(&mut self, record: &mut RunRecord, t: f64, e: &Ensemble) -> Result<()> {
        if record.samples.last().is_some_and(|s| s.t >= t) {
            return Ok(());
        }
        let mut s = Sample::bare(t, spatial_variance(e), max_radius(e));
        s.velocity_variance = velocity_variance(e).ok();
        if self.opts.edges {
            s.edges = match (self.model, self.network) {
                (Model::Hk { .. }, Some(net)) => Some(edge_count(&net.neighbors(e)?)),
                (Model::Vicsek { radius, .. }, _) => Some(edge_count(&metric_neighbors(e, *radius))),
                (Model::LinearProtocol { weights, .. }, _)
                | (Model::SphereConsensus { weights }, _)
                | (Model::Voter { graph: weights }, _) => Some(graph_edge_count(weights)),
                _ => None,
            };
        }
        if let Some(eps) = self.opts.cluster_eps {
            s.clusters = Some(clusters_of(e, eps)?.count());
        }
        for o in self.observers.iter_mut() {
            o.observe(t, e)?;
        }
        record.samples.push(s);
        Ok(())
    }
}

/// Advance `model` from `e0` to `t_end`, sampling `X`, `V` and the radius.
pub fn integrate<R: Rng + ?Sized>(
    model: &ModelSpec,
    e0: &Ensemble,
    integ: &IntegratorSpec,
    rng: &mut R,
) -> Result<RunRecord> {
    integrate_observed(model, e0, integ, SampleOptions::default(), rng, &mut [])
}

/// [`integrate`] with extra per-sample statistics and observers.
pub fn integrate_observed<R: Rng + ?Sized>(
    model: &ModelSpec,
    e0: &Ensemble,
    integ: &IntegratorSpec,
    opts: SampleOptions,
    rng: &mut R,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    integ.validate()?;
    model.validate()?;
    check_initial(model, e0)?;
    if model.is_discrete() {
        return run_discrete(model, e0, integ, opts, rng, observers);
    }
    let stochastic = model.is_stochastic();
    if stochastic != (integ.scheme == Scheme::EulerMaruyama) {
        return Err(Error::Unsupported(if stochastic {
            "stochastic models need the Euler–Maruyama scheme".into()
        } else {
            "Euler–Maruyama is reserved for stochastic models".into()
        }));
    }
    if let Model::Ptw { params, kappa0 } = &model.model {
        return run_ptw(params, *kappa0, e0, integ, rng, observers);
    }

    let network = match &model.model {
        Model::Hk { network } => Some(Network::sample(network.clone(), e0, rng)?),
        _ => None,
    };
    let field = ModelField { model: &model.model, network: network.clone() };
    let mut sampler = Sampler { opts, model: &model.model, network: network.as_ref(), observers };
    let mut record = RunRecord::new(0, e0.len(), e0.clone());
    let mut e = e0.clone();
    let d = e.dim();
    let second = e.has_velocities();
    let npos = e.positions().len();
    let sphere = matches!(model.model, Model::SphereConsensus { .. });
    let steps = integ.steps();
    sampler.take(&mut record, 0.0, &e)?;
    for k in 0..steps {
        let t = integ.time_at(k);
        let h = integ.time_at(k + 1) - t;
        let y = flatten(&e);
        let mut k1 = vec![0.0; y.len()];
        field.eval(t, &e, &mut k1)?;
        if let (Some(tol), false) = (integ.early_exit, stochastic) {
            if max_rhs_norm(&k1, d) < tol {
                sampler.take(&mut record, t, &e)?;
                record.equilibrium_at = Some(t);
                break;
            }
        }
        e = match integ.scheme {
            Scheme::Rk4 => rk4_from(&field, t, &e, &y, &k1, h)?,
            Scheme::ExplicitEuler => shifted(&e, &y, &k1, h),
            Scheme::EulerMaruyama => {
                let mut z: Vec<f64> = y.iter().zip(&k1).map(|(a, b)| a + h * b).collect();
                let amp = model.noise * h.sqrt();
                let block = if second { &mut z[npos..] } else { &mut z[..npos] };
                for zi in block.iter_mut() {
                    let xi: f64 = rng.sample(StandardNormal);
                    *zi += amp * xi;
                }
                unflatten(d, second, z)
            }
        };
        if sphere && integ.renormalize_sphere {
            for row in e.positions_mut().chunks_exact_mut(d) {
                let r = norm(row);
                if r > 0.0 {
                    row.iter_mut().for_each(|c| *c /= r);
                }
            }
        }
        if (k + 1) % integ.stride == 0 || k + 1 == steps {
            sampler.take(&mut record, integ.time_at(k + 1), &e)?;
        }
    }
    record.final_state = e;
    Ok(record)
}

fn run_discrete<R: Rng + ?Sized>(
    model: &ModelSpec,
    e0: &Ensemble,
    integ: &IntegratorSpec,
    opts: SampleOptions,
    rng: &mut R,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    let mut sampler = Sampler { opts, model: &model.model, network: None, observers };
    let mut record = RunRecord::new(0, e0.len(), e0.clone());
    let mut e = e0.clone();
    let mut spins: Option<Vec<i8>> = e.spins().map(<[i8]>::to_vec);
    let steps = integ.steps();
    sampler.take(&mut record, 0.0, &e)?;
    for k in 0..steps {
        let t = integ.time_at(k);
        match &model.model {
            Model::Vicsek { radius, speed, noise } => {
                e = vicsek_step(&e, *radius, *speed, *noise, integ.time_at(k + 1) - t, rng)?;
            }
            Model::Voter { graph } => {
                let s = spins.as_mut().ok_or(Error::MissingSpins)?;
                if voter_step(s, graph, rng)? == SpinEvent::Skipped {
                    record.skipped_events += 1;
                }
            }
            Model::Sznajd { ferro_prob } => {
                let s = spins.as_mut().ok_or(Error::MissingSpins)?;
                sznajd_step(s, *ferro_prob, rng)?;
            }
            _ => unreachable!("only discrete models reach this loop"),
        }
        if let Some(s) = &spins {
            e.set_spins(s.clone())?;
            if s.iter().all(|x| *x == s[0]) && record.equilibrium_at.is_none() {
                record.equilibrium_at = Some(integ.time_at(k + 1));
                sampler.take(&mut record, integ.time_at(k + 1), &e)?;
                break;
            }
        }
        if (k + 1) % integ.stride == 0 || k + 1 == steps {
            sampler.take(&mut record, integ.time_at(k + 1), &e)?;
        }
    }
    record.final_state = e;
    Ok(record)
}

fn run_ptw<R: Rng + ?Sized>(
    params: &PtwParams,
    kappa0: f64,
    e0: &Ensemble,
    integ: &IntegratorSpec,
    rng: &mut R,
    observers: &mut [&mut dyn Observer],
) -> Result<RunRecord> {
    let mut walkers = ptw::walkers_from(e0, kappa0)?;
    let mut record = RunRecord::new(0, e0.len(), e0.clone());
    let model = Model::Ptw { params: *params, kappa0 };
    let mut sampler = Sampler { opts: SampleOptions::default(), model: &model, network: None, observers };
    let steps = integ.steps();
    let mut e = ptw::walkers_to_ensemble(&walkers, params.speed)?;
    sampler.take(&mut record, 0.0, &e)?;
    for k in 0..steps {
        let h = integ.time_at(k + 1) - integ.time_at(k);
        ptw_step(&mut walkers, params, h, rng)?;
        if (k + 1) % integ.stride == 0 || k + 1 == steps {
            e = ptw::walkers_to_ensemble(&walkers, params.speed)?;
            sampler.take(&mut record, integ.time_at(k + 1), &e)?;
        }
    }
    record.final_state = e;
    Ok(record)
}
