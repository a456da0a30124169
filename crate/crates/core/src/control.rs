//! Feedback laws and controlled alignment systems.
//!
//! All laws act on the Cucker–Smale velocity equation
//! `v̇ᵢ = (1/N) Σⱼ a(‖xⱼ − xᵢ‖)(vⱼ − vᵢ) + uᵢ` under the budget
//! `Σᵢ ‖uᵢ‖ ≤ M`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::second_order::{alignment_into, check_alpha, migration_into};
use crate::dynamics::{rk4_step, IntegratorSpec, Scheme};
use crate::linalg::{dist, mean_rows, norm};
use crate::potential::{tail_integral, PotentialSpec};
use crate::record::{ControlSample, RunRecord, Sample};
use crate::stats::{max_radius, spatial_variance, velocity_variance};
use crate::{Ensemble, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionVerdict {
    pub inside: bool,
    /// Threshold minus the measured quantity.
    pub margin: f64,
    pub threshold: f64,
}

fn finite_threshold(t: f64) -> Result<f64> {
    if t.is_finite() {
        Ok(t)
    } else {
        Err(Error::DivergentTail)
    }
}

/// `γ(X) = ∫_{√X}^∞ a(√(2N) r) dr`.
pub fn gamma(e: &Ensemble, potential: &PotentialSpec) -> Result<f64> {
    let n = e.len() as f64;
    finite_threshold(tail_integral(potential, spatial_variance(e).sqrt(), (2.0 * n).sqrt())?)
}

/// Inside iff `√V ≤ γ(X)`.
pub fn flocking_region(e: &Ensemble, potential: &PotentialSpec) -> Result<RegionVerdict> {
    let v = velocity_variance(e)?;
    let threshold = gamma(e, potential)?;
    let margin = threshold - v.sqrt();
    Ok(RegionVerdict { inside: margin >= 0.0, margin, threshold })
}

/// Inside iff `V⁰ < ∫_{X⁰}^∞ a(2x) dx` (strict, so `margin = 0` is outside).
pub fn consensus_region_meanfield(x0: f64, v0: f64, potential: &PotentialSpec) -> Result<RegionVerdict> {
    if !(x0 >= 0.0 && v0 >= 0.0) {
        return Err(Error::invalid("support radii", "must be nonnegative"));
    }
    let threshold = finite_threshold(tail_integral(potential, x0, 2.0)?)?;
    let margin = threshold - v0;
    Ok(RegionVerdict { inside: margin > 0.0, margin, threshold })
}

/// `v⊥ᵢ = vᵢ − v̄`, row-major.
pub fn velocity_deviations(e: &Ensemble) -> Result<Vec<f64>> {
    let v = e.require_velocities()?;
    let d = e.dim();
    let m = mean_rows(v, d);
    Ok(v.chunks_exact(d).flat_map(|row| row.iter().zip(&m).map(|(a, b)| a - b).collect::<Vec<_>>()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feedback {
    /// Row-major control vectors.
    pub u: Vec<f64>,
    /// Smallest index with a nonzero control.
    pub active: Option<usize>,
}

impl Feedback {
    pub fn zero(len: usize) -> Self {
        Self { u: vec![0.0; len], active: None }
    }

    pub fn norms(&self, dim: usize) -> Vec<f64> {
        self.u.chunks_exact(dim).map(norm).collect()
    }

    /// `Σᵢ ‖uᵢ‖`.
    pub fn total_norm(&self, dim: usize) -> f64 {
        self.norms(dim).iter().sum()
    }

    pub fn respects_bound(&self, dim: usize, bound: f64) -> bool {
        self.total_norm(dim) <= bound * (1.0 + 1e-12)
    }

    fn nonzero_count(&self, dim: usize) -> usize {
        self.norms(dim).iter().filter(|n| **n > 0.0).count()
    }
}

/// `uᵢ = −α v⊥ᵢ`.
pub fn total_feedback(e: &Ensemble, alpha: f64) -> Result<Feedback> {
    if !(alpha >= 0.0) {
        return Err(Error::invalid("alpha", "must be nonnegative"));
    }
    let dev = velocity_deviations(e)?;
    let u: Vec<f64> = dev.iter().map(|x| -alpha * x).collect();
    let d = e.dim();
    let active = u.chunks_exact(d).position(|r| norm(r) > 0.0);
    Ok(Feedback { u, active })
}

/// Largest `α` for which total feedback stays within budget `bound`.
pub fn total_feedback_max_gain(e: &Ensemble, bound: f64) -> Result<f64> {
    let dev = velocity_deviations(e)?;
    let s: f64 = dev.chunks_exact(e.dim()).map(norm).sum();
    Ok(if s == 0.0 { f64::INFINITY } else { bound / s })
}

/// Componentwise sparse law: zero while `max ‖v⊥ᵢ‖ ≤ γ(X)²`, otherwise
/// `−M v⊥ⱼ/‖v⊥ⱼ‖` on the smallest index `j` attaining the maximum.
pub fn sparse_feedback(e: &Ensemble, potential: &PotentialSpec, bound: f64) -> Result<Feedback> {
    if !(bound >= 0.0) {
        return Err(Error::invalid("M", "must be nonnegative"));
    }
    let dev = velocity_deviations(e)?;
    let d = e.dim();
    let g = gamma(e, potential)?;
    let (mut best, mut best_norm) = (0usize, f64::NEG_INFINITY);
    for (i, row) in dev.chunks_exact(d).enumerate() {
        let r = norm(row);
        if r > best_norm {
            best = i;
            best_norm = r;
        }
    }
    let mut fb = Feedback::zero(dev.len());
    if best_norm <= g * g || bound == 0.0 {
        return Ok(fb);
    }
    for k in 0..d {
        fb.u[best * d + k] = -bound * dev[best * d + k] / best_norm;
    }
    fb.active = Some(best);
    Ok(fb)
}

/// `dV/dt` of the controlled Cucker–Smale flow at state `e` under `u`:
/// `(2/N) Σᵢ ⟨v⊥ᵢ, v̇ᵢ⟩`.
pub fn variance_rate(e: &Ensemble, potential: &PotentialSpec, u: &[f64]) -> Result<f64> {
    let v = e.require_velocities()?;
    if u.len() != v.len() {
        return Err(Error::DimensionMismatch { expected: v.len(), found: u.len() });
    }
    let mut dv = vec![0.0; v.len()];
    alignment_into(e.positions(), v, e.dim(), potential, &mut dv);
    let dev = velocity_deviations(e)?;
    let n = e.len() as f64;
    Ok(2.0 / n * dev.iter().zip(dv.iter().zip(u)).map(|(p, (a, b))| p * (a + b)).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub sparse_rate: f64,
    pub zero_rate: f64,
    /// Smallest rate among the random feasible controls.
    pub best_random_rate: f64,
    /// Random controls that beat the sparse law.
    pub violations: usize,
    pub trials: usize,
    pub sparse_active: bool,
}

/// Random control with `Σ‖uᵢ‖ ≤ bound`: Gaussian directions, random
/// budget shares, scaled by a uniform fraction of the budget.
pub fn random_feasible_control<R: Rng + ?Sized>(n: usize, d: usize, bound: f64, rng: &mut R) -> Vec<f64> {
    let shares: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(3)).collect();
    let total: f64 = shares.iter().sum();
    let scale = bound * rng.random::<f64>();
    let mut u = vec![0.0; n * d];
    for i in 0..n {
        let dir: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let r = norm(&dir);
        if r == 0.0 || total == 0.0 {
            continue;
        }
        let mag = scale * shares[i] / total;
        for k in 0..d {
            u[i * d + k] = mag * dir[k] / r;
        }
    }
    u
}

/// Compare `dV/dt` under the sparse law with `trials` random feasible
/// controls.
pub fn sparse_optimality_probe<R: Rng + ?Sized>(
    e: &Ensemble,
    potential: &PotentialSpec,
    bound: f64,
    trials: usize,
    rng: &mut R,
) -> Result<OptimalityReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let fb = sparse_feedback(e, potential, bound)?;
    let sparse_rate = variance_rate(e, potential, &fb.u)?;
    let zero_rate = variance_rate(e, potential, &vec![0.0; fb.u.len()])?;
    let mut best = f64::INFINITY;
    let mut violations = 0;
    // Rates are compared with a relative slack for rounding in the sums.
    let slack = 1e-12 * (sparse_rate.abs() + zero_rate.abs() + 1e-300);
    for _ in 0..trials {
        let u = random_feasible_control(e.len(), e.dim(), bound, rng);
        let r = variance_rate(e, potential, &u)?;
        best = best.min(r);
        if r < sparse_rate - slack {
            violations += 1;
        }
    }
    Ok(OptimalityReport {
        sparse_rate,
        zero_rate,
        best_random_rate: best,
        violations,
        trials,
        sparse_active: fb.active.is_some(),
    })
}

/// Recompute a control only at `0, τ, 2τ, …`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleAndHold {
    pub tau: f64,
    next: f64,
}

impl SampleAndHold {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid("tau", format!("{tau} is not positive")));
        }
        Ok(Self { tau, next: 0.0 })
    }

    /// Whether the control is due for an update at `t`; advances the
    /// schedule when it is.
    pub fn due(&mut self, t: f64) -> bool {
        if t + 1e-9 * self.tau >= self.next {
            while self.next <= t + 1e-9 * self.tau {
                self.next += self.tau;
            }
            true
        } else {
            false
        }
    }

    /// Update count over `[0, t_end)`.
    pub fn updates_over(tau: f64, t_end: f64) -> usize {
        (t_end / tau - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MigrationStrategy {
    #[default]
    Off,
    /// Budget goes to the agents farthest from the target velocity.
    FullGreedy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlLaw {
    TotalFeedback { alpha: f64 },
    Sparse { bound: f64 },
    SampledSparse { bound: f64, tau: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    pub law: ControlLaw,
    /// Latch the control to zero the first time the state enters the
    /// flocking region.
    pub switch_off_in_region: bool,
}

impl ControlSpec {
    pub fn new(law: ControlLaw) -> Self {
        Self { law, switch_off_in_region: true }
    }

    /// Sampled sparse law with the default `τ = 10·dt`.
    pub fn sampled_default(bound: f64, dt: f64) -> Self {
        Self::new(ControlLaw::SampledSparse { bound, tau: 10.0 * dt })
    }

    pub fn validate(&self) -> Result<()> {
        match self.law {
            ControlLaw::TotalFeedback { alpha } if !(alpha > 0.0) => Err(Error::invalid("alpha", "must be positive")),
            ControlLaw::Sparse { bound } if !(bound > 0.0) => Err(Error::invalid("M", "must be positive")),
            ControlLaw::SampledSparse { bound, tau } => {
                if !(bound > 0.0) {
                    return Err(Error::invalid("M", "must be positive"));
                }
                SampleAndHold::new(tau).map(|_| ())
            }
            _ => Ok(()),
        }
    }
}

/// A controlled run plus switching statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlledRun {
    pub record: RunRecord,
    /// Changes of the active index between consecutive control updates.
    pub switches: usize,
    pub updates: usize,
    /// Time of the latch, when it fired.
    pub switched_off_at: Option<f64>,
    /// Largest number of simultaneously active components.
    pub max_active: usize,
}

fn control_sample(e: &Ensemble, potential: &PotentialSpec, fb: &Feedback) -> Result<ControlSample> {
    Ok(ControlSample { norms: fb.norms(e.dim()), active: fb.active, in_region: flocking_region(e, potential)?.inside })
}

fn full_sample(e: &Ensemble, t: f64, control: Option<ControlSample>) -> Sample {
    let mut s = Sample::bare(t, spatial_variance(e), max_radius(e));
    s.velocity_variance = velocity_variance(e).ok();
    s.control = control;
    s
}

/// Integrate the controlled Cucker–Smale system with RK4, the control held
/// constant within each step.
pub fn simulate_controlled_cs(
    e0: &Ensemble,
    potential: &PotentialSpec,
    spec: &ControlSpec,
    integ: &IntegratorSpec,
) -> Result<ControlledRun> {
    spec.validate()?;
    integ.validate()?;
    if integ.scheme == Scheme::EulerMaruyama {
        return Err(Error::Unsupported("controlled runs are deterministic".into()));
    }
    e0.require_velocities()?;
    let d = e0.dim();
    let mut schedule = match spec.law {
        ControlLaw::SampledSparse { tau, .. } => Some(SampleAndHold::new(tau)?),
        _ => None,
    };
    let mut e = e0.clone();
    let mut record = RunRecord::new(0, e.len(), e.clone());
    let mut fb = Feedback::zero(e.positions().len());
    let mut latched = false;
    let mut out = ControlledRun {
        record: RunRecord::new(0, e.len(), e.clone()),
        switches: 0,
        updates: 0,
        switched_off_at: None,
        max_active: 0,
    };
    let mut last_active: Option<usize> = None;
    let steps = integ.steps();
    for k in 0..=steps {
        let t = (k as f64 * integ.dt).min(integ.t_end);
        let due = schedule.as_mut().is_none_or(|s| s.due(t));
        if due && k < steps {
            if !latched && spec.switch_off_in_region && flocking_region(&e, potential)?.inside {
                latched = true;
                out.switched_off_at = Some(t);
            }
            fb = if latched {
                Feedback::zero(fb.u.len())
            } else {
                match spec.law {
                    ControlLaw::TotalFeedback { alpha } => total_feedback(&e, alpha)?,
                    ControlLaw::Sparse { bound } | ControlLaw::SampledSparse { bound, .. } => {
                        sparse_feedback(&e, potential, bound)?
                    }
                }
            };
            out.updates += 1;
            if let (Some(a), Some(b)) = (last_active, fb.active) {
                if a != b {
                    out.switches += 1;
                }
            }
            if fb.active.is_some() {
                last_active = fb.active;
            }
            out.max_active = out.max_active.max(fb.nonzero_count(d));
        }
        if k % integ.stride == 0 || k == steps {
            record.samples.push(full_sample(&e, t, Some(control_sample(&e, potential, &fb)?)));
        }
        if k == steps {
            break;
        }
        let h = ((k + 1) as f64 * integ.dt).min(integ.t_end) - t;
        let u = fb.u.clone();
        let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> Result<()> {
            let v = s.require_velocities()?;
            let np = s.positions().len();
            let (dx, dv) = o.split_at_mut(np);
            dx.copy_from_slice(v);
            alignment_into(s.positions(), v, d, potential, dv);
            for (a, b) in dv.iter_mut().zip(&u) {
                *a += b;
            }
            Ok(())
        };
        e = match integ.scheme {
            Scheme::ExplicitEuler => crate::dynamics::euler_step(&field, t, &e, h)?,
            _ => rk4_step(&field, t, &e, h)?,
        };
    }
    record.final_state = e;
    out.record = record;
    Ok(out)
}

/// Gains `αᵢ ∈ [0, 1]` with `Σ αᵢ ≤ M`.
pub fn migration_alpha(strategy: MigrationStrategy, e: &Ensemble, target: &[f64], bound: f64) -> Result<Vec<f64>> {
    if !(bound >= 0.0) {
        return Err(Error::invalid("M", "must be nonnegative"));
    }
    let v = e.require_velocities()?;
    let d = e.dim();
    if target.len() != d {
        return Err(Error::DimensionMismatch { expected: d, found: target.len() });
    }
    let n = e.len();
    match strategy {
        MigrationStrategy::Off => Ok(vec![0.0; n]),
        MigrationStrategy::FullGreedy => {
            let dev: Vec<f64> = v.chunks_exact(d).map(|r| dist(r, target)).collect();
            let mut order: Vec<usize> = (0..n).filter(|&i| dev[i] > 0.0).collect();
            order.sort_by(|&a, &b| dev[b].total_cmp(&dev[a]).then(a.cmp(&b)));
            let mut alpha = vec![0.0; n];
            let mut left = bound;
            for i in order {
                if left <= 0.0 {
                    break;
                }
                alpha[i] = left.min(1.0);
                left -= alpha[i];
            }
            Ok(alpha)
        }
    }
}

/// Uniform gain `min(α₀, 1, M/N)`.
pub fn constant_alpha(alpha0: f64, n: usize, bound: f64) -> Result<Vec<f64>> {
    if !(alpha0 >= 0.0) {
        return Err(Error::invalid("alpha", "must be nonnegative"));
    }
    let a = alpha0.min(1.0).min(bound / n as f64);
    Ok(vec![a; n])
}

/// How the gains of a migration run are chosen over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MigrationPlan {
    Off,
    Constant {
        alpha: f64,
    },
    FullGreedy,
    /// No control before `start`, then greedy or constant gains.
    Delayed {
        start: f64,
        greedy: bool,
        alpha: f64,
    },
}

/// `𝕍 = (1/N) Σ ‖vᵢ − V‖²`.
pub fn migration_deviation(e: &Ensemble, target: &[f64]) -> Result<f64> {
    let v = e.require_velocities()?;
    let n = e.len() as f64;
    Ok(v.chunks_exact(e.dim())
        .map(|r| {
            let dd = dist(r, target);
            dd * dd
        })
        .sum::<f64>()
        / n)
}

/// Migration model under a gain plan; the control norms logged per sample
/// are the gains `αᵢ`.
pub fn simulate_migration(
    e0: &Ensemble,
    potential: &PotentialSpec,
    target: &[f64],
    bound: f64,
    plan: MigrationPlan,
    integ: &IntegratorSpec,
) -> Result<RunRecord> {
    integ.validate()?;
    let d = e0.dim();
    let n = e0.len();
    let mut e = e0.clone();
    let mut record = RunRecord::new(0, n, e.clone());
    let steps = integ.steps();
    for k in 0..=steps {
        let t = (k as f64 * integ.dt).min(integ.t_end);
        let alpha = match plan {
            MigrationPlan::Off => vec![0.0; n],
            MigrationPlan::Constant { alpha } => constant_alpha(alpha, n, bound)?,
            MigrationPlan::FullGreedy => migration_alpha(MigrationStrategy::FullGreedy, &e, target, bound)?,
            MigrationPlan::Delayed { start, greedy, alpha } => {
                if t < start {
                    vec![0.0; n]
                } else if greedy {
                    migration_alpha(MigrationStrategy::FullGreedy, &e, target, bound)?
                } else {
                    constant_alpha(alpha, n, bound)?
                }
            }
        };
        check_alpha(&alpha, n)?;
        if k % integ.stride == 0 || k == steps {
            let cs =
                ControlSample { active: alpha.iter().position(|a| *a > 0.0), norms: alpha.clone(), in_region: false };
            record.samples.push(full_sample(&e, t, Some(cs)));
        }
        if k == steps {
            break;
        }
        let h = ((k + 1) as f64 * integ.dt).min(integ.t_end) - t;
        let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> Result<()> {
            let v = s.require_velocities()?;
            let (dx, dv) = o.split_at_mut(s.positions().len());
            dx.copy_from_slice(v);
            migration_into(s.positions(), v, d, potential, target, &alpha, dv);
            Ok(())
        };
        e = rk4_step(&field, t, &e, h)?;
    }
    record.final_state = e;
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeaderNormalization {
    /// `(1/N)` over followers plus `(1/m)` over leaders.
    PerPopulation,
    /// `1/(N + m)` over the union.
    #[default]
    Pooled,
}

/// Velocity derivatives `(ẇ, v̇)` for `m` leaders controlled by `u` and
/// `N` followers, with `H(x, v; y, w) = a(‖y − x‖)(w − v)`.
pub fn leader_follower_rhs(
    leaders: &Ensemble,
    followers: &Ensemble,
    potential: &PotentialSpec,
    u: &[f64],
    normalization: LeaderNormalization,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = leaders.dim();
    if followers.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: followers.dim() });
    }
    let (yl, wl) = (leaders.positions(), leaders.require_velocities()?);
    let (xf, vf) = (followers.positions(), followers.require_velocities()?);
    if u.len() != wl.len() {
        return Err(Error::DimensionMismatch { expected: wl.len(), found: u.len() });
    }
    let (m, n) = (leaders.len(), followers.len());
    let (wf, wm) = match normalization {
        LeaderNormalization::PerPopulation => (1.0 / n as f64, 1.0 / m as f64),
        LeaderNormalization::Pooled => {
            let t = 1.0 / (n + m) as f64;
            (t, t)
        }
    };
    // H ⋆ μ at (x, v) against one population.
    let conv = |x: &[f64], v: &[f64], px: &[f64], pv: &[f64], w: f64, out: &mut [f64]| {
        for (yj, vj) in px.chunks_exact(d).zip(pv.chunks_exact(d)) {
            let a = potential.value(dist(yj, x));
            for k in 0..d {
                out[k] += w * a * (vj[k] - v[k]);
            }
        }
    };
    let mut dwl = vec![0.0; wl.len()];
    for k in 0..m {
        let (y, w) = (&yl[k * d..(k + 1) * d], &wl[k * d..(k + 1) * d]);
        let o = &mut dwl[k * d..(k + 1) * d];
        conv(y, w, xf, vf, wf, o);
        conv(y, w, yl, wl, wm, o);
        for c in 0..d {
            o[c] += u[k * d + c];
        }
    }
    let mut dvf = vec![0.0; vf.len()];
    for i in 0..n {
        let (x, v) = (&xf[i * d..(i + 1) * d], &vf[i * d..(i + 1) * d]);
        let o = &mut dvf[i * d..(i + 1) * d];
        conv(x, v, xf, vf, wf, o);
        conv(x, v, yl, wl, wm, o);
    }
    Ok((dwl, dvf))
}

/// `∫ Σᵢ ‖vᵢ − v̄‖² dt + γ Σᵢ ∫ ‖uᵢ‖ dt` by the trapezoidal rule over the
/// logged samples (`Σᵢ ‖vᵢ − v̄‖² = N·V`).
pub fn control_cost(log: &RunRecord, gamma_weight: f64) -> Result<f64> {
    if log.samples.iter().any(|s| s.control.is_none() || s.velocity_variance.is_none()) {
        return Err(Error::MissingControlHistory);
    }
    let n = log.agents as f64;
    let integrand = |s: &Sample| {
        let c = s.control.as_ref().map_or(0.0, ControlSample::total);
        n * s.velocity_variance.unwrap_or(0.0) + gamma_weight * c
    };
    Ok(log.samples.windows(2).map(|w| 0.5 * (w[1].t - w[0].t) * (integrand(&w[0]) + integrand(&w[1]))).sum())
}
