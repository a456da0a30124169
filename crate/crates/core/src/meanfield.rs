//! Particle discretizations of kinetic alignment and of the binary
//! Boltzmann-type control scheme for opinions.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dynamics::rk4_step;
use crate::linalg::{dist, mean_rows, norm};
use crate::par::{for_agents, for_each_chunk, map_indexed, Execution};
use crate::potential::PotentialSpec;
use crate::{Ensemble, Error, Result};

/// Empirical measure `(1/N) Σ δ_{(xᵢ, vᵢ)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure {
    particles: Ensemble,
}

impl ParticleMeasure {
    pub fn new(particles: Ensemble) -> Result<Self> {
        particles.require_velocities()?;
        if particles.is_empty() {
            return Err(Error::Empty);
        }
        Ok(Self { particles })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn particles(&self) -> &Ensemble {
        &self.particles
    }

    pub fn into_ensemble(self) -> Ensemble {
        self.particles
    }
}

/// `ξ[μ](x, v) = ∫ a(‖x − y‖)(w − v) dμ(y, w)` at every particle.
fn kinetic_field(x: &[f64], v: &[f64], d: usize, a: &PotentialSpec, out: &mut [f64]) {
    let n = x.len() / d;
    let w = 1.0 / n as f64;
    for_each_chunk(out, d, for_agents(n), |i, oi| {
        let (xi, vi) = (&x[i * d..(i + 1) * d], &v[i * d..(i + 1) * d]);
        oi.fill(0.0);
        for j in 0..n {
            if j == i {
                // the self term vanishes identically
                continue;
            }
            let k = a.value(dist(&x[j * d..(j + 1) * d], xi));
            for c in 0..d {
                oi[c] += k * (v[j * d + c] - vi[c]);
            }
        }
        oi.iter_mut().for_each(|o| *o *= w);
    });
}

/// One RK4 step along the characteristics `ẋ = v`, `v̇ = ξ[μ](x, v)`.
pub fn empirical_cs_step(mu: &ParticleMeasure, potential: &PotentialSpec, dt: f64) -> Result<ParticleMeasure> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let d = mu.particles.dim();
    let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> Result<()> {
        let v = s.require_velocities()?;
        let (dx, dv) = o.split_at_mut(s.positions().len());
        dx.copy_from_slice(v);
        kinetic_field(s.positions(), v, d, potential, dv);
        Ok(())
    };
    Ok(ParticleMeasure { particles: rk4_step(&field, 0.0, &mu.particles, dt)? })
}

/// `(max ‖xᵢ − x̄‖, max ‖vᵢ − v̄‖)`.
pub fn support_radii(mu: &ParticleMeasure) -> (f64, f64) {
    let e = &mu.particles;
    let d = e.dim();
    let radius = |data: &[f64]| {
        let m = mean_rows(data, d);
        data.chunks_exact(d).map(|r| dist(r, &m)).fold(0.0, f64::max)
    };
    (radius(e.positions()), radius(e.velocities().unwrap_or_default()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProportionLog {
    pub controlled: usize,
    /// `μ(ω)`, the mass of the controlled set.
    pub mass: f64,
    /// Largest control norm applied.
    pub max_norm: f64,
}

impl ProportionLog {
    pub fn satisfied(&self, c: f64, u_bound: f64) -> bool {
        self.mass <= c && self.max_norm <= u_bound * (1.0 + 1e-15)
    }
}

/// Push the `⌊cN⌋` particles farthest from the mean velocity towards it
/// with `u = −u_bound · v⊥/‖v⊥‖`, then take an RK4 step of the kinetic
/// alignment with the control frozen.
pub fn proportion_control_step(
    mu: &ParticleMeasure,
    potential: &PotentialSpec,
    c: f64,
    u_bound: f64,
    dt: f64,
) -> Result<(ParticleMeasure, ProportionLog)> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::invalid("c", format!("{c} lies outside (0, 1]")));
    }
    if !(0.0..=1.0).contains(&u_bound) {
        return Err(Error::invalid("u_bound", format!("{u_bound} lies outside [0, 1]")));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    let e = &mu.particles;
    let (d, n) = (e.dim(), e.len());
    let v = e.require_velocities()?;
    let vbar = mean_rows(v, d);
    let dev: Vec<f64> = v.iter().enumerate().map(|(k, x)| x - vbar[k % d]).collect();
    let speeds: Vec<f64> = dev.chunks_exact(d).map(norm).collect();
    let mut order: Vec<usize> = (0..n).filter(|&i| speeds[i] > 0.0).collect();
    order.sort_by(|&a, &b| speeds[b].total_cmp(&speeds[a]).then(a.cmp(&b)));
    order.truncate((c * n as f64 + 1e-9).floor() as usize);
    let mut u = vec![0.0; v.len()];
    for &i in &order {
        for k in 0..d {
            u[i * d + k] = -u_bound * dev[i * d + k] / speeds[i];
        }
    }
    let log = ProportionLog {
        controlled: order.len(),
        mass: order.len() as f64 / n as f64,
        max_norm: if order.is_empty() { 0.0 } else { u_bound },
    };
    log::debug!("proportion control: {} of {n} particles, mass {:.4} ≤ {c}", log.controlled, log.mass);
    let field = |_t: f64, s: &Ensemble, o: &mut [f64]| -> Result<()> {
        let v = s.require_velocities()?;
        let (dx, dv) = o.split_at_mut(s.positions().len());
        dx.copy_from_slice(v);
        kinetic_field(s.positions(), v, d, potential, dv);
        dv.iter_mut().zip(&u).for_each(|(a, b)| *a += b);
        Ok(())
    };
    let next = rk4_step(&field, 0.0, e, dt)?;
    Ok((ParticleMeasure { particles: next }, log))
}

/// Scalar opinions on `[−1, 1]` steered towards `x_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpinionPopulation {
    pub samples: Vec<f64>,
    pub target: f64,
    /// Control penalty `κ`.
    pub kappa: f64,
    /// Interaction strength `η`.
    pub eta: f64,
    /// Updates pushed back into `[−1, 1]` so far.
    pub clamped: usize,
}

impl OpinionPopulation {
    pub fn new(samples: Vec<f64>, target: f64, kappa: f64, eta: f64) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        if !(eta > 0.0) {
            return Err(Error::invalid("eta", "must be positive"));
        }
        if !(-1.0..=1.0).contains(&target) {
            return Err(Error::invalid("target", "must lie in [-1, 1]"));
        }
        if let Some(x) = samples.iter().find(|x| !(-1.0..=1.0).contains(*x)) {
            return Err(Error::invalid("samples", format!("{x} lies outside [-1, 1]")));
        }
        Ok(Self { samples, target, kappa, eta, clamped: 0 })
    }

    /// `β = 2η/(κ + 2η)`.
    pub fn beta(&self) -> f64 {
        2.0 * self.eta / (self.kappa + 2.0 * self.eta)
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / self.samples.len() as f64
    }
}

/// Post-interaction opinions and whether either needed clamping.
pub fn boltzmann_pair_update<K>(x: f64, y: f64, pop: &OpinionPopulation, kernel: &K) -> (f64, f64, usize)
where
    K: Fn(f64, f64) -> f64 + ?Sized,
{
    let (eta, xd) = (pop.eta, pop.target);
    let (axy, ayx) = (kernel(x, y), kernel(y, x));
    let eta_u = 0.5 * pop.beta() * ((xd - y) + (xd - x) + eta * (axy - ayx) * (y - x));
    let xs = x + eta * axy * (y - x) + eta_u;
    let ys = y + eta * ayx * (x - y) + eta_u;
    let mut clamped = 0;
    let mut fix = |z: f64| {
        if (-1.0..=1.0).contains(&z) {
            z
        } else {
            clamped += 1;
            z.clamp(-1.0, 1.0)
        }
    };
    let (xs, ys) = (fix(xs), fix(ys));
    (xs, ys, clamped)
}

/// One sweep: a uniformly random perfect matching, every pair interacting
/// once. With odd `N` the unmatched agent keeps its opinion.
pub fn boltzmann_mc_step<K, R>(pop: &OpinionPopulation, kernel: &K, rng: &mut R) -> Result<OpinionPopulation>
where
    K: Fn(f64, f64) -> f64 + Sync + ?Sized,
    R: Rng + ?Sized,
{
    let n = pop.samples.len();
    if n < 2 {
        return Err(Error::invalid("agents", "need at least two opinions"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if n % 2 == 1 {
        log::debug!("odd population; agent {} sits out this sweep", order[n - 1]);
    }
    let pairs = n / 2;
    let exec = if pairs >= 512 { Execution::Parallel } else { Execution::Sequential };
    let updates = map_indexed(pairs, exec, |p| {
        let (i, j) = (order[2 * p], order[2 * p + 1]);
        boltzmann_pair_update(pop.samples[i], pop.samples[j], pop, kernel)
    });
    let mut out = pop.clone();
    for (p, (xs, ys, c)) in updates.into_iter().enumerate() {
        out.samples[order[2 * p]] = xs;
        out.samples[order[2 * p + 1]] = ys;
        out.clamped += c;
    }
    if out.clamped > pop.clamped {
        log::debug!("{} opinions clamped to [-1, 1]", out.clamped - pop.clamped);
    }
    Ok(out)
}

/// Mean displacement of an agent at `x` under one interaction with a
/// partner drawn from the population, without clamping.
pub fn expected_displacement<K>(x: f64, pop: &OpinionPopulation, kernel: &K) -> f64
where
    K: Fn(f64, f64) -> f64 + ?Sized,
{
    let b = pop.beta();
    let s: f64 = pop
        .samples
        .iter()
        .map(|&y| {
            let (axy, ayx) = (kernel(x, y), kernel(y, x));
            pop.eta * axy * (y - x) + 0.5 * b * ((pop.target - y) + (pop.target - x) + pop.eta * (axy - ayx) * (y - x))
        })
        .sum();
    s / pop.samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drift {
    /// `ξ[μ](x) = ∫ a(x, y)(y − x) dμ(y)`.
    pub xi: f64,
    /// `ζ[μ](x) = ∫ K(x, y) dμ(y)` with `K = (1/κ)((x_d − x) + (x_d − y))`.
    pub zeta: f64,
}

impl Drift {
    pub fn total(&self) -> f64 {
        self.xi + self.zeta
    }
}

/// Drift fields of the quasi-invariant limit at each point of `at`.
pub fn quasi_invariant_drift<K>(samples: &[f64], target: f64, kappa: f64, kernel: &K, at: &[f64]) -> Result<Vec<Drift>>
where
    K: Fn(f64, f64) -> f64 + ?Sized,
{
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::Empty);
    }
    let w = 1.0 / samples.len() as f64;
    Ok(at
        .iter()
        .map(|&x| {
            let (xi, zeta) = samples
                .iter()
                .fold((0.0, 0.0), |(a, b), &y| (a + kernel(x, y) * (y - x), b + ((target - x) + (target - y)) / kappa));
            Drift { xi: w * xi, zeta: w * zeta }
        })
        .collect())
}

/// Fixed-bin histogram normalised to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Values outside `[lo, hi]` are dropped; `hi` falls in the last bin.
    pub fn of(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(Error::invalid("histogram", "need bins ≥ 1 and hi > lo"));
        }
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
        let mut mass = vec![0.0; bins];
        let w = if values.is_empty() { 0.0 } else { 1.0 / values.len() as f64 };
        for &v in values {
            if !(lo..=hi).contains(&v) {
                continue;
            }
            let k = (((v - lo) / width) as usize).min(bins - 1);
            mass[k] += w;
        }
        Ok(Self { edges, mass })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("# schema=1\nleft,right,mass\n");
        for (k, m) in self.mass.iter().enumerate() {
            s.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], m));
        }
        s
    }
}
