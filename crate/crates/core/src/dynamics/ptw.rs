//! Persistent turning walker: constant speed, Ornstein–Uhlenbeck curvature.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Ensemble, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtwParams {
    /// Speed `c`.
    pub speed: f64,
    /// Curvature relaxation frequency `a`.
    pub relax: f64,
    /// Curvature noise intensity `b`.
    pub diffusion: f64,
}

impl PtwParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.speed >= 0.0) {
            return Err(Error::invalid("speed", "must be nonnegative"));
        }
        if !(self.relax >= 0.0) {
            return Err(Error::invalid("relax", "must be nonnegative"));
        }
        if !(self.diffusion >= 0.0) {
            return Err(Error::invalid("diffusion", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtwState {
    pub x: [f64; 2],
    pub theta: f64,
    pub kappa: f64,
}

impl PtwState {
    pub fn velocity(&self, speed: f64) -> [f64; 2] {
        [speed * self.theta.cos(), speed * self.theta.sin()]
    }
}

/// One Euler–Maruyama step for every walker.
pub fn ptw_step<R: Rng + ?Sized>(walkers: &mut [PtwState], p: &PtwParams, dt: f64, rng: &mut R) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", "must be positive"));
    }
    p.validate()?;
    let sdt = dt.sqrt();
    for w in walkers.iter_mut() {
        let (c, s) = (w.theta.cos(), w.theta.sin());
        let xi: f64 = if p.diffusion > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
        w.x[0] += p.speed * c * dt;
        w.x[1] += p.speed * s * dt;
        w.theta += p.speed * w.kappa * dt;
        w.kappa += -p.relax * w.kappa * dt + p.diffusion * sdt * xi;
    }
    Ok(())
}

/// Walkers with headings taken from the velocity directions of `e` and a
/// common initial curvature.
pub fn walkers_from(e: &Ensemble, kappa0: f64) -> Result<Vec<PtwState>> {
    if e.dim() != 2 {
        return Err(Error::Unsupported("the turning walker lives in d = 2".into()));
    }
    let v = e.require_velocities()?;
    Ok((0..e.len())
        .map(|i| PtwState {
            x: [e.positions()[2 * i], e.positions()[2 * i + 1]],
            theta: v[2 * i + 1].atan2(v[2 * i]),
            kappa: kappa0,
        })
        .collect())
}

pub fn walkers_to_ensemble(walkers: &[PtwState], speed: f64) -> Result<Ensemble> {
    let x = walkers.iter().flat_map(|w| w.x).collect();
    let v = walkers.iter().flat_map(|w| w.velocity(speed)).collect();
    Ensemble::second_order(2, x, v)
}
