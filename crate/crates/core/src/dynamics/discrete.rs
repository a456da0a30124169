//! Discrete-time update rules: Vicsek, voter and Sznajd.

use rand::Rng;

use crate::network::{metric_neighbors, StaticGraph};
use crate::{Ensemble, Error, Result};

/// One Vicsek update. Positions advance with the current velocities, then
/// each heading becomes the circular mean of the headings within `radius`
/// plus uniform noise on `[−noise/2, noise/2]`.
pub fn vicsek_step<R: Rng + ?Sized>(
    e: &Ensemble,
    radius: f64,
    speed: f64,
    noise: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Ensemble> {
    if e.dim() != 2 {
        return Err(Error::Unsupported(format!("Vicsek needs d = 2, got d = {}", e.dim())));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("radius", "must be positive"));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid("noise", "must be nonnegative"));
    }
    let v = e.require_velocities()?;
    let n = e.len();
    let theta: Vec<f64> = (0..n).map(|i| v[2 * i + 1].atan2(v[2 * i])).collect();
    let sets = metric_neighbors(e, radius);
    let mut x = e.positions().to_vec();
    let mut v_new = vec![0.0; 2 * n];
    for i in 0..n {
        x[2 * i] += v[2 * i] * dt;
        x[2 * i + 1] += v[2 * i + 1] * dt;
        let (s, c) = sets[i].iter().fold((0.0, 0.0), |(s, c), &j| (s + theta[j].sin(), c + theta[j].cos()));
        let mut th = if s == 0.0 && c == 0.0 { theta[i] } else { s.atan2(c) };
        if noise > 0.0 {
            th += rng.random_range(-0.5 * noise..=0.5 * noise);
        }
        v_new[2 * i] = speed * th.cos();
        v_new[2 * i + 1] = speed * th.sin();
    }
    Ensemble::second_order(2, x, v_new)
}

/// Result of a single stochastic spin update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinEvent {
    Applied,
    /// The chosen voter had no neighbour.
    Skipped,
}

fn check_spins(spins: &[i8]) -> Result<()> {
    if let Some(s) = spins.iter().find(|s| **s != 1 && **s != -1) {
        return Err(Error::invalid("spins", format!("{s} is not ±1")));
    }
    Ok(())
}

/// Pick a random voter and copy the spin of a uniformly chosen neighbour.
pub fn voter_step<R: Rng + ?Sized>(spins: &mut [i8], graph: &StaticGraph, rng: &mut R) -> Result<SpinEvent> {
    let n = spins.len();
    if graph.nodes() != n {
        return Err(Error::DimensionMismatch { expected: n, found: graph.nodes() });
    }
    if n == 0 {
        return Err(Error::Empty);
    }
    check_spins(spins)?;
    let i = rng.random_range(0..n);
    let row = graph.row(i);
    let neigh: Vec<usize> = (0..n).filter(|&j| j != i && row[j] > 0.0).collect();
    if neigh.is_empty() {
        log::debug!("voter {i} has no neighbours; step skipped");
        return Ok(SpinEvent::Skipped);
    }
    let j = neigh[rng.random_range(0..neigh.len())];
    spins[i] = spins[j];
    Ok(SpinEvent::Applied)
}

/// One Sznajd update on a ring. A random adjacent pair `(i, i+1)` is
/// chosen; if it agrees, `i−1` and `i+2` adopt its spin with probability
/// `ferro_prob`; otherwise they take the antisymmetric pattern
/// `x_{i−1} = −xᵢ`, `x_{i+2} = −x_{i+1}`.
pub fn sznajd_step<R: Rng + ?Sized>(spins: &mut [i8], ferro_prob: f64, rng: &mut R) -> Result<()> {
    let n = spins.len();
    if n < 4 {
        return Err(Error::invalid("agents", "Sznajd ring needs N ≥ 4"));
    }
    if !(0.0..=1.0).contains(&ferro_prob) {
        return Err(Error::invalid("ferro_prob", "must lie in [0, 1]"));
    }
    check_spins(spins)?;
    let i = rng.random_range(0..n);
    sznajd_apply(spins, i, ferro_prob >= 1.0 || rng.random_bool(ferro_prob));
    Ok(())
}

/// Apply the rule at pair `(i, i+1)`; `fire_ferro` decides whether an
/// agreeing pair convinces its neighbours.
pub fn sznajd_apply(spins: &mut [i8], i: usize, fire_ferro: bool) {
    let n = spins.len();
    let (prev, next, after) = ((i + n - 1) % n, (i + 1) % n, (i + 2) % n);
    if spins[i] == spins[next] {
        if fire_ferro {
            spins[prev] = spins[i];
            spins[after] = spins[i];
        }
    } else {
        spins[prev] = -spins[i];
        spins[after] = -spins[next];
    }
}
