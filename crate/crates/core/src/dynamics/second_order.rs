//! Second-order right-hand sides: `ẋᵢ = vᵢ`, `v̇ᵢ = fᵢ(x, v)`.

use crate::linalg::dist2;
use crate::par::{for_agents, for_each_chunk, AGENT_PAR_THRESHOLD};
use crate::potential::{morse_energy_and_gradient, Morse, PotentialSpec};
use crate::{Ensemble, Error, Result};

/// `(1/N) Σⱼ a(‖xⱼ − xᵢ‖)(vⱼ − vᵢ)` for every agent, written into `out`.
///
/// Below the parallel threshold each pair weight is computed once and
/// applied to both agents; the choice depends on `N` only, so results do
/// not change with the build features.
pub(crate) fn alignment_into(x: &[f64], v: &[f64], d: usize, a: &PotentialSpec, out: &mut [f64]) {
    let n = x.len() / d;
    let inv_n = 1.0 / n as f64;
    if n < AGENT_PAR_THRESHOLD {
        out.fill(0.0);
        for i in 0..n {
            let xi = &x[i * d..(i + 1) * d];
            for j in (i + 1)..n {
                let w = a.value_sq(dist2(&x[j * d..(j + 1) * d], xi));
                for k in 0..d {
                    let f = w * (v[j * d + k] - v[i * d + k]);
                    out[i * d + k] += f;
                    out[j * d + k] -= f;
                }
            }
        }
        out.iter_mut().for_each(|o| *o *= inv_n);
        return;
    }
    for_each_chunk(out, d, for_agents(n), |i, oi| {
        let xi = &x[i * d..(i + 1) * d];
        let vi = &v[i * d..(i + 1) * d];
        oi.fill(0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let w = a.value_sq(dist2(&x[j * d..(j + 1) * d], xi));
            for k in 0..d {
                oi[k] += w * (v[j * d + k] - vi[k]);
            }
        }
        oi.iter_mut().for_each(|o| *o *= inv_n);
    });
}

/// Cucker–Smale: returns `(ẋ, v̇)`.
pub fn cs_rhs(e: &Ensemble, potential: &PotentialSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = e.require_velocities()?;
    let mut dv = vec![0.0; v.len()];
    alignment_into(e.positions(), v, e.dim(), potential, &mut dv);
    Ok((v.to_vec(), dv))
}

pub(crate) fn check_alpha(alpha: &[f64], n: usize) -> Result<()> {
    if alpha.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: alpha.len() });
    }
    if let Some(a) = alpha.iter().find(|a| !(**a >= 0.0 && **a <= 1.0)) {
        return Err(Error::invalid("alpha", format!("{a} lies outside [0, 1]")));
    }
    Ok(())
}

/// `v̇ᵢ = αᵢ(V − vᵢ) + (1 − αᵢ)(1/N) Σⱼ a(‖xⱼ − xᵢ‖)(vⱼ − vᵢ)`.
pub fn migration_rhs(
    e: &Ensemble,
    potential: &PotentialSpec,
    target: &[f64],
    alpha: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = e.require_velocities()?;
    check_alpha(alpha, e.len())?;
    if target.len() != e.dim() {
        return Err(Error::DimensionMismatch { expected: e.dim(), found: target.len() });
    }
    let mut dv = vec![0.0; v.len()];
    migration_into(e.positions(), v, e.dim(), potential, target, alpha, &mut dv);
    Ok((v.to_vec(), dv))
}

pub(crate) fn migration_into(
    x: &[f64],
    v: &[f64],
    d: usize,
    potential: &PotentialSpec,
    target: &[f64],
    alpha: &[f64],
    out: &mut [f64],
) {
    alignment_into(x, v, d, potential, out);
    for (i, oi) in out.chunks_exact_mut(d).enumerate() {
        let a = alpha[i];
        for k in 0..d {
            oi[k] = a * (target[k] - v[i * d + k]) + (1.0 - a) * oi[k];
        }
    }
}

/// D'Orsogna: `v̇ᵢ = (α − β‖vᵢ‖²)vᵢ − ∇ᵢU`.
pub fn dorsogna_rhs(e: &Ensemble, propulsion: f64, friction: f64, morse: &Morse) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = e.require_velocities()?;
    let mut dv = vec![0.0; v.len()];
    dorsogna_into(e, propulsion, friction, morse, &mut dv)?;
    Ok((v.to_vec(), dv))
}

pub(crate) fn dorsogna_into(
    e: &Ensemble,
    propulsion: f64,
    friction: f64,
    morse: &Morse,
    out: &mut [f64],
) -> Result<()> {
    let v = e.require_velocities()?;
    let d = e.dim();
    if e.len() >= 2 {
        let (_, grad) = morse_energy_and_gradient(e, morse)?;
        out.copy_from_slice(&grad);
        out.iter_mut().for_each(|g| *g = -*g);
    } else {
        out.fill(0.0);
    }
    for (i, oi) in out.chunks_exact_mut(d).enumerate() {
        let vi = &v[i * d..(i + 1) * d];
        let s2: f64 = vi.iter().map(|c| c * c).sum();
        let f = propulsion - friction * s2;
        for k in 0..d {
            oi[k] += f * vi[k];
        }
    }
    Ok(())
}
