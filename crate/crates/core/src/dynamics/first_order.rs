//! First-order consensus right-hand sides: `ẋᵢ = fᵢ(x)`.

use crate::linalg::{dist2, dot};
use crate::network::{degrees, Neighborhood, Network, Scaling, StaticGraph};
use crate::par::{for_agents, for_each_chunk};
use crate::potential::PotentialSpec;
use crate::{Ensemble, Error, Result};

/// `ẋᵢ = (1/degᵢ) Σ_{j∈𝒩ᵢ} (xⱼ − xᵢ)`.
pub fn hk_rhs(e: &Ensemble, network: &Network) -> Result<Vec<f64>> {
    let mut out = vec![0.0; e.positions().len()];
    hk_rhs_into(e, network, &mut out)?;
    Ok(out)
}

pub(crate) fn hk_rhs_into(e: &Ensemble, network: &Network, out: &mut [f64]) -> Result<()> {
    if e.dim() == 1 && network.spec.scaling == Scaling::ByCardinality {
        match network.spec.neighborhood {
            Neighborhood::Metric { radius } => {
                hk_metric_1d(e.positions(), radius, network, out);
                return Ok(());
            }
            Neighborhood::Topological { k } => {
                hk_topological_1d(e.positions(), k, network, out);
                return Ok(());
            }
            _ => {}
        }
    }
    let sets = network.neighbors(e)?;
    let deg = degrees(&sets, network.spec.scaling);
    let d = e.dim();
    let x = e.positions();
    for (i, set) in sets.iter().enumerate() {
        let xi = &x[i * d..(i + 1) * d];
        let oi = &mut out[i * d..(i + 1) * d];
        oi.fill(0.0);
        for &j in set {
            for k in 0..d {
                oi[k] += x[j * d + k] - xi[k];
            }
        }
        oi.iter_mut().for_each(|v| *v /= deg[i]);
    }
    Ok(())
}

/// Sliding window over sorted opinions; long-range partners outside the
/// window are added individually.
fn hk_metric_1d(x: &[f64], r: f64, network: &Network, out: &mut [f64]) {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let (mut lo, mut hi) = (0usize, 0usize);
    for p in 0..n {
        let i = order[p];
        let xi = x[i];
        while xi - x[order[lo]] > r {
            lo += 1;
        }
        hi = hi.max(p);
        while hi + 1 < n && x[order[hi + 1]] - xi <= r {
            hi += 1;
        }
        let mut sum = 0.0;
        for &j in &order[lo..=hi] {
            sum += x[j] - xi;
        }
        let mut count = (hi - lo + 1) as f64;
        if let Some(links) = &network.links {
            for &j in links.partners(i) {
                if (x[j] - xi).abs() > r {
                    sum += x[j] - xi;
                    count += 1.0;
                }
            }
        }
        out[i] = sum / count;
    }
}

/// Outward walk over sorted opinions, admitting whole distance-tie groups
/// while the count stays within `k`.
fn hk_topological_1d(x: &[f64], k: usize, network: &Network, out: &mut [f64]) {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    for p in 0..n {
        let i = order[p];
        let xi = x[i];
        let (mut left, mut right) = (p as isize - 1, p + 1);
        while left >= 0 && x[order[left as usize]] == xi {
            left -= 1;
        }
        while right < n && x[order[right]] == xi {
            right += 1;
        }
        let zero = (right as isize - left - 1) as usize;
        let mut sum = 0.0;
        let mut count = 1usize;
        // Largest admitted distance; None when only i itself is admitted.
        let mut reach = None;
        if zero <= k {
            count = zero;
            reach = Some(0.0);
            loop {
                let dl = if left >= 0 { xi - x[order[left as usize]] } else { f64::INFINITY };
                let dr = if right < n { x[order[right]] - xi } else { f64::INFINITY };
                let d = dl.min(dr);
                if d == f64::INFINITY {
                    break;
                }
                let (mut l2, mut r2, mut part) = (left, right, 0.0);
                while l2 >= 0 && xi - x[order[l2 as usize]] == d {
                    part += x[order[l2 as usize]] - xi;
                    l2 -= 1;
                }
                while r2 < n && x[order[r2]] - xi == d {
                    part += x[order[r2]] - xi;
                    r2 += 1;
                }
                let group = (left - l2) as usize + (r2 - right);
                if count + group > k {
                    break;
                }
                count += group;
                sum += part;
                reach = Some(d);
                left = l2;
                right = r2;
            }
        }
        if let Some(links) = &network.links {
            for &j in links.partners(i) {
                let inside = match reach {
                    Some(d) => (x[j] - xi).abs() <= d,
                    None => j == i,
                };
                if !inside {
                    sum += x[j] - xi;
                    count += 1;
                }
            }
        }
        out[i] = sum / count as f64;
    }
}

/// `ẋᵢ = Σⱼ φᵢⱼ (xⱼ − xᵢ) / Σⱼ φᵢⱼ` with `φᵢⱼ = φ(‖xᵢ − xⱼ‖²)`.
pub fn jm_rhs(e: &Ensemble, phi: &PotentialSpec) -> Result<Vec<f64>> {
    let mut out = vec![0.0; e.positions().len()];
    jm_rhs_into(e, phi, &mut out)?;
    Ok(out)
}

pub(crate) fn jm_rhs_into(e: &Ensemble, phi: &PotentialSpec, out: &mut [f64]) -> Result<()> {
    let d = e.dim();
    let x = e.positions();
    let n = e.len();
    for i in 0..n {
        let xi = &x[i * d..(i + 1) * d];
        let oi = &mut out[i * d..(i + 1) * d];
        oi.fill(0.0);
        let mut norm = 0.0;
        for j in 0..n {
            let xj = &x[j * d..(j + 1) * d];
            let w = phi.value(dist2(xi, xj));
            if w == 0.0 {
                continue;
            }
            norm += w;
            for k in 0..d {
                oi[k] += w * (xj[k] - xi[k]);
            }
        }
        if !(norm > 0.0) {
            return Err(Error::Singular(format!("agent {i} has zero total influence")));
        }
        oi.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(())
}

/// `ẋᵢ = (1/degᵢ) Σⱼ aᵢⱼ (xⱼ − xᵢ)`.
pub fn linear_protocol_rhs(e: &Ensemble, weights: &StaticGraph, scaling: Scaling) -> Result<Vec<f64>> {
    let mut out = vec![0.0; e.positions().len()];
    linear_protocol_into(e, weights, scaling, &mut out)?;
    Ok(out)
}

pub(crate) fn linear_protocol_into(
    e: &Ensemble,
    weights: &StaticGraph,
    scaling: Scaling,
    out: &mut [f64],
) -> Result<()> {
    let n = e.len();
    if weights.nodes() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.nodes() });
    }
    let d = e.dim();
    let x = e.positions();
    for i in 0..n {
        let row = weights.row(i);
        let deg = match scaling {
            Scaling::ByN => n as f64,
            Scaling::ByCardinality => (1 + weights.degree(i)) as f64,
            Scaling::ByWeightSum => (0..n).filter(|&j| j != i).map(|j| row[j]).sum(),
        };
        let oi = &mut out[i * d..(i + 1) * d];
        oi.fill(0.0);
        if deg == 0.0 {
            continue;
        }
        for j in 0..n {
            if j == i || row[j] == 0.0 {
                continue;
            }
            for k in 0..d {
                oi[k] += row[j] * (x[j * d + k] - x[i * d + k]);
            }
        }
        oi.iter_mut().for_each(|v| *v /= deg);
    }
    Ok(())
}

/// Unit-norm tolerance accepted by [`sphere_rhs`].
pub const SPHERE_TOL: f64 = 1e-9;

/// `ẋᵢ = Π_{xᵢ}(Σⱼ aᵢⱼ (xⱼ − xᵢ))` with `Π_x(y) = y − ⟨y, x⟩x`.
pub fn sphere_rhs(e: &Ensemble, weights: &StaticGraph) -> Result<Vec<f64>> {
    let d = e.dim();
    for (i, xi) in e.positions().chunks_exact(d).enumerate() {
        let r = dot(xi, xi).sqrt();
        if (r - 1.0).abs() > SPHERE_TOL {
            return Err(Error::invalid("positions", format!("agent {i} has norm {r}, not 1")));
        }
    }
    let mut out = vec![0.0; e.positions().len()];
    sphere_into(e, weights, &mut out)?;
    Ok(out)
}

pub(crate) fn sphere_into(e: &Ensemble, weights: &StaticGraph, out: &mut [f64]) -> Result<()> {
    let n = e.len();
    if weights.nodes() != n {
        return Err(Error::DimensionMismatch { expected: n, found: weights.nodes() });
    }
    let d = e.dim();
    let x = e.positions();
    let exec = for_agents(n);
    for_each_chunk(out, d, exec, |i, oi| {
        let xi = &x[i * d..(i + 1) * d];
        let row = weights.row(i);
        oi.fill(0.0);
        for j in 0..n {
            if j == i || row[j] == 0.0 {
                continue;
            }
            for k in 0..d {
                oi[k] += row[j] * (x[j * d + k] - xi[k]);
            }
        }
        let proj = dot(oi, xi);
        for k in 0..d {
            oi[k] -= proj * xi[k];
        }
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{NetworkSpec, StaticGraph};
    use approx::assert_relative_eq;

    fn line(x: &[f64]) -> Ensemble {
        Ensemble::from_scalars(x.to_vec()).unwrap()
    }

    #[test]
    fn hk_hand_example() {
        let net = Network::local(NetworkSpec::metric(0.1));
        let v = hk_rhs(&line(&[0.0, 0.05, 1.0]), &net).unwrap();
        assert_relative_eq!(v[0], 0.025, epsilon = 1e-16);
        assert_relative_eq!(v[1], -0.025, epsilon = 1e-16);
        assert_eq!(v[2], 0.0);
    }

    #[test]
    fn hk_fast_path_matches_generic() {
        let x = [0.31, 0.02, 0.27, 0.95, 0.5, 0.44, 0.1, 0.12, 0.7];
        let net = Network::local(NetworkSpec::metric(0.15));
        let fast = hk_rhs(&line(&x), &net).unwrap();
        let flat: Vec<f64> = x.iter().flat_map(|v| [*v, 0.0]).collect();
        let slow = hk_rhs(&Ensemble::first_order(2, flat).unwrap(), &net).unwrap();
        for i in 0..x.len() {
            assert_relative_eq!(fast[i], slow[2 * i], epsilon = 1e-15);
        }
    }

    #[test]
    fn hk_topological_fast_path_matches_generic() {
        // ties at equal distances and a coincident triple
        let x = [0.3, 0.1, 0.5, 0.3, 0.3, 0.9, 0.7, 0.2, 0.4];
        let flat: Vec<f64> = x.iter().flat_map(|v| [*v, 0.0]).collect();
        let planar = Ensemble::first_order(2, flat).unwrap();
        for k in 1..=9 {
            let spec = NetworkSpec::topological(k).with_long_range(crate::network::LongRange::new(0.0));
            let mut rng = crate::rng::seeded(k as u64);
            let net = Network::sample(spec, &planar, &mut rng).unwrap();
            let fast = hk_rhs(&line(&x), &net).unwrap();
            let slow = hk_rhs(&planar, &net).unwrap();
            for i in 0..x.len() {
                assert_relative_eq!(fast[i], slow[2 * i], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn hk_by_n_scaling() {
        let net = Network::local(NetworkSpec::metric(0.1).with_scaling(Scaling::ByN));
        let v = hk_rhs(&line(&[0.0, 0.05, 1.0]), &net).unwrap();
        assert_relative_eq!(v[0], 0.05 / 3.0, epsilon = 1e-16);
    }

    #[test]
    fn jm_hand_example_and_isolated() {
        let phi = PotentialSpec::JabinMotsch(crate::potential::Influence::Power { p: 1.0 });
        let v = jm_rhs(&line(&[0.0, 0.5]), &phi).unwrap();
        assert_relative_eq!(v[0], 0.75 * 0.5 / 1.75, epsilon = 1e-15);
        let v = jm_rhs(&line(&[0.0, 3.0]), &phi).unwrap();
        assert_eq!(v, vec![0.0, 0.0]);
        let ones = jm_rhs(&line(&[0.0, 1.0, 5.0]), &PotentialSpec::Constant(1.0)).unwrap();
        assert_relative_eq!(ones[2], 2.0 - 5.0, epsilon = 1e-14);
        assert!(jm_rhs(&line(&[0.0, 1.0]), &PotentialSpec::Constant(0.0)).is_err());
    }

    #[test]
    fn linear_protocol_two_nodes() {
        let g = StaticGraph::complete(2);
        let v = linear_protocol_rhs(&line(&[0.0, 1.0]), &g, Scaling::ByN).unwrap();
        assert_eq!(v, vec![0.5, -0.5]);
        let none = linear_protocol_rhs(&line(&[0.0, 1.0]), &StaticGraph::empty(2), Scaling::ByWeightSum).unwrap();
        assert_eq!(none, vec![0.0, 0.0]);
        assert!(linear_protocol_rhs(&line(&[0.0]), &g, Scaling::ByN).is_err());
    }

    #[test]
    fn sphere_projection_example() {
        let e = Ensemble::first_order(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let v = sphere_rhs(&e, &StaticGraph::complete(2)).unwrap();
        assert_eq!(&v[0..2], &[0.0, 1.0]);
        let anti = Ensemble::first_order(2, vec![1.0, 0.0, -1.0, 0.0]).unwrap();
        assert!(sphere_rhs(&anti, &StaticGraph::complete(2)).unwrap().iter().all(|x| *x == 0.0));
        let off = Ensemble::first_order(2, vec![2.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(sphere_rhs(&off, &StaticGraph::complete(2)).is_err());
    }
}
