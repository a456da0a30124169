//! Diagnostics computed from ensemble snapshots.
//!
//! Everything here is a pure function of a snapshot; nothing is accumulated
//! incrementally along a trajectory.

use crate::linalg::{dist2, mean_rows};
use crate::record::RunRecord;
use crate::{Ensemble, Error, Result};

/// Snapshot statistics at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub time: f64,
    pub spatial_variance: f64,
    pub velocity_variance: Option<f64>,
    pub barycenter: Vec<f64>,
    pub mean_velocity: Option<Vec<f64>>,
}

impl Diagnostics {
    pub fn of(e: &Ensemble, time: f64) -> Self {
        let barycenter = mean_rows(e.positions(), e.dim());
        let mean_velocity = e.velocities().map(|v| mean_rows(v, e.dim()));
        Self {
            time,
            spatial_variance: spatial_variance(e),
            velocity_variance: e.velocities().map(|v| centered_second_moment(v, e.dim())),
            barycenter,
            mean_velocity,
        }
    }
}

/// Clusters found by single-linkage closure at tolerance `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    /// Cluster sizes, largest first.
    pub sizes: Vec<usize>,
    /// Per-cluster mean, in the same order as `sizes`.
    pub centers: Vec<Vec<f64>>,
    pub epsilon: f64,
}

impl ClusterSummary {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn total(&self) -> usize {
        self.sizes.iter().sum()
    }
}

/// `(x̄, v̄)`.
pub fn barycenter_and_mean_velocity(e: &Ensemble) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = e.require_velocities()?;
    Ok((mean_rows(e.positions(), e.dim()), mean_rows(v, e.dim())))
}

/// `V = (1/N) Σ ‖vᵢ − v̄‖²`, which equals `(1/2N²) Σᵢⱼ ‖vᵢ − vⱼ‖²`.
pub fn velocity_variance(e: &Ensemble) -> Result<f64> {
    let v = e.require_velocities()?;
    Ok(centered_second_moment(v, e.dim()))
}

/// `X = (1/2N²) Σᵢⱼ ‖xᵢ − xⱼ‖²`, evaluated through the centred form.
pub fn spatial_variance(e: &Ensemble) -> f64 {
    centered_second_moment(e.positions(), e.dim())
}

pub(crate) fn centered_second_moment(data: &[f64], dim: usize) -> f64 {
    let n = data.len() / dim;
    let m = mean_rows(data, dim);
    let s: f64 = data.chunks_exact(dim).map(|row| dist2(row, &m)).sum();
    (s / n as f64).max(0.0)
}

/// Largest distance from an agent to the barycenter.
pub fn max_radius(e: &Ensemble) -> f64 {
    let m = mean_rows(e.positions(), e.dim());
    e.positions().chunks_exact(e.dim()).map(|row| dist2(row, &m)).fold(0.0, f64::max).sqrt()
}

/// Partition `values` (row-major, `dim` columns) into the connected
/// components of the relation `‖a − b‖ ≤ epsilon`.
pub fn detect_clusters(values: &[f64], dim: usize, epsilon: f64) -> Result<ClusterSummary> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} is not positive")));
    }
    if dim == 0 || !values.len().is_multiple_of(dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: values.len() });
    }
    let n = values.len() / dim;
    let groups = if dim == 1 { clusters_1d(values, epsilon) } else { clusters_union_find(values, dim, epsilon) };

    let mut clusters: Vec<(usize, Vec<f64>)> = groups
        .into_iter()
        .map(|members| {
            let mut c = vec![0.0; dim];
            for &i in &members {
                for (ck, xk) in c.iter_mut().zip(&values[i * dim..(i + 1) * dim]) {
                    *ck += xk;
                }
            }
            let len = members.len();
            c.iter_mut().for_each(|ck| *ck /= len as f64);
            (len, c)
        })
        .collect();
    clusters.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal)));
    debug_assert_eq!(clusters.iter().map(|c| c.0).sum::<usize>(), n);
    let (sizes, centers) = clusters.into_iter().unzip();
    Ok(ClusterSummary { sizes, centers, epsilon })
}

/// Cluster summary of an ensemble's positions.
pub fn clusters_of(e: &Ensemble, epsilon: f64) -> Result<ClusterSummary> {
    detect_clusters(e.positions(), e.dim(), epsilon)
}

fn clusters_1d(values: &[f64], epsilon: f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut prev = f64::NEG_INFINITY;
    for i in order {
        let x = values[i];
        match groups.last_mut() {
            Some(g) if x - prev <= epsilon => g.push(i),
            _ => groups.push(vec![i]),
        }
        prev = x;
    }
    groups
}

fn clusters_union_find(values: &[f64], dim: usize, epsilon: f64) -> Vec<Vec<usize>> {
    let n = values.len() / dim;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    let eps2 = epsilon * epsilon;
    for i in 0..n {
        for j in (i + 1)..n {
            if dist2(&values[i * dim..(i + 1) * dim], &values[j * dim..(j + 1) * dim]) <= eps2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// First logged time at which every agent lies within `epsilon` of the
/// barycenter, or `None` if that never happens.
pub fn consensus_time(log: &RunRecord, epsilon: f64) -> Result<Option<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} is not positive")));
    }
    Ok(log.samples.iter().find(|s| s.max_radius <= epsilon).map(|s| s.t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::Sample;

    fn ens_v(v: &[f64], dim: usize) -> Ensemble {
        Ensemble::second_order(dim, vec![0.0; v.len()], v.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_velocities_have_zero_mean() {
        let e = ens_v(&[1.0, 0.0, -1.0, 0.0], 2);
        let (_, vbar) = barycenter_and_mean_velocity(&e).unwrap();
        assert_eq!(vbar, vec![0.0, 0.0]);
    }

    #[test]
    fn single_agent_identity() {
        let e = Ensemble::second_order(2, vec![3.0, -1.0], vec![0.5, 2.0]).unwrap();
        let (x, v) = barycenter_and_mean_velocity(&e).unwrap();
        assert_eq!(x, vec![3.0, -1.0]);
        assert_eq!(v, vec![0.5, 2.0]);
    }

    #[test]
    fn missing_velocities_is_an_error() {
        let e = Ensemble::from_scalars(vec![0.0, 1.0]).unwrap();
        assert!(matches!(velocity_variance(&e), Err(Error::MissingVelocities)));
        assert!(barycenter_and_mean_velocity(&e).is_err());
    }

    #[test]
    fn variance_hand_values() {
        // (1/8)(|1-(-1)|^2 * 2) = 1
        assert_eq!(velocity_variance(&ens_v(&[1.0, -1.0], 1)).unwrap(), 1.0);
        assert_eq!(velocity_variance(&ens_v(&[2.0, 2.0, 2.0], 1)).unwrap(), 0.0);
        let e = Ensemble::from_scalars(vec![0.0, 2.0]).unwrap();
        assert_eq!(spatial_variance(&e), 1.0);
        let same = Ensemble::from_scalars(vec![0.3; 5]).unwrap();
        assert!(spatial_variance(&same) < 1e-30);
    }

    #[test]
    fn clusters_small_examples() {
        let s = detect_clusters(&[0.0, 0.001, 1.0], 1, 0.01).unwrap();
        assert_eq!(s.sizes, vec![2, 1]);
        assert!((s.centers[0][0] - 0.0005).abs() < 1e-15);

        let s = detect_clusters(&[0.5; 7], 1, 1e-3).unwrap();
        assert_eq!(s.sizes, vec![7]);

        let s = detect_clusters(&[0.0, 1.0, 2.0, 3.0], 1, 0.5).unwrap();
        assert_eq!(s.sizes, vec![1, 1, 1, 1]);

        assert!(detect_clusters(&[0.0], 1, 0.0).is_err());
        assert!(detect_clusters(&[0.0], 1, -1.0).is_err());
    }

    #[test]
    fn clusters_transitive_chain_2d() {
        // 0-1 and 1-2 within eps; 0-2 not: still one cluster
        let pts = [0.0, 0.0, 0.09, 0.0, 0.18, 0.0, 5.0, 5.0];
        let s = detect_clusters(&pts, 2, 0.1).unwrap();
        assert_eq!(s.sizes, vec![3, 1]);
        assert_eq!(s.centers[1], vec![5.0, 5.0]);
    }

    fn record_with_radii(radii: &[f64]) -> RunRecord {
        let final_state = Ensemble::from_scalars(vec![0.0]).unwrap();
        let mut r = RunRecord::new(0, 1, final_state);
        for (k, &m) in radii.iter().enumerate() {
            r.samples.push(Sample::bare(k as f64, 0.0, m));
        }
        r
    }

    #[test]
    fn consensus_time_first_hit() {
        let r = record_with_radii(&[1e-4, 1e-4]);
        assert_eq!(consensus_time(&r, 1e-3).unwrap(), Some(0.0));
        let r = record_with_radii(&[0.5, 0.5, 0.5]);
        assert_eq!(consensus_time(&r, 0.1).unwrap(), None);
        let r = record_with_radii(&[0.5, 0.05, 0.01]);
        assert_eq!(consensus_time(&r, 0.1).unwrap(), Some(1.0));
        assert!(consensus_time(&r, 0.0).is_err());
    }
}
