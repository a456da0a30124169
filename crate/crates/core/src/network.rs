//! Neighbourhood rules and interaction graphs.
//!
//! Neighbour sets are returned as sorted index lists and always contain the
//! agent itself. This is harmless in consensus sums (`xᵢ − xᵢ = 0`) and makes
//! `k = 1` topological interaction mean "no interaction".

use std::fmt::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::linalg::{dist, dot, norm};
use crate::{Ensemble, Error, Result};

/// One sorted index list per agent.
pub type NeighborSets = Vec<Vec<usize>>;

/// Normalisation `degᵢ` applied to an agent's interaction sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// `degᵢ = N`.
    ByN,
    /// `degᵢ = card(𝒩ᵢ)`.
    #[default]
    ByCardinality,
    /// `degᵢ = Σⱼ aᵢⱼ`.
    ByWeightSum,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Neighborhood {
    FullyConnected,
    Metric {
        radius: f64,
    },
    Topological {
        k: usize,
    },
    /// One-dimensional: `j ∈ 𝒩ᵢ` iff `−left ≤ xᵢ − xⱼ ≤ right`.
    AsymmetricMetric {
        left: f64,
        right: f64,
    },
    Static(StaticGraph),
    VisionCone {
        base: Box<Neighborhood>,
        half_angle: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LinkDistance {
    #[default]
    Euclidean,
    /// Used with lattice graphs.
    Manhattan,
}

/// One extra link per agent to a non-neighbour, drawn with probability
/// proportional to `ρ^(−exponent)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LongRange {
    pub exponent: f64,
    pub distance: LinkDistance,
}

impl LongRange {
    pub fn new(exponent: f64) -> Self {
        Self { exponent, distance: LinkDistance::Euclidean }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub neighborhood: Neighborhood,
    pub long_range: Option<LongRange>,
    pub scaling: Scaling,
}

impl NetworkSpec {
    pub fn new(neighborhood: Neighborhood) -> Self {
        Self { neighborhood, long_range: None, scaling: Scaling::ByCardinality }
    }

    pub fn metric(radius: f64) -> Self {
        Self::new(Neighborhood::Metric { radius })
    }

    pub fn topological(k: usize) -> Self {
        Self::new(Neighborhood::Topological { k })
    }

    pub fn with_long_range(mut self, lr: LongRange) -> Self {
        self.long_range = Some(lr);
        self
    }

    pub fn with_scaling(mut self, scaling: Scaling) -> Self {
        self.scaling = scaling;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_neighborhood(&self.neighborhood)?;
        if let Some(lr) = &self.long_range {
            if !(lr.exponent >= 0.0) {
                return Err(Error::invalid("long_range.exponent", "must be ≥ 0"));
            }
        }
        Ok(())
    }
}

fn validate_neighborhood(n: &Neighborhood) -> Result<()> {
    match n {
        Neighborhood::FullyConnected => Ok(()),
        Neighborhood::Metric { radius } if !(*radius > 0.0) => {
            Err(Error::invalid("radius", format!("{radius} is not positive")))
        }
        Neighborhood::Topological { k: 0 } => Err(Error::invalid("k", "must be at least 1")),
        Neighborhood::AsymmetricMetric { left, right } if !(*left > 0.0 && *right > 0.0) => {
            Err(Error::invalid("asymmetric radii", "both must be positive"))
        }
        Neighborhood::VisionCone { base, half_angle } => {
            if !(*half_angle > 0.0 && *half_angle <= std::f64::consts::PI) {
                return Err(Error::invalid("half_angle", "must lie in (0, π]"));
            }
            validate_neighborhood(base)
        }
        _ => Ok(()),
    }
}

/// Long-range links sampled once and reused for the whole run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LongRangeLinks {
    /// `(agent, partner)` for every agent that received a link.
    pub pairs: Vec<(usize, usize)>,
    extra: Vec<Vec<usize>>,
}

impl LongRangeLinks {
    pub fn partners(&self, i: usize) -> &[usize] {
        self.extra.get(i).map_or(&[], Vec::as_slice)
    }
}

/// A network specification bound to the links sampled for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub links: Option<LongRangeLinks>,
}

impl Network {
    /// Network without long-range augmentation (any `long_range` in the
    /// spec is ignored until [`Network::sample`] is used).
    pub fn local(spec: NetworkSpec) -> Self {
        Self { spec, links: None }
    }

    /// Bind the spec to an initial state, sampling long-range links if the
    /// spec asks for them.
    pub fn sample<R: Rng + ?Sized>(spec: NetworkSpec, initial: &Ensemble, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let links = match spec.long_range {
            Some(lr) => Some(augment_long_range(&spec.neighborhood, lr, initial, rng)?),
            None => None,
        };
        Ok(Self { spec, links })
    }

    pub fn neighbors(&self, e: &Ensemble) -> Result<NeighborSets> {
        let mut sets = neighborhood_sets(&self.spec.neighborhood, e)?;
        if let Some(links) = &self.links {
            for (i, set) in sets.iter_mut().enumerate() {
                let extra = links.partners(i);
                if !extra.is_empty() {
                    set.extend_from_slice(extra);
                    set.sort_unstable();
                    set.dedup();
                }
            }
        }
        Ok(sets)
    }
}

/// Neighbour sets of a bare neighbourhood rule.
pub fn neighborhood_sets(n: &Neighborhood, e: &Ensemble) -> Result<NeighborSets> {
    validate_neighborhood(n)?;
    match n {
        Neighborhood::FullyConnected => {
            let all: Vec<usize> = (0..e.len()).collect();
            Ok(vec![all; e.len()])
        }
        Neighborhood::Metric { radius } => Ok(metric_neighbors(e, *radius)),
        Neighborhood::Topological { k } => Ok(topological_neighbors(e, *k)),
        Neighborhood::AsymmetricMetric { left, right } => asymmetric_neighbors(e, *left, *right),
        Neighborhood::Static(g) => {
            if g.nodes() != e.len() {
                return Err(Error::DimensionMismatch { expected: e.len(), found: g.nodes() });
            }
            Ok(g.neighbor_sets())
        }
        Neighborhood::VisionCone { base, half_angle } => {
            let sets = neighborhood_sets(base, e)?;
            vision_cone_filter(e, &sets, *half_angle)
        }
    }
}

/// `j ∈ 𝒩ᵢ` iff `‖xᵢ − xⱼ‖ ≤ r`.
pub fn metric_neighbors(e: &Ensemble, r: f64) -> NeighborSets {
    let n = e.len();
    if e.dim() == 1 {
        return metric_neighbors_1d(e.positions(), r);
    }
    (0..n).map(|i| (0..n).filter(|&j| dist(e.position(i), e.position(j)) <= r).collect()).collect()
}

fn sorted_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    order
}

fn metric_neighbors_1d(x: &[f64], r: f64) -> NeighborSets {
    let n = x.len();
    let order = sorted_order(x);
    let mut sets = vec![Vec::new(); n];
    let (mut lo, mut hi) = (0usize, 0usize);
    for p in 0..n {
        let xi = x[order[p]];
        while xi - x[order[lo]] > r {
            lo += 1;
        }
        if hi < p {
            hi = p;
        }
        while hi + 1 < n && x[order[hi + 1]] - xi <= r {
            hi += 1;
        }
        let mut s: Vec<usize> = order[lo..=hi].to_vec();
        s.sort_unstable();
        sets[order[p]] = s;
    }
    sets
}

/// `j ∈ 𝒩ᵢ` iff `card{m : ‖xᵢ − xₘ‖ ≤ ‖xᵢ − xⱼ‖} ≤ k`. Ties are admitted
/// together, so a set may exceed `k` members; when even the agents
/// coincident with `i` outnumber `k`, the set is `{i}`.
pub fn topological_neighbors(e: &Ensemble, k: usize) -> NeighborSets {
    let n = e.len();
    if e.dim() == 1 {
        return topological_neighbors_1d(e.positions(), k);
    }
    (0..n)
        .map(|i| {
            let mut by_dist: Vec<(f64, usize)> = (0..n).map(|j| (dist(e.position(i), e.position(j)), j)).collect();
            by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut set = Vec::new();
            let mut start = 0;
            while start < n {
                let d = by_dist[start].0;
                let mut end = start;
                while end < n && by_dist[end].0 == d {
                    end += 1;
                }
                if end > k {
                    break;
                }
                set.extend(by_dist[start..end].iter().map(|p| p.1));
                start = end;
            }
            finish_set(set, i)
        })
        .collect()
}

fn finish_set(mut set: Vec<usize>, i: usize) -> Vec<usize> {
    if set.is_empty() {
        set.push(i);
    }
    set.sort_unstable();
    set
}

fn topological_neighbors_1d(x: &[f64], k: usize) -> NeighborSets {
    let n = x.len();
    let order = sorted_order(x);
    let mut sets = vec![Vec::new(); n];
    for p in 0..n {
        let xi = x[order[p]];
        // Next unvisited sorted positions on either side.
        let mut left = p as isize - 1;
        let mut right = p + 1;
        let mut set = vec![order[p]];
        let mut count = 1usize;
        // Agents coincident with i are distance-0 ties of i itself.
        let mut zero_group = Vec::new();
        while left >= 0 && x[order[left as usize]] == xi {
            zero_group.push(order[left as usize]);
            left -= 1;
        }
        while right < n && x[order[right]] == xi {
            zero_group.push(order[right]);
            right += 1;
        }
        if count + zero_group.len() > k {
            sets[order[p]] = set;
            continue;
        }
        count += zero_group.len();
        set.extend(zero_group);
        loop {
            let dl = if left >= 0 { xi - x[order[left as usize]] } else { f64::INFINITY };
            let dr = if right < n { x[order[right]] - xi } else { f64::INFINITY };
            let d = dl.min(dr);
            if d == f64::INFINITY {
                break;
            }
            let before = set.len();
            let mut l2 = left;
            while l2 >= 0 && xi - x[order[l2 as usize]] == d {
                set.push(order[l2 as usize]);
                l2 -= 1;
            }
            let mut r2 = right;
            while r2 < n && x[order[r2]] - xi == d {
                set.push(order[r2]);
                r2 += 1;
            }
            if count + set.len() - before > k {
                set.truncate(before);
                break;
            }
            count += set.len() - before;
            left = l2;
            right = r2;
        }
        sets[order[p]] = finish_set(set, order[p]);
    }
    sets
}

fn asymmetric_neighbors(e: &Ensemble, left: f64, right: f64) -> Result<NeighborSets> {
    if e.dim() != 1 {
        return Err(Error::Unsupported("asymmetric confidence is defined for d = 1 only".into()));
    }
    let x = e.positions();
    Ok((0..x.len())
        .map(|i| {
            (0..x.len())
                .filter(|&j| {
                    let d = x[i] - x[j];
                    -left <= d && d <= right
                })
                .collect()
        })
        .collect())
}

/// Keep `j ≠ i` only if the angle between `vᵢ` and `xⱼ − xᵢ` is at most
/// `half_angle`. Agents at rest, and neighbours coincident with `i`, are
/// left unfiltered.
pub fn vision_cone_filter(e: &Ensemble, sets: &[Vec<usize>], half_angle: f64) -> Result<NeighborSets> {
    let v = e.require_velocities()?;
    if !(half_angle > 0.0 && half_angle <= std::f64::consts::PI) {
        return Err(Error::invalid("half_angle", "must lie in (0, π]"));
    }
    let d = e.dim();
    let cos_t = half_angle.cos();
    let keep_all = half_angle >= std::f64::consts::PI;
    Ok(sets
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let vi = &v[i * d..(i + 1) * d];
            let speed = norm(vi);
            if keep_all || speed == 0.0 {
                return set.clone();
            }
            set.iter()
                .copied()
                .filter(|&j| {
                    if j == i {
                        return true;
                    }
                    let rel: Vec<f64> = e.position(j).iter().zip(e.position(i)).map(|(a, b)| a - b).collect();
                    let len = norm(&rel);
                    len == 0.0 || dot(vi, &rel) / (speed * len) >= cos_t
                })
                .collect()
        })
        .collect())
}

/// Sample one link per agent towards a non-neighbour of the initial state.
pub fn augment_long_range<R: Rng + ?Sized>(
    base: &Neighborhood,
    lr: LongRange,
    initial: &Ensemble,
    rng: &mut R,
) -> Result<LongRangeLinks> {
    if !(lr.exponent >= 0.0) {
        return Err(Error::invalid("long_range.exponent", "must be ≥ 0"));
    }
    let sets = neighborhood_sets(base, initial)?;
    let n = initial.len();
    let mut pairs = Vec::with_capacity(n);
    let mut extra = vec![Vec::new(); n];
    for (i, set) in sets.iter().enumerate() {
        let candidates: Vec<usize> = (0..n).filter(|j| *j != i && set.binary_search(j).is_err()).collect();
        if candidates.is_empty() {
            log::debug!("agent {i}: no non-neighbour candidates for a long-range link");
            continue;
        }
        let rho: Vec<f64> =
            candidates.iter().map(|&j| link_distance(initial.position(i), initial.position(j), lr.distance)).collect();
        let j = pick_partner(&candidates, &rho, lr.exponent, rng);
        pairs.push((i, j));
        extra[i].push(j);
        extra[j].push(i);
    }
    for x in &mut extra {
        x.sort_unstable();
        x.dedup();
    }
    Ok(LongRangeLinks { pairs, extra })
}

fn link_distance(a: &[f64], b: &[f64], kind: LinkDistance) -> f64 {
    match kind {
        LinkDistance::Euclidean => dist(a, b),
        LinkDistance::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
    }
}

fn pick_partner<R: Rng + ?Sized>(candidates: &[usize], rho: &[f64], exponent: f64, rng: &mut R) -> usize {
    if candidates.len() == 1 {
        return candidates[0];
    }
    if exponent == 0.0 {
        return candidates[rng.random_range(0..candidates.len())];
    }
    // Coincident non-neighbours have infinite weight; pick among them.
    let at_zero: Vec<usize> = candidates.iter().zip(rho).filter(|(_, r)| **r == 0.0).map(|(c, _)| *c).collect();
    if !at_zero.is_empty() {
        return at_zero[rng.random_range(0..at_zero.len())];
    }
    // Normalise by the smallest distance so weights stay finite.
    let rmin = rho.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = rho.iter().map(|r| (rmin / r).powf(exponent)).collect();
    match WeightedIndex::new(&weights) {
        Ok(w) => candidates[w.sample(rng)],
        Err(_) => candidates[rng.random_range(0..candidates.len())],
    }
}

/// Dense nonnegative weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticGraph {
    n: usize,
    weights: Vec<f64>,
}

impl StaticGraph {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, found: weights.len() });
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0)) {
            return Err(Error::invalid("weights", format!("entry {w} is negative or NaN")));
        }
        Ok(Self { n, weights })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, weights: vec![0.0; n * n] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    g.set(i, j, 1.0);
                }
            }
        }
        g
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        self.weights[i * self.n + j] = w;
    }

    /// Set `(i, j)` and `(j, i)`.
    pub fn connect(&mut self, i: usize, j: usize, w: f64) {
        self.set(i, j, w);
        self.set(j, i, w);
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| j != i && self.weight(i, j) > 0.0).count()
    }

    /// Nonzero off-diagonal entries as `(i, j, w)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (0..self.n).filter(move |&j| j != i && self.weight(i, j) > 0.0).map(move |j| (i, j, self.weight(i, j)))
        })
    }

    pub fn neighbor_sets(&self) -> NeighborSets {
        (0..self.n).map(|i| (0..self.n).filter(|&j| j == i || self.weight(i, j) > 0.0).collect()).collect()
    }

    /// Edge-list text: a `# nodes=N` line, then one `i j w` line per
    /// directed nonzero entry (0-based indices).
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("# nodes={}\n", self.n);
        for (i, j, w) in self.edges() {
            let _ = writeln!(s, "{i} {j} {w}");
        }
        s
    }

    /// Parse [`StaticGraph::to_edge_list`] output. Without a `# nodes=`
    /// header the node count is one more than the largest index.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut declared = None;
        let mut entries = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("nodes=") {
                    declared = Some(
                        v.trim().parse::<usize>().map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() })?,
                    );
                }
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected `i j w`, found {} fields", parts.len()),
                });
            }
            let parse_err = |m: String| Error::Parse { line: ln + 1, message: m };
            let i: usize = parts[0].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
            let j: usize = parts[1].parse().map_err(|e: std::num::ParseIntError| parse_err(e.to_string()))?;
            let w: f64 = parts[2].parse().map_err(|e: std::num::ParseFloatError| parse_err(e.to_string()))?;
            entries.push((i, j, w));
        }
        let inferred = entries.iter().map(|(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        let n = declared.unwrap_or(inferred);
        if inferred > n {
            return Err(Error::Parse {
                line: 0,
                message: format!("index {} exceeds declared node count {n}", inferred - 1),
            });
        }
        let mut g = Self::empty(n);
        for (i, j, w) in entries {
            if !(w >= 0.0) {
                return Err(Error::invalid("weights", format!("entry {w} is negative")));
            }
            g.set(i, j, w);
        }
        Ok(g)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }
}

/// Path (`dims = 1`) or `n × n` grid (`dims = 2`) with unit weights.
/// Grid node `(r, c)` has index `r * n + c`.
pub fn lattice_graph(n: usize, dims: usize) -> Result<StaticGraph> {
    if n < 2 {
        return Err(Error::invalid("n", "lattice needs at least 2 nodes per side"));
    }
    match dims {
        1 => {
            let mut g = StaticGraph::empty(n);
            for i in 0..n - 1 {
                g.connect(i, i + 1, 1.0);
            }
            Ok(g)
        }
        2 => {
            let mut g = StaticGraph::empty(n * n);
            for r in 0..n {
                for c in 0..n {
                    let i = r * n + c;
                    if c + 1 < n {
                        g.connect(i, i + 1, 1.0);
                    }
                    if r + 1 < n {
                        g.connect(i, i + n, 1.0);
                    }
                }
            }
            Ok(g)
        }
        _ => Err(Error::invalid("dims", "lattice dimension must be 1 or 2")),
    }
}

/// Directed pair count including self-loops, so a fully connected network
/// has `N²` edges.
pub fn edge_count(sets: &[Vec<usize>]) -> usize {
    sets.iter().map(Vec::len).sum()
}

/// Same convention for a static graph: `N` self-loops plus the nonzero
/// off-diagonal entries.
pub fn graph_edge_count(g: &StaticGraph) -> usize {
    g.nodes() + g.edges().count()
}

/// `degᵢ` for each agent under `scaling`, with unit weights on set members.
pub fn degrees(sets: &[Vec<usize>], scaling: Scaling) -> Vec<f64> {
    let n = sets.len() as f64;
    sets.iter()
        .map(|s| match scaling {
            Scaling::ByN => n,
            Scaling::ByCardinality | Scaling::ByWeightSum => s.len() as f64,
        })
        .collect()
}
