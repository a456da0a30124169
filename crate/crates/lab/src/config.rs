//! Experiment configuration in flat `dotted.key=value` form.
//!
//! One assignment per line, `#` starts a comment. A `preset=NAME` line
//! loads a catalog entry first and the remaining keys override it, in any
//! order. [`ExperimentConfig::to_echo`] writes every key back out and
//! parses to an identical config.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use swarmlab_core::control::{ControlLaw, ControlSpec};
use swarmlab_core::dynamics::{IntegratorSpec, Scheme};
use swarmlab_core::network::{LongRange, NetworkSpec, Scaling};

use crate::presets;
use crate::{ConfigError, FieldProblem};

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// Independent uniform draws on `[0, 1]` per coordinate.
    Uniform01,
    Gaussian {
        mean: f64,
        sd: f64,
    },
    /// Row-major coordinates, shared by every run.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelKind {
    Hk,
    /// Influence `(1 − s)₊^p`.
    JabinMotsch {
        p: f64,
    },
    /// Kernel `(1 + s²)^{−β}`, velocities uniform on `[−1, 1]`.
    CuckerSmale {
        beta: f64,
    },
}

/// Velocity feedback for alignment runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlKind {
    Off,
    /// `uᵢ = −α(vᵢ − v̄)`.
    Total {
        alpha: f64,
    },
    /// All of the budget `M` on the agent farthest from the mean velocity.
    Sparse {
        bound: f64,
    },
    /// Sparse law refreshed every `tau`, held in between. `None` means
    /// `10·dt`.
    Sampled {
        bound: f64,
        tau: Option<f64>,
    },
}

impl ControlKind {
    pub fn to_spec(self, dt: f64, latch: bool) -> Option<ControlSpec> {
        let law = match self {
            ControlKind::Off => return None,
            ControlKind::Total { alpha } => ControlLaw::TotalFeedback { alpha },
            ControlKind::Sparse { bound } => ControlLaw::Sparse { bound },
            ControlKind::Sampled { bound, tau } => ControlLaw::SampledSparse { bound, tau: tau.unwrap_or(10.0 * dt) },
        };
        Some(ControlSpec { law, switch_off_in_region: latch })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkKind {
    Metric { r: f64 },
    Topological { k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    None,
    /// Metric radius.
    R,
    /// Topological neighbour count.
    K,
    /// Long-range exponent.
    A,
    /// Each radius paired with the topological `k` of equal expected degree.
    Compare,
}

impl SweepVariable {
    fn name(self) -> &'static str {
        match self {
            SweepVariable::None => "none",
            SweepVariable::R => "r",
            SweepVariable::K => "k",
            SweepVariable::A => "a",
            SweepVariable::Compare => "compare",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "none" => SweepVariable::None,
            "r" => SweepVariable::R,
            "k" => SweepVariable::K,
            "a" => SweepVariable::A,
            "compare" => SweepVariable::Compare,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Num(f64),
    /// No long-range links.
    Off,
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Num(x) => write!(f, "{x}"),
            SweepValue::Off => f.write_str("off"),
        }
    }
}

/// One column of the sweep: the label written to the CSVs and the network
/// it resolves to.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub variable: &'static str,
    pub value: SweepValue,
    pub network: NetworkSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub agents: usize,
    pub dim: usize,
    pub runs: usize,
    pub seed: u64,
    pub initial: Initial,
    pub model: ModelKind,
    pub control: ControlKind,
    /// Switch the control off once the state enters the flocking region.
    pub control_latch: bool,
    pub network: NetworkKind,
    pub scaling: Scaling,
    /// Exponent of the one-per-agent distant link, if any.
    pub long_range: Option<f64>,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<SweepValue>,
    pub integrator: IntegratorSpec,
    pub cluster_eps: f64,
    pub consensus_eps: f64,
    /// Write per-sample series for the first run of each sweep point.
    pub series: bool,
    /// Write positions over time for the first run of each sweep point.
    pub trajectory: bool,
    /// Not part of the echo or the hash.
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: "custom".into(),
            agents: 100,
            dim: 1,
            runs: 100,
            seed: 42,
            initial: Initial::Uniform01,
            model: ModelKind::Hk,
            control: ControlKind::Off,
            control_latch: true,
            network: NetworkKind::Metric { r: 0.2 },
            scaling: Scaling::ByCardinality,
            long_range: None,
            sweep_variable: SweepVariable::None,
            sweep_values: Vec::new(),
            integrator: IntegratorSpec {
                scheme: Scheme::Rk4,
                dt: 0.05,
                t_end: 50.0,
                stride: 10,
                renormalize_sphere: false,
                early_exit: Some(1e-12),
            },
            cluster_eps: 1e-3,
            consensus_eps: 1e-3,
            series: false,
            trajectory: false,
            output_dir: None,
        }
    }
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().ok()).collect()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// `gaussian(μ,σ)` or `list(x,...)`.
fn parse_call<'a>(s: &'a str, head: &str) -> Option<&'a str> {
    s.strip_prefix(head)?.strip_prefix('(')?.strip_suffix(')')
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut problems = Vec::new();
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                problems
                    .push(FieldProblem::new(format!("line {}", n + 1), format!("expected key=value, got `{line}`")));
                continue;
            };
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if let Some((first, _)) = entries.get(&k) {
                problems.push(FieldProblem::new(&k, format!("set twice (lines {first} and {})", n + 1)));
                continue;
            }
            entries.insert(k, (n + 1, v));
        }
        let mut cfg = match entries.remove("preset") {
            Some((_, name)) => match presets::preset(&name) {
                Some(p) => p,
                None => {
                    problems.push(FieldProblem::new("preset", presets::unknown_message(&name)));
                    Self::default()
                }
            },
            None => Self::default(),
        };
        // Selectors first so that their parameters land on the right variant.
        let selector = |k: &str| k == "model.variant" || k == "network.kind" || k == "control.law";
        let ordered = entries.iter().filter(|(k, _)| selector(k)).chain(entries.iter().filter(|(k, _)| !selector(k)));
        for (key, (_, value)) in ordered {
            if let Err(msg) = cfg.apply(key, value) {
                problems.push(FieldProblem::new(key, msg));
            }
        }
        problems.extend(cfg.problems());
        if problems.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError { problems })
        }
    }

    pub fn read(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::single("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn apply(&mut self, key: &str, v: &str) -> Result<(), String> {
        let num = || v.parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
        let int = || v.parse::<usize>().map_err(|_| format!("`{v}` is not a nonnegative integer"));
        match key {
            "name" => self.name = v.to_string(),
            "agents" => self.agents = int()?,
            "dim" => self.dim = int()?,
            "runs" => self.runs = int()?,
            "seed" => self.seed = v.parse().map_err(|_| format!("`{v}` is not a u64"))?,
            "init" => {
                self.initial = if v == "uniform01" {
                    Initial::Uniform01
                } else if let Some(args) = parse_call(v, "gaussian") {
                    match parse_list(args).as_deref() {
                        Some([mean, sd]) => Initial::Gaussian { mean: *mean, sd: *sd },
                        _ => return Err("gaussian takes (mean,sd)".into()),
                    }
                } else if let Some(args) = parse_call(v, "list") {
                    Initial::Explicit(parse_list(args).ok_or("list entries must be numbers")?)
                } else {
                    return Err(format!("unknown distribution `{v}` (uniform01, gaussian(m,s), list(...))"));
                }
            }
            "model.variant" => {
                self.model = match (v, self.model) {
                    ("hk", _) => ModelKind::Hk,
                    ("jm", m @ ModelKind::JabinMotsch { .. }) | ("cs", m @ ModelKind::CuckerSmale { .. }) => m,
                    ("jm", _) => ModelKind::JabinMotsch { p: 2.0 },
                    ("cs", _) => ModelKind::CuckerSmale { beta: 1.0 },
                    _ => return Err(format!("unknown model `{v}` (hk, jm, cs)")),
                }
            }
            "model.jm.p" | "model.cs.beta" => {
                let x = num()?;
                match (&mut self.model, key) {
                    (ModelKind::JabinMotsch { p }, "model.jm.p") => *p = x,
                    (ModelKind::CuckerSmale { beta }, "model.cs.beta") => *beta = x,
                    _ => return Err("does not match model.variant".into()),
                }
            }
            "control.law" => {
                self.control = match (v, self.control) {
                    ("off", _) => ControlKind::Off,
                    ("total", c @ ControlKind::Total { .. })
                    | ("sparse", c @ ControlKind::Sparse { .. })
                    | ("sampled", c @ ControlKind::Sampled { .. }) => c,
                    ("total", _) => ControlKind::Total { alpha: 1.0 },
                    ("sparse", _) => ControlKind::Sparse { bound: 1.0 },
                    ("sampled", _) => ControlKind::Sampled { bound: 1.0, tau: None },
                    _ => return Err(format!("unknown control law `{v}` (off, total, sparse, sampled)")),
                }
            }
            "control.alpha" => match &mut self.control {
                ControlKind::Total { alpha } => *alpha = num()?,
                _ => return Err("control.law is not total".into()),
            },
            "control.bound" => match &mut self.control {
                ControlKind::Sparse { bound } | ControlKind::Sampled { bound, .. } => *bound = num()?,
                _ => return Err("control.law is not sparse or sampled".into()),
            },
            "control.tau" => match &mut self.control {
                ControlKind::Sampled { tau, .. } => *tau = if v == "default" { None } else { Some(num()?) },
                _ => return Err("control.law is not sampled".into()),
            },
            "control.latch" => self.control_latch = parse_bool(v).ok_or("expected true or false")?,
            "network.kind" => {
                self.network = match (v, self.network) {
                    ("metric", n @ NetworkKind::Metric { .. })
                    | ("topological", n @ NetworkKind::Topological { .. }) => n,
                    ("metric", _) => NetworkKind::Metric { r: 0.2 },
                    ("topological", _) => NetworkKind::Topological { k: 5 },
                    _ => return Err(format!("unknown network `{v}` (metric, topological)")),
                }
            }
            "network.metric.r" => match &mut self.network {
                NetworkKind::Metric { r } => *r = num()?,
                _ => return Err("network.kind is not metric".into()),
            },
            "network.topological.k" => match &mut self.network {
                NetworkKind::Topological { k } => *k = int()?,
                _ => return Err("network.kind is not topological".into()),
            },
            "network.scaling" => {
                self.scaling = match v {
                    "cardinality" => Scaling::ByCardinality,
                    "n" => Scaling::ByN,
                    _ => return Err(format!("unknown scaling `{v}` (cardinality, n)")),
                }
            }
            "network.long_range.a" => self.long_range = if v == "off" { None } else { Some(num()?) },
            "sweep.variable" => {
                self.sweep_variable = SweepVariable::parse(v)
                    .ok_or_else(|| format!("unknown sweep variable `{v}` (none, r, k, a, compare)"))?
            }
            "sweep.values" => {
                self.sweep_values = v
                    .split(',')
                    .map(|t| match t.trim() {
                        "off" => Ok(SweepValue::Off),
                        t => t.parse().map(SweepValue::Num).map_err(|_| format!("`{t}` is neither a number nor `off`")),
                    })
                    .collect::<Result<_, _>>()?
            }
            "integrator.scheme" => {
                self.integrator.scheme = match v {
                    "rk4" => Scheme::Rk4,
                    "euler" => Scheme::ExplicitEuler,
                    _ => return Err(format!("unknown scheme `{v}` (rk4, euler)")),
                }
            }
            "integrator.dt" => self.integrator.dt = num()?,
            "integrator.t_end" => self.integrator.t_end = num()?,
            "integrator.stride" => self.integrator.stride = int()?,
            "integrator.early_exit" => self.integrator.early_exit = if v == "off" { None } else { Some(num()?) },
            "stats.cluster_eps" => self.cluster_eps = num()?,
            "stats.consensus_eps" => self.consensus_eps = num()?,
            "output.series" => self.series = parse_bool(v).ok_or("expected true or false")?,
            "output.trajectory" => self.trajectory = parse_bool(v).ok_or("expected true or false")?,
            "output.dir" => self.output_dir = Some(PathBuf::from(v)),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    fn problems(&self) -> Vec<FieldProblem> {
        let mut p = Vec::new();
        let mut bad = |k: &str, m: &str| p.push(FieldProblem::new(k, m));
        if self.agents == 0 {
            bad("agents", "must be at least 1");
        }
        if self.dim == 0 {
            bad("dim", "must be at least 1");
        }
        if self.runs == 0 {
            bad("runs", "must be at least 1");
        }
        match &self.initial {
            Initial::Gaussian { sd, .. } if !(*sd >= 0.0) => bad("init", "gaussian sd must be nonnegative"),
            Initial::Explicit(x) if x.len() != self.agents * self.dim => {
                bad("init", "list length must equal agents × dim")
            }
            _ => {}
        }
        match self.model {
            ModelKind::JabinMotsch { p } if !(p > 0.0) => bad("model.jm.p", "must be positive"),
            ModelKind::CuckerSmale { beta } if !(beta >= 0.0) => bad("model.cs.beta", "must be nonnegative"),
            _ => {}
        }
        match self.control {
            ControlKind::Off => {}
            c => {
                if !matches!(self.model, ModelKind::CuckerSmale { .. }) {
                    bad("control.law", "controls need model.variant=cs");
                }
                if self.trajectory {
                    bad("output.trajectory", "not recorded for controlled runs");
                }
                match c {
                    ControlKind::Total { alpha } if !(alpha > 0.0) => bad("control.alpha", "must be positive"),
                    ControlKind::Sparse { bound } | ControlKind::Sampled { bound, .. } if !(bound > 0.0) => {
                        bad("control.bound", "must be positive")
                    }
                    _ => {}
                }
                if let ControlKind::Sampled { tau: Some(tau), .. } = c {
                    if !(tau > 0.0 && tau.is_finite()) {
                        bad("control.tau", "must be positive");
                    }
                }
            }
        }
        match self.network {
            NetworkKind::Metric { r } if !(r > 0.0) => bad("network.metric.r", "must be positive"),
            NetworkKind::Topological { k: 0 } => bad("network.topological.k", "must be at least 1"),
            _ => {}
        }
        if let Some(a) = self.long_range {
            if !(a >= 0.0) {
                bad("network.long_range.a", "must be nonnegative");
            }
        }
        let hk = self.model == ModelKind::Hk;
        match self.sweep_variable {
            SweepVariable::None => {
                if !self.sweep_values.is_empty() {
                    bad("sweep.values", "given without a sweep variable");
                }
            }
            v => {
                if self.sweep_values.is_empty() {
                    bad("sweep.values", "sweep grid is empty");
                }
                if !hk {
                    bad("sweep.variable", "network sweeps need model.variant=hk");
                }
                let nums = self.sweep_values.iter().all(|s| matches!(s, SweepValue::Num(_)));
                match v {
                    SweepVariable::R | SweepVariable::Compare => {
                        if !nums || self.sweep_values.iter().any(|s| matches!(s, SweepValue::Num(x) if !(*x > 0.0))) {
                            bad("sweep.values", "radii must be positive numbers");
                        }
                        if v == SweepVariable::R && !matches!(self.network, NetworkKind::Metric { .. }) {
                            bad("sweep.variable", "r sweeps need network.kind=metric");
                        }
                    }
                    SweepVariable::K => {
                        if !nums
                            || self
                                .sweep_values
                                .iter()
                                .any(|s| matches!(s, SweepValue::Num(x) if !(*x >= 1.0 && x.fract() == 0.0)))
                        {
                            bad("sweep.values", "k values must be positive integers");
                        }
                        if !matches!(self.network, NetworkKind::Topological { .. }) {
                            bad("sweep.variable", "k sweeps need network.kind=topological");
                        }
                    }
                    SweepVariable::A => {
                        if self.sweep_values.iter().any(|s| matches!(s, SweepValue::Num(x) if !(*x >= 0.0))) {
                            bad("sweep.values", "exponents must be nonnegative");
                        }
                    }
                    SweepVariable::None => {}
                }
            }
        }
        let it = &self.integrator;
        if !(it.dt > 0.0) {
            bad("integrator.dt", "must be positive");
        }
        if !(it.t_end > 0.0) {
            bad("integrator.t_end", "must be positive");
        } else if it.dt > it.t_end {
            bad("integrator.dt", "exceeds integrator.t_end");
        }
        if it.stride == 0 {
            bad("integrator.stride", "must be at least 1");
        }
        if !(self.cluster_eps > 0.0) {
            bad("stats.cluster_eps", "must be positive");
        }
        if !(self.consensus_eps > 0.0) {
            bad("stats.consensus_eps", "must be positive");
        }
        p
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { problems })
        }
    }

    fn network_spec(&self, kind: NetworkKind, long_range: Option<f64>) -> NetworkSpec {
        let base = match kind {
            NetworkKind::Metric { r } => NetworkSpec::metric(r),
            NetworkKind::Topological { k } => NetworkSpec::topological(k),
        };
        let base = base.with_scaling(self.scaling);
        match long_range {
            Some(a) => base.with_long_range(LongRange::new(a)),
            None => base,
        }
    }

    /// Expected number of other agents within `r` of a uniform draw on
    /// `[0, 1]`: `(N − 1)(2r − r²)` for `r ≤ 1`.
    pub fn matched_k(&self, r: f64) -> usize {
        let p = if r >= 1.0 { 1.0 } else { 2.0 * r - r * r };
        (((self.agents - 1) as f64) * p).round().max(1.0) as usize
    }

    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let base = (self.network, self.long_range);
        let num = |s: &SweepValue| match s {
            SweepValue::Num(x) => *x,
            SweepValue::Off => f64::NAN,
        };
        match self.sweep_variable {
            SweepVariable::None => vec![SweepPoint {
                variable: "none",
                value: SweepValue::Off,
                network: self.network_spec(base.0, base.1),
            }],
            SweepVariable::R => self
                .sweep_values
                .iter()
                .map(|v| SweepPoint {
                    variable: "r",
                    value: *v,
                    network: self.network_spec(NetworkKind::Metric { r: num(v) }, base.1),
                })
                .collect(),
            SweepVariable::K => self
                .sweep_values
                .iter()
                .map(|v| SweepPoint {
                    variable: "k",
                    value: *v,
                    network: self.network_spec(NetworkKind::Topological { k: num(v) as usize }, base.1),
                })
                .collect(),
            SweepVariable::A => self
                .sweep_values
                .iter()
                .map(|v| SweepPoint {
                    variable: "a",
                    value: *v,
                    network: self.network_spec(
                        base.0,
                        match v {
                            SweepValue::Num(a) => Some(*a),
                            SweepValue::Off => None,
                        },
                    ),
                })
                .collect(),
            SweepVariable::Compare => self
                .sweep_values
                .iter()
                .flat_map(|v| {
                    let r = num(v);
                    let k = self.matched_k(r);
                    [
                        SweepPoint {
                            variable: "r",
                            value: *v,
                            network: self.network_spec(NetworkKind::Metric { r }, base.1),
                        },
                        SweepPoint {
                            variable: "k",
                            value: SweepValue::Num(k as f64),
                            network: self.network_spec(NetworkKind::Topological { k }, base.1),
                        },
                    ]
                })
                .collect(),
        }
    }

    /// Every key, one per line, in a fixed order.
    pub fn to_echo(&self) -> String {
        let mut lines = vec![
            format!("name={}", self.name),
            format!("agents={}", self.agents),
            format!("dim={}", self.dim),
            format!("runs={}", self.runs),
            format!("seed={}", self.seed),
            format!(
                "init={}",
                match &self.initial {
                    Initial::Uniform01 => "uniform01".to_string(),
                    Initial::Gaussian { mean, sd } => format!("gaussian({mean},{sd})"),
                    Initial::Explicit(x) => format!("list({})", fmt_list(x)),
                }
            ),
        ];
        match self.model {
            ModelKind::Hk => lines.push("model.variant=hk".into()),
            ModelKind::JabinMotsch { p } => lines.extend(["model.variant=jm".into(), format!("model.jm.p={p}")]),
            ModelKind::CuckerSmale { beta } => {
                lines.extend(["model.variant=cs".into(), format!("model.cs.beta={beta}")])
            }
        }
        match self.control {
            ControlKind::Off => lines.push("control.law=off".into()),
            ControlKind::Total { alpha } => {
                lines.extend(["control.law=total".into(), format!("control.alpha={alpha}")])
            }
            ControlKind::Sparse { bound } => {
                lines.extend(["control.law=sparse".into(), format!("control.bound={bound}")])
            }
            ControlKind::Sampled { bound, tau } => lines.extend([
                "control.law=sampled".into(),
                format!("control.bound={bound}"),
                format!("control.tau={}", tau.map_or("default".to_string(), |t| t.to_string())),
            ]),
        }
        lines.push(format!("control.latch={}", self.control_latch));
        match self.network {
            NetworkKind::Metric { r } => lines.extend(["network.kind=metric".into(), format!("network.metric.r={r}")]),
            NetworkKind::Topological { k } => {
                lines.extend(["network.kind=topological".into(), format!("network.topological.k={k}")])
            }
        }
        lines.push(format!(
            "network.scaling={}",
            match self.scaling {
                Scaling::ByN => "n",
                _ => "cardinality",
            }
        ));
        lines.push(format!("network.long_range.a={}", self.long_range.map_or("off".to_string(), |a| a.to_string())));
        lines.push(format!("sweep.variable={}", self.sweep_variable.name()));
        if !self.sweep_values.is_empty() {
            let vals: Vec<String> = self.sweep_values.iter().map(|v| v.to_string()).collect();
            lines.push(format!("sweep.values={}", vals.join(",")));
        }
        let i = &self.integrator;
        lines.push(format!("integrator.scheme={}", if i.scheme == Scheme::ExplicitEuler { "euler" } else { "rk4" }));
        lines.push(format!("integrator.dt={}", i.dt));
        lines.push(format!("integrator.t_end={}", i.t_end));
        lines.push(format!("integrator.stride={}", i.stride));
        lines.push(format!("integrator.early_exit={}", i.early_exit.map_or("off".to_string(), |x| x.to_string())));
        lines.push(format!("stats.cluster_eps={}", self.cluster_eps));
        lines.push(format!("stats.consensus_eps={}", self.consensus_eps));
        lines.push(format!("output.series={}", self.series));
        lines.push(format!("output.trajectory={}", self.trajectory));
        let mut s = lines.join("\n");
        s.push('\n');
        s
    }

    /// First 16 hex digits of the SHA-256 of the echo.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_echo().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_round_trip() {
        let mut cfg = ExperimentConfig {
            sweep_variable: SweepVariable::A,
            sweep_values: vec![SweepValue::Off, SweepValue::Num(0.5)],
            initial: Initial::Gaussian { mean: 0.5, sd: 0.1 },
            ..Default::default()
        };
        cfg.integrator.early_exit = None;
        let back = ExperimentConfig::parse(&cfg.to_echo()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        for name in presets::names() {
            let p = presets::preset(name).unwrap();
            assert_eq!(ExperimentConfig::parse(&p.to_echo()).unwrap(), p, "{name}");
        }
    }

    #[test]
    fn problems_are_reported_per_field() {
        let err = ExperimentConfig::parse("runs=0\nagents=x\nnetwork.metric.r=-1\nbogus=1\nnot a line\n").unwrap_err();
        let keys: Vec<&str> = err.problems.iter().map(|p| p.key.as_str()).collect();
        for k in ["runs", "agents", "network.metric.r", "bogus", "line 5"] {
            assert!(keys.contains(&k), "{k} missing from {keys:?}");
        }
        let dup = ExperimentConfig::parse("runs=1\nruns=2\n").unwrap_err();
        assert!(dup.problems[0].message.contains("twice"));
    }

    #[test]
    fn preset_overrides() {
        let cfg = ExperimentConfig::parse("# base\npreset=fig5b\nruns=3\nseed=7\n").unwrap();
        assert_eq!((cfg.runs, cfg.seed), (3, 7));
        assert_eq!(cfg.network, NetworkKind::Metric { r: 0.2 });
        let err = ExperimentConfig::parse("preset=nope").unwrap_err();
        assert!(err.problems[0].message.contains("fig5b"));
    }

    #[test]
    fn sweeps_resolve_to_networks() {
        let cfg = presets::preset("fig4_compare").unwrap();
        let pts = cfg.sweep_points();
        assert_eq!(pts.len(), 2 * cfg.sweep_values.len());
        assert_eq!(pts[1].variable, "k");
        assert_eq!(cfg.matched_k(0.1), 19);
        let bad = ExperimentConfig::parse("sweep.variable=k\nsweep.values=2.5\n").unwrap_err();
        assert!(bad.problems.iter().any(|p| p.key == "sweep.values"));
    }
}
