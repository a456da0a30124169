//! Named experiment presets. All use 100 agents drawn uniformly on `[0, 1]`
//! under one-dimensional bounded-confidence dynamics.

use crate::config::{ExperimentConfig, NetworkKind, SweepValue, SweepVariable};

const CATALOG: &[(&str, &str)] = &[
    ("fig4_metric", "mean cluster count over the metric radius r, 100 runs per point"),
    ("fig4_topological", "mean cluster count over the topological k, 100 runs per point"),
    ("fig4_compare", "metric r against topological k with equal expected initial degree"),
    ("fig5a", "cluster-size distribution, r = 0.1, 1000 runs"),
    ("fig5b", "cluster-size distribution and consensus count, r = 0.2, 1000 runs"),
    ("fig6_twocluster", "joint sizes of the two largest clusters, r = 0.2, 2000 runs"),
    ("fig7_longrange", "r = 0.1 with and without one uniform distant link per agent"),
    ("fig8_consensus_time", "time to consensus, metric r = 0.1, over the link exponent a"),
    ("fig8_cluster_count", "final cluster count, topological k = 3, over the link exponent a"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(n, _)| *n)
}

pub fn catalog() -> &'static [(&'static str, &'static str)] {
    CATALOG
}

pub fn unknown_message(name: &str) -> String {
    format!("unknown preset `{name}`; valid names: {}", names().collect::<Vec<_>>().join(", "))
}

fn nums(v: &[f64]) -> Vec<SweepValue> {
    v.iter().copied().map(SweepValue::Num).collect()
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut c = ExperimentConfig { name: name.to_string(), ..ExperimentConfig::default() };
    match name {
        "fig4_metric" => {
            c.sweep_variable = SweepVariable::R;
            c.sweep_values = nums(&[0.05, 0.1, 0.15, 0.2, 0.25, 0.3]);
        }
        "fig4_topological" => {
            c.network = NetworkKind::Topological { k: 5 };
            c.sweep_variable = SweepVariable::K;
            c.sweep_values = nums(&[2.0, 5.0, 10.0, 20.0, 40.0]);
        }
        "fig4_compare" => {
            c.sweep_variable = SweepVariable::Compare;
            c.sweep_values = nums(&[0.05, 0.1, 0.15, 0.2, 0.25, 0.3]);
        }
        "fig5a" => {
            c.network = NetworkKind::Metric { r: 0.1 };
            c.runs = 1000;
        }
        "fig5b" => c.runs = 1000,
        "fig6_twocluster" => c.runs = 2000,
        "fig7_longrange" => {
            c.network = NetworkKind::Metric { r: 0.1 };
            c.runs = 200;
            c.sweep_variable = SweepVariable::A;
            c.sweep_values = vec![SweepValue::Off, SweepValue::Num(0.0)];
            c.series = true;
            c.trajectory = true;
        }
        "fig8_consensus_time" => {
            c.network = NetworkKind::Metric { r: 0.1 };
            c.sweep_variable = SweepVariable::A;
            c.sweep_values = nums(&[1.0, 0.5, 0.1]);
            c.integrator.t_end = 100.0;
        }
        "fig8_cluster_count" => {
            c.network = NetworkKind::Topological { k: 3 };
            c.sweep_variable = SweepVariable::A;
            c.sweep_values = nums(&[1.0, 0.5, 0.1]);
            // the distant links merge groups slowly under topological rules
            c.integrator.t_end = 500.0;
        }
        _ => return None,
    }
    Some(c)
}
