//! CSV writers. Every file starts with `# schema=1` and a
//! `# config_hash=...` line, followed by a fixed header row.
//!
//! | file | columns |
//! |------|---------|
//! | `aggregate.csv` | `variable,value,mean_clusters,std,consensus_fraction,mean_consensus_time` |
//! | `runs.csv` | `variable,value,run,stream,clusters,largest,second,consensus,consensus_time,final_time,equilibrium_at` |
//! | `histogram.csv` | `variable,value,s1,...,sN`: agents in clusters of size `s`, summed over runs |
//! | `joint.csv` | `variable,value,c1,c2,count`: sizes of the two largest clusters (`c2 = 0` at consensus) |
//! | `series.csv` | `variable,value,t,spatial_variance,velocity_variance,max_radius,edges,clusters,control_total,control_active` for run 0 |
//! | `trajectory.csv` | `variable,value,t,agent,x0,...` for run 0 |
//!
//! Undefined values are left empty. `config.echo` holds the resolved
//! configuration and can be passed back to `run --config`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::experiment::ExperimentResult;
use crate::LabError;

pub const SCHEMA: &str = "# schema=1";

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), |v| v.to_string())
}

fn header(hash: &str, columns: &str) -> String {
    format!("{SCHEMA}\n# config_hash={hash}\n{columns}\n")
}

pub fn aggregate_csv(res: &ExperimentResult) -> String {
    let mut s = header(&res.config_hash, "variable,value,mean_clusters,std,consensus_fraction,mean_consensus_time");
    for row in &res.aggregate {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            row.variable,
            row.value,
            row.mean_clusters,
            row.std,
            row.consensus_fraction,
            opt(row.mean_consensus_time)
        );
    }
    s
}

fn label(res: &ExperimentResult, point: usize) -> String {
    let p = &res.points[point];
    format!("{},{}", p.variable, p.value)
}

pub fn runs_csv(res: &ExperimentResult) -> String {
    let mut s = header(
        &res.config_hash,
        "variable,value,run,stream,clusters,largest,second,consensus,consensus_time,final_time,equilibrium_at",
    );
    for r in &res.runs {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            label(res, r.point),
            r.run,
            r.stream,
            r.clusters(),
            r.sizes.first().copied().unwrap_or(0),
            r.sizes.get(1).copied().unwrap_or(0),
            r.consensus,
            opt(r.consensus_time),
            r.final_time,
            opt(r.equilibrium_at)
        );
    }
    s
}

pub fn histogram_csv(res: &ExperimentResult, agents: usize) -> String {
    let cols: Vec<String> = (1..=agents).map(|k| format!("s{k}")).collect();
    let mut s = header(&res.config_hash, &format!("variable,value,{}", cols.join(",")));
    for p in 0..res.points.len() {
        let mut mass = vec![0usize; agents + 1];
        for r in res.runs_at(p) {
            for &c in &r.sizes {
                mass[c.min(agents)] += c;
            }
        }
        let row: Vec<String> = mass[1..].iter().map(|m| m.to_string()).collect();
        let _ = writeln!(s, "{},{}", label(res, p), row.join(","));
    }
    s
}

pub fn joint_csv(res: &ExperimentResult) -> String {
    let mut s = header(&res.config_hash, "variable,value,c1,c2,count");
    for p in 0..res.points.len() {
        let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for r in res.runs_at(p) {
            let key = (r.sizes.first().copied().unwrap_or(0), r.sizes.get(1).copied().unwrap_or(0));
            *counts.entry(key).or_default() += 1;
        }
        for ((c1, c2), n) in counts.iter().rev() {
            let _ = writeln!(s, "{},{c1},{c2},{n}", label(res, p));
        }
    }
    s
}

pub fn series_csv(res: &ExperimentResult) -> String {
    let mut s = header(
        &res.config_hash,
        "variable,value,t,spatial_variance,velocity_variance,max_radius,edges,clusters,control_total,control_active",
    );
    for r in &res.runs {
        let Some(rec) = &r.record else { continue };
        for smp in &rec.samples {
            let ctl = smp.control.as_ref();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                label(res, r.point),
                smp.t,
                smp.spatial_variance,
                opt(smp.velocity_variance),
                smp.max_radius,
                smp.edges.map_or(String::new(), |e| e.to_string()),
                smp.clusters.map_or(String::new(), |c| c.to_string()),
                opt(ctl.map(|c| c.total())),
                ctl.and_then(|c| c.active).map_or(String::new(), |a| a.to_string())
            );
        }
    }
    s
}

pub fn trajectory_csv(res: &ExperimentResult, dim: usize) -> String {
    let cols: Vec<String> = (0..dim).map(|k| format!("x{k}")).collect();
    let mut s = header(&res.config_hash, &format!("variable,value,t,agent,{}", cols.join(",")));
    for r in &res.runs {
        let Some(tr) = &r.trajectory else { continue };
        for (t, e) in tr.times.iter().zip(&tr.states) {
            for i in 0..e.len() {
                let xs: Vec<String> = e.position(i).iter().map(|x| x.to_string()).collect();
                let _ = writeln!(s, "{},{t},{i},{}", label(res, r.point), xs.join(","));
            }
        }
    }
    s
}

fn write(dir: &Path, name: &str, body: &str, out: &mut Vec<PathBuf>) -> Result<(), LabError> {
    let path = dir.join(name);
    std::fs::write(&path, body).map_err(|source| LabError::Io { path: path.clone(), source })?;
    out.push(path);
    Ok(())
}

/// Write every output file into `dir`, creating it if needed.
pub fn write_outputs(res: &ExperimentResult, cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    std::fs::create_dir_all(dir).map_err(|source| LabError::Io { path: dir.to_path_buf(), source })?;
    let mut out = Vec::new();
    write(dir, "aggregate.csv", &aggregate_csv(res), &mut out)?;
    write(dir, "runs.csv", &runs_csv(res), &mut out)?;
    write(dir, "histogram.csv", &histogram_csv(res, cfg.agents), &mut out)?;
    write(dir, "joint.csv", &joint_csv(res), &mut out)?;
    if cfg.series {
        write(dir, "series.csv", &series_csv(res), &mut out)?;
    }
    if cfg.trajectory {
        write(dir, "trajectory.csv", &trajectory_csv(res, cfg.dim), &mut out)?;
    }
    write(dir, "config.echo", &cfg.to_echo(), &mut out)?;
    Ok(out)
}
