//! CSV artifacts and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use conceptor_core::evaluation::{report_rows_csv, summary_table_csv};
use conceptor_core::rng::derive_seed;
use conceptor_core::{Filter, InitialConception, Pattern};
use serde::Serialize;

use crate::config::{EmitKind, ExperimentKind};
use crate::error::CliError;
use crate::experiment::{HoldSummary, RunOutcome};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub file: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pattern: Option<usize>,
    #[serde(skip)]
    pub contents: String,
}

fn header(columns: impl IntoIterator<Item = String>) -> String {
    let mut s = columns.into_iter().collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Recall next to its target. Single-channel targets are shifted by the
/// alignment so that each row compares matching phases.
fn recall_csv(recall: &Pattern, target: &Pattern, shift: Option<usize>) -> String {
    let m = recall.channels();
    let mut out = header(
        std::iter::once("step".to_string())
            .chain((0..m).map(|c| format!("recall_{c}")))
            .chain((0..m).map(|c| format!("target_{c}"))),
    );
    let lag = shift.map_or(0, |d| d - 1);
    for n in 0..recall.length() {
        let mut row = vec![n.to_string()];
        row.extend((0..m).map(|c| recall.data[(n, c)].to_string()));
        let t = n.checked_sub(lag).filter(|&k| k < target.length());
        row.extend((0..m).map(|c| t.map(|k| target.data[(k, c)].to_string()).unwrap_or_default()));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Builds every artifact requested by the config, in a fixed order.
pub fn build(run: &RunOutcome) -> Vec<Artifact> {
    let cfg = &run.config;
    let name = &cfg.name;
    let emit = |k: EmitKind| cfg.emit.contains(&k);
    let mut out = Vec::new();
    let mut push = |file: String, kind: &str, pattern: Option<usize>, contents: String| {
        out.push(Artifact { file, kind: kind.to_string(), pattern, contents });
    };

    if emit(EmitKind::RecallCsv) {
        for (j, (y, t)) in run.recalls.iter().zip(&run.targets).enumerate() {
            let shift = run.reports.get(j).and_then(|(_, r)| r.shift);
            push(format!("{name}_recall_{j}.csv"), "recall_csv", Some(j), recall_csv(y, t, shift));
        }
        if let Some(m) = &run.morph {
            let morph = cfg.morph.as_ref().expect("morph runs carry their section");
            let mut s = header(
                ["step".to_string(), "mu".to_string()]
                    .into_iter()
                    .chain((0..m.trace.channels()).map(|c| format!("y_{c}"))),
            );
            for (n, mu) in m.mu.iter().enumerate() {
                write!(s, "{n},{mu}").unwrap();
                for c in 0..m.trace.channels() {
                    write!(s, ",{}", m.trace.data[(n, c)]).unwrap();
                }
                s.push('\n');
            }
            push(format!("{name}_morph_{}_{}.csv", morph.from, morph.to), "recall_csv", Some(morph.from), s);
        }
    }

    if emit(EmitKind::NrmseTable) {
        if !run.reports.is_empty() {
            push(format!("{name}_nrmse.csv"), "nrmse_table", None, summary_table_csv(&run.reports));
            push(format!("{name}_nrmse_channels.csv"), "nrmse_table", None, report_rows_csv(&run.reports));
            let mut s = String::from("pattern,first,last\n");
            for (j, st) in run.stability.iter().enumerate() {
                writeln!(s, "pattern_{j},{},{}", opt(st.map(|v| v.0)), opt(st.map(|v| v.1))).unwrap();
            }
            push(format!("{name}_stability.csv"), "nrmse_table", None, s);
        }
        if !run.chaotic.is_empty() {
            let mut s = String::from("pattern,channel,min,max,variance,in_box,coverage\n");
            for (j, c) in run.chaotic.iter().enumerate() {
                for ch in 0..c.stats.min.len() {
                    writeln!(
                        s,
                        "pattern_{j},{ch},{},{},{},{},{}",
                        c.stats.min[ch], c.stats.max[ch], c.stats.variance[ch], c.in_box, c.coverage
                    )
                    .unwrap();
                }
            }
            push(format!("{name}_chaotic_stats.csv"), "nrmse_table", None, s);
        }
        if let Some(m) = &run.morph {
            let mut s = String::from("segment,mu,dominant_period,reference_pattern,nrmse\n");
            let rows: [(&str, &Option<HoldSummary>); 2] = [("pre", &m.pre), ("post", &m.post)];
            for (seg, hold) in rows {
                if let Some(h) = hold {
                    writeln!(s, "{seg},{},{},{},{}", h.mu, opt(h.dominant_period), h.reference, opt(h.nrmse)).unwrap();
                }
            }
            push(format!("{name}_morph_summary.csv"), "nrmse_table", None, s);
        }
        if !run.conception.is_empty() {
            let mut s = String::from("pattern,weights,below_0.05,in_0.5_1,bimodal_fraction\n");
            for (j, c) in run.conception.iter().enumerate() {
                writeln!(s, "pattern_{j},{},{},{},{}", c.weights, c.near_zero, c.upper, c.bimodal_fraction()).unwrap();
            }
            push(format!("{name}_conception_summary.csv"), "nrmse_table", None, s);
        }
    }

    if emit(EmitKind::SingularValues) {
        let mut ranks = String::from("pattern,largest,above_tolerance\n");
        for (j, t) in run.traces.iter().enumerate() {
            let sv = t.correlation.singular_values();
            let mut s = String::from("index,singular_value,log10\n");
            for (i, v) in sv.iter().enumerate() {
                writeln!(s, "{i},{v},{}", v.max(f64::MIN_POSITIVE).log10()).unwrap();
            }
            push(format!("{name}_singular_values_{j}.csv"), "singular_values", Some(j), s);
            writeln!(ranks, "pattern_{j},{},{}", sv.first().copied().unwrap_or(0.0), run.ranks[j]).unwrap();
        }
        push(format!("{name}_rank.csv"), "singular_values", None, ranks);
    }

    if emit(EmitKind::StateClouds) {
        let [a, b] = cfg.cloud_neurons;
        for (j, t) in run.traces.iter().enumerate() {
            let mut s = format!("stage,step,neuron_{a},neuron_{b}\n");
            for (stage, m) in [("stage1", &t.stage1_states), ("collected", &t.collected_states)] {
                for n in 0..m.ncols() {
                    writeln!(s, "{stage},{n},{},{}", m[(a, n)], m[(b, n)]).unwrap();
                }
            }
            push(format!("{name}_state_cloud_{j}.csv"), "state_clouds", Some(j), s);
        }
        if !run.cloud_distances.is_empty() {
            let mut s = String::from("pattern_a,pattern_b,distance\n");
            for (i, j, d) in &run.cloud_distances {
                writeln!(s, "{i},{j},{d}").unwrap();
            }
            push(format!("{name}_cloud_distances.csv"), "state_clouds", None, s);
        }
    }

    if emit(EmitKind::DelayEmbedding) {
        let delay = cfg.recall.embedding_delay;
        let sources: Vec<(usize, &Pattern, &Pattern)> = match &run.morph {
            Some(m) => vec![(cfg.morph.as_ref().unwrap().from, &m.trace, &run.patterns[cfg.morph.as_ref().unwrap().from])],
            None => run.recalls.iter().zip(&run.patterns).enumerate().map(|(j, (y, p))| (j, y, p)).collect(),
        };
        for (j, y, p) in sources {
            let mut s = String::from("source,x,x_delayed\n");
            for (label, pat) in [("recall", y), ("training", p)] {
                let ch = pat.channel(0);
                for n in 0..ch.len().saturating_sub(delay) {
                    writeln!(s, "{label},{},{}", ch[n], ch[n + delay]).unwrap();
                }
            }
            push(format!("{name}_delay_embedding_{j}.csv"), "delay_embedding", Some(j), s);
        }
    }

    if emit(EmitKind::MuTrace) {
        if let Some(m) = &run.morph {
            let morph = cfg.morph.as_ref().unwrap();
            let mut s = String::from("step,mu\n");
            for (n, mu) in m.mu.iter().enumerate() {
                writeln!(s, "{n},{mu}").unwrap();
            }
            push(format!("{name}_mu_trace_{}_{}.csv", morph.from, morph.to), "mu_trace", Some(morph.from), s);
        }
    }

    if emit(EmitKind::ConceptionWeights) {
        for (j, f) in run.system.filters.iter().enumerate() {
            if let Filter::Conception(c) = f {
                let mut s = String::from("neuron,weight\n");
                for (i, w) in c.weights.iter().enumerate() {
                    writeln!(s, "{i},{w}").unwrap();
                }
                push(format!("{name}_conception_weights_{j}.csv"), "conception_weights", Some(j), s);
            }
        }
    }
    out
}

#[derive(Serialize)]
struct Manifest<'a> {
    run: RunSection<'a>,
    seeds: Seeds,
    results: Results,
    artifacts: &'a [Artifact],
    config: &'a crate::config::ExperimentConfig,
}

#[derive(Serialize)]
struct RunSection<'a> {
    name: &'a str,
    experiment: ExperimentKind,
    version: &'static str,
    patterns: Vec<String>,
}

#[derive(Serialize)]
struct Seeds {
    reservoir: u64,
    plan: u64,
    /// Seeds of the random initial conception vectors, one per pattern.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    initial_conception: Vec<u64>,
}

#[derive(Serialize, Default)]
struct Results {
    #[serde(skip_serializing_if = "Vec::is_empty")]
    mean_nrmse: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    rank: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    in_box: Vec<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    coverage: Vec<f64>,
}

pub fn manifest_name(run: &RunOutcome) -> String {
    format!("{}_manifest.toml", run.config.name)
}

/// The manifest records seeds, resolved parameters and results. It carries no
/// timestamp, so identical runs produce identical manifests.
pub fn manifest(run: &RunOutcome, artifacts: &[Artifact]) -> String {
    let plan = &run.plan;
    let d0 = plan.mode.is_diagonal() && plan.initial_conception == InitialConception::Random;
    let m = Manifest {
        run: RunSection {
            name: &run.config.name,
            experiment: run.config.experiment,
            version: env!("CARGO_PKG_VERSION"),
            patterns: run.patterns.iter().map(|p| p.name.clone()).collect(),
        },
        seeds: Seeds {
            reservoir: run.config.reservoir.seed,
            plan: plan.seed,
            initial_conception: if d0 {
                (0..run.patterns.len() as u64).map(|j| derive_seed(plan.seed, j)).collect()
            } else {
                Vec::new()
            },
        },
        results: Results {
            mean_nrmse: run.reports.iter().map(|(_, r)| r.mean).collect(),
            rank: run.ranks.clone(),
            in_box: run.chaotic.iter().map(|c| c.in_box).collect(),
            coverage: run.chaotic.iter().map(|c| c.coverage).collect(),
        },
        artifacts,
        config: &run.config,
    };
    toml::to_string(&m).expect("manifest serializes")
}

/// Writes all artifacts and the manifest into `dir`. Files are staged under a
/// temporary name and only renamed once every write has succeeded.
pub fn write_all(dir: &Path, run: &RunOutcome, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path, source| CliError::Io { path: path.to_path_buf(), source };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut files: Vec<(String, String)> = artifacts.iter().map(|a| (a.file.clone(), a.contents.clone())).collect();
    files.push((manifest_name(run), manifest(run, artifacts)));

    let mut staged = Vec::new();
    for (file, contents) in &files {
        let tmp = dir.join(format!(".{file}.partial"));
        if let Err(e) = fs::write(&tmp, contents) {
            for s in &staged {
                let _ = fs::remove_file(s);
            }
            let _ = fs::remove_file(&tmp);
            return Err(io(&tmp, e));
        }
        staged.push(tmp);
    }
    let mut written = Vec::new();
    for ((file, _), tmp) in files.iter().zip(&staged) {
        let target = dir.join(file);
        fs::rename(tmp, &target).map_err(|e| io(&target, e))?;
        written.push(target);
    }
    Ok(written)
}
