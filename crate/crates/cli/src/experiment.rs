//! Runs one configured experiment: train, generate, evaluate.

use std::fs;
use std::path::Path;

use conceptor_core::evaluation::{best_window_nrmse, cloud_distance, dominant_period, grid_coverage, trajectory_stats, TrajectoryStats};
use conceptor_core::{
    delay_embed, evaluate_recall, gen_attractor, gen_multichannel, gen_periodic_random, gen_sine, init_reservoir,
    load_csv, long_term_stability, morph_run, self_generate, train_with_traces, Filter, LoadedSystem, MorphSpec,
    NrmseReport, Pattern, PatternTrace, TrainingPlan,
};
use log::info;

use crate::config::{ExperimentConfig, ExperimentKind, PatternSpec};
use crate::error::CliError;

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-6;

/// The box every chaotic recall must stay in.
pub const CHAOTIC_BOX: (f64, f64) = (-0.1, 1.1);

const CHAOTIC_RECALL_STEPS: usize = 1500;

#[derive(Debug, Clone, PartialEq)]
pub struct ChaoticStats {
    pub stats: TrajectoryStats,
    pub in_box: bool,
    /// Grid coverage of the delay-embedded first channel.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldSummary {
    pub mu: f64,
    pub dominant_period: Option<f64>,
    /// Index of the pattern whose recall the hold is compared against.
    pub reference: usize,
    pub nrmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MorphOutcome {
    pub trace: Pattern,
    pub mu: Vec<f64>,
    pub pre: Option<HoldSummary>,
    pub post: Option<HoldSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptionSummary {
    pub weights: usize,
    pub near_zero: usize,
    pub upper: usize,
}

impl ConceptionSummary {
    /// Share of weights that are below 0.05 or inside [0.5, 1].
    pub fn bimodal_fraction(&self) -> f64 {
        (self.near_zero + self.upper) as f64 / self.weights as f64
    }
}

/// Everything an experiment computed, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub patterns: Vec<Pattern>,
    pub plan: TrainingPlan,
    pub system: LoadedSystem,
    pub traces: Vec<PatternTrace>,
    pub recalls: Vec<Pattern>,
    /// Pattern rows the recalls are compared against.
    pub targets: Vec<Pattern>,
    pub reports: Vec<(String, NrmseReport)>,
    /// First and last window NRMSE per pattern.
    pub stability: Vec<Option<(f64, f64)>>,
    pub chaotic: Vec<ChaoticStats>,
    pub morph: Option<MorphOutcome>,
    pub conception: Vec<ConceptionSummary>,
    /// Stage-1 cloud distance for every pattern pair `(i, j)` with `i < j`.
    pub cloud_distances: Vec<(usize, usize, f64)>,
    /// Number of singular values of each correlation matrix above [`RANK_TOLERANCE`].
    pub ranks: Vec<usize>,
}

fn csv_files(dir: &Path) -> Result<Vec<std::path::PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Config(format!("cannot list {}: {e}", dir.display())))?;
    let mut files: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Config(format!("no .csv files in {}", dir.display())));
    }
    Ok(files)
}

pub fn load_patterns(cfg: &ExperimentConfig) -> Result<Vec<Pattern>, CliError> {
    let mut out = Vec::new();
    for spec in &cfg.patterns {
        let len = |l: &Option<usize>| l.unwrap_or(cfg.length);
        match spec {
            PatternSpec::Sine { period, length } => out.push(gen_sine(*period, len(length))?),
            PatternSpec::PeriodicRandom { period, seed, perturbation, length } => {
                out.push(gen_periodic_random(*period, len(length), *seed, *perturbation)?)
            }
            PatternSpec::Attractor { system, length } => out.push(gen_attractor(&system.params(), len(length))?),
            PatternSpec::Multichannel { channels, period, seed, length } => {
                out.push(gen_multichannel(*channels, *period, len(length), *seed)?)
            }
            PatternSpec::Csv { path, normalize, smooth } => out.push(load_csv(path, *normalize, *smooth)?),
            PatternSpec::CsvDir { path, normalize, smooth } => {
                for file in csv_files(path)? {
                    out.push(load_csv(&file, *normalize, *smooth)?);
                }
            }
        }
    }
    let channels = out[0].channels();
    if let Some((i, p)) = out.iter().enumerate().find(|(_, p)| p.channels() != channels) {
        return Err(CliError::Config(format!(
            "pattern {i} ({}) has {} channels, pattern 0 has {channels}",
            p.name,
            p.channels()
        )));
    }
    Ok(out)
}

fn rank(trace: &PatternTrace) -> usize {
    let sv = trace.correlation.singular_values();
    let top = sv.first().copied().unwrap_or(0.0);
    sv.iter().filter(|s| **s > RANK_TOLERANCE * top).count()
}

fn conception_summary(filter: &Filter) -> Option<ConceptionSummary> {
    let Filter::Conception(c) = filter else { return None };
    Some(ConceptionSummary {
        weights: c.dim(),
        near_zero: c.weights.iter().filter(|w| **w < 0.05).count(),
        upper: c.weights.iter().filter(|w| (0.5..=1.0).contains(*w)).count(),
    })
}

/// The recall shifted by the alignment of `report`, cut to the target length.
fn aligned(recall: &Pattern, target: &Pattern, report: &NrmseReport) -> (Pattern, Pattern) {
    let start = report.shift.map_or(0, |d| d - 1);
    let k = (recall.length() - start).min(target.length());
    let obs = Pattern { name: recall.name.clone(), data: recall.data.rows(start, k).into_owned() };
    let tgt = Pattern { name: target.name.clone(), data: target.data.rows(0, k).into_owned() };
    (obs, tgt)
}

fn hold_summary(
    sys: &LoadedSystem,
    trace: &[f64],
    mu: f64,
    reference: usize,
    window: usize,
    reference_steps: usize,
) -> Result<Option<HoldSummary>, CliError> {
    if trace.is_empty() {
        return Ok(None);
    }
    let nrmse = if trace.len() >= window {
        let recall = self_generate(sys, reference, reference_steps, None)?.channel(0);
        Some(best_window_nrmse(&trace[trace.len() - window..], &recall)?.1)
    } else {
        None
    };
    Ok(Some(HoldSummary { mu, dominant_period: dominant_period(trace), reference, nrmse }))
}

/// Validates `cfg`, trains and evaluates. Nothing is written to disk.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let patterns = load_patterns(cfg)?;
    let res_cfg = cfg.reservoir.to_config(patterns[0].channels());
    let reservoir = init_reservoir(&res_cfg)?;
    let plan = cfg.plan.to_plan(patterns.len(), res_cfg.n_neurons)?;
    plan.validate(&reservoir, &patterns)?;
    if let Some(m) = &cfg.morph {
        if m.from >= patterns.len() || m.to >= patterns.len() {
            return Err(CliError::Config(format!(
                "morph indices {} and {} exceed the {} patterns",
                m.from,
                m.to,
                patterns.len()
            )));
        }
    }

    info!("{}: training {} patterns ({:?})", cfg.name, patterns.len(), plan.mode);
    let (system, traces) = train_with_traces(&reservoir, &patterns, &plan)?;
    let ranks: Vec<usize> = traces.iter().map(rank).collect();
    let conception: Vec<_> = system.filters.iter().filter_map(conception_summary).collect();
    let mut cloud_distances = Vec::new();
    if plan.mode.is_diagonal() {
        for i in 0..traces.len() {
            for j in i + 1..traces.len() {
                cloud_distances.push((i, j, cloud_distance(&traces[i].stage1_states, &traces[j].stage1_states)?));
            }
        }
    }

    let start = plan.collection_start();
    let mut recalls = Vec::new();
    let mut targets = Vec::new();
    let mut reports = Vec::new();
    let mut stability = Vec::new();
    let mut chaotic = Vec::new();
    let mut morph = None;

    if cfg.experiment == ExperimentKind::Morph {
        let m = cfg.morph.as_ref().expect("validated");
        let spec = MorphSpec {
            from: m.from,
            to: m.to,
            mu_min: m.mu_min,
            mu_max: m.mu_max,
            n_pre: m.n_discard + m.n_pre,
            n_morph: m.n_morph,
            n_post: m.n_post,
            nudge: m.nudge,
        };
        info!("{}: morphing {} -> {} with mu {} -> {}", cfg.name, m.from, m.to, m.mu_min, m.mu_max);
        let (run, mu) = morph_run(&system, &spec)?;
        let kept = run.length() - m.n_discard;
        let trace = Pattern { name: run.name, data: run.data.rows(m.n_discard, kept).into_owned() };
        let mu = mu[m.n_discard..].to_vec();
        let y = trace.channel(0);
        let pre = hold_summary(&system, &y[..m.n_pre], m.mu_min, m.from, m.compare_window, m.reference_steps)?;
        let post_from = m.n_pre + m.n_morph;
        let post = hold_summary(&system, &y[post_from..], m.mu_max, m.to, m.compare_window, m.reference_steps)?;
        morph = Some(MorphOutcome { trace, mu, pre, post });
    } else {
        for (j, p) in patterns.iter().enumerate() {
            let available = p.length().saturating_sub(start);
            let steps = match (cfg.recall.steps, cfg.experiment) {
                (Some(s), _) => s,
                (None, ExperimentKind::Chaotic) => CHAOTIC_RECALL_STEPS,
                (None, _) => available,
            };
            if steps == 0 || available == 0 {
                return Err(CliError::Config(format!("pattern {j} leaves no steps to recall after row {start}")));
            }
            let y = self_generate(&system, j, steps, None)?;
            let target = p.slice(start, (start + steps).min(p.length()))?;
            if cfg.experiment == ExperimentKind::Chaotic {
                let stats = trajectory_stats(&y.data);
                let delay = cfg.recall.embedding_delay;
                let coverage = grid_coverage(
                    &delay_embed(&y, 0, delay)?.data,
                    &delay_embed(p, 0, delay)?.data,
                    cfg.recall.grid_cells,
                );
                let in_box = stats.within(CHAOTIC_BOX.0, CHAOTIC_BOX.1);
                info!("{}: pattern {j} in box {in_box}, coverage {coverage:.3}", cfg.name);
                chaotic.push(ChaoticStats { stats, in_box, coverage });
            } else {
                let report = evaluate_recall(&y, &target, cfg.recall.d_max)?;
                info!("{}: pattern {j} mean NRMSE {:.4}", cfg.name, report.mean);
                let k = cfg.recall.stability_window;
                let (obs, tgt) = aligned(&y, &target, &report);
                stability.push(if k > 0 && k <= obs.length() {
                    Some(long_term_stability(&obs.data, &tgt.data, k)?)
                } else {
                    None
                });
                reports.push((format!("pattern_{j}"), report));
            }
            recalls.push(y);
            targets.push(target);
        }
    }

    Ok(RunOutcome {
        config: cfg.clone(),
        patterns,
        plan,
        system,
        traces,
        recalls,
        targets,
        reports,
        stability,
        chaotic,
        morph,
        conception,
        cloud_distances,
        ranks,
    })
}
