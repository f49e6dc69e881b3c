//! Built-in experiment configurations.
//!
//! Seeds were chosen once by scanning a handful of reservoir and plan seeds;
//! diagonal training in particular depends strongly on the random initial
//! conception vectors.

use std::collections::BTreeSet;
use std::path::PathBuf;

use conceptor_core::{InitialConception, Readout, TrainMode};

use crate::config::{
    Apertures, AttractorName, EmitKind, ExperimentConfig, ExperimentKind, MorphSection, PatternSpec, PlanSection,
    RecallSection, ReservoirSection,
};

pub const NAMES: [&str; 11] = [
    "periodic-conceptor",
    "periodic-diagonal",
    "online-adaptation",
    "chaotic-conceptor",
    "chaotic-diagonal",
    "morph-sine-conceptor",
    "morph-sine-extrapolation",
    "morph-sine-diagonal",
    "pull-apart-sines",
    "multichannel-synthetic",
    "human-motion",
];

fn emit(kinds: &[EmitKind]) -> BTreeSet<EmitKind> {
    kinds.iter().copied().collect()
}

fn reservoir(n: usize, w_star: f64, w_in: f64, bias: f64, seed: u64) -> ReservoirSection {
    ReservoirSection {
        n_neurons: n,
        n_inputs: None,
        w_star_scaling: w_star,
        w_in_scaling: w_in,
        bias_scaling: bias,
        leaking_rate: 1.0,
        sparsity: None,
        seed,
    }
}

fn plan(mode: TrainMode, washout: usize, stage1: usize, apertures: Apertures, rho_w: f64, seed: u64) -> PlanSection {
    PlanSection {
        mode,
        washout,
        stage1,
        collect: None,
        apertures,
        rho_w,
        rho_wout: 0.0,
        reuse_stage1: false,
        seed,
        learning_rate: conceptor_core::trainer::DEFAULT_ADAPTATION_RATE,
        rates: None,
        low_weight_boost: 1.0,
        initial_conception: InitialConception::Random,
        readout: Readout::Filtered,
    }
}

fn periodic_patterns() -> Vec<PatternSpec> {
    vec![
        PatternSpec::Sine { period: 8.8342522, length: None },
        PatternSpec::Sine { period: 9.8342522, length: None },
        PatternSpec::PeriodicRandom { period: 5, seed: 11, perturbation: 0.0, length: None },
        PatternSpec::PeriodicRandom { period: 5, seed: 11, perturbation: 0.2, length: None },
    ]
}

fn chaotic_patterns() -> Vec<PatternSpec> {
    [AttractorName::Rossler, AttractorName::Lorenz, AttractorName::MackeyGlass, AttractorName::Henon]
        .into_iter()
        .map(|system| PatternSpec::Attractor { system, length: None })
        .collect()
}

fn base(experiment: ExperimentKind, name: &str, res: ReservoirSection, plan: PlanSection, patterns: Vec<PatternSpec>) -> ExperimentConfig {
    ExperimentConfig {
        experiment,
        name: name.to_string(),
        output_dir: PathBuf::from("out").join(name),
        emit: emit(&[EmitKind::RecallCsv, EmitKind::NrmseTable]),
        length: 5000,
        cloud_neurons: [0, 1],
        reservoir: res,
        plan,
        recall: RecallSection::default(),
        morph: None,
        patterns,
    }
}

fn morph_section(mu_min: f64, mu_max: f64) -> MorphSection {
    MorphSection {
        from: 0,
        to: 1,
        mu_min,
        mu_max,
        n_discard: 100,
        n_pre: 200,
        n_morph: 200,
        n_post: 300,
        nudge: false,
        reference_steps: 1000,
        compare_window: 50,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let periodic_res = || reservoir(100, 1.0, 1.0, 0.2, 1);
    let conceptor_plan = || plan(TrainMode::Conceptor, 200, 0, Apertures::Shared(100.0), 0.001, 1);
    let diagonal_plan = || plan(TrainMode::DiagonalExplicit, 200, 500, Apertures::Shared(8.0), 0.001, 3);
    let cfg = match name {
        "periodic-conceptor" => {
            let mut c = base(ExperimentKind::Periodic, name, periodic_res(), conceptor_plan(), periodic_patterns());
            c.emit.insert(EmitKind::SingularValues);
            c
        }
        "periodic-diagonal" => {
            let mut c = base(ExperimentKind::Periodic, name, periodic_res(), diagonal_plan(), periodic_patterns());
            c.emit.extend([EmitKind::SingularValues, EmitKind::ConceptionWeights]);
            c
        }
        "online-adaptation" => {
            let p = plan(TrainMode::DiagonalIterative, 200, 3000, Apertures::Shared(8.0), 0.001, 3);
            let mut c = base(ExperimentKind::OnlineAdaptation, name, periodic_res(), p, periodic_patterns());
            c.emit.insert(EmitKind::ConceptionWeights);
            c
        }
        "chaotic-conceptor" | "chaotic-diagonal" => {
            let p = if name == "chaotic-conceptor" {
                plan(TrainMode::Conceptor, 100, 0, Apertures::PerPattern(vec![140.0, 50.0, 140.0, 20.0]), 0.1, 1)
            } else {
                plan(TrainMode::DiagonalExplicit, 100, 400, Apertures::PerPattern(vec![10.0, 6.0, 9.0, 5.0]), 0.01, 12)
            };
            let mut c = base(ExperimentKind::Chaotic, name, reservoir(500, 1.5, 1.5, 1.0, 1), p, chaotic_patterns());
            c.length = 1500;
            c.emit.insert(EmitKind::DelayEmbedding);
            c
        }
        "morph-sine-conceptor" | "morph-sine-extrapolation" | "morph-sine-diagonal" => {
            let p = if name == "morph-sine-diagonal" { diagonal_plan() } else { conceptor_plan() };
            let mut c = base(ExperimentKind::Morph, name, periodic_res(), p, periodic_patterns());
            c.morph = Some(if name == "morph-sine-extrapolation" {
                morph_section(-2.0, 3.0)
            } else {
                morph_section(0.0, 1.0)
            });
            c.emit.insert(EmitKind::MuTrace);
            c
        }
        "pull-apart-sines" => {
            let patterns = periodic_patterns().into_iter().take(2).collect();
            let mut c = base(ExperimentKind::Custom, name, periodic_res(), diagonal_plan(), patterns);
            c.length = 1000;
            c.emit = emit(&[EmitKind::StateClouds, EmitKind::NrmseTable]);
            c
        }
        "multichannel-synthetic" => {
            let mut p = plan(TrainMode::DiagonalExplicit, 100, 300, Apertures::Shared(8.0), 0.01, 1);
            p.rho_wout = 0.01;
            let patterns = [12.3, 17.1, 23.7]
                .iter()
                .enumerate()
                .map(|(i, period)| PatternSpec::Multichannel { channels: 10, period: *period, seed: 100 + i as u64, length: None })
                .collect();
            let mut c = base(ExperimentKind::MultichannelCsv, name, reservoir(200, 1.0, 0.2, 0.2, 1), p, patterns);
            c.length = 1000;
            c
        }
        "human-motion" => {
            let apertures = vec![25.0, 55.0, 17.0, 49.0, 89.0, 49.0, 9.0, 65.0, 49.0, 9.0, 25.0, 25.0, 17.0, 9.0, 7.0];
            let p = plan(TrainMode::Conceptor, 50, 0, Apertures::PerPattern(apertures), 0.001, 1);
            let mut res = reservoir(600, 1.0, 0.2, 0.8, 1);
            res.leaking_rate = 0.3;
            let patterns = vec![PatternSpec::CsvDir { path: PathBuf::from("data/motion"), normalize: true, smooth: 0 }];
            base(ExperimentKind::MultichannelCsv, name, res, p, patterns)
        }
        _ => return None,
    };
    Some(cfg)
}

/// One-line descriptions for `presets`.
pub fn describe(name: &str) -> &'static str {
    match name {
        "periodic-conceptor" => "two sines and two 5-periodic patterns, full conceptors",
        "periodic-diagonal" => "the periodic suite with explicit diagonal conceptors",
        "online-adaptation" => "the periodic suite with iteratively adapted conception weights",
        "chaotic-conceptor" => "Rossler, Lorenz, Mackey-Glass and Henon attractors, full conceptors",
        "chaotic-diagonal" => "the four attractors with diagonal conceptors",
        "morph-sine-conceptor" => "morph between the two sines, conceptors, mu 0 to 1",
        "morph-sine-extrapolation" => "sine morph with mu -2 to 3",
        "morph-sine-diagonal" => "morph between the two sines, diagonal conceptors",
        "pull-apart-sines" => "stage-1 state clouds of the two sines",
        "multichannel-synthetic" => "three synthetic 10-channel patterns, diagonal conceptors",
        "human-motion" => "motion-capture CSVs from data/motion (not bundled)",
        _ => "",
    }
}
