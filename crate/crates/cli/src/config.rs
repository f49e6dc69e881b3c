//! Experiment configuration files.
//!
//! A config is a TOML document. Top-level keys name the experiment and its
//! outputs; `[reservoir]`, `[plan]`, `[recall]` and `[morph]` hold the
//! parameters and `[[patterns]]` lists the drivers in storage order.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use conceptor_core::{
    AttractorParams, InitialConception, Readout, ReservoirConfig, RidgeConfig, TrainMode, TrainingPlan,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Periodic,
    Chaotic,
    MultichannelCsv,
    Morph,
    OnlineAdaptation,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitKind {
    RecallCsv,
    NrmseTable,
    SingularValues,
    StateClouds,
    DelayEmbedding,
    MuTrace,
    ConceptionWeights,
}

impl EmitKind {
    pub const ALL: [EmitKind; 7] = [
        EmitKind::RecallCsv,
        EmitKind::NrmseTable,
        EmitKind::SingularValues,
        EmitKind::StateClouds,
        EmitKind::DelayEmbedding,
        EmitKind::MuTrace,
        EmitKind::ConceptionWeights,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmitKind::RecallCsv => "recall_csv",
            EmitKind::NrmseTable => "nrmse_table",
            EmitKind::SingularValues => "singular_values",
            EmitKind::StateClouds => "state_clouds",
            EmitKind::DelayEmbedding => "delay_embedding",
            EmitKind::MuTrace => "mu_trace",
            EmitKind::ConceptionWeights => "conception_weights",
        }
    }

    pub fn parse(s: &str) -> Result<EmitKind, CliError> {
        EmitKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim())
            .ok_or_else(|| {
                let known: Vec<_> = EmitKind::ALL.iter().map(|k| k.as_str()).collect();
                CliError::Config(format!("unknown artifact kind `{s}` (expected one of {})", known.join(", ")))
            })
    }
}

impl fmt::Display for EmitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Prefix of every artifact file name.
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_emit")]
    pub emit: BTreeSet<EmitKind>,
    /// Length of generated patterns that do not set their own.
    #[serde(default = "default_length")]
    pub length: usize,
    /// The two neurons dumped by `state_clouds`.
    #[serde(default = "default_cloud_neurons")]
    pub cloud_neurons: [usize; 2],
    pub reservoir: ReservoirSection,
    pub plan: PlanSection,
    #[serde(default)]
    pub recall: RecallSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub morph: Option<MorphSection>,
    pub patterns: Vec<PatternSpec>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_emit() -> BTreeSet<EmitKind> {
    [EmitKind::RecallCsv, EmitKind::NrmseTable].into_iter().collect()
}

fn default_length() -> usize {
    5000
}

fn default_cloud_neurons() -> [usize; 2] {
    [0, 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSection {
    pub n_neurons: usize,
    /// Defaults to the channel count of the patterns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_inputs: Option<usize>,
    #[serde(default = "one")]
    pub w_star_scaling: f64,
    #[serde(default = "one")]
    pub w_in_scaling: f64,
    #[serde(default = "default_bias")]
    pub bias_scaling: f64,
    #[serde(default = "one")]
    pub leaking_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sparsity: Option<f64>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

fn default_bias() -> f64 {
    0.2
}

fn default_seed() -> u64 {
    1
}

impl ReservoirSection {
    pub fn to_config(&self, n_inputs: usize) -> ReservoirConfig {
        ReservoirConfig {
            n_neurons: self.n_neurons,
            n_inputs: self.n_inputs.unwrap_or(n_inputs),
            w_star_scaling: self.w_star_scaling,
            w_in_scaling: self.w_in_scaling,
            bias_scaling: self.bias_scaling,
            leaking_rate: self.leaking_rate,
            sparsity: self.sparsity,
            seed: self.seed,
        }
    }
}

/// One aperture for every pattern, or one per pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Apertures {
    Shared(f64),
    PerPattern(Vec<f64>),
}

impl Apertures {
    pub fn resolve(&self, n_patterns: usize) -> Result<Vec<f64>, CliError> {
        match self {
            Apertures::Shared(a) => Ok(vec![*a; n_patterns]),
            Apertures::PerPattern(v) if v.len() == n_patterns => Ok(v.clone()),
            Apertures::PerPattern(v) => Err(CliError::Config(format!(
                "plan.apertures lists {} values for {n_patterns} patterns",
                v.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub mode: TrainMode,
    pub washout: usize,
    #[serde(default)]
    pub stage1: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collect: Option<usize>,
    pub apertures: Apertures,
    pub rho_w: f64,
    #[serde(default)]
    pub rho_wout: f64,
    #[serde(default)]
    pub reuse_stage1: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Adaptation rate of every neuron in the iterative mode.
    #[serde(default = "default_rate")]
    pub learning_rate: f64,
    /// Per-neuron rates; overrides `learning_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub low_weight_boost: f64,
    #[serde(default)]
    pub initial_conception: InitialConception,
    #[serde(default)]
    pub readout: Readout,
}

fn default_rate() -> f64 {
    conceptor_core::trainer::DEFAULT_ADAPTATION_RATE
}

impl PlanSection {
    pub fn to_plan(&self, n_patterns: usize, n_neurons: usize) -> Result<TrainingPlan, CliError> {
        let ridge = RidgeConfig { rho_w: self.rho_w, rho_wout: self.rho_wout };
        let mut plan = TrainingPlan::new(self.mode, self.washout, self.apertures.resolve(n_patterns)?, ridge, self.seed);
        plan.n_stage1 = self.stage1;
        plan.n_collect = self.collect;
        plan.reuse_stage1 = self.reuse_stage1;
        plan.rates = Some(self.rates.clone().unwrap_or_else(|| vec![self.learning_rate; n_neurons]));
        plan.low_weight_boost = self.low_weight_boost;
        plan.initial_conception = self.initial_conception;
        plan.readout = self.readout;
        Ok(plan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecallSection {
    /// Self-generated steps per pattern. Defaults to the part of the pattern
    /// after the collection start (1500 for chaotic runs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    /// Largest shift tried when aligning single-channel recalls.
    #[serde(default = "default_d_max")]
    pub d_max: usize,
    /// Window of the first/last comparison; 0 skips it.
    #[serde(default = "default_stability_window")]
    pub stability_window: usize,
    #[serde(default = "default_embedding_delay")]
    pub embedding_delay: usize,
    /// Grid resolution of the attractor coverage check.
    #[serde(default = "default_grid_cells")]
    pub grid_cells: usize,
}

fn default_d_max() -> usize {
    100
}

fn default_stability_window() -> usize {
    200
}

fn default_embedding_delay() -> usize {
    1
}

fn default_grid_cells() -> usize {
    32
}

impl Default for RecallSection {
    fn default() -> Self {
        RecallSection {
            steps: None,
            d_max: default_d_max(),
            stability_window: default_stability_window(),
            embedding_delay: default_embedding_delay(),
            grid_cells: default_grid_cells(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphSection {
    pub from: usize,
    pub to: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Leading steps at `mu_min` that are run but not reported.
    #[serde(default = "default_discard")]
    pub n_discard: usize,
    pub n_pre: usize,
    pub n_morph: usize,
    pub n_post: usize,
    #[serde(default)]
    pub nudge: bool,
    /// Length of the reference recalls the holds are compared against.
    #[serde(default = "default_reference_steps")]
    pub reference_steps: usize,
    /// Trailing steps of each hold compared against the references.
    #[serde(default = "default_compare_window")]
    pub compare_window: usize,
}

fn default_discard() -> usize {
    100
}

fn default_reference_steps() -> usize {
    1000
}

fn default_compare_window() -> usize {
    50
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttractorName {
    Rossler,
    Lorenz,
    MackeyGlass,
    Henon,
}

impl AttractorName {
    pub fn params(self) -> AttractorParams {
        match self {
            AttractorName::Rossler => AttractorParams::rossler(),
            AttractorName::Lorenz => AttractorParams::lorenz(),
            AttractorName::MackeyGlass => AttractorParams::mackey_glass(),
            AttractorName::Henon => AttractorParams::henon(),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSpec {
    Sine {
        period: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<usize>,
    },
    PeriodicRandom {
        period: usize,
        seed: u64,
        #[serde(default)]
        perturbation: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<usize>,
    },
    Attractor {
        system: AttractorName,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<usize>,
    },
    Multichannel {
        channels: usize,
        period: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        length: Option<usize>,
    },
    /// One pattern from a numeric table, one time step per row.
    Csv {
        path: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
        #[serde(default)]
        smooth: usize,
    },
    /// Every `*.csv` file of a directory, in file-name order.
    CsvDir {
        path: PathBuf,
        #[serde(default = "default_true")]
        normalize: bool,
        #[serde(default)]
        smooth: usize,
    },
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, source: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", source.display())))?;
        // file patterns are relative to the config file
        if let Some(base) = source.parent() {
            for p in &mut cfg.patterns {
                if let PatternSpec::Csv { path, .. } | PatternSpec::CsvDir { path, .. } = p {
                    if path.is_relative() {
                        *path = base.join(&*path);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Overrides both the reservoir and the plan seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.reservoir.seed = seed;
        self.plan.seed = seed;
    }

    /// Checks everything that can be checked before patterns are generated.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return bad(format!("name `{}` must be non-empty and use only letters, digits, `-` and `_`", self.name));
        }
        if self.patterns.is_empty() {
            return bad("at least one [[patterns]] entry is required".into());
        }
        for (i, p) in self.patterns.iter().enumerate() {
            match p {
                PatternSpec::Csv { path, .. } if !path.is_file() => {
                    return bad(format!("pattern {i}: file {} does not exist", path.display()));
                }
                PatternSpec::CsvDir { path, .. } if !path.is_dir() => {
                    return bad(format!("pattern {i}: directory {} does not exist", path.display()));
                }
                _ => {}
            }
        }
        if let Apertures::PerPattern(v) = &self.plan.apertures {
            // directories expand to an unknown number of patterns
            let fixed = !self.patterns.iter().any(|p| matches!(p, PatternSpec::CsvDir { .. }));
            if fixed && v.len() != self.patterns.len() {
                return bad(format!("plan.apertures lists {} values for {} patterns", v.len(), self.patterns.len()));
            }
        }
        if self.cloud_neurons.iter().any(|&k| k >= self.reservoir.n_neurons) {
            return bad(format!("cloud_neurons {:?} out of range for {} neurons", self.cloud_neurons, self.reservoir.n_neurons));
        }
        if self.recall.d_max == 0 || self.recall.embedding_delay == 0 || self.recall.grid_cells == 0 {
            return bad("recall.d_max, recall.embedding_delay and recall.grid_cells must be positive".into());
        }
        match (&self.morph, self.experiment) {
            (None, ExperimentKind::Morph) => return bad("a morph experiment needs a [morph] section".into()),
            (Some(m), ExperimentKind::Morph) => {
                if m.n_morph == 0 || m.n_pre + m.n_post == 0 {
                    return bad("morph.n_morph and at least one hold must be positive".into());
                }
                if [m.from, m.to].iter().any(|&j| j >= self.patterns.len())
                    && !self.patterns.iter().any(|p| matches!(p, PatternSpec::CsvDir { .. }))
                {
                    return bad(format!("morph indices {} and {} exceed the {} patterns", m.from, m.to, self.patterns.len()));
                }
                if m.compare_window == 0 || m.reference_steps < m.compare_window {
                    return bad("morph.compare_window must be positive and at most morph.reference_steps".into());
                }
            }
            _ => {}
        }
        if self.emit.contains(&EmitKind::MuTrace) && self.experiment != ExperimentKind::Morph {
            return bad("mu_trace is only produced by morph experiments".into());
        }
        Ok(())
    }
}
