//! End-to-end training schemes, self-generation and morphing.
//!
//! * `Conceptor`: plain drive, collect, one conceptor per pattern.
//! * `DiagonalExplicit`: a random conception vector `D₀` sits in the loop during
//!   washout and stage 1; the closed form over the stage-1 states gives `D`,
//!   which filters stage 2, where the states used for loading are collected.
//! * `DiagonalIterative`: like the explicit scheme, but the weights adapt online
//!   at every stage-1 step and the adapted weights become `D`.

use std::borrow::Cow;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conceptor::{compute_conceptor, correlation, CorrelationMatrix};
use crate::diagonal::{compute_conception, random_conception, AdaptationRule, ConceptionVector};
use crate::error::{check_aperture, check_dim, Error, Result};
use crate::filter::{Filter, FilterKernel};
use crate::loading::{loop_step, store_patterns, HarvestBuilder, Readout, RidgeConfig, StateHarvest};
use crate::patterns::Pattern;
use crate::reservoir::{Reservoir, ReservoirState};
use crate::rng::derive_seed;

/// Any state or weight component beyond this magnitude counts as divergence.
pub const DIVERGENCE_BOUND: f64 = 10.0;

pub const DEFAULT_ADAPTATION_RATE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    Conceptor,
    DiagonalExplicit,
    DiagonalIterative,
}

impl TrainMode {
    pub fn is_diagonal(self) -> bool {
        !matches!(self, TrainMode::Conceptor)
    }
}

/// How the stage-1 conception vector is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialConception {
    #[default]
    Random,
    Ones,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingPlan {
    pub mode: TrainMode,
    pub n_washout: usize,
    /// Ignored in conceptor mode.
    pub n_stage1: usize,
    /// Collected steps per pattern. Defaults to everything left after washout
    /// (and stage 1 in the diagonal modes).
    pub n_collect: Option<usize>,
    pub apertures: Vec<f64>,
    pub ridge: RidgeConfig,
    pub reuse_stage1: bool,
    pub seed: u64,
    /// Per-neuron adaptation rates for the iterative mode.
    pub rates: Option<Vec<f64>>,
    pub low_weight_boost: f64,
    pub initial_conception: InitialConception,
    pub readout: Readout,
}

impl TrainingPlan {
    pub fn new(mode: TrainMode, n_washout: usize, apertures: Vec<f64>, ridge: RidgeConfig, seed: u64) -> Self {
        TrainingPlan {
            mode,
            n_washout,
            n_stage1: 0,
            n_collect: None,
            apertures,
            ridge,
            reuse_stage1: false,
            seed,
            rates: None,
            low_weight_boost: 1.0,
            initial_conception: InitialConception::Random,
            readout: Readout::Filtered,
        }
    }

    fn stage1(&self) -> usize {
        if self.mode.is_diagonal() {
            self.n_stage1
        } else {
            0
        }
    }

    /// Pattern row that drives the first collected step. Recalls started from
    /// the stored start state continue the pattern from this row.
    pub fn collection_start(&self) -> usize {
        if self.reuse_stage1 {
            self.n_washout
        } else {
            self.n_washout + self.stage1()
        }
    }

    /// Number of harvested columns for a pattern of `length` steps.
    pub fn collect_len(&self, length: usize) -> Result<usize> {
        let used = self.n_washout + self.stage1();
        let window = if self.reuse_stage1 && self.mode.is_diagonal() {
            let n = self.n_collect.unwrap_or(length.saturating_sub(used));
            if used + n > length {
                return Err(Error::Range { from: used, to: used + n, len: length });
            }
            n + self.stage1()
        } else {
            let n = self.n_collect.unwrap_or(length.saturating_sub(used));
            if used + n > length {
                return Err(Error::Range { from: used, to: used + n, len: length });
            }
            n
        };
        if window == 0 {
            return Err(Error::Range { from: used, to: used, len: length });
        }
        Ok(window)
    }

    pub fn validate(&self, res: &Reservoir, patterns: &[Pattern]) -> Result<()> {
        self.ridge.validate()?;
        if patterns.is_empty() {
            return Err(Error::Config("training needs at least one pattern".into()));
        }
        check_dim("apertures per pattern", patterns.len(), self.apertures.len())?;
        for a in &self.apertures {
            check_aperture(*a)?;
        }
        if self.mode.is_diagonal() {
            if self.ridge.rho_w <= 0.0 {
                return Err(Error::Config("diagonal training requires rho_w > 0".into()));
            }
            if self.n_stage1 == 0 {
                return Err(Error::Config("diagonal training requires n_stage1 > 0".into()));
            }
        }
        if let Some(rates) = &self.rates {
            check_dim("adaptation rates", res.n_neurons(), rates.len())?;
        }
        if !(self.low_weight_boost.is_finite() && self.low_weight_boost > 0.0) {
            return Err(Error::Config(format!(
                "low_weight_boost must be positive, got {}",
                self.low_weight_boost
            )));
        }
        for p in patterns {
            check_dim("pattern channels", res.n_inputs(), p.channels())?;
            self.collect_len(p.length())?;
        }
        Ok(())
    }
}

/// A reservoir whose recurrent weights have absorbed the stored patterns.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedSystem {
    pub w: DMatrix<f64>,
    pub w_out: DMatrix<f64>,
    pub filters: Vec<Filter>,
    pub start_states: Vec<ReservoirState>,
    pub reservoir: Reservoir,
    pub mode: TrainMode,
    pub readout: Readout,
}

impl LoadedSystem {
    pub fn n_patterns(&self) -> usize {
        self.filters.len()
    }

    pub fn n_neurons(&self) -> usize {
        self.w.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.w_out.nrows()
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.n_patterns() {
            return Err(Error::Config(format!(
                "pattern index {j} out of range for {} stored patterns",
                self.n_patterns()
            )));
        }
        Ok(())
    }
}

/// Per-pattern by-products of training, used for diagnostics and artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternTrace {
    /// Correlation of the harvested (filtered) states.
    pub correlation: CorrelationMatrix,
    /// Filtered states of stage 1, one per column. Empty in conceptor mode.
    pub stage1_states: DMatrix<f64>,
    /// The harvested readout states.
    pub collected_states: DMatrix<f64>,
}

fn monitor(v: &DVector<f64>, pattern: usize, step: usize, what: &str) -> Result<()> {
    if let Some((i, x)) = v
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite() || x.abs() > DIVERGENCE_BOUND)
    {
        return Err(Error::Divergence {
            pattern,
            step,
            detail: format!("{what} component {i} reached {x}"),
        });
    }
    Ok(())
}

struct PatternOutcome {
    filter: Filter,
    harvest: StateHarvest,
    trace: PatternTrace,
}

fn train_conceptor(res: &Reservoir, p: &Pattern, plan: &TrainingPlan, j: usize) -> Result<PatternOutcome> {
    let collect = plan.collect_len(p.length())?;
    let mut r = DVector::zeros(res.n_neurons());
    let mut builder = HarvestBuilder::new(collect, plan.readout);
    for step in 0..plan.n_washout + collect {
        let input = p.row(step);
        let next = loop_step(res, &r, &r, &input);
        monitor(&next, j, step, "state")?;
        if step >= plan.n_washout {
            builder.push(res, (&r, &r), (&next, &next), &input);
        }
        r = next;
    }
    let harvest = builder.finish()?;
    let corr = correlation(&harvest.states)?;
    let c = compute_conceptor(&corr, plan.apertures[j])?;
    Ok(PatternOutcome {
        filter: Filter::Conceptor(c),
        trace: PatternTrace {
            correlation: corr,
            stage1_states: DMatrix::zeros(res.n_neurons(), 0),
            collected_states: harvest.states.clone(),
        },
        harvest,
    })
}

fn train_diagonal(res: &Reservoir, p: &Pattern, plan: &TrainingPlan, j: usize) -> Result<PatternOutcome> {
    let n = res.n_neurons();
    let aperture = plan.apertures[j];
    let collect = plan.collect_len(p.length())?;
    let mut d = match plan.initial_conception {
        InitialConception::Random => random_conception(n, derive_seed(plan.seed, j as u64))?.weights,
        InitialConception::Ones => DVector::from_element(n, 1.0),
    };
    let rule = match plan.mode {
        TrainMode::DiagonalIterative => {
            let rates = plan
                .rates
                .clone()
                .map(DVector::from_vec)
                .unwrap_or_else(|| DVector::from_element(n, DEFAULT_ADAPTATION_RATE));
            Some(AdaptationRule::new(rates, aperture)?.with_low_weight_boost(plan.low_weight_boost))
        }
        _ => None,
    };

    // washout and stage 1 under D₀, adapting it in the iterative mode
    let stage1_end = plan.n_washout + plan.n_stage1;
    let mut r = DVector::zeros(n);
    let mut washout_end = r.clone();
    let mut stage1 = Vec::with_capacity(plan.n_stage1);
    for step in 0..stage1_end {
        let z = d.component_mul(&r);
        let next = loop_step(res, &r, &z, &p.row(step));
        monitor(&next, j, step, "state")?;
        r = next;
        if step >= plan.n_washout {
            let z_next = d.component_mul(&r);
            if let Some(rule) = &rule {
                d = rule.step(&d, &z_next)?;
                monitor(&d, j, step, "conception weight")?;
            }
            stage1.push(z_next);
        }
        if step + 1 == plan.n_washout {
            washout_end = r.clone();
        }
    }
    let stage1_states = DMatrix::from_columns(&stage1);
    let conception = match plan.mode {
        TrainMode::DiagonalIterative => ConceptionVector { weights: d, aperture },
        _ => compute_conception(&stage1_states, aperture)?,
    };

    // stage 2 under D
    let (from, mut r) = if plan.reuse_stage1 {
        (plan.n_washout, washout_end)
    } else {
        (stage1_end, r)
    };
    let w = &conception.weights;
    let mut z = w.component_mul(&r);
    let mut builder = HarvestBuilder::new(collect, plan.readout);
    for step in from..from + collect {
        let input = p.row(step);
        let next = loop_step(res, &r, &z, &input);
        monitor(&next, j, step, "state")?;
        let z_next = w.component_mul(&next);
        builder.push(res, (&r, &z), (&next, &z_next), &input);
        r = next;
        z = z_next;
    }
    let harvest = builder.finish()?;
    Ok(PatternOutcome {
        filter: Filter::Conception(conception),
        trace: PatternTrace {
            correlation: correlation(&harvest.states)?,
            stage1_states,
            collected_states: harvest.states.clone(),
        },
        harvest,
    })
}

/// Trains and loads `patterns` into `reservoir`, returning per-pattern traces.
pub fn train_with_traces(
    reservoir: &Reservoir,
    patterns: &[Pattern],
    plan: &TrainingPlan,
) -> Result<(LoadedSystem, Vec<PatternTrace>)> {
    plan.validate(reservoir, patterns)?;
    let outcomes = patterns
        .par_iter()
        .enumerate()
        .map(|(j, p)| match plan.mode {
            TrainMode::Conceptor => train_conceptor(reservoir, p, plan, j),
            _ => train_diagonal(reservoir, p, plan, j),
        })
        .collect::<Result<Vec<_>>>()?;

    let mut filters = Vec::with_capacity(outcomes.len());
    let mut harvests = Vec::with_capacity(outcomes.len());
    let mut traces = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        filters.push(o.filter);
        harvests.push(o.harvest);
        traces.push(o.trace);
    }
    let (w, w_out) = store_patterns(&harvests, &plan.ridge)?;
    let start_states = harvests.into_iter().map(|h| h.start).collect();
    Ok((
        LoadedSystem {
            w,
            w_out,
            filters,
            start_states,
            reservoir: reservoir.clone(),
            mode: plan.mode,
            readout: plan.readout,
        },
        traces,
    ))
}

pub fn train(reservoir: &Reservoir, patterns: &[Pattern], plan: &TrainingPlan) -> Result<LoadedSystem> {
    train_with_traces(reservoir, patterns, plan).map(|(s, _)| s)
}

/// Runs the loaded reservoir autonomously with pattern `j`'s filter:
/// `r ← (1 − α_l) r + α_l tanh(W z + b)`, `z = filter(r)`, `y = W_out z`
/// (or `W_out r` with an unfiltered readout).
pub fn self_generate(
    sys: &LoadedSystem,
    pattern_index: usize,
    n_steps: usize,
    initial: Option<&ReservoirState>,
) -> Result<Pattern> {
    sys.check_index(pattern_index)?;
    let kernel = sys.filters[pattern_index].kernel();
    let start = initial.unwrap_or(&sys.start_states[pattern_index]);
    let data = run_autonomous(sys, pattern_index, &start.x, n_steps, |_| Ok((Cow::Borrowed(&kernel), None)))?;
    Ok(named(data, format!("recall_{pattern_index}")))
}

fn named(data: DMatrix<f64>, name: String) -> Pattern {
    Pattern { name, data }
}

/// Shared autonomous loop. `filter_at(step)` returns the kernel for that step
/// and an optional `(μ, target)` blend applied to the filtered state.
fn run_autonomous<'k>(
    sys: &LoadedSystem,
    pattern_index: usize,
    start: &DVector<f64>,
    n_steps: usize,
    mut filter_at: impl FnMut(usize) -> Result<(Cow<'k, FilterKernel>, Option<(f64, DVector<f64>)>)>,
) -> Result<DMatrix<f64>> {
    if n_steps == 0 {
        return Err(Error::Config("n_steps must be at least 1".into()));
    }
    check_dim("start state", sys.n_neurons(), start.len())?;
    let res = &sys.reservoir;
    let mut out = DMatrix::zeros(n_steps, sys.n_outputs());
    let mut r = start.clone();
    let (k0, _) = filter_at(0)?;
    let mut z = k0.apply(&r);
    for step in 0..n_steps {
        let mut pre = &sys.w * &z;
        pre += &res.bias;
        r = res.leak(&r, pre);
        let (kernel, nudge) = filter_at(step)?;
        z = kernel.apply(&r);
        if let Some((mu, target)) = nudge {
            z = z * (1.0 - mu) + target * mu;
        }
        monitor(&z, pattern_index, step, "state")?;
        let y = match sys.readout {
            Readout::Filtered => &sys.w_out * &z,
            Readout::Unfiltered => &sys.w_out * &r,
        };
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                pattern: pattern_index,
                step,
                detail: format!("output reached {v}"),
            });
        }
        out.row_mut(step).copy_from(&y.transpose());
    }
    Ok(out)
}

/// The μ values of a morph: `n_pre` holds at `mu_min`, a linear ramp of
/// `n_morph` steps ending exactly at `mu_max`, then `n_post` holds.
pub fn morph_schedule(mu_min: f64, mu_max: f64, n_pre: usize, n_morph: usize, n_post: usize) -> Vec<f64> {
    let mut mu = vec![mu_min; n_pre];
    mu.extend((1..=n_morph).map(|k| {
        let t = k as f64 / n_morph as f64;
        mu_min * (1.0 - t) + mu_max * t
    }));
    mu.extend(std::iter::repeat_n(mu_max, n_post));
    mu
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MorphSpec {
    pub from: usize,
    pub to: usize,
    pub mu_min: f64,
    pub mu_max: f64,
    pub n_pre: usize,
    pub n_morph: usize,
    pub n_post: usize,
    /// Blend the state towards the target's start state during the ramp.
    pub nudge: bool,
}

/// Self-generation with the blended filter `(1 − μ) F_from + μ F_to`, starting
/// from the stored start state of `from`.
pub fn morph_run(sys: &LoadedSystem, spec: &MorphSpec) -> Result<(Pattern, Vec<f64>)> {
    sys.check_index(spec.from)?;
    sys.check_index(spec.to)?;
    if spec.n_morph == 0 {
        return Err(Error::Config("n_morph must be at least 1".into()));
    }
    let schedule = morph_schedule(spec.mu_min, spec.mu_max, spec.n_pre, spec.n_morph, spec.n_post);
    let a = sys.filters[spec.from].kernel();
    let b = sys.filters[spec.to].kernel();
    let target_start = b.apply(&sys.start_states[spec.to].x);
    let ramp = spec.n_pre..spec.n_pre + spec.n_morph;
    let data = run_autonomous(sys, spec.from, &sys.start_states[spec.from].x, schedule.len(), |step| {
        let mu = schedule[step];
        let kernel = FilterKernel::blend(&a, &b, mu)?;
        let nudge = (spec.nudge && ramp.contains(&step)).then(|| (mu, target_start.clone()));
        Ok((Cow::Owned(kernel), nudge))
    })?;
    Ok((named(data, format!("morph_{}_{}", spec.from, spec.to)), schedule))
}
