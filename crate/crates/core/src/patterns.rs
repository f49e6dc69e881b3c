//! Driver patterns: synthetic generators and CSV ingestion.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_for;

/// A discrete-time multichannel signal; row `n` is the sample at step `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub name: String,
    pub data: DMatrix<f64>,
}

impl Pattern {
    pub fn new(name: impl Into<String>, data: DMatrix<f64>) -> Result<Self> {
        let name = name.into();
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            // column-major position
            let (r, c) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::Config(format!(
                "pattern {name:?} has a non-finite value at row {r}, channel {c}"
            )));
        }
        Ok(Pattern { name, data })
    }

    pub fn from_channel(name: impl Into<String>, values: &[f64]) -> Result<Self> {
        Pattern::new(name, DMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn length(&self) -> usize {
        self.data.nrows()
    }

    pub fn channels(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, n: usize) -> DVector<f64> {
        self.data.row(n).transpose()
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.data.column(c).iter().copied().collect()
    }

    /// Rows `from..to` as a new pattern.
    pub fn slice(&self, from: usize, to: usize) -> Result<Pattern> {
        if from >= to || to > self.length() {
            return Err(Error::Range { from, to, len: self.length() });
        }
        Ok(Pattern {
            name: self.name.clone(),
            data: self.data.rows(from, to - from).into_owned(),
        })
    }

    /// Writes one header row of channel names followed by one row per step.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        let header: Vec<String> = (0..self.channels()).map(|c| format!("ch{c}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for r in 0..self.length() {
            let row: Vec<String> = self.data.row(r).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn check_length(length: usize) -> Result<()> {
    if length == 0 {
        Err(Error::Config("pattern length must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `p(n) = sin(2πn / period)` for `n = 0..length`.
pub fn gen_sine(period: f64, length: usize) -> Result<Pattern> {
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::Config(format!("sine period must be positive, got {period}")));
    }
    check_length(length)?;
    let values: Vec<f64> = (0..length)
        .map(|n| (2.0 * PI * n as f64 / period).sin())
        .collect();
    Pattern::from_channel(format!("sine_{period}"), &values)
}

/// A random integer-periodic pattern.
///
/// `period` base values are drawn uniformly from `[-1, 1]`. With a positive
/// `perturbation`, uniform noise of that amplitude is added to the base values
/// (then clamped back to `[-1, 1]`), giving a close variant of the
/// unperturbed pattern drawn from the same seed.
pub fn gen_periodic_random(
    period: usize,
    length: usize,
    seed: u64,
    perturbation: f64,
) -> Result<Pattern> {
    if period == 0 {
        return Err(Error::Config("period must be at least 1".into()));
    }
    if !(perturbation.is_finite() && perturbation >= 0.0) {
        return Err(Error::Config(format!(
            "perturbation must be non-negative, got {perturbation}"
        )));
    }
    check_length(length)?;
    let mut rng = rng_for(seed, 0);
    let mut base: Vec<f64> = (0..period).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if perturbation > 0.0 {
        for v in &mut base {
            let noise: f64 = rng.random_range(-1.0..=1.0);
            *v = (*v + perturbation * noise).clamp(-1.0, 1.0);
        }
    }
    let values: Vec<f64> = (0..length).map(|n| base[n % period]).collect();
    Pattern::from_channel(format!("periodic{period}_s{seed}"), &values)
}

/// A synthetic multichannel pattern: every channel mixes a fundamental and a
/// second harmonic of one shared period with a slowly decaying transient,
/// then each column is rescaled to `[-1, 1]`.
///
/// Amplitudes, phases and transient sizes are drawn per channel from `seed`.
pub fn gen_multichannel(channels: usize, period: f64, length: usize, seed: u64) -> Result<Pattern> {
    if channels == 0 {
        return Err(Error::Config("multichannel pattern needs at least one channel".into()));
    }
    if !(period.is_finite() && period > 1.0) {
        return Err(Error::Config(format!("period must exceed 1, got {period}")));
    }
    check_length(length)?;
    let mut rng = rng_for(seed, 0);
    let decay = length as f64 / 4.0;
    let mut data = DMatrix::zeros(length, channels);
    for c in 0..channels {
        let a: f64 = rng.random_range(0.3..0.8);
        let b: f64 = rng.random_range(0.0..0.3);
        let phi: f64 = rng.random_range(0.0..2.0 * PI);
        let psi: f64 = rng.random_range(0.0..2.0 * PI);
        let t: f64 = rng.random_range(-0.5..0.5);
        for n in 0..length {
            let w = 2.0 * PI * n as f64 / period;
            data[(n, c)] = a * (w + phi).sin() + b * (2.0 * w + psi).sin() + t * (-(n as f64) / decay).exp();
        }
    }
    normalize_columns(&mut data);
    Pattern::new(format!("multichannel{channels}_p{period}_s{seed}"), data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttractorSystem {
    Rossler { a: f64, b: f64, c: f64 },
    Lorenz { sigma: f64, rho: f64, beta: f64 },
    MackeyGlass { beta: f64, gamma: f64, n: f64, tau: f64 },
    Henon { a: f64, b: f64 },
}

impl AttractorSystem {
    pub fn name(&self) -> &'static str {
        match self {
            AttractorSystem::Rossler { .. } => "rossler",
            AttractorSystem::Lorenz { .. } => "lorenz",
            AttractorSystem::MackeyGlass { .. } => "mackey_glass",
            AttractorSystem::Henon { .. } => "henon",
        }
    }
}

/// Integration settings for [`gen_attractor`].
///
/// `step_size` is the integration step (ignored by the Hénon map), one sample
/// is kept every `subsample` steps, and `transient_steps` integration steps
/// are discarded first.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorParams {
    pub system: AttractorSystem,
    pub step_size: f64,
    pub subsample: usize,
    pub initial_condition: Vec<f64>,
    pub transient_steps: usize,
}

impl AttractorParams {
    pub fn rossler() -> Self {
        AttractorParams {
            system: AttractorSystem::Rossler { a: 0.2, b: 0.2, c: 8.0 },
            step_size: 0.025,
            subsample: 30,
            initial_condition: vec![0.5, 1.0, 0.5],
            transient_steps: 1000,
        }
    }

    pub fn lorenz() -> Self {
        AttractorParams {
            system: AttractorSystem::Lorenz { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 },
            step_size: 0.005,
            subsample: 15,
            initial_condition: vec![10.0, 1.0, 25.0],
            transient_steps: 1000,
        }
    }

    pub fn mackey_glass() -> Self {
        AttractorParams {
            system: AttractorSystem::MackeyGlass { beta: 0.2, gamma: 0.1, n: 10.0, tau: 17.0 },
            step_size: 0.1,
            subsample: 10,
            initial_condition: vec![1.2],
            transient_steps: 1000,
        }
    }

    pub fn henon() -> Self {
        AttractorParams {
            system: AttractorSystem::Henon { a: 1.4, b: 0.3 },
            step_size: 1.0,
            subsample: 1,
            initial_condition: vec![0.1, 0.1],
            transient_steps: 1000,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {}", self.step_size)));
        }
        if self.subsample == 0 {
            return Err(Error::Config("subsample must be at least 1".into()));
        }
        let dims = match self.system {
            AttractorSystem::Rossler { .. } | AttractorSystem::Lorenz { .. } => 3,
            AttractorSystem::MackeyGlass { .. } => 1,
            AttractorSystem::Henon { .. } => 2,
        };
        if self.initial_condition.len() != dims {
            return Err(Error::Config(format!(
                "{} needs a {dims}-dimensional initial condition, got {}",
                self.system.name(),
                self.initial_condition.len()
            )));
        }
        Ok(())
    }
}

type Flow3 = fn(&[f64; 3], &AttractorSystem) -> [f64; 3];

fn rossler_flow(s: &[f64; 3], sys: &AttractorSystem) -> [f64; 3] {
    let AttractorSystem::Rossler { a, b, c } = *sys else { unreachable!() };
    [-s[1] - s[2], s[0] + a * s[1], b + s[2] * (s[0] - c)]
}

fn lorenz_flow(s: &[f64; 3], sys: &AttractorSystem) -> [f64; 3] {
    let AttractorSystem::Lorenz { sigma, rho, beta } = *sys else { unreachable!() };
    [sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]]
}

fn rk4_step(f: Flow3, s: &[f64; 3], h: f64, sys: &AttractorSystem) -> [f64; 3] {
    let add = |a: &[f64; 3], k: &[f64; 3], w: f64| [a[0] + w * k[0], a[1] + w * k[1], a[2] + w * k[2]];
    let k1 = f(s, sys);
    let k2 = f(&add(s, &k1, h / 2.0), sys);
    let k3 = f(&add(s, &k2, h / 2.0), sys);
    let k4 = f(&add(s, &k3, h), sys);
    let mut out = *s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn raw_attractor(params: &AttractorParams, length: usize) -> Result<Vec<[f64; 2]>> {
    let name = params.system.name();
    let total = params.transient_steps + length * params.subsample;
    let mut samples = Vec::with_capacity(length);
    let keep = |step: usize| {
        step >= params.transient_steps && (step - params.transient_steps) % params.subsample == 0
    };
    match params.system {
        AttractorSystem::Rossler { .. } | AttractorSystem::Lorenz { .. } => {
            let f: Flow3 = if matches!(params.system, AttractorSystem::Rossler { .. }) {
                rossler_flow
            } else {
                lorenz_flow
            };
            let ic = &params.initial_condition;
            let mut s = [ic[0], ic[1], ic[2]];
            for step in 0..total {
                s = rk4_step(f, &s, params.step_size, &params.system);
                if !s.iter().all(|v| v.is_finite()) {
                    return Err(Error::Integration { system: name, step });
                }
                if keep(step) {
                    samples.push([s[0], s[1]]);
                }
            }
        }
        AttractorSystem::MackeyGlass { beta, gamma, n, tau } => {
            let h = params.step_size;
            let lag = tau / h;
            let lag_lo = lag.floor() as usize;
            let frac = lag - lag_lo as f64;
            // history[k] holds u at step k; negative times are the constant initial history
            let u0 = params.initial_condition[0];
            let mut history: Vec<f64> = Vec::with_capacity(total + 1);
            history.push(u0);
            let delayed = |hist: &[f64], k: usize, back: usize| -> f64 {
                if k >= back {
                    hist[k - back]
                } else {
                    u0
                }
            };
            let lagged = |hist: &[f64], k: usize| -> f64 {
                let a = delayed(hist, k, lag_lo);
                if frac == 0.0 {
                    a
                } else {
                    let b = delayed(hist, k, lag_lo + 1);
                    (1.0 - frac) * a + frac * b
                }
            };
            for step in 0..total {
                let u = history[step];
                let ud = lagged(&history, step);
                let next = u + h * (beta * ud / (1.0 + ud.powf(n)) - gamma * u);
                if !next.is_finite() {
                    return Err(Error::Integration { system: name, step });
                }
                history.push(next);
                if keep(step) {
                    samples.push([next, lagged(&history, step + 1)]);
                }
            }
        }
        AttractorSystem::Henon { a, b } => {
            let ic = &params.initial_condition;
            let (mut x, mut y) = (ic[0], ic[1]);
            for step in 0..total {
                let nx = 1.0 - a * x * x + y;
                y = b * x;
                x = nx;
                if !(x.is_finite() && y.is_finite()) {
                    return Err(Error::Integration { system: name, step });
                }
                if keep(step) {
                    samples.push([x, y]);
                }
            }
        }
    }
    Ok(samples)
}

/// Samples a chaotic system, projects it to two channels and rescales each
/// channel to `[0, 1]`.
pub fn gen_attractor(params: &AttractorParams, length: usize) -> Result<Pattern> {
    params.validate()?;
    check_length(length)?;
    let raw = raw_attractor(params, length)?;
    let mut data = DMatrix::from_fn(length, 2, |r, c| raw[r][c]);
    for c in 0..2 {
        let mut col = data.column_mut(c);
        let (lo, hi) = (col.min(), col.max());
        if hi > lo {
            col.apply(|v| *v = (*v - lo) / (hi - lo));
        } else {
            col.fill(0.5);
        }
    }
    Pattern::new(params.system.name(), data)
}

/// Pairs `(p(n), p(n + delay))` of one channel.
pub fn delay_embed(pattern: &Pattern, channel: usize, delay: usize) -> Result<Pattern> {
    if channel >= pattern.channels() {
        return Err(Error::Dimension {
            context: "delay_embed channel",
            expected: pattern.channels(),
            actual: channel,
        });
    }
    if delay == 0 || delay >= pattern.length() {
        return Err(Error::Config(format!(
            "delay {delay} must be in 1..{}",
            pattern.length()
        )));
    }
    let col = pattern.data.column(channel);
    let rows = pattern.length() - delay;
    let data = DMatrix::from_fn(rows, 2, |r, c| col[r + c * delay]);
    Pattern::new(format!("{}_delay{delay}", pattern.name), data)
}

/// Maps each column affinely onto `[-1, 1]`; constant columns become 0.
pub fn normalize_columns(data: &mut DMatrix<f64>) {
    for mut col in data.column_iter_mut() {
        let (lo, hi) = (col.min(), col.max());
        if hi > lo {
            col.apply(|v| *v = 2.0 * (*v - lo) / (hi - lo) - 1.0);
        } else {
            col.fill(0.0);
        }
    }
}

/// Centered moving average with the window truncated at the ends.
pub fn smooth_columns(data: &DMatrix<f64>, window: usize) -> DMatrix<f64> {
    if window <= 1 {
        return data.clone();
    }
    let len = data.nrows();
    let before = (window - 1) / 2;
    let after = window - 1 - before;
    DMatrix::from_fn(len, data.ncols(), |r, c| {
        let lo = r.saturating_sub(before);
        let hi = (r + after).min(len - 1);
        let col = data.column(c);
        (lo..=hi).map(|k| col[k]).sum::<f64>() / (hi - lo + 1) as f64
    })
}

/// Reads a numeric table with one time step per line.
///
/// A first row that does not parse as numbers is treated as a header.
pub fn load_csv(path: impl AsRef<Path>, normalize: bool, smooth_window: usize) -> Result<Pattern> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let line = idx + 1;
        let record = record.map_err(|e| Error::parse(path, line, 0, e.to_string()))?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: Vec<Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        if rows.is_empty() && width.is_none() && parsed.iter().any(|p| p.is_err()) {
            // header row
            width = Some(record.len());
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(Error::parse(
                path,
                line,
                record.len().min(expected) + 1,
                format!("expected {expected} columns, found {}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(expected);
        for (col, (cell, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Ok(v) if v.is_finite() => row.push(v),
                _ => {
                    return Err(Error::parse(path, line, col + 1, format!("not a finite number: {cell:?}")))
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::parse(path, 1, 1, "no numeric rows"));
    }
    let cols = rows[0].len();
    let mut data = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    if normalize {
        normalize_columns(&mut data);
    }
    if smooth_window > 0 {
        data = smooth_columns(&data, smooth_window);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Pattern::new(name, data)
}
