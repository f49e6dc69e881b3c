//! The random recurrent network of leaky-integrated tanh neurons.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::patterns::Pattern;
use crate::rng::{rng_for, stream};

/// Number of fresh draws attempted before giving up on a zero spectral radius.
const MAX_W_STAR_ATTEMPTS: u64 = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirConfig {
    pub n_neurons: usize,
    pub n_inputs: usize,
    /// Target spectral radius of `W*`.
    pub w_star_scaling: f64,
    pub w_in_scaling: f64,
    pub bias_scaling: f64,
    pub leaking_rate: f64,
    /// Connection probability of `W*`. `None` applies [`default_sparsity`].
    pub sparsity: Option<f64>,
    pub seed: u64,
}

/// Fully connected below 20 neurons, ten expected connections per neuron above.
pub fn default_sparsity(n_neurons: usize) -> f64 {
    if n_neurons < 20 {
        1.0
    } else {
        10.0 / n_neurons as f64
    }
}

impl ReservoirConfig {
    pub fn new(n_neurons: usize, n_inputs: usize, seed: u64) -> Self {
        ReservoirConfig {
            n_neurons,
            n_inputs,
            w_star_scaling: 1.0,
            w_in_scaling: 1.0,
            bias_scaling: 0.2,
            leaking_rate: 1.0,
            sparsity: None,
            seed,
        }
    }

    pub fn effective_sparsity(&self) -> f64 {
        self.sparsity
            .unwrap_or_else(|| default_sparsity(self.n_neurons))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neurons == 0 {
            return Err(Error::Config("reservoir needs at least one neuron".into()));
        }
        if self.n_inputs == 0 {
            return Err(Error::Config("reservoir needs at least one input".into()));
        }
        if !(0.0..=1.0).contains(&self.leaking_rate) {
            return Err(Error::Config(format!(
                "leaking rate {} outside [0, 1]",
                self.leaking_rate
            )));
        }
        let s = self.effective_sparsity();
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Config(format!("sparsity {s} outside (0, 1]")));
        }
        for (name, v) in [
            ("w_star_scaling", self.w_star_scaling),
            ("w_in_scaling", self.w_in_scaling),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.bias_scaling.is_finite() && self.bias_scaling >= 0.0) {
            return Err(Error::Config(format!(
                "bias_scaling must be non-negative, got {}",
                self.bias_scaling
            )));
        }
        Ok(())
    }
}

/// Fixed random weights. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Reservoir {
    pub w_star: DMatrix<f64>,
    pub w_in: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub leaking_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirState {
    pub x: DVector<f64>,
}

impl ReservoirState {
    pub fn zeros(n: usize) -> Self {
        ReservoirState {
            x: DVector::zeros(n),
        }
    }

    pub fn filled(n: usize, value: f64) -> Self {
        ReservoirState {
            x: DVector::from_element(n, value),
        }
    }
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

fn standard_normal_matrix(rows: usize, cols: usize, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, stream);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn sparse_normal_matrix(n: usize, density: f64, seed: u64, stream: u64) -> DMatrix<f64> {
    let mut rng = rng_for(seed, stream);
    DMatrix::from_fn(n, n, |_, _| {
        // draw both numbers for every entry so the stream layout is density-independent
        let keep = rng.random::<f64>() < density;
        let v: f64 = rng.sample(StandardNormal);
        if keep {
            v
        } else {
            0.0
        }
    })
}

pub fn init_reservoir(config: &ReservoirConfig) -> Result<Reservoir> {
    config.validate()?;
    let n = config.n_neurons;
    let m = config.n_inputs;

    let w_in = standard_normal_matrix(n, m, config.seed, stream::W_IN) * config.w_in_scaling;
    let bias = standard_normal_matrix(n, 1, config.seed, stream::BIAS).column(0) * config.bias_scaling;

    let density = config.effective_sparsity();
    let mut w_star = None;
    for attempt in 0..MAX_W_STAR_ATTEMPTS {
        let raw = sparse_normal_matrix(n, density, config.seed, stream::W_STAR + attempt);
        let rho = spectral_radius(&raw);
        if rho > 1e-12 {
            w_star = Some(raw * (config.w_star_scaling / rho));
            break;
        }
        log::warn!(
            "recurrent weight draw {attempt} has zero spectral radius (N={n}); redrawing"
        );
    }
    let w_star = w_star.ok_or_else(|| {
        Error::Config(format!(
            "could not draw a recurrent matrix with non-zero spectral radius in {MAX_W_STAR_ATTEMPTS} attempts"
        ))
    })?;

    Ok(Reservoir {
        w_star,
        w_in,
        bias: bias.into_owned(),
        leaking_rate: config.leaking_rate,
    })
}

impl Reservoir {
    pub fn n_neurons(&self) -> usize {
        self.w_star.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.w_in.ncols()
    }

    /// `W* x + W^in p + b`, the argument of the nonlinearity.
    pub fn preactivation(&self, x: &DVector<f64>, input: &DVector<f64>) -> DVector<f64> {
        let mut a = &self.w_star * x;
        a.gemv(1.0, &self.w_in, input, 1.0);
        a += &self.bias;
        a
    }

    /// Leaky blend of the previous state with `tanh(preactivation)`.
    pub fn leak(&self, previous: &DVector<f64>, preactivation: DVector<f64>) -> DVector<f64> {
        let a = self.leaking_rate;
        let mut next = preactivation.map(f64::tanh);
        if a != 1.0 {
            next.zip_apply(previous, |n, p| *n = (1.0 - a) * p + a * *n);
        }
        next
    }
}

pub fn drive_step(
    res: &Reservoir,
    state: &ReservoirState,
    input: &DVector<f64>,
) -> Result<ReservoirState> {
    check_dim("drive_step state", res.n_neurons(), state.x.len())?;
    check_dim("drive_step input", res.n_inputs(), input.len())?;
    let pre = res.preactivation(&state.x, input);
    Ok(ReservoirState {
        x: res.leak(&state.x, pre),
    })
}

/// Drives the reservoir with rows `from..to` of `pattern`, returning every visited state.
pub fn drive(
    res: &Reservoir,
    initial: &ReservoirState,
    pattern: &Pattern,
    from: usize,
    to: usize,
) -> Result<Vec<ReservoirState>> {
    if from >= to || to > pattern.length() {
        return Err(Error::Range {
            from,
            to,
            len: pattern.length(),
        });
    }
    check_dim("drive pattern channels", res.n_inputs(), pattern.channels())?;
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(to - from);
    for n in from..to {
        state = drive_step(res, &state, &pattern.row(n))?;
        out.push(state.clone());
    }
    Ok(out)
}

/// Steps needed for trajectories started at all-zeros and all-ones to meet.
///
/// Returns the 1-based step at which their Euclidean distance first drops
/// below `tolerance`.
pub fn estimate_washout(res: &Reservoir, pattern: &Pattern, tolerance: f64) -> Result<usize> {
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    if pattern.length() == 0 {
        return Err(Error::Range { from: 0, to: 0, len: 0 });
    }
    check_dim("washout pattern channels", res.n_inputs(), pattern.channels())?;
    let n = res.n_neurons();
    let mut a = ReservoirState::zeros(n);
    let mut b = ReservoirState::filled(n, 1.0);
    let mut residual = (&a.x - &b.x).norm();
    for step in 0..pattern.length() {
        let p = pattern.row(step);
        a = drive_step(res, &a, &p)?;
        b = drive_step(res, &b, &p)?;
        residual = (&a.x - &b.x).norm();
        if residual < tolerance {
            return Ok(step + 1);
        }
    }
    Err(Error::NoConvergence {
        steps: pattern.length(),
        residual,
    })
}
