//! Diagonal conceptors, stored as conception vectors.
//!
//! Every neuron gets its own scaling weight `cᵢ = m̂ᵢ / (m̂ᵢ + α⁻²)`, where
//! `m̂ᵢ` is the mean squared activation of neuron `i`. Applying the filter is
//! an element-wise product, so it costs `O(N)` instead of `O(N²)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{check_aperture, check_dim, Error, Result};
use crate::rng::rng_for;

#[derive(Debug, Clone, PartialEq)]
pub struct ConceptionVector {
    pub weights: DVector<f64>,
    pub aperture: f64,
}

impl ConceptionVector {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn ones(n: usize, aperture: f64) -> Self {
        ConceptionVector {
            weights: DVector::from_element(n, 1.0),
            aperture,
        }
    }

    /// The equivalent dense diagonal matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.weights)
    }
}

/// Non-trivial equilibria of the continuous-time weight flow
/// `ċ = (1 − c) c² E[r²] − α⁻² c`, together with the always-present `c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPoints {
    pub c_plus: Option<f64>,
    pub c_minus: Option<f64>,
    pub zero: f64,
    pub discriminant: f64,
}

/// Weights drawn i.i.d. from `U[0, 1]`. The aperture is a placeholder of 1.
pub fn random_conception(n: usize, seed: u64) -> Result<ConceptionVector> {
    if n == 0 {
        return Err(Error::Config("conception vector needs at least one weight".into()));
    }
    let mut rng = rng_for(seed, 0);
    Ok(ConceptionVector {
        weights: DVector::from_fn(n, |_, _| rng.random::<f64>()),
        aperture: 1.0,
    })
}

/// Row means of `Z ∘ Z`.
pub fn mean_square_rows(states: &DMatrix<f64>) -> DVector<f64> {
    let l = states.ncols().max(1) as f64;
    DVector::from_fn(states.nrows(), |i, _| {
        states.row(i).iter().map(|v| v * v).sum::<f64>() / l
    })
}

pub fn conception_from_energy(mean_sq: &DVector<f64>, aperture: f64) -> Result<ConceptionVector> {
    check_aperture(aperture)?;
    let a = aperture.powi(-2);
    Ok(ConceptionVector {
        weights: mean_sq.map(|m| m / (m + a)),
        aperture,
    })
}

/// Closed-form conception vector for states with one state per column.
pub fn compute_conception(states: &DMatrix<f64>, aperture: f64) -> Result<ConceptionVector> {
    if states.ncols() == 0 {
        return Err(Error::Config("conception needs at least one state".into()));
    }
    conception_from_energy(&mean_square_rows(states), aperture)
}

pub fn apply_conception(c: &ConceptionVector, r: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim("apply_conception", c.dim(), r.len())?;
    Ok(c.weights.component_mul(r))
}

/// Element-wise loss `(1 − c)² m + α⁻² c²` of a single weight.
pub fn weight_loss(c: f64, mean_sq: f64, aperture: f64) -> f64 {
    (1.0 - c).powi(2) * mean_sq + aperture.powi(-2) * c * c
}

/// Derivative of [`weight_loss`] with respect to `c`.
pub fn weight_loss_derivative(c: f64, mean_sq: f64, aperture: f64) -> f64 {
    -2.0 * (1.0 - c) * mean_sq + 2.0 * aperture.powi(-2) * c
}

/// One local adaptation step `cᵢ + λᵢ((1 − cᵢ) zᵢ² − α⁻² cᵢ)`.
pub fn diag_autoconceptor_step(
    c: &DVector<f64>,
    z: &DVector<f64>,
    rates: &DVector<f64>,
    aperture: f64,
) -> Result<DVector<f64>> {
    AdaptationRule::new(rates.clone(), aperture)?.step(c, z)
}

/// Per-neuron online adaptation of conception weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationRule {
    pub rates: DVector<f64>,
    pub aperture: f64,
    /// Multiplier for the rate of weights below 0.5, where the flow is slow. 1 disables it.
    pub low_weight_boost: f64,
}

impl AdaptationRule {
    pub fn new(rates: DVector<f64>, aperture: f64) -> Result<Self> {
        check_aperture(aperture)?;
        if let Some(bad) = rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(Error::Config(format!("learning rates must be non-negative, got {bad}")));
        }
        Ok(AdaptationRule {
            rates,
            aperture,
            low_weight_boost: 1.0,
        })
    }

    pub fn uniform(n: usize, rate: f64, aperture: f64) -> Result<Self> {
        AdaptationRule::new(DVector::from_element(n, rate), aperture)
    }

    pub fn with_low_weight_boost(mut self, boost: f64) -> Self {
        self.low_weight_boost = boost;
        self
    }

    pub fn step(&self, c: &DVector<f64>, z: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("adaptation weights", self.rates.len(), c.len())?;
        check_dim("adaptation state", self.rates.len(), z.len())?;
        let a = self.aperture.powi(-2);
        Ok(DVector::from_fn(c.len(), |i, _| {
            let ci = c[i];
            let mut rate = self.rates[i];
            if ci < 0.5 {
                rate *= self.low_weight_boost;
            }
            ci + rate * ((1.0 - ci) * z[i] * z[i] - a * ci)
        }))
    }
}

pub fn fixed_points(mean_r_sq: f64, aperture: f64) -> Result<FixedPoints> {
    check_aperture(aperture)?;
    if !(mean_r_sq > 0.0 && mean_r_sq <= 1.0) {
        return Err(Error::Config(format!("mean squared activation {mean_r_sq} outside (0, 1]")));
    }
    let discriminant = 1.0 - 4.0 * aperture.powi(-2) / mean_r_sq;
    let (c_plus, c_minus) = if discriminant >= 0.0 {
        let root = discriminant.sqrt();
        (Some(0.5 + 0.5 * root), Some(0.5 - 0.5 * root))
    } else {
        (None, None)
    };
    Ok(FixedPoints {
        c_plus,
        c_minus,
        zero: 0.0,
        discriminant,
    })
}

/// Right-hand side of the weight flow with constant `E[r²]`.
pub fn weight_flow(c: f64, mean_r_sq: f64, aperture: f64) -> f64 {
    (1.0 - c) * c * c * mean_r_sq - aperture.powi(-2) * c
}

/// Integrates [`weight_flow`] from `c0` for `duration` time units with
/// fourth-order Runge–Kutta steps of size `dt`.
pub fn integrate_weight_flow(c0: f64, mean_r_sq: f64, aperture: f64, duration: f64, dt: f64) -> f64 {
    let f = |c: f64| weight_flow(c, mean_r_sq, aperture);
    let steps = (duration / dt).ceil() as usize;
    let mut c = c0;
    for _ in 0..steps {
        let k1 = f(c);
        let k2 = f(c + 0.5 * dt * k1);
        let k3 = f(c + 0.5 * dt * k2);
        let k4 = f(c + dt * k3);
        c += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    c
}

/// `Σ μᵢ cᵢ` element-wise.
pub fn mix_conceptions(cs: &[&ConceptionVector], weights: &[f64]) -> Result<DVector<f64>> {
    check_dim("mix_conceptions weights", cs.len(), weights.len())?;
    let first = cs
        .first()
        .ok_or_else(|| Error::Config("mixing needs at least one conception vector".into()))?;
    let mut out = DVector::zeros(first.dim());
    for (c, w) in cs.iter().zip(weights) {
        check_dim("mix_conceptions", first.dim(), c.dim())?;
        out.axpy(*w, &c.weights, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_weights_in_unit_interval() {
        let c = random_conception(10_000, 5).unwrap();
        assert!(c.weights.iter().all(|w| (0.0..=1.0).contains(w)));
        let mean = c.weights.mean();
        assert!((0.48..=0.52).contains(&mean), "mean {mean}");
        assert_eq!(c, random_conception(10_000, 5).unwrap());
        assert_ne!(c, random_conception(10_000, 6).unwrap());
        assert!(random_conception(0, 1).is_err());
    }

    #[test]
    fn closed_form_hand_values() {
        let z = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, -1.0]);
        let c = compute_conception(&z, 1.0).unwrap();
        assert_eq!(c.weights[0], 0.0);
        assert_eq!(c.weights[1], 0.5);
        assert!(compute_conception(&z, 0.0).is_err());
    }

    #[test]
    fn large_aperture_limit() {
        let z = DMatrix::from_row_slice(2, 3, &[0.1, -0.2, 0.05, 0.9, 0.3, -0.6]);
        let c = compute_conception(&z, 1e9).unwrap();
        assert!(c.weights.iter().all(|w| *w >= 1.0 - 1e-9));
    }

    #[test]
    fn application_is_elementwise() {
        let r = DVector::from_vec(vec![0.3, -0.5, 0.9]);
        let ones = ConceptionVector::ones(3, 1.0);
        assert_eq!(apply_conception(&ones, &r).unwrap(), r);
        let zeros = ConceptionVector { weights: DVector::zeros(3), aperture: 1.0 };
        assert_eq!(apply_conception(&zeros, &r).unwrap(), DVector::zeros(3));
        assert!(apply_conception(&ones, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn pure_decay_without_drive() {
        let rates = DVector::from_element(2, 0.5);
        let mut c = DVector::from_vec(vec![0.8, 0.3]);
        let z = DVector::zeros(2);
        let a: f64 = 2.0;
        for _ in 0..10 {
            let next = diag_autoconceptor_step(&c, &z, &rates, a).unwrap();
            for i in 0..2 {
                assert!((next[i] - c[i] * (1.0 - 0.5 * a.powi(-2))).abs() < 1e-15);
            }
            c = next;
        }
    }

    #[test]
    fn upper_fixed_point_is_stationary() {
        let (m, a) = (0.6, 4.0);
        let fp = fixed_points(m, a).unwrap();
        let c_plus = fp.c_plus.unwrap();
        let c = DVector::from_element(1, c_plus);
        // z² = E[r²] c²
        let z = DVector::from_element(1, (m * c_plus * c_plus).sqrt());
        let next = diag_autoconceptor_step(&c, &z, &DVector::from_element(1, 0.5), a).unwrap();
        assert!((next[0] - c_plus).abs() < 1e-9);
    }

    #[test]
    fn fixed_point_regimes() {
        let double = fixed_points(1.0, 2.0).unwrap();
        assert_eq!(double.discriminant, 0.0);
        assert_eq!(double.c_plus, Some(0.5));
        assert_eq!(double.c_minus, Some(0.5));

        let wide = fixed_points(0.5, 1e9).unwrap();
        assert!((wide.c_plus.unwrap() - 1.0).abs() < 1e-9);
        assert!(wide.c_minus.unwrap().abs() < 1e-9);

        let none = fixed_points(0.5, 2.0).unwrap();
        assert!((none.discriminant + 1.0).abs() < 1e-15);
        assert!(none.c_plus.is_none() && none.c_minus.is_none());
        assert_eq!(none.zero, 0.0);
        // without real nonzero roots the flow decays to zero
        let end = integrate_weight_flow(0.9, 0.5, 2.0, 200.0, 0.01);
        assert!(end.abs() < 1e-6);

        assert!(fixed_points(0.0, 2.0).is_err());
        assert!(fixed_points(1.5, 2.0).is_err());
    }

    #[test]
    fn boost_only_touches_low_weights() {
        let rule = AdaptationRule::uniform(2, 0.1, 2.0).unwrap().with_low_weight_boost(3.0);
        let c = DVector::from_vec(vec![0.2, 0.8]);
        let z = DVector::from_vec(vec![0.5, 0.5]);
        let plain = AdaptationRule::uniform(2, 0.1, 2.0).unwrap().step(&c, &z).unwrap();
        let boosted = rule.step(&c, &z).unwrap();
        assert!(((boosted[0] - c[0]) - 3.0 * (plain[0] - c[0])).abs() < 1e-15);
        assert_eq!(boosted[1], plain[1]);
        assert!(AdaptationRule::uniform(2, -0.1, 2.0).is_err());
    }

    #[test]
    fn mixing() {
        let zero = ConceptionVector { weights: DVector::zeros(4), aperture: 1.0 };
        let one = ConceptionVector::ones(4, 1.0);
        assert_eq!(mix_conceptions(&[&zero, &one], &[1.0, 0.0]).unwrap(), zero.weights);
        assert_eq!(mix_conceptions(&[&zero, &one], &[0.0, 1.0]).unwrap(), one.weights);
        assert_eq!(
            mix_conceptions(&[&zero, &one], &[0.5, 0.5]).unwrap(),
            DVector::from_element(4, 0.5)
        );
        let short = ConceptionVector::ones(3, 1.0);
        assert!(mix_conceptions(&[&zero, &short], &[0.5, 0.5]).is_err());
    }
}
