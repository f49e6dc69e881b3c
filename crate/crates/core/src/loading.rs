//! State harvesting and the two ridge regressions that load a reservoir.
//!
//! Column `k` of a harvest pairs the filtered state `z̃ₖ` that the reservoir
//! was in before a step with the state `zₖ` reached after it and the input
//! `pₖ` that drove that step. Loading then fits
//!
//! * `W z̃ₖ ≈ W* z̃ₖ + W^in pₖ`, so the recurrent weights absorb the input, and
//! * `W_out zₖ ≈ pₖ`, the readout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::filter::Filter;
use crate::patterns::Pattern;
use crate::reservoir::{Reservoir, ReservoirState};

/// Which state the readout `W_out` is fitted on and applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// The filtered state `z`.
    #[default]
    Filtered,
    /// The state `r` before the filter.
    Unfiltered,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateHarvest {
    /// Readout states, filtered or not according to the builder's [`Readout`].
    pub states: DMatrix<f64>,
    pub prev_states: DMatrix<f64>,
    pub inputs: DMatrix<f64>,
    pub w_targets: DMatrix<f64>,
    /// Unfiltered state right before the first collected step.
    pub start: ReservoirState,
}

impl StateHarvest {
    pub fn len(&self) -> usize {
        self.states.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgeConfig {
    pub rho_w: f64,
    pub rho_wout: f64,
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rho_w", self.rho_w), ("rho_wout", self.rho_wout)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// `((A Aᵀ + ρ I)⁻¹ A Bᵀ)ᵀ`, the `W` minimizing `‖B − W A‖² + ρ ‖W‖²`.
///
/// The normal matrix is Cholesky-factored; a failed factorization is reported
/// as [`Error::Singular`] instead of being regularized behind the caller's back.
pub fn ridge_solve(design: &DMatrix<f64>, targets: &DMatrix<f64>, rho: f64) -> Result<DMatrix<f64>> {
    check_dim("ridge_solve columns", design.ncols(), targets.ncols())?;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::Config(format!("regularization must be non-negative, got {rho}")));
    }
    let n = design.nrows();
    let mut gram = design * design.transpose();
    for i in 0..n {
        gram[(i, i)] += rho;
    }
    let rhs = design * targets.transpose();
    let chol = gram.cholesky().ok_or(Error::Singular { rho })?;
    let solution = chol.solve(&rhs);
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular { rho });
    }
    Ok(solution.transpose())
}

/// One step of the filtered loop: `r' = (1 − α_l) r + α_l tanh(W* z + W^in p + b)`.
pub fn loop_step(res: &Reservoir, r: &DVector<f64>, z: &DVector<f64>, input: &DVector<f64>) -> DVector<f64> {
    res.leak(r, res.preactivation(z, input))
}

/// Column-wise accumulator used by [`harvest`] and the training schemes.
#[derive(Debug)]
pub struct HarvestBuilder {
    states: Vec<DVector<f64>>,
    prev_states: Vec<DVector<f64>>,
    inputs: Vec<DVector<f64>>,
    w_targets: Vec<DVector<f64>>,
    start: Option<ReservoirState>,
    readout: Readout,
}

impl HarvestBuilder {
    pub fn with_capacity(n: usize) -> Self {
        HarvestBuilder::new(n, Readout::Filtered)
    }

    pub fn new(n: usize, readout: Readout) -> Self {
        HarvestBuilder {
            readout,
            states: Vec::with_capacity(n),
            prev_states: Vec::with_capacity(n),
            inputs: Vec::with_capacity(n),
            w_targets: Vec::with_capacity(n),
            start: None,
        }
    }

    /// Records one step from (`r_prev`, `z_prev`) to (`r`, `z`) under input `p`.
    pub fn push(
        &mut self,
        res: &Reservoir,
        (r_prev, z_prev): (&DVector<f64>, &DVector<f64>),
        (r, z): (&DVector<f64>, &DVector<f64>),
        p: &DVector<f64>,
    ) {
        if self.start.is_none() {
            self.start = Some(ReservoirState { x: r_prev.clone() });
        }
        let mut target = &res.w_star * z_prev;
        target.gemv(1.0, &res.w_in, p, 1.0);
        self.w_targets.push(target);
        self.prev_states.push(z_prev.clone());
        self.states.push(match self.readout {
            Readout::Filtered => z.clone(),
            Readout::Unfiltered => r.clone(),
        });
        self.inputs.push(p.clone());
    }

    pub fn finish(self) -> Result<StateHarvest> {
        let start = self
            .start
            .ok_or_else(|| Error::Config("harvest collected no states".into()))?;
        Ok(StateHarvest {
            states: DMatrix::from_columns(&self.states),
            prev_states: DMatrix::from_columns(&self.prev_states),
            inputs: DMatrix::from_columns(&self.inputs),
            w_targets: DMatrix::from_columns(&self.w_targets),
            start,
        })
    }
}

/// Drives `pattern` from `initial` with `filter` in the loop, discards
/// `washout` steps and collects the next `collect` steps.
pub fn harvest(
    res: &Reservoir,
    pattern: &Pattern,
    filter: Option<&Filter>,
    washout: usize,
    collect: usize,
    initial: &ReservoirState,
) -> Result<StateHarvest> {
    let n = res.n_neurons();
    check_dim("harvest initial state", n, initial.x.len())?;
    check_dim("harvest pattern channels", res.n_inputs(), pattern.channels())?;
    if let Some(f) = filter {
        check_dim("harvest filter", n, f.dim())?;
    }
    if collect == 0 || washout + collect > pattern.length() {
        return Err(Error::Range {
            from: washout,
            to: washout + collect,
            len: pattern.length(),
        });
    }
    let kernel = filter.map(Filter::kernel);
    let apply = |r: &DVector<f64>| match &kernel {
        Some(k) => k.apply(r),
        None => r.clone(),
    };

    let mut r = initial.x.clone();
    let mut z = apply(&r);
    let mut builder = HarvestBuilder::with_capacity(collect);
    for step in 0..washout + collect {
        let p = pattern.row(step);
        let r_next = loop_step(res, &r, &z, &p);
        let z_next = apply(&r_next);
        if step >= washout {
            builder.push(res, (&r, &z), (&r_next, &z_next), &p);
        }
        r = r_next;
        z = z_next;
    }
    builder.finish()
}

/// Concatenates the harvests and solves for the loaded recurrent weights `W`
/// and the readout `W_out`.
pub fn store_patterns(harvests: &[StateHarvest], cfg: &RidgeConfig) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    cfg.validate()?;
    let first = harvests
        .first()
        .ok_or_else(|| Error::Config("store_patterns needs at least one harvest".into()))?;
    let n = first.states.nrows();
    let m = first.inputs.nrows();
    for h in harvests {
        check_dim("store_patterns neurons", n, h.states.nrows())?;
        check_dim("store_patterns inputs", m, h.inputs.nrows())?;
    }
    let states = hconcat(harvests.iter().map(|h| &h.states), n);
    let prev = hconcat(harvests.iter().map(|h| &h.prev_states), n);
    let inputs = hconcat(harvests.iter().map(|h| &h.inputs), m);
    let targets = hconcat(harvests.iter().map(|h| &h.w_targets), n);

    let w = ridge_solve(&prev, &targets, cfg.rho_w)?;
    let w_out = ridge_solve(&states, &inputs, cfg.rho_wout)?;
    Ok((w, w_out))
}

fn hconcat<'a>(blocks: impl Iterator<Item = &'a DMatrix<f64>> + Clone, rows: usize) -> DMatrix<f64> {
    let total: usize = blocks.clone().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, total);
    let mut col = 0;
    for b in blocks {
        out.columns_mut(col, b.ncols()).copy_from(b);
        col += b.ncols();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagonal::ConceptionVector;
    use crate::patterns::gen_sine;
    use crate::reservoir::{init_reservoir, ReservoirConfig};

    fn small() -> (Reservoir, Pattern) {
        let res = init_reservoir(&ReservoirConfig::new(30, 1, 3)).unwrap();
        (res, gen_sine(7.5, 120).unwrap())
    }

    #[test]
    fn identity_design_interpolates() {
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let w = ridge_solve(&DMatrix::identity(3, 3), &b, 0.0).unwrap();
        assert!((w - b).abs().max() < 1e-14);
    }

    #[test]
    fn heavy_shrinkage() {
        let a = DMatrix::from_fn(3, 10, |i, j| ((i * 7 + j * 3) % 5) as f64 / 5.0 - 0.4);
        let b = DMatrix::from_fn(2, 10, |i, j| ((i + j) % 3) as f64 / 3.0 - 0.3);
        assert!(ridge_solve(&a, &b, 1e12).unwrap().abs().max() <= 1e-6);
    }

    #[test]
    fn rank_deficient_without_regularization_fails() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0]);
        let b = DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 1.0]);
        assert!(matches!(ridge_solve(&a, &b, 0.0), Err(Error::Singular { .. })));
        assert!(ridge_solve(&a, &b, 1e-3).is_ok());
        assert!(ridge_solve(&a, &b, -1.0).is_err());
        assert!(ridge_solve(&a, &DMatrix::zeros(1, 2), 1.0).is_err());
    }

    #[test]
    fn single_column_targets() {
        let (res, p) = small();
        let init = ReservoirState::zeros(30);
        let h = harvest(&res, &p, None, 10, 1, &init).unwrap();
        assert_eq!(h.len(), 1);
        let z = h.prev_states.column(0).into_owned();
        let expected = &res.w_star * &z + &res.w_in * p.row(10);
        assert!((h.w_targets.column(0) - expected).abs().max() < 1e-14);
        assert_eq!(h.inputs[(0, 0)], p.data[(10, 0)]);
    }

    #[test]
    fn ones_filter_is_transparent() {
        let (res, p) = small();
        let init = ReservoirState::zeros(30);
        let plain = harvest(&res, &p, None, 20, 50, &init).unwrap();
        let ones = Filter::from(ConceptionVector::ones(30, 1.0));
        assert_eq!(harvest(&res, &p, Some(&ones), 20, 50, &init).unwrap(), plain);
    }

    #[test]
    fn prev_states_lag_by_one() {
        let (res, p) = small();
        let h = harvest(&res, &p, None, 5, 40, &ReservoirState::zeros(30)).unwrap();
        for k in 1..h.len() {
            assert_eq!(h.prev_states.column(k), h.states.column(k - 1));
        }
        assert_eq!(h.start.x, h.prev_states.column(0).into_owned());
    }

    #[test]
    fn harvest_window_checked() {
        let (res, p) = small();
        let init = ReservoirState::zeros(30);
        assert!(harvest(&res, &p, None, 100, 21, &init).is_err());
        assert!(harvest(&res, &p, None, 10, 0, &init).is_err());
        assert_eq!(harvest(&res, &p, None, 100, 20, &init).unwrap().len(), 20);
        let wrong = Filter::from(ConceptionVector::ones(29, 1.0));
        assert!(harvest(&res, &p, Some(&wrong), 10, 10, &init).is_err());
    }

    #[test]
    fn concatenation_order() {
        let (res, p) = small();
        let init = ReservoirState::zeros(30);
        let a = harvest(&res, &p, None, 10, 30, &init).unwrap();
        let b = harvest(&res, &p, None, 40, 30, &init).unwrap();
        let cfg = RidgeConfig { rho_w: 1e-4, rho_wout: 1e-4 };
        let (w, w_out) = store_patterns(&[a.clone(), b.clone()], &cfg).unwrap();
        let states = hconcat([&a.states, &b.states].into_iter(), 30);
        assert_eq!(states.columns(30, 30), b.states);
        let direct = ridge_solve(&states, &hconcat([&a.inputs, &b.inputs].into_iter(), 1), 1e-4).unwrap();
        assert_eq!(w_out, direct);
        assert_eq!(w.shape(), (30, 30));
        assert!(store_patterns(&[], &cfg).is_err());
    }
}
