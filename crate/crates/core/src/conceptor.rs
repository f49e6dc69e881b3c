//! Full-matrix conceptors.
//!
//! A conceptor `C = R (R + α⁻² I)⁻¹` minimizes
//! `E‖z − Cz‖² + α⁻² ‖C‖²_fro` for states `z` with correlation matrix `R`.
//! It shares its eigenvectors with `R` and maps each eigenvalue `σ` of `R`
//! to `σ / (σ + α⁻²)`.

use nalgebra::DMatrix;

use crate::error::{check_aperture, check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub matrix: DMatrix<f64>,
    pub sample_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conceptor {
    pub matrix: DMatrix<f64>,
    pub aperture: f64,
}

impl Conceptor {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self.matrix.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

impl CorrelationMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .map(|v| v.abs())
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// `Z Zᵀ / L` for a state collection matrix with one state per column.
pub fn correlation(states: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    let l = states.ncols();
    if l == 0 {
        return Err(Error::Config("correlation needs at least one state".into()));
    }
    let mut matrix = states * states.transpose() / l as f64;
    symmetrize(&mut matrix);
    Ok(CorrelationMatrix {
        matrix,
        sample_count: l,
    })
}

/// Closed-form minimizer of the conceptor loss.
pub fn compute_conceptor(r: &CorrelationMatrix, aperture: f64) -> Result<Conceptor> {
    check_aperture(aperture)?;
    let n = r.dim();
    let shifted = &r.matrix + DMatrix::identity(n, n) * aperture.powi(-2);
    // C = R (R + a I)^-1 = ((R + a I)^-1 R)^T for symmetric R
    let chol = shifted
        .cholesky()
        .ok_or(Error::Singular { rho: aperture.powi(-2) })?;
    let mut matrix = chol.solve(&r.matrix).transpose();
    symmetrize(&mut matrix);
    Ok(Conceptor { matrix, aperture })
}

/// Mean of `‖z − Cz‖²` over the columns of `states`, plus `α⁻²‖C‖²_fro`.
pub fn conceptor_loss(c: &DMatrix<f64>, states: &DMatrix<f64>, aperture: f64) -> Result<f64> {
    check_aperture(aperture)?;
    check_dim("conceptor_loss", c.ncols(), states.nrows())?;
    let residual = states - c * states;
    let fit = residual.norm_squared() / states.ncols().max(1) as f64;
    Ok(fit + aperture.powi(-2) * c.norm_squared())
}

/// Gradient `−2(I − C)R + 2α⁻²C` of the loss with respect to `C`.
pub fn loss_gradient(c: &DMatrix<f64>, r: &CorrelationMatrix, aperture: f64) -> Result<DMatrix<f64>> {
    check_aperture(aperture)?;
    check_dim("loss_gradient", r.dim(), c.nrows())?;
    let n = c.nrows();
    let i_minus_c = DMatrix::identity(n, n) - c;
    Ok(i_minus_c * &r.matrix * -2.0 + c * (2.0 * aperture.powi(-2)))
}

/// One stochastic-gradient step `C + λ((I − C) z zᵀ − α⁻² C)`.
pub fn autoconceptor_step(
    c: &DMatrix<f64>,
    z: &nalgebra::DVector<f64>,
    rate: f64,
    aperture: f64,
) -> Result<DMatrix<f64>> {
    check_aperture(aperture)?;
    check_dim("autoconceptor_step", c.nrows(), z.len())?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(Error::Config(format!("learning rate must be non-negative, got {rate}")));
    }
    let n = c.nrows();
    let drive = (DMatrix::identity(n, n) - c) * z * z.transpose();
    Ok(c + (drive - c * aperture.powi(-2)) * rate)
}

/// `Σ μᵢ Cᵢ`. Weights are not restricted, so the result need not be a conceptor.
pub fn mix_conceptors(cs: &[&Conceptor], weights: &[f64]) -> Result<DMatrix<f64>> {
    check_dim("mix_conceptors weights", cs.len(), weights.len())?;
    let first = cs
        .first()
        .ok_or_else(|| Error::Config("mixing needs at least one conceptor".into()))?;
    let n = first.dim();
    let mut out = DMatrix::zeros(n, n);
    for (c, w) in cs.iter().zip(weights) {
        check_dim("mix_conceptors", n, c.dim())?;
        out += &c.matrix * *w;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn corr(m: DMatrix<f64>) -> CorrelationMatrix {
        CorrelationMatrix { matrix: m, sample_count: 1 }
    }

    #[test]
    fn correlation_of_unit_column() {
        let z = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let r = correlation(&z).unwrap();
        let mut e = DMatrix::zeros(3, 3);
        e[(0, 0)] = 1.0;
        assert_eq!(r.matrix, e);
    }

    #[test]
    fn correlation_of_orthogonal_rows_is_identity() {
        // rows (1,1,-1,-1), (1,-1,1,-1): orthogonal, norm 2 = sqrt(L)
        let z = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, -1.0]);
        assert_eq!(correlation(&z).unwrap().matrix, DMatrix::identity(2, 2));
        assert!(correlation(&DMatrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn identity_correlation_gives_half_identity() {
        let c = compute_conceptor(&corr(DMatrix::identity(4, 4)), 1.0).unwrap();
        assert!((c.matrix - DMatrix::identity(4, 4) * 0.5).amax() < 1e-15);
    }

    #[test]
    fn null_correlation_gives_null_conceptor() {
        for a in [0.1, 1.0, 50.0] {
            let c = compute_conceptor(&corr(DMatrix::zeros(3, 3)), a).unwrap();
            assert_eq!(c.matrix.amax(), 0.0);
        }
    }

    #[test]
    fn apertures_at_the_limits_are_rejected() {
        let r = corr(DMatrix::identity(2, 2));
        assert!(compute_conceptor(&r, 0.0).is_err());
        assert!(compute_conceptor(&r, f64::INFINITY).is_err());
        assert!(compute_conceptor(&r, -1.0).is_err());
    }

    #[test]
    fn loss_at_identity_and_zero() {
        let z = DMatrix::from_row_slice(2, 3, &[0.5, -0.2, 0.1, 0.3, 0.0, -0.4]);
        let a = 3.0;
        let at_i = conceptor_loss(&DMatrix::identity(2, 2), &z, a).unwrap();
        assert!((at_i - 2.0 / 9.0).abs() < 1e-15);
        let at_0 = conceptor_loss(&DMatrix::zeros(2, 2), &z, a).unwrap();
        let mean_sq = z.norm_squared() / 3.0;
        assert!((at_0 - mean_sq).abs() < 1e-15);
    }

    #[test]
    fn gradient_at_zero_is_minus_two_r() {
        let r = corr(DMatrix::from_row_slice(2, 2, &[0.4, 0.1, 0.1, 0.2]));
        let g = loss_gradient(&DMatrix::zeros(2, 2), &r, 2.0).unwrap();
        assert!((g + &r.matrix * 2.0).amax() < 1e-15);
    }

    #[test]
    fn autoconceptor_degenerate_steps() {
        let c = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.6]);
        let z = DVector::from_vec(vec![0.4, -0.7]);
        assert_eq!(autoconceptor_step(&c, &z, 0.0, 2.0).unwrap(), c);
        let still = autoconceptor_step(&c, &DVector::zeros(2), 0.1, 1e9).unwrap();
        assert!((still - &c).amax() < 1e-12);
    }

    #[test]
    fn scalar_autoconceptor_converges_to_closed_form() {
        let z = DVector::from_element(1, 0.6);
        let a = 2.0;
        let mut c = DMatrix::from_element(1, 1, 0.9);
        for _ in 0..100_000 {
            c = autoconceptor_step(&c, &z, 1e-3, a).unwrap();
        }
        let target = compute_conceptor(&corr(&z * z.transpose()), a).unwrap();
        assert!((c[(0, 0)] - target.matrix[(0, 0)]).abs() < 1e-3);
    }

    #[test]
    fn mixing() {
        let c1 = Conceptor { matrix: DMatrix::identity(3, 3) * 0.2, aperture: 1.0 };
        let c2 = Conceptor { matrix: DMatrix::identity(3, 3) * 0.6, aperture: 1.0 };
        assert_eq!(mix_conceptors(&[&c1, &c2], &[1.0, 0.0]).unwrap(), c1.matrix);
        assert_eq!(mix_conceptors(&[&c1, &c2], &[0.0, 1.0]).unwrap(), c2.matrix);
        let half = mix_conceptors(&[&c1, &c2], &[0.5, 0.5]).unwrap();
        assert!((half - DMatrix::identity(3, 3) * 0.4).amax() < 1e-15);
        let c3 = Conceptor { matrix: DMatrix::identity(2, 2), aperture: 1.0 };
        assert!(mix_conceptors(&[&c1, &c3], &[0.5, 0.5]).is_err());
        assert!(mix_conceptors(&[&c1], &[0.5, 0.5]).is_err());
    }
}
