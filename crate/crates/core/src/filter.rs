//! The state filter placed in the update loop: a full conceptor matrix or a
//! conception vector.

use nalgebra::{DMatrix, DVector};

use crate::conceptor::Conceptor;
use crate::diagonal::ConceptionVector;
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    Conceptor(Conceptor),
    Conception(ConceptionVector),
}

impl Filter {
    pub fn dim(&self) -> usize {
        match self {
            Filter::Conceptor(c) => c.dim(),
            Filter::Conception(c) => c.dim(),
        }
    }

    pub fn aperture(&self) -> f64 {
        match self {
            Filter::Conceptor(c) => c.aperture,
            Filter::Conception(c) => c.aperture,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Filter::Conception(_))
    }

    pub fn kernel(&self) -> FilterKernel {
        match self {
            Filter::Conceptor(c) => FilterKernel::Dense(c.matrix.clone()),
            Filter::Conception(c) => FilterKernel::Diagonal(c.weights.clone()),
        }
    }

    pub fn apply(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim("filter", self.dim(), r.len())?;
        Ok(match self {
            Filter::Conceptor(c) => &c.matrix * r,
            Filter::Conception(c) => c.weights.component_mul(r),
        })
    }
}

impl From<Conceptor> for Filter {
    fn from(c: Conceptor) -> Self {
        Filter::Conceptor(c)
    }
}

impl From<ConceptionVector> for Filter {
    fn from(c: ConceptionVector) -> Self {
        Filter::Conception(c)
    }
}

/// The bare linear map of a filter, which also represents blends of filters
/// that have no single aperture.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterKernel {
    Dense(DMatrix<f64>),
    Diagonal(DVector<f64>),
}

impl FilterKernel {
    pub fn apply(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            FilterKernel::Dense(m) => m * r,
            FilterKernel::Diagonal(w) => w.component_mul(r),
        }
    }

    /// `(1 − μ) a + μ b`. Both kernels must be of the same kind.
    pub fn blend(a: &FilterKernel, b: &FilterKernel, mu: f64) -> Result<FilterKernel> {
        match (a, b) {
            (FilterKernel::Dense(x), FilterKernel::Dense(y)) => {
                check_dim("blend", x.nrows(), y.nrows())?;
                Ok(FilterKernel::Dense(x * (1.0 - mu) + y * mu))
            }
            (FilterKernel::Diagonal(x), FilterKernel::Diagonal(y)) => {
                check_dim("blend", x.len(), y.len())?;
                Ok(FilterKernel::Diagonal(x * (1.0 - mu) + y * mu))
            }
            _ => Err(Error::Config("cannot blend a conceptor with a conception vector".into())),
        }
    }
}
