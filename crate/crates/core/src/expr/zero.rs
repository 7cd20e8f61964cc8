use thiserror::Error;

use super::simplify::normalizes_to_zero;
use super::{Expr, Point};
use crate::phase::{SampleError, SamplePlan};

/// Absolute tolerance for numeric vanishing.
pub const DEFAULT_ZERO_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ZeroVerdict {
    /// The normal form is the literal 0.
    ProvenZero,
    /// `|e| <= tol` at every point that could be evaluated.
    NumericallyZero {
        checked: usize,
        skipped: Vec<Point>,
    },
    NonZero {
        witness: Point,
        value: f64,
    },
}

impl ZeroVerdict {
    pub fn vanishes(&self) -> bool {
        !matches!(self, ZeroVerdict::NonZero { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ZeroVerdict::ProvenZero => "ProvenZero",
            ZeroVerdict::NumericallyZero { .. } => "NumericallyZero",
            ZeroVerdict::NonZero { .. } => "NonZero",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ZeroError {
    #[error("zero test inconclusive: `{expr}` is undefined at all {skipped} sample points")]
    Inconclusive { expr: Expr, skipped: usize },
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Decides whether `e` vanishes identically, using the default tolerance.
pub fn is_zero(e: &Expr, plan: &SamplePlan) -> Result<ZeroVerdict, ZeroError> {
    is_zero_with_tol(e, plan, DEFAULT_ZERO_TOL)
}

pub fn is_zero_with_tol(e: &Expr, plan: &SamplePlan, tol: f64) -> Result<ZeroVerdict, ZeroError> {
    if normalizes_to_zero(e) {
        return Ok(ZeroVerdict::ProvenZero);
    }
    let points = plan.sample()?;
    let mut skipped = Vec::new();
    for pt in &points {
        match e.eval(pt) {
            Ok(v) if v.abs() > tol => {
                return Ok(ZeroVerdict::NonZero {
                    witness: *pt,
                    value: v,
                })
            }
            Ok(_) => {}
            Err(_) => skipped.push(*pt),
        }
    }
    if skipped.len() == points.len() {
        return Err(ZeroError::Inconclusive {
            expr: e.clone(),
            skipped: skipped.len(),
        });
    }
    Ok(ZeroVerdict::NumericallyZero {
        checked: points.len() - skipped.len(),
        skipped,
    })
}
