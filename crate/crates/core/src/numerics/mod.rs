//! Special functions and the 1-D / 2-D maximization and quadrature
//! primitives shared by every evaluator and solver.

mod quadrature;
mod search;
mod special;

pub use quadrature::{integrate, integrate_with, QuadratureSpec, OPEN_TAIL_LENGTH};
pub use search::{golden_section_max, grid_argmax_2d, maximize_scalar, GridOptimum};
pub use special::{e1_asymptotic, exp_integral_e1, lambert_w0, lambert_w0_plus_one, scaled_e1};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Stopping rule for iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToleranceSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl ToleranceSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_iter: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("abs_tol must be > 0, got {abs_tol}"),
            ));
        }
        if !(rel_tol >= 0.0) {
            return Err(Error::invalid(
                "tolerance",
                format!("rel_tol must be >= 0, got {rel_tol}"),
            ));
        }
        if max_iter == 0 {
            return Err(Error::invalid("tolerance", "max_iter must be >= 1"));
        }
        Ok(ToleranceSpec {
            abs_tol,
            rel_tol,
            max_iter,
        })
    }

    /// Width below which a bracket around `x` is considered resolved.
    pub fn width_at(&self, x: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * x.abs())
    }
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_iter: 200,
        }
    }
}

/// Closed interval `[lo, hi]`, or the half-line `[lo, inf)` when `hi` is
/// `f64::INFINITY`.
///
/// Gain sets use the half-open reading `[lo, hi)`; the two only differ on a
/// set of measure zero, and [`Interval::contains`] implements the half-open one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() {
            return Err(Error::invalid(
                "interval",
                format!("lower end {lo} is not finite"),
            ));
        }
        if hi.is_nan() || hi == f64::NEG_INFINITY || lo > hi {
            return Err(Error::invalid(
                "interval",
                format!("[{lo}, {hi}) is not ordered"),
            ));
        }
        Ok(Interval { lo, hi })
    }

    pub fn open_above(lo: f64) -> Result<Self> {
        Interval::new(lo, f64::INFINITY)
    }

    pub fn is_open_above(&self) -> bool {
        self.hi == f64::INFINITY
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x < self.hi
    }
}
