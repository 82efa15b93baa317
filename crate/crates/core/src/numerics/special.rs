//! Exponential integral E1 and the principal Lambert-W branch.
//!
//! E1 uses the power series below 1 and a Lentz continued fraction above,
//! which together give close to full double precision on `(0, 700]`. The
//! scaled form `e^x E1(x)` is exposed separately because the throughput
//! formulas only ever need `e^a E1(a + g)` and `E1` alone underflows long
//! before the product does.

use std::f64::consts::E;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const INV_E: f64 = 1.0 / E;

const SERIES_MAX_TERMS: usize = 200;
const CF_MAX_TERMS: usize = 1000;

fn check_positive(op: &'static str, x: f64) -> Result<()> {
    if x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(op, x, "x > 0"))
    }
}

/// `E1(x) = -gamma - ln x - sum_{k>=1} (-x)^k / (k k!)`, used for `x <= 1`.
fn e1_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..=SERIES_MAX_TERMS {
        let k = k as f64;
        term *= -x / k;
        let contrib = term / k;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

/// `e^x E1(x)` by modified Lentz evaluation of
/// `1 / (x + 1 - 1 / (x + 3 - 4 / (x + 5 - ...)))`, used for `x > 1`.
fn scaled_e1_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=CF_MAX_TERMS {
        let a = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let delta = c * d;
        h *= delta;
        if (delta - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
///
/// Underflows to zero for `x` beyond roughly 740.
pub fn exp_integral_e1(x: f64) -> Result<f64> {
    check_positive("exp_integral_e1", x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= 1.0 {
        Ok(e1_series(x))
    } else {
        Ok((-x).exp() * scaled_e1_continued_fraction(x))
    }
}

/// `e^x E1(x)` for `x > 0`, finite for every finite `x`.
pub fn scaled_e1(x: f64) -> Result<f64> {
    check_positive("scaled_e1", x)?;
    if x == f64::INFINITY {
        return Ok(0.0);
    }
    if x <= 1.0 {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(scaled_e1_continued_fraction(x))
    }
}

/// Two-sided approximation `e^-x ln(1 + 1/x)` of `E1(x)`, exact in ratio
/// only in the limits `x -> 0+` and `x -> inf`.
pub fn e1_asymptotic(x: f64) -> Result<f64> {
    check_positive("e1_asymptotic", x)?;
    Ok((-x).exp() * (1.0 / x).ln_1p())
}

/// Principal branch `W0(x)` of the Lambert-W function, `w e^w = x`, `w >= -1`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if x.is_nan() || x < -INV_E {
        return Err(Error::domain("lambert_w0", x, "x >= -1/e"));
    }
    if x == -INV_E {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == f64::INFINITY {
        return Ok(f64::INFINITY);
    }

    let guess = if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        branch_series(p)
    } else if x < 3.0 {
        // Winitzki's uniform approximation.
        let l = x.ln_1p();
        l * (1.0 - l.ln_1p() / (2.0 + l))
    } else {
        let l1 = x.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    Ok(halley(x, guess))
}

/// `1 + W0(-1/e + offset)` for `offset >= 0`.
///
/// Returns the distance from the branch point directly, so it stays accurate
/// when `offset` is far below the spacing of doubles near `-1/e`.
pub fn lambert_w0_plus_one(offset: f64) -> Result<f64> {
    if offset.is_nan() || offset < 0.0 {
        return Err(Error::domain("lambert_w0_plus_one", offset, "offset >= 0"));
    }
    if offset < 1e-6 {
        Ok(branch_series_plus_one((2.0 * E * offset).sqrt()))
    } else {
        Ok(1.0 + lambert_w0(-INV_E + offset)?)
    }
}

/// Expansion of W0 about the branch point in `p = sqrt(2 (e x + 1))`.
fn branch_series(p: f64) -> f64 {
    branch_series_plus_one(p) - 1.0
}

fn branch_series_plus_one(p: f64) -> f64 {
    const C: [f64; 7] = [
        0.0,
        1.0,
        -1.0 / 3.0,
        11.0 / 72.0,
        -43.0 / 540.0,
        769.0 / 17280.0,
        -221.0 / 8505.0,
    ];
    C.iter().rev().fold(0.0, |acc, &c| acc * p + c)
}

fn halley(x: f64, mut w: f64) -> f64 {
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        if f == 0.0 {
            break;
        }
        let wp1 = w + 1.0;
        if wp1 <= 0.0 {
            // Overshot the branch point; restart just above it.
            w = -1.0 + f64::EPSILON.sqrt();
            continue;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        let done = (next - w).abs() <= 4.0 * f64::EPSILON * (1.0 + next.abs());
        w = next.max(-1.0);
        if done {
            break;
        }
    }
    w
}
