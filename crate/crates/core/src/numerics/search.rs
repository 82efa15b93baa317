//! Scalar and grid maximization.

use super::{Interval, ToleranceSpec};
use crate::{Error, Result};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn finite_difference<F: Fn(f64) -> f64>(f: &F, x: f64, domain: &Interval) -> f64 {
    let h = 1e-7 * x.abs().max(1.0);
    let lo = (x - h).max(domain.lo);
    let hi = (x + h).min(domain.hi);
    (f(hi) - f(lo)) / (hi - lo)
}

/// Maximizes a unimodal `f` on a finite `domain`.
///
/// Bisects on the sign of a central finite difference (step
/// `1e-7 max(1, |x|)`); if the derivative signs at the ends describe a valley
/// instead of a peak, or a derivative is not finite, it falls back to
/// [`golden_section_max`]. Returns `(argmax, f(argmax))`.
pub fn maximize_scalar<F: Fn(f64) -> f64>(
    f: F,
    domain: Interval,
    tol: ToleranceSpec,
) -> Result<(f64, f64)> {
    if domain.is_open_above() {
        return Err(Error::invalid(
            "search domain",
            "maximize_scalar needs a finite upper end",
        ));
    }
    let (mut lo, mut hi) = (domain.lo, domain.hi);
    if hi == lo {
        return Ok((lo, f(lo)));
    }

    let d_lo = finite_difference(&f, lo, &domain);
    let d_hi = finite_difference(&f, hi, &domain);
    if !d_lo.is_finite() || !d_hi.is_finite() || (d_lo < 0.0 && d_hi > 0.0) {
        return golden_section_max(f, domain, tol);
    }
    if d_lo <= 0.0 && d_hi <= 0.0 {
        return Ok((lo, f(lo)));
    }
    if d_lo >= 0.0 && d_hi >= 0.0 {
        return Ok((hi, f(hi)));
    }

    for _ in 0..tol.max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * tol.width_at(mid) {
            return Ok((mid, f(mid)));
        }
        let d = finite_difference(&f, mid, &domain);
        if !d.is_finite() {
            return golden_section_max(f, domain, tol);
        }
        if d > 0.0 {
            lo = mid;
        } else if d < 0.0 {
            hi = mid;
        } else {
            return Ok((mid, f(mid)));
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(Error::IterationLimit {
        iterations: tol.max_iter,
        argmax: mid,
        max: f(mid),
    })
}

/// Golden-section search for the maximum of `f` on a finite `domain`.
pub fn golden_section_max<F: Fn(f64) -> f64>(
    f: F,
    domain: Interval,
    tol: ToleranceSpec,
) -> Result<(f64, f64)> {
    if domain.is_open_above() {
        return Err(Error::invalid(
            "search domain",
            "golden_section_max needs a finite upper end",
        ));
    }
    let (mut a, mut b) = (domain.lo, domain.hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..tol.max_iter {
        if b - a <= 2.0 * tol.width_at(0.5 * (a + b)) {
            let best = [(x1, f1), (x2, f2)]
                .into_iter()
                .fold(
                    (a, f64::NEG_INFINITY),
                    |acc, p| if p.1 > acc.1 { p } else { acc },
                );
            let mid = 0.5 * (a + b);
            let f_mid = f(mid);
            return Ok(if f_mid >= best.1 { (mid, f_mid) } else { best });
        }
        // NaN compares false, which moves the bracket toward x1.
        if f1 >= f2 || f2.is_nan() {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let (argmax, max) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    Err(Error::IterationLimit {
        iterations: tol.max_iter,
        argmax,
        max,
    })
}

/// Best point found by [`grid_argmax_2d`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub feasible_points: usize,
}

fn grid_len(domain: &Interval, step: f64) -> usize {
    ((domain.hi - domain.lo) / step + 1e-9).floor() as usize + 1
}

/// Exhaustive search over `x_i = x.lo + i step`, `y_j = y.lo + j step`,
/// restricted to points where `feasible(x, y)` holds.
///
/// Points are visited in lexicographic order and only a strictly better value
/// replaces the incumbent, so ties resolve to the lexicographically smallest
/// point. Non-finite objective values are skipped.
pub fn grid_argmax_2d<F, C>(
    f: F,
    x: Interval,
    y: Interval,
    step: f64,
    feasible: C,
) -> Result<GridOptimum>
where
    F: Fn(f64, f64) -> f64,
    C: Fn(f64, f64) -> bool,
{
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid("grid step", format!("{step} must be > 0")));
    }
    if x.is_open_above() || y.is_open_above() {
        return Err(Error::invalid("grid domain", "both axes must be bounded"));
    }
    let nx = grid_len(&x, step);
    let ny = grid_len(&y, step);
    let mut best: Option<GridOptimum> = None;
    let mut feasible_points = 0;
    for i in 0..nx {
        let xi = x.lo + i as f64 * step;
        for j in 0..ny {
            let yj = y.lo + j as f64 * step;
            if !feasible(xi, yj) {
                continue;
            }
            feasible_points += 1;
            let v = f(xi, yj);
            if !v.is_finite() {
                continue;
            }
            if best.is_none_or(|b| v > b.value) {
                best = Some(GridOptimum {
                    x: xi,
                    y: yj,
                    value: v,
                    feasible_points: 0,
                });
            }
        }
    }
    match best {
        Some(b) => Ok(GridOptimum {
            feasible_points,
            ..b
        }),
        None => Err(Error::EmptyGrid),
    }
}
