//! Harvest-then-transmit: every frame spends a fraction `tau` harvesting and
//! `1 - tau` transmitting all of the harvested energy.
//!
//! With `x = tau / (1 - tau)` the frame rate is `log2(1 + gamma x) / (1 + x)`
//! and its maximizer is tied to the principal Lambert-W branch through
//! `w = W0((gamma - 1)/e)`. Since `w e^(w+1) = gamma - 1`, the optimum can be
//! written as
//!
//! ```text
//! 1 + gamma x* = e^(1+w)      tau* = (1 - e^-(1+w)) / (1 + w)
//! rate*        = (1 - tau*) (1 + w) / ln 2
//! ```
//!
//! which is free of the `0/0` at `gamma = 1` and only needs `1 + w`.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use super::{SchemeEvaluation, SystemParams};
use crate::channel::estimate_mean;
use crate::numerics::{
    integrate_with, lambert_w0_plus_one, maximize_scalar, Interval, QuadratureSpec, ToleranceSpec,
};
use crate::{Error, Result};

/// How `tau(g)` is chosen per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TauRule {
    /// Lambert-W closed form.
    ClosedForm,
    /// Scalar maximization of the frame rate.
    Numerical,
}

/// How the expectation over the fading distribution is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HttMethod {
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

// Largest tau handed to the numerical rule; the rate is 0 in the limit tau -> 1.
const TAU_CEILING: f64 = 1.0 - 1e-12;

/// Instantaneous DL-referenced SNR `p_d gbar^2 g^2 / sigma2`.
pub fn htt_instant_snr(g: f64, params: &SystemParams) -> Result<f64> {
    if g.is_nan() || g < 0.0 {
        return Err(Error::domain("htt_instant_snr", g, "g >= 0"));
    }
    Ok(params.dl_snr() * g * g)
}

fn rate_at(gamma: f64, tau: f64) -> f64 {
    if tau >= 1.0 {
        return 0.0;
    }
    (1.0 - tau) * (gamma * tau / (1.0 - tau)).ln_1p() / LN_2
}

/// Frame rate `(1 - tau) log2(1 + gamma tau / (1 - tau))` for a given split.
pub fn htt_instant_rate(g: f64, tau: f64, params: &SystemParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::domain("htt_instant_rate", tau, "0 <= tau < 1"));
    }
    Ok(rate_at(htt_instant_snr(g, params)?, tau))
}

/// `1 + W0((gamma - 1)/e)`.
fn shifted_w(gamma: f64) -> Result<f64> {
    lambert_w0_plus_one(gamma / E)
}

/// `e^-s - 1 + s`, accurate for small `s`.
fn exp_neg_tail(s: f64) -> f64 {
    if s < 0.5 {
        let mut term = -s; // (-s)^k / k! at k = 1
        let mut sum = 0.0;
        for k in 2..40 {
            term *= -s / k as f64;
            sum += term;
            if term.abs() <= f64::EPSILON * 0.25 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (-s).exp_m1() + s
    }
}

/// Optimal harvesting fraction for instantaneous SNR `gamma > 0`.
pub fn htt_optimal_tau(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain("htt_optimal_tau", gamma, "gamma > 0"));
    }
    let s = shifted_w(gamma)?;
    if s == 0.0 {
        return Ok(1.0);
    }
    Ok(-(-s).exp_m1() / s)
}

/// Frame rate at the optimal split; 0 at `gamma = 0`.
pub fn htt_optimal_rate(gamma: f64) -> Result<f64> {
    if gamma.is_nan() || gamma < 0.0 {
        return Err(Error::domain("htt_optimal_rate", gamma, "gamma >= 0"));
    }
    if gamma == 0.0 {
        return Ok(0.0);
    }
    // (1 - tau*) (1 + w) = (1 + w) - (1 - e^-(1+w))
    Ok(exp_neg_tail(shifted_w(gamma)?) / LN_2)
}

fn numerical_tau(gamma: f64) -> Result<f64> {
    let domain = Interval::new(0.0, TAU_CEILING)?;
    let tol = ToleranceSpec::new(1e-10, 0.0, 200)?;
    maximize_scalar(|t| rate_at(gamma, t), domain, tol).map(|(t, _)| t)
}

/// `tau(gamma)` under `rule`; the `gamma -> 0` limit is 1.
pub fn htt_tau(rule: TauRule, gamma: f64) -> Result<f64> {
    if gamma == 0.0 {
        return Ok(1.0);
    }
    match rule {
        TauRule::ClosedForm => htt_optimal_tau(gamma),
        TauRule::Numerical => numerical_tau(gamma),
    }
}

fn frame_rate(rule: TauRule, gamma: f64) -> Result<f64> {
    match rule {
        TauRule::ClosedForm => htt_optimal_rate(gamma),
        TauRule::Numerical => Ok(rate_at(gamma, htt_tau(rule, gamma)?)),
    }
}

/// UL power used in a frame: `E_c = E_h` gives `p_u = tau/(1-tau) p_d gbar g`.
fn frame_ul_power(rule: TauRule, g: f64, params: &SystemParams) -> Result<f64> {
    let gamma = htt_instant_snr(g, params)?;
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let x = match rule {
        TauRule::ClosedForm => shifted_w(gamma)?.exp_m1() / gamma,
        TauRule::Numerical => {
            let t = numerical_tau(gamma)?;
            t / (1.0 - t)
        }
    };
    Ok(x * params.harvest_scale() * g)
}

/// Per-frame quantities needed by the trace simulator.
pub(crate) fn frame_split(rule: TauRule, g: f64, params: &SystemParams) -> Result<(f64, f64, f64)> {
    let gamma = htt_instant_snr(g, params)?;
    let tau = htt_tau(rule, gamma)?;
    let rate = frame_rate(rule, gamma)?;
    let harvested = tau * params.harvest_scale() * g;
    Ok((tau, harvested, rate))
}

// tau from the scalar search carries noise near the search tolerance, far
// above the default quadrature target.
fn tau_spec(rule: TauRule) -> QuadratureSpec {
    match rule {
        TauRule::ClosedForm => QuadratureSpec::default(),
        TauRule::Numerical => QuadratureSpec {
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            ..QuadratureSpec::default()
        },
    }
}

fn expectation<F: Fn(f64) -> Result<f64>>(
    f: F,
    method: HttMethod,
    spec: QuadratureSpec,
) -> Result<f64> {
    // The closures below only fail on domain errors, which cannot occur for
    // g >= 0; surface any failure as NaN so the quadrature reports it.
    match method {
        HttMethod::Quadrature => integrate_with(
            |g| f(g).unwrap_or(f64::NAN) * (-g).exp(),
            0.0,
            f64::INFINITY,
            spec,
        ),
        HttMethod::MonteCarlo { samples, seed } => {
            estimate_mean(samples, seed, |g| f(g).unwrap_or(f64::NAN)).map(|e| e.mean)
        }
    }
}

/// Ergodic throughput with a per-frame split chosen by `rule`.
pub fn htt_ergodic_throughput(
    params: &SystemParams,
    rule: TauRule,
    method: HttMethod,
) -> Result<SchemeEvaluation> {
    let spec = QuadratureSpec::default();
    let throughput_bits = expectation(
        |g| frame_rate(rule, htt_instant_snr(g, params)?),
        method,
        spec,
    )?;
    let ul_power = expectation(|g| frame_ul_power(rule, g, params), method, tau_spec(rule))?;
    Ok(SchemeEvaluation {
        throughput_bits,
        ul_power,
        expected_ul_snr_gammabar: ul_power * params.gbar / params.sigma2,
    })
}

/// Frame-averaged harvesting fraction `E[tau(g)]`.
pub fn htt_mean_tau(params: &SystemParams, rule: TauRule) -> Result<f64> {
    expectation(
        |g| htt_tau(rule, htt_instant_snr(g, params)?),
        HttMethod::Quadrature,
        tau_spec(rule),
    )
}
