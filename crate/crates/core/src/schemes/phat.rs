//! Probabilistic harvest-and-transmit with a constant uplink power.
//!
//! Whole frames go to WPT when `g` is in `P` and to WIT when `g` is in `I`.
//! Balancing expected harvested and consumed energy fixes
//!
//! ```text
//! p_u = p_d gbar int_P g e^-g dg / int_I e^-g dg
//! ```
//!
//! and the rate over a WIT interval `[lo, hi)` with `gb = p_u gbar / sigma2`
//! integrates by parts to
//!
//! ```text
//! ln2 * int_lo^hi log2(1 + gb g) e^-g dg
//!     = e^-lo [ln(1 + gb lo) + S(1/gb + lo)] - e^-hi [ln(1 + gb hi) + S(1/gb + hi)]
//! ```
//!
//! where `S(x) = e^x E1(x)`. Writing `e^(1/gb) E1(1/gb + g)` as
//! `e^-g S(1/gb + g)` keeps every term finite for any `gb > 0`.

use std::f64::consts::LN_2;

use super::{Partition, Policy, SchemeEvaluation, SystemParams};
use crate::channel::{interval_gain_mean, interval_prob, one_minus_linear_exp};
use crate::numerics::scaled_e1;
use crate::{Error, Result};

/// Constant UL power that balances expected harvested and consumed energy.
///
/// An empty `P` gives zero power; an `I` of zero probability is an error.
pub fn balance_ul_power(partition: &Partition, params: &SystemParams) -> Result<f64> {
    let mut wit_prob = 0.0;
    for iv in &partition.wit {
        wit_prob += interval_prob(iv.lo, iv.hi)?;
    }
    if !(wit_prob > 0.0) {
        return Err(Error::DegenerateWit);
    }
    let mut harvested = 0.0;
    for iv in &partition.wpt {
        harvested += interval_gain_mean(iv.lo, iv.hi)?;
    }
    Ok(params.harvest_scale() * harvested / wit_prob)
}

/// `gb = p_u gbar / sigma2`.
pub fn expected_ul_snr(ul_power: f64, params: &SystemParams) -> f64 {
    ul_power * params.gbar / params.sigma2
}

/// `(g + 1) e^-g`, zero at infinity.
fn upper_tail_gain(g: f64) -> f64 {
    if g == f64::INFINITY {
        0.0
    } else {
        (g + 1.0) * (-g).exp()
    }
}

/// UL power for `I = [0, g_u)`, `P = [g_u, inf)`.
pub fn ip_ul_power(g_u: f64, params: &SystemParams) -> Result<f64> {
    if !(g_u > 0.0) {
        return Err(Error::domain("ip_ul_power", g_u, "g_u > 0"));
    }
    if g_u == f64::INFINITY {
        return Ok(0.0);
    }
    Ok(params.harvest_scale() * upper_tail_gain(g_u) / -(-g_u).exp_m1())
}

/// UL power for `P = [0, g_l)`, `I = [g_l, inf)`: `p_d gbar (e^g_l - g_l - 1)`.
pub fn pi_ul_power(g_l: f64, params: &SystemParams) -> Result<f64> {
    if !(g_l >= 0.0) || !g_l.is_finite() {
        return Err(Error::domain("pi_ul_power", g_l, "finite g_l >= 0"));
    }
    Ok(params.harvest_scale() * g_l.exp() * one_minus_linear_exp(g_l))
}

/// UL power for `P = [0, g_l) u [g_u, inf)`, `I = [g_l, g_u)`.
pub fn pip_ul_power(g_l: f64, g_u: f64, params: &SystemParams) -> Result<f64> {
    if !(g_l >= 0.0) || !g_l.is_finite() {
        return Err(Error::domain("pip_ul_power", g_l, "finite g_l >= 0"));
    }
    if !(g_u > g_l) {
        return Err(Error::domain("pip_ul_power", g_u, "g_u > g_l"));
    }
    let wit_prob = interval_prob(g_l, g_u)?;
    if !(wit_prob > 0.0) {
        return Err(Error::DegenerateWit);
    }
    let harvested = one_minus_linear_exp(g_l) + upper_tail_gain(g_u);
    Ok(params.harvest_scale() * harvested / wit_prob)
}

/// `e^-g [ln(1 + gb g) + S(1/gb + g)]`, the antiderivative term at `g`.
fn rate_boundary_term(gb: f64, g: f64) -> Result<f64> {
    if g == f64::INFINITY {
        return Ok(0.0);
    }
    Ok((-g).exp() * ((gb * g).ln_1p() + scaled_e1(1.0 / gb + g)?))
}

/// `int_lo^hi log2(1 + gb g) e^-g dg` in closed form; zero when `gb == 0`.
pub fn wit_interval_rate(gb: f64, lo: f64, hi: f64) -> Result<f64> {
    if gb.is_nan() || gb < 0.0 {
        return Err(Error::domain("wit_interval_rate", gb, "gammabar >= 0"));
    }
    if !(lo >= 0.0) || hi.is_nan() || hi < lo {
        return Err(Error::domain("wit_interval_rate", hi, "0 <= lo <= hi"));
    }
    if gb == 0.0 || lo == hi {
        return Ok(0.0);
    }
    let value = (rate_boundary_term(gb, lo)? - rate_boundary_term(gb, hi)?) / LN_2;
    Ok(value.max(0.0))
}

/// Ergodic throughput of PHAT-IP at threshold `g_u` (bits/frame).
pub fn ip_throughput(g_u: f64, params: &SystemParams) -> Result<f64> {
    let gb = expected_ul_snr(ip_ul_power(g_u, params)?, params);
    wit_interval_rate(gb, 0.0, g_u)
}

/// Ergodic throughput of PHAT-PI at threshold `g_l` (bits/frame); 0 at `g_l = 0`.
pub fn pi_throughput(g_l: f64, params: &SystemParams) -> Result<f64> {
    let gb = expected_ul_snr(pi_ul_power(g_l, params)?, params);
    wit_interval_rate(gb, g_l, f64::INFINITY)
}

/// Ergodic throughput of PHAT-PIP at thresholds `g_l < g_u` (bits/frame).
pub fn pip_throughput(g_l: f64, g_u: f64, params: &SystemParams) -> Result<f64> {
    let gb = expected_ul_snr(pip_ul_power(g_l, g_u, params)?, params);
    wit_interval_rate(gb, g_l, g_u)
}

/// Closed-form evaluation of a PHAT policy.
pub fn evaluate_phat(policy: &Policy, params: &SystemParams) -> Result<SchemeEvaluation> {
    policy.validate()?;
    let (ul_power, throughput_bits) = match *policy {
        Policy::Ip { g_u } => (ip_ul_power(g_u, params)?, ip_throughput(g_u, params)?),
        Policy::Pi { g_l } => (pi_ul_power(g_l, params)?, pi_throughput(g_l, params)?),
        Policy::Pip { g_l, g_u } => (
            pip_ul_power(g_l, g_u, params)?,
            pip_throughput(g_l, g_u, params)?,
        ),
        Policy::Htt { .. } => {
            return Err(Error::invalid("policy", "HTT is not a PHAT policy"));
        }
    };
    Ok(SchemeEvaluation {
        throughput_bits,
        ul_power,
        expected_ul_snr_gammabar: expected_ul_snr(ul_power, params),
    })
}

/// High-SNR form of the IP throughput, `log2(gb) (1 - e^-g_u)` with `gb`
/// written through the DL-referenced SNR.
pub fn ip_asymptotic_throughput(g_u: f64, params: &SystemParams) -> Result<f64> {
    if !(g_u > 0.0) || !g_u.is_finite() {
        return Err(Error::domain(
            "ip_asymptotic_throughput",
            g_u,
            "finite g_u > 0",
        ));
    }
    let wit_prob = -(-g_u).exp_m1();
    Ok((params.dl_snr() * upper_tail_gain(g_u) / wit_prob).log2() * wit_prob)
}

/// `log2(gb)` for PI, i.e. `log2(p_d gbar^2 / sigma2 (e^g_l - g_l - 1))`.
pub fn pi_asymptotic_first_factor(g_l: f64, params: &SystemParams) -> Result<f64> {
    if !(g_l > 0.0) || !g_l.is_finite() {
        return Err(Error::domain(
            "pi_asymptotic_first_factor",
            g_l,
            "finite g_l > 0",
        ));
    }
    Ok((params.dl_snr() * g_l.exp() * one_minus_linear_exp(g_l)).log2())
}

/// High-SNR form of the PI throughput, `log2(gb) e^-g_l`.
pub fn pi_asymptotic_throughput(g_l: f64, params: &SystemParams) -> Result<f64> {
    Ok(pi_asymptotic_first_factor(g_l, params)? * (-g_l).exp())
}
