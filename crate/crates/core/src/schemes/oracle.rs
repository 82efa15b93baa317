use std::f64::consts::LN_2;

use super::{expected_ul_snr, Partition, SystemParams};
use crate::numerics::integrate;
use crate::{Error, Result};

/// Quadrature of `int_I log2(1 + p_u gbar g / sigma2) e^-g dg`, interval by
/// interval. This is the reference every closed-form PHAT evaluator is
/// checked against.
pub fn quad_throughput_oracle(
    partition: &Partition,
    ul_power: f64,
    params: &SystemParams,
) -> Result<f64> {
    if ul_power.is_nan() || ul_power < 0.0 {
        return Err(Error::domain(
            "quad_throughput_oracle",
            ul_power,
            "ul_power >= 0",
        ));
    }
    let gb = expected_ul_snr(ul_power, params);
    if gb == 0.0 {
        return Ok(0.0);
    }
    partition
        .wit
        .iter()
        .map(|iv| integrate(|g| (gb * g).ln_1p() / LN_2 * (-g).exp(), iv.lo, iv.hi))
        .sum()
}
