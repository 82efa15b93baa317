//! Normalized Rayleigh block-fading channel.
//!
//! The normalized channel power gain `g = |h|^2 / gbar` is unit-mean
//! exponential, so every quantity the schemes need (interval probabilities,
//! truncated first moments) has an elementary closed form. Samples come from
//! an embedded SplitMix64 generator so that a `(seed, count)` pair pins the
//! exact sequence independently of any external crate version:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! out = z ^ (z >> 31)
//! u = (out >> 11) * 2^-53          in [0, 1)
//! g = -ln(1 - u)                   (computed as -ln_1p(-u))
//! ```

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Distribution family of the normalized channel power gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FadingKind {
    /// Rayleigh amplitude, hence unit-mean exponential power gain.
    UnitMeanExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingModel {
    pub kind: FadingKind,
    /// Average channel power gain; the normalized density never sees it.
    pub mean_gain_gbar: f64,
}

impl FadingModel {
    pub fn rayleigh(mean_gain_gbar: f64) -> Result<Self> {
        if !(mean_gain_gbar > 0.0) || !mean_gain_gbar.is_finite() {
            return Err(Error::domain("FadingModel", mean_gain_gbar, "gbar > 0"));
        }
        Ok(FadingModel {
            kind: FadingKind::UnitMeanExponential,
            mean_gain_gbar,
        })
    }

    /// Un-normalized channel power gain for a normalized draw.
    pub fn absolute_gain(&self, g: f64) -> f64 {
        self.mean_gain_gbar * g
    }

    pub fn pdf(&self, g: f64) -> Result<f64> {
        match self.kind {
            FadingKind::UnitMeanExponential => pdf(g),
        }
    }

    pub fn interval_prob(&self, a: f64, b: f64) -> Result<f64> {
        match self.kind {
            FadingKind::UnitMeanExponential => interval_prob(a, b),
        }
    }

    pub fn interval_gain_mean(&self, a: f64, b: f64) -> Result<f64> {
        match self.kind {
            FadingKind::UnitMeanExponential => interval_gain_mean(a, b),
        }
    }
}

/// Density `e^-g` of the normalized gain.
pub fn pdf(g: f64) -> Result<f64> {
    if g.is_nan() || g < 0.0 {
        return Err(Error::domain("pdf", g, "g >= 0"));
    }
    Ok((-g).exp())
}

fn check_range(op: &'static str, a: f64, b: f64) -> Result<()> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::domain(op, a, "0 <= a"));
    }
    if b.is_nan() || b < a {
        return Err(Error::domain(op, b, "a <= b"));
    }
    Ok(())
}

/// `1 - (1 + x) e^-x`, without cancellation for small `x`.
pub(crate) fn one_minus_linear_exp(x: f64) -> f64 {
    if x < 0.5 {
        // sum_{k>=2} (-1)^k (k - 1) x^k / k!
        let mut term = -x; // (-x)^k / k! at k = 1
        let mut sum = 0.0;
        for k in 2..40 {
            term *= -x / k as f64;
            let c = (k - 1) as f64 * term;
            sum += c;
            if c.abs() <= f64::EPSILON * 0.25 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        1.0 - (1.0 + x) * (-x).exp()
    }
}

/// `P(a <= g < b) = e^-a - e^-b`; `b` may be `f64::INFINITY`.
pub fn interval_prob(a: f64, b: f64) -> Result<f64> {
    check_range("interval_prob", a, b)?;
    if b == f64::INFINITY {
        return Ok((-a).exp());
    }
    Ok((-a).exp() * -(-(b - a)).exp_m1())
}

/// `int_a^b g e^-g dg = (a + 1) e^-a - (b + 1) e^-b`; `b` may be `f64::INFINITY`.
pub fn interval_gain_mean(a: f64, b: f64) -> Result<f64> {
    check_range("interval_gain_mean", a, b)?;
    if b == f64::INFINITY {
        return Ok((a + 1.0) * (-a).exp());
    }
    let d = b - a;
    Ok((-a).exp() * (a * -(-d).exp_m1() + one_minus_linear_exp(d)))
}

/// SplitMix64, see the module docs for the exact recurrence.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform double on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Endless stream of normalized gains by inverse-CDF sampling.
#[derive(Debug, Clone)]
pub struct GainStream {
    rng: SplitMix64,
}

impl GainStream {
    pub fn new(seed: u64) -> Self {
        GainStream {
            rng: SplitMix64::new(seed),
        }
    }
}

impl Iterator for GainStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let u = self.rng.next_uniform();
        Some(-(-u).ln_1p())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

/// Averages `f(g)` over `count` gains drawn from the stream seeded with `seed`.
///
/// Uses Welford's update; the standard error is `s / sqrt(n)` with the
/// unbiased sample deviation `s` (zero when `count == 1`).
pub fn estimate_mean<F: FnMut(f64) -> f64>(
    count: usize,
    seed: u64,
    mut f: F,
) -> Result<MeanEstimate> {
    if count == 0 {
        return Err(Error::invalid("sample count", "must be >= 1"));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for (i, g) in GainStream::new(seed).take(count).enumerate() {
        let v = f(g);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let std_error = if count > 1 {
        (m2 / (count - 1) as f64 / count as f64).sqrt()
    } else {
        0.0
    };
    Ok(MeanEstimate {
        mean,
        std_error,
        count,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainSampleBatch {
    pub values: Vec<f64>,
    pub seed: u64,
    pub count: usize,
}

impl GainSampleBatch {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.count as f64
    }
}

/// Draws `count` normalized gains from the stream seeded with `seed`.
pub fn sample(count: usize, seed: u64) -> Result<GainSampleBatch> {
    if count == 0 {
        return Err(Error::invalid("sample count", "must be >= 1"));
    }
    Ok(GainSampleBatch {
        values: GainStream::new(seed).take(count).collect(),
        seed,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;
    use std::f64::consts::E;

    #[test]
    fn pdf_values() {
        assert_eq!(pdf(0.0).unwrap(), 1.0);
        assert_eq!(pdf(1.0).unwrap(), 1.0 / E);
        assert!(pdf(-0.1).is_err());
        let mass = integrate(|g| pdf(g).unwrap(), 0.0, f64::INFINITY).unwrap();
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn interval_probabilities() {
        assert_eq!(interval_prob(0.0, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(interval_prob(2.5, 2.5).unwrap(), 0.0);
        for gu in [0.0, 0.3, 1.0, 7.0] {
            let total = interval_prob(0.0, gu).unwrap() + interval_prob(gu, f64::INFINITY).unwrap();
            assert!((total - 1.0).abs() < 1e-15);
        }
        assert!(interval_prob(2.0, 1.0).is_err());
        assert!(interval_prob(-1.0, 1.0).is_err());
    }

    #[test]
    fn interval_gain_means() {
        assert_eq!(interval_gain_mean(0.0, f64::INFINITY).unwrap(), 1.0);
        // Quadrature oracle of int_1^inf g e^-g dg.
        let oracle = integrate(|g: f64| g * (-g).exp(), 1.0, f64::INFINITY).unwrap();
        assert!((interval_gain_mean(1.0, f64::INFINITY).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 2.0 / E).abs() < 1e-12);
        for g in [0.0, 1e-8, 0.1, 2.0, 30.0] {
            let total =
                interval_gain_mean(0.0, g).unwrap() + interval_gain_mean(g, f64::INFINITY).unwrap();
            assert!((total - 1.0).abs() < 1e-15, "g = {g}");
        }
        assert!(interval_gain_mean(1.0, 0.5).is_err());
    }

    #[test]
    fn small_width_gain_mean_keeps_precision() {
        // int_0^d g e^-g dg ~ d^2/2 - d^3/3
        let d = 1e-6;
        let got = interval_gain_mean(0.0, d).unwrap();
        let want = d * d / 2.0 - d * d * d / 3.0;
        assert!(((got - want) / want).abs() < 1e-9);
    }

    #[test]
    fn gain_mean_matches_quadrature_on_random_pairs() {
        let mut rng = SplitMix64::new(17);
        for _ in 0..100 {
            let x = 20.0 * rng.next_uniform();
            let y = 20.0 * rng.next_uniform();
            let (a, b) = (x.min(y), x.max(y));
            let oracle = integrate(|g: f64| g * (-g).exp(), a, b).unwrap();
            let got = interval_gain_mean(a, b).unwrap();
            assert!(
                (got - oracle).abs() <= 1e-10,
                "[{a}, {b}]: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn splitmix_reference_outputs() {
        let mut rng = SplitMix64::new(0);
        assert_eq!(rng.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(rng.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(rng.next_u64(), 0x06C4_5D18_8009_454F);
    }

    #[test]
    fn mean_estimate_of_constant_and_identity() {
        let c = estimate_mean(10, 1, |_| 2.5).unwrap();
        assert_eq!(c.mean, 2.5);
        assert_eq!(c.std_error, 0.0);
        let id = estimate_mean(50_000, 8, |g| g).unwrap();
        let batch = sample(50_000, 8).unwrap();
        assert!((id.mean - batch.mean()).abs() < 1e-12);
        // Unit exponential has unit variance.
        assert!((id.std_error * (50_000f64).sqrt() - 1.0).abs() < 0.05);
        assert!(estimate_mean(0, 1, |g| g).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample(1000, 99).unwrap();
        let b = sample(1000, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, sample(1000, 100).unwrap().values);
        assert!(sample(0, 1).is_err());
        assert!(a.values.iter().all(|&g| g >= 0.0));
    }

    #[test]
    fn sample_mean_within_three_standard_errors() {
        let n = 100_000;
        for seed in [1, 2, 3, 0xDEAD_BEEF] {
            let batch = sample(n, seed).unwrap();
            assert!(
                (batch.mean() - 1.0).abs() <= 3.0 / (n as f64).sqrt(),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn interval_fraction_within_binomial_error() {
        let n = 100_000;
        let batch = sample(n, 5).unwrap();
        for (a, b) in [(0.0, 0.5), (0.5, 1.7), (1.0, 3.0), (3.0, f64::INFINITY)] {
            let p = interval_prob(a, b).unwrap();
            let hits = batch.values.iter().filter(|&&g| g >= a && g < b).count();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((hits as f64 / n as f64 - p).abs() <= 3.0 * se, "[{a}, {b})");
        }
    }

    #[test]
    fn empirical_cdf_passes_kolmogorov_smirnov() {
        let n = 100_000;
        let mut values = sample(n, 2024).unwrap().values;
        values.sort_by(f64::total_cmp);
        let d = values
            .iter()
            .enumerate()
            .map(|(i, &g)| {
                let cdf = -(-g).exp_m1();
                (cdf - i as f64 / n as f64)
                    .abs()
                    .max(((i + 1) as f64 / n as f64 - cdf).abs())
            })
            .fold(0.0, f64::max);
        // Asymptotic 1% critical value.
        assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
    }
}
