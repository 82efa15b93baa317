//! Monte-Carlo throughput and frame-level energy traces.
//!
//! The capacitor is an unbounded real ledger. In the default non-causal mode
//! it may go negative, matching the expected-energy constraint the closed
//! forms are built on. Causal mode turns a WIT frame into a WPT frame whenever
//! the stored energy cannot cover `p_u`.

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{estimate_mean, GainStream, MeanEstimate};
use crate::schemes::{evaluate, evaluate_phat, frame_split, Policy, SystemParams};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FrameMode {
    Wit,
    Wpt,
    /// HTT frame with harvesting fraction `tau`.
    Split(f64),
}

impl fmt::Display for FrameMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameMode::Wit => f.write_str("WIT"),
            FrameMode::Wpt => f.write_str("WPT"),
            FrameMode::Split(tau) => write!(f, "SPLIT({tau:.6})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub gain: f64,
    pub mode: FrameMode,
    pub harvested_j: f64,
    pub consumed_j: f64,
    /// Ledger after the frame.
    pub stored_j: f64,
    pub rate_bits: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub n_frames: u64,
    pub mean_rate_bits: f64,
    /// Standard error of `mean_rate_bits`.
    pub rate_std_error: f64,
    pub mean_harvested: f64,
    pub mean_consumed: f64,
    /// Sample deviation of `harvested - consumed` per frame.
    pub net_increment_std: f64,
    pub min_stored: f64,
    pub final_stored: f64,
    pub skipped_wit_frames: u64,
}

fn check_samples(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("sample count", format!("{n} must be >= 2")));
    }
    Ok(())
}

/// Per-frame behaviour shared by the estimators and the trace.
enum Kernel {
    Htt(Policy),
    Phat {
        policy: Policy,
        ul_power: f64,
        gammabar: f64,
    },
}

impl Kernel {
    fn new(policy: &Policy, params: &SystemParams) -> Result<Self> {
        policy.validate()?;
        match policy {
            Policy::Htt { .. } => Ok(Kernel::Htt(*policy)),
            _ => {
                let eval = evaluate_phat(policy, params)?;
                Ok(Kernel::Phat {
                    policy: *policy,
                    ul_power: eval.ul_power,
                    gammabar: eval.expected_ul_snr_gammabar,
                })
            }
        }
    }

    fn rate(&self, g: f64, params: &SystemParams) -> f64 {
        match *self {
            Kernel::Htt(Policy::Htt { rule }) => {
                frame_split(rule, g, params).map_or(f64::NAN, |s| s.2)
            }
            Kernel::Phat {
                policy, gammabar, ..
            } => {
                if policy.is_wit(g) {
                    (gammabar * g).ln_1p() / LN_2
                } else {
                    0.0
                }
            }
            Kernel::Htt(_) => unreachable!(),
        }
    }
}

/// Sample mean of the per-frame rate over `n` iid gains.
pub fn mc_throughput(
    policy: &Policy,
    params: &SystemParams,
    n: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    check_samples(n)?;
    let kernel = Kernel::new(policy, params)?;
    let est = estimate_mean(n, seed, |g| kernel.rate(g, params))?;
    if est.mean.is_nan() {
        return Err(Error::domain(
            "mc_throughput",
            est.mean,
            "finite per-frame rates",
        ));
    }
    Ok(est)
}

/// Runs `n_frames` frames, handing each record to `sink`.
pub fn run_policy_trace_with<S: FnMut(&FrameRecord)>(
    policy: &Policy,
    params: &SystemParams,
    n_frames: u64,
    seed: u64,
    causal: bool,
    initial_energy: f64,
    mut sink: S,
) -> Result<TraceSummary> {
    if n_frames == 0 {
        return Err(Error::invalid("n_frames", "must be >= 1"));
    }
    if !(initial_energy >= 0.0) || !initial_energy.is_finite() {
        return Err(Error::invalid(
            "initial_energy",
            format!("{initial_energy} must be finite and >= 0"),
        ));
    }
    let kernel = Kernel::new(policy, params)?;
    let scale = params.harvest_scale();

    let mut stored = initial_energy;
    let mut min_stored = initial_energy;
    let mut skipped = 0u64;
    let (mut rate_mean, mut rate_m2) = (0.0, 0.0);
    let (mut net_mean, mut net_m2) = (0.0, 0.0);
    let (mut harvested_sum, mut consumed_sum) = (0.0, 0.0);

    for (index, g) in (0..n_frames).zip(GainStream::new(seed)) {
        let (mode, harvested, consumed, rate) = match kernel {
            Kernel::Htt(Policy::Htt { rule }) => {
                let (tau, harvested, rate) = frame_split(rule, g, params)?;
                (FrameMode::Split(tau), harvested, harvested, rate)
            }
            Kernel::Phat {
                policy, ul_power, ..
            } => {
                let wit = policy.is_wit(g);
                if wit && !(causal && stored < ul_power) {
                    (FrameMode::Wit, 0.0, ul_power, kernel.rate(g, params))
                } else {
                    if wit {
                        skipped += 1;
                    }
                    (FrameMode::Wpt, scale * g, 0.0, 0.0)
                }
            }
            Kernel::Htt(_) => unreachable!(),
        };
        let net = harvested - consumed;
        stored += net;
        min_stored = min_stored.min(stored);
        harvested_sum += harvested;
        consumed_sum += consumed;

        let k = (index + 1) as f64;
        let d = rate - rate_mean;
        rate_mean += d / k;
        rate_m2 += d * (rate - rate_mean);
        let d = net - net_mean;
        net_mean += d / k;
        net_m2 += d * (net - net_mean);

        sink(&FrameRecord {
            index,
            gain: g,
            mode,
            harvested_j: harvested,
            consumed_j: consumed,
            stored_j: stored,
            rate_bits: rate,
        });
    }

    let n = n_frames as f64;
    let var = |m2: f64| if n_frames > 1 { m2 / (n - 1.0) } else { 0.0 };
    Ok(TraceSummary {
        n_frames,
        mean_rate_bits: rate_mean,
        rate_std_error: (var(rate_m2) / n).sqrt(),
        mean_harvested: harvested_sum / n,
        mean_consumed: consumed_sum / n,
        net_increment_std: var(net_m2).sqrt(),
        min_stored,
        final_stored: stored,
        skipped_wit_frames: skipped,
    })
}

/// Runs a trace and keeps every frame.
pub fn run_policy_trace(
    policy: &Policy,
    params: &SystemParams,
    n_frames: u64,
    seed: u64,
    causal: bool,
    initial_energy: f64,
) -> Result<(Vec<FrameRecord>, TraceSummary)> {
    let mut frames = Vec::with_capacity(n_frames.min(1 << 24) as usize);
    let summary = run_policy_trace_with(
        policy,
        params,
        n_frames,
        seed,
        causal,
        initial_energy,
        |r| frames.push(*r),
    )?;
    Ok((frames, summary))
}

/// Non-causal and causal trace means against the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub closed_form: f64,
    pub non_causal: TraceSummary,
    pub causal: TraceSummary,
    /// `|non-causal mean - closed form| / closed form`; 0 when both vanish.
    pub relative_gap: f64,
}

/// Compares trace means with the closed form on a shared seed. The causal
/// trace starts from an empty ledger.
pub fn trace_throughput_convergence(
    policy: &Policy,
    params: &SystemParams,
    n_frames: u64,
    seed: u64,
) -> Result<ConvergenceReport> {
    if n_frames < 10_000 {
        return Err(Error::invalid(
            "n_frames",
            format!("{n_frames} must be >= 10000"),
        ));
    }
    let closed_form = evaluate(policy, params)?.throughput_bits;
    let non_causal = run_policy_trace_with(policy, params, n_frames, seed, false, 0.0, |_| ())?;
    let causal = run_policy_trace_with(policy, params, n_frames, seed, true, 0.0, |_| ())?;
    let diff = (non_causal.mean_rate_bits - closed_form).abs();
    let relative_gap = if closed_form > 0.0 {
        diff / closed_form
    } else {
        diff
    };
    Ok(ConvergenceReport {
        closed_form,
        non_causal,
        causal,
        relative_gap,
    })
}
