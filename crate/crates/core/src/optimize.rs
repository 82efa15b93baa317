//! Threshold solvers for each scheme and the SNR sweep.
//!
//! IP and PI are one-dimensional: a coarse scan at `grid_step` locates the
//! best cell, [`maximize_scalar`] refines inside it, and golden-section runs
//! from three brackets covering the whole range guard against a second
//! mode. The best candidate wins. PIP is an exhaustive scan over the
//! `grid_step` lattice of `0 <= g_l < g_u <= gain_cap`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::numerics::{
    golden_section_max, grid_argmax_2d, maximize_scalar, Interval, ToleranceSpec,
};
use crate::schemes::{
    evaluate_phat, htt_ergodic_throughput, htt_mean_tau, quad_throughput_oracle, HttMethod, Policy,
    Scheme, SystemParams, TauRule,
};
use crate::sim::mc_throughput;
use crate::{Error, Result};

// Smallest g_u tried by the IP solver; the throughput vanishes as g_u -> 0.
const IP_FLOOR: f64 = 1e-9;

/// How a policy's ergodic throughput is computed inside the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Largest threshold considered.
    pub gain_cap: f64,
    /// Coarse-scan spacing for IP/PI and lattice spacing for PIP.
    pub grid_step: f64,
    pub tol: ToleranceSpec,
    pub method: EvalMethod,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            gain_cap: 10.0,
            grid_step: 0.01,
            tol: ToleranceSpec::new(1e-10, 0.0, 200).expect("valid tolerance"),
            method: EvalMethod::ClosedForm,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gain_cap > 0.0) || !self.gain_cap.is_finite() {
            return Err(Error::invalid(
                "gain_cap",
                format!("{} must be finite and > 0", self.gain_cap),
            ));
        }
        if !(self.grid_step > 0.0) || !(self.grid_step < self.gain_cap) {
            return Err(Error::invalid(
                "grid_step",
                format!("{} must lie in (0, gain_cap)", self.grid_step),
            ));
        }
        if let EvalMethod::MonteCarlo { samples, .. } = self.method {
            if samples < 2 {
                return Err(Error::invalid("samples", "need at least 2"));
            }
        }
        Ok(())
    }
}

/// Optimized policy of one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub policy: Policy,
    pub throughput_bits: f64,
    pub ul_power: f64,
    /// `E[tau(g)]` for HTT.
    pub tau_mean: Option<f64>,
    /// A threshold lies within one grid step of `gain_cap`.
    pub at_boundary: bool,
    /// PIP only: how far the lattice can fall short of the IP and PI optima.
    pub resolution_bound: Option<f64>,
}

/// Throughput of a PHAT policy by the configured method.
pub fn phat_objective(policy: &Policy, params: &SystemParams, method: EvalMethod) -> Result<f64> {
    match method {
        EvalMethod::ClosedForm => Ok(evaluate_phat(policy, params)?.throughput_bits),
        EvalMethod::Quadrature => {
            let partition = policy
                .partition()
                .ok_or_else(|| Error::invalid("policy", "HTT has no partition"))??;
            let ul_power = evaluate_phat(policy, params)?.ul_power;
            quad_throughput_oracle(&partition, ul_power, params)
        }
        EvalMethod::MonteCarlo { samples, seed } => {
            Ok(mc_throughput(policy, params, samples, seed)?.mean)
        }
    }
}

fn finish(
    policy: Policy,
    params: &SystemParams,
    cfg: &SolveConfig,
    throughput_bits: f64,
) -> Result<Solution> {
    let ul_power = evaluate_phat(&policy, params)?.ul_power;
    let edge = cfg.gain_cap - cfg.grid_step;
    let at_boundary = match policy {
        Policy::Ip { g_u } => g_u >= edge,
        Policy::Pi { g_l } => g_l >= edge,
        Policy::Pip { g_l, g_u } => g_l >= edge || g_u >= edge,
        Policy::Htt { .. } => false,
    };
    Ok(Solution {
        policy,
        throughput_bits,
        ul_power,
        tau_mean: None,
        at_boundary,
        resolution_bound: None,
    })
}

/// Scan, local refinement and multi-start golden section on `[lo, cap]`.
fn solve_scalar<F: Fn(f64) -> f64>(f: F, lo: f64, cfg: &SolveConfig) -> Result<(f64, f64)> {
    let (cap, step) = (cfg.gain_cap, cfg.grid_step);
    let n = ((cap - lo) / step + 1e-9).floor() as usize;
    let node = |k: usize| {
        if k == 0 {
            lo
        } else {
            (k as f64 * step).min(cap)
        }
    };
    let mut best: Option<(f64, f64)> = None;
    let mut best_k = 0;
    let consider = |x: f64, v: f64, best: &mut Option<(f64, f64)>| {
        if v.is_finite() && best.is_none_or(|b| v > b.1) {
            *best = Some((x, v));
            true
        } else {
            false
        }
    };
    for k in 0..=n {
        let x = node(k);
        if consider(x, f(x), &mut best) {
            best_k = k;
        }
    }
    let last = node(n);
    if last < cap && consider(cap, f(cap), &mut best) {
        best_k = n + 1;
    }
    if best.is_none() {
        return Err(Error::EmptyGrid);
    }

    let a = if best_k == 0 { lo } else { node(best_k - 1) };
    let b = if best_k >= n { cap } else { node(best_k + 1) };
    let mut candidates = Vec::with_capacity(4);
    candidates.push(local(maximize_scalar(&f, Interval::new(a, b)?, cfg.tol)));
    let third = (cap - lo) / 3.0;
    for i in 0..3 {
        let bracket = Interval::new(
            lo + i as f64 * third,
            if i == 2 {
                cap
            } else {
                lo + (i + 1) as f64 * third
            },
        )?;
        candidates.push(local(golden_section_max(&f, bracket, cfg.tol)));
    }
    for c in candidates.into_iter().flatten() {
        consider(c.0, c.1, &mut best);
    }
    Ok(best.expect("checked above"))
}

// Hitting the iteration limit still leaves a usable point.
fn local(r: Result<(f64, f64)>) -> Result<(f64, f64)> {
    match r {
        Err(Error::IterationLimit { argmax, max, .. }) => Ok((argmax, max)),
        other => other,
    }
}

/// Optimal IP threshold `g_u* in (0, gain_cap]`.
pub fn solve_ip(params: &SystemParams, cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    let f = |g_u: f64| phat_objective(&Policy::Ip { g_u }, params, cfg.method).unwrap_or(f64::NAN);
    let (g_u, value) = solve_scalar(f, IP_FLOOR, cfg)?;
    finish(Policy::Ip { g_u }, params, cfg, value)
}

/// Optimal PI threshold `g_l* in [0, gain_cap]`.
pub fn solve_pi(params: &SystemParams, cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    let f = |g_l: f64| phat_objective(&Policy::Pi { g_l }, params, cfg.method).unwrap_or(f64::NAN);
    let (g_l, value) = solve_scalar(f, 0.0, cfg)?;
    finish(Policy::Pi { g_l }, params, cfg, value)
}

/// Best lattice point `0 <= g_l < g_u <= gain_cap` for PIP.
///
/// `resolution_bound` is the larger of `ip* - pip(0, g_u')` and
/// `pi* - pip(g_l', g_cap')`, where primes denote the lattice nodes nearest
/// to the IP and PI optima. The lattice optimum is at least
/// `max(ip*, pi*) - resolution_bound`.
pub fn solve_pip(params: &SystemParams, cfg: &SolveConfig) -> Result<Solution> {
    cfg.validate()?;
    let (cap, step) = (cfg.gain_cap, cfg.grid_step);
    if cap < 2.0 * step {
        return Err(Error::EmptyGrid);
    }
    let f = |g_l: f64, g_u: f64| {
        phat_objective(&Policy::Pip { g_l, g_u }, params, cfg.method).unwrap_or(f64::NAN)
    };
    let axis = Interval::new(0.0, cap)?;
    let best = grid_argmax_2d(f, axis, axis, step, |g_l, g_u| {
        g_l < g_u && g_u <= cap + 1e-9 * step
    })?;
    let mut solution = finish(
        Policy::Pip {
            g_l: best.x,
            g_u: best.y.min(cap),
        },
        params,
        cfg,
        best.value,
    )?;

    let snap = |x: f64| (x / step).round() * step;
    let last = ((cap / step) + 1e-9).floor() * step;
    let ip = solve_ip(params, cfg)?;
    let pi = solve_pi(params, cfg)?;
    let mut bound: f64 = 0.0;
    if let Policy::Ip { g_u } = ip.policy {
        let g_u = snap(g_u).clamp(step, last);
        bound = bound.max(ip.throughput_bits - f(0.0, g_u));
    }
    if let Policy::Pi { g_l } = pi.policy {
        let g_l = snap(g_l).clamp(0.0, last - step);
        bound = bound.max(pi.throughput_bits - f(g_l, last));
    }
    solution.resolution_bound = Some(bound.max(0.0));
    Ok(solution)
}

/// HTT with the closed-form per-frame split.
pub fn solve_htt(params: &SystemParams, cfg: &SolveConfig) -> Result<Solution> {
    let method = match cfg.method {
        EvalMethod::MonteCarlo { samples, seed } => HttMethod::MonteCarlo { samples, seed },
        _ => HttMethod::Quadrature,
    };
    let eval = htt_ergodic_throughput(params, TauRule::ClosedForm, method)?;
    Ok(Solution {
        policy: Policy::htt(),
        throughput_bits: eval.throughput_bits,
        ul_power: eval.ul_power,
        tau_mean: Some(htt_mean_tau(params, TauRule::ClosedForm)?),
        at_boundary: false,
        resolution_bound: None,
    })
}

pub fn solve(scheme: Scheme, params: &SystemParams, cfg: &SolveConfig) -> Result<Solution> {
    match scheme {
        Scheme::Htt => solve_htt(params, cfg),
        Scheme::Ip => solve_ip(params, cfg),
        Scheme::Pi => solve_pi(params, cfg),
        Scheme::Pip => solve_pip(params, cfg),
    }
}

/// Inclusive SNR range in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::invalid("snr step", format!("{step} must be > 0")));
        }
        if !start.is_finite() || !stop.is_finite() || stop < start {
            return Err(Error::invalid(
                "snr range",
                format!("need finite start <= stop, got {start}..{stop}"),
            ));
        }
        Ok(SnrRange { start, stop, step })
    }

    /// `start + k step` for every `k` that stays within `stop`.
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// One `(snr_db, scheme)` entry; exactly one of `solution` and `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub scheme: Scheme,
    pub solution: Option<Solution>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputCurve {
    /// Sorted by `snr_db`, then by scheme.
    pub points: Vec<CurvePoint>,
}

impl ThroughputCurve {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    /// Solutions of one scheme in SNR order, skipping failed points.
    pub fn series(&self, scheme: Scheme) -> Vec<(f64, Solution)> {
        self.points
            .iter()
            .filter(|p| p.scheme == scheme)
            .filter_map(|p| p.solution.map(|s| (p.snr_db, s)))
            .collect()
    }
}

/// Solves every scheme at every SNR point, setting `p_d gbar^2 / sigma2` to
/// the point's value and keeping `gbar` and `sigma2` from `template`.
///
/// Points run in parallel; a failing solver is recorded on its row and the
/// sweep carries on.
pub fn sweep(
    range: SnrRange,
    schemes: &[Scheme],
    template: &SystemParams,
    cfg: &SolveConfig,
) -> Result<ThroughputCurve> {
    cfg.validate()?;
    let mut schemes = schemes.to_vec();
    schemes.sort();
    schemes.dedup();
    let rows: Vec<Vec<CurvePoint>> = range
        .points()
        .into_par_iter()
        .map(|snr_db| {
            let params =
                SystemParams::from_snr_db(snr_db, template.gbar, template.sigma2).map(|p| {
                    SystemParams {
                        frame_t: template.frame_t,
                        bandwidth: template.bandwidth,
                        ..p
                    }
                });
            schemes
                .iter()
                .map(|&scheme| {
                    let outcome = params.clone().and_then(|p| solve(scheme, &p, cfg));
                    match outcome {
                        Ok(s) => CurvePoint {
                            snr_db,
                            scheme,
                            solution: Some(s),
                            error: None,
                        },
                        Err(e) => CurvePoint {
                            snr_db,
                            scheme,
                            solution: None,
                            error: Some(e.to_string()),
                        },
                    }
                })
                .collect()
        })
        .collect();
    Ok(ThroughputCurve {
        points: rows.into_iter().flatten().collect(),
    })
}
