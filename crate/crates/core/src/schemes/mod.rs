//! Throughput and uplink-power evaluators for HTT and the PHAT schemes.
//!
//! All throughputs are ergodic and in bits per unit frame (unit bandwidth and
//! frame length, so also bits/s/Hz).

mod htt;
mod oracle;
mod phat;

pub(crate) use htt::frame_split;
pub use htt::{
    htt_ergodic_throughput, htt_instant_rate, htt_instant_snr, htt_mean_tau, htt_optimal_rate,
    htt_optimal_tau, htt_tau, HttMethod, TauRule,
};
pub use oracle::quad_throughput_oracle;
pub use phat::{
    balance_ul_power, evaluate_phat, expected_ul_snr, ip_asymptotic_throughput, ip_throughput,
    ip_ul_power, pi_asymptotic_first_factor, pi_asymptotic_throughput, pi_throughput, pi_ul_power,
    pip_throughput, pip_ul_power, wit_interval_rate,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::numerics::Interval;
use crate::{Error, Result};

/// Physical constants of the link. Frame length and bandwidth are fixed to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Downlink transmit power of the access point (W).
    pub p_d: f64,
    /// Average channel power gain.
    pub gbar: f64,
    /// Receiver noise variance (W).
    pub sigma2: f64,
    /// Frame length (s).
    pub frame_t: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
}

impl SystemParams {
    pub fn new(p_d: f64, gbar: f64, sigma2: f64) -> Result<Self> {
        for (name, v) in [("p_d", p_d), ("gbar", gbar), ("sigma2", sigma2)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    "system parameters",
                    format!("{name} = {v} must be finite and > 0"),
                ));
            }
        }
        Ok(SystemParams {
            p_d,
            gbar,
            sigma2,
            frame_t: 1.0,
            bandwidth: 1.0,
        })
    }

    /// Sets `p_d` so that the downlink-referenced SNR `p_d gbar^2 / sigma2`
    /// equals `snr_db`.
    pub fn from_snr_db(snr_db: f64, gbar: f64, sigma2: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::invalid("snr_db", format!("{snr_db} is not finite")));
        }
        let rho = 10f64.powf(snr_db / 10.0);
        SystemParams::new(rho * sigma2 / (gbar * gbar), gbar, sigma2)
    }

    /// `p_d gbar^2 / sigma2`, the sweep axis.
    pub fn dl_snr(&self) -> f64 {
        self.p_d * self.gbar * self.gbar / self.sigma2
    }

    pub fn dl_snr_db(&self) -> f64 {
        10.0 * self.dl_snr().log10()
    }

    /// `p_d gbar`, the energy harvested per unit of normalized gain over a full frame.
    pub fn harvest_scale(&self) -> f64 {
        self.p_d * self.gbar
    }
}

/// Which duplexing scheme a policy or result belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Htt,
    Ip,
    Pi,
    Pip,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Htt, Scheme::Ip, Scheme::Pi, Scheme::Pip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::Htt => "htt",
            Scheme::Ip => "ip",
            Scheme::Pi => "pi",
            Scheme::Pip => "pip",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "htt" => Ok(Scheme::Htt),
            "ip" => Ok(Scheme::Ip),
            "pi" => Ok(Scheme::Pi),
            "pip" => Ok(Scheme::Pip),
            other => Err(Error::invalid(
                "scheme",
                format!("unknown scheme {other:?}"),
            )),
        }
    }
}

/// WIT set `I` and WPT set `P` as sorted lists of half-open intervals that
/// together tile `[0, inf)` without overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub wit: Vec<Interval>,
    pub wpt: Vec<Interval>,
}

impl Partition {
    pub fn new(wit: Vec<Interval>, wpt: Vec<Interval>) -> Result<Self> {
        for (name, list) in [("WIT", &wit), ("WPT", &wpt)] {
            if list.iter().any(|iv| iv.lo < 0.0) {
                return Err(Error::invalid(
                    "partition",
                    format!("{name} set reaches below 0"),
                ));
            }
            if list.windows(2).any(|w| w[0].hi > w[1].lo) {
                return Err(Error::invalid(
                    "partition",
                    format!("{name} intervals overlap or are unsorted"),
                ));
            }
        }
        let mut all: Vec<Interval> = wit
            .iter()
            .chain(wpt.iter())
            .copied()
            .filter(|iv| iv.width() > 0.0)
            .collect();
        all.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut reach = 0.0;
        for iv in &all {
            if iv.lo < reach {
                return Err(Error::invalid("partition", "WIT and WPT sets overlap"));
            }
            if iv.lo > reach {
                return Err(Error::invalid(
                    "partition",
                    format!("gap [{reach}, {}) is in neither set", iv.lo),
                ));
            }
            reach = iv.hi;
        }
        if reach != f64::INFINITY {
            return Err(Error::invalid(
                "partition",
                format!("[{reach}, inf) is in neither set"),
            ));
        }
        Ok(Partition { wit, wpt })
    }

    /// `I = [0, g_u)`, `P = [g_u, inf)`.
    pub fn ip(g_u: f64) -> Result<Self> {
        Partition::new(
            vec![Interval::new(0.0, g_u)?],
            vec![Interval::open_above(g_u)?],
        )
    }

    /// `P = [0, g_l)`, `I = [g_l, inf)`.
    pub fn pi(g_l: f64) -> Result<Self> {
        Partition::new(
            vec![Interval::open_above(g_l)?],
            vec![Interval::new(0.0, g_l)?],
        )
    }

    /// `P = [0, g_l) u [g_u, inf)`, `I = [g_l, g_u)`.
    pub fn pip(g_l: f64, g_u: f64) -> Result<Self> {
        Partition::new(
            vec![Interval::new(g_l, g_u)?],
            vec![Interval::new(0.0, g_l)?, Interval::open_above(g_u)?],
        )
    }

    pub fn is_wit(&self, g: f64) -> bool {
        self.wit.iter().any(|iv| iv.contains(g))
    }
}

/// A duplexing policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Policy {
    /// Every frame is split, `tau(g)` from the rule.
    Htt { rule: TauRule },
    /// WIT below `g_u`, WPT above.
    Ip { g_u: f64 },
    /// WPT below `g_l`, WIT above.
    Pi { g_l: f64 },
    /// WIT on `[g_l, g_u)`, WPT elsewhere.
    Pip { g_l: f64, g_u: f64 },
}

impl Policy {
    pub fn htt() -> Self {
        Policy::Htt {
            rule: TauRule::ClosedForm,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Policy::Htt { .. } => Scheme::Htt,
            Policy::Ip { .. } => Scheme::Ip,
            Policy::Pi { .. } => Scheme::Pi,
            Policy::Pip { .. } => Scheme::Pip,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("policy", reason));
        match *self {
            Policy::Htt { .. } => Ok(()),
            Policy::Ip { g_u } if !(g_u > 0.0) || g_u.is_nan() => {
                bad(format!("IP needs g_u > 0, got {g_u}"))
            }
            Policy::Pi { g_l } if !(g_l >= 0.0) || !g_l.is_finite() => {
                bad(format!("PI needs finite g_l >= 0, got {g_l}"))
            }
            Policy::Pip { g_l, g_u } if !(g_l >= 0.0) || !g_l.is_finite() || !(g_u > g_l) => bad(
                format!("PIP needs 0 <= g_l < g_u, got g_l = {g_l}, g_u = {g_u}"),
            ),
            _ => Ok(()),
        }
    }

    /// Gain partition of a PHAT policy; `None` for HTT.
    pub fn partition(&self) -> Option<Result<Partition>> {
        match *self {
            Policy::Htt { .. } => None,
            Policy::Ip { g_u } => Some(Partition::ip(g_u)),
            Policy::Pi { g_l } => Some(Partition::pi(g_l)),
            Policy::Pip { g_l, g_u } => Some(Partition::pip(g_l, g_u)),
        }
    }

    /// Whether a PHAT policy assigns a frame with gain `g` to WIT.
    ///
    /// Half-open intervals: IP is WIT iff `g < g_u`, PI iff `g >= g_l`, PIP
    /// iff `g_l <= g < g_u`. HTT frames are never pure WIT.
    pub fn is_wit(&self, g: f64) -> bool {
        match *self {
            Policy::Htt { .. } => false,
            Policy::Ip { g_u } => g < g_u,
            Policy::Pi { g_l } => g >= g_l,
            Policy::Pip { g_l, g_u } => g >= g_l && g < g_u,
        }
    }

    /// `(g_l, g_u)` as reported in result tables.
    pub fn thresholds(&self) -> (Option<f64>, Option<f64>) {
        match *self {
            Policy::Htt { .. } => (None, None),
            Policy::Ip { g_u } => (None, Some(g_u)),
            Policy::Pi { g_l } => (Some(g_l), None),
            Policy::Pip { g_l, g_u } => (Some(g_l), Some(g_u)),
        }
    }
}

/// Throughput and uplink power of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeEvaluation {
    pub throughput_bits: f64,
    /// Constant `p_u` for PHAT; frame-averaged `p_u(g)` for HTT.
    pub ul_power: f64,
    /// `p_u gbar / sigma2`.
    pub expected_ul_snr_gammabar: f64,
}

/// Closed-form evaluation of any policy (HTT through quadrature of the
/// per-frame optimum).
pub fn evaluate(policy: &Policy, params: &SystemParams) -> Result<SchemeEvaluation> {
    policy.validate()?;
    match *policy {
        Policy::Htt { rule } => htt_ergodic_throughput(params, rule, HttMethod::Quadrature),
        _ => evaluate_phat(policy, params),
    }
}
