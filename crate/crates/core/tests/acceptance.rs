//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::LN_2;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use phat_core::channel::SplitMix64;
use phat_core::numerics::{
    e1_asymptotic, exp_integral_e1, integrate_with, lambert_w0, scaled_e1, Interval, QuadratureSpec,
};
use phat_core::optimize::{solve, sweep, SnrRange, SolveConfig};
use phat_core::schemes::{
    balance_ul_power, evaluate, htt_optimal_rate, htt_optimal_tau, ip_asymptotic_throughput,
    ip_throughput, pi_asymptotic_first_factor, pi_throughput, pip_throughput,
    quad_throughput_oracle, Partition, Policy, Scheme, SystemParams,
};
use phat_core::sim::{mc_throughput, run_policy_trace, run_policy_trace_with};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome, u64);

const SEED: u64 = 20_240_601;

fn tight() -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_subdivisions: 4000,
    }
}

fn uniform(rng: &mut SplitMix64, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.next_uniform()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_oracle_equivalence() -> Outcome {
    let mut rng = SplitMix64::new(SEED);
    let unit = SystemParams::new(1.0, 1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for scheme in [Scheme::Ip, Scheme::Pi, Scheme::Pip] {
        for _ in 0..50 {
            let policy = match scheme {
                Scheme::Ip => Policy::Ip {
                    g_u: uniform(&mut rng, 0.01, 10.0),
                },
                Scheme::Pi => Policy::Pi {
                    g_l: uniform(&mut rng, 0.01, 10.0),
                },
                _ => {
                    let g_l = uniform(&mut rng, 0.0, 8.0);
                    Policy::Pip {
                        g_l,
                        g_u: g_l + uniform(&mut rng, 0.01, 5.0),
                    }
                }
            };
            // pick p_d so that the expected UL SNR hits a log-uniform target
            let target = 10f64.powf(uniform(&mut rng, -3.0, 4.0));
            let gb1 = evaluate(&policy, &unit)
                .map_err(|e| e.to_string())?
                .expected_ul_snr_gammabar;
            let params = SystemParams::new(target / gb1, 1.0, 1.0).map_err(|e| e.to_string())?;
            let eval = evaluate(&policy, &params).map_err(|e| e.to_string())?;
            let partition = policy.partition().unwrap().map_err(|e| e.to_string())?;
            let oracle = quad_throughput_oracle(&partition, eval.ul_power, &params)
                .map_err(|e| e.to_string())?;
            let diff = (eval.throughput_bits - oracle).abs();
            worst = worst.max(diff);
            ensure(diff <= 1e-8, || {
                format!(
                    "{policy:?} gb={target:.3e}: |{} - {oracle}| = {diff:.2e}",
                    eval.throughput_bits
                )
            })?;
        }
    }
    Ok(format!(
        "150 tuples, max |closed - quadrature| = {worst:.2e}"
    ))
}

fn c2_energy_balance() -> Outcome {
    let mut rng = SplitMix64::new(SEED + 1);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 50 {
        let n_cuts = if rng.next_uniform() < 0.5 { 1 } else { 2 };
        let mut cuts: Vec<f64> = (0..n_cuts).map(|_| uniform(&mut rng, 0.05, 8.0)).collect();
        cuts.sort_by(f64::total_cmp);
        let mut edges = vec![0.0];
        edges.extend(cuts);
        edges.push(f64::INFINITY);
        let wit_first = rng.next_uniform() < 0.5;
        let (mut wit, mut wpt) = (Vec::new(), Vec::new());
        for (k, w) in edges.windows(2).enumerate() {
            let iv = Interval::new(w[0], w[1]).map_err(|e| e.to_string())?;
            if (k % 2 == 0) == wit_first {
                wit.push(iv);
            } else {
                wpt.push(iv);
            }
        }
        let partition = Partition::new(wit, wpt).map_err(|e| e.to_string())?;
        let params = SystemParams::new(
            uniform(&mut rng, 0.1, 10.0),
            uniform(&mut rng, 0.1, 2.0),
            1.0,
        )
        .unwrap();
        let p_u = balance_ul_power(&partition, &params).map_err(|e| e.to_string())?;
        let mut consumed = 0.0;
        for iv in &partition.wit {
            consumed += p_u
                * integrate_with(|g| (-g).exp(), iv.lo, iv.hi, tight())
                    .map_err(|e| e.to_string())?;
        }
        let mut harvested = 0.0;
        for iv in &partition.wpt {
            harvested += params.harvest_scale()
                * integrate_with(|g| g * (-g).exp(), iv.lo, iv.hi, tight())
                    .map_err(|e| e.to_string())?;
        }
        let diff = (consumed - harvested).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-10, || {
            format!("{partition:?}: consumed {consumed} vs harvested {harvested}")
        })?;
        checked += 1;
    }
    Ok(format!(
        "50 partitions, max |consumed - harvested| = {worst:.2e}"
    ))
}

fn eq3_rate(gamma: f64, tau: f64) -> f64 {
    (1.0 - tau) * (gamma * tau / (1.0 - tau)).ln_1p() / LN_2
}

fn c3_htt_closed_form() -> Outcome {
    let (mut worst_tau, mut worst_rate, mut worst_res): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..40 {
        let gamma = 10f64.powf(-2.0 + 6.0 * i as f64 / 39.0);
        let tau = htt_optimal_tau(gamma).map_err(|e| e.to_string())?;
        let rate = htt_optimal_rate(gamma).map_err(|e| e.to_string())?;
        let (mut best_t, mut best_r) = (0.0, f64::NEG_INFINITY);
        for k in 1..1_000_000 {
            let t = k as f64 * 1e-6;
            let r = eq3_rate(gamma, t);
            if r > best_r {
                best_t = t;
                best_r = r;
            }
        }
        let x = gamma * tau / (1.0 - tau);
        let residual = (gamma / ((1.0 - tau) * (1.0 + x)) - x.ln_1p()).abs() / LN_2;
        worst_tau = worst_tau.max((tau - best_t).abs());
        worst_rate = worst_rate.max((rate - best_r).abs());
        worst_res = worst_res.max(residual);
        ensure((tau - best_t).abs() <= 1e-4, || {
            format!("gamma {gamma:.3e}: tau {tau} vs grid {best_t}")
        })?;
        ensure((rate - best_r).abs() <= 1e-8, || {
            format!("gamma {gamma:.3e}: rate {rate} vs grid {best_r}")
        })?;
        ensure(residual <= 1e-8, || {
            format!("gamma {gamma:.3e}: stationarity residual {residual:.2e}")
        })?;
    }
    Ok(format!(
        "40 gammas, max |dtau| = {worst_tau:.1e}, max |drate| = {worst_rate:.1e}, max residual = {worst_res:.1e}"
    ))
}

fn c4_monte_carlo() -> Outcome {
    let cfg = SolveConfig::default();
    let mut worst: f64 = 0.0;
    for db in [0.0, 10.0, 20.0, 30.0] {
        let params = SystemParams::from_snr_db(db, 1.0, 1.0).unwrap();
        for scheme in Scheme::ALL {
            let s = solve(scheme, &params, &cfg).map_err(|e| e.to_string())?;
            let est =
                mc_throughput(&s.policy, &params, 100_000, SEED).map_err(|e| e.to_string())?;
            let z = (est.mean - s.throughput_bits).abs() / est.std_error;
            worst = worst.max(z);
            ensure(z <= 3.0, || {
                format!(
                    "{scheme} at {db} dB: mc {} vs {} ({z:.2} SE)",
                    est.mean, s.throughput_bits
                )
            })?;
        }
    }
    Ok(format!(
        "16 optimized policies, max deviation = {worst:.2} SE"
    ))
}

fn c5_orderings() -> Outcome {
    let cfg = SolveConfig::default();
    let template = SystemParams::new(1.0, 1.0, 1.0).unwrap();
    let curve = sweep(
        SnrRange::new(0.0, 30.0, 2.0).unwrap(),
        &Scheme::ALL,
        &template,
        &cfg,
    )
    .map_err(|e| e.to_string())?;
    ensure(curve.failures() == 0, || {
        format!("{} sweep rows failed", curve.failures())
    })?;
    let series = |s| curve.series(s);
    let (htt, ip, pi, pip) = (
        series(Scheme::Htt),
        series(Scheme::Ip),
        series(Scheme::Pi),
        series(Scheme::Pip),
    );
    let n = htt.len();
    ensure(n == 16, || format!("expected 16 SNR points, got {n}"))?;
    for k in [n - 2, n - 1] {
        ensure(ip[k].1.throughput_bits >= htt[k].1.throughput_bits, || {
            format!("IP < HTT at {} dB", ip[k].0)
        })?;
    }
    for k in [0, 1] {
        ensure(pi[k].1.throughput_bits >= htt[k].1.throughput_bits, || {
            format!("PI < HTT at {} dB", pi[k].0)
        })?;
    }
    let mut worst_eps: f64 = 0.0;
    for k in 0..n {
        let eps = pip[k].1.resolution_bound.unwrap_or(0.0);
        worst_eps = worst_eps.max(eps);
        let floor = ip[k].1.throughput_bits.max(pi[k].1.throughput_bits) - eps;
        ensure(pip[k].1.throughput_bits >= floor, || {
            format!("PIP below max(IP, PI) - eps at {} dB", pip[k].0)
        })?;
    }
    let crossover = (0..n)
        .find(|&k| ip[k].1.throughput_bits >= htt[k].1.throughput_bits)
        .map(|k| ip[k].0);
    Ok(format!(
        "max PIP resolution bound {worst_eps:.1e}; IP first reaches HTT at {} dB",
        crossover.map_or("none".to_string(), |d| d.to_string())
    ))
}

fn c6_reductions() -> Outcome {
    let mut rng = SplitMix64::new(SEED + 6);
    let params = SystemParams::from_snr_db(12.0, 1.0, 1.0).unwrap();
    let (mut w_ip, mut w_pi): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let g_u = uniform(&mut rng, 0.01, 10.0);
        let g_l = uniform(&mut rng, 0.0, 10.0);
        let d_ip = (pip_throughput(0.0, g_u, &params).unwrap()
            - ip_throughput(g_u, &params).unwrap())
        .abs();
        let d_pi = (pip_throughput(g_l, 40.0, &params).unwrap()
            - pi_throughput(g_l, &params).unwrap())
        .abs();
        w_ip = w_ip.max(d_ip);
        w_pi = w_pi.max(d_pi);
        ensure(d_ip <= 1e-12, || {
            format!("pip(0, {g_u}) differs from ip by {d_ip:.2e}")
        })?;
        ensure(d_pi <= 1e-6, || {
            format!("pip({g_l}, 40) differs from pi by {d_pi:.2e}")
        })?;
    }
    Ok(format!(
        "20 thresholds, max IP gap {w_ip:.1e}, max PI gap {w_pi:.1e}"
    ))
}

fn max_second_difference<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, h: f64) -> f64 {
    let n = ((hi - lo) / h).round() as usize;
    let v: Vec<f64> = (0..=n).map(|k| f(lo + k as f64 * h)).collect();
    v.windows(3)
        .map(|w| w[2] - 2.0 * w[1] + w[0])
        .fold(f64::NEG_INFINITY, f64::max)
}

fn c7_asymptotic_shape() -> Outcome {
    let mut worst_ip = f64::NEG_INFINITY;
    let mut worst_pi = f64::NEG_INFINITY;
    // the PI first factor is positive on the whole range from about 29 dB
    for db in [30.0, 40.0, 60.0, 80.0] {
        let p = SystemParams::from_snr_db(db, 1.0, 1.0).unwrap();
        let d_ip = max_second_difference(
            |g| ip_asymptotic_throughput(g, &p).unwrap(),
            0.05,
            10.0,
            1e-3,
        );
        let d_pi = max_second_difference(
            |g| pi_asymptotic_first_factor(g, &p).unwrap().ln(),
            0.05,
            10.0,
            1e-3,
        );
        worst_ip = worst_ip.max(d_ip);
        worst_pi = worst_pi.max(d_pi);
        ensure(d_ip <= 1e-9, || {
            format!("IP second difference {d_ip:.2e} at {db} dB")
        })?;
        ensure(d_pi <= 1e-9, || {
            format!("log PI factor second difference {d_pi:.2e} at {db} dB")
        })?;
    }
    Ok(format!(
        "max second differences: IP {worst_ip:.2e}, log PI factor {worst_pi:.2e}"
    ))
}

fn c8_special_functions() -> Outcome {
    let mut worst_e1: f64 = 0.0;
    for k in 0..=200 {
        let x = 1e-3 * (50.0f64 / 1e-3).powf(k as f64 / 200.0);
        // e^x E1(x) = int_0^inf e^-u / (x + u) du
        let quad = integrate_with(|u| (-u).exp() / (x + u), 0.0, f64::INFINITY, tight())
            .map_err(|e| e.to_string())?;
        let rel = (scaled_e1(x).unwrap() - quad).abs() / quad;
        worst_e1 = worst_e1.max(rel);
        ensure(rel <= 1e-10, || format!("E1({x}) relative error {rel:.2e}"))?;
    }
    let mut worst_w: f64 = 0.0;
    let lo = -1.0 / std::f64::consts::E + 1e-9;
    let mut xs: Vec<f64> = (0..=400)
        .map(|k| lo + (0.0 - lo) * k as f64 / 400.0)
        .collect();
    xs.extend((0..=400).map(|k| 10f64.powf(-8.0 + 14.0 * k as f64 / 400.0)));
    for x in xs {
        let w = lambert_w0(x).map_err(|e| e.to_string())?;
        let res = (w * w.exp() - x).abs() / x.abs().max(1.0);
        worst_w = worst_w.max(res);
        ensure(res <= 1e-12, || format!("W0({x}) residual {res:.2e}"))?;
    }
    let passed = format!("E1 max rel err {worst_e1:.1e}, W0 max residual {worst_w:.1e}");
    for x in [1e-3, 30.0] {
        let ratio = e1_asymptotic(x).unwrap() / exp_integral_e1(x).unwrap();
        ensure((ratio - 1.0).abs() <= 0.01, || {
            format!("{passed}; asymptotic E1 ratio at x = {x} is {ratio:.4}, outside 1%")
        })?;
    }
    Ok(passed)
}

fn c9_simulation() -> Outcome {
    let params = SystemParams::from_snr_db(10.0, 1.0, 1.0).unwrap();
    let n = 100_000;
    for policy in [
        Policy::Ip { g_u: 1.6 },
        Policy::Pi { g_l: 0.9 },
        Policy::Pip { g_l: 0.3, g_u: 2.4 },
    ] {
        let closed = evaluate(&policy, &params).unwrap().throughput_bits;
        let nc = run_policy_trace_with(&policy, &params, n, SEED, false, 0.0, |_| ())
            .map_err(|e| e.to_string())?;
        let z = (nc.mean_rate_bits - closed).abs() / nc.rate_std_error;
        ensure(z <= 3.0, || {
            format!(
                "{policy:?}: trace {} vs closed form {closed} ({z:.2} SE)",
                nc.mean_rate_bits
            )
        })?;
        let c = run_policy_trace_with(&policy, &params, n, SEED, true, 0.0, |_| ())
            .map_err(|e| e.to_string())?;
        ensure(
            c.mean_rate_bits <= nc.mean_rate_bits + 3.0 * nc.rate_std_error,
            || {
                format!(
                    "{policy:?}: causal {} above non-causal {}",
                    c.mean_rate_bits, nc.mean_rate_bits
                )
            },
        )?;
    }
    let (frames, _) = run_policy_trace(&Policy::htt(), &params, n, SEED, false, 1.5)
        .map_err(|e| e.to_string())?;
    ensure(frames.iter().all(|r| r.stored_j == 1.5), || {
        "HTT stored energy drifted".to_string()
    })?;
    Ok("PHAT traces within 3 SE, causal bounded, HTT ledger flat".to_string())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "oracle equivalence", c1_oracle_equivalence, 5),
        (2, "energy balance", c2_energy_balance, 5),
        (3, "HTT closed form", c3_htt_closed_form, 10),
        (4, "Monte-Carlo reproduction", c4_monte_carlo, 30),
        (5, "throughput orderings", c5_orderings, 120),
        (6, "reduction identities", c6_reductions, 1),
        (7, "asymptotic shape", c7_asymptotic_shape, 5),
        (8, "special functions", c8_special_functions, 5),
        (9, "simulation", c9_simulation, 30),
    ];
    let mut failed = 0;
    for (id, name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(budget) => Err(format!(
                "{detail}; took {:.1}s, budget {budget}s",
                elapsed.as_secs_f64()
            )),
            other => other,
        };
        match outcome {
            Ok(detail) => println!(
                "criterion {id} ({name}): PASS [{:.2}s] {detail}",
                elapsed.as_secs_f64()
            ),
            Err(reason) => {
                failed += 1;
                println!(
                    "criterion {id} ({name}): FAIL [{:.2}s] {reason}",
                    elapsed.as_secs_f64()
                );
            }
        }
    }
    println!("{} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
