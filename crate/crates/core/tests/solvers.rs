use phat_core::channel::SplitMix64;
use phat_core::optimize::{solve_ip, solve_pi, SolveConfig};
use phat_core::schemes::{ip_throughput, pi_throughput, Policy, SystemParams};

fn grid_best<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n)
        .map(|k| lo + k as f64 * step)
        .map(|x| (x, f(x)))
        .fold(
            (lo, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        )
}

#[test]
fn scalar_solvers_match_fine_grid_on_random_draws() {
    let cfg = SolveConfig::default();
    let mut rng = SplitMix64::new(2024);
    for _ in 0..20 {
        let db = -5.0 + 40.0 * rng.next_uniform();
        let gbar = 0.2 + 2.0 * rng.next_uniform();
        let sigma2 = 0.1 + 3.0 * rng.next_uniform();
        let p = SystemParams::from_snr_db(db, gbar, sigma2).unwrap();

        let ip = solve_ip(&p, &cfg).unwrap();
        let Policy::Ip { g_u } = ip.policy else {
            unreachable!()
        };
        let (gx, gv) = grid_best(|x| ip_throughput(x, &p).unwrap(), 1e-4, 10.0, 1e-4);
        assert!((g_u - gx).abs() <= 1e-3, "ip at {db} dB: {g_u} vs {gx}");
        assert!((ip.throughput_bits - gv).abs() <= 1e-6);

        let pi = solve_pi(&p, &cfg).unwrap();
        let Policy::Pi { g_l } = pi.policy else {
            unreachable!()
        };
        let (gx, gv) = grid_best(|x| pi_throughput(x, &p).unwrap(), 0.0, 10.0, 1e-4);
        assert!((g_l - gx).abs() <= 1e-3, "pi at {db} dB: {g_l} vs {gx}");
        assert!((pi.throughput_bits - gv).abs() <= 1e-6);
    }
}
