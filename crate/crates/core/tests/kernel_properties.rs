use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use mds_d2d::harness::config::log_grid;
use mds_d2d::kernels::{
    availability_pmf, departures_pmf, departures_pmf_with, requester_departure_window,
    requester_survival, AvailabilityMethod, DepartureMethod,
};
use mds_d2d::oracles::{availability_quadrature, QuadratureSpec};
use mds_d2d::SystemParams;

fn params(mu: f64, delta: f64) -> SystemParams {
    SystemParams::new(30.0, mu, 0.02, 0.01, 0.1, delta).unwrap()
}

fn stable(mu: f64, delta: f64, n: usize) -> Vec<f64> {
    availability_pmf(&params(mu, delta), n, AvailabilityMethod::StableForm)
        .unwrap()
        .masses()
        .to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn availability_normalizes(n in 1usize..=25, log_delta in -3.0f64..2.0, mu in 0.1f64..5.0) {
        let delta = 10f64.powf(log_delta);
        for method in [AvailabilityMethod::StableForm, AvailabilityMethod::LiteralForm] {
            let h = availability_pmf(&params(mu, delta), n, method).unwrap();
            prop_assert!((h.total() - 1.0).abs() <= 1e-9);
            prop_assert!(h.masses().iter().all(|&m| (0.0..=1.0).contains(&m)));
        }
    }

    #[test]
    fn availability_forms_agree(n in 1usize..=25, log_delta in -3.0f64..2.0, mu in 0.1f64..5.0) {
        let delta = 10f64.powf(log_delta);
        let a = stable(mu, delta, n);
        let b = availability_pmf(&params(mu, delta), n, AvailabilityMethod::LiteralForm).unwrap();
        for (x, &m) in a.iter().enumerate() {
            prop_assert!((m - b.mass(x)).abs() <= 1e-8, "x={} {} vs {}", x, m, b.mass(x));
        }
    }

    #[test]
    fn departures_match_binomial(x in 0usize..=25, log_td in -3.0f64..2.0, mu in 0.1f64..5.0) {
        let t_d = 10f64.powf(log_td);
        let g = departures_pmf(x, mu, t_d).unwrap();
        let literal = departures_pmf_with(x, mu, t_d, DepartureMethod::LiteralForm).unwrap();
        let leave = 1.0 - (-mu * t_d).exp();
        let mut choose = 1.0f64;
        for f in 0..=x {
            let expected = choose * leave.powi(f as i32) * (-mu * (x - f) as f64 * t_d).exp();
            prop_assert!((g.mass(f) - expected).abs() <= 1e-12);
            prop_assert!((literal.mass(f) - expected).abs() <= 1e-12);
            choose = choose * (x - f) as f64 / (f + 1) as f64;
        }
        prop_assert!((g.total() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn larger_interval_means_fewer_live_nodes(n in 1usize..=20, log_d1 in -3.0f64..1.9, factor in 1.01f64..20.0) {
        let d1 = 10f64.powf(log_d1);
        let lo = availability_pmf(&params(1.0, d1), n, AvailabilityMethod::StableForm).unwrap();
        let hi = availability_pmf(&params(1.0, d1 * factor), n, AvailabilityMethod::StableForm).unwrap();
        for x0 in 0..=n {
            prop_assert!(lo.upper_tail(x0) + 1e-12 >= hi.upper_tail(x0), "x0={}", x0);
        }
    }
}

#[test]
fn monotone_on_fixed_grid() {
    let grid = log_grid(1e-3, 1e2, 30);
    for n in [1, 4, 8, 15, 25] {
        for w in grid.windows(2) {
            let a =
                availability_pmf(&params(1.0, w[0]), n, AvailabilityMethod::StableForm).unwrap();
            let b =
                availability_pmf(&params(1.0, w[1]), n, AvailabilityMethod::StableForm).unwrap();
            for x0 in 0..=n {
                assert!(
                    a.upper_tail(x0) + 1e-12 >= b.upper_tail(x0),
                    "n={n} x0={x0} delta={}",
                    w[0]
                );
            }
        }
    }
}

#[test]
fn interval_limits() {
    for n in [1, 2, 4, 8, 16, 25] {
        let short = stable(1.0, 1e-4, n);
        let long = stable(1.0, 1e4, n);
        assert!((short[n] - 1.0).abs() <= 1e-2, "n={n}: h(n)={}", short[n]);
        assert!((long[0] - 1.0).abs() <= 1e-2, "n={n}: h(0)={}", long[0]);
    }
}

#[test]
fn reference_values() {
    let h = stable(1.0, 1.0, 2);
    assert_abs_diff_eq!(h[2], (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-12);
    assert!(stable(1.0, 1e-3, 4)[4] >= 0.996);

    let g = departures_pmf(3, 1.0, 0.1).unwrap();
    assert_abs_diff_eq!(g.mass(0), (-0.3f64).exp(), epsilon = 1e-15);
    assert_abs_diff_eq!(g.mass(1), 0.2337376, epsilon = 5e-8);
    assert_eq!(departures_pmf(0, 1.0, 0.1).unwrap().masses(), &[1.0]);
}

#[test]
fn quadrature_agreement_small_n() {
    for mu in [0.3, 1.0, 3.0] {
        for delta in [0.01, 0.5, 2.0, 40.0] {
            for n in [1, 3, 7, 15] {
                let q =
                    availability_quadrature(n, mu, delta, QuadratureSpec::resolving(n, mu, delta))
                        .unwrap();
                let h = stable(mu, delta, n);
                for (x, &m) in h.iter().enumerate() {
                    assert!(
                        (m - q.mass(x)).abs() <= 1e-7,
                        "n={n} x={x} mu={mu} delta={delta}"
                    );
                }
            }
        }
    }
}

#[test]
fn survival_windows_partition() {
    for t_d in [1e-3, 0.01, 0.1, 1.0] {
        let mut acc = 0.0;
        for i in 1..=100 {
            acc += requester_departure_window(i, 1.0, t_d).unwrap();
            let total = acc + requester_survival(i, 1.0, t_d);
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-13);
            let split =
                requester_survival(i, 1.0, t_d) + requester_departure_window(i, 1.0, t_d).unwrap();
            assert_abs_diff_eq!(split, requester_survival(i - 1, 1.0, t_d), epsilon = 1e-15);
        }
    }
    assert_eq!(requester_survival(0, 1.0, 0.1), 1.0);
    assert_abs_diff_eq!(requester_survival(5, 1.0, 0.1), 0.606531, epsilon = 1e-6);
    assert_abs_diff_eq!(
        requester_departure_window(2, 1.0, 0.01).unwrap(),
        0.00985116,
        epsilon = 1e-8
    );
    assert!(requester_departure_window(0, 1.0, 0.01).is_err());
}
