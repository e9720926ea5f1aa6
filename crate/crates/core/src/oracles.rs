//! Independent reference computations for the test suite.
//!
//! Nothing here calls into `kernels`, `delay_model` or `numerics`: each
//! oracle recomputes its quantity from first principles (numerical
//! quadrature, direct binomial evaluation, path enumeration).

use crate::delay_model::OutcomeDistribution;
use crate::error::{invalid, ModelError, Result};
use crate::kernels::Pmf;
use crate::params::{CodeParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    subintervals: usize,
    rule: QuadratureRule,
}

impl QuadratureSpec {
    pub fn simpson(subintervals: usize) -> Result<Self> {
        if subintervals < 16 || !subintervals.is_multiple_of(2) {
            return Err(invalid(
                "subintervals",
                format!("need an even count >= 16, got {subintervals}"),
            ));
        }
        Ok(Self {
            subintervals,
            rule: QuadratureRule::Simpson,
        })
    }

    /// Enough Simpson panels that step·n·μ stays below 1/64, the regime
    /// where the composite error of the death-process integrand is far
    /// below 1e-9.
    pub fn resolving(n: usize, mu: f64, delta: f64) -> Self {
        let needed = (64.0 * n.max(1) as f64 * mu * delta).ceil() as usize;
        let even = needed.max(1024).div_ceil(2) * 2;
        Self {
            subintervals: even,
            rule: QuadratureRule::Simpson,
        }
    }

    pub fn subintervals(&self) -> usize {
        self.subintervals
    }

    pub fn doubled(&self) -> Self {
        Self {
            subintervals: self.subintervals * 2,
            rule: self.rule,
        }
    }
}

fn choose(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Time average over [0, Δ] of the Binomial(n, e^{−μt}) law of surviving
/// storage nodes, by composite Simpson quadrature.
pub fn availability_quadrature(n: usize, mu: f64, delta: f64, spec: QuadratureSpec) -> Result<Pmf> {
    if n == 0 {
        return Err(invalid("n", "block length must be at least 1"));
    }
    let QuadratureRule::Simpson = spec.rule;
    let panels = spec.subintervals;
    let step = delta / panels as f64;
    let coeffs: Vec<f64> = (0..=n).map(|x| choose(n, x)).collect();
    let mut acc = vec![0.0; n + 1];
    for i in 0..=panels {
        let weight = if i == 0 || i == panels {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let alive = (-mu * step * i as f64).exp();
        let dead = 1.0 - alive;
        for (x, slot) in acc.iter_mut().enumerate() {
            *slot += weight * coeffs[x] * alive.powi(x as i32) * dead.powi((n - x) as i32);
        }
    }
    let masses = acc.into_iter().map(|v| v * step / 3.0 / delta).collect();
    Pmf::new(0, masses)
}

/// Binomial(x, 1 − e^{−μt_d}) evaluated term by term.
pub fn departures_binomial(x: usize, mu: f64, t_d: f64) -> Result<Pmf> {
    let leave = 1.0 - (-mu * t_d).exp();
    let masses = (0..=x)
        .map(|f| choose(x, f) * leave.powi(f as i32) * (1.0 - leave).powi((x - f) as i32))
        .collect();
    Pmf::new(0, masses)
}

pub const EXHAUSTIVE_MAX_N: usize = 3;
pub const EXHAUSTIVE_MAX_K: usize = 2;

/// Law-of-total-probability enumeration of every attempt path for tiny
/// codes: requester departure window, initial live-node count, the exact
/// subset of nodes leaving in each slot and the node chosen.
pub fn exhaustive_outcome_small(
    params: &SystemParams,
    code: &CodeParams,
) -> Result<OutcomeDistribution> {
    if code.n > EXHAUSTIVE_MAX_N || code.k > EXHAUSTIVE_MAX_K {
        return Err(ModelError::InstanceTooLarge(format!(
            "code {code} exceeds n <= {EXHAUSTIVE_MAX_N}, k <= {EXHAUSTIVE_MAX_K}"
        )));
    }
    let mu = params.departure_rate;
    let t_d = params.d2d_symbol_time;
    let h = availability_expansion(code.n, mu, params.repair_interval);
    let stay = (-mu * t_d).exp();
    let leave = 1.0 - stay;

    let mut outcome = vec![0.0; code.k + 1];
    // window w in 1..=k: requester leaves during slot w; w = k + 1: it
    // outlives the whole download
    for w in 1..=code.k + 1 {
        let p_window = if w <= code.k {
            stay.powi(w as i32 - 1) * leave
        } else {
            stay.powi(code.k as i32)
        };
        for (x, hx) in h.iter().enumerate() {
            walk(
                &Walk {
                    k: code.k,
                    window: w,
                    leave,
                },
                1,
                x,
                0,
                p_window * hx,
                &mut outcome,
            );
        }
    }
    Ok(OutcomeDistribution::from_symbol_masses(&outcome))
}

struct Walk {
    k: usize,
    window: usize,
    leave: f64,
}

fn walk(cfg: &Walk, slot: usize, available: usize, collected: usize, prob: f64, out: &mut [f64]) {
    if collected == cfg.k || slot == cfg.window || available == 0 {
        out[collected] += prob;
        return;
    }
    for subset in 0u32..(1 << available) {
        let leaving = subset.count_ones() as usize;
        let p_subset =
            cfg.leave.powi(leaving as i32) * (1.0 - cfg.leave).powi((available - leaving) as i32);
        for chosen in 0..available {
            let p = prob * p_subset / available as f64;
            if subset & (1 << chosen) != 0 {
                out[collected] += p;
            } else {
                walk(
                    cfg,
                    slot + 1,
                    available - leaving - 1,
                    collected + 1,
                    p,
                    out,
                );
            }
        }
    }
}

/// h(x) = C(n,x) Σ_m C(n−x,m)(−1)^m (1 − e^{−(x+m)μΔ})/((x+m)μΔ), the
/// binomial expansion of the time-averaged death-process law integrated
/// term by term. Only used for n ≤ 3 where cancellation is harmless.
fn availability_expansion(n: usize, mu: f64, delta: f64) -> Vec<f64> {
    let average_decay = |c: usize| {
        if c == 0 {
            1.0
        } else {
            let r = c as f64 * mu * delta;
            (1.0 - (-r).exp()) / r
        }
    };
    (0..=n)
        .map(|x| {
            let mut acc = 0.0;
            for m in 0..=(n - x) {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * choose(n - x, m) * average_decay(x + m);
            }
            choose(n, x) * acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn spec_validation() {
        assert!(QuadratureSpec::simpson(8).is_err());
        assert!(QuadratureSpec::simpson(17).is_err());
        assert!(QuadratureSpec::simpson(16).is_ok());
        assert_eq!(
            QuadratureSpec::resolving(15, 1.0, 100.0).subintervals() % 2,
            0
        );
    }

    #[test]
    fn quadrature_matches_single_term() {
        let h =
            availability_quadrature(2, 1.0, 1.0, QuadratureSpec::simpson(1024).unwrap()).unwrap();
        assert_abs_diff_eq!(h.mass(2), (1.0 - (-2.0f64).exp()) / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(h.total(), 1.0, epsilon = 1e-9);
    }

    #[test]
    fn quadrature_self_consistency() {
        for (n, mu, delta) in [(3, 1.0, 0.5), (10, 1.0, 5.0), (15, 2.0, 20.0)] {
            let spec = QuadratureSpec::resolving(n, mu, delta);
            let a = availability_quadrature(n, mu, delta, spec).unwrap();
            let b = availability_quadrature(n, mu, delta, spec.doubled()).unwrap();
            for x in 0..=n {
                assert_abs_diff_eq!(a.mass(x), b.mass(x), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn binomial_reference_values() {
        let g = departures_binomial(3, 1.0, 0.1).unwrap();
        let expected = [0.740818, 0.2337376, 0.0245824, 0.000861784];
        for (f, e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(g.mass(f), *e, epsilon = 1e-6);
        }
        assert_eq!(departures_binomial(0, 1.0, 0.1).unwrap().masses(), &[1.0]);
        assert_abs_diff_eq!(g.total(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn expansion_matches_quadrature() {
        let e = availability_expansion(3, 1.3, 0.8);
        let q =
            availability_quadrature(3, 1.3, 0.8, QuadratureSpec::simpson(4096).unwrap()).unwrap();
        for (x, &m) in e.iter().enumerate() {
            assert_abs_diff_eq!(m, q.mass(x), epsilon = 1e-12);
        }
    }

    #[test]
    fn uncoded_enumeration_closed_form() {
        let p = SystemParams::reference(0.05, 0.5, 1.0).unwrap();
        let code = CodeParams::new(1, 1).unwrap();
        let o = exhaustive_outcome_small(&p, &code).unwrap();
        let h = availability_expansion(1, 1.0, 1.0);
        let a1 = (-0.05f64).exp();
        let b1 = 1.0 - a1;
        assert_abs_diff_eq!(
            o.p_fail_first,
            b1 + a1 * h[0] + a1 * h[1] * b1,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(o.p_full, a1 * h[1] * a1, epsilon = 1e-15);
        assert!(o.p_partial.is_empty());
    }

    #[test]
    fn enumeration_partitions_and_rejects_large() {
        let p = SystemParams::reference(0.05, 0.5, 0.5).unwrap();
        let o = exhaustive_outcome_small(&p, &CodeParams::new(3, 2).unwrap()).unwrap();
        assert_abs_diff_eq!(o.total(), 1.0, epsilon = 1e-14);
        assert!(matches!(
            exhaustive_outcome_small(&p, &CodeParams::new(4, 2).unwrap()),
            Err(ModelError::InstanceTooLarge(_))
        ));
    }
}
