//! Closed-form probability kernels of the node-churn process.
//!
//! Storage nodes are restored to `n` at every repair broadcast and then die
//! independently at rate μ. A request lands uniformly inside the repair
//! interval, so the number of live storage nodes it sees is the time average
//! of a pure-death transient. During one D2D slot of length `t_d` every live
//! node departs independently, and the requester itself has an exponential
//! residual lifetime.

use crate::error::{invalid, ModelError, Result};
use crate::numerics::{binomial_masses, pivot_product, DoubleDouble};
use crate::params::SystemParams;

/// Tolerance on individual masses and on normalization.
pub const PMF_TOLERANCE: f64 = 1e-9;

/// Rounding slack tolerated when clamping a value into [0, 1].
pub const CLAMP_SLACK: f64 = 1e-12;

/// Clamps tiny rounding excursions into [0, 1]; anything farther out is an
/// error.
pub fn clamp_probability(value: f64, context: &'static str) -> Result<f64> {
    if (0.0..=1.0).contains(&value) {
        Ok(value)
    } else if (-CLAMP_SLACK..0.0).contains(&value) {
        Ok(0.0)
    } else if value > 1.0 && value <= 1.0 + CLAMP_SLACK {
        Ok(1.0)
    } else {
        Err(ModelError::ProbabilityOutOfRange { value, context })
    }
}

/// Probability mass function over `support_offset .. support_offset + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    support_offset: usize,
    masses: Vec<f64>,
}

impl Pmf {
    pub fn new(support_offset: usize, masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() {
            return Err(invalid("masses", "pmf needs at least one mass"));
        }
        for &m in &masses {
            if !(m.is_finite() && (-PMF_TOLERANCE..=1.0 + PMF_TOLERANCE).contains(&m)) {
                return Err(invalid("masses", format!("mass {m} outside [0, 1]")));
            }
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(invalid("masses", format!("masses sum to {total}, not 1")));
        }
        Ok(Self {
            support_offset,
            masses,
        })
    }

    /// Mass at `value`; zero outside the support.
    pub fn mass(&self, value: usize) -> f64 {
        value
            .checked_sub(self.support_offset)
            .and_then(|i| self.masses.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn support_offset(&self) -> usize {
        self.support_offset
    }

    pub fn support_max(&self) -> usize {
        self.support_offset + self.masses.len() - 1
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .map(|(i, m)| (i + self.support_offset) as f64 * m)
            .sum()
    }

    /// Σ_{v ≥ threshold} mass(v).
    pub fn upper_tail(&self, threshold: usize) -> f64 {
        (threshold.max(self.support_offset)..=self.support_max())
            .map(|v| self.mass(v))
            .sum()
    }
}

/// How the availability pmf is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AvailabilityMethod {
    /// The alternating sum of hypoexponential survivor terms, evaluated in
    /// double-double arithmetic with exact rational coefficients.
    LiteralForm,
    /// Positive-term form: h(x) = Pr{Binomial(n, e^{−μΔ}) < x} / (μΔx) for
    /// x ≥ 1, with h(0) from a convergent positive series.
    #[default]
    StableForm,
}

/// How the per-slot departure pmf is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepartureMethod {
    LiteralForm,
    #[default]
    Binomial,
}

/// Distribution of the number of live storage nodes seen by a request
/// arriving uniformly inside a repair interval.
pub fn availability_pmf(
    params: &SystemParams,
    n: usize,
    method: AvailabilityMethod,
) -> Result<Pmf> {
    if n == 0 {
        return Err(invalid("n", "block length must be at least 1"));
    }
    params.validate()?;
    let mu = params.departure_rate;
    let delta = params.repair_interval;
    let raw = match method {
        AvailabilityMethod::LiteralForm => availability_literal(n, mu, delta)?,
        AvailabilityMethod::StableForm => availability_stable(n, mu, delta),
    };
    finish_pmf(raw, "availability pmf", n, delta)
}

fn finish_pmf(raw: Vec<f64>, what: &'static str, n: usize, delta: f64) -> Result<Pmf> {
    let unstable = |detail: String| ModelError::NumericalInstability {
        what,
        n,
        delta,
        detail,
    };
    let mut masses = Vec::with_capacity(raw.len());
    for v in raw {
        if !v.is_finite() {
            return Err(unstable(format!("non-finite mass {v}")));
        }
        masses.push(clamp_probability(v, what).map_err(|e| unstable(e.to_string()))?);
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > PMF_TOLERANCE {
        return Err(unstable(format!("masses sum to {total}")));
    }
    Ok(Pmf {
        support_offset: 0,
        masses,
    })
}

fn availability_stable(n: usize, mu: f64, delta: f64) -> Vec<f64> {
    let rate_time = mu * delta;
    // survival over the whole interval: p = e^{−μΔ}, q = 1 − p
    let q = -(-rate_time).exp_m1();
    let cdf_terms = binomial_masses(n, -rate_time, q.ln());
    let mut masses = vec![0.0; n + 1];
    let mut cdf = 0.0;
    for x in 1..=n {
        cdf += cdf_terms[x - 1];
        masses[x] = cdf / (rate_time * x as f64);
    }
    masses[0] = time_average_all_dead(n, q, rate_time) / rate_time;
    masses
}

/// μ·∫₀^Δ (1 − e^{−μt})^n dt = −ln(1−q) − Σ_{m=1}^{n} q^m/m = Σ_{m>n} q^m/m.
fn time_average_all_dead(n: usize, q: f64, rate_time: f64) -> f64 {
    if q < 0.95 {
        let mut term_pow = q.powi(n as i32);
        let mut acc = 0.0;
        let mut m = n + 1;
        loop {
            term_pow *= q;
            let term = term_pow / m as f64;
            acc += term;
            if term <= acc * 1e-18 || term == 0.0 {
                break;
            }
            m += 1;
        }
        acc
    } else {
        let mut pow = 1.0;
        let mut head = 0.0;
        for m in 1..=n {
            pow *= q;
            head += pow / m as f64;
        }
        (rate_time - head).max(0.0)
    }
}

/// Σ_{i=lo}^{hi} term(i)·Π_{j=lo..=hi, j≠i} j/(j−i) for every `lo` in
/// `0..=hi+1` (the last entry is the empty sum).
fn survivor_sums(hi: usize, term: impl Fn(usize) -> DoubleDouble) -> Option<Vec<DoubleDouble>> {
    let terms: Vec<DoubleDouble> = (0..=hi).map(&term).collect();
    let mut sums = Vec::with_capacity(hi + 2);
    for lo in 0..=hi {
        let mut acc = DoubleDouble::ZERO;
        for (i, t) in terms.iter().enumerate().skip(lo) {
            acc = acc + *t * pivot_product(lo, hi, i)?;
        }
        sums.push(acc);
    }
    sums.push(DoubleDouble::ZERO);
    Some(sums)
}

fn availability_literal(n: usize, mu: f64, delta: f64) -> Result<Vec<f64>> {
    let p1 = DoubleDouble::from_f64((-mu * delta).exp());
    let mu_dd = DoubleDouble::from_f64(mu);
    let delta_dd = DoubleDouble::from_f64(delta);
    // (1 − p_i)/μ_i, with the i = 0 limit equal to Δ
    let sums = survivor_sums(n, |i| {
        if i == 0 {
            delta_dd
        } else {
            (DoubleDouble::ONE - p1.powi(i as u32)) / (DoubleDouble::from_f64(i as f64) * mu_dd)
        }
    })
    .ok_or_else(|| ModelError::NumericalInstability {
        what: "availability pmf (literal form)",
        n,
        delta,
        detail: "exact product coefficients overflow".into(),
    })?;
    Ok((0..=n)
        .map(|x| ((sums[x] - sums[x + 1]) / delta_dd).to_f64())
        .collect())
}

/// Distribution of the number of departures among `x` live storage nodes
/// during one slot of length `t_d`.
pub fn departures_pmf(x: usize, mu: f64, t_d: f64) -> Result<Pmf> {
    departures_pmf_with(x, mu, t_d, DepartureMethod::Binomial)
}

pub fn departures_pmf_with(x: usize, mu: f64, t_d: f64, method: DepartureMethod) -> Result<Pmf> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(invalid("departure_rate", format!("must be > 0, got {mu}")));
    }
    if !(t_d.is_finite() && t_d > 0.0) {
        return Err(invalid(
            "d2d_symbol_time",
            format!("must be > 0, got {t_d}"),
        ));
    }
    let rate_time = mu * t_d;
    let raw = match method {
        DepartureMethod::Binomial => {
            let q = -(-rate_time).exp_m1();
            binomial_masses(x, q.ln(), -rate_time)
        }
        DepartureMethod::LiteralForm => {
            let stay = DoubleDouble::from_f64((-rate_time).exp());
            let sums = survivor_sums(x, |i| stay.powi(i as u32)).ok_or_else(|| {
                ModelError::NumericalInstability {
                    what: "departure pmf (literal form)",
                    n: x,
                    delta: t_d,
                    detail: "exact product coefficients overflow".into(),
                }
            })?;
            (0..=x)
                .map(|f| (sums[x - f] - sums[x - f + 1]).to_f64())
                .collect()
        }
    };
    finish_pmf(raw, "departure pmf", x, t_d)
}

/// Probability the requester is still in the cell `i` slots after the start
/// of its download: e^{−iμt_d}.
pub fn requester_survival(i: usize, mu: f64, t_d: f64) -> f64 {
    (-(i as f64) * mu * t_d).exp()
}

/// Probability the requester leaves during slot `i` (1-based).
pub fn requester_departure_window(i: usize, mu: f64, t_d: f64) -> Result<f64> {
    if i == 0 {
        return Err(ModelError::IndexOutOfRange {
            what: "departure window",
            index: 0,
            min: 1,
            max: usize::MAX,
        });
    }
    Ok(requester_survival(i - 1, mu, t_d) * -(-mu * t_d).exp_m1())
}
