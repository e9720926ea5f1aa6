//! Analytical download-delay pipeline.
//!
//! A request that finds the DS network idle walks the storage list serially:
//! one slot of `t_d` per attempt, success when both the requester and the
//! chosen node survive the slot. `GammaTable` holds the joint law of the
//! available-node count and the in-slot departure count at each attempt,
//! restricted to paths where every earlier attempt succeeded. Everything
//! else (outcome probabilities, expected D2D symbols, occupancy, idle
//! probability, mean delay) follows from it.

use crate::error::{ModelError, Result};
use crate::kernels::{
    availability_pmf, clamp_probability, departures_pmf, requester_departure_window,
    requester_survival, AvailabilityMethod, Pmf,
};
use crate::params::{CodeParams, SystemParams};

/// Largest outcome deficit folded back into `p_fail_first`.
pub const PARTITION_TOLERANCE: f64 = 1e-8;

/// Requester-survival factor applied at each attempt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurvivalAccounting {
    /// Conditional one-slot survival e^{−μt_d} per attempt, so reaching
    /// attempt j carries e^{−(j−1)μt_d} in total. Matches the serial attempt
    /// process exactly.
    #[default]
    PerSlot,
    /// Unconditional survival a_{j−1} at step j, a_k for the final attempt
    /// and a_{j+1} for a partial stop, multiplied along the recursion.
    /// Still partitions unity but over-penalizes long downloads when k ≥ 2.
    Cumulative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModelOptions {
    pub availability: AvailabilityMethod,
    pub survival: SurvivalAccounting,
}

/// γ_j(x, f) for j = 1..=k, x, f = 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    k: usize,
    n: usize,
    entries: Vec<f64>,
    survival: SurvivalAccounting,
    mu_td: f64,
}

impl GammaTable {
    fn index(&self, j: usize, x: usize, f: usize) -> usize {
        ((j - 1) * (self.n + 1) + x) * (self.n + 1) + f
    }

    /// γ_j(x, f); zero outside the table or for f > x.
    pub fn get(&self, j: usize, x: usize, f: usize) -> f64 {
        if j == 0 || j > self.k || x > self.n || f > x {
            return 0.0;
        }
        self.entries[self.index(j, x, f)]
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.k, self.n)
    }

    pub fn survival(&self) -> SurvivalAccounting {
        self.survival
    }

    /// Σ_{x,f} γ_j(x, f): probability of reaching attempt j.
    pub fn layer_mass(&self, j: usize) -> f64 {
        (0..=self.n)
            .flat_map(|x| (0..=x).map(move |f| (x, f)))
            .map(|(x, f)| self.get(j, x, f))
            .sum()
    }

    /// Σ_{x≥1,f} ((x−f)/x)·γ_j(x, f): the chosen node survives attempt j.
    fn node_success_mass(&self, j: usize) -> f64 {
        let mut acc = 0.0;
        for x in 1..=self.n {
            for f in 0..=x {
                acc += (x - f) as f64 / x as f64 * self.get(j, x, f);
            }
        }
        acc
    }

    fn survival_factor(&self, attempt: usize) -> f64 {
        match self.survival {
            SurvivalAccounting::PerSlot => (-self.mu_td).exp(),
            SurvivalAccounting::Cumulative => (-(attempt as f64) * self.mu_td).exp(),
        }
    }
}

/// Builds the γ table with default options.
pub fn gamma_table(params: &SystemParams, code: &CodeParams) -> Result<GammaTable> {
    gamma_table_with(params, code, &ModelOptions::default())
}

pub fn gamma_table_with(
    params: &SystemParams,
    code: &CodeParams,
    options: &ModelOptions,
) -> Result<GammaTable> {
    let h = availability_pmf(params, code.n, options.availability)?;
    let g = departure_table(params, code.n)?;
    Ok(build_gamma(&h, &g, params, code, options.survival))
}

fn departure_table(params: &SystemParams, n: usize) -> Result<Vec<Pmf>> {
    (0..=n)
        .map(|x| departures_pmf(x, params.departure_rate, params.d2d_symbol_time))
        .collect()
}

fn build_gamma(
    h: &Pmf,
    g: &[Pmf],
    params: &SystemParams,
    code: &CodeParams,
    survival: SurvivalAccounting,
) -> GammaTable {
    let (n, k) = (code.n, code.k);
    let mut table = GammaTable {
        k,
        n,
        entries: vec![0.0; k * (n + 1) * (n + 1)],
        survival,
        mu_td: params.departure_rate * params.d2d_symbol_time,
    };
    for (x, gx) in g.iter().enumerate() {
        for f in 0..=x {
            let i = table.index(1, x, f);
            table.entries[i] = h.mass(x) * gx.mass(f);
        }
    }
    for j in 2..=k {
        let carry = table.survival_factor(j - 1);
        // after a success at attempt j−1 with x' available and f' leaving,
        // x = x' − f' − 1 remain, so x' = x + f' + 1
        for (x, gx) in g.iter().enumerate().take(n) {
            let mut reach = 0.0;
            for f_prev in 0..=(n - x - 1) {
                let x_prev = x + f_prev + 1;
                reach +=
                    (x_prev - f_prev) as f64 / x_prev as f64 * table.get(j - 1, x_prev, f_prev);
            }
            let reach = carry * reach;
            for f in 0..=x {
                let i = table.index(j, x, f);
                table.entries[i] = gx.mass(f) * reach;
            }
        }
    }
    table
}

/// Pr{S₁ = 0}: the first attempt fails.
pub fn p_fail_first(params: &SystemParams, code: &CodeParams) -> Result<f64> {
    let h = availability_pmf(params, code.n, AvailabilityMethod::default())?;
    let g = departure_table(params, code.n)?;
    Ok(fail_first_from(&h, &g, params))
}

fn fail_first_from(h: &Pmf, g: &[Pmf], params: &SystemParams) -> f64 {
    let (mu, t_d) = (params.departure_rate, params.d2d_symbol_time);
    let a1 = requester_survival(1, mu, t_d);
    let b1 = requester_departure_window(1, mu, t_d).expect("window 1 exists");
    let mut node_fail = 0.0;
    for (x, gx) in g.iter().enumerate().skip(1) {
        for f in 0..=x {
            node_fail += f as f64 / x as f64 * h.mass(x) * gx.mass(f);
        }
    }
    b1 + a1 * h.mass(0) + a1 * node_fail
}

/// Pr{all k symbols via D2D}.
pub fn p_full(gamma: &GammaTable, params: &SystemParams, code: &CodeParams) -> f64 {
    debug_assert_eq!(gamma.dimensions(), (code.k, code.n));
    debug_assert_eq!(gamma.mu_td, params.departure_rate * params.d2d_symbol_time);
    gamma.survival_factor(code.k) * gamma.node_success_mass(code.k)
}

/// Pr{exactly j symbols via D2D, then a failed attempt}, 1 ≤ j ≤ k−1.
pub fn p_partial(
    j: usize,
    gamma: &GammaTable,
    params: &SystemParams,
    code: &CodeParams,
) -> Result<f64> {
    if j == 0 || j >= code.k {
        return Err(ModelError::IndexOutOfRange {
            what: "partial download length",
            index: j,
            min: 1,
            max: code.k.saturating_sub(1),
        });
    }
    debug_assert_eq!(gamma.mu_td, params.departure_rate * params.d2d_symbol_time);
    let next = j + 1;
    let survive = gamma.survival_factor(next);
    let mut acc = gamma.get(next, 0, 0);
    for x in 1..=code.n {
        for f in 0..=x {
            acc += (1.0 - (x - f) as f64 / x as f64 * survive) * gamma.get(next, x, f);
        }
    }
    Ok(acc)
}

/// Probabilities of the three kinds of D2D outcome for a request that found
/// the network idle.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub p_fail_first: f64,
    /// Index `j − 1` holds Pr{exactly j symbols}, j = 1..k−1.
    pub p_partial: Vec<f64>,
    pub p_full: f64,
}

impl OutcomeDistribution {
    pub fn k(&self) -> usize {
        self.p_partial.len() + 1
    }

    pub fn total(&self) -> f64 {
        self.p_fail_first + self.p_partial.iter().sum::<f64>() + self.p_full
    }

    /// Probability of ending with exactly `symbols` D2D symbols, 0..=k.
    pub fn by_symbols(&self, symbols: usize) -> f64 {
        let k = self.k();
        match symbols {
            0 => self.p_fail_first,
            s if s == k => self.p_full,
            s if s < k => self.p_partial[s - 1],
            _ => 0.0,
        }
    }

    /// All outcome probabilities ordered by symbol count.
    pub fn as_vec(&self) -> Vec<f64> {
        (0..=self.k()).map(|s| self.by_symbols(s)).collect()
    }

    /// Outcome probabilities from per-symbol-count masses 0..=k.
    pub fn from_symbol_masses(masses: &[f64]) -> Self {
        assert!(masses.len() >= 2, "need at least fail and full masses");
        let k = masses.len() - 1;
        Self {
            p_fail_first: masses[0],
            p_partial: masses[1..k].to_vec(),
            p_full: masses[k],
        }
    }

    /// Folds a rounding-level deficit into `p_fail_first`; larger deficits
    /// are a model inconsistency.
    pub fn renormalized(mut self) -> Result<Self> {
        let deficit = 1.0 - self.total();
        if !deficit.is_finite() || deficit.abs() > PARTITION_TOLERANCE {
            return Err(ModelError::ModelInconsistency { deficit });
        }
        self.p_fail_first = (self.p_fail_first + deficit).max(0.0);
        Ok(self)
    }
}

pub fn outcome_distribution(
    params: &SystemParams,
    code: &CodeParams,
) -> Result<OutcomeDistribution> {
    outcome_distribution_with(params, code, &ModelOptions::default())
}

pub fn outcome_distribution_with(
    params: &SystemParams,
    code: &CodeParams,
    options: &ModelOptions,
) -> Result<OutcomeDistribution> {
    let h = availability_pmf(params, code.n, options.availability)?;
    let g = departure_table(params, code.n)?;
    let gamma = build_gamma(&h, &g, params, code, options.survival);
    let p_fail_first = clamp_probability(fail_first_from(&h, &g, params), "p_fail_first")?;
    let p_partial = (1..code.k)
        .map(|j| clamp_probability(p_partial(j, &gamma, params, code)?, "p_partial"))
        .collect::<Result<Vec<_>>>()?;
    let p_full = clamp_probability(p_full(&gamma, params, code), "p_full")?;
    OutcomeDistribution {
        p_fail_first,
        p_partial,
        p_full,
    }
    .renormalized()
}

/// Expected number of D2D symbols per D2D-served request.
pub fn eta(outcome: &OutcomeDistribution, code: &CodeParams) -> f64 {
    debug_assert_eq!(outcome.k(), code.k);
    code.k as f64 * outcome.p_full
        + outcome
            .p_partial
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum::<f64>()
}

/// Expected DS-network occupancy of a D2D-served request: one slot per
/// symbol plus one wasted slot unless the download completes.
pub fn t_eta(outcome: &OutcomeDistribution, code: &CodeParams, t_d: f64) -> f64 {
    t_d * (eta(outcome, code) + outcome.p_fail_first + outcome.p_partial.iter().sum::<f64>())
}

/// Approximate idle probability 1/(1 + ωM·T̄_η).
pub fn p_idle(params: &SystemParams, t_eta: f64) -> f64 {
    1.0 / (1.0 + params.cell_request_rate() * t_eta)
}

/// Where the idle probability in a summary came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdleForm {
    /// The single-predecessor, first-order closed form.
    Approximate,
    /// Supplied by the caller.
    Forced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelaySummary {
    pub eta: f64,
    pub t_eta: f64,
    pub p_idle: f64,
    pub idle_form: IdleForm,
    pub t_dw: f64,
    pub t_ref: f64,
    pub gain: f64,
    pub outcome: OutcomeDistribution,
}

pub fn avg_download_delay(params: &SystemParams, code: &CodeParams) -> Result<DelaySummary> {
    avg_download_delay_with(params, code, &ModelOptions::default())
}

pub fn avg_download_delay_with(
    params: &SystemParams,
    code: &CodeParams,
    options: &ModelOptions,
) -> Result<DelaySummary> {
    let outcome = outcome_distribution_with(params, code, options)?;
    let occupancy = t_eta(&outcome, code, params.d2d_symbol_time);
    let idle = p_idle(params, occupancy);
    Ok(summarize(
        outcome,
        params,
        code,
        idle,
        IdleForm::Approximate,
    ))
}

/// Assembles a summary for a given idle probability.
pub fn summarize(
    outcome: OutcomeDistribution,
    params: &SystemParams,
    code: &CodeParams,
    p_idle: f64,
    idle_form: IdleForm,
) -> DelaySummary {
    let k = code.k as f64;
    let t_bs = params.bs_symbol_time;
    let symbols = eta(&outcome, code);
    let occupancy = t_eta(&outcome, code, params.d2d_symbol_time);
    let t_dw = p_idle * (occupancy + (k - symbols) * t_bs) + (1.0 - p_idle) * k * t_bs;
    let t_ref = k * t_bs;
    DelaySummary {
        eta: symbols,
        t_eta: occupancy,
        p_idle,
        idle_form,
        t_dw,
        t_ref,
        gain: t_ref / t_dw,
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::departures_pmf;
    use approx::assert_abs_diff_eq;

    fn reference(delta: f64, t_d: f64) -> SystemParams {
        SystemParams::reference(t_d, 0.5, delta).unwrap()
    }

    #[test]
    fn first_layer_is_initial_condition() {
        let p = reference(1.0, 0.05);
        let code = CodeParams::new(4, 2).unwrap();
        let gamma = gamma_table(&p, &code).unwrap();
        let h = availability_pmf(&p, 4, AvailabilityMethod::StableForm).unwrap();
        for x in 0..=4 {
            let g = departures_pmf(x, 1.0, 0.05).unwrap();
            for f in 0..=4 {
                assert_eq!(gamma.get(1, x, f), h.mass(x) * g.mass(f));
            }
        }
        assert_eq!(gamma.get(1, 2, 3), 0.0);
    }

    #[test]
    fn single_node_expansion() {
        let p = reference(0.7, 0.05);
        let code = CodeParams::new(1, 1).unwrap();
        let gamma = gamma_table(&p, &code).unwrap();
        let h = availability_pmf(&p, 1, AvailabilityMethod::StableForm).unwrap();
        let stay = (-0.05f64).exp();
        assert_abs_diff_eq!(gamma.get(1, 1, 0), h.mass(1) * stay, epsilon = 1e-15);
        assert_abs_diff_eq!(
            gamma.get(1, 1, 1),
            h.mass(1) * (1.0 - stay),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(gamma.get(1, 0, 0), h.mass(0), epsilon = 1e-15);

        let fail = p_fail_first(&p, &code).unwrap();
        let expected_fail = (1.0 - stay) + stay * h.mass(0) + stay * h.mass(1) * (1.0 - stay);
        assert_abs_diff_eq!(fail, expected_fail, epsilon = 1e-14);
        assert_abs_diff_eq!(
            p_full(&gamma, &p, &code),
            stay * h.mass(1) * stay,
            epsilon = 1e-15
        );
    }

    #[test]
    fn partial_index_checked() {
        let p = reference(1.0, 0.05);
        let one = CodeParams::new(1, 1).unwrap();
        let g1 = gamma_table(&p, &one).unwrap();
        assert!(p_partial(1, &g1, &p, &one).is_err());
        let code = CodeParams::new(4, 3).unwrap();
        let g = gamma_table(&p, &code).unwrap();
        assert!(p_partial(0, &g, &p, &code).is_err());
        assert!(p_partial(3, &g, &p, &code).is_err());
        assert!(p_partial(2, &g, &p, &code).is_ok());
    }

    #[test]
    fn layer_masses_bounded() {
        let p = reference(1.0, 0.05);
        let code = CodeParams::new(8, 4).unwrap();
        let gamma = gamma_table(&p, &code).unwrap();
        assert_abs_diff_eq!(gamma.layer_mass(1), 1.0, epsilon = 1e-12);
        for j in 2..=4 {
            assert!(gamma.layer_mass(j) <= gamma.layer_mass(j - 1) + 1e-15);
        }
    }

    #[test]
    fn near_ideal_limits() {
        let p = SystemParams::reference(1e-6, 0.5, 1e-6).unwrap();
        let code = CodeParams::new(4, 2).unwrap();
        let o = outcome_distribution(&p, &code).unwrap();
        assert!(o.p_fail_first < 1e-5);
        assert!(o.p_partial[0] < 1e-5);
        assert!(o.p_full > 1.0 - 1e-5);
    }

    #[test]
    fn both_accountings_partition_unity() {
        let p = reference(1.0, 0.05);
        for (n, k) in [(1, 1), (4, 2), (8, 4), (10, 7)] {
            let code = CodeParams::new(n, k).unwrap();
            for survival in [SurvivalAccounting::PerSlot, SurvivalAccounting::Cumulative] {
                let o = outcome_distribution_with(
                    &p,
                    &code,
                    &ModelOptions {
                        survival,
                        ..Default::default()
                    },
                )
                .unwrap();
                assert_abs_diff_eq!(o.total(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn accountings_agree_for_single_symbol() {
        let p = reference(2.0, 0.1);
        let code = CodeParams::new(3, 1).unwrap();
        let a = outcome_distribution(&p, &code).unwrap();
        let b = outcome_distribution_with(
            &p,
            &code,
            &ModelOptions {
                survival: SurvivalAccounting::Cumulative,
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(a.p_full, b.p_full, epsilon = 1e-15);
    }

    #[test]
    fn renormalization_policy() {
        let o = OutcomeDistribution {
            p_fail_first: 0.5,
            p_partial: vec![],
            p_full: 0.5 - 5e-9,
        };
        let r = o.renormalized().unwrap();
        assert_abs_diff_eq!(r.total(), 1.0, epsilon = 1e-15);
        let bad = OutcomeDistribution {
            p_fail_first: 0.5,
            p_partial: vec![],
            p_full: 0.4,
        };
        assert!(matches!(
            bad.renormalized(),
            Err(ModelError::ModelInconsistency { .. })
        ));
    }

    #[test]
    fn eta_and_occupancy_extremes() {
        let code = CodeParams::new(4, 3).unwrap();
        let full = OutcomeDistribution {
            p_fail_first: 0.0,
            p_partial: vec![0.0, 0.0],
            p_full: 1.0,
        };
        assert_eq!(eta(&full, &code), 3.0);
        assert_abs_diff_eq!(t_eta(&full, &code, 0.1), 0.3, epsilon = 1e-15);
        let fail = OutcomeDistribution {
            p_fail_first: 1.0,
            p_partial: vec![0.0, 0.0],
            p_full: 0.0,
        };
        assert_eq!(eta(&fail, &code), 0.0);
        assert_abs_diff_eq!(t_eta(&fail, &code, 0.1), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn idle_probability_examples() {
        let quiet = reference(1.0, 0.05).with_request_rate(0.0).unwrap();
        assert_eq!(p_idle(&quiet, 0.7), 1.0);
        assert_abs_diff_eq!(
            p_idle(&reference(1.0, 0.05), 0.5),
            1.0 / 1.3,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(p_idle(&reference(1.0, 0.05), 0.5), 0.769231, epsilon = 1e-6);
    }

    #[test]
    fn forced_idle_extremes() {
        let p = reference(1.0, 0.05);
        let code = CodeParams::new(4, 2).unwrap();
        let o = outcome_distribution(&p, &code).unwrap();
        let busy = summarize(o, &p, &code, 0.0, IdleForm::Forced);
        assert_abs_diff_eq!(busy.t_dw, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(busy.gain, 1.0, epsilon = 1e-15);

        let ideal = OutcomeDistribution {
            p_fail_first: 0.0,
            p_partial: vec![0.0],
            p_full: 1.0,
        };
        let s = summarize(ideal, &p, &code, 1.0, IdleForm::Forced);
        assert_abs_diff_eq!(s.t_dw, 2.0 * 0.05, epsilon = 1e-15);
    }

    #[test]
    fn omega_only_enters_idle_probability() {
        let code = CodeParams::new(8, 4).unwrap();
        let a = avg_download_delay(&reference(1.0, 0.025), &code).unwrap();
        let b = avg_download_delay(
            &reference(1.0, 0.025).with_request_rate(0.5).unwrap(),
            &code,
        )
        .unwrap();
        assert_eq!(a.outcome, b.outcome);
        assert_eq!(a.eta, b.eta);
        assert_eq!(a.t_eta, b.t_eta);
        assert!(b.p_idle < a.p_idle);
    }
}
