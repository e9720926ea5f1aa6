//! Monte-Carlo sampler of the serial D2D attempt chain of a single request
//! that finds the DS network idle.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::delay_model::OutcomeDistribution;
use crate::error::{invalid, Result};
use crate::event_sim::stats::RunningStats;
use crate::params::{CodeParams, SystemParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptOracleReport {
    pub trials: u64,
    pub outcome: OutcomeDistribution,
    /// Standard error of each outcome frequency, indexed by symbol count.
    pub outcome_stderr: Vec<f64>,
    pub mean_occupancy: f64,
    pub occupancy_stderr: f64,
    pub mean_symbols: f64,
    pub symbols_stderr: f64,
}

/// Samples `trials` independent requests. The request instant is uniform
/// in the repair interval, each of the n storage nodes restored at the last
/// repair is alive with its own exponential lifetime, and the requester has
/// an exponential lifetime from the request instant.
pub fn d2d_attempt_oracle(
    params: &SystemParams,
    code: &CodeParams,
    trials: u64,
    seed: u64,
) -> Result<AttemptOracleReport> {
    if trials == 0 {
        return Err(invalid("trials", "need at least one trial"));
    }
    params.validate()?;
    let lifetime =
        Exp::new(params.departure_rate).map_err(|e| invalid("departure_rate", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t_d = params.d2d_symbol_time;
    let delta = params.repair_interval;

    let mut counts = vec![0u64; code.k + 1];
    let mut occupancy = RunningStats::default();
    let mut symbols = RunningStats::default();
    let mut live: Vec<f64> = Vec::with_capacity(code.n);

    for _ in 0..trials {
        let phase = rng.gen::<f64>() * delta;
        live.clear();
        for _ in 0..code.n {
            let life = lifetime.sample(&mut rng);
            if life > phase {
                live.push(life - phase);
            }
        }
        let requester = lifetime.sample(&mut rng);

        let mut collected = 0;
        let mut slot = 0;
        while collected < code.k {
            slot += 1;
            let start = (slot - 1) as f64 * t_d;
            let end = slot as f64 * t_d;
            if requester < end {
                break;
            }
            live.retain(|&d| d > start);
            if live.is_empty() {
                break;
            }
            let pick = rng.gen_range(0..live.len());
            if live[pick] < end {
                break;
            }
            live.swap_remove(pick);
            collected += 1;
        }
        counts[collected] += 1;
        occupancy.push(slot as f64 * t_d);
        symbols.push(collected as f64);
    }

    let n = trials as f64;
    let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let outcome_stderr = freqs.iter().map(|p| (p * (1.0 - p) / n).sqrt()).collect();
    Ok(AttemptOracleReport {
        trials,
        outcome: OutcomeDistribution::from_symbol_masses(&freqs),
        outcome_stderr,
        mean_occupancy: occupancy.mean(),
        occupancy_stderr: occupancy.stderr(),
        mean_symbols: symbols.mean(),
        symbols_stderr: symbols.stderr(),
    })
}
