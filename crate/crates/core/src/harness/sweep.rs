use rayon::prelude::*;

use crate::delay_model::avg_download_delay;
use crate::event_sim::{simulate, SimConfig};
use crate::harness::config::{Engine, SweepSpec};
use crate::harness::HarnessError;
use crate::params::CodeParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowEngine {
    Analytic,
    Simulate,
}

impl RowEngine {
    pub fn as_str(&self) -> &'static str {
        match self {
            RowEngine::Analytic => "analytic",
            RowEngine::Simulate => "simulate",
        }
    }
}

/// Columns present only on simulated rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimColumns {
    pub t_dw_stderr: f64,
    pub busy_frac: f64,
    pub busy_frac_stderr: f64,
}

/// One evaluated sweep point.
///
/// For simulated rows `eta` and `t_eta` are the empirical means over
/// requests that found the DS network idle, and `p_idle` is the fraction
/// of such requests.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub t_d: f64,
    pub t_bs: f64,
    pub engine: RowEngine,
    pub eta: f64,
    pub t_eta: f64,
    pub p_idle: f64,
    pub t_dw: f64,
    pub gain: f64,
    pub sim: Option<SimColumns>,
    /// |sim − analytic| / analytic for T̄_dw, on the simulated row of a pair.
    pub rel_diff: Option<f64>,
}

impl SweepRow {
    pub fn code(&self) -> CodeParams {
        CodeParams {
            n: self.n,
            k: self.k,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.t_bs / self.t_d
    }

    pub fn t_ref(&self) -> f64 {
        self.k as f64 * self.t_bs
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    code: CodeParams,
    delta: f64,
    ratio: f64,
}

/// Simulation seed for one point, a function of the master seed and the
/// point's coordinates only, so a point's stream does not depend on which
/// other points share the sweep.
pub fn point_seed(master: u64, code: &CodeParams, delta: f64, ratio: f64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    [
        code.n as u64,
        code.k as u64,
        delta.to_bits(),
        ratio.to_bits(),
    ]
    .into_iter()
    .fold(mix(master), |acc, v| mix(acc ^ v))
}

/// Evaluates every (ratio, code, Δ) point, ratio outermost and Δ innermost.
/// Points run in parallel; the output order does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, HarnessError> {
    crate::harness::config::validate(spec)?;
    let points: Vec<Point> = spec
        .ratios
        .iter()
        .flat_map(|&ratio| {
            spec.codes.iter().flat_map(move |&code| {
                spec.deltas
                    .iter()
                    .map(move |&delta| Point { code, delta, ratio })
            })
        })
        .collect();

    let rows: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|p| evaluate_point(spec, p))
        .collect::<Result<_, _>>()?;
    Ok(rows.into_iter().flatten().collect())
}

fn evaluate_point(spec: &SweepSpec, p: &Point) -> Result<Vec<SweepRow>, HarnessError> {
    let context = format!("code {} at delta={} ratio={}", p.code, p.delta, p.ratio);
    let wrap = |source| HarnessError::Model {
        context: context.clone(),
        source,
    };
    let params = spec
        .system
        .params(&p.code, p.ratio, p.delta)
        .map_err(wrap)?;
    let base = |engine| SweepRow {
        n: p.code.n,
        k: p.code.k,
        delta: p.delta,
        t_d: params.d2d_symbol_time,
        t_bs: params.bs_symbol_time,
        engine,
        eta: 0.0,
        t_eta: 0.0,
        p_idle: 0.0,
        t_dw: 0.0,
        gain: 0.0,
        sim: None,
        rel_diff: None,
    };

    let mut rows = Vec::with_capacity(2);
    let mut analytic_t_dw = None;
    if spec.engine != Engine::Simulate {
        let s = avg_download_delay(&params, &p.code).map_err(wrap)?;
        analytic_t_dw = Some(s.t_dw);
        rows.push(SweepRow {
            eta: s.eta,
            t_eta: s.t_eta,
            p_idle: s.p_idle,
            t_dw: s.t_dw,
            gain: s.gain,
            ..base(RowEngine::Analytic)
        });
    }
    if spec.engine != Engine::Analytic {
        let mut config = SimConfig::new(
            params,
            p.code,
            spec.sim.mode,
            spec.sim.num_requests,
            point_seed(spec.sim.seed, &p.code, p.delta, p.ratio),
        )
        .map_err(wrap)?;
        if let Some(model) = &spec.sim.request_model {
            config.request_model = model.clone();
        }
        if let Some(w) = spec.sim.warmup_requests {
            config.warmup_requests = w;
        }
        let r = simulate(&config).map_err(wrap)?;
        let t_ref = p.code.k as f64 * params.bs_symbol_time;
        rows.push(SweepRow {
            eta: r.mean_d2d_symbols,
            t_eta: r.mean_occupancy(),
            p_idle: 1.0 - r.busy_fraction,
            t_dw: r.mean_delay,
            gain: t_ref / r.mean_delay,
            sim: Some(SimColumns {
                t_dw_stderr: r.delay_stderr,
                busy_frac: r.busy_fraction,
                busy_frac_stderr: r.busy_fraction_stderr,
            }),
            rel_diff: analytic_t_dw.map(|a| (r.mean_delay - a).abs() / a),
            ..base(RowEngine::Simulate)
        });
    }
    Ok(rows)
}
