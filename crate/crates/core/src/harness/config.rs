//! Sweep configuration file.
//!
//! TOML, every key optional; unknown keys are rejected.
//!
//! ```toml
//! [system]
//! expected_nodes = 30.0     # M
//! departure_rate = 1.0      # μ (the arrival rate per node slot equals μ)
//! request_rate = 0.02       # ω, per node
//! t_ref = 1.0               # BS-only file delay, k·t_bs
//!
//! [sweep]
//! codes = [[1, 1], [2, 1], [4, 2], [8, 4]]
//! ratios = [10.0, 100.0, 1000.0]   # t_bs / t_d
//! engine = "analytic"              # analytic | simulate | both
//! delta = { min = 0.01, max = 100.0, count = 25 }   # log-spaced
//! # delta = { values = [0.1, 1.0, 10.0] }          # or explicit
//!
//! [simulation]
//! num_requests = 100000
//! warmup_requests = 10000   # default: 10% of num_requests, at least 1000
//! seed = 1
//! mode = "faithful"         # faithful | physical
//! request_model = "aggregate"   # aggregate | per-node; default follows mode
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::event_sim::{RequestModel, SimMode};
use crate::harness::HarnessError;
use crate::params::{CodeParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Analytic,
    Simulate,
    Both,
}

impl std::str::FromStr for Engine {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "simulate" => Ok(Engine::Simulate),
            "both" => Ok(Engine::Both),
            other => Err(format!(
                "unknown engine `{other}` (analytic | simulate | both)"
            )),
        }
    }
}

/// Cell parameters shared by every sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseSystem {
    pub expected_nodes: f64,
    pub departure_rate: f64,
    pub request_rate: f64,
    pub t_ref: f64,
}

impl Default for BaseSystem {
    fn default() -> Self {
        Self {
            expected_nodes: 30.0,
            departure_rate: 1.0,
            request_rate: 0.02,
            t_ref: 1.0,
        }
    }
}

impl BaseSystem {
    /// Symbol times for one (code, ratio) pair: t_bs = T_ref/k and
    /// t_d = t_bs/ratio. For the uncoded (1,1) case the single symbol is
    /// the whole file, so t_bs = T_ref.
    pub fn symbol_times(&self, code: &CodeParams, ratio: f64) -> (f64, f64) {
        let t_bs = self.t_ref / code.k as f64;
        (t_bs / ratio, t_bs)
    }

    pub fn params(&self, code: &CodeParams, ratio: f64, delta: f64) -> crate::Result<SystemParams> {
        let (t_d, t_bs) = self.symbol_times(code, ratio);
        SystemParams::new(
            self.expected_nodes,
            self.departure_rate,
            self.request_rate,
            t_d,
            t_bs,
            delta,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOptions {
    pub num_requests: u64,
    pub warmup_requests: Option<u64>,
    pub seed: u64,
    pub mode: SimMode,
    pub request_model: Option<RequestModel>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            num_requests: 100_000,
            warmup_requests: None,
            seed: 1,
            mode: SimMode::Faithful,
            request_model: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub system: BaseSystem,
    pub codes: Vec<CodeParams>,
    pub deltas: Vec<f64>,
    pub ratios: Vec<f64>,
    pub engine: Engine,
    pub sim: SimOptions,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            system: BaseSystem::default(),
            codes: [(1, 1), (2, 1), (4, 2), (8, 4)]
                .into_iter()
                .map(|(n, k)| CodeParams { n, k })
                .collect(),
            deltas: log_grid(0.01, 100.0, 25),
            ratios: vec![10.0, 100.0, 1000.0],
            engine: Engine::Analytic,
            sim: SimOptions::default(),
        }
    }
}

/// `count` log-spaced points from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![min];
    }
    let (lmin, lmax) = (min.ln(), max.ln());
    (0..count)
        .map(|i| {
            if i == 0 {
                min
            } else if i == count - 1 {
                max
            } else {
                (lmin + (lmax - lmin) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    sweep: Option<RawSweep>,
    simulation: Option<RawSimulation>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    expected_nodes: Option<f64>,
    departure_rate: Option<f64>,
    request_rate: Option<f64>,
    t_ref: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    codes: Option<Vec<Vec<i64>>>,
    ratios: Option<Vec<f64>>,
    engine: Option<Engine>,
    delta: Option<RawDelta>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    values: Option<Vec<f64>>,
    min: Option<f64>,
    max: Option<f64>,
    count: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    num_requests: Option<i64>,
    warmup_requests: Option<i64>,
    seed: Option<i64>,
    mode: Option<String>,
    request_model: Option<String>,
}

fn key_error(key: impl Into<String>, reason: impl Into<String>) -> HarnessError {
    HarnessError::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

pub fn parse_config(path: &Path) -> Result<SweepSpec, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<SweepSpec, HarnessError> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| HarnessError::Parse(e.message().to_string()))?;
    let mut spec = SweepSpec::default();

    if let Some(sys) = raw.system {
        let s = &mut spec.system;
        s.expected_nodes = sys.expected_nodes.unwrap_or(s.expected_nodes);
        s.departure_rate = sys.departure_rate.unwrap_or(s.departure_rate);
        s.request_rate = sys.request_rate.unwrap_or(s.request_rate);
        s.t_ref = sys.t_ref.unwrap_or(s.t_ref);
    }

    if let Some(sweep) = raw.sweep {
        if let Some(codes) = sweep.codes {
            spec.codes = codes
                .iter()
                .enumerate()
                .map(|(i, entry)| parse_code(i, entry))
                .collect::<Result<_, _>>()?;
        }
        if let Some(ratios) = sweep.ratios {
            spec.ratios = ratios;
        }
        if let Some(engine) = sweep.engine {
            spec.engine = engine;
        }
        if let Some(delta) = sweep.delta {
            spec.deltas = parse_delta(delta)?;
        }
    }

    if let Some(sim) = raw.simulation {
        let o = &mut spec.sim;
        if let Some(v) = sim.num_requests {
            o.num_requests = nonnegative("simulation.num_requests", v)?;
        }
        if let Some(v) = sim.warmup_requests {
            o.warmup_requests = Some(nonnegative("simulation.warmup_requests", v)?);
        }
        if let Some(v) = sim.seed {
            o.seed = nonnegative("simulation.seed", v)?;
        }
        if let Some(m) = sim.mode {
            o.mode = parse_mode(&m).map_err(|r| key_error("simulation.mode", r))?;
        }
        if let Some(r) = sim.request_model {
            o.request_model = Some(
                parse_request_model(&r).map_err(|e| key_error("simulation.request_model", e))?,
            );
        }
    }

    validate(&spec)?;
    Ok(spec)
}

pub fn parse_mode(s: &str) -> Result<SimMode, String> {
    match s {
        "faithful" => Ok(SimMode::Faithful),
        "physical" => Ok(SimMode::Physical),
        other => Err(format!("unknown mode `{other}` (faithful | physical)")),
    }
}

pub fn parse_request_model(s: &str) -> Result<RequestModel, String> {
    match s {
        "aggregate" => Ok(RequestModel::AggregatePoisson),
        "per-node" => Ok(RequestModel::PerNode),
        other => Err(format!(
            "unknown request model `{other}` (aggregate | per-node)"
        )),
    }
}

fn nonnegative(key: &str, v: i64) -> Result<u64, HarnessError> {
    u64::try_from(v).map_err(|_| key_error(key, format!("must be >= 0, got {v}")))
}

fn parse_code(index: usize, entry: &[i64]) -> Result<CodeParams, HarnessError> {
    let key = format!("sweep.codes[{index}]");
    let [n, k] = entry else {
        return Err(key_error(key, format!("expected [n, k], got {entry:?}")));
    };
    if *n < 1 || *k < 1 {
        return Err(key_error(
            key,
            format!("n and k must be >= 1, got [{n}, {k}]"),
        ));
    }
    CodeParams::new(*n as usize, *k as usize).map_err(|e| key_error(key, e.to_string()))
}

fn parse_delta(raw: RawDelta) -> Result<Vec<f64>, HarnessError> {
    match raw {
        RawDelta {
            values: Some(values),
            min: None,
            max: None,
            count: None,
        } => Ok(values),
        RawDelta {
            values: None,
            min: Some(min),
            max: Some(max),
            count: Some(count),
        } => {
            if !(min.is_finite() && min > 0.0) {
                return Err(key_error(
                    "sweep.delta.min",
                    format!("must be finite and > 0, got {min}"),
                ));
            }
            if !(max.is_finite() && max >= min) {
                return Err(key_error(
                    "sweep.delta.max",
                    format!("must be finite and >= min, got {max}"),
                ));
            }
            if count < 1 {
                return Err(key_error(
                    "sweep.delta.count",
                    format!("must be >= 1, got {count}"),
                ));
            }
            Ok(log_grid(min, max, count as usize))
        }
        _ => Err(key_error(
            "sweep.delta",
            "give either `values` or all of `min`, `max`, `count`",
        )),
    }
}

/// Checks every combination the sweep will evaluate.
pub fn validate(spec: &SweepSpec) -> Result<(), HarnessError> {
    if spec.codes.is_empty() {
        return Err(key_error("sweep.codes", "must not be empty"));
    }
    if spec.ratios.is_empty() {
        return Err(key_error("sweep.ratios", "must not be empty"));
    }
    if spec.deltas.is_empty() {
        return Err(key_error("sweep.delta", "must not be empty"));
    }
    for (i, r) in spec.ratios.iter().enumerate() {
        if !(r.is_finite() && *r > 0.0) {
            return Err(key_error(
                format!("sweep.ratios[{i}]"),
                format!("must be finite and > 0, got {r}"),
            ));
        }
    }
    for (i, d) in spec.deltas.iter().enumerate() {
        if !(d.is_finite() && *d > 0.0) {
            return Err(key_error(
                format!("sweep.delta[{i}]"),
                format!("must be finite and > 0, got {d}"),
            ));
        }
    }
    if !(spec.system.t_ref.is_finite() && spec.system.t_ref > 0.0) {
        return Err(key_error(
            "system.t_ref",
            format!("must be finite and > 0, got {}", spec.system.t_ref),
        ));
    }
    for (i, code) in spec.codes.iter().enumerate() {
        CodeParams::new(code.n, code.k)
            .map_err(|e| key_error(format!("sweep.codes[{i}]"), e.to_string()))?;
        for w in code.warnings(spec.system.expected_nodes) {
            log::warn!("sweep.codes[{i}]: {w}");
        }
    }
    spec.system
        .params(&spec.codes[0], spec.ratios[0], spec.deltas[0])
        .map_err(|e| key_error("system", e.to_string()))?;
    if spec.sim.num_requests == 0 {
        return Err(key_error("simulation.num_requests", "must be at least 1"));
    }
    if spec.engine != Engine::Analytic && spec.system.request_rate <= 0.0 {
        return Err(key_error(
            "system.request_rate",
            "simulation needs a positive request rate",
        ));
    }
    Ok(())
}
