//! Discrete-event simulation of one cell.
//!
//! Nodes arrive as a Poisson stream and stay for exponential lifetimes.
//! Every repair interval the BS restores the storage set to `n` nodes and
//! broadcasts the list. Requests that find the DS network idle fetch
//! symbols one at a time over D2D, then fetch whatever is missing from the
//! BS; requests that find it busy go straight to the BS.
//!
//! Two modes are provided. `Faithful` reproduces the assumptions of the
//! analytical model (abstract storage nodes, abstract requester, every
//! failed attempt costs a full slot). `Physical` lets storage nodes be
//! ordinary members of the population, so requesters can hold a symbol
//! themselves and failures are detected when they happen.

mod attempt;
mod queue;
mod stats;

pub use attempt::{d2d_attempt_oracle, AttemptOracleReport};
pub use queue::{Event, EventKind, EventQueue, NodeId};
pub use stats::{Histogram, RunningStats};

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::delay_model::OutcomeDistribution;
use crate::error::{invalid, Result};
use crate::params::{CodeParams, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMode {
    Faithful,
    Physical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RequestModel {
    /// One Poisson stream at rate ωM.
    AggregatePoisson,
    /// Every node in the cell requests at rate ω while it is present.
    PerNode,
    /// Requests at the given instants only.
    Scripted(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub params: SystemParams,
    pub code: CodeParams,
    pub mode: SimMode,
    pub request_model: RequestModel,
    pub num_requests: u64,
    pub warmup_requests: u64,
    pub seed: u64,
    /// Keep the list of D2D busy intervals in the report.
    pub record_sessions: bool,
}

impl SimConfig {
    /// Config with the mode's natural request model and the default warmup.
    pub fn new(
        params: SystemParams,
        code: CodeParams,
        mode: SimMode,
        num_requests: u64,
        seed: u64,
    ) -> Result<Self> {
        let request_model = match mode {
            SimMode::Faithful => RequestModel::AggregatePoisson,
            SimMode::Physical => RequestModel::PerNode,
        };
        let config = Self {
            params,
            code,
            mode,
            request_model,
            num_requests,
            warmup_requests: Self::default_warmup(num_requests),
            seed,
            record_sessions: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// A scripted run: requests exactly at `times`, no warmup.
    pub fn scripted(
        params: SystemParams,
        code: CodeParams,
        mode: SimMode,
        times: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let config = Self {
            params,
            code,
            mode,
            num_requests: times.len() as u64,
            request_model: RequestModel::Scripted(times),
            warmup_requests: 0,
            seed,
            record_sessions: false,
        };
        config.validate()?;
        Ok(config)
    }

    /// 10% of the measured requests, at least 1000.
    pub fn default_warmup(num_requests: u64) -> u64 {
        (num_requests / 10).max(1000)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        CodeParams::new(self.code.n, self.code.k)?;
        if self.num_requests == 0 {
            return Err(invalid("num_requests", "must be at least 1"));
        }
        match &self.request_model {
            RequestModel::Scripted(times) => {
                if times.len() as u64 != self.warmup_requests + self.num_requests {
                    return Err(invalid(
                        "request_model",
                        "scripted times must cover warmup and measured requests",
                    ));
                }
                if times.iter().any(|t| !(t.is_finite() && *t >= 0.0))
                    || times.windows(2).any(|w| w[1] < w[0])
                {
                    return Err(invalid(
                        "request_model",
                        "scripted times must be finite, >= 0 and sorted",
                    ));
                }
            }
            _ => {
                if self.params.request_rate_per_node <= 0.0 {
                    return Err(invalid(
                        "request_rate_per_node",
                        "random request streams need a positive rate",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Mean D2D occupancy over the first and second half of the measured
/// requests, in request-index order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HalfWindows {
    pub first: RunningStats,
    pub second: RunningStats,
}

impl HalfWindows {
    /// |mean₁ − mean₂| in units of the pooled standard error.
    pub fn z_score(&self) -> f64 {
        let se = (self.first.stderr().powi(2) + self.second.stderr().powi(2)).sqrt();
        let d = (self.first.mean() - self.second.mean()).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub requests: u64,
    pub mean_delay: f64,
    pub delay_stderr: f64,
    /// Requests that found the DS network idle.
    pub d2d_served: u64,
    /// Counts of D2D-served requests by symbols obtained, 0..=k.
    pub outcome_counts: Vec<u64>,
    pub empirical_outcome: OutcomeDistribution,
    /// Fraction of requests that found the DS network busy.
    pub busy_fraction: f64,
    pub busy_fraction_stderr: f64,
    pub mean_d2d_symbols: f64,
    pub occupancy: RunningStats,
    pub halves: HalfWindows,
    pub delay_histogram: Histogram,
    /// Live storage nodes at request instants, indexed by count 0..=n.
    pub storage_list_counts: Vec<u64>,
    pub mean_population: f64,
    pub simulated_time: f64,
    pub sessions: Option<Vec<(f64, f64)>>,
}

impl SimReport {
    pub fn mean_occupancy(&self) -> f64 {
        self.occupancy.mean()
    }

    /// Empirical distribution of the live storage count at request instants.
    pub fn storage_list_pmf(&self) -> Vec<f64> {
        let total: u64 = self.storage_list_counts.iter().sum();
        self.storage_list_counts
            .iter()
            .map(|&c| c as f64 / total.max(1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    departure: f64,
    alive: bool,
    storage: bool,
    alive_pos: usize,
}

#[derive(Debug)]
struct Session {
    request: u64,
    start: f64,
    requester_departure: f64,
    needed: usize,
    collected: usize,
    slots: usize,
    /// Departure times of snapshot storage nodes not yet contacted.
    list: Vec<f64>,
}

struct Streams {
    arrivals: ChaCha8Rng,
    lifetimes: ChaCha8Rng,
    requests: ChaCha8Rng,
    choices: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        let stream = |id: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id);
            rng
        };
        Self {
            arrivals: stream(0),
            lifetimes: stream(1),
            requests: stream(2),
            choices: stream(3),
        }
    }
}

#[derive(Default)]
struct Tally {
    delay: RunningStats,
    busy: RunningStats,
    symbols: RunningStats,
    occupancy: RunningStats,
    outcome_counts: Vec<u64>,
    halves: HalfWindows,
    storage_counts: Vec<u64>,
    histogram: Option<Histogram>,
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    now: f64,
    queue: EventQueue,
    rng: Streams,
    lifetime: Exp<f64>,
    nodes: Vec<Node>,
    free: Vec<NodeId>,
    alive: Vec<NodeId>,
    storage_nodes: Vec<NodeId>,
    abstract_storage: Vec<f64>,
    session: Option<Session>,
    issued: u64,
    completed: u64,
    total: u64,
    population_area: f64,
    last_change: f64,
    tally: Tally,
    sessions: Option<Vec<(f64, f64)>>,
}

/// Runs the event loop until every warmup and measured request completes.
pub fn simulate(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let mut sim = Simulator::new(config)?;
    sim.run()?;
    Ok(sim.report())
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a SimConfig) -> Result<Self> {
        let lifetime = Exp::new(cfg.params.departure_rate)
            .map_err(|e| invalid("departure_rate", e.to_string()))?;
        let k = cfg.code.k;
        Ok(Self {
            cfg,
            now: 0.0,
            queue: EventQueue::new(),
            rng: Streams::new(cfg.seed),
            lifetime,
            nodes: Vec::new(),
            free: Vec::new(),
            alive: Vec::new(),
            storage_nodes: Vec::new(),
            abstract_storage: Vec::new(),
            session: None,
            issued: 0,
            completed: 0,
            total: cfg.warmup_requests + cfg.num_requests,
            population_area: 0.0,
            last_change: 0.0,
            tally: Tally {
                outcome_counts: vec![0; k + 1],
                storage_counts: vec![0; cfg.code.n + 1],
                histogram: Some(Histogram::new(cfg.params.d2d_symbol_time / 2.0)),
                ..Default::default()
            },
            sessions: cfg.record_sessions.then(Vec::new),
        })
    }

    fn run(&mut self) -> Result<()> {
        let params = &self.cfg.params;
        let initial = Poisson::new(params.expected_node_count)
            .map_err(|e| invalid("expected_node_count", e.to_string()))?
            .sample(&mut self.rng.arrivals) as usize;
        for _ in 0..initial {
            self.add_node();
        }
        self.schedule_arrival();
        self.queue.schedule(0.0, EventKind::RepairBroadcast);
        match &self.cfg.request_model {
            RequestModel::AggregatePoisson => self.schedule_aggregate_request(),
            RequestModel::Scripted(times) => {
                for &t in times {
                    self.queue
                        .schedule(t, EventKind::FileRequest { node: None });
                }
            }
            RequestModel::PerNode => {}
        }

        while self.completed < self.total {
            let event = self
                .queue
                .pop()
                .ok_or_else(|| invalid("event queue", "ran dry before all requests completed"))?;
            debug_assert!(event.time >= self.now, "time went backwards");
            self.advance(event.time);
            match event.kind {
                EventKind::NodeArrival => {
                    self.add_node();
                    self.schedule_arrival();
                }
                EventKind::NodeDeparture { node } => self.remove_node(node),
                EventKind::RepairBroadcast => self.repair(),
                EventKind::FileRequest { node } => self.on_request(node),
                EventKind::D2dAttemptEnd { success } => self.on_attempt_end(success),
                EventKind::BsDownloadEnd { .. } => self.completed += 1,
            }
        }
        Ok(())
    }

    fn advance(&mut self, t: f64) {
        self.population_area += self.alive.len() as f64 * (t - self.last_change);
        self.last_change = t;
        self.now = t;
    }

    fn schedule_arrival(&mut self) {
        let rate = self.cfg.params.expected_node_count * self.cfg.params.arrival_rate_per_slot;
        let gap = Exp::new(rate)
            .expect("positive arrival rate")
            .sample(&mut self.rng.arrivals);
        self.queue.schedule(self.now + gap, EventKind::NodeArrival);
    }

    fn schedule_aggregate_request(&mut self) {
        if self.issued >= self.total {
            return;
        }
        let rate = self.cfg.params.cell_request_rate();
        let gap = Exp::new(rate)
            .expect("positive request rate")
            .sample(&mut self.rng.requests);
        self.queue
            .schedule(self.now + gap, EventKind::FileRequest { node: None });
    }

    fn schedule_node_request(&mut self, id: NodeId) {
        let rate = self.cfg.params.request_rate_per_node;
        let at = self.now
            + Exp::new(rate)
                .expect("positive request rate")
                .sample(&mut self.rng.requests);
        if at < self.nodes[id].departure {
            self.queue
                .schedule(at, EventKind::FileRequest { node: Some(id) });
        }
    }

    fn add_node(&mut self) {
        let departure = self.now + self.lifetime.sample(&mut self.rng.lifetimes);
        let node = Node {
            departure,
            alive: true,
            storage: false,
            alive_pos: self.alive.len(),
        };
        let id = match self.free.pop() {
            Some(id) => {
                self.nodes[id] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        };
        self.alive.push(id);
        self.queue
            .schedule(departure, EventKind::NodeDeparture { node: id });
        if self.cfg.request_model == RequestModel::PerNode && self.issued < self.total {
            self.schedule_node_request(id);
        }
    }

    fn remove_node(&mut self, id: NodeId) {
        let node = self.nodes[id];
        assert!(node.alive, "departure of node {id} that already left");
        let pos = node.alive_pos;
        self.alive.swap_remove(pos);
        if let Some(&moved) = self.alive.get(pos) {
            self.nodes[moved].alive_pos = pos;
        }
        if node.storage {
            self.storage_nodes.retain(|&s| s != id);
        }
        self.nodes[id].alive = false;
        self.nodes[id].storage = false;
        self.free.push(id);
    }

    fn repair(&mut self) {
        let n = self.cfg.code.n;
        match self.cfg.mode {
            SimMode::Faithful => {
                self.abstract_storage.clear();
                for _ in 0..n {
                    let life = self.lifetime.sample(&mut self.rng.lifetimes);
                    self.abstract_storage.push(self.now + life);
                }
            }
            SimMode::Physical => {
                let missing = n.saturating_sub(self.storage_nodes.len());
                if missing > 0 {
                    let candidates: Vec<NodeId> = self
                        .alive
                        .iter()
                        .copied()
                        .filter(|&id| !self.nodes[id].storage)
                        .collect();
                    let take = missing.min(candidates.len());
                    for i in sample(&mut self.rng.choices, candidates.len(), take).into_iter() {
                        let id = candidates[i];
                        self.nodes[id].storage = true;
                        self.storage_nodes.push(id);
                    }
                }
            }
        }
        self.queue.schedule(
            self.now + self.cfg.params.repair_interval,
            EventKind::RepairBroadcast,
        );
    }

    fn on_request(&mut self, node: Option<NodeId>) {
        if self.issued >= self.total {
            return;
        }
        let index = self.issued;
        self.issued += 1;
        match self.cfg.request_model {
            RequestModel::AggregatePoisson => self.schedule_aggregate_request(),
            RequestModel::PerNode => {
                if let Some(id) = node {
                    self.schedule_node_request(id);
                }
            }
            RequestModel::Scripted(_) => {}
        }

        let now = self.now;
        let k = self.cfg.code.k;
        let (requester_departure, requester_storage, list) = match self.cfg.mode {
            SimMode::Faithful => {
                let departure = match node {
                    Some(id) => self.nodes[id].departure,
                    None => now + self.lifetime.sample(&mut self.rng.lifetimes),
                };
                let list: Vec<f64> = self
                    .abstract_storage
                    .iter()
                    .copied()
                    .filter(|&d| d > now)
                    .collect();
                (departure, false, list)
            }
            SimMode::Physical => {
                let requester = node.or_else(|| {
                    (!self.alive.is_empty())
                        .then(|| self.alive[self.rng.choices.gen_range(0..self.alive.len())])
                });
                let (departure, storage) = match requester {
                    Some(id) => (self.nodes[id].departure, self.nodes[id].storage),
                    None => (now + self.lifetime.sample(&mut self.rng.lifetimes), false),
                };
                let list: Vec<f64> = self
                    .storage_nodes
                    .iter()
                    .filter(|&&id| Some(id) != requester)
                    .map(|&id| self.nodes[id].departure)
                    .collect();
                (departure, storage, list)
            }
        };
        let measured = index >= self.cfg.warmup_requests;
        if measured {
            let live_storage = list.len() + usize::from(requester_storage);
            self.tally.storage_counts[live_storage.min(self.cfg.code.n)] += 1;
        }
        let needed = if requester_storage { k - 1 } else { k };

        if self.session.is_some() {
            let delay = needed as f64 * self.cfg.params.bs_symbol_time;
            if measured {
                self.tally.busy.push(1.0);
                self.record_delay(delay);
            }
            self.finish_request(index, now + delay);
            return;
        }
        if measured {
            self.tally.busy.push(0.0);
        }
        self.session = Some(Session {
            request: index,
            start: now,
            requester_departure,
            needed,
            collected: 0,
            slots: 0,
            list,
        });
        self.begin_attempt();
    }

    fn finish_request(&mut self, index: u64, at: f64) {
        if at > self.now {
            self.queue
                .schedule(at, EventKind::BsDownloadEnd { request: index });
        } else {
            self.completed += 1;
        }
    }

    fn record_delay(&mut self, delay: f64) {
        self.tally.delay.push(delay);
        if let Some(h) = self.tally.histogram.as_mut() {
            h.record(delay);
        }
    }

    fn begin_attempt(&mut self) {
        let now = self.now;
        let t_d = self.cfg.params.d2d_symbol_time;
        let mode = self.cfg.mode;
        let session = self.session.as_mut().expect("attempt without a session");
        if session.collected == session.needed {
            self.end_session();
            return;
        }
        session.list.retain(|&d| d > now);
        let end = now + t_d;
        let (at, success) = match mode {
            SimMode::Faithful => {
                session.slots += 1;
                if session.requester_departure < end || session.list.is_empty() {
                    (end, false)
                } else {
                    let pick = self.rng.choices.gen_range(0..session.list.len());
                    let departure = session.list.swap_remove(pick);
                    (end, departure > end)
                }
            }
            SimMode::Physical => {
                if session.list.is_empty() {
                    self.end_session();
                    return;
                }
                session.slots += 1;
                let pick = self.rng.choices.gen_range(0..session.list.len());
                let departure = session.list.swap_remove(pick);
                if session.requester_departure < end {
                    (end, false)
                } else if departure < end {
                    (departure, false)
                } else {
                    (end, true)
                }
            }
        };
        self.queue
            .schedule(at, EventKind::D2dAttemptEnd { success });
    }

    fn on_attempt_end(&mut self, success: bool) {
        let session = self
            .session
            .as_mut()
            .expect("attempt end without a session");
        if success {
            session.collected += 1;
            self.begin_attempt();
        } else {
            self.end_session();
        }
    }

    fn end_session(&mut self) {
        let session = self.session.take().expect("no session to end");
        let now = self.now;
        let k = self.cfg.code.k;
        let occupancy = now - session.start;
        if let Some(log) = self.sessions.as_mut() {
            log.push((session.start, now));
        }
        let remaining = session.needed - session.collected;
        let done = now + remaining as f64 * self.cfg.params.bs_symbol_time;
        if session.request >= self.cfg.warmup_requests {
            let symbols = if session.collected == session.needed {
                k
            } else {
                session.collected
            };
            self.tally.outcome_counts[symbols] += 1;
            self.tally.symbols.push(symbols as f64);
            self.tally.occupancy.push(occupancy);
            let position = session.request - self.cfg.warmup_requests;
            if position < self.cfg.num_requests / 2 {
                self.tally.halves.first.push(occupancy);
            } else {
                self.tally.halves.second.push(occupancy);
            }
            self.record_delay(done - session.start);
        }
        self.finish_request(session.request, done);
    }

    fn report(mut self) -> SimReport {
        let served: u64 = self.tally.outcome_counts.iter().sum();
        let freqs: Vec<f64> = self
            .tally
            .outcome_counts
            .iter()
            .map(|&c| {
                if served == 0 {
                    0.0
                } else {
                    c as f64 / served as f64
                }
            })
            .collect();
        let elapsed = self.now;
        SimReport {
            requests: self.tally.delay.count(),
            mean_delay: self.tally.delay.mean(),
            delay_stderr: self.tally.delay.stderr(),
            d2d_served: served,
            empirical_outcome: OutcomeDistribution::from_symbol_masses(&freqs),
            outcome_counts: self.tally.outcome_counts,
            busy_fraction: self.tally.busy.mean(),
            busy_fraction_stderr: self.tally.busy.stderr(),
            mean_d2d_symbols: self.tally.symbols.mean(),
            occupancy: self.tally.occupancy,
            halves: self.tally.halves,
            delay_histogram: self.tally.histogram.take().expect("histogram present"),
            storage_list_counts: self.tally.storage_counts,
            mean_population: if elapsed > 0.0 {
                self.population_area / elapsed
            } else {
                0.0
            },
            simulated_time: elapsed,
            sessions: self.sessions,
        }
    }
}
