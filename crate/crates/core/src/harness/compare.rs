//! Analytic-versus-simulation comparison of paired sweep rows.

use std::fmt;

use crate::harness::sweep::{RowEngine, SweepRow};
use crate::harness::HarnessError;

/// Relative difference above which a row is flagged.
pub const FLAG_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CompareLine {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub ratio: f64,
    pub t_dw_analytic: f64,
    pub t_dw_sim: f64,
    pub t_dw_rel: f64,
    pub busy_analytic: f64,
    pub busy_sim: f64,
    pub busy_rel: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub threshold: f64,
    pub lines: Vec<CompareLine>,
}

impl CompareReport {
    pub fn flagged(&self) -> usize {
        self.lines.iter().filter(|l| l.flagged).count()
    }
}

fn rel(sim: f64, analytic: f64) -> f64 {
    if analytic == 0.0 {
        if sim == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (sim - analytic).abs() / analytic.abs()
    }
}

/// Pairs each simulated row with the analytic row of the same point and
/// compares T̄_dw and the busy fraction against 1 − Pr{I=1}.
pub fn compare_report(rows: &[SweepRow], threshold: f64) -> Result<CompareReport, HarnessError> {
    let mut lines = Vec::new();
    for sim in rows.iter().filter(|r| r.engine == RowEngine::Simulate) {
        let analytic = rows
            .iter()
            .find(|a| {
                a.engine == RowEngine::Analytic
                    && (a.n, a.k) == (sim.n, sim.k)
                    && a.delta == sim.delta
                    && a.t_d == sim.t_d
                    && a.t_bs == sim.t_bs
            })
            .ok_or_else(|| {
                HarnessError::Input(format!(
                    "no analytic row for ({},{}) at delta={}",
                    sim.n, sim.k, sim.delta
                ))
            })?;
        let busy_sim = sim.sim.map(|s| s.busy_frac).unwrap_or(1.0 - sim.p_idle);
        let busy_analytic = 1.0 - analytic.p_idle;
        let t_dw_rel = rel(sim.t_dw, analytic.t_dw);
        let busy_rel = rel(busy_sim, busy_analytic);
        lines.push(CompareLine {
            n: sim.n,
            k: sim.k,
            delta: sim.delta,
            ratio: sim.ratio(),
            t_dw_analytic: analytic.t_dw,
            t_dw_sim: sim.t_dw,
            t_dw_rel,
            busy_analytic,
            busy_sim,
            busy_rel,
            flagged: !(t_dw_rel <= threshold && busy_rel <= threshold),
        });
    }
    if lines.is_empty() {
        return Err(HarnessError::Input("no simulated rows to compare".into()));
    }
    Ok(CompareReport { threshold, lines })
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>7} {:>7} {:>11} {:>12} {:>12} {:>9} {:>11} {:>11} {:>9}",
            "code", "ratio", "delta", "t_dw_ana", "t_dw_sim", "rel", "busy_ana", "busy_sim", "rel"
        )?;
        for l in &self.lines {
            writeln!(
                f,
                "{:>7} {:>7} {:>11.5e} {:>12.6} {:>12.6} {:>8.2}% {:>11.5e} {:>11.5e} {:>8.2}%{}",
                format!("({},{})", l.n, l.k),
                format!("{:.0}", l.ratio),
                l.delta,
                l.t_dw_analytic,
                l.t_dw_sim,
                100.0 * l.t_dw_rel,
                l.busy_analytic,
                l.busy_sim,
                100.0 * l.busy_rel,
                if l.flagged { "  FLAG" } else { "" }
            )?;
        }
        write!(
            f,
            "{} of {} row(s) exceed {:.1}%",
            self.flagged(),
            self.lines.len(),
            100.0 * self.threshold
        )
    }
}
