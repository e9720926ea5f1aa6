//! Cell-level and code-level parameters shared by the model, the simulator
//! and the sweep harness.

use crate::error::{invalid, Result};

/// Stochastic parameters of one cell. Times are in time units (t.u.).
///
/// The arrival rate per expected node is tied to the departure rate so that
/// the expected population stays at `expected_node_count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub expected_node_count: f64,
    pub arrival_rate_per_slot: f64,
    pub departure_rate: f64,
    pub request_rate_per_node: f64,
    pub d2d_symbol_time: f64,
    pub bs_symbol_time: f64,
    pub repair_interval: f64,
}

impl SystemParams {
    /// Builds and validates a parameter set, deriving the arrival rate from
    /// the departure rate.
    pub fn new(
        expected_node_count: f64,
        departure_rate: f64,
        request_rate_per_node: f64,
        d2d_symbol_time: f64,
        bs_symbol_time: f64,
        repair_interval: f64,
    ) -> Result<Self> {
        let params = Self {
            expected_node_count,
            arrival_rate_per_slot: departure_rate,
            departure_rate,
            request_rate_per_node,
            d2d_symbol_time,
            bs_symbol_time,
            repair_interval,
        };
        params.validate()?;
        for w in params.warnings() {
            log::warn!("{w}");
        }
        Ok(params)
    }

    /// The setting used throughout the evaluation: 30 nodes, unit departure
    /// rate, request rate 0.02 per node.
    pub fn reference(
        d2d_symbol_time: f64,
        bs_symbol_time: f64,
        repair_interval: f64,
    ) -> Result<Self> {
        Self::new(
            30.0,
            1.0,
            0.02,
            d2d_symbol_time,
            bs_symbol_time,
            repair_interval,
        )
    }

    pub fn validate(&self) -> Result<()> {
        positive("expected_node_count", self.expected_node_count)?;
        positive("departure_rate", self.departure_rate)?;
        nonnegative("request_rate_per_node", self.request_rate_per_node)?;
        positive("d2d_symbol_time", self.d2d_symbol_time)?;
        positive("bs_symbol_time", self.bs_symbol_time)?;
        positive("repair_interval", self.repair_interval)?;
        nonnegative("arrival_rate_per_slot", self.arrival_rate_per_slot)?;
        if self.arrival_rate_per_slot != self.departure_rate {
            return Err(invalid(
                "arrival_rate_per_slot",
                format!(
                    "must equal departure_rate ({} != {})",
                    self.arrival_rate_per_slot, self.departure_rate
                ),
            ));
        }
        Ok(())
    }

    /// Soft violations of the model premises. The math stays valid.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.bs_symbol_time < self.d2d_symbol_time {
            out.push(format!(
                "bs_symbol_time {} is below d2d_symbol_time {}; the model assumes BS links are slower",
                self.bs_symbol_time, self.d2d_symbol_time
            ));
        }
        out
    }

    pub fn with_repair_interval(mut self, repair_interval: f64) -> Result<Self> {
        self.repair_interval = repair_interval;
        self.validate()?;
        Ok(self)
    }

    pub fn with_request_rate(mut self, request_rate_per_node: f64) -> Result<Self> {
        self.request_rate_per_node = request_rate_per_node;
        self.validate()?;
        Ok(self)
    }

    pub fn with_symbol_times(mut self, d2d_symbol_time: f64, bs_symbol_time: f64) -> Result<Self> {
        self.d2d_symbol_time = d2d_symbol_time;
        self.bs_symbol_time = bs_symbol_time;
        self.validate()?;
        Ok(self)
    }

    /// Aggregate request rate of the cell, ωM.
    pub fn cell_request_rate(&self) -> f64 {
        self.request_rate_per_node * self.expected_node_count
    }
}

/// Dimensions of an (n, k) MDS code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
}

impl CodeParams {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k", "code dimension must be at least 1"));
        }
        if k > n {
            return Err(invalid(
                "k",
                format!("dimension {k} exceeds block length {n}"),
            ));
        }
        Ok(Self { n, k })
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Warnings for codes too long relative to the cell population.
    pub fn warnings(&self, expected_node_count: f64) -> Vec<String> {
        if self.n as f64 > expected_node_count / 3.0 {
            vec![format!(
                "block length {} is not small relative to {} expected nodes",
                self.n, expected_node_count
            )]
        } else {
            Vec::new()
        }
    }
}

impl std::fmt::Display for CodeParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.n, self.k)
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(invalid(name, format!("must be finite and > 0, got {v}")));
    }
    Ok(())
}

fn nonnegative(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrival_rate_follows_departure_rate() {
        let p = SystemParams::new(30.0, 2.5, 0.02, 0.01, 0.1, 1.0).unwrap();
        assert_eq!(p.arrival_rate_per_slot, 2.5);
        assert!((p.cell_request_rate() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn rejects_nonpositive_times() {
        assert!(SystemParams::new(30.0, 1.0, 0.02, 0.0, 0.1, 1.0).is_err());
        assert!(SystemParams::new(30.0, 1.0, 0.02, 0.01, 0.1, -1.0).is_err());
        assert!(SystemParams::new(30.0, 1.0, f64::NAN, 0.01, 0.1, 1.0).is_err());
        assert!(SystemParams::new(30.0, 0.0, 0.02, 0.01, 0.1, 1.0).is_err());
    }

    #[test]
    fn fast_bs_is_only_a_warning() {
        let p = SystemParams::new(30.0, 1.0, 0.02, 0.5, 0.1, 1.0).unwrap();
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn mismatched_arrival_rate_rejected() {
        let mut p = SystemParams::reference(0.01, 0.1, 1.0).unwrap();
        p.arrival_rate_per_slot = 2.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn code_bounds() {
        assert!(CodeParams::new(4, 2).is_ok());
        assert!(CodeParams::new(2, 3).is_err());
        assert!(CodeParams::new(2, 0).is_err());
        assert_eq!(CodeParams::new(12, 4).unwrap().warnings(30.0).len(), 1);
        assert!(CodeParams::new(8, 4).unwrap().warnings(30.0).is_empty());
    }
}
