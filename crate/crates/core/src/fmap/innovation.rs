use alloc::collections::{BTreeMap, VecDeque};

use crate::error::Result;
use crate::estimator::Innovation;
use crate::stats::chi2_quantile;

/// Consecutive-exceedance innovation test.
///
/// An update with `m` rows exceeds when `‖e‖² / m > χ²_q(m) / m`. The test
/// fires once the last `window` updates all exceeded.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationMonitor {
    window: usize,
    quantile: f64,
    history: VecDeque<Innovation>,
    thresholds: BTreeMap<usize, f64>,
}

impl InnovationMonitor {
    pub fn new(window: usize, quantile: f64) -> Self {
        Self { window: window.max(1), quantile, history: VecDeque::new(), thresholds: BTreeMap::new() }
    }

    /// Updates without measurements are not recorded.
    pub fn push(&mut self, innovation: Innovation) {
        if innovation.dims == 0 {
            return;
        }
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(innovation);
    }

    pub fn is_full(&self) -> bool {
        self.history.len() == self.window
    }

    /// Recorded updates, oldest first.
    pub fn history(&self) -> impl Iterator<Item = Innovation> + '_ {
        self.history.iter().copied()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }

    /// `‖e‖² / m` of the latest recorded update.
    pub fn statistic(&self) -> Option<f64> {
        self.history.back().map(Innovation::per_dof)
    }

    /// Per-dof `χ²_q(m) / m`.
    pub fn threshold(&mut self, dims: usize) -> Result<f64> {
        if let Some(t) = self.thresholds.get(&dims) {
            return Ok(*t);
        }
        let t = chi2_quantile(self.quantile, dims as f64)? / dims as f64;
        self.thresholds.insert(dims, t);
        Ok(t)
    }

    pub fn exceeded(&mut self) -> Result<bool> {
        if !self.is_full() {
            return Ok(false);
        }
        for i in 0..self.history.len() {
            let h = self.history[i];
            if h.per_dof() <= self.threshold(h.dims)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
