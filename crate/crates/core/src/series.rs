//! Timestamped simulation output.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BlochState;

/// Sampled expectation values plus optional optical channels.
///
/// `meta` carries the parameter echo and integrator settings; it is ordered so
/// that serialized output is deterministic.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub states: Vec<BlochState>,
    /// Standard errors of the expectations, present for ensemble averages.
    pub stderr: Option<Vec<BlochState>>,
    pub phase: Option<Vec<f64>>,
    pub current: Option<Vec<f64>>,
    /// `Tr ρ²`, present for density-matrix runs.
    pub purity: Option<Vec<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl TimeSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, s: BlochState) {
        self.times.push(t);
        self.states.push(s);
    }

    pub fn set_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn jx(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.jx).collect()
    }

    pub fn jy(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.jy).collect()
    }

    pub fn jz(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.jz).collect()
    }

    /// Checks equal channel lengths and strictly increasing times.
    pub fn check(&self) -> Result<()> {
        let n = self.times.len();
        let lens = [
            Some(self.states.len()),
            self.stderr.as_ref().map(Vec::len),
            self.phase.as_ref().map(Vec::len),
            self.current.as_ref().map(Vec::len),
            self.purity.as_ref().map(Vec::len),
        ];
        if lens.iter().flatten().any(|&l| l != n) {
            return Err(Error::Alignment(format!(
                "channel lengths {lens:?} differ from {n} time samples"
            )));
        }
        if let Some(i) = self.times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::Alignment(format!(
                "times not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }
}

/// Diffusive photocurrent record of a single conditioned run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneRecord {
    /// Start time of each integration step.
    pub times: Vec<f64>,
    /// `I(t) = 2Γ⟨J_x⟩_c + sqrt(Γ) dW/dt`.
    pub current: Vec<f64>,
    pub noise_increments: Vec<f64>,
    /// Master seed of the generator.
    pub seed: u64,
    /// Independent stream index (trajectory number) under `seed`.
    pub stream: u64,
    pub dt: f64,
    pub gamma_meas: f64,
}

impl HomodyneRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Sample mean of `dW/sqrt(dt)` in units of its standard error.
    pub fn noise_mean_z_score(&self) -> f64 {
        let n = self.noise_increments.len();
        if n == 0 {
            return 0.0;
        }
        let sum: f64 = self.noise_increments.iter().map(|dw| dw / self.dt.sqrt()).sum();
        (sum / n as f64) * (n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_catches_misaligned_channels() {
        let mut s = TimeSeries::default();
        s.push(0.0, BlochState::ZERO);
        s.push(1.0, BlochState::ZERO);
        assert!(s.check().is_ok());
        s.phase = Some(vec![0.0]);
        assert!(matches!(s.check(), Err(Error::Alignment(_))));
        s.phase = None;
        s.times[1] = 0.0;
        assert!(s.check().is_err());
    }
}
