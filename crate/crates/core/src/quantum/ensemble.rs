use super::operators::{CMatrix, QuantumState, SpinOperators};
use super::trajectory::{sse_trajectory, SseSettings};
use crate::error::{Error, Result};
use crate::model::{optical_bohd, BlochState, CavityParams};
use crate::series::{HomodyneRecord, TimeSeries};

/// Runs `n_traj` independent trajectories; trajectory `i` uses stream
/// `settings.stream + i`. Output order is the stream order regardless of
/// scheduling, so results are reproducible with or without the `parallel`
/// feature.
pub fn run_ensemble(
    psi0: &QuantumState,
    h: &CMatrix,
    ops: &SpinOperators,
    gamma_meas: f64,
    settings: &SseSettings,
    n_traj: usize,
) -> Result<Vec<(TimeSeries, HomodyneRecord)>> {
    if n_traj == 0 {
        return Err(Error::invalid("trajectories", "need at least one trajectory"));
    }
    let one = |i: usize| {
        let cfg = SseSettings {
            stream: settings.stream + i as u64,
            ..*settings
        };
        sse_trajectory(psi0, h, ops, gamma_meas, &cfg)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n_traj).into_par_iter().map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n_traj).map(one).collect()
    }
}

/// Sample mean of the Bloch components with standard errors
/// (`s/sqrt(n)`, zero for a single member).
pub fn ensemble_average(members: &[TimeSeries]) -> Result<TimeSeries> {
    let first = members
        .first()
        .ok_or_else(|| Error::Alignment("empty ensemble".into()))?;
    for (i, m) in members.iter().enumerate() {
        if m.times != first.times || m.states.len() != first.states.len() {
            return Err(Error::Alignment(format!(
                "member {i} is sampled on a different time grid"
            )));
        }
    }
    let n = members.len() as f64;
    let len = first.len();
    let mut out = TimeSeries::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for k in 0..len {
        let mean = members
            .iter()
            .fold(BlochState::ZERO, |acc, m| acc.axpy(1.0 / n, &m.states[k]));
        let se = if members.len() < 2 {
            BlochState::ZERO
        } else {
            let mut v = [0.0; 3];
            for m in members {
                let s = m.states[k];
                v[0] += (s.jx - mean.jx).powi(2);
                v[1] += (s.jy - mean.jy).powi(2);
                v[2] += (s.jz - mean.jz).powi(2);
            }
            let f = |x: f64| (x / (n - 1.0) / n).sqrt();
            BlochState::new(f(v[0]), f(v[1]), f(v[2]))
        };
        out.push(first.times[k], mean);
        stderr.push(se);
    }
    out.stderr = Some(stderr);
    out.meta = first.meta.clone();
    out.meta.remove("seed");
    out.meta.remove("stream");
    out.set_meta("trajectories", members.len());
    Ok(out)
}

/// Optical homodyne current implied by a conditioned atomic record.
///
/// The phase `φ′ = −ξ(N/2 + ⟨J_x⟩_c)` is integrated with the trapezoidal rule
/// from `phase0`; the current is `−|c||d| sin φ`.
pub fn conditional_current_via_cavity(
    series: &TimeSeries,
    cavity: &CavityParams,
    n_atoms: u32,
    phase0: f64,
) -> Result<TimeSeries> {
    series.check()?;
    let half_n = f64::from(n_atoms) / 2.0;
    let rate = |s: &BlochState| -cavity.xi * (half_n + s.jx);
    let mut phase = Vec::with_capacity(series.len());
    let mut acc = phase0;
    for k in 0..series.len() {
        if k > 0 {
            let h = series.times[k] - series.times[k - 1];
            acc += 0.5 * h * (rate(&series.states[k - 1]) + rate(&series.states[k]));
        }
        phase.push(acc);
    }
    let current = phase
        .iter()
        .map(|&p| optical_bohd(p, cavity.cav_amp, cavity.lo_amp))
        .collect();
    let mut out = series.clone();
    out.phase = Some(phase);
    out.current = Some(current);
    out.set_meta("phase0", phase0);
    out.set_meta("xi", cavity.xi);
    Ok(out)
}
