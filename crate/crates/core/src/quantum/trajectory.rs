use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::operators::{CMatrix, CVector, QuantumState, SpinOperators};
use crate::error::{Error, Result};
use crate::model::BlochState;
use crate::ode::step_count;
use crate::series::{HomodyneRecord, TimeSeries};

/// How the measurement part of the conditioned evolution is stepped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SseForm {
    /// `[−(Γ/2)(J_x−⟨J_x⟩)² dt + sqrt(Γ)(J_x−⟨J_x⟩) dW] ψ`.
    #[default]
    Normalized,
    /// Linear form driven by the recorded current:
    /// `[−(Γ/2) J_x² + I(t) J_x] dt ψ̃`, renormalized after each step.
    LinearRecord,
}

impl SseForm {
    pub fn name(self) -> &'static str {
        match self {
            SseForm::Normalized => "normalized",
            SseForm::LinearRecord => "linear_record",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SseSettings {
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    /// Generator stream under `seed`; trajectory `i` of an ensemble uses `stream + i`.
    pub stream: u64,
    /// Gaussian draws summed per step. A run at `dt` with `2k` substeps sees
    /// the same Brownian path as a run at `dt/2` with `k` substeps.
    pub noise_substeps: u32,
    /// Emit every `stride`-th step.
    pub stride: usize,
    pub form: SseForm,
}

impl SseSettings {
    pub fn new(dt: f64, t_end: f64, seed: u64) -> Self {
        Self {
            dt,
            t_end,
            seed,
            stream: 0,
            noise_substeps: 1,
            stride: 1,
            form: SseForm::Normalized,
        }
    }
}

/// `dt · Γ · j²` above this is rejected.
const MEASUREMENT_STEP_LIMIT: f64 = 0.1;
const COLLAPSE_NORM: f64 = 1e-12;

/// `exp(−iH dt)` from the Hermitian eigendecomposition of `H`.
fn propagator(h: &CMatrix, dt: f64) -> CMatrix {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l * dt));
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

fn bloch_of(psi: &CVector, ops: &SpinOperators) -> BlochState {
    BlochState {
        jx: psi.iter().zip(&ops.m).map(|(a, m)| a.norm_sqr() * m).sum(),
        jy: psi.dotc(&(&ops.jy * psi)).re,
        jz: psi.dotc(&(&ops.jz * psi)).re,
    }
}

/// One diffusive homodyne trajectory.
///
/// Each step applies the measurement kick (Euler–Maruyama in `dW`) and then
/// the exact unitary `exp(−iH dt)`, and renormalizes. The photocurrent for the
/// step is `2Γ⟨J_x⟩_c + sqrt(Γ) dW/dt` evaluated at the start of the step.
/// Identical settings reproduce the record bit for bit.
pub fn sse_trajectory(
    psi0: &QuantumState,
    h: &CMatrix,
    ops: &SpinOperators,
    gamma_meas: f64,
    cfg: &SseSettings,
) -> Result<(TimeSeries, HomodyneRecord)> {
    let QuantumState::Pure(psi0) = psi0 else {
        return Err(Error::invalid("state", "trajectories need a pure initial state"));
    };
    if psi0.len() != ops.dim() || h.nrows() != ops.dim() {
        return Err(Error::invalid("state", "dimension does not match the operators"));
    }
    QuantumState::Pure(psi0.clone()).validate()?;
    if !(gamma_meas >= 0.0) {
        return Err(Error::invalid("gamma_meas", format!("must be non-negative, got {gamma_meas}")));
    }
    if !(cfg.dt > 0.0) || !(cfg.t_end >= 0.0) {
        return Err(Error::invalid("dt", "need dt > 0 and t_end ≥ 0"));
    }
    if cfg.noise_substeps == 0 {
        return Err(Error::invalid("noise_substeps", "must be at least 1"));
    }
    let j = ops.spin();
    if gamma_meas * j * j * cfg.dt > MEASUREMENT_STEP_LIMIT {
        return Err(Error::invalid(
            "dt",
            format!(
                "Γ·j²·dt = {:.3e} exceeds {MEASUREMENT_STEP_LIMIT}",
                gamma_meas * j * j * cfg.dt
            ),
        ));
    }

    let steps = step_count(0.0, cfg.t_end, cfg.dt);
    let dt = if steps == 0 { cfg.dt } else { cfg.t_end / steps as f64 };
    let stride = cfg.stride.max(1);
    let u = propagator(h, dt);
    let sqrt_gamma = gamma_meas.sqrt();
    let sub_sd = (dt / f64::from(cfg.noise_substeps)).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(cfg.stream);

    let mut psi = psi0.clone();
    let mut next = CVector::zeros(psi.len());
    let mut series = TimeSeries::with_capacity(steps / stride + 2);
    let mut record = HomodyneRecord {
        times: Vec::with_capacity(steps),
        current: Vec::with_capacity(steps),
        noise_increments: Vec::with_capacity(steps),
        seed: cfg.seed,
        stream: cfg.stream,
        dt,
        gamma_meas,
    };

    series.push(0.0, bloch_of(&psi, ops));
    for k in 0..steps {
        let t = k as f64 * dt;
        let mean: f64 = psi.iter().zip(&ops.m).map(|(a, m)| a.norm_sqr() * m).sum();
        let dw: f64 = (0..cfg.noise_substeps)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sub_sd * z
            })
            .sum();
        let current = 2.0 * gamma_meas * mean + sqrt_gamma * dw / dt;
        record.times.push(t);
        record.current.push(current);
        record.noise_increments.push(dw);

        if gamma_meas > 0.0 {
            for (a, &m) in psi.iter_mut().zip(&ops.m) {
                let factor = match cfg.form {
                    SseForm::Normalized => {
                        let d = m - mean;
                        1.0 - 0.5 * gamma_meas * d * d * dt + sqrt_gamma * d * dw
                    }
                    SseForm::LinearRecord => 1.0 - 0.5 * gamma_meas * m * m * dt + m * current * dt,
                };
                *a *= factor;
            }
        }
        u.mul_to(&psi, &mut next);
        std::mem::swap(&mut psi, &mut next);

        let norm_sq = psi.norm_squared();
        if !(norm_sq > COLLAPSE_NORM) {
            return Err(Error::StepSize {
                time: t + dt,
                reason: format!("conditional state norm collapsed to {norm_sq:.3e}"),
            });
        }
        psi.unscale_mut(norm_sq.sqrt());

        if (k + 1) % stride == 0 || k + 1 == steps {
            series.push((k + 1) as f64 * dt, bloch_of(&psi, ops));
        }
    }

    for (key, v) in [
        ("route", "quantum".to_string()),
        ("equation", "sse".to_string()),
        ("sse_form", cfg.form.name().to_string()),
        ("n_atoms", ops.n_atoms.to_string()),
        ("gamma_meas", gamma_meas.to_string()),
        ("dt_requested", cfg.dt.to_string()),
        ("dt", dt.to_string()),
        ("steps", steps.to_string()),
        ("stride", stride.to_string()),
        ("noise_substeps", cfg.noise_substeps.to_string()),
        ("seed", cfg.seed.to_string()),
        ("stream", cfg.stream.to_string()),
        ("rng", "chacha8".to_string()),
    ] {
        series.meta.insert(key.to_string(), v);
    }
    Ok((series, record))
}
