use num_complex::Complex64;

use super::operators::{hermiticity_defect, min_eigenvalue, CMatrix, QuantumState, SpinOperators, NORM_TOL, POSITIVITY_TOL};
use crate::error::{Error, Result};
use crate::model::BlochState;
use crate::ode::{rk4_step, step_count};
use crate::series::TimeSeries;

/// Output of [`evolve_master`]: expectations plus the sampled density matrices.
#[derive(Debug, Clone)]
pub struct MasterRun {
    pub series: TimeSeries,
    pub states: Vec<CMatrix>,
}

/// `dt` times the fastest superoperator rate must stay below this.
const RESOLUTION_LIMIT: f64 = 1.0;

/// `ρ′ = −i[H, ρ] − (Γ/2)[J_x, [J_x, ρ]]`.
///
/// In the `J_x` eigenbasis the double commutator is `(m − m′)² ρ_{mm′}`.
fn master_rhs(h: &CMatrix, m: &[f64], gamma_meas: f64, rho: &CMatrix) -> CMatrix {
    let mut out = (h * rho - rho * h) * Complex64::new(0.0, -1.0);
    if gamma_meas != 0.0 {
        let half = 0.5 * gamma_meas;
        let n = m.len();
        for c in 0..n {
            for r in 0..n {
                let d = m[r] - m[c];
                out[(r, c)] -= rho[(r, c)] * (half * d * d);
            }
        }
    }
    out
}

/// Integrates the measurement-dephasing master equation with fixed-step RK4.
///
/// Pure inputs are promoted to density matrices. Trace, Hermiticity and
/// positivity are checked at every emitted sample; a violation is reported as
/// a step-size error.
pub fn evolve_master(
    rho0: &QuantumState,
    h: &CMatrix,
    ops: &SpinOperators,
    gamma_meas: f64,
    t_span: (f64, f64),
    dt: f64,
    stride: usize,
) -> Result<MasterRun> {
    let (t0, t1) = t_span;
    if !(dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t1 >= t0) {
        return Err(Error::invalid("t_span", format!("invalid interval [{t0}, {t1}]")));
    }
    if !(gamma_meas >= 0.0) {
        return Err(Error::invalid("gamma_meas", format!("must be non-negative, got {gamma_meas}")));
    }
    if rho0.dim() != ops.dim() || h.nrows() != ops.dim() {
        return Err(Error::invalid("state", "dimension does not match the operators"));
    }
    rho0.validate()?;

    let spectrum = h.clone().symmetric_eigenvalues();
    let spread = spectrum.max() - spectrum.min();
    let width = 2.0 * ops.spin();
    let fastest = spread + 0.5 * gamma_meas * width * width;
    if dt * fastest > RESOLUTION_LIMIT {
        return Err(Error::invalid(
            "dt",
            format!(
                "dt = {dt} does not resolve the fastest rate {fastest:.3e}; use dt ≤ {:.3e}",
                RESOLUTION_LIMIT / fastest
            ),
        ));
    }

    let stride = stride.max(1);
    let steps = step_count(t0, t1, dt);
    let step = if steps == 0 { dt } else { (t1 - t0) / steps as f64 };
    let mut rho = rho0.to_density();
    let mut series = TimeSeries::with_capacity(steps / stride + 2);
    let mut purity = Vec::new();
    let mut states = Vec::new();

    let mut emit = |t: f64, rho: &CMatrix| -> Result<()> {
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::StepSize {
                time: t,
                reason: format!("trace drifted to {tr}"),
            });
        }
        let herm = hermiticity_defect(rho);
        if herm > NORM_TOL {
            return Err(Error::StepSize {
                time: t,
                reason: format!("Hermiticity defect {herm:.3e}"),
            });
        }
        let min = min_eigenvalue(rho);
        if min < -POSITIVITY_TOL {
            return Err(Error::StepSize {
                time: t,
                reason: format!("positivity violated (eigenvalue {min:.3e})"),
            });
        }
        let expect = |op: &CMatrix| (op * rho).trace().re;
        series.push(
            t,
            BlochState {
                jx: expect(&ops.jx),
                jy: expect(&ops.jy),
                jz: expect(&ops.jz),
            },
        );
        purity.push(rho.iter().map(|z| z.norm_sqr()).sum());
        states.push(rho.clone());
        Ok(())
    };

    emit(t0, &rho)?;
    for k in 1..=steps {
        let t = t0 + (k - 1) as f64 * step;
        rho = rk4_step(&rho, t, step, |_, r| master_rhs(h, &ops.m, gamma_meas, r));
        if k % stride == 0 || k == steps {
            emit(t0 + k as f64 * step, &rho)?;
        }
    }
    series.purity = Some(purity);
    for (k, v) in [
        ("route", "quantum".to_string()),
        ("equation", "master".to_string()),
        ("n_atoms", ops.n_atoms.to_string()),
        ("gamma_meas", gamma_meas.to_string()),
        ("dt_requested", dt.to_string()),
        ("dt", step.to_string()),
        ("steps", steps.to_string()),
        ("stride", stride.to_string()),
        ("integrator", "rk4_fixed".to_string()),
    ] {
        series.meta.insert(k.to_string(), v);
    }
    Ok(MasterRun { series, states })
}
