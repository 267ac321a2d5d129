//! Factorized (mean-field) Schwinger equations of motion.
//!
//! Operator anticommutators are closed as `⟨[A,B]₊⟩ → 2⟨A⟩⟨B⟩`. Four variants
//! are available: the closed double well, its effective Rabi limit, the
//! dispersively light-coupled condensate (with the cavity phase), and the
//! measurement-damped moment equations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{optical_bohd, BlochState, CavityParams, TrapParams};
use crate::ode::{rk4_step, step_count, Axpy};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantTag {
    Closed,
    RabiLimit,
    LightCoupled,
    DampedMoments,
}

impl VariantTag {
    pub const ALL: [VariantTag; 4] = [
        VariantTag::Closed,
        VariantTag::RabiLimit,
        VariantTag::LightCoupled,
        VariantTag::DampedMoments,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantTag::Closed => "closed",
            VariantTag::RabiLimit => "rabi_limit",
            VariantTag::LightCoupled => "light_coupled",
            VariantTag::DampedMoments => "damped_moments",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Whether the cavity phase (and hence a current) is integrated.
    pub fn has_phase(self) -> bool {
        matches!(self, VariantTag::LightCoupled | VariantTag::DampedMoments)
    }
}

/// Which equations to integrate.
///
/// `double_count_guard` only affects [`VariantTag::LightCoupled`]: the
/// light-coupled equations carry both `Ω′` (which already contains
/// `8κ⟨J_z(0)⟩`) and explicit `8κ J_z` collision terms. With the guard on,
/// `Ω′` is replaced by the bare `Ω₀` so the collision shift is counted once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanfieldVariant {
    pub tag: VariantTag,
    pub double_count_guard: bool,
}

impl MeanfieldVariant {
    pub fn new(tag: VariantTag) -> Self {
        Self {
            tag,
            double_count_guard: false,
        }
    }

    pub fn guarded(tag: VariantTag) -> Self {
        Self {
            tag,
            double_count_guard: true,
        }
    }
}

/// Closed double well: Heisenberg equations of the two-mode Hamiltonian.
pub fn deriv_closed(s: &BlochState, trap: &TrapParams) -> BlochState {
    let omega0 = trap.omega_bare();
    let (k, e) = (trap.kappa, trap.eta);
    BlochState {
        jx: -omega0 * s.jy - 8.0 * e * s.jy * s.jz,
        jy: omega0 * s.jx - 4.0 * (k - 3.0 * e) * s.jz * s.jx,
        jz: 4.0 * (k - e) * s.jy * s.jx,
    }
}

/// Effective Rabi limit: rotation about `J_z` at `Ω′`.
pub fn deriv_rabi(s: &BlochState, omega_prime: f64) -> BlochState {
    BlochState {
        jx: -omega_prime * s.jy,
        jy: omega_prime * s.jx,
        jz: 0.0,
    }
}

/// Cavity phase rate `φ′ = −ξ(N/2 + ⟨J_x⟩)`.
pub fn phase_rate(s: &BlochState, n_atoms: u32, xi: f64) -> f64 {
    -xi * (f64::from(n_atoms) / 2.0 + s.jx)
}

/// Light-coupled condensate with undepleted cavity (`c†c → N_f`).
///
/// Returns the Bloch rate and the phase rate. `omega_prime` is the effective
/// tunneling evaluated at the initial `⟨J_z⟩`; with `guard` it is replaced by
/// `Ω₀`.
pub fn deriv_light_coupled(
    s: &BlochState,
    trap: &TrapParams,
    cavity: &CavityParams,
    omega_prime: f64,
    guard: bool,
) -> (BlochState, f64) {
    let w = if guard { trap.omega_bare() } else { omega_prime };
    let k = trap.kappa;
    let g = cavity.dispersive_rate();
    let rate = BlochState {
        jx: -w * s.jy - 8.0 * k * s.jy * s.jz,
        jy: w * s.jx + 8.0 * k * s.jx * s.jz + g * s.jz,
        jz: -g * s.jy,
    };
    (rate, phase_rate(s, trap.n_atoms, cavity.xi))
}

/// Ensemble-averaged moments under continuous `J_x` measurement.
pub fn deriv_damped_moments(
    s: &BlochState,
    omega_prime: f64,
    cavity: &CavityParams,
    gamma_meas: f64,
) -> BlochState {
    let g = cavity.dispersive_rate();
    BlochState {
        jx: -omega_prime * s.jy,
        jy: omega_prime * s.jx + g * s.jz - 0.5 * gamma_meas * s.jy,
        jz: -g * s.jy - 0.5 * gamma_meas * s.jz,
    }
}

/// Closed-form solution of the Rabi-limit equations.
///
/// `J_x(t) = J_x(0) cos Ω′t − J_y(0) sin Ω′t`, `J_y(t) = J_y(0) cos Ω′t + J_x(0) sin Ω′t`.
pub fn rabi_analytic(jx0: f64, jy0: f64, jz0: f64, omega_prime: f64, t: f64) -> BlochState {
    let (s, c) = (omega_prime * t).sin_cos();
    BlochState {
        jx: jx0 * c - jy0 * s,
        jy: jy0 * c + jx0 * s,
        jz: jz0,
    }
}

/// Atomic homodyne signal `⟨J_x(t)⟩ = |β| sin(Ω′t) ⟨X_{θ−π/2}⟩` for equal initial populations.
pub fn atomic_bohd_signal(jy0: f64, beta_mag: f64, omega_prime: f64, t: f64) -> Result<f64> {
    let x = crate::model::quadrature_from_jy(jy0, beta_mag)?;
    Ok(beta_mag * (omega_prime * t).sin() * x)
}

#[derive(Debug, Clone, Copy)]
struct Point {
    bloch: BlochState,
    phase: f64,
}

impl Axpy for Point {
    fn add_scaled(&self, a: f64, k: &Self) -> Self {
        Point {
            bloch: self.bloch.axpy(a, &k.bloch),
            phase: self.phase + a * k.phase,
        }
    }
}

/// A fully specified mean-field problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanfieldSystem {
    pub variant: MeanfieldVariant,
    pub trap: TrapParams,
    pub cavity: CavityParams,
    /// Measurement strength Γ used by the damped variant.
    pub gamma_meas: f64,
}

/// `dt · max-frequency` above this is rejected.
pub const STABILITY_LIMIT: f64 = 0.1;
/// Bloch norm allowed to exceed `j(j+1)` by this factor before aborting.
pub const DIVERGENCE_FACTOR: f64 = 1.01;

impl MeanfieldSystem {
    /// Γ is taken from the cavity drive and damping.
    pub fn new(variant: MeanfieldVariant, trap: TrapParams, cavity: CavityParams) -> Result<Self> {
        trap.validate()?;
        cavity.validate()?;
        Ok(Self {
            variant,
            trap,
            cavity,
            gamma_meas: cavity.measurement_strength()?,
        })
    }

    pub fn with_gamma_meas(mut self, gamma_meas: f64) -> Self {
        self.gamma_meas = gamma_meas;
        self
    }

    pub fn omega_prime(&self, jz0: f64) -> f64 {
        self.trap.omega_bare() + 8.0 * self.trap.kappa * jz0
    }

    fn rates(&self, s: &BlochState, omega_prime: f64) -> (BlochState, f64) {
        let xi = self.cavity.xi;
        match self.variant.tag {
            VariantTag::Closed => (deriv_closed(s, &self.trap), 0.0),
            VariantTag::RabiLimit => (deriv_rabi(s, omega_prime), 0.0),
            VariantTag::LightCoupled => deriv_light_coupled(
                s,
                &self.trap,
                &self.cavity,
                omega_prime,
                self.variant.double_count_guard,
            ),
            VariantTag::DampedMoments => (
                deriv_damped_moments(s, omega_prime, &self.cavity, self.gamma_meas),
                phase_rate(s, self.trap.n_atoms, xi),
            ),
        }
    }

    /// Upper estimate of the fastest linearized frequency on the Bloch sphere.
    pub fn max_frequency(&self, omega_prime: f64) -> f64 {
        let j = self.trap.spin();
        let (k, e) = (self.trap.kappa.abs(), self.trap.eta.abs());
        let g = self.cavity.dispersive_rate().abs();
        match self.variant.tag {
            VariantTag::Closed => {
                self.trap.omega_bare().abs()
                    + j * (8.0 * e + 4.0 * (self.trap.kappa - 3.0 * self.trap.eta).abs()
                        + 4.0 * (self.trap.kappa - self.trap.eta).abs())
            }
            VariantTag::RabiLimit => omega_prime.abs(),
            VariantTag::LightCoupled => omega_prime.abs().max(self.trap.omega_bare().abs()) + 16.0 * k * j + g,
            VariantTag::DampedMoments => omega_prime.abs() + g + 0.5 * self.gamma_meas.abs(),
        }
    }

    /// Fixed-step RK4 from `state0` over `t_span`, emitting every `stride`-th step.
    ///
    /// The step is shrunk (never grown) so the grid lands exactly on `t_span.1`.
    pub fn integrate(
        &self,
        state0: BlochState,
        phase0: f64,
        t_span: (f64, f64),
        dt: f64,
        stride: usize,
    ) -> Result<TimeSeries> {
        let (t0, t1) = t_span;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t1 >= t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid("t_span", format!("invalid interval [{t0}, {t1}]")));
        }
        let stride = stride.max(1);
        let omega_prime = self.omega_prime(state0.jz);
        let max_freq = self.max_frequency(omega_prime);
        if dt * max_freq > STABILITY_LIMIT {
            return Err(Error::invalid(
                "dt",
                format!(
                    "dt·max-frequency = {:.3e} exceeds {STABILITY_LIMIT}; use dt ≤ {:.3e}",
                    dt * max_freq,
                    STABILITY_LIMIT / max_freq
                ),
            ));
        }
        let j = self.trap.spin();
        let bound = DIVERGENCE_FACTOR * j * (j + 1.0);

        let steps = step_count(t0, t1, dt);
        let h = if steps == 0 { dt } else { (t1 - t0) / steps as f64 };
        let has_phase = self.variant.tag.has_phase();

        let mut series = TimeSeries::with_capacity(steps / stride + 2);
        let mut phases = Vec::new();
        let mut y = Point {
            bloch: state0,
            phase: phase0,
        };
        let emit = |series: &mut TimeSeries, phases: &mut Vec<f64>, t: f64, y: &Point| {
            series.push(t, y.bloch);
            phases.push(y.phase);
        };
        emit(&mut series, &mut phases, t0, &y);
        for step in 1..=steps {
            let t = t0 + (step - 1) as f64 * h;
            y = rk4_step(&y, t, h, |_, p| {
                let (bloch, phase) = self.rates(&p.bloch, omega_prime);
                Point { bloch, phase }
            });
            let norm_sq = y.bloch.norm_sq();
            if !(norm_sq <= bound) {
                return Err(Error::IntegrationDiverged {
                    step,
                    time: t0 + step as f64 * h,
                    norm_sq,
                    bound,
                });
            }
            if step % stride == 0 || step == steps {
                emit(&mut series, &mut phases, t0 + step as f64 * h, &y);
            }
        }
        if has_phase {
            let current = phases
                .iter()
                .map(|&p| optical_bohd(p, self.cavity.cav_amp, self.cavity.lo_amp))
                .collect();
            series.phase = Some(phases);
            series.current = Some(current);
        }

        let m = &mut series.meta;
        for (k, v) in [
            ("route", "meanfield".to_string()),
            ("variant", self.variant.tag.name().to_string()),
            ("double_count_guard", self.variant.double_count_guard.to_string()),
            ("dt_requested", dt.to_string()),
            ("dt", h.to_string()),
            ("steps", steps.to_string()),
            ("stride", stride.to_string()),
            ("t0", t0.to_string()),
            ("t1", t1.to_string()),
            ("omega_prime", omega_prime.to_string()),
            ("gamma_meas", self.gamma_meas.to_string()),
            ("integrator", "rk4_fixed".to_string()),
        ] {
            m.insert(k.to_string(), v);
        }
        Ok(series)
    }
}

/// Convenience wrapper: Γ from the cavity parameters.
pub fn integrate(
    variant: MeanfieldVariant,
    trap: &TrapParams,
    cavity: &CavityParams,
    state0: BlochState,
    phase0: f64,
    t_span: (f64, f64),
    dt: f64,
) -> Result<TimeSeries> {
    MeanfieldSystem::new(variant, *trap, *cavity)?.integrate(state0, phase0, t_span, dt, 1)
}

/// Self-convergence of the fixed-step integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    /// Max endpoint difference between runs at `dt` and `dt/2`.
    pub coarse_diff: f64,
    /// Max endpoint difference between runs at `dt/2` and `dt/4`.
    pub fine_diff: f64,
}

impl ConvergenceCheck {
    /// ≈ 16 for a fourth-order method in its asymptotic regime.
    pub fn ratio(&self) -> f64 {
        self.coarse_diff / self.fine_diff
    }
}

/// Runs at `dt`, `dt/2`, `dt/4` and compares the final states.
pub fn step_halving_check(
    system: &MeanfieldSystem,
    state0: BlochState,
    t_span: (f64, f64),
    dt: f64,
) -> Result<ConvergenceCheck> {
    let last = |dt: f64| -> Result<BlochState> {
        let s = system.integrate(state0, 0.0, t_span, dt, usize::MAX)?;
        Ok(*s.states.last().expect("at least the initial sample"))
    };
    let (a, b, c) = (last(dt)?, last(dt / 2.0)?, last(dt / 4.0)?);
    Ok(ConvergenceCheck {
        coarse_diff: a.max_abs_diff(&b),
        fine_diff: b.max_abs_diff(&c),
    })
}

/// Time average of `J_x(t)/J_x(0)`: near 1 when self-trapped, near 0 for full
/// Rabi oscillation.
pub fn selftrap_order_parameter(series: &TimeSeries) -> Result<f64> {
    let jx0 = series.states.first().map(|s| s.jx).unwrap_or(0.0);
    if jx0 == 0.0 {
        return Err(Error::UndefinedOrderParameter);
    }
    if series.len() < 2 {
        return Ok(1.0);
    }
    let span = series.times[series.len() - 1] - series.times[0];
    let area: f64 = series
        .times
        .windows(2)
        .zip(series.states.windows(2))
        .map(|(t, s)| 0.5 * (t[1] - t[0]) * (s[0].jx + s[1].jx))
        .sum();
    Ok(area / span / jx0)
}
