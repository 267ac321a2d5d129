//! Closed-form expansion in `ε = κ/(ξN_f)` of the imbalance, the cavity phase
//! and the optical homodyne current.
//!
//! The zeroth order is the rigid rotation of the Bloch vector at the dressed
//! frequency `ω = sqrt(Ω′² + ξ²N_f²)`. The first-order closed forms contain an
//! explicitly imaginary term; observables use the real part and the imaginary
//! part is available as a diagnostic.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BlochState, DerivedRates};

/// Time profile of a signal quadrature `⟨X_{θ−π/2}(t)⟩`.
#[derive(Clone)]
pub enum QuadratureProfile {
    Zero,
    Constant(f64),
    /// `amplitude · cos(frequency · t)`.
    Rotating { amplitude: f64, frequency: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl QuadratureProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            QuadratureProfile::Zero => 0.0,
            QuadratureProfile::Constant(x) => *x,
            QuadratureProfile::Rotating {
                amplitude,
                frequency,
            } => amplitude * (frequency * t).cos(),
            QuadratureProfile::Custom(f) => f(t),
        }
    }
}

impl fmt::Debug for QuadratureProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QuadratureProfile::Zero => write!(f, "Zero"),
            QuadratureProfile::Constant(x) => write!(f, "Constant({x})"),
            QuadratureProfile::Rotating {
                amplitude,
                frequency,
            } => write!(f, "Rotating {{ amplitude: {amplitude}, frequency: {frequency} }}"),
            QuadratureProfile::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PerturbationInputs {
    pub rates: DerivedRates,
    /// Dispersive coupling ξ.
    pub xi: f64,
    pub n_atoms: f64,
    /// Local-oscillator amplitude |β|.
    pub beta_mag: f64,
    /// Initial `⟨J_y⟩` (with `⟨J_x(0)⟩ = ⟨J_z(0)⟩ = 0`).
    pub jy0: f64,
    pub x_quad_zero: QuadratureProfile,
    pub x_quad_one: QuadratureProfile,
    /// Cavity-output amplitude |c|.
    pub cav_amp: f64,
    /// Local-oscillator amplitude |d| of the optical readout.
    pub lo_amp: f64,
}

impl PerturbationInputs {
    /// Equal splitting: `|β| = sqrt(N/2)`, zeroth-order quadrature
    /// `−J_y(0) cos(ωt)/|β|`, no first-order quadrature, unit detector amplitudes.
    pub fn new(rates: DerivedRates, xi: f64, n_atoms: f64, jy0: f64) -> Self {
        let beta_mag = (n_atoms / 2.0).sqrt();
        Self {
            rates,
            xi,
            n_atoms,
            beta_mag,
            jy0,
            x_quad_zero: QuadratureProfile::Rotating {
                amplitude: -jy0 / beta_mag,
                frequency: rates.omega_eff,
            },
            x_quad_one: QuadratureProfile::Zero,
            cav_amp: 1.0,
            lo_amp: 1.0,
        }
    }

    pub fn with_first_order(mut self, profile: QuadratureProfile) -> Self {
        self.x_quad_one = profile;
        self
    }

    fn omega(&self) -> Result<f64> {
        let w = self.rates.omega_eff;
        if !(w > 0.0) {
            return Err(Error::invalid("omega_eff", format!("must be positive, got {w}")));
        }
        Ok(w)
    }

    fn omega_prime_nonzero(&self) -> Result<f64> {
        let wp = self.rates.omega_prime;
        if wp == 0.0 {
            return Err(Error::invalid("omega_prime", "must be non-zero"));
        }
        Ok(wp)
    }

    fn epsilon(&self) -> Result<f64> {
        let e = self.rates.epsilon;
        if !e.is_finite() {
            return Err(Error::invalid(
                "epsilon",
                "expansion undefined without a cavity (ξN_f = 0)",
            ));
        }
        Ok(e)
    }
}

/// `⟨J_x⁽⁰⁾(t)⟩ = (Ω′/ω) |β| ⟨X⁽⁰⁾(t − π/2ω)⟩`.
pub fn jx_zeroth(inp: &PerturbationInputs, t: f64) -> Result<f64> {
    let w = inp.omega()?;
    let x = inp.x_quad_zero.eval(t - FRAC_PI_2 / w);
    Ok(inp.rates.omega_prime / w * inp.beta_mag * x)
}

/// Zeroth-order Bloch vector for the default rotating profile.
pub fn bloch_zeroth(inp: &PerturbationInputs, t: f64) -> Result<BlochState> {
    let w = inp.omega()?;
    let (s, c) = (w * t).sin_cos();
    let g = inp.rates.dispersive_rate();
    Ok(BlochState {
        jx: -inp.rates.omega_prime / w * inp.jy0 * s,
        jy: inp.jy0 * c,
        jz: -g / w * inp.jy0 * s,
    })
}

fn denominator(w: f64, t: f64) -> f64 {
    1.0 + (2.0 * w * t).cos().powi(2)
}

/// First-order imbalance coefficient (complex).
pub fn jx_first(inp: &PerturbationInputs, t: f64) -> Result<Complex64> {
    let w = inp.omega()?;
    let wp = inp.omega_prime_nonzero()?;
    let (s2, c2) = (2.0 * w * t).sin_cos();
    let re = 1.5 * t + c2 * s2 / (4.0 * w);
    let im = -3.0 * w / (wp * wp) * (w * t).sin().powi(2);
    let pre = wp * inp.beta_mag / denominator(w, t) * inp.x_quad_one.eval(t);
    Ok(Complex64::new(re, im) * pre)
}

/// `⟨J_x⁽⁰⁾⟩ + ε Re⟨J_x⁽¹⁾⟩`.
pub fn jx_full(inp: &PerturbationInputs, t: f64) -> Result<f64> {
    let eps = inp.epsilon()?;
    Ok(jx_zeroth(inp, t)? + eps * jx_first(inp, t)?.re)
}

/// `φ⁽⁰⁾(t) = ξ((Ω′|β|/ω²) ⟨X⁽⁰⁾(t)⟩ − Nt/2)`.
pub fn phase_zeroth(inp: &PerturbationInputs, t: f64) -> Result<f64> {
    let w = inp.omega()?;
    let gain = inp.rates.omega_prime * inp.beta_mag / (w * w);
    Ok(inp.xi * (gain * inp.x_quad_zero.eval(t) - inp.n_atoms * t / 2.0))
}

/// First-order phase coefficient (complex).
pub fn phase_first(inp: &PerturbationInputs, t: f64) -> Result<Complex64> {
    let w = inp.omega()?;
    let wp = inp.omega_prime_nonzero()?;
    let (s, c) = (w * t).sin_cos();
    let re = 0.75 * t * t + (2.0 * w * t).sin().powi(2) / (16.0 * w * w);
    let im = -1.5 * w / (wp * wp) * (t - s * c / w);
    let pre = wp * inp.beta_mag / denominator(w, t) * inp.x_quad_one.eval(t);
    let bracket = Complex64::new(re, im) * pre;
    Ok(-inp.xi * (Complex64::new(inp.n_atoms * t / 2.0, 0.0) + bracket))
}

/// `φ⁽⁰⁾ + ε Re φ⁽¹⁾`.
pub fn phase_full(inp: &PerturbationInputs, t: f64) -> Result<f64> {
    let eps = inp.epsilon()?;
    Ok(phase_zeroth(inp, t)? + eps * phase_first(inp, t)?.re)
}

/// Inverts the zeroth-order phase for the condensate quadrature.
pub fn quadrature_from_phase(phase: f64, t: f64, inp: &PerturbationInputs) -> Result<f64> {
    let w = inp.omega()?;
    if inp.xi == 0.0 {
        return Err(Error::Division("xi"));
    }
    if !(inp.rates.omega_prime > 0.0) {
        return Err(Error::invalid("omega_prime", "must be positive"));
    }
    if !(inp.beta_mag > 0.0) {
        return Err(Error::Division("beta_mag"));
    }
    Ok(w * w / (inp.rates.omega_prime * inp.beta_mag) * (phase / inp.xi + inp.n_atoms * t / 2.0))
}

fn sine_argument(jy0: f64, inp: &PerturbationInputs, t: f64) -> Result<f64> {
    let w = inp.omega()?;
    Ok(inp.xi * (inp.rates.omega_prime / (w * w) * (w * t).cos() * jy0 + inp.n_atoms * t / 2.0))
}

/// Explicit zeroth-order cavity phase `φ(t) = −ξ((Ω′/ω²) cos(ωt) J_y(0) + Nt/2)`.
pub fn phase_trajectory(jy0: f64, inp: &PerturbationInputs, t: f64) -> Result<f64> {
    Ok(-sine_argument(jy0, inp, t)?)
}

/// Measured optical homodyne current `|c||d| sin[ξ((Ω′/ω²) cos(ωt) J_y(0) + Nt/2)]`.
pub fn homodyne_current_analytic(jy0: f64, inp: &PerturbationInputs, t: f64) -> Result<f64> {
    Ok(inp.cav_amp * inp.lo_amp * sine_argument(jy0, inp, t)?.sin())
}
