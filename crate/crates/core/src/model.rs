//! Physical parameters, composite rates and the balanced-homodyne identities
//! linking imbalance, quadrature and optical phase.
//!
//! All rates are angular frequencies (rad/s) with `ħ = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Double-well trap rates and atom number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    /// Tunneling rate Ω.
    pub omega: f64,
    /// Self-collision rate κ.
    pub kappa: f64,
    /// Cross-collision rate η.
    pub eta: f64,
    /// Cross-collision tunneling correction Λ.
    pub lambda: f64,
    /// Total boson number N.
    pub n_atoms: u32,
}

impl TrapParams {
    pub fn new(omega: f64, kappa: f64, eta: f64, lambda: f64, n_atoms: u32) -> Self {
        Self {
            omega,
            kappa,
            eta,
            lambda,
            n_atoms,
        }
    }

    /// Total spin `j = N/2`.
    pub fn spin(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }

    /// Bare enhanced tunneling `Ω₀ = Ω + 2Λ(N−1)`.
    pub fn omega_bare(&self) -> f64 {
        self.omega + 2.0 * self.lambda * (f64::from(self.n_atoms) - 1.0)
    }

    /// Every violated invariant as `(parameter, reason)`.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n_atoms < 1 {
            out.push(("n_atoms", "must be at least 1".to_string()));
        }
        for (name, v) in [
            ("omega", self.omega),
            ("kappa", self.kappa),
            ("eta", self.eta),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() {
                out.push((name, format!("must be finite, got {v}")));
            }
        }
        if self.kappa < 0.0 {
            out.push(("kappa", format!("must be non-negative, got {}", self.kappa)));
        }
        if self.eta < 0.0 {
            out.push(("eta", format!("must be non-negative, got {}", self.eta)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }
}

/// Dispersive cavity and optical homodyne readout chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    /// Dispersive coupling ξ.
    pub xi: f64,
    /// Mean intracavity photon number `N_f = |c₀|²`.
    pub n_photons: f64,
    /// Cavity damping γ.
    pub gamma: f64,
    /// Coherent drive strength ς.
    pub drive: f64,
    /// Drive detuning δ.
    pub detuning: f64,
    /// Local-oscillator amplitude |d|.
    pub lo_amp: f64,
    /// Cavity-output amplitude |c|.
    pub cav_amp: f64,
}

impl Default for CavityParams {
    /// No cavity: zero coupling and photons, unit detector amplitudes.
    fn default() -> Self {
        Self {
            xi: 0.0,
            n_photons: 0.0,
            gamma: 1.0,
            drive: 0.0,
            detuning: 0.0,
            lo_amp: 1.0,
            cav_amp: 1.0,
        }
    }
}

impl CavityParams {
    /// `ξ N_f`, the dispersive rotation rate of the Bloch vector.
    pub fn dispersive_rate(&self) -> f64 {
        self.xi * self.n_photons
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (name, v) in [
            ("xi", self.xi),
            ("n_photons", self.n_photons),
            ("gamma", self.gamma),
            ("drive", self.drive),
            ("detuning", self.detuning),
            ("lo_amp", self.lo_amp),
            ("cav_amp", self.cav_amp),
        ] {
            if !v.is_finite() {
                out.push((name, format!("must be finite, got {v}")));
            }
        }
        if self.n_photons < 0.0 {
            out.push(("n_photons", format!("must be non-negative, got {}", self.n_photons)));
        }
        if self.gamma < 0.0 {
            out.push(("gamma", format!("must be non-negative, got {}", self.gamma)));
        }
        if self.lo_amp < 0.0 {
            out.push(("lo_amp", format!("must be non-negative, got {}", self.lo_amp)));
        }
        if self.cav_amp < 0.0 {
            out.push(("cav_amp", format!("must be non-negative, got {}", self.cav_amp)));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        first_violation(self.violations())
    }

    /// Measurement strength `Γ = 16 ξ² ς² / γ²`.
    pub fn measurement_strength(&self) -> Result<f64> {
        if self.drive == 0.0 {
            return Ok(0.0);
        }
        if self.gamma == 0.0 {
            return Err(Error::invalid(
                "gamma",
                "cavity damping must be positive when the cavity is driven",
            ));
        }
        Ok(16.0 * self.xi.powi(2) * self.drive.powi(2) / self.gamma.powi(2))
    }
}

/// A violated parameter invariant: `(parameter name, reason)`.
pub type Violation = (&'static str, String);

fn first_violation(v: Vec<Violation>) -> Result<()> {
    match v.into_iter().next() {
        None => Ok(()),
        Some((name, reason)) => Err(Error::InvalidParameter { name, reason }),
    }
}

/// Composite frequencies governing every regime of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Effective tunneling `Ω′ = Ω + 2Λ(N−1) + 8κ⟨J_z(0)⟩`.
    pub omega_prime: f64,
    /// Dressed frequency `ω = sqrt(Ω′² + ξ²N_f²)`.
    pub omega_eff: f64,
    /// Smallness parameter `ε = κ/(ξN_f)`; infinite when there is no cavity.
    pub epsilon: f64,
    /// Measurement strength Γ.
    pub gamma_meas: f64,
}

impl DerivedRates {
    /// Rates from `Ω′` and `ξN_f` directly, with `ε` and `Γ` supplied.
    pub fn from_frequencies(omega_prime: f64, dispersive_rate: f64, epsilon: f64, gamma_meas: f64) -> Self {
        Self {
            omega_prime,
            omega_eff: omega_prime.hypot(dispersive_rate),
            epsilon,
            gamma_meas,
        }
    }

    /// Whether the ε-expansion is defined (a cavity is present).
    pub fn epsilon_applicable(&self) -> bool {
        self.epsilon.is_finite()
    }

    /// `ξN_f` recovered from `ω² − Ω′²`.
    pub fn dispersive_rate(&self) -> f64 {
        (self.omega_eff.powi(2) - self.omega_prime.powi(2)).max(0.0).sqrt()
    }
}

pub fn derived_rates(trap: &TrapParams, cavity: &CavityParams, jz0: f64) -> Result<DerivedRates> {
    let omega_prime = trap.omega_bare() + 8.0 * trap.kappa * jz0;
    let g = cavity.dispersive_rate();
    let epsilon = if g == 0.0 {
        f64::INFINITY
    } else {
        trap.kappa / g.abs()
    };
    Ok(DerivedRates {
        omega_prime,
        omega_eff: omega_prime.hypot(g),
        epsilon,
        gamma_meas: cavity.measurement_strength()?,
    })
}

/// Mean-field expectation triplet `(⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochState {
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
}

impl BlochState {
    pub const ZERO: BlochState = BlochState {
        jx: 0.0,
        jy: 0.0,
        jz: 0.0,
    };

    pub fn new(jx: f64, jy: f64, jz: f64) -> Self {
        Self { jx, jy, jz }
    }

    pub fn norm_sq(&self) -> f64 {
        self.jx * self.jx + self.jy * self.jy + self.jz * self.jz
    }

    /// `|J|² ≤ j(j+1)` for `j = N/2`.
    pub fn is_physical(&self, n_atoms: u32) -> bool {
        let j = f64::from(n_atoms) / 2.0;
        self.norm_sq() <= j * (j + 1.0) * (1.0 + 1e-12)
    }

    pub fn axpy(&self, a: f64, other: &BlochState) -> BlochState {
        BlochState {
            jx: self.jx + a * other.jx,
            jy: self.jy + a * other.jy,
            jz: self.jz + a * other.jz,
        }
    }

    pub fn max_abs_diff(&self, other: &BlochState) -> f64 {
        (self.jx - other.jx)
            .abs()
            .max((self.jy - other.jy).abs())
            .max((self.jz - other.jz).abs())
    }
}

/// Local-oscillator mode and the signal quadrature it reads out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CondensateSignal {
    pub beta_mag: f64,
    pub theta: f64,
    pub x_quad: f64,
}

impl CondensateSignal {
    pub fn from_jy(jy0: f64, beta_mag: f64, theta: f64) -> Result<Self> {
        Ok(Self {
            beta_mag,
            theta,
            x_quad: quadrature_from_jy(jy0, beta_mag)?,
        })
    }
}

fn check_beta(beta_mag: f64) -> Result<()> {
    if beta_mag == 0.0 {
        return Err(Error::Division("beta_mag"));
    }
    if !(beta_mag > 0.0) {
        return Err(Error::invalid("beta_mag", format!("must be positive, got {beta_mag}")));
    }
    Ok(())
}

/// Signal quadrature `⟨X_{θ−π/2}⟩ = −⟨J_y(0)⟩/|β|`.
pub fn quadrature_from_jy(jy0: f64, beta_mag: f64) -> Result<f64> {
    check_beta(beta_mag)?;
    Ok(-jy0 / beta_mag)
}

/// Quadrature inferred from a measured imbalance at a 50:50 time.
pub fn atomic_bohd_invert(jx: f64, beta_mag: f64) -> Result<f64> {
    check_beta(beta_mag)?;
    Ok(jx / beta_mag)
}

/// Times `t_n = (2n+1)π/(2Ω′)` at which the tunneling acts as a 50:50 splitter.
pub fn optimal_beamsplitter_times(omega_prime: f64, n_max: usize) -> Result<Vec<f64>> {
    if !(omega_prime > 0.0) || !omega_prime.is_finite() {
        return Err(Error::invalid(
            "omega_prime",
            format!("must be positive and finite, got {omega_prime}"),
        ));
    }
    Ok((0..=n_max)
        .map(|n| (2 * n + 1) as f64 * std::f64::consts::PI / (2.0 * omega_prime))
        .collect())
}

/// Photon-count difference `⟨𝒥_xf⟩ = −|c||d| sin φ`.
pub fn optical_bohd(phase: f64, cav_amp: f64, lo_amp: f64) -> f64 {
    -cav_amp * lo_amp * phase.sin()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn trap(omega: f64) -> TrapParams {
        TrapParams::new(omega, 0.0, 0.0, 0.0, 10)
    }

    #[test]
    fn omega_prime_without_corrections() {
        let r = derived_rates(&trap(25.0), &CavityParams::default(), 0.0).unwrap();
        assert_eq!(r.omega_prime, 25.0);
        assert!(!r.epsilon_applicable());
    }

    #[test]
    fn omega_prime_collects_all_shifts() {
        let t = TrapParams::new(2.0, 0.5, 0.1, 0.25, 11);
        let r = derived_rates(&t, &CavityParams::default(), 3.0).unwrap();
        assert_eq!(r.omega_prime, 2.0 + 2.0 * 0.25 * 10.0 + 8.0 * 0.5 * 3.0);
    }

    #[test]
    fn dispersive_rate_from_fig3_frequencies() {
        let r = DerivedRates::from_frequencies(25.0, 0.0, 0.0, 0.0);
        assert_eq!(r.omega_eff, 25.0);
        let r = DerivedRates {
            omega_eff: 30.0,
            ..r
        };
        assert!((r.dispersive_rate() - 16.583123951777).abs() < 1e-9);
    }

    #[test]
    fn epsilon_for_quoted_parameters() {
        let t = TrapParams::new(1e3, 20.0, 0.0, 0.0, 1000);
        let c = CavityParams {
            xi: 1e-3,
            n_photons: 1e10,
            ..CavityParams::default()
        };
        let r = derived_rates(&t, &c, 0.0).unwrap();
        assert!((r.epsilon - 2e-6).abs() < 1e-18);
    }

    #[test]
    fn measurement_strength() {
        let c = CavityParams {
            xi: 0.5,
            drive: 2.0,
            gamma: 4.0,
            ..CavityParams::default()
        };
        assert_eq!(c.measurement_strength().unwrap(), 16.0 * 0.25 * 4.0 / 16.0);
        let bad = CavityParams { gamma: 0.0, ..c };
        assert!(matches!(
            bad.measurement_strength(),
            Err(Error::InvalidParameter { name: "gamma", .. })
        ));
        let undriven = CavityParams { drive: 0.0, ..bad };
        assert_eq!(undriven.measurement_strength().unwrap(), 0.0);
    }

    #[test]
    fn quadrature_examples() {
        assert_eq!(quadrature_from_jy(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(quadrature_from_jy(-5.0, 5.0).unwrap(), 1.0);
        let x = quadrature_from_jy(1667.0, 5000f64.sqrt()).unwrap();
        assert!((x + 23.574940084759493).abs() < 1e-12);
        assert!(matches!(quadrature_from_jy(1.0, 0.0), Err(Error::Division(_))));
    }

    #[test]
    fn bohd_invert_examples() {
        assert_eq!(atomic_bohd_invert(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(atomic_bohd_invert(3.0, 2.0).unwrap(), 1.5);
        assert!(atomic_bohd_invert(3.0, 0.0).is_err());
    }

    #[test]
    fn beamsplitter_times() {
        let t = optimal_beamsplitter_times(PI, 1).unwrap();
        assert!((t[0] - 0.5).abs() < 1e-15 && (t[1] - 1.5).abs() < 1e-15);
        let t = optimal_beamsplitter_times(25.0, 0).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0] - PI / 50.0).abs() < 1e-15);
        assert_eq!(optimal_beamsplitter_times(1.0, 0).unwrap(), vec![PI / 2.0]);
        assert!(optimal_beamsplitter_times(0.0, 3).is_err());
        assert!(optimal_beamsplitter_times(-1.0, 3).is_err());
    }

    #[test]
    fn optical_bohd_examples() {
        assert_eq!(optical_bohd(0.0, 1.0, 1.0), 0.0);
        assert_eq!(optical_bohd(PI / 2.0, 1.0, 1.0), -1.0);
        assert!((optical_bohd(-0.4631, 1.0, 1.0) - 0.4467237320898554).abs() < 1e-12);
    }

    #[test]
    fn validation_reports_every_violation() {
        let t = TrapParams::new(f64::NAN, -1.0, -2.0, 0.0, 0);
        let v = t.violations();
        assert_eq!(v.len(), 4, "{v:?}");
        let c = CavityParams {
            gamma: -1.0,
            lo_amp: -1.0,
            ..CavityParams::default()
        };
        let err = c.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "gamma", .. }));
    }

    proptest! {
        #[test]
        fn omega_eff_dominates_omega_prime(
            omega in -1e3f64..1e3, kappa in 0f64..10.0, lambda in -1.0f64..1.0,
            jz0 in -50f64..50.0, xi in -1.0f64..1.0, nf in 0f64..1e4,
        ) {
            let t = TrapParams::new(omega, kappa, 0.0, lambda, 100);
            let c = CavityParams { xi, n_photons: nf, ..CavityParams::default() };
            let r = derived_rates(&t, &c, jz0).unwrap();
            prop_assert!(r.omega_eff >= r.omega_prime.abs());
            prop_assert!(r.epsilon >= 0.0);
        }

        #[test]
        fn bohd_inversion_round_trip(x in -1e6f64..1e6, beta in 1e-3f64..1e3) {
            let back = atomic_bohd_invert(beta * x, beta).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }

        #[test]
        fn optical_bohd_odd_and_periodic(phi in -100f64..100.0, c in 0f64..5.0, d in 0f64..5.0) {
            prop_assert_eq!(optical_bohd(-phi, c, d), -optical_bohd(phi, c, d));
            let shifted = optical_bohd(phi + 2.0 * PI, c, d);
            prop_assert!((shifted - optical_bohd(phi, c, d)).abs() < 1e-12 * (1.0 + c * d));
        }

        #[test]
        fn beamsplitter_times_are_fifty_fifty(omega_prime in 1e-2f64..1e3, n_max in 0usize..50) {
            let ts = optimal_beamsplitter_times(omega_prime, n_max).unwrap();
            for w in ts.windows(2) {
                prop_assert!(w[1] > w[0]);
            }
            for t in ts {
                prop_assert!(((omega_prime * t).sin().abs() - 1.0).abs() < 1e-12);
            }
        }
    }
}
