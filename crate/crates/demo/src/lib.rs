//! Browser front end: three small simulations returned as curves for a canvas.
//!
//! Each export has a plain-Rust twin returning `Result<Curve, String>` so the
//! numerics can be tested natively.

use homodyne_core::experiments::{fig3_inputs, modulation_period, run_fig5_with, uniform_grid, Fig3Variant, Fig5Params};
use homodyne_core::meanfield::{selftrap_order_parameter, MeanfieldSystem, MeanfieldVariant, VariantTag};
use homodyne_core::model::{BlochState, CavityParams, TrapParams};
use homodyne_core::perturbation::{homodyne_current_analytic, phase_trajectory};
use wasm_bindgen::prelude::*;

/// Points per curve sent to the page.
const POINTS: usize = 1000;
/// Largest condensate the trajectory demo accepts.
pub const MAX_DEMO_ATOMS: u32 = 30;

#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    t: Vec<f64>,
    y: Vec<f64>,
    reference: Vec<f64>,
    summary: String,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn t(&self) -> Vec<f64> {
        self.t.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }

    /// Second curve on the same grid; empty when there is none.
    #[wasm_bindgen(getter)]
    pub fn reference(&self) -> Vec<f64> {
        self.reference.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn summary(&self) -> String {
        self.summary.clone()
    }
}

fn finite(name: &str, v: f64) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{name} must be a finite number"))
    }
}

/// Homodyne current of the rigid rotation at ω = 30 s⁻¹ on `[0, t_end]`.
pub fn rotation_curve(jy0: f64, t_end: f64) -> Result<Curve, String> {
    let jy0 = finite("J_y(0)", jy0)?;
    if !(t_end > 0.0 && t_end <= 10.0) {
        return Err("duration must be in (0, 10] s".to_string());
    }
    let inp = fig3_inputs(Fig3Variant::A);
    let t = uniform_grid(0.0, t_end, POINTS);
    let mut y = Vec::with_capacity(t.len());
    let mut phase = Vec::with_capacity(t.len());
    for &tk in &t {
        y.push(homodyne_current_analytic(jy0, &inp, tk).map_err(|e| e.to_string())?);
        phase.push(phase_trajectory(jy0, &inp, tk).map_err(|e| e.to_string())?);
    }
    let period = modulation_period(&t, &phase)
        .map(|p| format!(", modulation period {p:.4} s"))
        .unwrap_or_default();
    Ok(Curve {
        summary: format!("I(0) = {:.6}{period}", y[0]),
        t,
        y,
        reference: Vec::new(),
    })
}

/// Closed mean-field `J_x/j` for `N = 100`, `Ω = 1`, over 20 tunneling periods.
pub fn trapping_curve(kappa_n_over_omega: f64, eta_over_kappa: f64, imbalance: f64) -> Result<Curve, String> {
    let knw = finite("κN/Ω", kappa_n_over_omega)?;
    let ek = finite("η/κ", eta_over_kappa)?;
    if !(imbalance > 0.0 && imbalance <= 1.0) {
        return Err("imbalance must be in (0, 1]".to_string());
    }
    let n = 100u32;
    let kappa = knw / f64::from(n);
    let trap = TrapParams::new(1.0, kappa, ek * kappa, 0.0, n);
    let sys = MeanfieldSystem::new(MeanfieldVariant::new(VariantTag::Closed), trap, CavityParams::default())
        .map_err(|e| e.to_string())?;
    let j = trap.spin();
    let s0 = BlochState::new(imbalance * j, (1.0 - imbalance * imbalance).sqrt() * j, 0.0);
    let t_end = 20.0 * std::f64::consts::TAU;
    let dt = 0.05 / sys.max_frequency(sys.omega_prime(0.0));
    let steps = (t_end / dt).ceil() as usize;
    let series = sys
        .integrate(s0, 0.0, (0.0, t_end), dt, steps.div_ceil(POINTS).max(1))
        .map_err(|e| e.to_string())?;
    let order = selftrap_order_parameter(&series).map_err(|e| e.to_string())?;
    Ok(Curve {
        summary: format!("self-trapping order parameter {order:.4}"),
        y: series.jx().iter().map(|v| v / j).collect(),
        t: series.times,
        reference: Vec::new(),
    })
}

/// One conditional homodyne current and the unconditional (master-equation)
/// current for the same parameters, in units where Ω′ = 1.
pub fn trajectory_curve(n_atoms: u32, gamma_ratio: f64, seed: u64) -> Result<Curve, String> {
    if !(1..=MAX_DEMO_ATOMS).contains(&n_atoms) {
        return Err(format!("N must be between 1 and {MAX_DEMO_ATOMS}"));
    }
    let gamma = finite("Γ/Ω′", gamma_ratio)?;
    let p = Fig5Params {
        gamma_ratio: gamma,
        t_end: 50.0,
        ..Fig5Params::new(n_atoms)
    };
    let out = run_fig5_with(&p, &[seed]).map_err(|e| e.to_string())?;
    let traj = &out.trajectories[0];
    let current = traj.current.clone().ok_or("no current on the trajectory")?;
    let reference = out.master.current.clone().ok_or("no current on the master run")?;
    Ok(Curve {
        summary: format!("N = {n_atoms}, Γ/Ω′ = {gamma}, seed {seed}"),
        t: traj.times.clone(),
        y: current,
        reference,
    })
}

#[wasm_bindgen]
pub fn rotation_current(jy0: f64, t_end: f64) -> Result<Curve, JsError> {
    rotation_curve(jy0, t_end).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn self_trapping(kappa_n_over_omega: f64, eta_over_kappa: f64, imbalance: f64) -> Result<Curve, JsError> {
    trapping_curve(kappa_n_over_omega, eta_over_kappa, imbalance).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn conditional_current(n_atoms: u32, gamma_ratio: f64, seed: u32) -> Result<Curve, JsError> {
    trajectory_curve(n_atoms, gamma_ratio, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn version() -> String {
    homodyne_core::VERSION.to_string()
}
