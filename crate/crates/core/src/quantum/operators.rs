use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{BlochState, CavityParams, TrapParams};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Largest atom number accepted by [`build_spin_operators`].
pub const DIMENSION_CAP: usize = 512;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Schwinger operators for `N` bosons in the `J_x` eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub n_atoms: u32,
    pub jx: CMatrix,
    pub jy: CMatrix,
    pub jz: CMatrix,
    pub j2: CMatrix,
    /// Diagonal of `jx`: `m = −j, …, j`.
    pub m: Vec<f64>,
}

impl SpinOperators {
    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn spin(&self) -> f64 {
        f64::from(self.n_atoms) / 2.0
    }
}

pub fn build_spin_operators(n_atoms: u32) -> Result<SpinOperators> {
    build_spin_operators_capped(n_atoms, DIMENSION_CAP)
}

pub fn build_spin_operators_capped(n_atoms: u32, cap: usize) -> Result<SpinOperators> {
    if n_atoms < 1 {
        return Err(Error::invalid("n_atoms", "must be at least 1"));
    }
    if n_atoms as usize > cap {
        return Err(Error::ResourceLimit {
            what: "n_atoms",
            value: n_atoms as usize,
            cap,
        });
    }
    let dim = n_atoms as usize + 1;
    let j = f64::from(n_atoms) / 2.0;
    let m: Vec<f64> = (0..dim).map(|i| -j + i as f64).collect();

    // Raising operator about the x axis: J₊ = J_y + iJ_z.
    let mut raise = CMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        raise[(i + 1, i)] = Complex64::from((j * (j + 1.0) - m[i] * (m[i] + 1.0)).sqrt());
    }
    let lower = raise.adjoint();
    let jx = CMatrix::from_diagonal(&DVector::from_iterator(dim, m.iter().map(|&v| Complex64::from(v))));
    let jy = (&raise + &lower) * Complex64::from(0.5);
    let jz = (&raise - &lower) * (-0.5 * I);
    let j2 = &jx * &jx + &jy * &jy + &jz * &jz;
    Ok(SpinOperators {
        n_atoms,
        jx,
        jy,
        jz,
        j2,
        m,
    })
}

/// Two-mode Hamiltonian with the cavity treated classically (`c†c → N_f`):
/// `H = Ω₀ J_z + 4η J_z² + 2(κ−η) J_x² − ξ N_f J_x`.
///
/// The `−ξ N_f N/2` constant is dropped as a global phase.
pub fn build_hamiltonian(trap: &TrapParams, cavity: &CavityParams, ops: &SpinOperators) -> CMatrix {
    let c = Complex64::from;
    let jz2 = &ops.jz * &ops.jz;
    let jx2 = &ops.jx * &ops.jx;
    &ops.jz * c(trap.omega_bare()) + jz2 * c(4.0 * trap.eta) + jx2 * c(2.0 * (trap.kappa - trap.eta))
        - &ops.jx * c(cavity.dispersive_rate())
}

/// Pure or mixed state of the Dicke sector.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(CVector),
    Mixed(CMatrix),
}

/// Tolerances on state validity.
pub const NORM_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-6;

impl QuantumState {
    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(v) => v.len(),
            QuantumState::Mixed(m) => m.nrows(),
        }
    }

    /// Promotes a pure state to `|ψ⟩⟨ψ|`.
    pub fn to_density(&self) -> CMatrix {
        match self {
            QuantumState::Pure(v) => v * v.adjoint(),
            QuantumState::Mixed(m) => m.clone(),
        }
    }

    /// Norm (pure) or trace (mixed).
    pub fn weight(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm_squared(),
            QuantumState::Mixed(m) => m.trace().re,
        }
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        match self {
            QuantumState::Pure(v) => v.dotc(&(op * v)).re,
            QuantumState::Mixed(m) => (op * m).trace().re,
        }
    }

    pub fn bloch(&self, ops: &SpinOperators) -> BlochState {
        BlochState {
            jx: self.expectation(&ops.jx),
            jy: self.expectation(&ops.jy),
            jz: self.expectation(&ops.jz),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            QuantumState::Pure(v) => v.norm_squared().powi(2),
            QuantumState::Mixed(m) => m.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    /// Unit norm, or unit trace + Hermitian + positive semidefinite.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::invalid("state", reason));
        match self {
            QuantumState::Pure(v) => {
                let n = v.norm_squared();
                if (n - 1.0).abs() > NORM_TOL {
                    return bad(format!("norm² = {n}, expected 1"));
                }
            }
            QuantumState::Mixed(m) => {
                let tr = m.trace();
                if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
                    return bad(format!("trace = {tr}, expected 1"));
                }
                let herm = hermiticity_defect(m);
                if herm > NORM_TOL {
                    return bad(format!("not Hermitian (defect {herm:.3e})"));
                }
                let min = min_eigenvalue(m);
                if min < -POSITIVITY_TOL {
                    return bad(format!("negative eigenvalue {min:.3e}"));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn min_eigenvalue(m: &CMatrix) -> f64 {
    // Symmetrize so the Hermitian solver sees exactly Hermitian input.
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// SU(2) coherent state pointing along `(θ, φ)` measured from the `+x` axis:
/// `⟨J_x⟩ = j cos θ`, `⟨J_y⟩ = j sin θ cos φ`, `⟨J_z⟩ = j sin θ sin φ`.
pub fn coherent_spin_state(theta: f64, phi: f64, ops: &SpinOperators) -> QuantumState {
    let n = ops.n_atoms as i32;
    let (s, c) = (theta / 2.0).sin_cos();
    let mut ln_binom = 0.0f64; // ln C(n, k), built incrementally in k
    let amps = (0..=n).map(|k| {
        // k = j + m counts atoms in the `+m` direction.
        if k > 0 {
            ln_binom += f64::from(n - k + 1).ln() - f64::from(k).ln();
        }
        let mag = (0.5 * ln_binom).exp() * c.powi(k) * s.powi(n - k);
        Complex64::from_polar(mag, f64::from(n - k) * phi)
    });
    let v = CVector::from_iterator(ops.dim(), amps.collect::<Vec<_>>());
    let norm = v.norm();
    QuantumState::Pure(v / Complex64::from(norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_half() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(ops.m, vec![-0.5, 0.5]);
        assert_eq!(ops.jy[(0, 1)], Complex64::from(0.5));
        assert_eq!(ops.jy[(1, 0)], Complex64::from(0.5));
        assert_eq!(ops.jz[(1, 0)], Complex64::new(0.0, -0.5));
        assert_eq!(ops.jz[(0, 1)], Complex64::new(0.0, 0.5));
    }

    #[test]
    fn spin_one_diagonal() {
        let ops = build_spin_operators(2).unwrap();
        let d: Vec<f64> = ops.jx.diagonal().iter().map(|z| z.re).collect();
        assert_eq!(d, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn algebra_up_to_ten() {
        for n in 1..=10u32 {
            let ops = build_spin_operators(n).unwrap();
            let j = ops.spin();
            for op in [&ops.jx, &ops.jy, &ops.jz] {
                assert!(op.trace().norm() < 1e-12);
                assert!(hermiticity_defect(op) < 1e-14);
            }
            let comm = |a: &CMatrix, b: &CMatrix| a * b - b * a;
            assert!(max_abs(&(comm(&ops.jx, &ops.jy) - &ops.jz * I)) < 1e-12);
            assert!(max_abs(&(comm(&ops.jy, &ops.jz) - &ops.jx * I)) < 1e-12);
            assert!(max_abs(&(comm(&ops.jz, &ops.jx) - &ops.jy * I)) < 1e-12);
            let casimir = CMatrix::identity(ops.dim(), ops.dim()) * Complex64::from(j * (j + 1.0));
            assert!(max_abs(&(&ops.j2 - casimir)) < 1e-12);
        }
    }

    #[test]
    fn dimension_cap() {
        assert!(matches!(
            build_spin_operators(513),
            Err(Error::ResourceLimit { value: 513, .. })
        ));
        assert!(build_spin_operators_capped(20, 10).is_err());
        assert!(build_spin_operators(0).is_err());
    }

    #[test]
    fn hamiltonian_structure() {
        let ops = build_spin_operators(6).unwrap();
        let zero = build_hamiltonian(&TrapParams::new(0.0, 0.0, 0.0, 0.0, 6), &CavityParams::default(), &ops);
        assert_eq!(max_abs(&zero), 0.0);

        let trap = TrapParams::new(1.2, 0.3, 0.3, 0.01, 6);
        let h = build_hamiltonian(&trap, &CavityParams::default(), &ops);
        let expect = &ops.jz * Complex64::from(trap.omega_bare()) + &ops.jz * &ops.jz * Complex64::from(1.2);
        assert!(max_abs(&(&h - expect)) < 1e-14);
        // Commutes with J_z, so the rotation generator has no J_x component.
        assert!(max_abs(&(&h * &ops.jz - &ops.jz * &h)) < 1e-12);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let ops = build_spin_operators(9).unwrap();
        let mut seed = 7u64;
        let mut draw = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..20 {
            let trap = TrapParams::new(draw() * 3.0, draw(), draw(), draw() * 0.1, 9);
            let cav = CavityParams {
                xi: draw(),
                n_photons: draw() * 10.0,
                ..CavityParams::default()
            };
            let h = build_hamiltonian(&trap, &cav, &ops);
            assert!(hermiticity_defect(&h) < 1e-14);
        }
    }

    #[test]
    fn coherent_state_orientation() {
        let ops = build_spin_operators(10).unwrap();
        let j = ops.spin();
        let north = coherent_spin_state(0.0, 0.3, &ops);
        let b = north.bloch(&ops);
        assert!((b.jx - j).abs() < 1e-12 && b.jy.abs() < 1e-12 && b.jz.abs() < 1e-12);

        let y = coherent_spin_state(PI / 2.0, 0.0, &ops);
        let b = y.bloch(&ops);
        assert!(b.jx.abs() < 1e-12 && (b.jy - j).abs() < 1e-12 && b.jz.abs() < 1e-12);

        let z = coherent_spin_state(PI / 2.0, PI / 2.0, &ops);
        assert!((z.bloch(&ops).jz - j).abs() < 1e-12);

        for (theta, phi) in [(0.4, 1.1), (2.0, -0.7), (1.3, 3.0)] {
            let b = coherent_spin_state(theta, phi, &ops).bloch(&ops);
            assert!((b.jx - j * theta.cos()).abs() < 1e-12);
            assert!((b.jy - j * theta.sin() * phi.cos()).abs() < 1e-12);
            assert!((b.jz - j * theta.sin() * phi.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn coherent_state_variance_equatorial() {
        let ops = build_spin_operators(10).unwrap();
        let psi = coherent_spin_state(PI / 2.0, 0.0, &ops);
        // Brute-force ⟨J_x²⟩ − ⟨J_x⟩² over the amplitudes.
        let QuantumState::Pure(v) = &psi else { unreachable!() };
        let mean: f64 = v.iter().zip(&ops.m).map(|(a, m)| a.norm_sqr() * m).sum();
        let sq: f64 = v.iter().zip(&ops.m).map(|(a, m)| a.norm_sqr() * m * m).sum();
        assert!((sq - mean * mean - 2.5).abs() < 1e-12);
        psi.validate().unwrap();
    }

    #[test]
    fn large_coherent_state_is_finite() {
        let ops = build_spin_operators(512).unwrap();
        let psi = coherent_spin_state(1.0, 0.5, &ops);
        psi.validate().unwrap();
        assert!((psi.bloch(&ops).jx - 256.0 * 1f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn state_validation() {
        let ops = build_spin_operators(2).unwrap();
        let psi = coherent_spin_state(0.7, 0.2, &ops);
        let rho = QuantumState::Mixed(psi.to_density());
        rho.validate().unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        let mut bad = psi.to_density();
        bad[(0, 0)] += Complex64::from(0.1);
        assert!(QuantumState::Mixed(bad).validate().is_err());
        let neg = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex64::from(1.1),
            Complex64::from(-0.1),
            Complex64::from(0.0),
        ]));
        assert!(QuantumState::Mixed(neg).validate().is_err());
    }
}
