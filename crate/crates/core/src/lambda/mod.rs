//! Rotating-frame density-matrix model of the driven Λ system.
//!
//! Two optical fields with Rabi frequencies Ω₊ and Ω₋ couple the lower
//! states |+⟩ and |−⟩ to a common excited state |e⟩. The density matrix
//! lives in the rotating frame, over the basis ordering {|+⟩, |e⟩, |−⟩}.
//! All rates and frequencies are angular (rad/s).

mod adiabatic;
mod integrate;
mod liouville;

pub use adiabatic::{
    adiabatic_excited_population, adiabatic_optical_coherences, adiabatic_spin_coherence,
    analytic_cpt_halfwidth, in_adiabatic_regime, self_consistent_adiabatic_steady_state,
    AdiabaticCoherences, AdiabaticSteadyState,
};
pub use integrate::{evolve, evolve_sampled, Trajectory};
pub use liouville::{liouvillian_matrix, propagate_matrix_exp, steady_state};

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hermiticity tolerance of a valid density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance of a valid density matrix.
pub const TRACE_TOL: f64 = 1e-9;
/// Most negative eigenvalue a valid density matrix may have.
pub const POSITIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("integration failed: step size underflow at t = {time} s")]
    IntegrationFailure { time: f64 },
    #[error("state invariant violated at t = {time} s: {detail}")]
    InvariantViolation { time: f64, detail: String },
    #[error(
        "non-unique steady state ({0}); the precondition requires a dissipative pathway \
         connecting all states: Γ > 0 with branching to both ground states, or nonzero \
         spin exchange"
    )]
    NonUniqueSteadyState(String),
    #[error("two-photon denominator i(ω_B−δ) + γ_s + (Ω₊²+Ω₋²)/4γ is exactly zero")]
    ZeroDenominator,
    #[error("fixed-point closure did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
}

/// Full parameter record of the three-level model (angular units, rad/s).
///
/// The rotating-frame geometry ties the detunings together:
/// Δ₊ − Δ₋ = ω_B − δ, with Δ₊ = ω₀ − ω₊, Δ₋ = ω₀ − ω_B − ω₋ and
/// δ = ω₊ − ω₋. Construction enforces this identity; the laser
/// frequencies themselves never appear explicitly.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LambdaParams {
    /// Rabi frequency Ω₊ of the field driving |+⟩ ↔ |e⟩.
    pub rabi_plus: f64,
    /// Rabi frequency Ω₋ of the field driving |−⟩ ↔ |e⟩.
    pub rabi_minus: f64,
    /// Optical detuning Δ₊ = ω₀ − ω₊.
    pub detuning_plus: f64,
    /// Optical detuning Δ₋ = ω₀ − ω_B − ω₋.
    pub detuning_minus: f64,
    /// Two-photon detuning δ = ω₊ − ω₋.
    pub two_photon_detuning: f64,
    /// Ground-state spin splitting ω_B between |+⟩ and |−⟩.
    pub spin_splitting: f64,
    /// Optical dipole decoherence rate γ.
    pub gamma_optical: f64,
    /// Spin decoherence rate γ_s.
    pub gamma_spin: f64,
    /// Excited-state population decay rate Γ.
    pub gamma_excited: f64,
    /// Fraction of Γ decaying to |+⟩; the rest goes to |−⟩.
    pub branch_plus: f64,
    /// Ground-state population exchange rate |+⟩ → |−⟩.
    pub spin_flip_up: f64,
    /// Ground-state population exchange rate |−⟩ → |+⟩.
    pub spin_flip_down: f64,
}

/// Relative tolerance on the rotating-frame detuning identity.
const FRAME_CONSISTENCY_TOL: f64 = 1e-9;

impl LambdaParams {
    /// Validated constructor. `detuning_minus` is derived from the frame
    /// identity; use [`LambdaParamsBuilder`] to override and cross-check it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rabi_plus: f64,
        rabi_minus: f64,
        detuning_plus: f64,
        two_photon_detuning: f64,
        spin_splitting: f64,
        gamma_optical: f64,
        gamma_spin: f64,
        gamma_excited: f64,
        branch_plus: f64,
    ) -> Result<Self, DynamicsError> {
        let detuning_minus = detuning_plus - (spin_splitting - two_photon_detuning);
        let p = Self {
            rabi_plus,
            rabi_minus,
            detuning_plus,
            detuning_minus,
            two_photon_detuning,
            spin_splitting,
            gamma_optical,
            gamma_spin,
            gamma_excited,
            branch_plus,
            spin_flip_up: 0.0,
            spin_flip_down: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn builder() -> LambdaParamsBuilder {
        LambdaParamsBuilder::default()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        for (name, v) in [
            ("rabi_plus", self.rabi_plus),
            ("rabi_minus", self.rabi_minus),
            ("gamma_optical", self.gamma_optical),
            ("gamma_spin", self.gamma_spin),
            ("gamma_excited", self.gamma_excited),
            ("spin_flip_up", self.spin_flip_up),
            ("spin_flip_down", self.spin_flip_down),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(DynamicsError::InvalidParams(format!(
                    "{name} must be a finite non-negative rate, got {v}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.branch_plus) {
            return Err(DynamicsError::InvalidParams(format!(
                "branch_plus must lie in [0, 1], got {}",
                self.branch_plus
            )));
        }
        let lhs = self.detuning_plus - self.detuning_minus;
        let rhs = self.spin_splitting - self.two_photon_detuning;
        let scale = [
            self.detuning_plus.abs(),
            self.detuning_minus.abs(),
            self.spin_splitting.abs(),
            self.two_photon_detuning.abs(),
        ]
        .into_iter()
        .fold(1.0f64, f64::max);
        if (lhs - rhs).abs() > FRAME_CONSISTENCY_TOL * scale {
            return Err(DynamicsError::InvalidParams(format!(
                "rotating-frame identity violated: Δ₊ − Δ₋ = {lhs:.6e} but ω_B − δ = {rhs:.6e}"
            )));
        }
        Ok(())
    }

    /// Copy with a new two-photon detuning, holding Δ₊ and ω_B fixed.
    /// Δ₋ follows the frame identity, mirroring a single-sideband scan.
    pub fn with_two_photon_detuning(&self, delta: f64) -> Self {
        let mut p = *self;
        p.two_photon_detuning = delta;
        p.detuning_minus = p.detuning_plus - (p.spin_splitting - delta);
        p
    }

    /// Two-photon (Raman) detuning from resonance, ω_B − δ.
    pub fn raman_detuning(&self) -> f64 {
        self.spin_splitting - self.two_photon_detuning
    }

    /// Ω₊² + Ω₋², the quantity proportional to total optical intensity.
    pub fn total_rabi_squared(&self) -> f64 {
        self.rabi_plus * self.rabi_plus + self.rabi_minus * self.rabi_minus
    }
}

/// Builder for [`LambdaParams`]; `detuning_minus` defaults to the value
/// implied by the frame identity but may be given explicitly, in which
/// case construction fails if it is inconsistent.
#[derive(Debug, Clone, Default)]
pub struct LambdaParamsBuilder {
    rabi_plus: f64,
    rabi_minus: f64,
    detuning_plus: f64,
    detuning_minus: Option<f64>,
    two_photon_detuning: f64,
    spin_splitting: f64,
    gamma_optical: f64,
    gamma_spin: f64,
    gamma_excited: f64,
    branch_plus: Option<f64>,
    spin_flip_up: f64,
    spin_flip_down: f64,
}

impl LambdaParamsBuilder {
    pub fn rabi(mut self, plus: f64, minus: f64) -> Self {
        self.rabi_plus = plus;
        self.rabi_minus = minus;
        self
    }

    pub fn detuning_plus(mut self, value: f64) -> Self {
        self.detuning_plus = value;
        self
    }

    pub fn detuning_minus(mut self, value: f64) -> Self {
        self.detuning_minus = Some(value);
        self
    }

    pub fn two_photon_detuning(mut self, value: f64) -> Self {
        self.two_photon_detuning = value;
        self
    }

    pub fn spin_splitting(mut self, value: f64) -> Self {
        self.spin_splitting = value;
        self
    }

    pub fn decay_rates(mut self, gamma_optical: f64, gamma_spin: f64, gamma_excited: f64) -> Self {
        self.gamma_optical = gamma_optical;
        self.gamma_spin = gamma_spin;
        self.gamma_excited = gamma_excited;
        self
    }

    pub fn branch_plus(mut self, value: f64) -> Self {
        self.branch_plus = Some(value);
        self
    }

    pub fn spin_exchange(mut self, up: f64, down: f64) -> Self {
        self.spin_flip_up = up;
        self.spin_flip_down = down;
        self
    }

    pub fn build(self) -> Result<LambdaParams, DynamicsError> {
        let implied = self.detuning_plus - (self.spin_splitting - self.two_photon_detuning);
        let p = LambdaParams {
            rabi_plus: self.rabi_plus,
            rabi_minus: self.rabi_minus,
            detuning_plus: self.detuning_plus,
            detuning_minus: self.detuning_minus.unwrap_or(implied),
            two_photon_detuning: self.two_photon_detuning,
            spin_splitting: self.spin_splitting,
            gamma_optical: self.gamma_optical,
            gamma_spin: self.gamma_spin,
            gamma_excited: self.gamma_excited,
            branch_plus: self.branch_plus.unwrap_or(0.5),
            spin_flip_up: self.spin_flip_up,
            spin_flip_down: self.spin_flip_down,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Basis index of |+⟩.
pub const IDX_PLUS: usize = 0;
/// Basis index of |e⟩.
pub const IDX_EXCITED: usize = 1;
/// Basis index of |−⟩.
pub const IDX_MINUS: usize = 2;

/// 3×3 Hermitian, unit-trace, positive-semidefinite state over {|+⟩, |e⟩, |−⟩}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Matrix3<C64>,
}

impl DensityMatrix {
    /// Validating constructor.
    pub fn from_matrix(m: Matrix3<C64>) -> Result<Self, DynamicsError> {
        let dm = Self { m };
        dm.validate(1.0)?;
        Ok(dm)
    }

    /// Construction without invariant checks, for internal intermediates.
    pub fn from_matrix_unchecked(m: Matrix3<C64>) -> Self {
        Self { m }
    }

    /// Pure state from (possibly unnormalized) amplitudes on {|+⟩, |e⟩, |−⟩}.
    pub fn pure(amplitudes: [C64; 3]) -> Result<Self, DynamicsError> {
        let v = Vector3::from(amplitudes);
        let norm = v.norm();
        if norm == 0.0 {
            return Err(DynamicsError::InvalidState(
                "pure state needs a nonzero amplitude vector".into(),
            ));
        }
        let v = v / C64::new(norm, 0.0);
        Ok(Self { m: v * v.adjoint() })
    }

    pub fn ground_plus() -> Self {
        Self::diagonal(1.0, 0.0, 0.0)
    }

    pub fn ground_minus() -> Self {
        Self::diagonal(0.0, 0.0, 1.0)
    }

    pub fn excited() -> Self {
        Self::diagonal(0.0, 1.0, 0.0)
    }

    /// Diagonal state with populations (p₊, p_e, p₋); caller keeps the trace at 1.
    pub fn diagonal(p_plus: f64, p_excited: f64, p_minus: f64) -> Self {
        let mut m = Matrix3::zeros();
        m[(IDX_PLUS, IDX_PLUS)] = C64::new(p_plus, 0.0);
        m[(IDX_EXCITED, IDX_EXCITED)] = C64::new(p_excited, 0.0);
        m[(IDX_MINUS, IDX_MINUS)] = C64::new(p_minus, 0.0);
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix3<C64> {
        &self.m
    }

    pub fn rho_pp(&self) -> f64 {
        self.m[(IDX_PLUS, IDX_PLUS)].re
    }

    pub fn rho_ee(&self) -> f64 {
        self.m[(IDX_EXCITED, IDX_EXCITED)].re
    }

    pub fn rho_mm(&self) -> f64 {
        self.m[(IDX_MINUS, IDX_MINUS)].re
    }

    /// Optical coherence ρ_{e+}.
    pub fn rho_ep(&self) -> C64 {
        self.m[(IDX_EXCITED, IDX_PLUS)]
    }

    /// Optical coherence ρ_{e−}.
    pub fn rho_em(&self) -> C64 {
        self.m[(IDX_EXCITED, IDX_MINUS)]
    }

    /// Spin coherence ρ_{−+}.
    pub fn rho_mp(&self) -> C64 {
        self.m[(IDX_MINUS, IDX_PLUS)]
    }

    pub fn trace(&self) -> C64 {
        self.m.trace()
    }

    /// Largest deviation from Hermiticity, max |ρ_ij − ρ_ji*|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.m[(i, j)] - self.m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 3] {
        let herm = (self.m + self.m.adjoint()) * C64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        [ev[0], ev[1], ev[2]]
    }

    /// Check the Hermiticity / trace / positivity invariants, with all
    /// tolerances relaxed by `tol_multiplier`.
    pub fn validate(&self, tol_multiplier: f64) -> Result<(), DynamicsError> {
        let herm = self.hermiticity_error();
        if herm > HERMITICITY_TOL * tol_multiplier {
            return Err(DynamicsError::InvalidState(format!(
                "hermiticity violation {herm:.3e}"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL * tol_multiplier || tr.im.abs() > TRACE_TOL * tol_multiplier
        {
            return Err(DynamicsError::InvalidState(format!(
                "trace is {tr} instead of 1"
            )));
        }
        let min_ev = self.eigenvalues()[0];
        if min_ev < -POSITIVITY_TOL * tol_multiplier {
            return Err(DynamicsError::InvalidState(format!(
                "negative eigenvalue {min_ev:.3e}"
            )));
        }
        Ok(())
    }
}

/// Right-hand side of the rotating-frame master equation.
///
/// Optical and spin coherences follow the phenomenological equations with
/// decay rates γ and γ_s; the excited population decays at Γ with a
/// fraction b₊ branching to |+⟩. Ground-state spin exchange enters as a
/// pair of jump rates, which also damp the coherences out of the exchanged
/// states so that positivity is preserved. The returned derivative is
/// Hermitian and traceless by construction.
pub fn rhs(state: &DensityMatrix, params: &LambdaParams) -> Matrix3<C64> {
    let m = state.matrix();
    let i = C64::i();
    let p = params;

    let rho_pp = m[(IDX_PLUS, IDX_PLUS)];
    let rho_ee = m[(IDX_EXCITED, IDX_EXCITED)];
    let rho_mm = m[(IDX_MINUS, IDX_MINUS)];
    let rho_ep = m[(IDX_EXCITED, IDX_PLUS)];
    let rho_em = m[(IDX_EXCITED, IDX_MINUS)];
    let rho_mp = m[(IDX_MINUS, IDX_PLUS)];
    let rho_pm = m[(IDX_PLUS, IDX_MINUS)];
    let rho_me = m[(IDX_MINUS, IDX_EXCITED)];

    let half_up = 0.5 * p.spin_flip_up;
    let half_down = 0.5 * p.spin_flip_down;

    let d_ep = -(i * p.detuning_plus + C64::new(p.gamma_optical + half_up, 0.0)) * rho_ep
        + i * (0.5 * p.rabi_plus) * (rho_ee - rho_pp)
        - i * (0.5 * p.rabi_minus) * rho_mp;

    let d_em = -(i * p.detuning_minus + C64::new(p.gamma_optical + half_down, 0.0)) * rho_em
        + i * (0.5 * p.rabi_minus) * (rho_ee - rho_mm)
        - i * (0.5 * p.rabi_plus) * rho_pm;

    let d_mp = -(i * p.raman_detuning() + C64::new(p.gamma_spin + half_up + half_down, 0.0))
        * rho_mp
        + i * (0.5 * p.rabi_plus) * rho_me
        - i * (0.5 * p.rabi_minus) * rho_ep;

    // (iΩ/2 ρ + c.c.) = −Ω·Im ρ; drive-induced population transfer
    let pump_plus = -p.rabi_plus * rho_ep.im;
    let pump_minus = -p.rabi_minus * rho_em.im;

    let decay = p.gamma_excited * rho_ee.re;
    let branch_to_plus = p.branch_plus * decay;
    let branch_to_minus = decay - branch_to_plus;
    let exchange = p.spin_flip_down * rho_mm.re - p.spin_flip_up * rho_pp.re;

    let d_ee = -decay + pump_plus + pump_minus;
    let d_pp = branch_to_plus - pump_plus + exchange;
    let d_mm = branch_to_minus - pump_minus - exchange;

    let mut out = Matrix3::zeros();
    out[(IDX_PLUS, IDX_PLUS)] = C64::new(d_pp, 0.0);
    out[(IDX_EXCITED, IDX_EXCITED)] = C64::new(d_ee, 0.0);
    out[(IDX_MINUS, IDX_MINUS)] = C64::new(d_mm, 0.0);
    out[(IDX_EXCITED, IDX_PLUS)] = d_ep;
    out[(IDX_PLUS, IDX_EXCITED)] = d_ep.conj();
    out[(IDX_EXCITED, IDX_MINUS)] = d_em;
    out[(IDX_MINUS, IDX_EXCITED)] = d_em.conj();
    out[(IDX_MINUS, IDX_PLUS)] = d_mp;
    out[(IDX_PLUS, IDX_MINUS)] = d_mp.conj();
    out
}

/// The dark superposition (Ω₋|+⟩ − Ω₊|−⟩)/√(Ω₊²+Ω₋²).
pub fn dark_state(params: &LambdaParams) -> Result<DensityMatrix, DynamicsError> {
    DensityMatrix::pure([
        C64::new(params.rabi_minus, 0.0),
        C64::new(0.0, 0.0),
        C64::new(-params.rabi_plus, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn generic_params() -> LambdaParams {
        LambdaParams::builder()
            .rabi(0.21, 0.17)
            .detuning_plus(0.03)
            .spin_splitting(5.0)
            .two_photon_detuning(5.0 + 0.02)
            .decay_rates(1.0, 1e-3, 0.9)
            .branch_plus(0.4)
            .spin_exchange(2e-3, 3e-3)
            .build()
            .unwrap()
    }

    fn random_state(seed: u64) -> DensityMatrix {
        // deterministic pseudo-random Hermitian unit-trace positive matrix
        let mut x = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
        let mut next = || {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = Matrix3::<C64>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                a[(i, j)] = C64::new(next(), next());
            }
        }
        let g = a * a.adjoint();
        let tr = g.trace().re;
        DensityMatrix::from_matrix(g * C64::new(1.0 / tr, 0.0)).unwrap()
    }

    #[test]
    fn frame_identity_enforced() {
        assert!(LambdaParams::builder()
            .rabi(0.1, 0.1)
            .spin_splitting(5.0)
            .two_photon_detuning(5.0)
            .detuning_minus(0.5)
            .decay_rates(1.0, 0.0, 1.0)
            .build()
            .is_err());
        let p = LambdaParams::new(0.1, 0.1, 0.2, 4.9, 5.0, 1.0, 0.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(p.detuning_minus, 0.2 - 0.1, max_relative = 1e-12);
    }

    #[test]
    fn with_two_photon_detuning_keeps_frame_consistent() {
        let p = generic_params().with_two_photon_detuning(4.3);
        p.validate().unwrap();
        assert_relative_eq!(p.raman_detuning(), 0.7, max_relative = 1e-12);
    }

    #[test]
    fn rejects_negative_rates_and_bad_branching() {
        assert!(LambdaParams::new(0.1, 0.1, 0.0, 5.0, 5.0, -1.0, 0.0, 1.0, 0.5).is_err());
        assert!(LambdaParams::new(0.1, 0.1, 0.0, 5.0, 5.0, 1.0, 0.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn undriven_diagonal_state_has_no_coherence_derivative() {
        let p = LambdaParams::builder()
            .spin_splitting(5.0)
            .two_photon_detuning(5.0)
            .decay_rates(1.0, 1e-3, 0.8)
            .spin_exchange(0.01, 0.02)
            .build()
            .unwrap();
        let state = DensityMatrix::diagonal(0.3, 0.2, 0.5);
        let d = rhs(&state, &p);
        for (i, j) in [(0, 1), (1, 0), (0, 2), (2, 0), (1, 2), (2, 1)] {
            assert_eq!(d[(i, j)], C64::new(0.0, 0.0));
        }
        // only decay and exchange act on the populations
        assert_relative_eq!(d[(1, 1)].re, -0.8 * 0.2, max_relative = 1e-12);
        assert_relative_eq!(
            d[(0, 0)].re,
            0.5 * 0.8 * 0.2 + 0.02 * 0.5 - 0.01 * 0.3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn dark_state_is_stationary_without_spin_decoherence() {
        let p = LambdaParams::builder()
            .rabi(0.2, 0.35)
            .spin_splitting(5.0)
            .two_photon_detuning(5.0) // δ = ω_B
            .decay_rates(1.0, 0.0, 1.0)
            .build()
            .unwrap();
        let dark = dark_state(&p).unwrap();
        let d = rhs(&dark, &p);
        assert!(d.iter().all(|v| v.norm() < 1e-12), "residual {:?}", d);
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let p = generic_params();
        for seed in 0..50 {
            let state = random_state(seed);
            let d = rhs(&state, &p);
            let tr = d.trace();
            assert!(tr.norm() < 1e-12, "trace {tr} at seed {seed}");
            for i in 0..3 {
                for j in 0..3 {
                    assert!((d[(i, j)] - d[(j, i)].conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rhs_is_linear_in_the_state() {
        let p = generic_params();
        let r1 = random_state(7);
        let r2 = random_state(13);
        let (a, b) = (0.3, 0.7);
        let mixed = DensityMatrix::from_matrix_unchecked(
            r1.matrix() * C64::new(a, 0.0) + r2.matrix() * C64::new(b, 0.0),
        );
        let lhs = rhs(&mixed, &p);
        let rhs_sum = rhs(&r1, &p) * C64::new(a, 0.0) + rhs(&r2, &p) * C64::new(b, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((lhs[(i, j)] - rhs_sum[(i, j)]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn density_matrix_validation_catches_defects() {
        let mut m = Matrix3::<C64>::identity() * C64::new(1.0 / 3.0, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.0); // not Hermitian
        assert!(DensityMatrix::from_matrix(m).is_err());

        let m = Matrix3::<C64>::identity() * C64::new(0.5, 0.0); // trace 1.5
        assert!(DensityMatrix::from_matrix(m).is_err());

        let m = Matrix3::from_diagonal(&Vector3::new(
            C64::new(1.2, 0.0),
            C64::new(-0.2, 0.0),
            C64::new(0.0, 0.0),
        ));
        assert!(DensityMatrix::from_matrix(m).is_err()); // negative eigenvalue
    }
}
