//! Adiabatic elimination of the fast variables.
//!
//! When γ_s ≪ (γ, Γ) the optical coherences and the excited population
//! follow the slow spin coherence ρ_{−+} instantaneously. With the optical
//! detunings additionally small (|Δ±| ≪ γ) the eliminated variables take
//! closed forms, and the steady-state spin coherence becomes a complex
//! Lorentzian in the two-photon detuning whose half width
//! γ_s + (Ω₊² + Ω₋²)/4γ grows linearly with total optical intensity.

use num_complex::Complex64 as C64;

use super::{DensityMatrix, DynamicsError, LambdaParams, IDX_EXCITED, IDX_MINUS, IDX_PLUS};

/// Optical detunings above this fraction of γ, or γ_s above this fraction
/// of min(γ, Γ), are outside the declared validity regime.
const REGIME_FRACTION: f64 = 0.1;

/// Damping factor of the fixed-point closure.
const CLOSURE_DAMPING: f64 = 0.5;
/// Convergence threshold of the fixed-point closure.
const CLOSURE_TOL: f64 = 1e-10;
/// Iteration cap of the fixed-point closure.
const CLOSURE_MAX_ITER: usize = 1000;

/// Eliminated optical coherences with the validity flag of the inputs.
#[derive(Debug, Clone, Copy)]
pub struct AdiabaticCoherences {
    pub rho_ep: C64,
    pub rho_em: C64,
    /// False when the parameters sit outside the |Δ±| ≪ γ, γ_s ≪ (γ, Γ) regime.
    pub in_regime: bool,
}

/// Whether the closed forms are trustworthy for these parameters.
pub fn in_adiabatic_regime(params: &LambdaParams) -> bool {
    let gamma = params.gamma_optical;
    let slow_enough = params.gamma_spin
        <= REGIME_FRACTION * params.gamma_optical.min(params.gamma_excited);
    let detuned_little = params.detuning_plus.abs() <= REGIME_FRACTION * gamma
        && params.detuning_minus.abs() <= REGIME_FRACTION * gamma;
    slow_enough && detuned_little
}

/// Steady optical coherences for frozen population differences N± and spin
/// coherence: ρ_{e+} = −(i/2γ)(Ω₊N₊ + Ω₋ρ_{−+}), ρ_{e−} = −(i/2γ)(Ω₋N₋ + Ω₊ρ_{−+}).
pub fn adiabatic_optical_coherences(
    n_plus: f64,
    n_minus: f64,
    rho_mp: C64,
    params: &LambdaParams,
) -> Result<AdiabaticCoherences, DynamicsError> {
    let gamma = params.gamma_optical;
    if !(gamma > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "gamma_optical must be positive for adiabatic elimination".into(),
        ));
    }
    let pre = -C64::i() / C64::new(2.0 * gamma, 0.0);
    Ok(AdiabaticCoherences {
        rho_ep: pre * (params.rabi_plus * n_plus + params.rabi_minus * rho_mp),
        rho_em: pre * (params.rabi_minus * n_minus + params.rabi_plus * rho_mp),
        in_regime: in_adiabatic_regime(params),
    })
}

/// Steady excited population for frozen N± and spin coherence:
/// ρ_ee = (1/2Γγ)[(Ω₊²N₊ + Ω₋²N₋) + 2Ω₊Ω₋ Re ρ_{−+}].
///
/// May be negative for unphysical inputs; callers keep N± in range.
pub fn adiabatic_excited_population(
    n_plus: f64,
    n_minus: f64,
    rho_mp: C64,
    params: &LambdaParams,
) -> Result<f64, DynamicsError> {
    let product = params.gamma_excited * params.gamma_optical;
    if !(product > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "Γ·γ must be positive for the adiabatic excited population".into(),
        ));
    }
    let op = params.rabi_plus;
    let om = params.rabi_minus;
    Ok((op * op * n_plus + om * om * n_minus + 2.0 * op * om * rho_mp.re) / (2.0 * product))
}

/// Steady spin coherence of the eliminated dynamics:
/// ρ_{−+} = −(Ω₊Ω₋/4γ)(N₊+N₋)/[i(ω_B−δ) + γ_s + (Ω₊²+Ω₋²)/4γ].
pub fn adiabatic_spin_coherence(
    n_plus: f64,
    n_minus: f64,
    params: &LambdaParams,
) -> Result<C64, DynamicsError> {
    let gamma = params.gamma_optical;
    if !(gamma > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "gamma_optical must be positive for adiabatic elimination".into(),
        ));
    }
    let width = params.gamma_spin + params.total_rabi_squared() / (4.0 * gamma);
    let denom = C64::new(width, params.raman_detuning());
    if denom == C64::new(0.0, 0.0) {
        return Err(DynamicsError::ZeroDenominator);
    }
    let numer = -params.rabi_plus * params.rabi_minus / (4.0 * gamma) * (n_plus + n_minus);
    Ok(C64::new(numer, 0.0) / denom)
}

/// Half width at half maximum (rad/s) of the CPT dip in the two-photon
/// detuning: γ_s + (Ω₊² + Ω₋²)/4γ. The power-broadening term is linear in
/// the total optical intensity.
pub fn analytic_cpt_halfwidth(params: &LambdaParams) -> Result<f64, DynamicsError> {
    if !(params.gamma_optical > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "gamma_optical must be positive".into(),
        ));
    }
    Ok(params.gamma_spin + params.total_rabi_squared() / (4.0 * params.gamma_optical))
}

/// Self-consistent adiabatic steady state with convergence diagnostics.
#[derive(Debug, Clone)]
pub struct AdiabaticSteadyState {
    pub state: DensityMatrix,
    /// False when the parameters sit outside the declared validity regime;
    /// no accuracy against the exact steady state is then guaranteed.
    pub in_regime: bool,
    pub iterations: usize,
    pub residual: f64,
}

/// Close the adiabatic equations on the populations.
///
/// The spin coherence and excited population follow their closed forms
/// while the ground populations satisfy the drive/decay/exchange balance;
/// the combined fixed point is found by damped iteration (damping 0.5,
/// tolerance 1e−10 on the population update).
pub fn self_consistent_adiabatic_steady_state(
    params: &LambdaParams,
) -> Result<AdiabaticSteadyState, DynamicsError> {
    params.validate()?;
    if !(params.gamma_optical > 0.0) || !(params.gamma_excited > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "γ and Γ must be positive for the adiabatic closure".into(),
        ));
    }
    let p = params;
    let op = p.rabi_plus;
    let om = p.rabi_minus;
    let two_gamma = 2.0 * p.gamma_optical;

    // pump-out coefficient of |+⟩ and the 2×2 ground balance closed by the trace
    let a_pp = op * op / two_gamma + p.spin_flip_up;
    let a_pm = -p.spin_flip_down;
    let det = a_pp - a_pm; // system matrix [[a_pp, a_pm], [1, 1]]
    if det <= 0.0 {
        return Err(DynamicsError::NonUniqueSteadyState(
            "state |+⟩ is disconnected (Ω₊ = 0 and no spin exchange)".into(),
        ));
    }

    let mut p_plus = 0.5f64;
    let mut p_minus = 0.5f64;
    let mut p_e = 0.0f64;
    let mut rho_mp = C64::new(0.0, 0.0);
    let mut residual = f64::INFINITY;

    for iteration in 1..=CLOSURE_MAX_ITER {
        let n_plus = p_plus - p_e;
        let n_minus = p_minus - p_e;
        let rho_mp_new = adiabatic_spin_coherence(n_plus, n_minus, p)?;
        let p_e_new = adiabatic_excited_population(n_plus, n_minus, rho_mp_new, p)?;

        // ρ̇₊₊ = 0 with ρ_ee and ρ_{−+} frozen, plus the trace constraint
        let cross = op * om / two_gamma * rho_mp_new.re;
        let rhs1 = (p.branch_plus * p.gamma_excited + op * op / two_gamma) * p_e_new - cross;
        let rhs2 = 1.0 - p_e_new;
        let p_plus_next = (rhs1 - a_pm * rhs2) / det;
        let p_minus_next = (a_pp * rhs2 - rhs1) / det;

        let delta = (p_plus_next - p_plus)
            .abs()
            .max((p_minus_next - p_minus).abs())
            .max((p_e_new - p_e).abs())
            .max((rho_mp_new - rho_mp).norm());

        p_plus += CLOSURE_DAMPING * (p_plus_next - p_plus);
        p_minus += CLOSURE_DAMPING * (p_minus_next - p_minus);
        p_e = p_e_new;
        rho_mp = rho_mp_new;
        residual = delta;

        if delta < CLOSURE_TOL {
            let coherences =
                adiabatic_optical_coherences(p_plus - p_e, p_minus - p_e, rho_mp, p)?;
            let mut m = nalgebra::Matrix3::zeros();
            m[(IDX_PLUS, IDX_PLUS)] = C64::new(p_plus, 0.0);
            m[(IDX_EXCITED, IDX_EXCITED)] = C64::new(p_e, 0.0);
            m[(IDX_MINUS, IDX_MINUS)] = C64::new(p_minus, 0.0);
            m[(IDX_MINUS, IDX_PLUS)] = rho_mp;
            m[(IDX_PLUS, IDX_MINUS)] = rho_mp.conj();
            m[(IDX_EXCITED, IDX_PLUS)] = coherences.rho_ep;
            m[(IDX_PLUS, IDX_EXCITED)] = coherences.rho_ep.conj();
            m[(IDX_EXCITED, IDX_MINUS)] = coherences.rho_em;
            m[(IDX_MINUS, IDX_EXCITED)] = coherences.rho_em.conj();
            return Ok(AdiabaticSteadyState {
                state: DensityMatrix::from_matrix_unchecked(m),
                in_regime: coherences.in_regime,
                iterations: iteration,
                residual: delta,
            });
        }
    }
    Err(DynamicsError::NonConvergence {
        iterations: CLOSURE_MAX_ITER,
        residual,
    })
}
