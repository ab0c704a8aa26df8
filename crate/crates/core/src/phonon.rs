//! Temperature laws for phonon-induced spin dephasing and relaxation.
//!
//! Covers the Bose-Einstein occupation, the occupation-proportional
//! dephasing model, single- and two-phonon spin-flip relaxation rates,
//! and the spontaneous-emission lower bound for the direct transition
//! between the two lower ground spin states.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{BOLTZMANN, PLANCK};
use crate::fit::{least_squares, FitError, FitModel, FitProblem, FitResult, ParamScale};

#[derive(Debug, Error)]
pub enum PhononError {
    #[error("temperature must be positive, got {0} K")]
    NonPositiveTemperature(f64),
    #[error("frequency must be positive, got {0} Hz")]
    NonPositiveFrequency(f64),
    #[error("total relaxation rate is zero; lifetime is unbounded")]
    InfiniteLifetime,
    #[error("relaxation fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error(transparent)]
    Fit(#[from] FitError),
}

/// Mean thermal phonon occupation n(ν, T) = 1/(e^{hν/k_BT} − 1).
///
/// `nu` is an ordinary frequency in Hz. The T → 0⁺ limit is 0.
pub fn thermal_occupation(nu: f64, temperature: f64) -> Result<f64, PhononError> {
    if !(nu > 0.0) {
        return Err(PhononError::NonPositiveFrequency(nu));
    }
    if !(temperature > 0.0) {
        return Err(PhononError::NonPositiveTemperature(temperature));
    }
    let x = PLANCK * nu / (BOLTZMANN * temperature);
    Ok(1.0 / x.exp_m1())
}

/// Thermal parameters of the ground-state orbital doublet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalModel {
    /// Ground orbital splitting (Hz).
    pub nu_so: f64,
    /// Dephasing FWHM contributed per unit phonon occupation (Hz).
    pub dephasing_amplitude: f64,
    /// Temperature-independent dephasing floor from the nuclear spin bath (Hz of FWHM).
    pub bath_floor: f64,
    /// Single-phonon relaxation amplitude (s⁻¹).
    pub rate1: f64,
    /// Two-phonon relaxation amplitude (s⁻¹).
    pub rate2: f64,
    /// Direct transition frequency between the two lower ground spin states (Hz).
    pub nu_direct: f64,
}

impl Default for ThermalModel {
    fn default() -> Self {
        Self {
            nu_so: 50e9,
            dephasing_amplitude: 0.0,
            bath_floor: 0.0,
            rate1: 0.0,
            rate2: 0.0,
            nu_direct: 3e9,
        }
    }
}

/// Which relaxation mechanism a fit or model curve uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelaxationKind {
    Single,
    Two,
    Both,
}

/// The two equivalent orderings of the two-phonon process.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TwoPhononForm {
    /// n₁/₂²(T)[1 + n(T)]: two phonons absorbed, one emitted.
    Absorption,
    /// n(T)[1 + n₁/₂(T)]²: one phonon absorbed, two emitted.
    Emission,
}

impl ThermalModel {
    fn validate_temperature(&self, temperature: f64) -> Result<(), PhononError> {
        if !(temperature > 0.0) {
            return Err(PhononError::NonPositiveTemperature(temperature));
        }
        Ok(())
    }

    /// Spin-dephasing FWHM (Hz): bath floor plus the occupation-proportional term.
    pub fn dephasing_fwhm(&self, temperature: f64) -> Result<f64, PhononError> {
        self.validate_temperature(temperature)?;
        let n = thermal_occupation(self.nu_so, temperature)?;
        Ok(self.bath_floor + self.dephasing_amplitude * n)
    }

    /// Single-phonon spin-flip relaxation rate: rate1 · n(1 + n) at ν_so.
    pub fn single_phonon_rate(&self, temperature: f64) -> Result<f64, PhononError> {
        self.validate_temperature(temperature)?;
        let n = thermal_occupation(self.nu_so, temperature)?;
        Ok(self.rate1 * n * (1.0 + n))
    }

    /// Two-phonon spin-flip relaxation rate in the requested form.
    ///
    /// The two forms are algebraically identical; both are exposed so the
    /// identity can be exercised directly.
    pub fn two_phonon_rate(
        &self,
        temperature: f64,
        form: TwoPhononForm,
    ) -> Result<f64, PhononError> {
        self.validate_temperature(temperature)?;
        let n = thermal_occupation(self.nu_so, temperature)?;
        let n_half = thermal_occupation(self.nu_so / 2.0, temperature)?;
        let factor = match form {
            TwoPhononForm::Absorption => n_half * n_half * (1.0 + n),
            TwoPhononForm::Emission => n * (1.0 + n_half) * (1.0 + n_half),
        };
        Ok(self.rate2 * factor)
    }

    /// Total spin relaxation rate: single-phonon plus two-phonon contributions.
    pub fn combined_relaxation_rate(&self, temperature: f64) -> Result<f64, PhononError> {
        Ok(self.single_phonon_rate(temperature)?
            + self.two_phonon_rate(temperature, TwoPhononForm::Absorption)?)
    }

    /// Spin lifetime T₁ = 1/rate; errors out when the total rate is zero.
    pub fn spin_lifetime(&self, temperature: f64) -> Result<f64, PhononError> {
        let rate = self.combined_relaxation_rate(temperature)?;
        if rate <= 0.0 {
            return Err(PhononError::InfiniteLifetime);
        }
        Ok(1.0 / rate)
    }

    /// Lower bound on the spontaneous emission lifetime of the direct
    /// transition, assuming it were the only relaxation channel:
    /// bound = T₁_observed · (1 + 2n(ν_direct, T)).
    pub fn spontaneous_lifetime_bound(
        &self,
        t1_observed: f64,
        temperature: f64,
    ) -> Result<f64, PhononError> {
        if !(t1_observed > 0.0) {
            return Err(PhononError::NonPositiveFrequency(t1_observed));
        }
        Ok(t1_observed * self.bound_multiplier(temperature)?)
    }

    /// The 1 + 2n(ν_direct, T) factor of [`Self::spontaneous_lifetime_bound`].
    pub fn bound_multiplier(&self, temperature: f64) -> Result<f64, PhononError> {
        let n = thermal_occupation(self.nu_direct, temperature)?;
        Ok(1.0 + 2.0 * n)
    }
}

/// Relaxation-rate model in log space for the amplitude fits.
///
/// Parameters are the mechanism amplitudes; evaluation returns
/// ln(rate) over the temperature abscissa.
struct LogRateModel {
    nu_so: f64,
    kind: RelaxationKind,
}

impl LogRateModel {
    fn basis(&self, t: f64) -> (f64, f64) {
        let n = thermal_occupation(self.nu_so, t).unwrap_or(0.0);
        let n_half = thermal_occupation(self.nu_so / 2.0, t).unwrap_or(0.0);
        (n * (1.0 + n), n_half * n_half * (1.0 + n))
    }
}

impl FitModel for LogRateModel {
    fn eval(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        x.iter()
            .map(|&t| {
                let (f1, f2) = self.basis(t);
                let rate = match self.kind {
                    RelaxationKind::Single => params[0] * f1,
                    RelaxationKind::Two => params[0] * f2,
                    RelaxationKind::Both => params[0] * f1 + params[1] * f2,
                };
                rate.ln()
            })
            .collect()
    }
}

/// One temperature point of a lifetime measurement.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LifetimePoint {
    pub temperature: f64,
    pub t1: f64,
    /// 1σ uncertainty on T₁ (s); zero means unweighted.
    pub t1_err: f64,
}

/// Fit the relaxation amplitude(s) to measured (T, T₁) data.
///
/// The fit runs on ln(1/T₁) with weights propagated from the T₁ errors
/// (σ_ln r = σ_T1/T₁), which keeps lognormal scatter symmetric and the
/// amplitudes positive.
pub fn fit_relaxation_model(
    data: &[LifetimePoint],
    kind: RelaxationKind,
    model: &ThermalModel,
) -> Result<FitResult, PhononError> {
    if data.len() < 3 {
        return Err(PhononError::TooFewPoints {
            needed: 3,
            got: data.len(),
        });
    }
    for p in data {
        if !(p.temperature > 0.0) {
            return Err(PhononError::NonPositiveTemperature(p.temperature));
        }
        if !(p.t1 > 0.0) {
            return Err(PhononError::NonPositiveFrequency(p.t1));
        }
    }
    let temps: Vec<f64> = data.iter().map(|p| p.temperature).collect();
    let log_rates: Vec<f64> = data.iter().map(|p| (1.0 / p.t1).ln()).collect();
    let weighted = data.iter().all(|p| p.t1_err > 0.0);
    let errs: Vec<f64> = data.iter().map(|p| p.t1_err / p.t1).collect();

    let rate_model = LogRateModel {
        nu_so: model.nu_so,
        kind,
    };
    // moment-matched starting amplitude(s)
    let guess = {
        let mut acc = 0.0;
        for p in data {
            let (f1, f2) = rate_model.basis(p.temperature);
            let f = match kind {
                RelaxationKind::Single => f1,
                RelaxationKind::Two => f2,
                RelaxationKind::Both => f1 + f2,
            };
            acc += (1.0 / p.t1) / f;
        }
        acc / data.len() as f64
    };
    let initial = match kind {
        RelaxationKind::Both => vec![guess / 2.0, guess / 2.0],
        _ => vec![guess],
    };
    let scales = vec![ParamScale::LogPositive; initial.len()];

    let problem = FitProblem::new(
        &rate_model,
        &temps,
        &log_rates,
        weighted.then_some(errs.as_slice()),
        initial,
    )
    .with_scales(scales);
    Ok(least_squares(&problem)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, LogNormal};

    fn model_with_rates(rate1: f64, rate2: f64) -> ThermalModel {
        ThermalModel {
            rate1,
            rate2,
            ..ThermalModel::default()
        }
    }

    #[test]
    fn occupation_matches_direct_evaluation() {
        // frozen from 1/(exp(h*nu/(kB*T)) - 1) with exact SI h, kB
        let n = thermal_occupation(3e9, 1.0).unwrap();
        assert_relative_eq!(n, 6.4574, max_relative = 2e-4);
        let n = thermal_occupation(50e9, 4.0).unwrap();
        assert_relative_eq!(n, 1.2166, max_relative = 5e-4);
    }

    #[test]
    fn occupation_limits_and_monotonicity() {
        assert!(thermal_occupation(50e9, 1e-4).unwrap() < 1e-100);
        let mut last = 0.0;
        for t in [0.1, 0.5, 1.0, 4.0, 20.0, 100.0] {
            let n = thermal_occupation(50e9, t).unwrap();
            assert!(n > last);
            last = n;
        }
        assert!(thermal_occupation(25e9, 4.0).unwrap() > thermal_occupation(50e9, 4.0).unwrap());
        assert!(thermal_occupation(3e9, 0.0).is_err());
        assert!(thermal_occupation(3e9, -1.0).is_err());
        assert!(thermal_occupation(0.0, 1.0).is_err());
    }

    #[test]
    fn high_temperature_limit_is_classical() {
        // n·hν/kT → 1 as T → ∞, checked at kT/hν = 1e3
        let nu = 50e9;
        let t = 1e3 * PLANCK * nu / BOLTZMANN;
        let n = thermal_occupation(nu, t).unwrap();
        let ratio = n * PLANCK * nu / (BOLTZMANN * t);
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn dephasing_calibration_reproduces_plateau() {
        // floor 0.5 MHz, amplitude calibrated so the 4 K value is 2.35 MHz
        let amplitude = (2.35e6 - 0.5e6) / thermal_occupation(50e9, 4.0).unwrap();
        assert_relative_eq!(amplitude, 1.521e6, max_relative = 1e-3);
        let model = ThermalModel {
            bath_floor: 0.5e6,
            dephasing_amplitude: amplitude,
            ..ThermalModel::default()
        };
        assert_relative_eq!(model.dephasing_fwhm(4.0).unwrap(), 2.35e6, max_relative = 1e-12);
        assert_relative_eq!(model.dephasing_fwhm(1.0).unwrap(), 0.652e6, max_relative = 1e-3);
        assert_relative_eq!(model.dephasing_fwhm(0.15).unwrap(), 0.500e6, max_relative = 1e-3);
    }

    #[test]
    fn zero_amplitude_dephasing_is_flat() {
        let model = ThermalModel {
            bath_floor: 0.7e6,
            ..ThermalModel::default()
        };
        for t in [0.1, 1.0, 4.0, 40.0] {
            assert_eq!(model.dephasing_fwhm(t).unwrap(), 0.7e6);
        }
    }

    #[test]
    fn single_phonon_rate_values() {
        let model = model_with_rates(1.0, 0.0);
        assert_relative_eq!(
            model.single_phonon_rate(4.0).unwrap(),
            2.697,
            max_relative = 1e-3
        );
        let ratio =
            model.single_phonon_rate(4.0).unwrap() / model.single_phonon_rate(1.0).unwrap();
        assert_relative_eq!(ratio, 24.6, max_relative = 5e-3);
    }

    #[test]
    fn two_phonon_rate_values_and_ratio() {
        let model = model_with_rates(0.0, 1.0);
        assert_relative_eq!(
            model.two_phonon_rate(4.0, TwoPhononForm::Absorption).unwrap(),
            18.12,
            max_relative = 1e-3
        );
        let ratio = model.two_phonon_rate(4.0, TwoPhononForm::Absorption).unwrap()
            / model.two_phonon_rate(1.0, TwoPhononForm::Absorption).unwrap();
        assert_relative_eq!(ratio, 88.6, max_relative = 5e-3);
    }

    #[test]
    fn two_phonon_forms_are_identical() {
        let model = model_with_rates(0.0, 2.5);
        let mut t = 0.1;
        while t <= 10.0 {
            let a = model.two_phonon_rate(t, TwoPhononForm::Absorption).unwrap();
            let e = model.two_phonon_rate(t, TwoPhononForm::Emission).unwrap();
            assert!(((a - e) / a).abs() < 1e-12, "mismatch at T = {t}");
            t *= 1.3;
        }
    }

    #[test]
    fn lifetime_calibration_to_readout_experiment() {
        // rate2 calibrated so T1(4 K) = 0.3 μs
        let rate2 = 1.0 / (0.3e-6 * 18.1147);
        let model = model_with_rates(0.0, rate2);
        assert_relative_eq!(model.spin_lifetime(4.0).unwrap(), 0.3e-6, max_relative = 1e-3);
        let t1_cold = model.spin_lifetime(1.0).unwrap();
        assert_relative_eq!(t1_cold / 0.3e-6, 88.6, max_relative = 5e-3);
        // a single-phonon model with the same 4 K lifetime only gains ~25x
        let rate1 = 1.0 / (0.3e-6 * 2.6966);
        let single = model_with_rates(rate1, 0.0);
        let gain = single.spin_lifetime(1.0).unwrap() / 0.3e-6;
        assert_relative_eq!(gain, 24.6, max_relative = 5e-3);
        assert!(gain < t1_cold / 0.3e-6 / 2.0);
    }

    #[test]
    fn zero_rate_lifetime_is_an_error() {
        let model = model_with_rates(0.0, 0.0);
        assert!(matches!(
            model.spin_lifetime(1.0),
            Err(PhononError::InfiniteLifetime)
        ));
    }

    #[test]
    fn rates_increase_with_temperature() {
        let model = model_with_rates(1.0, 1.0);
        let mut last = 0.0;
        let mut t = 0.2;
        while t < 50.0 {
            let r = model.combined_relaxation_rate(t).unwrap();
            assert!(r > last);
            last = r;
            t *= 1.5;
        }
    }

    #[test]
    fn two_phonon_low_t_slope_is_steeper() {
        // d log(rate)/d(1/T) magnitude, by central differences in 1/T
        let model = model_with_rates(1.0, 1.0);
        let slope = |f: &dyn Fn(f64) -> f64, t: f64| {
            let inv = 1.0 / t;
            let h = inv * 1e-4;
            (f(1.0 / (inv + h)).ln() - f(1.0 / (inv - h)).ln()) / (2.0 * h)
        };
        let t_max = PLANCK * model.nu_so / BOLTZMANN; // ≈ 2.4 K
        let mut t = 0.3;
        while t < t_max {
            let s1 = slope(&|tt| model.single_phonon_rate(tt).unwrap(), t);
            let s2 = slope(
                &|tt| model.two_phonon_rate(tt, TwoPhononForm::Absorption).unwrap(),
                t,
            );
            assert!(s2.abs() > s1.abs(), "at T = {t}: {s2} vs {s1}");
            t *= 1.25;
        }
    }

    #[test]
    fn bound_multiplier_values() {
        let model = ThermalModel::default();
        assert_relative_eq!(model.bound_multiplier(1.0).unwrap(), 13.9, max_relative = 2e-3);
        // T → 0 limit: multiplier → 1
        assert_relative_eq!(model.bound_multiplier(1e-3).unwrap(), 1.0, max_relative = 1e-12);
        let bound = model.spontaneous_lifetime_bound(30e-6, 1.0).unwrap();
        assert_relative_eq!(bound, 0.417e-3, max_relative = 2e-3);
    }

    fn synth_data(model: &ThermalModel, temps: &[f64]) -> Vec<LifetimePoint> {
        temps
            .iter()
            .map(|&t| LifetimePoint {
                temperature: t,
                t1: model.spin_lifetime(t).unwrap(),
                t1_err: 0.0,
            })
            .collect()
    }

    const FIT_TEMPS: [f64; 7] = [0.83, 1.0, 1.4, 2.0, 2.8, 3.4, 4.0];

    #[test]
    fn two_phonon_data_discriminates_models() {
        let truth = model_with_rates(0.0, 5.0e4);
        let data = synth_data(&truth, &FIT_TEMPS);
        let fit2 = fit_relaxation_model(&data, RelaxationKind::Two, &truth).unwrap();
        assert_relative_eq!(fit2.estimates[0], 5.0e4, max_relative = 1e-6);
        let fit1 = fit_relaxation_model(&data, RelaxationKind::Single, &truth).unwrap();
        assert!(fit1.residual_norm > 10.0 * fit2.residual_norm.max(1e-12));
    }

    #[test]
    fn single_phonon_data_mirror_case() {
        let truth = model_with_rates(8.0e5, 0.0);
        let data = synth_data(&truth, &FIT_TEMPS);
        let fit1 = fit_relaxation_model(&data, RelaxationKind::Single, &truth).unwrap();
        assert_relative_eq!(fit1.estimates[0], 8.0e5, max_relative = 1e-6);
        let fit2 = fit_relaxation_model(&data, RelaxationKind::Two, &truth).unwrap();
        assert!(fit2.residual_norm > 10.0 * fit1.residual_norm.max(1e-12));
    }

    #[test]
    fn noisy_two_phonon_amplitude_recovery() {
        let truth = model_with_rates(0.0, 5.0e4);
        let noiseless = synth_data(&truth, &FIT_TEMPS);
        let lognorm = LogNormal::new(0.0, 0.1).unwrap();
        let mut ok = 0;
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let data: Vec<LifetimePoint> = noiseless
                .iter()
                .map(|p| LifetimePoint {
                    temperature: p.temperature,
                    t1: p.t1 * lognorm.sample(&mut rng),
                    t1_err: 0.1 * p.t1,
                })
                .collect();
            let fit = fit_relaxation_model(&data, RelaxationKind::Two, &truth).unwrap();
            if (fit.estimates[0] - 5.0e4).abs() / 5.0e4 < 0.15 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/100 within 15%");
    }
}
