//! Adaptive time evolution of the master equation.
//!
//! Embedded Dormand-Prince 5(4) pair with proportional step control.
//! The contract is error control, not a method name: local error per step
//! is held below abs_tol + rel_tol·|ρ_ij| elementwise.

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{rhs, DensityMatrix, DynamicsError, LambdaParams};

/// Default relative tolerance of [`evolve`].
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Default absolute tolerance of [`evolve`].
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

/// Invariant drift allowed along a trajectory before the run is aborted
/// (violations are an error, never silently renormalized).
const INVARIANT_TOL: f64 = 1e-7;

/// safety, shrink and growth limits of the step controller
const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;

/// Time-ordered sequence of states from one integration run.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<DensityMatrix>,
    #[serde(skip)]
    pub params: LambdaParams,
}

impl Trajectory {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// ρ_ee(t) samples, the quantity proportional to fluorescence.
    pub fn excited_population(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.rho_ee()).collect()
    }
}

/// Dormand-Prince coefficients.
const A2: [f64; 1] = [1.0 / 5.0];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
/// 5th-order solution weights (also the 7th stage position).
const B5: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

type State = Matrix3<C64>;

fn scaled(m: &State, f: f64) -> State {
    m * C64::new(f, 0.0)
}

struct Stepper<'a> {
    params: &'a LambdaParams,
    rel_tol: f64,
    abs_tol: f64,
    /// derivative at the current state (FSAL)
    k1: State,
}

struct StepOutcome {
    accepted: bool,
    y_new: State,
    k_new: State,
    h_next: f64,
}

impl<'a> Stepper<'a> {
    fn new(params: &'a LambdaParams, y: &State, rel_tol: f64, abs_tol: f64) -> Self {
        let k1 = rhs(&DensityMatrix::from_matrix_unchecked(*y), params);
        Self {
            params,
            rel_tol,
            abs_tol,
            k1,
        }
    }

    fn deriv(&self, y: &State) -> State {
        rhs(&DensityMatrix::from_matrix_unchecked(*y), self.params)
    }

    fn attempt(&self, y: &State, h: f64) -> StepOutcome {
        let k1 = self.k1;
        let k2 = self.deriv(&(y + scaled(&k1, h * A2[0])));
        let k3 = self.deriv(&(y + scaled(&k1, h * A3[0]) + scaled(&k2, h * A3[1])));
        let k4 = self.deriv(
            &(y + scaled(&k1, h * A4[0]) + scaled(&k2, h * A4[1]) + scaled(&k3, h * A4[2])),
        );
        let k5 = self.deriv(
            &(y + scaled(&k1, h * A5[0])
                + scaled(&k2, h * A5[1])
                + scaled(&k3, h * A5[2])
                + scaled(&k4, h * A5[3])),
        );
        let k6 = self.deriv(
            &(y + scaled(&k1, h * A6[0])
                + scaled(&k2, h * A6[1])
                + scaled(&k3, h * A6[2])
                + scaled(&k4, h * A6[3])
                + scaled(&k5, h * A6[4])),
        );
        let y_new = y
            + scaled(&k1, h * B5[0])
            + scaled(&k3, h * B5[2])
            + scaled(&k4, h * B5[3])
            + scaled(&k5, h * B5[4])
            + scaled(&k6, h * B5[5]);
        let k7 = self.deriv(&y_new);
        let y_low = y
            + scaled(&k1, h * B4[0])
            + scaled(&k3, h * B4[2])
            + scaled(&k4, h * B4[3])
            + scaled(&k5, h * B4[4])
            + scaled(&k6, h * B4[5])
            + scaled(&k7, h * B4[6]);

        // max scaled error over matrix elements
        let mut err = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let diff = (y_new[(i, j)] - y_low[(i, j)]).norm();
                let scale =
                    self.abs_tol + self.rel_tol * y[(i, j)].norm().max(y_new[(i, j)].norm());
                err = err.max(diff / scale);
            }
        }

        let accepted = err <= 1.0;
        let scale = if err == 0.0 {
            MAX_SCALE
        } else {
            (SAFETY * err.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        StepOutcome {
            accepted,
            y_new,
            k_new: k7,
            h_next: h * scale,
        }
    }
}

/// Integrate from `t0` to `t1`, invoking `emit` at every accepted step and
/// at `t1` exactly. `emit` decides what to record.
fn integrate_span(
    stepper: &mut Stepper,
    y: &mut State,
    t0: f64,
    t1: f64,
    h_init: f64,
    emit: &mut dyn FnMut(f64, &State) -> Result<(), DynamicsError>,
) -> Result<f64, DynamicsError> {
    let span = t1 - t0;
    let mut t = t0;
    let mut h = h_init.min(span);
    let h_floor = span * 1e-15 + f64::MIN_POSITIVE;
    while t < t1 {
        let clamped = h.min(t1 - t);
        let outcome = stepper.attempt(y, clamped);
        if outcome.accepted {
            t += clamped;
            *y = outcome.y_new;
            stepper.k1 = outcome.k_new;
            emit(t, y)?;
            h = outcome.h_next.max(clamped * MIN_SCALE);
        } else {
            h = outcome.h_next;
            if h < h_floor {
                return Err(DynamicsError::IntegrationFailure { time: t });
            }
        }
    }
    Ok(h)
}

fn check_invariants(t: f64, y: &State) -> Result<(), DynamicsError> {
    let dm = DensityMatrix::from_matrix_unchecked(*y);
    dm.validate(INVARIANT_TOL / super::TRACE_TOL)
        .map_err(|e| DynamicsError::InvariantViolation {
            time: t,
            detail: e.to_string(),
        })
}

fn initial_step(params: &LambdaParams, t_final: f64) -> f64 {
    // fastest rate present sets the scale of the first trial step
    let fastest = [
        params.gamma_excited,
        params.gamma_optical,
        params.rabi_plus,
        params.rabi_minus,
        params.detuning_plus.abs(),
        params.detuning_minus.abs(),
        params.raman_detuning().abs(),
        params.gamma_spin,
        params.spin_flip_up,
        params.spin_flip_down,
    ]
    .into_iter()
    .fold(0.0f64, f64::max);
    if fastest > 0.0 {
        (0.1 / fastest).min(t_final)
    } else {
        t_final
    }
}

/// Adaptive integration over [0, t_final], recording every accepted step.
///
/// Every emitted state is checked against the density-matrix invariants at
/// a drift tolerance of 1e−7; a violation aborts with an error rather than
/// renormalizing.
pub fn evolve(
    initial: &DensityMatrix,
    params: &LambdaParams,
    t_final: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory, DynamicsError> {
    if !(t_final > 0.0) {
        return Err(DynamicsError::InvalidParams(format!(
            "t_final must be positive, got {t_final}"
        )));
    }
    if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "tolerances must be positive".into(),
        ));
    }
    params.validate()?;
    initial.validate(1.0)?;

    let mut y = *initial.matrix();
    let mut stepper = Stepper::new(params, &y, rel_tol, abs_tol);
    let mut times = vec![0.0];
    let mut states = vec![*initial];
    let mut emit = |t: f64, y: &State| -> Result<(), DynamicsError> {
        check_invariants(t, y)?;
        times.push(t);
        states.push(DensityMatrix::from_matrix_unchecked(*y));
        Ok(())
    };
    let h0 = initial_step(params, t_final);
    integrate_span(&mut stepper, &mut y, 0.0, t_final, h0, &mut emit)?;
    Ok(Trajectory {
        times,
        states,
        params: *params,
    })
}

/// Adaptive integration emitting states at the requested times exactly.
///
/// `sample_times` must be strictly ascending and non-negative; a leading
/// zero sample reports the initial state itself.
pub fn evolve_sampled(
    initial: &DensityMatrix,
    params: &LambdaParams,
    sample_times: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory, DynamicsError> {
    if sample_times.is_empty() {
        return Err(DynamicsError::InvalidParams(
            "sample_times must be nonempty".into(),
        ));
    }
    if sample_times.windows(2).any(|w| w[0] >= w[1]) || sample_times[0] < 0.0 {
        return Err(DynamicsError::InvalidParams(
            "sample_times must be strictly ascending and non-negative".into(),
        ));
    }
    if !(rel_tol > 0.0) || !(abs_tol > 0.0) {
        return Err(DynamicsError::InvalidParams(
            "tolerances must be positive".into(),
        ));
    }
    params.validate()?;
    initial.validate(1.0)?;

    let t_final = *sample_times.last().unwrap();
    let mut y = *initial.matrix();
    let mut stepper = Stepper::new(params, &y, rel_tol, abs_tol);
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());

    let mut t = 0.0;
    let mut h = initial_step(params, t_final.max(f64::MIN_POSITIVE));
    for &target in sample_times {
        if target > t {
            let mut emit = |_t: f64, _y: &State| Ok(());
            h = integrate_span(&mut stepper, &mut y, t, target, h, &mut emit)?;
            t = target;
        }
        check_invariants(t, &y)?;
        times.push(target);
        states.push(DensityMatrix::from_matrix_unchecked(y));
    }
    Ok(Trajectory {
        times,
        states,
        params: *params,
    })
}
