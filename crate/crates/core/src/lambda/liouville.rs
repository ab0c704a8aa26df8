//! Real-valued generator of the master equation and its exact solutions.
//!
//! A Hermitian 3×3 state maps to 9 real coordinates
//! (ρ₊₊, ρ_ee, ρ₋₋, Re ρ_{e+}, Im ρ_{e+}, Re ρ_{e−}, Im ρ_{e−}, Re ρ_{−+}, Im ρ_{−+});
//! the master equation becomes ẋ = G x with a constant real 9×9 generator.

use nalgebra::{Matrix3, SMatrix, SVector};
use num_complex::Complex64 as C64;

use super::{rhs, DensityMatrix, DynamicsError, LambdaParams, IDX_EXCITED, IDX_MINUS, IDX_PLUS};

pub type StateVector = SVector<f64, 9>;
pub type Generator = SMatrix<f64, 9, 9>;

/// Residual tolerance for the steady state, measured on the generator
/// normalized by its largest entry (dimensionless rates).
const STEADY_RESIDUAL_TOL: f64 = 1e-10;

/// Real coordinates of a Hermitian matrix.
pub fn state_to_vector(m: &Matrix3<C64>) -> StateVector {
    StateVector::from([
        m[(IDX_PLUS, IDX_PLUS)].re,
        m[(IDX_EXCITED, IDX_EXCITED)].re,
        m[(IDX_MINUS, IDX_MINUS)].re,
        m[(IDX_EXCITED, IDX_PLUS)].re,
        m[(IDX_EXCITED, IDX_PLUS)].im,
        m[(IDX_EXCITED, IDX_MINUS)].re,
        m[(IDX_EXCITED, IDX_MINUS)].im,
        m[(IDX_MINUS, IDX_PLUS)].re,
        m[(IDX_MINUS, IDX_PLUS)].im,
    ])
}

/// Inverse of [`state_to_vector`]; always produces a Hermitian matrix.
pub fn vector_to_state(x: &StateVector) -> Matrix3<C64> {
    let mut m = Matrix3::zeros();
    m[(IDX_PLUS, IDX_PLUS)] = C64::new(x[0], 0.0);
    m[(IDX_EXCITED, IDX_EXCITED)] = C64::new(x[1], 0.0);
    m[(IDX_MINUS, IDX_MINUS)] = C64::new(x[2], 0.0);
    m[(IDX_EXCITED, IDX_PLUS)] = C64::new(x[3], x[4]);
    m[(IDX_PLUS, IDX_EXCITED)] = C64::new(x[3], -x[4]);
    m[(IDX_EXCITED, IDX_MINUS)] = C64::new(x[5], x[6]);
    m[(IDX_MINUS, IDX_EXCITED)] = C64::new(x[5], -x[6]);
    m[(IDX_MINUS, IDX_PLUS)] = C64::new(x[7], x[8]);
    m[(IDX_PLUS, IDX_MINUS)] = C64::new(x[7], -x[8]);
    m
}

/// The 9×9 generator, built column by column from [`rhs`] applied to the
/// Hermitian basis elements. Exact for the linear master equation.
pub fn liouvillian_matrix(params: &LambdaParams) -> Generator {
    let mut g = Generator::zeros();
    for j in 0..9 {
        let mut basis = StateVector::zeros();
        basis[j] = 1.0;
        let state = DensityMatrix::from_matrix_unchecked(vector_to_state(&basis));
        let column = state_to_vector(&rhs(&state, params));
        g.set_column(j, &column);
    }
    g
}

/// Propagate a state by exp(G·t) applied to its real coordinates.
///
/// Exact up to the matrix-exponential roundoff; used both as an oracle for
/// the adaptive integrator and for drive-off intervals where stiff decay
/// rates make explicit stepping wasteful.
pub fn propagate_matrix_exp(state: &DensityMatrix, params: &LambdaParams, t: f64) -> DensityMatrix {
    let g = liouvillian_matrix(params);
    let propagator = (g * t).exp();
    let x = propagator * state_to_vector(state.matrix());
    DensityMatrix::from_matrix_unchecked(vector_to_state(&x))
}

/// Exact steady state: the one-dimensional null space of the generator,
/// normalized to unit trace.
///
/// The generator conserves the trace, so its three population rows are
/// linearly dependent; the ρ_ee row is replaced by the trace constraint and
/// the square system is solved by LU with partial pivoting. A singular
/// system, or a residual above 1e−10 on the rate-normalized generator,
/// reports a non-unique steady state.
pub fn steady_state(params: &LambdaParams) -> Result<DensityMatrix, DynamicsError> {
    params.validate()?;
    let g = liouvillian_matrix(params);
    let scale = g.amax();
    if scale == 0.0 {
        return Err(DynamicsError::NonUniqueSteadyState(
            "the generator vanishes; no dynamics at all".into(),
        ));
    }
    let g_hat = g / scale;

    let mut a = g_hat;
    let mut b = StateVector::zeros();
    // trace row: ρ₊₊ + ρ_ee + ρ₋₋ = 1
    for j in 0..9 {
        a[(1, j)] = if j < 3 { 1.0 } else { 0.0 };
    }
    b[1] = 1.0;

    let lu = a.lu();
    let x = match lu.solve(&b) {
        Some(x) if x.iter().all(|v| v.is_finite()) => x,
        _ => {
            return Err(DynamicsError::NonUniqueSteadyState(
                "the trace-closed linear system is singular".into(),
            ))
        }
    };

    let residual = (g_hat * x).amax();
    if residual > STEADY_RESIDUAL_TOL {
        return Err(DynamicsError::NonUniqueSteadyState(format!(
            "normalized residual {residual:.3e} exceeds {STEADY_RESIDUAL_TOL:.0e}"
        )));
    }

    let state = DensityMatrix::from_matrix_unchecked(vector_to_state(&x));
    state.validate(10.0).map_err(|e| {
        DynamicsError::NonUniqueSteadyState(format!("null vector is not a physical state: {e}"))
    })?;
    Ok(state)
}
