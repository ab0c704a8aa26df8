//! Level structure of the emitter's ground and excited orbital doublets.
//!
//! Spin-orbit coupling splits each manifold into two doublets; a vector
//! magnetic field and static transverse strain mix the spin and orbital
//! states. The Hamiltonian acts on the basis {|e₊↑⟩, |e₊↓⟩, |e₋↑⟩, |e₋↓⟩}
//! with τ Pauli matrices on the orbital pair {e₊, e₋} and σ on the spin:
//!
//! H = −(λ_so/2)(τ_z⊗σ_z) + ε_x(τ_x⊗1) + ε_y(τ_y⊗1)
//!     + q·γ_L·B_z(τ_z⊗1) + (γ_s/2)(1⊗B·σ)
//!
//! The orbital Zeeman term is quenched by the factor q and only couples to
//! B_z; a transverse field splits the doublets only through its interplay
//! with strain. All frequencies are angular (rad/s); the field is in tesla.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::hz_to_rad;
use crate::cpt::{SignalKind, Spectrum, SpectrumAxis};

#[derive(Debug, Error)]
pub enum LevelError {
    #[error("invalid level parameters: {0}")]
    InvalidParams(String),
    #[error("PLE linewidth must be positive, got {0}")]
    NonPositiveLinewidth(f64),
    #[error("detuning grid must be nonempty and strictly ascending")]
    BadGrid,
}

/// Which orbital manifold a Hamiltonian or eigensystem describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Manifold {
    Ground,
    Excited,
}

/// Parameters of the spin-orbit / Zeeman / strain model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelParams {
    /// Ground-manifold spin-orbit splitting λ_so^g (rad/s).
    pub lambda_so_ground: f64,
    /// Excited-manifold spin-orbit splitting λ_so^e (rad/s).
    pub lambda_so_excited: f64,
    /// Magnetic field (T) in the emitter frame; z is the symmetry axis.
    pub b_field: [f64; 3],
    /// Transverse orbital strain (ε_x, ε_y) of the ground manifold (rad/s).
    pub strain_ground: [f64; 2],
    /// Transverse orbital strain of the excited manifold (rad/s).
    pub strain_excited: [f64; 2],
    /// Spin gyromagnetic ratio γ_s (rad/s per tesla).
    pub gyromagnetic_spin: f64,
    /// Orbital gyromagnetic ratio γ_L (rad/s per tesla).
    pub gyromagnetic_orbital: f64,
    /// Quenching factor of the orbital Zeeman term, in [0, 1].
    pub orbital_quenching: f64,
}

impl Default for LevelParams {
    fn default() -> Self {
        Self {
            lambda_so_ground: hz_to_rad(50e9),
            lambda_so_excited: hz_to_rad(260e9),
            b_field: [0.0; 3],
            strain_ground: [0.0; 2],
            strain_excited: [0.0; 2],
            gyromagnetic_spin: hz_to_rad(28e9),
            gyromagnetic_orbital: hz_to_rad(28e9),
            orbital_quenching: 0.1,
        }
    }
}

impl LevelParams {
    pub fn validate(&self) -> Result<(), LevelError> {
        if !(self.lambda_so_ground > 0.0) || !(self.lambda_so_excited > 0.0) {
            return Err(LevelError::InvalidParams(
                "spin-orbit splittings must be positive".into(),
            ));
        }
        if !(self.gyromagnetic_spin > 0.0) {
            return Err(LevelError::InvalidParams(
                "gyromagnetic_spin must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.orbital_quenching) {
            return Err(LevelError::InvalidParams(format!(
                "orbital_quenching must lie in [0, 1], got {}",
                self.orbital_quenching
            )));
        }
        if self
            .b_field
            .iter()
            .chain(self.strain_ground.iter())
            .chain(self.strain_excited.iter())
            .any(|v| !v.is_finite())
        {
            return Err(LevelError::InvalidParams(
                "field and strain components must be finite".into(),
            ));
        }
        Ok(())
    }

    fn manifold_constants(&self, manifold: Manifold) -> (f64, [f64; 2]) {
        match manifold {
            Manifold::Ground => (self.lambda_so_ground, self.strain_ground),
            Manifold::Excited => (self.lambda_so_excited, self.strain_excited),
        }
    }
}

/// Basis index of |e₊↑⟩.
pub const IDX_EP_UP: usize = 0;
/// Basis index of |e₊↓⟩.
pub const IDX_EP_DOWN: usize = 1;
/// Basis index of |e₋↑⟩.
pub const IDX_EM_UP: usize = 2;
/// Basis index of |e₋↓⟩.
pub const IDX_EM_DOWN: usize = 3;

/// Traceless 4×4 Hamiltonian of one manifold.
pub fn build_hamiltonian(params: &LevelParams, manifold: Manifold) -> Matrix4<C64> {
    let (lambda_so, strain) = params.manifold_constants(manifold);
    let [bx, by, bz] = params.b_field;
    let so = -0.5 * lambda_so;
    let orb = params.orbital_quenching * params.gyromagnetic_orbital * bz;
    let sx = 0.5 * params.gyromagnetic_spin * bx;
    let sy = 0.5 * params.gyromagnetic_spin * by;
    let sz = 0.5 * params.gyromagnetic_spin * bz;
    let (ex, ey) = (strain[0], strain[1]);

    let r = |v: f64| C64::new(v, 0.0);
    let mut h = Matrix4::zeros();
    // −(λ/2)τ_zσ_z + q·γ_L·B_z·τ_z + (γ_s/2)B_z·σ_z
    h[(IDX_EP_UP, IDX_EP_UP)] = r(so + orb + sz);
    h[(IDX_EP_DOWN, IDX_EP_DOWN)] = r(-so + orb - sz);
    h[(IDX_EM_UP, IDX_EM_UP)] = r(-so - orb + sz);
    h[(IDX_EM_DOWN, IDX_EM_DOWN)] = r(so - orb - sz);
    // transverse spin Zeeman (γ_s/2)(B_x σ_x + B_y σ_y)
    let spin_flip = C64::new(sx, -sy);
    h[(IDX_EP_UP, IDX_EP_DOWN)] = spin_flip;
    h[(IDX_EP_DOWN, IDX_EP_UP)] = spin_flip.conj();
    h[(IDX_EM_UP, IDX_EM_DOWN)] = spin_flip;
    h[(IDX_EM_DOWN, IDX_EM_UP)] = spin_flip.conj();
    // strain ε_x τ_x + ε_y τ_y
    let orbit_mix = C64::new(ex, -ey);
    h[(IDX_EP_UP, IDX_EM_UP)] = orbit_mix;
    h[(IDX_EM_UP, IDX_EP_UP)] = orbit_mix.conj();
    h[(IDX_EP_DOWN, IDX_EM_DOWN)] = orbit_mix;
    h[(IDX_EM_DOWN, IDX_EP_DOWN)] = orbit_mix.conj();
    h
}

/// Eigenstates of one manifold, energies ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Energies (rad/s), ascending.
    pub energies: [f64; 4],
    /// Eigenvectors as columns of a unitary matrix, same order as `energies`.
    pub states: Matrix4<C64>,
    pub manifold: Manifold,
}

impl EigenSystem {
    pub fn state(&self, i: usize) -> Vector4<C64> {
        self.states.column(i).into_owned()
    }

    /// ⟨σ_z⟩ of eigenstate `i`, in [−1, 1].
    pub fn spin_z(&self, i: usize) -> f64 {
        let v = self.states.column(i);
        let mut acc = 0.0;
        for (idx, sign) in [
            (IDX_EP_UP, 1.0),
            (IDX_EP_DOWN, -1.0),
            (IDX_EM_UP, 1.0),
            (IDX_EM_DOWN, -1.0),
        ] {
            acc += sign * v[idx].norm_sqr();
        }
        acc
    }

    /// Splitting of the lower doublet, E₁ − E₀ (rad/s).
    pub fn lower_doublet_splitting(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// Splitting of the upper doublet, E₃ − E₂ (rad/s).
    pub fn upper_doublet_splitting(&self) -> f64 {
        self.energies[3] - self.energies[2]
    }

    /// Mean energy gap between the upper and lower doublets (rad/s).
    pub fn doublet_gap(&self) -> f64 {
        0.5 * (self.energies[2] + self.energies[3]) - 0.5 * (self.energies[0] + self.energies[1])
    }
}

/// σ_z expectation of a raw 4-vector.
fn spin_z_of(v: &Vector4<C64>) -> f64 {
    v[IDX_EP_UP].norm_sqr() - v[IDX_EP_DOWN].norm_sqr() + v[IDX_EM_UP].norm_sqr()
        - v[IDX_EM_DOWN].norm_sqr()
}

/// Fix the arbitrary overall phase: largest component made real positive.
fn fix_phase(v: &mut Vector4<C64>) {
    let mut dominant = 0usize;
    for i in 1..4 {
        if v[i].norm_sqr() > v[dominant].norm_sqr() {
            dominant = i;
        }
    }
    let a = v[dominant];
    if a.norm() > 0.0 {
        let phase = a / C64::new(a.norm(), 0.0);
        for i in 0..4 {
            v[i] /= phase;
        }
    }
}

/// Diagonalize one manifold.
///
/// Energies come out ascending; within degenerate groups the basis is
/// rotated to diagonalize σ_z and ordered by ascending ⟨σ_z⟩, which makes
/// the zero-field and axial-field eigenvectors spin-pure and deterministic.
pub fn eigensystem(params: &LevelParams, manifold: Manifold) -> Result<EigenSystem, LevelError> {
    params.validate()?;
    let h = build_hamiltonian(params, manifold);
    let eig = h.symmetric_eigen();

    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let mut energies = [0.0; 4];
    let mut vectors: Vec<Vector4<C64>> = Vec::with_capacity(4);
    for (slot, &src) in order.iter().enumerate() {
        energies[slot] = eig.eigenvalues[src];
        vectors.push(eig.eigenvectors.column(src).into_owned());
    }

    // canonicalize degenerate groups: diagonalize σ_z inside each group
    let scale = energies.iter().fold(params.lambda_so_ground, |m, e| m.max(e.abs()));
    let tol = 1e-9 * scale;
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && (energies[end] - energies[end - 1]).abs() <= tol {
            end += 1;
        }
        if end - start == 2 {
            let (a, b) = (vectors[start].clone(), vectors[start + 1].clone());
            // 2×2 σ_z block in the degenerate subspace
            let sz = |u: &Vector4<C64>, w: &Vector4<C64>| -> C64 {
                let mut acc = C64::new(0.0, 0.0);
                for (idx, sign) in [
                    (IDX_EP_UP, 1.0),
                    (IDX_EP_DOWN, -1.0),
                    (IDX_EM_UP, 1.0),
                    (IDX_EM_DOWN, -1.0),
                ] {
                    acc += u[idx].conj() * w[idx] * C64::new(sign, 0.0);
                }
                acc
            };
            let m = nalgebra::Matrix2::new(sz(&a, &a), sz(&a, &b), sz(&b, &a), sz(&b, &b));
            let sub = m.symmetric_eigen();
            let mut rotated: Vec<(f64, Vector4<C64>)> = (0..2)
                .map(|k| {
                    let c = sub.eigenvectors.column(k);
                    let v = a.clone() * c[0] + b.clone() * c[1];
                    (sub.eigenvalues[k], v)
                })
                .collect();
            rotated.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            vectors[start] = rotated[0].1.clone();
            vectors[start + 1] = rotated[1].1.clone();
        } else if end - start > 1 {
            // ordering ties broken by ascending ⟨σ_z⟩
            vectors[start..end].sort_by(|u, w| spin_z_of(u).partial_cmp(&spin_z_of(w)).unwrap());
        }
        start = end;
    }

    let mut states = Matrix4::zeros();
    for (i, mut v) in vectors.into_iter().enumerate() {
        let n = v.norm();
        v /= C64::new(n, 0.0);
        fix_phase(&mut v);
        states.set_column(i, &v);
    }
    Ok(EigenSystem {
        energies,
        states,
        manifold,
    })
}

/// One optical line between a ground and an excited eigenstate.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionRow {
    /// Letter for the doublet-branch combination (A–D), number 1–4 by
    /// ascending frequency within the letter.
    pub label: String,
    /// Ground-manifold eigenstate index.
    pub lower: usize,
    /// Excited-manifold eigenstate index.
    pub upper: usize,
    /// Frequency offset (rad/s) relative to the zero-field C line.
    pub frequency: f64,
    /// Relative strength; the largest spin-conserving line is 1.
    pub strength: f64,
    /// True when the dominant spin characters of the two states differ.
    pub spin_flip: bool,
}

/// All 16 candidate lines between two manifolds.
#[derive(Debug, Clone, Serialize)]
pub struct TransitionTable {
    pub rows: Vec<TransitionRow>,
}

impl TransitionTable {
    pub fn find(&self, label: &str) -> Option<&TransitionRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Rows of the lower-ground ↔ lower-excited quartet.
    pub fn c_lines(&self) -> Vec<&TransitionRow> {
        self.rows.iter().filter(|r| r.label.starts_with('C')).collect()
    }
}

/// Dipole strengths and line positions between the two manifolds.
///
/// The dipole operator is orbital-diagonal and spin-independent (e₊ → e₊
/// and e₋ → e₋ with equal amplitude, identity on spin), so strengths are
/// squared state overlaps |⟨x_j|g_i⟩|². Frequencies are referenced to the
/// mean of the lower-ground → lower-excited quartet, which coincides with
/// the zero-field C line.
pub fn transition_table(ground: &EigenSystem, excited: &EigenSystem) -> TransitionTable {
    debug_assert_eq!(ground.manifold, Manifold::Ground);
    debug_assert_eq!(excited.manifold, Manifold::Excited);

    // reference: mean C-quartet frequency
    let reference = excited.doublet_gap().mul_add(0.0, 0.0)
        + 0.5 * (excited.energies[0] + excited.energies[1])
        - 0.5 * (ground.energies[0] + ground.energies[1]);

    struct Raw {
        lower: usize,
        upper: usize,
        frequency: f64,
        overlap: f64,
        spin_flip: bool,
        letter: char,
    }

    let mut raw = Vec::with_capacity(16);
    for gi in 0..4 {
        for xj in 0..4 {
            let overlap: C64 = excited.state(xj).dotc(&ground.state(gi));
            let strength = overlap.norm_sqr();
            let frequency = excited.energies[xj] - ground.energies[gi] - reference;
            let spin_flip = ground.spin_z(gi) * excited.spin_z(xj) < 0.0;
            let letter = match (gi < 2, xj < 2) {
                (true, false) => 'A',
                (false, false) => 'B',
                (true, true) => 'C',
                (false, true) => 'D',
            };
            raw.push(Raw {
                lower: gi,
                upper: xj,
                frequency,
                overlap: strength,
                spin_flip,
                letter,
            });
        }
    }

    let norm = raw
        .iter()
        .filter(|r| !r.spin_flip)
        .map(|r| r.overlap)
        .fold(0.0f64, f64::max);
    let norm = if norm > 0.0 { norm } else { 1.0 };

    // number each letter's quartet by ascending frequency
    let mut rows = Vec::with_capacity(16);
    for letter in ['A', 'B', 'C', 'D'] {
        let mut group: Vec<&Raw> = raw.iter().filter(|r| r.letter == letter).collect();
        group.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
        for (k, r) in group.iter().enumerate() {
            rows.push(TransitionRow {
                label: format!("{}{}", letter, k + 1),
                lower: r.lower,
                upper: r.upper,
                frequency: r.frequency,
                strength: r.overlap / norm,
                spin_flip: r.spin_flip,
            });
        }
    }
    TransitionTable { rows }
}

/// Sum of Lorentzians over the detuning grid, one per table row.
///
/// `linewidth` is the FWHM (rad/s) shared by all lines; amplitudes are
/// the relative strengths, so the curve peaks near 1 in arbitrary units.
pub fn ple_spectrum(
    table: &TransitionTable,
    linewidth: f64,
    detuning_grid: &[f64],
) -> Result<Spectrum, LevelError> {
    if !(linewidth > 0.0) {
        return Err(LevelError::NonPositiveLinewidth(linewidth));
    }
    if detuning_grid.is_empty() || detuning_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LevelError::BadGrid);
    }
    let half = 0.5 * linewidth;
    let y = detuning_grid
        .iter()
        .map(|&x| {
            table
                .rows
                .iter()
                .map(|r| {
                    let d = x - r.frequency;
                    r.strength * half * half / (d * d + half * half)
                })
                .sum()
        })
        .collect();
    Ok(Spectrum {
        x: detuning_grid.to_vec(),
        y,
        y_err: None,
        axis: SpectrumAxis::LaserDetuning,
        kind: SignalKind::Dimensionless,
    })
}
