//! Simulation and analysis toolkit for coherent population trapping (CPT)
//! and phonon-limited spin relaxation in a lambda-type three-level emitter.

pub mod constants;
pub mod fit;
pub mod lambda;
pub mod phonon;
