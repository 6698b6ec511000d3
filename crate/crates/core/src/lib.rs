//! Mixed finite elements for the two-phase lid-driven cavity and
//! Schur-complement block preconditioners for the linearised (Oseen) systems.

pub mod grid;
pub mod krylov;
pub mod assembly;
pub mod precond;
pub mod driver;
