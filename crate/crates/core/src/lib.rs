//! Geometrically nonlinear six-parameter resultant shell model: strain
//! measures, strain-energy densities, energy minimization, and numerical
//! checks of drill invariance, first integrals and coercivity.

pub mod algebra3;
pub mod cli;
pub mod config;
pub mod constitutive;
pub mod fields;
pub mod invariance;
pub mod kinematics;
pub mod output;
pub mod solver;
pub mod surface;
pub mod verify;
