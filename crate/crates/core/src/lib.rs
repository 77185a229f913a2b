//! Numerical toolkit for complex Hessian equations `sigma_k(chi + i ddbar u) = psi`:
//! elementary symmetric calculus, Garding cones, slack evaluation for the
//! inequalities of the second-order a priori estimate, and a damped Newton
//! solver on flat tori.

pub mod cli;
pub mod cone;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod solver;
pub mod symfun;

pub use error::{Error, Result};
