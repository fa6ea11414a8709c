//! Hamilton–Dirac constraint analysis for degenerate point-particle
//! Lagrangians, with linear canonical charts, embedding selection and the
//! boundary data that make the variational principle well-posed.

pub mod symkernel;

pub mod error;
pub mod linalg;
pub mod mechanics;
pub mod dirac;
pub mod chart;
pub mod embedding;
pub mod numerics;
