//! Hermitian curvature positivity laboratory.

pub mod cli;
pub mod directimage;
pub mod expr;
pub mod fibration;
pub mod geometry;
pub mod linalg;
pub mod optimize;
pub mod positivity;
pub mod sampling;
