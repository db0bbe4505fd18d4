//! Finite-element solver and verification harness for stress-only isotropic
//! linear elasticity.

pub mod polycalc;
pub mod tensor;
pub mod mesh;
pub mod fespace;
pub mod sparse;
pub mod forms;
pub mod solve;
pub mod postproc;
pub mod study;
pub mod cli;
