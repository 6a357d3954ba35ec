//! Exact arithmetic for Gauss-sum signs, Hecke algebra coefficients and the
//! base change of level-zero data on p-adic unitary groups.
//!
//! Layers, bottom up: [`cyclotomic`] numbers, [`finite_field`] arithmetic and
//! characters, quadratic [`gauss`] sums, the graded [`local_model`] of
//! End_F(E), the [`stratum`] sign and coset oracles, and the Hecke algebra
//! and base-change bookkeeping in [`hecke_bc`].

pub mod cli;
pub mod config;
pub mod cyclotomic;
pub mod finite_field;
pub mod gauss;
pub mod hecke_bc;
pub mod linalg;
pub mod local_model;
pub mod stratum;

pub use cyclotomic::CycNum;
pub use finite_field::FqField;
