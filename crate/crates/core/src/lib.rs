//! Computation and comparison of Cuntz-type invariants: ordered monoids, multiplicity
//! functions, order zero maps between finite-dimensional algebras, and a rewrite
//! engine for bivariant Cuntz semigroups of catalog algebras.

pub mod catalog;
pub mod cli;
pub mod monoid_kernel;
pub mod multiplicity;
pub mod order_zero_lab;
pub mod supernaturals;

/// Version tag carried by every JSON document.
pub const SCHEMA: &str = "cuntz/1";
