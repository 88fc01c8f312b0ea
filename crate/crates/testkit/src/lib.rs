//! Oracles and generators used by the test suites.
//!
//! Everything here computes expected values along an independent route from
//! the library under test: the linear algebra is nalgebra's, the matrix
//! exponential is a local scaling-and-squaring implementation, and the
//! spider searches are brute force.

pub mod fixtures;
pub mod gen;
pub mod oracle;
