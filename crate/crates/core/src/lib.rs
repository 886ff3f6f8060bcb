//! Exact arithmetic and classification machinery for skew semisimple strata
//! of the quasi-split unitary group U(2,1)(F/F0) over a p-adic field with odd
//! residue characteristic.
//!
//! The crate models the quadratic extension F/F0 with tracked-precision
//! arithmetic, hermitian 3-spaces and their Witt bases, self-dual lattice
//! sequences with their endomorphism filtrations, the variety cut out in P^5
//! by the pair of quadrics h(v,v) = 0 and h(v, beta v) = 0, and the decision
//! table for genericity of the cuspidal representations attached to a
//! stratum. Every classification criterion can be cross-validated against a
//! brute-force rational-point search with Hensel lifting certificates.

pub mod classifier;
pub mod fuzz;
pub mod hermitian;
pub mod lattice;
pub mod padic;
pub mod strata;
pub mod xbeta;

use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("result digits are not determined by available precision")]
    PrecisionExhausted,
    #[error("division by an element indistinguishable from zero")]
    DivisionByApparentZero,
    #[error("valuation indeterminate: all known digits vanish")]
    IndeterminateValuation,
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("enumeration inconclusive: {0}")]
    InconclusiveEnumeration(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal error: {0}")]
    Internal(String),
}

pub use padic::{BaseElement, ExtElement, HalfInt, PrimeConfig, Valuation};
