//! Finite-template constraint satisfaction toolkit.
//!
//! An *instance* and a *template* are finite relational structures over a
//! shared signature; a solution is a homomorphism from the instance to the
//! template. On top of that base the crate provides:
//!
//! - robust satisfiability: does every compatible partial assignment on k
//!   elements extend to a solution? ([`robust`])
//! - implied constraints and quasivariety membership ([`reflect`])
//! - reflections that enlarge relations with frozen tuples and merge frozen
//!   pairs ([`reflect`])
//! - primitive-positive formula machinery: evaluation, instantiation sets,
//!   types, projections, claw formulae ([`formula`], [`claw`])
//! - robustness-preserving reductions: pp-definition rewriting, clause
//!   amplification, clause-width reduction, constant elimination, and the
//!   affine chain ([`reduce`], [`sat`], [`con`], [`linear`])
//! - local-consistency strategies and a strategy-based separator
//!   ([`strategy`])
//! - polymorphism search over indicator structures ([`poly`])
//!
//! Everything is deterministic: searches visit candidates in lexicographic
//! order, and every potentially explosive operation draws from an explicit
//! node [`Budget`](budget::Budget).

pub mod budget;
pub mod claw;
pub mod con;
pub mod error;
pub mod formula;
pub mod io;
pub mod linear;
pub mod poly;
pub mod reduce;
pub mod sat;
pub mod theory;
pub mod util;
pub mod reflect;
pub mod robust;
pub mod solve;
pub mod strategy;
pub mod structure;
pub mod templates;

pub use budget::Budget;
pub use error::{Error, Result};
pub use structure::{Homomorphism, PartialAssignment, Signature, Structure};
