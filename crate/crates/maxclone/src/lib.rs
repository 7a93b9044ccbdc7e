//! Finite-domain relation algebra with counting and max quantifiers.
//!
//! Relations are bit-vectors ([`relation::Relation`]). On top of them sit
//! bounded closure computations ([`closure`]), partial polymorphisms
//! ([`fnspace`]), a formula evaluator with prenex flattening ([`formula`]),
//! the reduction gadget for counting problems ([`gadget`], [`counting`]) and
//! the Boolean max-co-clone classification ([`boolean`]).

pub mod boolean;
pub mod catalog;
pub mod closure;
pub mod counting;
pub mod derivation;
pub mod error;
pub mod fnspace;
pub mod formats;
pub mod formula;
pub mod gadget;
pub mod galois;
pub mod predicates;
pub mod relation;

pub use error::{Error, Result};
pub use relation::Relation;
