//! Circular and non-wellfounded sequent calculi with fixed points,
//! S4-style modalities and exponentials.
//!
//! The crate provides:
//!
//! * formula and sequent syntax for the classical and linear families
//!   ([`formula`], [`calculus`]);
//! * finite proof graphs with back-edges denoting regular non-wellfounded
//!   proofs, plus structural checking and unfolding ([`proof`]);
//! * the thread-based validity criterion for such proofs ([`validity`]);
//! * multicut nodes and a fair multicut-reduction engine that computes
//!   cut-free prefixes of the reduced proof ([`multicut`], [`reduction`]);
//! * three proof translations: exponential-erasing skeletons, the
//!   modal-to-exponential embedding, and the full linear embedding of
//!   classical modal proofs, together with a step-by-step simulation of
//!   reductions across the modal embedding ([`translate`]);
//! * a corpus of worked circular proofs and random proof generators
//!   ([`corpus`]);
//! * a text format and command-line front end ([`text`], [`cli`]).

pub mod calculus;
pub mod cli;
pub mod corpus;
pub mod formula;
pub mod multicut;
pub mod proof;
pub mod reduction;
pub mod text;
pub mod translate;
pub mod validity;

pub use formula::{Formula, FormulaError, Polarity, SystemId};
