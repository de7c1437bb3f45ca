//! Finite-depth exact computations on the Bruhat-Tits tree of PGL2 over a
//! local field: tree combinatorics, locally algebraic automorphism groups,
//! equivariant coefficient systems, Hecke operators and etale pairs.

pub mod cli;
pub mod coeff;
pub mod error;
pub mod hecke;
pub mod linalg;
pub mod localfield;
pub mod locaut;
pub mod phigamma;
pub mod rep;
pub mod report;
pub mod tree;

pub use error::{BtError, Result};
