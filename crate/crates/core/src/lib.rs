//! Exact computations on the quotient of the Bruhat–Tits building of PGL_d(F_q((1/t)))
//! by the non-uniform lattice Γ = PGL_d(F_q[t]).
//!
//! Modules, bottom-up: [`gf`] (prime fields and q-counting), [`laurent`] (Laurent
//! polynomials and matrices), [`building`] (lattice classes, colors, neighbors, BFS),
//! [`domain`] (the fundamental domain T, stabilizers, reduction into T), [`quotient`]
//! (the weighted quotient graph), [`hecke`] (Hecke operators, eigenvectors, covolume) and
//! [`cli`] (the `btq` command line).

pub mod building;
pub mod cli;
pub mod domain;
pub mod error;
pub mod gf;
pub mod hecke;
pub mod laurent;
pub mod quotient;

pub use error::{BtqError, Result};
