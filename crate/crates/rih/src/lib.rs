//! Random systems of two increasing interval homeomorphisms, studied on the
//! real line through a conjugacy that turns endpoint derivatives into
//! translation tails.
//!
//! The crate provides:
//! - the conjugacy between (0,1) and the line and the metrics it induces
//!   ([`conjugacy`]);
//! - a canonical representation of increasing maps with slope-1 tails,
//!   with evaluation, inversion, composition, and supremum distance
//!   ([`map`]);
//! - exact middle-thirds Cantor combinatorics and order-preserving
//!   transport between blocks of cells ([`cantor`]);
//! - the linked-box perturbation producing systems whose stationary measure
//!   lives on a grid Cantor set ([`boxes`]);
//! - the translation-tail perturbation producing minimal systems with fully
//!   supported stationary measures ([`minimal`]);
//! - a Markov operator with a certified stationary-measure solver, tail
//!   certificates, a Monte Carlo oracle, and support diagnostics
//!   ([`markov`]);
//! - file formats and bundle I/O for the command line ([`io`]).
//!
//! See the `examples/` directory for one runnable walkthrough per
//! capability, and the `rih` binary for the scriptable pipeline.

pub mod boxes;
pub mod cantor;
pub mod conjugacy;
pub mod error;
pub mod exact;
pub mod io;
pub mod map;
pub mod markov;
pub mod measure;
pub mod minimal;
pub mod sample;
pub mod system;

pub use error::{Error, Result};
