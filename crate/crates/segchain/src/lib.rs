//! # segchain
//!
//! Exact-arithmetic analysis of finite Markov chains that *segregate* states:
//! chains for which two copies started in different states can be coupled to
//! meet almost surely, while the total variation distance of their
//! distributions stays bounded away from zero forever.
//!
//! Everything that can be exact is exact: probabilities are arbitrary-precision
//! rationals, total variation distances and separations are computed without
//! rounding, and the meeting-probability/separation duality is certified as an
//! exact rational equality. Floating point appears only where the quantities
//! themselves are transcendental (asymptotic approximations, `exp`-based
//! closed forms) and every such boundary is explicit in the API.
//!
//! The crate is organized around the objects of the theory:
//!
//! - [`chain`]: finite chains with exact row-stochastic kernels, distribution
//!   evolution, total variation machinery, mixing times and time-layering.
//! - [`coupling`]: Markovian coupling kernels and trajectory-level couplings,
//!   faithfulness checking, the sticky transformation, meeting-time
//!   distributions and the classical coupling bounds.
//! - [`separation`]: separating sequences, their exact separation values,
//!   brute-force optimal separation and the constant-threshold family for
//!   birth-and-death chains.
//! - [`meetflow`]: the trajectory-pair flow network, exact max-flow, optimal
//!   meeting probabilities and Doeblin-style extraction of optimal couplings.
//! - [`zoo`]: constructors for the example chains the theory is built on.
//! - [`formulas`]: closed forms and asymptotic approximations, plus the
//!   experiment driver measuring how much total variation a segregating chain
//!   can retain.
//! - [`randchain`]: seeded random chain generation for fuzzing.

#![forbid(unsafe_code)]

pub mod chain;
pub mod coupling;
mod error;
mod exact;
pub mod formulas;
mod linalg;
pub mod meetflow;
pub mod prob;
pub mod randchain;
pub mod separation;
pub mod zoo;

pub use chain::{Distribution, MarkovChain, TimeLayeredChain};
pub use error::{Error, Result};
pub use prob::Prob;

pub use num::BigRational;
