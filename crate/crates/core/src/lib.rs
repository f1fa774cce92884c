//! Horospherical and spherical entropy equipartition on regular trees.
//!
//! * [`tree`]: reduced words, distances, spheres and balls.
//! * [`boundary`]: boundary prefixes, the group `G` of `(d-1)`-adic roots of
//!   unity acting on them, horosphere sites and Følner blocks.
//! * [`automorphism`]: finite-radius parity-preserving automorphisms (flips,
//!   geodesic mappers, horosphere mappers).
//! * [`process`]: i.i.d. and Markov tree fields with exact region
//!   probabilities, entropies and psi-mixing coefficients.
//! * [`lab`]: experiment runners and report emission.

pub mod automorphism;
pub mod boundary;
pub mod error;
pub mod exec;
pub mod lab;
pub mod process;
pub mod tree;

pub use boundary::{BoundaryGroup, BoundaryPrefix, FolnerOrientation, GroupElement, PsSampler};
pub use error::{Error, Result};
pub use exec::Execution;
pub use tree::{Alphabet, Letter, RegularTree, Site};
