//! Experiments on normalized information along horospherical and metric
//! set sequences, psi-mixing decay, and the maximal-inequality tail.

mod maximal;
mod psi;
pub mod report;
mod smb;
pub mod spec;
pub mod verify;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use maximal::{r0_analytic, run_maximal, MaximalSpec, RGrid};
pub use psi::{gap_bound, run_decomposition, run_psi_decay, DecompositionSpec, PsiSpec};
pub use report::{emit_report, render, ConvergenceReport, CsvTable};
pub use smb::run_smb;
pub use spec::{BoundarySource, ExperimentSpec, Mode, ModelRef, OutputFormat};

/// Generator for replica `replica`: the spec seed selects the key, the
/// replica index selects the stream.
pub fn replica_rng(seed: u64, replica: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica as u64);
    rng
}

/// Generator reserved for drawing the boundary prefix.
pub fn boundary_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng
}
