//! Learned seismic phase association.
//!
//! Picks from a seismic network are cut into fixed-length windows rooted at
//! each pick, a bidirectional GRU labels which picks share the root's origin,
//! and the per-window links are aggregated into event clusters. Training data
//! is purely synthetic, generated from a 1D layered velocity model. A grid
//! back-projection associator is included as a baseline, along with Jaccard
//! based evaluation.

pub mod aggregate;
pub mod dataset;
pub mod eval;
pub mod geo;
pub mod gridassoc;
pub mod linker;
pub mod picks;
pub mod pipeline;
pub mod presets;
pub mod synth;
pub mod velmod;
pub mod window;
