//! Synthetic spacecraft imagery and pose classification at desk scale.
//!
//! The pipeline discretizes the 4-D pose space around a target spacecraft
//! (three attitude degrees of freedom plus range), renders labeled
//! grayscale images of it, trains a compact softmax classifier on them,
//! and scores both the classification and the implied pose estimates.
//!
//! Stages, one module each:
//!
//! 1. [`rotmath`] — quaternion and rotation-matrix algebra (scalar-first,
//!    canonical-sign convention).
//! 2. [`posespace`] — minimum-energy viewpoint distribution on spheres,
//!    label-set generation over range shells x viewpoints x boresight
//!    rolls, and nearest-label assignment.
//! 3. [`render`] — deterministic z-buffered rasterizer with Lambertian
//!    shading, PGM i/o, Gaussian-noise and off-center variants.
//! 4. [`dataset`] — dataset assembly with stratified train/validation/test
//!    splits and a line-delimited JSON manifest.
//! 5. [`classifier`] — two-layer softmax network with inverted dropout,
//!    horizontal-flip augmentation, and SGD + momentum training.
//! 6. [`eval`] — accuracy, one-vs-rest precision/recall/F-measure, and
//!    attitude/position error statistics with a confidence gate.
//! 7. [`cli`] — the `pose-forge` binary's subcommands.
//!
//! Everything is seed-deterministic: a full pipeline run (labels, dataset,
//! training, evaluation) reproduces byte-identical artifacts from the same
//! seeds. The runnable examples under `examples/` walk one capability
//! each; `tests/acceptance.rs` checks the end-to-end numeric contracts.

pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod posespace;
pub mod render;
pub mod rotmath;
