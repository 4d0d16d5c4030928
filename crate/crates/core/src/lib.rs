//! Physics-inspired synthetic microscopy: procedural field synthesis,
//! nucleus geometry and ground-truth masks, three imaging modalities,
//! chromatin biomarker extraction, segmentation metrics, and
//! nonparametric population statistics.
//!
//! Everything stochastic is keyed by `(master_seed, stream_id)` so batch
//! outputs are bit-identical regardless of worker count.

pub mod augment;
pub mod batch;
pub mod biomarker;
pub mod dwt;
pub mod error;
pub mod fft;
pub mod field;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod render;
pub mod stats;
pub mod rng;

pub use error::{Error, Result};
pub use rng::{mix64, StreamRng};
