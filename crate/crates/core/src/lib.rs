//! Degradation synthesis, stochastic sequence loading, dynamic refinement and
//! no-reference quality metrics for real-world video super-resolution.
//!
//! Raster math is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for callers that do not care.

pub mod cleaner;
pub mod degrade;
pub mod imgcore;
pub mod loader;
pub mod metrics;
pub mod refine;
pub mod rng;
pub mod scalar;
pub mod schedule;
pub mod synth;

pub use scalar::Real;

pub type Image32 = imgcore::Image<f32>;
pub type Image64 = imgcore::Image<f64>;
pub type FrameSequence32 = imgcore::FrameSequence<f32>;
pub type FrameSequence64 = imgcore::FrameSequence<f64>;
pub type Kernel32 = imgcore::Kernel2D<f32>;
pub type Kernel64 = imgcore::Kernel2D<f64>;
