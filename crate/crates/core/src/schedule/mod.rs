//! Degradation parameter spaces and their per-frame random-walk evolution.

mod params;
mod record;
mod walk;

pub use params::{
    sample_initial_params, Bounds, Component, DiscreteChoices, Order, ParamSpace, ParamVector, LATTICE, NUM_COMPONENTS,
};
pub use record::{RecordError, RECORD_MAGIC, RECORD_VERSION};
pub use walk::{random_walk, realize_timeline, replay, DegradationTimeline, WalkSpec, DEFAULT_STEP_FRACTION};
