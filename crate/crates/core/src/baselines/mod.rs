//! Comparison methods: distributed gradient descent, CoCoA, and the offline
//! optimum.

pub mod cocoa;
pub mod gd;
pub mod opt;

pub use cocoa::{CocoaAggregation, CocoaConfig, DualState};
pub use gd::{GdConfig, GdStep};
pub use opt::{solve_optimum, Optimum, OptimumConfig};
