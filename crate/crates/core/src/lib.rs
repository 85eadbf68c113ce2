//! Perception-aware probabilistic roadmaps for a planar mobile base carrying a
//! pan-tilt camera.
//!
//! Roadmap nodes are sampled so the camera observes weighted objects of
//! interest from a scene graph; edges carry a motion cost and a perception
//! cost, and an A* search with a hop-count heuristic trades the two off.

pub mod baselines;
pub mod bench;
pub mod error;
pub mod geometry;
pub mod perception;
pub mod roadmap;
pub mod sampling;
pub mod scenegraph;
pub mod search;
pub mod steering;

pub use error::{Error, Result};
