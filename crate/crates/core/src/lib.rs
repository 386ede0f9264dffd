//! Pseudo-label generation for point-supervised oriented object detection.
//!
//! The library turns single-point object annotations into oriented bounding
//! boxes through a rule-based pipeline:
//!
//! 1. [`assignment`] labels every pixel positive / background / ignore from
//!    the point layout (dynamic radii) plus spatial partitioning and seeded
//!    region growing on the raw image.
//! 2. [`extraction`] carves per-instance masks out of class score maps using
//!    the same partition-and-grow kernel, then converts each mask to a
//!    rotated box (PCA-anchored or minimum-area, per class).
//! 3. [`evaluation`] scores the resulting pseudo-labels against ground truth
//!    with strict one-box-per-annotation matching.
//!
//! [`synth`] generates deterministic synthetic scenes (images, point
//! annotations, and oracle score maps) so the whole pipeline is testable
//! without any trained model, and [`maps`] holds the grid data model and
//! file formats shared by all stages.

pub mod assignment;
pub mod error;
pub mod evaluation;
pub mod extraction;
pub mod geometry;
pub mod maps;
pub mod partition;
pub mod synth;

pub use error::{Error, Result};
