//! Template-guided graph-cut segmentation of 2D images and 3D volumes.
//!
//! Rays are cast from a seed through a template shape; nodes are sampled
//! along each ray in proportion to the template radius, and a minimum s-t
//! cut over the resulting graph selects one boundary node per ray.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
pub mod error;
pub mod eval;
pub mod field;
pub mod graph;
pub mod icosphere;
pub mod intersect;
pub mod linalg;
pub mod math;
pub mod maxflow;
pub mod pipeline;
pub mod rays;
pub mod shape_model;
pub mod template;
pub mod voxelize;

pub use cost::CostParams;
pub use error::{Error, Result};
pub use eval::{dice, evaluate, summarize, EvalReport, Summary};
pub use field::{Grid, Mask, ScalarField};
pub use graph::{NodeWeights, RayGraph};
pub use math::{Rotation, Vec3};
pub use maxflow::{max_flow, max_flow_with, Arc, Capacity, CutResult, CutSide, FlowNetwork};
pub use pipeline::{iterate_seed, segment, IterationOutcome, SegmentConfig, SegmentStats, SegmentationResult};
pub use rays::{cast_rays, RayFan, RaySampling};
pub use shape_model::{align_shapes, estimate_delta, fit_pca, ShapeModel};
pub use template::{normalize_template, Dim, TemplateShape};
pub use voxelize::{voxelize, Contour};
