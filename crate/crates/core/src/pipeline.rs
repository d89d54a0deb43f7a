//! Seed → rays → graph → cut → boundary → contour → mask.

use alloc::vec::Vec;

use crate::cost::{node_cost, window_stats, CostParams};
use crate::error::{Error, Result};
use crate::field::{Grid, Mask, ScalarField};
use crate::graph::{node_distance, NodeWeights, RayGraph};
use crate::math::{Rotation, Vec3};
use crate::maxflow::{max_flow_with, CutResult, CutSide};
use crate::rays::{cast_rays, RayFan, RaySampling};
use crate::template::{Dim, TemplateShape};
use crate::voxelize::{voxelize, Contour};

pub const DEFAULT_RAYS_2D: usize = 360;
pub const DEFAULT_NODES_2D: usize = 200;
pub const DEFAULT_ICOSPHERE_LEVEL: u32 = 3;
pub const DEFAULT_NODES_3D: usize = 150;
pub const DEFAULT_SCALE_MAX: f64 = 2.0;
pub const DEFAULT_DELTA: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentConfig {
    /// `None` picks 360 planar rays in 2D or an icosphere of level 3 in 3D.
    pub sampling: Option<RaySampling>,
    /// `None` picks 200 (2D) or 150 (3D).
    pub nodes_per_ray: Option<usize>,
    pub delta: usize,
    /// Outer reach of the graph as a multiple of the template distance.
    pub scale_max: f64,
    /// Averaging window side length; `None` is four times the smallest spacing.
    pub avg_window: Option<f64>,
    /// World size of the unit template; `None` is a quarter of the smallest
    /// world extent of the field.
    pub template_scale: Option<f64>,
    pub orientation: Rotation,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            sampling: None,
            nodes_per_ray: None,
            delta: DEFAULT_DELTA,
            scale_max: DEFAULT_SCALE_MAX,
            avg_window: None,
            template_scale: None,
            orientation: Rotation::IDENTITY,
        }
    }
}

impl SegmentConfig {
    pub fn sampling_for(&self, dim: Dim) -> RaySampling {
        self.sampling.unwrap_or(match dim {
            Dim::Two => RaySampling::Planar(DEFAULT_RAYS_2D),
            Dim::Three => RaySampling::Icosphere(DEFAULT_ICOSPHERE_LEVEL),
        })
    }

    pub fn nodes_for(&self, dim: Dim) -> usize {
        self.nodes_per_ray.unwrap_or(match dim {
            Dim::Two => DEFAULT_NODES_2D,
            Dim::Three => DEFAULT_NODES_3D,
        })
    }

    pub fn template_scale_for(&self, grid: &Grid) -> f64 {
        self.template_scale.unwrap_or(0.25 * grid.min_world_extent())
    }

    pub fn avg_window_for(&self, field: &ScalarField) -> f64 {
        self.avg_window.unwrap_or_else(|| CostParams::default_window(field))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentStats {
    pub voxel_count: u64,
    /// Set voxels times voxel size, in squared or cubed world units.
    pub volume: f64,
}

impl SegmentStats {
    pub fn from_mask(mask: &Mask) -> Self {
        let voxel_count = mask.count();
        SegmentStats { voxel_count, volume: voxel_count as f64 * mask.grid.voxel_volume() }
    }

    /// Cubic centimetres, assuming millimetre spacing (square cm for images).
    pub fn volume_cm(&self, dim: Dim) -> f64 {
        match dim {
            Dim::Two => self.volume / 100.0,
            Dim::Three => self.volume / 1000.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SegmentationResult {
    pub seed: Vec3,
    pub fan: RayFan,
    pub nodes_per_ray: usize,
    pub delta: usize,
    pub scale_max: f64,
    pub avg_value: f64,
    /// Mean and standard deviation of the intensities in the averaging window.
    pub seed_window: (f64, f64),
    /// Largest source-side node index per ray, `-1` for an empty ray.
    pub boundary_index: Vec<isize>,
    pub boundary_points: Vec<Vec3>,
    pub contour: Contour,
    pub mask: Mask,
    pub stats: SegmentStats,
    /// Cost of the minimum closed set, i.e. `sum_r c(r, b_r)`, recovered from the flow value.
    pub cut_value: f64,
    /// Raw maximum flow of the network, terminal offsets included.
    pub flow_value: f64,
    /// Rays whose boundary was empty and replaced by the innermost node.
    pub empty_rays: Vec<usize>,
}

impl SegmentationResult {
    pub fn is_partial(&self) -> bool {
        !self.empty_rays.is_empty()
    }

    pub fn boundary_range(&self) -> (isize, isize) {
        let lo = self.boundary_index.iter().copied().min().unwrap_or(-1);
        let hi = self.boundary_index.iter().copied().max().unwrap_or(-1);
        (lo, hi)
    }

    /// World position of node `(r, p)` for this run.
    pub fn node_position(&self, r: usize, p: usize) -> Vec3 {
        self.fan.seed
            + self.fan.directions[r] * node_distance(self.fan.template_dist[r], p, self.nodes_per_ray, self.scale_max)
    }
}

/// Full segmentation run.
pub fn segment(field: &ScalarField, template: &TemplateShape, seed: Vec3, config: &SegmentConfig) -> Result<SegmentationResult> {
    let grid = &field.grid;
    if template.dim != grid.dim {
        return Err(Error::DimensionMismatch { expected: grid.dim.as_usize(), got: template.dim.as_usize() });
    }
    if !grid.contains_world(seed) {
        return Err(Error::InvalidSeed("seed lies outside the field"));
    }
    if !(config.scale_max > 0.0 && config.scale_max.is_finite()) {
        return Err(Error::InvalidConfig("scale_max must be positive"));
    }
    let nodes_per_ray = config.nodes_for(grid.dim);
    if nodes_per_ray == 0 {
        return Err(Error::InvalidConfig("at least one node per ray is required"));
    }
    let template_scale = config.template_scale_for(grid);
    if !(template_scale > 0.0 && template_scale.is_finite()) {
        return Err(Error::InvalidConfig("template scale must be positive"));
    }

    let fan = cast_rays(template, seed, config.sampling_for(grid.dim), &config.orientation)?.with_scale(template_scale);

    let window = config.avg_window_for(field);
    let mut params = CostParams::new(window);
    let avg_value = params.estimate(field, seed)?;
    let seed_window = window_stats(field, seed, window)?;

    let mut graph = RayGraph::new(&fan, nodes_per_ray, config.scale_max, config.delta)?;
    let mut costs = Vec::with_capacity(graph.node_pos.len());
    for &p in &graph.node_pos {
        costs.push(node_cost(field, &params, p)?);
    }
    let mut weights = NodeWeights::from_costs(&costs, nodes_per_ray)?;
    let offset = weights.anchor_base_layer();
    let negative = weights.negative_total();
    graph.add_terminal_arcs(&weights)?;

    let net = graph.to_flow_network();
    // Among equal-cost closed sets keep the largest one: with a region-type
    // cost every interior position of the boundary is equally cheap.
    let cut = max_flow_with(&net, CutSide::Maximal)?;
    let crossing = net
        .cut_capacity(&cut.source_side)
        .ok_or(Error::InternalError("an infinite arc crosses the cut"))?;
    if (crossing - cut.max_flow_value).abs() > 1e-6 * cut.max_flow_value.abs().max(1.0) {
        return Err(Error::InternalError("cut capacity differs from flow value"));
    }

    let boundary_index = extract_boundary(&cut, &graph)?;
    check_smoothness(&boundary_index, &fan, config.delta)?;
    if boundary_index.iter().all(|&b| b < 0) {
        return Err(Error::EmptySegmentation);
    }

    let mut empty_rays = Vec::new();
    let boundary_points: Vec<Vec3> = boundary_index
        .iter()
        .enumerate()
        .map(|(r, &b)| {
            if b < 0 {
                empty_rays.push(r);
                graph.node_pos[graph.node_id(r, 0)]
            } else {
                graph.node_pos[graph.node_id(r, b as usize)]
            }
        })
        .collect();
    let contour = build_contour(&boundary_points, &fan);
    let mask = voxelize(&contour, grid)?;
    let stats = SegmentStats::from_mask(&mask);

    Ok(SegmentationResult {
        seed,
        nodes_per_ray,
        delta: config.delta,
        scale_max: config.scale_max,
        avg_value,
        seed_window,
        boundary_index,
        boundary_points,
        contour,
        mask,
        stats,
        cut_value: cut.max_flow_value - negative + offset,
        flow_value: cut.max_flow_value,
        empty_rays,
        fan,
    })
}

/// `b_r = max { p : (r, p) on the source side }`, or `-1`.
///
/// Fails with `InternalError` if some ray's source-side nodes are not a prefix.
pub fn extract_boundary(cut: &CutResult, graph: &RayGraph) -> Result<Vec<isize>> {
    let p_count = graph.nodes_per_ray;
    if cut.source_side.len() < graph.inner_count() {
        return Err(Error::DimensionMismatch { expected: graph.inner_count(), got: cut.source_side.len() });
    }
    let mut out = Vec::with_capacity(graph.rays);
    for r in 0..graph.rays {
        let column = &cut.source_side[r * p_count..(r + 1) * p_count];
        let count = column.iter().take_while(|&&s| s).count();
        if column[count..].iter().any(|&s| s) {
            return Err(Error::InternalError("source side is not closed along a ray"));
        }
        out.push(count as isize - 1);
    }
    Ok(out)
}

/// `|b_r - b_n| <= delta` for every neighbouring pair.
pub fn check_smoothness(boundary: &[isize], fan: &RayFan, delta: usize) -> Result<()> {
    for (a, b) in fan.neighbor_pairs() {
        if (boundary[a] - boundary[b]).unsigned_abs() > delta {
            return Err(Error::InternalError("boundary violates the smoothness constraint"));
        }
    }
    Ok(())
}

fn build_contour(points: &[Vec3], fan: &RayFan) -> Contour {
    match fan.dim {
        Dim::Two => Contour::Polygon(points.to_vec()),
        Dim::Three => Contour::Mesh { vertices: points.to_vec(), faces: fan.faces.clone() },
    }
}

/// Ordered polygon (2D) or icosphere-connected mesh (3D) through the boundary points.
pub fn reconstruct_contour(boundary_index: &[isize], boundary_points: &[Vec3], fan: &RayFan) -> Result<Contour> {
    if let Some(r) = boundary_index.iter().position(|&b| b < 0) {
        return Err(Error::EmptyAtRay(r));
    }
    if boundary_points.len() != fan.len() {
        return Err(Error::DimensionMismatch { expected: fan.len(), got: boundary_points.len() });
    }
    Ok(build_contour(boundary_points, fan))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStep {
    pub seed: Vec3,
    pub centroid: Vec3,
    pub shift: f64,
}

#[derive(Debug, Clone)]
pub struct IterationOutcome {
    pub result: SegmentationResult,
    pub trace: Vec<IterationStep>,
    /// False when `max_iters` ran out before the centroid settled.
    pub converged: bool,
}

/// Re-segments with the mask centroid as the next seed until the centroid
/// moves less than `eps` or `max_iters` runs are done.
pub fn iterate_seed(
    field: &ScalarField,
    template: &TemplateShape,
    seed0: Vec3,
    config: &SegmentConfig,
    max_iters: usize,
    eps: f64,
) -> Result<IterationOutcome> {
    if max_iters == 0 {
        return Err(Error::InvalidConfig("max_iters must be at least 1"));
    }
    let mut seed = seed0;
    let mut trace = Vec::new();
    loop {
        let result = segment(field, template, seed, config)?;
        let centroid = result.mask.centroid().ok_or(Error::EmptySegmentation)?;
        let shift = centroid.distance(seed);
        trace.push(IterationStep { seed, centroid, shift });
        let converged = shift < eps;
        if converged || trace.len() >= max_iters {
            return Ok(IterationOutcome { result, trace, converged });
        }
        seed = centroid;
    }
}
