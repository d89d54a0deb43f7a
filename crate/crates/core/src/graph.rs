//! Node lattice and arc families of the ray graph.
//!
//! Node `(r, p)` is the `p`-th sample on ray `r` and has id `r * P + p`;
//! the source and sink follow as ids `R * P` and `R * P + 1`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::maxflow::{Arc, Capacity, FlowNetwork};
use crate::rays::RayFan;

#[derive(Debug, Clone)]
pub struct RayGraph {
    pub rays: usize,
    pub nodes_per_ray: usize,
    pub delta: usize,
    pub scale_max: f64,
    /// World position of every node, indexed by node id.
    pub node_pos: Vec<Vec3>,
    pub arcs: Vec<Arc>,
}

impl RayGraph {
    /// Samples the nodes and emits the infinite intra- and inter-column arcs.
    /// Terminal arcs are added separately once node weights are known.
    pub fn new(fan: &RayFan, nodes_per_ray: usize, scale_max: f64, delta: usize) -> Result<Self> {
        if nodes_per_ray == 0 {
            return Err(Error::InvalidConfig("at least one node per ray is required"));
        }
        if !(scale_max > 0.0 && scale_max.is_finite()) {
            return Err(Error::InvalidConfig("scale_max must be positive"));
        }
        let node_pos = sample_nodes(fan, nodes_per_ray, scale_max);
        let mut arcs = build_intra_arcs(fan.len(), nodes_per_ray);
        arcs.extend(build_inter_arcs(fan, nodes_per_ray, delta));
        Ok(RayGraph {
            rays: fan.len(),
            nodes_per_ray,
            delta,
            scale_max,
            node_pos,
            arcs,
        })
    }

    #[inline]
    pub fn node_id(&self, ray: usize, p: usize) -> usize {
        ray * self.nodes_per_ray + p
    }

    pub fn inner_count(&self) -> usize {
        self.rays * self.nodes_per_ray
    }

    pub fn source(&self) -> usize {
        self.inner_count()
    }

    pub fn sink(&self) -> usize {
        self.inner_count() + 1
    }

    pub fn add_terminal_arcs(&mut self, weights: &NodeWeights) -> Result<()> {
        if weights.w.len() != self.inner_count() {
            return Err(Error::DimensionMismatch { expected: self.inner_count(), got: weights.w.len() });
        }
        let arcs = build_terminal_arcs(weights, self.source(), self.sink());
        self.arcs.extend(arcs);
        Ok(())
    }

    pub fn to_flow_network(&self) -> FlowNetwork {
        FlowNetwork {
            node_count: self.inner_count() + 2,
            source: self.source(),
            sink: self.sink(),
            arcs: self.arcs.clone(),
        }
    }
}

/// Distance of node `p` from the seed: `(p + 1) / P * scale_max * rho`.
#[inline]
pub fn node_distance(template_dist: f64, p: usize, nodes_per_ray: usize, scale_max: f64) -> f64 {
    (p + 1) as f64 / nodes_per_ray as f64 * scale_max * template_dist
}

pub fn sample_nodes(fan: &RayFan, nodes_per_ray: usize, scale_max: f64) -> Vec<Vec3> {
    let mut out = Vec::with_capacity(fan.len() * nodes_per_ray);
    for (dir, &rho) in fan.directions.iter().zip(&fan.template_dist) {
        for p in 0..nodes_per_ray {
            out.push(fan.seed + *dir * node_distance(rho, p, nodes_per_ray, scale_max));
        }
    }
    out
}

/// `(r, p) -> (r, p - 1)` for `p >= 1`, all infinite.
pub fn build_intra_arcs(rays: usize, nodes_per_ray: usize) -> Vec<Arc> {
    let mut out = Vec::with_capacity(rays * nodes_per_ray.saturating_sub(1));
    for r in 0..rays {
        let base = r * nodes_per_ray;
        for p in 1..nodes_per_ray {
            out.push(Arc::infinite(base + p, base + p - 1));
        }
    }
    out
}

/// `(r, p) -> (n, max(0, p - delta))` for every neighbour ray `n`, all infinite.
pub fn build_inter_arcs(fan: &RayFan, nodes_per_ray: usize, delta: usize) -> Vec<Arc> {
    let mut out = Vec::new();
    for (r, nbrs) in fan.neighbors.iter().enumerate() {
        for &n in nbrs {
            for p in 0..nodes_per_ray {
                let q = p.saturating_sub(delta);
                out.push(Arc::infinite(r * nodes_per_ray + p, n * nodes_per_ray + q));
            }
        }
    }
    out
}

/// Signed terminal weights: `w(r,0) = c(r,0)` and `w(r,p) = c(r,p) - c(r,p-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeWeights {
    pub nodes_per_ray: usize,
    pub w: Vec<f64>,
}

impl NodeWeights {
    /// `costs` is laid out by node id (ray-major).
    pub fn from_costs(costs: &[f64], nodes_per_ray: usize) -> Result<Self> {
        if nodes_per_ray == 0 || !costs.len().is_multiple_of(nodes_per_ray) {
            return Err(Error::DimensionMismatch {
                expected: nodes_per_ray.max(1),
                got: costs.len(),
            });
        }
        let mut w = Vec::with_capacity(costs.len());
        for column in costs.chunks(nodes_per_ray) {
            w.push(column[0]);
            for p in 1..column.len() {
                w.push(column[p] - column[p - 1]);
            }
        }
        Ok(NodeWeights { nodes_per_ray, w })
    }

    /// Lowers the weight of node `(0, 0)` by `sum_r c(r, 0) + 1`.
    ///
    /// Base nodes of all rays are joined by infinite arcs in both directions,
    /// so every nonempty closed set contains the whole base layer and pays the
    /// same offset; the empty set no longer ties with the optimum. Returns the
    /// offset so closed-set costs can be recovered.
    pub fn anchor_base_layer(&mut self) -> f64 {
        let base: f64 = self.w.iter().step_by(self.nodes_per_ray).sum();
        let offset = base.max(0.0) + 1.0;
        self.w[0] -= offset;
        offset
    }

    /// Total absolute weight of the negative (source-tied) nodes.
    pub fn negative_total(&self) -> f64 {
        self.w.iter().filter(|&&w| w < 0.0).map(|w| -w).sum()
    }
}

/// Negative weight `w` becomes `source -> n` with capacity `-w`; nonnegative
/// weight becomes `n -> sink` with capacity `w`.
pub fn build_terminal_arcs(weights: &NodeWeights, source: usize, sink: usize) -> Vec<Arc> {
    weights
        .w
        .iter()
        .enumerate()
        .map(|(n, &w)| {
            if w < 0.0 {
                Arc { from: source, to: n, cap: Capacity::Finite(-w) }
            } else {
                Arc { from: n, to: sink, cap: Capacity::Finite(w) }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Rotation;
    use crate::rays::{cast_rays, RaySampling};
    use crate::template::TemplateShape;
    use alloc::vec;

    fn circle_fan(rays: usize) -> RayFan {
        cast_rays(&TemplateShape::circle(720), Vec3::ZERO, RaySampling::Planar(rays), &Rotation::IDENTITY).unwrap()
    }

    // A fan with unit distances and arbitrary ray count, including R < 8.
    fn unit_fan(rays: usize) -> RayFan {
        let mut fan = circle_fan(8);
        fan.directions.truncate(rays);
        fan.template_dist = vec![1.0; rays];
        fan.neighbors = (0..rays)
            .map(|i| {
                let mut n = vec![(i + rays - 1) % rays, (i + 1) % rays];
                n.sort_unstable();
                n.dedup();
                n
            })
            .collect();
        fan
    }

    #[test]
    fn node_distances_on_unit_rays() {
        let fan = unit_fan(4);
        let pos = sample_nodes(&fan, 4, 2.0);
        for r in 0..4 {
            let d: Vec<f64> = (0..4).map(|p| pos[r * 4 + p].norm()).collect();
            for (got, want) in d.iter().zip([0.5, 1.0, 1.5, 2.0]) {
                assert!((got - want).abs() < 1e-12);
            }
        }
        let single = sample_nodes(&fan, 1, 1.0);
        assert!((single[0].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn square_axis_rays_are_denser() {
        let fan = cast_rays(&TemplateShape::square(), Vec3::ZERO, RaySampling::Planar(8), &Rotation::IDENTITY).unwrap();
        let pos = sample_nodes(&fan, 10, 2.0);
        let axis = pos[1].norm() - pos[0].norm();
        let diag = pos[11].norm() - pos[10].norm();
        assert!((axis / diag - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn intra_arc_enumeration() {
        let arcs = build_intra_arcs(2, 3);
        let pairs: Vec<(usize, usize)> = arcs.iter().map(|a| (a.from, a.to)).collect();
        assert_eq!(pairs, vec![(1, 0), (2, 1), (4, 3), (5, 4)]);
        assert!(arcs.iter().all(|a| a.cap.is_infinite()));
        assert!(build_intra_arcs(5, 1).is_empty());
        assert_eq!(build_intra_arcs(360, 200).len(), 71_640);
    }

    #[test]
    fn inter_arcs_delta_zero_link_equal_indices() {
        let fan = unit_fan(8);
        let arcs = build_inter_arcs(&fan, 3, 0);
        for a in &arcs {
            assert_eq!(a.from % 3, a.to % 3);
            // the reverse arc exists too
            assert!(arcs.iter().any(|b| b.from == a.to && b.to == a.from));
        }
    }

    #[test]
    fn inter_arcs_clamp_at_base() {
        let fan = unit_fan(8);
        let arcs = build_inter_arcs(&fan, 3, 2);
        // node (0,1) -> neighbour 1 lands on index max(0, 1 - 2) = 0
        assert!(arcs.iter().any(|a| a.from == 1 && a.to == 3));
    }

    #[test]
    fn inter_arc_count_r4_p2() {
        let fan = unit_fan(4);
        assert_eq!(build_inter_arcs(&fan, 2, 1).len(), 16);
    }

    #[test]
    fn terminal_sign_rule() {
        let w = NodeWeights { nodes_per_ray: 3, w: vec![-5.0, 0.0, 2.0] };
        let arcs = build_terminal_arcs(&w, 3, 4);
        assert_eq!(arcs[0], Arc::finite(3, 0, 5.0));
        assert_eq!(arcs[1], Arc::finite(1, 4, 0.0));
        assert_eq!(arcs[2], Arc::finite(2, 4, 2.0));
    }

    #[test]
    fn constant_costs_only_base_carries_weight() {
        let w = NodeWeights::from_costs(&[3.0; 12], 4).unwrap();
        for (i, &x) in w.w.iter().enumerate() {
            assert_eq!(x, if i % 4 == 0 { 3.0 } else { 0.0 });
        }
    }

    #[test]
    fn weights_telescope_to_costs() {
        let costs: Vec<f64> = (0..20).map(|i| ((i * 37 % 11) as f64) * 0.7).collect();
        let w = NodeWeights::from_costs(&costs, 5).unwrap();
        for r in 0..4 {
            for b in 0..5 {
                let sum: f64 = w.w[r * 5..=r * 5 + b].iter().sum();
                assert!((sum - costs[r * 5 + b]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn arc_counts_match_formula() {
        let fan = circle_fan(36);
        let mut g = RayGraph::new(&fan, 7, 2.0, 1).unwrap();
        let costs = vec![1.0; 36 * 7];
        g.add_terminal_arcs(&NodeWeights::from_costs(&costs, 7).unwrap()).unwrap();
        let intra = 36 * 6;
        let inter = 2 * fan.neighbor_pairs().len() * 7;
        let terminal = 36 * 7;
        assert_eq!(g.arcs.len(), intra + inter + terminal);
        let finite_inner = g
            .arcs
            .iter()
            .filter(|a| !a.cap.is_infinite() && a.from < g.inner_count() && a.to < g.inner_count())
            .count();
        assert_eq!(finite_inner, 0);
        // exactly one terminal arc per node
        let mut seen = vec![0usize; g.inner_count()];
        for a in g.arcs.iter().filter(|a| a.from == g.source() || a.to == g.sink()) {
            seen[if a.from == g.source() { a.to } else { a.from }] += 1;
        }
        assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn anchor_offsets_base_node() {
        let mut w = NodeWeights::from_costs(&[2.0, 1.0, 3.0, 0.0], 2).unwrap();
        let k = w.anchor_base_layer();
        assert_eq!(k, 6.0);
        assert_eq!(w.w, vec![-4.0, -1.0, 3.0, -3.0]);
    }
}
