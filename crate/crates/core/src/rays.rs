//! Ray fans cast from the seed through the template boundary.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::icosphere::Icosphere;
use crate::intersect::{ray_segment_intersect, ray_triangle_intersect};
use crate::math::{cos, sin, Rotation, Vec3};
use crate::template::{Dim, TemplateShape};

/// How ray directions are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaySampling {
    /// `count` uniform angles starting at +x, counterclockwise.
    Planar(usize),
    /// Vertex directions of an icosphere of the given subdivision level.
    Icosphere(u32),
}

impl RaySampling {
    pub fn ray_count(&self) -> usize {
        match *self {
            RaySampling::Planar(n) => n,
            RaySampling::Icosphere(level) => Icosphere::vertex_count_for_level(level),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RayFan {
    pub dim: Dim,
    pub seed: Vec3,
    /// Unit directions in world space.
    pub directions: Vec<Vec3>,
    /// Distance from the seed to the template boundary along each ray,
    /// in world units (the template is sized by `scale`).
    pub template_dist: Vec<f64>,
    /// World size of the unit template.
    pub scale: f64,
    /// Symmetric ray adjacency, sorted per ray.
    pub neighbors: Vec<Vec<usize>>,
    /// Icosphere faces over ray indices (3D only).
    pub faces: Vec<[usize; 3]>,
    /// Rays that crossed the template boundary more than once; the first hit is used.
    pub multi_hit_rays: usize,
}

impl RayFan {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Resize the template to `scale` world units per template unit.
    pub fn with_scale(mut self, scale: f64) -> Self {
        let k = scale / self.scale;
        for d in &mut self.template_dist {
            *d *= k;
        }
        self.scale = scale;
        self
    }

    /// Boundary distances of the unit-size template.
    pub fn unit_template_dist(&self) -> impl Iterator<Item = f64> + '_ {
        self.template_dist.iter().map(move |d| d / self.scale)
    }

    /// Undirected neighbour pairs `(a, b)` with `a < b`.
    pub fn neighbor_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, ns) in self.neighbors.iter().enumerate() {
            for &b in ns {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

/// First boundary crossing of a ray from the template origin, plus the number
/// of distinct crossings.
pub fn ray_template_distance(template: &TemplateShape, dir: Vec3) -> Option<(f64, usize)> {
    let mut hits: Vec<f64> = Vec::new();
    match template.dim {
        Dim::Two => {
            let v = &template.vertices;
            for i in 0..v.len() {
                if let Some(t) = ray_segment_intersect(Vec3::ZERO, dir, v[i], v[(i + 1) % v.len()]) {
                    hits.push(t);
                }
            }
        }
        Dim::Three => {
            let v = &template.vertices;
            for f in &template.faces {
                if let Some(h) = ray_triangle_intersect(Vec3::ZERO, dir, v[f[0]], v[f[1]], v[f[2]]) {
                    hits.push(h.t);
                }
            }
        }
    }
    if hits.is_empty() {
        return None;
    }
    hits.sort_by(f64::total_cmp);
    // Shared vertices and edges report the same crossing more than once.
    let mut distinct = 1;
    for w in hits.windows(2) {
        if w[1] - w[0] > 1e-9 {
            distinct += 1;
        }
    }
    Some((hits[0], distinct))
}

/// Cast rays from `seed` through `template` (unit size, centroid at the seed).
/// `orientation` turns the template and the ray set together.
pub fn cast_rays(
    template: &TemplateShape,
    seed: Vec3,
    sampling: RaySampling,
    orientation: &Rotation,
) -> Result<RayFan> {
    let (directions, neighbors, faces) = match (template.dim, sampling) {
        (Dim::Two, RaySampling::Planar(count)) => {
            if count < 8 {
                return Err(Error::InvalidConfig("at least 8 rays are required in 2D"));
            }
            if !orientation.is_planar() {
                return Err(Error::InvalidConfig("2D orientation must rotate within the plane"));
            }
            let dirs: Vec<Vec3> = (0..count)
                .map(|i| {
                    let a = 2.0 * PI * i as f64 / count as f64;
                    Vec3::xy(cos(a), sin(a))
                })
                .collect();
            let nbrs: Vec<Vec<usize>> = (0..count)
                .map(|i| {
                    let mut n = alloc::vec![(i + count - 1) % count, (i + 1) % count];
                    n.sort_unstable();
                    n
                })
                .collect();
            (dirs, nbrs, Vec::new())
        }
        (Dim::Three, RaySampling::Icosphere(level)) => {
            let ico = Icosphere::new(level);
            let nbrs = ico.neighbors();
            (ico.vertices, nbrs, ico.faces)
        }
        _ => return Err(Error::InvalidConfig("ray sampling does not match template dimension")),
    };

    if !template.contains(Vec3::ZERO) {
        return Err(Error::InvalidSeed("template centroid is not inside the template"));
    }

    let mut template_dist = Vec::with_capacity(directions.len());
    let mut multi_hit_rays = 0;
    for (r, &d) in directions.iter().enumerate() {
        let (t, hits) = ray_template_distance(template, d).ok_or(Error::NoIntersection(r))?;
        if !(t > 0.0) {
            return Err(Error::InvalidSeed("seed lies on the template boundary"));
        }
        if hits > 1 {
            multi_hit_rays += 1;
        }
        template_dist.push(t);
    }

    // Template and rays turn together, so distances are orientation-free.
    let directions = directions.iter().map(|&d| orientation.apply(d)).collect();
    Ok(RayFan {
        dim: template.dim,
        seed,
        directions,
        template_dist,
        scale: 1.0,
        neighbors,
        faces,
        multi_hit_rays,
    })
}
