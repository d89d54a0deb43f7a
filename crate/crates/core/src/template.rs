//! Template shapes: loading, normalization and built-in priors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::icosphere::{mesh_edges, Icosphere};
use crate::intersect::ray_triangle_intersect;
use crate::math::{cos, sin, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }
}

/// A closed polygon (2D) or closed triangle mesh (3D), normalized so the
/// vertex centroid sits at the origin and the farthest vertex at radius 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateShape {
    pub dim: Dim,
    pub vertices: Vec<Vec3>,
    /// Empty for 2D templates.
    pub faces: Vec<[usize; 3]>,
    /// Centroid of the raw input, before normalization.
    pub raw_centroid: Vec3,
    /// Farthest vertex distance of the raw input (the applied scale is its inverse).
    pub raw_max_radius: f64,
}

impl TemplateShape {
    pub fn centroid(&self) -> Vec3 {
        vertex_mean(&self.vertices)
    }

    pub fn max_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Closing edges of a 2D template, or the unique edges of a 3D mesh.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        match self.dim {
            Dim::Two => close_contour_unchecked(self.vertices.len()),
            Dim::Three => mesh_edges(&self.faces),
        }
    }

    /// Even-odd containment test in template coordinates.
    pub fn contains(&self, p: Vec3) -> bool {
        match self.dim {
            Dim::Two => polygon_contains(&self.vertices, p),
            Dim::Three => mesh_contains(&self.vertices, &self.faces, p),
        }
    }

    /// Regular `n`-gon on the unit circle, clockwise from +x.
    pub fn circle(n: usize) -> Self {
        Self::ellipse(n, 1.0, 1.0)
    }

    /// Clockwise ellipse polygon with semi-axes `a` (x) and `b` (y).
    pub fn ellipse(n: usize, a: f64, b: f64) -> Self {
        let pts: Vec<Vec3> = (0..n)
            .map(|i| {
                let t = -2.0 * PI * i as f64 / n as f64;
                Vec3::xy(a * cos(t), b * sin(t))
            })
            .collect();
        normalize_template(Dim::Two, &pts, &[]).expect("ellipse is a valid template")
    }

    /// Axis-aligned square given by its four corners, clockwise.
    pub fn square() -> Self {
        let pts = [
            Vec3::xy(1.0, 1.0),
            Vec3::xy(1.0, -1.0),
            Vec3::xy(-1.0, -1.0),
            Vec3::xy(-1.0, 1.0),
        ];
        normalize_template(Dim::Two, &pts, &[]).expect("square is a valid template")
    }

    /// Star polygon with `arms` tips at radius 1 and notches at `inner`.
    pub fn star(arms: usize, inner: f64) -> Self {
        normalize_template(Dim::Two, &star_polygon(arms, inner), &[]).expect("star is a valid template")
    }

    pub fn icosphere(level: u32) -> Self {
        let s = Icosphere::new(level);
        normalize_template(Dim::Three, &s.vertices, &s.faces).expect("icosphere is a valid template")
    }
}

/// Clockwise star polygon with tips at radius 1 (first tip on +x).
pub fn star_polygon(arms: usize, inner: f64) -> Vec<Vec3> {
    (0..2 * arms)
        .map(|i| {
            let t = -PI * i as f64 / arms as f64;
            let r = if i % 2 == 0 { 1.0 } else { inner };
            Vec3::xy(r * cos(t), r * sin(t))
        })
        .collect()
}

fn vertex_mean(vs: &[Vec3]) -> Vec3 {
    let mut c = Vec3::ZERO;
    for &v in vs {
        c += v;
    }
    c / vs.len() as f64
}

/// Center the vertices on their mean and scale so the farthest vertex sits at
/// radius 1. Vertex order and face indices are preserved.
pub fn normalize_template(dim: Dim, raw_vertices: &[Vec3], raw_faces: &[[usize; 3]]) -> Result<TemplateShape> {
    let n = raw_vertices.len();
    match dim {
        Dim::Two if n < 3 => return Err(Error::TooFewPoints { needed: 3, got: n }),
        Dim::Three if n < 4 => return Err(Error::TooFewPoints { needed: 4, got: n }),
        _ => {}
    }
    if raw_vertices.iter().any(|v| !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite())) {
        return Err(Error::DegenerateTemplate("non-finite coordinate"));
    }
    let verts: Vec<Vec3> = match dim {
        Dim::Two => raw_vertices.iter().map(|v| Vec3::xy(v.x, v.y)).collect(),
        Dim::Three => raw_vertices.to_vec(),
    };
    let centroid = vertex_mean(&verts);
    let centered: Vec<Vec3> = verts.iter().map(|&v| v - centroid).collect();
    let radius = centered.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(radius > 0.0) {
        return Err(Error::DegenerateTemplate("zero extent"));
    }
    let unit: Vec<Vec3> = centered.iter().map(|&v| v / radius).collect();
    match dim {
        Dim::Two => {
            if spans_plane(&unit) < 1e-12 {
                return Err(Error::DegenerateTemplate("all points collinear"));
            }
        }
        Dim::Three => {
            if raw_faces.is_empty() {
                return Err(Error::DegenerateTemplate("3D template without faces"));
            }
            if raw_faces.iter().flatten().any(|&i| i >= n) {
                return Err(Error::DegenerateTemplate("face index out of range"));
            }
            if spans_volume(&unit) < 1e-12 {
                return Err(Error::DegenerateTemplate("all points coplanar"));
            }
            check_watertight(raw_faces)?;
        }
    }
    Ok(TemplateShape {
        dim,
        vertices: unit,
        faces: if dim == Dim::Three { raw_faces.to_vec() } else { Vec::new() },
        raw_centroid: centroid,
        raw_max_radius: radius,
    })
}

// Largest |cross| relative to the farthest point from the first vertex.
fn spans_plane(pts: &[Vec3]) -> f64 {
    let a = pts[0];
    let far = pts.iter().copied().fold(a, |m, p| if (p - a).norm() > (m - a).norm() { p } else { m });
    let axis = far - a;
    pts.iter().map(|&p| axis.perp_dot(p - a).abs()).fold(0.0, f64::max)
}

fn spans_volume(pts: &[Vec3]) -> f64 {
    let a = pts[0];
    let b = pts.iter().copied().fold(a, |m, p| if (p - a).norm() > (m - a).norm() { p } else { m });
    let ab = b - a;
    let c = pts
        .iter()
        .copied()
        .fold(a, |m, p| if ab.cross(p - a).norm() > ab.cross(m - a).norm() { p } else { m });
    let n = ab.cross(c - a);
    pts.iter().map(|&p| n.dot(p - a).abs()).fold(0.0, f64::max)
}

/// Every undirected edge must be shared by exactly two faces.
pub fn check_watertight(faces: &[[usize; 3]]) -> Result<()> {
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    edges.sort_unstable();
    let mut i = 0;
    while i < edges.len() {
        let mut j = i;
        while j < edges.len() && edges[j] == edges[i] {
            j += 1;
        }
        if j - i != 2 {
            return Err(Error::NonWatertightMesh(edges[i].0, edges[i].1, j - i));
        }
        i = j;
    }
    Ok(())
}

/// Closing edge list for an ordered contour: edge `i` joins `i` and `(i+1) mod n`.
pub fn close_contour(points: &[Vec3]) -> Result<Vec<(usize, usize)>> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: points.len() });
    }
    Ok(close_contour_unchecked(points.len()))
}

fn close_contour_unchecked(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Even-odd point-in-polygon on the xy-plane.
pub fn polygon_contains(poly: &[Vec3], p: Vec3) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Parity of crossings along a slightly tilted +x ray.
pub fn mesh_contains(vertices: &[Vec3], faces: &[[usize; 3]], p: Vec3) -> bool {
    // Irrational tilt keeps the ray off mesh edges and vertices in practice.
    let dir = Vec3::new(1.0, 1.234_567_891e-7, 2.718_281_828e-7).normalized();
    let mut crossings = 0usize;
    for f in faces {
        if ray_triangle_intersect(p, dir, vertices[f[0]], vertices[f[1]], vertices[f[2]]).is_some() {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}
