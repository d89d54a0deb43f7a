//! Rasterization of closed contours and surfaces into binary masks.
//!
//! A voxel is set when its center is inside the shape: even-odd rule for
//! polygons, crossing parity along +x for meshes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::{Grid, Mask};
use crate::intersect::ray_triangle_intersect;
use crate::math::Vec3;
use crate::template::{check_watertight, Dim};

/// Reconstructed object boundary.
#[derive(Debug, Clone, PartialEq)]
pub enum Contour {
    /// Closed polygon; the last point connects back to the first.
    Polygon(Vec<Vec3>),
    Mesh { vertices: Vec<Vec3>, faces: Vec<[usize; 3]> },
}

impl Contour {
    pub fn points(&self) -> &[Vec3] {
        match self {
            Contour::Polygon(p) => p,
            Contour::Mesh { vertices, .. } => vertices,
        }
    }
}

pub fn voxelize(contour: &Contour, grid: &Grid) -> Result<Mask> {
    match contour {
        Contour::Polygon(p) => voxelize_polygon(p, grid),
        Contour::Mesh { vertices, faces } => voxelize_mesh(vertices, faces, grid),
    }
}

// Number of sorted crossings strictly greater than x.
fn crossings_beyond(sorted: &[f64], x: f64) -> usize {
    sorted.len() - sorted.partition_point(|&c| c <= x)
}

pub fn voxelize_polygon(poly: &[Vec3], grid: &Grid) -> Result<Mask> {
    if poly.len() < 3 {
        return Err(Error::OpenSurface("polygon needs at least 3 points"));
    }
    if grid.dim != Dim::Two {
        return Err(Error::InvalidConfig("polygon voxelization needs a 2D grid"));
    }
    let mut mask = Mask::empty(*grid);
    let [nx, ny, _] = grid.extents;
    let mut xs = Vec::new();
    for j in 0..ny {
        let y = j as f64 * grid.spacing[1];
        xs.clear();
        let mut prev = poly[poly.len() - 1];
        for &cur in poly {
            if (cur.y > y) != (prev.y > y) {
                xs.push(cur.x + (y - cur.y) * (prev.x - cur.x) / (prev.y - cur.y));
            }
            prev = cur;
        }
        if xs.is_empty() {
            continue;
        }
        xs.sort_by(f64::total_cmp);
        for i in 0..nx {
            let x = i as f64 * grid.spacing[0];
            if crossings_beyond(&xs, x) % 2 == 1 {
                mask.set(i, j, 0, true);
            }
        }
    }
    Ok(mask)
}

pub fn voxelize_mesh(vertices: &[Vec3], faces: &[[usize; 3]], grid: &Grid) -> Result<Mask> {
    if faces.is_empty() {
        return Err(Error::OpenSurface("mesh has no faces"));
    }
    if faces.iter().flatten().any(|&i| i >= vertices.len()) {
        return Err(Error::OpenSurface("face index out of range"));
    }
    check_watertight(faces).map_err(|_| Error::OpenSurface("mesh is not watertight"))?;
    if grid.dim != Dim::Three {
        return Err(Error::InvalidConfig("mesh voxelization needs a 3D grid"));
    }

    let [nx, ny, nz] = grid.extents;
    let [sx, sy, sz] = grid.spacing;
    // Scanlines are nudged off the lattice so they do not run through mesh
    // edges or vertices that sit exactly on voxel rows.
    let jy = 1.234_567_891e-7 * sy;
    let jz = 2.718_281_828e-7 * sz;
    let x0 = vertices.iter().map(|v| v.x).fold(0.0f64, f64::min) - sx;
    let dir = Vec3::new(1.0, 0.0, 0.0);

    struct Tri {
        v: [Vec3; 3],
        lo: Vec3,
        hi: Vec3,
    }
    let tris: Vec<Tri> = faces
        .iter()
        .map(|f| {
            let v = [vertices[f[0]], vertices[f[1]], vertices[f[2]]];
            let lo = Vec3::new(
                v[0].x.min(v[1].x).min(v[2].x),
                v[0].y.min(v[1].y).min(v[2].y),
                v[0].z.min(v[1].z).min(v[2].z),
            );
            let hi = Vec3::new(
                v[0].x.max(v[1].x).max(v[2].x),
                v[0].y.max(v[1].y).max(v[2].y),
                v[0].z.max(v[1].z).max(v[2].z),
            );
            Tri { v, lo, hi }
        })
        .collect();

    let mut mask = Mask::empty(*grid);
    let mut slab: Vec<&Tri> = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for k in 0..nz {
        let z = k as f64 * sz + jz;
        slab.clear();
        slab.extend(tris.iter().filter(|t| t.lo.z <= z && z <= t.hi.z));
        if slab.is_empty() {
            continue;
        }
        for j in 0..ny {
            let y = j as f64 * sy + jy;
            xs.clear();
            let origin = Vec3::new(x0, y, z);
            for t in slab.iter().filter(|t| t.lo.y <= y && y <= t.hi.y) {
                if t.hi.x < origin.x {
                    continue;
                }
                if let Some(h) = ray_triangle_intersect(origin, dir, t.v[0], t.v[1], t.v[2]) {
                    xs.push(origin.x + h.t);
                }
            }
            if xs.is_empty() {
                continue;
            }
            xs.sort_by(f64::total_cmp);
            for i in 0..nx {
                let x = i as f64 * sx;
                if crossings_beyond(&xs, x) % 2 == 1 {
                    mask.set(i, j, k, true);
                }
            }
        }
    }
    Ok(mask)
}
