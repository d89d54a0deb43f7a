//! Images, volumes and binary masks on a regular grid.
//!
//! Voxel `(i, j, k)` has its center at world position
//! `(i * sx, j * sy, k * sz)`. A 2D grid is a volume with one slice.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, round, Vec3};
use crate::template::Dim;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: Dim,
    pub extents: [usize; 3],
    pub spacing: [f64; 3],
}

impl Grid {
    pub fn new(dim: Dim, extents: [usize; 3], spacing: [f64; 3]) -> Result<Self> {
        if extents.contains(&0) {
            return Err(Error::InvalidConfig("grid extents must be at least 1"));
        }
        if spacing.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidConfig("grid spacing must be positive"));
        }
        if dim == Dim::Two && extents[2] != 1 {
            return Err(Error::InvalidConfig("2D grids have a single slice"));
        }
        Ok(Grid { dim, extents, spacing })
    }

    pub fn planar(nx: usize, ny: usize) -> Self {
        Grid::new(Dim::Two, [nx, ny, 1], [1.0; 3]).expect("valid planar grid")
    }

    pub fn cubic(nx: usize, ny: usize, nz: usize) -> Self {
        Grid::new(Dim::Three, [nx, ny, nz], [1.0; 3]).expect("valid volume grid")
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.extents[0] * (j + self.extents[1] * k)
    }

    #[inline]
    pub fn voxel_center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            i as f64 * self.spacing[0],
            j as f64 * self.spacing[1],
            k as f64 * self.spacing[2],
        )
    }

    pub fn voxel_volume(&self) -> f64 {
        match self.dim {
            Dim::Two => self.spacing[0] * self.spacing[1],
            Dim::Three => self.spacing.iter().product(),
        }
    }

    pub fn min_spacing(&self) -> f64 {
        let axes = self.dim.as_usize();
        self.spacing[..axes].iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Smallest world extent over the active axes, measured between edge voxel centers
    /// plus one voxel.
    pub fn min_world_extent(&self) -> f64 {
        let axes = self.dim.as_usize();
        (0..axes)
            .map(|a| self.extents[a] as f64 * self.spacing[a])
            .fold(f64::INFINITY, f64::min)
    }

    /// True when `p` lies within the box spanned by the edge voxel centers.
    pub fn contains_world(&self, p: Vec3) -> bool {
        let axes = self.dim.as_usize();
        for a in 0..axes {
            let hi = (self.extents[a] - 1) as f64 * self.spacing[a];
            if !(p[a] >= 0.0 && p[a] <= hi) {
                return false;
            }
        }
        self.dim == Dim::Three || p.z == 0.0
    }

    pub fn congruent(&self, other: &Grid) -> bool {
        self.dim == other.dim && self.extents == other.extents && self.spacing == other.spacing
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // Exact when a == b, so uniform regions sample without rounding noise.
    a + t * (b - a)
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidConfig("value count does not match grid size"));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn filled(grid: Grid, value: f64) -> Self {
        ScalarField { values: alloc::vec![value; grid.len()], grid }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    // Clamped continuous index along one axis: base voxel and fraction.
    #[inline]
    fn axis(&self, p: f64, a: usize) -> (usize, usize, f64) {
        let n = self.grid.extents[a];
        if n == 1 {
            return (0, 0, 0.0);
        }
        let mut c = (p / self.grid.spacing[a]).clamp(0.0, (n - 1) as f64);
        // Division by the spacing can miss a voxel center by an ulp.
        let nearest = round(c);
        if (c - nearest).abs() < 1e-9 {
            c = nearest;
        }
        let i0 = (floor(c) as usize).min(n - 1);
        (i0, (i0 + 1).min(n - 1), c - i0 as f64)
    }

    /// Bilinear (2D) or trilinear (3D) interpolation; points outside the
    /// grid take the value of the nearest edge voxel.
    pub fn sample(&self, p: Vec3) -> f64 {
        let (x0, x1, tx) = self.axis(p.x, 0);
        let (y0, y1, ty) = self.axis(p.y, 1);
        let plane = |k: usize| {
            let a = lerp(self.at(x0, y0, k), self.at(x1, y0, k), tx);
            let b = lerp(self.at(x0, y1, k), self.at(x1, y1, k), tx);
            lerp(a, b, ty)
        };
        match self.grid.dim {
            Dim::Two => plane(0),
            Dim::Three => {
                let (z0, z1, tz) = self.axis(p.z, 2);
                lerp(plane(z0), plane(z1), tz)
            }
        }
    }

    pub fn shifted(&self, offset: f64) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v + offset).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub grid: Grid,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(grid: Grid) -> Self {
        Mask { bits: alloc::vec![false; grid.len()], grid }
    }

    pub fn new(grid: Grid, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != grid.len() {
            return Err(Error::InvalidConfig("mask size does not match grid size"));
        }
        Ok(Mask { grid, bits })
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> bool {
        self.bits[self.grid.index(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: bool) {
        let idx = self.grid.index(i, j, k);
        self.bits[idx] = v;
    }

    /// Mean world position of the set voxels.
    pub fn centroid(&self) -> Option<Vec3> {
        let [nx, ny, nz] = self.grid.extents;
        let mut sum = [0.0f64; 3];
        let mut n = 0u64;
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    if self.get(i, j, k) {
                        sum[0] += i as f64;
                        sum[1] += j as f64;
                        sum[2] += k as f64;
                        n += 1;
                    }
                }
            }
        }
        if n == 0 {
            return None;
        }
        let s = self.grid.spacing;
        Some(Vec3::new(
            sum[0] / n as f64 * s[0],
            sum[1] / n as f64 * s[1],
            sum[2] / n as f64 * s[2],
        ))
    }
}
