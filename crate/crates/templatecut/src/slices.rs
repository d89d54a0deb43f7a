//! Axis-aligned slices: windowed 8-bit renderings and mask outlines.

use std::collections::BTreeMap;

use templatecut_core::{Dim, Mask, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            _ => None,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// In-slice axes (u, v).
    fn plane(self) -> (usize, usize) {
        match self {
            Axis::X => (1, 2),
            Axis::Y => (0, 2),
            Axis::Z => (0, 1),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SliceError {
    #[error("IndexOutOfRange: axis {axis} has {len} slices, got {index}")]
    IndexOutOfRange { axis: &'static str, index: usize, len: usize },
    #[error("AxisUnavailable: 2D data only has axis z")]
    AxisUnavailable,
    #[error("WindowDegenerate: window needs lo < hi")]
    WindowDegenerate,
}

fn check(extents: [usize; 3], dim: Dim, axis: Axis, index: usize) -> Result<(usize, usize), SliceError> {
    if dim == Dim::Two && axis != Axis::Z {
        return Err(SliceError::AxisUnavailable);
    }
    let len = extents[axis.index()];
    if index >= len {
        return Err(SliceError::IndexOutOfRange { axis: axis.token(), index, len });
    }
    let (u, v) = axis.plane();
    Ok((extents[u], extents[v]))
}

fn voxel(axis: Axis, index: usize, u: usize, v: usize) -> (usize, usize, usize) {
    match axis {
        Axis::X => (index, u, v),
        Axis::Y => (u, index, v),
        Axis::Z => (u, v, index),
    }
}

/// Linear window `[lo, hi] -> [0, 255]`, rounding halves up, as a P5 image
/// with `u` across and `v` down.
pub fn render_slice(field: &ScalarField, axis: Axis, index: usize, lo: f64, hi: f64) -> Result<Vec<u8>, SliceError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(SliceError::WindowDegenerate);
    }
    let (nu, nv) = check(field.grid.extents, field.grid.dim, axis, index)?;
    let mut out = format!("P5\n{nu} {nv}\n255\n").into_bytes();
    for v in 0..nv {
        for u in 0..nu {
            let (i, j, k) = voxel(axis, index, u, v);
            out.push(window_value(field.at(i, j, k), lo, hi));
        }
    }
    Ok(out)
}

pub fn window_value(x: f64, lo: f64, hi: f64) -> u8 {
    (255.0 * (x - lo) / (hi - lo) + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Outlines of the mask in one slice, in slice voxel coordinates `(u, v)`.
///
/// Marching squares over voxel centers; crossings sit at edge midpoints.
/// Every polyline is closed and repeats its first point at the end.
/// Diagonal-only contacts are treated as separate pieces.
pub fn mask_outline(mask: &Mask, axis: Axis, index: usize) -> Result<Vec<Vec<[f64; 2]>>, SliceError> {
    let (nu, nv) = check(mask.grid.extents, mask.grid.dim, axis, index)?;
    // padded lookup so outlines close at the border
    let at = |u: isize, v: isize| -> bool {
        if u < 0 || v < 0 || u >= nu as isize || v >= nv as isize {
            return false;
        }
        let (i, j, k) = voxel(axis, index, u as usize, v as usize);
        mask.get(i, j, k)
    };
    // Edge keys in doubled coordinates: horizontal edge (u,v)-(u+1,v) is
    // (2u+1, 2v), vertical edge (u,v)-(u,v+1) is (2u, 2v+1).
    let mut adj: BTreeMap<(isize, isize), Vec<(isize, isize)>> = BTreeMap::new();
    let mut link = |a: (isize, isize), b: (isize, isize)| {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    };
    for v in -1..nv as isize {
        for u in -1..nu as isize {
            let (a, b, c, d) = (at(u, v), at(u + 1, v), at(u + 1, v + 1), at(u, v + 1));
            let bottom = (2 * u + 1, 2 * v);
            let right = (2 * u + 2, 2 * v + 1);
            let top = (2 * u + 1, 2 * v + 2);
            let left = (2 * u, 2 * v + 1);
            let mut crossings = Vec::with_capacity(4);
            if a != b {
                crossings.push(bottom);
            }
            if b != c {
                crossings.push(right);
            }
            if c != d {
                crossings.push(top);
            }
            if d != a {
                crossings.push(left);
            }
            match crossings.len() {
                0 => {}
                2 => link(crossings[0], crossings[1]),
                _ => {
                    if a {
                        link(bottom, left);
                        link(top, right);
                    } else {
                        link(bottom, right);
                        link(top, left);
                    }
                }
            }
        }
    }
    let mut lines = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let point = |k: (isize, isize)| [k.0 as f64 / 2.0, k.1 as f64 / 2.0];
    for &start in adj.keys() {
        if seen.contains(&start) {
            continue;
        }
        let mut line = vec![point(start)];
        seen.insert(start);
        let mut prev = start;
        let mut cur = adj[&start][0];
        while cur != start {
            seen.insert(cur);
            line.push(point(cur));
            let next = adj[&cur].iter().copied().find(|&n| n != prev).unwrap_or(prev);
            prev = cur;
            cur = next;
        }
        line.push(point(start));
        lines.push(line);
    }
    Ok(lines)
}
