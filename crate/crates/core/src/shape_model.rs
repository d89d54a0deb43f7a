//! Statistical shape model over corresponding landmarks.
//!
//! Training shapes are aligned by generalized Procrustes analysis, then PCA
//! gives a mean shape and principal modes. A shape instance is
//! `s = mean + modes * b`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::math::{atan2, ceil, sqrt, Rotation, Vec3};
use crate::rays::RayFan;
use crate::template::Dim;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeModel {
    pub dim: Dim,
    pub landmarks: usize,
    /// Flattened mean shape, `dim` coordinates per landmark.
    pub mean: Vec<f64>,
    /// Orthonormal modes, each of length `landmarks * dim`.
    pub modes: Vec<Vec<f64>>,
    /// Variance along each mode, descending.
    pub eigenvalues: Vec<f64>,
}

pub fn flatten(shape: &[Vec3], dim: Dim) -> Vec<f64> {
    let d = dim.as_usize();
    shape.iter().flat_map(|p| (0..d).map(move |a| p[a])).collect()
}

pub fn unflatten(v: &[f64], dim: Dim) -> Vec<Vec3> {
    match dim {
        Dim::Two => v.chunks(2).map(|c| Vec3::xy(c[0], c[1])).collect(),
        Dim::Three => v.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
    }
}

fn centroid(s: &[Vec3]) -> Vec3 {
    let mut c = Vec3::ZERO;
    for &p in s {
        c += p;
    }
    c / s.len() as f64
}

fn rms_radius(s: &[Vec3]) -> f64 {
    sqrt(s.iter().map(|p| p.norm_squared()).sum::<f64>() / s.len() as f64)
}

fn normalize(s: &[Vec3], index: usize) -> Result<Vec<Vec3>> {
    let c = centroid(s);
    let centered: Vec<Vec3> = s.iter().map(|&p| p - c).collect();
    let r = rms_radius(&centered);
    if !(r > 1e-300) {
        return Err(Error::DegenerateShape(index));
    }
    Ok(centered.iter().map(|&p| p / r).collect())
}

/// Rotation minimizing `sum |R x_i - y_i|^2` over proper rotations.
fn optimal_rotation(x: &[Vec3], y: &[Vec3], dim: Dim) -> Rotation {
    match dim {
        Dim::Two => {
            let (mut cross, mut dot) = (0.0, 0.0);
            for (a, b) in x.iter().zip(y) {
                cross += a.perp_dot(*b);
                dot += a.x * b.x + a.y * b.y;
            }
            Rotation::planar(atan2(cross, dot))
        }
        Dim::Three => {
            // Unit quaternion maximizing q^T N q (closed-form absolute orientation).
            let mut s = [[0.0f64; 3]; 3];
            for (a, b) in x.iter().zip(y) {
                for i in 0..3 {
                    for j in 0..3 {
                        s[i][j] += a[i] * b[j];
                    }
                }
            }
            let (sxx, sxy, sxz) = (s[0][0], s[0][1], s[0][2]);
            let (syx, syy, syz) = (s[1][0], s[1][1], s[1][2]);
            let (szx, szy, szz) = (s[2][0], s[2][1], s[2][2]);
            let n = [
                sxx + syy + szz, syz - szy, szx - sxz, sxy - syx,
                syz - szy, sxx - syy - szz, sxy + syx, szx + sxz,
                szx - sxz, sxy + syx, -sxx + syy - szz, syz + szy,
                sxy - syx, szx + sxz, syz + szy, -sxx - syy + szz,
            ];
            let (_, vecs) = symmetric_eigen(&n, 4);
            let q = &vecs[0];
            let (w, qx, qy, qz) = (q[0], q[1], q[2], q[3]);
            Rotation {
                m: [
                    [w * w + qx * qx - qy * qy - qz * qz, 2.0 * (qx * qy - w * qz), 2.0 * (qx * qz + w * qy)],
                    [2.0 * (qy * qx + w * qz), w * w - qx * qx + qy * qy - qz * qz, 2.0 * (qy * qz - w * qx)],
                    [2.0 * (qz * qx - w * qy), 2.0 * (qz * qy + w * qx), w * w - qx * qx - qy * qy + qz * qz],
                ],
            }
        }
    }
}

fn rotate_onto(x: &[Vec3], target: &[Vec3], dim: Dim) -> Vec<Vec3> {
    let r = optimal_rotation(x, target, dim);
    x.iter().map(|&p| r.apply(p)).collect()
}

/// Generalized Procrustes alignment: every shape is centered, scaled to unit
/// RMS radius and rotated onto the evolving mean until the mean moves by
/// less than `1e-9`.
pub fn align_shapes(shapes: &[Vec<Vec3>], dim: Dim) -> Result<Vec<Vec<Vec3>>> {
    if shapes.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: shapes.len() });
    }
    let n = shapes[0].len();
    if n == 0 {
        return Err(Error::DegenerateShape(0));
    }
    if let Some(bad) = shapes.iter().find(|s| s.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad.len() });
    }
    let flat = |s: &[Vec3]| -> Vec<Vec3> {
        match dim {
            Dim::Two => s.iter().map(|p| Vec3::xy(p.x, p.y)).collect(),
            Dim::Three => s.to_vec(),
        }
    };
    let mut aligned: Vec<Vec<Vec3>> = shapes
        .iter()
        .enumerate()
        .map(|(i, s)| normalize(&flat(s), i))
        .collect::<Result<_>>()?;
    let reference = aligned[0].clone();
    let mut mean = reference.clone();
    for _ in 0..500 {
        for s in aligned.iter_mut() {
            *s = rotate_onto(s, &mean, dim);
        }
        let mut next = alloc::vec![Vec3::ZERO; n];
        for s in &aligned {
            for (m, &p) in next.iter_mut().zip(s) {
                *m += p;
            }
        }
        for m in next.iter_mut() {
            *m = *m / aligned.len() as f64;
        }
        // Fix the rotational gauge to the first shape.
        let next = normalize(&rotate_onto(&next, &reference, dim), 0)?;
        let moved = sqrt(next.iter().zip(&mean).map(|(a, b)| (*a - *b).norm_squared()).sum::<f64>());
        mean = next;
        if moved < 1e-9 {
            break;
        }
    }
    for s in aligned.iter_mut() {
        *s = rotate_onto(s, &mean, dim);
    }
    Ok(aligned)
}

/// PCA of aligned shapes. Mode count is `min(N - 1, landmarks * dim)`;
/// directions without variance are completed to an orthonormal set with
/// zero eigenvalue.
pub fn fit_pca(aligned: &[Vec<Vec3>], dim: Dim) -> Result<ShapeModel> {
    if aligned.is_empty() {
        return Err(Error::EmptySet);
    }
    let landmarks = aligned[0].len();
    let len = landmarks * dim.as_usize();
    let rows: Vec<Vec<f64>> = aligned.iter().map(|s| flatten(s, dim)).collect();
    if let Some(bad) = rows.iter().find(|r| r.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, got: bad.len() });
    }
    let count = rows.len();
    let mut mean = alloc::vec![0.0; len];
    for r in &rows {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= count as f64;
    }
    let dev: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&mean).map(|(x, m)| x - m).collect()).collect();

    let mode_count = (count.saturating_sub(1)).min(len);
    let mut modes: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues = Vec::new();
    if count >= 2 {
        let denom = (count - 1) as f64;
        let mut gram = alloc::vec![0.0; count * count];
        for i in 0..count {
            for j in i..count {
                let g = dot(&dev[i], &dev[j]) / denom;
                gram[i * count + j] = g;
                gram[j * count + i] = g;
            }
        }
        let (vals, vecs) = symmetric_eigen(&gram, count);
        let tol = 1e-14 * (landmarks as f64).max(1.0);
        for (lambda, a) in vals.iter().zip(&vecs).take(mode_count) {
            if *lambda <= tol {
                break;
            }
            let mut m = alloc::vec![0.0; len];
            for (w, d) in a.iter().zip(&dev) {
                for (mi, di) in m.iter_mut().zip(d) {
                    *mi += w * di;
                }
            }
            if orthonormalize_against(&mut m, &modes) {
                modes.push(m);
                eigenvalues.push(*lambda);
            }
        }
    }
    // Pad with zero-variance directions.
    let mut e = 0;
    while modes.len() < mode_count && e < len {
        let mut m = alloc::vec![0.0; len];
        m[e] = 1.0;
        e += 1;
        if orthonormalize_against(&mut m, &modes) {
            modes.push(m);
            eigenvalues.push(0.0);
        }
    }
    Ok(ShapeModel { dim, landmarks, mean, modes, eigenvalues })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// Two passes of modified Gram-Schmidt; false if `v` is (numerically) in the span.
fn orthonormalize_against(v: &mut [f64], basis: &[Vec<f64>]) -> bool {
    let initial = sqrt(dot(v, v));
    if initial == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    let n = sqrt(dot(v, v));
    if n <= 1e-10 * initial {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

impl ShapeModel {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    pub fn mean_points(&self) -> Vec<Vec3> {
        unflatten(&self.mean, self.dim)
    }

    /// `mean + modes * b`.
    pub fn synthesize(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.modes.len() {
            return Err(Error::DimensionMismatch { expected: self.modes.len(), got: b.len() });
        }
        let mut s = self.mean.clone();
        for (m, &w) in self.modes.iter().zip(b) {
            for (si, mi) in s.iter_mut().zip(m) {
                *si += w * mi;
            }
        }
        Ok(s)
    }

    /// Mode coefficients of a flattened shape.
    pub fn project(&self, shape: &[f64]) -> Result<Vec<f64>> {
        if shape.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), got: shape.len() });
        }
        let dev: Vec<f64> = shape.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        Ok(self.modes.iter().map(|m| dot(m, &dev)).collect())
    }

    pub fn total_variance(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// Largest landmark displacement of `modes * b` with `b_i = sigma * sqrt(lambda_i)`.
    pub fn max_displacement(&self, mode_sigma: f64) -> f64 {
        let b: Vec<f64> = self.eigenvalues.iter().map(|l| mode_sigma * sqrt(l.max(0.0))).collect();
        let disp = self.synthesize(&b).expect("coefficient count matches");
        let d = self.dim.as_usize();
        disp.chunks(d)
            .zip(self.mean.chunks(d))
            .map(|(s, m)| sqrt(s.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()))
            .fold(0.0, f64::max)
    }

    /// Largest distance of a mean landmark from the mean centroid.
    pub fn mean_max_radius(&self) -> f64 {
        let pts = self.mean_points();
        let c = centroid(&pts);
        pts.iter().map(|p| p.distance(c)).fold(0.0, f64::max)
    }
}

/// Smoothness bound covering `mode_sigma` standard deviations of every mode.
///
/// The displacement is measured in units of the mean shape normalized to
/// unit max radius (the template frame of `fan`), then divided by the
/// smallest per-ray node spacing `scale_max * rho_r / P` and rounded up.
pub fn estimate_delta(model: &ShapeModel, fan: &RayFan, nodes_per_ray: usize, scale_max: f64, mode_sigma: f64) -> Result<usize> {
    if model.dim != fan.dim {
        return Err(Error::DimensionMismatch { expected: model.dim.as_usize(), got: fan.dim.as_usize() });
    }
    if nodes_per_ray == 0 || !(scale_max > 0.0) {
        return Err(Error::InvalidConfig("nodes_per_ray and scale_max must be positive"));
    }
    let disp = model.max_displacement(mode_sigma.max(0.0));
    if disp == 0.0 {
        return Ok(0);
    }
    let radius = model.mean_max_radius();
    if !(radius > 0.0) {
        return Err(Error::DegenerateShape(0));
    }
    let min_rho = fan.unit_template_dist().fold(f64::INFINITY, f64::min);
    let spacing = scale_max * min_rho / nodes_per_ray as f64;
    let steps = disp / radius / spacing;
    Ok(ceil(steps - 1e-9).max(0.0) as usize)
}
