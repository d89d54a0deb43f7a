//! Object intensity estimate around the seed and the per-node cost.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::math::{round, sqrt, Vec3};
use crate::template::Dim;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    /// Side length of the averaging window, world units.
    pub avg_window_d: f64,
    pub avg_value: Option<f64>,
}

impl CostParams {
    pub fn new(avg_window_d: f64) -> Self {
        Self { avg_window_d, avg_value: None }
    }

    /// Four times the smallest voxel spacing.
    pub fn default_window(field: &ScalarField) -> f64 {
        4.0 * field.grid.min_spacing()
    }

    pub fn estimate(&mut self, field: &ScalarField, seed: Vec3) -> Result<f64> {
        let avg = estimate_average(field, seed, self.avg_window_d)?;
        self.avg_value = Some(avg);
        Ok(avg)
    }
}

/// Samples per axis: `max(3, round(d / min_spacing) + 1)`, endpoints included.
pub fn window_samples_per_axis(field: &ScalarField, d: f64) -> usize {
    let k = round(d / field.grid.min_spacing()) as usize + 1;
    k.max(3)
}

fn window_samples(field: &ScalarField, seed: Vec3, d: f64) -> Result<Vec<f64>> {
    if !(d.is_finite() && d >= field.grid.min_spacing()) {
        return Err(Error::WindowDegenerate(d));
    }
    let k = window_samples_per_axis(field, d);
    let offset = |i: usize| -d / 2.0 + d * i as f64 / (k - 1) as f64;
    let mut out = Vec::new();
    match field.grid.dim {
        Dim::Two => {
            for j in 0..k {
                for i in 0..k {
                    out.push(field.sample(seed + Vec3::xy(offset(i), offset(j))));
                }
            }
        }
        Dim::Three => {
            for l in 0..k {
                for j in 0..k {
                    for i in 0..k {
                        out.push(field.sample(seed + Vec3::new(offset(i), offset(j), offset(l))));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Mean intensity over a `d`-sided square (2D) or cube (3D) centered at `seed`,
/// discretized on a regular sample lattice.
pub fn estimate_average(field: &ScalarField, seed: Vec3, d: f64) -> Result<f64> {
    let s = window_samples(field, seed, d)?;
    Ok(s.iter().sum::<f64>() / s.len() as f64)
}

/// Mean and population standard deviation over the same window.
pub fn window_stats(field: &ScalarField, seed: Vec3, d: f64) -> Result<(f64, f64)> {
    let s = window_samples(field, seed, d)?;
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((mean, sqrt(var)))
}

/// `|avg - I(p)|`.
pub fn node_cost(field: &ScalarField, params: &CostParams, p: Vec3) -> Result<f64> {
    let avg = params.avg_value.ok_or(Error::AverageNotSet)?;
    Ok((avg - field.sample(p)).abs())
}
