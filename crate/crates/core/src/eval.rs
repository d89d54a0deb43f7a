//! Mask overlap metrics and cohort summaries.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Mask;
use crate::math::sqrt;
use crate::pipeline::SegmentStats;

/// Dice coefficient `2|A & B| / (|A| + |B|)` as a fraction in `[0, 1]`.
/// Two empty masks score 0.
pub fn dice(a: &Mask, b: &Mask) -> Result<f64> {
    if !a.grid.congruent(&b.grid) {
        return Err(Error::ShapeMismatch);
    }
    let (mut inter, mut na, mut nb) = (0u64, 0u64, 0u64);
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        na += x as u64;
        nb += y as u64;
        inter += (x && y) as u64;
    }
    if na + nb == 0 {
        return Ok(0.0);
    }
    Ok((2 * inter) as f64 / (na + nb) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    /// Dice in percent.
    pub dsc: f64,
    pub vol_auto: f64,
    pub vol_ref: f64,
    pub voxels_auto: u64,
    pub voxels_ref: u64,
    /// Both masks were empty, so `dsc` was defined as 0.
    pub both_empty: bool,
}

impl EvalReport {
    pub const COLUMNS: [&'static str; 5] = ["DSC (%)", "Vol. A (cm3)", "Vol. Ref (cm3)", "Voxels A", "Voxels Ref"];

    pub fn values(&self) -> [f64; 5] {
        [self.dsc, self.vol_auto, self.vol_ref, self.voxels_auto as f64, self.voxels_ref as f64]
    }
}

/// Compare an automatic mask against a reference. Volumes are in cm
/// (cubed, or squared for images), assuming millimetre spacing.
pub fn evaluate(auto: &Mask, reference: &Mask) -> Result<EvalReport> {
    let d = dice(auto, reference)?;
    let sa = SegmentStats::from_mask(auto);
    let sr = SegmentStats::from_mask(reference);
    Ok(EvalReport {
        dsc: 100.0 * d,
        vol_auto: sa.volume_cm(auto.grid.dim),
        vol_ref: sr.volume_cm(reference.grid.dim),
        voxels_auto: sa.voxel_count,
        voxels_ref: sr.voxel_count,
        both_empty: sa.voxel_count == 0 && sr.voxel_count == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single value.
    pub std: f64,
}

impl ColumnStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySet);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0))
        };
        Ok(ColumnStats {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            std,
        })
    }
}

/// Per-column statistics in `EvalReport::COLUMNS` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub columns: [ColumnStats; 5],
}

pub fn summarize(reports: &[EvalReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(Error::EmptySet);
    }
    let col = |c: usize| -> Result<ColumnStats> {
        let v: Vec<f64> = reports.iter().map(|r| r.values()[c]).collect();
        ColumnStats::of(&v)
    };
    Ok(Summary { count: reports.len(), columns: [col(0)?, col(1)?, col(2)?, col(3)?, col(4)?] })
}
