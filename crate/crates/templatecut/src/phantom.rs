//! Synthetic test images and volumes with known ground truth.
//!
//! A phantom spec is a text file of `key value...` lines:
//!
//! ```text
//! kind occluded-ellipse
//! size 128 128
//! axes 40 24
//! rotation 15
//! foreground 100
//! background 0
//! occlusion 0.3
//! noise 5
//! seed 7
//! ```
//!
//! Lengths and centers are in voxel units. Ground truth uses the voxel-center
//! rule. Noise is additive Gaussian (see [`NoiseRng`]); samples are rounded
//! and clamped to the element type.

use std::f64::consts::{PI, TAU};

use rand_core::RngCore;
use rand_pcg::Pcg64;

use templatecut_core::template::polygon_contains;
use templatecut_core::{Dim, Grid, Mask, ScalarField, TemplateShape, Vec3};

use crate::io::ElemType;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhantomKind {
    Disk,
    Ellipse,
    OccludedEllipse,
    Star,
    Sphere,
    Ellipsoid,
}

impl PhantomKind {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "disk" => PhantomKind::Disk,
            "ellipse" => PhantomKind::Ellipse,
            "occluded-ellipse" => PhantomKind::OccludedEllipse,
            "star" => PhantomKind::Star,
            "sphere" => PhantomKind::Sphere,
            "ellipsoid" => PhantomKind::Ellipsoid,
            _ => return None,
        })
    }

    pub fn token(self) -> &'static str {
        match self {
            PhantomKind::Disk => "disk",
            PhantomKind::Ellipse => "ellipse",
            PhantomKind::OccludedEllipse => "occluded-ellipse",
            PhantomKind::Star => "star",
            PhantomKind::Sphere => "sphere",
            PhantomKind::Ellipsoid => "ellipsoid",
        }
    }

    pub fn dim(self) -> Dim {
        match self {
            PhantomKind::Sphere | PhantomKind::Ellipsoid => Dim::Three,
            _ => Dim::Two,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    pub size: [usize; 3],
    pub spacing: [f64; 3],
    /// Voxel coordinates; `None` is the grid center.
    pub center: Option<[f64; 3]>,
    /// Disk, sphere and star size (the star's outer radius).
    pub radius: f64,
    /// Semi-axes of ellipses and ellipsoids.
    pub axes: [f64; 3],
    /// In-plane rotation in degrees.
    pub rotation: f64,
    pub arms: usize,
    pub inner: f64,
    pub foreground: f64,
    pub background: f64,
    pub noise: f64,
    pub seed: u64,
    /// Fraction of the boundary (by polar angle) painted with the background value.
    pub occlusion: f64,
    /// Polar angle in degrees where the occluded arc starts.
    pub occlusion_start: f64,
    /// Thickness of the painted band inside the boundary, voxels.
    pub band: f64,
    pub elem: ElemType,
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("InvalidPhantom: {0}")]
pub struct PhantomError(pub String);

fn bad(msg: impl Into<String>) -> PhantomError {
    PhantomError(msg.into())
}

impl PhantomSpec {
    pub fn new(kind: PhantomKind) -> Self {
        let (size, axes) = match kind.dim() {
            Dim::Two => ([128, 128, 1], [40.0, 24.0, 1.0]),
            Dim::Three => ([64, 64, 64], [20.0, 14.0, 10.0]),
        };
        PhantomSpec {
            kind,
            size,
            spacing: [1.0; 3],
            center: None,
            radius: 30.0,
            axes,
            rotation: 0.0,
            arms: 5,
            inner: 0.6,
            foreground: 100.0,
            background: 0.0,
            noise: 0.0,
            seed: 1,
            occlusion: if kind == PhantomKind::OccludedEllipse { 0.3 } else { 0.0 },
            occlusion_start: 0.0,
            band: 3.0,
            elem: ElemType::U8,
        }
    }

    pub fn parse(text: &str) -> Result<Self, PhantomError> {
        let mut kind = None;
        let mut pairs = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let vals: Vec<&str> = parts.collect();
            if key == "kind" {
                let k = vals.first().copied().unwrap_or_default();
                kind = Some(PhantomKind::parse(k).ok_or_else(|| bad(format!("unknown kind {k:?}")))?);
            } else {
                pairs.push((key.to_string(), vals.iter().map(|s| s.to_string()).collect::<Vec<_>>()));
            }
        }
        let kind = kind.ok_or_else(|| bad("missing kind"))?;
        let mut spec = PhantomSpec::new(kind);
        let d = kind.dim().as_usize();
        for (key, vals) in pairs {
            let nums = || -> Result<Vec<f64>, PhantomError> {
                vals.iter().map(|v| v.parse::<f64>().map_err(|_| bad(format!("{key}: {v:?} is not a number")))).collect()
            };
            let one = || -> Result<f64, PhantomError> {
                match nums()?.as_slice() {
                    [x] => Ok(*x),
                    _ => Err(bad(format!("{key} takes one value"))),
                }
            };
            let per_axis = || -> Result<[f64; 3], PhantomError> {
                let v = nums()?;
                if v.len() != d {
                    return Err(bad(format!("{key} takes {d} values")));
                }
                let mut out = [1.0; 3];
                out[..d].copy_from_slice(&v);
                Ok(out)
            };
            match key.as_str() {
                "size" => {
                    let v = per_axis()?;
                    if v.iter().any(|&n| n < 1.0 || n.fract() != 0.0) {
                        return Err(bad("size must be positive integers"));
                    }
                    spec.size = [v[0] as usize, v[1] as usize, v[2] as usize];
                }
                "spacing" => spec.spacing = per_axis()?,
                "center" => {
                    let mut c = per_axis()?;
                    if d == 2 {
                        c[2] = 0.0;
                    }
                    spec.center = Some(c);
                }
                "radius" => spec.radius = one()?,
                "axes" => spec.axes = per_axis()?,
                "rotation" => spec.rotation = one()?,
                "arms" => {
                    let a = one()?;
                    if a < 2.0 || a.fract() != 0.0 {
                        return Err(bad("arms must be an integer >= 2"));
                    }
                    spec.arms = a as usize;
                }
                "inner" => spec.inner = one()?,
                "foreground" => spec.foreground = one()?,
                "background" => spec.background = one()?,
                "noise" => spec.noise = one()?,
                "seed" => {
                    let v = vals.first().ok_or_else(|| bad("seed takes one value"))?;
                    spec.seed = v.parse().map_err(|_| bad("seed must be an unsigned integer"))?;
                }
                "occlusion" => spec.occlusion = one()?,
                "occlusion-start" => spec.occlusion_start = one()?,
                "band" => spec.band = one()?,
                "type" => {
                    let v = vals.first().map(String::as_str).unwrap_or_default();
                    spec.elem = ElemType::parse(v).ok_or_else(|| bad("type must be u8 or u16le"))?;
                }
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), PhantomError> {
        if self.size.contains(&0) {
            return Err(bad("size must be positive"));
        }
        if self.spacing.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(bad("spacing must be positive"));
        }
        if !(0.0..1.0).contains(&self.occlusion) {
            return Err(bad("occlusion must lie in [0, 1)"));
        }
        let max = self.elem.max_value();
        for v in [self.foreground, self.background] {
            if !(0.0..=max).contains(&v) {
                return Err(bad(format!("intensity {v} outside the {} range", self.elem.token())));
            }
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(bad("noise must be nonnegative"));
        }
        match self.kind {
            PhantomKind::Disk | PhantomKind::Sphere if !(self.radius > 0.0) => return Err(bad("radius must be positive")),
            PhantomKind::Star if !(self.radius > 0.0) || !(self.inner > 0.0 && self.inner < 1.0) => {
                return Err(bad("star needs radius > 0 and 0 < inner < 1"))
            }
            PhantomKind::Ellipse | PhantomKind::OccludedEllipse if self.axes[..2].iter().any(|a| !(*a > 0.0)) => {
                return Err(bad("axes must be positive"))
            }
            PhantomKind::Ellipsoid if self.axes.iter().any(|a| !(*a > 0.0)) => return Err(bad("axes must be positive")),
            PhantomKind::OccludedEllipse if !(self.band > 0.0) => return Err(bad("band must be positive")),
            _ => {}
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.kind.dim(), self.size, self.spacing).expect("validated")
    }

    /// Shape center in voxel coordinates.
    pub fn center_voxel(&self) -> [f64; 3] {
        self.center.unwrap_or_else(|| {
            let c = |n: usize| (n as f64 - 1.0) / 2.0;
            match self.kind.dim() {
                Dim::Two => [c(self.size[0]), c(self.size[1]), 0.0],
                Dim::Three => [c(self.size[0]), c(self.size[1]), c(self.size[2])],
            }
        })
    }

    /// Shape center in world coordinates.
    pub fn center_world(&self) -> Vec3 {
        let c = self.center_voxel();
        Vec3::new(c[0] * self.spacing[0], c[1] * self.spacing[1], c[2] * self.spacing[2])
    }

    /// Star outline in voxel units, if this is a star phantom.
    pub fn star_outline(&self) -> Vec<Vec3> {
        let c = self.center_voxel();
        let rot = self.rotation.to_radians();
        TemplateShape::star(self.arms, self.inner)
            .vertices
            .iter()
            .map(|v| {
                let (s, co) = rot.sin_cos();
                Vec3::xy(c[0] + self.radius * (co * v.x - s * v.y), c[1] + self.radius * (s * v.x + co * v.y))
            })
            .collect()
    }
}

/// Noise source: PCG-XSL-RR 128/64 (`rand_pcg::Pcg64`).
///
/// LCG multiplier `0x2360ed051fc65da44385df649fccf645`, increment
/// `inc = 0x14057b7ef767814f5851f42d4c957f2d`. Initial state is
/// `(seed + inc) * mult + inc`; each output steps the LCG, then returns
/// `rotr64(hi ^ lo, state >> 122)`.
///
/// A Gaussian draw consumes two outputs `a`, `b`:
/// `u1 = ((a >> 11) + 1) * 2^-53`, `u2 = (b >> 11) * 2^-53`,
/// `z = sqrt(-2 ln u1) * cos(2 pi u2)`. Voxels are visited x fastest.
pub struct NoiseRng(Pcg64);

impl NoiseRng {
    pub fn new(seed: u64) -> Self {
        NoiseRng(Pcg64::new(seed as u128, 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96))
    }

    pub fn gaussian(&mut self) -> f64 {
        let scale = 1.0 / (1u64 << 53) as f64;
        let u1 = ((self.0.next_u64() >> 11) + 1) as f64 * scale;
        let u2 = (self.0.next_u64() >> 11) as f64 * scale;
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }
}

/// Field and ground-truth mask for a validated spec.
pub fn make_phantom(spec: &PhantomSpec) -> Result<(ScalarField, Mask), PhantomError> {
    spec.validate()?;
    let grid = spec.grid();
    let c = spec.center_voxel();
    let [nx, ny, nz] = grid.extents;
    let rot = spec.rotation.to_radians();
    let (rs, rc) = rot.sin_cos();
    let star = if spec.kind == PhantomKind::Star { spec.star_outline() } else { Vec::new() };
    // voxel offset from the center, in the shape's own frame
    let local = |i: usize, j: usize, k: usize| {
        let (dx, dy, dz) = (i as f64 - c[0], j as f64 - c[1], k as f64 - c[2]);
        (rc * dx + rs * dy, -rs * dx + rc * dy, dz)
    };
    let [a, b, cz] = spec.axes;

    let mut truth = Mask::empty(grid);
    let mut field = ScalarField::filled(grid, spec.background);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let (x, y, z) = local(i, j, k);
                let inside = match spec.kind {
                    PhantomKind::Disk => x * x + y * y <= spec.radius * spec.radius,
                    PhantomKind::Sphere => x * x + y * y + z * z <= spec.radius * spec.radius,
                    PhantomKind::Ellipse | PhantomKind::OccludedEllipse => (x / a).powi(2) + (y / b).powi(2) <= 1.0,
                    PhantomKind::Ellipsoid => (x / a).powi(2) + (y / b).powi(2) + (z / cz).powi(2) <= 1.0,
                    PhantomKind::Star => polygon_contains(&star, Vec3::xy(i as f64, j as f64)),
                };
                if inside {
                    truth.set(i, j, k, true);
                    let occluded = spec.kind == PhantomKind::OccludedEllipse && in_occluded_band(spec, x, y);
                    field.values[grid.index(i, j, k)] = if occluded { spec.background } else { spec.foreground };
                }
            }
        }
    }

    if spec.noise > 0.0 {
        let mut rng = NoiseRng::new(spec.seed);
        for v in field.values.iter_mut() {
            *v += spec.noise * rng.gaussian();
        }
    }
    let max = spec.elem.max_value();
    for v in field.values.iter_mut() {
        *v = v.round().clamp(0.0, max);
    }
    Ok((field, truth))
}

// Inside point within `band` of the boundary, measured along the ray from the
// center, whose polar angle falls in the occluded arc.
fn in_occluded_band(spec: &PhantomSpec, x: f64, y: f64) -> bool {
    if spec.occlusion <= 0.0 {
        return false;
    }
    let theta = y.atan2(x);
    let start = spec.occlusion_start.to_radians();
    let rel = (theta - start).rem_euclid(TAU);
    if rel >= spec.occlusion * TAU {
        return false;
    }
    let [a, b, _] = spec.axes;
    let edge = 1.0 / ((theta.cos() / a).powi(2) + (theta.sin() / b).powi(2)).sqrt();
    (x * x + y * y).sqrt() > edge - spec.band
}

/// Analytic area (2D) or volume (3D) of the shape in voxel units; `None` for stars.
pub fn analytic_measure(spec: &PhantomSpec) -> Option<f64> {
    let [a, b, c] = spec.axes;
    match spec.kind {
        PhantomKind::Disk => Some(PI * spec.radius * spec.radius),
        PhantomKind::Sphere => Some(4.0 / 3.0 * PI * spec.radius.powi(3)),
        PhantomKind::Ellipse | PhantomKind::OccludedEllipse => Some(PI * a * b),
        PhantomKind::Ellipsoid => Some(4.0 / 3.0 * PI * a * b * c),
        PhantomKind::Star => None,
    }
}
