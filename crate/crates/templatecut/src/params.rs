//! Built-in templates and user-facing segmentation parameters shared by the
//! CLI and the HTTP service.

use templatecut_core::icosphere::Icosphere;
use templatecut_core::{Dim, Rotation, RaySampling, SegmentConfig, TemplateShape, Vec3};

pub const BUILTIN_TEMPLATES: [&str; 5] = ["circle", "ellipse", "icosphere", "square", "star"];

pub fn builtin_template(name: &str) -> Option<TemplateShape> {
    Some(match name {
        "circle" => TemplateShape::circle(64),
        "ellipse" => TemplateShape::ellipse(64, 1.0, 0.6),
        "icosphere" => TemplateShape::icosphere(3),
        "square" => TemplateShape::square(),
        "star" => TemplateShape::star(5, 0.5),
        _ => return None,
    })
}

/// Segmentation knobs as given on the command line or in a request.
/// Lengths are world units (millimetres).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentParams {
    /// Ray count; in 3D it must be an icosphere vertex count (12, 42, 162, 642, ...).
    pub rays: Option<usize>,
    /// Icosphere subdivision level for 3D rays.
    pub level: Option<u32>,
    pub nodes: Option<usize>,
    pub delta: Option<usize>,
    /// Outer reach as a multiple of the template distance.
    pub scale: Option<f64>,
    pub avg_window: Option<f64>,
    pub template_scale: Option<f64>,
    /// Template rotation in degrees (about z).
    pub rotation: Option<f64>,
}

impl SegmentParams {
    pub fn to_config(&self, dim: Dim) -> Result<SegmentConfig, String> {
        let sampling = match dim {
            Dim::Two => {
                if self.level.is_some() {
                    return Err("InvalidConfig: icosphere level applies to 3D data only".into());
                }
                self.rays.map(RaySampling::Planar)
            }
            Dim::Three => match (self.rays, self.level) {
                (Some(_), Some(_)) => return Err("InvalidConfig: give either rays or level, not both".into()),
                (Some(r), None) => Some(RaySampling::Icosphere(
                    (0..=8)
                        .find(|&l| Icosphere::vertex_count_for_level(l) == r)
                        .ok_or_else(|| format!("InvalidConfig: {r} is not an icosphere vertex count (12, 42, 162, 642, 2562, ...)"))?,
                )),
                (None, Some(l)) if l > 8 => return Err("InvalidConfig: icosphere level must be at most 8".into()),
                (None, l) => l.map(RaySampling::Icosphere),
            },
        };
        let defaults = SegmentConfig::default();
        Ok(SegmentConfig {
            sampling,
            nodes_per_ray: self.nodes,
            delta: self.delta.unwrap_or(defaults.delta),
            scale_max: self.scale.unwrap_or(defaults.scale_max),
            avg_window: self.avg_window,
            template_scale: self.template_scale,
            orientation: self.rotation.map_or(Rotation::IDENTITY, |deg| Rotation::planar(deg.to_radians())),
        })
    }
}

/// Voxel-index seed to world coordinates.
pub fn seed_to_world(seed: &[f64], spacing: [f64; 3], dim: Dim) -> Result<Vec3, String> {
    match (dim, seed) {
        (Dim::Two, [x, y]) => Ok(Vec3::xy(x * spacing[0], y * spacing[1])),
        (Dim::Three, [x, y, z]) => Ok(Vec3::new(x * spacing[0], y * spacing[1], z * spacing[2])),
        _ => Err(format!("InvalidSeed: expected {} coordinates, got {}", dim.as_usize(), seed.len())),
    }
}

/// `"poor"` when the seed window's standard deviation exceeds a quarter of its mean.
pub fn seed_quality(window: (f64, f64)) -> &'static str {
    let (mean, std) = window;
    if std > 0.25 * mean.abs() {
        "poor"
    } else {
        "ok"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_counts_map_to_levels() {
        let p = SegmentParams { rays: Some(642), ..Default::default() };
        assert_eq!(p.to_config(Dim::Three).unwrap().sampling, Some(RaySampling::Icosphere(3)));
        let p = SegmentParams { rays: Some(600), ..Default::default() };
        assert!(p.to_config(Dim::Three).is_err());
        let p = SegmentParams { level: Some(2), ..Default::default() };
        assert!(p.to_config(Dim::Two).is_err());
    }

    #[test]
    fn seeds_and_quality() {
        assert_eq!(seed_to_world(&[2.0, 3.0], [0.5, 2.0, 1.0], Dim::Two).unwrap(), Vec3::xy(1.0, 6.0));
        assert!(seed_to_world(&[2.0, 3.0], [1.0; 3], Dim::Three).is_err());
        assert_eq!(seed_quality((100.0, 10.0)), "ok");
        assert_eq!(seed_quality((100.0, 30.0)), "poor");
        assert_eq!(seed_quality((0.0, 0.0)), "ok");
    }

    #[test]
    fn builtins_resolve() {
        for name in BUILTIN_TEMPLATES {
            assert!(builtin_template(name).is_some());
        }
        assert!(builtin_template("cube").is_none());
    }
}
