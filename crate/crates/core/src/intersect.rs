//! Ray/segment and ray/triangle intersection.

use crate::math::Vec3;

/// Tolerance on the segment parameter and on barycentric coordinates.
/// Hits that graze an endpoint or a shared edge are accepted.
pub const BARY_EPS: f64 = 1e-12;

/// Planar ray/segment intersection (z is ignored).
///
/// Returns the smallest `t >= 0` with `origin + t * dir` on `[p0, p1]`.
/// A ray running along a collinear segment hits at the nearest overlap point.
pub fn ray_segment_intersect(origin: Vec3, dir: Vec3, p0: Vec3, p1: Vec3) -> Option<f64> {
    let o = Vec3::xy(origin.x, origin.y);
    let d = Vec3::xy(dir.x, dir.y);
    let a = Vec3::xy(p0.x, p0.y);
    let e = Vec3::xy(p1.x - p0.x, p1.y - p0.y);
    let w = a - o;
    let denom = d.perp_dot(e);
    let scale = d.norm() * e.norm();
    if scale == 0.0 {
        return None;
    }
    if denom.abs() <= 1e-14 * scale {
        // Parallel. Only a collinear segment can be hit.
        if w.perp_dot(d).abs() > 1e-12 * (w.norm() + 1.0) * d.norm() {
            return None;
        }
        let dd = d.norm_squared();
        let t0 = w.dot(d) / dd;
        let t1 = (w + e).dot(d) / dd;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if hi < 0.0 {
            return None;
        }
        return Some(lo.max(0.0));
    }
    let t = w.perp_dot(e) / denom;
    let s = w.perp_dot(d) / denom;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&s) || t < 0.0 {
        return None;
    }
    Some(t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleHit {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

/// Möller–Trumbore ray/triangle test.
///
/// `u` and `v` are the barycentric weights of `v1` and `v2`. Rays parallel to
/// the triangle plane never hit.
pub fn ray_triangle_intersect(origin: Vec3, dir: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<TriangleHit> {
    let e1 = v1 - v0;
    let e2 = v2 - v0;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() <= 1e-14 * e1.norm() * e2.norm() * dir.norm() {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - v0;
    let u = s.dot(p) * inv;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = e2.dot(q) * inv;
    if t < 0.0 {
        return None;
    }
    Some(TriangleHit { t, u, v })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_segment() {
        let t = ray_segment_intersect(
            Vec3::ZERO,
            Vec3::xy(1.0, 0.0),
            Vec3::xy(2.0, -1.0),
            Vec3::xy(2.0, 1.0),
        );
        assert_eq!(t, Some(2.0));
    }

    #[test]
    fn parallel_disjoint_segment() {
        let t = ray_segment_intersect(
            Vec3::ZERO,
            Vec3::xy(1.0, 0.0),
            Vec3::xy(0.0, 1.0),
            Vec3::xy(5.0, 1.0),
        );
        assert_eq!(t, None);
    }

    #[test]
    fn collinear_segment_hits_nearest_end() {
        let t = ray_segment_intersect(
            Vec3::ZERO,
            Vec3::xy(1.0, 0.0),
            Vec3::xy(5.0, 0.0),
            Vec3::xy(3.0, 0.0),
        );
        assert_eq!(t, Some(3.0));
        let behind = ray_segment_intersect(
            Vec3::ZERO,
            Vec3::xy(1.0, 0.0),
            Vec3::xy(-5.0, 0.0),
            Vec3::xy(-3.0, 0.0),
        );
        assert_eq!(behind, None);
    }

    #[test]
    fn segment_endpoint_counts_as_hit() {
        // Ray along the diagonal through the corner (1,1) of segment (1,1)-(1,-1).
        let d = Vec3::xy(1.0, 1.0).normalized();
        let t = ray_segment_intersect(Vec3::ZERO, d, Vec3::xy(1.0, 1.0), Vec3::xy(1.0, -1.0)).unwrap();
        assert!((t - core::f64::consts::SQRT_2).abs() < 1e-15);
        // and from the other side of the shared corner
        let t2 = ray_segment_intersect(Vec3::ZERO, d, Vec3::xy(-1.0, 1.0), Vec3::xy(1.0, 1.0)).unwrap();
        assert!((t2 - core::f64::consts::SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn segment_behind_origin() {
        let t = ray_segment_intersect(
            Vec3::ZERO,
            Vec3::xy(1.0, 0.0),
            Vec3::xy(-2.0, -1.0),
            Vec3::xy(-2.0, 1.0),
        );
        assert_eq!(t, None);
    }

    #[test]
    fn triangle_centroid_hit() {
        let v0 = Vec3::new(-1.0, -1.0, 3.0);
        let v1 = Vec3::new(2.0, -1.0, 3.0);
        let v2 = Vec3::new(-1.0, 2.0, 3.0);
        // centroid is (0, 0, 3)
        let hit = ray_triangle_intersect(Vec3::ZERO, Vec3::new(0.0, 0.0, 1.0), v0, v1, v2).unwrap();
        assert!((hit.t - 3.0).abs() < 1e-15);
        assert!((hit.u - 1.0 / 3.0).abs() < 1e-15);
        assert!((hit.v - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_parallel_ray_misses() {
        let hit = ray_triangle_intersect(
            Vec3::ZERO,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(0.0, 1.0, 1.0),
        );
        assert!(hit.is_none());
    }

    #[test]
    fn triangle_edge_hit() {
        // Ray through the midpoint of edge v1-v2, where u + v = 1.
        let v0 = Vec3::new(0.0, 0.0, 1.0);
        let v1 = Vec3::new(1.0, 0.0, 1.0);
        let v2 = Vec3::new(0.0, 1.0, 1.0);
        let target = Vec3::new(0.5, 0.5, 1.0);
        let hit = ray_triangle_intersect(Vec3::ZERO, target.normalized(), v0, v1, v2).unwrap();
        assert!((hit.u + hit.v - 1.0).abs() < 1e-12);
        assert!((hit.t - target.norm()).abs() < 1e-12);
    }
}
