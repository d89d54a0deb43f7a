//! Subdivided icosahedron projected onto the unit sphere.
//!
//! Vertices give the 3D ray directions, edges give the ray neighbour
//! relation and faces give the connectivity of reconstructed surfaces.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math::{sqrt, Vec3};

#[derive(Debug, Clone)]
pub struct Icosphere {
    pub vertices: Vec<Vec3>,
    /// Outward-facing (counterclockwise seen from outside) triangles.
    pub faces: Vec<[usize; 3]>,
}

impl Icosphere {
    /// Level 0 is the icosahedron (12 vertices); each level splits every
    /// triangle into four, so level `n` has `10 * 4^n + 2` vertices.
    pub fn new(level: u32) -> Self {
        let t = (1.0 + sqrt(5.0)) / 2.0;
        let raw = [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ];
        let mut vertices: Vec<Vec3> = raw
            .iter()
            .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
            .collect();
        let mut faces: Vec<[usize; 3]> = alloc::vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];

        for _ in 0..level {
            let mut cache: BTreeMap<(usize, usize), usize> = BTreeMap::new();
            let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
                let key = if a < b { (a, b) } else { (b, a) };
                *cache.entry(key).or_insert_with(|| {
                    let m = ((vertices[a] + vertices[b]) * 0.5).normalized();
                    vertices.push(m);
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = midpoint(a, b, &mut vertices);
                let bc = midpoint(b, c, &mut vertices);
                let ca = midpoint(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            faces = next;
        }
        Icosphere { vertices, faces }
    }

    pub fn vertex_count_for_level(level: u32) -> usize {
        10 * 4usize.pow(level) + 2
    }

    /// Unique undirected edges `(i, j)` with `i < j`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        mesh_edges(&self.faces)
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        adjacency(self.vertices.len(), &self.edges())
    }
}

pub(crate) fn mesh_edges(faces: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = faces
        .iter()
        .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
        .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
}

pub(crate) fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = alloc::vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_per_level() {
        for level in 0..4 {
            let s = Icosphere::new(level);
            assert_eq!(s.vertices.len(), Icosphere::vertex_count_for_level(level));
            assert_eq!(s.faces.len(), 20 * 4usize.pow(level));
            // Euler: V - E + F = 2
            let e = s.edges().len();
            assert_eq!(s.vertices.len() + s.faces.len(), e + 2);
        }
        assert_eq!(Icosphere::new(3).vertices.len(), 642);
    }

    #[test]
    fn vertices_on_unit_sphere_and_faces_outward() {
        let s = Icosphere::new(2);
        for v in &s.vertices {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        for &[a, b, c] in &s.faces {
            let (va, vb, vc) = (s.vertices[a], s.vertices[b], s.vertices[c]);
            let n = (vb - va).cross(vc - va);
            assert!(n.dot(va + vb + vc) > 0.0);
        }
    }

    #[test]
    fn degree_five_or_six() {
        let s = Icosphere::new(3);
        let adj = s.neighbors();
        let fives = adj.iter().filter(|n| n.len() == 5).count();
        assert_eq!(fives, 12);
        assert!(adj.iter().all(|n| n.len() == 5 || n.len() == 6));
    }
}
