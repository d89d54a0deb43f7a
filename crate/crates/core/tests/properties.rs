use proptest::prelude::*;
use templatecut_core::field::{Grid, Mask, ScalarField};
use templatecut_core::graph::RayGraph;
use templatecut_core::intersect::ray_triangle_intersect;
use templatecut_core::maxflow::{brute_force_min_cut, max_flow, Arc, FlowNetwork};
use templatecut_core::rays::{cast_rays, ray_template_distance, RayFan, RaySampling};
use templatecut_core::shape_model::{align_shapes, estimate_delta, fit_pca, flatten};
use templatecut_core::template::{normalize_template, Dim, TemplateShape};
use templatecut_core::{cost, dice, Rotation, Vec3};

fn arb_network(max_inner: usize) -> impl Strategy<Value = FlowNetwork> {
    (1..=max_inner).prop_flat_map(|inner| {
        let n = inner + 2;
        prop::collection::vec((0..n, 0..n, 0u32..=10), 0..(4 * n)).prop_map(move |raw| {
            let arcs = raw
                .into_iter()
                .filter(|(a, b, _)| a != b)
                .map(|(a, b, c)| Arc::finite(a, b, c as f64))
                .collect();
            FlowNetwork::new(n, inner, inner + 1, arcs).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn max_flow_matches_brute_force(net in arb_network(12)) {
        let fast = max_flow(&net).unwrap();
        let slow = brute_force_min_cut(&net).unwrap();
        prop_assert_eq!(fast.max_flow_value, slow.max_flow_value);
        prop_assert_eq!(net.cut_capacity(&fast.source_side), Some(fast.max_flow_value));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_flow_permutation_invariant(net in arb_network(12), key in any::<u64>()) {
        let mut arcs = net.arcs.clone();
        // deterministic shuffle
        let mut state = key | 1;
        for i in (1..arcs.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            arcs.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let shuffled = FlowNetwork::new(net.node_count, net.source, net.sink, arcs).unwrap();
        prop_assert_eq!(max_flow(&net).unwrap().max_flow_value, max_flow(&shuffled).unwrap().max_flow_value);
    }

    #[test]
    fn rays_rotation_equivariant(angle in -3.2f64..3.2, ax in -1.0f64..1.0, ay in -1.0f64..1.0, az in 0.1f64..1.0) {
        // Rotating the template geometry and every ray direction by the same
        // rotation leaves the boundary distances unchanged.
        let ellipse = TemplateShape::ellipse(48, 1.0, 0.6);
        let r2 = Rotation::planar(angle);
        let turned: Vec<Vec3> = ellipse.vertices.iter().map(|&v| r2.apply(v)).collect();
        let turned = normalize_template(Dim::Two, &turned, &[]).unwrap();
        let fan = cast_rays(&ellipse, Vec3::ZERO, RaySampling::Planar(60), &Rotation::IDENTITY).unwrap();
        for (d, rho) in fan.directions.iter().zip(&fan.template_dist) {
            let (t, _) = ray_template_distance(&turned, r2.apply(*d)).unwrap();
            prop_assert!((t - rho).abs() < 1e-6);
        }
        let oriented = cast_rays(&ellipse, Vec3::ZERO, RaySampling::Planar(60), &r2).unwrap();
        prop_assert_eq!(&oriented.template_dist, &fan.template_dist);

        let blob: Vec<Vec3> = TemplateShape::icosphere(2)
            .vertices
            .iter()
            .map(|v| Vec3::new(v.x, 0.7 * v.y, 0.5 * v.z))
            .collect();
        let faces = TemplateShape::icosphere(2).faces;
        let blob_t = normalize_template(Dim::Three, &blob, &faces).unwrap();
        let r3 = Rotation::axis_angle(Vec3::new(ax, ay, az), angle);
        let turned: Vec<Vec3> = blob_t.vertices.iter().map(|&v| r3.apply(v)).collect();
        let turned = normalize_template(Dim::Three, &turned, &faces).unwrap();
        let fan = cast_rays(&blob_t, Vec3::ZERO, RaySampling::Icosphere(2), &Rotation::IDENTITY).unwrap();
        for (d, rho) in fan.directions.iter().zip(&fan.template_dist) {
            let (t, _) = ray_template_distance(&turned, r3.apply(*d)).unwrap();
            prop_assert!((t - rho).abs() < 1e-6);
        }
    }

    #[test]
    fn convex_templates_hit_once(a in 0.3f64..1.0, b in 0.3f64..1.0, sx in -0.2f64..0.2, sy in -0.2f64..0.2) {
        let t = TemplateShape::ellipse(40, a, b);
        let fan = cast_rays(&t, Vec3::xy(sx * a, sy * b), RaySampling::Planar(90), &Rotation::IDENTITY).unwrap();
        prop_assert_eq!(fan.multi_hit_rays, 0);
        prop_assert!(fan.template_dist.iter().all(|&d| d > 0.0));
    }

    #[test]
    fn node_cost_shift_invariant(shift in -500.0f64..500.0, seed_x in 3.0f64..12.0, seed_y in 3.0f64..12.0) {
        let grid = Grid::planar(16, 16);
        let values: Vec<f64> = (0..256).map(|i| ((i * 37) % 23) as f64).collect();
        let f = ScalarField::new(grid, values).unwrap();
        let g = f.shifted(shift);
        let seed = Vec3::xy(seed_x, seed_y);
        let mut pf = cost::CostParams::new(3.0);
        let mut pg = cost::CostParams::new(3.0);
        pf.estimate(&f, seed).unwrap();
        pg.estimate(&g, seed).unwrap();
        for q in [Vec3::xy(1.3, 2.7), Vec3::xy(10.0, 4.0), Vec3::xy(14.9, 0.1)] {
            let cf = cost::node_cost(&f, &pf, q).unwrap();
            let cg = cost::node_cost(&g, &pg, q).unwrap();
            prop_assert!(cf >= 0.0 && cg >= 0.0);
            prop_assert!((cf - cg).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_exact_at_voxel_centers(vals in prop::collection::vec(-1e3f64..1e3, 60), i in 0usize..5, j in 0usize..4, k in 0usize..3) {
        let grid = Grid::new(Dim::Three, [5, 4, 3], [0.7, 1.0, 2.5]).unwrap();
        let f = ScalarField::new(grid, vals).unwrap();
        prop_assert_eq!(f.sample(grid.voxel_center(i, j, k)), f.at(i, j, k));
    }

    #[test]
    fn dice_symmetric_and_crop_invariant(bits_a in prop::collection::vec(any::<bool>(), 36), bits_b in prop::collection::vec(any::<bool>(), 36)) {
        // 6x6 content embedded in a zero border of width 2
        let big = Grid::planar(10, 10);
        let small = Grid::planar(6, 6);
        let mut a = Mask::empty(big);
        let mut b = Mask::empty(big);
        for j in 0..6 {
            for i in 0..6 {
                a.set(i + 2, j + 2, 0, bits_a[j * 6 + i]);
                b.set(i + 2, j + 2, 0, bits_b[j * 6 + i]);
            }
        }
        let ca = Mask::new(small, bits_a).unwrap();
        let cb = Mask::new(small, bits_b).unwrap();
        let d = dice(&a, &b).unwrap();
        prop_assert_eq!(d, dice(&b, &a).unwrap());
        prop_assert_eq!(d, dice(&ca, &cb).unwrap());
        prop_assert!((0.0..=1.0).contains(&d));
    }
}

// Plane intersection followed by a barycentric inside test.
fn plane_oracle(o: Vec3, d: Vec3, v0: Vec3, v1: Vec3, v2: Vec3) -> Option<(f64, bool)> {
    let n = (v1 - v0).cross(v2 - v0);
    let denom = n.dot(d);
    if denom.abs() < 1e-9 * n.norm() * d.norm() {
        return None;
    }
    let t = n.dot(v0 - o) / denom;
    let p = o + d * t;
    let area = n.norm_squared();
    let l1 = (v2 - v1).cross(p - v1).dot(n) / area;
    let l2 = (v0 - v2).cross(p - v2).dot(n) / area;
    let l0 = 1.0 - l1 - l2;
    let margin = 1e-6;
    let inside = l0 > margin && l1 > margin && l2 > margin && t > margin;
    let outside = l0 < -margin || l1 < -margin || l2 < -margin || t < -margin;
    if inside {
        Some((t, true))
    } else if outside {
        Some((t, false))
    } else {
        None
    }
}

#[test]
fn triangle_intersection_matches_plane_oracle() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_pcg::Pcg64::seed_from_u64(0x5eed);
    let pt = |rng: &mut rand_pcg::Pcg64| Vec3::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
    let (mut checked, mut hits) = (0, 0);
    while checked < 10_000 {
        let (v0, v1, v2, o) = (pt(&mut rng), pt(&mut rng), pt(&mut rng), pt(&mut rng));
        // aim near the triangle half the time so hits are common
        let target = if checked % 2 == 0 { (v0 + v1 + v2) / 3.0 + pt(&mut rng) * 0.3 } else { pt(&mut rng) };
        let d = (target - o).normalized();
        let Some((t, inside)) = plane_oracle(o, d, v0, v1, v2) else { continue };
        checked += 1;
        let got = ray_triangle_intersect(o, d, v0, v1, v2);
        if inside {
            hits += 1;
            let h = got.expect("oracle reports a hit");
            assert!((h.t - t).abs() < 1e-9 * t.max(1.0), "t {} vs {}", h.t, t);
        } else {
            assert!(got.is_none());
        }
    }
    assert!(hits > 1000);
}

#[test]
fn graph_invariant_under_ray_relabeling() {
    let t = TemplateShape::icosphere(1);
    let fan = cast_rays(&t, Vec3::ZERO, RaySampling::Icosphere(1), &Rotation::IDENTITY).unwrap();
    let r = fan.len();
    // perm[old] = new
    let perm: Vec<usize> = (0..r).map(|i| (i * 17 + 5) % r).collect();
    let mut inv = vec![0; r];
    for (old, &new) in perm.iter().enumerate() {
        inv[new] = old;
    }
    let relabeled = RayFan {
        directions: inv.iter().map(|&o| fan.directions[o]).collect(),
        template_dist: inv.iter().map(|&o| fan.template_dist[o]).collect(),
        neighbors: inv
            .iter()
            .map(|&o| {
                let mut ns: Vec<usize> = fan.neighbors[o].iter().map(|&x| perm[x]).collect();
                ns.sort_unstable();
                ns
            })
            .collect(),
        faces: fan.faces.iter().map(|f| [perm[f[0]], perm[f[1]], perm[f[2]]]).collect(),
        ..fan.clone()
    };
    let p = 6;
    for delta in [0, 1, 3] {
        let g1 = RayGraph::new(&fan, p, 2.0, delta).unwrap();
        let g2 = RayGraph::new(&relabeled, p, 2.0, delta).unwrap();
        let map_node = |n: usize| if n >= r * p { n } else { perm[n / p] * p + n % p };
        let mut a: Vec<(usize, usize)> = g1.arcs.iter().map(|x| (map_node(x.from), map_node(x.to))).collect();
        let mut b: Vec<(usize, usize)> = g2.arcs.iter().map(|x| (x.from, x.to)).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        for n in 0..r * p {
            assert!(g1.node_pos[n].distance(g2.node_pos[map_node(n)]) < 1e-12);
        }
    }
}

fn noisy_ellipses(count: usize, seed: u64) -> Vec<Vec<Vec3>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_pcg::Pcg64::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = rng.gen_range(0.8..1.2);
            let b = rng.gen_range(0.4..0.7);
            let rot = Rotation::planar(rng.gen_range(-0.3..0.3));
            let off = Vec3::xy(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            (0..12)
                .map(|k| {
                    let th = k as f64 * std::f64::consts::TAU / 12.0;
                    rot.apply(Vec3::xy(a * th.cos(), b * th.sin())) + off
                })
                .collect()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn pca_reconstruction_and_variance(n in 3usize..9, seed in any::<u64>()) {
        let shapes = noisy_ellipses(n, seed);
        let aligned = align_shapes(&shapes, Dim::Two).unwrap();
        let model = fit_pca(&aligned, Dim::Two).unwrap();
        prop_assert_eq!(model.mode_count(), n - 1);
        for w in model.eigenvalues.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for (i, a) in model.modes.iter().enumerate() {
            for (j, b) in model.modes.iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                prop_assert!((d - expected).abs() < 1e-9);
            }
        }
        let mut trace = 0.0;
        for s in &aligned {
            let flat = flatten(s, Dim::Two);
            trace += flat.iter().zip(&model.mean).map(|(x, m)| (x - m) * (x - m)).sum::<f64>();
            let rec = model.synthesize(&model.project(&flat).unwrap()).unwrap();
            for (x, y) in rec.iter().zip(&flat) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
        trace /= (n - 1) as f64;
        prop_assert!((model.total_variance() - trace).abs() < 1e-9);

        let fan = cast_rays(&TemplateShape::ellipse(32, 1.0, 0.55), Vec3::ZERO, RaySampling::Planar(72), &Rotation::IDENTITY).unwrap();
        let mut prev = 0;
        for sigma in [0.0, 0.5, 1.0, 1.5, 2.0, 3.0] {
            let d = estimate_delta(&model, &fan, 100, 2.0, sigma).unwrap();
            prop_assert!(d >= prev);
            prev = d;
        }
    }
}
