//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p templatecut --test acceptance -- --nocapture`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rand_core::RngCore;
use rand_pcg::Pcg64;

use templatecut::cli::rebuild_network;
use templatecut::phantom::{make_phantom, PhantomKind, PhantomSpec};
use templatecut_core::cost::{node_cost, CostParams};
use templatecut_core::icosphere::Icosphere;
use templatecut_core::maxflow::brute_force_min_cut;
use templatecut_core::{
    align_shapes, cast_rays, dice, estimate_delta, fit_pca, max_flow, segment, voxelize, Arc, Contour, Dim, FlowNetwork,
    Grid, Mask, RaySampling, Rotation, ScalarField, SegmentConfig, SegmentationResult, TemplateShape, Vec3,
};

type Outcome = (bool, String);

fn disk(size: usize, radius: f64, noise: f64, seed: u64) -> (ScalarField, Mask, Vec3) {
    let mut s = PhantomSpec::new(PhantomKind::Disk);
    s.size = [size, size, 1];
    s.radius = radius;
    s.noise = noise;
    s.seed = seed;
    let (f, m) = make_phantom(&s).unwrap();
    (f, m, s.center_world())
}

fn ellipse(size: usize, a: f64, b: f64, rot: f64, noise: f64, seed: u64) -> (ScalarField, Mask, Vec3) {
    let mut s = PhantomSpec::new(PhantomKind::Ellipse);
    s.size = [size, size, 1];
    s.axes = [a, b, 1.0];
    s.rotation = rot;
    s.noise = noise;
    s.seed = seed;
    let (f, m) = make_phantom(&s).unwrap();
    (f, m, s.center_world())
}

fn cfg(rays: usize, nodes: usize, delta: usize) -> SegmentConfig {
    SegmentConfig {
        sampling: Some(RaySampling::Planar(rays)),
        nodes_per_ray: Some(nodes),
        delta,
        ..SegmentConfig::default()
    }
}

fn random_network(rng: &mut Pcg64) -> FlowNetwork {
    let inner = 1 + (rng.next_u64() % 12) as usize;
    let n = inner + 2;
    let (s, t) = (inner, inner + 1);
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || v == s || u == t {
                continue;
            }
            if rng.next_u64() % 100 < 35 {
                arcs.push(Arc::finite(u, v, (rng.next_u64() % 11) as f64));
            }
        }
    }
    FlowNetwork::new(n, s, t, arcs).unwrap()
}

fn min_cut_oracle() -> Outcome {
    let mut rng = Pcg64::new(0x00ac_ce97, 0x0a02_bdbf_7bb3_c0a7_ac28_fa16_a64a_bf96);
    let started = Instant::now();
    let mut mismatches = 0;
    for _ in 0..1000 {
        let net = random_network(&mut rng);
        let fast = max_flow(&net).unwrap();
        let slow = brute_force_min_cut(&net).unwrap();
        if fast.max_flow_value != slow.max_flow_value || net.cut_capacity(&fast.source_side) != Some(fast.max_flow_value) {
            mismatches += 1;
        }
    }
    let elapsed = started.elapsed();
    (
        mismatches == 0 && elapsed < Duration::from_secs(10),
        format!("1000 graphs, {mismatches} mismatches, {:.2} s", elapsed.as_secs_f64()),
    )
}

// Phantom runs shared by the structure and telescoping checks.
fn phantom_runs() -> Vec<(ScalarField, TemplateShape, SegmentationResult)> {
    let mut out = Vec::new();
    for i in 0..20u64 {
        let delta = (i % 4) as usize;
        let noise = [0.0, 5.0, 10.0][(i % 3) as usize];
        let (field, _, c) = if i % 2 == 0 {
            disk(96, 18.0 + i as f64, noise, i)
        } else {
            ellipse(96, 30.0, 18.0, 15.0 * i as f64, noise, i)
        };
        let seed = c + Vec3::xy((i % 5) as f64 - 2.0, (i % 3) as f64 - 1.0);
        let template = if i % 2 == 0 { TemplateShape::circle(64) } else { TemplateShape::ellipse(64, 1.0, 0.6) };
        let r = segment(&field, &template, seed, &cfg(90, 60, delta)).unwrap();
        out.push((field, template, r));
    }
    out
}

fn closed_set_structure(runs: &[(ScalarField, TemplateShape, SegmentationResult)]) -> Outcome {
    let mut violations = 0;
    let mut checked = 0;
    for (field, template, r) in runs {
        // Prefix property on a fresh cut of the same network.
        let config = cfg(r.fan.len(), r.nodes_per_ray, r.delta);
        let net = rebuild_network(field, template, r.seed, &config).unwrap();
        let cut = templatecut_core::max_flow_with(&net, templatecut_core::CutSide::Maximal).unwrap();
        let p = r.nodes_per_ray;
        for ray in 0..r.fan.len() {
            let side = &cut.source_side[ray * p..(ray + 1) * p];
            let b = side.iter().rposition(|&x| x).map_or(-1, |x| x as isize);
            if side.iter().take((b + 1) as usize).any(|&x| !x) || b != r.boundary_index[ray] {
                violations += 1;
            }
        }
        for (a, b) in r.fan.neighbor_pairs() {
            checked += 1;
            if r.boundary_index[a].abs_diff(r.boundary_index[b]) > r.delta {
                violations += 1;
            }
        }
    }
    (violations == 0, format!("{} runs, {checked} neighbour pairs, {violations} violations", runs.len()))
}

fn telescoping(runs: &[(ScalarField, TemplateShape, SegmentationResult)]) -> Outcome {
    let mut worst: f64 = 0.0;
    for (field, _, r) in runs {
        let params = CostParams { avg_window_d: 4.0 * field.grid.min_spacing(), avg_value: Some(r.avg_value) };
        let mut sum = 0.0;
        for (ray, &b) in r.boundary_index.iter().enumerate() {
            if b >= 0 {
                sum += node_cost(field, &params, r.node_position(ray, b as usize)).unwrap();
            }
        }
        worst = worst.max((sum - r.cut_value).abs());
    }
    (worst <= 1e-6, format!("{} runs, max |cut - sum c(r,b_r)| = {worst:.3e}", runs.len()))
}

fn template_exactness() -> Outcome {
    let (arms, inner, scale, factor) = (6, 0.7, 40.0, 1.3);
    let mut s = PhantomSpec::new(PhantomKind::Star);
    s.size = [160, 160, 1];
    s.arms = arms;
    s.inner = inner;
    s.radius = factor * scale;
    let (field, _) = make_phantom(&s).unwrap();
    let mut config = cfg(360, 20, 0);
    config.template_scale = Some(scale);
    let r = segment(&field, &TemplateShape::star(arms, inner), s.center_world(), &config).unwrap();
    let (lo, hi) = r.boundary_range();
    let step = config.scale_max / 20.0;
    let recovered = (hi + 1) as f64 * step;
    let ok = lo == hi && (recovered - factor).abs() <= step + 1e-12;
    (ok, format!("spread {} indices, recovered scale {recovered:.2} (node spacing {step:.2})", hi - lo))
}

fn scale_invariance() -> Outcome {
    let config = cfg(360, 200, 1);
    let mut dscs = Vec::new();
    for radius in [30.0, 45.0] {
        let (f, truth, c) = disk(160, radius, 0.0, 0);
        let r = segment(&f, &TemplateShape::circle(64), c, &config).unwrap();
        dscs.push(dice(&r.mask, &truth).unwrap());
    }
    let ok = dscs.iter().all(|&d| d >= 0.95) && (dscs[0] - dscs[1]).abs() < 0.03;
    (ok, format!("DSC 1.0x = {:.4}, 1.5x = {:.4}", dscs[0], dscs[1]))
}

fn camouflage() -> Outcome {
    let mut s = PhantomSpec::new(PhantomKind::OccludedEllipse);
    s.size = [128, 128, 1];
    s.axes = [40.0, 25.0, 1.0];
    s.occlusion = 0.3;
    s.band = 3.0;
    let (f, truth) = make_phantom(&s).unwrap();
    let mut config = cfg(360, 200, 2);
    config.template_scale = Some(40.0);
    let r = segment(&f, &TemplateShape::ellipse(64, 1.0, 0.625), s.center_world(), &config).unwrap();
    let d = dice(&r.mask, &truth).unwrap();
    (d >= 0.90, format!("DSC {d:.4} with 30% of the arc hidden"))
}

fn off_center_seed() -> Outcome {
    let (f, truth, c) = disk(128, 30.0, 0.0, 0);
    let r = segment(&f, &TemplateShape::circle(64), c + Vec3::xy(9.0, 0.0), &cfg(360, 200, 1)).unwrap();
    let d = dice(&r.mask, &truth).unwrap();
    (d >= 0.90, format!("seed 9 voxels (30% of r) off center, DSC {d:.4}"))
}

fn delta_monotonicity() -> Outcome {
    let mut violations = 0;
    for i in 0..10u64 {
        let (f, _, c) = if i % 2 == 0 {
            disk(96, 20.0 + 2.0 * i as f64, 8.0, 100 + i)
        } else {
            ellipse(96, 32.0, 16.0, 20.0 * i as f64, 8.0, 100 + i)
        };
        let seed = c + Vec3::xy(i as f64 * 0.7, -(i as f64) * 0.4);
        let mut prev = f64::INFINITY;
        for delta in 0..=3 {
            let v = segment(&f, &TemplateShape::circle(64), seed, &cfg(120, 80, delta)).unwrap().cut_value;
            if v > prev + 1e-9 * prev.abs().max(1.0) {
                violations += 1;
            }
            prev = v;
        }
    }
    (violations == 0, format!("10 configs x delta 0..3, {violations} violations"))
}

fn runtime() -> Outcome {
    let (f2, _, c2) = disk(256, 60.0, 5.0, 1);
    let t = Instant::now();
    segment(&f2, &TemplateShape::circle(64), c2, &cfg(360, 200, 1)).unwrap();
    let t2 = t.elapsed();

    let mut s = PhantomSpec::new(PhantomKind::Sphere);
    s.size = [128, 128, 128];
    s.radius = 30.0;
    let (f3, _) = make_phantom(&s).unwrap();
    let config = SegmentConfig {
        sampling: Some(RaySampling::Icosphere(3)),
        nodes_per_ray: Some(150),
        ..SegmentConfig::default()
    };
    let t = Instant::now();
    segment(&f3, &TemplateShape::icosphere(3), s.center_world(), &config).unwrap();
    let t3 = t.elapsed();
    let ok = t2 < Duration::from_secs(2) && t3 < Duration::from_secs(10);
    (ok, format!("2D 360x200 {:.0} ms, 3D level 3 x 150 on 128^3 {:.0} ms", t2.as_secs_f64() * 1e3, t3.as_secs_f64() * 1e3))
}

fn dsc_suite() -> Outcome {
    let g = Grid::planar(8, 8);
    let mut a = Mask::empty(g);
    let mut b = Mask::empty(g);
    for i in 0..4 {
        a.set(i, 0, 0, true);
    }
    for i in 4..8 {
        b.set(i, 0, 0, true);
    }
    let mut half = Mask::empty(g);
    for i in 0..2 {
        half.set(i, 0, 0, true);
    }
    let identity = dice(&a, &a).unwrap();
    let disjoint = dice(&a, &b).unwrap();
    let contained = dice(&a, &half).unwrap();
    let ok = identity == 1.0 && disjoint == 0.0 && contained == 2.0 / 3.0;
    (ok, format!("identity {identity}, disjoint {disjoint}, half-containment {contained}"))
}

fn noisy_ellipse(n: usize, a: f64, b: f64, k: u64) -> Vec<Vec3> {
    (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            let wobble = 0.02 * (((i as u64 * 31 + k * 17) % 13) as f64 - 6.0) / 6.0;
            Vec3::xy((a + wobble) * t.cos(), (b - wobble) * t.sin())
        })
        .collect()
}

fn pca_suite() -> Outcome {
    let shapes: Vec<Vec<Vec3>> = (0..8).map(|k| noisy_ellipse(32, 1.0 + 0.05 * k as f64, 0.6, k)).collect();
    let aligned = align_shapes(&shapes, Dim::Two).unwrap();
    let model = fit_pca(&aligned, Dim::Two).unwrap();
    let mut worst: f64 = 0.0;
    for s in &aligned {
        let flat = templatecut_core::shape_model::flatten(s, Dim::Two);
        let back = model.synthesize(&model.project(&flat).unwrap()).unwrap();
        for (x, y) in flat.iter().zip(&back) {
            worst = worst.max((x - y).abs());
        }
    }

    let same = vec![shapes[0].clone(); 5];
    let same_model = fit_pca(&align_shapes(&same, Dim::Two).unwrap(), Dim::Two).unwrap();
    let mean = templatecut_core::normalize_template(Dim::Two, &same_model.mean_points(), &[]).unwrap();
    let fan = cast_rays(&mean, Vec3::ZERO, RaySampling::Planar(360), &Rotation::IDENTITY).unwrap();
    let delta = estimate_delta(&same_model, &fan, 200, 2.0, 2.0).unwrap();

    let two = fit_pca(&align_shapes(&shapes[..2], Dim::Two).unwrap(), Dim::Two).unwrap();
    let ok = worst <= 1e-9 && delta == 0 && two.mode_count() == 1;
    (ok, format!("reconstruction error {worst:.2e}, identical-shape delta {delta}, 2-shape modes {}", two.mode_count()))
}

fn voxelization() -> Outcome {
    let grid = Grid::cubic(32, 32, 32);
    let ico = Icosphere::new(4);
    let c = Vec3::new(15.5, 15.5, 15.5);
    let vertices: Vec<Vec3> = ico.vertices.iter().map(|&v| c + v * 10.0).collect();
    let sphere = voxelize(&Contour::Mesh { vertices, faces: ico.faces.clone() }, &grid).unwrap();
    let exact = 4.0 / 3.0 * PI * 1000.0;
    let rel = (sphere.count() as f64 - exact).abs() / exact;

    let square = Contour::Polygon(vec![
        Vec3::xy(2.5, 2.5),
        Vec3::xy(12.5, 2.5),
        Vec3::xy(12.5, 12.5),
        Vec3::xy(2.5, 12.5),
    ]);
    let sq = voxelize(&square, &Grid::planar(16, 16)).unwrap();
    let mut square_exact = sq.count() == 100;
    for j in 0..16 {
        for i in 0..16 {
            square_exact &= sq.get(i, j, 0) == ((3..=12).contains(&i) && (3..=12).contains(&j));
        }
    }
    (
        rel <= 0.02 && square_exact,
        format!("sphere r=10: {} voxels vs {exact:.1} ({:.2}%), square exact: {square_exact}", sphere.count(), rel * 100.0),
    )
}

#[test]
fn acceptance() {
    let runs = phantom_runs();
    let results: Vec<(&str, Outcome)> = vec![
        ("min-cut oracle equivalence", min_cut_oracle()),
        ("closed-set structure", closed_set_structure(&runs)),
        ("telescoping cut value", telescoping(&runs)),
        ("template exactness at delta 0", template_exactness()),
        ("scale invariance", scale_invariance()),
        ("camouflage robustness", camouflage()),
        ("off-center seed", off_center_seed()),
        ("delta monotonicity", delta_monotonicity()),
        ("runtime", runtime()),
        ("DSC unit suite", dsc_suite()),
        ("PCA suite", pca_suite()),
        ("voxelization", voxelization()),
    ];
    println!();
    let mut failed = 0;
    for (name, (ok, detail)) in &results {
        println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
