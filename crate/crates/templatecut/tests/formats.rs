use proptest::prelude::*;

use templatecut::formats::{parse_contour, parse_dimacs, parse_template_points, write_contour, write_dimacs, write_template};
use templatecut::io::{encode_mask_inline, encode_mask_pgm, encode_pgm, encode_volume_inline, parse_field, parse_mask, ElemType};
use templatecut_core::{Arc, Contour, Dim, FlowNetwork, Grid, Mask, ScalarField, Vec3};

fn grid_strategy() -> impl Strategy<Value = Grid> {
    (1usize..9, 1usize..9, 1usize..5, prop::bool::ANY, 0.25f64..3.0).prop_map(|(nx, ny, nz, planar, sp)| {
        if planar {
            Grid::new(Dim::Two, [nx, ny, 1], [sp, sp * 0.5, 1.0]).unwrap()
        } else {
            Grid::new(Dim::Three, [nx, ny, nz + 1], [sp, 1.0, sp * 2.0]).unwrap()
        }
    })
}

proptest! {
    #[test]
    fn fields_round_trip(grid in grid_strategy(), wide in prop::bool::ANY, seed in any::<u64>()) {
        let elem = if wide { ElemType::U16Le } else { ElemType::U8 };
        let max = elem.max_value() as u64 + 1;
        let mut x = seed | 1;
        let values: Vec<f64> = (0..grid.len()).map(|_| {
            x ^= x << 13; x ^= x >> 7; x ^= x << 17;
            (x % max) as f64
        }).collect();
        let field = ScalarField::new(grid, values).unwrap();
        let bytes = match grid.dim {
            Dim::Two => encode_pgm(&field, elem).unwrap(),
            Dim::Three => encode_volume_inline(&field, elem).unwrap(),
        };
        let back = parse_field(&bytes).unwrap();
        prop_assert_eq!(back.values, field.values);
        prop_assert_eq!(back.grid.extents, grid.extents);
        if grid.dim == Dim::Three {
            prop_assert_eq!(back.grid.spacing, grid.spacing);
        }
    }

    #[test]
    fn masks_round_trip(grid in grid_strategy(), bits in prop::collection::vec(any::<bool>(), 512)) {
        let mask = Mask::new(grid, bits[..grid.len()].to_vec()).unwrap();
        let bytes = match grid.dim {
            Dim::Two => encode_mask_pgm(&mask),
            Dim::Three => encode_mask_inline(&mask),
        };
        let back = parse_mask(&bytes).unwrap();
        prop_assert_eq!(back.count(), mask.count());
        prop_assert!(back.grid.extents == grid.extents);
        for k in 0..grid.extents[2] {
            for j in 0..grid.extents[1] {
                for i in 0..grid.extents[0] {
                    prop_assert_eq!(back.get(i, j, k), mask.get(i, j, k));
                }
            }
        }
    }

    #[test]
    fn dimacs_round_trips(n in 1usize..10, raw in prop::collection::vec((0usize..12, 0usize..12, 0u32..20), 0..40)) {
        let nodes = n + 2;
        let (s, t) = (0, nodes - 1);
        let arcs: Vec<Arc> = raw.iter()
            .map(|&(a, b, c)| (a % nodes, b % nodes, c))
            .filter(|&(a, b, _)| a != b && b != s && a != t)
            .map(|(a, b, c)| if c == 19 { Arc::infinite(a, b) } else { Arc::finite(a, b, c as f64) })
            .collect();
        let net = FlowNetwork::new(nodes, s, t, arcs).unwrap();
        let back = parse_dimacs(&write_dimacs(&net)).unwrap();
        prop_assert_eq!(back.node_count, net.node_count);
        prop_assert_eq!((back.source, back.sink), (net.source, net.sink));
        prop_assert_eq!(back.arcs, net.arcs);
    }

    #[test]
    fn point_sets_round_trip(pts in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 3..30)) {
        let verts: Vec<Vec3> = pts.iter().map(|&(x, y)| Vec3::xy(x, y)).collect();
        let back = parse_template_points(&write_template(Dim::Two, &verts, &[])).unwrap();
        prop_assert_eq!(back.vertices, verts.clone());
        let c = Contour::Polygon(verts);
        prop_assert_eq!(parse_contour(&write_contour(&c)).unwrap(), c);
    }
}
