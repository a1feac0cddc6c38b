use num_traits::Zero;
use proptest::prelude::*;

use orthovoronoi::generators::{polygon, polyhedron};
use orthovoronoi::geometry::{ratio, Aabb, Point, Scalar};
use orthovoronoi::pipeline::compute;
use orthovoronoi::polygon::{locate, region_area, Location};
use orthovoronoi::predicates::{bvh_locate, locate_point, restricted_distance};
use orthovoronoi::reconstruction::contract;
use orthovoronoi::shape::OrthogonalShape;
use orthovoronoi::subdivision::{label_set, SubdivisionConfig};
use orthovoronoi::verification::{brute_argmin, naive_box_scan, oracle_distance, ray_crossing_inside};

fn shape_2d(seed: u64, holes: usize) -> OrthogonalShape {
    polygon(seed, 24, holes).unwrap()
}

/// Point of the root box (slightly enlarged) at fractions `t / 1000`.
fn at(shape: &OrthogonalShape, t: &[i64]) -> Point {
    let b = shape.root_box.to_aabb();
    Point(
        t.iter()
            .enumerate()
            .map(|(g, &t)| &b.min.0[g] + (&b.max.0[g] - &b.min.0[g]) * ratio(t, 1000))
            .collect(),
    )
}

/// Snap every other coordinate to a multiple of 1/8 of the box so that
/// points on edges, corners and bisectors are drawn often.
fn fractions(d: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(prop_oneof![-50i64..1050, (0i64..=8).prop_map(|k| k * 125)], d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn point_location_agrees_2d(seed in 1u64..200, holes in 0usize..3, t in fractions(2)) {
        let s = shape_2d(seed, holes);
        let p = at(&s, &t);
        let truth = ray_crossing_inside(&p, &s);
        let q = [p.coord(0).clone(), p.coord(1).clone()];
        prop_assert_eq!(locate(&q, &s.contours) != Location::Outside, truth);
        prop_assert_eq!(locate_point(&p, &s), truth);
        prop_assert_eq!(bvh_locate(&p, &s), Some(truth));
    }

    #[test]
    fn distances_match_oracle_2d(seed in 1u64..200, holes in 0usize..3, t in fractions(2)) {
        let s = shape_2d(seed, holes);
        let p = at(&s, &t);
        for site in &s.sites {
            prop_assert_eq!(restricted_distance(&p, site), oracle_distance(&p, site));
        }
        if ray_crossing_inside(&p, &s) {
            let all: Vec<usize> = (0..s.sites.len()).collect();
            let (labels, best) = label_set(&p, true, &all, &s.sites).unwrap();
            prop_assert_eq!((labels, best), brute_argmin(&p, &s));
        }
    }

    #[test]
    fn decomposition_tiles_the_polygon(seed in 1u64..200, holes in 0usize..3) {
        let s = shape_2d(seed, holes);
        let dec = s.decomposition.as_ref().unwrap();
        prop_assert_eq!(dec.area(), region_area(&s.contours));
        for (i, a) in dec.rects.iter().enumerate() {
            prop_assert!(a.volume() > Scalar::zero());
            for b in &dec.rects[i + 1..] {
                prop_assert!(!a.overlaps(b, true));
            }
        }
    }

    #[test]
    fn box_queries_match_scan(seed in 1u64..200, lo in fractions(2), hi in fractions(2)) {
        let s = shape_2d(seed, (seed % 3) as usize);
        let (a, b) = (at(&s, &lo), at(&s, &hi));
        let min = Point((0..2).map(|g| a.coord(g).min(b.coord(g)).clone()).collect());
        let max = Point((0..2).map(|g| a.coord(g).max(b.coord(g)).clone()).collect());
        let q = Aabb::new(min, max);
        let dec = s.decomposition.as_ref().unwrap();
        prop_assert_eq!(s.bvh.as_ref().unwrap().box_query(&q), naive_box_scan(dec, &q));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn distances_and_location_match_oracle_3d(seed in 1u64..60, t in fractions(3)) {
        let s = polyhedron(seed, 12).unwrap();
        let p = at(&s, &t);
        prop_assert_eq!(locate_point(&p, &s), ray_crossing_inside(&p, &s));
        for site in &s.sites {
            prop_assert_eq!(restricted_distance(&p, site), oracle_distance(&p, site));
        }
    }

    #[test]
    fn contraction_keeps_vertices_and_topology(seed in 1u64..100, holes in 0usize..3) {
        let s = polygon(seed, 16, holes).unwrap();
        let c = compute(&s, &SubdivisionConfig::default(), false, None).unwrap();
        let g = &c.unit_graph;
        let h = contract(g);
        let pos = |g: &orthovoronoi::reconstruction::VoronoiGraph| {
            let mut v: Vec<Point> = g.vertex_nodes().map(|n| n.position.clone()).collect();
            v.sort();
            v
        };
        prop_assert_eq!(pos(g), pos(&h));
        prop_assert_eq!(h.component_count(), g.component_count());
        prop_assert_eq!(h.cycle_rank(), g.cycle_rank());
        prop_assert_eq!(g.cycle_rank(), holes);
        prop_assert!(h.nodes.iter().all(|n| n.kind == orthovoronoi::reconstruction::NodeKind::Vertex || h.degree(n.id) != 2));
    }
}
