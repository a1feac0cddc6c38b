//! Brute-force oracles: nearest sites by exhaustive search, grid sampling,
//! linear-scan box queries and certificates for computed graphs.
//!
//! Nothing here uses the subdivision or the hierarchies; point location is an
//! independent ray-crossing test along a random rational direction.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bvh::RectDecomposition;
use crate::geometry::{format_scalar, half, int, ratio, Aabb, Point, Scalar};
use crate::polygon::{self, Location, P2};
use crate::reconstruction::VoronoiGraph;
use crate::shape::{OrthogonalShape, Site, SiteGeometry};
use crate::subdivision::SubdivisionTree;

/// Does the closed 2D box meet the closed rectilinear polygon?
fn box_meets_polygon(b: &Aabb, outline: &[P2]) -> bool {
    let inside = |p: &P2| b.min.0[0] <= p[0] && p[0] <= b.max.0[0] && b.min.0[1] <= p[1] && p[1] <= b.max.0[1];
    if outline.iter().any(inside) {
        return true;
    }
    let corner = [b.min.0[0].clone(), b.min.0[1].clone()];
    if polygon::locate(&corner, std::slice::from_ref(&outline.to_vec())) != Location::Outside {
        return true;
    }
    polygon::edges(outline).any(|(p, q)| {
        (0..2).all(|i| {
            let (lo, hi) = if p[i] <= q[i] { (&p[i], &q[i]) } else { (&q[i], &p[i]) };
            *lo <= b.max.0[i] && b.min.0[i] <= *hi
        })
    })
}

fn oracle_in_zone(p: &Point, s: &Site) -> bool {
    let gap = (p.coord(s.axis()) - s.offset()).abs();
    let q = p.drop_axis(s.axis());
    match &s.geometry {
        SiteGeometry::Segment { lo, hi } => &q[0] - &gap <= *hi && *lo <= &q[0] + &gap,
        SiteGeometry::Facet(f) => box_meets_polygon(&Aabb::around(&q, &gap), &f.outline),
    }
}

/// Restricted distance computed without the site hierarchies.
pub fn oracle_distance(p: &Point, s: &Site) -> Option<Scalar> {
    let signed = (p.coord(s.axis()) - s.offset()) * int(s.interior_sign as i64);
    (!signed.is_negative() && oracle_in_zone(p, s)).then_some(signed)
}

fn on_site(p: &Point, s: &Site) -> bool {
    if p.coord(s.axis()) != s.offset() {
        return false;
    }
    let q = p.drop_axis(s.axis());
    match &s.geometry {
        SiteGeometry::Segment { lo, hi } => *lo <= q[0] && q[0] <= *hi,
        SiteGeometry::Facet(f) => {
            polygon::locate(&[q[0].clone(), q[1].clone()], std::slice::from_ref(&f.outline)) != Location::Outside
        }
    }
}

/// Point-in-shape by counting crossings along a random rational ray; the
/// direction is redrawn whenever the ray meets the boundary degenerately.
pub fn ray_crossing_inside(p: &Point, shape: &OrthogonalShape) -> bool {
    if shape.sites.iter().any(|s| on_site(p, s)) {
        return true;
    }
    let d = shape.dimension;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    'draw: loop {
        let dir: Vec<Scalar> = (0..d)
            .map(|_| {
                let n: i64 = rng.gen_range(1..=997);
                let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
                ratio(sign * n, rng.gen_range(1..=991))
            })
            .collect();
        let mut crossings = 0usize;
        for s in &shape.sites {
            let k = s.axis();
            let ahead = s.offset() - p.coord(k);
            if ahead.is_zero() || ahead.is_positive() != dir[k].is_positive() {
                continue;
            }
            let t = ahead / &dir[k];
            let hit: Vec<Scalar> = (0..d).filter(|&g| g != k).map(|g| p.coord(g) + &t * &dir[g]).collect();
            match &s.geometry {
                SiteGeometry::Segment { lo, hi } => {
                    if hit[0] == *lo || hit[0] == *hi {
                        continue 'draw;
                    }
                    if *lo < hit[0] && hit[0] < *hi {
                        crossings += 1;
                    }
                }
                SiteGeometry::Facet(f) => {
                    match polygon::locate(&[hit[0].clone(), hit[1].clone()], std::slice::from_ref(&f.outline)) {
                        Location::Boundary => continue 'draw,
                        Location::Inside => crossings += 1,
                        Location::Outside => {}
                    }
                }
            }
        }
        return crossings % 2 == 1;
    }
}

/// Sites nearest to `p` under the restricted distance, over all sites, with
/// same-hull ties resolved towards the higher priority; empty outside.
pub fn brute_nearest(p: &Point, shape: &OrthogonalShape) -> Vec<usize> {
    if !ray_crossing_inside(p, shape) {
        return Vec::new();
    }
    brute_argmin(p, shape).0
}

/// Argmin set (priority-pruned) and minimum of the restricted distance.
pub fn brute_argmin(p: &Point, shape: &OrthogonalShape) -> (Vec<usize>, Option<Scalar>) {
    // The restricted distance equals the signed gap whenever finite, so
    // scanning in gap order lets the zone test stop at the first larger gap.
    let mut order: Vec<(Scalar, usize)> = shape
        .sites
        .iter()
        .map(|s| {
            let gap = p.coord(s.axis()) - s.offset();
            (if s.interior_sign > 0 { gap } else { -gap }, s.id)
        })
        .filter(|(g, _)| !g.is_negative())
        .collect();
    order.sort();
    let mut best: Option<Scalar> = None;
    let mut set = Vec::new();
    for (gap, id) in order {
        if best.as_ref().is_some_and(|b| gap > *b) {
            break;
        }
        if oracle_in_zone(p, &shape.sites[id]) {
            best = Some(gap);
            set.push(id);
        }
    }
    set.sort_unstable();
    let all = set.clone();
    set.retain(|&a| {
        !all.iter().any(|&b| shape.sites[b].hull == shape.sites[a].hull && shape.sites[b].priority > shape.sites[a].priority)
    });
    (set, best)
}

#[derive(Debug, Clone)]
pub struct GridSample {
    pub resolution: usize,
    pub bounds: Aabb,
    pub points: Vec<Point>,
    pub labels: Vec<Vec<usize>>,
}

/// Lattice points `min + (i/k)·extent` of a box, in row-major order.
pub fn lattice(bounds: &Aabb, k: usize) -> Vec<Point> {
    let d = bounds.dim();
    let total = (k + 1).pow(d as u32);
    (0..total)
        .map(|mut idx| {
            let mut c = Vec::with_capacity(d);
            for g in 0..d {
                let i = idx % (k + 1);
                idx /= k + 1;
                let ext = &bounds.max.0[g] - &bounds.min.0[g];
                c.push(&bounds.min.0[g] + ext * ratio(i as i64, k as i64));
            }
            Point(c)
        })
        .collect()
}

pub fn sample_grid(shape: &OrthogonalShape, k: usize) -> GridSample {
    let bounds = shape.root_box.to_aabb();
    let points = lattice(&bounds, k.max(2));
    let labels = points.iter().map(|p| brute_nearest(p, shape)).collect();
    GridSample { resolution: k.max(2), bounds, points, labels }
}

/// Linear scan over the rectangles of a decomposition (closed overlap).
pub fn naive_box_scan(dec: &RectDecomposition, q: &Aabb) -> Vec<usize> {
    dec.rects.iter().enumerate().filter(|(_, r)| r.overlaps(q, false)).map(|(i, _)| i).collect()
}

/// Checks every node and edge midpoint of a graph against the oracle:
/// labels must be exactly minimal and no site may be strictly closer.
pub fn certify_graph(g: &VoronoiGraph, shape: &OrthogonalShape) -> Vec<String> {
    let mut bad = Vec::new();
    // returns the oracle's nearest set at `p`
    let check = |p: &Point, labels: &[usize], what: &str, bad: &mut Vec<String>| -> Vec<usize> {
        if !ray_crossing_inside(p, shape) {
            bad.push(format!("{what} at {p:?} lies outside the shape"));
            return Vec::new();
        }
        let (nearest, best) = brute_argmin(p, shape);
        let Some(best) = best else {
            bad.push(format!("{what} at {p:?}: no finite distance"));
            return nearest;
        };
        for &l in labels {
            match oracle_distance(p, &shape.sites[l]) {
                Some(d) if d == best => {}
                Some(d) => bad.push(format!(
                    "{what} at {p:?}: label {l} at distance {} but minimum is {}",
                    format_scalar(&d),
                    format_scalar(&best)
                )),
                None => bad.push(format!("{what} at {p:?}: label {l} has infinite distance")),
            }
        }
        nearest
    };
    for n in &g.nodes {
        if n.labels.len() < g.dimension - 1 {
            bad.push(format!("node {} has only {} labels", n.id, n.labels.len()));
        }
        check(&n.position, &n.labels, &format!("node {}", n.id), &mut bad);
    }
    for &(a, b) in &g.edges {
        let (na, nb) = (&g.nodes[a], &g.nodes[b]);
        let shared: Vec<usize> = na.labels.iter().copied().filter(|l| nb.labels.contains(l)).collect();
        if shared.is_empty() {
            bad.push(format!("edge {a}-{b} joins nodes without common labels"));
            continue;
        }
        let mid = na.position.midpoint(&nb.position);
        let at_mid = check(&mid, &shared, &format!("edge {a}-{b} midpoint"), &mut bad);
        if at_mid.len() < g.dimension {
            bad.push(format!("edge {a}-{b} midpoint {mid:?} is nearest to only {:?}", at_mid));
        }
    }
    bad
}

/// Is `p` on the closed segment `[a, b]`?
pub fn on_segment(p: &Point, a: &Point, b: &Point) -> bool {
    let d = p.dim();
    // p = a + u (b − a) for a single u ∈ [0, 1]
    let mut u: Option<Scalar> = None;
    for g in 0..d {
        let dir = b.coord(g) - a.coord(g);
        let off = p.coord(g) - a.coord(g);
        if dir.is_zero() {
            if !off.is_zero() {
                return false;
            }
            continue;
        }
        let v = off / dir;
        match &u {
            Some(w) if *w != v => return false,
            _ => u = Some(v),
        }
    }
    match u {
        Some(v) => !v.is_negative() && v <= int(1),
        None => true,
    }
}

/// Grid agreement between the oracle and the leaf-level diagram. Samples
/// with at least d+1 labels must lie on a piece of a containing leaf; samples
/// with one label must lie on none.
pub fn grid_check(shape: &OrthogonalShape, tree: &SubdivisionTree, g: &VoronoiGraph, k: usize) -> Vec<String> {
    let d = shape.dimension;
    let mut by_leaf: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (i, p) in g.pieces.iter().enumerate() {
        by_leaf.entry(p.leaf).or_default().push(i);
    }
    let bounds = shape.root_box.to_aabb();
    let mut bad = Vec::new();
    for p in lattice(&bounds, k) {
        let labels = brute_nearest(&p, shape);
        if labels.is_empty() || (labels.len() > 1 && labels.len() <= d) {
            continue;
        }
        let leaves = tree.leaves_containing(&p);
        let on_diagram = leaves.iter().any(|leaf| {
            by_leaf.get(leaf).is_some_and(|ps| ps.iter().any(|&i| on_segment(&p, &g.pieces[i].from, &g.pieces[i].to)))
        });
        if labels.len() > d && !on_diagram {
            bad.push(format!("sample {p:?} with labels {labels:?} is not on the diagram of leaves {leaves:?}"));
        }
        if labels.len() == 1 && on_diagram {
            bad.push(format!("sample {p:?} with single label {labels:?} lies on the diagram"));
        }
    }
    bad
}

/// Every site whose closed region meets a leaf (sampled on a small lattice
/// of the leaf) must be active in that leaf.
pub fn active_set_soundness(shape: &OrthogonalShape, tree: &SubdivisionTree, per_leaf: usize) -> Vec<String> {
    let mut bad = Vec::new();
    for (id, c) in tree.leaves() {
        for p in lattice(&c.bbox.to_aabb(), per_leaf) {
            for l in brute_nearest(&p, shape) {
                if !c.active.contains(&l) {
                    bad.push(format!("leaf {id}: site {l} is nearest at {p:?} but not active"));
                }
            }
        }
    }
    bad
}

/// Midpoint helper shared by tests.
pub fn center_of(b: &Aabb) -> Point {
    Point(b.min.0.iter().zip(&b.max.0).map(|(a, c)| (a + c) * half()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::parse_shape_str;

    #[test]
    fn nearest_examples() {
        let sq = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        assert_eq!(brute_nearest(&Point(vec![half(), half()]), &sq), vec![0, 1, 2, 3]);
        assert_eq!(brute_nearest(&Point(vec![half(), ratio(1, 4)]), &sq), vec![0]);
        assert!(brute_nearest(&Point::from_ints(&[2, 2]), &sq).is_empty());
        let grid = sample_grid(&sq, 2);
        assert_eq!(grid.points.len(), 9);
        assert_eq!(grid.labels[4].len(), 4);
    }

    #[test]
    fn ray_crossing_handles_holes() {
        let s = parse_shape_str(
            r#"{"dimension":2,"outer":[[0,0],[4,0],[4,4],[0,4]],"holes":[[[1,1],[1,3],[3,3],[3,1]]]}"#,
        )
        .unwrap();
        assert!(ray_crossing_inside(&Point(vec![half(), int(2)]), &s));
        assert!(!ray_crossing_inside(&Point::from_ints(&[2, 2]), &s));
        assert!(ray_crossing_inside(&Point::from_ints(&[1, 2]), &s));
    }

    #[test]
    fn box_scan_edge_cases() {
        let dec = crate::bvh::decompose(&[], 0);
        let q = Aabb::new(Point::from_ints(&[0, 0]), Point::from_ints(&[1, 1]));
        assert!(naive_box_scan(&dec, &q).is_empty());
    }
}
