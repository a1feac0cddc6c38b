//! Rectangular decomposition of rectilinear polygons and the bounding volume
//! hierarchy built on top of it.
//!
//! The decomposition is driven by a kd-tree over the reflex vertices: every
//! split line passes through a reflex vertex, which removes the reflex angle
//! there. Once a region holds no unresolved reflex vertex, the polygon
//! restricted to it falls apart into interior-disjoint rectangles. The BVH
//! is the kd-tree read bottom-up, each node storing the bounding box of the
//! rectangles below it, so siblings only ever meet along their boundary.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::geometry::{Aabb, Point, Scalar};
use crate::polygon::{self, Location, P2};

/// Interior-disjoint rectangles whose union is the polygon.
#[derive(Debug, Clone)]
pub struct RectDecomposition {
    pub rects: Vec<Aabb>,
    /// Id of the shape or facet this decomposition came from.
    pub source: usize,
    pub reflex_count: usize,
    kd: Option<KdNode>,
}

#[derive(Debug, Clone)]
enum KdNode {
    Split {
        axis: usize,
        at: Scalar,
        lower: Box<KdNode>,
        upper: Box<KdNode>,
    },
    Region {
        rects: Vec<usize>,
    },
}

impl RectDecomposition {
    pub fn area(&self) -> Scalar {
        self.rects.iter().map(Aabb::volume).sum()
    }

    /// Number of kd-tree splits, i.e. reflex vertices used as split sites.
    pub fn split_count(&self) -> usize {
        fn walk(n: &KdNode) -> usize {
            match n {
                KdNode::Split { lower, upper, .. } => 1 + walk(lower) + walk(upper),
                KdNode::Region { .. } => 0,
            }
        }
        self.kd.as_ref().map_or(0, walk)
    }

    /// Number of split lines on the given axis together with their positions.
    pub fn splits(&self) -> Vec<(usize, Scalar)> {
        fn walk(n: &KdNode, out: &mut Vec<(usize, Scalar)>) {
            if let KdNode::Split { axis, at, lower, upper } = n {
                out.push((*axis, at.clone()));
                walk(lower, out);
                walk(upper, out);
            }
        }
        let mut out = Vec::new();
        if let Some(kd) = &self.kd {
            walk(kd, &mut out);
        }
        out
    }
}

fn bbox_of(contours: &[Vec<P2>]) -> Option<Aabb> {
    let mut pts = contours.iter().flatten();
    let first = pts.next()?;
    let mut min = first.clone();
    let mut max = first.clone();
    for p in pts {
        for i in 0..2 {
            if p[i] < min[i] {
                min[i] = p[i].clone();
            }
            if p[i] > max[i] {
                max[i] = p[i].clone();
            }
        }
    }
    Some(Aabb::new(Point(min.to_vec()), Point(max.to_vec())))
}

/// Decomposes a rectilinear polygon (outer contour plus optional holes, all
/// with the interior on the left) into rectangles.
pub fn decompose(contours: &[Vec<P2>], source: usize) -> RectDecomposition {
    let mut reflex: Vec<P2> = Vec::new();
    for c in contours {
        for i in polygon::reflex_indices(c) {
            reflex.push(c[i].clone());
        }
    }
    let reflex_count = reflex.len();
    let mut rects = Vec::new();
    let kd = bbox_of(contours).map(|bounds| split_region(contours, bounds, reflex, 0, &mut rects));
    RectDecomposition { rects, source, reflex_count, kd }
}

fn split_region(
    contours: &[Vec<P2>],
    region: Aabb,
    mut verts: Vec<P2>,
    depth: usize,
    rects: &mut Vec<Aabb>,
) -> KdNode {
    if verts.is_empty() {
        let start = rects.len();
        rects.extend(region_rectangles(contours, &region));
        return KdNode::Region { rects: (start..rects.len()).collect() };
    }
    // x first, alternating; the median vertex along the split axis
    let axis = depth % 2;
    verts.sort_by(|a, b| (&a[axis], &a[1 - axis]).cmp(&(&b[axis], &b[1 - axis])));
    let at = verts[verts.len() / 2][axis].clone();
    // vertices on the split line are resolved by it
    let (lower_verts, upper_verts): (Vec<P2>, Vec<P2>) =
        verts.into_iter().filter(|v| v[axis] != at).partition(|v| v[axis] < at);
    let mut lower_region = region.clone();
    lower_region.max.0[axis] = at.clone();
    let mut upper_region = region;
    upper_region.min.0[axis] = at.clone();
    let lower = split_region(contours, lower_region, lower_verts, depth + 1, rects);
    let upper = split_region(contours, upper_region, upper_verts, depth + 1, rects);
    KdNode::Split { axis, at, lower: Box::new(lower), upper: Box::new(upper) }
}

/// Rectangles of `polygon ∩ region` for a region free of unresolved reflex
/// vertices. Builds the arrangement of edges crossing the region, keeps the
/// inside cells and merges connected ones; each component is a rectangle.
fn region_rectangles(contours: &[Vec<P2>], region: &Aabb) -> Vec<Aabb> {
    let lo = |i: usize| &region.min.0[i];
    let hi = |i: usize| &region.max.0[i];
    let mut cuts: [BTreeSet<Scalar>; 2] = [BTreeSet::new(), BTreeSet::new()];
    for i in 0..2 {
        cuts[i].insert(lo(i).clone());
        cuts[i].insert(hi(i).clone());
    }
    for c in contours {
        for (a, b) in polygon::edges(c) {
            // a vertical edge (constant x) cuts along x, and vice versa
            let axis = if a[0] == b[0] { 0 } else { 1 };
            let other = 1 - axis;
            let (elo, ehi) = if a[other] <= b[other] { (&a[other], &b[other]) } else { (&b[other], &a[other]) };
            if a[axis] > *lo(axis) && a[axis] < *hi(axis) && elo < hi(other) && ehi > lo(other) {
                cuts[axis].insert(a[axis].clone());
            }
        }
    }
    let xs: Vec<Scalar> = cuts[0].iter().cloned().collect();
    let ys: Vec<Scalar> = cuts[1].iter().cloned().collect();
    if xs.len() < 2 || ys.len() < 2 {
        return Vec::new();
    }
    let (nx, ny) = (xs.len() - 1, ys.len() - 1);
    let two = Scalar::from_integer(2.into());
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let center = [(&xs[i] + &xs[i + 1]) / &two, (&ys[j] + &ys[j + 1]) / &two];
            inside[j * nx + i] = polygon::locate(&center, contours) == Location::Inside;
        }
    }
    // union-find over inside cells
    let mut parent: Vec<usize> = (0..nx * ny).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for j in 0..ny {
        for i in 0..nx {
            let id = j * nx + i;
            if !inside[id] {
                continue;
            }
            for nb in [(i + 1 < nx).then(|| id + 1), (j + 1 < ny).then(|| id + nx)].into_iter().flatten() {
                if inside[nb] {
                    let (ra, rb) = (find(&mut parent, id), find(&mut parent, nb));
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut components: Vec<(usize, Vec<usize>)> = Vec::new();
    for id in 0..nx * ny {
        if inside[id] {
            let root = find(&mut parent, id);
            match components.iter_mut().find(|(r, _)| *r == root) {
                Some((_, cells)) => cells.push(id),
                None => components.push((root, vec![id])),
            }
        }
    }
    let cell_box = |id: usize| {
        let (i, j) = (id % nx, id / nx);
        Aabb::new(
            Point(vec![xs[i].clone(), ys[j].clone()]),
            Point(vec![xs[i + 1].clone(), ys[j + 1].clone()]),
        )
    };
    let mut out = Vec::new();
    for (_, cells) in components {
        let hull = cells.iter().skip(1).fold(cell_box(cells[0]), |acc, &id| acc.union(&cell_box(id)));
        let area: Scalar = cells.iter().map(|&id| cell_box(id).volume()).sum();
        if area == hull.volume() {
            out.push(hull);
        } else {
            // not a rectangle: fall back to one rectangle per maximal row run
            let set: BTreeSet<usize> = cells.into_iter().collect();
            let mut done = BTreeSet::new();
            for &id in &set {
                if done.contains(&id) {
                    continue;
                }
                let mut end = id;
                while (end + 1) % nx != 0 && set.contains(&(end + 1)) {
                    end += 1;
                }
                for k in id..=end {
                    done.insert(k);
                }
                out.push(cell_box(id).union(&cell_box(end)));
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct BvhNode {
    pub aabb: Aabb,
    pub kind: BvhKind,
}

#[derive(Debug, Clone)]
pub enum BvhKind {
    Internal(usize, usize),
    /// Terminal bounding box with the ids of its rectangles.
    Leaf(Vec<usize>),
}

/// Bounding volume hierarchy over a [`RectDecomposition`].
#[derive(Debug, Clone)]
pub struct Bvh {
    pub nodes: Vec<BvhNode>,
    pub root: Option<usize>,
    pub rects: Vec<Aabb>,
}

pub fn build(dec: &RectDecomposition) -> Bvh {
    let mut nodes = Vec::new();
    let root = dec.kd.as_ref().and_then(|kd| build_node(kd, &dec.rects, &mut nodes));
    Bvh { nodes, root, rects: dec.rects.clone() }
}

fn build_node(kd: &KdNode, rects: &[Aabb], nodes: &mut Vec<BvhNode>) -> Option<usize> {
    match kd {
        KdNode::Region { rects: ids } => {
            let (first, rest) = ids.split_first()?;
            let aabb = rest.iter().fold(rects[*first].clone(), |acc, &i| acc.union(&rects[i]));
            nodes.push(BvhNode { aabb, kind: BvhKind::Leaf(ids.clone()) });
            Some(nodes.len() - 1)
        }
        KdNode::Split { lower, upper, .. } => {
            let l = build_node(lower, rects, nodes);
            let u = build_node(upper, rects, nodes);
            match (l, u) {
                (Some(l), Some(u)) => {
                    let aabb = nodes[l].aabb.union(&nodes[u].aabb);
                    nodes.push(BvhNode { aabb, kind: BvhKind::Internal(l, u) });
                    Some(nodes.len() - 1)
                }
                (one, None) | (None, one) => one,
            }
        }
    }
}

impl Bvh {
    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.kind, BvhKind::Leaf(_))).count()
    }

    fn visit(&self, q: &Aabb, strict: bool, stop_at_first: bool, out: &mut Vec<usize>) {
        let Some(root) = self.root else { return };
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if !node.aabb.overlaps(q, strict) {
                continue;
            }
            match &node.kind {
                BvhKind::Internal(a, b) => {
                    stack.push(*b);
                    stack.push(*a);
                }
                BvhKind::Leaf(ids) => {
                    for &r in ids {
                        if self.rects[r].overlaps(q, strict) {
                            out.push(r);
                            if stop_at_first {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Rectangles with closed overlap with `q`, in id order.
    pub fn box_query(&self, q: &Aabb) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit(q, false, false, &mut out);
        out.sort_unstable();
        out
    }

    /// Does any rectangle meet `q` (closed), or the open interior of `q` when `strict`?
    pub fn any_overlap(&self, q: &Aabb, strict: bool) -> bool {
        let mut out = Vec::new();
        self.visit(q, strict, true, &mut out);
        !out.is_empty()
    }

    /// Rectangles containing `p` (closed), in id order. Empty means `p` is
    /// outside the polygon.
    pub fn point_query(&self, p: &[Scalar]) -> Vec<usize> {
        let q = Aabb::around(p, &Scalar::zero());
        self.box_query(&q)
    }

    /// L∞ distance from `p` to the polygon (0 inside).
    pub fn distance(&self, p: &[Scalar]) -> Option<Scalar> {
        self.rects.iter().map(|r| r.linf_distance(p)).min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{int, ratio};

    fn c(pts: &[(i64, i64)]) -> Vec<P2> {
        pts.iter().map(|&(x, y)| [int(x), int(y)]).collect()
    }

    fn square_with_hole() -> Vec<Vec<P2>> {
        vec![c(&[(0, 0), (4, 0), (4, 4), (0, 4)]), c(&[(1, 1), (1, 3), (3, 3), (3, 1)])]
    }

    #[test]
    fn rectangle_is_one_piece() {
        let dec = decompose(&[c(&[(0, 0), (3, 0), (3, 2), (0, 2)])], 0);
        assert_eq!(dec.rects.len(), 1);
        assert_eq!(dec.split_count(), 0);
        let bvh = build(&dec);
        assert_eq!(bvh.leaf_count(), 1);
    }

    #[test]
    fn l_shape_splits_once() {
        let dec = decompose(&[c(&[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])], 0);
        assert_eq!(dec.rects.len(), 2);
        assert_eq!(dec.split_count(), 1);
        assert_eq!(dec.area(), int(3));
        let bvh = build(&dec);
        assert_eq!(bvh.leaf_count(), 2);
        let root = &bvh.nodes[bvh.root.unwrap()];
        assert_eq!(root.aabb, Aabb::new(Point::from_ints(&[0, 0]), Point::from_ints(&[2, 2])));
        // shared corner of the two pieces
        assert_eq!(bvh.point_query(&[int(1), int(1)]).len(), 2);
        assert_eq!(bvh.point_query(&[ratio(1, 2), ratio(1, 2)]).len(), 1);
        assert!(bvh.point_query(&[ratio(3, 2), ratio(3, 2)]).is_empty());
    }

    #[test]
    fn square_with_hole_hand_run() {
        // Reflex vertices (hole corners) (1,1),(1,3),(3,1),(3,3).
        // Split 1 on x at the median (3,1): x = 3 resolves (3,1),(3,3).
        //   Left region [0,3]x[0,4] keeps (1,1),(1,3); split on y at (1,3): y = 3
        //   resolves (1,3). Lower [0,3]x[0,3] keeps (1,1); split on x = 1.
        //   Terminal regions: [0,1]x[0,3], [1,3]x[0,3] -> [1,3]x[0,1], [0,3]x[3,4].
        //   Right region [3,4]x[0,4] is a single rectangle.
        let dec = decompose(&square_with_hole(), 7);
        assert_eq!(dec.reflex_count, 4);
        assert_eq!(dec.split_count(), 3);
        assert_eq!(
            dec.splits(),
            vec![(0, int(3)), (1, int(3)), (0, int(1))]
        );
        let expect = [((0, 0), (1, 3)), ((1, 0), (3, 1)), ((0, 3), (3, 4)), ((3, 0), (4, 4))];
        assert_eq!(dec.rects.len(), 4);
        for ((x0, y0), (x1, y1)) in expect {
            let r = Aabb::new(Point::from_ints(&[x0, y0]), Point::from_ints(&[x1, y1]));
            assert!(dec.rects.contains(&r), "missing {r:?}");
        }
        assert_eq!(dec.area(), int(12));
        assert_eq!(dec.source, 7);
        let bvh = build(&dec);
        assert!(bvh.leaf_count() <= dec.reflex_count + 1);
    }

    #[test]
    fn queries_match_expectations() {
        let bvh = build(&decompose(&square_with_hole(), 0));
        let all = Aabb::new(Point::from_ints(&[0, 0]), Point::from_ints(&[4, 4]));
        assert_eq!(bvh.box_query(&all), (0..bvh.rects.len()).collect::<Vec<_>>());
        let far = Aabb::new(Point::from_ints(&[10, 10]), Point::from_ints(&[11, 11]));
        assert!(bvh.box_query(&far).is_empty());
        assert!(bvh.point_query(&[int(2), int(2)]).is_empty());
        assert!(!bvh.any_overlap(&Aabb::around(&[int(2), int(2)], &int(1)), true));
        assert!(bvh.any_overlap(&Aabb::around(&[int(2), int(2)], &int(1)), false));
    }

    fn check_siblings(bvh: &Bvh) {
        for n in &bvh.nodes {
            if let BvhKind::Internal(a, b) = n.kind {
                let (a, b) = (&bvh.nodes[a].aabb, &bvh.nodes[b].aabb);
                assert!(!a.overlaps(b, true), "siblings overlap in their interiors");
                assert_eq!(a.union(b), n.aabb);
            }
        }
    }

    #[test]
    fn staircase_siblings_meet_only_on_boundary() {
        let stair = c(&[(0, 0), (6, 0), (6, 1), (5, 1), (5, 2), (4, 2), (4, 3), (3, 3), (3, 4), (2, 4), (2, 5), (1, 5), (1, 6), (0, 6)]);
        let dec = decompose(&[stair.clone()], 0);
        assert_eq!(dec.reflex_count, 5);
        assert_eq!(dec.area(), polygon::region_area(&[stair]));
        let bvh = build(&dec);
        assert!(bvh.leaf_count() <= 6);
        check_siblings(&bvh);
    }
}
