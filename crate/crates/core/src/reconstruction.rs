//! Graph reconstruction from the leaves of the subdivision.
//!
//! In every leaf that may carry part of the diagram, each pair (2D) or
//! triple (3D) of active sites spans a line of points at equal gap from all
//! of them. Along that line the set where exactly these sites are nearest is
//! a union of intervals computed exactly. Interval ends become nodes (Voronoi
//! vertices, shape corners, label changes) or ports on the cell boundary;
//! pieces ending in ports get a node at their midpoint and are joined to the
//! piece of the neighbouring leaf through the shared port.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::geometry::{half, int, Aabb, Point, Scalar};
use crate::predicates::{bvh_locate, equidistant_flat, locate_point, location_test, restricted_distance, EquidistantFlat};
use crate::shape::{plane_index, OrthogonalShape, Site, SiteGeometry};
use crate::subdivision::{label_set, Cell, SubdivisionError, SubdivisionTree, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    /// Node on a 2D Voronoi edge (or at a polygon corner).
    Bisector,
    /// Node on an edge of the 3D skeleton (or at a polyhedron corner).
    Skeleton,
    Vertex,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VorNode {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
    pub labels: Vec<usize>,
    /// Leaves that produced this node.
    pub owners: Vec<usize>,
}

/// A straight part of the diagram inside one leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Piece {
    pub leaf: usize,
    pub from: Point,
    pub to: Point,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDiagnostics {
    /// Edges joining leaves that only share a corner.
    pub corner_crossings: usize,
    /// Nodes placed exactly on a corner of a leaf.
    pub nodes_on_leaf_corners: usize,
    /// Ports without a partner in any neighbouring leaf.
    pub open_ports: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoronoiGraph {
    pub dimension: usize,
    pub nodes: Vec<VorNode>,
    pub edges: Vec<(usize, usize)>,
    pub pieces: Vec<Piece>,
    pub diagnostics: GraphDiagnostics,
}

impl VoronoiGraph {
    pub fn degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|(a, b)| *a == id || *b == id).count()
    }

    pub fn vertex_nodes(&self) -> impl Iterator<Item = &VorNode> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Vertex)
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut parent: Vec<usize> = (0..self.nodes.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let mut count = self.nodes.len();
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
                count -= 1;
            }
        }
        count
    }

    /// The same graph with every position passed through `f`.
    pub fn map_positions(&self, f: impl Fn(&Point) -> Point) -> VoronoiGraph {
        let mut g = self.clone();
        for n in &mut g.nodes {
            n.position = f(&n.position);
        }
        for p in &mut g.pieces {
            p.from = f(&p.from);
            p.to = f(&p.to);
        }
        g
    }

    /// Independent cycles: edges − nodes + components.
    pub fn cycle_rank(&self) -> usize {
        self.edges.len() + self.component_count() - self.nodes.len()
    }
}

// ---------------------------------------------------------------------------
// neighbour enumeration

/// Leaf pairs sharing a (d−1)-dimensional facet, each reported once as
/// (lower, upper) along the shared axis.
pub fn neighbor_pairs(tree: &SubdivisionTree) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    cell_proc(tree, 0, &mut out);
    out
}

fn cell_proc(tree: &SubdivisionTree, c: usize, out: &mut Vec<(usize, usize)>) {
    let Some(kids) = tree.children(c) else { return };
    let first = kids.start;
    for k in kids.clone() {
        cell_proc(tree, k, out);
    }
    for axis in 0..tree.dimension {
        for i in 0..(1 << tree.dimension) {
            if i & (1 << axis) == 0 {
                face_proc(tree, first + i, first + (i | (1 << axis)), axis, out);
            }
        }
    }
}

fn face_proc(tree: &SubdivisionTree, a: usize, b: usize, axis: usize, out: &mut Vec<(usize, usize)>) {
    let (la, lb) = (tree.cells[a].is_leaf(), tree.cells[b].is_leaf());
    if la && lb {
        out.push((a, b));
        return;
    }
    for i in 0..(1usize << tree.dimension) {
        if i & (1 << axis) == 0 {
            continue;
        }
        let ca = if la { a } else { tree.cells[a].children.unwrap() + i };
        let cb = if lb { b } else { tree.cells[b].children.unwrap() + (i & !(1 << axis)) };
        face_proc(tree, ca, cb, axis, out);
    }
}

// ---------------------------------------------------------------------------
// exact interval arithmetic along a line

type Span = (Scalar, Scalar);

/// `x(u) = a + b·u`, gap `t(u) = ta + tb·u`, for `u ∈ [lo, hi]`.
#[derive(Debug, Clone)]
struct Line {
    a: Vec<Scalar>,
    b: Vec<Scalar>,
    ta: Scalar,
    tb: Scalar,
    lo: Scalar,
    hi: Scalar,
}

impl Line {
    fn from_flat(flat: &EquidistantFlat, cell: &Aabb) -> Option<Line> {
        if flat.dimension() != 1 {
            return None;
        }
        let d = flat.axes.len();
        let (mut a, mut b) = (vec![Scalar::zero(); d], vec![Scalar::zero(); d]);
        let (ta, tb) = match &flat.t {
            Some(t) => {
                for (k, ax) in flat.axes.iter().enumerate() {
                    match ax {
                        Some((c, s)) => a[k] = c + t * int(*s as i64),
                        None => b[k] = int(1),
                    }
                }
                (t.clone(), Scalar::zero())
            }
            None => {
                for (k, ax) in flat.axes.iter().enumerate() {
                    let (c, s) = ax.as_ref().unwrap();
                    a[k] = c.clone();
                    b[k] = int(*s as i64);
                }
                (Scalar::zero(), int(1))
            }
        };
        let mut span = Some((Scalar::zero(), Scalar::zero()));
        let mut first = true;
        let mut narrow = |lo: Scalar, hi: Scalar, span: &mut Option<Span>| {
            if first {
                *span = Some((lo, hi));
                first = false;
            } else if let Some((l, h)) = span.take() {
                let (l, h) = (l.max(lo), h.min(hi));
                if l <= h {
                    *span = Some((l, h));
                }
            }
        };
        // the parameter range is bounded by some axis with a nonzero slope
        let mut constant_ok = true;
        for k in 0..d {
            if b[k].is_zero() {
                constant_ok &= cell.min.0[k] <= a[k] && a[k] <= cell.max.0[k];
            } else {
                let u1 = (&cell.min.0[k] - &a[k]) / &b[k];
                let u2 = (&cell.max.0[k] - &a[k]) / &b[k];
                let (l, h) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
                narrow(l, h, &mut span);
            }
        }
        if !constant_ok {
            return None;
        }
        let (mut lo, hi) = span?;
        if !tb.is_zero() && lo < Scalar::zero() {
            lo = Scalar::zero();
        }
        if lo >= hi {
            return None;
        }
        Some(Line { a, b, ta, tb, lo, hi })
    }

    fn at(&self, u: &Scalar) -> Point {
        Point(self.a.iter().zip(&self.b).map(|(a, b)| a + b * u).collect())
    }

    fn gap(&self, u: &Scalar) -> Scalar {
        &self.ta + &self.tb * u
    }
}

/// Restricts `span` to `{u : p + q·u ≥ 0}`.
fn constrain(span: Option<Span>, p: Scalar, q: Scalar) -> Option<Span> {
    let (lo, hi) = span?;
    if q.is_zero() {
        return (p >= Scalar::zero()).then_some((lo, hi));
    }
    let root = -p / &q;
    let (lo, hi) = if q > Scalar::zero() { (lo.max(root), hi) } else { (lo, hi.min(root)) };
    (lo <= hi).then_some((lo, hi))
}

fn normalize(mut v: Vec<Span>) -> Vec<Span> {
    v.sort();
    let mut out: Vec<Span> = Vec::with_capacity(v.len());
    for (lo, hi) in v {
        match out.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => out.push((lo, hi)),
        }
    }
    out
}

fn intersect(a: &[Span], b: &[Span]) -> Vec<Span> {
    let mut out = Vec::new();
    for (alo, ahi) in a {
        for (blo, bhi) in b {
            let lo = alo.max(blo);
            let hi = ahi.min(bhi);
            if lo <= hi {
                out.push((lo.clone(), hi.clone()));
            }
        }
    }
    normalize(out)
}

/// Removes the open interval `(lo, hi)`.
fn subtract_open(a: Vec<Span>, lo: &Scalar, hi: &Scalar) -> Vec<Span> {
    if lo >= hi {
        return a;
    }
    let mut out = Vec::with_capacity(a.len() + 1);
    for (l, h) in a {
        if h <= *lo || l >= *hi {
            out.push((l, h));
            continue;
        }
        if l <= *lo {
            out.push((l.clone(), lo.clone()));
        }
        if h >= *hi {
            out.push((hi.clone(), h));
        }
    }
    out
}

/// Footprint rectangles of every site in plane coordinates.
fn footprints(shape: &OrthogonalShape) -> Vec<Vec<Aabb>> {
    shape
        .sites
        .iter()
        .map(|s| match &s.geometry {
            SiteGeometry::Segment { lo, hi } => vec![Aabb::new(Point(vec![lo.clone()]), Point(vec![hi.clone()]))],
            SiteGeometry::Facet(f) => f.decomposition.rects.clone(),
        })
        .collect()
}

/// Signed gap of the line to the hull of `s`, as `(p, q)` with gap `p + q·u`.
fn site_gap(s: &Site, line: &Line) -> (Scalar, Scalar) {
    let k = s.axis();
    let sigma = int(s.interior_sign as i64);
    ((&line.a[k] - s.offset()) * &sigma, &line.b[k] * &sigma)
}

/// Parameters where the line lies in the oriented zone of `s`, using the
/// gap `(gp, gq)` as the zone radius.
fn zone_spans(s: &Site, rects: &[Aabb], line: &Line, gp: &Scalar, gq: &Scalar) -> Vec<Span> {
    let k = s.axis();
    let d = line.a.len();
    let base = constrain(Some((line.lo.clone(), line.hi.clone())), gp.clone(), gq.clone());
    let mut out = Vec::new();
    for r in rects {
        let mut span = base.clone();
        for g in (0..d).filter(|&g| g != k) {
            let j = plane_index(k, g);
            // x_g(u) − min + gap(u) ≥ 0 and max − x_g(u) + gap(u) ≥ 0
            span = constrain(span, &line.a[g] - &r.min.0[j] + gp, &line.b[g] + gq);
            span = constrain(span, &r.max.0[j] - &line.a[g] + gp, gq - &line.b[g]);
        }
        if let Some(s) = span {
            out.push(s);
        }
    }
    normalize(out)
}

// ---------------------------------------------------------------------------
// graph assembly

struct Builder<'a> {
    shape: &'a OrthogonalShape,
    tree: &'a SubdivisionTree,
    rects: Vec<Vec<Aabb>>,
    all: Vec<usize>,
    label_memo: HashMap<Point, Vec<usize>>,
    node_index: BTreeMap<(Point, Vec<usize>), usize>,
    nodes: Vec<VorNode>,
    edges: BTreeSet<(usize, usize)>,
    pieces: Vec<Piece>,
    /// Per leaf: (port point, labels, node).
    ports: BTreeMap<usize, Vec<(Point, Vec<usize>, usize)>>,
}

impl<'a> Builder<'a> {
    fn inside(&self, p: &Point) -> bool {
        bvh_locate(p, self.shape).unwrap_or_else(|| locate_point(p, self.shape))
    }

    fn labels(&mut self, p: &Point) -> Result<Vec<usize>, SubdivisionError> {
        if let Some(l) = self.label_memo.get(p) {
            return Ok(l.clone());
        }
        let (l, _) = label_set(p, true, &self.all, &self.shape.sites)?;
        self.label_memo.insert(p.clone(), l.clone());
        Ok(l)
    }

    fn node(&mut self, p: Point, labels: Vec<usize>, leaf: usize, on_piece: bool) -> usize {
        let d = self.shape.dimension;
        let kind = if labels.len() > d && !on_piece {
            NodeKind::Vertex
        } else if d == 2 {
            NodeKind::Bisector
        } else {
            NodeKind::Skeleton
        };
        let key = (p, labels);
        if let Some(&id) = self.node_index.get(&key) {
            if !self.nodes[id].owners.contains(&leaf) {
                self.nodes[id].owners.push(leaf);
            }
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(VorNode { id, kind, position: key.0.clone(), labels: key.1.clone(), owners: vec![leaf] });
        self.node_index.insert(key, id);
        id
    }

    fn edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.edges.insert((a.min(b), a.max(b)));
        }
    }

    /// Exact pieces of the diagram in `leaf` carried by the sites of `group`.
    fn group_pieces(&mut self, cell: &Cell, group: &[usize]) -> Result<Vec<(Scalar, Scalar, Line)>, SubdivisionError> {
        let sites = &self.shape.sites;
        let members: Vec<&Site> = group.iter().map(|&i| &sites[i]).collect();
        let d = self.shape.dimension;
        let Some(flat) = equidistant_flat(&members, d) else { return Ok(Vec::new()) };
        let bbox = cell.bbox.to_aabb();
        let Some(line) = Line::from_flat(&flat, &bbox) else { return Ok(Vec::new()) };
        let mut valid = vec![(line.lo.clone(), line.hi.clone())];
        for &s in group {
            let z = zone_spans(&sites[s], &self.rects[s], &line, &line.ta, &line.tb);
            valid = intersect(&valid, &z);
            if valid.is_empty() {
                return Ok(Vec::new());
            }
        }
        let mut splits: Vec<Scalar> = Vec::new();
        for &o in &cell.active {
            if group.contains(&o) {
                continue;
            }
            let s = &sites[o];
            let (gp, gq) = site_gap(s, &line);
            let zone = zone_spans(s, &self.rects[o], &line, &gp, &gq);
            if zone.is_empty() {
                continue;
            }
            // t(u) − gap_o(u) > 0, or ≥ 0 when `o` wins ties against a member
            let wins_ties = members.iter().any(|m| m.hull == s.hull && s.priority > m.priority);
            let (dp, dq) = (&line.ta - &gp, &line.tb - &gq);
            let closer: Vec<Span> = if dq.is_zero() {
                if dp > Scalar::zero() || (dp.is_zero() && wins_ties) {
                    zone.clone()
                } else {
                    Vec::new()
                }
            } else {
                zone.iter().filter_map(|z| constrain(Some(z.clone()), dp.clone(), dq.clone())).collect()
            };
            for (lo, hi) in &closer {
                valid = subtract_open(valid, lo, hi);
            }
            if valid.is_empty() {
                return Ok(Vec::new());
            }
            // where `o` becomes equally near the labels may change
            if dq.is_zero() {
                if dp.is_zero() {
                    splits.extend(zone.iter().flat_map(|(l, h)| [l.clone(), h.clone()]));
                }
            } else {
                let root = -&dp / &dq;
                if zone.iter().any(|(l, h)| *l <= root && root <= *h) {
                    splits.push(root);
                }
            }
        }
        splits.sort();
        splits.dedup();
        let mut out = Vec::new();
        for (lo, hi) in valid {
            if lo >= hi {
                continue;
            }
            let mut cuts = vec![lo.clone()];
            cuts.extend(splits.iter().filter(|u| **u > lo && **u < hi).cloned());
            cuts.push(hi);
            for w in cuts.windows(2) {
                out.push((w[0].clone(), w[1].clone(), line.clone()));
            }
        }
        // inside the shape, labelled by (at least) the group
        let mut kept: Vec<(Scalar, Scalar, Line, Vec<usize>)> = Vec::new();
        for (lo, hi, line) in out {
            let mid = line.at(&((&lo + &hi) * half()));
            if !self.inside(&mid) {
                continue;
            }
            let labels = self.labels(&mid)?;
            if !group.iter().all(|g| labels.contains(g)) {
                continue;
            }
            // merge with the previous piece when nothing changes in between
            if let Some(last) = kept.last_mut() {
                if last.1 == lo && last.3 == labels {
                    let at = line.at(&lo);
                    if self.labels(&at)? == labels {
                        last.1 = hi;
                        continue;
                    }
                }
            }
            kept.push((lo, hi, line, labels));
        }
        Ok(kept.into_iter().map(|(lo, hi, line, _)| (lo, hi, line)).collect())
    }

    fn process_leaf(&mut self, leaf: usize) -> Result<(), SubdivisionError> {
        let cell = &self.tree.cells[leaf];
        let d = self.shape.dimension;
        let bbox = cell.bbox.to_aabb();
        let sites = &self.shape.sites;
        let active = cell.active.clone();
        let mut seen: BTreeSet<(Point, Point, Vec<usize>)> = BTreeSet::new();
        for group in combinations(&active, d) {
            if group.iter().enumerate().any(|(i, a)| group[i + 1..].iter().any(|b| sites[*a].hull == sites[*b].hull)) {
                continue;
            }
            for (lo, hi, line) in self.group_pieces(cell, &group)? {
                let (pa, pb) = (line.at(&lo), line.at(&hi));
                // a piece on a shared facet belongs to the leaf on its upper side
                if (0..d).any(|k| pa.coord(k) == pb.coord(k) && *pa.coord(k) == bbox.max.0[k]) {
                    continue;
                }
                let mid = line.at(&((&lo + &hi) * half()));
                let labels = self.labels(&mid)?;
                if d == 2 {
                    // the same sites win on both sides: the piece bounds no region with interior
                    let g = line.gap(&((&lo + &hi) * half()));
                    let tied: Vec<usize> =
                        (0..sites.len()).filter(|&i| restricted_distance(&mid, &sites[i]).as_ref() == Some(&g)).collect();
                    let n = [pa.coord(1) - pb.coord(1), pb.coord(0) - pa.coord(0)];
                    let neg = [-n[0].clone(), -n[1].clone()];
                    if side_winners(sites, &tied, &mid, &n) == side_winners(sites, &tied, &mid, &neg) {
                        continue;
                    }
                }
                if !seen.insert((pa.clone(), pb.clone(), labels.clone())) {
                    continue;
                }
                self.pieces.push(Piece { leaf, from: pa.clone(), to: pb.clone(), labels: labels.clone() });
                let mut anchors = Vec::new();
                let mut open = Vec::new();
                for (u, p) in [(&lo, pa), (&hi, pb)] {
                    let lp = self.labels(&p)?;
                    let on_boundary = (0..d).any(|k| *p.coord(k) == bbox.min.0[k] || *p.coord(k) == bbox.max.0[k]);
                    if on_boundary && lp == labels && !line.gap(u).is_zero() {
                        open.push(p);
                    } else {
                        anchors.push(self.node(p, lp, leaf, false));
                    }
                }
                if open.is_empty() {
                    self.edge(anchors[0], anchors[1]);
                } else {
                    let m = self.node(mid, labels.clone(), leaf, true);
                    for a in anchors {
                        self.edge(m, a);
                    }
                    for p in open {
                        self.ports.entry(leaf).or_default().push((p, labels.clone(), m));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sites nearest just off `m` in direction `n`, among the `tied` sites
/// nearest at `m` itself (2D segments only).
fn side_winners(sites: &[Site], tied: &[usize], m: &Point, n: &[Scalar]) -> Vec<usize> {
    let mut best: Option<Scalar> = None;
    let mut win: Vec<usize> = Vec::new();
    for &l in tied {
        let s = &sites[l];
        let (k, f) = (s.axis(), 1 - s.axis());
        let slope = &n[k] * int(s.interior_sign as i64);
        let gap = s.hull.distance(m);
        if gap.is_zero() && slope < Scalar::zero() {
            continue;
        }
        if let SiteGeometry::Segment { lo, hi } = &s.geometry {
            // the zone constraints gap ≥ lo − x_f and gap ≥ x_f − hi, when tight, must not break
            let q = m.coord(f);
            if (&gap == &(lo - q) && &slope + &n[f] < Scalar::zero()) || (&gap == &(q - hi) && &slope - &n[f] < Scalar::zero()) {
                continue;
            }
        }
        match &best {
            Some(b) if slope > *b => {}
            Some(b) if slope == *b => win.push(l),
            _ => {
                best = Some(slope);
                win = vec![l];
            }
        }
    }
    let all = win.clone();
    win.retain(|&a| !all.iter().any(|&b| sites[b].hull == sites[a].hull && sites[b].priority > sites[a].priority));
    win.sort_unstable();
    win
}

/// All `k`-element subsets of `items` in lexicographic order.
fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(items, k, 0, &mut cur, &mut out);
    out
}

/// Does the leaf take part in reconstruction?
pub fn leaf_is_processed(cell: &Cell, dimension: usize) -> bool {
    cell.is_leaf() && !cell.verdict.is_empty_leaf() && cell.active.len() >= dimension && cell.verdict != Verdict::Subdivided
}

pub fn build_graph(tree: &SubdivisionTree, shape: &OrthogonalShape) -> Result<VoronoiGraph, SubdivisionError> {
    let mut b = Builder {
        shape,
        tree,
        rects: footprints(shape),
        all: (0..shape.sites.len()).collect(),
        label_memo: HashMap::new(),
        node_index: BTreeMap::new(),
        nodes: Vec::new(),
        edges: BTreeSet::new(),
        pieces: Vec::new(),
        ports: BTreeMap::new(),
    };
    let leaves: Vec<usize> = tree.leaves().filter(|(_, c)| leaf_is_processed(c, shape.dimension)).map(|(i, _)| i).collect();
    for leaf in leaves {
        b.process_leaf(leaf)?;
    }

    // join pieces of facet-adjacent leaves through their shared ports
    let mut diagnostics = GraphDiagnostics::default();
    let mut joined: BTreeSet<(Point, Vec<usize>)> = BTreeSet::new();
    for (x, y) in neighbor_pairs(tree) {
        let (Some(px), Some(py)) = (b.ports.get(&x), b.ports.get(&y)) else { continue };
        let mut pairs = Vec::new();
        for (p, l, n) in px {
            for (q, m, o) in py {
                if p == q && l == m {
                    pairs.push((*n, *o, p.clone(), l.clone()));
                }
            }
        }
        for (n, o, p, l) in pairs {
            b.edge(n, o);
            joined.insert((p, l));
        }
    }
    // ports left over: pieces passing exactly through a leaf corner
    let mut by_port: BTreeMap<(Point, Vec<usize>), BTreeSet<usize>> = BTreeMap::new();
    for list in b.ports.values() {
        for (p, l, n) in list {
            by_port.entry((p.clone(), l.clone())).or_default().insert(*n);
        }
    }
    for (key, nodes) in by_port {
        if joined.contains(&key) {
            continue;
        }
        let nodes: Vec<usize> = nodes.into_iter().collect();
        if nodes.len() == 2 {
            b.edge(nodes[0], nodes[1]);
            diagnostics.corner_crossings += 1;
        } else {
            diagnostics.open_ports += 1;
        }
    }

    for n in &b.nodes {
        if shape.corners.iter().any(|c| c.point == n.position) {
            continue;
        }
        if n.owners.iter().any(|&leaf| tree.cells[leaf].bbox.corners().contains(&n.position)) {
            diagnostics.nodes_on_leaf_corners += 1;
        }
    }
    Ok(canonical(shape.dimension, b.nodes, b.edges.into_iter().collect(), b.pieces, diagnostics))
}

/// Orders nodes by (position, labels) and renumbers them.
fn canonical(
    dimension: usize,
    mut nodes: Vec<VorNode>,
    edges: Vec<(usize, usize)>,
    pieces: Vec<Piece>,
    diagnostics: GraphDiagnostics,
) -> VoronoiGraph {
    nodes.sort_by(|a, b| (&a.position, &a.labels).cmp(&(&b.position, &b.labels)));
    let mut remap = vec![usize::MAX; nodes.iter().map(|n| n.id + 1).max().unwrap_or(0)];
    for (new, n) in nodes.iter_mut().enumerate() {
        remap[n.id] = new;
        n.id = new;
        n.owners.sort_unstable();
    }
    let mut edges: Vec<(usize, usize)> = edges
        .into_iter()
        .map(|(a, b)| {
            let (a, b) = (remap[a], remap[b]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    VoronoiGraph { dimension, nodes, edges, pieces, diagnostics }
}

/// Removes degree-2 nodes that are not Voronoi vertices, joining their two
/// neighbours directly.
pub fn contract(g: &VoronoiGraph) -> VoronoiGraph {
    let n = g.nodes.len();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(a, b) in &g.edges {
        adj[a].insert(b);
        adj[b].insert(a);
    }
    let mut alive = vec![true; n];
    loop {
        let mut changed = false;
        for v in 0..n {
            if !alive[v] || g.nodes[v].kind == NodeKind::Vertex || adj[v].len() != 2 {
                continue;
            }
            let (a, b) = {
                let mut it = adj[v].iter();
                (*it.next().unwrap(), *it.next().unwrap())
            };
            if adj[a].contains(&b) {
                continue;
            }
            adj[a].remove(&v);
            adj[b].remove(&v);
            adj[a].insert(b);
            adj[b].insert(a);
            adj[v].clear();
            alive[v] = false;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    let nodes: Vec<VorNode> = g.nodes.iter().filter(|x| alive[x.id]).cloned().collect();
    let mut edges = Vec::new();
    for (a, set) in adj.iter().enumerate() {
        for &b in set {
            if a < b {
                edges.push((a, b));
            }
        }
    }
    canonical(g.dimension, nodes, edges, Vec::new(), g.diagnostics.clone())
}

/// Label-rule connection between two nodes of neighbouring leaves:
/// bisector nodes with equal labels, a bisector node whose labels are
/// contained in a vertex's, or two vertices sharing `d` labels and joined by
/// a segment inside the shape.
pub fn connect(a: &VorNode, b: &VorNode, shape: &OrthogonalShape) -> bool {
    let d = shape.dimension;
    let subset = |x: &VorNode, y: &VorNode| x.labels.iter().all(|l| y.labels.contains(l));
    match (a.kind == NodeKind::Vertex, b.kind == NodeKind::Vertex) {
        (false, false) => a.labels == b.labels,
        (false, true) => subset(a, b),
        (true, false) => subset(b, a),
        (true, true) => {
            let shared = a.labels.iter().filter(|l| b.labels.contains(l)).count();
            shared >= d && segment_in_shape(&a.position, &b.position, shape)
        }
    }
}

/// Both end points in the closed shape and the open segment meets no site.
pub fn segment_in_shape(p: &Point, q: &Point, shape: &OrthogonalShape) -> bool {
    let all: Vec<usize> = (0..shape.sites.len()).collect();
    let inside = |x: &Point| location_test(x, &all, shape).unwrap_or(false);
    if !inside(p) || !inside(q) {
        return false;
    }
    let rects = footprints(shape);
    !shape.sites.iter().zip(&rects).any(|(s, rs)| {
        rs.iter().any(|r| {
            let k = s.axis();
            let d = p.dim();
            let mut lo = Scalar::zero();
            let mut hi = int(1);
            for g in 0..d {
                let (min, max) = if g == k {
                    (s.offset().clone(), s.offset().clone())
                } else {
                    let j = plane_index(k, g);
                    (r.min.0[j].clone(), r.max.0[j].clone())
                };
                let a = p.coord(g).clone();
                let dir = q.coord(g) - p.coord(g);
                if dir.is_zero() {
                    if a < min || a > max {
                        return false;
                    }
                    continue;
                }
                let u1 = (&min - &a) / &dir;
                let u2 = (&max - &a) / &dir;
                let (l, h) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
                lo = lo.max(l);
                hi = hi.min(h);
            }
            lo <= hi && lo < int(1) && hi > Scalar::zero()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shape::parse_shape_str;
    use crate::subdivision::{subdivide, SubdivisionConfig};

    fn run(text: &str) -> (OrthogonalShape, SubdivisionTree, VoronoiGraph) {
        let shape = parse_shape_str(text).unwrap().scale_to_unit().unwrap();
        let tree = subdivide(&shape, &SubdivisionConfig::default()).unwrap();
        let g = build_graph(&tree, &shape).unwrap();
        (shape, tree, g)
    }

    #[test]
    fn unit_square_graph() {
        let (_, _, g) = run(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#);
        assert_eq!(g.nodes.len(), 5);
        assert_eq!(g.edges.len(), 4);
        let v: Vec<&VorNode> = g.vertex_nodes().collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].position, Point(vec![half(), half()]));
        assert_eq!(v[0].labels, vec![0, 1, 2, 3]);
        assert_eq!(g.degree(v[0].id), 4);
    }

    #[test]
    fn rectangle_graph() {
        let (shape, _, g) = run(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#);
        let c = contract(&g);
        let v: Vec<Point> = c.vertex_nodes().map(|n| shape.scale.to_original(&n.position)).collect();
        assert_eq!(v, vec![Point::from_ints(&[1, 1]), Point::from_ints(&[3, 1])]);
        assert_eq!(c.nodes.len(), 6);
        assert_eq!(c.edges.len(), 5);
        assert!(c.vertex_nodes().all(|n| c.degree(n.id) == 3));
    }

    #[test]
    fn neighbor_pair_counts() {
        let (_, tree, _) = run(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#);
        assert_eq!(tree.cells.len(), 5);
        assert_eq!(neighbor_pairs(&tree).len(), 4);
        let (_, tree, _) = run(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#);
        assert!(neighbor_pairs(&tree).is_empty());
    }

    #[test]
    fn segment_through_hole_is_rejected() {
        let shape = parse_shape_str(
            r#"{"dimension":2,"outer":[[0,0],[6,0],[6,6],[0,6]],"holes":[[[2,2],[2,4],[4,4],[4,2]]]}"#,
        )
        .unwrap();
        assert!(!segment_in_shape(&Point::from_ints(&[1, 3]), &Point::from_ints(&[5, 3]), &shape));
        assert!(segment_in_shape(&Point::from_ints(&[1, 1]), &Point::from_ints(&[5, 1]), &shape));
    }
}
