//! Input shapes: validation, sites, corners and unit scaling.
//!
//! A 2D shape is a manifold rectilinear polygon with holes; its sites are the
//! boundary edges. A 3D shape is a manifold orthogonal polyhedron given by its
//! facets; every facet is a simply connected rectilinear polygon and is a site.
//! Sites are numbered in document order and that number doubles as priority.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{self, Bvh, RectDecomposition};
use crate::geometry::{format_scalar, int, parse_scalar, Aabb, AffineHull, AxisBox, Point, Scalar};
use crate::polygon::{self, Location, P2};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("edge is not axis-parallel: {0}")]
    NotAxisAligned(String),
    #[error("boundary is not closed: {0}")]
    NotClosed(String),
    #[error("non-manifold vertex: {0}")]
    NonManifoldVertex(String),
    #[error("self-intersecting boundary: {0}")]
    SelfIntersecting(String),
    #[error("hole not strictly inside the outer boundary: {0}")]
    HoleOutsideOuter(String),
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("degenerate shape: {0}")]
    Degenerate(String),
    #[error("sites {0} and {1} are not adjacent")]
    NotAdjacent(usize, usize),
    #[error("operation needs a {expected}D shape")]
    WrongDimension { expected: usize },
}

/// A facet polygon in the coordinates of its own plane (the two remaining
/// axes in increasing order), with its rectangle decomposition and BVH.
#[derive(Debug, Clone)]
pub struct Facet {
    pub outline: Vec<P2>,
    pub decomposition: RectDecomposition,
    pub bvh: Bvh,
}

#[derive(Debug, Clone)]
pub enum SiteGeometry {
    /// 2D edge covering `[lo, hi]` along the axis perpendicular to the hull's.
    Segment { lo: Scalar, hi: Scalar },
    Facet(Arc<Facet>),
}

#[derive(Debug, Clone)]
pub struct Site {
    pub id: usize,
    pub hull: AffineHull,
    pub geometry: SiteGeometry,
    /// +1 if the interior lies towards increasing `hull.axis`, −1 otherwise.
    pub interior_sign: i8,
    pub priority: usize,
}

/// Index of global `axis` within the plane coordinates of a hull on `hull_axis`.
pub fn plane_index(hull_axis: usize, axis: usize) -> usize {
    debug_assert_ne!(hull_axis, axis);
    if axis < hull_axis {
        axis
    } else {
        axis - 1
    }
}

impl Site {
    pub fn axis(&self) -> usize {
        self.hull.axis
    }

    pub fn offset(&self) -> &Scalar {
        &self.hull.offset
    }

    pub fn dim(&self) -> usize {
        match self.geometry {
            SiteGeometry::Segment { .. } => 2,
            SiteGeometry::Facet(_) => 3,
        }
    }

    /// Does the site meet the (d−1)-box `q` given in plane coordinates?
    /// With `strict`, only the open interior of `q` counts.
    pub fn footprint_meets(&self, q: &Aabb, strict: bool) -> bool {
        match &self.geometry {
            SiteGeometry::Segment { lo, hi } => {
                let (qlo, qhi) = (&q.min.0[0], &q.max.0[0]);
                if strict {
                    lo < qhi && qlo < hi
                } else {
                    lo <= qhi && qlo <= hi
                }
            }
            SiteGeometry::Facet(f) => f.bvh.any_overlap(q, strict),
        }
    }

    /// L∞ distance, within the hull, from plane coordinates `p` to the site.
    pub fn footprint_distance(&self, p: &[Scalar]) -> Scalar {
        match &self.geometry {
            SiteGeometry::Segment { lo, hi } => {
                if p[0] < *lo {
                    lo - &p[0]
                } else if p[0] > *hi {
                    &p[0] - hi
                } else {
                    Scalar::zero()
                }
            }
            SiteGeometry::Facet(f) => f.bvh.distance(p).unwrap_or_else(Scalar::zero),
        }
    }

    /// Unrestricted L∞ distance from `p` to the closed site.
    pub fn distance(&self, p: &Point) -> Scalar {
        let gap = self.hull.distance(p);
        let along = self.footprint_distance(&p.drop_axis(self.axis()));
        gap.max(along)
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.coord(self.axis()) == self.offset()
            && self.footprint_meets(&Aabb::around(&p.drop_axis(self.axis()), &Scalar::zero()), false)
    }

    /// End points of a 2D segment site (low end first).
    pub fn endpoints(&self) -> Option<(Point, Point)> {
        match &self.geometry {
            SiteGeometry::Segment { lo, hi } => {
                let mk = |v: &Scalar| {
                    let mut c = vec![Scalar::zero(), Scalar::zero()];
                    c[self.axis()] = self.offset().clone();
                    c[1 - self.axis()] = v.clone();
                    Point(c)
                };
                Some((mk(lo), mk(hi)))
            }
            SiteGeometry::Facet(_) => None,
        }
    }

    pub fn facet(&self) -> Option<&Facet> {
        match &self.geometry {
            SiteGeometry::Facet(f) => Some(f),
            SiteGeometry::Segment { .. } => None,
        }
    }

    /// Intervals along plane axis `along` covered by the site's cut at
    /// plane coordinate `at` on the other plane axis (3D only).
    fn slice(&self, along: usize, at: &Scalar) -> Vec<(Scalar, Scalar)> {
        let Some(f) = self.facet() else { return Vec::new() };
        let across = 1 - along;
        let mut out: Vec<(Scalar, Scalar)> = f
            .decomposition
            .rects
            .iter()
            .filter(|r| r.min.0[across] <= *at && *at <= r.max.0[across])
            .map(|r| (r.min.0[along].clone(), r.max.0[along].clone()))
            .collect();
        out.sort();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CornerKind {
    Convex,
    Reflex,
    /// 3D vertices whose three edges are not all convex or all reflex.
    Mixed,
}

/// Shared geometry of two adjacent sites: the common vertex (2D, `from == to`)
/// or the common edge (3D).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteCorner {
    pub from: Point,
    pub to: Point,
    pub kind: CornerKind,
}

/// A boundary vertex with the sites meeting there (2 in 2D, 3 in 3D).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeCorner {
    pub point: Point,
    pub sites: Vec<usize>,
    pub kind: CornerKind,
}

/// Maps unit coordinates back to the input: `original = unit * factor + offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScaleRecord {
    pub factor: Scalar,
    pub offset: Point,
}

impl ScaleRecord {
    pub fn identity(dim: usize) -> Self {
        ScaleRecord { factor: Scalar::one(), offset: Point(vec![Scalar::zero(); dim]) }
    }

    pub fn to_original(&self, p: &Point) -> Point {
        Point(p.0.iter().zip(&self.offset.0).map(|(c, o)| c * &self.factor + o).collect())
    }
}

/// Facet description as it appears in documents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FacetSpec {
    pub axis: usize,
    pub offset: Scalar,
    pub outline: Vec<P2>,
    pub interior_sign: i8,
}

#[derive(Debug, Clone)]
pub struct OrthogonalShape {
    pub dimension: usize,
    pub sites: Vec<Site>,
    /// 2D only: outer contour first, then holes; interior on the left.
    pub contours: Vec<Vec<P2>>,
    pub corners: Vec<ShapeCorner>,
    /// Corner ids incident to each site.
    pub corners_by_site: Vec<Vec<usize>>,
    pub root_box: AxisBox,
    pub scale: ScaleRecord,
    /// 2D only: decomposition of the whole polygon and its hierarchy.
    pub decomposition: Option<RectDecomposition>,
    pub bvh: Option<Bvh>,
}

fn show(p: &P2) -> String {
    format!("({}, {})", format_scalar(&p[0]), format_scalar(&p[1]))
}

fn show_pt(p: &Point) -> String {
    format!("{p:?}")
}

/// Structural checks shared by polygon contours and facet outlines.
fn check_contour(c: &[P2], what: &str) -> Result<(), ShapeError> {
    if c.len() < 4 {
        return Err(ShapeError::NotClosed(format!("{what} has {} vertices, need at least 4", c.len())));
    }
    let n = c.len();
    for i in 0..n {
        let (a, b) = (&c[i], &c[(i + 1) % n]);
        if a == b {
            return Err(ShapeError::MalformedDocument(format!("{what}: repeated vertex {}", show(a))));
        }
        if a[0] != b[0] && a[1] != b[1] {
            let msg = format!("{what}: edge {} -> {}", show(a), show(b));
            return Err(if i + 1 == n { ShapeError::NotClosed(msg) } else { ShapeError::NotAxisAligned(msg) });
        }
    }
    for i in 0..n {
        let (p, a, b) = (&c[(i + n - 1) % n], &c[i], &c[(i + 1) % n]);
        if (p[0] == a[0]) == (a[0] == b[0]) {
            return Err(ShapeError::MalformedDocument(format!(
                "{what}: collinear edges meet at {}",
                show(a)
            )));
        }
    }
    Ok(())
}

/// Pairwise edge intersection check over a set of contours.
fn check_simple(contours: &[Vec<P2>]) -> Result<(), ShapeError> {
    let mut all: Vec<(usize, usize, &P2, &P2)> = Vec::new();
    for (ci, c) in contours.iter().enumerate() {
        for (ei, (a, b)) in polygon::edges(c).enumerate() {
            all.push((ci, ei, a, b));
        }
    }
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            let (ci, ei, a0, a1) = all[i];
            let (cj, ej, b0, b1) = all[j];
            if ci == cj {
                let n = contours[ci].len();
                if ej == ei + 1 || (ei == 0 && ej == n - 1) {
                    continue;
                }
            }
            if polygon::segments_meet(a0, a1, b0, b1) {
                return Err(ShapeError::SelfIntersecting(format!(
                    "edge {} -> {} meets edge {} -> {}",
                    show(a0),
                    show(a1),
                    show(b0),
                    show(b1)
                )));
            }
        }
    }
    Ok(())
}

fn sign_of(v: &Scalar) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

impl OrthogonalShape {
    /// Validates and builds a 2D shape from its contours (outer first).
    pub fn from_contours(contours: Vec<Vec<P2>>, scale: ScaleRecord) -> Result<Self, ShapeError> {
        if contours.is_empty() {
            return Err(ShapeError::MalformedDocument("missing outer contour".into()));
        }
        for (i, c) in contours.iter().enumerate() {
            let what = if i == 0 { "outer contour".to_string() } else { format!("hole {}", i - 1) };
            check_contour(c, &what)?;
        }
        let mut seen = BTreeSet::new();
        for p in contours.iter().flatten() {
            if !seen.insert(p.clone()) {
                return Err(ShapeError::NonManifoldVertex(format!("vertex {} is shared by more than two edges", show(p))));
            }
        }
        check_simple(&contours)?;
        if !polygon::signed_area2(&contours[0]).is_positive() {
            return Err(ShapeError::MalformedDocument("outer contour must be counter-clockwise".into()));
        }
        for (i, h) in contours.iter().enumerate().skip(1) {
            if !polygon::signed_area2(h).is_negative() {
                return Err(ShapeError::MalformedDocument(format!("hole {} must be clockwise", i - 1)));
            }
            if polygon::locate(&h[0], &contours[..1]) != Location::Inside {
                return Err(ShapeError::HoleOutsideOuter(format!("hole {} at vertex {}", i - 1, show(&h[0]))));
            }
            for (j, other) in contours.iter().enumerate().skip(1) {
                if j != i && polygon::locate(&h[0], std::slice::from_ref(other)) == Location::Inside {
                    return Err(ShapeError::HoleOutsideOuter(format!(
                        "hole {} at vertex {} lies inside hole {}",
                        i - 1,
                        show(&h[0]),
                        j - 1
                    )));
                }
            }
        }

        let mut sites = Vec::new();
        let mut corners = Vec::new();
        for c in &contours {
            let first = sites.len();
            let n = c.len();
            for (a, b) in polygon::edges(c) {
                let id = sites.len();
                let (axis, sign, lo, hi) = if a[1] == b[1] {
                    (1, sign_of(&(&b[0] - &a[0])), a[0].clone().min(b[0].clone()), a[0].clone().max(b[0].clone()))
                } else {
                    (0, -sign_of(&(&b[1] - &a[1])), a[1].clone().min(b[1].clone()), a[1].clone().max(b[1].clone()))
                };
                sites.push(Site {
                    id,
                    hull: AffineHull::new(axis, a[axis].clone()),
                    geometry: SiteGeometry::Segment { lo, hi },
                    interior_sign: sign,
                    priority: id,
                });
            }
            let reflex: BTreeSet<usize> = polygon::reflex_indices(c).into_iter().collect();
            for i in 0..n {
                let prev = first + (i + n - 1) % n;
                let next = first + i;
                let mut pair = vec![prev, next];
                pair.sort_unstable();
                corners.push(ShapeCorner {
                    point: Point(c[i].to_vec()),
                    sites: pair,
                    kind: if reflex.contains(&i) { CornerKind::Reflex } else { CornerKind::Convex },
                });
            }
        }
        let decomposition = bvh::decompose(&contours, 0);
        let hierarchy = bvh::build(&decomposition);
        let root_box = root_box_of(contours.iter().flatten().map(|p| p.to_vec()), 2);
        Ok(Self::assemble(2, sites, contours, corners, root_box, scale, Some(decomposition), Some(hierarchy)))
    }

    /// Validates and builds a 3D shape from its facets.
    pub fn from_facets(facets: Vec<FacetSpec>, scale: ScaleRecord) -> Result<Self, ShapeError> {
        if facets.len() < 6 {
            return Err(ShapeError::NotClosed(format!("{} facets cannot bound a polyhedron", facets.len())));
        }
        let mut sites = Vec::with_capacity(facets.len());
        for (id, f) in facets.iter().enumerate() {
            let what = format!("facet {id}");
            if f.axis > 2 {
                return Err(ShapeError::MalformedDocument(format!("{what}: axis {} out of range", f.axis)));
            }
            if f.interior_sign != 1 && f.interior_sign != -1 {
                return Err(ShapeError::MalformedDocument(format!("{what}: interior_sign must be +1 or -1")));
            }
            check_contour(&f.outline, &what)?;
            check_simple(std::slice::from_ref(&f.outline))?;
            if !polygon::signed_area2(&f.outline).is_positive() {
                return Err(ShapeError::MalformedDocument(format!("{what}: outline must be counter-clockwise")));
            }
            let decomposition = bvh::decompose(std::slice::from_ref(&f.outline), id);
            let hierarchy = bvh::build(&decomposition);
            sites.push(Site {
                id,
                hull: AffineHull::new(f.axis, f.offset.clone()),
                geometry: SiteGeometry::Facet(Arc::new(Facet {
                    outline: f.outline.clone(),
                    decomposition,
                    bvh: hierarchy,
                })),
                interior_sign: f.interior_sign,
                priority: id,
            });
        }
        let lift = |f: &FacetSpec, q: &P2| -> Point {
            let mut c = vec![Scalar::zero(); 3];
            c[f.axis] = f.offset.clone();
            let others: Vec<usize> = (0..3).filter(|&a| a != f.axis).collect();
            c[others[0]] = q[0].clone();
            c[others[1]] = q[1].clone();
            Point(c)
        };

        // every boundary edge piece is covered by exactly two facets
        type EdgeKey = (usize, Vec<Scalar>);
        let mut runs: BTreeMap<EdgeKey, Vec<(Scalar, Scalar, usize)>> = BTreeMap::new();
        for (id, f) in facets.iter().enumerate() {
            for (a, b) in polygon::edges(&f.outline) {
                let (pa, pb) = (lift(f, a), lift(f, b));
                let run = (0..3).find(|&k| pa.coord(k) != pb.coord(k)).unwrap();
                let fixed: Vec<Scalar> = (0..3).filter(|&k| k != run).map(|k| pa.coord(k).clone()).collect();
                let (lo, hi) = if pa.coord(run) < pb.coord(run) {
                    (pa.coord(run).clone(), pb.coord(run).clone())
                } else {
                    (pb.coord(run).clone(), pa.coord(run).clone())
                };
                runs.entry((run, fixed)).or_default().push((lo, hi, id));
            }
        }
        for ((run, fixed), pieces) in &runs {
            let cuts: BTreeSet<&Scalar> = pieces.iter().flat_map(|(lo, hi, _)| [lo, hi]).collect();
            let cuts: Vec<&Scalar> = cuts.into_iter().collect();
            for w in cuts.windows(2) {
                let owners: Vec<usize> =
                    pieces.iter().filter(|(lo, hi, _)| lo <= w[0] && w[1] <= hi).map(|p| p.2).collect();
                let describe = || {
                    let mut c: Vec<String> = fixed.iter().map(format_scalar).collect();
                    c.insert(*run, format!("{}..{}", format_scalar(w[0]), format_scalar(w[1])));
                    format!("({})", c.join(", "))
                };
                match owners.len() {
                    0 | 2 => {}
                    1 => return Err(ShapeError::NotClosed(format!("edge {} borders only facet {}", describe(), owners[0]))),
                    k => {
                        return Err(ShapeError::NonManifoldVertex(format!("edge {} is shared by {k} facets", describe())))
                    }
                }
                if owners.len() == 2 && facets[owners[0]].axis == facets[owners[1]].axis {
                    return Err(ShapeError::MalformedDocument(format!(
                        "coplanar facets {} and {} share edge {}",
                        owners[0],
                        owners[1],
                        describe()
                    )));
                }
            }
        }

        // coplanar facets must not overlap; perpendicular ones must not cross
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                let (a, b) = (&sites[i], &sites[j]);
                if a.hull == b.hull {
                    let fa = a.facet().unwrap();
                    if fa.decomposition.rects.iter().any(|r| b.footprint_meets(r, true)) {
                        return Err(ShapeError::SelfIntersecting(format!("coplanar facets {i} and {j} overlap")));
                    }
                } else if a.axis() != b.axis() && (crosses(a, b) || crosses(b, a)) {
                    return Err(ShapeError::SelfIntersecting(format!("facets {i} and {j} cross")));
                }
            }
        }

        // every vertex lies on exactly three facets
        let mut vertices: BTreeSet<Point> = BTreeSet::new();
        for f in &facets {
            for q in &f.outline {
                vertices.insert(lift(f, q));
            }
        }
        let mut corners = Vec::new();
        for v in vertices {
            let on: Vec<usize> = sites.iter().filter(|s| s.contains(&v)).map(|s| s.id).collect();
            if on.len() != 3 {
                return Err(ShapeError::NonManifoldVertex(format!(
                    "vertex {} lies on {} facets, expected 3",
                    show_pt(&v),
                    on.len()
                )));
            }
            let mut kinds = Vec::new();
            for x in 0..3 {
                for y in x + 1..3 {
                    let no_edge = |_| {
                        ShapeError::NonManifoldVertex(format!(
                            "vertex {}: facets {} and {} do not share an edge",
                            show_pt(&v),
                            on[x],
                            on[y]
                        ))
                    };
                    let there = site_corner(&sites[on[x]], &sites[on[y]]).map_err(no_edge)?.kind;
                    let back = site_corner(&sites[on[y]], &sites[on[x]]).map_err(no_edge)?.kind;
                    if there != back {
                        return Err(ShapeError::MalformedDocument(format!(
                            "facets {} and {} have inconsistent interior signs",
                            on[x], on[y]
                        )));
                    }
                    kinds.push(there);
                }
            }
            let kind = if kinds.iter().all(|k| *k == CornerKind::Convex) {
                CornerKind::Convex
            } else if kinds.iter().all(|k| *k == CornerKind::Reflex) {
                CornerKind::Reflex
            } else {
                CornerKind::Mixed
            };
            corners.push(ShapeCorner { point: v, sites: on, kind });
        }

        // consistent orientation: the divergence theorem gives the same
        // positive volume along each axis
        let mut volumes = Vec::new();
        for axis in 0..3 {
            let mut vol = Scalar::zero();
            for (f, s) in facets.iter().zip(&sites) {
                if f.axis == axis {
                    let area = s.facet().unwrap().decomposition.area();
                    vol -= area * &f.offset * int(f.interior_sign as i64);
                }
            }
            volumes.push(vol);
        }
        if !volumes[0].is_positive() || volumes[0] != volumes[1] || volumes[1] != volumes[2] {
            return Err(ShapeError::MalformedDocument("facet interior signs are inconsistent".into()));
        }

        let all_vertices: Vec<Vec<Scalar>> = corners.iter().map(|c| c.point.0.clone()).collect();
        let root_box = root_box_of(all_vertices.into_iter(), 3);
        Ok(Self::assemble(3, sites, Vec::new(), corners, root_box, scale, None, None))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dimension: usize,
        sites: Vec<Site>,
        contours: Vec<Vec<P2>>,
        corners: Vec<ShapeCorner>,
        root_box: AxisBox,
        scale: ScaleRecord,
        decomposition: Option<RectDecomposition>,
        bvh: Option<Bvh>,
    ) -> Self {
        let mut corners_by_site = vec![Vec::new(); sites.len()];
        for (i, c) in corners.iter().enumerate() {
            for &s in &c.sites {
                corners_by_site[s].push(i);
            }
        }
        OrthogonalShape { dimension, sites, contours, corners, corners_by_site, root_box, scale, decomposition, bvh }
    }

    /// Number of polygon vertices (2D) or polyhedron vertices (3D).
    pub fn vertex_count(&self) -> usize {
        self.corners.len()
    }

    pub fn hole_count(&self) -> usize {
        self.contours.len().saturating_sub(1)
    }

    pub fn facet_specs(&self) -> Vec<FacetSpec> {
        self.sites
            .iter()
            .filter_map(|s| {
                s.facet().map(|f| FacetSpec {
                    axis: s.axis(),
                    offset: s.offset().clone(),
                    outline: f.outline.clone(),
                    interior_sign: s.interior_sign,
                })
            })
            .collect()
    }

    /// Translates and scales so the root box becomes the unit square/cube.
    pub fn scale_to_unit(&self) -> Result<OrthogonalShape, ShapeError> {
        let edge = self.root_box.edge();
        if edge.is_zero() {
            return Err(ShapeError::Degenerate("bounding box has zero extent".into()));
        }
        let d = self.dimension;
        let lower: Vec<Scalar> = (0..d).map(|i| self.root_box.min(i)).collect();
        let map = |axis: usize, v: &Scalar| (v - &lower[axis]) / &edge;
        let scale = ScaleRecord {
            factor: &self.scale.factor * &edge,
            offset: self.scale.to_original(&Point(lower.clone())),
        };
        if d == 2 {
            let contours = self
                .contours
                .iter()
                .map(|c| c.iter().map(|p| [map(0, &p[0]), map(1, &p[1])]).collect())
                .collect();
            OrthogonalShape::from_contours(contours, scale)
        } else {
            let facets = self
                .facet_specs()
                .into_iter()
                .map(|f| {
                    let others: Vec<usize> = (0..3).filter(|&a| a != f.axis).collect();
                    FacetSpec {
                        axis: f.axis,
                        offset: map(f.axis, &f.offset),
                        outline: f.outline.iter().map(|q| [map(others[0], &q[0]), map(others[1], &q[1])]).collect(),
                        interior_sign: f.interior_sign,
                    }
                })
                .collect();
            OrthogonalShape::from_facets(facets, scale)
        }
    }

    /// Reflex (270°) vertices of a 2D shape.
    pub fn reflex_vertices(&self) -> Result<Vec<Point>, ShapeError> {
        if self.dimension != 2 {
            return Err(ShapeError::WrongDimension { expected: 2 });
        }
        Ok(self.corners.iter().filter(|c| c.kind == CornerKind::Reflex).map(|c| c.point.clone()).collect())
    }
}

/// Does a plane of `b` cut through the open interior of facet `a`?
fn crosses(a: &Site, b: &Site) -> bool {
    let (fa, fb) = (a.facet().unwrap(), b.facet().unwrap());
    let ka = a.axis();
    let kb = b.axis();
    let cb = b.offset();
    let m = 3 - ka - kb;
    let across = plane_index(ka, kb);
    let along = plane_index(ka, m);
    fa.decomposition.rects.iter().any(|r| {
        if !(r.min.0[across] < *cb && *cb < r.max.0[across]) {
            return false;
        }
        // segment of `a` at x_kb = cb, spanning r along m, at x_ka = ca
        let mut min = vec![Scalar::zero(); 2];
        let mut max = vec![Scalar::zero(); 2];
        min[plane_index(kb, ka)] = a.offset().clone();
        max[plane_index(kb, ka)] = a.offset().clone();
        min[plane_index(kb, m)] = r.min.0[along].clone();
        max[plane_index(kb, m)] = r.max.0[along].clone();
        let seg = Aabb::new(Point(min), Point(max));
        fb.decomposition.rects.iter().any(|rb| rb.overlaps(&seg, true))
    })
}

fn root_box_of(points: impl Iterator<Item = Vec<Scalar>>, d: usize) -> AxisBox {
    let mut lo: Vec<Option<Scalar>> = vec![None; d];
    let mut hi: Vec<Option<Scalar>> = vec![None; d];
    for p in points {
        for i in 0..d {
            if lo[i].as_ref().map_or(true, |v| p[i] < *v) {
                lo[i] = Some(p[i].clone());
            }
            if hi[i].as_ref().map_or(true, |v| p[i] > *v) {
                hi[i] = Some(p[i].clone());
            }
        }
    }
    let lo: Vec<Scalar> = lo.into_iter().map(|v| v.unwrap_or_else(Scalar::zero)).collect();
    let hi: Vec<Scalar> = hi.into_iter().map(|v| v.unwrap_or_else(Scalar::zero)).collect();
    let two = int(2);
    let radius = (0..d).map(|i| &hi[i] - &lo[i]).max().unwrap_or_else(Scalar::zero) / &two;
    let center = Point((0..d).map(|i| (&lo[i] + &hi[i]) / &two).collect());
    AxisBox::new(center, radius)
}

/// Classifies the corner formed by two adjacent sites with respect to the
/// interior of the shape.
pub fn site_corner(s1: &Site, s2: &Site) -> Result<SiteCorner, ShapeError> {
    let not_adjacent = || ShapeError::NotAdjacent(s1.id, s2.id);
    let (k1, k2) = (s1.axis(), s2.axis());
    if k1 == k2 {
        return Err(not_adjacent());
    }
    // e2: the side of aff(s1) on which s2 lies
    match (&s1.geometry, &s2.geometry) {
        (SiteGeometry::Segment { .. }, SiteGeometry::Segment { lo, hi }) => {
            let (a0, a1) = s1.endpoints().unwrap();
            let (b0, b1) = s2.endpoints().unwrap();
            let shared = [&a0, &a1].into_iter().find(|p| **p == b0 || **p == b1).ok_or_else(not_adjacent)?;
            let q = shared.coord(k1);
            let e2 = if q == lo && hi > lo { 1 } else { -1 };
            let kind = if e2 == s1.interior_sign { CornerKind::Convex } else { CornerKind::Reflex };
            Ok(SiteCorner { from: shared.clone(), to: shared.clone(), kind })
        }
        (SiteGeometry::Facet(_), SiteGeometry::Facet(f2)) => {
            let m = 3 - k1 - k2;
            let (c1, c2) = (s1.offset(), s2.offset());
            let a = s1.slice(plane_index(k1, m), c2);
            let b = s2.slice(plane_index(k2, m), c1);
            let mut best: Option<(Scalar, Scalar)> = None;
            for (alo, ahi) in &a {
                for (blo, bhi) in &b {
                    let lo = alo.max(blo).clone();
                    let hi = ahi.min(bhi).clone();
                    if lo < hi && best.as_ref().map_or(true, |(l, _)| lo < *l) {
                        best = Some((lo, hi));
                    }
                }
            }
            let (lo, hi) = best.ok_or_else(not_adjacent)?;
            let (i1, im) = (plane_index(k2, k1), plane_index(k2, m));
            let rect = f2
                .decomposition
                .rects
                .iter()
                .find(|r| r.min.0[i1] <= *c1 && *c1 <= r.max.0[i1] && r.min.0[im] < hi && lo < r.max.0[im])
                .ok_or_else(not_adjacent)?;
            let e2 = if rect.min.0[i1] == *c1 {
                1
            } else if rect.max.0[i1] == *c1 {
                -1
            } else {
                return Err(not_adjacent());
            };
            let kind = if e2 == s1.interior_sign { CornerKind::Convex } else { CornerKind::Reflex };
            let at = |v: &Scalar| {
                let mut c = vec![Scalar::zero(); 3];
                c[k1] = c1.clone();
                c[k2] = c2.clone();
                c[m] = v.clone();
                Point(c)
            };
            Ok(SiteCorner { from: at(&lo), to: at(&hi), kind })
        }
        _ => Err(not_adjacent()),
    }
}

// ---------------------------------------------------------------------------
// documents

/// A coordinate in a document: a JSON integer or a `"num/den"` string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Int(i64),
    Text(String),
}

impl Coord {
    pub fn from_scalar(v: &Scalar) -> Coord {
        use num_traits::ToPrimitive;
        match (v.denom().is_one(), v.numer().to_i64()) {
            (true, Some(i)) => Coord::Int(i),
            _ => Coord::Text(format_scalar(v)),
        }
    }

    pub fn to_scalar(&self) -> Result<Scalar, ShapeError> {
        match self {
            Coord::Int(i) => Ok(int(*i)),
            Coord::Text(t) => parse_scalar(t).map_err(|e| ShapeError::MalformedDocument(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetDocument {
    pub axis: usize,
    pub offset: Coord,
    pub outer: Vec<Vec<Coord>>,
    pub interior_sign: i8,
}

/// On-disk shape description (JSON).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeDocument {
    pub dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outer: Option<Vec<Vec<Coord>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub holes: Vec<Vec<Vec<Coord>>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub facets: Vec<FacetDocument>,
}

fn read_cycle(raw: &[Vec<Coord>], what: &str) -> Result<Vec<P2>, ShapeError> {
    let mut out = Vec::with_capacity(raw.len());
    for v in raw {
        if v.len() != 2 {
            return Err(ShapeError::MalformedDocument(format!("{what}: vertex with {} coordinates", v.len())));
        }
        out.push([v[0].to_scalar()?, v[1].to_scalar()?]);
    }
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    Ok(out)
}

fn write_cycle(c: &[P2]) -> Vec<Vec<Coord>> {
    c.iter().map(|p| vec![Coord::from_scalar(&p[0]), Coord::from_scalar(&p[1])]).collect()
}

pub fn parse_shape(doc: &ShapeDocument) -> Result<OrthogonalShape, ShapeError> {
    match doc.dimension {
        2 => {
            if !doc.facets.is_empty() {
                return Err(ShapeError::MalformedDocument("2D document with facets".into()));
            }
            let outer = doc.outer.as_ref().ok_or_else(|| ShapeError::MalformedDocument("missing outer".into()))?;
            let mut contours = vec![read_cycle(outer, "outer contour")?];
            for (i, h) in doc.holes.iter().enumerate() {
                contours.push(read_cycle(h, &format!("hole {i}"))?);
            }
            OrthogonalShape::from_contours(contours, ScaleRecord::identity(2))
        }
        3 => {
            if doc.outer.is_some() || !doc.holes.is_empty() {
                return Err(ShapeError::MalformedDocument("3D document with polygon contours".into()));
            }
            let facets = doc
                .facets
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    Ok(FacetSpec {
                        axis: f.axis,
                        offset: f.offset.to_scalar()?,
                        outline: read_cycle(&f.outer, &format!("facet {i}"))?,
                        interior_sign: f.interior_sign,
                    })
                })
                .collect::<Result<Vec<_>, ShapeError>>()?;
            OrthogonalShape::from_facets(facets, ScaleRecord::identity(3))
        }
        d => Err(ShapeError::MalformedDocument(format!("unsupported dimension {d}"))),
    }
}

pub fn parse_shape_str(text: &str) -> Result<OrthogonalShape, ShapeError> {
    let doc: ShapeDocument =
        serde_json::from_str(text).map_err(|e| ShapeError::MalformedDocument(e.to_string()))?;
    parse_shape(&doc)
}

pub fn shape_document(shape: &OrthogonalShape) -> ShapeDocument {
    if shape.dimension == 2 {
        ShapeDocument {
            dimension: 2,
            outer: Some(write_cycle(&shape.contours[0])),
            holes: shape.contours[1..].iter().map(|c| write_cycle(c)).collect(),
            facets: Vec::new(),
        }
    } else {
        ShapeDocument {
            dimension: 3,
            outer: None,
            holes: Vec::new(),
            facets: shape
                .facet_specs()
                .iter()
                .map(|f| FacetDocument {
                    axis: f.axis,
                    offset: Coord::from_scalar(&f.offset),
                    outer: write_cycle(&f.outline),
                    interior_sign: f.interior_sign,
                })
                .collect(),
        }
    }
}

pub fn shape_to_string(shape: &OrthogonalShape) -> String {
    serde_json::to_string_pretty(&shape_document(shape)).expect("shape documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ratio;

    pub(crate) fn cyc(pts: &[(i64, i64)]) -> Vec<P2> {
        pts.iter().map(|&(x, y)| [int(x), int(y)]).collect()
    }

    fn l_shape() -> OrthogonalShape {
        OrthogonalShape::from_contours(vec![cyc(&[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])], ScaleRecord::identity(2))
            .unwrap()
    }

    #[test]
    fn unit_square_has_four_sites() {
        let s = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        assert_eq!(s.sites.len(), 4);
        assert_eq!(s.root_box, AxisBox::new(Point(vec![ratio(1, 2), ratio(1, 2)]), ratio(1, 2)));
        // bottom edge: on y = 0, interior above
        assert_eq!(s.sites[0].hull, AffineHull::new(1, int(0)));
        assert_eq!(s.sites[0].interior_sign, 1);
        // right edge: on x = 1, interior to the left
        assert_eq!(s.sites[1].hull, AffineHull::new(0, int(1)));
        assert_eq!(s.sites[1].interior_sign, -1);
        assert_eq!(s.sites[2].interior_sign, -1);
        assert_eq!(s.sites[3].interior_sign, 1);
    }

    #[test]
    fn l_shape_has_one_reflex_vertex() {
        let s = l_shape();
        assert_eq!(s.sites.len(), 6);
        assert_eq!(s.reflex_vertices().unwrap(), vec![Point::from_ints(&[1, 1])]);
    }

    #[test]
    fn square_with_hole() {
        let s = parse_shape_str(
            r#"{"dimension":2,"outer":[[0,0],[4,0],[4,4],[0,4]],"holes":[[[1,1],[1,3],[3,3],[3,1]]]}"#,
        )
        .unwrap();
        assert_eq!(s.sites.len(), 8);
        assert_eq!(s.hole_count(), 1);
        assert_eq!(s.reflex_vertices().unwrap().len(), 4);
        // hole's bottom edge (3,1)->(1,1) runs left, interior of P below it
        assert_eq!(s.sites[7].hull, AffineHull::new(1, int(1)));
        assert_eq!(s.sites[7].interior_sign, -1);
    }

    #[test]
    fn rational_literals_round_trip() {
        let text = r#"{"dimension":2,"outer":[["0","0"],["3/2",0],["3/2","1/3"],[0,"1/3"]]}"#;
        let s = parse_shape_str(text).unwrap();
        assert_eq!(s.contours[0][1][0], ratio(3, 2));
        let again = parse_shape_str(&shape_to_string(&s)).unwrap();
        assert_eq!(again.contours, s.contours);
    }

    #[test]
    fn validation_errors() {
        let p = |t: &str| parse_shape_str(t).unwrap_err();
        assert!(matches!(p(r#"{"dimension":2,"outer":[[0,0],[2,1],[2,2],[0,2]]}"#), ShapeError::NotAxisAligned(_)));
        assert!(matches!(p(r#"{"dimension":2,"outer":[[0,0],[2,0],[2,2],[1,2]]}"#), ShapeError::NotClosed(_)));
        assert!(matches!(p(r#"{"dimension":2,"outer":[[0,0],[2,0],[2,2]]}"#), ShapeError::NotClosed(_)));
        // two squares touching at (1,1)
        assert!(matches!(
            p(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[2,1],[2,2],[1,2],[1,1],[0,1]]}"#),
            ShapeError::NonManifoldVertex(_)
        ));
        // bow-tie style crossing
        assert!(matches!(
            p(r#"{"dimension":2,"outer":[[0,0],[3,0],[3,2],[1,2],[1,-1],[0,-1]]}"#),
            ShapeError::SelfIntersecting(_)
        ));
        assert!(matches!(
            p(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]],"holes":[[[5,5],[5,6],[6,6],[6,5]]]}"#),
            ShapeError::HoleOutsideOuter(_)
        ));
        assert!(matches!(p(r#"{"dimension":2,"outer":[[0,0],[0,1],[1,1],[1,0]]}"#), ShapeError::MalformedDocument(_)));
        assert!(matches!(p(r#"{"dimension":2}"#), ShapeError::MalformedDocument(_)));
        assert!(matches!(p("not json"), ShapeError::MalformedDocument(_)));
    }

    #[test]
    fn scaling_examples() {
        let rect = OrthogonalShape::from_contours(vec![cyc(&[(0, 0), (4, 0), (4, 2), (0, 2)])], ScaleRecord::identity(2)).unwrap();
        let unit = rect.scale_to_unit().unwrap();
        assert_eq!(unit.contours[0], vec![
            [int(0), ratio(1, 4)],
            [int(1), ratio(1, 4)],
            [int(1), ratio(3, 4)],
            [int(0), ratio(3, 4)],
        ]);
        assert_eq!(unit.root_box, AxisBox::new(Point(vec![ratio(1, 2), ratio(1, 2)]), ratio(1, 2)));
        assert_eq!(unit.scale.to_original(&Point(vec![ratio(1, 4), ratio(1, 2)])), Point::from_ints(&[1, 1]));

        let square = OrthogonalShape::from_contours(vec![cyc(&[(0, 0), (1, 0), (1, 1), (0, 1)])], ScaleRecord::identity(2)).unwrap();
        let same = square.scale_to_unit().unwrap();
        assert_eq!(same.contours, square.contours);
        assert_eq!(same.scale, ScaleRecord::identity(2));
    }

    #[test]
    fn corners_2d() {
        let sq = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        let c = site_corner(&sq.sites[0], &sq.sites[1]).unwrap();
        assert_eq!(c.from, Point::from_ints(&[1, 0]));
        assert_eq!(c.kind, CornerKind::Convex);
        assert_eq!(site_corner(&sq.sites[0], &sq.sites[2]), Err(ShapeError::NotAdjacent(0, 2)));
        let l = l_shape();
        // edges (2,1)->(1,1) and (1,1)->(1,2)
        let c = site_corner(&l.sites[2], &l.sites[3]).unwrap();
        assert_eq!(c.from, Point::from_ints(&[1, 1]));
        assert_eq!(c.kind, CornerKind::Reflex);
    }

    pub(crate) fn box_facets(size: [i64; 3]) -> Vec<FacetSpec> {
        let mut out = Vec::new();
        for axis in 0..3 {
            let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
            let (w, h) = (size[others[0]], size[others[1]]);
            let outline = cyc(&[(0, 0), (w, 0), (w, h), (0, h)]);
            out.push(FacetSpec { axis, offset: int(0), outline: outline.clone(), interior_sign: 1 });
            out.push(FacetSpec { axis, offset: int(size[axis]), outline, interior_sign: -1 });
        }
        out
    }

    #[test]
    fn cube_parses_and_scales() {
        let cube = OrthogonalShape::from_facets(box_facets([2, 2, 2]), ScaleRecord::identity(3)).unwrap();
        assert_eq!(cube.sites.len(), 6);
        assert_eq!(cube.corners.len(), 8);
        assert!(cube.corners.iter().all(|c| c.kind == CornerKind::Convex));
        let unit = cube.scale_to_unit().unwrap();
        assert_eq!(unit.root_box, AxisBox::new(Point(vec![ratio(1, 2); 3]), ratio(1, 2)));
        assert_eq!(unit.scale.factor, int(2));
        let doc = shape_document(&unit);
        let again = parse_shape(&doc).unwrap();
        assert_eq!(shape_document(&again), doc);
    }

    #[test]
    fn flipped_facet_is_rejected() {
        let mut f = box_facets([1, 1, 1]);
        f[0].interior_sign = -1;
        assert!(matches!(
            OrthogonalShape::from_facets(f, ScaleRecord::identity(3)),
            Err(ShapeError::MalformedDocument(_))
        ));
        let mut open = box_facets([1, 1, 1]);
        open.pop();
        assert!(OrthogonalShape::from_facets(open, ScaleRecord::identity(3)).is_err());
    }

    #[test]
    fn corners_3d() {
        let cube = OrthogonalShape::from_facets(box_facets([1, 1, 1]), ScaleRecord::identity(3)).unwrap();
        // x = 0 and y = 0 share the edge along z
        let c = site_corner(&cube.sites[0], &cube.sites[2]).unwrap();
        assert_eq!(c.kind, CornerKind::Convex);
        assert_eq!((c.from, c.to), (Point::from_ints(&[0, 0, 0]), Point::from_ints(&[0, 0, 1])));
        assert_eq!(site_corner(&cube.sites[0], &cube.sites[1]), Err(ShapeError::NotAdjacent(0, 1)));
    }
}
