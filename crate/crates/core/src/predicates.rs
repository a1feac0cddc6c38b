//! Exact geometric tests on sites: zones, restricted distances, bisectors,
//! point location and Voronoi vertex detection.

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::geometry::{half, int, Aabb, AxisBox, Point, Scalar};
use crate::shape::{site_corner, CornerKind, OrthogonalShape, Site};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredicateError {
    #[error("no site of the candidate set is nearest to {0:?}")]
    EmptyNearestSet(Point),
}

pub fn in_halfspace(p: &Point, s: &Site) -> bool {
    let gap = s.hull.signed_gap(p);
    if s.interior_sign > 0 {
        !gap.is_negative()
    } else {
        !gap.is_positive()
    }
}

/// Is `p` in the zone of `s`, i.e. is its distance to `s` realized on the hull?
pub fn in_zone(p: &Point, s: &Site) -> bool {
    let gap = s.hull.distance(p);
    s.footprint_meets(&Aabb::around(&p.drop_axis(s.axis()), &gap), false)
}

pub fn in_oriented_zone(p: &Point, s: &Site) -> bool {
    in_halfspace(p, s) && in_zone(p, s)
}

/// `D_s(p)`: distance to the hull inside the oriented zone, `None` (∞) outside.
pub fn restricted_distance(p: &Point, s: &Site) -> Option<Scalar> {
    if in_oriented_zone(p, s) {
        Some(s.hull.distance(p))
    } else {
        None
    }
}

/// Footprint of the cell on the hull of `s` (plane coordinates).
fn footprint(s: &Site, c: &AxisBox, grow: &Scalar) -> Aabb {
    Aabb::around(&c.center.drop_axis(s.axis()), &(&c.radius + grow))
}

/// Does the zone of `s` meet the closed cell?
pub fn zone_in_cell(s: &Site, c: &AxisBox) -> bool {
    let k = s.axis();
    let rho = [(c.min(k) - s.offset()).abs(), (c.max(k) - s.offset()).abs()];
    rho.iter().any(|r| s.footprint_meets(&footprint(s, c, r), false))
}

/// Does the oriented zone of `s` meet the closed cell? The cell is first
/// clipped to the interior halfspace, then tested like [`zone_in_cell`].
pub fn oriented_zone_in_cell(s: &Site, c: &AxisBox) -> bool {
    let k = s.axis();
    let (lo, hi) = (c.min(k), c.max(k));
    let off = s.offset();
    let far = if s.interior_sign > 0 {
        if hi < *off {
            return false;
        }
        hi - off
    } else {
        if lo > *off {
            return false;
        }
        off - lo
    };
    s.footprint_meets(&footprint(s, c, &far), false)
}

/// Does the site meet the closed cell, or with `strict` its interior?
pub fn is_intersecting(s: &Site, c: &AxisBox, strict: bool) -> bool {
    let k = s.axis();
    let off = s.offset();
    let (lo, hi) = (c.min(k), c.max(k));
    let across = if strict { lo < *off && *off < hi } else { lo <= *off && *off <= hi };
    across && s.footprint_meets(&footprint(s, c, &Scalar::zero()), strict)
}

/// Does a site meet the closed L∞ ball around `center`?
pub fn meets_ball(s: &Site, center: &Point, radius: &Scalar) -> bool {
    s.hull.distance(center) <= *radius && s.footprint_meets(&Aabb::around(&center.drop_axis(s.axis()), radius), false)
}

// ---------------------------------------------------------------------------
// point location

/// Decides whether `p` lies in the closed shape using the sites in
/// `candidates`, which must contain every site meeting some cell that
/// contains `p`. An empty candidate set means that cell is interior.
pub fn location_test(p: &Point, candidates: &[usize], shape: &OrthogonalShape) -> Result<bool, PredicateError> {
    if candidates.is_empty() {
        return Ok(true);
    }
    let sites = &shape.sites;
    let mut best: Option<Scalar> = None;
    let mut nearest: Vec<usize> = Vec::new();
    for &id in candidates {
        let s = &sites[id];
        if !in_zone(p, s) {
            continue;
        }
        let d = s.distance(p);
        match &best {
            Some(b) if d > *b => {}
            Some(b) if d == *b => nearest.push(id),
            _ => {
                best = Some(d);
                nearest = vec![id];
            }
        }
    }
    let Some(d) = best else {
        return Err(PredicateError::EmptyNearestSet(p.clone()));
    };
    if d.is_zero() {
        return Ok(true);
    }
    // a contact in the open face of the ball sees only one site locally
    for &id in &nearest {
        let s = &sites[id];
        if s.footprint_meets(&Aabb::around(&p.drop_axis(s.axis()), &d), true) {
            return Ok(in_halfspace(p, s));
        }
    }
    let s = &sites[nearest[0]];
    let touching: Vec<&Site> = nearest
        .iter()
        .map(|&id| &sites[id])
        .filter(|t| t.id == s.id || site_corner(s, t).is_ok())
        .collect();
    let kinds: Vec<CornerKind> = touching
        .iter()
        .enumerate()
        .flat_map(|(i, a)| touching[i + 1..].iter().map(move |b| (*a, *b)))
        .filter_map(|(a, b)| site_corner(a, b).ok().map(|c| c.kind))
        .collect();
    let zone = |t: &&Site| in_oriented_zone(p, t);
    match touching.len() {
        1 => Ok(in_halfspace(p, s)),
        2 | 3 if kinds.len() == touching.len() * (touching.len() - 1) / 2 => {
            if kinds.iter().all(|k| *k == CornerKind::Convex) {
                Ok(touching.iter().all(zone))
            } else if kinds.iter().all(|k| *k == CornerKind::Reflex) {
                Ok(touching.iter().any(zone))
            } else {
                Ok(ray_parity(p, shape))
            }
        }
        _ => Ok(ray_parity(p, shape)),
    }
}

/// Exact parity test along the ray from `p` in direction +x₀, with the
/// remaining coordinates perturbed by (ε, ε²). `p` must not lie on the
/// boundary.
pub fn ray_parity(p: &Point, shape: &OrthogonalShape) -> bool {
    let mut inside = false;
    for s in &shape.sites {
        if s.axis() != 0 || s.offset() <= p.coord(0) {
            continue;
        }
        let q = p.drop_axis(0);
        let hit = match (&s.geometry, s.facet()) {
            (crate::shape::SiteGeometry::Segment { lo, hi }, _) => *lo <= q[0] && q[0] < *hi,
            (_, Some(f)) => f
                .decomposition
                .rects
                .iter()
                .any(|r| r.min.0[0] <= q[0] && q[0] < r.max.0[0] && r.min.0[1] <= q[1] && q[1] < r.max.0[1]),
            _ => false,
        };
        if hit {
            inside = !inside;
        }
    }
    inside
}

/// Location of an arbitrary point in the closed shape, without a candidate
/// set: on-site check, then exact ray parity.
pub fn locate_point(p: &Point, shape: &OrthogonalShape) -> bool {
    shape.sites.iter().any(|s| s.contains(p)) || ray_parity(p, shape)
}

/// Point location through the whole-polygon hierarchy (2D only).
pub fn bvh_locate(p: &Point, shape: &OrthogonalShape) -> Option<bool> {
    shape.bvh.as_ref().map(|b| !b.point_query(p.coords()).is_empty())
}

// ---------------------------------------------------------------------------
// bisectors and equidistant flats

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BisectorKind {
    AxisParallel,
    Diagonal,
}

/// The set `σ₁(x_{k₁} − c₁) = σ₂(x_{k₂} − c₂)`: a midline/midplane when the
/// axes agree, a diagonal line/plane otherwise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bisector {
    pub kind: BisectorKind,
    pub sites: (usize, usize),
    pub terms: [(usize, Scalar, i8); 2],
}

impl Bisector {
    pub fn contains(&self, p: &Point) -> bool {
        let side = |(k, c, sigma): &(usize, Scalar, i8)| (p.coord(*k) - c) * int(*sigma as i64);
        side(&self.terms[0]) == side(&self.terms[1])
    }
}

/// Does `s` reach the side `sigma` of the coordinate `at` along `axis`?
fn extends_towards(s: &Site, axis: usize, at: &Scalar, sigma: i8) -> bool {
    match &s.geometry {
        crate::shape::SiteGeometry::Segment { lo, hi } => {
            debug_assert_eq!(axis, 1 - s.axis());
            if sigma > 0 {
                hi >= at
            } else {
                lo <= at
            }
        }
        crate::shape::SiteGeometry::Facet(_) => true,
    }
}

pub fn affine_bisector(s1: &Site, s2: &Site) -> Option<Bisector> {
    let terms = [
        (s1.axis(), s1.offset().clone(), s1.interior_sign),
        (s2.axis(), s2.offset().clone(), s2.interior_sign),
    ];
    let sites = (s1.id, s2.id);
    if s1.axis() == s2.axis() {
        let facing = s1.interior_sign != s2.interior_sign
            && (s1.offset() < s2.offset()) == (s1.interior_sign > 0)
            && s1.offset() != s2.offset();
        return facing.then_some(Bisector { kind: BisectorKind::AxisParallel, sites, terms });
    }
    // in 2D the oriented zones meet along the diagonal only if each segment
    // reaches into the other's interior side
    let ok = extends_towards(s1, s2.axis(), s2.offset(), s2.interior_sign)
        && extends_towards(s2, s1.axis(), s1.offset(), s1.interior_sign);
    ok.then_some(Bisector { kind: BisectorKind::Diagonal, sites, terms })
}

/// Points at equal gap `t ≥ 0` from the hulls of a set of sites, each on
/// its interior side: every site imposes `x_k = c + σ t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquidistantFlat {
    /// Fixed gap, if the equations determine it.
    pub t: Option<Scalar>,
    /// Per axis: `Some((c, σ))` if the coordinate is `c + σ t`, `None` if free.
    pub axes: Vec<Option<(Scalar, i8)>>,
}

impl EquidistantFlat {
    pub fn dimension(&self) -> usize {
        self.axes.iter().filter(|a| a.is_none()).count() + usize::from(self.t.is_none())
    }

    pub fn point(&self) -> Option<Point> {
        if self.dimension() != 0 {
            return None;
        }
        let t = self.t.as_ref()?;
        Some(Point(self.axes.iter().map(|a| {
            let (c, sigma) = a.as_ref().unwrap();
            c + t * int(*sigma as i64)
        }).collect()))
    }

    /// Clips a one-dimensional flat to a closed box, returning the end points
    /// of the (possibly degenerate) segment.
    pub fn clip(&self, b: &Aabb) -> Option<(Point, Point)> {
        if self.dimension() != 1 {
            return None;
        }
        let d = self.axes.len();
        // parameter u: the gap t when it is free, else the free coordinate
        let free_axis = self.axes.iter().position(|a| a.is_none());
        let mut lo: Option<Scalar> = None;
        let mut hi: Option<Scalar> = None;
        let tighten = |lo: &mut Option<Scalar>, hi: &mut Option<Scalar>, l: Scalar, h: Scalar| {
            if lo.as_ref().map_or(true, |v| l > *v) {
                *lo = Some(l);
            }
            if hi.as_ref().map_or(true, |v| h < *v) {
                *hi = Some(h);
            }
        };
        match (&self.t, free_axis) {
            (Some(t), Some(f)) => {
                tighten(&mut lo, &mut hi, b.min.0[f].clone(), b.max.0[f].clone());
                for (k, a) in self.axes.iter().enumerate() {
                    if let Some((c, sigma)) = a {
                        let x = c + t * int(*sigma as i64);
                        if x < b.min.0[k] || x > b.max.0[k] {
                            return None;
                        }
                    }
                }
            }
            (None, None) => {
                lo = Some(Scalar::zero());
                for (k, a) in self.axes.iter().enumerate() {
                    let (c, sigma) = a.as_ref().unwrap();
                    let (l, h) = if *sigma > 0 {
                        (&b.min.0[k] - c, &b.max.0[k] - c)
                    } else {
                        (c - &b.max.0[k], c - &b.min.0[k])
                    };
                    tighten(&mut lo, &mut hi, l, h);
                }
            }
            _ => return None,
        }
        let (lo, hi) = (lo?, hi?);
        if lo > hi {
            return None;
        }
        let at = |u: &Scalar| -> Point {
            Point((0..d).map(|k| match (&self.axes[k], &self.t) {
                (None, _) => u.clone(),
                (Some((c, sigma)), Some(t)) => c + t * int(*sigma as i64),
                (Some((c, sigma)), None) => c + u * int(*sigma as i64),
            }).collect())
        };
        Some((at(&lo), at(&hi)))
    }
}

/// Solves the equal-gap system for the given sites; `None` if inconsistent
/// or if the only solutions have negative gap.
pub fn equidistant_flat(sites: &[&Site], dim: usize) -> Option<EquidistantFlat> {
    let mut axes: Vec<Option<(Scalar, i8)>> = vec![None; dim];
    let mut t: Option<Scalar> = None;
    let fix = |v: Scalar, t: &mut Option<Scalar>| -> bool {
        match t {
            Some(old) => *old == v,
            None => {
                *t = Some(v);
                true
            }
        }
    };
    for s in sites {
        let k = s.axis();
        let (c, sigma) = (s.offset().clone(), s.interior_sign);
        match &axes[k] {
            None => axes[k] = Some((c, sigma)),
            Some((c0, s0)) => {
                if *s0 == sigma {
                    if *c0 != c {
                        return None;
                    }
                } else {
                    // c0 + s0 t = c + σ t
                    let v = (&c - c0) / int((*s0 - sigma) as i64);
                    if !fix(v, &mut t) {
                        return None;
                    }
                }
            }
        }
    }
    if t.as_ref().is_some_and(|v| v.is_negative()) {
        return None;
    }
    Some(EquidistantFlat { t, axes })
}

/// The point equidistant (under the restricted distance) to all given sites,
/// provided it lies in the closed cell and in every oriented zone.
pub fn voronoi_vertex_test(c: &AxisBox, sites: &[&Site]) -> Option<Point> {
    let dim = c.dim();
    if sites.len() < dim + 1 {
        return None;
    }
    let v = equidistant_flat(sites, dim)?.point()?;
    (c.contains(&v) && sites.iter().all(|s| in_zone(&v, s))).then_some(v)
}

/// Midpoint helper for callers placing nodes on clipped segments.
pub fn segment_midpoint(a: &Point, b: &Point) -> Point {
    Point(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) * half()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ratio;
    use crate::shape::parse_shape_str;

    fn square() -> OrthogonalShape {
        parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap()
    }

    fn segment_shape() -> OrthogonalShape {
        // bottom edge (0,0)-(2,0), interior up
        parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[2,0],[2,2],[0,2]]}"#).unwrap()
    }

    fn l_shape() -> OrthogonalShape {
        parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[2,0],[2,1],[1,1],[1,2],[0,2]]}"#).unwrap()
    }

    fn pt(x: Scalar, y: Scalar) -> Point {
        Point(vec![x, y])
    }

    #[test]
    fn halfspace_examples() {
        let sq = square();
        let b = &sq.sites[0];
        assert!(in_halfspace(&pt(ratio(1, 2), ratio(3, 10)), b));
        assert!(!in_halfspace(&pt(ratio(1, 2), ratio(-1, 10)), b));
        assert!(in_halfspace(&pt(ratio(1, 2), int(0)), b));
    }

    #[test]
    fn zone_examples() {
        let sh = segment_shape();
        let s = &sh.sites[0];
        assert!(in_zone(&Point::from_ints(&[1, 1]), s));
        assert!(!in_zone(&Point::from_ints(&[5, 1]), s));
        assert!(in_zone(&Point::from_ints(&[3, 1]), s));
    }

    #[test]
    fn restricted_distance_examples() {
        let sq = square();
        assert_eq!(restricted_distance(&pt(half(), half()), &sq.sites[0]), Some(half()));
        assert_eq!(restricted_distance(&pt(half(), int(-1)), &sq.sites[0]), None);
        let sh = segment_shape();
        assert_eq!(restricted_distance(&Point::from_ints(&[5, 1]), &sh.sites[0]), None);
    }

    #[test]
    fn zone_in_cell_examples() {
        let sh = segment_shape();
        let s = &sh.sites[0];
        assert!(zone_in_cell(s, &AxisBox::new(pt(ratio(5, 2), half()), half())));
        assert!(!zone_in_cell(s, &AxisBox::new(pt(int(5), half()), half())));
        assert!(zone_in_cell(s, &AxisBox::new(pt(int(1), int(0)), half())));
        assert!(!oriented_zone_in_cell(s, &AxisBox::new(pt(int(1), int(-2)), half())));
    }

    #[test]
    fn intersecting_examples() {
        let sh = segment_shape();
        let s = &sh.sites[0];
        let on_boundary = AxisBox::new(pt(int(1), half()), half());
        assert!(is_intersecting(s, &on_boundary, false));
        assert!(!is_intersecting(s, &on_boundary, true));
        assert!(is_intersecting(s, &AxisBox::new(pt(int(1), int(0)), half()), true));
    }

    #[test]
    fn location_examples() {
        let sq = square();
        let all: Vec<usize> = (0..4).collect();
        assert!(location_test(&pt(half(), half()), &all, &sq).unwrap());
        let l = l_shape();
        let all: Vec<usize> = (0..6).collect();
        assert!(!location_test(&pt(ratio(6, 5), ratio(6, 5)), &all, &l).unwrap());
        assert!(location_test(&pt(ratio(9, 10), ratio(9, 10)), &all, &l).unwrap());
        assert!(!location_test(&pt(int(3), int(3)), &all, &l).unwrap());
        // diagonal through the reflex corner, outside
        assert!(!location_test(&pt(ratio(3, 2), ratio(3, 2)), &all, &l).unwrap());
    }

    #[test]
    fn bisector_examples() {
        let sq = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#).unwrap();
        let (bottom, top, left) = (&sq.sites[0], &sq.sites[2], &sq.sites[3]);
        let diag = affine_bisector(bottom, left).unwrap();
        assert_eq!(diag.kind, BisectorKind::Diagonal);
        assert!(diag.contains(&Point::from_ints(&[1, 1])));
        assert!(!diag.contains(&Point::from_ints(&[1, 0])));
        let mid = affine_bisector(bottom, top).unwrap();
        assert_eq!(mid.kind, BisectorKind::AxisParallel);
        assert!(mid.contains(&Point::from_ints(&[7, 1])));
        assert_eq!(affine_bisector(bottom, bottom), None);
    }

    #[test]
    fn disjoint_perpendicular_zones_have_no_bisector() {
        // notch: the edge x=3 (interior right, y in [1,2]) and bottom y=0
        // restricted to x in [0,1] face away from each other
        let sh = parse_shape_str(
            r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[3,1],[3,0],[5,0],[5,3],[0,3]]}"#,
        )
        .unwrap();
        let bottom_left = &sh.sites[0];
        let notch_right = &sh.sites[3];
        assert_eq!(notch_right.axis(), 0);
        assert_eq!(affine_bisector(bottom_left, notch_right), None);
    }

    #[test]
    fn vertex_examples() {
        let sq = square();
        let all: Vec<&Site> = sq.sites.iter().collect();
        assert_eq!(voronoi_vertex_test(&sq.root_box, &all), Some(pt(half(), half())));
        let r = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#).unwrap();
        let three = [&r.sites[0], &r.sites[2], &r.sites[3]];
        let c = AxisBox::new(Point::from_ints(&[1, 1]), half());
        assert_eq!(voronoi_vertex_test(&c, &three), Some(Point::from_ints(&[1, 1])));
        let far = AxisBox::new(Point::from_ints(&[3, 1]), half());
        assert_eq!(voronoi_vertex_test(&far, &three), None);
    }

    #[test]
    fn flat_clipping() {
        let r = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#).unwrap();
        let f = equidistant_flat(&[&r.sites[0], &r.sites[2]], 2).unwrap();
        assert_eq!(f.dimension(), 1);
        let b = Aabb::new(Point::from_ints(&[0, 0]), Point::from_ints(&[2, 2]));
        assert_eq!(f.clip(&b), Some((Point::from_ints(&[0, 1]), Point::from_ints(&[2, 1]))));
        let g = equidistant_flat(&[&r.sites[0], &r.sites[3]], 2).unwrap();
        assert_eq!(g.clip(&b), Some((Point::from_ints(&[0, 0]), Point::from_ints(&[2, 2]))));
    }
}
