//! Exact rational scalars, points, boxes and affine hulls.
//!
//! Everything here is exact: coordinates are arbitrary-precision rationals and
//! no operation rounds. Boxes come in two flavours: [`AxisBox`] is an L∞ ball
//! (a square or cube given by center and radius, the shape of every
//! subdivision cell) and [`Aabb`] is a general axis-aligned box given by its
//! min/max corners.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Exact rational number in canonical form (reduced, positive denominator).
pub type Scalar = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid rational literal {0:?}")]
    BadLiteral(String),
}

pub fn int(v: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Scalar {
    Scalar::new(BigInt::from(n), BigInt::from(d))
}

pub fn half() -> Scalar {
    ratio(1, 2)
}

/// Parses `"7"`, `"-3/4"` or `"6/8"` (reduced on the way in).
pub fn parse_scalar(text: &str) -> Result<Scalar, GeometryError> {
    let t = text.trim();
    let bad = || GeometryError::BadLiteral(text.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(Scalar::new(n, d))
        }
        None => {
            let n: BigInt = t.parse().map_err(|_| bad())?;
            Ok(Scalar::from_integer(n))
        }
    }
}

/// Canonical text form: `"n"` for integers, `"n/d"` otherwise.
pub fn format_scalar(v: &Scalar) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

/// Lossy conversion for rendering only.
pub fn to_f64(v: &Scalar) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(f64::NAN)
}

fn max_of(a: Scalar, b: Scalar) -> Scalar {
    if a >= b {
        a
    } else {
        b
    }
}

/// A point in 2 or 3 dimensions.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point(pub Vec<Scalar>);

impl Point {
    pub fn new(coords: Vec<Scalar>) -> Self {
        Point(coords)
    }

    pub fn from_ints(coords: &[i64]) -> Self {
        Point(coords.iter().map(|&c| int(c)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coord(&self, axis: usize) -> &Scalar {
        &self.0[axis]
    }

    pub fn coords(&self) -> &[Scalar] {
        &self.0
    }

    /// Coordinates with `axis` removed, i.e. the point expressed in the
    /// coordinate frame of a hyperplane `x_axis = const`.
    pub fn drop_axis(&self, axis: usize) -> Vec<Scalar> {
        self.0
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != axis)
            .map(|(_, c)| c.clone())
            .collect()
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (a + b) / int(2))
                .collect(),
        )
    }

    fn check_dim(&self, other: usize) -> Result<(), GeometryError> {
        if self.dim() == other {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch(self.dim(), other))
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", format_scalar(c))?;
        }
        write!(f, ")")
    }
}

/// L∞ ball: the closed square/cube with the given center and half edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxisBox {
    pub center: Point,
    pub radius: Scalar,
}

impl AxisBox {
    pub fn new(center: Point, radius: Scalar) -> Self {
        debug_assert!(!radius.is_negative());
        AxisBox { center, radius }
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn min(&self, axis: usize) -> Scalar {
        self.center.coord(axis) - &self.radius
    }

    pub fn max(&self, axis: usize) -> Scalar {
        self.center.coord(axis) + &self.radius
    }

    pub fn edge(&self) -> Scalar {
        &self.radius * int(2)
    }

    pub fn to_aabb(&self) -> Aabb {
        let d = self.dim();
        Aabb {
            min: Point((0..d).map(|i| self.min(i)).collect()),
            max: Point((0..d).map(|i| self.max(i)).collect()),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim()).all(|i| {
            let c = p.coord(i);
            *c >= self.min(i) && *c <= self.max(i)
        })
    }

    /// Child cell `index`; bit `i` of the index selects the upper half along axis `i`.
    pub fn child(&self, index: usize) -> AxisBox {
        let r = &self.radius / int(2);
        let center = Point(
            (0..self.dim())
                .map(|i| {
                    if index >> i & 1 == 1 {
                        self.center.coord(i) + &r
                    } else {
                        self.center.coord(i) - &r
                    }
                })
                .collect(),
        );
        AxisBox::new(center, r)
    }

    /// All 2^d corners, ordered by the same bit convention as [`AxisBox::child`].
    pub fn corners(&self) -> Vec<Point> {
        let d = self.dim();
        (0..1usize << d)
            .map(|index| {
                Point(
                    (0..d)
                        .map(|i| if index >> i & 1 == 1 { self.max(i) } else { self.min(i) })
                        .collect(),
                )
            })
            .collect()
    }
}

/// General closed axis-aligned box.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Aabb {
    pub min: Point,
    pub max: Point,
}

impl Aabb {
    pub fn new(min: Point, max: Point) -> Self {
        Aabb { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.dim()
    }

    pub fn around(center: &[Scalar], radius: &Scalar) -> Aabb {
        Aabb {
            min: Point(center.iter().map(|c| c - radius).collect()),
            max: Point(center.iter().map(|c| c + radius).collect()),
        }
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: Point(
                self.min.0.iter().zip(&other.min.0).map(|(a, b)| a.min(b).clone()).collect(),
            ),
            max: Point(
                self.max.0.iter().zip(&other.max.0).map(|(a, b)| a.max(b).clone()).collect(),
            ),
        }
    }

    /// Closed overlap, or (`strict`) overlap with the open interior of `other`.
    /// The strict form also covers degenerate closed boxes meeting an open one.
    pub fn overlaps(&self, other: &Aabb, strict: bool) -> bool {
        (0..self.dim()).all(|i| {
            if strict {
                self.min.0[i] < other.max.0[i] && other.min.0[i] < self.max.0[i]
            } else {
                self.min.0[i] <= other.max.0[i] && other.min.0[i] <= self.max.0[i]
            }
        })
    }

    pub fn contains(&self, p: &[Scalar]) -> bool {
        p.iter()
            .enumerate()
            .all(|(i, c)| *c >= self.min.0[i] && *c <= self.max.0[i])
    }

    pub fn volume(&self) -> Scalar {
        (0..self.dim()).fold(Scalar::one(), |acc, i| acc * (&self.max.0[i] - &self.min.0[i]))
    }

    /// L∞ distance from `p` to this closed box (0 inside).
    pub fn linf_distance(&self, p: &[Scalar]) -> Scalar {
        let mut best = Scalar::zero();
        for (i, c) in p.iter().enumerate() {
            let gap = if *c < self.min.0[i] {
                &self.min.0[i] - c
            } else if *c > self.max.0[i] {
                c - &self.max.0[i]
            } else {
                continue;
            };
            best = max_of(best, gap);
        }
        best
    }
}

/// The hyperplane `{x : x[axis] = offset}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineHull {
    pub axis: usize,
    pub offset: Scalar,
}

impl AffineHull {
    pub fn new(axis: usize, offset: Scalar) -> Self {
        AffineHull { axis, offset }
    }

    /// Signed offset of `p` from the hull along its axis.
    pub fn signed_gap(&self, p: &Point) -> Scalar {
        p.coord(self.axis) - &self.offset
    }

    pub fn distance(&self, p: &Point) -> Scalar {
        self.signed_gap(p).abs()
    }
}

pub fn linf_distance(p: &Point, q: &Point) -> Result<Scalar, GeometryError> {
    p.check_dim(q.dim())?;
    Ok(p.0
        .iter()
        .zip(&q.0)
        .fold(Scalar::zero(), |acc, (a, b)| max_of(acc, (a - b).abs())))
}

pub fn linf_distance_to_box(p: &Point, b: &AxisBox) -> Result<Scalar, GeometryError> {
    p.check_dim(b.dim())?;
    Ok(b.to_aabb().linf_distance(p.coords()))
}

pub fn project_to_hull(p: &Point, h: &AffineHull) -> Point {
    let mut q = p.clone();
    q.0[h.axis] = h.offset.clone();
    q
}

pub fn boxes_overlap(a: &AxisBox, b: &AxisBox, strict: bool) -> Result<bool, GeometryError> {
    a.center.check_dim(b.dim())?;
    Ok(a.to_aabb().overlaps(&b.to_aabb(), strict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(c: &[i64]) -> Point {
        Point::from_ints(c)
    }

    #[test]
    fn linf_distance_examples() {
        assert_eq!(linf_distance(&pt(&[0, 0]), &pt(&[3, 4])).unwrap(), int(4));
        assert_eq!(linf_distance(&pt(&[5, 7]), &pt(&[5, 7])).unwrap(), int(0));
        assert_eq!(linf_distance(&pt(&[1, 2, 3]), &pt(&[2, 2, 1])).unwrap(), int(2));
        assert_eq!(
            linf_distance(&pt(&[1, 2]), &pt(&[1, 2, 3])),
            Err(GeometryError::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn distance_to_box_examples() {
        let b = AxisBox::new(pt(&[0, 0]), int(1));
        assert_eq!(linf_distance_to_box(&pt(&[0, 0]), &b).unwrap(), int(0));
        assert_eq!(linf_distance_to_box(&pt(&[3, 0]), &b).unwrap(), int(2));
        assert_eq!(linf_distance_to_box(&pt(&[3, 5]), &b).unwrap(), int(4));
        assert!(linf_distance_to_box(&pt(&[3, 5, 1]), &b).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_to_hull(&pt(&[1, 1]), &AffineHull::new(1, int(0))), pt(&[1, 0]));
        assert_eq!(project_to_hull(&pt(&[5, 2, 7]), &AffineHull::new(0, int(0))), pt(&[0, 2, 7]));
        assert_eq!(project_to_hull(&pt(&[4, 0]), &AffineHull::new(1, int(0))), pt(&[4, 0]));
    }

    #[test]
    fn overlap_examples() {
        let a = AxisBox::new(pt(&[0, 0]), int(1));
        let touching = AxisBox::new(pt(&[2, 0]), int(1));
        let far = AxisBox::new(pt(&[5, 5]), int(1));
        assert!(boxes_overlap(&a, &touching, false).unwrap());
        assert!(!boxes_overlap(&a, &touching, true).unwrap());
        assert!(!boxes_overlap(&a, &far, false).unwrap());
    }

    #[test]
    fn scalar_text_round_trip() {
        assert_eq!(parse_scalar("6/8").unwrap(), ratio(3, 4));
        assert_eq!(format_scalar(&ratio(3, 4)), "3/4");
        assert_eq!(format_scalar(&int(-2)), "-2");
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn children_tile_parent() {
        let b = AxisBox::new(pt(&[0, 0, 0]), int(2));
        let total: Scalar = (0..8).map(|i| b.child(i).to_aabb().volume()).sum();
        assert_eq!(total, b.to_aabb().volume());
        assert_eq!(b.child(0b101).center, pt(&[1, -1, 1]));
    }

    fn rational() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..50).prop_map(|(n, d)| ratio(n, d))
    }

    fn point2() -> impl Strategy<Value = Point> {
        (rational(), rational()).prop_map(|(x, y)| Point(vec![x, y]))
    }

    proptest! {
        #[test]
        fn arithmetic_is_exact(a in rational(), b in rational()) {
            prop_assert_eq!(&(&a + &b) - &b, a);
        }

        #[test]
        fn linf_is_a_metric(p in point2(), q in point2(), r in point2()) {
            let pq = linf_distance(&p, &q).unwrap();
            prop_assert_eq!(&pq, &linf_distance(&q, &p).unwrap());
            prop_assert_eq!(pq.is_zero(), p == q);
            let pr = linf_distance(&p, &r).unwrap();
            let rq = linf_distance(&r, &q).unwrap();
            prop_assert!(pq <= pr + rq);
        }

        #[test]
        fn projection_is_idempotent(p in point2(), off in rational(), axis in 0usize..2) {
            let h = AffineHull::new(axis, off);
            let once = project_to_hull(&p, &h);
            prop_assert_eq!(project_to_hull(&once, &h), once);
        }
    }
}
