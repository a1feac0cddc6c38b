//! Planar helpers for rectilinear contours: area, point location and
//! segment intersection. Contours are vertex cycles with the polygon
//! interior on the left of every edge (outer boundary counter-clockwise,
//! holes clockwise).

use num_traits::Zero;

use crate::geometry::Scalar;

pub type P2 = [Scalar; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

pub fn edges(contour: &[P2]) -> impl Iterator<Item = (&P2, &P2)> {
    contour
        .iter()
        .zip(contour.iter().cycle().skip(1))
        .take(contour.len())
}

/// Twice the signed area (positive for counter-clockwise cycles).
pub fn signed_area2(contour: &[P2]) -> Scalar {
    edges(contour).fold(Scalar::zero(), |acc, (a, b)| {
        acc + (&a[0] * &b[1] - &b[0] * &a[1])
    })
}

/// Area of the region bounded by all contours (holes carry negative area).
pub fn region_area(contours: &[Vec<P2>]) -> Scalar {
    contours.iter().map(|c| signed_area2(c)).sum::<Scalar>() / Scalar::from_integer(2.into())
}

pub fn on_segment(p: &P2, a: &P2, b: &P2) -> bool {
    let within = |i: usize| {
        let (lo, hi) = if a[i] <= b[i] { (&a[i], &b[i]) } else { (&b[i], &a[i]) };
        p[i] >= *lo && p[i] <= *hi
    };
    if a[0] == b[0] {
        p[0] == a[0] && within(1)
    } else if a[1] == b[1] {
        p[1] == a[1] && within(0)
    } else {
        false
    }
}

/// Location of `p` relative to the region bounded by `contours`, using a
/// horizontal ray and a half-open rule on vertical edges.
pub fn locate(p: &P2, contours: &[Vec<P2>]) -> Location {
    let mut crossings = 0usize;
    for contour in contours {
        for (a, b) in edges(contour) {
            if on_segment(p, a, b) {
                return Location::Boundary;
            }
            if a[0] == b[0] && a[0] > p[0] {
                let (lo, hi) = if a[1] <= b[1] { (&a[1], &b[1]) } else { (&b[1], &a[1]) };
                if *lo <= p[1] && p[1] < *hi {
                    crossings += 1;
                }
            }
        }
    }
    if crossings % 2 == 1 {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Closed intersection test for two axis-parallel segments.
pub fn segments_meet(a0: &P2, a1: &P2, b0: &P2, b1: &P2) -> bool {
    (0..2).all(|i| {
        let (alo, ahi) = if a0[i] <= a1[i] { (&a0[i], &a1[i]) } else { (&a1[i], &a0[i]) };
        let (blo, bhi) = if b0[i] <= b1[i] { (&b0[i], &b1[i]) } else { (&b1[i], &b0[i]) };
        alo <= bhi && blo <= ahi
    })
}

/// Vertices where the boundary turns right, i.e. interior angle 270°.
pub fn reflex_indices(contour: &[P2]) -> Vec<usize> {
    let n = contour.len();
    (0..n)
        .filter(|&i| {
            let prev = &contour[(i + n - 1) % n];
            let cur = &contour[i];
            let next = &contour[(i + 1) % n];
            let cross = (&cur[0] - &prev[0]) * (&next[1] - &cur[1])
                - (&cur[1] - &prev[1]) * (&next[0] - &cur[0]);
            cross < Scalar::zero()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{int, ratio};

    fn c(pts: &[(i64, i64)]) -> Vec<P2> {
        pts.iter().map(|&(x, y)| [int(x), int(y)]).collect()
    }

    #[test]
    fn l_shape_area_and_reflex() {
        let l = c(&[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]);
        assert_eq!(signed_area2(&l), int(6));
        assert_eq!(reflex_indices(&l), vec![3]);
    }

    #[test]
    fn locate_with_hole() {
        let outer = c(&[(0, 0), (4, 0), (4, 4), (0, 4)]);
        let hole = c(&[(1, 1), (1, 3), (3, 3), (3, 1)]);
        let region = vec![outer, hole];
        assert_eq!(region_area(&region), int(12));
        assert_eq!(locate(&[ratio(1, 2), int(2)], &region), Location::Inside);
        assert_eq!(locate(&[int(2), int(2)], &region), Location::Outside);
        assert_eq!(locate(&[int(1), int(2)], &region), Location::Boundary);
        assert_eq!(locate(&[int(5), int(1)], &region), Location::Outside);
        // ray passes exactly through vertices
        assert_eq!(locate(&[ratio(1, 2), int(1)], &region), Location::Inside);
        assert_eq!(locate(&[ratio(1, 2), int(3)], &region), Location::Inside);
    }
}
