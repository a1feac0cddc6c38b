//! Quadtree/octree refinement: active sets, label sets and termination.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{int, Aabb, AxisBox, Point, Scalar};
use crate::predicates::{
    bvh_locate, in_halfspace, in_zone, is_intersecting, locate_point, location_test, oriented_zone_in_cell, voronoi_vertex_test,
    PredicateError,
};
use crate::shape::{OrthogonalShape, Site};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubdivisionError {
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

impl From<PredicateError> for SubdivisionError {
    fn from(e: PredicateError) -> Self {
        SubdivisionError::Inconsistent(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Subdivided,
    T1,
    T2,
    T3,
    T4,
    T1Prime,
    T2Prime,
    T3Prime,
    DepthLimit,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Subdivided => "subdivided",
            Verdict::T1 => "T1",
            Verdict::T2 => "T2",
            Verdict::T3 => "T3",
            Verdict::T4 => "T4",
            Verdict::T1Prime => "T1'",
            Verdict::T2Prime => "T2'",
            Verdict::T3Prime => "T3'",
            Verdict::DepthLimit => "depth-limit",
        }
    }

    /// Leaves whose interior carries no part of the diagram.
    pub fn is_empty_leaf(self) -> bool {
        matches!(self, Verdict::T1 | Verdict::T2 | Verdict::T1Prime)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BvhMode {
    #[default]
    Auto,
    On,
    Off,
}

/// Candidate-set size above which `auto` locates points through the BVH.
pub const BVH_AUTO_THRESHOLD: usize = 16;

#[derive(Debug, Clone)]
pub struct SubdivisionConfig {
    pub max_depth: u32,
    pub bvh: BvhMode,
    /// Once this many cells exist, cells still waiting to be split become
    /// depth-limit leaves. Guards against degenerate inputs whose diagram
    /// keeps more sites equidistant along a whole curve or surface.
    pub max_cells: usize,
}

impl Default for SubdivisionConfig {
    fn default() -> Self {
        SubdivisionConfig { max_depth: 32, bvh: BvhMode::Auto, max_cells: 250_000 }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub bbox: AxisBox,
    pub depth: u32,
    pub parent: Option<usize>,
    /// Index of the first of the 2^d consecutive children.
    pub children: Option<usize>,
    pub active: Vec<usize>,
    /// Sites meeting this cell.
    pub locators: Arc<Vec<usize>>,
    /// Whether the center lies in the closed shape.
    pub inside: bool,
    pub delta: Scalar,
    pub center_label: Vec<usize>,
    pub corner_labels: Vec<Vec<usize>>,
    pub verdict: Verdict,
    pub vertex: Option<Point>,
}

impl Cell {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SubdivisionStats {
    pub cells: usize,
    pub leaves: BTreeMap<String, usize>,
    pub max_depth: u32,
    pub min_leaf_edge: String,
    pub cells_per_level: Vec<usize>,
    pub active_per_level: Vec<usize>,
    pub depth_limit_hits: usize,
}

#[derive(Debug, Clone)]
pub struct SubdivisionTree {
    pub dimension: usize,
    pub cells: Vec<Cell>,
    pub stats: SubdivisionStats,
}

impl SubdivisionTree {
    pub fn root(&self) -> &Cell {
        &self.cells[0]
    }

    pub fn leaves(&self) -> impl Iterator<Item = (usize, &Cell)> {
        self.cells.iter().enumerate().filter(|(_, c)| c.is_leaf())
    }

    pub fn children(&self, id: usize) -> Option<std::ops::Range<usize>> {
        self.cells[id].children.map(|f| f..f + (1 << self.dimension))
    }

    /// All leaves whose closed box contains `p`.
    pub fn leaves_containing(&self, p: &Point) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            if !self.cells[id].bbox.contains(p) {
                continue;
            }
            match self.children(id) {
                Some(r) => stack.extend(r),
                None => out.push(id),
            }
        }
        out.sort_unstable();
        out
    }
}

/// Drops sites of the active set that cannot win anywhere in the cell
/// because a same-hull site of higher priority covers the whole cell with
/// its oriented zone.
fn prune_by_priority(active: Vec<usize>, sites: &[Site], c: &AxisBox) -> Vec<usize> {
    let mut keep = Vec::with_capacity(active.len());
    'outer: for &lo in &active {
        let s = &sites[lo];
        for &hi in &active {
            let t = &sites[hi];
            if t.priority <= s.priority || t.hull != s.hull || t.interior_sign != s.interior_sign {
                continue;
            }
            if covers_cell(t, c) {
                continue 'outer;
            }
        }
        keep.push(lo);
    }
    keep
}

/// Sufficient test for `C ⊆ Z⁺(t)`: the cell is on the interior side and
/// a point of `t` is within `ρ_min − r` of the projected center, where
/// `ρ_min` is the gap of the cell's nearer face.
fn covers_cell(t: &Site, c: &AxisBox) -> bool {
    let k = t.axis();
    let rho = if t.interior_sign > 0 { c.min(k) - t.offset() } else { t.offset() - c.max(k) };
    if rho < c.radius {
        return false;
    }
    let slack = rho - &c.radius;
    t.footprint_meets(&Aabb::around(&c.center.drop_axis(k), &slack), false)
}

/// Label set of a point: empty outside the shape, else the sites of
/// minimal restricted distance among `candidates` (same-hull ties go to the
/// higher priority). Also returns the minimum distance.
pub fn label_set(
    p: &Point,
    inside: bool,
    candidates: &[usize],
    sites: &[Site],
) -> Result<(Vec<usize>, Option<Scalar>), SubdivisionError> {
    if !inside {
        return Ok((Vec::new(), None));
    }
    // A finite restricted distance is the signed gap, so candidates are tried
    // in gap order and the zone tests stop past the first hit.
    let mut order: Vec<(Scalar, usize)> = candidates
        .iter()
        .filter(|&&id| in_halfspace(p, &sites[id]))
        .map(|&id| (sites[id].hull.distance(p), id))
        .collect();
    order.sort();
    let mut best: Option<Scalar> = None;
    let mut label: Vec<usize> = Vec::new();
    for (d, id) in order {
        if best.as_ref().is_some_and(|b| d > *b) {
            break;
        }
        if in_zone(p, &sites[id]) {
            best = Some(d);
            label.push(id);
        }
    }
    label.sort_unstable();
    if best.is_none() && !candidates.is_empty() {
        return Err(SubdivisionError::Inconsistent(format!("no finite restricted distance at {p:?}")));
    }
    Ok((resolve_ties(label, sites), best))
}

/// Removes sites tied with a same-hull site of higher priority.
pub fn resolve_ties(mut label: Vec<usize>, sites: &[Site]) -> Vec<usize> {
    let all = label.clone();
    label.retain(|&a| !all.iter().any(|&b| sites[b].hull == sites[a].hull && sites[b].priority > sites[a].priority));
    label.sort_unstable();
    label
}

struct Driver<'a> {
    shape: &'a OrthogonalShape,
    config: &'a SubdivisionConfig,
    corner_memo: HashMap<Point, Vec<usize>>,
}

impl<'a> Driver<'a> {
    fn use_bvh(&self, candidates: &[usize]) -> bool {
        match self.config.bvh {
            BvhMode::On => true,
            BvhMode::Off => false,
            BvhMode::Auto => candidates.len() > BVH_AUTO_THRESHOLD,
        }
    }

    /// Location of a cell center. The sites meeting the cell are enough: any
    /// site closer to the center than the nearest of them lies in the cell.
    /// A cell meeting no site has the status of its parent's center, which is
    /// one of its corners.
    fn center_inside(
        &self,
        p: &Point,
        candidates: &[usize],
        meeting: &[usize],
        parent_inside: Option<bool>,
    ) -> Result<bool, SubdivisionError> {
        if self.use_bvh(candidates) {
            if let Some(v) = bvh_locate(p, self.shape) {
                return Ok(v);
            }
        }
        match parent_inside {
            Some(v) if meeting.is_empty() => Ok(v),
            _ if meeting.is_empty() => Ok(locate_point(p, self.shape)),
            _ => Ok(location_test(p, meeting, self.shape)?),
        }
    }

    /// Location of any other point; no local candidate set is valid there.
    fn point_inside(&self, p: &Point, candidates: &[usize]) -> bool {
        if self.use_bvh(candidates) {
            if let Some(v) = bvh_locate(p, self.shape) {
                return v;
            }
        }
        locate_point(p, self.shape)
    }

    fn process(
        &mut self,
        bbox: AxisBox,
        depth: u32,
        parent: Option<usize>,
        candidates: &[usize],
        parent_inside: Option<bool>,
    ) -> Result<Cell, SubdivisionError> {
        let sites = &self.shape.sites;
        let meeting: Vec<usize> = candidates.iter().copied().filter(|&s| is_intersecting(&sites[s], &bbox, false)).collect();
        let center = bbox.center.clone();
        let inside = self.center_inside(&center, candidates, &meeting, parent_inside)?;
        let locators = Arc::new(meeting);
        let (center_label, best) = label_set(&center, inside, candidates, sites)?;
        let delta = best.unwrap_or_else(Scalar::zero);

        let threshold = &bbox.radius * int(2) + &delta;
        let active: Vec<usize> = candidates
            .iter()
            .copied()
            .filter(|&s| oriented_zone_in_cell(&sites[s], &bbox) && sites[s].distance(&center) <= threshold)
            .collect();
        let active = prune_by_priority(active, sites, &bbox);

        let mut corner_labels = Vec::new();
        let mut verdict = None;
        let d = self.shape.dimension;
        if d == 2 {
            for corner in bbox.corners() {
                let label = match self.corner_memo.get(&corner) {
                    Some(l) => l.clone(),
                    None => {
                        let inside = self.point_inside(&corner, candidates);
                        let (l, _) = label_set(&corner, inside, candidates, sites)?;
                        self.corner_memo.insert(corner, l.clone());
                        l
                    }
                };
                corner_labels.push(label);
            }
            if corner_labels[0].len() == 1 && corner_labels.iter().all(|l| *l == corner_labels[0]) {
                verdict = Some(Verdict::T1);
            }
        }
        let mut vertex = None;
        if verdict.is_none() {
            let open_clear = center_label.is_empty() && !active.iter().any(|&s| is_intersecting(&sites[s], &bbox, true));
            let active_sites: Vec<&Site> = active.iter().map(|&s| &sites[s]).collect();
            // sites on one hull with one orientation share a distance function
            let classes = active_sites.iter().map(|s| (&s.hull, s.interior_sign)).collect::<BTreeSet<_>>().len();
            verdict = if d == 2 {
                if open_clear {
                    Some(Verdict::T2)
                } else if classes <= 3 {
                    Some(Verdict::T3)
                } else if classes <= 8 {
                    vertex = voronoi_vertex_test(&bbox, &active_sites);
                    vertex.as_ref().map(|_| Verdict::T4)
                } else {
                    None
                }
            } else if open_clear {
                Some(Verdict::T1Prime)
            } else if classes <= 4 {
                Some(Verdict::T2Prime)
            } else if classes <= 24 {
                vertex = voronoi_vertex_test(&bbox, &active_sites);
                vertex.as_ref().map(|_| Verdict::T3Prime)
            } else {
                None
            };
        }
        let verdict = match verdict {
            Some(v) => v,
            None if depth >= self.config.max_depth => Verdict::DepthLimit,
            None => Verdict::Subdivided,
        };
        Ok(Cell {
            bbox,
            depth,
            parent,
            children: None,
            active,
            locators,
            inside,
            delta,
            center_label,
            corner_labels,
            verdict,
            vertex,
        })
    }
}

/// Runs the refinement on a unit-scaled shape (breadth-first).
pub fn subdivide(shape: &OrthogonalShape, config: &SubdivisionConfig) -> Result<SubdivisionTree, SubdivisionError> {
    let mut driver = Driver { shape, config, corner_memo: HashMap::new() };
    let all: Vec<usize> = (0..shape.sites.len()).collect();
    let root = driver.process(shape.root_box.clone(), 0, None, &all, None)?;
    let mut cells = vec![root];
    let mut queue = VecDeque::from([0usize]);
    let fan = 1usize << shape.dimension;
    while let Some(id) = queue.pop_front() {
        if cells[id].verdict != Verdict::Subdivided {
            continue;
        }
        if cells.len() + fan > config.max_cells {
            cells[id].verdict = Verdict::DepthLimit;
            continue;
        }
        let first = cells.len();
        let (bbox, depth, active, inside) = {
            let c = &cells[id];
            (c.bbox.clone(), c.depth, c.active.clone(), c.inside)
        };
        for i in 0..fan {
            let child = driver.process(bbox.child(i), depth + 1, Some(id), &active, Some(inside))?;
            cells.push(child);
            queue.push_back(first + i);
        }
        cells[id].children = Some(first);
    }
    let stats = collect_stats(&cells);
    Ok(SubdivisionTree { dimension: shape.dimension, cells, stats })
}

fn collect_stats(cells: &[Cell]) -> SubdivisionStats {
    let mut stats = SubdivisionStats { cells: cells.len(), ..Default::default() };
    let mut min_edge: Option<Scalar> = None;
    for c in cells {
        let level = c.depth as usize;
        if stats.cells_per_level.len() <= level {
            stats.cells_per_level.resize(level + 1, 0);
            stats.active_per_level.resize(level + 1, 0);
        }
        stats.cells_per_level[level] += 1;
        stats.active_per_level[level] += c.active.len();
        stats.max_depth = stats.max_depth.max(c.depth);
        if c.is_leaf() {
            *stats.leaves.entry(c.verdict.name().to_string()).or_default() += 1;
            if c.verdict == Verdict::DepthLimit {
                stats.depth_limit_hits += 1;
            }
            let e = c.bbox.edge();
            if min_edge.as_ref().map_or(true, |m| e < *m) {
                min_edge = Some(e);
            }
        }
    }
    stats.min_leaf_edge = min_edge.map(|e| crate::geometry::format_scalar(&e)).unwrap_or_default();
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{half, ratio};
    use crate::shape::parse_shape_str;

    fn unit(text: &str) -> OrthogonalShape {
        parse_shape_str(text).unwrap().scale_to_unit().unwrap()
    }

    #[test]
    fn unit_square_is_one_t4_cell() {
        let sq = unit(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#);
        let tree = subdivide(&sq, &SubdivisionConfig::default()).unwrap();
        assert_eq!(tree.cells.len(), 1);
        let root = tree.root();
        assert_eq!(root.verdict, Verdict::T4);
        assert_eq!(root.delta, half());
        assert_eq!(root.active, vec![0, 1, 2, 3]);
        assert_eq!(root.center_label, vec![0, 1, 2, 3]);
        assert_eq!(root.vertex, Some(Point(vec![half(), half()])));
    }

    #[test]
    fn label_examples() {
        let sq = unit(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#);
        let all = [0, 1, 2, 3];
        let (l, _) = label_set(&Point(vec![half(), ratio(1, 4)]), true, &all, &sq.sites).unwrap();
        assert_eq!(l, vec![0]);
        let (l, _) = label_set(&Point::from_ints(&[2, 2]), false, &all, &sq.sites).unwrap();
        assert!(l.is_empty());
    }

    #[test]
    fn rectangle_terminates_without_depth_limit() {
        let r = unit(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#);
        let tree = subdivide(&r, &SubdivisionConfig::default()).unwrap();
        assert_eq!(tree.stats.depth_limit_hits, 0);
        assert_eq!(tree.cells.len(), 5);
        assert!(tree.leaves().all(|(_, c)| c.verdict == Verdict::T3 && c.active.len() == 3));
    }

    #[test]
    fn unit_cube_is_one_cell() {
        let mut facets = Vec::new();
        for axis in 0..3 {
            facets.push(format!(r#"{{"axis":{axis},"offset":0,"outer":[[0,0],[1,0],[1,1],[0,1]],"interior_sign":1}}"#));
            facets.push(format!(r#"{{"axis":{axis},"offset":1,"outer":[[0,0],[1,0],[1,1],[0,1]],"interior_sign":-1}}"#));
        }
        let cube = unit(&format!(r#"{{"dimension":3,"facets":[{}]}}"#, facets.join(",")));
        let tree = subdivide(&cube, &SubdivisionConfig::default()).unwrap();
        assert_eq!(tree.cells.len(), 1);
        assert_eq!(tree.root().verdict, Verdict::T3Prime);
        assert_eq!(tree.root().vertex, Some(Point(vec![half(); 3])));
    }
}
