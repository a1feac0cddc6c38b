//! Seeded random orthogonal shapes: polygons with holes carved from a
//! pixel raster and polyhedra carved from a voxel block.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::int;
use crate::polygon::P2;
use crate::shape::{FacetSpec, OrthogonalShape, ScaleRecord, ShapeError};

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error("generated shape failed validation: {0}")]
    Shape(#[from] ShapeError),
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
}

type Cell2 = (i64, i64);

/// Boundary cycles of a pixel set, interior on the left, collinear vertices
/// removed. `None` if two pixels touch only at a corner.
fn trace(cells: &BTreeSet<Cell2>) -> Option<Vec<Vec<Cell2>>> {
    let has = |x: i64, y: i64| cells.contains(&(x, y));
    let mut next: HashMap<Cell2, Cell2> = HashMap::new();
    for &(x, y) in cells {
        for (x2, y2) in [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)] {
            let quad = [has(x2 - 1, y2 - 1), has(x2, y2 - 1), has(x2 - 1, y2), has(x2, y2)];
            if quad == [true, false, false, true] || quad == [false, true, true, false] {
                return None;
            }
        }
        if !has(x, y - 1) {
            next.insert((x, y), (x + 1, y));
        }
        if !has(x + 1, y) {
            next.insert((x + 1, y), (x + 1, y + 1));
        }
        if !has(x, y + 1) {
            next.insert((x + 1, y + 1), (x, y + 1));
        }
        if !has(x - 1, y) {
            next.insert((x, y + 1), (x, y));
        }
    }
    let mut starts: BTreeSet<Cell2> = next.keys().copied().collect();
    let mut cycles = Vec::new();
    while let Some(&start) = starts.iter().next() {
        let mut raw = vec![start];
        starts.remove(&start);
        let mut at = next[&start];
        while at != start {
            starts.remove(&at);
            raw.push(at);
            at = next[&at];
        }
        let n = raw.len();
        let cycle: Vec<Cell2> = (0..n)
            .filter(|&i| {
                let (p, c, q) = (raw[(i + n - 1) % n], raw[i], raw[(i + 1) % n]);
                !((p.0 == c.0 && c.0 == q.0) || (p.1 == c.1 && c.1 == q.1))
            })
            .map(|i| raw[i])
            .collect();
        cycles.push(cycle);
    }
    Some(cycles)
}

fn area2(c: &[Cell2]) -> i64 {
    (0..c.len()).map(|i| {
        let (a, b) = (c[i], c[(i + 1) % c.len()]);
        a.0 * b.1 - b.0 * a.1
    })
    .sum()
}

/// Increasing integer grid lines with random spacing, so edge lengths vary
/// and exact coincidences between distant features stay rare.
fn grid_lines(rng: &mut ChaCha8Rng, n: i64, gaps: std::ops::RangeInclusive<i64>) -> Vec<i64> {
    let mut v = vec![0];
    for _ in 0..n {
        let last = *v.last().unwrap();
        v.push(last + rng.gen_range(gaps.clone()));
    }
    v
}

/// Raster contours: one counter-clockwise outer cycle plus `holes` clockwise ones.
fn contours_of(cells: &BTreeSet<Cell2>, holes: usize) -> Option<Vec<Vec<Cell2>>> {
    let cycles = trace(cells)?;
    let (outer, inner): (Vec<_>, Vec<_>) = cycles.into_iter().partition(|c| area2(c) > 0);
    if outer.len() != 1 || inner.len() != holes {
        return None;
    }
    Some(outer.into_iter().chain(inner).collect())
}

/// A random orthogonal polygon with about `sites` edges and exactly `holes`
/// holes; deterministic in `seed`.
pub fn polygon(seed: u64, sites: usize, holes: usize) -> Result<OrthogonalShape, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 8 + sites as i64 / 4 + 3 * holes as i64;
    let mut cells: BTreeSet<Cell2> = (0..side).flat_map(|x| (0..side).map(move |y| (x, y))).collect();

    let mut placed: Vec<(i64, i64, i64, i64)> = Vec::new();
    while placed.len() < holes {
        let w = rng.gen_range(1..=(side / 5).max(1));
        let h = rng.gen_range(1..=(side / 5).max(1));
        let x0 = rng.gen_range(2..=(side - w - 2));
        let y0 = rng.gen_range(2..=(side - h - 2));
        let apart = placed.iter().all(|&(a, b, c, d)| x0 + w + 1 < a || c + 1 < x0 || y0 + h + 1 < b || d + 1 < y0);
        if apart {
            placed.push((x0, y0, x0 + w, y0 + h));
            for x in x0..x0 + w {
                for y in y0..y0 + h {
                    cells.remove(&(x, y));
                }
            }
        }
    }

    let target = sites.max(4);
    let mut best = contours_of(&cells, holes).expect("initial raster is valid");
    let count = |c: &Vec<Vec<Cell2>>| c.iter().map(Vec::len).sum::<usize>();
    for _ in 0..50 * target {
        if count(&best) + 2 >= target {
            break;
        }
        let w = rng.gen_range(1..=(side / 6).max(1));
        let h = rng.gen_range(1..=(side / 6).max(1));
        let x0 = rng.gen_range(-w + 1..side);
        let y0 = rng.gen_range(-h + 1..side);
        let mut trial = cells.clone();
        for x in x0..x0 + w {
            for y in y0..y0 + h {
                trial.remove(&(x, y));
            }
        }
        if trial.len() == cells.len() || trial.len() < cells.len() / 2 {
            continue;
        }
        if let Some(c) = contours_of(&trial, holes) {
            if count(&c) <= target + target / 10 {
                cells = trial;
                best = c;
            }
        }
    }

    let xs = grid_lines(&mut rng, side + 1, 1..=3);
    let ys = grid_lines(&mut rng, side + 1, 1..=3);
    let contours: Vec<Vec<P2>> = best
        .iter()
        .map(|c| c.iter().map(|&(x, y)| [int(xs[x as usize]), int(ys[y as usize])]).collect())
        .collect();
    Ok(OrthogonalShape::from_contours(contours, ScaleRecord::identity(2))?)
}

type Voxel = [i64; 3];

/// Facets of a voxel set, or `None` if some facet is not a simple polygon.
fn voxel_facets(voxels: &BTreeSet<Voxel>, lines: &[Vec<i64>; 3]) -> Option<Vec<FacetSpec>> {
    let mut groups: BTreeMap<(usize, i64, i8), BTreeSet<Cell2>> = BTreeMap::new();
    for v in voxels {
        for k in 0..3 {
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let (u, w) = (a.min(b), a.max(b));
            for (step, sign) in [(-1i64, 1i8), (1, -1)] {
                let mut n = *v;
                n[k] += step;
                if !voxels.contains(&n) {
                    let offset = if step < 0 { v[k] } else { v[k] + 1 };
                    groups.entry((k, offset, sign)).or_default().insert((v[u], v[w]));
                }
            }
        }
    }
    let mut facets = Vec::new();
    for ((k, offset, sign), mut faces) in groups {
        let (a, b) = ((k + 1) % 3, (k + 2) % 3);
        let (u, w) = (a.min(b), a.max(b));
        while let Some(&seed) = faces.iter().next() {
            let mut comp = BTreeSet::new();
            let mut stack = vec![seed];
            faces.remove(&seed);
            while let Some((x, y)) = stack.pop() {
                comp.insert((x, y));
                for n in [(x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)] {
                    if faces.remove(&n) {
                        stack.push(n);
                    }
                }
            }
            let cycles = trace(&comp)?;
            if cycles.len() != 1 {
                return None;
            }
            let outline = cycles[0]
                .iter()
                .map(|&(x, y)| [int(lines[u][x as usize]), int(lines[w][y as usize])])
                .collect();
            facets.push(FacetSpec { axis: k, offset: int(lines[k][offset as usize]), outline, interior_sign: sign });
        }
    }
    Some(facets)
}

/// A random orthogonal polyhedron with about `sites` facets, carved from a
/// voxel block; deterministic in `seed`.
pub fn polyhedron(seed: u64, sites: usize) -> Result<OrthogonalShape, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let side = 4 + sites as i64 / 12;
    let lines = [0; 3].map(|_| grid_lines(&mut rng, side + 1, 7..=61));
    let mut voxels: BTreeSet<Voxel> =
        (0..side).flat_map(|x| (0..side).flat_map(move |y| (0..side).map(move |z| [x, y, z]))).collect();
    let mut best = voxel_facets(&voxels, &lines).expect("a block has six facets");
    let target = sites.max(6);
    for _ in 0..50 * target {
        if best.len() + 2 >= target {
            break;
        }
        let size: Vec<i64> = (0..3).map(|_| rng.gen_range(1..=(side / 2).max(1))).collect();
        let lo: Vec<i64> = size.iter().map(|&s| rng.gen_range(-s + 1..side)).collect();
        let mut trial = voxels.clone();
        for x in lo[0]..lo[0] + size[0] {
            for y in lo[1]..lo[1] + size[1] {
                for z in lo[2]..lo[2] + size[2] {
                    trial.remove(&[x, y, z]);
                }
            }
        }
        if trial.len() == voxels.len() || trial.len() < voxels.len() / 2 {
            continue;
        }
        let Some(f) = voxel_facets(&trial, &lines) else { continue };
        if f.len() > target + target / 5 {
            continue;
        }
        if OrthogonalShape::from_facets(f.clone(), ScaleRecord::identity(3)).is_ok() {
            voxels = trial;
            best = f;
        }
    }
    Ok(OrthogonalShape::from_facets(best, ScaleRecord::identity(3))?)
}

pub fn generate(seed: u64, dimension: usize, sites: usize, holes: usize) -> Result<OrthogonalShape, GenerateError> {
    match dimension {
        2 => polygon(seed, sites, holes),
        3 => polyhedron(seed, sites),
        d => Err(GenerateError::Dimension(d)),
    }
}

/// Seeds 1..=20: 30 to 200 edges, `seed % 3` holes.
pub fn corpus_2d() -> Vec<(u64, OrthogonalShape)> {
    (1..=20u64)
        .map(|seed| {
            let sites = 30 + (seed as usize - 1) * 170 / 19;
            (seed, polygon(seed, sites, seed as usize % 3).expect("corpus polygon"))
        })
        .collect()
}

/// Five small polyhedra.
pub fn corpus_3d() -> Vec<(u64, OrthogonalShape)> {
    [(1u64, 10usize), (2, 14), (3, 18), (4, 22), (5, 26)]
        .into_iter()
        .map(|(seed, sites)| (seed, polyhedron(seed, sites).expect("corpus polyhedron")))
        .collect()
}
