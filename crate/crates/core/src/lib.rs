//! Exact L∞ medial axis (Voronoi diagram of the boundary) for orthogonal
//! polygons and polyhedra, computed by adaptive subdivision.

pub mod bvh;
pub mod generators;
pub mod io;
pub mod pipeline;
pub mod geometry;
pub mod polygon;
pub mod predicates;
pub mod reconstruction;
pub mod shape;
pub mod subdivision;
pub mod verification;
