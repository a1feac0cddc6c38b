//! End-to-end runs: read a shape document, subdivide, reconstruct, write the
//! graph document and optional renders.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::io::{graph_to_string, render_obj, render_svg, stats_to_string, GridCheckSummary, StatsDocument};
use crate::reconstruction::{build_graph, contract, VoronoiGraph};
use crate::shape::{parse_shape_str, OrthogonalShape, ShapeError};
use crate::subdivision::{subdivide, BvhMode, SubdivisionConfig, SubdivisionError, SubdivisionTree};
use crate::verification::grid_check;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(#[from] ShapeError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Inconsistent(#[from] SubdivisionError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::Config(_) => 2,
            PipelineError::Inconsistent(_) => 3,
            PipelineError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    pub svg: Option<PathBuf>,
    pub obj: Option<PathBuf>,
    pub dimension: Option<usize>,
    pub max_depth: u32,
    pub bvh: BvhMode,
    pub contract: bool,
    pub stats: bool,
    pub grid_check: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            output: output.into(),
            svg: None,
            obj: None,
            dimension: None,
            max_depth: SubdivisionConfig::default().max_depth,
            bvh: BvhMode::Auto,
            contract: false,
            stats: false,
            grid_check: None,
        }
    }

    fn validate(&self) -> Result<(), PipelineError> {
        let empty = |p: &PathBuf| p.as_os_str().is_empty();
        if empty(&self.input) || empty(&self.output) || self.svg.as_ref().is_some_and(empty) || self.obj.as_ref().is_some_and(empty) {
            return Err(PipelineError::Config("paths must be nonempty".into()));
        }
        if !(1..=64).contains(&self.max_depth) {
            return Err(PipelineError::Config(format!("max depth {} is outside [1, 64]", self.max_depth)));
        }
        Ok(())
    }
}

/// Everything a run computes, before anything is written.
#[derive(Debug, Clone)]
pub struct Computation {
    /// The input scaled into the unit working box.
    pub unit_shape: OrthogonalShape,
    pub tree: SubdivisionTree,
    /// Uncontracted graph in working coordinates.
    pub unit_graph: VoronoiGraph,
    /// Output graph in input coordinates.
    pub graph: VoronoiGraph,
    pub stats: StatsDocument,
    pub elapsed: Duration,
}

pub fn compute(
    shape: &OrthogonalShape,
    config: &SubdivisionConfig,
    contract_chains: bool,
    grid: Option<usize>,
) -> Result<Computation, PipelineError> {
    let start = Instant::now();
    let unit_shape = shape.scale_to_unit()?;
    let tree = subdivide(&unit_shape, config)?;
    let unit_graph = build_graph(&tree, &unit_shape)?;
    let out = if contract_chains { contract(&unit_graph) } else { unit_graph.clone() };
    let graph = out.map_positions(|p| unit_shape.scale.to_original(p));
    let elapsed = start.elapsed();
    let grid_check = grid.map(|k| GridCheckSummary {
        resolution: k,
        violations: grid_check(&unit_shape, &tree, &unit_graph, k).len(),
    });
    let stats = StatsDocument {
        dimension: shape.dimension,
        sites: shape.sites.len(),
        subdivision: tree.stats.clone(),
        nodes: graph.nodes.len(),
        edges: graph.edges.len(),
        vertices: graph.vertex_nodes().count(),
        diagnostics: graph.diagnostics.clone(),
        grid_check,
    };
    Ok(Computation { unit_shape, tree, unit_graph, graph, stats, elapsed })
}

/// What a run produced; the stats document is returned for the caller to print.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub computation: Computation,
    pub stats_text: Option<String>,
}

fn write(path: &PathBuf, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|source| PipelineError::Io { path: path.clone(), source })
}

pub fn run(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let text = std::fs::read_to_string(&config.input)
        .map_err(|source| PipelineError::Io { path: config.input.clone(), source })?;
    let shape = parse_shape_str(&text)?;
    if let Some(d) = config.dimension {
        if d != shape.dimension {
            return Err(ShapeError::WrongDimension { expected: d }.into());
        }
    }
    if config.svg.is_some() && shape.dimension != 2 {
        return Err(PipelineError::Config("SVG output needs a 2D shape".into()));
    }
    if config.obj.is_some() && shape.dimension != 3 {
        return Err(PipelineError::Config("OBJ output needs a 3D shape".into()));
    }
    let sub = SubdivisionConfig { max_depth: config.max_depth, bvh: config.bvh, ..Default::default() };
    let computation = compute(&shape, &sub, config.contract, config.grid_check)?;
    write(&config.output, &graph_to_string(&computation.graph, &computation.unit_shape.scale))?;
    if let Some(path) = &config.svg {
        write(path, &render_svg(&computation.graph, &shape))?;
    }
    if let Some(path) = &config.obj {
        write(path, &render_obj(&computation.graph))?;
    }
    if let Some(g) = &computation.stats.grid_check {
        if g.violations > 0 {
            return Err(PipelineError::Inconsistent(SubdivisionError::Inconsistent(format!(
                "grid check at resolution {} found {} disagreements with the brute-force oracle",
                g.resolution, g.violations
            ))));
        }
    }
    let stats_text = config.stats.then(|| stats_to_string(&computation.stats));
    Ok(RunOutput { computation, stats_text })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{half, int};
    use crate::reconstruction::NodeKind;
    use crate::shape::parse_shape_str;

    #[test]
    fn outputs_are_in_input_coordinates() {
        let s = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[4,0],[4,2],[0,2]]}"#).unwrap();
        let c = compute(&s, &SubdivisionConfig::default(), true, Some(16)).unwrap();
        let v: Vec<_> = c.graph.vertex_nodes().map(|n| n.position.clone()).collect();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].coords(), &[int(1), int(1)]);
        assert_eq!(v[1].coords(), &[int(3), int(1)]);
        assert_eq!(c.stats.grid_check.unwrap().violations, 0);
    }

    #[test]
    fn unit_square_keeps_unit_coordinates() {
        let s = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        let c = compute(&s, &SubdivisionConfig::default(), false, None).unwrap();
        let centre: Vec<_> = c.graph.nodes.iter().filter(|n| n.kind == NodeKind::Vertex).collect();
        assert_eq!(centre[0].position.coords(), &[half(), half()]);
    }

    #[test]
    fn rejects_bad_depth() {
        let mut cfg = RunConfig::new("in.json", "out.json");
        cfg.max_depth = 0;
        assert_eq!(run(&cfg).unwrap_err().exit_code(), 2);
    }
}
