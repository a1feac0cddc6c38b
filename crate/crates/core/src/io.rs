//! Graph documents (exact, rationals as "num/den" strings), SVG and OBJ
//! renders, and the stats document.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geometry::{format_scalar, parse_scalar, to_f64, GeometryError, Point, Scalar};
use crate::reconstruction::{GraphDiagnostics, NodeKind, Piece, VorNode, VoronoiGraph};
use crate::shape::{OrthogonalShape, ScaleRecord};
use crate::subdivision::SubdivisionStats;

#[derive(Debug, thiserror::Error)]
pub enum DocumentError {
    #[error("malformed graph document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed graph document: {0}")]
    Number(#[from] GeometryError),
    #[error("malformed graph document: {0}")]
    Structure(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleDocument {
    pub factor: String,
    pub offset: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDocument {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Vec<String>,
    pub labels: Vec<usize>,
    pub owners: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceDocument {
    pub leaf: usize,
    pub from: Vec<String>,
    pub to: Vec<String>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub dimension: usize,
    /// Map from the unit working frame back to input coordinates; positions
    /// below are already in input coordinates.
    pub scale: ScaleDocument,
    pub nodes: Vec<NodeDocument>,
    pub edges: Vec<[usize; 2]>,
    pub pieces: Vec<PieceDocument>,
    pub diagnostics: GraphDiagnostics,
}

fn coords(p: &Point) -> Vec<String> {
    p.coords().iter().map(format_scalar).collect()
}

fn point(v: &[String]) -> Result<Point, GeometryError> {
    Ok(Point(v.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<Scalar>, _>>()?))
}

pub fn graph_document(g: &VoronoiGraph, scale: &ScaleRecord) -> GraphDocument {
    GraphDocument {
        dimension: g.dimension,
        scale: ScaleDocument { factor: format_scalar(&scale.factor), offset: coords(&scale.offset) },
        nodes: g
            .nodes
            .iter()
            .map(|n| NodeDocument {
                id: n.id,
                kind: n.kind,
                position: coords(&n.position),
                labels: n.labels.clone(),
                owners: n.owners.clone(),
            })
            .collect(),
        edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        pieces: g
            .pieces
            .iter()
            .map(|p| PieceDocument { leaf: p.leaf, from: coords(&p.from), to: coords(&p.to), labels: p.labels.clone() })
            .collect(),
        diagnostics: g.diagnostics.clone(),
    }
}

pub fn graph_to_string(g: &VoronoiGraph, scale: &ScaleRecord) -> String {
    let mut s = serde_json::to_string_pretty(&graph_document(g, scale)).expect("graph documents serialize");
    s.push('\n');
    s
}

pub fn parse_graph(text: &str) -> Result<(VoronoiGraph, ScaleRecord), DocumentError> {
    let doc: GraphDocument = serde_json::from_str(text)?;
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.into_iter().enumerate() {
        if n.id != i {
            return Err(DocumentError::Structure(format!("node {i} carries id {}", n.id)));
        }
        let position = point(&n.position)?;
        if position.dim() != doc.dimension {
            return Err(DocumentError::Structure(format!("node {i} has {} coordinates", position.dim())));
        }
        nodes.push(VorNode { id: n.id, kind: n.kind, position, labels: n.labels, owners: n.owners });
    }
    if let Some(e) = doc.edges.iter().find(|e| e[0] >= nodes.len() || e[1] >= nodes.len()) {
        return Err(DocumentError::Structure(format!("edge {:?} refers to a missing node", e)));
    }
    let pieces = doc
        .pieces
        .into_iter()
        .map(|p| Ok(Piece { leaf: p.leaf, from: point(&p.from)?, to: point(&p.to)?, labels: p.labels }))
        .collect::<Result<Vec<_>, GeometryError>>()?;
    let scale = ScaleRecord { factor: parse_scalar(&doc.scale.factor)?, offset: point(&doc.scale.offset)? };
    let g = VoronoiGraph {
        dimension: doc.dimension,
        nodes,
        edges: doc.edges.into_iter().map(|[a, b]| (a, b)).collect(),
        pieces,
        diagnostics: doc.diagnostics,
    };
    Ok((g, scale))
}

fn dec(v: &Scalar) -> String {
    let x = to_f64(v);
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// SVG view of a 2D graph over its shape (input coordinates, y up).
pub fn render_svg(g: &VoronoiGraph, shape: &OrthogonalShape) -> String {
    let to_input = |x: &Scalar, y: &Scalar| shape.scale.to_original(&Point(vec![x.clone(), y.clone()]));
    let lo = to_input(&shape.root_box.min(0), &shape.root_box.min(1));
    let hi = to_input(&shape.root_box.max(0), &shape.root_box.max(1));
    let (w, h) = (hi.coord(0) - lo.coord(0), hi.coord(1) - lo.coord(1));
    let stroke = to_f64(&w).max(to_f64(&h)) / 400.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}">"#,
        dec(lo.coord(0)),
        dec(&-hi.coord(1)),
        dec(&w),
        dec(&h)
    );
    out.push_str("<!-- render only: coordinates rounded to 6 decimals; the graph document is exact -->\n");
    out.push_str(r#"<g transform="scale(1,-1)">"#);
    out.push('\n');
    let mut path = String::new();
    for c in &shape.contours {
        for (i, p) in c.iter().enumerate() {
            let q = to_input(&p[0], &p[1]);
            let _ = write!(path, "{}{} {} ", if i == 0 { "M" } else { "L" }, dec(q.coord(0)), dec(q.coord(1)));
        }
        path.push_str("Z ");
    }
    let _ = writeln!(
        out,
        r##"<path d="{}" fill="#eeeeee" fill-rule="evenodd" stroke="black" stroke-width="{stroke:.6}"/>"##,
        path.trim_end()
    );
    for &(a, b) in &g.edges {
        let (p, q) = (&g.nodes[a].position, &g.nodes[b].position);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="blue" stroke-width="{stroke:.6}"/>"#,
            dec(p.coord(0)),
            dec(p.coord(1)),
            dec(q.coord(0)),
            dec(q.coord(1))
        );
    }
    for n in g.vertex_nodes() {
        let _ = writeln!(
            out,
            r#"<circle cx="{}" cy="{}" r="{:.6}" fill="blue"/>"#,
            dec(n.position.coord(0)),
            dec(n.position.coord(1)),
            2.0 * stroke
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}

/// OBJ line set of a 3D graph: one `v` per node, one `l` per edge.
pub fn render_obj(g: &VoronoiGraph) -> String {
    let mut out = String::from("# render only: coordinates rounded to 6 decimals; the graph document is exact\n");
    for n in &g.nodes {
        let c: Vec<String> = n.position.coords().iter().map(dec).collect();
        let _ = writeln!(out, "v {}", c.join(" "));
    }
    for &(a, b) in &g.edges {
        let _ = writeln!(out, "l {} {}", a + 1, b + 1);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StatsDocument {
    pub dimension: usize,
    pub sites: usize,
    #[serde(flatten)]
    pub subdivision: SubdivisionStats,
    pub nodes: usize,
    pub edges: usize,
    pub vertices: usize,
    pub diagnostics: GraphDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_check: Option<GridCheckSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridCheckSummary {
    pub resolution: usize,
    pub violations: usize,
}

pub fn stats_to_string(stats: &StatsDocument) -> String {
    let mut s = serde_json::to_string_pretty(stats).expect("stats serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::build_graph;
    use crate::shape::parse_shape_str;
    use crate::subdivision::{subdivide, SubdivisionConfig};

    fn square() -> (OrthogonalShape, VoronoiGraph) {
        let s = parse_shape_str(r#"{"dimension":2,"outer":[[0,0],[1,0],[1,1],[0,1]]}"#).unwrap();
        let t = subdivide(&s, &SubdivisionConfig::default()).unwrap();
        let g = build_graph(&t, &s).unwrap();
        (s, g)
    }

    #[test]
    fn graph_document_round_trips() {
        let (s, g) = square();
        let text = graph_to_string(&g, &s.scale);
        let (back, scale) = parse_graph(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(scale, s.scale);
        assert!(text.contains(r#""1/2""#));
    }

    #[test]
    fn unit_square_svg_has_four_segments() {
        let (s, g) = square();
        let svg = render_svg(&g, &s);
        assert_eq!(svg.matches("<line").count(), 4);
        assert_eq!(svg.matches("<circle").count(), 1);
        let empty = VoronoiGraph { nodes: vec![], edges: vec![], pieces: vec![], ..g };
        let svg = render_svg(&empty, &s);
        assert!(svg.contains("<path") && !svg.contains("<line"));
    }

    #[test]
    fn hole_keeps_reversed_winding() {
        let s = parse_shape_str(
            r#"{"dimension":2,"outer":[[0,0],[4,0],[4,4],[0,4]],"holes":[[[1,1],[1,3],[3,3],[3,1]]]}"#,
        )
        .unwrap();
        let g = VoronoiGraph {
            dimension: 2,
            nodes: vec![],
            edges: vec![],
            pieces: vec![],
            diagnostics: GraphDiagnostics::default(),
        };
        let svg = render_svg(&g, &s);
        assert!(svg.contains("M1.000000 1.000000 L1.000000 3.000000"), "{svg}");
    }

    #[test]
    fn rejects_dangling_edge() {
        let text = r#"{"dimension":2,"scale":{"factor":"1","offset":["0","0"]},"nodes":[],"edges":[[0,1]],"pieces":[],
            "diagnostics":{"corner_crossings":0,"nodes_on_leaf_corners":0,"open_ports":0}}"#;
        assert!(matches!(parse_graph(text), Err(DocumentError::Structure(_))));
    }
}
