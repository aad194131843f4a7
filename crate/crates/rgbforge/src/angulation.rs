//! Polygon model dual to a decorated ribbon graph, arc flips, and the flip
//! exchange graph.
//!
//! Each internal vertex of degree `m` corresponds to an interior `m`-gon:
//! one arc side per halfedge (in cyclic order) and `corner − 1` boundary
//! sides after each arc. Each boundary vertex corresponds to an ∞-gon: one
//! unbounded side, then its arcs in total order separated by `corner − 1`
//! boundary sides. A flip rotates one arc: each endpoint crosses the
//! neighboring side of its polygon, exchanging those sides between the two
//! polygons; crossing an unbounded side instead sweeps off a fresh finite
//! boundary side, and boundary sides that end up adjacent to an unbounded
//! side are absorbed by it.

use crate::sgraph::{SGraph, SGraphError, VertexKind};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Side {
    /// One of the two sides of the arc dual to an edge; carries the halfedge
    /// name of that side.
    Arc(String),
    /// A finite boundary-edge side.
    Boundary,
    /// The unbounded side of an ∞-gon.
    Infinity,
}

#[derive(Clone, Debug)]
pub struct Polygon {
    pub vertex_id: String,
    pub kind: VertexKind,
    /// Cyclic, counterclockwise.
    pub sides: Vec<Side>,
}

#[derive(Clone, Debug)]
pub struct Angulation {
    pub polygons: Vec<Polygon>,
    /// Halfedge name pairs, one per arc.
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum AngulationError {
    #[error("interior polygon {0:?} contains an unbounded side")]
    InteriorWithInfinity(String),
    #[error("interior polygon {0:?} has no arc sides")]
    InteriorWithoutArc(String),
    #[error("polygon {0:?} must contain exactly one unbounded side, found {1}")]
    InfinityCount(String, usize),
    #[error("polygon {0:?} has a finite boundary side adjacent to its unbounded side")]
    BoundaryAdjacentToInfinity(String),
    #[error("invalid reconstructed graph: {0}")]
    Graph(#[from] SGraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlipDirection {
    Forward,
    Backward,
}

impl std::str::FromStr for FlipDirection {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "forward" => Ok(FlipDirection::Forward),
            "backward" => Ok(FlipDirection::Backward),
            other => Err(format!(
                "unknown flip direction {other:?} (expected \"forward\" or \"backward\")"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum FlipError {
    #[error("edge index {0} out of range (graph has {1} edges)")]
    NoSuchEdge(usize, usize),
    #[error(
        "edge {0} is a loop at vertex {1:?}: both sides of its arc lie on one polygon, \
         which this flip does not support"
    )]
    LoopArc(usize, String),
    #[error(
        "edge {0} separates two 1-gons ({1:?} and {2:?}); there is no side for either \
         endpoint to cross"
    )]
    BothMonogons(usize, String, String),
    #[error("flip produced an invalid polygon complex: {0}")]
    Degenerate(#[from] AngulationError),
}

/// Build the polygon complex of a graph. Always succeeds on a valid graph.
pub fn to_angulation(s: &SGraph) -> Angulation {
    let mut polygons = Vec::new();
    for v in &s.vertices {
        let mut sides = Vec::new();
        match v.kind {
            VertexKind::Internal => {
                for (k, &h) in v.halfedges.iter().enumerate() {
                    sides.push(Side::Arc(s.halfedges[h].name.clone()));
                    for _ in 1..v.corners[k] {
                        sides.push(Side::Boundary);
                    }
                }
            }
            VertexKind::Boundary => {
                sides.push(Side::Infinity);
                for (k, &h) in v.halfedges.iter().enumerate() {
                    sides.push(Side::Arc(s.halfedges[h].name.clone()));
                    if k < v.corners.len() {
                        for _ in 1..v.corners[k] {
                            sides.push(Side::Boundary);
                        }
                    }
                }
            }
        }
        polygons.push(Polygon {
            vertex_id: v.id.clone(),
            kind: v.kind,
            sides,
        });
    }
    let edges = s
        .edges
        .iter()
        .map(|&(a, b)| (s.halfedges[a].name.clone(), s.halfedges[b].name.clone()))
        .collect();
    Angulation { polygons, edges }
}

/// Rebuild the graph from its polygon complex, preserving all ids.
pub fn from_angulation(a: &Angulation) -> Result<SGraph, AngulationError> {
    let mut vertex_parts = Vec::new();
    for poly in &a.polygons {
        let n = poly.sides.len();
        match poly.kind {
            VertexKind::Internal => {
                if poly.sides.iter().any(|x| *x == Side::Infinity) {
                    return Err(AngulationError::InteriorWithInfinity(poly.vertex_id.clone()));
                }
                let arcs: Vec<usize> = (0..n)
                    .filter(|&i| matches!(poly.sides[i], Side::Arc(_)))
                    .collect();
                if arcs.is_empty() {
                    return Err(AngulationError::InteriorWithoutArc(poly.vertex_id.clone()));
                }
                let mut halfedges = Vec::new();
                let mut corners = Vec::new();
                for (k, &pos) in arcs.iter().enumerate() {
                    if let Side::Arc(name) = &poly.sides[pos] {
                        halfedges.push(name.clone());
                    }
                    let next = arcs[(k + 1) % arcs.len()];
                    let gap = (next + n - pos) % n;
                    let gap = if gap == 0 { n } else { gap };
                    corners.push(gap as u64);
                }
                vertex_parts.push((
                    poly.vertex_id.clone(),
                    VertexKind::Internal,
                    halfedges,
                    corners,
                ));
            }
            VertexKind::Boundary => {
                let infs: Vec<usize> = (0..n)
                    .filter(|&i| poly.sides[i] == Side::Infinity)
                    .collect();
                if infs.len() != 1 {
                    return Err(AngulationError::InfinityCount(
                        poly.vertex_id.clone(),
                        infs.len(),
                    ));
                }
                // Walk from just after the unbounded side around to it.
                let start = infs[0];
                let rest: Vec<&Side> = (1..n).map(|k| &poly.sides[(start + k) % n]).collect();
                if matches!(rest.first(), Some(Side::Boundary))
                    || matches!(rest.last(), Some(Side::Boundary))
                {
                    return Err(AngulationError::BoundaryAdjacentToInfinity(
                        poly.vertex_id.clone(),
                    ));
                }
                let mut halfedges = Vec::new();
                let mut corners = Vec::new();
                let mut gap = 0u64;
                for side in rest {
                    match side {
                        Side::Arc(name) => {
                            if !halfedges.is_empty() {
                                corners.push(gap + 1);
                            }
                            halfedges.push(name.clone());
                            gap = 0;
                        }
                        Side::Boundary => gap += 1,
                        Side::Infinity => unreachable!("single unbounded side"),
                    }
                }
                vertex_parts.push((
                    poly.vertex_id.clone(),
                    VertexKind::Boundary,
                    halfedges,
                    corners,
                ));
            }
        }
    }
    Ok(SGraph::from_parts(vertex_parts, a.edges.clone())?)
}

/// Remove finite boundary sides cyclically adjacent to an unbounded side.
fn absorb_into_infinity(mut sides: Vec<Side>) -> Vec<Side> {
    if !sides.contains(&Side::Infinity) {
        return sides;
    }
    loop {
        let n = sides.len();
        let mut removed = false;
        for i in 0..n {
            if sides[i] == Side::Boundary
                && (sides[(i + 1) % n] == Side::Infinity || sides[(i + n - 1) % n] == Side::Infinity)
            {
                sides.remove(i);
                removed = true;
                break;
            }
        }
        if !removed {
            return sides;
        }
    }
}

/// Flip one arc. The result has the same edge count and the same multiset of
/// internal vertex degrees; the flipped edge keeps its index and halfedge
/// names.
pub fn flip(s: &SGraph, edge: usize, dir: FlipDirection) -> Result<SGraph, FlipError> {
    if edge >= s.edges.len() {
        return Err(FlipError::NoSuchEdge(edge, s.edges.len()));
    }
    let (ha, hb) = s.edges[edge];
    let va = s.halfedges[ha].vertex;
    let vb = s.halfedges[hb].vertex;
    if va == vb {
        return Err(FlipError::LoopArc(edge, s.vertices[va].id.clone()));
    }
    let mut ang = to_angulation(s);
    let name_a = s.halfedges[ha].name.clone();
    let name_b = s.halfedges[hb].name.clone();
    // Rotate each polygon so its side of the arc comes first.
    let rotated = |poly: &Polygon, name: &str| -> Vec<Side> {
        let pos = poly
            .sides
            .iter()
            .position(|x| matches!(x, Side::Arc(n) if n == name))
            .expect("arc side present");
        let n = poly.sides.len();
        (0..n).map(|k| poly.sides[(pos + k) % n].clone()).collect()
    };
    let p_sides = rotated(&ang.polygons[va], &name_a);
    let q_sides = rotated(&ang.polygons[vb], &name_b);
    let (p_tail, q_tail) = (&p_sides[1..], &q_sides[1..]);
    if p_tail.is_empty() && q_tail.is_empty() {
        return Err(FlipError::BothMonogons(
            edge,
            s.vertices[va].id.clone(),
            s.vertices[vb].id.clone(),
        ));
    }
    let (new_p, new_q) = if p_tail.is_empty() {
        let q2 = slide_past(q_tail, dir, &name_b);
        (vec![Side::Arc(name_a.clone())], q2)
    } else if q_tail.is_empty() {
        let p2 = slide_past(p_tail, dir, &name_a);
        (p2, vec![Side::Arc(name_b.clone())])
    } else {
        general_flip(p_tail, q_tail, dir, &name_a, &name_b)
    };
    ang.polygons[va].sides = absorb_into_infinity(new_p);
    ang.polygons[vb].sides = absorb_into_infinity(new_q);
    Ok(from_angulation(&ang)?)
}

/// General case: both polygons have at least one non-arc-of-`γ` side. Each
/// endpoint crosses the neighboring side, which transfers to the other
/// polygon; an unbounded side stays put and sheds a fresh finite side instead.
fn general_flip(
    p_tail: &[Side],
    q_tail: &[Side],
    dir: FlipDirection,
    name_a: &str,
    name_b: &str,
) -> (Vec<Side>, Vec<Side>) {
    let a = p_tail.len();
    let b = q_tail.len();
    match dir {
        FlipDirection::Backward => {
            // P loses its first tail side to Q's end; Q loses its first tail
            // side to P's end.
            let mut p = vec![Side::Arc(name_a.to_string())];
            let p_lost = &p_tail[0];
            let q_lost = &q_tail[0];
            if *p_lost == Side::Infinity {
                p.push(Side::Infinity);
            }
            p.extend_from_slice(&p_tail[1..]);
            p.push(if *q_lost == Side::Infinity {
                Side::Boundary
            } else {
                q_lost.clone()
            });
            let mut q = vec![Side::Arc(name_b.to_string())];
            if *q_lost == Side::Infinity {
                q.push(Side::Infinity);
            }
            q.extend_from_slice(&q_tail[1..]);
            q.push(if *p_lost == Side::Infinity {
                Side::Boundary
            } else {
                p_lost.clone()
            });
            (p, q)
        }
        FlipDirection::Forward => {
            // P loses its last tail side to Q's front; Q loses its last tail
            // side to P's front.
            let p_lost = &p_tail[a - 1];
            let q_lost = &q_tail[b - 1];
            let mut p = vec![Side::Arc(name_a.to_string())];
            p.push(if *q_lost == Side::Infinity {
                Side::Boundary
            } else {
                q_lost.clone()
            });
            p.extend_from_slice(&p_tail[..a - 1]);
            if *p_lost == Side::Infinity {
                p.push(Side::Infinity);
            }
            let mut q = vec![Side::Arc(name_b.to_string())];
            q.push(if *p_lost == Side::Infinity {
                Side::Boundary
            } else {
                p_lost.clone()
            });
            q.extend_from_slice(&q_tail[..b - 1]);
            if *q_lost == Side::Infinity {
                q.push(Side::Infinity);
            }
            (p, q)
        }
    }
}

/// Slide a 1-gon pendant one step around the other polygon.
fn slide_past(tail: &[Side], dir: FlipDirection, arc_name: &str) -> Vec<Side> {
    let b = tail.len();
    let mut out = vec![Side::Arc(arc_name.to_string())];
    match dir {
        FlipDirection::Forward => {
            let crossed = &tail[b - 1];
            if *crossed == Side::Infinity {
                out.push(Side::Boundary);
                out.extend_from_slice(&tail[..b - 1]);
                out.push(Side::Infinity);
            } else {
                out.push(crossed.clone());
                out.extend_from_slice(&tail[..b - 1]);
            }
        }
        FlipDirection::Backward => {
            let crossed = &tail[0];
            if *crossed == Side::Infinity {
                out.push(Side::Infinity);
                out.extend_from_slice(&tail[1..]);
                out.push(Side::Boundary);
            } else {
                out.extend_from_slice(&tail[1..]);
                out.push(crossed.clone());
            }
        }
    }
    out
}

/// One node of the exchange graph.
#[derive(Clone, Debug)]
pub struct ExchangeNode {
    pub code: String,
    pub graph: SGraph,
    pub depth: usize,
}

/// One explored flip, successful or not.
#[derive(Clone, Debug)]
pub struct ExchangeTransition {
    pub from: usize,
    pub edge: usize,
    pub direction: FlipDirection,
    /// Target node index, or the refusal message for a dead end.
    pub result: Result<usize, String>,
}

#[derive(Clone, Debug)]
pub struct ExchangeGraph {
    pub nodes: Vec<ExchangeNode>,
    pub transitions: Vec<ExchangeTransition>,
}

#[derive(Debug, Error)]
pub enum ExchangeError {
    #[error("starting graph is not compatible with n = {0}")]
    Incompatible(i64),
}

/// Breadth-first closure of a graph under flips up to `depth`, deduplicated
/// by canonical code; flip refusals are recorded as dead ends.
pub fn exchange_graph(s: &SGraph, depth: usize, n: i64) -> Result<ExchangeGraph, ExchangeError> {
    if !s.compatible(n) {
        return Err(ExchangeError::Incompatible(n));
    }
    let mut nodes = vec![ExchangeNode {
        code: s.canonical_code(),
        graph: s.clone(),
        depth: 0,
    }];
    let mut by_code: BTreeMap<String, usize> = BTreeMap::new();
    by_code.insert(nodes[0].code.clone(), 0);
    let mut transitions = Vec::new();
    let mut qi = 0;
    while qi < nodes.len() {
        let node_depth = nodes[qi].depth;
        if node_depth >= depth {
            qi += 1;
            continue;
        }
        let graph = nodes[qi].graph.clone();
        for edge in 0..graph.edges.len() {
            for dir in [FlipDirection::Forward, FlipDirection::Backward] {
                match flip(&graph, edge, dir) {
                    Ok(t) => {
                        debug_assert!(t.compatible(n));
                        let code = t.canonical_code();
                        let target = *by_code.entry(code.clone()).or_insert_with(|| {
                            nodes.push(ExchangeNode {
                                code,
                                graph: t,
                                depth: node_depth + 1,
                            });
                            nodes.len() - 1
                        });
                        transitions.push(ExchangeTransition {
                            from: qi,
                            edge,
                            direction: dir,
                            result: Ok(target),
                        });
                    }
                    Err(e) => {
                        transitions.push(ExchangeTransition {
                            from: qi,
                            edge,
                            direction: dir,
                            result: Err(e.to_string()),
                        });
                    }
                }
            }
        }
        qi += 1;
    }
    Ok(ExchangeGraph { nodes, transitions })
}
