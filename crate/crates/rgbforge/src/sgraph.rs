//! Decorated ribbon graphs: internal/boundary vertices, cyclic or total
//! halfedge orders, positive corner values, and a perfect pairing of
//! halfedges into edges.
//!
//! # Interchange format
//!
//! ```json
//! {"vertices":[{"id":"v","kind":"internal","halfedges":["a","b"],"corners":[1,2]}],
//!  "edges":[["a","b"]]}
//! ```
//!
//! Corner conventions: an internal vertex of valency `r ≥ 2` carries `r`
//! corners, entry `k` being the distance from halfedge `k` to halfedge
//! `k+1 mod r` counterclockwise; a 1-valent internal vertex carries one entry,
//! its degree; a boundary vertex of valency `r` carries `r−1` entries along
//! the total order. The canonical serialization sorts vertices by id and
//! edges by their (sorted) halfedge name pairs, and ends with a newline.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SGraphError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("duplicate vertex id {0:?}")]
    DuplicateVertexId(String),
    #[error("vertex {0:?} has unknown kind {1:?} (expected \"internal\" or \"boundary\")")]
    UnknownKind(String, String),
    #[error("halfedge {0:?} listed more than once")]
    DuplicateHalfedge(String),
    #[error("edge references unknown halfedge {0:?}")]
    UnknownHalfedge(String),
    #[error("edge pairs halfedge {0:?} with itself")]
    SelfPairedHalfedge(String),
    #[error("halfedge {0:?} appears in more than one edge")]
    RepairedHalfedge(String),
    #[error("halfedge {0:?} is not matched by any edge")]
    UnpairedHalfedge(String),
    #[error("internal vertex {0:?} has no halfedges")]
    IsolatedInternal(String),
    #[error("vertex {vertex:?} has {got} corner entries, expected {expected}")]
    CornerCount {
        vertex: String,
        expected: usize,
        got: usize,
    },
    #[error("vertex {0:?} has a corner value of 0; corners must be positive")]
    ZeroCorner(String),
    #[error("halfedges {0:?} and {1:?} are at different vertices")]
    DifferentVertices(String, String),
    #[error("halfedge {0:?} does not precede {1:?} in the total order at their boundary vertex")]
    BoundaryOrder(String, String),
    #[error("unknown halfedge name {0:?}")]
    NoSuchHalfedge(String),
    #[error("edge index {0} out of range (graph has {1} edges)")]
    NoSuchEdge(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Internal,
    Boundary,
}

#[derive(Clone, Debug)]
pub struct SVertex {
    pub id: String,
    pub kind: VertexKind,
    /// Halfedge indices in counterclockwise cyclic order (internal) or total
    /// order (boundary).
    pub halfedges: Vec<usize>,
    pub corners: Vec<u64>,
}

#[derive(Clone, Debug)]
pub struct Halfedge {
    pub name: String,
    /// Index of the vertex carrying this halfedge.
    pub vertex: usize,
    /// Position within that vertex's halfedge list.
    pub pos: usize,
}

/// A decorated ribbon graph. Halfedges and vertices are index-addressed;
/// `pairing` is a fixed-point-free involution on halfedge indices and
/// `edges[k]` lists the two halfedges of edge `k` (order as parsed, each pair
/// stored with the lexicographically smaller name first).
#[derive(Clone, Debug)]
pub struct SGraph {
    pub vertices: Vec<SVertex>,
    pub halfedges: Vec<Halfedge>,
    pub pairing: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    /// Edge index of each halfedge.
    pub edge_of: Vec<usize>,
}

/// An edge orientation: `toward[h]` is true when the edge points toward the
/// vertex at halfedge `h`; the two halfedges of an edge always disagree.
#[derive(Clone, Debug)]
pub struct Orientation {
    pub toward: Vec<bool>,
}

/// Always-returned report of [`SGraph::validate`].
#[derive(Clone, Debug)]
pub struct Diagnostics {
    /// Internal vertex degrees by vertex id (boundary vertices omitted:
    /// their degree is infinite).
    pub internal_degrees: BTreeMap<String, u64>,
    pub compatible: bool,
    pub problems: Vec<String>,
}

#[derive(Deserialize, Serialize)]
struct VertexDoc {
    id: String,
    kind: String,
    halfedges: Vec<String>,
    corners: Vec<u64>,
}

#[derive(Deserialize, Serialize)]
struct SGraphDoc {
    vertices: Vec<VertexDoc>,
    edges: Vec<(String, String)>,
}

/// Parse the JSON interchange format, enforcing every structural invariant.
pub fn parse_sgraph(text: &str) -> Result<SGraph, SGraphError> {
    let doc: SGraphDoc =
        serde_json::from_str(text).map_err(|e| SGraphError::Syntax(e.to_string()))?;
    let vertices = doc
        .vertices
        .into_iter()
        .map(|v| {
            let kind = match v.kind.as_str() {
                "internal" => Ok(VertexKind::Internal),
                "boundary" => Ok(VertexKind::Boundary),
                other => Err(SGraphError::UnknownKind(v.id.clone(), other.to_string())),
            }?;
            Ok((v.id, kind, v.halfedges, v.corners))
        })
        .collect::<Result<Vec<_>, SGraphError>>()?;
    SGraph::from_parts(vertices, doc.edges)
}

/// Build and validate a graph from vertex descriptions
/// `(id, kind, halfedge names, corners)` and edge name pairs.
pub fn from_parts_impl(
    vertex_parts: Vec<(String, VertexKind, Vec<String>, Vec<u64>)>,
    edge_parts: Vec<(String, String)>,
) -> Result<SGraph, SGraphError> {
    if vertex_parts.is_empty() {
        return Err(SGraphError::EmptyGraph);
    }
    let mut vertices = Vec::new();
    let mut halfedges: Vec<Halfedge> = Vec::new();
    let mut by_name: BTreeMap<String, usize> = BTreeMap::new();
    let mut seen_ids = BTreeSet::new();
    for (id, kind, hnames, corners) in &vertex_parts {
        if !seen_ids.insert(id.clone()) {
            return Err(SGraphError::DuplicateVertexId(id.clone()));
        }
        let r = hnames.len();
        if *kind == VertexKind::Internal && r == 0 {
            return Err(SGraphError::IsolatedInternal(id.clone()));
        }
        let expected = match kind {
            VertexKind::Internal => r.max(1),
            VertexKind::Boundary => r.saturating_sub(1),
        };
        if corners.len() != expected {
            return Err(SGraphError::CornerCount {
                vertex: id.clone(),
                expected,
                got: corners.len(),
            });
        }
        if corners.iter().any(|&c| c == 0) {
            return Err(SGraphError::ZeroCorner(id.clone()));
        }
        let vi = vertices.len();
        let mut idxs = Vec::with_capacity(r);
        for (pos, name) in hnames.iter().enumerate() {
            if by_name.contains_key(name) {
                return Err(SGraphError::DuplicateHalfedge(name.clone()));
            }
            let hi = halfedges.len();
            by_name.insert(name.clone(), hi);
            halfedges.push(Halfedge {
                name: name.clone(),
                vertex: vi,
                pos,
            });
            idxs.push(hi);
        }
        vertices.push(SVertex {
            id: id.clone(),
            kind: *kind,
            halfedges: idxs,
            corners: corners.clone(),
        });
    }
    let mut pairing = vec![usize::MAX; halfedges.len()];
    let mut edges = Vec::new();
    let mut edge_of = vec![usize::MAX; halfedges.len()];
    for (a, b) in &edge_parts {
        let ia = *by_name
            .get(a)
            .ok_or_else(|| SGraphError::UnknownHalfedge(a.clone()))?;
        let ib = *by_name
            .get(b)
            .ok_or_else(|| SGraphError::UnknownHalfedge(b.clone()))?;
        if ia == ib {
            return Err(SGraphError::SelfPairedHalfedge(a.clone()));
        }
        for &i in &[ia, ib] {
            if pairing[i] != usize::MAX {
                return Err(SGraphError::RepairedHalfedge(halfedges[i].name.clone()));
            }
        }
        pairing[ia] = ib;
        pairing[ib] = ia;
        // Store the lexicographically smaller name first.
        let (first, second) = if halfedges[ia].name <= halfedges[ib].name {
            (ia, ib)
        } else {
            (ib, ia)
        };
        edge_of[ia] = edges.len();
        edge_of[ib] = edges.len();
        edges.push((first, second));
    }
    if let Some(i) = pairing.iter().position(|&p| p == usize::MAX) {
        return Err(SGraphError::UnpairedHalfedge(halfedges[i].name.clone()));
    }
    Ok(SGraph {
        vertices,
        halfedges,
        pairing,
        edges,
        edge_of,
    })
}

impl SGraph {
    /// See [`from_parts_impl`].
    pub fn from_parts(
        vertex_parts: Vec<(String, VertexKind, Vec<String>, Vec<u64>)>,
        edge_parts: Vec<(String, String)>,
    ) -> Result<SGraph, SGraphError> {
        from_parts_impl(vertex_parts, edge_parts)
    }

    /// Canonical serialization: vertices sorted by id, edge pairs sorted by
    /// name pair, UTF-8, newline-terminated.
    pub fn to_json_string(&self) -> String {
        let mut vdocs: Vec<VertexDoc> = self
            .vertices
            .iter()
            .map(|v| VertexDoc {
                id: v.id.clone(),
                kind: match v.kind {
                    VertexKind::Internal => "internal".into(),
                    VertexKind::Boundary => "boundary".into(),
                },
                halfedges: v
                    .halfedges
                    .iter()
                    .map(|&h| self.halfedges[h].name.clone())
                    .collect(),
                corners: v.corners.clone(),
            })
            .collect();
        vdocs.sort_by(|a, b| a.id.cmp(&b.id));
        let mut edocs: Vec<(String, String)> = self
            .edges
            .iter()
            .map(|&(a, b)| (self.halfedges[a].name.clone(), self.halfedges[b].name.clone()))
            .collect();
        edocs.sort();
        let doc = SGraphDoc {
            vertices: vdocs,
            edges: edocs,
        };
        let mut s = serde_json::to_string(&doc).expect("serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn halfedge_by_name(&self, name: &str) -> Result<usize, SGraphError> {
        self.halfedges
            .iter()
            .position(|h| h.name == name)
            .ok_or_else(|| SGraphError::NoSuchHalfedge(name.to_string()))
    }

    pub fn partner(&self, h: usize) -> usize {
        self.pairing[h]
    }

    pub fn vertex_of(&self, h: usize) -> &SVertex {
        &self.vertices[self.halfedges[h].vertex]
    }

    pub fn is_internal_halfedge(&self, h: usize) -> bool {
        self.vertex_of(h).kind == VertexKind::Internal
    }

    /// Cyclic successor at an internal vertex.
    pub fn next_ccw(&self, h: usize) -> usize {
        let v = self.vertex_of(h);
        debug_assert_eq!(v.kind, VertexKind::Internal);
        let pos = self.halfedges[h].pos;
        v.halfedges[(pos + 1) % v.halfedges.len()]
    }

    /// Degree (sum of corners) of an internal vertex.
    pub fn internal_degree(&self, vi: usize) -> u64 {
        debug_assert_eq!(self.vertices[vi].kind, VertexKind::Internal);
        self.vertices[vi].corners.iter().sum()
    }

    /// Whether `n` is compatible: `n ≥ 1` and every internal degree divides it.
    pub fn compatible(&self, n: i64) -> bool {
        n >= 1
            && self
                .vertices
                .iter()
                .enumerate()
                .filter(|(_, v)| v.kind == VertexKind::Internal)
                .all(|(i, _)| n as u64 % self.internal_degree(i) == 0)
    }

    /// Always-successful diagnostics for a proposed grading parameter.
    pub fn validate(&self, n: i64) -> Diagnostics {
        let mut internal_degrees = BTreeMap::new();
        let mut problems = Vec::new();
        if n < 1 {
            problems.push(format!("n = {n} must be at least 1"));
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.kind == VertexKind::Internal {
                let m = self.internal_degree(i);
                internal_degrees.insert(v.id.clone(), m);
                if n >= 1 && n as u64 % m != 0 {
                    problems.push(format!(
                        "internal vertex {:?} has degree {m}, which does not divide n = {n}",
                        v.id
                    ));
                }
            }
        }
        Diagnostics {
            internal_degrees,
            compatible: problems.is_empty(),
            problems,
        }
    }

    /// Additive corner distance from `h1` to `h2` at a shared vertex.
    ///
    /// At a vertex of valency ≥ 2, `d(h, h) = 0`; at a 1-valent internal
    /// vertex, `d(h, h)` is the full degree. At a boundary vertex `h1` must
    /// not come after `h2` in the total order.
    pub fn corner_distance(&self, h1: usize, h2: usize) -> Result<u64, SGraphError> {
        let vi = self.halfedges[h1].vertex;
        if self.halfedges[h2].vertex != vi {
            return Err(SGraphError::DifferentVertices(
                self.halfedges[h1].name.clone(),
                self.halfedges[h2].name.clone(),
            ));
        }
        let v = &self.vertices[vi];
        let (p1, p2) = (self.halfedges[h1].pos, self.halfedges[h2].pos);
        let r = v.halfedges.len();
        match v.kind {
            VertexKind::Internal => {
                if h1 == h2 && r == 1 {
                    return Ok(v.corners[0]);
                }
                let mut d = 0;
                let mut p = p1;
                while p != p2 {
                    d += v.corners[p];
                    p = (p + 1) % r;
                }
                Ok(d)
            }
            VertexKind::Boundary => {
                if p1 > p2 {
                    return Err(SGraphError::BoundaryOrder(
                        self.halfedges[h1].name.clone(),
                        self.halfedges[h2].name.clone(),
                    ));
                }
                Ok(v.corners[p1..p2].iter().sum())
            }
        }
    }

    /// Solve the parity system for an edge orientation in which the corner
    /// distance between consecutive halfedges is even exactly when the two
    /// edges point the same way; `None` when the system is infeasible.
    pub fn orientability(&self) -> Option<Orientation> {
        // Union-find with parity to the parent.
        let n = self.halfedges.len();
        let mut parent: Vec<usize> = (0..n).collect();
        let mut parity: Vec<u8> = vec![0; n];
        fn find(parent: &mut Vec<usize>, parity: &mut Vec<u8>, x: usize) -> (usize, u8) {
            if parent[x] == x {
                return (x, 0);
            }
            let (root, p) = find(parent, parity, parent[x]);
            parent[x] = root;
            parity[x] ^= p;
            (root, parity[x])
        }
        let union = |parent: &mut Vec<usize>,
                         parity: &mut Vec<u8>,
                         a: usize,
                         b: usize,
                         rel: u8|
         -> bool {
            let (ra, pa) = find(parent, parity, a);
            let (rb, pb) = find(parent, parity, b);
            if ra == rb {
                return pa ^ pb == rel;
            }
            parent[ra] = rb;
            parity[ra] = pa ^ pb ^ rel;
            true
        };
        // Edge constraints: the two halfedges disagree.
        for &(a, b) in &self.edges {
            if !union(&mut parent, &mut parity, a, b, 1) {
                return None;
            }
        }
        // Corner constraints at internal vertices, including the cyclic wrap;
        // at a 1-valent vertex the wrap constrains d(h,h) = degree to be even.
        for v in &self.vertices {
            if v.kind != VertexKind::Internal {
                continue;
            }
            let r = v.halfedges.len();
            for k in 0..r {
                let a = v.halfedges[k];
                let b = v.halfedges[(k + 1) % r];
                let rel = (v.corners[k] % 2) as u8;
                if !union(&mut parent, &mut parity, a, b, rel) {
                    return None;
                }
            }
        }
        // Corner constraints at boundary vertices: consecutive pairs along the
        // total order, no wraparound.
        for v in &self.vertices {
            if v.kind != VertexKind::Boundary {
                continue;
            }
            for k in 0..v.corners.len() {
                let a = v.halfedges[k];
                let b = v.halfedges[k + 1];
                let rel = (v.corners[k] % 2) as u8;
                if !union(&mut parent, &mut parity, a, b, rel) {
                    return None;
                }
            }
        }
        let toward = (0..n)
            .map(|h| find(&mut parent, &mut parity, h).1 == 1)
            .collect();
        Some(Orientation { toward })
    }

    /// Edge count, internal degree multiset, face count of the extended
    /// ribbon graph (a virtual leaf edge appended after the last halfedge of
    /// each boundary vertex, making its order cyclic), and the Euler
    /// characteristic of the extended graph's surface.
    pub fn ribbon_invariants(&self) -> RibbonInvariants {
        let mut degrees: Vec<u64> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VertexKind::Internal)
            .map(|(i, _)| self.internal_degree(i))
            .collect();
        degrees.sort_unstable();
        // Extended halfedge set: originals 0..n, then per boundary vertex a
        // virtual halfedge (appended to its order) paired with a leaf.
        let n = self.halfedges.len();
        let boundary: Vec<usize> = (0..self.vertices.len())
            .filter(|&i| self.vertices[i].kind == VertexKind::Boundary)
            .collect();
        let total = n + 2 * boundary.len();
        let mut pairing: Vec<usize> = (0..total).collect();
        pairing[..n].copy_from_slice(&self.pairing);
        let mut next = vec![0usize; total];
        // Rotation at internal vertices and extended boundary vertices.
        for (bi, &vi) in boundary.iter().enumerate() {
            let virt = n + 2 * bi;
            let leaf = n + 2 * bi + 1;
            pairing[virt] = leaf;
            pairing[leaf] = virt;
            next[leaf] = leaf;
            let hs = &self.vertices[vi].halfedges;
            if hs.is_empty() {
                next[virt] = virt;
            } else {
                for k in 0..hs.len() {
                    next[hs[k]] = if k + 1 < hs.len() { hs[k + 1] } else { virt };
                }
                next[virt] = hs[0];
            }
        }
        for v in &self.vertices {
            if v.kind == VertexKind::Internal {
                let r = v.halfedges.len();
                for k in 0..r {
                    next[v.halfedges[k]] = v.halfedges[(k + 1) % r];
                }
            }
        }
        // Faces: orbits of h ↦ next(partner(h)).
        let mut seen = vec![false; total];
        let mut faces = 0usize;
        for start in 0..total {
            if seen[start] {
                continue;
            }
            faces += 1;
            let mut h = start;
            while !seen[h] {
                seen[h] = true;
                h = next[pairing[h]];
            }
        }
        let v_ext = self.vertices.len() + boundary.len();
        let e_ext = self.edges.len() + boundary.len();
        RibbonInvariants {
            edge_count: self.edges.len(),
            internal_degrees: degrees,
            face_count: faces,
            euler_characteristic: v_ext as i64 - e_ext as i64 + faces as i64,
        }
    }

    /// Relabeling-invariant code: minimum over start halfedges of a breadth-
    /// first encoding, per connected component; invariant under rotation of
    /// internal cyclic orders but not under reflection.
    pub fn canonical_code(&self) -> String {
        let mut comp = vec![usize::MAX; self.halfedges.len()];
        let mut n_comp = 0;
        // Components over halfedges: connected via shared vertex or pairing.
        for start in 0..self.halfedges.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([start]);
            comp[start] = n_comp;
            while let Some(h) = queue.pop_front() {
                let push = |g: usize, comp: &mut Vec<usize>, queue: &mut VecDeque<usize>| {
                    if comp[g] == usize::MAX {
                        comp[g] = n_comp;
                        queue.push_back(g);
                    }
                };
                push(self.pairing[h], &mut comp, &mut queue);
                for &g in &self.vertex_of(h).halfedges {
                    push(g, &mut comp, &mut queue);
                }
            }
            n_comp += 1;
        }
        let mut component_codes: Vec<String> = (0..n_comp)
            .map(|c| {
                (0..self.halfedges.len())
                    .filter(|&h| comp[h] == c)
                    .map(|h| self.encode_from(h))
                    .min()
                    .expect("component has a halfedge")
            })
            .collect();
        // Vertices with no halfedges (isolated boundary vertices) contribute
        // a bare marker each.
        let isolated = self
            .vertices
            .iter()
            .filter(|v| v.halfedges.is_empty())
            .count();
        for _ in 0..isolated {
            component_codes.push("Biso".to_string());
        }
        component_codes.sort();
        let joined = component_codes.join("|");
        hex::encode(joined.as_bytes())
    }

    /// Deterministic encoding with halfedges numbered in discovery order from
    /// `start`.
    fn encode_from(&self, start: usize) -> String {
        let mut num = vec![usize::MAX; self.halfedges.len()];
        let mut order: Vec<usize> = Vec::new();
        let assign = |h: usize, num: &mut Vec<usize>, order: &mut Vec<usize>| {
            if num[h] == usize::MAX {
                num[h] = order.len();
                order.push(h);
            }
        };
        assign(start, &mut num, &mut order);
        let mut qi = 0;
        let mut vertex_first: BTreeMap<usize, usize> = BTreeMap::new(); // vertex -> rotation anchor
        while qi < order.len() {
            let h = order[qi];
            qi += 1;
            let vi = self.halfedges[h].vertex;
            if let std::collections::btree_map::Entry::Vacant(e) = vertex_first.entry(vi) {
                e.insert(h);
                let v = &self.vertices[vi];
                let r = v.halfedges.len();
                match v.kind {
                    VertexKind::Internal => {
                        // Number the cycle starting from the discovery anchor.
                        let p0 = self.halfedges[h].pos;
                        for k in 0..r {
                            assign(v.halfedges[(p0 + k) % r], &mut num, &mut order);
                        }
                    }
                    VertexKind::Boundary => {
                        // Total order has a fixed start; no rotation freedom.
                        for k in 0..r {
                            assign(v.halfedges[k], &mut num, &mut order);
                        }
                    }
                }
            }
            assign(self.pairing[h], &mut num, &mut order);
        }
        // Emit vertices sorted by smallest halfedge number, with rotation
        // aligned to the numbering anchor, then the pairing.
        let mut vrecs: Vec<(usize, String)> = Vec::new();
        for (&vi, &anchor) in &vertex_first {
            let v = &self.vertices[vi];
            let r = v.halfedges.len();
            let (hs, cs): (Vec<usize>, Vec<u64>) = match v.kind {
                VertexKind::Internal => {
                    let p0 = self.halfedges[anchor].pos;
                    (
                        (0..r).map(|k| num[v.halfedges[(p0 + k) % r]]).collect(),
                        (0..v.corners.len())
                            .map(|k| v.corners[(p0 + k) % v.corners.len()])
                            .collect(),
                    )
                }
                VertexKind::Boundary => (
                    v.halfedges.iter().map(|&g| num[g]).collect(),
                    v.corners.clone(),
                ),
            };
            let kind = match v.kind {
                VertexKind::Internal => "I",
                VertexKind::Boundary => "B",
            };
            let min_h = hs.iter().copied().min().unwrap_or(usize::MAX);
            vrecs.push((
                min_h,
                format!(
                    "{kind}{}:{}",
                    hs.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    cs.iter()
                        .map(|x| x.to_string())
                        .collect::<Vec<_>>()
                        .join(",")
                ),
            ));
        }
        vrecs.sort();
        let mut pairs: Vec<(usize, usize)> = order
            .iter()
            .map(|&h| {
                let (a, b) = (num[h], num[self.pairing[h]]);
                (a.min(b), a.max(b))
            })
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        format!(
            "{};{}",
            vrecs
                .into_iter()
                .map(|(_, s)| s)
                .collect::<Vec<_>>()
                .join(";"),
            pairs
                .into_iter()
                .map(|(a, b)| format!("{a}-{b}"))
                .collect::<Vec<_>>()
                .join(",")
        )
    }

    pub fn is_isomorphic(&self, other: &SGraph) -> bool {
        self.canonical_code() == other.canonical_code()
    }

    /// Sorted multiset of internal vertex degrees.
    pub fn internal_degrees_list(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self
            .vertices
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VertexKind::Internal)
            .map(|(i, _)| self.internal_degree(i))
            .collect();
        v.sort_unstable();
        v
    }
}

/// Result of [`SGraph::ribbon_invariants`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RibbonInvariants {
    pub edge_count: usize,
    pub internal_degrees: Vec<u64>,
    pub face_count: usize,
    pub euler_characteristic: i64,
}

/// Parameters for [`random_sgraph`].
#[derive(Clone, Copy, Debug)]
pub struct RandomGraphParams {
    pub max_edges: usize,
    /// Internal degrees are drawn from divisors of this value, so the result
    /// is always compatible with it.
    pub n: i64,
    pub allow_boundary: bool,
}

/// Seeded random graph generator; every output parses, validates, and is
/// compatible with `params.n`.
pub fn random_sgraph<R: rand::Rng>(rng: &mut R, params: &RandomGraphParams) -> SGraph {
    let n = params.n.max(1) as u64;
    let edge_count = rng.gen_range(1..=params.max_edges.max(1));
    let total = 2 * edge_count;
    let mut vertex_parts: Vec<(String, VertexKind, Vec<String>, Vec<u64>)> = Vec::new();
    let mut names: Vec<String> = (0..total).map(|k| format!("x{:02}", k + 1)).collect();
    let mut remaining = total;
    let mut next_name = 0usize;
    while remaining > 0 {
        let boundary = params.allow_boundary && rng.gen_bool(0.3);
        let cap = remaining.min(4);
        let (kind, r) = if boundary {
            (VertexKind::Boundary, rng.gen_range(1..=cap))
        } else {
            let cap = cap.min(n as usize);
            if cap == 0 {
                // n = 1 admits only 1-valent internal vertices elsewhere;
                // unreachable because cap ≥ 1 whenever remaining > 0 and n ≥ 1.
                unreachable!("internal valency cap is positive");
            }
            (VertexKind::Internal, rng.gen_range(1..=cap))
        };
        let hs: Vec<String> = names.drain(..r).collect();
        let corners = match kind {
            VertexKind::Internal => {
                let divisors: Vec<u64> = (1..=n).filter(|d| n % d == 0 && *d >= r as u64).collect();
                let m = divisors[rng.gen_range(0..divisors.len())];
                random_composition(rng, m, r)
            }
            VertexKind::Boundary => (1..r).map(|_| rng.gen_range(1..=3)).collect(),
        };
        next_name += 1;
        vertex_parts.push((format!("v{next_name}"), kind, hs, corners));
        remaining -= r;
    }
    let mut all: Vec<String> = vertex_parts
        .iter()
        .flat_map(|(_, _, hs, _)| hs.iter().cloned())
        .collect();
    // Fisher–Yates shuffle, then pair consecutive halfedges.
    for i in (1..all.len()).rev() {
        all.swap(i, rng.gen_range(0..=i));
    }
    let edge_parts: Vec<(String, String)> = all
        .chunks_exact(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    SGraph::from_parts(vertex_parts, edge_parts).expect("generated graph is valid")
}

/// `r` positive integers with sum `m` (requires `m ≥ r`), uniformly over cut
/// positions.
fn random_composition<R: rand::Rng>(rng: &mut R, m: u64, r: usize) -> Vec<u64> {
    let mut cuts: Vec<u64> = Vec::with_capacity(r + 1);
    cuts.push(0);
    let mut chosen = BTreeSet::new();
    while chosen.len() < r - 1 {
        chosen.insert(rng.gen_range(1..m));
    }
    cuts.extend(chosen.iter().copied());
    cuts.push(m);
    cuts.windows(2).map(|w| w[1] - w[0]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub const SG_A: &str = r#"{"vertices":[{"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},{"id":"v2","kind":"internal","halfedges":["h1","h2"],"corners":[1,2]},{"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],"edges":[["h1","m1"],["h2","t1"]]}"#;
    pub const SG_B: &str = r#"{"vertices":[{"id":"u","kind":"internal","halfedges":["u1"],"corners":[2]},{"id":"vb","kind":"boundary","halfedges":["g2","g1"],"corners":[1]},{"id":"w","kind":"boundary","halfedges":["w1"],"corners":[]}],"edges":[["g1","w1"],["g2","u1"]]}"#;
    pub const SG_E2: &str = r#"{"vertices":[{"id":"q1","kind":"internal","halfedges":["p1"],"corners":[2]},{"id":"q2","kind":"internal","halfedges":["p2"],"corners":[2]}],"edges":[["p1","p2"]]}"#;

    #[test]
    fn parse_and_roundtrip() {
        let s = parse_sgraph(SG_A).unwrap();
        assert_eq!(s.vertices.len(), 3);
        assert_eq!(s.edges.len(), 2);
        let emitted = s.to_json_string();
        let s2 = parse_sgraph(&emitted).unwrap();
        assert_eq!(emitted, s2.to_json_string());
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(matches!(
            parse_sgraph(r#"{"vertices":[],"edges":[]}"#),
            Err(SGraphError::EmptyGraph)
        ));
        // Pairing fixed point.
        let fixed = r#"{"vertices":[{"id":"v","kind":"internal","halfedges":["a","b"],"corners":[1,1]}],"edges":[["a","a"],["b","b"]]}"#;
        assert!(matches!(
            parse_sgraph(fixed),
            Err(SGraphError::SelfPairedHalfedge(_))
        ));
        // Dangling halfedge.
        let dangling = r#"{"vertices":[{"id":"v","kind":"internal","halfedges":["a","b"],"corners":[1,1]}],"edges":[["a","c"]]}"#;
        assert!(matches!(
            parse_sgraph(dangling),
            Err(SGraphError::UnknownHalfedge(_))
        ));
        // Corner count mismatch.
        let corners = r#"{"vertices":[{"id":"v","kind":"internal","halfedges":["a","b"],"corners":[1]}],"edges":[["a","b"]]}"#;
        assert!(matches!(
            parse_sgraph(corners),
            Err(SGraphError::CornerCount { .. })
        ));
    }

    #[test]
    fn degrees_and_compatibility() {
        let s = parse_sgraph(SG_A).unwrap();
        let d3 = s.validate(3);
        assert!(d3.compatible);
        assert_eq!(
            d3.internal_degrees.values().copied().collect::<Vec<_>>(),
            vec![1, 3, 3]
        );
        assert!(!s.validate(4).compatible);
        let b = parse_sgraph(SG_B).unwrap();
        assert!(b.validate(2).compatible);
        assert_eq!(b.internal_degrees_list(), vec![2]);
    }

    #[test]
    fn corner_distances_match_arrow_degrees() {
        let s = parse_sgraph(SG_A).unwrap();
        let h1 = s.halfedge_by_name("h1").unwrap();
        let h2 = s.halfedge_by_name("h2").unwrap();
        assert_eq!(s.corner_distance(h1, h2).unwrap(), 1);
        assert_eq!(s.corner_distance(h2, h1).unwrap(), 2);
        assert_eq!(s.corner_distance(h1, h1).unwrap(), 0);
        let m1 = s.halfedge_by_name("m1").unwrap();
        assert_eq!(s.corner_distance(m1, m1).unwrap(), 1);
        assert!(s.corner_distance(m1, h1).is_err());
    }

    #[test]
    fn orientability_examples() {
        // SG-A has a 1-valent internal vertex of odd degree: infeasible.
        assert!(parse_sgraph(SG_A).unwrap().orientability().is_none());
        // SG-E2: both degrees even.
        let e2 = parse_sgraph(SG_E2).unwrap();
        let o = e2.orientability().expect("orientable");
        let p1 = e2.halfedge_by_name("p1").unwrap();
        let p2 = e2.halfedge_by_name("p2").unwrap();
        assert_ne!(o.toward[p1], o.toward[p2]);
    }

    #[test]
    fn canonical_code_is_relabeling_invariant() {
        let s = parse_sgraph(SG_A).unwrap();
        let renamed = SG_A
            .replace("m1", "xx")
            .replace("h1", "yy")
            .replace("h2", "zz")
            .replace("t1", "qq")
            .replace("v1", "w9")
            .replace("v2", "w8")
            .replace("v3", "w7");
        let s2 = parse_sgraph(&renamed).unwrap();
        assert_eq!(s.canonical_code(), s2.canonical_code());
        assert!(s.is_isomorphic(&s2));
        let b = parse_sgraph(SG_B).unwrap();
        assert_ne!(s.canonical_code(), b.canonical_code());
    }

    #[test]
    fn rotation_of_internal_cyclic_order_preserves_code() {
        // Rotate the 2-valent vertex's list: [h2, h1] with corners [2, 1].
        let rotated = r#"{"vertices":[{"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},{"id":"v2","kind":"internal","halfedges":["h2","h1"],"corners":[2,1]},{"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],"edges":[["h1","m1"],["h2","t1"]]}"#;
        let a = parse_sgraph(SG_A).unwrap();
        let r = parse_sgraph(rotated).unwrap();
        assert_eq!(a.canonical_code(), r.canonical_code());
    }

    #[test]
    fn ribbon_invariants_of_small_fixtures() {
        let a = parse_sgraph(SG_A).unwrap();
        let inv = a.ribbon_invariants();
        assert_eq!(inv.edge_count, 2);
        assert_eq!(inv.internal_degrees, vec![1, 3, 3]);
        assert_eq!(inv.euler_characteristic, 2);
    }

    #[test]
    fn mirror_changes_code_only_when_asymmetric() {
        // SG-E2 is mirror-symmetric.
        let e2 = parse_sgraph(SG_E2).unwrap();
        let mirrored = parse_sgraph(SG_E2).unwrap(); // 1-valent: reflection is identity
        assert_eq!(e2.canonical_code(), mirrored.canonical_code());
        // SG-A mirrored: reverse the 2-valent cyclic order, corners swap.
        let mirror_a = r#"{"vertices":[{"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},{"id":"v2","kind":"internal","halfedges":["h2","h1"],"corners":[1,2]},{"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],"edges":[["h1","m1"],["h2","t1"]]}"#;
        let a = parse_sgraph(SG_A).unwrap();
        let m = parse_sgraph(mirror_a).unwrap();
        assert_ne!(a.canonical_code(), m.canonical_code());
    }
}
