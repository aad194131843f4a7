//! Glued quiver presentations on the dual side, built independently of the
//! bar-type construction in [`crate::koszul`].
//!
//! The building blocks are cyclic presentations `Q_{n,n}` with one vertex per
//! residue class, their rotation quotients `G_{n,m}`, and local pieces cut out
//! at internal and boundary vertices of a decorated graph.  Gluing identifies
//! the designated interface loops of the two halfedges of every edge; the
//! reduced form then contracts each identified loop against one of the
//! adjacent degree `1-n` loops.  A covering check folds the glued presentation
//! of a symmetric graph onto the glued presentation of its orbit quotient.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dgalg::reduce::eliminate_contractible_pair;
use crate::dgalg::{ArrowId, FreeDgPresentation, GradedQuiver, PathExpr, VertexId};
use crate::scalar::Field;
use crate::sgraph::{SGraph, VertexKind};

/// Cap on the size of a symmetry group accepted by the covering check.
const GROUP_CAP: usize = 1024;
/// Cap on reported per-generator mismatches in a covering report.
const MAX_REPORTED: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GinzburgError {
    #[error("decoration must satisfy n >= 2, got {0}")]
    DecorationTooSmall(i64),
    #[error("{m} does not divide {n}")]
    NotDivisor { m: i64, n: i64 },
    #[error("field characteristic {characteristic} equals the rotation order {order}")]
    CharacteristicClash { characteristic: u64, order: i64 },
    #[error("corner data invalid: {0}")]
    CornerData(String),
    #[error("graph is not {n}-compatible: {problems:?}")]
    Incompatible { n: i64, problems: Vec<String> },
    #[error("group action inconsistent: {0}")]
    ActionInconsistent(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Structural role of one generator within a local piece or a glued quiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PieceRole {
    /// Cyclic-piece arrow into the given class, spanning `gap` unit steps.
    Alpha { class: i64, gap: i64 },
    /// Closed interface loop of degree `2-n` at the given class.
    SmallLoop { class: i64 },
    /// Degree `1-n` loop at the given class.
    BigLoop { class: i64 },
    /// Boundary-piece walk arrow between 1-based positions, `from < to`.
    WalkAlpha { from: usize, to: usize },
    /// Boundary-piece arrow of degree `2-n-d`, `from <= to`; the diagonal
    /// entries are the interface loops.
    WalkBeta { from: usize, to: usize },
    /// Identified interface loop of a glued edge (0-based edge index).
    EdgeLoop { edge: usize },
}

/// Role of a generator together with the graph vertex it was imported from
/// (`None` for generators that belong to no single vertex).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct GlueOrigin {
    pub vertex: Option<usize>,
    pub role: PieceRole,
}

impl GlueOrigin {
    fn piece(role: PieceRole) -> Self {
        GlueOrigin { vertex: None, role }
    }
}

/// Interface data of one glued edge: its identified loop and the adjacent
/// degree `1-n` loops (ordered by the graph position of their halfedge, the
/// side kept by the reduction first; empty at boundary-boundary edges).
#[derive(Clone, Debug)]
pub struct EdgeInterface {
    pub loop_arrow: ArrowId,
    pub big_loops: Vec<ArrowId>,
}

/// A free dg presentation carrying designated interface generators.
///
/// `glue_loops` lists the closed degree `2-n` interface loops: by class for
/// cyclic pieces, by halfedge position for vertex-local pieces, by edge for
/// glued presentations.  `big_loops` lists the degree `1-n` loops, and
/// `roles` records the structural role of every generator in arrow order.
#[derive(Clone, Debug)]
pub struct LocalPresentation {
    pub n: i64,
    pub presentation: FreeDgPresentation,
    pub roles: Vec<GlueOrigin>,
    pub glue_loops: Vec<ArrowId>,
    pub big_loops: Vec<ArrowId>,
    pub edge_interfaces: Vec<EdgeInterface>,
}

fn wrap1(x: i64, n: i64) -> i64 {
    (x - 1).rem_euclid(n) + 1
}

fn ensure_d_squared(p: &FreeDgPresentation, what: &str) -> Result<(), GinzburgError> {
    let report = p.check_d_squared();
    if report.is_pass() {
        Ok(())
    } else {
        Err(GinzburgError::Internal(format!(
            "{what}: d^2 != 0 on {:?}",
            report.failures
        )))
    }
}

// ---------------------------------------------------------------------------
// Cyclic presentations
// ---------------------------------------------------------------------------

/// The cyclic presentation on `n` vertices: arrows `a{i}_{j}` of degree
/// `1 - gap` for every pair of distinct classes (`gap` the cyclic distance
/// from `i` down to `j`), a closed loop `l{i}` of degree `2-n` and a loop
/// `L{i}` of degree `1-n` at every vertex.
pub fn build_qnn(n: i64, field: Field) -> Result<LocalPresentation, GinzburgError> {
    if n < 2 {
        return Err(GinzburgError::DecorationTooSmall(n));
    }
    let mut quiver = GradedQuiver::new();
    let verts: Vec<VertexId> = (1..=n).map(|i| quiver.add_vertex(format!("v{i}"))).collect();
    let mut roles = Vec::new();
    // Class-major creation order, so the orbit representatives of any rotation
    // quotient are the arrows targeting the leading classes.
    let mut alphas: BTreeMap<(i64, i64), ArrowId> = BTreeMap::new();
    for j in 1..=n {
        for gap in 1..n {
            let i = wrap1(j + gap, n);
            let a = quiver.add_arrow(
                format!("a{i}_{j}"),
                verts[(i - 1) as usize],
                verts[(j - 1) as usize],
                1 - gap,
            );
            alphas.insert((j - 1, gap), a);
            roles.push(GlueOrigin::piece(PieceRole::Alpha { class: j - 1, gap }));
        }
    }
    let mut smalls = Vec::new();
    for j in 1..=n {
        let v = verts[(j - 1) as usize];
        smalls.push(quiver.add_arrow(format!("l{j}"), v, v, 2 - n));
        roles.push(GlueOrigin::piece(PieceRole::SmallLoop { class: j - 1 }));
    }
    let mut bigs = Vec::new();
    for j in 1..=n {
        let v = verts[(j - 1) as usize];
        bigs.push(quiver.add_arrow(format!("L{j}"), v, v, 1 - n));
        roles.push(GlueOrigin::piece(PieceRole::BigLoop { class: j - 1 }));
    }

    let mut pres = FreeDgPresentation::new(quiver, field);
    for j in 1..=n {
        for gap in 2..n {
            let arr = alphas[&(j - 1, gap)];
            let a = pres.quiver.arrow(arr);
            let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
            for g2 in 1..gap {
                let g1 = gap - g2;
                let k = wrap1(j + g2, n);
                // path: the long arrow into class k, then the arrow k -> j
                expr.add_term(
                    vec![alphas[&(k - 1, g1)], alphas[&(j - 1, g2)]],
                    field.sign(1 - g2),
                );
            }
            pres.set_differential(arr, expr)
                .map_err(|e| GinzburgError::Internal(e.to_string()))?;
        }
    }
    for i in 1..=n {
        let arr = bigs[(i - 1) as usize];
        let a = pres.quiver.arrow(arr);
        let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
        expr.add_term(vec![smalls[(i - 1) as usize]], field.sign(1));
        for dp in 1..n {
            let j = wrap1(i - dp, n);
            // loop at i: first i -> j, then j -> i
            expr.add_term(
                vec![alphas[&(j - 1, dp)], alphas[&(i - 1, n - dp)]],
                field.sign(1 - (n - dp)),
            );
        }
        pres.set_differential(arr, expr)
            .map_err(|e| GinzburgError::Internal(e.to_string()))?;
    }
    ensure_d_squared(&pres, "cyclic presentation")?;
    Ok(LocalPresentation {
        n,
        presentation: pres,
        roles,
        glue_loops: smalls,
        big_loops: bigs,
        edge_interfaces: Vec::new(),
    })
}

fn project_class_role(role: PieceRole, m: i64) -> Result<PieceRole, GinzburgError> {
    Ok(match role {
        PieceRole::Alpha { class, gap } => PieceRole::Alpha {
            class: class.rem_euclid(m),
            gap,
        },
        PieceRole::SmallLoop { class } => PieceRole::SmallLoop {
            class: class.rem_euclid(m),
        },
        PieceRole::BigLoop { class } => PieceRole::BigLoop {
            class: class.rem_euclid(m),
        },
        other => {
            return Err(GinzburgError::Internal(format!(
                "expected a cyclic-piece generator, found {other:?}"
            )))
        }
    })
}

/// Quotient of a full cyclic presentation by the rotation that shifts classes
/// by `m`: vertices and arrows are identified along their orbits and the
/// differential descends.  Returns the input unchanged for `m = n`.
pub fn cyclic_quotient(p: &LocalPresentation, m: i64) -> Result<LocalPresentation, GinzburgError> {
    let n = p.n;
    if m < 1 || n % m != 0 {
        return Err(GinzburgError::NotDivisor { m, n });
    }
    let order = n / m;
    let field = p.presentation.field;
    if let Field::Fp(ch) = field {
        if ch == order as u64 {
            return Err(GinzburgError::CharacteristicClash {
                characteristic: ch,
                order,
            });
        }
    }
    if p.presentation.quiver.vertex_count() != n as usize {
        return Err(GinzburgError::Internal(
            "cyclic quotient expects a presentation with one vertex per class".into(),
        ));
    }
    if m == n {
        return Ok(p.clone());
    }

    let old = &p.presentation.quiver;
    let mut quiver = GradedQuiver::new();
    let verts: Vec<VertexId> = (1..=m).map(|c| quiver.add_vertex(format!("v{c}"))).collect();
    let mut seen: BTreeMap<PieceRole, ArrowId> = BTreeMap::new();
    let mut rep_of: BTreeMap<PieceRole, ArrowId> = BTreeMap::new();
    let mut roles = Vec::new();
    let mut proj: Vec<ArrowId> = Vec::with_capacity(old.arrow_count());
    for (idx, origin) in p.roles.iter().enumerate() {
        let id = ArrowId(idx as u32);
        let projected = project_class_role(origin.role, m)?;
        let nid = match seen.get(&projected) {
            Some(&a) => a,
            None => {
                let arr = old.arrow(id);
                let (src, tgt) = match projected {
                    PieceRole::Alpha { class, gap } => (
                        verts[(class + gap).rem_euclid(m) as usize],
                        verts[class as usize],
                    ),
                    PieceRole::SmallLoop { class } | PieceRole::BigLoop { class } => {
                        (verts[class as usize], verts[class as usize])
                    }
                    _ => unreachable!(),
                };
                let a = quiver.add_arrow(arr.name.clone(), src, tgt, arr.degree);
                roles.push(GlueOrigin::piece(projected));
                seen.insert(projected, a);
                rep_of.insert(projected, id);
                a
            }
        };
        proj.push(nid);
    }

    let mut pres = FreeDgPresentation::new(quiver, field);
    for (role, &nid) in &seen {
        let rep = rep_of[role];
        let a = pres.quiver.arrow(nid);
        let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
        for (word, coeff) in &p.presentation.d_of(rep).terms {
            expr.add_term(
                word.iter().map(|&x| proj[x.0 as usize]).collect(),
                coeff.clone(),
            );
        }
        pres.set_differential(nid, expr)
            .map_err(|e| GinzburgError::Internal(e.to_string()))?;
    }
    // Every orbit member must project onto the same structure constants.
    for idx in 0..old.arrow_count() {
        let id = ArrowId(idx as u32);
        let image = proj[idx];
        let a = pres.quiver.arrow(image);
        let mut mapped = PathExpr::zero(field, a.source, a.target, a.degree + 1);
        for (word, coeff) in &p.presentation.d_of(id).terms {
            mapped.add_term(
                word.iter().map(|&x| proj[x.0 as usize]).collect(),
                coeff.clone(),
            );
        }
        if mapped.terms != pres.d_of(image).terms {
            return Err(GinzburgError::Internal(format!(
                "quotient structure constants differ on the orbit of `{}`",
                old.arrow(id).name
            )));
        }
    }
    ensure_d_squared(&pres, "cyclic quotient")?;
    let glue_loops = (0..m)
        .map(|c| seen[&PieceRole::SmallLoop { class: c }])
        .collect();
    let big_loops = (0..m)
        .map(|c| seen[&PieceRole::BigLoop { class: c }])
        .collect();
    Ok(LocalPresentation {
        n,
        presentation: pres,
        roles,
        glue_loops,
        big_loops,
        edge_interfaces: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Local pieces
// ---------------------------------------------------------------------------

/// Restriction of a quotient cyclic presentation to the given classes: only
/// arrows with both endpoints among the classes survive, and differential
/// words through discarded generators are dropped.
fn restrict_to_classes(
    g: &LocalPresentation,
    classes: &[i64],
) -> Result<LocalPresentation, GinzburgError> {
    let m = g.presentation.quiver.vertex_count() as i64;
    let keep: BTreeSet<i64> = classes.iter().copied().collect();
    let old = &g.presentation.quiver;
    let field = g.presentation.field;

    let mut quiver = GradedQuiver::new();
    let mut vmap: BTreeMap<i64, VertexId> = BTreeMap::new();
    for &c in classes {
        vmap.insert(c, quiver.add_vertex(format!("v{}", c + 1)));
    }
    let mut roles = Vec::new();
    let mut amap: Vec<Option<ArrowId>> = vec![None; old.arrow_count()];
    for (idx, origin) in g.roles.iter().enumerate() {
        let kept = match origin.role {
            PieceRole::Alpha { class, gap } => {
                keep.contains(&class) && keep.contains(&(class + gap).rem_euclid(m))
            }
            PieceRole::SmallLoop { class } | PieceRole::BigLoop { class } => keep.contains(&class),
            other => {
                return Err(GinzburgError::Internal(format!(
                    "expected a cyclic-piece generator, found {other:?}"
                )))
            }
        };
        if !kept {
            continue;
        }
        let arr = old.arrow(ArrowId(idx as u32));
        let src = old.vertex_names[arr.source.0 as usize].clone();
        let tgt = old.vertex_names[arr.target.0 as usize].clone();
        let find = |name: &str| -> VertexId {
            let c: i64 = name[1..].parse::<i64>().expect("class vertex name") - 1;
            vmap[&c]
        };
        let a = quiver.add_arrow(arr.name.clone(), find(&src), find(&tgt), arr.degree);
        roles.push(*origin);
        amap[idx] = Some(a);
    }

    let mut pres = FreeDgPresentation::new(quiver, field);
    for (idx, na) in amap.iter().enumerate() {
        let Some(na) = na else { continue };
        let a = pres.quiver.arrow(*na);
        let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
        for (word, coeff) in &g.presentation.d_of(ArrowId(idx as u32)).terms {
            let mapped: Option<Vec<ArrowId>> =
                word.iter().map(|&x| amap[x.0 as usize]).collect();
            if let Some(w) = mapped {
                expr.add_term(w, coeff.clone());
            }
        }
        pres.set_differential(*na, expr)
            .map_err(|e| GinzburgError::Internal(e.to_string()))?;
    }
    ensure_d_squared(&pres, "restricted piece")?;
    let pick = |ids: &[ArrowId]| -> Vec<ArrowId> {
        classes
            .iter()
            .map(|&c| amap[ids[c as usize].0 as usize].expect("loop at a kept class"))
            .collect()
    };
    Ok(LocalPresentation {
        n: g.n,
        presentation: pres,
        roles,
        glue_loops: pick(&g.glue_loops),
        big_loops: pick(&g.big_loops),
        edge_interfaces: Vec::new(),
    })
}

/// Local piece at an internal vertex of degree `m` with the given cyclic
/// corner list: the quotient cyclic presentation restricted to the classes of
/// the attached halfedges (the running corner sums).  The designated loops
/// are listed in halfedge order.
pub fn local_interior(
    n: i64,
    m: i64,
    corners: &[u64],
    field: Field,
) -> Result<LocalPresentation, GinzburgError> {
    if corners.is_empty() || corners.contains(&0) {
        return Err(GinzburgError::CornerData(
            "corner list must be nonempty with positive entries".into(),
        ));
    }
    let total: u64 = corners.iter().sum();
    if m < 1 || total != m as u64 {
        return Err(GinzburgError::CornerData(format!(
            "corner sum {total} must equal the vertex degree {m}"
        )));
    }
    if n % m != 0 {
        return Err(GinzburgError::NotDivisor { m, n });
    }
    let qnn = build_qnn(n, field)?;
    let g = cyclic_quotient(&qnn, m)?;
    let mut classes = Vec::with_capacity(corners.len());
    let mut acc = 0i64;
    for &c in corners {
        classes.push(acc);
        acc += c as i64;
    }
    restrict_to_classes(&g, &classes)
}

/// Local piece at a boundary vertex with the given corner list (one value per
/// adjacent halfedge pair): one quiver vertex per halfedge position, walk
/// arrows `a{i}_{j}` of degree `1-d`, and arrows `b{i}_{j}` of degree
/// `2-n-d`, whose diagonal entries are the designated interface loops.
pub fn local_boundary(
    n: i64,
    corners: &[u64],
    field: Field,
) -> Result<LocalPresentation, GinzburgError> {
    if n < 1 {
        return Err(GinzburgError::DecorationTooSmall(n));
    }
    if corners.contains(&0) {
        return Err(GinzburgError::CornerData(
            "corner values must be positive".into(),
        ));
    }
    let r = corners.len() + 1;
    let dist =
        |j: usize, i: usize| -> i64 { corners[j - 1..i - 1].iter().map(|&c| c as i64).sum() };

    let mut quiver = GradedQuiver::new();
    let verts: Vec<VertexId> = (1..=r).map(|i| quiver.add_vertex(format!("v{i}"))).collect();
    let mut roles = Vec::new();
    let mut alpha: BTreeMap<(usize, usize), ArrowId> = BTreeMap::new();
    for i in 1..=r {
        for j in 1..i {
            let a = quiver.add_arrow(
                format!("a{i}_{j}"),
                verts[i - 1],
                verts[j - 1],
                1 - dist(j, i),
            );
            alpha.insert((j, i), a);
            roles.push(GlueOrigin::piece(PieceRole::WalkAlpha { from: j, to: i }));
        }
    }
    let mut beta: BTreeMap<(usize, usize), ArrowId> = BTreeMap::new();
    for i in 1..=r {
        for j in 1..=i {
            let b = quiver.add_arrow(
                format!("b{i}_{j}"),
                verts[i - 1],
                verts[j - 1],
                2 - n - dist(j, i),
            );
            beta.insert((j, i), b);
            roles.push(GlueOrigin::piece(PieceRole::WalkBeta { from: j, to: i }));
        }
    }

    let mut pres = FreeDgPresentation::new(quiver, field);
    for i in 1..=r {
        for j in 1..i {
            let arr = alpha[&(j, i)];
            let a = pres.quiver.arrow(arr);
            let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
            for k in (j + 1)..i {
                expr.add_term(
                    vec![alpha[&(k, i)], alpha[&(j, k)]],
                    field.sign(dist(j, k) - 1),
                );
            }
            pres.set_differential(arr, expr)
                .map_err(|e| GinzburgError::Internal(e.to_string()))?;
        }
    }
    for i in 1..=r {
        for j in 1..=i {
            let arr = beta[&(j, i)];
            let a = pres.quiver.arrow(arr);
            let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
            for k in (j + 1)..=i {
                expr.add_term(vec![beta[&(k, i)], alpha[&(j, k)]], field.sign(1));
            }
            for k in j..i {
                expr.add_term(
                    vec![alpha[&(k, i)], beta[&(j, k)]],
                    field.sign(n + dist(j, k)),
                );
            }
            pres.set_differential(arr, expr)
                .map_err(|e| GinzburgError::Internal(e.to_string()))?;
        }
    }
    ensure_d_squared(&pres, "boundary piece")?;
    let glue_loops = (1..=r).map(|i| beta[&(i, i)]).collect();
    Ok(LocalPresentation {
        n,
        presentation: pres,
        roles,
        glue_loops,
        big_loops: Vec::new(),
        edge_interfaces: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Gluing and reduction
// ---------------------------------------------------------------------------

fn fresh(base: String, used: &mut BTreeSet<String>) -> String {
    if used.insert(base.clone()) {
        return base;
    }
    let mut k = 2usize;
    loop {
        let cand = format!("{base}_{k}");
        if used.insert(cand.clone()) {
            return cand;
        }
        k += 1;
    }
}

/// Glue the local pieces of every vertex of `s` along its edges: quiver
/// vertices are the edges of `s`, piece generators are imported with a
/// `vertexid.` name prefix, and the two designated loops meeting at each edge
/// are identified into a single closed loop `l_e{k}`.
pub fn glue_ginzburg(s: &SGraph, n: i64, field: Field) -> Result<LocalPresentation, GinzburgError> {
    if n < 2 {
        return Err(GinzburgError::DecorationTooSmall(n));
    }
    let diag = s.validate(n);
    if !diag.compatible {
        return Err(GinzburgError::Incompatible {
            n,
            problems: diag.problems,
        });
    }
    let ne = s.edges.len();
    let mut quiver = GradedQuiver::new();
    let everts: Vec<VertexId> = (1..=ne).map(|k| quiver.add_vertex(format!("e{k}"))).collect();
    let mut roles: Vec<GlueOrigin> = Vec::new();
    let mut used: BTreeSet<String> = BTreeSet::new();

    struct PieceImport {
        local: LocalPresentation,
        amap: Vec<Option<ArrowId>>,
    }
    let mut imports: Vec<PieceImport> = Vec::new();
    for (vi, v) in s.vertices.iter().enumerate() {
        if v.halfedges.is_empty() {
            return Err(GinzburgError::CornerData(format!(
                "vertex {} has no halfedges to glue along",
                v.id
            )));
        }
        let local = match v.kind {
            VertexKind::Internal => {
                local_interior(n, s.internal_degree(vi) as i64, &v.corners, field)?
            }
            VertexKind::Boundary => local_boundary(n, &v.corners, field)?,
        };
        let piece_verts = local.presentation.quiver.vertex_count();
        if piece_verts != v.halfedges.len() {
            return Err(GinzburgError::Internal(format!(
                "piece at {} has {piece_verts} slots for {} halfedges",
                v.id,
                v.halfedges.len()
            )));
        }
        let vmap: Vec<VertexId> = v
            .halfedges
            .iter()
            .map(|&h| everts[s.edge_of[h]])
            .collect();
        let interface: BTreeSet<ArrowId> = local.glue_loops.iter().copied().collect();
        let mut amap = vec![None; local.presentation.quiver.arrow_count()];
        for idx in 0..local.presentation.quiver.arrow_count() {
            let id = ArrowId(idx as u32);
            if interface.contains(&id) {
                continue;
            }
            let arr = local.presentation.quiver.arrow(id);
            let name = fresh(format!("{}.{}", v.id, arr.name), &mut used);
            let na = quiver.add_arrow(
                name,
                vmap[arr.source.0 as usize],
                vmap[arr.target.0 as usize],
                arr.degree,
            );
            roles.push(GlueOrigin {
                vertex: Some(vi),
                role: local.roles[idx].role,
            });
            amap[idx] = Some(na);
        }
        imports.push(PieceImport { local, amap });
    }

    let mut edge_loop: Vec<ArrowId> = Vec::new();
    for k in 0..ne {
        let name = fresh(format!("l_e{}", k + 1), &mut used);
        let a = quiver.add_arrow(name, everts[k], everts[k], 2 - n);
        roles.push(GlueOrigin {
            vertex: None,
            role: PieceRole::EdgeLoop { edge: k },
        });
        edge_loop.push(a);
    }
    for (vi, v) in s.vertices.iter().enumerate() {
        for (pos, &h) in v.halfedges.iter().enumerate() {
            let gl = imports[vi].local.glue_loops[pos];
            imports[vi].amap[gl.0 as usize] = Some(edge_loop[s.edge_of[h]]);
        }
    }

    let mut pres = FreeDgPresentation::new(quiver, field);
    for imp in &imports {
        let interface: BTreeSet<ArrowId> = imp.local.glue_loops.iter().copied().collect();
        for idx in 0..imp.local.presentation.quiver.arrow_count() {
            let id = ArrowId(idx as u32);
            if interface.contains(&id) {
                continue;
            }
            let na = imp.amap[idx].expect("imported arrow");
            let a = pres.quiver.arrow(na);
            let mut expr = PathExpr::zero(field, a.source, a.target, a.degree + 1);
            for (word, coeff) in &imp.local.presentation.d_of(id).terms {
                expr.add_term(
                    word.iter()
                        .map(|&x| imp.amap[x.0 as usize].expect("mapped letter"))
                        .collect(),
                    coeff.clone(),
                );
            }
            pres.set_differential(na, expr)
                .map_err(|e| GinzburgError::Internal(e.to_string()))?;
        }
    }

    let mut edge_interfaces = Vec::new();
    for (k, &(h1, h2)) in s.edges.iter().enumerate() {
        let mut sides = [h1, h2];
        sides.sort_by_key(|&h| (s.halfedges[h].vertex, s.halfedges[h].pos));
        let mut big_loops = Vec::new();
        for &h in &sides {
            if s.is_internal_halfedge(h) {
                let vi = s.halfedges[h].vertex;
                let pos = s.halfedges[h].pos;
                let lb = imports[vi].local.big_loops[pos];
                big_loops.push(imports[vi].amap[lb.0 as usize].expect("imported loop"));
            }
        }
        edge_interfaces.push(EdgeInterface {
            loop_arrow: edge_loop[k],
            big_loops,
        });
    }
    ensure_d_squared(&pres, "glued presentation")?;
    let big_loops = imports
        .iter()
        .flat_map(|imp| {
            imp.local
                .big_loops
                .iter()
                .map(|&b| imp.amap[b.0 as usize].expect("imported loop"))
        })
        .collect();
    Ok(LocalPresentation {
        n,
        presentation: pres,
        roles,
        glue_loops: edge_loop,
        big_loops,
        edge_interfaces,
    })
}

fn eliminate_by_name(
    cur: &FreeDgPresentation,
    y: &str,
    x: &str,
) -> Result<FreeDgPresentation, GinzburgError> {
    let yid = cur
        .quiver
        .arrow_by_name(y)
        .ok_or_else(|| GinzburgError::Internal(format!("missing generator {y}")))?;
    let xid = cur
        .quiver
        .arrow_by_name(x)
        .ok_or_else(|| GinzburgError::Internal(format!("missing generator {x}")))?;
    eliminate_contractible_pair(cur, yid, xid).map_err(|e| GinzburgError::Internal(e.to_string()))
}

/// Contract the interface of a glued presentation edge by edge: at an edge
/// with two adjacent degree `1-n` loops the identified loop and the second of
/// the two are eliminated and the survivor is renamed `L_e{k}`; at an edge
/// with one such loop both it and the identified loop disappear; an edge
/// between boundary pieces keeps its identified loop.
pub fn reduce_ginzburg(p: &LocalPresentation) -> Result<FreeDgPresentation, GinzburgError> {
    let mut cur = p.presentation.clone();
    for (k, iface) in p.edge_interfaces.iter().enumerate() {
        let le = p.presentation.quiver.arrow(iface.loop_arrow).name.clone();
        let bigs: Vec<String> = iface
            .big_loops
            .iter()
            .map(|&a| p.presentation.quiver.arrow(a).name.clone())
            .collect();
        match bigs.as_slice() {
            [] => {}
            [only] => {
                cur = eliminate_by_name(&cur, only, &le)?;
            }
            [keep, drop] => {
                cur = eliminate_by_name(&cur, drop, &le)?;
                let id = cur
                    .quiver
                    .arrow_by_name(keep)
                    .ok_or_else(|| GinzburgError::Internal(format!("missing generator {keep}")))?;
                cur.quiver.rename_arrow(id, format!("L_e{}", k + 1));
            }
            _ => {
                return Err(GinzburgError::Internal(
                    "an edge has more than two adjacent loops".into(),
                ))
            }
        }
    }
    ensure_d_squared(&cur, "reduced presentation")?;
    Ok(cur)
}

// ---------------------------------------------------------------------------
// Covering quotients
// ---------------------------------------------------------------------------

/// Outcome of folding a symmetric graph onto its orbit quotient.
#[derive(Clone, Debug)]
pub struct CoveringReport {
    pub group_order: usize,
    pub vertex_orbits: usize,
    pub edge_orbits: usize,
    /// The orbit quotient graph is isomorphic to the supplied base graph.
    pub quotient_matches_base: bool,
    /// Projecting every glued generator of the cover respects differentials.
    pub differentials_match: bool,
    pub failures: Vec<String>,
}

impl CoveringReport {
    pub fn pass(&self) -> bool {
        self.quotient_matches_base && self.differentials_match && self.failures.is_empty()
    }
}

struct MinUnion(Vec<usize>);

impl MinUnion {
    fn new(n: usize) -> Self {
        MinUnion((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn vertex_image(s: &SGraph, g: &[usize], vi: usize) -> usize {
    s.halfedges[g[s.vertices[vi].halfedges[0]]].vertex
}

fn validate_automorphism(s: &SGraph, g: &[usize]) -> Result<(), GinzburgError> {
    let nh = s.halfedges.len();
    if g.len() != nh {
        return Err(GinzburgError::ActionInconsistent(format!(
            "permutation length {} does not match {nh} halfedges",
            g.len()
        )));
    }
    let mut seen = vec![false; nh];
    for &x in g {
        if x >= nh || seen[x] {
            return Err(GinzburgError::ActionInconsistent(
                "not a permutation of the halfedges".into(),
            ));
        }
        seen[x] = true;
    }
    for h in 0..nh {
        if g[s.partner(h)] != s.partner(g[h]) {
            return Err(GinzburgError::ActionInconsistent(format!(
                "edge pairing broken at halfedge {}",
                s.halfedges[h].name
            )));
        }
    }
    for v in &s.vertices {
        if v.halfedges.is_empty() {
            return Err(GinzburgError::ActionInconsistent(format!(
                "vertex {} has no halfedges",
                v.id
            )));
        }
        let r = v.halfedges.len();
        let img0 = g[v.halfedges[0]];
        let w = &s.vertices[s.halfedges[img0].vertex];
        if w.kind != v.kind || w.halfedges.len() != r {
            return Err(GinzburgError::ActionInconsistent(format!(
                "vertex {} is not carried onto a vertex of the same shape",
                v.id
            )));
        }
        let off = s.halfedges[img0].pos;
        match v.kind {
            VertexKind::Internal => {
                for k in 0..r {
                    if g[v.halfedges[k]] != w.halfedges[(off + k) % r]
                        || v.corners[k] != w.corners[(off + k) % r]
                    {
                        return Err(GinzburgError::ActionInconsistent(format!(
                            "cyclic order or corners broken at vertex {}",
                            v.id
                        )));
                    }
                }
            }
            VertexKind::Boundary => {
                if off != 0 || v.corners != w.corners {
                    return Err(GinzburgError::ActionInconsistent(format!(
                        "total order or corners broken at boundary vertex {}",
                        v.id
                    )));
                }
                for k in 0..r {
                    if g[v.halfedges[k]] != w.halfedges[k] {
                        return Err(GinzburgError::ActionInconsistent(format!(
                            "total order broken at boundary vertex {}",
                            v.id
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

fn cumulative_offsets(corners: &[u64]) -> Vec<i64> {
    let mut out = Vec::with_capacity(corners.len());
    let mut acc = 0i64;
    for &c in corners {
        out.push(acc);
        acc += c as i64;
    }
    out
}

/// Check that the glued presentation of `cover` folds onto the glued
/// presentation of its orbit quotient under the group generated by the given
/// halfedge permutations, and that this quotient is isomorphic to `base`.
pub fn covering_quotient_check(
    cover: &SGraph,
    generators: &[Vec<usize>],
    base: &SGraph,
    n: i64,
    field: Field,
) -> Result<CoveringReport, GinzburgError> {
    let nh = cover.halfedges.len();
    for (vi, v) in cover.vertices.iter().enumerate() {
        if v.halfedges.is_empty() {
            return Err(GinzburgError::ActionInconsistent(format!(
                "vertex {} has no halfedges",
                v.id
            )));
        }
        if v.kind == VertexKind::Internal && cover.internal_degree(vi) != n as u64 {
            return Err(GinzburgError::ActionInconsistent(format!(
                "internal vertex {} has degree {} instead of {n}",
                v.id,
                cover.internal_degree(vi)
            )));
        }
    }
    for g in generators {
        validate_automorphism(cover, g)?;
    }

    // Full group closure, needed for the stabilizer shifts.
    let identity: Vec<usize> = (0..nh).collect();
    let mut elems: BTreeSet<Vec<usize>> = BTreeSet::new();
    elems.insert(identity.clone());
    let mut queue = vec![identity];
    while let Some(e) = queue.pop() {
        for g in generators {
            let comp: Vec<usize> = e.iter().map(|&x| g[x]).collect();
            if !elems.contains(&comp) {
                if elems.len() >= GROUP_CAP {
                    return Err(GinzburgError::ActionInconsistent(
                        "symmetry group exceeds the supported size".into(),
                    ));
                }
                elems.insert(comp.clone());
                queue.push(comp);
            }
        }
    }

    let mut uf_h = MinUnion::new(nh);
    let mut uf_v = MinUnion::new(cover.vertices.len());
    let mut uf_e = MinUnion::new(cover.edges.len());
    for g in generators {
        for h in 0..nh {
            uf_h.union(h, g[h]);
        }
        for vi in 0..cover.vertices.len() {
            uf_v.union(vi, vertex_image(cover, g, vi));
        }
        for (ei, &(h1, _)) in cover.edges.iter().enumerate() {
            uf_e.union(ei, cover.edge_of[g[h1]]);
        }
    }
    let hroot: Vec<usize> = (0..nh).map(|h| uf_h.find(h)).collect();
    let vroot: Vec<usize> = (0..cover.vertices.len()).map(|v| uf_v.find(v)).collect();
    let eroot: Vec<usize> = (0..cover.edges.len()).map(|e| uf_e.find(e)).collect();
    let vreps: Vec<usize> = (0..cover.vertices.len())
        .filter(|&v| vroot[v] == v)
        .collect();
    let ereps: Vec<usize> = (0..cover.edges.len()).filter(|&e| eroot[e] == e).collect();
    let erank: BTreeMap<usize, usize> = ereps.iter().enumerate().map(|(k, &e)| (e, k)).collect();

    // Fundamental segment length at each representative vertex.
    let mut fund: BTreeMap<usize, usize> = BTreeMap::new();
    for &vr in &vreps {
        let v = &cover.vertices[vr];
        let r = v.halfedges.len();
        let mut best = r;
        for e in &elems {
            if vertex_image(cover, e, vr) != vr {
                continue;
            }
            let off = cover.halfedges[e[v.halfedges[0]]].pos;
            if off == 0 {
                continue;
            }
            if v.kind == VertexKind::Boundary {
                return Err(GinzburgError::ActionInconsistent(format!(
                    "boundary vertex {} has a nontrivial stabilizer",
                    v.id
                )));
            }
            best = best.min(off);
        }
        if r % best != 0 {
            return Err(GinzburgError::ActionInconsistent(format!(
                "stabilizer shift {best} does not divide the valency {r} at vertex {}",
                v.id
            )));
        }
        fund.insert(vr, best);
    }

    // The orbit quotient graph, built from representative data.
    let mut vertex_parts = Vec::new();
    let mut qslot: Vec<Vec<usize>> = Vec::new();
    for &vr in &vreps {
        let v = &cover.vertices[vr];
        let f = match v.kind {
            VertexKind::Internal => fund[&vr],
            VertexKind::Boundary => v.halfedges.len(),
        };
        let slots: Vec<usize> = v.halfedges[..f].iter().map(|&h| hroot[h]).collect();
        let hnames: Vec<String> = slots
            .iter()
            .map(|&h| cover.halfedges[h].name.clone())
            .collect();
        let corners: Vec<u64> = match v.kind {
            VertexKind::Internal => v.corners[..f].to_vec(),
            VertexKind::Boundary => v.corners.clone(),
        };
        vertex_parts.push((v.id.clone(), v.kind, hnames, corners));
        qslot.push(slots);
    }
    let mut edge_parts = Vec::new();
    for &er in &ereps {
        let (h1, h2) = cover.edges[er];
        edge_parts.push((
            cover.halfedges[hroot[h1]].name.clone(),
            cover.halfedges[hroot[h2]].name.clone(),
        ));
    }
    let quotient = SGraph::from_parts(vertex_parts, edge_parts)
        .map_err(|e| GinzburgError::ActionInconsistent(format!("quotient assembly failed: {e}")))?;
    let quotient_matches_base = quotient.is_isomorphic(base);

    let cover_glue = glue_ginzburg(cover, n, field)?;
    let quot_glue = glue_ginzburg(&quotient, n, field)?;

    let mut qpos: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (qv, slots) in qslot.iter().enumerate() {
        for (pos, &h) in slots.iter().enumerate() {
            qpos.insert(h, (qv, pos));
        }
    }
    let cover_classes: Vec<Vec<i64>> = cover
        .vertices
        .iter()
        .map(|v| cumulative_offsets(&v.corners))
        .collect();
    let quot_classes: Vec<Vec<i64>> = quotient
        .vertices
        .iter()
        .map(|v| cumulative_offsets(&v.corners))
        .collect();

    let slot_of = |vi: usize, pos: usize| -> Result<(usize, usize), GinzburgError> {
        let h = cover.vertices[vi].halfedges[pos];
        qpos.get(&hroot[h]).copied().ok_or_else(|| {
            GinzburgError::Internal("halfedge orbit missing from the quotient".into())
        })
    };
    let class_pos = |vi: usize, class: i64| -> Result<usize, GinzburgError> {
        cover_classes[vi]
            .iter()
            .position(|&p| p == class)
            .ok_or_else(|| GinzburgError::Internal(format!("no halfedge of class {class}")))
    };
    let project_role = |vi: usize, role: PieceRole| -> Result<(Option<usize>, PieceRole), GinzburgError> {
        Ok(match role {
            PieceRole::Alpha { class, gap } => {
                let (qv, k) = slot_of(vi, class_pos(vi, class)?)?;
                (
                    Some(qv),
                    PieceRole::Alpha {
                        class: quot_classes[qv][k],
                        gap,
                    },
                )
            }
            PieceRole::SmallLoop { class } => {
                let (qv, k) = slot_of(vi, class_pos(vi, class)?)?;
                (
                    Some(qv),
                    PieceRole::SmallLoop {
                        class: quot_classes[qv][k],
                    },
                )
            }
            PieceRole::BigLoop { class } => {
                let (qv, k) = slot_of(vi, class_pos(vi, class)?)?;
                (
                    Some(qv),
                    PieceRole::BigLoop {
                        class: quot_classes[qv][k],
                    },
                )
            }
            PieceRole::WalkAlpha { from, to } => {
                let (qv, f) = slot_of(vi, from - 1)?;
                let (_, t) = slot_of(vi, to - 1)?;
                (
                    Some(qv),
                    PieceRole::WalkAlpha {
                        from: f + 1,
                        to: t + 1,
                    },
                )
            }
            PieceRole::WalkBeta { from, to } => {
                let (qv, f) = slot_of(vi, from - 1)?;
                let (_, t) = slot_of(vi, to - 1)?;
                (
                    Some(qv),
                    PieceRole::WalkBeta {
                        from: f + 1,
                        to: t + 1,
                    },
                )
            }
            PieceRole::EdgeLoop { .. } => {
                return Err(GinzburgError::Internal(
                    "edge loops are projected separately".into(),
                ))
            }
        })
    };

    let mut qlookup: BTreeMap<(Option<usize>, PieceRole), ArrowId> = BTreeMap::new();
    for (idx, origin) in quot_glue.roles.iter().enumerate() {
        qlookup.insert((origin.vertex, origin.role), ArrowId(idx as u32));
    }
    let mut pi: Vec<ArrowId> = Vec::with_capacity(cover_glue.roles.len());
    for origin in &cover_glue.roles {
        let key = match origin.role {
            PieceRole::EdgeLoop { edge } => (
                None,
                PieceRole::EdgeLoop {
                    edge: erank[&eroot[edge]],
                },
            ),
            role => {
                let vi = origin
                    .vertex
                    .ok_or_else(|| GinzburgError::Internal("piece arrow without a vertex".into()))?;
                project_role(vi, role)?
            }
        };
        let target = qlookup.get(&key).ok_or_else(|| {
            GinzburgError::Internal(format!("no quotient generator with role {key:?}"))
        })?;
        pi.push(*target);
    }

    let mut failures = Vec::new();
    let mut hit: BTreeSet<ArrowId> = BTreeSet::new();
    for idx in 0..pi.len() {
        let a = ArrowId(idx as u32);
        let image = pi[idx];
        hit.insert(image);
        let target = quot_glue.presentation.quiver.arrow(image);
        let mut mapped = PathExpr::zero(field, target.source, target.target, target.degree + 1);
        for (word, coeff) in &cover_glue.presentation.d_of(a).terms {
            mapped.add_term(
                word.iter().map(|&x| pi[x.0 as usize]).collect(),
                coeff.clone(),
            );
        }
        if mapped.terms != quot_glue.presentation.d_of(image).terms {
            failures.push(format!(
                "differentials disagree on the orbit of generator `{}`",
                cover_glue.presentation.quiver.arrow(a).name
            ));
            if failures.len() >= MAX_REPORTED {
                break;
            }
        }
    }
    if hit.len() != quot_glue.presentation.quiver.arrow_count() {
        failures.push("projection does not reach every quotient generator".into());
    }
    let differentials_match = failures.is_empty();
    if !quotient_matches_base {
        failures.push("the orbit quotient graph is not isomorphic to the base graph".into());
    }
    Ok(CoveringReport {
        group_order: elems.len(),
        vertex_orbits: vreps.len(),
        edge_orbits: ereps.len(),
        quotient_matches_base,
        differentials_match,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::koszul::{cobar, cobar_mixed_pairs, compare_presentations, reduce_mixed};
    use crate::rgb::build_rgb;
    use crate::sgraph::parse_sgraph;

    const SG_A: &str = r#"{"vertices":[{"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},{"id":"v2","kind":"internal","halfedges":["h1","h2"],"corners":[1,2]},{"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],"edges":[["h1","m1"],["h2","t1"]]}"#;
    const SG_B: &str = r#"{"vertices":[{"id":"u","kind":"internal","halfedges":["u1"],"corners":[2]},{"id":"vb","kind":"boundary","halfedges":["g2","g1"],"corners":[1]},{"id":"w","kind":"boundary","halfedges":["w1"],"corners":[]}],"edges":[["g1","w1"],["g2","u1"]]}"#;
    const SG_M: &str = r#"{"vertices":[{"id":"mono","kind":"internal","halfedges":["k1"],"corners":[1]},{"id":"bdy","kind":"boundary","halfedges":["k2"],"corners":[]}],"edges":[["k1","k2"]]}"#;
    const SG_E1: &str = r#"{"vertices":[{"id":"b1","kind":"boundary","halfedges":["c1"],"corners":[]},{"id":"b2","kind":"boundary","halfedges":["c2"],"corners":[]}],"edges":[["c1","c2"]]}"#;
    const SG_E2: &str = r#"{"vertices":[{"id":"q1","kind":"internal","halfedges":["p1"],"corners":[2]},{"id":"q2","kind":"internal","halfedges":["p2"],"corners":[2]}],"edges":[["p1","p2"]]}"#;

    /// Differential of a named generator as sorted (word names, coefficient).
    fn dterms(p: &FreeDgPresentation, name: &str) -> Vec<(Vec<String>, String)> {
        let id = p
            .quiver
            .arrow_by_name(name)
            .unwrap_or_else(|| panic!("no generator named {name}"));
        let mut out: Vec<(Vec<String>, String)> = p
            .d_of(id)
            .terms
            .iter()
            .map(|(w, c)| {
                (
                    w.iter().map(|&a| p.quiver.arrow(a).name.clone()).collect(),
                    c.to_coeff_string(),
                )
            })
            .collect();
        out.sort();
        out
    }

    fn words(raw: &[(&[&str], &str)]) -> Vec<(Vec<String>, String)> {
        let mut out: Vec<(Vec<String>, String)> = raw
            .iter()
            .map(|(w, c)| (w.iter().map(|s| s.to_string()).collect(), c.to_string()))
            .collect();
        out.sort();
        out
    }

    fn profile(p: &FreeDgPresentation) -> Vec<(String, String, String, i64)> {
        let mut out: Vec<_> = p
            .quiver
            .arrows
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    p.quiver.vertex_names[a.source.0 as usize].clone(),
                    p.quiver.vertex_names[a.target.0 as usize].clone(),
                    a.degree,
                )
            })
            .collect();
        out.sort();
        out
    }

    fn dump_text(p: &FreeDgPresentation) -> String {
        format!("{:?}", p.dump())
    }

    #[test]
    fn cyclic_presentation_degrees_match_the_formula() {
        let q3 = build_qnn(3, Field::Q).unwrap();
        let p = profile(&q3.presentation);
        let deg = |name: &str| p.iter().find(|e| e.0 == name).unwrap().3;
        assert_eq!(deg("a2_1"), 0);
        assert_eq!(deg("a1_2"), -1);
        assert_eq!(deg("l1"), -1);
        assert_eq!(deg("L1"), -2);

        // At n = 2 both non-loop arrows sit in degree 0 by the same formula.
        let q2 = build_qnn(2, Field::Q).unwrap();
        let p2 = profile(&q2.presentation);
        let mut alpha_degs: Vec<i64> = p2
            .iter()
            .filter(|e| e.0.starts_with('a'))
            .map(|e| e.3)
            .collect();
        alpha_degs.sort();
        assert_eq!(alpha_degs, vec![0, 0]);
        let deg2 = |name: &str| p2.iter().find(|e| e.0 == name).unwrap().3;
        assert_eq!(deg2("l1"), 0);
        assert_eq!(deg2("L1"), -1);

        assert_eq!(
            build_qnn(1, Field::Q).unwrap_err(),
            GinzburgError::DecorationTooSmall(1)
        );
    }

    #[test]
    fn cyclic_presentation_differentials_match_hand_values() {
        let q3 = build_qnn(3, Field::Q).unwrap();
        let p = &q3.presentation;
        assert_eq!(dterms(p, "a2_1"), vec![]);
        assert_eq!(dterms(p, "a1_2"), words(&[(&["a1_3", "a3_2"], "1")]));
        assert_eq!(
            dterms(p, "L1"),
            words(&[
                (&["l1"], "-1"),
                (&["a1_3", "a3_1"], "-1"),
                (&["a1_2", "a2_1"], "1"),
            ])
        );
    }

    #[test]
    fn cyclic_quotient_counts_names_and_identity() {
        let q4 = build_qnn(4, Field::Q).unwrap();
        let g42 = cyclic_quotient(&q4, 2).unwrap();
        assert_eq!(g42.presentation.quiver.vertex_count(), 2);
        let names: Vec<String> = g42
            .presentation
            .quiver
            .arrows
            .iter()
            .map(|a| a.name.clone())
            .collect();
        assert_eq!(
            names,
            vec!["a2_1", "a3_1", "a4_1", "a3_2", "a4_2", "a1_2", "l1", "l2", "L1", "L2"]
        );

        let q3 = build_qnn(3, Field::Q).unwrap();
        let same = cyclic_quotient(&q3, 3).unwrap();
        assert_eq!(dump_text(&q3.presentation), dump_text(&same.presentation));
    }

    #[test]
    fn cyclic_quotient_guards_divisibility_and_characteristic() {
        let q4 = build_qnn(4, Field::Q).unwrap();
        assert_eq!(
            cyclic_quotient(&q4, 3).unwrap_err(),
            GinzburgError::NotDivisor { m: 3, n: 4 }
        );
        let q6 = build_qnn(6, Field::Fp(3)).unwrap();
        assert_eq!(
            cyclic_quotient(&q6, 2).unwrap_err(),
            GinzburgError::CharacteristicClash {
                characteristic: 3,
                order: 3
            }
        );
        // The same quotient away from the bad characteristic is fine.
        let q6q = build_qnn(6, Field::Fp(5)).unwrap();
        assert!(cyclic_quotient(&q6q, 2).is_ok());
    }

    #[test]
    fn cyclic_quotients_respect_structure_constants_on_the_standard_pairs() {
        for (n, m) in [(2, 1), (3, 1), (3, 3), (4, 1), (4, 2), (6, 2), (6, 3)] {
            let q = build_qnn(n, Field::Q).unwrap();
            let g = cyclic_quotient(&q, m).unwrap();
            // Re-derive the orbit map from the roles and check every member.
            let mut by_role: BTreeMap<PieceRole, ArrowId> = BTreeMap::new();
            for (idx, origin) in g.roles.iter().enumerate() {
                by_role.insert(origin.role, ArrowId(idx as u32));
            }
            let proj: Vec<ArrowId> = q
                .roles
                .iter()
                .map(|o| by_role[&project_class_role(o.role, m).unwrap()])
                .collect();
            for idx in 0..q.presentation.quiver.arrow_count() {
                let image = proj[idx];
                let ia = g.presentation.quiver.arrow(image);
                let mut mapped =
                    PathExpr::zero(Field::Q, ia.source, ia.target, ia.degree + 1);
                for (word, coeff) in &q.presentation.d_of(ArrowId(idx as u32)).terms {
                    mapped.add_term(
                        word.iter().map(|&x| proj[x.0 as usize]).collect(),
                        coeff.clone(),
                    );
                }
                assert_eq!(
                    mapped.terms,
                    g.presentation.d_of(image).terms,
                    "orbit of arrow {idx} at (n, m) = ({n}, {m})"
                );
            }
        }
    }

    #[test]
    fn interior_piece_of_full_valency_is_the_whole_cyclic_presentation() {
        let full = local_interior(3, 3, &[1, 1, 1], Field::Q).unwrap();
        let q3 = build_qnn(3, Field::Q).unwrap();
        assert_eq!(dump_text(&full.presentation), dump_text(&q3.presentation));
    }

    #[test]
    fn interior_piece_prunes_discarded_halfedges() {
        let two = local_interior(3, 3, &[1, 2], Field::Q).unwrap();
        assert_eq!(
            profile(&two.presentation),
            vec![
                ("L1".into(), "v1".into(), "v1".into(), -2),
                ("L2".into(), "v2".into(), "v2".into(), -2),
                ("a1_2".into(), "v1".into(), "v2".into(), -1),
                ("a2_1".into(), "v2".into(), "v1".into(), 0),
                ("l1".into(), "v1".into(), "v1".into(), -1),
                ("l2".into(), "v2".into(), "v2".into(), -1),
            ]
        );
        assert_eq!(
            dterms(&two.presentation, "L1"),
            words(&[(&["l1"], "-1"), (&["a1_2", "a2_1"], "1")])
        );
        assert_eq!(
            dterms(&two.presentation, "L2"),
            words(&[(&["l2"], "-1"), (&["a2_1", "a1_2"], "-1")])
        );

        let mono = local_interior(4, 1, &[1], Field::Q).unwrap();
        assert_eq!(
            profile(&mono.presentation),
            vec![
                ("L1".into(), "v1".into(), "v1".into(), -3),
                ("a2_1".into(), "v1".into(), "v1".into(), 0),
                ("a3_1".into(), "v1".into(), "v1".into(), -1),
                ("a4_1".into(), "v1".into(), "v1".into(), -2),
                ("l1".into(), "v1".into(), "v1".into(), -2),
            ]
        );
    }

    #[test]
    fn interior_piece_rejects_bad_corner_data() {
        assert!(matches!(
            local_interior(3, 3, &[1, 1], Field::Q),
            Err(GinzburgError::CornerData(_))
        ));
        assert!(matches!(
            local_interior(3, 3, &[0, 3], Field::Q),
            Err(GinzburgError::CornerData(_))
        ));
        assert_eq!(
            local_interior(4, 3, &[1, 1, 1], Field::Q).unwrap_err(),
            GinzburgError::NotDivisor { m: 3, n: 4 }
        );
    }

    #[test]
    fn boundary_piece_matches_the_displayed_quiver() {
        let b = local_boundary(2, &[1], Field::Q).unwrap();
        assert_eq!(
            profile(&b.presentation),
            vec![
                ("a2_1".into(), "v2".into(), "v1".into(), 0),
                ("b1_1".into(), "v1".into(), "v1".into(), 0),
                ("b2_1".into(), "v2".into(), "v1".into(), -1),
                ("b2_2".into(), "v2".into(), "v2".into(), 0),
            ]
        );
        assert_eq!(
            dterms(&b.presentation, "b2_1"),
            words(&[(&["a2_1", "b1_1"], "1"), (&["b2_2", "a2_1"], "-1")])
        );

        let single = local_boundary(3, &[], Field::Q).unwrap();
        assert_eq!(
            profile(&single.presentation),
            vec![("b1_1".into(), "v1".into(), "v1".into(), -1)]
        );
        assert_eq!(dterms(&single.presentation, "b1_1"), vec![]);

        let three = local_boundary(3, &[1, 1], Field::Q).unwrap();
        let p = profile(&three.presentation);
        let deg = |name: &str| p.iter().find(|e| e.0 == name).unwrap().3;
        assert_eq!(deg("a2_1"), 0);
        assert_eq!(deg("a3_2"), 0);
        assert_eq!(deg("a3_1"), -1);
        assert_eq!(deg("b1_1"), -1);
        assert_eq!(deg("b2_2"), -1);
        assert_eq!(deg("b3_3"), -1);
        assert_eq!(deg("b2_1"), -2);
        assert_eq!(deg("b3_2"), -2);
        assert_eq!(deg("b3_1"), -3);
        assert_eq!(
            dterms(&three.presentation, "a3_1"),
            words(&[(&["a3_2", "a2_1"], "1")])
        );
    }

    #[test]
    fn glued_mixed_graph_matches_the_hand_computed_presentation() {
        let s = parse_sgraph(SG_B).unwrap();
        let g = glue_ginzburg(&s, 2, Field::Q).unwrap();
        assert_eq!(
            profile(&g.presentation),
            vec![
                ("l_e1".into(), "e1".into(), "e1".into(), 0),
                ("l_e2".into(), "e2".into(), "e2".into(), 0),
                ("u.L1".into(), "e2".into(), "e2".into(), -1),
                ("vb.a2_1".into(), "e1".into(), "e2".into(), 0),
                ("vb.b2_1".into(), "e1".into(), "e2".into(), -1),
            ]
        );
        assert_eq!(
            dterms(&g.presentation, "vb.b2_1"),
            words(&[(&["vb.a2_1", "l_e2"], "1"), (&["l_e1", "vb.a2_1"], "-1")])
        );
        assert_eq!(dterms(&g.presentation, "u.L1"), words(&[(&["l_e2"], "-1")]));
        assert_eq!(dterms(&g.presentation, "l_e1"), vec![]);
        assert_eq!(dterms(&g.presentation, "l_e2"), vec![]);

        let r = reduce_ginzburg(&g).unwrap();
        assert_eq!(
            profile(&r),
            vec![
                ("l_e1".into(), "e1".into(), "e1".into(), 0),
                ("vb.a2_1".into(), "e1".into(), "e2".into(), 0),
                ("vb.b2_1".into(), "e1".into(), "e2".into(), -1),
            ]
        );
        assert_eq!(
            dterms(&r, "vb.b2_1"),
            words(&[(&["l_e1", "vb.a2_1"], "-1")])
        );
    }

    #[test]
    fn glued_internal_graph_matches_the_hand_computed_presentation() {
        let s = parse_sgraph(SG_A).unwrap();
        let g = glue_ginzburg(&s, 3, Field::Q).unwrap();
        assert_eq!(
            profile(&g.presentation),
            vec![
                ("l_e1".into(), "e1".into(), "e1".into(), -1),
                ("l_e2".into(), "e2".into(), "e2".into(), -1),
                ("v1.L1".into(), "e1".into(), "e1".into(), -2),
                ("v1.a2_1".into(), "e1".into(), "e1".into(), 0),
                ("v1.a3_1".into(), "e1".into(), "e1".into(), -1),
                ("v2.L1".into(), "e1".into(), "e1".into(), -2),
                ("v2.L2".into(), "e2".into(), "e2".into(), -2),
                ("v2.a1_2".into(), "e1".into(), "e2".into(), -1),
                ("v2.a2_1".into(), "e2".into(), "e1".into(), 0),
                ("v3.L1".into(), "e2".into(), "e2".into(), -2),
            ]
        );
        assert_eq!(
            dterms(&g.presentation, "v1.a3_1"),
            words(&[(&["v1.a2_1", "v1.a2_1"], "1")])
        );
        assert_eq!(
            dterms(&g.presentation, "v1.L1"),
            words(&[
                (&["l_e1"], "-1"),
                (&["v1.a2_1", "v1.a3_1"], "-1"),
                (&["v1.a3_1", "v1.a2_1"], "1"),
            ])
        );
        assert_eq!(
            dterms(&g.presentation, "v2.L1"),
            words(&[(&["l_e1"], "-1"), (&["v2.a1_2", "v2.a2_1"], "1")])
        );
        assert_eq!(
            dterms(&g.presentation, "v2.L2"),
            words(&[(&["l_e2"], "-1"), (&["v2.a2_1", "v2.a1_2"], "-1")])
        );
        assert_eq!(dterms(&g.presentation, "v3.L1"), words(&[(&["l_e2"], "-1")]));

        let r = reduce_ginzburg(&g).unwrap();
        assert_eq!(
            profile(&r),
            vec![
                ("L_e1".into(), "e1".into(), "e1".into(), -2),
                ("L_e2".into(), "e2".into(), "e2".into(), -2),
                ("v1.a2_1".into(), "e1".into(), "e1".into(), 0),
                ("v1.a3_1".into(), "e1".into(), "e1".into(), -1),
                ("v2.a1_2".into(), "e1".into(), "e2".into(), -1),
                ("v2.a2_1".into(), "e2".into(), "e1".into(), 0),
            ]
        );
        assert_eq!(
            dterms(&r, "L_e1"),
            words(&[
                (&["v1.a2_1", "v1.a3_1"], "-1"),
                (&["v1.a3_1", "v1.a2_1"], "1"),
                (&["v2.a1_2", "v2.a2_1"], "-1"),
            ])
        );
        assert_eq!(dterms(&r, "L_e2"), words(&[(&["v2.a2_1", "v2.a1_2"], "-1")]));
    }

    #[test]
    fn reduced_glue_agrees_with_the_bar_type_dual() {
        // Internal-only graphs compare directly against the bar construction.
        for (text, n) in [(SG_A, 3), (SG_E2, 2)] {
            let s = parse_sgraph(text).unwrap();
            let reduced = reduce_ginzburg(&glue_ginzburg(&s, n, Field::Q).unwrap()).unwrap();
            let a = build_rgb(&s, n, Field::Q).unwrap();
            let dual = cobar(&a.algebra).unwrap();
            let report = compare_presentations(&reduced, &dual).unwrap();
            assert!(report.isomorphic, "mismatch at n = {n}: {report:?}");
        }
        // Graphs with boundary compare after contracting the mixed pairs on
        // the bar side as well.
        for (text, n) in [(SG_B, 2), (SG_M, 3), (SG_E1, 4)] {
            let s = parse_sgraph(text).unwrap();
            let reduced = reduce_ginzburg(&glue_ginzburg(&s, n, Field::Q).unwrap()).unwrap();
            let a = build_rgb(&s, n, Field::Q).unwrap();
            let dual = cobar(&a.algebra).unwrap();
            let dual = reduce_mixed(&dual, &cobar_mixed_pairs(&s, &a)).unwrap();
            let report = compare_presentations(&reduced, &dual).unwrap();
            assert!(report.isomorphic, "mismatch at n = {n}: {report:?}");
        }
    }

    #[test]
    fn glue_refuses_small_or_incompatible_decorations() {
        let s = parse_sgraph(SG_A).unwrap();
        assert_eq!(
            glue_ginzburg(&s, 1, Field::Q).unwrap_err(),
            GinzburgError::DecorationTooSmall(1)
        );
        assert!(matches!(
            glue_ginzburg(&s, 4, Field::Q).unwrap_err(),
            GinzburgError::Incompatible { n: 4, .. }
        ));
    }

    #[test]
    fn covering_check_accepts_the_trivial_action() {
        // The cover must have all internal degrees equal to n; SG_B does at
        // n = 2 and also runs boundary pieces through the projection.
        let s = parse_sgraph(SG_B).unwrap();
        let report = covering_quotient_check(&s, &[], &s, 2, Field::Q).unwrap();
        assert!(report.pass(), "{report:?}");
        assert_eq!(report.group_order, 1);
        assert_eq!(report.vertex_orbits, 3);
        assert_eq!(report.edge_orbits, 2);

        // A graph whose degrees are too small for n is rejected up front.
        let a = parse_sgraph(SG_A).unwrap();
        assert!(matches!(
            covering_quotient_check(&a, &[], &a, 3, Field::Q),
            Err(GinzburgError::ActionInconsistent(_))
        ));
    }

    #[test]
    fn covering_check_folds_a_two_fold_cover() {
        let cover = parse_sgraph(
            r#"{"vertices":[{"id":"va","kind":"internal","halfedges":["a0","a1"],"corners":[1,1]},{"id":"vb0","kind":"internal","halfedges":["b0"],"corners":[2]},{"id":"vb1","kind":"internal","halfedges":["b1"],"corners":[2]}],"edges":[["a0","b0"],["a1","b1"]]}"#,
        )
        .unwrap();
        let base = parse_sgraph(
            r#"{"vertices":[{"id":"A","kind":"internal","halfedges":["a0"],"corners":[1]},{"id":"B","kind":"internal","halfedges":["b0"],"corners":[2]}],"edges":[["a0","b0"]]}"#,
        )
        .unwrap();
        // Halfedge order: a0, a1, b0, b1.  The deck transformation swaps the
        // two sheets and rotates the shared vertex by one step.
        let swap = vec![1, 0, 3, 2];
        let report = covering_quotient_check(&cover, &[swap], &base, 2, Field::Q).unwrap();
        assert!(report.pass(), "{report:?}");
        assert_eq!(report.group_order, 2);
        assert_eq!(report.vertex_orbits, 2);
        assert_eq!(report.edge_orbits, 1);
    }

    #[test]
    fn covering_check_reports_mismatched_base_data() {
        let cover = parse_sgraph(
            r#"{"vertices":[{"id":"va","kind":"internal","halfedges":["a0","a1"],"corners":[1,1]},{"id":"vb0","kind":"internal","halfedges":["b0"],"corners":[2]},{"id":"vb1","kind":"internal","halfedges":["b1"],"corners":[2]}],"edges":[["a0","b0"],["a1","b1"]]}"#,
        )
        .unwrap();
        // A base graph with the wrong corner data: not the orbit quotient.
        let wrong = parse_sgraph(
            r#"{"vertices":[{"id":"A","kind":"internal","halfedges":["a0"],"corners":[2]},{"id":"B","kind":"internal","halfedges":["b0"],"corners":[2]}],"edges":[["a0","b0"]]}"#,
        )
        .unwrap();
        let report =
            covering_quotient_check(&cover, &[vec![1, 0, 3, 2]], &wrong, 2, Field::Q).unwrap();
        assert!(!report.pass());
        assert!(!report.quotient_matches_base);
        assert!(report.differentials_match, "{report:?}");

        // A halfedge permutation that breaks the edge pairing is refused.
        let bad = covering_quotient_check(&cover, &[vec![1, 0, 2, 3]], &wrong, 2, Field::Q);
        assert!(matches!(bad, Err(GinzburgError::ActionInconsistent(_))));
    }
}
