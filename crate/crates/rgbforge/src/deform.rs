//! Deformation certificate relating the quadratic walk model to the graph
//! algebra.
//!
//! For a compatible decorated graph the quadratic-monomial *walk algebra* has
//! a basis of lazy paths and single-vertex walks: because consecutive corner
//! arrows compose to zero unless the second one departs from the halfedge the
//! first one arrives at, every nonzero path winds around a single vertex.
//! Adjoining a central loop class of degree `n - 1` that squares to zero, and
//! differentiating it into the signed sum of full winding cycles, produces a
//! two-sheeted complex. This module builds a finite truncation of that
//! complex (capping the number of full windings per internal vertex) and
//! certifies three facts:
//!
//! 1. the explicit ideal spanned by long walks, loop-classes at edges with
//!    two internal ends, loop-multiples of internal walks, and the signed
//!    cycle sums is closed under the differential and acyclic;
//! 2. the quotient by that ideal is isomorphic, as a dg-algebra with a
//!    preferred basis and up to rescaling basis vectors, to the algebra
//!    produced by [`build_rgb`];
//! 3. the truncated complex has the same cohomology dimensions as that
//!    algebra in every degree `<= n - 1` (the range the truncation
//!    certifies).
//!
//! Signs are driven by a direction choice per halfedge: `1` when the edge
//! points toward the halfedge's vertex, `0` when it points away. By default
//! the choice is taken from [`SGraph::orientability`]; graphs without a
//! consistent orientation require the caller to supply one, and the supplied
//! choice is then validated only through outcome 2.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::dgalg::findim::{AxiomReport, BasisElem, FinDimDgAlgebra};
use crate::dgalg::linalg::{axpy, kernel_image_dims, rank_of_rows, SparseRow};
use crate::rgb::{build_rgb, Family, RgbAlgebra, RgbError};
use crate::scalar::{Field, Scalar};
use crate::sgraph::{SGraph, VertexKind};

/// Hard cap on the truncated complex size, to refuse degenerate inputs
/// rather than exhaust memory.
const SIZE_CAP: usize = 200_000;
/// At most this many comparison failures are spelled out in a report.
const MAX_REPORTED: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeformError {
    #[error("the decoration must be at least 1, got {0}")]
    DecorationTooSmall(i64),
    #[error("n = {n} is not compatible with the graph: {}", problems.join("; "))]
    Incompatible { n: i64, problems: Vec<String> },
    #[error(
        "a winding cap of {got} cannot certify the comparison; at least {required} full \
         windings per internal vertex are needed"
    )]
    WindingCapTooSmall { required: u64, got: u64 },
    #[error(
        "the graph has no consistent edge orientation; supply a direction bit per halfedge"
    )]
    MissingOrientation,
    #[error("expected one direction bit per halfedge ({expected}), got {got}")]
    SignCount { expected: usize, got: usize },
    #[error("base algebra construction failed: {0}")]
    Algebra(String),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Where the per-halfedge direction bits came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignSource {
    /// Solved from the graph's orientation constraints.
    OrientationSolution,
    /// Supplied by the caller.
    Supplied,
}

/// Outcome of [`deformation_check`].
#[derive(Debug, Clone)]
pub struct DeformationReport {
    pub n: i64,
    pub winding_cap: u64,
    pub sign_source: SignSource,
    /// Direction bit per halfedge: `1` toward the halfedge's vertex.
    pub signs: Vec<u8>,
    /// Dimension of the truncated two-sheeted complex.
    pub complex_dim: usize,
    /// Dimension of the distinguished ideal inside it.
    pub ideal_dim: usize,
    /// Rank of the differential restricted to the ideal.
    pub ideal_pairs: usize,
    pub ideal_closed_under_d: bool,
    /// Whether the ideal is exact: its dimension is twice the rank above.
    pub ideal_acyclic: bool,
    pub quotient_dim: usize,
    pub algebra_dim: usize,
    /// Whether the quotient matches the algebra as a dg-algebra with basis,
    /// up to rescaling individual basis vectors.
    pub quotient_matches_algebra: bool,
    /// Cohomology dimensions of the truncated complex in degrees `<= n - 1`.
    pub complex_cohomology: BTreeMap<i64, usize>,
    /// Cohomology dimensions of the algebra in degrees `<= n - 1`.
    pub algebra_cohomology: BTreeMap<i64, usize>,
    pub cohomology_matches: bool,
    pub failures: Vec<String>,
}

impl DeformationReport {
    pub fn pass(&self) -> bool {
        self.ideal_closed_under_d
            && self.ideal_acyclic
            && self.quotient_matches_algebra
            && self.cohomology_matches
            && self.failures.is_empty()
    }
}

/// A basis monomial of the walk algebra: the lazy path at an edge, or the
/// walk that starts at a halfedge and takes `len` successive corners around
/// its vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Carrier {
    Id(usize),
    Walk(usize, u64),
}

/// A basis monomial of the extended complex: a carrier, optionally
/// premultiplied by the central loop class at its source edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Elem {
    carrier: Carrier,
    tau: bool,
}

/// The truncated two-sheeted complex.
struct Model {
    elems: Vec<Elem>,
    index: BTreeMap<Elem, usize>,
    degree: Vec<i64>,
    diff: Vec<SparseRow>,
    /// Full-cycle length per vertex (zero for boundary vertices).
    kappa: Vec<u64>,
}

/// Identification data for winding cycles: the representative halfedge per
/// edge with an internal end, and the folding rule expressing the cycle at a
/// non-representative halfedge as a multiple of the representative one.
struct CycleReps {
    rep_of_edge: Vec<Option<usize>>,
    fold: BTreeMap<usize, (usize, Scalar)>,
}

fn eps_sign(field: Field, n: i64, bit: u8) -> Scalar {
    if bit != 0 {
        field.one()
    } else {
        field.sign(n)
    }
}

fn edge_has_boundary(s: &SGraph, e: usize) -> bool {
    let (h1, h2) = s.edges[e];
    !s.is_internal_halfedge(h1) || !s.is_internal_halfedge(h2)
}

fn walk_end(s: &SGraph, h: usize, len: u64) -> usize {
    let hh = &s.halfedges[h];
    let v = &s.vertices[hh.vertex];
    match v.kind {
        VertexKind::Internal => {
            let r = v.halfedges.len() as u64;
            v.halfedges[((hh.pos as u64 + len) % r) as usize]
        }
        VertexKind::Boundary => v.halfedges[hh.pos + len as usize],
    }
}

fn walk_degree(s: &SGraph, h: usize, len: u64) -> i64 {
    let hh = &s.halfedges[h];
    let v = &s.vertices[hh.vertex];
    let mut deg: i64 = 0;
    for k in 0..len {
        let corner = match v.kind {
            VertexKind::Internal => {
                let r = v.halfedges.len() as u64;
                v.corners[((hh.pos as u64 + k) % r) as usize]
            }
            VertexKind::Boundary => v.corners[hh.pos + k as usize],
        };
        deg += corner as i64;
    }
    deg
}

fn source_edge(s: &SGraph, c: Carrier) -> usize {
    match c {
        Carrier::Id(e) => e,
        Carrier::Walk(h, _) => s.edge_of[h],
    }
}

fn target_edge(s: &SGraph, c: Carrier) -> usize {
    match c {
        Carrier::Id(e) => e,
        Carrier::Walk(h, len) => s.edge_of[walk_end(s, h, len)],
    }
}

fn elem_label(s: &SGraph, el: &Elem) -> String {
    let base = match el.carrier {
        Carrier::Id(e) => format!("1_e{}", e + 1),
        Carrier::Walk(h, len) => format!("w({},{})", s.halfedges[h].name, len),
    };
    if el.tau {
        format!("{base}*tau")
    } else {
        base
    }
}

fn build_model(
    s: &SGraph,
    n: i64,
    w: u64,
    field: Field,
    eps: &[u8],
) -> Result<Model, DeformError> {
    let mut kappa = vec![0u64; s.vertices.len()];
    for (vi, v) in s.vertices.iter().enumerate() {
        if v.kind == VertexKind::Internal {
            let m = s.internal_degree(vi);
            kappa[vi] = v.halfedges.len() as u64 * (n as u64 / m);
        }
    }
    let mut elems = Vec::new();
    for tau in [false, true] {
        for e in 0..s.edges.len() {
            elems.push(Elem {
                carrier: Carrier::Id(e),
                tau,
            });
        }
        for (vi, v) in s.vertices.iter().enumerate() {
            for (p, &h) in v.halfedges.iter().enumerate() {
                let cap = match v.kind {
                    VertexKind::Internal => {
                        let cycles = if tau { w.saturating_sub(1) } else { w };
                        cycles * kappa[vi]
                    }
                    VertexKind::Boundary => (v.halfedges.len() - 1 - p) as u64,
                };
                for len in 1..=cap {
                    elems.push(Elem {
                        carrier: Carrier::Walk(h, len),
                        tau,
                    });
                }
                if elems.len() > SIZE_CAP {
                    return Err(DeformError::Internal(format!(
                        "the truncated complex exceeds {SIZE_CAP} elements; refusing to build it"
                    )));
                }
            }
        }
    }
    let index: BTreeMap<Elem, usize> = elems
        .iter()
        .enumerate()
        .map(|(i, el)| (*el, i))
        .collect();
    let degree: Vec<i64> = elems
        .iter()
        .map(|el| {
            let base = match el.carrier {
                Carrier::Id(_) => 0,
                Carrier::Walk(h, len) => walk_degree(s, h, len),
            };
            if el.tau {
                base + n - 1
            } else {
                base
            }
        })
        .collect();
    let sign_n = field.sign(n);
    let mut diff: Vec<SparseRow> = vec![Vec::new(); elems.len()];
    for (i, el) in elems.iter().enumerate() {
        if !el.tau {
            continue;
        }
        match el.carrier {
            Carrier::Id(e) => {
                let (h1, h2) = s.edges[e];
                let mut row: SparseRow = Vec::new();
                for h in [h1, h2] {
                    if s.is_internal_halfedge(h) {
                        let k = kappa[s.halfedges[h].vertex];
                        let cell = Elem {
                            carrier: Carrier::Walk(h, k),
                            tau: false,
                        };
                        let t = *index.get(&cell).ok_or_else(|| {
                            DeformError::Internal("winding cycle missing from the complex".into())
                        })?;
                        row.push((t, sign_n.mul(&eps_sign(field, n, eps[h]))));
                    }
                }
                row.sort_by_key(|&(t, _)| t);
                diff[i] = row;
            }
            Carrier::Walk(h, len) => {
                if s.is_internal_halfedge(h) {
                    let k = kappa[s.halfedges[h].vertex];
                    let cell = Elem {
                        carrier: Carrier::Walk(h, len + k),
                        tau: false,
                    };
                    let t = *index.get(&cell).ok_or_else(|| {
                        DeformError::Internal("loop multiple left the truncation window".into())
                    })?;
                    diff[i] = vec![(t, sign_n.mul(&eps_sign(field, n, eps[h])))];
                }
            }
        }
    }
    Ok(Model {
        elems,
        index,
        degree,
        diff,
        kappa,
    })
}

/// Build the distinguished ideal's spanning rows and run the closure and
/// acyclicity checks. Returns `(dim, pair rank, closed, acyclic)`.
fn ideal_checks(
    s: &SGraph,
    model: &Model,
    field: Field,
    n: i64,
    eps: &[u8],
    failures: &mut Vec<String>,
) -> (usize, usize, bool, bool) {
    let mut rows: Vec<SparseRow> = Vec::new();
    for (i, el) in model.elems.iter().enumerate() {
        let single = match (el.tau, el.carrier) {
            // Loop multiples of internal-vertex walks.
            (true, Carrier::Walk(h, _)) => s.is_internal_halfedge(h),
            // Loop classes at edges with two internal ends.
            (true, Carrier::Id(e)) => !edge_has_boundary(s, e),
            // Walks past the full cycle.
            (false, Carrier::Walk(h, len)) => {
                s.is_internal_halfedge(h) && len > model.kappa[s.halfedges[h].vertex]
            }
            (false, Carrier::Id(_)) => false,
        };
        if single {
            rows.push(vec![(i, field.one())]);
        }
    }
    // Signed sums of the two winding cycles at edges with two internal ends.
    for &(h1, h2) in &s.edges {
        if s.is_internal_halfedge(h1) && s.is_internal_halfedge(h2) {
            let mut row: SparseRow = Vec::new();
            for h in [h1, h2] {
                let k = model.kappa[s.halfedges[h].vertex];
                let cell = Elem {
                    carrier: Carrier::Walk(h, k),
                    tau: false,
                };
                row.push((model.index[&cell], eps_sign(field, n, eps[h])));
            }
            row.sort_by_key(|&(t, _)| t);
            rows.push(row);
        }
    }
    let count = rows.len();
    let dim = rank_of_rows(&rows, field);
    if dim != count {
        failures.push(format!(
            "the ideal's spanning set is linearly dependent ({count} vectors of rank {dim})"
        ));
    }
    let mut images: Vec<SparseRow> = Vec::new();
    for row in &rows {
        let mut out: SparseRow = Vec::new();
        for (idx, c) in row {
            axpy(&mut out, c, &model.diff[*idx]);
        }
        if !out.is_empty() {
            images.push(out);
        }
    }
    let pairs = rank_of_rows(&images, field);
    let mut union = rows.clone();
    union.extend(images);
    let closed = rank_of_rows(&union, field) == dim;
    let acyclic = dim == 2 * pairs;
    (dim, pairs, closed, acyclic)
}

/// Decide the representative winding cycle per edge with an internal end,
/// matching the base algebra's choice (the shorter, then lexicographically
/// smaller, cycle word), and record how the other side folds onto it.
fn cycle_reps(s: &SGraph, a: &RgbAlgebra, field: Field, n: i64, eps: &[u8]) -> CycleReps {
    let mut rep_of_edge = vec![None; s.edges.len()];
    let mut fold = BTreeMap::new();
    for (e, &(h1, h2)) in s.edges.iter().enumerate() {
        match (s.is_internal_halfedge(h1), s.is_internal_halfedge(h2)) {
            (true, true) => {
                let w1 = a.c_word[h1].as_ref().expect("internal side has a cycle word");
                let w2 = a.c_word[h2].as_ref().expect("internal side has a cycle word");
                let (rep, other) = if (w1.len(), w1) <= (w2.len(), w2) {
                    (h1, h2)
                } else {
                    (h2, h1)
                };
                rep_of_edge[e] = Some(rep);
                // The ideal relation s_rep*c_rep + s_other*c_other = 0 folds
                // the non-representative cycle onto the representative one.
                let coef = eps_sign(field, n, eps[rep])
                    .div(&eps_sign(field, n, eps[other]))
                    .neg();
                fold.insert(other, (rep, coef));
            }
            (true, false) => rep_of_edge[e] = Some(h1),
            (false, true) => rep_of_edge[e] = Some(h2),
            (false, false) => {}
        }
    }
    CycleReps { rep_of_edge, fold }
}

/// Reduce a freshly concatenated walk: kill it past the full cycle and fold
/// non-representative cycles onto their representative.
fn reduce_walk(
    s: &SGraph,
    kappa: &[u64],
    reps: &CycleReps,
    field: Field,
    h: usize,
    len: u64,
) -> Option<(Carrier, Scalar)> {
    if s.is_internal_halfedge(h) {
        let k = kappa[s.halfedges[h].vertex];
        if len > k {
            return None;
        }
        if len == k {
            if let Some((rep, coef)) = reps.fold.get(&h) {
                let rk = kappa[s.halfedges[*rep].vertex];
                return Some((Carrier::Walk(*rep, rk), coef.clone()));
            }
        }
    }
    Some((Carrier::Walk(h, len), field.one()))
}

/// Compose two carriers, the right one applied first, with reduction.
fn chain(
    s: &SGraph,
    kappa: &[u64],
    reps: &CycleReps,
    field: Field,
    x: Carrier,
    y: Carrier,
) -> Option<(Carrier, Scalar)> {
    match (x, y) {
        (Carrier::Id(e), Carrier::Id(f)) => (e == f).then(|| (x, field.one())),
        (Carrier::Id(e), Carrier::Walk(..)) => {
            (target_edge(s, y) == e).then(|| (y, field.one()))
        }
        (Carrier::Walk(..), Carrier::Id(f)) => {
            (source_edge(s, x) == f).then(|| (x, field.one()))
        }
        (Carrier::Walk(hx, lx), Carrier::Walk(hy, ly)) => {
            if walk_end(s, hy, ly) != hx {
                return None;
            }
            reduce_walk(s, kappa, reps, field, hy, lx + ly)
        }
    }
}

/// Multiply two quotient monomials, `y` applied first, into a sparse row
/// over the quotient basis.
#[allow(clippy::too_many_arguments)]
fn mul_quot(
    s: &SGraph,
    kappa: &[u64],
    reps: &CycleReps,
    qindex: &BTreeMap<Elem, usize>,
    field: Field,
    n: i64,
    eps: &[u8],
    x: &Elem,
    y: &Elem,
) -> SparseRow {
    if x.tau && y.tau {
        return Vec::new();
    }
    let Some((carrier, mut coef)) = chain(s, kappa, reps, field, x.carrier, y.carrier) else {
        return Vec::new();
    };
    let tau = x.tau || y.tau;
    if tau {
        // The loop class sits at the source; only lazy paths at edges with a
        // boundary end and boundary-vertex walks survive the quotient.
        let ok = match carrier {
            Carrier::Id(e) => edge_has_boundary(s, e),
            Carrier::Walk(h, _) => !s.is_internal_halfedge(h),
        };
        if !ok {
            return Vec::new();
        }
        if x.tau {
            // Move the loop class leftward across the first factor.
            let (dy, py) = match y.carrier {
                Carrier::Id(_) => (0, 0),
                Carrier::Walk(h, len) => {
                    let d = walk_degree(s, h, len);
                    let end = walk_end(s, h, len);
                    (d, (d + eps[h] as i64 + eps[end] as i64).rem_euclid(2))
                }
            };
            coef = coef.mul(&field.sign((n - 1) * dy + n * py));
        }
    }
    let t = qindex[&Elem { carrier, tau }];
    vec![(t, coef)]
}

/// Assemble the quotient of the truncated complex by the distinguished ideal
/// as a finite-dimensional dg-algebra on the surviving monomials.
fn build_quotient(
    s: &SGraph,
    model: &Model,
    reps: &CycleReps,
    field: Field,
    n: i64,
    eps: &[u8],
) -> (FinDimDgAlgebra, Vec<Elem>, BTreeMap<Elem, usize>) {
    let mut qelems: Vec<Elem> = Vec::new();
    for el in &model.elems {
        let keep = match (el.tau, el.carrier) {
            (false, Carrier::Id(_)) => true,
            (false, Carrier::Walk(h, len)) => {
                if s.is_internal_halfedge(h) {
                    let k = model.kappa[s.halfedges[h].vertex];
                    len < k || (len == k && !reps.fold.contains_key(&h))
                } else {
                    true
                }
            }
            (true, Carrier::Id(e)) => edge_has_boundary(s, e),
            (true, Carrier::Walk(h, _)) => !s.is_internal_halfedge(h),
        };
        if keep {
            qelems.push(*el);
        }
    }
    let qindex: BTreeMap<Elem, usize> = qelems
        .iter()
        .enumerate()
        .map(|(i, el)| (*el, i))
        .collect();
    let basis: Vec<BasisElem> = qelems
        .iter()
        .map(|el| BasisElem {
            label: elem_label(s, el),
            source: source_edge(s, el.carrier),
            target: target_edge(s, el.carrier),
            degree: model.degree[model.index[el]],
        })
        .collect();
    let unit: Vec<usize> = (0..s.edges.len())
        .map(|e| {
            qindex[&Elem {
                carrier: Carrier::Id(e),
                tau: false,
            }]
        })
        .collect();
    let dim = qelems.len();
    let mut product: Vec<Vec<SparseRow>> = vec![vec![Vec::new(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            product[i][j] = mul_quot(
                s, &model.kappa, reps, &qindex, field, n, eps, &qelems[i], &qelems[j],
            );
        }
    }
    let sign_n = field.sign(n);
    let mut differential: Vec<SparseRow> = vec![Vec::new(); dim];
    for (i, el) in qelems.iter().enumerate() {
        if let (true, Carrier::Id(e)) = (el.tau, el.carrier) {
            let (h1, h2) = s.edges[e];
            for h in [h1, h2] {
                if s.is_internal_halfedge(h) {
                    let k = model.kappa[s.halfedges[h].vertex];
                    let t = qindex[&Elem {
                        carrier: Carrier::Walk(h, k),
                        tau: false,
                    }];
                    differential[i] = vec![(t, sign_n.mul(&eps_sign(field, n, eps[h])))];
                }
            }
        }
    }
    let alg = FinDimDgAlgebra {
        field,
        vertex_names: (0..s.edges.len()).map(|e| format!("e{}", e + 1)).collect(),
        basis,
        unit,
        product,
        differential,
    };
    (alg, qelems, qindex)
}

/// One scalar constraint tying the rescaling factors together.
enum Con {
    /// `l[i] * l[j] * cq == ca * l[t]` from a product entry.
    Prod {
        i: usize,
        j: usize,
        t: usize,
        ca: Scalar,
        cq: Scalar,
    },
    /// `ca * l[t] == l[k] * cq` from a differential entry.
    Diff {
        k: usize,
        t: usize,
        ca: Scalar,
        cq: Scalar,
    },
}

fn push_failure(failures: &mut Vec<String>, msg: String) {
    if failures.len() < MAX_REPORTED {
        failures.push(msg);
    }
}

/// Match the quotient against the base algebra: a degree-, endpoint- and
/// support-preserving bijection of bases keyed by the algebra's basis
/// families, followed by a solvable system of rescaling factors making every
/// structure constant agree.
#[allow(clippy::too_many_arguments)]
fn fit_to_algebra(
    s: &SGraph,
    a: &RgbAlgebra,
    q: &FinDimDgAlgebra,
    qindex: &BTreeMap<Elem, usize>,
    reps: &CycleReps,
    kappa: &[u64],
    field: Field,
    failures: &mut Vec<String>,
) -> bool {
    let dim = a.algebra.dim();
    if q.dim() != dim {
        push_failure(
            failures,
            format!("quotient dimension {} differs from the algebra's {dim}", q.dim()),
        );
        return false;
    }
    // The family-keyed bijection.
    let mut bij: Vec<usize> = Vec::with_capacity(dim);
    let mut seen = vec![false; dim];
    let mut ok = true;
    for (k, fam) in a.families.iter().enumerate() {
        let elem = match fam {
            Family::Idempotent { edge } => Some(Elem {
                carrier: Carrier::Id(*edge),
                tau: false,
            }),
            Family::InternalWalk {
                start_h,
                end_h,
                winding,
            } => {
                let v = &s.vertices[s.halfedges[*start_h].vertex];
                let r = v.halfedges.len() as u64;
                let p = s.halfedges[*start_h].pos as u64;
                let qpos = s.halfedges[*end_h].pos as u64;
                let steps = (qpos + r - p) % r;
                Some(Elem {
                    carrier: Carrier::Walk(*start_h, steps + *winding as u64 * r),
                    tau: false,
                })
            }
            Family::CycleClass { edge } => reps.rep_of_edge[*edge].map(|rep| Elem {
                carrier: Carrier::Walk(rep, kappa[s.halfedges[rep].vertex]),
                tau: false,
            }),
            Family::BoundaryWalk { start_h, end_h } => {
                let len = (s.halfedges[*end_h].pos - s.halfedges[*start_h].pos) as u64;
                Some(Elem {
                    carrier: Carrier::Walk(*start_h, len),
                    tau: false,
                })
            }
            Family::TauClass { edge } => Some(Elem {
                carrier: Carrier::Id(*edge),
                tau: true,
            }),
            Family::TauWalk { start_h, end_h } => {
                let len = (s.halfedges[*end_h].pos - s.halfedges[*start_h].pos) as u64;
                Some(Elem {
                    carrier: Carrier::Walk(*start_h, len),
                    tau: true,
                })
            }
        };
        let qi = elem.and_then(|el| qindex.get(&el).copied());
        match qi {
            Some(qi) if !seen[qi] => {
                seen[qi] = true;
                bij.push(qi);
            }
            Some(_) => {
                push_failure(
                    failures,
                    format!(
                        "two algebra basis vectors map to the same quotient monomial ({})",
                        a.algebra.basis[k].label
                    ),
                );
                ok = false;
                bij.push(0);
            }
            None => {
                push_failure(
                    failures,
                    format!(
                        "no quotient monomial for the algebra basis vector {}",
                        a.algebra.basis[k].label
                    ),
                );
                ok = false;
                bij.push(0);
            }
        }
    }
    if !ok {
        return false;
    }
    // Degrees and endpoints must agree on the nose (the algebra's quiver
    // vertices are the edges in document order, as are the quotient's).
    for k in 0..dim {
        let ab = &a.algebra.basis[k];
        let qb = &q.basis[bij[k]];
        if ab.degree != qb.degree || ab.source != qb.source || ab.target != qb.target {
            push_failure(
                failures,
                format!(
                    "basis vector {} sits in degree {} from {} to {} in the algebra but \
                     degree {} from {} to {} in the quotient",
                    ab.label, ab.degree, ab.source, ab.target, qb.degree, qb.source, qb.target
                ),
            );
            ok = false;
        }
    }
    for (v, &au) in a.algebra.unit.iter().enumerate() {
        if q.unit[v] != bij[au] {
            push_failure(failures, format!("unit mismatch at quiver vertex {v}"));
            ok = false;
        }
    }
    if !ok {
        return false;
    }
    let mut inv = vec![0usize; dim];
    for (k, &qi) in bij.iter().enumerate() {
        inv[qi] = k;
    }
    // Collect the support comparisons and scalar constraints.
    let mut cons: Vec<Con> = Vec::new();
    let mut collect = |rows: (&SparseRow, &SparseRow),
                       what: String,
                       make: &dyn Fn(usize, Scalar, Scalar) -> Con,
                       failures: &mut Vec<String>,
                       ok: &mut bool| {
        let (row_a, row_q) = rows;
        let mapped: BTreeMap<usize, Scalar> = row_q
            .iter()
            .map(|(u, c)| (inv[*u], c.clone()))
            .collect();
        let keys_a: Vec<usize> = row_a.iter().map(|(t, _)| *t).collect();
        let keys_q: Vec<usize> = mapped.keys().copied().collect();
        if keys_a != keys_q {
            push_failure(failures, format!("support mismatch in {what}"));
            *ok = false;
            return;
        }
        for (t, ca) in row_a {
            cons.push(make(*t, ca.clone(), mapped[t].clone()));
        }
    };
    for i in 0..dim {
        for j in 0..dim {
            collect(
                (&a.algebra.product[i][j], &q.product[bij[i]][bij[j]]),
                format!(
                    "the product of {} after {}",
                    a.algebra.basis[i].label, a.algebra.basis[j].label
                ),
                &|t, ca, cq| Con::Prod { i, j, t, ca, cq },
                failures,
                &mut ok,
            );
        }
    }
    for k in 0..dim {
        collect(
            (&a.algebra.differential[k], &q.differential[bij[k]]),
            format!("the differential of {}", a.algebra.basis[k].label),
            &|t, ca, cq| Con::Diff { k, t, ca, cq },
            failures,
            &mut ok,
        );
    }
    if !ok {
        return false;
    }
    // Solve for the rescaling factors: propagate from the units, and when
    // propagation stalls, gauge-fix the first still-free factor to one and
    // resume (factors in a component never forced by a constraint are free to
    // choose). Inconsistent choices are caught by the final verification.
    let mut lambda: Vec<Option<Scalar>> = vec![None; dim];
    for &u in &a.algebra.unit {
        lambda[u] = Some(field.one());
    }
    loop {
        let mut progress = false;
        for con in &cons {
            match con {
                Con::Prod { i, j, t, ca, cq } => {
                    match (lambda[*i].clone(), lambda[*j].clone(), lambda[*t].clone()) {
                        (Some(li), Some(lj), None) => {
                            lambda[*t] = Some(li.mul(&lj).mul(cq).div(ca));
                            progress = true;
                        }
                        (Some(li), None, Some(lt)) => {
                            lambda[*j] = Some(ca.mul(&lt).div(&li.mul(cq)));
                            progress = true;
                        }
                        (None, Some(lj), Some(lt)) => {
                            lambda[*i] = Some(ca.mul(&lt).div(&lj.mul(cq)));
                            progress = true;
                        }
                        _ => {}
                    }
                }
                Con::Diff { k, t, ca, cq } => {
                    match (lambda[*k].clone(), lambda[*t].clone()) {
                        (Some(lk), None) => {
                            lambda[*t] = Some(lk.mul(cq).div(ca));
                            progress = true;
                        }
                        (None, Some(lt)) => {
                            lambda[*k] = Some(ca.mul(&lt).div(cq));
                            progress = true;
                        }
                        _ => {}
                    }
                }
            }
        }
        if !progress {
            if let Some(free) = (0..dim).find(|&k| lambda[k].is_none()) {
                lambda[free] = Some(field.one());
            } else {
                break;
            }
        }
    }
    let lambda: Vec<Scalar> = lambda
        .into_iter()
        .map(|l| l.expect("every factor is bound after gauge fixing"))
        .collect();
    for con in &cons {
        let (lhs, rhs, what) = match con {
            Con::Prod { i, j, t, ca, cq } => (
                lambda[*i].mul(&lambda[*j]).mul(cq),
                ca.mul(&lambda[*t]),
                format!(
                    "product of {} after {}",
                    a.algebra.basis[*i].label, a.algebra.basis[*j].label
                ),
            ),
            Con::Diff { k, t, ca, cq } => (
                lambda[*k].mul(cq),
                ca.mul(&lambda[*t]),
                format!("differential of {}", a.algebra.basis[*k].label),
            ),
        };
        if lhs != rhs {
            push_failure(
                failures,
                format!("no consistent rescaling: the {what} disagrees"),
            );
            ok = false;
        }
    }
    ok
}

fn cohomology_of_complex(degree: &[i64], diff: &[SparseRow], field: Field) -> BTreeMap<i64, usize> {
    let degrees: Vec<i64> = {
        let mut ds: Vec<i64> = degree.to_vec();
        ds.sort_unstable();
        ds.dedup();
        ds
    };
    let mut image_into: BTreeMap<i64, usize> = BTreeMap::new();
    let mut kernel_at: BTreeMap<i64, usize> = BTreeMap::new();
    for &t in &degrees {
        let block: Vec<usize> = (0..degree.len()).filter(|&i| degree[i] == t).collect();
        let rows: Vec<SparseRow> = block.iter().map(|&i| diff[i].clone()).collect();
        let (ker, im) = kernel_image_dims(&rows, block.len(), field);
        kernel_at.insert(t, ker);
        image_into.insert(t + 1, im);
    }
    let mut out = BTreeMap::new();
    for &t in &degrees {
        let h = kernel_at[&t]
            .checked_sub(image_into.get(&t).copied().unwrap_or(0))
            .expect("image exceeds kernel: differential does not square to zero");
        if h > 0 {
            out.insert(t, h);
        }
    }
    out
}

fn axiom_summary(report: &AxiomReport) -> String {
    let first = report
        .failures
        .first()
        .map(|f| format!("{}: {}", f.axiom, f.witness))
        .unwrap_or_default();
    format!(
        "the quotient violates {} dg-algebra axiom check(s), first: {first}",
        report.failures.len()
    )
}

fn run(
    s: &SGraph,
    n: i64,
    winding_cap: u64,
    field: Field,
    eps: Vec<u8>,
    sign_source: SignSource,
) -> Result<DeformationReport, DeformError> {
    let a = build_rgb(s, n, field).map_err(|e| match e {
        RgbError::Incompatible { n, problems } => DeformError::Incompatible { n, problems },
        other => DeformError::Algebra(other.to_string()),
    })?;
    let model = build_model(s, n, winding_cap, field, &eps)?;
    let mut failures = Vec::new();
    let (ideal_dim, ideal_pairs, ideal_closed_under_d, ideal_acyclic) =
        ideal_checks(s, &model, field, n, &eps, &mut failures);
    let reps = cycle_reps(s, &a, field, n, &eps);
    let (qalg, _qelems, qindex) = build_quotient(s, &model, &reps, field, n, &eps);
    let axioms = qalg.check_axioms();
    if !axioms.is_pass() {
        failures.push(axiom_summary(&axioms));
    }
    let quotient_matches_algebra = fit_to_algebra(
        s,
        &a,
        &qalg,
        &qindex,
        &reps,
        &model.kappa,
        field,
        &mut failures,
    );
    let mut complex_cohomology = cohomology_of_complex(&model.degree, &model.diff, field);
    complex_cohomology.retain(|&t, _| t <= n - 1);
    let mut algebra_cohomology = a.algebra.cohomology_dims();
    algebra_cohomology.retain(|&t, _| t <= n - 1);
    let cohomology_matches = complex_cohomology == algebra_cohomology;
    Ok(DeformationReport {
        n,
        winding_cap,
        sign_source,
        signs: eps,
        complex_dim: model.elems.len(),
        ideal_dim,
        ideal_pairs,
        ideal_closed_under_d,
        ideal_acyclic,
        quotient_dim: qalg.dim(),
        algebra_dim: a.algebra.dim(),
        quotient_matches_algebra,
        complex_cohomology,
        algebra_cohomology,
        cohomology_matches,
        failures,
    })
}

fn precheck(s: &SGraph, n: i64, winding_cap: u64) -> Result<(), DeformError> {
    if n < 1 {
        return Err(DeformError::DecorationTooSmall(n));
    }
    let diag = s.validate(n);
    if !diag.compatible {
        return Err(DeformError::Incompatible {
            n,
            problems: diag.problems,
        });
    }
    let has_internal = s
        .vertices
        .iter()
        .any(|v| v.kind == VertexKind::Internal);
    if has_internal && winding_cap < 2 {
        return Err(DeformError::WindingCapTooSmall {
            required: 2,
            got: winding_cap,
        });
    }
    Ok(())
}

/// Run the deformation certificate with direction bits solved from the
/// graph's orientation constraints. Fails with [`DeformError::MissingOrientation`]
/// when no consistent orientation exists; supply bits through
/// [`deformation_check_with_signs`] in that case.
pub fn deformation_check(
    s: &SGraph,
    n: i64,
    winding_cap: u64,
    field: Field,
) -> Result<DeformationReport, DeformError> {
    precheck(s, n, winding_cap)?;
    let orient = s.orientability().ok_or(DeformError::MissingOrientation)?;
    let eps: Vec<u8> = orient.toward.iter().map(|&b| b as u8).collect();
    run(s, n, winding_cap, field, eps, SignSource::OrientationSolution)
}

/// Run the deformation certificate with caller-supplied direction bits, one
/// per halfedge (nonzero meaning the edge points toward that halfedge's
/// vertex). The bits are validated only through the quotient comparison.
pub fn deformation_check_with_signs(
    s: &SGraph,
    n: i64,
    winding_cap: u64,
    field: Field,
    signs: &[u8],
) -> Result<DeformationReport, DeformError> {
    precheck(s, n, winding_cap)?;
    if signs.len() != s.halfedges.len() {
        return Err(DeformError::SignCount {
            expected: s.halfedges.len(),
            got: signs.len(),
        });
    }
    let eps: Vec<u8> = signs.iter().map(|&v| (v != 0) as u8).collect();
    run(s, n, winding_cap, field, eps, SignSource::Supplied)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgraph::parse_sgraph;

    const SG_A: &str = r#"{"vertices":[
        {"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},
        {"id":"v2","kind":"internal","halfedges":["h1","h2"],"corners":[1,2]},
        {"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],
        "edges":[["h1","m1"],["h2","t1"]]}"#;
    const SG_B: &str = r#"{"vertices":[
        {"id":"u","kind":"internal","halfedges":["u1"],"corners":[2]},
        {"id":"vb","kind":"boundary","halfedges":["g2","g1"],"corners":[1]},
        {"id":"w","kind":"boundary","halfedges":["w1"],"corners":[]}],
        "edges":[["g1","w1"],["g2","u1"]]}"#;
    const SG_M: &str = r#"{"vertices":[
        {"id":"mono","kind":"internal","halfedges":["k1"],"corners":[1]},
        {"id":"bdy","kind":"boundary","halfedges":["k2"],"corners":[]}],
        "edges":[["k1","k2"]]}"#;
    const SG_E1: &str = r#"{"vertices":[
        {"id":"b1","kind":"boundary","halfedges":["c1"],"corners":[]},
        {"id":"b2","kind":"boundary","halfedges":["c2"],"corners":[]}],
        "edges":[["c1","c2"]]}"#;
    const SG_E2: &str = r#"{"vertices":[
        {"id":"q1","kind":"internal","halfedges":["p1"],"corners":[2]},
        {"id":"q2","kind":"internal","halfedges":["p2"],"corners":[2]}],
        "edges":[["p1","p2"]]}"#;

    /// One direction bit per halfedge: toward the smaller-indexed side of
    /// each edge.
    fn edge_orientation(s: &SGraph) -> Vec<u8> {
        let mut eps = vec![0u8; s.halfedges.len()];
        for &(h1, h2) in &s.edges {
            eps[h1.min(h2)] = 1;
        }
        eps
    }

    fn dims(pairs: &[(i64, usize)]) -> BTreeMap<i64, usize> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn certificate_passes_on_the_internal_fixture_with_supplied_signs() {
        let s = parse_sgraph(SG_A).unwrap();
        assert_eq!(
            deformation_check(&s, 3, 2, Field::Q).unwrap_err(),
            DeformError::MissingOrientation
        );
        let report =
            deformation_check_with_signs(&s, 3, 2, Field::Q, &edge_orientation(&s)).unwrap();
        assert!(report.pass(), "failures: {:?}", report.failures);
        assert_eq!(report.sign_source, SignSource::Supplied);
        assert_eq!(report.complex_dim, 28);
        assert_eq!(report.ideal_dim, 20);
        assert_eq!(report.ideal_pairs, 10);
        assert_eq!(report.quotient_dim, 8);
        assert_eq!(report.algebra_dim, 8);
        assert_eq!(report.complex_cohomology, dims(&[(0, 2), (1, 2), (2, 2)]));
        assert_eq!(report.algebra_cohomology, dims(&[(0, 2), (1, 2), (2, 2)]));
    }

    #[test]
    fn certificate_passes_on_the_mixed_fixtures() {
        let s = parse_sgraph(SG_B).unwrap();
        let report = deformation_check(&s, 2, 2, Field::Q).unwrap();
        assert!(report.pass(), "failures: {:?}", report.failures);
        assert_eq!(report.sign_source, SignSource::OrientationSolution);
        assert_eq!(report.complex_dim, 9);
        assert_eq!(report.ideal_dim, 2);
        assert_eq!(report.ideal_pairs, 1);
        assert_eq!(report.quotient_dim, 7);
        assert_eq!(report.complex_cohomology, dims(&[(0, 2), (1, 2)]));
        assert_eq!(report.algebra_cohomology, dims(&[(0, 2), (1, 2)]));

        let s = parse_sgraph(SG_M).unwrap();
        assert_eq!(
            deformation_check(&s, 3, 2, Field::Q).unwrap_err(),
            DeformError::MissingOrientation
        );
        let report =
            deformation_check_with_signs(&s, 3, 2, Field::Q, &edge_orientation(&s)).unwrap();
        assert!(report.pass(), "failures: {:?}", report.failures);
        assert_eq!(report.complex_dim, 11);
        assert_eq!(report.ideal_dim, 6);
        assert_eq!(report.ideal_pairs, 3);
        assert_eq!(report.quotient_dim, 5);
        assert_eq!(
            report.complex_cohomology,
            dims(&[(0, 1), (1, 1), (2, 1)])
        );
        assert_eq!(
            report.algebra_cohomology,
            dims(&[(0, 1), (1, 1), (2, 1)])
        );
    }

    #[test]
    fn lazy_graph_needs_no_winding_cap() {
        let s = parse_sgraph(SG_E1).unwrap();
        let report = deformation_check(&s, 4, 0, Field::Q).unwrap();
        assert!(report.pass(), "failures: {:?}", report.failures);
        assert_eq!(report.complex_dim, 2);
        assert_eq!(report.ideal_dim, 0);
        assert_eq!(report.quotient_dim, 2);
        assert_eq!(report.complex_cohomology, dims(&[(0, 1), (3, 1)]));
        assert_eq!(report.algebra_cohomology, dims(&[(0, 1), (3, 1)]));
    }

    #[test]
    fn interior_edge_identification_matches_the_algebra() {
        let s = parse_sgraph(SG_E2).unwrap();
        let report = deformation_check(&s, 2, 2, Field::Q).unwrap();
        assert!(report.pass(), "failures: {:?}", report.failures);
        assert_eq!(report.complex_dim, 8);
        assert_eq!(report.ideal_dim, 6);
        assert_eq!(report.ideal_pairs, 3);
        assert_eq!(report.quotient_dim, 2);
        assert_eq!(report.complex_cohomology, dims(&[(0, 1)]));
        assert_eq!(report.algebra_cohomology, dims(&[(0, 1)]));
    }

    #[test]
    fn preconditions_are_enforced() {
        let a = parse_sgraph(SG_A).unwrap();
        assert_eq!(
            deformation_check(&a, 3, 1, Field::Q).unwrap_err(),
            DeformError::WindingCapTooSmall { required: 2, got: 1 }
        );
        assert_eq!(
            deformation_check(&a, 0, 2, Field::Q).unwrap_err(),
            DeformError::DecorationTooSmall(0)
        );
        assert_eq!(
            deformation_check_with_signs(&a, 3, 2, Field::Q, &[1, 0]).unwrap_err(),
            DeformError::SignCount { expected: 4, got: 2 }
        );
        let b = parse_sgraph(SG_B).unwrap();
        assert!(matches!(
            deformation_check(&b, 3, 2, Field::Q),
            Err(DeformError::Incompatible { n: 3, .. })
        ));
    }
}
