//! Koszul duals of the graded algebras attached to decorated ribbon graphs.
//!
//! Two independent routes produce a dual presentation.  [`cobar`] runs the
//! general quadratic-linear cobar construction on the finite-dimensional
//! algebra itself: every non-unit basis element becomes a generator with the
//! endpoints swapped, and the differential reads the structure constants
//! backwards.  [`closed_form_dual`] writes the same presentation directly
//! from the graph combinatorics, one generator per structural family, with
//! the differential given by walk splittings.  The two routes share no code,
//! which is the point: [`compare_presentations`] decides whether two free dg
//! presentations are isomorphic (generator matching plus sign rescalings),
//! and agreement of the routes on a graph is a genuine cross-check.
//!
//! [`reduce_mixed`] removes the contractible pairs that appear at edges with
//! one internal and one boundary end, where the dual carries both a winding
//! loop and a boundary loop connected by the differential.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::dgalg::findim::FinDimDgAlgebra;
use crate::dgalg::reduce::eliminate_contractible_pair;
use crate::dgalg::{ArrowId, FreeDgPresentation, GradedQuiver, PathExpr, VertexId, Word};
use crate::rgb::{Family, RgbAlgebra};
use crate::scalar::{Field, Scalar};
use crate::sgraph::{SGraph, VertexKind};

/// Errors from dual construction and comparison.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KoszulError {
    /// The algebra does not expose exactly one degree-zero idempotent per
    /// quiver vertex, so the cobar construction has no augmentation.
    #[error("the algebra does not expose one idempotent loop per vertex")]
    MissingIdempotents,
    /// A basis element fails to be nilpotent, so the dual quiver would need
    /// infinitely many composites.
    #[error("basis element {label} is not nilpotent")]
    NonNilpotent { label: String },
    /// The decoration does not divide every internal vertex degree.
    #[error("decoration {n} is incompatible: {}", problems.join("; "))]
    Incompatible { n: i64, problems: Vec<String> },
    /// The generator-matching search exceeded its node budget.
    #[error("search cap of {cap} nodes exceeded while {detail}")]
    SearchCap { cap: u64, detail: String },
    /// An internal consistency check failed; this is a bug, not bad input.
    #[error("internal verification failure: {0}")]
    Internal(String),
}

// ---------------------------------------------------------------------------
// Cobar construction
// ---------------------------------------------------------------------------

/// Dual presentation of a finite-dimensional graded algebra by the
/// quadratic-linear cobar construction.
///
/// Every non-idempotent basis element `b` yields a generator named after it
/// with `_d` appended, running opposite to `b` in degree `1 − |b|`.  Its
/// differential has a linear term `−c` on `x_d` for every basis element `x`
/// with `d(x) ∋ c·b`, and a quadratic term `(−1)^(1−|q|)·c` on the word
/// `p_d q_d` for every product `p∘q ∋ c·b` of non-idempotents.
pub fn cobar(alg: &FinDimDgAlgebra) -> Result<FreeDgPresentation, KoszulError> {
    let field = alg.field;
    let dim = alg.dim();
    if alg.unit.len() != alg.vertex_names.len() {
        return Err(KoszulError::MissingIdempotents);
    }
    let mut is_idem = vec![false; dim];
    for (v, &u) in alg.unit.iter().enumerate() {
        let b = &alg.basis[u];
        if b.source != v || b.target != v || b.degree != 0 {
            return Err(KoszulError::MissingIdempotents);
        }
        is_idem[u] = true;
    }

    // Every non-idempotent must be nilpotent; power it until it dies.
    for k in 0..dim {
        if is_idem[k] {
            continue;
        }
        let mut cur: BTreeMap<usize, Scalar> = BTreeMap::new();
        cur.insert(k, field.one());
        for _ in 0..dim + 2 {
            if cur.is_empty() {
                break;
            }
            let mut next: BTreeMap<usize, Scalar> = BTreeMap::new();
            for (&j, c) in &cur {
                for (i, m) in &alg.product[k][j] {
                    let acc = next.entry(*i).or_insert_with(|| field.zero());
                    *acc = acc.add(&c.mul(m));
                }
            }
            next.retain(|_, c| !c.is_zero());
            cur = next;
        }
        if !cur.is_empty() {
            return Err(KoszulError::NonNilpotent {
                label: alg.basis[k].label.clone(),
            });
        }
    }

    let mut quiver = GradedQuiver::new();
    for name in &alg.vertex_names {
        quiver.add_vertex(name.clone());
    }
    let mut dual_of: Vec<Option<ArrowId>> = vec![None; dim];
    for (k, b) in alg.basis.iter().enumerate() {
        if is_idem[k] {
            continue;
        }
        let id = quiver.add_arrow(
            format!("{}_d", b.label),
            VertexId(b.target as u32),
            VertexId(b.source as u32),
            1 - b.degree,
        );
        dual_of[k] = Some(id);
    }

    let mut p = FreeDgPresentation::new(quiver, field);
    for k in 0..dim {
        let Some(dk) = dual_of[k] else { continue };
        let arr = p.quiver.arrow(dk);
        let mut expr = PathExpr::zero(field, arr.source, arr.target, arr.degree + 1);
        // Linear part: transpose of the algebra differential.
        for i in 0..dim {
            let Some(di) = dual_of[i] else { continue };
            for (j, c) in &alg.differential[i] {
                if *j == k {
                    expr.add_term(vec![di], c.neg());
                }
            }
        }
        // Quadratic part: transpose of the multiplication table.
        for q in 0..dim {
            let Some(dq) = dual_of[q] else { continue };
            for pp in 0..dim {
                let Some(dp) = dual_of[pp] else { continue };
                for (i, c) in &alg.product[pp][q] {
                    if *i == k {
                        let sign = field.sign(1 - alg.basis[q].degree);
                        expr.add_term(vec![dp, dq], c.mul(&sign));
                    }
                }
            }
        }
        p.set_differential(dk, expr)
            .map_err(|e| KoszulError::Internal(e.to_string()))?;
    }

    let report = p.check_d_squared();
    if !report.is_pass() {
        let bad: Vec<String> = report
            .failures
            .iter()
            .map(|(a, e)| format!("d²({}) = {}", p.quiver.arrow(*a).name, e.render(&p.quiver)))
            .collect();
        return Err(KoszulError::Internal(format!(
            "cobar differential does not square to zero: {}",
            bad.join("; ")
        )));
    }
    Ok(p)
}

// ---------------------------------------------------------------------------
// Closed-form dual
// ---------------------------------------------------------------------------

/// Structural family of a closed-form dual generator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DualFamily {
    /// Dual of an internal-vertex walk from `start_h` to `end_h` with the
    /// given number of extra full windings.
    InteriorAlpha {
        start_h: usize,
        end_h: usize,
        winding: u32,
    },
    /// Dual of a boundary-vertex walk between two ordered positions.
    BoundaryAlpha { start_h: usize, end_h: usize },
    /// Dual of the winding-cycle class of an edge with an internal end.
    Sigma { edge: usize },
    /// Dual of the boundary-loop class of an edge with a boundary end.
    TLoop { edge: usize },
    /// Dual of a boundary walk premultiplied by its starting loop.
    Beta { start_h: usize, end_h: usize },
}

/// A closed-form dual presentation with a family tag per generator.
#[derive(Clone, Debug)]
pub struct DualPresentation {
    pub n: i64,
    pub presentation: FreeDgPresentation,
    /// `families[i]` tags the arrow with id `i`.
    pub families: Vec<DualFamily>,
}

impl DualPresentation {
    /// `(winding-loop name, boundary-loop name)` for every edge with one
    /// internal and one boundary end, in edge order.
    pub fn mixed_pairs(&self, s: &SGraph) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (e, &(h1, h2)) in s.edges.iter().enumerate() {
            if s.is_internal_halfedge(h1) == s.is_internal_halfedge(h2) {
                continue;
            }
            let mut sigma = None;
            let mut tloop = None;
            for (i, f) in self.families.iter().enumerate() {
                if *f == (DualFamily::Sigma { edge: e }) {
                    sigma = Some(self.presentation.quiver.arrows[i].name.clone());
                }
                if *f == (DualFamily::TLoop { edge: e }) {
                    tloop = Some(self.presentation.quiver.arrows[i].name.clone());
                }
            }
            out.push((
                sigma.expect("mixed edge has a winding loop"),
                tloop.expect("mixed edge has a boundary loop"),
            ));
        }
        out
    }
}

/// Splitting terms for the dual of an internal-vertex walk.
///
/// The walk starts at position `start_idx` of vertex `vi`, takes `steps`
/// single corners plus `winding` full turns.  Every proper cut point `p`
/// contributes the two-letter word of the cut pieces' duals, signed by the
/// degree of the first piece.
fn split_terms(
    s: &SGraph,
    dual: &BTreeMap<(usize, usize, u32), ArrowId>,
    vi: usize,
    start_idx: usize,
    steps: usize,
    winding: u32,
) -> Vec<(Word, i64)> {
    let v = &s.vertices[vi];
    let r = v.halfedges.len();
    let m = s.internal_degree(vi) as i64;
    let start_h = v.halfedges[start_idx];
    let end_h = v.halfedges[(start_idx + steps) % r];
    let dist = |from_idx: usize, st: usize| -> i64 {
        (0..st).map(|q| v.corners[(from_idx + q) % r] as i64).sum()
    };
    let total = steps + winding as usize * r;
    let mut out = Vec::new();
    for p in 1..total {
        let k_h = v.halfedges[(start_idx + p) % r];
        let first = dual[&(start_h, k_h, (p / r) as u32)];
        let second = dual[&(k_h, end_h, ((total - p) / r) as u32)];
        let sign_exp = 1 - dist(start_idx, p % r) - (p / r) as i64 * m;
        out.push((vec![second, first], sign_exp));
    }
    out
}

/// Closed-form Koszul dual of the graph algebra at decoration `n`.
///
/// Generators, in construction order: internal walk duals per vertex (by
/// start position, then steps, then winding), boundary walk duals per vertex
/// (by ordered position pair), winding loops per edge with an internal end,
/// boundary loops per edge with a boundary end, and premultiplied boundary
/// walk duals per vertex.  Labels reuse the primal naming style with `al`,
/// `si`, `t`, `be` prefixes and 1-based edge numbers.
pub fn closed_form_dual(
    s: &SGraph,
    n: i64,
    field: Field,
) -> Result<DualPresentation, KoszulError> {
    let diag = s.validate(n);
    if !diag.problems.is_empty() {
        return Err(KoszulError::Incompatible {
            n,
            problems: diag.problems,
        });
    }

    let mut quiver = GradedQuiver::new();
    for e in 0..s.edges.len() {
        quiver.add_vertex(format!("e{}", e + 1));
    }
    let vx = |e: usize| VertexId(e as u32);

    let mut label_count: BTreeMap<String, u32> = BTreeMap::new();
    let mut fresh_label = |base: String| -> String {
        let count = label_count.entry(base.clone()).or_insert(0);
        *count += 1;
        if *count == 1 {
            base
        } else {
            format!("{base}_{count}")
        }
    };

    let mut families: Vec<DualFamily> = Vec::new();
    let mut interior_dual: BTreeMap<(usize, usize, u32), ArrowId> = BTreeMap::new();
    let mut bdy_alpha: BTreeMap<(usize, usize), ArrowId> = BTreeMap::new();
    let mut bdy_beta: BTreeMap<(usize, usize), ArrowId> = BTreeMap::new();
    let mut sigma: Vec<Option<ArrowId>> = vec![None; s.edges.len()];
    let mut tloop: Vec<Option<ArrowId>> = vec![None; s.edges.len()];

    // Internal walk duals.
    for (vi, v) in s.vertices.iter().enumerate() {
        if v.kind != VertexKind::Internal {
            continue;
        }
        let r = v.halfedges.len();
        let m = s.internal_degree(vi) as i64;
        let windings = (n / m) as u32;
        for start_idx in 0..r {
            for steps in 0..r {
                for w in 0..windings {
                    if steps == 0 && w == 0 {
                        continue;
                    }
                    let end_idx = (start_idx + steps) % r;
                    let start_h = v.halfedges[start_idx];
                    let end_h = v.halfedges[end_idx];
                    let dist: i64 = (0..steps)
                        .map(|q| v.corners[(start_idx + q) % r] as i64)
                        .sum();
                    let base = format!(
                        "al{}{}",
                        s.edge_of[end_h] + 1,
                        s.edge_of[start_h] + 1
                    );
                    let label = if w >= 1 {
                        fresh_label(format!("{base}^{w}"))
                    } else {
                        fresh_label(base)
                    };
                    let id = quiver.add_arrow(
                        label,
                        vx(s.edge_of[end_h]),
                        vx(s.edge_of[start_h]),
                        1 - dist - w as i64 * m,
                    );
                    interior_dual.insert((start_h, end_h, w), id);
                    families.push(DualFamily::InteriorAlpha {
                        start_h,
                        end_h,
                        winding: w,
                    });
                }
            }
        }
    }
    // Boundary walk duals.
    for v in &s.vertices {
        if v.kind != VertexKind::Boundary {
            continue;
        }
        let r = v.halfedges.len();
        for j in 0..r {
            for i in j + 1..r {
                let dist: i64 = (j..i).map(|q| v.corners[q] as i64).sum();
                let (hj, hi) = (v.halfedges[j], v.halfedges[i]);
                let label = fresh_label(format!(
                    "al{}{}",
                    s.edge_of[hi] + 1,
                    s.edge_of[hj] + 1
                ));
                let id = quiver.add_arrow(label, vx(s.edge_of[hi]), vx(s.edge_of[hj]), 1 - dist);
                bdy_alpha.insert((hj, hi), id);
                families.push(DualFamily::BoundaryAlpha {
                    start_h: hj,
                    end_h: hi,
                });
            }
        }
    }
    // Winding loops.
    for (e, &(h1, h2)) in s.edges.iter().enumerate() {
        if s.is_internal_halfedge(h1) || s.is_internal_halfedge(h2) {
            let label = fresh_label(format!("si{}", e + 1));
            let id = quiver.add_arrow(label, vx(e), vx(e), 1 - n);
            sigma[e] = Some(id);
            families.push(DualFamily::Sigma { edge: e });
        }
    }
    // Boundary loops.
    for (e, &(h1, h2)) in s.edges.iter().enumerate() {
        if !s.is_internal_halfedge(h1) || !s.is_internal_halfedge(h2) {
            let label = fresh_label(format!("t{}", e + 1));
            let id = quiver.add_arrow(label, vx(e), vx(e), 2 - n);
            tloop[e] = Some(id);
            families.push(DualFamily::TLoop { edge: e });
        }
    }
    // Premultiplied boundary walk duals.
    for v in &s.vertices {
        if v.kind != VertexKind::Boundary {
            continue;
        }
        let r = v.halfedges.len();
        for j in 0..r {
            for i in j + 1..r {
                let dist: i64 = (j..i).map(|q| v.corners[q] as i64).sum();
                let (hj, hi) = (v.halfedges[j], v.halfedges[i]);
                let label = fresh_label(format!(
                    "be{}{}",
                    s.edge_of[hi] + 1,
                    s.edge_of[hj] + 1
                ));
                let id = quiver.add_arrow(label, vx(s.edge_of[hi]), vx(s.edge_of[hj]), 2 - n - dist);
                bdy_beta.insert((hj, hi), id);
                families.push(DualFamily::Beta {
                    start_h: hj,
                    end_h: hi,
                });
            }
        }
    }

    let mut p = FreeDgPresentation::new(quiver, field);
    let zero_for = |p: &FreeDgPresentation, id: ArrowId| -> PathExpr {
        let a = p.quiver.arrow(id);
        PathExpr::zero(field, a.source, a.target, a.degree + 1)
    };

    // Internal walk duals split at every proper cut point.
    for (i, fam) in families.iter().enumerate() {
        let DualFamily::InteriorAlpha {
            start_h,
            end_h,
            winding,
        } = *fam
        else {
            continue;
        };
        let id = ArrowId(i as u32);
        let vi = s.halfedges[start_h].vertex;
        let start_idx = s.halfedges[start_h].pos;
        let r = s.vertices[vi].halfedges.len();
        let steps = (s.halfedges[end_h].pos + r - start_idx) % r;
        let mut expr = zero_for(&p, id);
        for (word, exp) in split_terms(s, &interior_dual, vi, start_idx, steps, winding) {
            expr.add_term(word, field.sign(exp));
        }
        p.set_differential(id, expr)
            .map_err(|e| KoszulError::Internal(e.to_string()))?;
    }
    // Winding loops: split the full cycle on the representative side; the
    // other side (or the boundary loop, at a mixed edge) is signed by the
    // parity of `n − 1`.
    for (e, &(h1, h2)) in s.edges.iter().enumerate() {
        let Some(id) = sigma[e] else { continue };
        let mut expr = zero_for(&p, id);
        let side = |h: usize| -> Option<(usize, usize, usize)> {
            if !s.is_internal_halfedge(h) {
                return None;
            }
            let vi = s.halfedges[h].vertex;
            let len = s.vertices[vi].halfedges.len() * (n / s.internal_degree(vi) as i64) as usize;
            Some((len, vi, s.halfedges[h].pos))
        };
        match (side(h1), side(h2)) {
            (Some(s1), Some(s2)) => {
                let (rep, other) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
                let wr = (n / s.internal_degree(rep.1) as i64) as u32;
                for (word, exp) in split_terms(s, &interior_dual, rep.1, rep.2, 0, wr) {
                    expr.add_term(word, field.sign(exp));
                }
                let wo = (n / s.internal_degree(other.1) as i64) as u32;
                for (word, exp) in split_terms(s, &interior_dual, other.1, other.2, 0, wo) {
                    expr.add_term(word, field.sign(exp + n - 1));
                }
            }
            (Some(si), None) | (None, Some(si)) => {
                let w = (n / s.internal_degree(si.1) as i64) as u32;
                for (word, exp) in split_terms(s, &interior_dual, si.1, si.2, 0, w) {
                    expr.add_term(word, field.sign(exp));
                }
                let t = tloop[e].expect("mixed edge has a boundary loop");
                expr.add_term(vec![t], field.sign(n - 1));
            }
            (None, None) => unreachable!("winding loop requires an internal end"),
        }
        p.set_differential(id, expr)
            .map_err(|e| KoszulError::Internal(e.to_string()))?;
    }
    // The boundary-loop dual of an edge stands for the identified class of
    // its one or two loops; the non-representative side of a two-sided edge
    // differs from the class by `(−1)^n`.  The representative is the first
    // boundary side in document order, matching the primal identification.
    let rep_side: Vec<Option<usize>> = s
        .edges
        .iter()
        .map(|&(h1, h2)| {
            [h1, h2]
                .into_iter()
                .filter(|&h| !s.is_internal_halfedge(h))
                .min_by_key(|&h| (s.halfedges[h].vertex, s.halfedges[h].pos))
        })
        .collect();

    // Boundary walk duals and their premultiplied companions.
    for v in &s.vertices {
        if v.kind != VertexKind::Boundary {
            continue;
        }
        let r = v.halfedges.len();
        let dist = |j: usize, k: usize| -> i64 { (j..k).map(|q| v.corners[q] as i64).sum() };
        // The loop-or-walk generator from position `j` to `i`, with the sign
        // exponent its identification contributes.
        let beta_at = |j: usize, i: usize| -> (ArrowId, i64) {
            if j == i {
                let h = v.halfedges[j];
                let arrow = tloop[s.edge_of[h]].expect("boundary end has a loop");
                let exp = if rep_side[s.edge_of[h]] == Some(h) { 0 } else { n };
                (arrow, exp)
            } else {
                (bdy_beta[&(v.halfedges[j], v.halfedges[i])], 0)
            }
        };
        for j in 0..r {
            for i in j + 1..r {
                let (hj, hi) = (v.halfedges[j], v.halfedges[i]);
                let alpha = bdy_alpha[&(hj, hi)];
                let mut expr = zero_for(&p, alpha);
                for k in j + 1..i {
                    let first = bdy_alpha[&(hj, v.halfedges[k])];
                    let second = bdy_alpha[&(v.halfedges[k], hi)];
                    expr.add_term(vec![second, first], field.sign(1 - dist(j, k)));
                }
                p.set_differential(alpha, expr)
                    .map_err(|e| KoszulError::Internal(e.to_string()))?;

                let beta = bdy_beta[&(hj, hi)];
                let mut expr = zero_for(&p, beta);
                for k in j..i {
                    let second = bdy_alpha[&(v.halfedges[k], hi)];
                    let (b, exp) = beta_at(j, k);
                    expr.add_term(vec![second, b], field.sign(2 - n - dist(j, k) + exp));
                }
                for k in j + 1..=i {
                    let first = bdy_alpha[&(hj, v.halfedges[k])];
                    let (b, exp) = beta_at(k, i);
                    expr.add_term(vec![b, first], field.sign(1 + exp));
                }
                p.set_differential(beta, expr)
                    .map_err(|e| KoszulError::Internal(e.to_string()))?;
            }
        }
    }

    let report = p.check_d_squared();
    if !report.is_pass() {
        let bad: Vec<String> = report
            .failures
            .iter()
            .map(|(a, e)| format!("d²({}) = {}", p.quiver.arrow(*a).name, e.render(&p.quiver)))
            .collect();
        return Err(KoszulError::Internal(format!(
            "closed-form differential does not square to zero: {}",
            bad.join("; ")
        )));
    }
    Ok(DualPresentation {
        n,
        presentation: p,
        families,
    })
}

// ---------------------------------------------------------------------------
// Mixed-edge reduction
// ---------------------------------------------------------------------------

/// `(winding-loop dual name, boundary-loop dual name)` per mixed edge for a
/// cobar presentation built from [`crate::rgb::build_rgb`] output.
pub fn cobar_mixed_pairs(s: &SGraph, a: &RgbAlgebra) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (e, &(h1, h2)) in s.edges.iter().enumerate() {
        if s.is_internal_halfedge(h1) == s.is_internal_halfedge(h2) {
            continue;
        }
        let label_of = |want: Family| -> String {
            let idx = a
                .families
                .iter()
                .position(|f| *f == want)
                .expect("mixed edge families exist");
            format!("{}_d", a.algebra.basis[idx].label)
        };
        out.push((
            label_of(Family::CycleClass { edge: e }),
            label_of(Family::TauClass { edge: e }),
        ));
    }
    out
}

/// Eliminate the listed contractible `(loop, partner)` generator pairs in
/// order, looking names up afresh after each elimination.
pub fn reduce_mixed(
    p: &FreeDgPresentation,
    pairs: &[(String, String)],
) -> Result<FreeDgPresentation, KoszulError> {
    let mut cur = p.clone();
    for (sig, t) in pairs {
        let y = cur
            .quiver
            .arrow_by_name(sig)
            .ok_or_else(|| KoszulError::Internal(format!("missing generator {sig}")))?;
        let x = cur
            .quiver
            .arrow_by_name(t)
            .ok_or_else(|| KoszulError::Internal(format!("missing generator {t}")))?;
        cur = eliminate_contractible_pair(&cur, y, x)
            .map_err(|e| KoszulError::Internal(e.to_string()))?;
    }
    Ok(cur)
}

// ---------------------------------------------------------------------------
// Presentation comparison
// ---------------------------------------------------------------------------

/// Result of matching two free dg presentations.
#[derive(Clone, Debug)]
pub struct IsoReport {
    pub isomorphic: bool,
    /// `vertex_map[v]` is the right-hand vertex matched to left vertex `v`
    /// (empty when not isomorphic).
    pub vertex_map: Vec<usize>,
    /// `(left name, right name, scale)`: the left generator maps to `scale`
    /// times the right generator.
    pub matched: Vec<(String, String, Scalar)>,
    /// Left generators that could not be matched (diagnostic, best effort).
    pub unmatched: Vec<String>,
    /// Human-readable reasons the match failed or was obstructed.
    pub mismatches: Vec<String>,
}

const VERTEX_NODE_CAP: u64 = 200_000;
const PAIRING_NODE_CAP: u64 = 2_000_000;

/// Decide whether two free dg presentations are isomorphic by a vertex
/// bijection, a degree- and endpoint-preserving generator bijection, and a
/// per-generator rescaling by `±1`.
///
/// The sign search is exact: for a fixed generator matching the sign
/// conditions are linear over the two-element field and are solved by
/// elimination, so a matching is rejected only if no sign assignment works.
/// Rescalings outside `±1` are not searched; when a candidate matching fails
/// only for that reason the report says so.
pub fn compare_presentations(
    left: &FreeDgPresentation,
    right: &FreeDgPresentation,
) -> Result<IsoReport, KoszulError> {
    let mut mismatches: Vec<String> = Vec::new();
    let fail = |mismatches: Vec<String>, unmatched: Vec<String>| IsoReport {
        isomorphic: false,
        vertex_map: Vec::new(),
        matched: Vec::new(),
        unmatched,
        mismatches,
    };

    if left.field != right.field {
        mismatches.push(format!(
            "coefficient fields differ: {} vs {}",
            left.field, right.field
        ));
        return Ok(fail(mismatches, Vec::new()));
    }
    let nv = left.quiver.vertex_count();
    if nv != right.quiver.vertex_count() {
        mismatches.push(format!(
            "vertex counts differ: {} vs {}",
            nv,
            right.quiver.vertex_count()
        ));
        return Ok(fail(mismatches, Vec::new()));
    }
    let na = left.quiver.arrow_count();
    if na != right.quiver.arrow_count() {
        mismatches.push(format!(
            "generator counts differ: {} vs {}",
            na,
            right.quiver.arrow_count()
        ));
        return Ok(fail(mismatches, Vec::new()));
    }

    // Degree profile of loops, out-arrows and in-arrows at each vertex.
    let signature = |p: &FreeDgPresentation, v: usize| -> Vec<(i64, u8)> {
        let mut sig = Vec::new();
        for a in &p.quiver.arrows {
            let (s, t) = (a.source.0 as usize, a.target.0 as usize);
            if s == v && t == v {
                sig.push((a.degree, 2));
            } else if s == v {
                sig.push((a.degree, 0));
            } else if t == v {
                sig.push((a.degree, 1));
            }
        }
        sig.sort_unstable();
        sig
    };
    let sig_left: Vec<_> = (0..nv).map(|v| signature(left, v)).collect();
    let sig_right: Vec<_> = (0..nv).map(|v| signature(right, v)).collect();
    let candidates: Vec<Vec<usize>> = sig_left
        .iter()
        .map(|sl| (0..nv).filter(|&w| sig_right[w] == *sl).collect())
        .collect();
    if let Some(v) = candidates.iter().position(|c| c.is_empty()) {
        mismatches.push(format!(
            "no right-hand vertex has the arrow profile of left vertex {}",
            left.quiver.vertex_names[v]
        ));
        return Ok(fail(mismatches, Vec::new()));
    }

    let mut search = MatchSearch {
        left,
        right,
        candidates,
        vertex_nodes: 0,
        pairing_nodes: 0,
        non_sign_note: false,
        block_note: None,
    };
    let mut vmap = vec![usize::MAX; nv];
    let mut used = vec![false; nv];
    match search.assign_vertex(0, &mut vmap, &mut used)? {
        Some((vertex_map, pairs, eps)) => {
            let matched = pairs
                .iter()
                .map(|&(l, r)| {
                    let scale = if eps[l.0 as usize] {
                        left.field.from_i64(-1)
                    } else {
                        left.field.one()
                    };
                    (
                        left.quiver.arrow(l).name.clone(),
                        right.quiver.arrow(r).name.clone(),
                        scale,
                    )
                })
                .collect();
            Ok(IsoReport {
                isomorphic: true,
                vertex_map,
                matched,
                unmatched: Vec::new(),
                mismatches: Vec::new(),
            })
        }
        None => {
            if search.non_sign_note {
                mismatches.push(
                    "a candidate matching needed a rescaling outside ±1, which is not searched"
                        .into(),
                );
            }
            let unmatched = match search.block_note {
                Some(note) => {
                    mismatches.push(note.0);
                    note.1
                }
                None => {
                    mismatches.push("no vertex bijection admits a generator matching".into());
                    Vec::new()
                }
            };
            Ok(fail(mismatches, unmatched))
        }
    }
}

struct MatchSearch<'a> {
    left: &'a FreeDgPresentation,
    right: &'a FreeDgPresentation,
    candidates: Vec<Vec<usize>>,
    vertex_nodes: u64,
    pairing_nodes: u64,
    non_sign_note: bool,
    /// Last block-size mismatch seen: message plus the unmatched left names.
    block_note: Option<(String, Vec<String>)>,
}

type MatchResult = Option<(Vec<usize>, Vec<(ArrowId, ArrowId)>, Vec<bool>)>;

impl MatchSearch<'_> {
    fn assign_vertex(
        &mut self,
        v: usize,
        vmap: &mut Vec<usize>,
        used: &mut Vec<bool>,
    ) -> Result<MatchResult, KoszulError> {
        self.vertex_nodes += 1;
        if self.vertex_nodes > VERTEX_NODE_CAP {
            return Err(KoszulError::SearchCap {
                cap: VERTEX_NODE_CAP,
                detail: "enumerating vertex bijections".into(),
            });
        }
        if v == vmap.len() {
            return self.match_generators(vmap);
        }
        let cands = self.candidates[v].clone();
        for w in cands {
            if used[w] {
                continue;
            }
            vmap[v] = w;
            used[w] = true;
            if let Some(hit) = self.assign_vertex(v + 1, vmap, used)? {
                return Ok(Some(hit));
            }
            used[w] = false;
            vmap[v] = usize::MAX;
        }
        Ok(None)
    }

    /// With the vertex bijection fixed, match generators block by block
    /// (blocks are `(source, target, degree)` classes) and solve for signs.
    fn match_generators(&mut self, vmap: &[usize]) -> Result<MatchResult, KoszulError> {
        let mut right_blocks: BTreeMap<(usize, usize, i64), Vec<ArrowId>> = BTreeMap::new();
        for (i, a) in self.right.quiver.arrows.iter().enumerate() {
            right_blocks
                .entry((a.source.0 as usize, a.target.0 as usize, a.degree))
                .or_default()
                .push(ArrowId(i as u32));
        }
        let mut left_blocks: BTreeMap<(usize, usize, i64), Vec<ArrowId>> = BTreeMap::new();
        for (i, a) in self.left.quiver.arrows.iter().enumerate() {
            left_blocks
                .entry((
                    vmap[a.source.0 as usize],
                    vmap[a.target.0 as usize],
                    a.degree,
                ))
                .or_default()
                .push(ArrowId(i as u32));
        }
        let keys: Vec<_> = left_blocks.keys().copied().collect();
        for key in &keys {
            let lsize = left_blocks[key].len();
            let rsize = right_blocks.get(key).map_or(0, Vec::len);
            if lsize != rsize {
                let names: Vec<String> = left_blocks[key]
                    .iter()
                    .map(|&a| self.left.quiver.arrow(a).name.clone())
                    .collect();
                self.block_note = Some((
                    format!(
                        "under one vertex bijection, {} left generators of degree {} \
                         share endpoints with {} right generators",
                        lsize, key.2, rsize
                    ),
                    names,
                ));
                return Ok(None);
            }
        }
        // Flatten the blocks into one assignment order.
        let mut order: Vec<(ArrowId, Vec<ArrowId>)> = Vec::new();
        for key in &keys {
            for &l in &left_blocks[key] {
                order.push((l, right_blocks[key].clone()));
            }
        }
        let mut pair: Vec<Option<ArrowId>> = vec![None; self.left.quiver.arrow_count()];
        let mut taken: BTreeSet<ArrowId> = BTreeSet::new();
        self.assign_generator(vmap, &order, 0, &mut pair, &mut taken)
    }

    fn assign_generator(
        &mut self,
        vmap: &[usize],
        order: &[(ArrowId, Vec<ArrowId>)],
        pos: usize,
        pair: &mut Vec<Option<ArrowId>>,
        taken: &mut BTreeSet<ArrowId>,
    ) -> Result<MatchResult, KoszulError> {
        self.pairing_nodes += 1;
        if self.pairing_nodes > PAIRING_NODE_CAP {
            return Err(KoszulError::SearchCap {
                cap: PAIRING_NODE_CAP,
                detail: "enumerating generator matchings".into(),
            });
        }
        if pos == order.len() {
            let pairs: Vec<(ArrowId, ArrowId)> = pair
                .iter()
                .enumerate()
                .map(|(i, r)| (ArrowId(i as u32), r.expect("complete matching")))
                .collect();
            return Ok(match self.solve_signs(&pairs) {
                SignOutcome::Solved(eps) => Some((vmap.to_vec(), pairs, eps)),
                SignOutcome::NonSign => {
                    self.non_sign_note = true;
                    None
                }
                SignOutcome::Fail => None,
            });
        }
        let (l, ref cands) = order[pos];
        let dl = self.left.d_of(l);
        for &r in cands {
            if taken.contains(&r) {
                continue;
            }
            // Cheap necessary conditions before recursing: the differential
            // supports must have the same size and word-length profile.
            let dr = self.right.d_of(r);
            if dl.terms.len() != dr.terms.len() {
                continue;
            }
            let mut ll: Vec<usize> = dl.terms.keys().map(Vec::len).collect();
            let mut rl: Vec<usize> = dr.terms.keys().map(Vec::len).collect();
            ll.sort_unstable();
            rl.sort_unstable();
            if ll != rl {
                continue;
            }
            pair[l.0 as usize] = Some(r);
            taken.insert(r);
            if let Some(hit) = self.assign_generator(vmap, order, pos + 1, pair, taken)? {
                return Ok(Some(hit));
            }
            taken.remove(&r);
            pair[l.0 as usize] = None;
        }
        Ok(None)
    }

    /// Solve the `±1` rescaling conditions for a complete generator
    /// matching by elimination over the two-element field.
    fn solve_signs(&self, pairs: &[(ArrowId, ArrowId)]) -> SignOutcome {
        let n = pairs.len();
        let words = n.div_ceil(64);
        let mut to_right: Vec<ArrowId> = vec![ArrowId(0); n];
        for &(l, r) in pairs {
            to_right[l.0 as usize] = r;
        }
        // Reduced rows: (bitmask over left generators, parity).
        let mut rows: Vec<(Vec<u64>, bool)> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for &(l, _) in pairs {
            let dl = self.left.d_of(l);
            let dr = self.right.d_of(to_right[l.0 as usize]);
            for (word, c_left) in &dl.terms {
                let image: Word = word.iter().map(|&x| to_right[x.0 as usize]).collect();
                let Some(c_right) = dr.terms.get(&image) else {
                    return SignOutcome::Fail;
                };
                let ratio = c_left.div(c_right);
                let rhs = if ratio.is_one() {
                    false
                } else if ratio.neg().is_one() {
                    true
                } else {
                    return SignOutcome::NonSign;
                };
                let mut bits = vec![0u64; words];
                let mut flip = |i: usize| bits[i / 64] ^= 1 << (i % 64);
                flip(l.0 as usize);
                for x in word {
                    flip(x.0 as usize);
                }
                if !self.reduce_row(&mut rows, &mut pivots, bits, rhs) {
                    return SignOutcome::Fail;
                }
            }
        }
        // Free variables are zero; each pivot row then reads off directly.
        let mut eps = vec![false; n];
        for (row, &(ref bits, rhs)) in rows.iter().enumerate() {
            let mut val = rhs;
            for i in 0..n {
                if i != pivots[row] && bits[i / 64] >> (i % 64) & 1 == 1 {
                    val ^= eps[i];
                }
            }
            eps[pivots[row]] = val;
        }
        SignOutcome::Solved(eps)
    }

    /// Insert one parity equation, keeping the system fully reduced.
    /// Returns false when the system becomes inconsistent.
    fn reduce_row(
        &self,
        rows: &mut Vec<(Vec<u64>, bool)>,
        pivots: &mut Vec<usize>,
        mut bits: Vec<u64>,
        mut rhs: bool,
    ) -> bool {
        for (row, &pivot) in pivots.iter().enumerate() {
            if bits[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (b, r) in bits.iter_mut().zip(rows[row].0.iter()) {
                    *b ^= r;
                }
                rhs ^= rows[row].1;
            }
        }
        let Some(pivot) = bits
            .iter()
            .enumerate()
            .flat_map(|(w, &b)| (0..64).filter(move |i| b >> i & 1 == 1).map(move |i| w * 64 + i))
            .next()
        else {
            return !rhs;
        };
        // Clear the new pivot from the existing rows.
        for row in rows.iter_mut() {
            if row.0[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (b, nb) in row.0.iter_mut().zip(bits.iter()) {
                    *b ^= nb;
                }
                row.1 ^= rhs;
            }
        }
        rows.push((bits, rhs));
        pivots.push(pivot);
        true
    }
}

enum SignOutcome {
    Solved(Vec<bool>),
    NonSign,
    Fail,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgb::build_rgb;
    use crate::sgraph::{parse_sgraph, random_sgraph, RandomGraphParams};
    use rand::SeedableRng;

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

    #[test]
    fn cobar_of_the_two_loop_fixture_matches_the_hand_computed_dual() {
        let s = parse_sgraph(SG_A).unwrap();
        let a = build_rgb(&s, 3, Field::Q).unwrap();
        let c = cobar(&a.algebra).unwrap();
        assert_eq!(
            profile(&c),
            vec![
                ("a11^2_d".into(), "e1".into(), "e1".into(), -1),
                ("a11^3_d".into(), "e1".into(), "e1".into(), -2),
                ("a11_d".into(), "e1".into(), "e1".into(), 0),
                ("a12_d".into(), "e1".into(), "e2".into(), -1),
                ("a21_d".into(), "e2".into(), "e1".into(), 0),
                ("a22_d".into(), "e2".into(), "e2".into(), -2),
            ]
        );
        assert!(dterms(&c, "a11_d").is_empty());
        assert!(dterms(&c, "a21_d").is_empty());
        assert!(dterms(&c, "a12_d").is_empty());
        assert_eq!(
            dterms(&c, "a11^2_d"),
            words(&[(&["a11_d", "a11_d"], "1")])
        );
        assert_eq!(
            dterms(&c, "a11^3_d"),
            words(&[
                (&["a11^2_d", "a11_d"], "1"),
                (&["a11_d", "a11^2_d"], "-1"),
                (&["a12_d", "a21_d"], "1"),
            ])
        );
        assert_eq!(dterms(&c, "a22_d"), words(&[(&["a21_d", "a12_d"], "-1")]));
    }

    #[test]
    fn closed_form_dual_of_the_two_loop_fixture_has_the_frozen_presentation() {
        let s = parse_sgraph(SG_A).unwrap();
        let d = closed_form_dual(&s, 3, Field::Q).unwrap();
        let p = &d.presentation;
        assert_eq!(
            profile(p),
            vec![
                ("al11^1".into(), "e1".into(), "e1".into(), 0),
                ("al11^2".into(), "e1".into(), "e1".into(), -1),
                ("al12".into(), "e1".into(), "e2".into(), -1),
                ("al21".into(), "e2".into(), "e1".into(), 0),
                ("si1".into(), "e1".into(), "e1".into(), -2),
                ("si2".into(), "e2".into(), "e2".into(), -2),
            ]
        );
        assert!(dterms(p, "al11^1").is_empty());
        assert!(dterms(p, "al21").is_empty());
        assert!(dterms(p, "al12").is_empty());
        assert_eq!(
            dterms(p, "al11^2"),
            words(&[(&["al11^1", "al11^1"], "1")])
        );
        assert_eq!(
            dterms(p, "si1"),
            words(&[
                (&["al11^2", "al11^1"], "1"),
                (&["al11^1", "al11^2"], "-1"),
                (&["al12", "al21"], "1"),
            ])
        );
        assert_eq!(dterms(p, "si2"), words(&[(&["al21", "al12"], "-1")]));
    }

    #[test]
    fn closed_form_dual_handles_boundary_vertices() {
        let s = parse_sgraph(SG_B).unwrap();
        let d = closed_form_dual(&s, 2, Field::Q).unwrap();
        let p = &d.presentation;
        assert_eq!(
            profile(p),
            vec![
                ("al12".into(), "e1".into(), "e2".into(), 0),
                ("be12".into(), "e1".into(), "e2".into(), -1),
                ("si2".into(), "e2".into(), "e2".into(), -1),
                ("t1".into(), "e1".into(), "e1".into(), 0),
                ("t2".into(), "e2".into(), "e2".into(), 0),
            ]
        );
        assert!(dterms(p, "al12").is_empty());
        assert!(dterms(p, "t1").is_empty());
        assert!(dterms(p, "t2").is_empty());
        assert_eq!(dterms(p, "si2"), words(&[(&["t2"], "-1")]));
        assert_eq!(
            dterms(p, "be12"),
            words(&[(&["al12", "t2"], "1"), (&["t1", "al12"], "-1")])
        );
        assert_eq!(d.mixed_pairs(&s), vec![("si2".to_string(), "t2".to_string())]);
    }

    #[test]
    fn closed_form_dual_of_a_boundary_only_edge_is_a_single_closed_loop() {
        let s = parse_sgraph(SG_E1).unwrap();
        let d = closed_form_dual(&s, 4, Field::Q).unwrap();
        let p = &d.presentation;
        assert_eq!(
            profile(p),
            vec![("t1".into(), "e1".into(), "e1".into(), -2)]
        );
        assert!(dterms(p, "t1").is_empty());
        assert!(d.mixed_pairs(&s).is_empty());
    }

    #[test]
    fn incompatible_decorations_are_rejected() {
        let s = parse_sgraph(SG_A).unwrap();
        let err = closed_form_dual(&s, 2, Field::Q).unwrap_err();
        assert!(matches!(err, KoszulError::Incompatible { n: 2, .. }));
    }

    #[test]
    fn the_two_dual_routes_agree_on_the_fixtures() {
        for (text, n) in [(SG_A, 3), (SG_B, 2), (SG_M, 3), (SG_E1, 4), (SG_E2, 2)] {
            let s = parse_sgraph(text).unwrap();
            let a = build_rgb(&s, n, Field::Q).unwrap();
            let via_cobar = cobar(&a.algebra).unwrap();
            let direct = closed_form_dual(&s, n, Field::Q).unwrap();
            let report = compare_presentations(&via_cobar, &direct.presentation).unwrap();
            assert!(
                report.isomorphic,
                "routes disagree at n={n}: {:?}",
                report.mismatches
            );
        }
    }

    #[test]
    fn a_presentation_matches_itself_by_the_identity() {
        let s = parse_sgraph(SG_A).unwrap();
        let d = closed_form_dual(&s, 3, Field::Q).unwrap();
        let report = compare_presentations(&d.presentation, &d.presentation).unwrap();
        assert!(report.isomorphic);
        assert_eq!(report.vertex_map, vec![0, 1]);
        for (l, r, c) in &report.matched {
            assert_eq!(l, r);
            assert!(c.is_one());
        }
    }

    #[test]
    fn different_graphs_fail_the_comparison() {
        let sa = parse_sgraph(SG_A).unwrap();
        let sb = parse_sgraph(SG_B).unwrap();
        let da = closed_form_dual(&sa, 3, Field::Q).unwrap();
        let db = closed_form_dual(&sb, 2, Field::Q).unwrap();
        let report = compare_presentations(&da.presentation, &db.presentation).unwrap();
        assert!(!report.isomorphic);
        assert!(!report.mismatches.is_empty());
    }

    #[test]
    fn mixed_edges_reduce_to_matching_presentations() {
        let s = parse_sgraph(SG_B).unwrap();
        let a = build_rgb(&s, 2, Field::Q).unwrap();
        let via_cobar = cobar(&a.algebra).unwrap();
        let reduced_cobar = reduce_mixed(&via_cobar, &cobar_mixed_pairs(&s, &a)).unwrap();
        assert_eq!(reduced_cobar.quiver.arrow_count(), 3);
        assert_eq!(
            dterms(&reduced_cobar, "t1*a12_d"),
            words(&[(&["t1_d", "a12_d"], "1")])
        );
        assert!(reduced_cobar.check_d_squared().is_pass());

        let direct = closed_form_dual(&s, 2, Field::Q).unwrap();
        let reduced_direct = reduce_mixed(&direct.presentation, &direct.mixed_pairs(&s)).unwrap();
        assert_eq!(reduced_direct.quiver.arrow_count(), 3);
        assert_eq!(
            dterms(&reduced_direct, "be12"),
            words(&[(&["t1", "al12"], "-1")])
        );
        let report = compare_presentations(&reduced_cobar, &reduced_direct).unwrap();
        assert!(report.isomorphic, "{:?}", report.mismatches);
    }

    #[test]
    fn the_two_dual_routes_agree_on_random_graphs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x6b6f737a756c);
        for n in [2i64, 3, 4, 6] {
            for _ in 0..3 {
                let params = RandomGraphParams {
                    max_edges: 4,
                    n,
                    allow_boundary: true,
                };
                let s = random_sgraph(&mut rng, &params);
                let a = build_rgb(&s, n, Field::Q).unwrap();
                let via_cobar = cobar(&a.algebra).unwrap();
                let direct = closed_form_dual(&s, n, Field::Q).unwrap();
                let report = compare_presentations(&via_cobar, &direct.presentation).unwrap();
                assert!(
                    report.isomorphic,
                    "routes disagree at n={n} on {}: {:?}",
                    s.to_json_string(),
                    report.mismatches
                );
            }
        }
    }
}
