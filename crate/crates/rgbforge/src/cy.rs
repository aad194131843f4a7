//! Top-degree trace pairings: construction of a graded-symmetric,
//! nondegenerate trace when the decoration parity and orientation allow one,
//! and an exact linear-algebra certificate of impossibility when they do not.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::dgalg::linalg::{rank_of_rows, SparseRow};
use crate::dgalg::PathExpr;
use crate::rgb::{Family, RgbAlgebra};
use crate::scalar::Scalar;
use crate::sgraph::{SGraph, VertexKind};

/// Why [`cy_trace`] declines to build a trace.  A refusal is an expected
/// outcome on inputs outside the construction's reach, not a failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceRefusal {
    /// The graph has a boundary vertex; the construction needs every vertex
    /// internal.
    BoundaryVertex { vertex: String },
    /// Even decoration on a non-orientable graph.
    NotOrientable,
}

impl fmt::Display for TraceRefusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceRefusal::BoundaryVertex { vertex } => {
                write!(f, "boundary vertex {vertex} present")
            }
            TraceRefusal::NotOrientable => {
                write!(f, "even decoration on a non-orientable graph")
            }
        }
    }
}

/// A linear functional on the algebra supported in the top degree, together
/// with the verified rank of its pairing matrix.
#[derive(Clone, Debug)]
pub struct TraceFunctional {
    pub n: i64,
    /// Values on the degree-`n` basis elements, by label; zero elsewhere.
    pub values: BTreeMap<String, Scalar>,
    /// Rank of the full pairing matrix `tr(x·y)`; verified equal to the
    /// dimension of the algebra.
    pub gram_rank: usize,
}

/// Result of [`cy_trace`]: either a verified trace or a refusal reason.
#[derive(Clone, Debug)]
pub enum TraceOutcome {
    Trace(TraceFunctional),
    Refused(TraceRefusal),
}

impl TraceOutcome {
    pub fn trace(&self) -> Option<&TraceFunctional> {
        match self {
            TraceOutcome::Trace(t) => Some(t),
            TraceOutcome::Refused(_) => None,
        }
    }
}

#[derive(Error, Clone, Debug, PartialEq, Eq)]
pub enum CyError {
    /// Verification of a constructed trace failed; this signals a bug in the
    /// construction, never a property of the input.
    #[error("internal verification failure: {0}")]
    Internal(String),
    /// The infeasibility analysis applies to even nonzero decorations only.
    #[error("infeasibility analysis needs an even nonzero decoration, got n = {n}")]
    ParityPrecondition { n: i64 },
    /// Without an odd-degree internal vertex the symmetry system forces
    /// nothing, so there is no certificate to produce.
    #[error("no internal vertex of odd degree; nothing is forced to vanish")]
    NoOddDegreeVertex,
    /// The forced-vanishing argument divides by 2.
    #[error("the forced-vanishing argument needs characteristic different from 2")]
    CharacteristicTwo,
}

/// One trace value the symmetry system forces to vanish.
#[derive(Clone, Debug)]
pub struct ForcedVanishing {
    /// Label of the top-degree basis element.
    pub label: String,
    /// Quiver vertex (edge label) carrying the cycle class.
    pub edge: String,
    /// Halfedges at odd-degree vertices incident to that edge; these witness
    /// the vanishing through an odd-by-odd factorization of the cycle.
    pub halfedges: Vec<String>,
}

/// Evidence report of [`cy_infeasibility`].
#[derive(Clone, Debug)]
pub struct InfeasibilityReport {
    pub n: i64,
    /// Dimension of the space of graded-symmetric functionals supported in
    /// the top degree.
    pub admissible_dim: usize,
    /// Top-degree values forced to zero by graded symmetry.
    pub forced: Vec<ForcedVanishing>,
    /// Labels whose entire pairing row every admissible functional kills;
    /// nonempty means no graded-symmetric trace is nondegenerate.
    pub radical_labels: Vec<String>,
}

impl InfeasibilityReport {
    /// Whether the report proves that no graded-symmetric functional in the
    /// top degree has a nondegenerate pairing.
    pub fn shows_no_nondegenerate_trace(&self) -> bool {
        !self.radical_labels.is_empty()
    }
}

impl fmt::Display for InfeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "symmetric functionals in degree {} form a space of dimension {}",
            self.n, self.admissible_dim
        )?;
        for fv in &self.forced {
            writeln!(
                f,
                "forced tr({}) = 0 at {} (halfedges {})",
                fv.label,
                fv.edge,
                fv.halfedges.join(", ")
            )?;
        }
        if self.shows_no_nondegenerate_trace() {
            writeln!(
                f,
                "pairing rows of {} vanish identically: every graded-symmetric \
                 trace is degenerate",
                self.radical_labels.join(", ")
            )?;
        }
        Ok(())
    }
}

/// Evaluate a structure-constant row against a full trace vector.
fn trace_of_row(row: &SparseRow, tr: &[Scalar], a: &RgbAlgebra) -> Scalar {
    let mut acc = a.field.zero();
    for (idx, c) in row {
        acc = acc.add(&c.mul(&tr[*idx]));
    }
    acc
}

/// Indices of the top-degree basis elements, checked to be exactly the
/// winding-cycle classes.
fn top_degree_classes(a: &RgbAlgebra) -> Result<Vec<usize>, CyError> {
    let top = a.degree_indices(a.n);
    for &k in &top {
        if !matches!(a.families[k], Family::CycleClass { .. }) {
            return Err(CyError::Internal(format!(
                "top-degree basis element {} is not a cycle class",
                a.algebra.basis[k].label
            )));
        }
    }
    for (k, fam) in a.families.iter().enumerate() {
        if matches!(fam, Family::CycleClass { .. }) && a.algebra.basis[k].degree != a.n {
            return Err(CyError::Internal(format!(
                "cycle class {} sits in degree {}, expected {}",
                a.algebra.basis[k].label, a.algebra.basis[k].degree, a.n
            )));
        }
    }
    Ok(top)
}

/// Construct the top-degree trace when parity and orientation allow one.
///
/// For odd decorations every cycle class gets trace 1.  For even decorations
/// the graph must be orientable, and the class of each edge gets `(-1)^ε`
/// where `ε` is the orientation bit at the halfedge whose winding cycle
/// reduces to `+1` times the stored representative.  The functional is then
/// verified graded-symmetric on all basis pairs and nondegenerate; failures
/// of verification are hard errors, never refusals.
pub fn cy_trace(s: &SGraph, a: &RgbAlgebra) -> Result<TraceOutcome, CyError> {
    let n = a.n;
    if let Some(v) = s.vertices.iter().find(|v| v.kind == VertexKind::Boundary) {
        return Ok(TraceOutcome::Refused(TraceRefusal::BoundaryVertex {
            vertex: v.id.clone(),
        }));
    }
    let orientation = if n % 2 == 0 {
        match s.orientability() {
            Some(o) => Some(o),
            None => return Ok(TraceOutcome::Refused(TraceRefusal::NotOrientable)),
        }
    } else {
        None
    };

    let top = top_degree_classes(a)?;
    let dim = a.algebra.dim();
    let mut tr = vec![a.field.zero(); dim];
    let mut values = BTreeMap::new();
    for &k in &top {
        let value = match &orientation {
            None => a.field.one(),
            Some(o) => {
                let Family::CycleClass { edge } = a.families[k] else {
                    unreachable!("top_degree_classes checked the family");
                };
                let (h1, h2) = s.edges[edge];
                let mut plus_side = None;
                for h in [h1, h2] {
                    let word = a.c_word[h].clone().ok_or_else(|| {
                        CyError::Internal(format!(
                            "halfedge {} of an internal edge has no winding cycle",
                            s.halfedges[h].name
                        ))
                    })?;
                    let expr = PathExpr::monomial(&a.quiver, a.field, word, a.field.one())
                        .map_err(|e| CyError::Internal(e.to_string()))?;
                    let nf = a
                        .rewrite
                        .normal_form(&expr)
                        .map_err(|e| CyError::Internal(e.to_string()))?;
                    let mut terms = nf.terms.iter();
                    let (word, coeff) = terms.next().ok_or_else(|| {
                        CyError::Internal("winding cycle reduced to zero".into())
                    })?;
                    if terms.next().is_some() || word != &a.basis_words[k] {
                        return Err(CyError::Internal(format!(
                            "winding cycle at {} does not reduce to the class \
                             representative",
                            s.halfedges[h].name
                        )));
                    }
                    if coeff.is_one() {
                        plus_side = Some(h);
                    }
                }
                let h = plus_side.ok_or_else(|| {
                    CyError::Internal("no side reduces to +1 times the representative".into())
                })?;
                a.field.sign(i64::from(o.toward[h]))
            }
        };
        tr[k] = value.clone();
        values.insert(a.algebra.basis[k].label.clone(), value);
    }

    // Graded symmetry on every basis pair.
    let alg = &a.algebra;
    for i in 0..dim {
        for j in 0..dim {
            let lhs = trace_of_row(&alg.product[i][j], &tr, a);
            let sign = a.field.sign(alg.basis[i].degree * alg.basis[j].degree);
            let rhs = sign.mul(&trace_of_row(&alg.product[j][i], &tr, a));
            if lhs != rhs {
                return Err(CyError::Internal(format!(
                    "graded symmetry fails on ({}, {})",
                    alg.basis[i].label, alg.basis[j].label
                )));
            }
        }
    }

    // Nondegeneracy via the rank of the full pairing matrix.
    let rows: Vec<SparseRow> = (0..dim)
        .map(|i| {
            (0..dim)
                .filter_map(|j| {
                    let t = trace_of_row(&alg.product[i][j], &tr, a);
                    if t.is_zero() {
                        None
                    } else {
                        Some((j, t))
                    }
                })
                .collect()
        })
        .collect();
    let gram_rank = rank_of_rows(&rows, a.field);
    if gram_rank != dim {
        return Err(CyError::Internal(format!(
            "pairing is degenerate: rank {gram_rank} of {dim}"
        )));
    }

    Ok(TraceOutcome::Trace(TraceFunctional { n, values, gram_rank }))
}

/// Prove that no graded-symmetric top-degree functional is nondegenerate.
///
/// Solves the linear system of all constraints `tr(xy) = (-1)^{|x||y|}tr(yx)`
/// on a functional supported in degree `n`, finds the values it forces to
/// vanish, and checks that the forced classes kill their entire pairing row.
/// Needs an even nonzero `n`, an internal vertex of odd degree (whose cycles
/// factor as a product of two odd-degree walks in both orders), and
/// characteristic different from 2.
pub fn cy_infeasibility(s: &SGraph, a: &RgbAlgebra) -> Result<InfeasibilityReport, CyError> {
    let n = a.n;
    if n == 0 || n % 2 != 0 {
        return Err(CyError::ParityPrecondition { n });
    }
    if a.field.characteristic() == 2 {
        return Err(CyError::CharacteristicTwo);
    }
    let odd_halfedges: Vec<usize> = s
        .vertices
        .iter()
        .enumerate()
        .filter(|(vi, v)| {
            v.kind == VertexKind::Internal && s.internal_degree(*vi) % 2 == 1
        })
        .flat_map(|(_, v)| v.halfedges.iter().copied())
        .collect();
    if odd_halfedges.is_empty() {
        return Err(CyError::NoOddDegreeVertex);
    }

    let top = top_degree_classes(a)?;
    let slot: BTreeMap<usize, usize> = top.iter().enumerate().map(|(s, &k)| (k, s)).collect();
    let unknowns = top.len();
    let alg = &a.algebra;
    let dim = alg.dim();

    // The trace-value of a product row as a linear form in the unknowns.
    let form_of = |row: &SparseRow| -> SparseRow {
        row.iter()
            .filter_map(|(k, c)| slot.get(k).map(|&s| (s, c.clone())))
            .collect()
    };

    let mut constraints: Vec<SparseRow> = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            if alg.basis[i].degree + alg.basis[j].degree != n {
                continue;
            }
            let mut row = form_of(&alg.product[i][j]);
            let sign = a
                .field
                .sign(alg.basis[i].degree * alg.basis[j].degree + 1);
            for (k, c) in form_of(&alg.product[j][i]) {
                row.push((k, sign.mul(&c)));
            }
            row.sort_by_key(|&(k, _)| k);
            let mut merged: SparseRow = Vec::new();
            for (k, c) in row {
                match merged.last_mut() {
                    Some((lk, lc)) if *lk == k => *lc = lc.add(&c),
                    _ => merged.push((k, c)),
                }
            }
            merged.retain(|(_, c)| !c.is_zero());
            if !merged.is_empty() {
                constraints.push(merged);
            }
        }
    }
    let base_rank = rank_of_rows(&constraints, a.field);
    let admissible_dim = unknowns - base_rank;

    let is_forced_zero = |slot_idx: usize| -> bool {
        let mut with_unit = constraints.clone();
        with_unit.push(vec![(slot_idx, a.field.one())]);
        rank_of_rows(&with_unit, a.field) == base_rank
    };
    let forced_slots: Vec<usize> = (0..unknowns).filter(|&s| is_forced_zero(s)).collect();

    // Every halfedge at an odd-degree vertex must witness a forced class.
    let mut witness: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for &h in &odd_halfedges {
        let edge = s.edge_of[h];
        let class = top
            .iter()
            .position(|&k| matches!(a.families[k], Family::CycleClass { edge: e } if e == edge))
            .ok_or_else(|| {
                CyError::Internal(format!(
                    "edge of halfedge {} has no cycle class",
                    s.halfedges[h].name
                ))
            })?;
        if !forced_slots.contains(&class) {
            return Err(CyError::Internal(format!(
                "symmetry fails to force the class at odd-vertex halfedge {}",
                s.halfedges[h].name
            )));
        }
        witness.entry(class).or_default().push(s.halfedges[h].name.clone());
    }

    let mut forced = Vec::new();
    let mut radical_labels = Vec::new();
    for &slot_idx in &forced_slots {
        let k = top[slot_idx];
        // The entire pairing row of a forced class must also be forced.
        let row_forced = (0..dim).all(|j| {
            let f = form_of(&alg.product[k][j]);
            if f.is_empty() {
                return true;
            }
            let mut with_row = constraints.clone();
            with_row.push(f);
            rank_of_rows(&with_row, a.field) == base_rank
        });
        let label = alg.basis[k].label.clone();
        if row_forced {
            radical_labels.push(label.clone());
        }
        forced.push(ForcedVanishing {
            label,
            edge: alg.vertex_names[alg.basis[k].source].clone(),
            halfedges: witness.remove(&slot_idx).unwrap_or_default(),
        });
    }

    Ok(InfeasibilityReport {
        n,
        admissible_dim,
        forced,
        radical_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rgb::build_rgb;
    use crate::scalar::Field;
    use crate::sgraph::parse_sgraph;

    fn two_loop_graph() -> SGraph {
        parse_sgraph(
            r#"{"vertices":[
                {"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},
                {"id":"v2","kind":"internal","halfedges":["h1","h2"],"corners":[1,2]},
                {"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],
               "edges":[["h1","m1"],["h2","t1"]]}"#,
        )
        .unwrap()
    }

    fn dumbbell_graph() -> SGraph {
        parse_sgraph(
            r#"{"vertices":[
                {"id":"p","kind":"internal","halfedges":["p1"],"corners":[2]},
                {"id":"q","kind":"internal","halfedges":["p2"],"corners":[2]}],
               "edges":[["p1","p2"]]}"#,
        )
        .unwrap()
    }

    fn boundary_graph() -> SGraph {
        parse_sgraph(
            r#"{"vertices":[
                {"id":"u","kind":"internal","halfedges":["u1"],"corners":[2]},
                {"id":"vb","kind":"boundary","halfedges":["g2","g1"],"corners":[1]},
                {"id":"w","kind":"boundary","halfedges":["w1"],"corners":[]}],
               "edges":[["g1","w1"],["g2","u1"]]}"#,
        )
        .unwrap()
    }

    #[test]
    fn odd_decoration_trace_has_full_rank() {
        let s = two_loop_graph();
        let a = build_rgb(&s, 3, Field::Q).unwrap();
        let out = cy_trace(&s, &a).unwrap();
        let t = out.trace().expect("trace expected for odd n");
        assert_eq!(t.gram_rank, 8);
        assert_eq!(t.values.len(), 2);
        for v in t.values.values() {
            assert!(v.is_one());
        }
        let labels: Vec<&str> = t.values.keys().map(String::as_str).collect();
        assert_eq!(labels, ["a11^3", "a22"]);
    }

    #[test]
    fn even_decoration_needs_an_orientation_and_signs_the_classes() {
        let s = dumbbell_graph();
        let a = build_rgb(&s, 2, Field::Q).unwrap();
        let out = cy_trace(&s, &a).unwrap();
        let t = out.trace().expect("orientable graph at even n");
        assert_eq!(t.gram_rank, 2);
        assert_eq!(t.values.len(), 1);
    }

    #[test]
    fn boundary_vertices_trigger_a_refusal_not_an_error() {
        let s = boundary_graph();
        let a = build_rgb(&s, 2, Field::Q).unwrap();
        match cy_trace(&s, &a).unwrap() {
            TraceOutcome::Refused(TraceRefusal::BoundaryVertex { .. }) => {}
            other => panic!("expected a boundary refusal, got {other:?}"),
        }
    }

    #[test]
    fn non_orientable_even_case_is_refused() {
        let s = two_loop_graph();
        let a = build_rgb(&s, 6, Field::Q).unwrap();
        match cy_trace(&s, &a).unwrap() {
            TraceOutcome::Refused(TraceRefusal::NotOrientable) => {}
            other => panic!("expected a non-orientable refusal, got {other:?}"),
        }
    }

    #[test]
    fn single_edge_odd_vertices_force_vanishing_at_even_decoration() {
        let s = parse_sgraph(
            r#"{"vertices":[
                {"id":"x","kind":"internal","halfedges":["x1"],"corners":[3]},
                {"id":"y","kind":"internal","halfedges":["y1"],"corners":[3]}],
               "edges":[["x1","y1"]]}"#,
        )
        .unwrap();
        let a = build_rgb(&s, 6, Field::Q).unwrap();
        let report = cy_infeasibility(&s, &a).unwrap();
        assert_eq!(report.forced.len(), 1);
        assert_eq!(report.forced[0].halfedges, ["x1", "y1"]);
        assert!(report.shows_no_nondegenerate_trace());
    }

    #[test]
    fn two_loop_graph_is_forced_degenerate_at_six() {
        let s = two_loop_graph();
        let a = build_rgb(&s, 6, Field::Q).unwrap();
        let report = cy_infeasibility(&s, &a).unwrap();
        // All vertices have odd degree, so both classes are forced to zero.
        assert_eq!(report.forced.len(), 2);
        assert!(report.shows_no_nondegenerate_trace());
        assert_eq!(report.radical_labels.len(), 2);
    }

    #[test]
    fn infeasibility_preconditions_are_enforced() {
        let s = two_loop_graph();
        let a3 = build_rgb(&s, 3, Field::Q).unwrap();
        assert_eq!(
            cy_infeasibility(&s, &a3).unwrap_err(),
            CyError::ParityPrecondition { n: 3 }
        );
        let d = dumbbell_graph();
        let a2 = build_rgb(&d, 2, Field::Q).unwrap();
        assert_eq!(
            cy_infeasibility(&d, &a2).unwrap_err(),
            CyError::NoOddDegreeVertex
        );
        let a2f = build_rgb(&d, 2, Field::Fp(2)).unwrap();
        assert_eq!(
            cy_infeasibility(&d, &a2f).unwrap_err(),
            CyError::CharacteristicTwo
        );
    }

    #[test]
    fn odd_trace_rank_is_a_relabeling_invariant() {
        let s = two_loop_graph();
        let relabeled = parse_sgraph(
            r#"{"vertices":[
                {"id":"w3","kind":"internal","halfedges":["zz"],"corners":[3]},
                {"id":"w1","kind":"internal","halfedges":["aa"],"corners":[1]},
                {"id":"w2","kind":"internal","halfedges":["bb","cc"],"corners":[1,2]}],
               "edges":[["bb","aa"],["cc","zz"]]}"#,
        )
        .unwrap();
        assert_eq!(s.canonical_code(), relabeled.canonical_code());
        let a = build_rgb(&s, 3, Field::Q).unwrap();
        let b = build_rgb(&relabeled, 3, Field::Q).unwrap();
        let ta = cy_trace(&s, &a).unwrap();
        let tb = cy_trace(&relabeled, &b).unwrap();
        assert_eq!(
            ta.trace().unwrap().gram_rank,
            tb.trace().unwrap().gram_rank
        );
    }
}
