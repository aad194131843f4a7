//! The graded quiver algebra attached to a decorated ribbon graph and a
//! compatible grading parameter `n`, built as a confluent rewrite system over
//! its path algebra together with a finite labeled basis, structure
//! constants, and differential.
//!
//! Quiver vertices are the graph's edges. Every halfedge at an internal
//! vertex and every non-final halfedge at a boundary vertex contributes a
//! corner arrow to the next halfedge's edge, graded by the corner distance;
//! every boundary halfedge contributes a loop of degree `n − 1`. The
//! relations identify the two winding cycles of an edge up to `(−1)^{n−1}`,
//! square boundary loops to zero, commute boundary loops across corner
//! arrows up to sign, identify the two loops of an edge with two boundary
//! ends up to `(−1)^n`, and annihilate every composition that jumps across
//! an edge or overshoots one full winding cycle. The differential sends the
//! loop of a mixed edge (one internal end, one boundary end) to `(−1)^n`
//! times the winding cycle of its internal side.

use crate::dgalg::findim::{BasisElem, FinDimDgAlgebra};
use crate::dgalg::rewrite::{RewriteRule, RewriteSystem};
use crate::dgalg::{ArrowId, FreeDgPresentation, GradedQuiver, PathExpr, VertexId, Word};
use crate::scalar::Field;
use crate::sgraph::{SGraph, VertexKind};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RgbError {
    #[error("n = {n} is not compatible with the graph: {}", problems.join("; "))]
    Incompatible { n: i64, problems: Vec<String> },
    #[error("internal verification failed: {0}")]
    Internal(String),
}

/// Where an arrow of the quiver comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrowOrigin {
    /// Corner arrow from one halfedge to the next at its vertex.
    Corner { from_h: usize, to_h: usize },
    /// Boundary loop at a boundary halfedge.
    Tau { h: usize },
}

/// The structural family of a basis element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// Idempotent at an edge.
    Idempotent { edge: usize },
    /// Counterclockwise walk at an internal vertex from one halfedge to
    /// another with a number of extra full windings.
    InternalWalk {
        start_h: usize,
        end_h: usize,
        winding: u32,
    },
    /// The identified winding cycle of an edge with at least one internal
    /// end (degree `n`).
    CycleClass { edge: usize },
    /// Walk along consecutive corners of a boundary vertex.
    BoundaryWalk { start_h: usize, end_h: usize },
    /// The identified boundary loop of an edge with a boundary end
    /// (degree `n − 1`).
    TauClass { edge: usize },
    /// Boundary walk premultiplied by the loop at its start (degree
    /// `n − 1 + distance`).
    TauWalk { start_h: usize, end_h: usize },
}

/// The finished algebra, with every intermediate layer exposed.
pub struct RgbAlgebra {
    pub n: i64,
    pub field: Field,
    pub quiver: GradedQuiver,
    /// Free cover carrying the generator differentials.
    pub presentation: FreeDgPresentation,
    pub rewrite: RewriteSystem,
    /// Basis words aligned with `algebra.basis`; idempotents are empty words.
    pub basis_words: Vec<Word>,
    /// Index of each nonempty basis word.
    pub word_index: BTreeMap<Word, usize>,
    pub families: Vec<Family>,
    pub algebra: FinDimDgAlgebra,
    pub arrow_origin: Vec<ArrowOrigin>,
    /// Corner arrow starting at each halfedge, if any.
    pub corner_arrow: Vec<Option<ArrowId>>,
    /// Boundary loop at each halfedge, if any.
    pub tau_arrow: Vec<Option<ArrowId>>,
    /// Full winding-cycle word at each internal-vertex halfedge.
    pub c_word: Vec<Option<Word>>,
}

/// How many basis elements the structural families predict, in closed form.
pub fn predicted_dimension(s: &SGraph, n: i64) -> usize {
    let mut total = s.edges.len();
    for (vi, v) in s.vertices.iter().enumerate() {
        match v.kind {
            VertexKind::Internal => {
                let r = v.halfedges.len();
                let m = s.internal_degree(vi);
                total += r * r * (n as u64 / m) as usize - r;
            }
            VertexKind::Boundary => {
                let r = v.halfedges.len();
                total += 2 * (r * r.saturating_sub(1) / 2);
            }
        }
    }
    for &(a, b) in &s.edges {
        if s.is_internal_halfedge(a) || s.is_internal_halfedge(b) {
            total += 1; // one winding-cycle class
        }
        if !s.is_internal_halfedge(a) || !s.is_internal_halfedge(b) {
            total += 1; // one boundary-loop class
        }
    }
    total
}

pub fn build_rgb(s: &SGraph, n: i64, field: Field) -> Result<RgbAlgebra, RgbError> {
    let diag = s.validate(n);
    if !diag.compatible {
        return Err(RgbError::Incompatible {
            n,
            problems: diag.problems,
        });
    }
    let e_count = s.edges.len();
    let mut quiver = GradedQuiver::new();
    for k in 0..e_count {
        quiver.add_vertex(format!("e{}", k + 1));
    }
    let edge_vertex = |h: usize| VertexId(s.edge_of[h] as u32);

    // Corner arrows, in vertex order then halfedge order; then boundary
    // loops. Labels are `a{target}{source}` / `t{edge}` by 1-based edge
    // numbers, with an occurrence suffix on repeats.
    let mut label_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut fresh_label = |base: String| -> String {
        let k = label_counts.entry(base.clone()).or_insert(0);
        *k += 1;
        if *k == 1 {
            base
        } else {
            format!("{base}_{k}")
        }
    };
    let mut arrow_origin: Vec<ArrowOrigin> = Vec::new();
    let mut corner_arrow: Vec<Option<ArrowId>> = vec![None; s.halfedges.len()];
    let mut tau_arrow: Vec<Option<ArrowId>> = vec![None; s.halfedges.len()];
    for v in &s.vertices {
        let r = v.halfedges.len();
        let pairs: Vec<(usize, usize, u64)> = match v.kind {
            VertexKind::Internal => (0..r)
                .map(|k| (v.halfedges[k], v.halfedges[(k + 1) % r], v.corners[k]))
                .collect(),
            VertexKind::Boundary => (0..r.saturating_sub(1))
                .map(|k| (v.halfedges[k], v.halfedges[k + 1], v.corners[k]))
                .collect(),
        };
        for (from_h, to_h, deg) in pairs {
            let label = fresh_label(format!(
                "a{}{}",
                s.edge_of[to_h] + 1,
                s.edge_of[from_h] + 1
            ));
            let id = quiver.add_arrow(label, edge_vertex(from_h), edge_vertex(to_h), deg as i64);
            arrow_origin.push(ArrowOrigin::Corner { from_h, to_h });
            corner_arrow[from_h] = Some(id);
        }
    }
    for v in &s.vertices {
        if v.kind != VertexKind::Boundary {
            continue;
        }
        for &h in &v.halfedges {
            let label = fresh_label(format!("t{}", s.edge_of[h] + 1));
            let id = quiver.add_arrow(label, edge_vertex(h), edge_vertex(h), n - 1);
            arrow_origin.push(ArrowOrigin::Tau { h });
            tau_arrow[h] = Some(id);
        }
    }

    // Winding-cycle words: from halfedge h, one full cycle of corner arrows
    // at its vertex, repeated n/m times.
    let mut c_word: Vec<Option<Word>> = vec![None; s.halfedges.len()];
    for (h, he) in s.halfedges.iter().enumerate() {
        let v = &s.vertices[he.vertex];
        if v.kind != VertexKind::Internal {
            continue;
        }
        let r = v.halfedges.len();
        let m = s.internal_degree(he.vertex);
        let reps = (n as u64 / m) as usize;
        let mut word = Vec::with_capacity(r * reps);
        let mut cur = h;
        for _ in 0..r * reps {
            word.push(corner_arrow[cur].expect("internal halfedges carry corner arrows"));
            cur = s.next_ccw(cur);
        }
        debug_assert_eq!(cur, h);
        c_word[h] = Some(word);
    }

    let rules = build_rules(
        s,
        n,
        field,
        &quiver,
        &arrow_origin,
        &corner_arrow,
        &tau_arrow,
        &c_word,
    );
    let longest_c = c_word
        .iter()
        .flatten()
        .map(|w| w.len())
        .max()
        .unwrap_or(0);
    let rewrite = RewriteSystem::new(&quiver, rules, 4 * longest_c.max(4) + 8, 1_000_000)
        .map_err(|e| RgbError::Internal(e.to_string()))?;

    // Free cover with the generator differentials.
    let mut presentation = FreeDgPresentation::new(quiver.clone(), field);
    for (id, origin) in arrow_origin.iter().enumerate() {
        if let ArrowOrigin::Tau { h } = origin {
            let p = s.partner(*h);
            if s.is_internal_halfedge(p) {
                let c = c_word[p].clone().expect("internal side has a cycle word");
                let value = PathExpr::monomial(&quiver, field, c, field.sign(n))
                    .expect("cycle words are composable");
                presentation
                    .set_differential(ArrowId(id as u32), value)
                    .map_err(|e| RgbError::Internal(e.to_string()))?;
            }
        }
    }

    // Basis: all rewrite-irreducible composable words, found by depth-first
    // extension with suffix-redex pruning.
    let mut words: Vec<Word> = Vec::new();
    let mut arrows_from: Vec<Vec<ArrowId>> = vec![Vec::new(); e_count];
    for (i, a) in quiver.arrows.iter().enumerate() {
        arrows_from[a.source.0 as usize].push(ArrowId(i as u32));
    }
    let mut stack: Vec<Word> = arrows_from
        .iter()
        .flatten()
        .map(|&a| vec![a])
        .collect();
    while let Some(w) = stack.pop() {
        if rewrite.has_redex_suffix(&w) {
            continue;
        }
        if words.len() > 1_000_000 {
            return Err(RgbError::Internal(
                "basis enumeration exceeded one million words".into(),
            ));
        }
        let tail = quiver.arrow(*w.last().unwrap()).target.0 as usize;
        for &a in &arrows_from[tail] {
            let mut w2 = w.clone();
            w2.push(a);
            stack.push(w2);
        }
        words.push(w);
    }
    words.sort_by(|a, b| {
        let ka = (quiver.word_degree(a), a.clone());
        let kb = (quiver.word_degree(b), b.clone());
        ka.cmp(&kb)
    });

    let mut basis_words: Vec<Word> = (0..e_count).map(|_| Vec::new()).collect();
    basis_words.extend(words);
    let mut word_index: BTreeMap<Word, usize> = BTreeMap::new();
    for (i, w) in basis_words.iter().enumerate() {
        if !w.is_empty() {
            word_index.insert(w.clone(), i);
        }
    }

    // Families: enumerate the structural families, reduce each defining
    // expression to ± one basis word, and check the assignment is a
    // bijection. This doubles as an exact dimension oracle.
    let (families, labels) = assign_families(
        s,
        n,
        field,
        &quiver,
        &rewrite,
        &basis_words,
        &word_index,
        &corner_arrow,
        &tau_arrow,
        &c_word,
    )?;

    let predicted = predicted_dimension(s, n);
    if predicted != basis_words.len() {
        return Err(RgbError::Internal(format!(
            "family count {} disagrees with irreducible word count {}",
            predicted,
            basis_words.len()
        )));
    }

    // Structure constants and differential over the basis.
    let nf_to_row = |expr: &PathExpr| -> Result<Vec<(usize, crate::scalar::Scalar)>, RgbError> {
        let nf = rewrite
            .normal_form(expr)
            .map_err(|e| RgbError::Internal(e.to_string()))?;
        let mut row = Vec::new();
        for (w, c) in &nf.terms {
            let idx = if w.is_empty() {
                nf.source.0 as usize
            } else {
                *word_index
                    .get(w)
                    .ok_or_else(|| RgbError::Internal("reduced word missing from basis".into()))?
            };
            row.push((idx, c.clone()));
        }
        row.sort_by_key(|(i, _)| *i);
        Ok(row)
    };
    let dim = basis_words.len();
    let expr_of = |i: usize| -> PathExpr {
        if basis_words[i].is_empty() {
            PathExpr::lazy(field, VertexId(i as u32))
        } else {
            PathExpr::monomial(&quiver, field, basis_words[i].clone(), field.one())
                .expect("basis words are composable")
        }
    };
    let mut product = vec![vec![Vec::new(); dim]; dim];
    for j in 0..dim {
        let ej = expr_of(j);
        for i in 0..dim {
            let ei = expr_of(i);
            if ej.target != ei.source {
                continue;
            }
            product[i][j] = nf_to_row(&PathExpr::mul(&ei, &ej))?;
        }
    }
    let mut differential = Vec::with_capacity(dim);
    for i in 0..dim {
        differential.push(nf_to_row(&presentation.d_extend(&expr_of(i)))?);
    }

    let basis: Vec<BasisElem> = (0..dim)
        .map(|i| {
            let (source, target) = if basis_words[i].is_empty() {
                (i, i)
            } else {
                let w = &basis_words[i];
                (
                    quiver.arrow(w[0]).source.0 as usize,
                    quiver.arrow(*w.last().unwrap()).target.0 as usize,
                )
            };
            BasisElem {
                label: labels[i].clone(),
                source,
                target,
                degree: quiver.word_degree(&basis_words[i]),
            }
        })
        .collect();
    let algebra = FinDimDgAlgebra {
        field,
        vertex_names: quiver.vertex_names.clone(),
        basis,
        unit: (0..e_count).collect(),
        product,
        differential,
    };

    Ok(RgbAlgebra {
        n,
        field,
        quiver,
        presentation,
        rewrite,
        basis_words,
        word_index,
        families,
        algebra,
        arrow_origin,
        corner_arrow,
        tau_arrow,
        c_word,
    })
}

#[allow(clippy::too_many_arguments)]
fn build_rules(
    s: &SGraph,
    n: i64,
    field: Field,
    quiver: &GradedQuiver,
    arrow_origin: &[ArrowOrigin],
    corner_arrow: &[Option<ArrowId>],
    tau_arrow: &[Option<ArrowId>],
    c_word: &[Option<Word>],
) -> Vec<RewriteRule> {
    let mut rules = Vec::new();
    // Jumping across an edge annihilates: a corner arrow into halfedge k
    // composed with the corner arrow out of k's partner.
    for (id, origin) in arrow_origin.iter().enumerate() {
        if let ArrowOrigin::Corner { to_h, .. } = origin {
            let p = s.partner(*to_h);
            if let Some(g) = corner_arrow[p] {
                rules.push(RewriteRule {
                    lhs: vec![ArrowId(id as u32), g],
                    rhs: Vec::new(),
                });
            }
        }
    }
    // Winding cycles of a two-internal-ended edge are identified up to
    // (−1)^{n−1}, oriented from the longer word to the shorter.
    for &(a, b) in &s.edges {
        if let (Some(wa), Some(wb)) = (&c_word[a], &c_word[b]) {
            let (big, small) = if (wa.len(), wa) > (wb.len(), wb) {
                (wa, wb)
            } else {
                (wb, wa)
            };
            if big != small {
                rules.push(RewriteRule {
                    lhs: big.clone(),
                    rhs: vec![(field.sign(n - 1), small.clone())],
                });
            }
        }
    }
    // Boundary loops square to zero.
    for (id, origin) in arrow_origin.iter().enumerate() {
        if let ArrowOrigin::Tau { .. } = origin {
            let t = ArrowId(id as u32);
            rules.push(RewriteRule {
                lhs: vec![t, t],
                rhs: Vec::new(),
            });
        }
    }
    // A boundary loop commutes across the corner arrow leaving its halfedge,
    // up to the sign of the arrow's degree. The rule is stated on the class
    // representative of each loop (the identified loop of a two-boundary
    // edge), folding the identification signs of both ends into the
    // coefficient so that reduction is confluent.
    let rep_tau = |h: usize| -> (ArrowId, i64) {
        let own = tau_arrow[h].expect("boundary halfedge carries a loop");
        match tau_arrow[s.partner(h)] {
            Some(other) if other < own => (other, n),
            _ => (own, 0),
        }
    };
    for (id, origin) in arrow_origin.iter().enumerate() {
        if let ArrowOrigin::Corner { from_h, to_h } = origin {
            if tau_arrow[*from_h].is_none() || tau_arrow[*to_h].is_none() {
                continue;
            }
            let a = ArrowId(id as u32);
            let deg = quiver.arrow(a).degree;
            let (t_from, sign_from) = rep_tau(*from_h);
            let (t_to, sign_to) = rep_tau(*to_h);
            rules.push(RewriteRule {
                lhs: vec![t_from, a],
                rhs: vec![(field.sign(deg + sign_from + sign_to), vec![a, t_to])],
            });
        }
    }
    // The two boundary loops of a two-boundary-ended edge are identified up
    // to (−1)^n; the later-constructed one rewrites to the earlier.
    for &(a, b) in &s.edges {
        if let (Some(ta), Some(tb)) = (tau_arrow[a], tau_arrow[b]) {
            let (rep, other) = if ta < tb { (ta, tb) } else { (tb, ta) };
            rules.push(RewriteRule {
                lhs: vec![other],
                rhs: vec![(field.sign(n), vec![rep])],
            });
        }
    }
    // On a mixed edge, the boundary loop annihilates against the internal
    // side in both orders: loop-then-walk-out, and walk-in-then-loop.
    for &(a, b) in &s.edges {
        for (internal_h, boundary_h) in [(a, b), (b, a)] {
            if !s.is_internal_halfedge(internal_h) || s.is_internal_halfedge(boundary_h) {
                continue;
            }
            let t = tau_arrow[boundary_h].expect("boundary halfedges carry loops");
            let out = corner_arrow[internal_h].expect("internal halfedges carry corner arrows");
            rules.push(RewriteRule {
                lhs: vec![t, out],
                rhs: Vec::new(),
            });
            for (id, origin) in arrow_origin.iter().enumerate() {
                if let ArrowOrigin::Corner { to_h, .. } = origin {
                    if *to_h == internal_h {
                        rules.push(RewriteRule {
                            lhs: vec![ArrowId(id as u32), t],
                            rhs: Vec::new(),
                        });
                    }
                }
            }
        }
    }
    // Overshooting a full winding cycle annihilates.
    for (h, cw) in c_word.iter().enumerate() {
        if let Some(cw) = cw {
            let mut lhs = cw.clone();
            lhs.push(corner_arrow[h].expect("internal halfedges carry corner arrows"));
            rules.push(RewriteRule { lhs, rhs: Vec::new() });
        }
    }
    rules
}

#[allow(clippy::too_many_arguments)]
fn assign_families(
    s: &SGraph,
    n: i64,
    field: Field,
    quiver: &GradedQuiver,
    rewrite: &RewriteSystem,
    basis_words: &[Word],
    word_index: &BTreeMap<Word, usize>,
    corner_arrow: &[Option<ArrowId>],
    tau_arrow: &[Option<ArrowId>],
    c_word: &[Option<Word>],
) -> Result<(Vec<Family>, Vec<String>), RgbError> {
    let dim = basis_words.len();
    let mut families: Vec<Option<Family>> = vec![None; dim];
    let mut labels: Vec<Option<String>> = vec![None; dim];
    let claim = |idx: usize,
                     fam: Family,
                     label: String,
                     families: &mut Vec<Option<Family>>,
                     labels: &mut Vec<Option<String>>|
     -> Result<(), RgbError> {
        if families[idx].is_some() {
            return Err(RgbError::Internal(format!(
                "basis element {idx} claimed by two families"
            )));
        }
        families[idx] = Some(fam);
        labels[idx] = Some(label);
        Ok(())
    };
    let reduce_to_word = |word: Word| -> Result<Option<(Word, bool)>, RgbError> {
        let expr = PathExpr::monomial(quiver, field, word, field.one())
            .map_err(|e| RgbError::Internal(e.to_string()))?;
        let nf = rewrite
            .normal_form(&expr)
            .map_err(|e| RgbError::Internal(e.to_string()))?;
        match nf.terms.len() {
            0 => Ok(None),
            1 => {
                let (w, c) = nf.terms.iter().next().unwrap();
                if c.is_one() || c.neg().is_one() {
                    Ok(Some((w.clone(), c.is_one())))
                } else {
                    Err(RgbError::Internal(
                        "family element reduced with a non-unit coefficient".into(),
                    ))
                }
            }
            _ => Err(RgbError::Internal(
                "family element did not reduce to a single word".into(),
            )),
        }
    };
    for edge in 0..s.edges.len() {
        claim(
            edge,
            Family::Idempotent { edge },
            format!("e{}", edge + 1),
            &mut families,
            &mut labels,
        )?;
    }
    // Internal walks.
    for (vi, v) in s.vertices.iter().enumerate() {
        if v.kind != VertexKind::Internal {
            continue;
        }
        let r = v.halfedges.len();
        let m = s.internal_degree(vi);
        let reps = (n as u64 / m) as u32;
        for &start_h in &v.halfedges {
            for steps in 0..r {
                for winding in 0..reps {
                    if steps == 0 && winding == 0 {
                        continue; // the idempotent
                    }
                    if steps == 0 && winding == reps {
                        continue; // the full cycle, claimed below
                    }
                    let len = steps + winding as usize * r;
                    let mut word = Vec::with_capacity(len);
                    let mut cur = start_h;
                    for _ in 0..len {
                        word.push(corner_arrow[cur].expect("internal corner arrow"));
                        cur = s.next_ccw(cur);
                    }
                    let end_h = cur;
                    let idx = *word_index.get(&word).ok_or_else(|| {
                        RgbError::Internal("internal walk word is not irreducible".into())
                    })?;
                    let label = quiver.render_word(&word);
                    claim(
                        idx,
                        Family::InternalWalk {
                            start_h,
                            end_h,
                            winding,
                        },
                        label,
                        &mut families,
                        &mut labels,
                    )?;
                }
            }
        }
    }
    // Winding-cycle classes: one per edge with an internal end. The stored
    // word is the reduced representative; the label is the shortest (then
    // lexicographically first) rendering among the edge's sides.
    for (edge, &(a, b)) in s.edges.iter().enumerate() {
        let sides: Vec<&Word> = [a, b].iter().filter_map(|&h| c_word[h].as_ref()).collect();
        if sides.is_empty() {
            continue;
        }
        let mut reduced: Option<(Word, bool)> = None;
        for side in &sides {
            let r = reduce_to_word((*side).clone())?
                .ok_or_else(|| RgbError::Internal("winding cycle reduced to zero".into()))?;
            if let Some(prev) = &reduced {
                if prev.0 != r.0 {
                    return Err(RgbError::Internal(
                        "the two sides of a winding cycle reduced differently".into(),
                    ));
                }
            } else {
                reduced = Some(r);
            }
        }
        let (word, _) = reduced.expect("at least one side");
        let label = sides
            .iter()
            .map(|w| quiver.render_word(w))
            .min_by_key(|r| (r.len(), r.clone()))
            .expect("at least one side");
        let idx = *word_index
            .get(&word)
            .ok_or_else(|| RgbError::Internal("winding cycle representative not in basis".into()))?;
        claim(
            idx,
            Family::CycleClass { edge },
            label,
            &mut families,
            &mut labels,
        )?;
    }
    // Boundary walks and their loop-premultiplied companions.
    for v in &s.vertices {
        if v.kind != VertexKind::Boundary {
            continue;
        }
        let r = v.halfedges.len();
        for j in 0..r {
            for i in j + 1..r {
                let word: Word = (j..i)
                    .map(|k| corner_arrow[v.halfedges[k]].expect("boundary corner arrow"))
                    .collect();
                let idx = *word_index.get(&word).ok_or_else(|| {
                    RgbError::Internal("boundary walk word is not irreducible".into())
                })?;
                claim(
                    idx,
                    Family::BoundaryWalk {
                        start_h: v.halfedges[j],
                        end_h: v.halfedges[i],
                    },
                    quiver.render_word(&word),
                    &mut families,
                    &mut labels,
                )?;
                // Premultiplied by the loop at the start halfedge.
                let mut tw: Word = vec![tau_arrow[v.halfedges[j]].expect("boundary loop")];
                tw.extend(word.iter().copied());
                let (nf_word, _) = reduce_to_word(tw)?.ok_or_else(|| {
                    RgbError::Internal("loop-premultiplied walk reduced to zero".into())
                })?;
                let idx = *word_index.get(&nf_word).ok_or_else(|| {
                    RgbError::Internal("loop-premultiplied walk not in basis".into())
                })?;
                claim(
                    idx,
                    Family::TauWalk {
                        start_h: v.halfedges[j],
                        end_h: v.halfedges[i],
                    },
                    quiver.render_word(&nf_word),
                    &mut families,
                    &mut labels,
                )?;
            }
        }
    }
    // Boundary-loop classes: one per edge with a boundary end.
    for (edge, &(a, b)) in s.edges.iter().enumerate() {
        let taus: Vec<ArrowId> = [a, b].iter().filter_map(|&h| tau_arrow[h]).collect();
        if taus.is_empty() {
            continue;
        }
        let rep = *taus.iter().min().expect("nonempty");
        let word = vec![rep];
        let idx = *word_index
            .get(&word)
            .ok_or_else(|| RgbError::Internal("boundary loop not in basis".into()))?;
        claim(
            idx,
            Family::TauClass { edge },
            quiver.arrow(rep).name.clone(),
            &mut families,
            &mut labels,
        )?;
    }
    let mut out_f = Vec::with_capacity(dim);
    let mut out_l = Vec::with_capacity(dim);
    for i in 0..dim {
        match (families[i].take(), labels[i].take()) {
            (Some(f), Some(l)) => {
                out_f.push(f);
                out_l.push(l);
            }
            _ => {
                let arrows: Vec<String> = quiver
                    .arrows
                    .iter()
                    .map(|a| {
                        format!(
                            "{}: {}→{} deg {}",
                            a.name,
                            quiver.vertex_names[a.source.0 as usize],
                            quiver.vertex_names[a.target.0 as usize],
                            a.degree
                        )
                    })
                    .collect();
                return Err(RgbError::Internal(format!(
                    "basis word {:?} (degree {}) not claimed by any family; arrows: {}",
                    quiver.render_word(&basis_words[i]),
                    quiver.word_degree(&basis_words[i]),
                    arrows.join(", ")
                )));
            }
        }
    }
    Ok((out_f, out_l))
}

impl RgbAlgebra {
    /// Basis indices of one degree, ascending.
    pub fn degree_indices(&self, degree: i64) -> Vec<usize> {
        (0..self.algebra.basis.len())
            .filter(|&i| self.algebra.basis[i].degree == degree)
            .collect()
    }

    /// Look up a basis element by label.
    pub fn basis_by_label(&self, label: &str) -> Option<usize> {
        self.algebra.basis.iter().position(|b| b.label == label)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sgraph::parse_sgraph;

    const SG_A: &str = r#"{"vertices":[{"id":"v1","kind":"internal","halfedges":["m1"],"corners":[1]},{"id":"v2","kind":"internal","halfedges":["h1","h2"],"corners":[1,2]},{"id":"v3","kind":"internal","halfedges":["t1"],"corners":[3]}],"edges":[["h1","m1"],["h2","t1"]]}"#;
    const SG_B: &str = r#"{"vertices":[{"id":"u","kind":"internal","halfedges":["u1"],"corners":[2]},{"id":"vb","kind":"boundary","halfedges":["g2","g1"],"corners":[1]},{"id":"w","kind":"boundary","halfedges":["w1"],"corners":[]}],"edges":[["g1","w1"],["g2","u1"]]}"#;
    const SG_M: &str = r#"{"vertices":[{"id":"mono","kind":"internal","halfedges":["k1"],"corners":[1]},{"id":"bdy","kind":"boundary","halfedges":["k2"],"corners":[]}],"edges":[["k1","k2"]]}"#;
    const SG_E2: &str = r#"{"vertices":[{"id":"q1","kind":"internal","halfedges":["p1"],"corners":[2]},{"id":"q2","kind":"internal","halfedges":["p2"],"corners":[2]}],"edges":[["p1","p2"]]}"#;

    fn build(text: &str, n: i64) -> RgbAlgebra {
        build_rgb(&parse_sgraph(text).unwrap(), n, Field::Q).unwrap()
    }

    #[test]
    fn two_loop_fixture_has_the_expected_labeled_basis() {
        let a = build(SG_A, 3);
        let dims = a.algebra.dims_by_degree();
        assert_eq!(
            dims.into_iter().collect::<Vec<_>>(),
            vec![(0, 2), (1, 2), (2, 2), (3, 2)]
        );
        let mut labels: Vec<(i64, String)> = a
            .algebra
            .basis
            .iter()
            .map(|b| (b.degree, b.label.clone()))
            .collect();
        labels.sort();
        assert_eq!(
            labels,
            vec![
                (0, "e1".into()),
                (0, "e2".into()),
                (1, "a11".into()),
                (1, "a21".into()),
                (2, "a11^2".into()),
                (2, "a12".into()),
                (3, "a11^3".into()),
                (3, "a22".into()),
            ]
        );
        assert!(a.algebra.check_axioms().is_pass());
    }

    #[test]
    fn boundary_fixture_satisfies_the_sign_rules() {
        let b = build(SG_B, 2);
        let dims = b.algebra.dims_by_degree();
        assert_eq!(
            dims.into_iter().collect::<Vec<_>>(),
            vec![(0, 2), (1, 3), (2, 2)]
        );
        assert!(b.algebra.check_axioms().is_pass());
        // a12 ∘ a22 = 0: the composition jumps across the mixed edge.
        let a12 = b.basis_by_label("a12").unwrap();
        let a22 = b.basis_by_label("a22").unwrap();
        assert!(b.algebra.product[a12][a22].is_empty());
        // t1 ∘ a12 = −(a12 ∘ t2).
        let t1 = b.basis_by_label("t1").unwrap();
        let t2 = b.basis_by_label("t2").unwrap();
        let lhs = &b.algebra.product[t1][a12];
        let rhs = &b.algebra.product[a12][t2];
        assert_eq!(lhs.len(), 1);
        assert_eq!(rhs.len(), 1);
        assert_eq!(lhs[0].0, rhs[0].0);
        assert_eq!(lhs[0].1, rhs[0].1.neg());
        // d(t2) = a22.
        let d = &b.algebra.differential[t2];
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].0, a22);
        assert!(d[0].1.is_one());
        // t1 is the loop class of the two-boundary edge; its differential
        // vanishes.
        assert!(b.algebra.differential[t1].is_empty());
    }

    #[test]
    fn monogon_with_boundary_has_truncated_polynomial_shape() {
        let m = build(SG_M, 3);
        assert_eq!(m.algebra.dim(), 5);
        let labels: Vec<String> = m.algebra.basis.iter().map(|b| b.label.clone()).collect();
        assert!(labels.contains(&"a11^3".to_string()));
        // d(t1) = −a11^3.
        let t1 = m.basis_by_label("t1").unwrap();
        let c = m.basis_by_label("a11^3").unwrap();
        let d = &m.algebra.differential[t1];
        assert_eq!(d, &vec![(c, Field::Q.from_i64(-1))]);
        let coh = m.algebra.cohomology_dims();
        assert_eq!(
            coh.into_iter().filter(|&(_, v)| v > 0).collect::<Vec<_>>(),
            vec![(0, 1), (1, 1), (2, 1)]
        );
        assert!(m.algebra.check_axioms().is_pass());
    }

    #[test]
    fn dumbbell_identifies_its_two_cycles_with_a_sign() {
        let e2 = build(SG_E2, 2);
        assert_eq!(e2.algebra.dim(), 2);
        let dims = e2.algebra.dims_by_degree();
        assert_eq!(dims.into_iter().collect::<Vec<_>>(), vec![(0, 1), (2, 1)]);
        // The non-representative loop reduces to minus the representative.
        let a = e2.quiver.arrow_by_name("a11").unwrap();
        let b = e2.quiver.arrow_by_name("a11_2").unwrap();
        let expr = PathExpr::monomial(&e2.quiver, Field::Q, vec![b], Field::Q.one()).unwrap();
        let nf = e2.rewrite.normal_form(&expr).unwrap();
        assert_eq!(nf.terms.len(), 1);
        let (w, c) = nf.terms.iter().next().unwrap();
        assert_eq!(w, &vec![a]);
        assert_eq!(*c, Field::Q.from_i64(-1));
        assert!(e2.algebra.check_axioms().is_pass());
    }

    #[test]
    fn predicted_dimension_matches_seeded_random_graphs() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(07_03_2026);
        for n in [1i64, 2, 3, 4, 6] {
            for _ in 0..8 {
                let params = crate::sgraph::RandomGraphParams {
                    max_edges: 4,
                    n,
                    allow_boundary: true,
                };
                let s = crate::sgraph::random_sgraph(&mut rng, &params);
                let a = build_rgb(&s, n, Field::Q)
                    .unwrap_or_else(|e| panic!("build failed for n={n} {}: {e}", s.to_json_string()));
                assert_eq!(a.algebra.dim(), predicted_dimension(&s, n));
                assert!(
                    a.algebra.check_axioms().is_pass(),
                    "axioms fail for {}",
                    s.to_json_string()
                );
            }
        }
    }
}
