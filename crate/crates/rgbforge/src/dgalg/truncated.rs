//! Word-length-truncated cohomology of free dg-presentations.
//!
//! For a free presentation whose differential never produces lazy paths, the
//! span of words longer than a cap `ℓ` is a dg-ideal, so dropping those words
//! yields a quotient complex. This module computes exact cohomology dimensions
//! of that quotient for every cap up to a bound, tagging each value as stable
//! when it agrees with the previous cap, and can certify that a given closed
//! expression is a coboundary inside the truncated complex.

use super::linalg::{express_in_span, rank_of_rows, SparseRow};
use super::{FreeDgPresentation, PathExpr, VertexId, Word};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TruncError {
    #[error("degree window {0}..={1} is empty")]
    EmptyWindow(i64, i64),
    #[error("length cap must be at least 1")]
    ZeroCap,
    #[error(
        "differential of {0} contains a lazy path; length truncation is not a quotient complex"
    )]
    LazyDifferential(String),
    #[error("arrow degrees are unbounded above; cannot prune word enumeration")]
    PositiveDegreeUnpruned,
    #[error("expression is not closed in the truncated complex (d(x) = {0} ≠ 0)")]
    NotClosed(String),
    #[error("word enumeration exceeded {0} words; tighten the degree window or cap")]
    TooManyWords(usize),
}

/// Bigraded dimension table: `(cohomological degree, length cap) → entry`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BigradedDims {
    pub entries: BTreeMap<(i64, usize), DimEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DimEntry {
    pub dim: usize,
    /// True when the dimension agrees with the value at the previous cap.
    pub stable: bool,
}

impl BigradedDims {
    pub fn dim_at(&self, degree: i64, cap: usize) -> Option<DimEntry> {
        self.entries.get(&(degree, cap)).copied()
    }
}

/// Outcome of [`class_is_coboundary`].
#[derive(Clone, Debug)]
pub struct CoboundaryReport {
    pub is_coboundary: bool,
    /// A primitive `y` with `d(y) = x` in the truncated complex, if found.
    pub preimage: Option<PathExpr>,
    /// The cap the answer was computed at; a negative answer is only
    /// meaningful for classes whose primitives would fit under the cap.
    pub cap: usize,
}

/// Hard ceiling on enumerated words, to fail loudly instead of thrashing.
const WORD_BUDGET: usize = 4_000_000;

/// All composable words of length `1..=cap` whose degree lies in
/// `[deg_lo, deg_hi]`, grouped by `(degree, source, target)`; lazy paths are
/// included when `0 ∈ [deg_lo, deg_hi]`. Requires every arrow degree ≤ 0 so
/// that enumeration can prune once a branch falls below the window.
#[allow(clippy::type_complexity)]
fn enumerate_words(
    p: &FreeDgPresentation,
    cap: usize,
    deg_lo: i64,
    deg_hi: i64,
) -> Result<BTreeMap<(i64, VertexId, VertexId), BTreeMap<Word, usize>>, TruncError> {
    let q = &p.quiver;
    let max_arrow_deg = q.arrows.iter().map(|a| a.degree).max().unwrap_or(0);
    if max_arrow_deg > 0 {
        return Err(TruncError::PositiveDegreeUnpruned);
    }
    // Out-arrows per vertex for the DFS.
    let mut out: Vec<Vec<super::ArrowId>> = vec![Vec::new(); q.vertex_count()];
    for (i, a) in q.arrows.iter().enumerate() {
        out[a.source.0 as usize].push(super::ArrowId(i as u32));
    }
    let mut blocks: BTreeMap<(i64, VertexId, VertexId), BTreeMap<Word, usize>> = BTreeMap::new();
    let mut count = 0usize;
    for v in 0..q.vertex_count() {
        let v = VertexId(v as u32);
        if (deg_lo..=deg_hi).contains(&0) {
            blocks.entry((0, v, v)).or_default().insert(Vec::new(), 0);
            count += 1;
        }
        // Iterative DFS: stack of (word, degree, end vertex).
        let mut stack: Vec<(Word, i64, VertexId)> = vec![(Vec::new(), 0, v)];
        while let Some((word, deg, end)) = stack.pop() {
            if word.len() == cap {
                continue;
            }
            for &a in &out[end.0 as usize] {
                let arr = q.arrow(a);
                let nd = deg + arr.degree;
                // Arrow degrees are ≤ 0, so degree never recovers: prune.
                if nd < deg_lo {
                    continue;
                }
                let mut w = word.clone();
                w.push(a);
                if nd <= deg_hi {
                    blocks
                        .entry((nd, v, arr.target))
                        .or_default()
                        .insert(w.clone(), 0);
                    count += 1;
                    if count > WORD_BUDGET {
                        return Err(TruncError::TooManyWords(WORD_BUDGET));
                    }
                }
                stack.push((w, nd, arr.target));
            }
        }
    }
    // Assign indices in lexicographic word order within each block.
    for block in blocks.values_mut() {
        for (i, slot) in block.values_mut().enumerate() {
            *slot = i;
        }
    }
    Ok(blocks)
}

fn check_no_lazy_differential(p: &FreeDgPresentation) -> Result<(), TruncError> {
    for (i, d) in p.differential.iter().enumerate() {
        if d.terms.keys().any(|w| w.is_empty()) {
            return Err(TruncError::LazyDifferential(
                p.quiver.arrows[i].name.clone(),
            ));
        }
    }
    Ok(())
}

/// The differential of one word as a sparse row over the target block's word
/// indices, dropping words longer than `cap` (the quotient map) and words
/// outside the stored degree range.
fn d_row(
    p: &FreeDgPresentation,
    word: &Word,
    source: VertexId,
    target: VertexId,
    degree: i64,
    cap: usize,
    blocks: &BTreeMap<(i64, VertexId, VertexId), BTreeMap<Word, usize>>,
) -> SparseRow {
    let expr = if word.is_empty() {
        PathExpr::lazy(p.field, source)
    } else {
        PathExpr::monomial(&p.quiver, p.field, word.clone(), p.field.one())
            .expect("enumerated word must be composable")
    };
    let dx = p.d_extend(&expr);
    let mut row = SparseRow::new();
    if let Some(block) = blocks.get(&(degree + 1, source, target)) {
        for (w, c) in &dx.terms {
            if w.len() > cap {
                continue;
            }
            if let Some(&idx) = block.get(w) {
                row.push((idx, c.clone()));
            }
        }
    }
    row.sort_by_key(|(i, _)| *i);
    row
}

/// Cohomology dimensions of the length-truncated quotient complexes for every
/// cap `1..=max_len`, at degrees in `window = [lo, hi]`.
pub fn truncated_cohomology(
    p: &FreeDgPresentation,
    max_len: usize,
    window: (i64, i64),
) -> Result<BigradedDims, TruncError> {
    let (lo, hi) = window;
    if lo > hi {
        return Err(TruncError::EmptyWindow(lo, hi));
    }
    if max_len == 0 {
        return Err(TruncError::ZeroCap);
    }
    check_no_lazy_differential(p)?;
    // Need degree t-1 rows (image into t) and t+1 columns (kernel at t).
    let blocks = enumerate_words(p, max_len, lo - 1, hi + 1)?;

    // For each block and cap: number of words under the cap and the rank of
    // the truncated differential leaving that block.
    let mut dims: BTreeMap<(i64, usize), usize> = BTreeMap::new();
    let mut ranks: BTreeMap<(i64, usize), usize> = BTreeMap::new();
    for ((deg, src, tgt), words) in &blocks {
        // The top stored degree only provides columns for ranks out of the
        // window's top; it is never a source block itself.
        if *deg > hi {
            continue;
        }
        // Precompute full-cap rows once; truncation drops entries per cap.
        let full_rows: Vec<(usize, SparseRow)> = words
            .keys()
            .map(|w| (w.len(), d_row(p, w, *src, *tgt, *deg, max_len, &blocks)))
            .collect();
        // Word lengths of the target block, for per-cap column filtering.
        let target_lens: Vec<usize> = blocks
            .get(&(deg + 1, *src, *tgt))
            .map(|b| b.keys().map(|w| w.len()).collect())
            .unwrap_or_default();
        for cap in 1..=max_len {
            let rows: Vec<SparseRow> = full_rows
                .iter()
                .filter(|(len, _)| *len <= cap)
                .map(|(_, row)| {
                    row.iter()
                        .filter(|(idx, _)| target_lens[*idx] <= cap)
                        .cloned()
                        .collect()
                })
                .collect();
            let n_words = full_rows.iter().filter(|(len, _)| *len <= cap).count();
            *dims.entry((*deg, cap)).or_insert(0) += n_words;
            let r = rank_of_rows(&rows, p.field);
            *ranks.entry((*deg, cap)).or_insert(0) += r;
        }
    }

    let mut out = BigradedDims::default();
    for t in lo..=hi {
        let mut prev: Option<usize> = None;
        for cap in 1..=max_len {
            let c_t = dims.get(&(t, cap)).copied().unwrap_or(0);
            let rank_out = ranks.get(&(t, cap)).copied().unwrap_or(0);
            let rank_in = ranks.get(&(t - 1, cap)).copied().unwrap_or(0);
            let h = c_t
                .checked_sub(rank_out)
                .and_then(|k| k.checked_sub(rank_in))
                .expect("rank exceeds dimension: truncated differential inconsistent");
            let stable = prev == Some(h);
            out.entries.insert((t, cap), DimEntry { dim: h, stable });
            prev = Some(h);
        }
    }
    Ok(out)
}

/// Decide whether the closed expression `x` is a coboundary in the quotient
/// complex at length cap `cap`, producing an explicit primitive on success.
pub fn class_is_coboundary(
    p: &FreeDgPresentation,
    x: &PathExpr,
    cap: usize,
) -> Result<CoboundaryReport, TruncError> {
    if cap == 0 {
        return Err(TruncError::ZeroCap);
    }
    check_no_lazy_differential(p)?;
    let truncate = |e: &PathExpr| e.filter_words(|w| w.len() <= cap);
    let x = truncate(x);
    let dx = truncate(&p.d_extend(&x));
    if !dx.is_zero() {
        return Err(TruncError::NotClosed(dx.render(&p.quiver)));
    }
    // Enumerate candidate primitives: words of degree x.degree - 1 between the
    // same endpoints, plus the degree-x block for column indexing.
    let blocks = enumerate_words(p, cap, x.degree - 1, x.degree)?;
    let x_block = blocks.get(&(x.degree, x.source, x.target));
    let col_of = |w: &Word| x_block.and_then(|b| b.get(w).copied());
    let mut target_row = SparseRow::new();
    for (w, c) in &x.terms {
        match col_of(w) {
            Some(idx) => target_row.push((idx, c.clone())),
            // x contains a word the enumeration missed: impossible for
            // composable words within the cap.
            None => unreachable!("closed expression contains un-enumerated word"),
        }
    }
    target_row.sort_by_key(|(i, _)| *i);

    let candidates: Vec<Word> = blocks
        .get(&(x.degree - 1, x.source, x.target))
        .map(|b| b.keys().cloned().collect())
        .unwrap_or_default();
    let rows: Vec<SparseRow> = candidates
        .iter()
        .map(|w| d_row(p, w, x.source, x.target, x.degree - 1, cap, &blocks))
        .collect();
    match express_in_span(&rows, &target_row, p.field) {
        Some(coeffs) => {
            let mut y = PathExpr::zero(p.field, x.source, x.target, x.degree - 1);
            for (i, c) in coeffs.iter().enumerate() {
                if !c.is_zero() {
                    y.add_term(candidates[i].clone(), c.clone());
                }
            }
            Ok(CoboundaryReport {
                is_coboundary: true,
                preimage: Some(y),
                cap,
            })
        }
        None => Ok(CoboundaryReport {
            is_coboundary: false,
            preimage: None,
            cap,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgalg::GradedQuiver;
    use crate::scalar::Field;

    /// One vertex, arrows `a` (degree 0) and `b` (degree -1) with
    /// `d(b) = [a, a]`: the image of `d` spans `a^k` for `2 ≤ k ≤ cap`, so
    /// H^0 stabilizes to the span of `e` and `a`.
    fn toy() -> FreeDgPresentation {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("v");
        let a = q.add_arrow("a", v, v, 0);
        let b = q.add_arrow("b", v, v, -1);
        let f = Field::Q;
        let mut p = FreeDgPresentation::new(q, f);
        let aa = PathExpr::monomial(&p.quiver, f, vec![a, a], f.one()).unwrap();
        p.set_differential(b, aa).unwrap();
        p
    }

    #[test]
    fn degree_zero_stabilizes_to_two() {
        let p = toy();
        let dims = truncated_cohomology(&p, 6, (-1, 0)).unwrap();
        // Degree-0 words at cap ℓ are e, a, ..., a^ℓ (ℓ+1 of them); the
        // one-b words of length < ℓ hit a^2, ..., a^ℓ, leaving {e, a}.
        let top = dims.dim_at(0, 6).unwrap();
        let prev = dims.dim_at(0, 5).unwrap();
        assert_eq!(top.dim, prev.dim);
        assert!(top.stable);
        assert_eq!(top.dim, 2);
    }

    #[test]
    fn coboundary_certificate_finds_primitive() {
        let p = toy();
        let q = &p.quiver;
        let f = Field::Q;
        let a = q.arrow_by_name("a").unwrap();
        let aa = PathExpr::monomial(q, f, vec![a, a], f.one()).unwrap();
        let report = class_is_coboundary(&p, &aa, 4).unwrap();
        assert!(report.is_coboundary);
        let y = report.preimage.unwrap();
        let dy = p.d_extend(&y).filter_words(|w| w.len() <= 4);
        assert_eq!(dy, aa);
    }

    #[test]
    fn non_coboundary_is_refused() {
        let p = toy();
        let q = &p.quiver;
        let f = Field::Q;
        let a = q.arrow_by_name("a").unwrap();
        let one = PathExpr::monomial(q, f, vec![a], f.one()).unwrap();
        let report = class_is_coboundary(&p, &one, 4).unwrap();
        assert!(!report.is_coboundary);
    }
}
