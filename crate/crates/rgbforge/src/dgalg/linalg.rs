//! Sparse exact Gaussian elimination over the crate's scalar fields.
//!
//! Rows are kept as sorted sparse vectors of `(column, coefficient)` pairs.
//! Elimination is plain row reduction with exact division (valid over any
//! field); pivot rows are chosen shortest-first to limit fill-in, and the
//! reduction order is fully deterministic so ranks and solutions are
//! reproducible byte-for-byte.

use crate::scalar::{Field, Scalar};

/// One sparse row: strictly increasing column indices, nonzero coefficients.
pub type SparseRow = Vec<(usize, Scalar)>;

/// A sparse matrix acting on column vectors: `rows x cols`.
#[derive(Clone, Debug)]
pub struct SparseMat {
    pub rows: usize,
    pub cols: usize,
    pub field: Field,
    pub entries: Vec<SparseRow>,
}

impl SparseMat {
    pub fn new(rows: usize, cols: usize, field: Field) -> Self {
        SparseMat {
            rows,
            cols,
            field,
            entries: vec![Vec::new(); rows],
        }
    }

    /// Set one entry; duplicate columns within a row are summed.
    pub fn add_entry(&mut self, row: usize, col: usize, value: Scalar) {
        if value.is_zero() {
            return;
        }
        debug_assert!(row < self.rows && col < self.cols);
        let r = &mut self.entries[row];
        match r.binary_search_by_key(&col, |e| e.0) {
            Ok(i) => {
                let sum = r[i].1.add(&value);
                if sum.is_zero() {
                    r.remove(i);
                } else {
                    r[i].1 = sum;
                }
            }
            Err(i) => r.insert(i, (col, value)),
        }
    }

    /// The rank of the matrix, computed by destructive elimination on a clone.
    pub fn rank(&self) -> usize {
        eliminate(self.entries.clone(), self.field).len()
    }
}

/// Add `coeff * src` into `dst`, keeping `dst` sorted and nonzero-only.
pub fn axpy(dst: &mut SparseRow, coeff: &Scalar, src: &SparseRow) {
    if coeff.is_zero() || src.is_empty() {
        return;
    }
    let mut out: SparseRow = Vec::with_capacity(dst.len() + src.len());
    let (mut i, mut j) = (0, 0);
    while i < dst.len() || j < src.len() {
        match (dst.get(i), src.get(j)) {
            (Some((c1, v1)), Some((c2, v2))) if c1 == c2 => {
                let v = v1.add(&coeff.mul(v2));
                if !v.is_zero() {
                    out.push((*c1, v));
                }
                i += 1;
                j += 1;
            }
            (Some((c1, v1)), Some((c2, _))) if c1 < c2 => {
                out.push((*c1, v1.clone()));
                i += 1;
            }
            (Some(_), Some((c2, v2))) => {
                out.push((*c2, coeff.mul(v2)));
                j += 1;
            }
            (Some((c1, v1)), None) => {
                out.push((*c1, v1.clone()));
                i += 1;
            }
            (None, Some((c2, v2))) => {
                out.push((*c2, coeff.mul(v2)));
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    *dst = out;
}

/// Reduce `rows` to an echelon basis: returns pivot rows, each scaled to a
/// unit leading coefficient, with strictly increasing leading columns kept in
/// a deterministic order. The number of returned rows is the rank.
fn eliminate(rows: Vec<SparseRow>, _field: Field) -> Vec<SparseRow> {
    // pivots[k] = (leading column, row); kept sorted by leading column.
    let mut pivots: Vec<(usize, SparseRow)> = Vec::new();
    // Process shorter rows first: with +-1 structure constants this keeps
    // intermediate rows short. Ties broken by original index (determinism).
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| (rows[i].len(), i));
    for idx in order {
        let mut row = rows[idx].clone();
        loop {
            let Some((lead_col, lead_val)) = row.first().cloned() else {
                break; // reduced to zero
            };
            match pivots.binary_search_by_key(&lead_col, |p| p.0) {
                Ok(k) => {
                    // Cancel the leading term against the established pivot.
                    let pivot_row = pivots[k].1.clone();
                    axpy(&mut row, &lead_val.neg(), &pivot_row);
                }
                Err(k) => {
                    // New pivot: normalize to leading coefficient 1.
                    let inv = lead_val.inv();
                    for e in row.iter_mut() {
                        e.1 = e.1.mul(&inv);
                    }
                    pivots.insert(k, (lead_col, row));
                    break;
                }
            }
        }
    }
    pivots.into_iter().map(|p| p.1).collect()
}

/// Rank of a collection of sparse rows (the span's dimension).
pub fn rank_of_rows(rows: &[SparseRow], field: Field) -> usize {
    eliminate(rows.to_vec(), field).len()
}

/// Solve `x * M = target` for `x` given as a row-space membership problem:
/// returns coefficients expressing `target` as a linear combination of `rows`,
/// or `None` when `target` is outside the span.
pub fn express_in_span(
    rows: &[SparseRow],
    target: &SparseRow,
    field: Field,
) -> Option<Vec<Scalar>> {
    // Augment each row with a unit bookkeeping column to read off coefficients.
    let n = rows.len();
    let shift = |r: &SparseRow, tag: Option<usize>, cols: usize| -> SparseRow {
        let mut v = r.clone();
        if let Some(t) = tag {
            v.push((cols + t, field.one()));
        }
        v
    };
    // Bookkeeping columns start after the real ones.
    let cols = rows
        .iter()
        .chain(std::iter::once(target))
        .flat_map(|r| r.iter().map(|e| e.0 + 1))
        .max()
        .unwrap_or(0);
    let mut pivots: Vec<(usize, SparseRow)> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let mut row = shift(r, Some(i), cols);
        loop {
            let Some((lead_col, lead_val)) = row.first().cloned() else {
                break;
            };
            if lead_col >= cols {
                break; // row dependent on earlier ones; bookkeeping tail only
            }
            match pivots.binary_search_by_key(&lead_col, |p| p.0) {
                Ok(k) => {
                    let pr = pivots[k].1.clone();
                    axpy(&mut row, &lead_val.neg(), &pr);
                }
                Err(k) => {
                    let inv = lead_val.inv();
                    for e in row.iter_mut() {
                        e.1 = e.1.mul(&inv);
                    }
                    pivots.insert(k, (lead_col, row));
                    break;
                }
            }
        }
    }
    // Reduce the target against the pivots; if the real part vanishes the
    // bookkeeping tail holds the negated combination.
    let mut row = shift(target, None, cols);
    loop {
        let Some((lead_col, lead_val)) = row.first().cloned() else {
            break;
        };
        if lead_col >= cols {
            break;
        }
        match pivots.binary_search_by_key(&lead_col, |p| p.0) {
            Ok(k) => {
                let pr = pivots[k].1.clone();
                axpy(&mut row, &lead_val.neg(), &pr);
            }
            Err(_) => return None, // leading term not killable
        }
    }
    if row.iter().any(|(c, _)| *c < cols) {
        return None;
    }
    let mut coeffs = vec![field.zero(); n];
    for (c, v) in row {
        coeffs[c - cols] = v.neg();
    }
    Some(coeffs)
}

/// Dimensions of kernel and image of a linear map given by rows
/// (`map(basis_i) = entries[i]` expressed in the target basis).
pub fn kernel_image_dims(rows: &[SparseRow], domain_dim: usize, field: Field) -> (usize, usize) {
    debug_assert_eq!(rows.len(), domain_dim);
    let rank = rank_of_rows(rows, field);
    (domain_dim - rank, rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> Scalar {
        Field::Q.from_i64(v)
    }

    #[test]
    fn rank_small_dense() {
        let mut m = SparseMat::new(3, 3, Field::Q);
        // Rows: (1,2,3), (2,4,6), (0,1,1) -> rank 2.
        for (c, v) in [(0, 1), (1, 2), (2, 3)] {
            m.add_entry(0, c, q(v));
        }
        for (c, v) in [(0, 2), (1, 4), (2, 6)] {
            m.add_entry(1, c, q(v));
        }
        for (c, v) in [(1, 1), (2, 1)] {
            m.add_entry(2, c, q(v));
        }
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn rank_matches_fp() {
        // Same integer matrix over Q and F_101 has equal rank when 101 is
        // coprime to all pivots, which holds for this +-1 matrix. The third
        // row is the sum of the first two, so the rank is 2 in both fields.
        let rows_q: Vec<SparseRow> = vec![
            vec![(0, q(1)), (2, q(-1))],
            vec![(1, q(1)), (2, q(1))],
            vec![(0, q(1)), (1, q(1))],
        ];
        let f = Field::Fp(101);
        let rows_p: Vec<SparseRow> = rows_q
            .iter()
            .map(|r| {
                r.iter()
                    .map(|(c, v)| {
                        (
                            *c,
                            f.from_i64(if v.is_negative_rational() { -1 } else { 1 }),
                        )
                    })
                    .collect()
            })
            .collect();
        assert_eq!(rank_of_rows(&rows_q, Field::Q), 2);
        assert_eq!(rank_of_rows(&rows_p, f), 2);
    }

    #[test]
    fn express_in_span_finds_combination() {
        let rows: Vec<SparseRow> = vec![
            vec![(0, q(1)), (1, q(1))],
            vec![(1, q(1)), (2, q(1))],
        ];
        let target: SparseRow = vec![(0, q(2)), (1, q(1)), (2, q(-1))];
        let coeffs = express_in_span(&rows, &target, Field::Q).expect("in span");
        assert_eq!(coeffs, vec![q(2), q(-1)]);
        let outside: SparseRow = vec![(3, q(1))];
        assert!(express_in_span(&rows, &outside, Field::Q).is_none());
    }

    #[test]
    fn kernel_image_adds_up() {
        let rows: Vec<SparseRow> = vec![
            vec![(0, q(1))],
            vec![(0, q(-1))],
            vec![],
        ];
        let (k, i) = kernel_image_dims(&rows, 3, Field::Q);
        assert_eq!((k, i), (2, 1));
    }
}
