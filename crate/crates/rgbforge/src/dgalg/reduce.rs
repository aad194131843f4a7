//! Gaussian elimination of contractible generator pairs in free
//! dg-presentations.
//!
//! A pair `(y, x)` with `d(y) = c·x + R`, `c` invertible and `x` absent from
//! `R`, spans an acyclic direct factor.  Dropping both generators and
//! substituting `x ↦ −c⁻¹R` in every remaining differential presents the
//! quotient by the dg-ideal `(y, d y)`, which leaves cohomology unchanged.

use thiserror::Error;

use super::{ArrowId, FreeDgPresentation, GradedQuiver, PathExpr};

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("d({y}) does not contain {x} as a linear term with invertible coefficient")]
    NotLinear { y: String, x: String },
    #[error("{x} reappears in the remainder of d({y}); the pair is not contractible")]
    RemainderContainsTarget { y: String, x: String },
    #[error("{y} appears in d({other}); eliminating the pair would drop terms")]
    EliminatedGeneratorUsed { y: String, other: String },
}

/// Remove the contractible pair `(y, x)` where `d(y) = c·x + R`, rewriting
/// every remaining differential through `x ↦ −c⁻¹R`.  Fails if `x` survives
/// inside `R` or if `y` itself occurs in another differential (then the
/// quotient would not be a quasi-isomorphism).
pub fn eliminate_contractible_pair(
    p: &FreeDgPresentation,
    y: ArrowId,
    x: ArrowId,
) -> Result<FreeDgPresentation, ReduceError> {
    let y_name = p.quiver.arrow(y).name.clone();
    let x_name = p.quiver.arrow(x).name.clone();
    let dy = p.d_of(y);
    let c = dy
        .terms
        .get(&vec![x])
        .cloned()
        .filter(|c| !c.is_zero())
        .ok_or_else(|| ReduceError::NotLinear {
            y: y_name.clone(),
            x: x_name.clone(),
        })?;
    let mut remainder = dy.clone();
    remainder.terms.remove(&vec![x]);
    if remainder.terms.keys().any(|w| w.contains(&x)) {
        return Err(ReduceError::RemainderContainsTarget {
            y: y_name,
            x: x_name,
        });
    }
    for (i, d) in p.differential.iter().enumerate() {
        let id = ArrowId(i as u32);
        if id == x || id == y {
            continue;
        }
        if d.terms.keys().any(|w| w.contains(&y)) {
            return Err(ReduceError::EliminatedGeneratorUsed {
                y: y_name,
                other: p.quiver.arrow(id).name.clone(),
            });
        }
    }

    // Rebuild the quiver without the pair, remembering the index shift.
    let mut quiver = GradedQuiver::new();
    for name in &p.quiver.vertex_names {
        quiver.add_vertex(name.clone());
    }
    let mut new_id = vec![None; p.quiver.arrow_count()];
    for (i, a) in p.quiver.arrows.iter().enumerate() {
        let id = ArrowId(i as u32);
        if id == x || id == y {
            continue;
        }
        new_id[i] = Some(quiver.add_arrow(a.name.clone(), a.source, a.target, a.degree));
    }

    // The substitute for `x`, written in the new quiver's arrow indices.
    let x_arrow = p.quiver.arrow(x);
    let mut substitute = PathExpr::zero(p.field, x_arrow.source, x_arrow.target, x_arrow.degree);
    let scale = c.inv().neg();
    for (w, coeff) in &remainder.terms {
        let mapped: Vec<ArrowId> = w.iter().map(|a| new_id[a.0 as usize].unwrap()).collect();
        substitute.add_term(mapped, coeff.mul(&scale));
    }

    let mut out = FreeDgPresentation::new(quiver, p.field);
    for (i, d) in p.differential.iter().enumerate() {
        let id = ArrowId(i as u32);
        if id == x || id == y || d.is_zero() {
            continue;
        }
        let a = out.quiver.arrow(new_id[i].unwrap()).clone();
        let mut image = PathExpr::zero(p.field, a.source, a.target, a.degree + 1);
        for (w, coeff) in &d.terms {
            // Substitution is an algebra map by equal-degree expressions, so
            // no Koszul signs appear; expand occurrences of `x` in place.
            let source = if w.is_empty() {
                image.source
            } else {
                p.quiver.arrow(w[0]).source
            };
            let mut acc = PathExpr::lazy(p.field, source);
            for &letter in w {
                let factor = if letter == x {
                    substitute.clone()
                } else {
                    let m = new_id[letter.0 as usize].unwrap();
                    let la = out.quiver.arrow(m);
                    PathExpr::monomial(&out.quiver, p.field, vec![m], p.field.one())
                        .unwrap_or_else(|_| {
                            PathExpr::zero(p.field, la.source, la.target, la.degree)
                        })
                };
                acc = PathExpr::mul(&factor, &acc);
            }
            image.add_assign(&acc.scaled(coeff));
        }
        out.set_differential(new_id[i].unwrap(), image)
            .expect("substituted differential stays parallel");
    }
    Ok(out)
}
