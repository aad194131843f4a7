//! Algebra engine: graded quivers, exact path expressions, free dg-presentations
//! with Leibniz extension, rewriting, finite-dimensional dg-algebras, and exact
//! (full and length-truncated) cohomology.
//!
//! # Conventions
//!
//! Words are stored in *diagrammatic* order: `word[0]` is the first arrow
//! traversed, so a word `[x, y]` is the composite "do `x`, then `y`" and equals
//! the function composition `y ∘ x`. [`PathExpr::mul`] takes its arguments in
//! function order (`mul(f, g)` = "g first, then f") and therefore concatenates
//! `g`'s words before `f`'s.
//!
//! The differential obeys the graded Leibniz rule with Koszul signs: replacing
//! the arrow at diagrammatic position `i` picks up the sign `(-1)^s` where `s`
//! is the sum of the degrees of the letters *after* position `i` (those are the
//! factors the differential moved past, reading in function order).

pub mod findim;
pub mod linalg;
pub mod reduce;
pub mod rewrite;
pub mod truncated;

use crate::scalar::{Field, Scalar};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Index of a vertex in a [`GradedQuiver`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub u32);

/// Index of an arrow in a [`GradedQuiver`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArrowId(pub u32);

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for ArrowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// A generator of a graded quiver.
#[derive(Clone, Debug)]
pub struct Arrow {
    pub name: String,
    pub source: VertexId,
    pub target: VertexId,
    pub degree: i64,
}

/// A finite quiver with integer-graded arrows.
#[derive(Clone, Debug, Default)]
pub struct GradedQuiver {
    pub vertex_names: Vec<String>,
    pub arrows: Vec<Arrow>,
}

impl GradedQuiver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, name: impl Into<String>) -> VertexId {
        self.vertex_names.push(name.into());
        VertexId(self.vertex_names.len() as u32 - 1)
    }

    pub fn add_arrow(
        &mut self,
        name: impl Into<String>,
        source: VertexId,
        target: VertexId,
        degree: i64,
    ) -> ArrowId {
        assert!((source.0 as usize) < self.vertex_names.len());
        assert!((target.0 as usize) < self.vertex_names.len());
        self.arrows.push(Arrow {
            name: name.into(),
            source,
            target,
            degree,
        });
        ArrowId(self.arrows.len() as u32 - 1)
    }

    pub fn arrow(&self, id: ArrowId) -> &Arrow {
        &self.arrows[id.0 as usize]
    }

    pub fn rename_arrow(&mut self, id: ArrowId, name: impl Into<String>) {
        self.arrows[id.0 as usize].name = name.into();
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn arrow_count(&self) -> usize {
        self.arrows.len()
    }

    /// Look up an arrow by display name (linear scan; quivers are small).
    pub fn arrow_by_name(&self, name: &str) -> Option<ArrowId> {
        self.arrows
            .iter()
            .position(|a| a.name == name)
            .map(|i| ArrowId(i as u32))
    }

    /// Arrows listed source-first: `word[k]`'s target must equal `word[k+1]`'s source.
    pub fn is_composable(&self, word: &[ArrowId]) -> bool {
        word.windows(2)
            .all(|w| self.arrow(w[0]).target == self.arrow(w[1]).source)
    }

    pub fn word_degree(&self, word: &[ArrowId]) -> i64 {
        word.iter().map(|&a| self.arrow(a).degree).sum()
    }

    /// Human-readable rendering of a word in function order (last-traversed
    /// first), with immediate repetitions collapsed into powers:
    /// `[a, a, a]` renders as `a^3` and `[b, t]` as `t*b`.
    pub fn render_word(&self, word: &[ArrowId]) -> String {
        if word.is_empty() {
            return "1".to_string();
        }
        let mut runs: Vec<(ArrowId, usize)> = Vec::new();
        for &a in word.iter().rev() {
            match runs.last_mut() {
                Some((prev, count)) if *prev == a => *count += 1,
                _ => runs.push((a, 1)),
            }
        }
        runs.iter()
            .map(|&(a, count)| {
                let name = &self.arrow(a).name;
                if count == 1 {
                    name.clone()
                } else {
                    format!("{name}^{count}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }
}

/// A word of composable arrows in diagrammatic order (first-traversed first).
pub type Word = Vec<ArrowId>;

/// Errors raised by path-expression and presentation construction.
#[derive(Debug, Error)]
pub enum PathError {
    #[error("word is not composable in the quiver")]
    NotComposable,
    #[error("path endpoints or degrees are inhomogeneous: {0}")]
    Inhomogeneous(String),
    #[error("differential of {arrow:?} must have degree {expected}, got {got}")]
    DifferentialDegree {
        arrow: String,
        expected: i64,
        got: i64,
    },
    #[error("differential of {arrow:?} must be parallel to it (same source and target)")]
    DifferentialEndpoints { arrow: String },
}

/// A finite exact-scalar linear combination of parallel words.
///
/// All words share the same source, target, and total degree; the zero
/// expression keeps those annotations so linear algebra stays typed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathExpr {
    pub field: Field,
    pub source: VertexId,
    pub target: VertexId,
    pub degree: i64,
    pub terms: BTreeMap<Word, Scalar>,
}

impl PathExpr {
    pub fn zero(field: Field, source: VertexId, target: VertexId, degree: i64) -> Self {
        PathExpr {
            field,
            source,
            target,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// The lazy path `e_v`: the empty word at a vertex, degree 0.
    pub fn lazy(field: Field, v: VertexId) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Vec::new(), field.one());
        PathExpr {
            field,
            source: v,
            target: v,
            degree: 0,
            terms,
        }
    }

    /// A single word with coefficient; endpoints and degree read off the quiver.
    pub fn monomial(
        quiver: &GradedQuiver,
        field: Field,
        word: Word,
        coeff: Scalar,
    ) -> Result<Self, PathError> {
        if word.is_empty() {
            return Err(PathError::Inhomogeneous(
                "empty word needs a vertex; use PathExpr::lazy".into(),
            ));
        }
        if !quiver.is_composable(&word) {
            return Err(PathError::NotComposable);
        }
        let source = quiver.arrow(word[0]).source;
        let target = quiver.arrow(*word.last().unwrap()).target;
        let degree = quiver.word_degree(&word);
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(word, coeff);
        }
        Ok(PathExpr {
            field,
            source,
            target,
            degree,
            terms,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Add a single (word, coefficient) term in place, canceling to zero.
    pub fn add_term(&mut self, word: Word, coeff: Scalar) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.get_mut(&word) {
            Some(c) => {
                let sum = c.add(&coeff);
                if sum.is_zero() {
                    self.terms.remove(&word);
                } else {
                    *c = sum;
                }
            }
            None => {
                self.terms.insert(word, coeff);
            }
        }
    }

    /// Add another parallel expression in place; panics on type mismatch
    /// (all callers combine expressions they constructed with equal types).
    pub fn add_assign(&mut self, other: &PathExpr) {
        assert_eq!(
            (self.source, self.target, self.degree),
            (other.source, other.target, other.degree),
            "adding non-parallel path expressions"
        );
        for (w, c) in &other.terms {
            self.add_term(w.clone(), c.clone());
        }
    }

    pub fn scaled(&self, s: &Scalar) -> PathExpr {
        let mut out = PathExpr::zero(self.field, self.source, self.target, self.degree);
        if s.is_zero() {
            return out;
        }
        for (w, c) in &self.terms {
            out.terms.insert(w.clone(), c.mul(s));
        }
        out
    }

    pub fn negated(&self) -> PathExpr {
        self.scaled(&self.field.from_i64(-1))
    }

    /// Function-order product `f ∘ g` ("apply g, then f"): requires
    /// `g.target == f.source`; words concatenate as `g.word ++ f.word`.
    pub fn mul(f: &PathExpr, g: &PathExpr) -> PathExpr {
        assert_eq!(
            g.target, f.source,
            "non-composable product of path expressions"
        );
        let mut out = PathExpr::zero(f.field, g.source, f.target, f.degree + g.degree);
        for (wf, cf) in &f.terms {
            for (wg, cg) in &g.terms {
                let mut w = wg.clone();
                w.extend_from_slice(wf);
                out.add_term(w, cf.mul(cg));
            }
        }
        out
    }

    /// Apply a per-word transformation (used by quotient/truncation maps);
    /// words mapped to `None` are dropped.
    pub fn filter_words(&self, mut keep: impl FnMut(&Word) -> bool) -> PathExpr {
        let mut out = PathExpr::zero(self.field, self.source, self.target, self.degree);
        for (w, c) in &self.terms {
            if keep(w) {
                out.terms.insert(w.clone(), c.clone());
            }
        }
        out
    }

    /// Render like `3*t1*a12 - a11^2` (function-order words).
    pub fn render(&self, quiver: &GradedQuiver) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let word_s = quiver.render_word(w);
            let (sign, mag) = if c.is_negative_rational() {
                ("-", c.neg())
            } else {
                ("+", c.clone())
            };
            if i == 0 {
                if sign == "-" {
                    out.push('-');
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            if mag.is_one() {
                out.push_str(&word_s);
            } else {
                out.push_str(&format!("{}*{}", mag.to_coeff_string(), word_s));
            }
        }
        out
    }
}

/// A free dg-algebra presentation: a graded quiver plus a differential on
/// generators, extended everywhere by the Leibniz rule.
#[derive(Clone, Debug)]
pub struct FreeDgPresentation {
    pub quiver: GradedQuiver,
    pub field: Field,
    /// `differential[a]` is `d` of arrow `a`; zero by default.
    pub differential: Vec<PathExpr>,
}

impl FreeDgPresentation {
    pub fn new(quiver: GradedQuiver, field: Field) -> Self {
        let differential = quiver
            .arrows
            .iter()
            .map(|a| PathExpr::zero(field, a.source, a.target, a.degree + 1))
            .collect();
        FreeDgPresentation {
            quiver,
            field,
            differential,
        }
    }

    /// Install `d(arrow) = value`, validating endpoint and degree typing.
    pub fn set_differential(&mut self, arrow: ArrowId, value: PathExpr) -> Result<(), PathError> {
        let a = self.quiver.arrow(arrow);
        if value.source != a.source || value.target != a.target {
            return Err(PathError::DifferentialEndpoints {
                arrow: a.name.clone(),
            });
        }
        if value.degree != a.degree + 1 {
            return Err(PathError::DifferentialDegree {
                arrow: a.name.clone(),
                expected: a.degree + 1,
                got: value.degree,
            });
        }
        self.differential[arrow.0 as usize] = value;
        Ok(())
    }

    pub fn d_of(&self, arrow: ArrowId) -> &PathExpr {
        &self.differential[arrow.0 as usize]
    }

    /// Extend the differential to an arbitrary expression by the graded
    /// Leibniz rule with Koszul signs (see the module docs for the sign
    /// convention on diagrammatic words). Homogeneity is guaranteed by the
    /// [`PathExpr`] type; the output degree is `x.degree + 1`.
    pub fn d_extend(&self, x: &PathExpr) -> PathExpr {
        let mut out = PathExpr::zero(self.field, x.source, x.target, x.degree + 1);
        for (word, coeff) in &x.terms {
            // Degrees of the suffix after each position, for the Koszul sign.
            let mut suffix_deg = vec![0i64; word.len() + 1];
            for i in (0..word.len()).rev() {
                suffix_deg[i] = suffix_deg[i + 1] + self.quiver.arrow(word[i]).degree;
            }
            for (i, &a) in word.iter().enumerate() {
                let da = self.d_of(a);
                if da.is_zero() {
                    continue;
                }
                let sign = self.field.sign(suffix_deg[i + 1]);
                for (dw, dc) in &da.terms {
                    let mut w = Vec::with_capacity(word.len() - 1 + dw.len());
                    w.extend_from_slice(&word[..i]);
                    w.extend_from_slice(dw);
                    w.extend_from_slice(&word[i + 1..]);
                    out.add_term(w, coeff.mul(&sign).mul(dc));
                }
            }
        }
        out
    }

    /// Verify `d² = 0` on every generator (in the free algebra: literal
    /// cancellation of terms).
    pub fn check_d_squared(&self) -> DSquaredReport {
        let mut failures = Vec::new();
        for (i, da) in self.differential.iter().enumerate() {
            let dda = self.d_extend(da);
            if !dda.is_zero() {
                failures.push((ArrowId(i as u32), dda));
            }
        }
        DSquaredReport { failures }
    }

    /// Serializable dump (quiver plus differential table); deterministic:
    /// keys sorted, words listed first-traversed-first.
    pub fn dump(&self) -> PresentationDump {
        PresentationDump {
            quiver: QuiverDump {
                vertices: self.quiver.vertex_names.clone(),
                arrows: self
                    .quiver
                    .arrows
                    .iter()
                    .map(|a| ArrowDump {
                        name: a.name.clone(),
                        source: self.quiver.vertex_names[a.source.0 as usize].clone(),
                        target: self.quiver.vertex_names[a.target.0 as usize].clone(),
                        degree: a.degree,
                    })
                    .collect(),
            },
            differential: self
                .quiver
                .arrows
                .iter()
                .enumerate()
                .filter(|(i, _)| !self.differential[*i].is_zero())
                .map(|(i, a)| {
                    let expr = &self.differential[i];
                    let terms = expr
                        .terms
                        .iter()
                        .map(|(w, c)| {
                            (
                                c.to_coeff_string(),
                                w.iter()
                                    .map(|&x| self.quiver.arrow(x).name.clone())
                                    .collect(),
                            )
                        })
                        .collect();
                    (a.name.clone(), terms)
                })
                .collect(),
        }
    }
}

/// Outcome of [`FreeDgPresentation::check_d_squared`].
#[derive(Clone, Debug)]
pub struct DSquaredReport {
    /// Arrows whose `d(d(a))` did not cancel, with the offending expression.
    pub failures: Vec<(ArrowId, PathExpr)>,
}

impl DSquaredReport {
    pub fn is_pass(&self) -> bool {
        self.failures.is_empty()
    }
}

/// JSON-facing dump of a presentation (External interchange format).
#[derive(Clone, Debug, Serialize)]
pub struct PresentationDump {
    pub quiver: QuiverDump,
    /// arrow name → list of (coefficient string, word as arrow names).
    pub differential: BTreeMap<String, Vec<(String, Vec<String>)>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct QuiverDump {
    pub vertices: Vec<String>,
    pub arrows: Vec<ArrowDump>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ArrowDump {
    pub name: String,
    pub source: String,
    pub target: String,
    pub degree: i64,
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two-vertex quiver with `x: v0 -> v1` (degree 1), `y: v1 -> v0`
    /// (degree 0) and a degree-0 loop `z: v0 -> v0` with `d(z) = [x, y]`.
    fn sample() -> (FreeDgPresentation, ArrowId, ArrowId, ArrowId) {
        let mut q = GradedQuiver::new();
        let v0 = q.add_vertex("v0");
        let v1 = q.add_vertex("v1");
        let x = q.add_arrow("x", v0, v1, 1);
        let y = q.add_arrow("y", v1, v0, 0);
        let z = q.add_arrow("z", v0, v0, 0);
        let field = Field::Q;
        let mut p = FreeDgPresentation::new(q, field);
        let word = PathExpr::monomial(&p.quiver, field, vec![x, y], field.one()).unwrap();
        assert_eq!(word.degree, 1);
        p.set_differential(z, word).unwrap();
        (p, x, y, z)
    }

    #[test]
    fn lazy_paths_are_closed() {
        let (p, ..) = sample();
        let e = PathExpr::lazy(Field::Q, VertexId(0));
        assert!(p.d_extend(&e).is_zero());
    }

    #[test]
    fn leibniz_signs_use_suffix_degrees() {
        let (p, x, y, z) = sample();
        let f = Field::Q;
        // d([z, x]) = [d(z), x] + (-1)^{|x| suffix? } ...
        // word [z, x]: position 0 = z (suffix degree |x| = 1), position 1 = x (suffix 0).
        // d(z) = [x,y], d(x) = 0, so d([z,x]) = (-1)^1 [x,y,x].
        let zx = PathExpr::monomial(&p.quiver, f, vec![z, x], f.one()).unwrap();
        let d = p.d_extend(&zx);
        let expected =
            PathExpr::monomial(&p.quiver, f, vec![x, y, x], f.from_i64(-1)).unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn d_squared_detects_failures() {
        let (p, ..) = sample();
        // d(z) = xy with d(x) = d(y) = 0, so d^2 = 0 here.
        assert!(p.check_d_squared().is_pass());
    }

    #[test]
    fn differential_typing_is_enforced() {
        let (mut p, x, _, z) = sample();
        let f = Field::Q;
        let bad = PathExpr::monomial(&p.quiver, f, vec![x], f.one()).unwrap();
        // x: v0 -> v1 is not parallel to z: v0 -> v0.
        assert!(matches!(
            p.set_differential(z, bad),
            Err(PathError::DifferentialEndpoints { .. })
        ));
    }

    #[test]
    fn mul_concatenates_in_function_order() {
        let (p, x, y, _) = sample();
        let f = Field::Q;
        let fx = PathExpr::monomial(&p.quiver, f, vec![x], f.one()).unwrap();
        let fy = PathExpr::monomial(&p.quiver, f, vec![y], f.one()).unwrap();
        // y ∘ x: traverse x first.
        let prod = PathExpr::mul(&fy, &fx);
        assert_eq!(prod.terms.keys().next().unwrap(), &vec![x, y]);
        assert_eq!(prod.source, VertexId(0));
        assert_eq!(prod.target, VertexId(0));
    }

    #[test]
    fn render_collapses_powers() {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("e1");
        let a = q.add_arrow("a11", v, v, 1);
        let t = q.add_arrow("t1", v, v, 0);
        let f = Field::Q;
        let w = PathExpr::monomial(&q, f, vec![a, a, a], f.one()).unwrap();
        assert_eq!(w.render(&q), "a11^3");
        let w2 = PathExpr::monomial(&q, f, vec![a, t], f.from_i64(-1)).unwrap();
        assert_eq!(w2.render(&q), "-t1*a11");
    }
}
