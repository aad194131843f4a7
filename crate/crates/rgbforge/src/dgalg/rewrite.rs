//! Subword rewriting for path algebras presented by relations.
//!
//! A [`RewriteRule`] replaces one composable word by a linear combination of
//! parallel words wherever it occurs as a contiguous subword. Reduction is
//! deterministic: the leftmost matching position wins, and at a fixed position
//! the first matching rule in the system's order wins. Step and length caps
//! turn accidental non-termination into a hard error instead of a hang.

use super::{GradedQuiver, PathExpr, Word};
use crate::scalar::{Field, Scalar};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RewriteError {
    #[error("rewriting exceeded {0} steps; rule system is likely non-terminating")]
    StepCap(usize),
    #[error("rewriting produced a word longer than {0}; rule system is likely non-terminating")]
    LengthCap(usize),
    #[error("rewrite rule is ill-typed: {0}")]
    IllTyped(String),
}

/// One oriented relation `lhs -> Σ c_i · rhs_i` between parallel words.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub lhs: Word,
    pub rhs: Vec<(Scalar, Word)>,
}

/// An ordered list of rules with safety caps.
#[derive(Clone, Debug)]
pub struct RewriteSystem {
    pub rules: Vec<RewriteRule>,
    pub max_len: usize,
    pub max_steps: usize,
}

impl RewriteSystem {
    /// Build a system, validating that every rule rewrites a composable word
    /// into parallel composable words of the same degree.
    pub fn new(
        quiver: &GradedQuiver,
        rules: Vec<RewriteRule>,
        max_len: usize,
        max_steps: usize,
    ) -> Result<Self, RewriteError> {
        for rule in &rules {
            if rule.lhs.is_empty() {
                return Err(RewriteError::IllTyped("empty left-hand side".into()));
            }
            if !quiver.is_composable(&rule.lhs) {
                return Err(RewriteError::IllTyped(format!(
                    "left-hand side {:?} is not composable",
                    rule.lhs
                )));
            }
            let src = quiver.arrow(rule.lhs[0]).source;
            let tgt = quiver.arrow(*rule.lhs.last().unwrap()).target;
            let deg = quiver.word_degree(&rule.lhs);
            for (_, w) in &rule.rhs {
                if w.is_empty() {
                    if src != tgt || deg != 0 {
                        return Err(RewriteError::IllTyped(
                            "lazy-path right-hand side must be a degree-0 loop".into(),
                        ));
                    }
                    continue;
                }
                if !quiver.is_composable(w) {
                    return Err(RewriteError::IllTyped(format!(
                        "right-hand side {w:?} is not composable"
                    )));
                }
                let ok = quiver.arrow(w[0]).source == src
                    && quiver.arrow(*w.last().unwrap()).target == tgt
                    && quiver.word_degree(w) == deg;
                if !ok {
                    return Err(RewriteError::IllTyped(format!(
                        "right-hand side {w:?} is not parallel to its left-hand side"
                    )));
                }
            }
        }
        Ok(RewriteSystem {
            rules,
            max_len,
            max_steps,
        })
    }

    /// First redex in `word`: smallest starting position, then smallest rule
    /// index whose left-hand side occurs there.
    fn find_redex(&self, word: &[super::ArrowId]) -> Option<(usize, usize)> {
        for pos in 0..word.len() {
            for (ri, rule) in self.rules.iter().enumerate() {
                let l = rule.lhs.len();
                if pos + l <= word.len() && word[pos..pos + l] == rule.lhs[..] {
                    return Some((pos, ri));
                }
            }
        }
        None
    }

    /// Whether a word contains no redex.
    pub fn is_irreducible(&self, word: &[super::ArrowId]) -> bool {
        self.find_redex(word).is_none()
    }

    /// Whether some rule's left-hand side is a suffix of `word` (used to prune
    /// word enumeration: every extension of such a word stays reducible).
    pub fn has_redex_suffix(&self, word: &[super::ArrowId]) -> bool {
        self.rules.iter().any(|rule| {
            let l = rule.lhs.len();
            l <= word.len() && word[word.len() - l..] == rule.lhs[..]
        })
    }

    /// Reduce a single word (with coefficient 1) to its normal form as a
    /// linear combination of irreducible words.
    pub fn normal_form_word(
        &self,
        quiver: &GradedQuiver,
        field: Field,
        word: &Word,
    ) -> Result<PathExpr, RewriteError> {
        let expr = if word.is_empty() {
            return Err(RewriteError::IllTyped(
                "normal_form_word needs a nonempty word; lazy paths are already normal".into(),
            ));
        } else {
            PathExpr::monomial(quiver, field, word.clone(), field.one())
                .map_err(|e| RewriteError::IllTyped(e.to_string()))?
        };
        self.normal_form(&expr)
    }

    /// Reduce every word of an expression to normal form and combine.
    pub fn normal_form(&self, expr: &PathExpr) -> Result<PathExpr, RewriteError> {
        let mut out = PathExpr::zero(expr.field, expr.source, expr.target, expr.degree);
        let mut work: Vec<(Scalar, Word)> = expr
            .terms
            .iter()
            .map(|(w, c)| (c.clone(), w.clone()))
            .collect();
        let mut steps = 0usize;
        while let Some((coeff, word)) = work.pop() {
            match self.find_redex(&word) {
                None => out.add_term(word, coeff),
                Some((pos, ri)) => {
                    steps += 1;
                    if steps > self.max_steps {
                        return Err(RewriteError::StepCap(self.max_steps));
                    }
                    let rule = &self.rules[ri];
                    for (rc, rw) in &rule.rhs {
                        let mut w = Vec::with_capacity(word.len() - rule.lhs.len() + rw.len());
                        w.extend_from_slice(&word[..pos]);
                        w.extend_from_slice(rw);
                        w.extend_from_slice(&word[pos + rule.lhs.len()..]);
                        if w.len() > self.max_len {
                            return Err(RewriteError::LengthCap(self.max_len));
                        }
                        work.push((coeff.mul(rc), w));
                    }
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgalg::GradedQuiver;

    /// One vertex, one degree-0 loop `a` with the rule `a^3 -> -a`.
    #[test]
    fn normal_forms_terminate_and_combine() {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("v");
        let a = q.add_arrow("a", v, v, 0);
        let f = Field::Q;
        let rules = vec![RewriteRule {
            lhs: vec![a, a, a],
            rhs: vec![(f.from_i64(-1), vec![a])],
        }];
        let sys = RewriteSystem::new(&q, rules, 64, 10_000).unwrap();
        // a^5 -> -a^3 -> +a
        let nf = sys.normal_form_word(&q, f, &vec![a; 5]).unwrap();
        let expected = PathExpr::monomial(&q, f, vec![a], f.one()).unwrap();
        assert_eq!(nf, expected);
        assert!(sys.is_irreducible(&[a, a]));
        assert!(!sys.is_irreducible(&[a, a, a, a]));
        assert!(sys.has_redex_suffix(&[a, a, a]));
        assert!(!sys.has_redex_suffix(&[a, a]));
    }

    /// Rules rewriting to zero drop words entirely.
    #[test]
    fn zero_rules_annihilate() {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("v");
        let t = q.add_arrow("t", v, v, 1);
        let f = Field::Q;
        let rules = vec![RewriteRule {
            lhs: vec![t, t],
            rhs: vec![],
        }];
        let sys = RewriteSystem::new(&q, rules, 64, 10_000).unwrap();
        let nf = sys.normal_form_word(&q, f, &vec![t, t, t]).unwrap();
        assert!(nf.is_zero());
    }

    /// A non-terminating rule trips the step cap instead of hanging.
    #[test]
    fn step_cap_catches_loops() {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("v");
        let a = q.add_arrow("a", v, v, 0);
        let b = q.add_arrow("b", v, v, 0);
        let f = Field::Q;
        let rules = vec![
            RewriteRule {
                lhs: vec![a],
                rhs: vec![(f.one(), vec![b])],
            },
            RewriteRule {
                lhs: vec![b],
                rhs: vec![(f.one(), vec![a])],
            },
        ];
        let sys = RewriteSystem::new(&q, rules, 64, 100).unwrap();
        assert!(matches!(
            sys.normal_form_word(&q, f, &vec![a]),
            Err(RewriteError::StepCap(_))
        ));
    }

    /// Ill-typed right-hand sides are rejected at construction.
    #[test]
    fn validation_rejects_degree_mismatch() {
        let mut q = GradedQuiver::new();
        let v = q.add_vertex("v");
        let a = q.add_arrow("a", v, v, 0);
        let t = q.add_arrow("t", v, v, 1);
        let f = Field::Q;
        let rules = vec![RewriteRule {
            lhs: vec![a],
            rhs: vec![(f.one(), vec![t])],
        }];
        assert!(RewriteSystem::new(&q, rules, 64, 100).is_err());
    }
}
