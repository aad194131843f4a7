//! Exact symbolic computation for relative graded Brauer graph algebras:
//! decorated ribbon graphs, their graded algebras, Koszul-dual presentations,
//! glued generalized Ginzburg presentations, flips, orientability and
//! Calabi–Yau trace data, and truncated cohomology.

pub mod angulation;
pub mod cli;
pub mod cy;
pub mod deform;
pub mod dgalg;
pub mod fixtures;
pub mod ginzburg;
pub mod koszul;
pub mod rgb;
pub mod scalar;
pub mod sgraph;
