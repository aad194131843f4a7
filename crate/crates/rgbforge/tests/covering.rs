//! Folding a graph by a finite symmetry: the shipped four-fold cover of the
//! torus-quotient graph must fold onto it, with the glued differentials of
//! the cover descending to those of the quotient.

use rgbforge::fixtures;
use rgbforge::ginzburg::covering_quotient_check;
use rgbforge::scalar::Field;

#[test]
fn the_four_fold_cover_folds_onto_the_torus_quotient() {
    let cover = fixtures::load(fixtures::COVER).expect("cover fixture loads");
    let base = fixtures::load("sg-d").expect("base fixture loads");
    let gens =
        fixtures::load_action(fixtures::COVER_ACTION, &cover).expect("action fixture loads");
    let report =
        covering_quotient_check(&cover, &gens, &base, 4, Field::Q).expect("the check must run");
    assert_eq!(report.group_order, 4);
    assert_eq!(report.vertex_orbits, base.vertices.len());
    assert_eq!(report.edge_orbits, base.edges.len());
    assert!(
        report.pass(),
        "folding must succeed: quotient_matches_base={}, differentials_match={}, failures={:?}",
        report.quotient_matches_base,
        report.differentials_match,
        report.failures
    );
}

#[test]
fn graphs_with_a_wrong_level_internal_vertex_are_rejected() {
    // The base graph itself has internal vertices of degree 1 and 2, so it
    // cannot serve as a cover at level 4.
    let base = fixtures::load("sg-d").expect("base fixture loads");
    let identity: Vec<usize> = (0..base.halfedges.len()).collect();
    let err = covering_quotient_check(&base, &[identity], &base, 4, Field::Q);
    assert!(err.is_err(), "degree precondition must be enforced");
}
