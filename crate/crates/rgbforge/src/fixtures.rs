//! Named example graphs shipped with the repository.
//!
//! The `fixtures/` directory at the workspace root holds one JSON file per
//! graph, in the schema accepted by [`parse_sgraph`], plus a four-fold
//! covering graph and the symmetry action used by the folding check.  The
//! `RGBFORGE_FIXTURES` environment variable overrides the directory, so an
//! installed binary can point at a relocated copy.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Deserialize;
use thiserror::Error;

use crate::sgraph::{parse_sgraph, SGraph, SGraphError};

/// The shipped example graphs, by file stem.
pub const NAMES: [&str; 8] = [
    "sg-a", "sg-b", "sg-c", "sg-d", "sg-e1", "sg-e2", "sg-m", "sg-o",
];

/// Each shipped graph together with its natural decoration: the smallest
/// level at which every internal vertex degree divides the decoration.
pub const NATURAL_N: [(&str, i64); 8] = [
    ("sg-a", 3),
    ("sg-b", 2),
    ("sg-c", 3),
    ("sg-d", 4),
    ("sg-e1", 1),
    ("sg-e2", 2),
    ("sg-m", 3),
    ("sg-o", 6),
];

/// File stem of the four-fold cover of `sg-d`.
pub const COVER: &str = "cy4-cover";

/// File stem of the deck-symmetry action on [`COVER`].
pub const COVER_ACTION: &str = "cy4-action";

/// Failure to locate, read, or decode a fixture file.
#[derive(Debug, Error)]
pub enum FixtureError {
    /// The file could not be read.
    #[error("cannot read fixture file {path}: {message}")]
    Io { path: String, message: String },
    /// The file is not a valid graph description.
    #[error("fixture {path} is not a valid graph: {message}")]
    Graph { path: String, message: String },
    /// The file is not a valid symmetry-action description.
    #[error("fixture {path} is not a valid action file: {message}")]
    Action { path: String, message: String },
}

/// Directory holding the fixture files.
///
/// Honors the `RGBFORGE_FIXTURES` environment variable; otherwise resolves
/// to the `fixtures/` directory at the workspace root relative to this
/// crate's manifest.
pub fn fixtures_dir() -> PathBuf {
    match std::env::var_os("RGBFORGE_FIXTURES") {
        Some(dir) => PathBuf::from(dir),
        None => PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

fn read_fixture(name: &str) -> Result<(String, String), FixtureError> {
    let path = fixtures_dir().join(format!("{name}.json"));
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|e| FixtureError::Io {
        path: shown.clone(),
        message: e.to_string(),
    })?;
    Ok((shown, text))
}

/// Load the fixture graph with the given file stem.
pub fn load(name: &str) -> Result<SGraph, FixtureError> {
    let (path, text) = read_fixture(name)?;
    parse_sgraph(&text).map_err(|e: SGraphError| FixtureError::Graph {
        path,
        message: e.to_string(),
    })
}

#[derive(Deserialize)]
struct ActionDoc {
    generators: Vec<BTreeMap<String, String>>,
}

/// Load a symmetry action on `s`: a list of generators, each stored as a
/// total halfedge-name map, returned as index permutations aligned with
/// `s.halfedges`.
pub fn load_action(name: &str, s: &SGraph) -> Result<Vec<Vec<usize>>, FixtureError> {
    let (path, text) = read_fixture(name)?;
    let doc: ActionDoc = serde_json::from_str(&text).map_err(|e| FixtureError::Action {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let nh = s.halfedges.len();
    let index: BTreeMap<&str, usize> = s
        .halfedges
        .iter()
        .enumerate()
        .map(|(i, h)| (h.name.as_str(), i))
        .collect();
    let mut out = Vec::with_capacity(doc.generators.len());
    for (gi, gen) in doc.generators.iter().enumerate() {
        let fail = |message: String| FixtureError::Action {
            path: path.clone(),
            message,
        };
        if gen.len() != nh {
            return Err(fail(format!(
                "generator {gi} maps {} halfedges, the graph has {nh}",
                gen.len()
            )));
        }
        let mut perm = vec![usize::MAX; nh];
        let mut hit = vec![false; nh];
        for (from, to) in gen {
            let &f = index
                .get(from.as_str())
                .ok_or_else(|| fail(format!("generator {gi} names unknown halfedge {from}")))?;
            let &t = index
                .get(to.as_str())
                .ok_or_else(|| fail(format!("generator {gi} names unknown halfedge {to}")))?;
            if hit[t] {
                return Err(fail(format!(
                    "generator {gi} is not a bijection: {to} is hit twice"
                )));
            }
            hit[t] = true;
            perm[f] = t;
        }
        out.push(perm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Mutex;

    /// Serializes the tests in this module: one of them changes the
    /// directory override, which the others must not observe.
    static ENV_LOCK: Mutex<()> = Mutex::new(());

    #[test]
    fn all_shipped_graphs_load_and_accept_their_natural_decoration() {
        let _guard = ENV_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let shape: BTreeMap<&str, (usize, usize)> = [
            ("sg-a", (3, 2)),
            ("sg-b", (3, 2)),
            ("sg-c", (8, 7)),
            ("sg-d", (6, 5)),
            ("sg-e1", (2, 1)),
            ("sg-e2", (2, 1)),
            ("sg-m", (2, 1)),
            ("sg-o", (2, 1)),
        ]
        .into_iter()
        .collect();
        for (name, n) in NATURAL_N {
            let s = load(name).expect("shipped fixture must load");
            let (nv, ne) = shape[name];
            assert_eq!(s.vertices.len(), nv, "vertex count of {name}");
            assert_eq!(s.edges.len(), ne, "edge count of {name}");
            let diag = s.validate(n);
            assert!(
                diag.compatible,
                "{name} must accept decoration {n}: {:?}",
                diag.problems
            );
        }
    }

    #[test]
    fn the_covering_pair_loads_and_the_action_has_order_four() {
        let _guard = ENV_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let cover = load(COVER).expect("cover fixture must load");
        assert_eq!(cover.vertices.len(), 19);
        assert_eq!(cover.edges.len(), 20);
        assert!(cover.validate(4).compatible);
        let gens = load_action(COVER_ACTION, &cover).expect("action fixture must load");
        assert_eq!(gens.len(), 1);
        let g = &gens[0];
        assert_eq!(g.len(), cover.halfedges.len());
        let mut power: Vec<usize> = (0..g.len()).collect();
        for step in 1..=4u32 {
            power = power.iter().map(|&h| g[h]).collect();
            let is_identity = power.iter().enumerate().all(|(h, &gh)| h == gh);
            assert_eq!(is_identity, step == 4, "the action must have order four");
        }
    }

    #[test]
    fn the_directory_override_is_honored() {
        let _guard = ENV_LOCK.lock().unwrap_or_else(|e| e.into_inner());
        let dir = tempfile::tempdir().expect("temp dir");
        let original = std::fs::read(fixtures_dir().join("sg-e1.json")).expect("read sg-e1");
        std::fs::write(dir.path().join("tiny.json"), original).expect("write override copy");
        std::env::set_var("RGBFORGE_FIXTURES", dir.path());
        let loaded = load("tiny");
        let missing = load("sg-a");
        std::env::remove_var("RGBFORGE_FIXTURES");
        let tiny = loaded.expect("override copy must load");
        assert_eq!(tiny.edges.len(), 1);
        assert!(
            matches!(missing, Err(FixtureError::Io { .. })),
            "names outside the override directory must not resolve"
        );
    }
}
