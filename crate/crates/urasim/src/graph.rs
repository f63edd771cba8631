//! Multistage collision graph: per-stage detected nodes, tree-decoded
//! candidate paths, pruning, and the ground-truth selection bookkeeping used
//! for metrics.

use crate::tx::{index_to_bits, segment_to_index, TreeCode};
use thiserror::Error;

/// A candidate path: one 1-based codeword index per pilot stage.
pub type PathTuple = [u32; 4];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("path {0:?} is not in the graph")]
    PathNotFound(PathTuple),
}

/// Enumerate candidate paths from detected stage node lists: every pair of
/// first/second-stage nodes whose two tree-code parities are both present in
/// the third and fourth stage lists. Lists must be ascending; the result is
/// in ascending lexicographic order and duplicate-free. Any empty stage
/// yields an empty set.
pub fn tree_decode(stage_nodes: &[Vec<usize>], tree: &TreeCode) -> Vec<PathTuple> {
    assert_eq!(stage_nodes.len(), 4, "the tree code spans four stages");
    let b_p = tree.frag_bits();
    let mut paths = Vec::new();
    for &a in &stage_nodes[0] {
        let bits_a = index_to_bits(a, b_p);
        for &b in &stage_nodes[1] {
            let bits_b = index_to_bits(b, b_p);
            let r1 = tree.parity1(&bits_a, &bits_b);
            let c = segment_to_index(&r1);
            if stage_nodes[2].binary_search(&c).is_err() {
                continue;
            }
            let r2 = tree.parity2(&bits_a, &bits_b, &r1);
            let d = segment_to_index(&r2);
            if stage_nodes[3].binary_search(&d).is_err() {
                continue;
            }
            paths.push([a as u32, b as u32, c as u32, d as u32]);
        }
    }
    paths
}

/// The graph the path extraction consumes: node lists plus the live
/// candidate path set.
#[derive(Debug, Clone)]
pub struct CollisionGraph {
    /// Ascending 1-based node values, one list per stage.
    pub stage_nodes: Vec<Vec<usize>>,
    /// Live candidate paths, ascending lexicographic.
    pub paths: Vec<PathTuple>,
}

impl CollisionGraph {
    pub fn from_detected(stage_nodes: Vec<Vec<usize>>, tree: &TreeCode) -> Self {
        let paths = tree_decode(&stage_nodes, tree);
        Self { stage_nodes, paths }
    }

    /// A stage with no detected nodes makes the whole trial degenerate.
    pub fn is_degenerate(&self) -> bool {
        self.stage_nodes.iter().any(Vec::is_empty)
    }

    /// Remove exactly one accepted path; other paths through shared nodes
    /// stay (collided nodes can serve several users).
    pub fn prune(&mut self, path: &PathTuple) -> Result<(), GraphError> {
        match self.paths.binary_search(path) {
            Ok(idx) => {
                self.paths.remove(idx);
                Ok(())
            }
            Err(_) => Err(GraphError::PathNotFound(*path)),
        }
    }

    /// Text dump for debugging and fixtures: one `stage <i>:` line of node
    /// values per stage, then a `paths:` section with one tuple per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, nodes) in self.stage_nodes.iter().enumerate() {
            let vals: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
            out.push_str(&format!("stage {}: {}\n", i + 1, vals.join(" ")));
        }
        out.push_str("paths:\n");
        for p in &self.paths {
            out.push_str(&format!("{} {} {} {}\n", p[0], p[1], p[2], p[3]));
        }
        out
    }
}

/// Ground-truth user-to-node selection for one stage (simulation side only;
/// the receiver never reads it). Row `k` marks which node user `k` picked.
#[derive(Debug, Clone)]
pub struct SelectionMatrix {
    /// Ascending node values of the stage.
    pub nodes: Vec<usize>,
    /// `users x nodes` binary assignment.
    pub assign: Vec<Vec<u8>>,
}

impl SelectionMatrix {
    /// Each user selects exactly one node; each node is claimed at least once.
    pub fn check_invariants(&self) -> bool {
        let per_user = self
            .assign
            .iter()
            .all(|row| row.iter().map(|&x| x as usize).sum::<usize>() == 1);
        let per_node = (0..self.nodes.len())
            .all(|n| self.assign.iter().map(|row| row[n] as usize).sum::<usize>() >= 1);
        per_user && per_node
    }
}

/// Build the per-stage ground-truth selection matrices from the true user
/// index tuples. Node lists are the sorted distinct indices per stage.
pub fn selection_matrices(true_indices: &[[usize; 4]]) -> Vec<SelectionMatrix> {
    (0..4)
        .map(|stage| {
            let mut nodes: Vec<usize> = true_indices.iter().map(|t| t[stage]).collect();
            nodes.sort_unstable();
            nodes.dedup();
            let assign = true_indices
                .iter()
                .map(|t| {
                    let mut row = vec![0u8; nodes.len()];
                    let pos = nodes.binary_search(&t[stage]).expect("own node present");
                    row[pos] = 1;
                    row
                })
                .collect();
            SelectionMatrix { nodes, assign }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::util::rng_from_key;
    use rand::Rng;

    fn tuple_of(tree: &TreeCode, a: usize, b: usize) -> PathTuple {
        let bits_a = index_to_bits(a, tree.frag_bits());
        let bits_b = index_to_bits(b, tree.frag_bits());
        let r1 = tree.parity1(&bits_a, &bits_b);
        let c = segment_to_index(&r1);
        let r2 = tree.parity2(&bits_a, &bits_b, &r1);
        let d = segment_to_index(&r2);
        [a as u32, b as u32, c as u32, d as u32]
    }

    #[test]
    fn single_user_gives_single_path() {
        let tree = TreeCode::new(7, 3);
        let t = tuple_of(&tree, 9, 81);
        let stages = vec![
            vec![t[0] as usize],
            vec![t[1] as usize],
            vec![t[2] as usize],
            vec![t[3] as usize],
        ];
        let paths = tree_decode(&stages, &tree);
        assert_eq!(paths, vec![t]);
    }

    #[test]
    fn connected_tuples_in_disconnected_out() {
        let tree = TreeCode::new(7, 3);
        let t = tuple_of(&tree, 8, 80);
        // include an extra fourth-stage node that no pair maps onto
        let spurious = if t[3] == 12 { 13 } else { 12 };
        let mut stage4 = vec![t[3] as usize, spurious];
        stage4.sort_unstable();
        let stages = vec![
            vec![t[0] as usize],
            vec![t[1] as usize],
            vec![t[2] as usize],
            stage4,
        ];
        let paths = tree_decode(&stages, &tree);
        assert!(paths.contains(&t));
        let bad = [t[0], t[1], t[2], spurious as u32];
        assert!(!paths.contains(&bad));
    }

    #[test]
    fn all_true_tuples_survive_random_instances() {
        let tree = TreeCode::new(7, 11);
        let mut rng = rng_from_key(55);
        for _ in 0..20 {
            let tuples: Vec<PathTuple> = (0..8)
                .map(|_| tuple_of(&tree, rng.random_range(1..=128), rng.random_range(1..=128)))
                .collect();
            let mut stages: Vec<Vec<usize>> = (0..4)
                .map(|s| {
                    let mut v: Vec<usize> = tuples.iter().map(|t| t[s] as usize).collect();
                    v.sort_unstable();
                    v.dedup();
                    v
                })
                .collect();
            // sprinkle extra detected nodes
            for stage in stages.iter_mut() {
                for _ in 0..3 {
                    let v = rng.random_range(1..=128usize);
                    if let Err(pos) = stage.binary_search(&v) {
                        stage.insert(pos, v);
                    }
                }
            }
            let paths = tree_decode(&stages, &tree);
            for t in &tuples {
                assert!(paths.contains(t), "true tuple missing");
            }
            assert!(paths.windows(2).all(|w| w[0] < w[1]), "sorted, duplicate-free");
        }
    }

    #[test]
    fn empty_stage_yields_empty_path_set() {
        let tree = TreeCode::new(7, 3);
        let stages = vec![vec![1, 2], vec![], vec![5], vec![9]];
        assert!(tree_decode(&stages, &tree).is_empty());
        let g = CollisionGraph::from_detected(stages, &tree);
        assert!(g.is_degenerate());
    }

    #[test]
    fn prune_removes_exactly_one_tuple() {
        let tree = TreeCode::new(7, 3);
        let t1 = tuple_of(&tree, 8, 92);
        let t2 = tuple_of(&tree, 8, 17); // shares the stage-1 node
        let stages: Vec<Vec<usize>> = (0..4)
            .map(|s| {
                let mut v = vec![t1[s] as usize, t2[s] as usize];
                v.sort_unstable();
                v.dedup();
                v
            })
            .collect();
        let mut g = CollisionGraph::from_detected(stages, &tree);
        let before = g.paths.len();
        assert!(g.paths.contains(&t1) && g.paths.contains(&t2));
        g.prune(&t1).unwrap();
        assert_eq!(g.paths.len(), before - 1);
        assert!(g.paths.contains(&t2), "paths through shared nodes persist");
        assert_eq!(g.prune(&t1), Err(GraphError::PathNotFound(t1)));
        // singleton set empties out
        let mut solo = CollisionGraph {
            stage_nodes: vec![vec![1]; 4],
            paths: vec![t2],
        };
        solo.prune(&t2).unwrap();
        assert!(solo.paths.is_empty());
    }

    #[test]
    fn false_tuple_survival_matches_parity_odds() {
        // random tuples pass both parity checks with probability 2^-14
        let tree = TreeCode::new(7, 9);
        let mut rng = rng_from_key(56);
        let trials = 20_000;
        let mut hits = 0u32;
        for _ in 0..trials {
            let a = rng.random_range(1..=128usize);
            let b = rng.random_range(1..=128usize);
            let c = rng.random_range(1..=128usize);
            let d = rng.random_range(1..=128usize);
            let t = tuple_of(&tree, a, b);
            if t[2] as usize == c && t[3] as usize == d {
                hits += 1;
            }
        }
        let expect = trials as f64 / 16384.0; // ~1.2
        assert!(
            (hits as f64) <= expect + 3.0 * expect.sqrt() + 3.0,
            "hits={hits}, expected about {expect}"
        );
    }

    #[test]
    fn selection_matrices_satisfy_invariants() {
        let tuples = [[8, 80, 16, 33], [8, 12, 77, 33], [100, 80, 16, 2]];
        let mats = selection_matrices(&tuples);
        assert_eq!(mats.len(), 4);
        for m in &mats {
            assert!(m.check_invariants());
            assert!(m.nodes.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(mats[0].nodes, vec![8, 100]);
        assert_eq!(mats[0].assign[0], vec![1, 0]);
        assert_eq!(mats[0].assign[2], vec![0, 1]);
    }

    #[test]
    fn dump_is_stable_text() {
        let tree = TreeCode::new(7, 3);
        let t = tuple_of(&tree, 3, 5);
        let stages: Vec<Vec<usize>> = (0..4).map(|s| vec![t[s] as usize]).collect();
        let g = CollisionGraph::from_detected(stages, &tree);
        let text = g.dump();
        assert!(text.starts_with("stage 1: 3\n"));
        assert!(text.contains("paths:\n"));
        assert!(text
            .trim_end()
            .ends_with(&format!("{} {} {} {}", t[0], t[1], t[2], t[3])));
    }
}
