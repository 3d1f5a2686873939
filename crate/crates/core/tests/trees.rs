//! Tree combinatorics against brute-force oracles on parent arrays.

use std::collections::HashSet;

use itertools::Itertools;
use proptest::prelude::*;

use rough_trees::series::internal_symmetry_count;

mod common;
use common::{planar, Planar};
use rough_trees::tree::{
    admissible_cuts, decompose_root_branches, enumerate_shapes, graftings, root_graft, symmetry_order, Tree, TreeShape,
};

fn all_parent_arrays(n: usize) -> Vec<Vec<usize>> {
    (0..n).map(|k| 0..=k).multi_cartesian_product().collect()
}

fn shape_of(parent: Vec<usize>) -> TreeShape {
    let labels = vec![1; parent.len()];
    Planar { parent, labels }.build(&|c| c).shape()
}

#[test]
fn shape_counts_match_brute_force() {
    let shapes = enumerate_shapes(6).unwrap();
    for degree in 0..=6 {
        let oracle: HashSet<String> = all_parent_arrays(degree)
            .into_iter()
            .map(|p| shape_of(p).code().to_string())
            .collect();
        let ours: Vec<_> = shapes.iter().filter(|t| t.degree() == degree).collect();
        assert_eq!(ours.len(), oracle.len(), "degree {degree}");
        assert!(ours.iter().all(|t| oracle.contains(t.code())));
    }
    // Rooted trees with 1..=7 vertices.
    let counts: Vec<usize> = (0..=6)
        .map(|d| shapes.iter().filter(|t| t.degree() == d).count())
        .collect();
    assert_eq!(counts, [1, 1, 2, 4, 9, 20, 48]);
}

#[test]
fn shapes_are_sorted_by_degree_then_code() {
    let shapes = enumerate_shapes(5).unwrap();
    assert!(shapes.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(shapes[2].code(), "o(• •)");
}

#[test]
fn labelled_orbits_times_symmetries_is_factorial() {
    for shape in enumerate_shapes(5).unwrap() {
        let n = shape.degree();
        let orbit: HashSet<Tree<u32>> = (1..=n as u32)
            .permutations(n)
            .map(|labels| shape.relabel_preorder(&labels))
            .collect();
        let factorial: u64 = (1..=n as u64).product();
        assert_eq!(orbit.len() as u64 * symmetry_order(&shape), factorial, "{shape}");
        for t in &orbit {
            assert_eq!(internal_symmetry_count(t), 1, "{t}");
        }
    }
}

proptest! {
    #[test]
    fn canonical_form_ignores_child_order(p in planar(7, 3), seed in any::<u64>()) {
        let forward = p.build(&|c| c);
        let reversed = p.build(&|mut c| { c.reverse(); c });
        let rotated = p.build(&|mut c| { if !c.is_empty() { let k = seed as usize % c.len(); c.rotate_left(k); } c });
        prop_assert_eq!(forward.code(), reversed.code());
        prop_assert_eq!(forward.code(), rotated.code());
        prop_assert_eq!(forward.degree(), p.n());
    }

    #[test]
    fn cuts_are_the_antichains(p in planar(7, 2)) {
        let t = p.build(&|c| c);
        let n = p.n();
        let antichains = (0..1u32 << n)
            .filter(|mask| {
                let chosen: Vec<usize> = (1..=n).filter(|v| mask >> (v - 1) & 1 == 1).collect();
                chosen.iter().all(|&a| chosen.iter().all(|&b| !p.is_ancestor(a, b)))
            })
            .count();
        let cuts = admissible_cuts(&t);
        prop_assert_eq!(cuts.len(), antichains);
        for cut in &cuts {
            prop_assert_eq!(cut.pruned.degree() + cut.remaining.degree(), t.degree());
            prop_assert_eq!(cut.pruned.root_arity(), cut.cut_vertices.len());
        }
    }

    #[test]
    fn symmetry_order_matches_brute_force(p in planar(6, 2)) {
        let t = p.build(&|c| c);
        prop_assert_eq!(symmetry_order(&t), p.automorphisms());
    }

    #[test]
    fn root_branch_decomposition_round_trips(p in planar(7, 3)) {
        let t = p.build(&|c| c);
        let parts = decompose_root_branches(&t);
        prop_assert_eq!(parts.len(), t.root_arity());
        prop_assert!(parts.iter().all(|b| b.root_arity() == 1));
        let rebuilt = parts.iter().fold(Tree::unit(), |acc, b| root_graft(&acc, b));
        prop_assert_eq!(rebuilt, t);
    }

    #[test]
    fn grafting_count_and_degree(a in planar(4, 2), b in planar(4, 2)) {
        let (t, s) = (a.build(&|c| c), b.build(&|c| c));
        let all = graftings(&t, &s);
        prop_assert_eq!(all.len(), (s.degree() + 1).pow(t.root_arity() as u32));
        prop_assert!(all.iter().all(|g| g.tree.degree() == t.degree() + s.degree()));
        // Grafting everything onto the root is the root-identifying product.
        let at_root = all.iter().find(|g| g.assignment.iter().all(|&v| v == 0)).unwrap();
        prop_assert_eq!(&at_root.tree, &root_graft(&t, &s));
    }
}
