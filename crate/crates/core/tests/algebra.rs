//! Products, coproducts and the pairing against parent-array oracles.

use std::collections::HashMap;

use itertools::Itertools;
use num::{BigInt, BigRational, One};
use proptest::prelude::*;

use rough_trees::hopf::{
    antipode, circ, delta_ck, delta_gl, exp_circ, log_circ, pair_trees, pairing, star, tensor_pairing, HopfVariant,
};
use rough_trees::series::{ExactSeries, LabelledTree, Rational, TensorSeries};
use rough_trees::text::{parse_series, parse_tree};
use rough_trees::words::{ladder, phi_word, words_of_length};

mod common;
use common::{planar, Planar};

const DIM: usize = 3;

fn int(n: i64) -> Rational {
    BigRational::from_integer(BigInt::from(n))
}

fn single(t: &LabelledTree) -> ExactSeries {
    ExactSeries::from_tree(DIM, t.clone()).unwrap()
}

/// Every way of attaching the root branches of `t` to vertices of `s`.
fn oracle_star(t: &Planar, s: &Planar) -> HashMap<LabelledTree, i64> {
    let branches = t.children(0);
    let mut out = HashMap::new();
    for targets in std::iter::repeat_n(0..=s.n(), branches.len()).multi_cartesian_product() {
        // s keeps its numbering; t's vertex v becomes s.n() + v.
        let mut parent = s.parent.clone();
        let mut labels = s.labels.clone();
        for v in 1..=t.n() {
            let p = t.parent_of(v);
            parent.push(if p == 0 {
                targets[branches.iter().position(|&b| b == v).unwrap()]
            } else {
                s.n() + p
            });
            labels.push(t.labels[v - 1]);
        }
        *out.entry(Planar { parent, labels }.tree()).or_insert(0) += 1;
    }
    out
}

fn above(p: &Planar, v: usize, w: usize) -> bool {
    v == w || p.is_ancestor(v, w)
}

/// Admissible cuts as antichains: pruned branches on the left.
fn oracle_ck(p: &Planar) -> HashMap<(LabelledTree, LabelledTree), i64> {
    let n = p.n();
    let mut out = HashMap::new();
    for mask in 0..1u32 << n {
        let cut: Vec<usize> = (1..=n).filter(|v| mask >> (v - 1) & 1 == 1).collect();
        if cut.iter().any(|&a| cut.iter().any(|&b| a != b && p.is_ancestor(a, b))) {
            continue;
        }
        let pruned: Vec<bool> = (0..=n).map(|w| w > 0 && cut.iter().any(|&c| above(p, c, w))).collect();
        let kept: Vec<bool> = pruned.iter().map(|x| !x).collect();
        *out.entry((p.restrict(&pruned).tree(), p.restrict(&kept).tree()))
            .or_insert(0) += 1;
    }
    out
}

/// Splits of the root branches into a left and a right part.
fn oracle_gl(p: &Planar) -> HashMap<(LabelledTree, LabelledTree), i64> {
    let branches = p.children(0);
    let mut out = HashMap::new();
    for mask in 0..1u32 << branches.len() {
        let left: Vec<bool> = (0..=p.n())
            .map(|w| {
                w > 0
                    && branches
                        .iter()
                        .enumerate()
                        .any(|(k, &b)| mask >> k & 1 == 1 && above(p, b, w))
            })
            .collect();
        let right: Vec<bool> = (0..=p.n()).map(|w| w > 0 && !left[w]).collect();
        *out.entry((p.restrict(&left).tree(), p.restrict(&right).tree()))
            .or_insert(0) += 1;
    }
    out
}

fn assert_tensor_matches(ours: &TensorSeries<Rational>, oracle: &HashMap<(LabelledTree, LabelledTree), i64>) {
    assert_eq!(ours.len(), oracle.len(), "{ours}");
    for ((l, r), c) in oracle {
        assert_eq!(ours.coefficient(l, r), int(*c), "{l} ⊗ {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn star_matches_grafting_oracle(a in planar(3, 3), b in planar(3, 3)) {
        let (t, s) = (a.tree(), b.tree());
        let ours = star(&single(&t), &single(&s)).unwrap();
        let oracle = oracle_star(&a, &b);
        prop_assert_eq!(ours.len(), oracle.len());
        for (tree, c) in &oracle {
            prop_assert_eq!(ours.coefficient(tree), int(*c));
        }
    }

    #[test]
    fn coproducts_match_oracles(p in planar(6, 3)) {
        let t = single(&p.tree());
        assert_tensor_matches(&delta_ck(&t), &oracle_ck(&p));
        assert_tensor_matches(&delta_gl(&t), &oracle_gl(&p));
    }

    #[test]
    fn pairing_counts_automorphisms(p in planar(6, 2), q in planar(6, 2)) {
        let (t, s) = (p.tree(), q.tree());
        prop_assert_eq!(pair_trees(&t, &t), p.automorphisms());
        if t != s {
            prop_assert_eq!(pair_trees(&t, &s), 0);
        }
    }

    #[test]
    fn star_is_dual_to_cut_oracle(a in planar(2, 2), b in planar(2, 2), c in planar(4, 2)) {
        let (x, y, z) = (single(&a.tree()), single(&b.tree()), c.tree());
        let lhs = pairing(&star(&x, &y).unwrap(), &single(&z)).unwrap();
        let cuts = oracle_ck(&c);
        let mut rhs = TensorSeries::zero(DIM);
        for ((l, r), k) in cuts {
            rhs.accumulate(l, r, int(k));
        }
        prop_assert_eq!(lhs, tensor_pairing(&x, &y, &rhs).unwrap());
    }

    #[test]
    fn circ_is_dual_to_branch_split_oracle(a in planar(3, 2), b in planar(3, 2), c in planar(5, 2)) {
        let (x, y, z) = (single(&a.tree()), single(&b.tree()), c.tree());
        let lhs = pairing(&circ(&x, &y).unwrap(), &single(&z)).unwrap();
        let mut rhs = TensorSeries::zero(DIM);
        for ((l, r), k) in oracle_gl(&c) {
            rhs.accumulate(l, r, int(k));
        }
        prop_assert_eq!(lhs, tensor_pairing(&x, &y, &rhs).unwrap());
    }
}

#[test]
fn word_embedding_carries_unshuffle_to_branch_split() {
    for len in 1..=4 {
        for word in words_of_length(2, len) {
            let phi = phi_word(&word, 2).unwrap();
            let mut expected = TensorSeries::zero(2);
            for mask in 0..1u32 << len {
                let (left, right): (Vec<_>, Vec<_>) = word.iter().enumerate().partition(|(k, _)| mask >> k & 1 == 1);
                let left: Vec<u32> = left.into_iter().map(|(_, l)| *l).collect();
                let right: Vec<u32> = right.into_iter().map(|(_, l)| *l).collect();
                let outer = TensorSeries::outer(&phi_word(&left, 2).unwrap(), &phi_word(&right, 2).unwrap()).unwrap();
                for ((l, r), c) in outer.terms() {
                    expected.accumulate(l.clone(), r.clone(), c.clone());
                }
            }
            assert!(delta_gl(&phi).sub(&expected).unwrap().is_zero(), "{word:?}");
        }
    }
}

#[test]
fn word_embedding_contains_its_ladder_once() {
    for word in words_of_length(3, 3) {
        let phi = phi_word(&word, 3).unwrap();
        assert_eq!(phi.coefficient(&ladder(&word)), Rational::one(), "{word:?}");
        // Every tree of Φ(w) uses the letters of w.
        for (t, _) in phi.terms() {
            let mut labels = t.labels_preorder();
            labels.sort();
            assert_eq!(labels, word.iter().copied().sorted().collect::<Vec<_>>());
        }
    }
}

#[test]
fn exponential_of_a_bullet_is_the_bush_series() {
    let x = parse_series("2*o(1)", Some(1)).unwrap().with_truncation(Some(5));
    let g = exp_circ(&x).unwrap();
    let mut factorial = 1i64;
    for k in 0..=5usize {
        if k > 0 {
            factorial *= k as i64;
        }
        let tree = if k == 0 {
            LabelledTree::unit()
        } else {
            parse_tree(&format!("o({})", vec!["1"; k].join(" "))).unwrap()
        };
        let expected = BigRational::new(BigInt::from(2i64.pow(k as u32)), BigInt::from(factorial));
        assert_eq!(g.coefficient(&tree), expected, "k = {k}");
    }
    assert!(log_circ(&g).unwrap().sub(&x).unwrap().is_zero());
}

#[test]
fn antipode_of_a_ladder() {
    let t = parse_series("o(1(2))", Some(2)).unwrap().with_truncation(Some(2));
    let gl = antipode(&t, HopfVariant::GrossmanLarson).unwrap();
    let ck = antipode(&t, HopfVariant::ConnesKreimer).unwrap();
    // Planted trees are primitive for the branch split.
    assert!(gl.add(&t).unwrap().is_zero(), "{gl}");
    assert_eq!(ck.to_string(), "1*o(1 2) + -1*o(1(2))");
}
