//! Planar parent-array trees used as an independent reference.

#![allow(dead_code)]

use itertools::Itertools;
use proptest::prelude::*;

use rough_trees::tree::{Node, Tree};

/// A planar rooted tree: `parent[k]` is the parent of vertex `k + 1`, always
/// an earlier vertex. Vertex 0 is the root.
#[derive(Debug, Clone)]
pub struct Planar {
    pub parent: Vec<usize>,
    pub labels: Vec<u32>,
}

impl Planar {
    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent_of(&self, v: usize) -> usize {
        self.parent[v - 1]
    }

    pub fn children(&self, v: usize) -> Vec<usize> {
        (1..=self.n()).filter(|&w| self.parent_of(w) == v).collect()
    }

    pub fn is_ancestor(&self, a: usize, mut v: usize) -> bool {
        while v != 0 {
            v = self.parent_of(v);
            if v == a {
                return true;
            }
        }
        false
    }

    /// Builds the library tree, visiting children in the order given by `order`.
    pub fn build(&self, order: &dyn Fn(Vec<usize>) -> Vec<usize>) -> Tree<u32> {
        fn node(p: &Planar, v: usize, order: &dyn Fn(Vec<usize>) -> Vec<usize>) -> Node<u32> {
            Node::new(
                p.labels[v - 1],
                order(p.children(v)).into_iter().map(|c| node(p, c, order)).collect(),
            )
        }
        Tree::new(
            order(self.children(0))
                .into_iter()
                .map(|c| node(self, c, order))
                .collect(),
        )
    }

    pub fn from_tree(t: &Tree<u32>) -> Self {
        Planar {
            parent: t
                .parents_preorder()
                .into_iter()
                .skip(1)
                .map(|p| p.expect("non-root"))
                .collect(),
            labels: t.labels_preorder(),
        }
    }

    /// Brute-force count of label-preserving permutations of the non-root
    /// vertices that preserve the parent relation.
    pub fn automorphisms(&self) -> u64 {
        let n = self.n();
        (1..=n)
            .permutations(n)
            .filter(|perm| {
                let image = |v: usize| if v == 0 { 0 } else { perm[v - 1] };
                (1..=n).all(|v| {
                    self.labels[image(v) - 1] == self.labels[v - 1]
                        && self.parent_of(image(v)) == image(self.parent_of(v))
                })
            })
            .count() as u64
    }

    /// Restriction to the vertices with `keep[v]`; a kept vertex whose
    /// parent is dropped hangs off the root. `keep[0]` is ignored.
    pub fn restrict(&self, keep: &[bool]) -> Planar {
        let index: Vec<Option<usize>> = {
            let mut next = 0;
            (0..=self.n())
                .map(|v| {
                    if v == 0 || keep[v] {
                        let i = next;
                        next += 1;
                        Some(i)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let mut parent = Vec::new();
        let mut labels = Vec::new();
        for v in 1..=self.n() {
            if keep[v] {
                parent.push(index[self.parent_of(v)].unwrap_or(0));
                labels.push(self.labels[v - 1]);
            }
        }
        Planar { parent, labels }
    }

    pub fn tree(&self) -> Tree<u32> {
        self.build(&|c| c)
    }
}

pub fn planar(max_vertices: usize, max_label: u32) -> impl Strategy<Value = Planar> {
    prop::collection::vec((any::<usize>(), 1..=max_label), 0..=max_vertices).prop_map(|raw| Planar {
        parent: raw.iter().enumerate().map(|(k, (seed, _))| seed % (k + 1)).collect(),
        labels: raw.iter().map(|(_, l)| *l).collect(),
    })
}
