//! Canonical non-planar rooted trees and their combinatorics.
//!
//! A tree is stored as the list of subtrees hanging off its root. Every
//! vertex keeps its children sorted by their canonical text encoding, so two
//! trees that differ only by reordering children are equal structurally and
//! have identical encodings.
//!
//! The same machinery serves unlabelled shapes ([`TreeShape`], label `()`
//! printed as `•`) and labelled trees (label `u32`, printed in decimal).
//! Vertex positions are pre-order indices in the canonical form: the root is
//! position `0` and the non-root vertices are `1..=degree`.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::hash::{Hash, Hasher};

use thiserror::Error;

/// Default upper bound on the degree accepted by [`enumerate_shapes`].
pub const DEFAULT_DEGREE_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("requested degree {requested} exceeds the enumeration cap {cap}")]
    DegreeCapExceeded { requested: usize, cap: usize },
    #[error("assignment has {got} entries but the tree has {expected} root children")]
    AssignmentLength { expected: usize, got: usize },
    #[error("vertex {vertex} does not exist in a tree of degree {degree}")]
    NoSuchVertex { vertex: usize, degree: usize },
}

/// Vertex decoration. The text form is used both for printing and for the
/// canonical child order.
pub trait Label: Clone + Eq + Ord + Hash + fmt::Debug + Send + Sync + 'static {
    fn write_label(&self, out: &mut String);
}

impl Label for () {
    fn write_label(&self, out: &mut String) {
        out.push('•');
    }
}

impl Label for u32 {
    fn write_label(&self, out: &mut String) {
        let _ = write!(out, "{self}");
    }
}

/// A non-root vertex together with the subtree above it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Node<L> {
    pub label: L,
    pub children: Vec<Node<L>>,
}

impl<L: Label> Node<L> {
    pub fn leaf(label: L) -> Self {
        Node {
            label,
            children: Vec::new(),
        }
    }

    pub fn new(label: L, children: Vec<Node<L>>) -> Self {
        Node { label, children }
    }

    /// Number of vertices in this subtree, counting the node itself.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Node::size).sum::<usize>()
    }

    pub fn code(&self) -> String {
        let mut out = String::new();
        self.write_code(&mut out);
        out
    }

    fn write_code(&self, out: &mut String) {
        self.label.write_label(out);
        write_children(&self.children, out);
    }

    fn map_labels<M: Label>(&self, f: &mut impl FnMut(&L) -> M) -> Node<M> {
        Node {
            label: f(&self.label),
            children: self.children.iter().map(|c| c.map_labels(f)).collect(),
        }
    }
}

fn write_children<L: Label>(children: &[Node<L>], out: &mut String) {
    if children.is_empty() {
        return;
    }
    out.push('(');
    for (i, child) in children.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        child.write_code(out);
    }
    out.push(')');
}

/// Sorts children recursively; returns the node with its encoding.
fn canonical_node<L: Label>(node: Node<L>) -> (Node<L>, String) {
    let (children, inner) = canonical_children(node.children);
    let mut code = String::new();
    node.label.write_label(&mut code);
    code.push_str(&inner);
    (
        Node {
            label: node.label,
            children,
        },
        code,
    )
}

fn canonical_children<L: Label>(children: Vec<Node<L>>) -> (Vec<Node<L>>, String) {
    let mut kids: Vec<(Node<L>, String)> = children.into_iter().map(canonical_node).collect();
    kids.sort_by(|a, b| a.1.cmp(&b.1));
    let mut code = String::new();
    if !kids.is_empty() {
        code.push('(');
        for (i, (_, c)) in kids.iter().enumerate() {
            if i > 0 {
                code.push(' ');
            }
            code.push_str(c);
        }
        code.push(')');
    }
    (kids.into_iter().map(|(n, _)| n).collect(), code)
}

/// A rooted tree in canonical form. The root carries no label.
///
/// Ordering is by `(degree, encoding)`, which is also the order in which
/// series terms are printed.
#[derive(Clone, Debug)]
pub struct Tree<L> {
    children: Vec<Node<L>>,
    degree: usize,
    code: String,
}

/// Unlabelled tree shape.
pub type TreeShape = Tree<()>;

impl<L: Label> Tree<L> {
    /// The empty tree `o` (a lone root).
    pub fn unit() -> Self {
        Tree {
            children: Vec::new(),
            degree: 0,
            code: "o".to_string(),
        }
    }

    /// Builds the canonical form of the tree whose root has the given
    /// children, in any order.
    pub fn new(children: Vec<Node<L>>) -> Self {
        let degree = children.iter().map(Node::size).sum();
        let (children, inner) = canonical_children(children);
        Tree {
            children,
            degree,
            code: format!("o{inner}"),
        }
    }

    /// Tree whose root has exactly one child, the given node.
    pub fn planted(node: Node<L>) -> Self {
        Tree::new(vec![node])
    }

    pub fn children(&self) -> &[Node<L>] {
        &self.children
    }

    pub fn into_children(self) -> Vec<Node<L>> {
        self.children
    }

    /// Number of non-root vertices.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of children of the root.
    pub fn root_arity(&self) -> usize {
        self.children.len()
    }

    pub fn is_unit(&self) -> bool {
        self.degree == 0
    }

    /// Canonical text encoding, e.g. `o(•(•))`.
    pub fn code(&self) -> &str {
        &self.code
    }

    /// Labels of the non-root vertices in canonical pre-order.
    pub fn labels_preorder(&self) -> Vec<L> {
        let mut out = Vec::with_capacity(self.degree);
        fn walk<L: Label>(n: &Node<L>, out: &mut Vec<L>) {
            out.push(n.label.clone());
            for c in &n.children {
                walk(c, out);
            }
        }
        for c in &self.children {
            walk(c, &mut out);
        }
        out
    }

    /// Parent position of every vertex in canonical pre-order; entry `0` is
    /// the root and has no parent.
    pub fn parents_preorder(&self) -> Vec<Option<usize>> {
        let mut out = vec![None];
        fn walk<L>(n: &Node<L>, parent: usize, out: &mut Vec<Option<usize>>) {
            let me = out.len();
            out.push(Some(parent));
            for c in &n.children {
                walk(c, me, out);
            }
        }
        for c in &self.children {
            walk(c, 0, &mut out);
        }
        out
    }

    /// Same tree with the labels dropped.
    pub fn shape(&self) -> TreeShape {
        self.map_labels(|_| ())
    }

    pub fn map_labels<M: Label>(&self, mut f: impl FnMut(&L) -> M) -> Tree<M> {
        Tree::new(self.children.iter().map(|c| c.map_labels(&mut f)).collect())
    }

    /// Re-labels the vertices of this tree in canonical pre-order and
    /// canonicalizes the result.
    pub fn relabel_preorder<M: Label>(&self, labels: &[M]) -> Tree<M> {
        assert_eq!(labels.len(), self.degree, "one label per non-root vertex");
        let mut it = labels.iter();
        fn walk<L, M: Label>(n: &Node<L>, it: &mut std::slice::Iter<'_, M>) -> Node<M> {
            let label = it.next().expect("label count checked").clone();
            Node {
                label,
                children: n.children.iter().map(|c| walk(c, it)).collect(),
            }
        }
        Tree::new(self.children.iter().map(|c| walk(c, &mut it)).collect())
    }
}

impl<L: Label> Default for Tree<L> {
    fn default() -> Self {
        Tree::unit()
    }
}

impl<L> PartialEq for Tree<L> {
    fn eq(&self, other: &Self) -> bool {
        self.code == other.code
    }
}

impl<L> Eq for Tree<L> {}

impl<L> Hash for Tree<L> {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.code.hash(state);
    }
}

impl<L> PartialOrd for Tree<L> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<L> Ord for Tree<L> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree.cmp(&other.degree).then_with(|| self.code.cmp(&other.code))
    }
}

impl<L> fmt::Display for Tree<L> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// Canonical form of a raw rooted tree given as the root's children.
pub fn canonicalize<L: Label>(root_children: Vec<Node<L>>) -> Tree<L> {
    Tree::new(root_children)
}

/// One grafting map together with the tree it produces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grafting<L> {
    /// For each root child of the grafted tree (canonical order), the
    /// pre-order position in the target tree it is attached to.
    pub assignment: Vec<usize>,
    pub tree: Tree<L>,
}

/// Attaches the `i`-th root branch of `t` to the vertex `assignment[i]` of `s`.
pub fn graft<L: Label>(t: &Tree<L>, s: &Tree<L>, assignment: &[usize]) -> Result<Tree<L>, TreeError> {
    if assignment.len() != t.root_arity() {
        return Err(TreeError::AssignmentLength {
            expected: t.root_arity(),
            got: assignment.len(),
        });
    }
    if let Some(&v) = assignment.iter().find(|&&v| v > s.degree()) {
        return Err(TreeError::NoSuchVertex {
            vertex: v,
            degree: s.degree(),
        });
    }
    Ok(graft_unchecked(t, s, assignment))
}

pub(crate) fn graft_unchecked<L: Label>(t: &Tree<L>, s: &Tree<L>, assignment: &[usize]) -> Tree<L> {
    let mut extra: Vec<Vec<&Node<L>>> = vec![Vec::new(); s.degree() + 1];
    for (branch, &target) in t.children().iter().zip(assignment) {
        extra[target].push(branch);
    }

    fn attach<L: Label>(node: &Node<L>, next: &mut usize, extra: &[Vec<&Node<L>>]) -> Node<L> {
        let me = *next;
        *next += 1;
        let mut children: Vec<Node<L>> = node.children.iter().map(|c| attach(c, next, extra)).collect();
        children.extend(extra[me].iter().map(|&n| n.clone()));
        Node {
            label: node.label.clone(),
            children,
        }
    }

    let mut next = 1;
    let mut children: Vec<Node<L>> = s.children().iter().map(|c| attach(c, &mut next, &extra)).collect();
    children.extend(extra[0].iter().map(|&n| n.clone()));
    Tree::new(children)
}

/// Iterates over all maps from `k` items into `0..n` in lexicographic order.
pub(crate) fn for_each_assignment(k: usize, n: usize, mut f: impl FnMut(&[usize])) {
    let mut current = vec![0usize; k];
    if n == 0 && k > 0 {
        return;
    }
    loop {
        f(&current);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            current[i] += 1;
            if current[i] < n {
                break;
            }
            current[i] = 0;
        }
    }
}

/// All graftings of `t` onto `s`, one entry per grafting map; the list has
/// `(1 + |s|)^(root arity of t)` entries.
pub fn graftings<L: Label>(t: &Tree<L>, s: &Tree<L>) -> Vec<Grafting<L>> {
    let mut out = Vec::new();
    for_each_assignment(t.root_arity(), s.degree() + 1, |a| {
        out.push(Grafting {
            assignment: a.to_vec(),
            tree: graft_unchecked(t, s, a),
        });
    });
    out
}

/// Identifies the roots of `t` and `s`.
pub fn root_graft<L: Label>(t: &Tree<L>, s: &Tree<L>) -> Tree<L> {
    if t.is_unit() {
        return s.clone();
    }
    if s.is_unit() {
        return t.clone();
    }
    let mut children = t.children().to_vec();
    children.extend_from_slice(s.children());
    Tree::new(children)
}

/// Result of an admissible cut.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cut<L> {
    /// The removed subtrees regrafted onto a fresh root.
    pub pruned: Tree<L>,
    /// What is left of the original tree.
    pub remaining: Tree<L>,
    /// Pre-order positions of the cut vertices, ascending.
    pub cut_vertices: Vec<usize>,
}

struct PartialCut<L> {
    pruned: Vec<Node<L>>,
    kept: Vec<Node<L>>,
    cuts: Vec<usize>,
}

/// Combines the cut options of a list of sibling subtrees whose first
/// vertex sits at pre-order position `first`.
fn sibling_cuts<L: Label>(siblings: &[Node<L>], first: usize) -> Vec<PartialCut<L>> {
    let mut combos = vec![PartialCut {
        pruned: Vec::new(),
        kept: Vec::new(),
        cuts: Vec::new(),
    }];
    let mut pos = first;
    for child in siblings {
        let options = node_cuts(child, pos);
        pos += child.size();
        let mut next = Vec::with_capacity(combos.len() * options.len());
        for combo in &combos {
            for (pruned, kept, cuts) in &options {
                let mut c = PartialCut {
                    pruned: combo.pruned.clone(),
                    kept: combo.kept.clone(),
                    cuts: combo.cuts.clone(),
                };
                c.pruned.extend(pruned.iter().cloned());
                if let Some(k) = kept {
                    c.kept.push(k.clone());
                }
                c.cuts.extend_from_slice(cuts);
                next.push(c);
            }
        }
        combos = next;
    }
    combos
}

type NodeCut<L> = (Vec<Node<L>>, Option<Node<L>>, Vec<usize>);

fn node_cuts<L: Label>(node: &Node<L>, pos: usize) -> Vec<NodeCut<L>> {
    let mut out = vec![(vec![node.clone()], None, vec![pos])];
    for combo in sibling_cuts(&node.children, pos + 1) {
        out.push((
            combo.pruned,
            Some(Node {
                label: node.label.clone(),
                children: combo.kept,
            }),
            combo.cuts,
        ));
    }
    out
}

/// All admissible cuts (antichains of non-root vertices, including the
/// empty one).
pub fn admissible_cuts<L: Label>(t: &Tree<L>) -> Vec<Cut<L>> {
    sibling_cuts(t.children(), 1)
        .into_iter()
        .map(|c| {
            let mut cut_vertices = c.cuts;
            cut_vertices.sort_unstable();
            Cut {
                pruned: Tree::new(c.pruned),
                remaining: Tree::new(c.kept),
                cut_vertices,
            }
        })
        .collect()
}

/// Splits `t` into the planted trees `t_1, ..., t_k` with `t = t_1 ∘ ... ∘ t_k`.
pub fn decompose_root_branches<L: Label>(t: &Tree<L>) -> Vec<Tree<L>> {
    let mut parts: Vec<Tree<L>> = t.children().iter().map(|c| Tree::planted(c.clone())).collect();
    parts.sort();
    parts
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

fn forest_symmetry<L: Label>(children: &[Node<L>]) -> u64 {
    let mut total = 1u64;
    let mut i = 0;
    while i < children.len() {
        let mut j = i + 1;
        while j < children.len() && children[j] == children[i] {
            j += 1;
        }
        let inner = forest_symmetry(&children[i].children);
        total *= factorial(j - i) * inner.pow((j - i) as u32);
        i = j;
    }
    total
}

/// Order of the group of order-preserving bijections of the non-root
/// vertices that also preserve labels. For shapes this is `|SG(t)|`.
pub fn symmetry_order<L: Label>(t: &Tree<L>) -> u64 {
    forest_symmetry(t.children())
}

/// Enumerates all canonical shapes of degree `<= max_degree`, sorted by
/// `(degree, encoding)`, with the default cap.
pub fn enumerate_shapes(max_degree: usize) -> Result<Vec<TreeShape>, TreeError> {
    enumerate_shapes_with_cap(max_degree, DEFAULT_DEGREE_CAP)
}

pub fn enumerate_shapes_with_cap(max_degree: usize, cap: usize) -> Result<Vec<TreeShape>, TreeError> {
    if max_degree > cap {
        return Err(TreeError::DegreeCapExceeded {
            requested: max_degree,
            cap,
        });
    }
    // nodes[m] holds every canonical node with m vertices.
    let mut nodes: Vec<Vec<Node<()>>> = vec![Vec::new(); max_degree + 1];
    let mut forests_by_total: Vec<Vec<Vec<Node<()>>>> = vec![vec![Vec::new()]];
    for total in 1..=max_degree {
        // A node of size `total` is a vertex over a forest of size `total - 1`.
        nodes[total] = forests_by_total[total - 1]
            .iter()
            .map(|f| Node::new((), f.clone()))
            .collect();
        let pool: Vec<&Node<()>> = nodes[1..=total].iter().flatten().collect();
        let mut forests = Vec::new();
        collect_forests(&pool, 0, total, &mut Vec::new(), &mut forests);
        forests_by_total.push(forests);
    }
    let mut shapes: Vec<TreeShape> = forests_by_total.into_iter().flatten().map(Tree::new).collect();
    shapes.sort();
    Ok(shapes)
}

/// Multisets from `pool[start..]` (non-decreasing index) whose sizes sum to `remaining`.
fn collect_forests(
    pool: &[&Node<()>],
    start: usize,
    remaining: usize,
    current: &mut Vec<Node<()>>,
    out: &mut Vec<Vec<Node<()>>>,
) {
    if remaining == 0 {
        out.push(current.clone());
        return;
    }
    for (i, node) in pool.iter().enumerate().skip(start) {
        let size = node.size();
        if size <= remaining {
            current.push((*node).clone());
            collect_forests(pool, i, remaining - size, current, out);
            current.pop();
        }
    }
}
