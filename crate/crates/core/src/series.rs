//! Labelled trees over `R^d` and finite graded linear combinations of them.
//!
//! Basis elements are canonical labelled trees (one representative per orbit
//! of labellings under the symmetry group of the shape). An elementary
//! tensor maps to its orbit representative with coefficient one.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, ToPrimitive, Zero};
use thiserror::Error;

use crate::tree::{self, Node, Tree};

/// Labelled tree; labels are basis indices `1..=d`.
pub type LabelledTree = Tree<u32>;

/// Exact coefficient type of the algebra layer.
pub type Rational = BigRational;

pub type ExactSeries = TreeSeries<Rational>;
pub type FloatSeries = TreeSeries<f64>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("label {label} out of range 1..={dim}")]
    LabelOutOfRange { label: u32, dim: usize },
    #[error("dimension must be positive")]
    ZeroDimension,
}

/// Scalar ring for tree series: exact rationals or binary floats.
pub trait Coefficient:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialEq
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_int(n: i64) -> Self {
        Self::from_ratio(n, 1)
    }

    /// Absolute value as a float, for norms and tolerances.
    fn magnitude(&self) -> f64;

    /// `self / n` for a positive integer `n`.
    fn div_int(&self, n: i64) -> Self {
        self.clone() * Self::from_ratio(1, n)
    }

    /// Zero test with a tolerance; a zero tolerance means exact comparison.
    fn within(&self, tol: f64) -> bool {
        if tol == 0.0 {
            self.is_zero()
        } else {
            self.magnitude() <= tol
        }
    }
}

impl Coefficient for Rational {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        BigRational::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn magnitude(&self) -> f64 {
        self.to_f64().map(f64::abs).unwrap_or(f64::INFINITY)
    }
}

impl Coefficient for f64 {
    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::from_ratio(numer, denom)
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// The single-vertex tree `o(i)`.
pub fn bullet(label: u32) -> LabelledTree {
    Tree::planted(Node::leaf(label))
}

pub fn check_labels(tree: &LabelledTree, dim: usize) -> Result<(), SeriesError> {
    if dim == 0 {
        return Err(SeriesError::ZeroDimension);
    }
    match tree.labels_preorder().into_iter().find(|&l| l == 0 || l as usize > dim) {
        Some(label) => Err(SeriesError::LabelOutOfRange { label, dim }),
        None => Ok(()),
    }
}

/// Canonical orbit representative of a raw labelled tree.
pub fn canonical_label_form(root_children: Vec<Node<u32>>, dim: usize) -> Result<LabelledTree, SeriesError> {
    let t = tree::canonicalize(root_children);
    check_labels(&t, dim)?;
    Ok(t)
}

/// Number of shape symmetries that fix the labelling.
pub fn internal_symmetry_count(tree: &LabelledTree) -> u64 {
    tree::symmetry_order(tree)
}

/// All canonical labelled trees over `1..=dim` with degree `<= max_degree`.
pub fn labelled_basis(max_degree: usize, dim: usize) -> Result<Vec<LabelledTree>, tree::TreeError> {
    let mut out = std::collections::BTreeSet::new();
    for shape in tree::enumerate_shapes(max_degree)? {
        let k = shape.degree();
        let mut labels = vec![1u32; k];
        loop {
            out.insert(shape.relabel_preorder(&labels));
            let mut i = k;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                labels[i] += 1;
                if labels[i] as usize <= dim {
                    break;
                }
                labels[i] = 1;
            }
            if labels.iter().all(|&l| l == 1) {
                break;
            }
        }
    }
    Ok(out.into_iter().collect())
}

fn min_truncation(a: Option<usize>, b: Option<usize>) -> Option<usize> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Finite linear combination of labelled trees, optionally truncated.
///
/// Zero coefficients are never stored and, when a truncation level is set,
/// no term exceeds it.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSeries<C> {
    dim: usize,
    truncation: Option<usize>,
    terms: BTreeMap<LabelledTree, C>,
}

impl<C: Coefficient> TreeSeries<C> {
    pub fn zero(dim: usize) -> Self {
        TreeSeries {
            dim,
            truncation: None,
            terms: BTreeMap::new(),
        }
    }

    /// `c · 1`.
    pub fn scalar(dim: usize, c: C) -> Self {
        let mut s = Self::zero(dim);
        s.accumulate(Tree::unit(), c);
        s
    }

    pub fn unit(dim: usize) -> Self {
        Self::scalar(dim, C::one())
    }

    pub fn from_tree(dim: usize, tree: LabelledTree) -> Result<Self, SeriesError> {
        Self::from_terms(dim, [(tree, C::one())])
    }

    pub fn from_terms(dim: usize, terms: impl IntoIterator<Item = (LabelledTree, C)>) -> Result<Self, SeriesError> {
        let mut s = Self::zero(dim);
        for (t, c) in terms {
            s.add_term(t, c)?;
        }
        Ok(s)
    }

    /// Sets the truncation level and drops every term above it.
    pub fn with_truncation(mut self, truncation: Option<usize>) -> Self {
        self.truncation = truncation;
        if let Some(k) = truncation {
            self.terms.retain(|t, _| t.degree() <= k);
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&LabelledTree, &C)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> BTreeMap<LabelledTree, C> {
        self.terms
    }

    pub fn coefficient(&self, tree: &LabelledTree) -> C {
        self.terms.get(tree).cloned().unwrap_or_else(C::zero)
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.keys().map(Tree::degree).max()
    }

    /// Adds `c · tree` after checking the labels.
    pub fn add_term(&mut self, tree: LabelledTree, c: C) -> Result<(), SeriesError> {
        check_labels(&tree, self.dim)?;
        self.accumulate(tree, c);
        Ok(())
    }

    /// Adds `c · tree` without a label check; respects the truncation.
    pub(crate) fn accumulate(&mut self, tree: LabelledTree, c: C) {
        if c.is_zero() || self.truncation.is_some_and(|k| tree.degree() > k) {
            return;
        }
        match self.terms.entry(tree) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub(crate) fn same_dim(&self, other: &Self) -> Result<(), SeriesError> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        Ok(())
    }

    /// Empty series of the same dimension with the combined truncation.
    pub(crate) fn empty_like(&self, other: &Self) -> Self {
        TreeSeries {
            dim: self.dim,
            truncation: min_truncation(self.truncation, other.truncation),
            terms: BTreeMap::new(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.same_dim(other)?;
        let mut out = self.empty_like(other);
        for (t, c) in self.terms.iter().chain(other.terms.iter()) {
            out.accumulate(t.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-C::one())
    }

    pub fn scale(&self, c: &C) -> Self {
        let mut out = TreeSeries {
            dim: self.dim,
            truncation: self.truncation,
            terms: BTreeMap::new(),
        };
        for (t, x) in &self.terms {
            out.accumulate(t.clone(), x.clone() * c.clone());
        }
        out
    }

    fn filtered(&self, keep: impl Fn(&LabelledTree) -> bool) -> Self {
        TreeSeries {
            dim: self.dim,
            truncation: self.truncation,
            terms: self
                .terms
                .iter()
                .filter(|(t, _)| keep(t))
                .map(|(t, c)| (t.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of degree `k`.
    pub fn project_degree(&self, k: usize) -> Self {
        self.filtered(|t| t.degree() == k)
    }

    /// Terms whose root has exactly `k` children.
    pub fn project_root_arity(&self, k: usize) -> Self {
        self.filtered(|t| t.root_arity() == k)
    }

    /// Terms of degree `<= k`; the result carries truncation `k`.
    pub fn truncate(&self, k: usize) -> Self {
        let mut out = self.filtered(|t| t.degree() <= k);
        out.truncation = min_truncation(self.truncation, Some(k));
        out
    }

    pub fn project_both(&self, k: usize, n: usize) -> Self {
        self.truncate(k).project_root_arity(n)
    }

    /// Coefficient of the empty tree.
    pub fn counit(&self) -> C {
        self.coefficient(&Tree::unit())
    }

    /// Euclidean norm of the degree-`k` coefficients.
    pub fn degree_norm(&self, k: usize) -> f64 {
        self.terms
            .iter()
            .filter(|(t, _)| t.degree() == k)
            .map(|(_, c)| c.magnitude().powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> TreeSeries<D> {
        let mut out = TreeSeries {
            dim: self.dim,
            truncation: self.truncation,
            terms: BTreeMap::new(),
        };
        for (t, c) in &self.terms {
            out.accumulate(t.clone(), f(c));
        }
        out
    }

    /// Exact equality up to `tol` per coefficient (`0.0` means exact).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.dim == other.dim
            && self
                .terms
                .keys()
                .chain(other.terms.keys())
                .all(|t| (self.coefficient(t) - other.coefficient(t)).within(tol))
    }
}

impl<C: Coefficient> fmt::Display for TreeSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (t, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{t}")?;
        }
        Ok(())
    }
}

/// Finite linear combination of pairs `left ⊗ right`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries<C> {
    dim: usize,
    terms: BTreeMap<(LabelledTree, LabelledTree), C>,
}

impl<C: Coefficient> TensorSeries<C> {
    pub fn zero(dim: usize) -> Self {
        TensorSeries {
            dim,
            terms: BTreeMap::new(),
        }
    }

    /// `a ⊗ b`.
    pub fn outer(a: &TreeSeries<C>, b: &TreeSeries<C>) -> Result<Self, SeriesError> {
        a.same_dim(b)?;
        let mut out = Self::zero(a.dim());
        for (l, x) in a.terms() {
            for (r, y) in b.terms() {
                out.accumulate(l.clone(), r.clone(), x.clone() * y.clone());
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(LabelledTree, LabelledTree), &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, left: &LabelledTree, right: &LabelledTree) -> C {
        // BTreeMap lookup needs an owned key pair.
        self.terms
            .get(&(left.clone(), right.clone()))
            .cloned()
            .unwrap_or_else(C::zero)
    }

    pub fn accumulate(&mut self, left: LabelledTree, right: LabelledTree, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry((left, right)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = self.clone();
        for ((l, r), c) in &other.terms {
            out.accumulate(l.clone(), r.clone(), -c.clone());
        }
        Ok(out)
    }

    /// Terms with `deg(left) + deg(right) <= k`.
    pub fn truncate_total(&self, k: usize) -> Self {
        TensorSeries {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|((l, r), _)| l.degree() + r.degree() <= k)
                .map(|(key, c)| (key.clone(), c.clone()))
                .collect(),
        }
    }
}

impl<C: Coefficient> fmt::Display for TensorSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, ((l, r), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "{c}*{l} ⊗ {r}")?;
        }
        Ok(())
    }
}
