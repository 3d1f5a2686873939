//! Grossman-Larson and Connes-Kreimer Hopf algebra structure on tree series.
//!
//! | variant | product | coproduct |
//! |---------|---------|-----------|
//! | GL      | `⋆` (sum over graftings) | `Δ_GL` (split root branches) |
//! | CK      | `∘` (identify roots)     | `Δ_CK` (admissible cuts)     |
//!
//! Products drop terms above the (minimum) truncation level of their
//! operands. Coproducts act on the stored terms only, so for a truncated
//! series the result is meaningful below the truncation degree.
//!
//! The pairing is the plain sum over the symmetry group, so basis trees are
//! orthogonal with `⟨t, t⟩ = internal_symmetry_count(t)`; the basis is not
//! orthonormal.

use std::collections::HashMap;

use thiserror::Error;

use crate::series::{internal_symmetry_count, Coefficient, LabelledTree, SeriesError, TensorSeries, TreeSeries};
use crate::tree::{self, Tree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HopfError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("operation requires a truncation level")]
    MissingTruncation,
    #[error("exp requires a series with zero counit")]
    NonZeroCounit,
    #[error("log requires a series with counit one")]
    CounitNotOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HopfVariant {
    /// `(⋆, Δ_GL)`.
    GrossmanLarson,
    /// `(∘, Δ_CK)`.
    ConnesKreimer,
}

impl HopfVariant {
    pub fn name(self) -> &'static str {
        match self {
            HopfVariant::GrossmanLarson => "GL",
            HopfVariant::ConnesKreimer => "CK",
        }
    }
}

fn bilinear<C: Coefficient>(
    a: &TreeSeries<C>,
    b: &TreeSeries<C>,
    mut basis_product: impl FnMut(&LabelledTree, &LabelledTree, &mut dyn FnMut(LabelledTree)),
) -> Result<TreeSeries<C>, SeriesError> {
    a.same_dim(b)?;
    let mut out = a.empty_like(b);
    let limit = out.truncation();
    for (t, x) in a.terms() {
        for (s, y) in b.terms() {
            if limit.is_some_and(|k| t.degree() + s.degree() > k) {
                continue;
            }
            let c = x.clone() * y.clone();
            basis_product(t, s, &mut |tree| out.accumulate(tree, c.clone()));
        }
    }
    Ok(out)
}

/// Grossman-Larson product: `t ⋆ s` sums `t` grafted onto `s` over every
/// grafting map.
pub fn star<C: Coefficient>(a: &TreeSeries<C>, b: &TreeSeries<C>) -> Result<TreeSeries<C>, HopfError> {
    Ok(bilinear(a, b, |t, s, emit| {
        tree::for_each_assignment(t.root_arity(), s.degree() + 1, |assignment| {
            emit(tree::graft_unchecked(t, s, assignment))
        })
    })?)
}

/// Root-identifying product; commutative.
pub fn circ<C: Coefficient>(a: &TreeSeries<C>, b: &TreeSeries<C>) -> Result<TreeSeries<C>, HopfError> {
    Ok(bilinear(a, b, |t, s, emit| emit(tree::root_graft(t, s)))?)
}

pub fn product<C: Coefficient>(
    variant: HopfVariant,
    a: &TreeSeries<C>,
    b: &TreeSeries<C>,
) -> Result<TreeSeries<C>, HopfError> {
    match variant {
        HopfVariant::GrossmanLarson => star(a, b),
        HopfVariant::ConnesKreimer => circ(a, b),
    }
}

/// `Δ_GL` on a single basis tree: all splittings of the root branches.
pub fn delta_gl_tree<C: Coefficient>(t: &LabelledTree, c: &C, out: &mut TensorSeries<C>) {
    let branches = t.children();
    let k = branches.len();
    for mask in 0u64..(1u64 << k) {
        let (mut left, mut right) = (Vec::new(), Vec::new());
        for (i, b) in branches.iter().enumerate() {
            if mask & (1 << i) != 0 {
                left.push(b.clone());
            } else {
                right.push(b.clone());
            }
        }
        out.accumulate(Tree::new(left), Tree::new(right), c.clone());
    }
}

/// `Δ_CK` on a single basis tree: pruned part on the left, remainder on
/// the right.
pub fn delta_ck_tree<C: Coefficient>(t: &LabelledTree, c: &C, out: &mut TensorSeries<C>) {
    for cut in tree::admissible_cuts(t) {
        out.accumulate(cut.pruned, cut.remaining, c.clone());
    }
}

pub fn delta_gl<C: Coefficient>(a: &TreeSeries<C>) -> TensorSeries<C> {
    let mut out = TensorSeries::zero(a.dim());
    for (t, c) in a.terms() {
        delta_gl_tree(t, c, &mut out);
    }
    out
}

pub fn delta_ck<C: Coefficient>(a: &TreeSeries<C>) -> TensorSeries<C> {
    let mut out = TensorSeries::zero(a.dim());
    for (t, c) in a.terms() {
        delta_ck_tree(t, c, &mut out);
    }
    out
}

pub fn coproduct<C: Coefficient>(variant: HopfVariant, a: &TreeSeries<C>) -> TensorSeries<C> {
    match variant {
        HopfVariant::GrossmanLarson => delta_gl(a),
        HopfVariant::ConnesKreimer => delta_ck(a),
    }
}

pub fn counit<C: Coefficient>(a: &TreeSeries<C>) -> C {
    a.counit()
}

pub fn unit<C: Coefficient>(dim: usize, c: C) -> TreeSeries<C> {
    TreeSeries::scalar(dim, c)
}

/// Antipode by the connected-graded recursion
/// `S(t) = -Σ c · S(t') · t''` over the coproduct terms with `deg t' < deg t`.
pub fn antipode<C: Coefficient>(a: &TreeSeries<C>, variant: HopfVariant) -> Result<TreeSeries<C>, HopfError> {
    let truncation = a.truncation().ok_or(HopfError::MissingTruncation)?;
    let dim = a.dim();
    let mut memo: HashMap<LabelledTree, TreeSeries<C>> = HashMap::new();
    let mut out = TreeSeries::zero(dim).with_truncation(Some(truncation));
    for (t, c) in a.terms() {
        let s = antipode_tree(t, variant, dim, truncation, &mut memo)?;
        out = out.add(&s.scale(c))?;
    }
    Ok(out)
}

fn antipode_tree<C: Coefficient>(
    t: &LabelledTree,
    variant: HopfVariant,
    dim: usize,
    truncation: usize,
    memo: &mut HashMap<LabelledTree, TreeSeries<C>>,
) -> Result<TreeSeries<C>, HopfError> {
    if let Some(s) = memo.get(t) {
        return Ok(s.clone());
    }
    let mut result = TreeSeries::zero(dim).with_truncation(Some(truncation));
    if t.is_unit() {
        result.accumulate(Tree::unit(), C::one());
    } else {
        let mut delta = TensorSeries::zero(dim);
        match variant {
            HopfVariant::GrossmanLarson => delta_gl_tree(t, &C::one(), &mut delta),
            HopfVariant::ConnesKreimer => delta_ck_tree(t, &C::one(), &mut delta),
        }
        for ((left, right), c) in delta.terms() {
            if left.degree() >= t.degree() {
                continue;
            }
            let s_left = antipode_tree(left, variant, dim, truncation, memo)?;
            let r = TreeSeries::from_terms(dim, [(right.clone(), C::one())])?.with_truncation(Some(truncation));
            let term = product(variant, &s_left, &r)?;
            result = result.sub(&term.scale(c))?;
        }
    }
    memo.insert(t.clone(), result.clone());
    Ok(result)
}

/// Pairing of two basis trees: zero unless equal, otherwise the number of
/// label-preserving symmetries.
pub fn pair_trees(a: &LabelledTree, b: &LabelledTree) -> u64 {
    if a == b {
        internal_symmetry_count(a)
    } else {
        0
    }
}

pub fn pairing<C: Coefficient>(a: &TreeSeries<C>, b: &TreeSeries<C>) -> Result<C, HopfError> {
    a.same_dim(b)?;
    let mut total = C::zero();
    for (t, x) in a.terms() {
        let y = b.coefficient(t);
        if !y.is_zero() {
            total = total + x.clone() * y * C::from_int(internal_symmetry_count(t) as i64);
        }
    }
    Ok(total)
}

/// `⟨a1 ⊗ a2, T⟩` as the product of the pairings on each side.
pub fn tensor_pairing<C: Coefficient>(
    a1: &TreeSeries<C>,
    a2: &TreeSeries<C>,
    tensor: &TensorSeries<C>,
) -> Result<C, HopfError> {
    a1.same_dim(a2)?;
    if a1.dim() != tensor.dim() {
        return Err(SeriesError::DimensionMismatch {
            left: a1.dim(),
            right: tensor.dim(),
        }
        .into());
    }
    let mut total = C::zero();
    for ((l, r), c) in tensor.terms() {
        let x = a1.coefficient(l);
        let y = a2.coefficient(r);
        if x.is_zero() || y.is_zero() {
            continue;
        }
        let weight = (internal_symmetry_count(l) * internal_symmetry_count(r)) as i64;
        total = total + c.clone() * x * y * C::from_int(weight);
    }
    Ok(total)
}

/// `Σ_k x^{∘k} / k!` up to the truncation level of `x`.
pub fn exp_circ<C: Coefficient>(x: &TreeSeries<C>) -> Result<TreeSeries<C>, HopfError> {
    let n = x.truncation().ok_or(HopfError::MissingTruncation)?;
    if !x.counit().is_zero() {
        return Err(HopfError::NonZeroCounit);
    }
    let mut result = TreeSeries::unit(x.dim()).with_truncation(Some(n));
    let mut term = result.clone();
    for k in 1..=n {
        term = circ(&term, x)?.scale(&C::from_ratio(1, k as i64));
        if term.is_zero() {
            break;
        }
        result = result.add(&term)?;
    }
    Ok(result)
}

/// `Σ_{k≥1} (-1)^{k+1} (g - 1)^{∘k} / k` up to the truncation level of `g`.
pub fn log_circ<C: Coefficient>(g: &TreeSeries<C>) -> Result<TreeSeries<C>, HopfError> {
    let n = g.truncation().ok_or(HopfError::MissingTruncation)?;
    if g.counit() != C::one() {
        return Err(HopfError::CounitNotOne);
    }
    let y = g.sub(&TreeSeries::unit(g.dim()))?;
    let mut result = TreeSeries::zero(g.dim()).with_truncation(Some(n));
    let mut power = TreeSeries::unit(g.dim()).with_truncation(Some(n));
    for k in 1..=n {
        power = circ(&power, &y)?;
        if power.is_zero() {
            break;
        }
        let sign = if k % 2 == 1 { 1 } else { -1 };
        result = result.add(&power.scale(&C::from_ratio(sign, k as i64)))?;
    }
    Ok(result)
}

/// Outcome of a group-likeness test.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupLikeReport<C> {
    pub group_like: bool,
    /// Largest offending component of `Δ(g) - g ⊗ g`, if any.
    pub offending: Option<(LabelledTree, LabelledTree, C)>,
    pub counit: C,
}

/// Checks `Δ(g) = g ⊗ g` on all components of total degree `<= max_degree`
/// and `ε(g) = 1`. A zero tolerance compares exactly.
pub fn is_group_like<C: Coefficient>(
    g: &TreeSeries<C>,
    variant: HopfVariant,
    max_degree: usize,
    tol: f64,
) -> GroupLikeReport<C> {
    let low = g.truncate(max_degree);
    let delta = coproduct(variant, &low);
    let square = TensorSeries::outer(&low, &low)
        .expect("same series on both sides")
        .truncate_total(max_degree);
    let diff = delta.sub(&square).expect("same dimension");
    let mut offending: Option<(LabelledTree, LabelledTree, C)> = None;
    for ((l, r), c) in diff.terms() {
        if c.within(tol) {
            continue;
        }
        let worse = offending.as_ref().is_none_or(|(_, _, w)| c.magnitude() > w.magnitude());
        if worse {
            offending = Some((l.clone(), r.clone(), c.clone()));
        }
    }
    let counit = g.counit();
    let counit_ok = (counit.clone() - C::one()).within(tol);
    GroupLikeReport {
        group_like: offending.is_none() && counit_ok,
        offending,
        counit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{bullet, rational, ExactSeries, Rational};
    use crate::text::parse_series;
    use num::Zero;

    fn s(text: &str) -> ExactSeries {
        parse_series(text, None).unwrap()
    }

    fn sd(text: &str, dim: usize) -> ExactSeries {
        parse_series(text, Some(dim)).unwrap()
    }

    #[test]
    fn star_cherry_bullet() {
        let r = star(&sd("o(1 2)", 3), &sd("o(3)", 3)).unwrap();
        assert_eq!(r.to_string(), "1*o(1 2 3) + 1*o(1 3(2)) + 1*o(2 3(1)) + 1*o(3(1 2))");
    }

    #[test]
    fn star_repeated_labels() {
        let r = star(&sd("o(1 1)", 2), &sd("o(2)", 2)).unwrap();
        assert_eq!(r.to_string(), "1*o(1 1 2) + 2*o(1 2(1)) + 1*o(2(1 1))");
    }

    #[test]
    fn units() {
        let a = sd("2*o(1(2)) + o(1 2)", 2);
        let one = ExactSeries::unit(2);
        assert_eq!(star(&one, &a).unwrap(), a);
        assert_eq!(star(&a, &one).unwrap(), a);
        assert_eq!(circ(&a, &one).unwrap(), a);
    }

    #[test]
    fn circ_examples() {
        assert_eq!(
            circ(&sd("o(1 2)", 3), &sd("o(3)", 3)).unwrap().to_string(),
            "1*o(1 2 3)"
        );
        let b = s("o(1)");
        let cube = circ(&circ(&b, &b).unwrap(), &b).unwrap();
        assert_eq!(cube.to_string(), "1*o(1 1 1)");
    }

    #[test]
    fn coproduct_examples() {
        let t = sd("o(1 3(2))", 3);
        assert_eq!(
            delta_gl(&t).to_string(),
            "1*o ⊗ o(1 3(2)) + 1*o(1) ⊗ o(3(2)) + 1*o(3(2)) ⊗ o(1) + 1*o(1 3(2)) ⊗ o"
        );
        assert_eq!(
            delta_ck(&t).to_string(),
            "1*o ⊗ o(1 3(2)) + 1*o(1) ⊗ o(3(2)) + 1*o(2) ⊗ o(1 3) + 1*o(1 2) ⊗ o(3) + 1*o(3(2)) ⊗ o(1) + 1*o(1 3(2)) ⊗ o"
        );
        assert_eq!(delta_gl(&ExactSeries::unit(1)).to_string(), "1*o ⊗ o");
        assert_eq!(delta_gl(&s("o(1)")).to_string(), "1*o ⊗ o(1) + 1*o(1) ⊗ o");
        assert_eq!(delta_ck(&s("o(1)")).to_string(), "1*o ⊗ o(1) + 1*o(1) ⊗ o");
        assert_eq!(
            delta_ck(&s("o(1(2))")).to_string(),
            "1*o ⊗ o(1(2)) + 1*o(2) ⊗ o(1) + 1*o(1(2)) ⊗ o"
        );
    }

    #[test]
    fn counit_and_unit() {
        assert_eq!(counit(&ExactSeries::unit(1)), rational(1, 1));
        assert!(counit(&s("o(1)")).is_zero());
        let c = rational(-7, 3);
        assert_eq!(counit(&unit(2, c.clone())), c);
    }

    #[test]
    fn antipode_examples() {
        let one = ExactSeries::unit(2).with_truncation(Some(3));
        assert_eq!(antipode(&one, HopfVariant::GrossmanLarson).unwrap().to_string(), "1*o");
        let b = s("o(1)").with_truncation(Some(3));
        assert_eq!(
            antipode(&b, HopfVariant::GrossmanLarson).unwrap().to_string(),
            "-1*o(1)"
        );
        let l = s("o(1(2))").with_truncation(Some(3));
        assert_eq!(
            antipode(&l, HopfVariant::ConnesKreimer).unwrap().to_string(),
            "1*o(1 2) + -1*o(1(2))"
        );
        assert_eq!(
            antipode(&s("o(1)"), HopfVariant::ConnesKreimer),
            Err(HopfError::MissingTruncation)
        );
    }

    #[test]
    fn pairing_examples() {
        let t = sd("o(1(2 3))", 3);
        assert_eq!(pairing(&t, &t).unwrap(), rational(1, 1));
        assert_eq!(
            pairing(&ExactSeries::unit(2), &ExactSeries::unit(2)).unwrap(),
            rational(1, 1)
        );
        assert!(pairing(&sd("o(1)", 2), &sd("o(2)", 2)).unwrap().is_zero());
        let c = s("o(1 1)");
        assert_eq!(pairing(&c, &c).unwrap(), rational(2, 1));
        assert!(pairing(&sd("o(1)", 2), &sd("o(1)", 3)).is_err());
    }

    #[test]
    fn exp_and_log() {
        let zero = ExactSeries::zero(1).with_truncation(Some(3));
        assert_eq!(exp_circ(&zero).unwrap(), ExactSeries::unit(1).with_truncation(Some(3)));
        let x = s("o(1)").with_truncation(Some(2));
        assert_eq!(exp_circ(&x).unwrap().to_string(), "1*o + 1*o(1) + 1/2*o(1 1)");
        assert_eq!(log_circ(&exp_circ(&x).unwrap()).unwrap(), x);
        assert_eq!(
            exp_circ(&s("o + o(1)").with_truncation(Some(2))),
            Err(HopfError::NonZeroCounit)
        );
        assert_eq!(
            log_circ(&s("o(1)").with_truncation(Some(2))),
            Err(HopfError::CounitNotOne)
        );
        assert_eq!(exp_circ(&s("o(1)")), Err(HopfError::MissingTruncation));
    }

    #[test]
    fn group_like_examples() {
        let one = ExactSeries::unit(1);
        assert!(is_group_like(&one, HopfVariant::GrossmanLarson, 4, 0.0).group_like);

        let g = s("o + o(1)");
        let r = is_group_like(&g, HopfVariant::GrossmanLarson, 2, 0.0);
        assert!(!r.group_like);
        let (l, rr, c) = r.offending.unwrap();
        assert_eq!((l, rr), (bullet(1), bullet(1)));
        assert_eq!(c, rational(-1, 1));

        let x = sd("o(1) + o(1(2))", 2).with_truncation(Some(4));
        let e = exp_circ(&x).unwrap();
        assert!(is_group_like(&e, HopfVariant::GrossmanLarson, 4, 0.0).group_like);
    }

    #[test]
    fn float_layer_group_like_tolerance() {
        let x = sd("o(1) + 1/3*o(2(1))", 2).with_truncation(Some(3));
        let g = exp_circ(&x).unwrap().map_coefficients(crate::series::rational_to_f64);
        assert!(is_group_like(&g, HopfVariant::GrossmanLarson, 3, 1e-12).group_like);
        let _ = Rational::zero();
    }
}
