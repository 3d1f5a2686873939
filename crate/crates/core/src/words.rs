//! Truncated tensor algebra over `R^d`: word series, concatenation,
//! shuffles, and the embedding of words into tree series.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num::ToPrimitive;

use crate::hopf;
use crate::series::{bullet, Coefficient, ExactSeries, LabelledTree, SeriesError, TreeSeries};
use crate::tree::{Node, Tree};

/// A word `i1 i2 … ik` over the alphabet `{1..d}`.
pub type Word = Vec<u32>;

/// Largest word length supported by signatures and lifts.
pub const LEVEL_CAP: usize = 4;

/// Finite linear combination of words of length at most `truncation`.
#[derive(Debug, Clone, PartialEq)]
pub struct WordSeries<C> {
    dim: usize,
    truncation: usize,
    terms: BTreeMap<Word, C>,
}

impl<C: Coefficient> WordSeries<C> {
    pub fn zero(dim: usize, truncation: usize) -> Self {
        WordSeries {
            dim,
            truncation,
            terms: BTreeMap::new(),
        }
    }

    pub fn unit(dim: usize, truncation: usize) -> Self {
        let mut s = Self::zero(dim, truncation);
        s.terms.insert(Vec::new(), C::one());
        s
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &C)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, word: &[u32]) -> C {
        self.terms.get(word).cloned().unwrap_or_else(C::zero)
    }

    /// Adds `c · word`; words longer than the truncation are dropped.
    pub fn add_term(&mut self, word: Word, c: C) -> Result<(), SeriesError> {
        if let Some(&label) = word.iter().find(|&&l| l == 0 || l as usize > self.dim) {
            return Err(SeriesError::LabelOutOfRange { label, dim: self.dim });
        }
        if word.len() > self.truncation {
            return Ok(());
        }
        let entry = self.terms.entry(word.clone()).or_insert_with(C::zero);
        *entry = entry.clone() + c;
        if entry.is_zero() {
            self.terms.remove(&word);
        }
        Ok(())
    }

    /// Concatenation product, truncated at the smaller truncation.
    pub fn concat(&self, other: &Self) -> Result<Self, SeriesError> {
        if self.dim != other.dim {
            return Err(SeriesError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut out = Self::zero(self.dim, self.truncation.min(other.truncation));
        for (u, a) in &self.terms {
            for (v, b) in &other.terms {
                if u.len() + v.len() > out.truncation {
                    continue;
                }
                let mut w = u.clone();
                w.extend_from_slice(v);
                out.add_term(w, a.clone() * b.clone())?;
            }
        }
        Ok(out)
    }

    /// Tensor exponential of the letter combination `Σ v_i e_i`.
    pub fn exp_increment(increment: &[C], truncation: usize) -> Self {
        let dim = increment.len();
        let mut out = Self::unit(dim, truncation);
        let mut layer: Vec<(Word, C)> = vec![(Vec::new(), C::one())];
        for k in 1..=truncation {
            let mut next = Vec::with_capacity(layer.len() * dim);
            for (w, c) in &layer {
                for (i, v) in increment.iter().enumerate() {
                    let mut word = w.clone();
                    word.push(i as u32 + 1);
                    next.push((word, (c.clone() * v.clone()).div_int(k as i64)));
                }
            }
            for (w, c) in &next {
                out.add_term(w.clone(), c.clone()).expect("letters in range");
            }
            layer = next;
        }
        out
    }

    pub fn map_coefficients<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> WordSeries<D> {
        let mut out = WordSeries::zero(self.dim, self.truncation);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), f(c)).expect("same alphabet");
        }
        out
    }
}

impl<C: Coefficient> fmt::Display for WordSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(
                f,
                "{c}*({})",
                w.iter().map(u32::to_string).collect::<Vec<_>>().join(" ")
            )?;
        }
        Ok(())
    }
}

/// All words over `{1..dim}` of length exactly `len`, in lexicographic order.
pub fn words_of_length(dim: usize, len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (1..=dim as u32).map(move |i| {
                    let mut w = w.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
    }
    out
}

/// Shuffle product `u ⧢ v` as word multiplicities.
pub fn shuffle(u: &[u32], v: &[u32]) -> BTreeMap<Word, u64> {
    let mut out = BTreeMap::new();
    fn rec(u: &[u32], v: &[u32], prefix: &mut Word, out: &mut BTreeMap<Word, u64>) {
        if u.is_empty() || v.is_empty() {
            let mut w = prefix.clone();
            w.extend_from_slice(u);
            w.extend_from_slice(v);
            *out.entry(w).or_insert(0) += 1;
            return;
        }
        prefix.push(u[0]);
        rec(&u[1..], v, prefix, out);
        prefix.pop();
        prefix.push(v[0]);
        rec(u, &v[1..], prefix, out);
        prefix.pop();
    }
    rec(u, v, &mut Vec::new(), &mut out);
    out
}

/// Result of a shuffle-character test.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleReport {
    pub character: bool,
    pub max_residual: f64,
    /// Worst pair `(u, v)` with `⟨sig, u ⧢ v⟩` and `⟨sig, u⟩⟨sig, v⟩`.
    pub witness: Option<(Word, Word, f64, f64)>,
}

/// Checks `⟨sig, u ⧢ v⟩ = ⟨sig, u⟩⟨sig, v⟩` for every pair of nonempty words
/// with `|u| + |v| <= truncation`.
pub fn shuffle_group_like_check(sig: &WordSeries<f64>, tol: f64) -> ShuffleReport {
    let n = sig.truncation();
    let mut report = ShuffleReport {
        character: true,
        max_residual: 0.0,
        witness: None,
    };
    for lu in 1..n {
        for lv in 1..=n - lu {
            for u in words_of_length(sig.dim(), lu) {
                for v in words_of_length(sig.dim(), lv) {
                    let lhs: f64 = shuffle(&u, &v)
                        .iter()
                        .map(|(w, m)| *m as f64 * sig.coefficient(w))
                        .sum();
                    let rhs = sig.coefficient(&u) * sig.coefficient(&v);
                    let r = (lhs - rhs).abs();
                    if r > report.max_residual {
                        report.max_residual = r;
                        if r > tol {
                            report.witness = Some((u.clone(), v.clone(), lhs, rhs));
                        }
                    }
                }
            }
        }
    }
    report.character = report.max_residual <= tol;
    report
}

/// The ladder tree recording the iterated integral over `word`: the last
/// letter sits next to the root and the first letter is the leaf.
pub fn ladder(word: &[u32]) -> LabelledTree {
    let mut node: Option<Node<u32>> = None;
    for &l in word {
        node = Some(Node::new(l, node.into_iter().collect()));
    }
    Tree::new(node.into_iter().collect())
}

type PhiCache = Mutex<HashMap<(usize, Word), Arc<ExactSeries>>>;

fn phi_cache() -> &'static PhiCache {
    static CACHE: OnceLock<PhiCache> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `Φ(i1 … ik) = bullet(i1) ⋆ … ⋆ bullet(ik)`, folded from the left.
pub fn phi_word(word: &[u32], dim: usize) -> Result<Arc<ExactSeries>, SeriesError> {
    if let Some(&label) = word.iter().find(|&&l| l == 0 || l as usize > dim) {
        return Err(SeriesError::LabelOutOfRange { label, dim });
    }
    let key = (dim, word.to_vec());
    if let Some(hit) = phi_cache().lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let value = match word.split_last() {
        None => ExactSeries::unit(dim),
        Some((&last, init)) => {
            let head = phi_word(init, dim)?;
            let tail = ExactSeries::from_tree(dim, bullet(last))?;
            hopf::star(&head, &tail).expect("same dimension")
        }
    };
    let value = Arc::new(value);
    phi_cache().lock().expect("cache lock").insert(key, value.clone());
    Ok(value)
}

/// Linear extension of [`phi_word`]; the result is truncated at the word
/// series' truncation.
pub fn phi_embed<C: Coefficient>(sig: &WordSeries<C>) -> TreeSeries<C> {
    let mut out = TreeSeries::zero(sig.dim()).with_truncation(Some(sig.truncation()));
    for (w, c) in sig.terms() {
        let image = phi_word(w, sig.dim()).expect("letters in range");
        for (t, m) in image.terms() {
            let m = m.to_integer().to_i64().expect("small multiplicity");
            out.add_term(t.clone(), c.clone() * C::from_int(m))
                .expect("labels in range");
        }
    }
    out
}

/// Left inverse of [`phi_embed`]: reads off ladder coefficients as words.
pub fn phi_preimage<C: Coefficient>(x: &TreeSeries<C>, truncation: usize) -> WordSeries<C> {
    let mut out = WordSeries::zero(x.dim(), truncation);
    for len in 0..=truncation {
        for w in words_of_length(x.dim(), len) {
            let c = x.coefficient(&ladder(&w));
            if !c.is_zero() {
                out.add_term(w, c).expect("letters in range");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{rational, Rational};
    use crate::text::parse_series;

    #[test]
    fn exp_of_increment() {
        let sig = WordSeries::<f64>::exp_increment(&[2.0, 3.0], 2);
        assert_eq!(sig.coefficient(&[]), 1.0);
        assert_eq!(sig.coefficient(&[1]), 2.0);
        assert_eq!(sig.coefficient(&[1, 2]), 3.0);
        assert_eq!(sig.coefficient(&[2, 2]), 4.5);
        assert_eq!(sig.terms().count(), 7);
    }

    #[test]
    fn shuffle_counts() {
        let s = shuffle(&[1], &[2]);
        assert_eq!(s.len(), 2);
        assert_eq!(shuffle(&[1], &[1]).get(&vec![1, 1]), Some(&2));
        let total: u64 = shuffle(&[1, 2], &[3, 4, 5]).values().sum();
        assert_eq!(total, 10);
        assert_eq!(
            shuffle(&[], &[1, 2]).into_iter().collect::<Vec<_>>(),
            vec![(vec![1, 2], 1)]
        );
    }

    #[test]
    fn ladders() {
        assert_eq!(ladder(&[]).code(), "o");
        assert_eq!(ladder(&[1, 2]).code(), "o(2(1))");
        assert_eq!(ladder(&[3, 1, 2]).code(), "o(2(1(3)))");
    }

    #[test]
    fn phi_small_words() {
        assert_eq!(phi_word(&[1], 1).unwrap().to_string(), "1*o(1)");
        assert_eq!(phi_word(&[1, 2], 2).unwrap().to_string(), "1*o(1 2) + 1*o(2(1))");
        assert_eq!(phi_word(&[1, 1], 1).unwrap().to_string(), "1*o(1 1) + 1*o(1(1))");
        assert!(phi_word(&[3], 2).is_err());
    }

    #[test]
    fn phi_is_multiplicative() {
        let words = words_of_length(2, 2);
        for u in &words {
            for v in &words {
                let mut uv = u.clone();
                uv.extend_from_slice(v);
                let lhs = phi_word(&uv, 2).unwrap();
                let rhs = hopf::star(&phi_word(u, 2).unwrap(), &phi_word(v, 2).unwrap()).unwrap();
                assert_eq!(*lhs, rhs);
            }
        }
    }

    #[test]
    fn preimage_inverts_phi() {
        let mut s: WordSeries<Rational> = WordSeries::zero(2, 3);
        s.add_term(vec![], rational(1, 1)).unwrap();
        s.add_term(vec![1, 2], rational(3, 2)).unwrap();
        s.add_term(vec![2, 2, 1], rational(-1, 3)).unwrap();
        let x = phi_embed(&s);
        assert_eq!(phi_preimage(&x, 3), s);
    }

    #[test]
    fn phi_of_exponential_is_group_like() {
        let sig = WordSeries::<Rational>::exp_increment(&[rational(1, 1), rational(2, 1)], 3);
        let x = phi_embed(&sig);
        let report = hopf::is_group_like(&x, hopf::HopfVariant::GrossmanLarson, 3, 0.0);
        assert!(report.group_like, "{report:?}");
        assert_eq!(hopf::exp_circ(&x.project_root_arity(1)).unwrap(), x);
        let level2 = parse_series(
            "1/2*o(1 1) + 2*o(1 2) + 2*o(2 2) + 1/2*o(1(1)) + 1*o(1(2)) + 1*o(2(1)) + 2*o(2(2))",
            Some(2),
        )
        .unwrap();
        assert!(x.project_degree(2).approx_eq(&level2, 0.0));
    }

    #[test]
    fn signature_of_segment_is_a_character() {
        let sig = WordSeries::<f64>::exp_increment(&[0.3, -1.1, 0.7], 3);
        let r = shuffle_group_like_check(&sig, 1e-12);
        assert!(r.character, "{r:?}");
        let mut broken = sig.clone();
        broken.add_term(vec![1, 1], 0.5).unwrap();
        let r = shuffle_group_like_check(&broken, 1e-12);
        assert!(!r.character);
        let (u, v, _, _) = r.witness.unwrap();
        assert!(u.len() + v.len() >= 2);
    }
}
