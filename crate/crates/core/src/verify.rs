//! Randomized, seeded property suites for the tree Hopf algebras.
//!
//! Every check runs in exact rational arithmetic. Trials are independent and
//! run in parallel; trial `i` draws from a generator seeded with `seed + i`,
//! so reports are reproducible regardless of scheduling.

use std::collections::BTreeMap;

use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::hopf::{self, HopfVariant};
use crate::series::{labelled_basis, rational, ExactSeries, LabelledTree, Rational, TensorSeries};
use crate::tree::{Node, Tree};

/// Parameters shared by the property suites.
#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    pub max_degree: usize,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    /// Upper bound on the number of basis terms in a random series.
    pub max_terms: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            max_degree: 4,
            dim: 3,
            trials: 200,
            seed: 0,
            max_terms: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Description of the first failing trial, by trial index.
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckSummary>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn total_failures(&self) -> usize {
        self.checks.iter().map(|c| c.failures).sum()
    }
}

impl std::fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{}: {}", self.suite, if self.passed() { "ok" } else { "FAILED" })?;
        for c in &self.checks {
            write!(f, "  {:<28} {:>5} trials  {} failures", c.name, c.trials, c.failures)?;
            if let Some(w) = &c.witness {
                write!(f, "  first: {w}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

type Outcome = (&'static str, Result<(), String>);

fn run_suite(name: &str, cfg: &SuiteConfig, trial: impl Fn(&mut ChaCha8Rng) -> Vec<Outcome> + Sync) -> SuiteReport {
    let outcomes: Vec<(usize, Vec<Outcome>)> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            (i, trial(&mut rng))
        })
        .collect();
    let mut order: Vec<&'static str> = Vec::new();
    let mut table: BTreeMap<&'static str, CheckSummary> = BTreeMap::new();
    for (i, checks) in outcomes {
        for (check, result) in checks {
            let entry = table.entry(check).or_insert_with(|| {
                order.push(check);
                CheckSummary {
                    name: check.to_string(),
                    trials: 0,
                    failures: 0,
                    witness: None,
                }
            });
            entry.trials += 1;
            if let Err(detail) = result {
                entry.failures += 1;
                if entry.witness.is_none() {
                    entry.witness = Some(format!("trial {i}: {detail}"));
                }
            }
        }
    }
    SuiteReport {
        suite: name.to_string(),
        checks: order.into_iter().map(|c| table.remove(c).expect("recorded")).collect(),
    }
}

/// A uniformly random recursive labelled tree with exactly `degree`
/// non-root vertices.
pub fn random_labelled_tree(rng: &mut impl Rng, degree: usize, dim: usize) -> LabelledTree {
    // vertex 0 is the root; vertex v > 0 hangs below a uniformly chosen earlier vertex
    let parents: Vec<usize> = (1..=degree).map(|v| rng.gen_range(0..v)).collect();
    let labels: Vec<u32> = (0..degree).map(|_| rng.gen_range(1..=dim as u32)).collect();
    fn build(v: usize, parents: &[usize], labels: &[u32]) -> Vec<Node<u32>> {
        (1..=parents.len())
            .filter(|&w| parents[w - 1] == v)
            .map(|w| Node::new(labels[w - 1], build(w, parents, labels)))
            .collect()
    }
    Tree::new(build(0, &parents, &labels))
}

/// Random nonzero rational with small numerator and denominator.
pub fn random_rational(rng: &mut impl Rng) -> Rational {
    let n = loop {
        let n = rng.gen_range(-4i64..=4);
        if n != 0 {
            break n;
        }
    };
    rational(n, rng.gen_range(1i64..=3))
}

/// A series with up to `max_terms` random terms of degree `<= max_degree`,
/// truncated at `max_degree`.
pub fn random_series(rng: &mut impl Rng, max_degree: usize, dim: usize, max_terms: usize) -> ExactSeries {
    let mut s = ExactSeries::zero(dim).with_truncation(Some(max_degree));
    let count = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..count {
        let degree = rng.gen_range(0..=max_degree);
        let t = random_labelled_tree(rng, degree, dim);
        s.add_term(t, random_rational(rng)).expect("labels in range");
    }
    s
}

/// Like [`random_series`] but with no unit term and every tree having a
/// single root branch.
pub fn random_primitive_series(rng: &mut impl Rng, max_degree: usize, dim: usize, max_terms: usize) -> ExactSeries {
    let mut s = ExactSeries::zero(dim).with_truncation(Some(max_degree));
    let count = rng.gen_range(1..=max_terms.max(1));
    for _ in 0..count {
        let degree = rng.gen_range(1..=max_degree.max(1));
        let branch = random_labelled_tree(rng, degree - 1, dim).into_children();
        let t = Tree::new(vec![Node::new(rng.gen_range(1..=dim as u32), branch)]);
        s.add_term(t, random_rational(rng)).expect("labels in range");
    }
    s
}

fn single(dim: usize, t: &LabelledTree, truncation: Option<usize>) -> ExactSeries {
    ExactSeries::from_terms(dim, [(t.clone(), Rational::one())])
        .expect("labels in range")
        .with_truncation(truncation)
}

fn expect_eq<T: PartialEq + std::fmt::Display>(left: &T, right: &T, what: &str) -> Result<(), String> {
    if left == right {
        Ok(())
    } else {
        Err(format!("{what}: {left} != {right}"))
    }
}

type Triple = BTreeMap<(LabelledTree, LabelledTree, LabelledTree), Rational>;

fn add_triple(map: &mut Triple, key: (LabelledTree, LabelledTree, LabelledTree), c: Rational) {
    let entry = map.entry(key.clone()).or_insert_with(Rational::zero);
    *entry += c;
    if entry.is_zero() {
        map.remove(&key);
    }
}

fn single_coproduct(variant: HopfVariant, t: &LabelledTree, dim: usize) -> TensorSeries<Rational> {
    let mut out = TensorSeries::zero(dim);
    match variant {
        HopfVariant::GrossmanLarson => hopf::delta_gl_tree(t, &Rational::one(), &mut out),
        HopfVariant::ConnesKreimer => hopf::delta_ck_tree(t, &Rational::one(), &mut out),
    }
    out
}

fn check_coassociativity(variant: HopfVariant, a: &ExactSeries) -> Result<(), String> {
    let delta = hopf::coproduct(variant, a);
    let (mut left, mut right) = (Triple::new(), Triple::new());
    for ((l, r), c) in delta.terms() {
        for ((ll, lr), c2) in single_coproduct(variant, l, a.dim()).terms() {
            add_triple(&mut left, (ll.clone(), lr.clone(), r.clone()), c * c2);
        }
        for ((rl, rr), c2) in single_coproduct(variant, r, a.dim()).terms() {
            add_triple(&mut right, (l.clone(), rl.clone(), rr.clone()), c * c2);
        }
    }
    if left == right {
        return Ok(());
    }
    let key = left
        .keys()
        .chain(right.keys())
        .find(|k| left.get(*k) != right.get(*k))
        .expect("maps differ");
    Err(format!("coassociativity fails at {} ⊗ {} ⊗ {}", key.0, key.1, key.2))
}

fn check_counit_laws(variant: HopfVariant, a: &ExactSeries) -> Result<(), String> {
    let delta = hopf::coproduct(variant, a);
    let mut via_left = ExactSeries::zero(a.dim()).with_truncation(a.truncation());
    let mut via_right = via_left.clone();
    for ((l, r), c) in delta.terms() {
        if l.is_unit() {
            via_left.add_term(r.clone(), c.clone()).map_err(|e| e.to_string())?;
        }
        if r.is_unit() {
            via_right.add_term(l.clone(), c.clone()).map_err(|e| e.to_string())?;
        }
    }
    expect_eq(&via_left, a, "(ε⊗id)Δ")?;
    expect_eq(&via_right, a, "(id⊗ε)Δ")
}

fn check_compatibility(variant: HopfVariant, a: &ExactSeries, b: &ExactSeries) -> Result<(), String> {
    let n = a.truncation().expect("suite series are truncated");
    let ab = hopf::product(variant, a, b).map_err(|e| e.to_string())?;
    let lhs = hopf::coproduct(variant, &ab);
    let (da, db) = (hopf::coproduct(variant, a), hopf::coproduct(variant, b));
    let mut rhs = TensorSeries::zero(a.dim());
    for ((l1, r1), c1) in da.terms() {
        for ((l2, r2), c2) in db.terms() {
            if l1.degree() + r1.degree() + l2.degree() + r2.degree() > n {
                continue;
            }
            let left = hopf::product(variant, &single(a.dim(), l1, None), &single(a.dim(), l2, None))
                .map_err(|e| e.to_string())?;
            let right = hopf::product(variant, &single(a.dim(), r1, None), &single(a.dim(), r2, None))
                .map_err(|e| e.to_string())?;
            let c = c1 * c2;
            for (x, cx) in left.terms() {
                for (y, cy) in right.terms() {
                    rhs.accumulate(x.clone(), y.clone(), &c * cx * cy);
                }
            }
        }
    }
    let diff = lhs.sub(&rhs).map_err(|e| e.to_string())?;
    let first = diff
        .terms()
        .next()
        .map(|((l, r), c)| format!("Δ(ab) - Δ(a)Δ(b) has {c}*{l} ⊗ {r}"));
    first.map_or(Ok(()), Err)
}

fn check_grading(variant: HopfVariant, t: &LabelledTree, s: &LabelledTree, dim: usize) -> Result<(), String> {
    let prod = hopf::product(variant, &single(dim, t, None), &single(dim, s, None)).map_err(|e| e.to_string())?;
    if let Some((bad, _)) = prod.terms().find(|(x, _)| x.degree() != t.degree() + s.degree()) {
        return Err(format!("{t} · {s} contains {bad}"));
    }
    let delta = single_coproduct(variant, t, dim);
    if let Some(((l, r), _)) = delta.terms().find(|((l, r), _)| l.degree() + r.degree() != t.degree()) {
        return Err(format!("Δ({t}) contains {l} ⊗ {r}"));
    }
    Ok(())
}

fn check_antipode(variant: HopfVariant, a: &ExactSeries) -> Result<(), String> {
    let n = a.truncation().expect("suite series are truncated");
    let dim = a.dim();
    let delta = hopf::coproduct(variant, a);
    let expected = ExactSeries::scalar(dim, a.counit()).with_truncation(Some(n));
    let mut left = ExactSeries::zero(dim).with_truncation(Some(n));
    let mut right = left.clone();
    for ((l, r), c) in delta.terms() {
        let s_l = hopf::antipode(&single(dim, l, Some(n)), variant).map_err(|e| e.to_string())?;
        let s_r = hopf::antipode(&single(dim, r, Some(n)), variant).map_err(|e| e.to_string())?;
        let lt = hopf::product(variant, &s_l, &single(dim, r, Some(n))).map_err(|e| e.to_string())?;
        let rt = hopf::product(variant, &single(dim, l, Some(n)), &s_r).map_err(|e| e.to_string())?;
        left = left.add(&lt.scale(c)).map_err(|e| e.to_string())?;
        right = right.add(&rt.scale(c)).map_err(|e| e.to_string())?;
    }
    expect_eq(&left, &expected, "m(S⊗id)Δ")?;
    expect_eq(&right, &expected, "m(id⊗S)Δ")
}

fn hopf_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<Outcome> {
    let (n, d, m) = (cfg.max_degree, cfg.dim, cfg.max_terms);
    let a = random_series(rng, n, d, m);
    let b = random_series(rng, n, d, m);
    let c = random_series(rng, n, d, m);
    let one = ExactSeries::unit(d);
    let (deg_t, deg_s) = (rng.gen_range(0..=n), rng.gen_range(0..=n));
    let t = random_labelled_tree(rng, deg_t, d);
    let s = random_labelled_tree(rng, deg_s, d);
    let mut out: Vec<Outcome> = Vec::new();
    for variant in [HopfVariant::GrossmanLarson, HopfVariant::ConnesKreimer] {
        let gl = variant == HopfVariant::GrossmanLarson;
        let mul = |x: &ExactSeries, y: &ExactSeries| hopf::product(variant, x, y).expect("same dim");
        let assoc = expect_eq(&mul(&mul(&a, &b), &c), &mul(&a, &mul(&b, &c)), "associativity");
        let units = expect_eq(&mul(&one, &a), &a, "1·a").and_then(|_| expect_eq(&mul(&a, &one), &a, "a·1"));
        let (assoc_name, unit_name, coassoc_name, counit_name, compat_name, grading_name, antipode_name) = if gl {
            (
                "star associativity",
                "star unit",
                "ΔGL coassociativity",
                "ΔGL counit",
                "GL compatibility",
                "GL grading",
                "GL antipode",
            )
        } else {
            (
                "circ associativity",
                "circ unit",
                "ΔCK coassociativity",
                "ΔCK counit",
                "CK compatibility",
                "CK grading",
                "CK antipode",
            )
        };
        out.push((assoc_name, assoc));
        out.push((unit_name, units));
        out.push((coassoc_name, check_coassociativity(variant, &a)));
        out.push((counit_name, check_counit_laws(variant, &a)));
        out.push((compat_name, check_compatibility(variant, &a, &b)));
        out.push((grading_name, check_grading(variant, &t, &s, d)));
        out.push((antipode_name, check_antipode(variant, &a)));
        if !gl {
            out.push(("circ commutativity", expect_eq(&mul(&a, &b), &mul(&b, &a), "a∘b = b∘a")));
        }
    }
    out
}

/// Associativity, units, coassociativity, counit laws, bialgebra
/// compatibility, grading and antipode convolution for both variants.
pub fn verify_hopf(cfg: &SuiteConfig) -> SuiteReport {
    run_suite("hopf axioms", cfg, |rng| hopf_trial(cfg, rng))
}

fn duality_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<Outcome> {
    let (n, d) = (cfg.max_degree, cfg.dim);
    let deg1 = rng.gen_range(0..=n);
    let deg2 = rng.gen_range(0..=n - deg1);
    let a1 = single(d, &random_labelled_tree(rng, deg1, d), None);
    let a2 = single(d, &random_labelled_tree(rng, deg2, d), None);
    let star = hopf::star(&a1, &a2).expect("same dim");
    let circ = hopf::circ(&a1, &a2).expect("same dim");
    // pairing against an unrelated tree is almost always trivially zero, so
    // b is usually drawn from the product itself
    let pick = |rng: &mut ChaCha8Rng, s: &ExactSeries| -> LabelledTree {
        if rng.gen_bool(0.8) {
            let terms: Vec<&LabelledTree> = s.terms().map(|(t, _)| t).collect();
            terms[rng.gen_range(0..terms.len())].clone()
        } else {
            random_labelled_tree(rng, deg1 + deg2, d)
        }
    };
    let b_star = single(d, &pick(rng, &star), None);
    let b_circ = single(d, &pick(rng, &circ), None);
    let lhs = hopf::pairing(&star, &b_star).expect("same dim");
    let rhs = hopf::tensor_pairing(&a1, &a2, &hopf::delta_ck(&b_star)).expect("same dim");
    let first = if lhs == rhs {
        Ok(())
    } else {
        Err(format!("⟨{a1} ⋆ {a2}, {b_star}⟩ = {lhs} but ⟨a1⊗a2, ΔCK b⟩ = {rhs}"))
    };
    let lhs = hopf::pairing(&circ, &b_circ).expect("same dim");
    let rhs = hopf::tensor_pairing(&a1, &a2, &hopf::delta_gl(&b_circ)).expect("same dim");
    let second = if lhs == rhs {
        Ok(())
    } else {
        Err(format!("⟨{a1} ∘ {a2}, {b_circ}⟩ = {lhs} but ⟨a1⊗a2, ΔGL b⟩ = {rhs}"))
    };
    vec![("star vs ΔCK", first), ("circ vs ΔGL", second)]
}

/// Exact duality `⟨a1⋆a2, b⟩ = ⟨a1⊗a2, ΔCK b⟩` and
/// `⟨a1∘a2, b⟩ = ⟨a1⊗a2, ΔGL b⟩` on random basis triples, plus Gram-matrix
/// invertibility on small homogeneous bases.
pub fn verify_duality(cfg: &SuiteConfig, gram_degree: usize, gram_dim: usize) -> SuiteReport {
    let mut report = run_suite("duality", cfg, |rng| duality_trial(cfg, rng));
    let mut failures = 0;
    let mut witness = None;
    let mut checked = 0;
    for dim in 1..=gram_dim {
        for degree in 0..=gram_degree {
            checked += 1;
            let (size, rank) = gram_rank(degree, dim);
            if rank != size {
                failures += 1;
                witness.get_or_insert_with(|| format!("degree {degree}, dim {dim}: rank {rank} of {size}"));
            }
        }
    }
    report.checks.push(CheckSummary {
        name: "gram invertibility".to_string(),
        trials: checked,
        failures,
        witness,
    });
    report
}

/// Basis size and exact rank of the pairing's Gram matrix on the degree-`k`
/// labelled trees over `R^dim`.
pub fn gram_rank(degree: usize, dim: usize) -> (usize, usize) {
    let basis: Vec<LabelledTree> = labelled_basis(degree, dim)
        .expect("small degree")
        .into_iter()
        .filter(|t| t.degree() == degree)
        .collect();
    let mut m: Vec<Vec<Rational>> = basis
        .iter()
        .map(|x| {
            basis
                .iter()
                .map(|y| Rational::from_integer(hopf::pair_trees(x, y).into()))
                .collect()
        })
        .collect();
    (basis.len(), rank(&mut m))
}

fn rank(m: &mut [Vec<Rational>]) -> usize {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pivot = m[r][c].clone();
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = &m[i][c] / &pivot;
                let pivot_row = m[r][c..cols].to_vec();
                for (x, y) in m[i][c..cols].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
        r += 1;
    }
    r
}

fn factorial(k: usize) -> Rational {
    Rational::from_integer((1..=k as i64).product::<i64>().into())
}

fn exponential_trial(cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<Outcome> {
    let (n, d, m) = (cfg.max_degree, cfg.dim, cfg.max_terms);
    let mut out: Vec<Outcome> = Vec::new();

    // any x with ε(x) = 0 round-trips
    let mut x = random_series(rng, n, d, m);
    x.add_term(Tree::unit(), -x.counit()).expect("unit term");
    let g = hopf::exp_circ(&x).expect("ε(x) = 0");
    let back = hopf::log_circ(&g).expect("ε(g) = 1");
    out.push(("log(exp x) = x", expect_eq(&back, &x, "log exp")));
    let mut h = random_series(rng, n, d, m);
    h.add_term(Tree::unit(), Rational::one() - h.counit())
        .expect("unit term");
    let again = hopf::exp_circ(&hopf::log_circ(&h).expect("ε(h) = 1")).expect("ε = 0");
    out.push(("exp(log g) = g", expect_eq(&again, &h, "exp log")));

    // single-branch generators give group-like elements determined by π_1
    let p = random_primitive_series(rng, n, d, m);
    let g = hopf::exp_circ(&p).expect("ε(p) = 0");
    let report = hopf::is_group_like(&g, HopfVariant::GrossmanLarson, n, 0.0);
    out.push((
        "exp of π1 is group-like",
        if report.group_like {
            Ok(())
        } else {
            Err(format!(
                "offending {:?}",
                report.offending.map(|(l, r, c)| format!("{c}*{l} ⊗ {r}"))
            ))
        },
    ));
    let pi1 = g.project_root_arity(1);
    let mut projection = Ok(());
    let mut power = ExactSeries::unit(d).with_truncation(Some(n));
    for k in 0..=n {
        if k > 0 {
            power = hopf::circ(&power, &pi1).expect("same dim");
        }
        let expected = power.scale(&(Rational::one() / factorial(k)));
        if let Err(e) = expect_eq(&g.project_root_arity(k), &expected, &format!("π_{k}(g)")) {
            projection = Err(e);
            break;
        }
    }
    out.push(("π_k(g) = π1(g)^k / k!", projection));

    // group-like elements are characters for ∘
    let deg1 = rng.gen_range(0..=n);
    let deg2 = rng.gen_range(0..=n - deg1);
    let b1 = single(d, &random_labelled_tree(rng, deg1, d), None);
    let b2 = single(d, &random_labelled_tree(rng, deg2, d), None);
    let prod = hopf::circ(&b1, &b2).expect("same dim");
    let lhs = hopf::pairing(&g, &prod).expect("same dim");
    let rhs = hopf::pairing(&g, &b1).expect("same dim") * hopf::pairing(&g, &b2).expect("same dim");
    out.push((
        "character property",
        if lhs == rhs {
            Ok(())
        } else {
            Err(format!("⟨g, {b1} ∘ {b2}⟩ = {lhs}, product of pairings = {rhs}"))
        },
    ));
    out
}

/// Round trips of `exp_∘`/`log_∘`, group-likeness of exponentials of
/// single-branch series, the projection identity `π_k(g) = π_1(g)^{∘k}/k!`
/// and the character property of group-like elements.
pub fn verify_exponential(cfg: &SuiteConfig) -> SuiteReport {
    run_suite("group-like exponential", cfg, |rng| exponential_trial(cfg, rng))
}

/// Largest absolute coefficient, used in diagnostics.
pub fn max_abs(s: &ExactSeries) -> Rational {
    s.terms().map(|(_, c)| c.abs()).max().unwrap_or_else(Rational::zero)
}
