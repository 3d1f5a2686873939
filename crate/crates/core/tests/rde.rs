//! Derivative oracles, elementary differentials and the Davie scheme.

use std::sync::Arc;

use itertools::Itertools;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use rough_trees::poly::{IdentityMap, PolynomialField, PolynomialMap, SmoothMap, VectorFieldFamily};
use rough_trees::rde::{self, davie_solve, davie_step, psi, remainder_probe, DavieSolveConfig};
use rough_trees::roughpath::{branched_lift_pl, ito_level2_lift, Control, Level1, Level2, PiecewiseLinear};
use rough_trees::series::{bullet, labelled_basis, FloatSeries};
use rough_trees::text::parse_tree;

fn fields() -> PolynomialField {
    PolynomialField::new(vec![
        PolynomialMap::parse(&["y1^2*y2 - y3", "y2*y3^2", "2*y1 - y2^3"], 3).unwrap(),
        PolynomialMap::parse(&["y3^3 + 1", "y1*y2*y3", "y1^2"], 3).unwrap(),
    ])
    .unwrap()
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.5..1.5f64, 3)
}

fn direction() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 3)
}

fn shifted(y: &[f64], d: &[f64], h: f64) -> Vec<f64> {
    y.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_central_differences(y in point(), a in direction(), b in direction()) {
        let v = fields();
        let h = 1e-4;
        for i in 1..=2 {
            let plus = v.derivative(i, &shifted(&y, &a, h), &[]);
            let minus = v.derivative(i, &shifted(&y, &a, -h), &[]);
            let fd1: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            prop_assert!(rel_close(&v.derivative(i, &y, &[&a]), &fd1, 1e-6));

            let plus = v.derivative(i, &shifted(&y, &b, h), &[&a]);
            let minus = v.derivative(i, &shifted(&y, &b, -h), &[&a]);
            let fd2: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
            prop_assert!(rel_close(&v.derivative(i, &y, &[&a, &b]), &fd2, 1e-6));
        }
    }

    #[test]
    fn derivatives_are_symmetric_in_directions(y in point(), dirs in prop::collection::vec(direction(), 3)) {
        let v = fields();
        let refs: Vec<&[f64]> = dirs.iter().map(Vec::as_slice).collect();
        for i in 1..=2 {
            let base = v.derivative(i, &y, &refs);
            for perm in refs.iter().copied().permutations(3) {
                prop_assert!(rel_close(&base, &v.derivative(i, &y, &perm), 1e-12));
            }
        }
    }

    #[test]
    fn identity_sees_only_planted_trees(y in point()) {
        let v = fields();
        for t in labelled_basis(4, 2).unwrap() {
            let value = psi(&v, &IdentityMap(3), &y, &t).unwrap();
            if t.root_arity() >= 2 {
                prop_assert!(value.iter().all(|x| *x == 0.0), "{} gives {:?}", t, value);
            }
        }
    }

    #[test]
    fn ladder_step_adds_the_directional_derivative(y in point(), c in -2.0..2.0f64) {
        let v = fields();
        let mut x = FloatSeries::unit(2);
        x.add_term(parse_tree("o(1(2))").unwrap(), c).unwrap();
        x.add_term(parse_tree("o(1 2)").unwrap(), 3.0).unwrap();
        let step = davie_step(&v, &y, &x).unwrap();
        // The ladder with 1 next to the root contributes V_1'(y)[V_2(y)].
        let v2 = v.derivative(2, &y, &[]);
        let expected: Vec<f64> = v
            .derivative(1, &y, &[&v2])
            .iter()
            .zip(&y)
            .map(|(d, yi)| yi + c * d)
            .collect();
        prop_assert!(rel_close(&step, &expected, 1e-12));
    }
}

#[test]
fn euler_step_on_a_bullet() {
    let v = fields();
    let y = [0.5, -1.0, 2.0];
    let mut x = FloatSeries::unit(2);
    x.add_term(bullet(2), 0.1).unwrap();
    let step = davie_step(&v, &y, &x).unwrap();
    let v2 = v.derivative(2, &y, &[]);
    for k in 0..3 {
        assert!((step[k] - (y[k] + 0.1 * v2[k])).abs() < 1e-15);
    }
}

#[test]
fn constant_map_has_no_remainder() {
    let pl = PiecewiseLinear::new(
        (0..=16).map(|k| k as f64 / 16.0).collect(),
        (0..=16)
            .map(|k| vec![(k as f64).sin(), (k as f64 * 0.3).cos()])
            .collect(),
    )
    .unwrap();
    let x = branched_lift_pl(&pl, 2.0).unwrap();
    let v = fields();
    let y = davie_solve(&v, &x, &DavieSolveConfig::uniform(&x, 16, vec![0.1, 0.2, 0.3])).unwrap();
    let f = PolynomialMap::parse(&["4", "-1"], 3).unwrap();
    let report = remainder_probe(&y, &x, &v, &f, &[1, 2, 3]).unwrap();
    assert!(report.max_remainder.iter().all(|r| *r == 0.0));
    assert_eq!(report.fitted_slope, None);
    assert!(remainder_probe(&y, &x, &v, &f, &[1, 2]).is_err());
}

/// `V(y) = y` in one dimension.
fn exponential_field() -> PolynomialField {
    PolynomialField::linear(&[vec![vec![1.0]]]).unwrap()
}

#[test]
fn ito_and_stratonovich_exponentials_differ_by_the_drift() {
    let n = 1 << 12;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let normal = Normal::new(0.0, (1.0 / n as f64).sqrt()).unwrap();
    let db: Arc<Vec<f64>> = Arc::new((0..n).map(|_| normal.sample(&mut rng)).collect());
    let grid: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();

    let mut b = vec![0.0];
    for d in db.iter() {
        b.push(b.last().unwrap() + d);
    }
    let strat_path = PiecewiseLinear::new(grid.clone(), b.iter().map(|x| vec![*x]).collect()).unwrap();
    let strat = branched_lift_pl(&strat_path, 2.5).unwrap();

    let index = move |t: f64| (t * n as f64).round() as usize;
    let b1 = Arc::new(b.clone());
    let level1: Level1 = Arc::new(move |s, t| vec![b1[index(t)] - b1[index(s)]]);
    let b2 = Arc::new(b.clone());
    let level2: Level2 = Arc::new(move |s, t| {
        let (i, j) = (index(s), index(t));
        vec![(i..j).map(|k| (b2[k] - b2[i]) * (b2[k + 1] - b2[k])).sum()]
    });
    let ito = ito_level2_lift(1, 2.5, level1, level2, Control::linear((0.0, 1.0), 1.0), &grid, 1e-10).unwrap();

    let v = exponential_field();
    let steps = 1 << 8;
    let y_strat = davie_solve(&v, &strat, &DavieSolveConfig::uniform(&strat, steps, vec![1.0])).unwrap();
    let y_ito = davie_solve(&v, &ito, &DavieSolveConfig::uniform(&ito, steps, vec![1.0])).unwrap();
    let b_end = b[n];
    // Closed forms: exp(B_1) and exp(B_1 - 1/2).
    assert!(
        (y_strat.last()[0] / b_end.exp() - 1.0).abs() < 0.02,
        "{}",
        y_strat.last()[0]
    );
    assert!(
        (y_ito.last()[0] / (b_end - 0.5).exp() - 1.0).abs() < 0.05,
        "{}",
        y_ito.last()[0]
    );
    let ratio = y_ito.last()[0] / y_strat.last()[0];
    assert!(
        ratio < 1.0 && (ratio / (-0.5f64).exp() - 1.0).abs() < 0.05,
        "ratio {ratio}"
    );
}

#[test]
fn word_embedding_drives_iterated_lie_derivatives() {
    let v = fields();
    let f = PolynomialMap::parse(&["y1*y2^2", "y3^2 - y1"], 3).unwrap();
    let y = [0.7, -0.4, 1.1];
    for word in [vec![1u32, 2], vec![2, 2, 1], vec![1, 2, 1]] {
        let phi = rough_trees::words::phi_word(&word, 2)
            .unwrap()
            .map_coefficients(rough_trees::series::rational_to_f64);
        let lhs = rde::psi_series(&v, &f, &y, &phi).unwrap();
        let mut g = f.clone();
        for &i in word.iter().rev() {
            g = g.lie_derivative(v.field(i as usize));
        }
        assert!(rel_close(&lhs, &g.derivative(&y, &[]), 1e-10), "{word:?}");
    }
}
