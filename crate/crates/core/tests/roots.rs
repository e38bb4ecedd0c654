use num_complex::Complex64;
use proptest::prelude::*;
use smdiff::differentiators::SIM_LAMBDA;
use smdiff::poly::{match_roots, max_relative_mismatch};
use smdiff::{RealPolynomial, RootSet};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sim_roots(l: f64) -> RootSet {
    RealPolynomial::homogeneous_char_poly(&SIM_LAMBDA, l, 5)
        .unwrap()
        .roots()
        .unwrap()
}

fn assert_close(actual: &RootSet, expected: &[Complex64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    let order = match_roots(expected, actual.as_slice());
    for (e, &i) in expected.iter().zip(&order) {
        assert!(
            (actual.as_slice()[i] - e).norm() < tol,
            "expected {e}, got {}",
            actual.as_slice()[i]
        );
    }
}

#[test]
fn sim1_printed_roots() {
    let printed = [
        c(-2.8072, 2.7583),
        c(-2.8072, -2.7583),
        c(-0.2725, 0.3729),
        c(-0.2725, -0.3729),
        c(-1.0831, 0.0),
        c(-0.6148, 0.0),
    ];
    assert_close(&sim_roots(2.0), &printed, 1e-3);
}

#[test]
fn roots_scale_with_sixth_root_of_lipschitz_ratio() {
    let factor = 160f64.powf(1.0 / 6.0);
    assert!((factor - 2.3300).abs() < 1e-4);
    let base = sim_roots(2.0);
    let scaled: Vec<Complex64> = base.iter().map(|r| r * factor).collect();
    let high = sim_roots(320.0);
    assert!(max_relative_mismatch(&scaled, high.as_slice()) < 1e-9);
}

#[test]
fn sim2_printed_roots_and_the_odd_one() {
    let high = sim_roots(320.0);
    let printed_five = [
        c(-6.5408, 6.4269),
        c(-6.5408, -6.4269),
        c(-0.6348, 0.8689),
        c(-0.6348, -0.8689),
        c(-2.5235, 0.0),
    ];
    let order = match_roots(&printed_five, high.as_slice());
    for (e, &i) in printed_five.iter().zip(&order) {
        assert!((high.as_slice()[i] - e).norm() < 1e-3);
    }
    // the remaining real root follows the scaling law, not the printed value
    let odd: Vec<_> = high
        .iter()
        .enumerate()
        .filter(|(i, _)| !order.contains(i))
        .map(|(_, r)| *r)
        .collect();
    assert_eq!(odd.len(), 1);
    assert!((odd[0] - c(-1.4325, 0.0)).norm() < 1e-3);
    assert!((odd[0] - c(-0.6348, 0.0)).norm() > 0.5);
}

#[test]
fn quadratic_unit_gains() {
    let p = RealPolynomial::homogeneous_char_poly(&[1.0, 1.0], 1.0, 1).unwrap();
    assert_close(
        &p.roots().unwrap(),
        &[c(-0.5, 0.75f64.sqrt()), c(-0.5, -0.75f64.sqrt())],
        1e-14,
    );
}

/// A root set of up to 8 roots with magnitudes in [1e-3, 1e3], drawn as
/// (log10 magnitude, angle, is_pair) triples.
fn root_sets() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec(
        (-3.0f64..3.0, 0.0f64..std::f64::consts::PI, any::<bool>()),
        1..=5,
    )
    .prop_map(|parts| {
        let mut roots = Vec::new();
        for (lg, angle, pair) in parts {
            if roots.len() >= 8 {
                break;
            }
            let r = 10f64.powf(lg);
            if pair && roots.len() <= 6 {
                let z = Complex64::from_polar(r, angle);
                roots.push(z);
                roots.push(z.conj());
            } else {
                roots.push(c(
                    if angle < std::f64::consts::FRAC_PI_2 {
                        r
                    } else {
                        -r
                    },
                    0.0,
                ));
            }
        }
        roots
    })
}

/// Smallest distance between two roots relative to the larger magnitude.
fn relative_separation(roots: &[Complex64]) -> f64 {
    let mut sep = f64::INFINITY;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let scale = roots[i].norm().max(roots[j].norm());
            sep = sep.min((roots[i] - roots[j]).norm() / scale);
        }
    }
    sep
}

proptest! {
    #[test]
    fn roots_round_trip_through_coefficients(roots in root_sets()) {
        prop_assume!(roots.iter().all(|r| r.im == 0.0 || r.im.abs() > 1e-3 * r.norm()));
        prop_assume!(relative_separation(&roots) > 0.05);
        let set = RootSet::new(roots.clone()).unwrap();
        let p = RealPolynomial::from_roots(&set).unwrap();
        let found = p.roots().unwrap();
        prop_assert_eq!(found.len(), roots.len());
        let mismatch = max_relative_mismatch(&roots, found.as_slice());
        prop_assert!(mismatch < 1e-6, "mismatch {:e} for {:?} -> {:?}", mismatch, roots, found);
        for r in found.iter() {
            prop_assert!(p.normalized_residual(*r) < 1e-9);
        }
    }
}
