mod common;

use common::*;
use proptest::prelude::*;
use trotterlab_core::dense::{spectral_norm, to_matrix};
use trotterlab_core::hamiltonian::{build_heisenberg, Boundary};
use trotterlab_core::pauli::{PauliOperator, PauliString};

fn op(labels: &[(&str, C)]) -> PauliOperator {
    PauliOperator::from_labels(labels).unwrap()
}

#[test]
fn string_product_matches_4x4_dense() {
    let a: PauliString = "XZ".parse().unwrap();
    let b: PauliString = "ZZ".parse().unwrap();
    let (phase, s) = a.multiply(&b).unwrap();
    assert_eq!(s.to_string(), "YI");
    let dense = label_matrix("XZ").mul(&label_matrix("ZZ"));
    let expected = label_matrix("YI").scale(phase);
    assert!(dense.sub(&expected).max_abs() < 1e-15);
}

#[test]
fn every_two_site_product_matches_dense() {
    let letters = ["I", "X", "Y", "Z"];
    for a1 in letters {
        for a2 in letters {
            for b1 in letters {
                for b2 in letters {
                    let la = format!("{a1}{a2}");
                    let lb = format!("{b1}{b2}");
                    let a: PauliString = la.parse().unwrap();
                    let b: PauliString = lb.parse().unwrap();
                    let (phase, s) = a.multiply(&b).unwrap();
                    let dense = label_matrix(&la).mul(&label_matrix(&lb));
                    let expected = label_matrix(&s.to_string()).scale(phase);
                    assert!(dense.sub(&expected).max_abs() < 1e-15, "{la} * {lb}");
                }
            }
        }
    }
}

#[test]
fn to_matrix_matches_kron_for_labels() {
    let mut r = rng(7);
    for n in 1..=4 {
        for _ in 0..20 {
            let label = random_label(n, &mut r);
            let m = to_matrix(&op(&[(&label, c(0.5, -0.25))])).unwrap();
            let oracle = label_matrix(&label).scale(c(0.5, -0.25));
            assert!(oracle.max_diff(&m) < 1e-15, "{label}");
        }
    }
}

#[test]
fn heisenberg_bond_commutator_matches_8x8_dense() {
    let h1 = op(&[("XXI", c(1.0, 0.0)), ("YYI", c(1.0, 0.0)), ("ZZI", c(1.0, 0.0))]);
    let h2 = op(&[("IXX", c(1.0, 0.0)), ("IYY", c(1.0, 0.0)), ("IZZ", c(1.0, 0.0))]);
    let comm = h1.commutator(&h2).unwrap();
    assert!(!comm.is_empty());
    let dense = heisenberg_bond(3, 0, 1).comm(&heisenberg_bond(3, 1, 2));
    assert!(dense.max_diff(&to_matrix(&comm).unwrap()) < 1e-12);
}

#[test]
fn one_norm_dominates_spectral_norm() {
    let h = build_heisenberg(4, Boundary::Open, None, None).unwrap();
    let total = h.total();
    let (h1, h2) = heisenberg_parts(4);
    let oracle = jacobi_norm(&h1.add(&h2));
    assert!(total.one_norm() >= oracle);
    assert!((spectral_norm(&to_matrix(&total).unwrap()) - oracle).abs() < 1e-9);
}

fn arb_operator(n: usize) -> impl Strategy<Value = Vec<(String, f64, f64)>> {
    let label = proptest::collection::vec(prop_oneof![Just('I'), Just('X'), Just('Y'), Just('Z')], n)
        .prop_map(|v| v.into_iter().collect::<String>());
    proptest::collection::vec((label, -1.0..1.0f64, -1.0..1.0f64), 1..5)
}

fn build(terms: &[(String, f64, f64)]) -> PauliOperator {
    let v: Vec<(&str, C)> = terms.iter().map(|(l, re, im)| (l.as_str(), c(*re, *im))).collect();
    op(&v)
}

fn dense(terms: &[(String, f64, f64)]) -> Mat {
    terms
        .iter()
        .map(|(l, re, im)| label_matrix(l).scale(c(*re, *im)))
        .reduce(|a, b| a.add(&b))
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_and_commutators_are_dense_faithful(
        (a, b) in (1usize..=5).prop_flat_map(|n| (arb_operator(n), arb_operator(n)))
    ) {
        let (pa, pb) = (build(&a), build(&b));
        let (da, db) = (dense(&a), dense(&b));
        let prod = to_matrix(&pa.multiply(&pb).unwrap()).unwrap();
        prop_assert!(da.mul(&db).max_diff(&prod) < 1e-12);
        let comm = to_matrix(&pa.commutator(&pb).unwrap()).unwrap();
        prop_assert!(da.comm(&db).max_diff(&comm) < 1e-12);
        prop_assert!(pa.one_norm() + 1e-12 >= spectral_norm(&to_matrix(&pa).unwrap()));
    }
}
