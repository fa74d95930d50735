mod common;

use common::*;
use trotterlab_core::dense::{eig_hermitian, to_matrix};
use trotterlab_core::hamiltonian::{
    build_heisenberg, build_tfim, partition_validate, Boundary, InteractionRange, ModelSpec, Part,
};
use trotterlab_core::Error;

fn tfim_oracle(n: usize, periodic: bool, jzz: f64, hx: f64) -> Mat {
    let d = 1 << n;
    let mut h = Mat::zeros(d);
    let bonds = if periodic { n } else { n - 1 };
    for b in 0..bonds {
        h = h.add(&two_site(n, b, (b + 1) % n, 'Z').scale(c(jzz, 0.0)));
    }
    for i in 0..n {
        h = h.add(&one_site(n, i, 'X').scale(c(hx, 0.0)));
    }
    h
}

#[test]
fn tfim_spectrum_matches_jacobi() {
    for (n, boundary) in [(3, Boundary::Open), (3, Boundary::Periodic), (4, Boundary::Open)] {
        let h = build_tfim(n, boundary, 1.0, 0.7, InteractionRange::Nearest).unwrap();
        let ev = eig_hermitian(&to_matrix(&h.total()).unwrap()).unwrap().eigenvalues;
        let oracle = jacobi_eigenvalues(&tfim_oracle(n, boundary == Boundary::Periodic, 1.0, 0.7));
        for (a, b) in ev.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-10, "n={n} {boundary}: {a} vs {b}");
        }
    }
}

#[test]
fn tfim_critical_ground_energy() {
    // Open chain at the critical field, three sites.
    let h = build_tfim(3, Boundary::Open, -1.0, -1.0, InteractionRange::Nearest).unwrap();
    let e0 = eig_hermitian(&to_matrix(&h.total()).unwrap()).unwrap().eigenvalues[0];
    let oracle = jacobi_eigenvalues(&tfim_oracle(3, false, -1.0, -1.0))[0];
    assert!((e0 - oracle).abs() < 1e-10);
    assert!(e0 < -3.0);
}

#[test]
fn heisenberg_matches_kron_construction() {
    let h = build_heisenberg(5, Boundary::Open, None, None).unwrap();
    let (h1, h2) = heisenberg_parts(5);
    assert!(h1.max_diff(&to_matrix(&h.h1()).unwrap()) < 1e-14);
    assert!(h2.max_diff(&to_matrix(&h.h2()).unwrap()) < 1e-14);
    assert_eq!(h.j_scale(), 3.0);
    assert_eq!(h.terms().len(), 4);
}

#[test]
fn heisenberg_bond_spectrum() {
    let h = build_heisenberg(2, Boundary::Open, None, None).unwrap();
    let ev = eig_hermitian(&to_matrix(&h.total()).unwrap()).unwrap().eigenvalues;
    assert!((ev[0] + 3.0).abs() < 1e-12);
    assert!(ev[1..].iter().all(|e| (e - 1.0).abs() < 1e-12));
    assert!(h.h2().is_empty());
}

#[test]
fn disorder_and_j_scale() {
    let h = build_heisenberg(4, Boundary::Open, Some(&[1.0, 2.0, 1.0]), None).unwrap();
    assert_eq!(h.j_scale(), 6.0);
    let a = build_heisenberg(6, Boundary::Open, None, Some(9)).unwrap();
    let b = build_heisenberg(6, Boundary::Open, None, Some(9)).unwrap();
    assert_eq!(a.total().max_coeff_diff(&b.total()).unwrap(), 0.0);
    assert!(a.terms().iter().all(|t| t.norm >= 1.5 - 1e-12 && t.norm <= 4.5 + 1e-12));
    assert!(build_heisenberg(4, Boundary::Open, Some(&[1.0, 2.0]), None).is_err());
    assert!(build_heisenberg(4, Boundary::Open, Some(&[1.0, -2.0, 1.0]), None).is_err());
}

#[test]
fn partition_rules() {
    let h = build_heisenberg(6, Boundary::Periodic, None, None).unwrap();
    assert!(partition_validate(&h).valid);
    assert_eq!(h.part_terms(Part::One).count(), 3);
    assert!(matches!(build_heisenberg(5, Boundary::Periodic, None, None), Err(Error::Partition(_))));
    assert!(build_heisenberg(1, Boundary::Open, None, None).is_err());
    let t = build_tfim(5, Boundary::Periodic, 1.0, 1.0, InteractionRange::AllPairs { alpha: 1.5 }).unwrap();
    assert!(partition_validate(&t).valid);
    assert_eq!(t.part_terms(Part::One).count(), 10);
}

#[test]
fn model_spec_json() {
    let spec: ModelSpec = serde_json::from_str(r#"{"model":"heisenberg","n":4}"#).unwrap();
    assert_eq!(spec, ModelSpec::heisenberg(4));
    assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"heisenberg","n":4,"bogus":1}"#).is_err());
    let t: ModelSpec =
        serde_json::from_str(r#"{"model":"tfim","n":3,"boundary":"periodic","hx":0.5,"alpha":2.0}"#).unwrap();
    let h = t.build().unwrap();
    assert_eq!(h.model_tag(), "tfim");
    assert_eq!(h.boundary(), Boundary::Periodic);
}
