mod common;

use common::*;
use trotterlab_core::dense::{
    eig_hermitian, evolution_unitary, matrix_power, spectral_norm, to_matrix, unitary_power, ComplexMatrix,
};
use trotterlab_core::hamiltonian::{build_heisenberg, Boundary};
use trotterlab_core::pauli::PauliOperator;

#[test]
fn heisenberg_spectrum_matches_jacobi() {
    let h = build_heisenberg(3, Boundary::Open, None, None).unwrap();
    let spec = eig_hermitian(&to_matrix(&h.total()).unwrap()).unwrap();
    let (h1, h2) = heisenberg_parts(3);
    let oracle = jacobi_eigenvalues(&h1.add(&h2));
    for (a, b) in spec.eigenvalues.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    let recon = spec.reconstruct();
    assert!(recon.max_abs_diff(&to_matrix(&h.total()).unwrap()) < 1e-10);
    assert!(spec.eigenvectors.unitarity_deviation() < 1e-10);
}

#[test]
fn random_hermitian_spectrum_matches_jacobi() {
    let m = random_hermitian(24, 5);
    let spec = eig_hermitian(&m.to_lib()).unwrap();
    for (a, b) in spec.eigenvalues.iter().zip(jacobi_eigenvalues(&m)) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn group_law_and_energy_conservation() {
    let h = build_heisenberg(3, Boundary::Open, None, None).unwrap();
    let hm = to_matrix(&h.total()).unwrap();
    let spec = eig_hermitian(&hm).unwrap();
    let u = |t| evolution_unitary(&spec, t);
    assert!(u(0.3).matmul(&u(0.7)).max_abs_diff(&u(1.0)) < 1e-10);
    assert!(u(0.0).max_abs_diff(&ComplexMatrix::identity(8).unwrap()) < 1e-12);

    let h6 = build_heisenberg(6, Boundary::Open, None, Some(1)).unwrap();
    let hm6 = to_matrix(&h6.total()).unwrap();
    let spec6 = eig_hermitian(&hm6).unwrap();
    for t in [0.5, 3.0, 40.0] {
        let ut = evolution_unitary(&spec6, t);
        assert!(ut.unitarity_deviation() < 1e-10);
        let conj = ut.adjoint().matmul(&hm6).matmul(&ut);
        assert!(spectral_norm(&conj.sub(&hm6)) < 1e-9);
    }
}

#[test]
fn evolution_matches_taylor_oracle() {
    let (h1, h2) = heisenberg_parts(3);
    let h = h1.add(&h2);
    let spec = eig_hermitian(&h.to_lib()).unwrap();
    for t in [0.1, 1.3, -2.0] {
        assert!(expm_taylor(&h, t).max_diff(&evolution_unitary(&spec, t)) < 1e-11);
    }
}

#[test]
fn spectral_norm_matches_svd_oracle() {
    for seed in 0..3 {
        let m = random_matrix(64, 100 + seed);
        let na = nalgebra::DMatrix::from_row_slice(64, 64, &m.a);
        let svd_max = na.singular_values().max();
        let ours = spectral_norm(&m.to_lib());
        assert!((ours - svd_max).abs() <= 1e-8 * svd_max, "{ours} vs {svd_max}");
    }
}

#[test]
fn norms_of_unitaries() {
    let mut r = rng(3);
    for _ in 0..5 {
        let label = random_label(4, &mut r);
        let p = PauliOperator::from_labels(&[(&label, c(1.0, 0.0))]).unwrap();
        assert!((spectral_norm(&to_matrix(&p).unwrap()) - 1.0).abs() < 1e-12);
    }
    assert!((spectral_norm(&ComplexMatrix::identity(16).unwrap()) - 1.0).abs() < 1e-12);

    let h = build_heisenberg(4, Boundary::Open, None, None).unwrap();
    let spec = eig_hermitian(&to_matrix(&h.total()).unwrap()).unwrap();
    let v = eig_hermitian(&random_hermitian(16, 9).to_lib()).unwrap();
    for t in [0.2, 5.0] {
        let d = evolution_unitary(&spec, t).sub(&evolution_unitary(&v, t));
        assert!(spectral_norm(&d) <= 2.0 + 1e-12);
    }
}

/// `W = V diag(exp(i theta)) V^dagger` with a known decomposition, so `W^r`
/// has the closed form `V diag(exp(i r theta)) V^dagger`.
fn normal_unitary(d: usize, seed: u64) -> (ComplexMatrix, ComplexMatrix, Vec<f64>) {
    let v = eig_hermitian(&random_hermitian(d, seed).to_lib()).unwrap().eigenvectors;
    let mut r = rng(seed + 1);
    let theta: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut r, -3.0..3.0)).collect();
    let phases: Vec<C> = theta.iter().map(|t| C::from_polar(1.0, *t)).collect();
    let w = v.scale_columns(&phases).matmul(&v.adjoint());
    (w, v, theta)
}

#[test]
fn unitary_power_matches_eigen_oracle_at_r_10000() {
    let (w, v, theta) = normal_unitary(256, 21);
    let r = 10_000u64;
    let phases: Vec<C> = theta.iter().map(|t| C::from_polar(1.0, *t * r as f64)).collect();
    let oracle = v.scale_columns(&phases).matmul(&v.adjoint());
    let wr = unitary_power(&w, r).unwrap();
    assert!(wr.max_abs_diff(&oracle) < 1e-8, "{}", wr.max_abs_diff(&oracle));
}

#[test]
fn power_edge_cases_and_drift() {
    let (w, _, _) = normal_unitary(32, 4);
    assert!(unitary_power(&w, 0).unwrap().max_abs_diff(&ComplexMatrix::identity(32).unwrap()) == 0.0);
    assert_eq!(unitary_power(&w, 1).unwrap(), w);
    let not_unitary = w.scale(C::new(1.001, 0.0));
    assert!(unitary_power(&not_unitary, 5).is_err());

}

/// Tensor product of ten random single-qubit gates, so the input is unitary
/// to within a few ulps and the drift measured is that of the multiplications.
fn local_circuit(seed: u64) -> ComplexMatrix {
    let mut r = rng(seed);
    let mut gate = || {
        let mut ang = || rand::Rng::random_range(&mut r, -3.0..3.0f64);
        let (th, phi, psi) = (ang(), ang(), ang());
        let a = C::from_polar(th.cos(), phi);
        let b = C::from_polar(th.sin(), psi);
        Mat::from_rows(&[&[a, -b.conj()], &[b, a.conj()]])
    };
    (0..10).map(|_| gate()).reduce(|a, b| a.kron(&b)).unwrap().to_lib()
}

#[test]
fn binary_power_drift_at_dim_1024() {
    let w = local_circuit(40);
    assert!(w.unitarity_deviation() < 1e-14, "{}", w.unitarity_deviation());
    let wr = matrix_power(&w, 100_000);
    assert!(wr.unitarity_deviation() <= 1e-9, "{}", wr.unitarity_deviation());
}

#[test]
fn drift_is_linear_in_input_deviation() {
    let (w, _, _) = normal_unitary(256, 8);
    let d1 = matrix_power(&w, 1_000).unitarity_deviation();
    let d2 = matrix_power(&w, 10_000).unitarity_deviation();
    assert!(d2 / d1 > 5.0 && d2 / d1 < 20.0, "{d1} {d2}");
    assert!(d2 <= 1e-9);
}

#[test]
fn to_matrix_is_a_commutator_homomorphism() {
    let mut r = rng(11);
    for n in 2..=5 {
        let mk = |r: &mut rand_chacha::ChaCha8Rng| {
            let labels: Vec<String> = (0..4).map(|_| random_label(n, r)).collect();
            let terms: Vec<(&str, C)> = labels.iter().map(|l| (l.as_str(), c(0.7, 0.2))).collect();
            PauliOperator::from_labels(&terms).unwrap()
        };
        let (a, b) = (mk(&mut r), mk(&mut r));
        let lhs = to_matrix(&a.commutator(&b).unwrap()).unwrap();
        let rhs = to_matrix(&a).unwrap().commutator(&to_matrix(&b).unwrap());
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }
}
