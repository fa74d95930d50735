//! Numerical checks of the integral identities behind the interference
//! argument. Conjugations are evaluated with dense matrices; integrals are
//! evaluated by adaptive quadrature in the eigenbasis of `H`, where the
//! integrand `U_x Y U_x^dagger` has entries `Y'_pq exp(-i (l_p - l_q) x)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::dense::{eig_hermitian, spectral_norm, to_matrix, ComplexMatrix, SpectralDecomp};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::pauli::PauliOperator;
use crate::quadrature::{adaptive_simpson, DEFAULT_MAX_DEPTH, DEFAULT_TOL};

/// Largest dense dimension the quadrature checks accept (n <= 8).
pub const MAX_CHECK_QUBITS: usize = 8;

struct Setup {
    spec: SpectralDecomp,
    h: ComplexMatrix,
}

fn setup(h: &Hamiltonian, a: &PauliOperator) -> Result<(Setup, ComplexMatrix)> {
    if h.n() > MAX_CHECK_QUBITS {
        return Err(Error::Capacity(format!(
            "identity checks support n <= {MAX_CHECK_QUBITS}, got {}",
            h.n()
        )));
    }
    if a.n() != h.n() {
        return Err(Error::Dimension(format!(
            "operator on {} qubits for a {}-site model",
            a.n(),
            h.n()
        )));
    }
    let hm = to_matrix(&h.total())?;
    let spec = eig_hermitian(&hm)?;
    Ok((Setup { spec, h: hm }, to_matrix(a)?))
}

fn gaps(spec: &SpectralDecomp) -> Vec<f64> {
    let l = &spec.eigenvalues;
    let d = l.len();
    let mut out = Vec::with_capacity(d * d);
    for p in 0..d {
        for q in 0..d {
            out.push(l[p] - l[q]);
        }
    }
    out
}

/// `int_0^t U_x Y U_x^dagger dx` in the eigenbasis, `y` given in the eigenbasis.
fn integrate_conjugation(y: &ComplexMatrix, w: &[f64], t: f64) -> Result<ComplexMatrix> {
    let f = |x: f64| -> Vec<Complex64> {
        y.data()
            .iter()
            .zip(w)
            .map(|(c, om)| c * Complex64::from_polar(1.0, -om * x))
            .collect()
    };
    let v = adaptive_simpson(&f, 0.0, t, DEFAULT_TOL, DEFAULT_MAX_DEPTH)?;
    ComplexMatrix::from_row_major(y.dim(), v)
}

/// `sum_{j<a} U_{j tau} Y U_{j tau}^dagger tau` by explicit conjugation.
fn conjugated_sum(spec: &SpectralDecomp, y: &ComplexMatrix, a: u64, tau: f64) -> ComplexMatrix {
    let u = spec.evolution(tau);
    let ud = u.adjoint();
    let mut acc = ComplexMatrix::zeros(y.dim()).expect("valid dimension");
    let mut term = y.clone();
    for j in 0..a {
        if j > 0 {
            term = u.matmul(&term).matmul(&ud);
        }
        acc.add_assign(&term);
    }
    acc.scale(Complex64::new(tau, 0.0))
}

/// Residual of `U_t A U_-t - A = -i int_0^t U_x [H, A] U_-x dx`, left side by
/// dense conjugation and right side by quadrature.
pub fn integral_identity_check(h: &Hamiltonian, a: &PauliOperator, t: f64) -> Result<f64> {
    let (s, am) = setup(h, a)?;
    if !t.is_finite() {
        return Err(Error::Argument(format!("t must be finite, got {t}")));
    }
    let u = s.spec.evolution(t);
    let lhs = u.matmul(&am).matmul(&u.adjoint()).sub(&am);
    let comm = s.spec.to_eigenbasis(&s.h.commutator(&am));
    let integral = integrate_conjugation(&comm, &gaps(&s.spec), t)?;
    let rhs = s.spec.from_eigenbasis(&integral).scale(Complex64::new(0.0, -1.0));
    Ok(spectral_norm(&lhs.sub(&rhs)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SigmaCheck {
    /// `|Sigma_a(X) - I_{a tau}(X) - Sigma_a(F[X])|`.
    pub residual: f64,
    /// `|Sigma_a(X)|`.
    pub sigma_norm: f64,
    /// `2 |X| / (1 - mu)` with `mu = n J tau`.
    pub sigma_bound: f64,
    pub mu: f64,
}

impl SigmaCheck {
    pub fn bound_holds(&self) -> bool {
        self.sigma_norm <= self.sigma_bound
    }
}

/// Checks `Sigma_a(X) - I_{a tau}(X) = Sigma_a(F[X])` where
/// `Sigma_a(X) = sum_{j<a} U_{j tau} [H, X] U_{j tau}^dagger tau`,
/// `I_s(X) = i (U_s X U_s^dagger - X) = int_0^s U_x [H, X] U_x^dagger dx` and
/// `F[X] = (i / tau) int_0^tau ds int_0^s dv U_v [H, X] U_v^dagger`.
/// Requires `n J tau < 1`.
pub fn sigma_recursion_check(h: &Hamiltonian, x: &PauliOperator, a: u64, tau: f64) -> Result<SigmaCheck> {
    let (s, xm) = setup(h, x)?;
    if !tau.is_finite() || tau <= 0.0 {
        return Err(Error::Argument(format!("tau must be positive, got {tau}")));
    }
    let mu = h.n() as f64 * h.j_scale() * tau;
    if mu >= 1.0 {
        return Err(Error::Domain(format!(
            "requires n*J*tau < 1, got {mu:.4} (n={}, J={}, tau={tau})",
            h.n(),
            h.j_scale()
        )));
    }
    let x_norm = spectral_norm(&xm);
    let sigma_bound = 2.0 * x_norm / (1.0 - mu);
    if a == 0 {
        return Ok(SigmaCheck {
            residual: 0.0,
            sigma_norm: 0.0,
            sigma_bound,
            mu,
        });
    }
    let comm = s.h.commutator(&xm);
    let sigma = conjugated_sum(&s.spec, &comm, a, tau);

    let w = gaps(&s.spec);
    let comm_eig = s.spec.to_eigenbasis(&comm);
    let i_part = s
        .spec
        .from_eigenbasis(&integrate_conjugation(&comm_eig, &w, a as f64 * tau)?);

    // Inner integral over v as a function of s, then the outer one over s.
    let inner = |upper: f64| -> Vec<Complex64> {
        match integrate_conjugation(&comm_eig, &w, upper) {
            Ok(m) => m.data().to_vec(),
            Err(_) => vec![Complex64::new(f64::NAN, 0.0); comm_eig.data().len()],
        }
    };
    let double = adaptive_simpson(&inner, 0.0, tau, DEFAULT_TOL, DEFAULT_MAX_DEPTH)?;
    if double.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Numeric("inner quadrature did not converge".into()));
    }
    let f_eig = ComplexMatrix::from_row_major(comm_eig.dim(), double)?.scale(Complex64::new(0.0, 1.0 / tau));
    let f = s.spec.from_eigenbasis(&f_eig);
    let sigma_f = conjugated_sum(&s.spec, &s.h.commutator(&f), a, tau);

    let residual = spectral_norm(&sigma.sub(&i_part).sub(&sigma_f));
    Ok(SigmaCheck {
        residual,
        sigma_norm: spectral_norm(&sigma),
        sigma_bound,
        mu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_heisenberg, Boundary};

    #[test]
    fn trivial_operators_give_zero() {
        let h = build_heisenberg(3, Boundary::Open, None, None).unwrap();
        let id = PauliOperator::identity(3).unwrap();
        assert!(integral_identity_check(&h, &id, 1.0).unwrap() < 1e-12);
        assert!(integral_identity_check(&h, &h.total(), 1.0).unwrap() < 1e-10);
        let c = sigma_recursion_check(&h, &h.total(), 4, 0.05).unwrap();
        assert!(c.residual < 1e-10 && c.sigma_norm < 1e-10);
    }

    #[test]
    fn a_zero_and_domain() {
        let h = build_heisenberg(4, Boundary::Open, None, None).unwrap();
        let c = sigma_recursion_check(&h, &h.h2(), 0, 0.05).unwrap();
        assert_eq!((c.residual, c.sigma_norm), (0.0, 0.0));
        assert!(matches!(sigma_recursion_check(&h, &h.h2(), 3, 0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn h2_on_small_chain() {
        let h = build_heisenberg(4, Boundary::Open, None, None).unwrap();
        assert!(integral_identity_check(&h, &h.h2(), 1.0).unwrap() < 1e-8);
        let c = sigma_recursion_check(&h, &h.h2(), 8, 0.05).unwrap();
        assert!(c.residual < 1e-8, "{c:?}");
        assert!(c.bound_holds());
    }
}
