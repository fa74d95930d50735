//! Independent oracles for integration tests: Kronecker-product operators,
//! a Jacobi eigensolver and a Taylor-series matrix exponential. None of these
//! go through the library's Pauli-to-matrix path or its eigensolver.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trotterlab_core::dense::ComplexMatrix;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Row-major dense matrix used by the oracles.
#[derive(Clone, Debug)]
pub struct Mat {
    pub d: usize,
    pub a: Vec<C>,
}

impl Mat {
    pub fn zeros(d: usize) -> Self {
        Self { d, a: vec![C::default(); d * d] }
    }

    pub fn eye(d: usize) -> Self {
        let mut m = Self::zeros(d);
        for i in 0..d {
            m.a[i * d + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let d = rows.len();
        Self { d, a: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.d + j]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let x = self.a[i * d + k];
                if x == C::default() {
                    continue;
                }
                for j in 0..d {
                    out.a[i * d + j] += x * o.a[k * d + j];
                }
            }
        }
        out
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat { d: self.d, a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect() }
    }

    pub fn sub(&self, o: &Mat) -> Mat {
        Mat { d: self.d, a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect() }
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat { d: self.d, a: self.a.iter().map(|x| x * s).collect() }
    }

    pub fn adjoint(&self) -> Mat {
        let d = self.d;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.a[j * d + i] = self.a[i * d + j].conj();
            }
        }
        out
    }

    pub fn comm(&self, o: &Mat) -> Mat {
        self.mul(o).sub(&o.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, m: &ComplexMatrix) -> f64 {
        assert_eq!(self.d, m.dim());
        self.a.iter().zip(m.data()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    pub fn to_lib(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(self.d, self.a.clone()).unwrap()
    }

    pub fn from_lib(m: &ComplexMatrix) -> Mat {
        Mat { d: m.dim(), a: m.data().to_vec() }
    }

    pub fn kron(&self, o: &Mat) -> Mat {
        let (p, q) = (self.d, o.d);
        let mut out = Mat::zeros(p * q);
        for i in 0..p {
            for j in 0..p {
                for k in 0..q {
                    for l in 0..q {
                        out.a[(i * q + k) * p * q + j * q + l] = self.a[i * p + j] * o.a[k * q + l];
                    }
                }
            }
        }
        out
    }
}

pub fn pauli(ch: char) -> Mat {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    match ch {
        'I' => Mat::eye(2),
        'X' => Mat::from_rows(&[&[z, o], &[o, z]]),
        'Y' => Mat::from_rows(&[&[z, -i], &[i, z]]),
        'Z' => Mat::from_rows(&[&[o, z], &[z, -o]]),
        _ => panic!("bad Pauli {ch}"),
    }
}

/// Tensor product for a label whose character `i` acts on site `i`.
/// Site `i` is bit `i` of the basis index, so the leftmost Kronecker factor
/// is the highest site.
pub fn label_matrix(label: &str) -> Mat {
    label
        .chars()
        .rev()
        .map(pauli)
        .reduce(|acc, m| acc.kron(&m))
        .unwrap()
}

/// Operator `P_i P_j` on `n` sites for a fixed Pauli letter.
pub fn two_site(n: usize, i: usize, j: usize, p: char) -> Mat {
    let label: String = (0..n).map(|k| if k == i || k == j { p } else { 'I' }).collect();
    label_matrix(&label)
}

pub fn one_site(n: usize, i: usize, p: char) -> Mat {
    let label: String = (0..n).map(|k| if k == i { p } else { 'I' }).collect();
    label_matrix(&label)
}

pub fn heisenberg_bond(n: usize, i: usize, j: usize) -> Mat {
    ['X', 'Y', 'Z']
        .iter()
        .map(|&p| two_site(n, i, j, p))
        .reduce(|a, b| a.add(&b))
        .unwrap()
}

/// Open-chain Heisenberg parts: bonds 0, 2, 4, .. in the first part.
pub fn heisenberg_parts(n: usize) -> (Mat, Mat) {
    let d = 1 << n;
    let (mut h1, mut h2) = (Mat::zeros(d), Mat::zeros(d));
    for b in 0..n - 1 {
        let bond = heisenberg_bond(n, b, b + 1);
        if b % 2 == 0 {
            h1 = h1.add(&bond);
        } else {
            h2 = h2.add(&bond);
        }
    }
    (h1, h2)
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi rotations on the real
/// embedding `[[A, -B], [B, A]]`; every eigenvalue appears twice there.
pub fn jacobi_eigenvalues(m: &Mat) -> Vec<f64> {
    let d = m.d;
    let n = 2 * d;
    let mut s = vec![0.0f64; n * n];
    for i in 0..d {
        for j in 0..d {
            let z = m.at(i, j);
            s[i * n + j] = z.re;
            s[(i + d) * n + j + d] = z.re;
            s[(i + d) * n + j] = z.im;
            s[i * n + j + d] = -z.im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i * n + j] * s[i * n + j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = s[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q * n + q] - s[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (s[k * n + p], s[k * n + q]);
                    s[k * n + p] = cs * akp - sn * akq;
                    s[k * n + q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (s[p * n + k], s[q * n + k]);
                    s[p * n + k] = cs * apk - sn * aqk;
                    s[q * n + k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| s[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

/// Largest singular value as the square root of the largest Jacobi
/// eigenvalue of `M^dagger M`.
pub fn jacobi_norm(m: &Mat) -> f64 {
    let g = m.adjoint().mul(m);
    jacobi_eigenvalues(&g).last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `exp(-i H t)` by scaling and squaring with a 40-term Taylor series.
pub fn expm_taylor(h: &Mat, t: f64) -> Mat {
    let norm: f64 = h.a.iter().map(|x| x.norm()).sum::<f64>() * t.abs();
    let mut s = 0;
    while norm / f64::powi(2.0, s) > 0.25 {
        s += 1;
    }
    let a = h.scale(c(0.0, -t / f64::powi(2.0, s)));
    let mut out = Mat::eye(h.d);
    let mut term = Mat::eye(h.d);
    for k in 1..=40 {
        term = term.mul(&a).scale(c(1.0 / k as f64, 0.0));
        out = out.add(&term);
    }
    for _ in 0..s {
        out = out.mul(&out);
    }
    out
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(d: usize, seed: u64) -> Mat {
    let mut r = rng(seed);
    Mat { d, a: (0..d * d).map(|_| c(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect() }
}

pub fn random_hermitian(d: usize, seed: u64) -> Mat {
    let m = random_matrix(d, seed);
    m.add(&m.adjoint()).scale(c(0.5, 0.0))
}

pub fn random_label(n: usize, r: &mut ChaCha8Rng) -> String {
    (0..n).map(|_| ['I', 'X', 'Y', 'Z'][r.random_range(0..4)]).collect()
}
