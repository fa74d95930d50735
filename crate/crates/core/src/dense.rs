//! Dense complex matrices for exact evolution, product-formula steps and
//! operator norms.
//!
//! Matrix products go through `matrixmultiply::zgemm`; Hermitian
//! eigendecompositions go through `nalgebra`. Everything else (realizing
//! Pauli operators, unitary powers, block splitting) lives here.

use matrixmultiply::CGemmOption;
use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::PauliOperator;

/// Largest supported matrix dimension (12 qubits).
pub const MAX_DIM: usize = 4096;
pub const MAX_DENSE_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::Capacity(format!(
                "matrix dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        Ok(Self {
            dim,
            data: vec![ZERO; dim * dim],
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        Ok(m)
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        Ok(m)
    }

    pub fn from_row_major(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::Dimension(format!(
                "{} entries for a {dim}x{dim} matrix",
                data.len()
            )));
        }
        let mut m = Self::zeros(dim)?;
        m.data = data;
        Ok(m)
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        let mut m = Self::zeros(values.len())?;
        for (i, v) in values.iter().enumerate() {
            m.data[i * values.len() + i] = *v;
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = self.clone();
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    fn check_dim(&self, other: &Self) {
        assert_eq!(
            self.dim, other.dim,
            "matrix dimension mismatch: {} vs {}",
            self.dim, other.dim
        );
    }

    pub fn matmul(&self, other: &Self) -> Self {
        self.check_dim(other);
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        let (rs, cs) = (d as isize, 1isize);
        // SAFETY: Complex64 is repr(C) {re, im}, layout-identical to [f64; 2];
        // all three buffers hold d*d elements with the strides given.
        unsafe {
            matrixmultiply::zgemm(
                CGemmOption::Standard,
                CGemmOption::Standard,
                d,
                d,
                d,
                [1.0, 0.0],
                self.data.as_ptr() as *const [f64; 2],
                rs,
                cs,
                other.data.as_ptr() as *const [f64; 2],
                rs,
                cs,
                [0.0, 0.0],
                out.as_mut_ptr() as *mut [f64; 2],
                rs,
                cs,
            );
        }
        Self { dim: d, data: out }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_dim(other);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check_dim(other);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.check_dim(other);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    /// `self * diag(d)`: scales column `j` by `d[j]`.
    pub fn scale_columns(&self, d: &[Complex64]) -> Self {
        assert_eq!(d.len(), self.dim);
        let mut out = self.clone();
        for row in out.data.chunks_mut(self.dim) {
            for (a, s) in row.iter_mut().zip(d) {
                *a *= s;
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.matmul(other).sub(&other.matmul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.check_dim(other);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Operator norm of `M^dagger M - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let mut g = self.adjoint().matmul(self);
        for i in 0..self.dim {
            g.data[i * self.dim + i] -= ONE;
        }
        let ev = hermitian_eigenvalues(&g);
        ev.first().map_or(0.0, |lo| lo.abs()).max(ev.last().map_or(0.0, |hi| hi.abs()))
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let k = indices.len();
        let mut data = Vec::with_capacity(k * k);
        for &i in indices {
            for &j in indices {
                data.push(self.get(i, j));
            }
        }
        Self { dim: k, data }
    }

    fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

/// Dense realization of a Pauli operator; site `i` is bit `i` of the basis index.
pub fn to_matrix(op: &PauliOperator) -> Result<ComplexMatrix> {
    let n = op.n();
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Capacity(format!(
            "{n} qubits exceeds the dense limit of {MAX_DENSE_QUBITS}"
        )));
    }
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim)?;
    for (s, c) in op.iter() {
        let (x, z) = (s.x_mask() as usize, s.z_mask() as usize);
        // Y = iXZ on each site.
        let base = match (x & z).count_ones() % 4 {
            0 => *c,
            1 => c * Complex64::i(),
            2 => -c,
            _ => -c * Complex64::i(),
        };
        for col in 0..dim {
            let v = if (col & z).count_ones() % 2 == 0 {
                base
            } else {
                -base
            };
            m.data[(col ^ x) * dim + col] += v;
        }
    }
    Ok(m)
}

/// Eigendecomposition `M = V diag(lambda) V^dagger` of a Hermitian matrix,
/// eigenvalues ascending, eigenvectors in the columns of `V`.
#[derive(Clone, Debug)]
pub struct SpectralDecomp {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl SpectralDecomp {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V f(lambda) V^dagger`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let d: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        self.eigenvectors
            .scale_columns(&d)
            .matmul(&self.eigenvectors.adjoint())
    }

    /// `exp(-i M t)`.
    pub fn evolution(&self, t: f64) -> ComplexMatrix {
        self.apply_fn(|l| Complex64::from_polar(1.0, -l * t))
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|l| Complex64::new(l, 0.0))
    }

    /// `V^dagger M V`.
    pub fn to_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors
            .adjoint()
            .matmul(m)
            .matmul(&self.eigenvectors)
    }

    /// `V M V^dagger`.
    pub fn from_eigenbasis(&self, m: &ComplexMatrix) -> ComplexMatrix {
        self.eigenvectors
            .matmul(m)
            .matmul(&self.eigenvectors.adjoint())
    }
}

pub fn eig_hermitian(m: &ComplexMatrix) -> Result<SpectralDecomp> {
    let scale = m.max_abs().max(f64::MIN_POSITIVE);
    let dev = m.hermiticity_deviation();
    if dev > 1e-10 * scale.max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (deviation {dev:.3e})"
        )));
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let d = m.dim;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(d, |i, j| eig.eigenvectors[(i, order[j])])?;
    Ok(SpectralDecomp {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(-i H t)` from a cached decomposition of `H`.
pub fn evolution_unitary(spec: &SpectralDecomp, t: f64) -> ComplexMatrix {
    spec.evolution(t)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let sym = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let mut ev: Vec<f64> = sym.to_nalgebra().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Operator norm (largest singular value): square root of the top eigenvalue
/// of `M^dagger M`, computed with a full Hermitian eigensolver.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    if m.max_abs() == 0.0 {
        return 0.0;
    }
    let gram = m.adjoint().matmul(m);
    let top = hermitian_eigenvalues(&gram)
        .last()
        .copied()
        .unwrap_or(0.0);
    top.max(0.0).sqrt()
}

/// `W^r` by binary exponentiation after checking `W` is unitary to 1e-10.
pub fn unitary_power(w: &ComplexMatrix, r: u64) -> Result<ComplexMatrix> {
    let dev = w.unitarity_deviation();
    if dev > 1e-10 {
        return Err(Error::Domain(format!(
            "input is not unitary (deviation {dev:.3e})"
        )));
    }
    Ok(matrix_power(w, r))
}

/// Binary exponentiation with no unitarity check and no re-orthogonalization.
pub fn matrix_power(w: &ComplexMatrix, mut r: u64) -> ComplexMatrix {
    let mut acc: Option<ComplexMatrix> = None;
    let mut base = w.clone();
    while r > 0 {
        if r & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => a.matmul(&base),
            });
        }
        r >>= 1;
        if r > 0 {
            base = base.matmul(&base);
        }
    }
    acc.unwrap_or_else(|| ComplexMatrix::identity(w.dim).expect("dimension already validated"))
}

/// Partition of basis indices into blocks that every matrix in a family
/// leaves invariant (connected components of their joint sparsity pattern).
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLayout {
    dim: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockLayout {
    pub fn single(dim: usize) -> Self {
        Self {
            dim,
            blocks: vec![(0..dim).collect()],
        }
    }

    pub fn detect(mats: &[&ComplexMatrix]) -> Self {
        let dim = mats.first().map(|m| m.dim).unwrap_or(1);
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for m in mats {
            let tol = 1e-13 * m.max_abs().max(1e-300);
            for i in 0..dim {
                for j in (i + 1)..dim {
                    if m.get(i, j).norm() > tol || m.get(j, i).norm() > tol {
                        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                        if a != b {
                            parent[a.max(b)] = a.min(b);
                        }
                    }
                }
            }
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for i in 0..dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[root]].push(i);
        }
        Self { dim, blocks }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn extract(&self, m: &ComplexMatrix) -> Vec<ComplexMatrix> {
        self.blocks.iter().map(|b| m.submatrix(b)).collect()
    }

    pub fn assemble(&self, parts: &[ComplexMatrix]) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.dim).expect("dimension already validated");
        for (idx, part) in self.blocks.iter().zip(parts) {
            for (a, &i) in idx.iter().enumerate() {
                for (b, &j) in idx.iter().enumerate() {
                    out.set(i, j, part.get(a, b));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliOperator;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_string_realizes_identity() {
        let op = PauliOperator::identity(3).unwrap();
        let m = to_matrix(&op).unwrap();
        assert_eq!(m, ComplexMatrix::identity(8).unwrap());
    }

    #[test]
    fn single_z_is_diag() {
        let z = PauliOperator::from_labels(&[("Z", c(1.0, 0.0))]).unwrap();
        let m = to_matrix(&z).unwrap();
        assert_eq!(m, ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap());
    }

    #[test]
    fn heisenberg_bond_spectrum() {
        let bond = PauliOperator::from_labels(&[
            ("XX", c(1.0, 0.0)),
            ("YY", c(1.0, 0.0)),
            ("ZZ", c(1.0, 0.0)),
        ])
        .unwrap();
        let ev = eig_hermitian(&to_matrix(&bond).unwrap()).unwrap().eigenvalues;
        let expected = [-3.0, 1.0, 1.0, 1.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_qubits_is_capacity_error() {
        let op = PauliOperator::identity(13).unwrap();
        assert!(matches!(to_matrix(&op), Err(Error::Capacity(_))));
    }

    #[test]
    fn eig_small_cases() {
        let d = ComplexMatrix::diagonal(&[c(3.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(eig_hermitian(&d).unwrap().eigenvalues, vec![1.0, 3.0]);
        let x = to_matrix(&PauliOperator::from_labels(&[("X", c(1.0, 0.0))]).unwrap()).unwrap();
        let ev = eig_hermitian(&x).unwrap().eigenvalues;
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::from_row_major(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn evolution_of_z() {
        let z = to_matrix(&PauliOperator::from_labels(&[("Z", c(1.0, 0.0))]).unwrap()).unwrap();
        let spec = eig_hermitian(&z).unwrap();
        assert!(evolution_unitary(&spec, 0.0).max_abs_diff(&ComplexMatrix::identity(2).unwrap()) < 1e-15);
        let t = 0.7;
        let u = evolution_unitary(&spec, t);
        let expected = ComplexMatrix::diagonal(&[Complex64::from_polar(1.0, -t), Complex64::from_polar(1.0, t)]).unwrap();
        assert!(u.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn spectral_norm_of_simple_matrices() {
        assert!((spectral_norm(&ComplexMatrix::identity(16).unwrap()) - 1.0).abs() < 1e-12);
        let p = to_matrix(&PauliOperator::from_labels(&[("XYZ", c(1.0, 0.0))]).unwrap()).unwrap();
        assert!((spectral_norm(&p) - 1.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&ComplexMatrix::zeros(4).unwrap()), 0.0);
    }

    #[test]
    fn power_edge_cases() {
        let x = to_matrix(&PauliOperator::from_labels(&[("XZ", c(0.0, 1.0))]).unwrap()).unwrap();
        assert_eq!(unitary_power(&x, 0).unwrap(), ComplexMatrix::identity(4).unwrap());
        assert_eq!(unitary_power(&x, 1).unwrap(), x);
        assert!(unitary_power(&x.scale(c(2.0, 0.0)), 3).is_err());
    }

    #[test]
    fn block_layout_roundtrip() {
        let bond = PauliOperator::from_labels(&[
            ("XXI", c(1.0, 0.0)),
            ("YYI", c(1.0, 0.0)),
            ("ZZI", c(1.0, 0.0)),
        ])
        .unwrap();
        let m = to_matrix(&bond).unwrap();
        let layout = BlockLayout::detect(&[&m]);
        assert!(layout.blocks().len() > 1);
        let parts = layout.extract(&m);
        assert_eq!(layout.assemble(&parts), m);
    }
}
