//! Exact algebra over n-qubit Pauli strings and complex-weighted sums of them.
//!
//! A [`PauliString`] stores one X bit and one Z bit per site; a site carries
//! `Y` when both bits are set. Products are evaluated with bitwise phase
//! bookkeeping, so commutators of operators with thousands of strings stay
//! cheap. Site `i` corresponds to bit `i` of a computational-basis index in
//! the dense realization (see [`crate::dense::to_matrix`]).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 64;
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[inline]
fn site_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// A tensor product of single-site Paulis on `n` sites, without phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u8,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, 0, 0)
    }

    pub fn new(n: usize, x_mask: u64, z_mask: u64) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        let outside = !site_mask(n);
        if x_mask & outside != 0 || z_mask & outside != 0 {
            return Err(Error::Argument(format!(
                "mask bits set at positions >= {n}"
            )));
        }
        Ok(Self {
            n: n as u8,
            x: x_mask,
            z: z_mask,
        })
    }

    /// A string with `p` on `site` and identity elsewhere.
    pub fn single(n: usize, site: usize, p: Pauli) -> Result<Self> {
        Self::from_sites(n, &[(site, p)])
    }

    pub fn from_sites(n: usize, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut x = 0u64;
        let mut z = 0u64;
        for &(site, p) in sites {
            if site >= n {
                return Err(Error::Argument(format!("site {site} outside 0..{n}")));
            }
            let (xb, zb) = p.bits();
            if xb {
                x |= 1 << site;
            }
            if zb {
                z |= 1 << site;
            }
        }
        Self::new(n, x, z)
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn site(&self, i: usize) -> Pauli {
        Pauli::from_bits(self.x >> i & 1 == 1, self.z >> i & 1 == 1)
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Product `self * other` as `(power of i, string)`.
    #[inline]
    pub(crate) fn mul_raw(&self, other: &Self) -> (u32, PauliString) {
        let (x1, z1, x2, z2) = (self.x, self.z, other.x, other.z);
        let (xa, ya, za) = (x1 & !z1, x1 & z1, !x1 & z1);
        let (xb, yb, zb) = (x2 & !z2, x2 & z2, !x2 & z2);
        // XY = iZ, YZ = iX, ZX = iY; the reversed orders carry -i.
        let pos = (xa & yb) | (ya & zb) | (za & xb);
        let neg = (ya & xb) | (za & yb) | (xa & zb);
        let power = (pos.count_ones() + 3 * neg.count_ones()) % 4;
        (
            power,
            PauliString {
                n: self.n,
                x: x1 ^ x2,
                z: z1 ^ z2,
            },
        )
    }

    /// Matrix product `self * other = phase * c`, with `phase` in {±1, ±i}.
    pub fn multiply(&self, other: &Self) -> Result<(Complex64, PauliString)> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "Pauli strings on {} and {} qubits",
                self.n, other.n
            )));
        }
        let (power, c) = self.mul_raw(other);
        Ok((I_POWERS[power as usize], c))
    }

    /// Same string on a subset of sites, relabelled `sites[i] -> i`.
    fn compress(&self, sites: &[usize]) -> Result<PauliString> {
        let mut x = 0u64;
        let mut z = 0u64;
        let mut covered = 0u64;
        for (i, &s) in sites.iter().enumerate() {
            x |= (self.x >> s & 1) << i;
            z |= (self.z >> s & 1) << i;
            covered |= 1 << s;
        }
        if self.support_mask() & !covered != 0 {
            return Err(Error::Argument(format!(
                "string {self} has support outside the requested sites"
            )));
        }
        PauliString::new(sites.len(), x, z)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n() {
            write!(f, "{}", self.site(i).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sites = Vec::with_capacity(s.len());
        for (i, ch) in s.chars().enumerate() {
            let p = match ch {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                other => {
                    return Err(Error::Argument(format!(
                        "invalid Pauli character {other:?} in {s:?}"
                    )))
                }
            };
            sites.push((i, p));
        }
        Self::from_sites(sites.len(), &sites)
    }
}

/// Summary returned by [`PauliOperator::norms`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpNorms {
    pub one_norm: f64,
    pub max_support: usize,
    pub term_count: usize,
}

/// A finite complex-weighted sum of Pauli strings on a fixed number of qubits.
///
/// Coefficients whose magnitude falls below `prune_tol` are dropped after
/// every arithmetic operation.
#[derive(Clone, Debug)]
pub struct PauliOperator {
    n: usize,
    terms: FxHashMap<PauliString, Complex64>,
    prune_tol: f64,
}

impl PauliOperator {
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::Argument(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        Ok(Self {
            n,
            terms: FxHashMap::default(),
            prune_tol: DEFAULT_PRUNE_TOL,
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut op = Self::zero(n)?;
        op.terms
            .insert(PauliString::identity(n)?, Complex64::new(1.0, 0.0));
        Ok(op)
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut op = Self::zero(n)?;
        for (s, c) in terms {
            op.add_term(s, c)?;
        }
        op.prune();
        Ok(op)
    }

    /// Convenience constructor from labels such as `"XZIY"`.
    pub fn from_labels(terms: &[(&str, Complex64)]) -> Result<Self> {
        let n = terms
            .first()
            .map(|(l, _)| l.len())
            .ok_or_else(|| Error::Argument("empty label list".into()))?;
        let parsed = terms
            .iter()
            .map(|(l, c)| Ok((l.parse::<PauliString>()?, *c)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, parsed)
    }

    pub fn with_prune_tol(mut self, tol: f64) -> Self {
        self.prune_tol = tol;
        self.prune();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn prune_tol(&self) -> f64 {
        self.prune_tol
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, s: &PauliString) -> Complex64 {
        self.terms.get(s).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    /// Terms ordered lexicographically by their text label.
    pub fn sorted_terms(&self) -> Vec<(PauliString, Complex64)> {
        let mut v: Vec<_> = self
            .terms
            .iter()
            .map(|(s, c)| (s.to_string(), *s, *c))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v.into_iter().map(|(_, s, c)| (s, c)).collect()
    }

    /// Accumulates `c * s` without pruning.
    pub fn add_term(&mut self, s: PauliString, c: Complex64) -> Result<()> {
        if s.n() != self.n {
            return Err(Error::Dimension(format!(
                "string on {} qubits added to operator on {}",
                s.n(),
                self.n
            )));
        }
        *self.terms.entry(s).or_default() += c;
        Ok(())
    }

    pub fn prune(&mut self) {
        let tol = self.prune_tol;
        self.terms.retain(|_, c| c.norm() >= tol);
    }

    fn check_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension(format!(
                "operators on {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(())
    }

    fn empty_like(&self) -> Self {
        Self {
            n: self.n,
            terms: FxHashMap::default(),
            prune_tol: self.prune_tol,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: Complex64, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            *out.terms.entry(*s).or_default() += alpha * c;
        }
        out.prune();
        Ok(out)
    }

    /// Operator product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.empty_like();
        out.terms.reserve(self.terms.len().max(other.terms.len()));
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                let (power, s) = a.mul_raw(b);
                *out.terms.entry(s).or_default() += I_POWERS[power as usize] * ca * cb;
            }
        }
        out.prune();
        Ok(out)
    }

    /// Accumulates `alpha * self * other` into `out` without pruning.
    pub(crate) fn mul_acc(&self, other: &Self, alpha: Complex64, out: &mut Self) {
        for (a, ca) in &self.terms {
            let ca = alpha * ca;
            for (b, cb) in &other.terms {
                let (power, s) = a.mul_raw(b);
                *out.terms.entry(s).or_default() += I_POWERS[power as usize] * ca * cb;
            }
        }
    }

    /// `self * self * ... * self` (`k` factors); `k = 0` gives the identity.
    pub fn pow(&self, k: usize) -> Result<Self> {
        let mut out = Self::identity(self.n)?.with_prune_tol(self.prune_tol);
        for _ in 0..k {
            out = out.multiply(self)?;
        }
        Ok(out)
    }

    /// `self * other - other * self`. Commuting string pairs are skipped;
    /// anticommuting pairs contribute twice their product.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut out = self.empty_like();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                if a.commutes_with(b) {
                    continue;
                }
                let (power, s) = a.mul_raw(b);
                *out.terms.entry(s).or_default() += 2.0 * I_POWERS[power as usize] * ca * cb;
            }
        }
        out.prune();
        Ok(out)
    }

    pub fn one_norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).sum()
    }

    pub fn max_support(&self) -> usize {
        self.terms.keys().map(|s| s.weight()).max().unwrap_or(0)
    }

    pub fn support_mask(&self) -> u64 {
        self.terms.keys().fold(0, |m, s| m | s.support_mask())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn norms(&self) -> OpNorms {
        OpNorms {
            one_norm: self.one_norm(),
            max_support: self.max_support(),
            term_count: self.len(),
        }
    }

    /// Largest coefficient difference against `other`, over the union of strings.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64> {
        self.check_n(other)?;
        let mut worst = 0.0f64;
        for (s, c) in &self.terms {
            worst = worst.max((c - other.coeff(s)).norm());
        }
        for (s, c) in &other.terms {
            if !self.terms.contains_key(s) {
                worst = worst.max(c.norm());
            }
        }
        Ok(worst)
    }

    /// Restriction to the listed sites, relabelled `sites[i] -> i`. Fails if
    /// any stored string acts outside them.
    pub fn compress(&self, sites: &[usize]) -> Result<Self> {
        let mut out = Self::zero(sites.len())?.with_prune_tol(self.prune_tol);
        for (s, c) in &self.terms {
            out.add_term(s.compress(sites)?, *c)?;
        }
        out.prune();
        Ok(out)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return writeln!(f, "0");
        }
        for (s, c) in self.sorted_terms() {
            writeln!(f, "{:.6}{:+.6}i * {}", c.re, c.im, s)?;
        }
        Ok(())
    }
}
