//! Model Hamiltonians split into two internally commuting parts.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dense::{spectral_norm, to_matrix};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliOperator, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Which of the two mutually commuting groups a term belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Part {
    One,
    Two,
}

#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub op: PauliOperator,
    pub support: u64,
    pub part: Part,
    /// Spectral norm of the term on its own support.
    pub norm: f64,
}

impl LocalTerm {
    fn new(op: PauliOperator, part: Part) -> Result<Self> {
        let support = op.support_mask();
        let sites: Vec<usize> = (0..op.n()).filter(|i| support >> i & 1 == 1).collect();
        let norm = if sites.is_empty() {
            op.one_norm()
        } else {
            spectral_norm(&to_matrix(&op.compress(&sites)?)?)
        };
        Ok(Self {
            op,
            support,
            part,
            norm,
        })
    }

    pub fn sites(&self) -> Vec<usize> {
        (0..self.op.n()).filter(|i| self.support >> i & 1 == 1).collect()
    }
}

/// Result of checking that each part consists of mutually commuting terms.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub valid: bool,
    /// First offending pair of term indices, if any.
    pub violation: Option<(usize, usize)>,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct Hamiltonian {
    n: usize,
    terms: Vec<LocalTerm>,
    j_scale: f64,
    boundary: Boundary,
    model_tag: String,
}

impl Hamiltonian {
    /// Builds a Hamiltonian and rejects it if either part contains a
    /// non-commuting pair.
    pub fn new(
        n: usize,
        terms: Vec<(PauliOperator, Part)>,
        boundary: Boundary,
        model_tag: &str,
    ) -> Result<Self> {
        let h = Self::new_unchecked(n, terms, boundary, model_tag)?;
        let report = partition_validate(&h);
        if !report.valid {
            return Err(Error::Partition(report.detail));
        }
        Ok(h)
    }

    /// Same as [`Hamiltonian::new`] without the commutation check.
    pub fn new_unchecked(
        n: usize,
        terms: Vec<(PauliOperator, Part)>,
        boundary: Boundary,
        model_tag: &str,
    ) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Argument("Hamiltonian has no terms".into()));
        }
        let terms = terms
            .into_iter()
            .map(|(op, part)| {
                if op.n() != n {
                    return Err(Error::Dimension(format!(
                        "term on {} qubits in a {n}-site model",
                        op.n()
                    )));
                }
                LocalTerm::new(op, part)
            })
            .collect::<Result<Vec<_>>>()?;
        let j_scale = terms.iter().map(|t| t.norm).fold(0.0, f64::max);
        Ok(Self {
            n,
            terms,
            j_scale,
            boundary,
            model_tag: model_tag.to_string(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    /// Largest local-term norm.
    pub fn j_scale(&self) -> f64 {
        self.j_scale
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn part_terms(&self, part: Part) -> impl Iterator<Item = &LocalTerm> {
        self.terms.iter().filter(move |t| t.part == part)
    }

    pub fn part(&self, part: Part) -> PauliOperator {
        let mut sum = PauliOperator::zero(self.n).expect("n validated at construction");
        for t in self.part_terms(part) {
            sum = sum.add(&t.op).expect("terms share n");
        }
        sum
    }

    pub fn h1(&self) -> PauliOperator {
        self.part(Part::One)
    }

    pub fn h2(&self) -> PauliOperator {
        self.part(Part::Two)
    }

    pub fn total(&self) -> PauliOperator {
        self.h1().add(&self.h2()).expect("terms share n")
    }

    /// True when `[H1, H2] = 0`, in which case every product formula is exact.
    pub fn parts_commute(&self) -> bool {
        self.h1().commutator(&self.h2()).expect("terms share n").is_empty()
    }
}

/// Checks pairwise commutation of the terms inside each part.
pub fn partition_validate(h: &Hamiltonian) -> PartitionReport {
    for (i, a) in h.terms.iter().enumerate() {
        for (j, b) in h.terms.iter().enumerate().skip(i + 1) {
            if a.part != b.part || a.support & b.support == 0 {
                continue;
            }
            let comm = a.op.commutator(&b.op).expect("terms share n");
            if !comm.is_empty() {
                return PartitionReport {
                    valid: false,
                    violation: Some((i, j)),
                    detail: format!(
                        "terms {i} (sites {:?}) and {j} (sites {:?}) in part {:?} do not commute",
                        a.sites(),
                        b.sites(),
                        a.part
                    ),
                };
            }
        }
    }
    PartitionReport {
        valid: true,
        violation: None,
        detail: "all terms within each part commute".into(),
    }
}

fn heisenberg_bond(n: usize, i: usize, j: usize, scale: f64) -> Result<PauliOperator> {
    let terms = [Pauli::X, Pauli::Y, Pauli::Z]
        .into_iter()
        .map(|p| {
            Ok((
                PauliString::from_sites(n, &[(i, p), (j, p)])?,
                Complex64::new(scale, 0.0),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    PauliOperator::from_terms(n, terms)
}

fn bond_pairs(n: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic {
        pairs.push((n - 1, 0));
    }
    pairs
}

/// Nearest-neighbour Heisenberg chain `sum_i s_i (XX + YY + ZZ)` on bonds
/// `(i, i+1)`. With 1-based bond numbering, odd bonds form part one and even
/// bonds part two. `disorder` gives per-bond scales; otherwise `seed` draws
/// them uniformly from `[0.5, 1.5]`; with neither, all scales are 1.
pub fn build_heisenberg(
    n: usize,
    boundary: Boundary,
    disorder: Option<&[f64]>,
    seed: Option<u64>,
) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::Argument(format!("Heisenberg chain needs n >= 2, got {n}")));
    }
    if boundary == Boundary::Periodic && n < 3 {
        return Err(Error::Argument("periodic chain needs n >= 3".into()));
    }
    let pairs = bond_pairs(n, boundary);
    let scales: Vec<f64> = match (disorder, seed) {
        (Some(list), _) => {
            if list.len() != pairs.len() {
                return Err(Error::Argument(format!(
                    "{} disorder scales for {} bonds",
                    list.len(),
                    pairs.len()
                )));
            }
            if list.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                return Err(Error::Argument("disorder scales must be positive".into()));
            }
            list.to_vec()
        }
        (None, Some(seed)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            pairs.iter().map(|_| rng.random_range(0.5..1.5)).collect()
        }
        (None, None) => vec![1.0; pairs.len()],
    };
    let terms = pairs
        .iter()
        .zip(&scales)
        .enumerate()
        .map(|(b, (&(i, j), &s))| {
            let part = if b % 2 == 0 { Part::One } else { Part::Two };
            Ok((heisenberg_bond(n, i, j, s)?, part))
        })
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(n, terms, boundary, "heisenberg")
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InteractionRange {
    Nearest,
    /// Couplings between every pair, scaled by `|i - j|^(-alpha)`.
    AllPairs { alpha: f64 },
}

/// Transverse-field Ising model `jzz * sum c_ij Z_i Z_j + hx * sum X_i`.
/// The ZZ couplings form part one and the fields part two.
pub fn build_tfim(
    n: usize,
    boundary: Boundary,
    jzz: f64,
    hx: f64,
    range: InteractionRange,
) -> Result<Hamiltonian> {
    if n < 2 {
        return Err(Error::Argument(format!("TFIM needs n >= 2, got {n}")));
    }
    if !jzz.is_finite() || !hx.is_finite() {
        return Err(Error::Argument("couplings must be finite".into()));
    }
    let pairs: Vec<(usize, usize, f64)> = match range {
        InteractionRange::Nearest => {
            let b = if n < 3 { Boundary::Open } else { boundary };
            bond_pairs(n, b).into_iter().map(|(i, j)| (i, j, 1.0)).collect()
        }
        InteractionRange::AllPairs { alpha } => {
            if !alpha.is_finite() || alpha < 0.0 {
                return Err(Error::Argument(format!(
                    "power-law exponent must be finite and >= 0, got {alpha}"
                )));
            }
            let mut v = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    v.push((i, j, ((j - i) as f64).powf(-alpha)));
                }
            }
            v
        }
    };
    let mut terms = Vec::new();
    if jzz != 0.0 {
        for (i, j, w) in pairs {
            let s = PauliString::from_sites(n, &[(i, Pauli::Z), (j, Pauli::Z)])?;
            terms.push((
                PauliOperator::from_terms(n, [(s, Complex64::new(jzz * w, 0.0))])?,
                Part::One,
            ));
        }
    }
    if hx != 0.0 {
        for i in 0..n {
            let s = PauliString::single(n, i, Pauli::X)?;
            terms.push((
                PauliOperator::from_terms(n, [(s, Complex64::new(hx, 0.0))])?,
                Part::Two,
            ));
        }
    }
    Hamiltonian::new(n, terms, boundary, "tfim")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heisenberg,
    Tfim,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Heisenberg => "heisenberg",
            ModelKind::Tfim => "tfim",
        })
    }
}

/// Serializable model description used by scan configurations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    pub n: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub disorder_seed: Option<u64>,
    #[serde(default = "one")]
    pub jzz: f64,
    #[serde(default = "one")]
    pub hx: f64,
    /// `None` means nearest-neighbour couplings for the TFIM.
    #[serde(default)]
    pub alpha: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelSpec {
    pub fn heisenberg(n: usize) -> Self {
        Self {
            model: ModelKind::Heisenberg,
            n,
            boundary: Boundary::Open,
            disorder_seed: None,
            jzz: 1.0,
            hx: 1.0,
            alpha: None,
        }
    }

    pub fn build(&self) -> Result<Hamiltonian> {
        match self.model {
            ModelKind::Heisenberg => build_heisenberg(self.n, self.boundary, None, self.disorder_seed),
            ModelKind::Tfim => {
                let range = match self.alpha {
                    None => InteractionRange::Nearest,
                    Some(alpha) => InteractionRange::AllPairs { alpha },
                };
                build_tfim(self.n, self.boundary, self.jzz, self.hx, range)
            }
        }
    }
}
