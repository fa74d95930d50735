//! Product-formula steps and their errors against exact evolution.
//!
//! All work is done block by block: the basis is split into the connected
//! components of the joint sparsity pattern of `H1` and `H2` (the
//! magnetization sectors for the Heisenberg chain), every block is
//! invariant under all the evolutions involved, and operator norms are
//! maxima over blocks.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense::{eig_hermitian, matrix_power, spectral_norm, to_matrix, BlockLayout, ComplexMatrix, SpectralDecomp};
use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;

/// Suzuki parameter `u = 1 / (4 - 4^(1/3))` of the fourth-order formula.
pub fn suzuki_u() -> f64 {
    1.0 / (4.0 - 4f64.powf(1.0 / 3.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    One,
    Two,
    Four,
}

impl Order {
    pub fn as_u8(self) -> u8 {
        match self {
            Order::One => 1,
            Order::Two => 2,
            Order::Four => 4,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            4 => Ok(Order::Four),
            _ => Err(Error::Argument(format!("unsupported product-formula order {v}"))),
        }
    }
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        o.as_u8()
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSpec {
    pub order: Order,
    pub tau: f64,
}

impl StepSpec {
    pub fn new(order: u8, tau: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::Argument(format!("tau must be finite and >= 0, got {tau}")));
        }
        Ok(Self {
            order: Order::try_from(order)?,
            tau,
        })
    }
}

#[derive(Clone, Debug)]
struct Block {
    h: SpectralDecomp,
    h1: Option<SpectralDecomp>,
    h2: Option<SpectralDecomp>,
}

impl Block {
    fn u1(&self, s: f64) -> Option<ComplexMatrix> {
        self.h1.as_ref().map(|d| d.evolution(s))
    }

    fn u2(&self, s: f64) -> Option<ComplexMatrix> {
        self.h2.as_ref().map(|d| d.evolution(s))
    }

    fn identity(&self) -> ComplexMatrix {
        ComplexMatrix::identity(self.h.dim()).expect("block dimension is valid")
    }

    /// Product of the present factors, left to right.
    fn chain(&self, factors: Vec<Option<ComplexMatrix>>) -> ComplexMatrix {
        factors
            .into_iter()
            .flatten()
            .reduce(|a, b| a.matmul(&b))
            .unwrap_or_else(|| self.identity())
    }

    fn strang(&self, tau: f64) -> ComplexMatrix {
        self.chain(vec![self.u1(tau / 2.0), self.u2(tau), self.u1(tau / 2.0)])
    }

    fn step(&self, order: Order, tau: f64) -> ComplexMatrix {
        match order {
            Order::One => self.chain(vec![self.u1(tau), self.u2(tau)]),
            Order::Two => self.strang(tau),
            Order::Four => {
                let u = suzuki_u();
                let outer = self.strang(u * tau);
                let outer2 = outer.matmul(&outer);
                let mid = self.strang((1.0 - 4.0 * u) * tau);
                outer2.matmul(&mid).matmul(&outer2)
            }
        }
    }

    /// `U_tau - W(tau)` expressed in the eigenbasis of `H`.
    fn delta_eigenbasis(&self, tau: f64) -> ComplexMatrix {
        let w = self.step(Order::One, tau);
        let u = self.h.evolution(tau);
        self.h.to_eigenbasis(&u.sub(&w))
    }
}

/// Errors of one `(order, t, r)` evaluation, maximized over blocks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointErrors {
    /// `|U_t - W^r|`.
    pub error_norm: f64,
    /// `|U_tau - W|`.
    pub delta_norm: f64,
    /// `|(W^r)^dagger W^r - I|`.
    pub unitarity_deviation: f64,
}

/// Cached eigendecompositions of `H`, `H1` and `H2` per invariant block.
#[derive(Clone, Debug)]
pub struct PfEngine {
    n: usize,
    layout: BlockLayout,
    blocks: Vec<Block>,
}

impl PfEngine {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        let m1 = to_matrix(&h.h1())?;
        let m2 = to_matrix(&h.h2())?;
        let layout = BlockLayout::detect(&[&m1, &m2]);
        let b1 = layout.extract(&m1);
        let b2 = layout.extract(&m2);
        let blocks = b1
            .into_iter()
            .zip(b2)
            .map(|(a, b)| {
                let full = a.add(&b);
                Ok(Block {
                    h: eig_hermitian(&full)?,
                    h1: if a.max_abs() == 0.0 {
                        None
                    } else if b.max_abs() == 0.0 {
                        Some(eig_hermitian(&full)?)
                    } else {
                        Some(eig_hermitian(&a)?)
                    },
                    h2: if b.max_abs() == 0.0 {
                        None
                    } else if a.max_abs() == 0.0 {
                        Some(eig_hermitian(&full)?)
                    } else {
                        Some(eig_hermitian(&b)?)
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n: h.n(),
            layout,
            blocks,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    /// Full-space product-formula step.
    pub fn step(&self, order: Order, tau: f64) -> ComplexMatrix {
        let parts: Vec<_> = self.blocks.iter().map(|b| b.step(order, tau)).collect();
        self.layout.assemble(&parts)
    }

    /// Full-space `exp(-i H t)`.
    pub fn exact(&self, t: f64) -> ComplexMatrix {
        let parts: Vec<_> = self.blocks.iter().map(|b| b.h.evolution(t)).collect();
        self.layout.assemble(&parts)
    }

    pub fn point(&self, order: Order, t: f64, r: u64) -> Result<PointErrors> {
        if r == 0 {
            return Err(Error::Argument("r must be >= 1".into()));
        }
        if !t.is_finite() {
            return Err(Error::Argument(format!("t must be finite, got {t}")));
        }
        let tau = t / r as f64;
        let mut out = PointErrors {
            error_norm: 0.0,
            delta_norm: 0.0,
            unitarity_deviation: 0.0,
        };
        for b in &self.blocks {
            let w = b.step(order, tau);
            let delta = b.h.evolution(tau).sub(&w);
            let wr = matrix_power(&w, r);
            let err = b.h.evolution(t).sub(&wr);
            out.delta_norm = out.delta_norm.max(spectral_norm(&delta));
            out.error_norm = out.error_norm.max(spectral_norm(&err));
            out.unitarity_deviation = out.unitarity_deviation.max(wr.unitarity_deviation());
        }
        Ok(out)
    }

    /// `|U_t - W(t/r)^r|`.
    pub fn total_error(&self, t: f64, r: u64, order: Order) -> Result<f64> {
        Ok(self.point(order, t, r)?.error_norm)
    }

    /// `|U_tau - W(tau)|` for a single step.
    pub fn delta_norm(&self, order: Order, tau: f64) -> f64 {
        self.blocks
            .iter()
            .map(|b| spectral_norm(&b.h.evolution(tau).sub(&b.step(order, tau))))
            .fold(0.0, f64::max)
    }

    /// `|sum_{j<a} U^j delta U^-j|` and `a |delta|` for the first-order step.
    pub fn interference(&self, t: f64, r: u64, a: u64) -> Result<(f64, f64)> {
        if r == 0 || a == 0 || a > r {
            return Err(Error::Argument(format!("need 1 <= a <= r, got a={a}, r={r}")));
        }
        let tau = t / r as f64;
        let mut sum_norm = 0.0f64;
        let mut delta_norm = 0.0f64;
        for b in &self.blocks {
            let d = b.delta_eigenbasis(tau);
            delta_norm = delta_norm.max(spectral_norm(&d));
            sum_norm = sum_norm.max(spectral_norm(&conjugated_sum(&b.h.eigenvalues, &d, tau, a)));
        }
        Ok((sum_norm, a as f64 * delta_norm))
    }

    /// `|Delta - Delta_1|`, `|Delta_1|` and `r |delta|` for the first-order
    /// formula, with `Delta_1 = sum_j U^j delta U^(r-1-j)`.
    pub fn first_order_split(&self, t: f64, r: u64) -> Result<FirstOrderSplit> {
        if r == 0 {
            return Err(Error::Argument("r must be >= 1".into()));
        }
        let tau = t / r as f64;
        let mut out = FirstOrderSplit {
            residual: 0.0,
            delta1: 0.0,
            error: 0.0,
            triangle: 0.0,
        };
        for b in &self.blocks {
            let lam = &b.h.eigenvalues;
            let w = b.step(Order::One, tau);
            let d = b.h.to_eigenbasis(&b.h.evolution(tau).sub(&w));
            let wr = b.h.to_eigenbasis(&matrix_power(&w, r));
            let ut: Vec<Complex64> = lam.iter().map(|l| Complex64::from_polar(1.0, -l * t)).collect();
            let mut big_delta = wr.scale(Complex64::new(-1.0, 0.0));
            for (i, u) in ut.iter().enumerate() {
                let v = big_delta.get(i, i) + u;
                big_delta.set(i, i, v);
            }
            let tail: Vec<Complex64> = lam
                .iter()
                .map(|l| Complex64::from_polar(1.0, -l * (r - 1) as f64 * tau))
                .collect();
            let delta1 = conjugated_sum(lam, &d, tau, r).scale_columns(&tail);
            out.residual = out.residual.max(spectral_norm(&big_delta.sub(&delta1)));
            out.delta1 = out.delta1.max(spectral_norm(&delta1));
            out.error = out.error.max(spectral_norm(&big_delta));
            out.triangle = out.triangle.max(r as f64 * spectral_norm(&d));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstOrderSplit {
    /// `|Delta - Delta_1|`.
    pub residual: f64,
    /// `|Delta_1|`.
    pub delta1: f64,
    /// `|Delta|`.
    pub error: f64,
    /// `r |delta|`.
    pub triangle: f64,
}

/// `sum_{j<a} exp(-i w j tau)` for every eigenvalue gap `w`, applied
/// entrywise to `d` (given in the eigenbasis).
fn conjugated_sum(lam: &[f64], d: &ComplexMatrix, tau: f64, a: u64) -> ComplexMatrix {
    let af = a as f64;
    ComplexMatrix::from_fn(d.dim(), |p, q| d.get(p, q) * geometric_phase_sum((lam[p] - lam[q]) * tau, af))
        .expect("same dimension as input")
}

/// `sum_{j=0}^{a-1} exp(-i theta j)`.
pub fn geometric_phase_sum(theta: f64, a: f64) -> Complex64 {
    let two_pi = std::f64::consts::TAU;
    let th = theta - two_pi * (theta / two_pi).round();
    let lead = Complex64::from_polar(1.0, -th * (a - 1.0) / 2.0);
    let half = th / 2.0;
    if half.abs() < 1e-8 {
        return lead * (a * (1.0 - (a * a - 1.0) * th * th / 24.0));
    }
    lead * ((a * half).sin() / half.sin())
}

/// Full-space product-formula step.
pub fn pf_step(h: &Hamiltonian, spec: StepSpec) -> Result<ComplexMatrix> {
    Ok(PfEngine::new(h)?.step(spec.order, spec.tau))
}

/// `|U_t - W(t/r)^r|`.
pub fn total_error(h: &Hamiltonian, t: f64, r: u64, order: u8) -> Result<f64> {
    PfEngine::new(h)?.total_error(t, r, Order::try_from(order)?)
}

/// Returns `(|sum_{j<a} U^j delta U^-j|, a |delta|)` for the first-order
/// formula with `tau = t/r`.
pub fn interference_sum(h: &Hamiltonian, t: f64, r: u64, a: u64) -> Result<(f64, f64)> {
    PfEngine::new(h)?.interference(t, r, a)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualOrderReport {
    /// `(r, |Delta - Delta_1|)` per requested `r`.
    pub points: Vec<(u64, f64)>,
    /// Log-log slope; `None` when every residual vanishes.
    pub slope: Option<f64>,
}

impl ResidualOrderReport {
    pub fn is_exact_zero(&self) -> bool {
        self.slope.is_none()
    }
}

/// Fits `log |Delta - Delta_1|` against `log r` at fixed `t`.
pub fn residual_order_check(h: &Hamiltonian, t: f64, r_list: &[u64]) -> Result<ResidualOrderReport> {
    if r_list.is_empty() {
        return Err(Error::Argument("empty r list".into()));
    }
    let engine = PfEngine::new(h)?;
    let mut points = Vec::with_capacity(r_list.len());
    for &r in r_list {
        let split = engine.first_order_split(t, r)?;
        if split.triangle >= 0.5 {
            return Err(Error::Domain(format!(
                "requires r‖δ‖ < 1/2, got {:.4} at r={r}",
                split.triangle
            )));
        }
        points.push((r, split.residual));
    }
    if points.iter().all(|p| p.1 <= 1e-14) {
        return Ok(ResidualOrderReport { points, slope: None });
    }
    if points.len() < 2 || points.iter().any(|p| p.1 <= 0.0) {
        return Err(Error::Numeric("cannot fit a slope to these residuals".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let slope = crate::scan::least_squares(&xs, &ys).map(|f| f.0);
    Ok(ResidualOrderReport { points, slope })
}
