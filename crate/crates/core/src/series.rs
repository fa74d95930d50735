//! Series expansion of the first-order product-formula defect.
//!
//! With `tau = t / r`, the single-step defect is
//! `U_tau - U1(tau) U2(tau) = sum_{k>=2} (-i tau)^k / k! * delta_k`, where
//! `delta_k = H^k - sum_j C(k, j) H1^j H2^(k-j)`. Each `delta_k` splits as
//! `[H, S_k] + V_k`. The `S_k` and `V_k` are tracked as [`TermSum`]s, i.e.
//! unmerged sums of products of unit-norm local factors, so the number of
//! products along the recursion can be counted directly.

use std::f64::consts::E;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{Hamiltonian, Part};
use crate::pauli::PauliOperator;

pub const DEFAULT_K_MAX: usize = 6;
pub const MAX_K: usize = 8;

/// Constant in the bound on the number of products in `V_k`.
pub fn xi() -> f64 {
    2048.0 / (E * E * (E - 1.0))
}

/// Local terms of a Hamiltonian divided by their norms. The weight
/// `|h_i| / J` of each term is carried separately and folded into the
/// coefficients of every product that uses it.
#[derive(Clone, Debug)]
pub struct FactorTable {
    ops: Vec<PauliOperator>,
    supports: Vec<u64>,
    weights: Vec<f64>,
    all: Vec<u16>,
    part1: Vec<u16>,
    part2: Vec<u16>,
}

impl FactorTable {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        if h.terms().len() > u16::MAX as usize {
            return Err(Error::Capacity(format!("{} local terms", h.terms().len())));
        }
        let j = h.j_scale();
        let mut table = Self {
            ops: Vec::new(),
            supports: Vec::new(),
            weights: Vec::new(),
            all: Vec::new(),
            part1: Vec::new(),
            part2: Vec::new(),
        };
        for (i, t) in h.terms().iter().enumerate() {
            table.ops.push(t.op.scale(Complex64::new(1.0 / t.norm, 0.0)));
            table.supports.push(t.support);
            table.weights.push(t.norm / j);
            let id = i as u16;
            table.all.push(id);
            match t.part {
                Part::One => table.part1.push(id),
                Part::Two => table.part2.push(id),
            }
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, id: u16) -> &PauliOperator {
        &self.ops[id as usize]
    }

    pub fn weight(&self, id: u16) -> f64 {
        self.weights[id as usize]
    }

    pub fn support(&self, id: u16) -> u64 {
        self.supports[id as usize]
    }
}

/// One product in a [`TermSum`].
#[derive(Clone, Copy, Debug)]
pub struct TermProduct<'a> {
    pub coeff: Complex64,
    pub factors: &'a [u16],
    /// Union of the factor supports as a site mask.
    pub support: u64,
}

/// Sum of products of a fixed number of local factors.
#[derive(Clone, Debug, Default)]
pub struct TermSum {
    k: usize,
    width: usize,
    coeffs: Vec<Complex64>,
    supports: Vec<u64>,
    factors: Vec<u16>,
}

impl TermSum {
    pub fn new(k: usize, width: usize) -> Self {
        Self {
            k,
            width,
            ..Default::default()
        }
    }

    /// Series order this sum belongs to.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of factors in every product.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn push(&mut self, coeff: Complex64, factors: &[u16], support: u64) {
        debug_assert_eq!(factors.len(), self.width);
        self.coeffs.push(coeff);
        self.supports.push(support);
        self.factors.extend_from_slice(factors);
    }

    pub fn get(&self, i: usize) -> TermProduct<'_> {
        TermProduct {
            coeff: self.coeffs[i],
            factors: &self.factors[i * self.width..(i + 1) * self.width],
            support: self.supports[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = TermProduct<'_>> {
        (0..self.len()).map(move |i| self.get(i))
    }

    pub fn max_support(&self) -> usize {
        self.supports.iter().map(|s| s.count_ones() as usize).max().unwrap_or(0)
    }

    /// Sum of coefficient magnitudes. Every factor has unit norm, so this
    /// bounds the norm of the represented operator.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    fn append(&mut self, other: TermSum) {
        debug_assert_eq!(self.width, other.width);
        self.coeffs.extend(other.coeffs);
        self.supports.extend(other.supports);
        self.factors.extend(other.factors);
    }

    /// Expands every product into Pauli strings and sums the result.
    ///
    /// Products with the same factor sequence are merged first, then the
    /// sorted sequences are walked as a prefix tree so shared prefixes are
    /// multiplied out once.
    pub fn collapse(&self, table: &FactorTable) -> Result<PauliOperator> {
        let n = table
            .ops
            .first()
            .map(|o| o.n())
            .ok_or_else(|| Error::Argument("empty factor table".into()))?;
        let mut out = PauliOperator::zero(n)?;
        if self.is_empty() {
            return Ok(out);
        }
        if self.width == 0 {
            let c: Complex64 = self.coeffs.iter().sum();
            return Ok(PauliOperator::identity(n)?.scale(c));
        }
        if self.width > 16 || table.len() > 256 {
            return Err(Error::Capacity(format!(
                "cannot key products of {} factors over {} local terms",
                self.width,
                table.len()
            )));
        }
        let mut keyed: Vec<(u128, Complex64)> = self
            .iter()
            .map(|p| {
                let key = p.factors.iter().fold(0u128, |acc, &f| acc << 8 | f as u128);
                (key, p.coeff)
            })
            .collect();
        keyed.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(u128, Complex64)> = Vec::with_capacity(keyed.len());
        for (key, c) in keyed {
            match merged.last_mut() {
                Some(last) if last.0 == key => last.1 += c,
                _ => merged.push((key, c)),
            }
        }

        let width = self.width;
        let groups = split_groups(&merged, 0, width);
        let identity = PauliOperator::identity(n)?;
        let parts: Vec<PauliOperator> = groups
            .into_par_iter()
            .map(|(f, range)| {
                let mut acc = PauliOperator::zero(n).expect("n checked above");
                expand(&merged[range], 0, width, &identity, f, table, &mut acc);
                acc
            })
            .collect();
        for part in parts {
            for (s, c) in part.iter() {
                out.add_term(*s, *c)?;
            }
        }
        out.prune();
        Ok(out)
    }
}

fn digit(key: u128, depth: usize, width: usize) -> u16 {
    (key >> (8 * (width - 1 - depth)) & 0xff) as u16
}

fn split_groups(
    keys: &[(u128, Complex64)],
    depth: usize,
    width: usize,
) -> Vec<(u16, std::ops::Range<usize>)> {
    let mut groups = Vec::new();
    let mut start = 0;
    while start < keys.len() {
        let f = digit(keys[start].0, depth, width);
        let mut end = start + 1;
        while end < keys.len() && digit(keys[end].0, depth, width) == f {
            end += 1;
        }
        groups.push((f, start..end));
        start = end;
    }
    groups
}

fn expand(
    keys: &[(u128, Complex64)],
    depth: usize,
    width: usize,
    prefix: &PauliOperator,
    f: u16,
    table: &FactorTable,
    out: &mut PauliOperator,
) {
    if depth + 1 == width {
        prefix.mul_acc(table.op(f), keys[0].1, out);
        return;
    }
    let next = prefix.multiply(table.op(f)).expect("factors share n");
    for (g, range) in split_groups(keys, depth + 1, width) {
        expand(&keys[range], depth + 1, width, &next, g, table, out);
    }
}

/// `[sum_{i in ids} w_i f_i, X]`, keeping only factors whose support meets
/// the product they act on.
fn commutator_left(table: &FactorTable, ids: &[u16], x: &TermSum, k: usize) -> TermSum {
    let mut out = TermSum::new(k, x.width + 1);
    let mut buf = vec![0u16; x.width + 1];
    for p in x.iter() {
        for &i in ids {
            let si = table.support(i);
            if si & p.support == 0 {
                continue;
            }
            let c = p.coeff * table.weight(i);
            let support = si | p.support;
            buf[0] = i;
            buf[1..].copy_from_slice(p.factors);
            out.push(c, &buf, support);
            buf[..x.width].copy_from_slice(p.factors);
            buf[x.width] = i;
            out.push(-c, &buf, support);
        }
    }
    out
}

fn mul_left(table: &FactorTable, ids: &[u16], x: &TermSum, k: usize) -> TermSum {
    let mut out = TermSum::new(k, x.width + 1);
    let mut buf = vec![0u16; x.width + 1];
    for p in x.iter() {
        for &i in ids {
            buf[0] = i;
            buf[1..].copy_from_slice(p.factors);
            out.push(p.coeff * table.weight(i), &buf, table.support(i) | p.support);
        }
    }
    out
}

fn mul_right(table: &FactorTable, x: &TermSum, ids: &[u16], k: usize) -> TermSum {
    let mut out = TermSum::new(k, x.width + 1);
    let mut buf = vec![0u16; x.width + 1];
    for p in x.iter() {
        buf[..x.width].copy_from_slice(p.factors);
        for &i in ids {
            buf[x.width] = i;
            out.push(p.coeff * table.weight(i), &buf, table.support(i) | p.support);
        }
    }
    out
}

/// `- sum_{j=0}^{k-1} H^(k-1-j) H2 H^j` expanded into products of `k` factors.
fn h2_sandwich(table: &FactorTable, k: usize) -> TermSum {
    let mut out = TermSum::new(k + 1, k);
    if table.part2.is_empty() {
        return out;
    }
    let all = &table.all;
    let mut buf = vec![0u16; k];
    let mut odometer = vec![0usize; k - 1];
    for pos in 0..k {
        for &h2 in &table.part2 {
            odometer.iter_mut().for_each(|d| *d = 0);
            loop {
                let mut c = table.weight(h2);
                let mut support = table.support(h2);
                let mut slot = 0;
                for (p, b) in buf.iter_mut().enumerate() {
                    let id = if p == pos {
                        h2
                    } else {
                        let id = all[odometer[slot]];
                        slot += 1;
                        c *= table.weight(id);
                        support |= table.support(id);
                        id
                    };
                    *b = id;
                }
                out.push(Complex64::new(-c, 0.0), &buf, support);
                // advance
                let mut d = 0;
                while d < odometer.len() {
                    odometer[d] += 1;
                    if odometer[d] < all.len() {
                        break;
                    }
                    odometer[d] = 0;
                    d += 1;
                }
                if d == odometer.len() {
                    break;
                }
            }
        }
    }
    out
}

/// `delta_2 .. delta_{k_max}` from
/// `delta_{k+1} = H1 delta_k + delta_k H2 - [H^k, H2]` with `delta_1 = 0`.
pub fn delta_k_recursion(
    h1: &PauliOperator,
    h2: &PauliOperator,
    k_max: usize,
) -> Result<Vec<PauliOperator>> {
    if k_max < 2 {
        return Err(Error::Argument(format!("k_max must be >= 2, got {k_max}")));
    }
    let h = h1.add(h2)?;
    let mut hk = h.clone();
    let mut delta = PauliOperator::zero(h.n())?;
    let mut out = Vec::with_capacity(k_max - 1);
    for _ in 1..k_max {
        let next = h1
            .multiply(&delta)?
            .add(&delta.multiply(h2)?)?
            .sub(&hk.commutator(h2)?)?;
        out.push(next.clone());
        delta = next;
        hk = hk.multiply(&h)?;
    }
    Ok(out)
}

/// The `delta_k` of a Hamiltonian together with the norm data needed to
/// bound the series beyond `k_max`.
#[derive(Clone, Debug)]
pub struct DeltaSeries {
    n: usize,
    j_scale: f64,
    k_max: usize,
    deltas: Vec<PauliOperator>,
    /// Sums of local-term norms over H, H1 and H2.
    lambda: f64,
    lambda1: f64,
    lambda2: f64,
}

impl DeltaSeries {
    pub fn new(h: &Hamiltonian, k_max: usize) -> Result<Self> {
        check_k_max(k_max)?;
        let deltas = delta_k_recursion(&h.h1(), &h.h2(), k_max)?;
        let lambda1: f64 = h.part_terms(Part::One).map(|t| t.norm).sum();
        let lambda2: f64 = h.part_terms(Part::Two).map(|t| t.norm).sum();
        Ok(Self {
            n: h.n(),
            j_scale: h.j_scale(),
            k_max,
            deltas,
            lambda: lambda1 + lambda2,
            lambda1,
            lambda2,
        })
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_scale(&self) -> f64 {
        self.j_scale
    }

    /// `delta_k` for `2 <= k <= k_max`.
    pub fn delta(&self, k: usize) -> &PauliOperator {
        &self.deltas[k - 2]
    }

    pub fn deltas(&self) -> &[PauliOperator] {
        &self.deltas
    }

    /// Returns `tau = t / r` after checking `e n J tau < 1`.
    pub fn step_in_domain(&self, t: f64, r: u64) -> Result<f64> {
        if r == 0 {
            return Err(Error::Argument("r must be >= 1".into()));
        }
        if !t.is_finite() {
            return Err(Error::Argument(format!("t must be finite, got {t}")));
        }
        let tau = t.abs() / r as f64;
        let x = E * self.n as f64 * self.j_scale * tau;
        if x >= 1.0 {
            return Err(Error::Domain(format!(
                "series needs e*n*J*t/r < 1, got {x:.4} (n={}, J={}, t={t}, r={r})",
                self.n, self.j_scale
            )));
        }
        Ok(tau)
    }

    /// Upper bound on `|U_tau - U1 U2|`: the truncated series with Pauli
    /// one-norms plus the tail `sum_{k>k_max} tau^k/k! (L^k + L^k)`, where
    /// `L` is the sum of local-term norms.
    pub fn delta_bound(&self, t: f64, r: u64) -> Result<f64> {
        let tau = self.step_in_domain(t, r)?;
        if tau == 0.0 || self.deltas[0].is_empty() {
            return Ok(0.0);
        }
        let mut sum = 0.0;
        let mut coef = 1.0;
        for k in 1..=self.k_max {
            coef *= tau / k as f64;
            if k >= 2 {
                sum += coef * self.delta(k).one_norm();
            }
        }
        Ok(sum + 2.0 * exp_tail(self.lambda * tau, self.k_max))
    }
}

/// `sum_{k > k0} x^k / k!` for `0 <= x < 1`.
fn exp_tail(x: f64, k0: usize) -> f64 {
    let mut term = 1.0;
    for k in 1..=k0 {
        term *= x / k as f64;
    }
    let mut sum = 0.0;
    let mut k = k0;
    loop {
        k += 1;
        term *= x / k as f64;
        sum += term;
        if term <= 1e-18 * sum || term == 0.0 || k > k0 + 1000 {
            return sum;
        }
    }
}

fn check_k_max(k_max: usize) -> Result<()> {
    if !(2..=MAX_K).contains(&k_max) {
        return Err(Error::Argument(format!(
            "k_max must be in 2..={MAX_K}, got {k_max}"
        )));
    }
    Ok(())
}

/// Series data for one Hamiltonian up to order `k_max`.
#[derive(Clone, Debug)]
pub struct SeriesBundle {
    pub deltas: DeltaSeries,
    pub factors: FactorTable,
    /// `S_k` for the Hamiltonian divided by `J`, indexed from `k = 2`.
    pub s: Vec<TermSum>,
    /// `V_k` for the Hamiltonian divided by `J`, indexed from `k = 2`.
    pub v: Vec<TermSum>,
    pub xi: f64,
    /// Largest coefficient of `delta_k - [H, S_k] - V_k` per order, when
    /// the decomposition was checked.
    pub residuals: Option<Vec<f64>>,
}

impl SeriesBundle {
    pub fn k_max(&self) -> usize {
        self.deltas.k_max
    }

    pub fn s(&self, k: usize) -> &TermSum {
        &self.s[k - 2]
    }

    pub fn v(&self, k: usize) -> &TermSum {
        &self.v[k - 2]
    }

    /// `S_k` of the original Hamiltonian as a Pauli operator.
    pub fn s_operator(&self, k: usize) -> Result<PauliOperator> {
        let j = self.deltas.j_scale;
        Ok(self.s(k).collapse(&self.factors)?.scale(Complex64::new(j.powi(k as i32 - 1), 0.0)))
    }

    /// `V_k` of the original Hamiltonian as a Pauli operator.
    pub fn v_operator(&self, k: usize) -> Result<PauliOperator> {
        let j = self.deltas.j_scale;
        if self.v(k).is_empty() {
            return PauliOperator::zero(self.deltas.n);
        }
        Ok(self.v(k).collapse(&self.factors)?.scale(Complex64::new(j.powi(k as i32), 0.0)))
    }

    /// Largest coefficient of `delta_k - [H, S_k] - V_k`.
    pub fn decomposition_residual(&self, h: &PauliOperator, k: usize) -> Result<f64> {
        let rhs = h.commutator(&self.s_operator(k)?)?.add(&self.v_operator(k)?)?;
        self.deltas.delta(k).max_coeff_diff(&rhs)
    }
}

/// Builds `S_k` and `V_k` from `S_2 = -H2`, `V_2 = 0` and
/// `S_{k+1} = S_k H - sum_j H^(k-1-j) H2 H^j`,
/// `V_{k+1} = [H1, [H, S_k]] + H1 V_k + V_k H2`,
/// without checking the result against `delta_k`.
pub fn build_series(h: &Hamiltonian, k_max: usize) -> Result<SeriesBundle> {
    let deltas = DeltaSeries::new(h, k_max)?;
    let factors = FactorTable::new(h)?;
    let mut s_list = Vec::with_capacity(k_max - 1);
    let mut v_list = Vec::with_capacity(k_max - 1);
    let mut s2 = TermSum::new(2, 1);
    for &i in &factors.part2 {
        s2.push(Complex64::new(-factors.weight(i), 0.0), &[i], factors.support(i));
    }
    s_list.push(s2);
    v_list.push(TermSum::new(2, 2));
    for k in 2..k_max {
        let s_k = &s_list[k - 2];
        let v_k = &v_list[k - 2];
        let mut s_next = mul_right(&factors, s_k, &factors.all, k + 1);
        s_next.append(h2_sandwich(&factors, k));
        let inner = commutator_left(&factors, &factors.all, s_k, k + 1);
        let mut v_next = commutator_left(&factors, &factors.part1, &inner, k + 1);
        v_next.append(mul_left(&factors, &factors.part1, v_k, k + 1));
        v_next.append(mul_right(&factors, v_k, &factors.part2, k + 1));
        s_list.push(s_next);
        v_list.push(v_next);
    }
    Ok(SeriesBundle {
        deltas,
        factors,
        s: s_list,
        v: v_list,
        xi: xi(),
        residuals: None,
    })
}

/// [`build_series`] followed by a coefficientwise check of
/// `delta_k = [H, S_k] + V_k` for every order.
pub fn sv_decomposition(h: &Hamiltonian, k_max: usize) -> Result<SeriesBundle> {
    let mut bundle = build_series(h, k_max)?;
    let total = h.total();
    let mut residuals = Vec::with_capacity(k_max - 1);
    for k in 2..=k_max {
        let res = bundle.decomposition_residual(&total, k)?;
        let scale = bundle.deltas.delta(k).max_abs_coeff().max(1.0);
        if res > 1e-9 * scale {
            return Err(Error::InternalConsistency(format!(
                "delta_{k} - [H, S_{k}] - V_{k} has coefficient {res:.3e}"
            )));
        }
        residuals.push(res);
    }
    bundle.residuals = Some(residuals);
    Ok(bundle)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusRow {
    pub k: usize,
    pub m_k: usize,
    pub m_bound: f64,
    pub n_k: usize,
    pub n_bound: f64,
    pub max_support: usize,
    pub support_bound: usize,
    pub residual: Option<f64>,
}

impl CensusRow {
    pub fn m_ok(&self) -> bool {
        self.m_k as f64 <= self.m_bound
    }

    pub fn n_ok(&self) -> bool {
        self.n_k as f64 <= self.n_bound
    }

    pub fn support_ok(&self) -> bool {
        self.max_support <= self.support_bound
    }

    pub fn passes(&self) -> bool {
        self.m_ok() && self.n_ok() && self.support_ok()
    }
}

/// Product counts of `S_k` and `V_k` against
/// `m_k <= k(k-1)/2 n^(k-1)`, `n_k <= xi e^(k-2) n^(k-2)` and
/// support at most `2(k-1)`.
pub fn term_census(bundle: &SeriesBundle, n: usize) -> Vec<CensusRow> {
    let nf = n as f64;
    (2..=bundle.k_max())
        .map(|k| {
            let kf = k as f64;
            let s = bundle.s(k);
            let v = bundle.v(k);
            CensusRow {
                k,
                m_k: s.len(),
                m_bound: kf * (kf - 1.0) / 2.0 * nf.powi(k as i32 - 1),
                n_k: v.len(),
                n_bound: bundle.xi * E.powi(k as i32 - 2) * nf.powi(k as i32 - 2),
                max_support: s.max_support().max(v.max_support()),
                support_bound: 2 * (k - 1),
                residual: bundle.residuals.as_ref().map(|r| r[k - 2]),
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesBounds {
    pub delta: f64,
    pub s: f64,
    pub v: f64,
}

/// Bounds on `|delta|`, `|S|` and `|V|` where
/// `S = sum_k (-i tau)^k/k! S_k` and likewise for `V`. Orders up to
/// `k_max` use the computed operators; higher orders use the norm
/// recursions `s_{k+1} <= s_k L + k L^(k-1) L2` and
/// `v_{k+1} <= 4 L1 L s_k + (L1 + L2) v_k`.
pub fn series_norm_bounds(bundle: &SeriesBundle, t: f64, r: u64) -> Result<SeriesBounds> {
    let d = &bundle.deltas;
    let delta = d.delta_bound(t, r)?;
    let tau = d.step_in_domain(t, r)?;
    if tau == 0.0 {
        return Ok(SeriesBounds {
            delta: 0.0,
            s: 0.0,
            v: 0.0,
        });
    }
    let j = d.j_scale;
    let (lam, lam1, lam2) = (d.lambda, d.lambda1, d.lambda2);

    // a_k = tau^k/k! s_k, c_k = tau^k/k! v_k, p_k = (tau L)^k/k!
    let mut s_sum = 0.0;
    let mut v_sum = 0.0;
    let mut coef = 1.0;
    let (mut a, mut c) = (0.0, 0.0);
    for k in 1..=d.k_max {
        coef *= tau / k as f64;
        if k >= 2 {
            a = coef * j.powi(k as i32 - 1) * bundle.s(k).coeff_norm();
            c = coef * j.powi(k as i32) * bundle.v(k).coeff_norm();
            s_sum += a;
            v_sum += c;
        }
    }
    let mut p = 1.0;
    for k in 1..=d.k_max {
        p *= tau * lam / k as f64;
    }
    let mut k = d.k_max;
    loop {
        let kf = k as f64;
        let a_next = (tau * lam * a + tau * kf * lam2 * p / lam) / (kf + 1.0);
        let c_next = (4.0 * lam1 * lam * tau * a + (lam1 + lam2) * tau * c) / (kf + 1.0);
        p *= tau * lam / (kf + 1.0);
        a = a_next;
        c = c_next;
        s_sum += a;
        v_sum += c;
        k += 1;
        let small = a <= 1e-18 * s_sum && c <= 1e-18 * v_sum.max(f64::MIN_POSITIVE);
        if small || k > d.k_max + 1000 {
            break;
        }
    }
    Ok(SeriesBounds {
        delta,
        s: s_sum,
        v: v_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{build_heisenberg, build_tfim, Boundary, InteractionRange};

    #[test]
    fn single_bond_has_no_defect() {
        let h = build_heisenberg(2, Boundary::Open, None, None).unwrap();
        let deltas = delta_k_recursion(&h.h1(), &h.h2(), 5).unwrap();
        assert!(deltas.iter().all(|d| d.is_empty()));
    }

    #[test]
    fn k_max_validated() {
        let h = build_heisenberg(3, Boundary::Open, None, None).unwrap();
        assert!(matches!(
            delta_k_recursion(&h.h1(), &h.h2(), 1),
            Err(Error::Argument(_))
        ));
        assert!(build_series(&h, 9).is_err());
    }

    #[test]
    fn base_case() {
        let h = build_heisenberg(3, Boundary::Open, None, None).unwrap();
        let b = sv_decomposition(&h, 2).unwrap();
        assert_eq!(b.s(2).len(), 1);
        assert!(b.v(2).is_empty());
        let expected = h.h2().scale(Complex64::new(-1.0, 0.0));
        assert!(b.s_operator(2).unwrap().max_coeff_diff(&expected).unwrap() < 1e-12);
        let comm = h.total().commutator(&h.h2()).unwrap();
        assert!(b.deltas.delta(2).add(&comm).unwrap().is_empty());
    }

    #[test]
    fn decomposition_holds_small_chain() {
        let h = build_heisenberg(4, Boundary::Open, None, Some(2)).unwrap();
        let b = sv_decomposition(&h, 5).unwrap();
        assert!(b.residuals.unwrap().iter().all(|r| *r < 1e-9));
    }

    #[test]
    fn empty_h2_gives_empty_sums() {
        let h = build_tfim(3, Boundary::Open, 1.0, 0.0, InteractionRange::Nearest).unwrap();
        let b = sv_decomposition(&h, 4).unwrap();
        for k in 2..=4 {
            assert!(b.s(k).is_empty());
            assert!(b.v(k).is_empty());
        }
        let census = term_census(&b, 3);
        assert!(census.iter().all(|r| r.n_k == 0 && r.passes()));
    }

    #[test]
    fn census_base_row() {
        let h = build_heisenberg(6, Boundary::Open, None, None).unwrap();
        let b = build_series(&h, 3).unwrap();
        let rows = term_census(&b, 6);
        assert_eq!(rows[0].m_k, 2);
        assert_eq!(rows[0].n_k, 0);
        assert!(rows[0].max_support <= 2);
    }

    #[test]
    fn bounds_zero_at_t_zero_and_domain_checked() {
        let h = build_heisenberg(4, Boundary::Open, None, None).unwrap();
        let b = build_series(&h, 6).unwrap();
        let z = series_norm_bounds(&b, 0.0, 10).unwrap();
        assert_eq!(z, SeriesBounds { delta: 0.0, s: 0.0, v: 0.0 });
        assert!(matches!(series_norm_bounds(&b, 1.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_tail_matches_closed_form() {
        let x: f64 = 0.3;
        let direct = x.exp() - 1.0 - x - x * x / 2.0;
        assert!((exp_tail(x, 2) - direct).abs() < 1e-15);
    }
}
