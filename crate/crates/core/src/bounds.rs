//! Explicit-constant error bounds and the r / gate-count planner.
//!
//! Times are measured in units of `1/J`: the bound
//! `C1 J n t / r + C2 J^3 n t^3 / r^2` is written in terms of `J t`, and the
//! planner works directly with `J = 1`.

use std::f64::consts::E;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::product_formula::{Order, PfEngine};
use crate::scan::{fit_loglog, ScanResult, SlopeFit};
use crate::series::{DeltaSeries, DEFAULT_K_MAX};

pub const INFLATION: f64 = 1.1;
pub const MAX_DOUBLINGS: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
}

impl Constants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1.is_finite() && c2.is_finite() && c1 >= 0.0 && c2 >= 0.0) {
            return Err(Error::Argument(format!("constants must be finite and >= 0, got ({c1}, {c2})")));
        }
        Ok(Self { c1, c2 })
    }

    /// `C1 n t / r + C2 n t^3 / r^2` with `t` already in units of `1/J`.
    pub fn total(&self, n: f64, t: f64, r: f64) -> f64 {
        self.c1 * n * t / r + self.c2 * n * t.powi(3) / (r * r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Assumptions {
    /// `r > e n J t`.
    pub r_exceeds_ent: bool,
    /// `r |delta|` proxy below 1/2.
    pub r_delta_below_half: bool,
    pub r_delta_proxy: f64,
}

impl Assumptions {
    pub fn hold(&self) -> bool {
        self.r_exceeds_ent && self.r_delta_below_half
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub n: usize,
    pub t: f64,
    pub r: u64,
    pub j_scale: f64,
    /// `r` times the series bound on `|delta|`; `None` outside the series domain.
    pub triangle_bound: Option<f64>,
    /// `(t/r) |H2|_1`.
    pub interference_leading: f64,
    /// `C1 J n t / r + C2 J^3 n t^3 / r^2`.
    pub total_bound: f64,
    pub constants_used: Constants,
    pub assumptions: Assumptions,
}

/// Precomputed series data so many `(t, r)` points can be evaluated cheaply.
#[derive(Clone, Debug)]
pub struct BoundEvaluator {
    n: usize,
    j: f64,
    h2_norm: f64,
    exact: bool,
    series: DeltaSeries,
}

impl BoundEvaluator {
    pub fn new(h: &Hamiltonian) -> Result<Self> {
        Ok(Self {
            n: h.n(),
            j: h.j_scale(),
            h2_norm: h.h2().one_norm(),
            exact: h.parts_commute(),
            series: DeltaSeries::new(h, DEFAULT_K_MAX)?,
        })
    }

    pub fn evaluate(&self, t: f64, r: u64, constants: Constants) -> Result<BoundReport> {
        if r == 0 {
            return Err(Error::Argument("r must be >= 1".into()));
        }
        let rf = r as f64;
        let nf = self.n as f64;
        let jt = self.j * t.abs();
        let triangle_bound = self.series.delta_bound(t, r).ok().map(|d| rf * d);
        // Outside the series domain the second assumption is checked against
        // the leading-order estimate n (Jt)^2 / r.
        let proxy = triangle_bound.unwrap_or(nf * jt * jt / rf);
        let total_bound = if self.exact { 0.0 } else { constants.total(nf, jt, rf) };
        Ok(BoundReport {
            n: self.n,
            t,
            r,
            j_scale: self.j,
            triangle_bound,
            interference_leading: t.abs() / rf * self.h2_norm,
            total_bound,
            constants_used: constants,
            assumptions: Assumptions {
                r_exceeds_ent: rf > E * nf * jt,
                r_delta_below_half: proxy < 0.5,
                r_delta_proxy: proxy,
            },
        })
    }
}

pub fn evaluate_bounds(h: &Hamiltonian, t: f64, r: u64, constants: Constants) -> Result<BoundReport> {
    BoundEvaluator::new(h)?.evaluate(t, r, constants)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstantFit {
    /// `None` when the training scan carries no error to fit.
    pub constants: Option<Constants>,
    /// Least-squares constants before scaling to dominate the data.
    pub raw: Option<Constants>,
    pub points_used: usize,
    pub linear_regime_points: usize,
    pub cubic_regime_points: usize,
    pub warnings: Vec<String>,
}

fn log_residual(a: &[f64], b: &[f64], ly: &[f64], phi: f64) -> (f64, f64) {
    let (c, s) = (phi.cos(), phi.sin());
    let lg: Vec<f64> = a.iter().zip(b).map(|(x, y)| (c * x + s * y).ln()).collect();
    let lc = ly.iter().zip(&lg).map(|(y, g)| y - g).sum::<f64>() / ly.len() as f64;
    let ss = ly.iter().zip(&lg).map(|(y, g)| (y - g - lc).powi(2)).sum();
    (ss, lc)
}

/// Fits `|Delta| ~ C1 a + C2 b` with `a = J n t / r`, `b = J^3 n t^3 / r^2`
/// to the first-order points of a scan that lie before saturation
/// (`0 < |Delta| < 1`). The least-squares fit in log space is scaled so the
/// bound dominates every point and then inflated by 10%.
pub fn fit_constants(training: &ScanResult) -> ConstantFit {
    let nf = training.n as f64;
    let rf = training.r as f64;
    let j = training.j_scale;
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    for row in training.rows_for(Order::One) {
        if row.error_norm >= 1.0 {
            break;
        }
        let jt = j * row.t;
        pts.push((nf * jt / rf, nf * jt.powi(3) / (rf * rf), row.error_norm));
    }
    let mut fit = ConstantFit {
        constants: None,
        raw: None,
        points_used: 0,
        linear_regime_points: 0,
        cubic_regime_points: 0,
        warnings: Vec::new(),
    };
    let scale = pts.iter().map(|p| p.2).fold(0.0, f64::max);
    pts.retain(|p| p.2 > 1e-12 * scale.max(1e-300) && p.2 > 1e-14);
    if pts.is_empty() {
        fit.warnings.push("no nonzero errors before saturation; constants undefined (exact case?)".into());
        return fit;
    }
    let a: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let b: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.2.ln()).collect();

    let half_pi = std::f64::consts::FRAC_PI_2;
    let steps = 2000;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=steps {
        let phi = half_pi * i as f64 / steps as f64;
        let (ss, _) = log_residual(&a, &b, &ly, phi);
        if ss < best.0 {
            best = (ss, phi);
        }
    }
    let h = half_pi / steps as f64;
    let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(half_pi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if log_residual(&a, &b, &ly, m1).0 <= log_residual(&a, &b, &ly, m2).0 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut phi = 0.5 * (lo + hi);
    for edge in [0.0, half_pi] {
        if log_residual(&a, &b, &ly, edge).0 <= log_residual(&a, &b, &ly, phi).0 {
            phi = edge;
        }
    }
    let (_, lc) = log_residual(&a, &b, &ly, phi);
    let c = lc.exp();
    let (mut c1, mut c2) = (c * phi.cos(), c * phi.sin());
    if c1 < 1e-15 * c {
        c1 = 0.0;
    }
    if c2 < 1e-15 * c {
        c2 = 0.0;
    }
    fit.raw = Some(Constants { c1, c2 });
    let worst = pts
        .iter()
        .map(|p| p.2 / (c1 * p.0 + c2 * p.1))
        .fold(0.0, f64::max);
    let s = worst * INFLATION;
    fit.constants = Some(Constants { c1: c1 * s, c2: c2 * s });
    fit.points_used = pts.len();
    fit.linear_regime_points = pts.iter().filter(|p| c1 * p.0 >= c2 * p.1).count();
    fit.cubic_regime_points = fit.points_used - fit.linear_regime_points;
    if fit.linear_regime_points == 0 || fit.cubic_regime_points == 0 {
        fit.warnings.push(format!(
            "training points cover a single regime ({} linear, {} cubic); one constant is poorly determined",
            fit.linear_regime_points, fit.cubic_regime_points
        ));
    }
    fit
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Trivial,
    SmallTime,
    LargeTime,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateCountEstimate {
    pub regime: Regime,
    /// Segments per stage.
    pub r_chosen: u64,
    /// Number of stages `m`.
    pub stages: u64,
    pub gates_total: u64,
    pub epsilon: f64,
    pub n: usize,
    pub t: f64,
    pub stage_time: f64,
    pub stage_epsilon: f64,
    pub terms_per_segment: u64,
    /// Bound on the per-stage error at `r_chosen`.
    pub stage_bound: f64,
    /// False when ten doublings of `r` did not bring the bound below the
    /// stage tolerance.
    pub bound_met: bool,
    pub doublings: u32,
    /// `r > e n t`.
    pub r_exceeds_ent: bool,
    /// `n t_stage^2 / r < 1/2`.
    pub r_delta_below_half: bool,
    pub constants: Constants,
}

/// Plans a first-order simulation of an open chain (`n - 1` terms per
/// segment). See [`choose_r_with_terms`].
pub fn choose_r(n: usize, t: f64, epsilon: f64, constants: Constants) -> Result<GateCountEstimate> {
    choose_r_with_terms(n, t, epsilon, constants, n.saturating_sub(1) as u64)
}

/// Picks `r` so that `C1 n t / r + C2 n t^3 / r^2 <= epsilon`.
///
/// * `n t < epsilon`: a single segment suffices.
/// * `epsilon t <= 1`: start from `ceil(C1 n t / epsilon)` and double until
///   the bound holds (at most ten times).
/// * `epsilon t > 1`: split into `m = ceil(sqrt(epsilon t))` stages of time
///   `t/m` and tolerance `epsilon/m`, each solved as above.
pub fn choose_r_with_terms(
    n: usize,
    t: f64,
    epsilon: f64,
    constants: Constants,
    terms_per_segment: u64,
) -> Result<GateCountEstimate> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Argument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if n < 2 {
        return Err(Error::Argument(format!("n must be >= 2, got {n}")));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Argument(format!("t must be finite and >= 0, got {t}")));
    }
    let nf = n as f64;
    let (regime, stages) = if nf * t < epsilon {
        (Regime::Trivial, 1u64)
    } else if epsilon * t <= 1.0 {
        (Regime::SmallTime, 1)
    } else {
        (Regime::LargeTime, (epsilon * t).sqrt().ceil() as u64)
    };
    let mf = stages as f64;
    let (ts, es) = (t / mf, epsilon / mf);
    let (r, doublings, bound_met) = if regime == Regime::Trivial {
        (1u64, 0, constants.total(nf, ts, 1.0) <= es)
    } else {
        let start = (constants.c1 * nf * ts / es).ceil().max(1.0);
        if start > 1e18 {
            return Err(Error::Argument("requested accuracy needs r beyond 1e18".into()));
        }
        let mut r = start as u64;
        let mut doublings = 0;
        while constants.total(nf, ts, r as f64) > es && doublings < MAX_DOUBLINGS {
            r *= 2;
            doublings += 1;
        }
        (r, doublings, constants.total(nf, ts, r as f64) <= es)
    };
    let rf = r as f64;
    Ok(GateCountEstimate {
        regime,
        r_chosen: r,
        stages,
        gates_total: stages * r * terms_per_segment,
        epsilon,
        n,
        t,
        stage_time: ts,
        stage_epsilon: es,
        terms_per_segment,
        stage_bound: constants.total(nf, ts, rf),
        bound_met,
        doublings,
        r_exceeds_ent: rf > E * nf * ts,
        r_delta_below_half: nf * ts * ts / rf < 0.5,
        constants,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub t: f64,
    /// Smallest r found with `|Delta| <= epsilon`.
    pub r_min: u64,
    pub error_at_r_min: f64,
    /// Largest probed r with `|Delta| > epsilon` (0 if r = 1 already works).
    pub r_low: u64,
    pub error_at_r_low: f64,
    /// `m * r` from the planner with staging.
    pub r_proven_total: u64,
    pub stages: u64,
    /// `ceil(sqrt(C2 n (Jt)^3 / epsilon))`.
    pub r_conjectured: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConjectureReport {
    pub epsilon: f64,
    pub n: usize,
    pub rows: Vec<ConjectureRow>,
    /// Log-log slope of `r_min` against `t`; the conjecture predicts 3/2.
    pub r_min_growth: Option<SlopeFit>,
}

const MAX_R_SEARCH: u64 = 1 << 40;

/// Smallest `r` with `|Delta| <= epsilon`, found by doubling and bisection.
/// Returns `(r_min, err(r_min), r_low, err(r_low))`.
pub fn minimal_r(engine: &PfEngine, t: f64, epsilon: f64) -> Result<(u64, f64, u64, f64)> {
    let err = |r: u64| engine.total_error(t, r, Order::One);
    let e1 = err(1)?;
    if e1 <= epsilon {
        return Ok((1, e1, 0, f64::NAN));
    }
    let (mut lo, mut elo) = (1u64, e1);
    let mut hi = 2u64;
    let mut ehi = err(hi)?;
    while ehi > epsilon {
        lo = hi;
        elo = ehi;
        hi *= 2;
        if hi > MAX_R_SEARCH {
            return Err(Error::Numeric(format!("no r below {MAX_R_SEARCH} reaches epsilon at t={t}")));
        }
        ehi = err(hi)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let e = err(mid)?;
        if e <= epsilon {
            hi = mid;
            ehi = e;
        } else {
            lo = mid;
            elo = e;
        }
    }
    Ok((hi, ehi, lo, elo))
}

/// For each `t`, compares the empirically minimal `r` with the planner's
/// staged choice and with the conjectured `sqrt(n t^3 / epsilon)` scaling.
pub fn conjecture_scan(
    h: &Hamiltonian,
    epsilon: f64,
    t_grid: &[f64],
    constants: Constants,
) -> Result<ConjectureReport> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(Error::Argument(format!("epsilon must be > 0, got {epsilon}")));
    }
    let engine = PfEngine::new(h)?;
    let j = h.j_scale();
    let nf = h.n() as f64;
    let terms = h.terms().len() as u64;
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let (r_min, error_at_r_min, r_low, error_at_r_low) = minimal_r(&engine, t, epsilon)?;
            let plan = choose_r_with_terms(h.n(), j * t, epsilon, constants, terms)?;
            Ok(ConjectureRow {
                t,
                r_min,
                error_at_r_min,
                r_low,
                error_at_r_low,
                r_proven_total: plan.r_chosen * plan.stages,
                stages: plan.stages,
                r_conjectured: (constants.c2 * nf * (j * t).powi(3) / epsilon).sqrt().ceil().max(1.0) as u64,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.r_min as f64)).collect();
    Ok(ConjectureReport {
        epsilon,
        n: h.n(),
        r_min_growth: fit_loglog(&pts),
        rows,
    })
}
