//! Error scans over a time grid, CSV output and log-log slope fits.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelSpec;
use crate::product_formula::{Order, PfEngine};
use crate::series::{DeltaSeries, DEFAULT_K_MAX};

pub const CSV_HEADER: &str =
    "model,n,boundary,order,r,t,error_norm,delta_norm,triangle_estimate,interference_bound,series_bound";

/// Ordinary least squares `y = slope * x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Lin,
}

/// Positive, strictly increasing time grid written as `log:a:b:N`,
/// `lin:a:b:N` or a comma-separated list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TGrid {
    text: String,
    values: Vec<f64>,
}

impl TGrid {
    pub fn new(spacing: Spacing, a: f64, b: f64, count: usize) -> Result<Self> {
        let tag = match spacing {
            Spacing::Log => "log",
            Spacing::Lin => "lin",
        };
        format!("{tag}:{a}:{b}:{count}").parse()
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let text = values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        Self::validated(text, values)
    }

    fn validated(text: String, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Argument("empty t grid".into()));
        }
        if values.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(Error::Argument(format!("t grid '{text}' must be positive and finite")));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument(format!("t grid '{text}' must be strictly increasing")));
        }
        Ok(Self { text, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl FromStr for TGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("cannot parse t grid '{s}'"));
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [kind @ ("log" | "lin"), a, b, count] => {
                let a: f64 = a.parse().map_err(|_| bad())?;
                let b: f64 = b.parse().map_err(|_| bad())?;
                let count: usize = count.parse().map_err(|_| bad())?;
                if count == 0 {
                    return Err(bad());
                }
                if count == 1 {
                    vec![a]
                } else if *kind == "log" {
                    if a <= 0.0 || b <= 0.0 {
                        return Err(Error::Argument(format!("log grid '{s}' needs positive ends")));
                    }
                    let (la, lb) = (a.ln(), b.ln());
                    (0..count)
                        .map(|i| {
                            if i == count - 1 {
                                b
                            } else {
                                (la + (lb - la) * i as f64 / (count - 1) as f64).exp()
                            }
                        })
                        .collect()
                } else {
                    (0..count)
                        .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
                        .collect()
                }
            }
            [list] => list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()?,
            _ => return Err(bad()),
        };
        Self::validated(s.to_string(), values)
    }
}

impl TryFrom<String> for TGrid {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TGrid> for String {
    fn from(g: TGrid) -> String {
        g.text
    }
}

impl fmt::Display for TGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn default_k_max() -> usize {
    DEFAULT_K_MAX
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorScanConfig {
    pub model: ModelSpec,
    pub r: u64,
    pub t_grid: TGrid,
    pub orders: Vec<Order>,
    /// Truncation order of the series used for the `series_bound` column.
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

impl ErrorScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r == 0 {
            return Err(Error::Argument("r must be >= 1".into()));
        }
        if self.orders.is_empty() {
            return Err(Error::Argument("no product-formula orders requested".into()));
        }
        let mut seen = self.orders.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.orders.len() {
            return Err(Error::Argument("orders listed more than once".into()));
        }
        if !(2..=crate::series::MAX_K).contains(&self.k_max) {
            return Err(Error::Argument(format!("k_max must be in 2..=8, got {}", self.k_max)));
        }
        if self.model.n > crate::dense::MAX_DENSE_QUBITS {
            return Err(Error::Capacity(format!(
                "n = {} exceeds the dense limit of {} qubits",
                self.model.n,
                crate::dense::MAX_DENSE_QUBITS
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub order: Order,
    pub t: f64,
    pub error_norm: f64,
    pub delta_norm: f64,
    pub triangle_estimate: f64,
    /// `(t/r) * |H2|_1`; first order only.
    pub interference_bound: f64,
    /// Series bound on `|delta|`; first order only, NaN outside its domain.
    pub series_bound: f64,
    pub unitarity_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanResult {
    pub model: String,
    pub n: usize,
    pub boundary: String,
    pub r: u64,
    pub j_scale: f64,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    pub fn rows_for(&self, order: Order) -> impl Iterator<Item = &ScanRow> {
        self.rows.iter().filter(move |r| r.order == order)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for row in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e},{:.9e}",
                self.model,
                self.n,
                self.boundary,
                row.order,
                self.r,
                row.t,
                row.error_norm,
                row.delta_norm,
                row.triangle_estimate,
                row.interference_bound,
                row.series_bound
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    pub fn max_unitarity_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.unitarity_deviation).fold(0.0, f64::max)
    }
}

/// Evaluates every `(order, t)` point of the scan. Points run in parallel on
/// the current rayon pool; rows come back in grid order for each order.
pub fn run_scan(cfg: &ErrorScanConfig) -> Result<ScanResult> {
    cfg.validate()?;
    let h = cfg.model.build()?;
    let engine = PfEngine::new(&h)?;
    let series = if cfg.orders.contains(&Order::One) {
        Some(DeltaSeries::new(&h, cfg.k_max)?)
    } else {
        None
    };
    let h2_norm = h.h2().one_norm();
    let r = cfg.r;
    let tasks: Vec<(Order, f64)> = cfg
        .orders
        .iter()
        .flat_map(|&o| cfg.t_grid.values().iter().map(move |&t| (o, t)))
        .collect();
    let rows = tasks
        .par_iter()
        .map(|&(order, t)| {
            let p = engine.point(order, t, r)?;
            let (interference_bound, series_bound) = match (order, &series) {
                (Order::One, Some(s)) => (
                    t / r as f64 * h2_norm,
                    s.delta_bound(t, r).unwrap_or(f64::NAN),
                ),
                _ => (f64::NAN, f64::NAN),
            };
            Ok(ScanRow {
                order,
                t,
                error_norm: p.error_norm,
                delta_norm: p.delta_norm,
                triangle_estimate: r as f64 * p.delta_norm,
                interference_bound,
                series_bound,
                unitarity_deviation: p.unitarity_deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult {
        model: h.model_tag().to_string(),
        n: h.n(),
        boundary: h.boundary().to_string(),
        r,
        j_scale: h.j_scale(),
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub points: usize,
}

/// Fits `log y` against `log t` over the given points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Option<SlopeFit> {
    let pts: Vec<_> = points.iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &ys)?;
    Some(SlopeFit {
        slope,
        intercept,
        t_min: pts.first()?.0,
        t_max: pts.last()?.0,
        points: pts.len(),
    })
}

/// Points before `y` first reaches `stop`, restricted to `lo < y`.
fn window(points: &[(f64, f64)], lo: f64, stop: f64) -> Vec<(f64, f64)> {
    points
        .iter()
        .take_while(|p| p.1 < stop)
        .filter(|p| p.1 > lo)
        .copied()
        .collect()
}

/// One slope fit of a scan, with the window that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub order: u8,
    pub quantity: String,
    pub regime: String,
    pub window: String,
    pub fit: Option<SlopeFit>,
}

pub const SMALL_T_CEILING: f64 = 0.02;
pub const LARGE_T_FLOOR: f64 = 0.1;
pub const SATURATION_ONSET: f64 = 1.0;
pub const TRIANGLE_CEILING: f64 = 2.0;
pub const PF4_FLOOR: f64 = 1e-8;

/// Slope fits in automatically chosen windows. Every window only uses
/// points before the fitted quantity first crosses its upper limit.
pub fn fit_scan(result: &ScanResult) -> Vec<FitReport> {
    let mut out = Vec::new();
    for order in [Order::One, Order::Two, Order::Four] {
        let rows: Vec<&ScanRow> = result.rows_for(order).collect();
        if rows.is_empty() {
            continue;
        }
        let err: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.error_norm)).collect();
        let mut push = |quantity: &str, regime: &str, window_text: String, pts: Vec<(f64, f64)>| {
            out.push(FitReport {
                order: order.as_u8(),
                quantity: quantity.into(),
                regime: regime.into(),
                window: window_text,
                fit: fit_loglog(&pts),
            });
        };
        match order {
            Order::One => {
                push(
                    "error_norm",
                    "small_t",
                    format!("error_norm < {SMALL_T_CEILING}"),
                    window(&err, 0.0, SMALL_T_CEILING),
                );
                push(
                    "error_norm",
                    "large_t",
                    format!("{LARGE_T_FLOOR} < error_norm < {SATURATION_ONSET}"),
                    window(&err, LARGE_T_FLOOR, SATURATION_ONSET),
                );
                let tri: Vec<(f64, f64)> = rows.iter().map(|r| (r.t, r.triangle_estimate)).collect();
                push(
                    "triangle_estimate",
                    "pre_saturation",
                    format!("triangle_estimate < {TRIANGLE_CEILING}"),
                    window(&tri, 0.0, TRIANGLE_CEILING),
                );
            }
            Order::Two => push(
                "error_norm",
                "pre_saturation",
                format!("error_norm < {SATURATION_ONSET}"),
                window(&err, 0.0, SATURATION_ONSET),
            ),
            Order::Four => push(
                "error_norm",
                "pre_saturation",
                format!("{PF4_FLOOR} <= error_norm < {SATURATION_ONSET}"),
                window(&err, 0.0, SATURATION_ONSET)
                    .into_iter()
                    .filter(|p| p.1 >= PF4_FLOOR)
                    .collect(),
            ),
        }
    }
    out
}

/// Looks up a fit by order, quantity and regime.
pub fn find_fit<'a>(fits: &'a [FitReport], order: u8, quantity: &str, regime: &str) -> Option<&'a SlopeFit> {
    fits.iter()
        .find(|f| f.order == order && f.quantity == quantity && f.regime == regime)
        .and_then(|f| f.fit.as_ref())
}
