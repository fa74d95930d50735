//! Adaptive Simpson quadrature for vector-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_DEPTH: u32 = 30;

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn combine(fa: &[Complex64], fm: &[Complex64], fb: &[Complex64], h: f64) -> Vec<Complex64> {
    fa.iter()
        .zip(fm)
        .zip(fb)
        .map(|((a, m), b)| (a + 4.0 * m + b) * (h / 6.0))
        .collect()
}

/// Integrates `f` over `[a, b]` entrywise. Converged when every entry of the
/// Richardson error estimate is below the interval's share of `tol`.
pub fn adaptive_simpson<F>(f: &F, a: f64, b: f64, tol: f64, max_depth: u32) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Vec<Complex64>,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Argument(format!("bad interval [{a}, {b}]")));
    }
    let fa = f(a);
    if a == b {
        return Ok(vec![Complex64::default(); fa.len()]);
    }
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = combine(&fa, &fm, &fb, b - a);
    recurse(f, a, b, &fa, &fm, &fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: &[Complex64],
    fm: &[Complex64],
    fb: &[Complex64],
    whole: Vec<Complex64>,
    tol: f64,
    depth: u32,
) -> Result<Vec<Complex64>>
where
    F: Fn(f64) -> Vec<Complex64>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let flm = f(lm);
    let frm = f(rm);
    let left = combine(fa, &flm, fm, m - a);
    let right = combine(fm, &frm, fb, b - m);
    let sum: Vec<Complex64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
    let err = max_diff(&sum, &whole);
    if err <= 15.0 * tol {
        return Ok(sum
            .iter()
            .zip(&whole)
            .map(|(s, w)| s + (s - w) / 15.0)
            .collect());
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (error estimate {err:.3e})"
        )));
    }
    let l = recurse(f, a, m, fa, &flm, fm, left, tol / 2.0, depth - 1)?;
    let r = recurse(f, m, b, fm, &frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l.iter().zip(&r).map(|(x, y)| x + y).collect())
}
