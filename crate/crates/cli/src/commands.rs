use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use trotterlab_core::bounds::{choose_r, conjecture_scan, fit_constants, Constants};
use trotterlab_core::dense::{to_matrix, ComplexMatrix};
use trotterlab_core::hamiltonian::{Hamiltonian, ModelSpec};
use trotterlab_core::identities::{integral_identity_check, sigma_recursion_check, MAX_CHECK_QUBITS};
use trotterlab_core::pauli::PauliOperator;
use trotterlab_core::product_formula::Order;
use trotterlab_core::scan::{fit_scan, run_scan, ErrorScanConfig, TGrid};
use trotterlab_core::series::{sv_decomposition, term_census};

use crate::config::{ConstantsFile, RunConfig, Task};
use crate::{classify, Failure};

const DECOMPOSITION_TOL: f64 = 1e-9;
const IDENTITY_TOL: f64 = 1e-8;
const DENSE_CHECK_MAX_N: usize = 8;

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Other(format!("{}: {e}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let f = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Other(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

fn print_json<T: Serialize>(value: &T) -> Result<(), Failure> {
    let s = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn build(model: &ModelSpec) -> Result<Hamiltonian, Failure> {
    model.build().map_err(classify)
}

pub fn run(cfg: RunConfig) -> Result<(), Failure> {
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Other(e.to_string()))?;
    }
    let echo = serde_json::to_string(&cfg.resolved).map_err(|e| Failure::Other(e.to_string()))?;
    eprintln!("config: {echo}");
    let resolved = cfg.resolved;
    match cfg.task {
        Task::Scan {
            scan,
            out,
            sidecar,
            fit_out,
        } => scan_cmd(&scan, out.as_deref(), sidecar.as_deref(), fit_out.as_deref(), &resolved),
        Task::Verify { model, k_max } => verify(&model, k_max),
        Task::IdentityChecks {
            model,
            t_values,
            samples,
            seed,
        } => identity_checks(&model, &t_values, samples, seed),
        Task::Gates {
            n,
            t,
            epsilon,
            constants,
        } => print_json(&choose_r(n, t, epsilon, constants).map_err(classify)?),
        Task::Conjecture {
            model,
            epsilon,
            t_grid,
            constants,
            out,
        } => conjecture(&model, epsilon, &t_grid, constants, out.as_deref()),
    }
}

fn scan_cmd(
    scan: &ErrorScanConfig,
    out: Option<&Path>,
    sidecar: Option<&Path>,
    fit_out: Option<&Path>,
    resolved: &impl Serialize,
) -> Result<(), Failure> {
    let result = run_scan(scan).map_err(classify)?;
    match out {
        Some(p) => {
            let f = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(f);
            result.write_csv(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))?;
        }
        None => {
            let stdout = io::stdout();
            result
                .write_csv(stdout.lock())
                .map_err(|e| Failure::Other(e.to_string()))?;
        }
    }
    let fits = fit_scan(&result);
    if let Some(p) = sidecar {
        let windows: Vec<_> = fits
            .iter()
            .map(|f| json!({"order": f.order, "quantity": f.quantity, "regime": f.regime, "window": f.window}))
            .collect();
        let doc = json!({
            "config": resolved,
            "j_scale": result.j_scale,
            "fits": fits,
            "windows": windows,
            "max_unitarity_deviation": result.max_unitarity_deviation(),
        });
        write_json(p, &doc)?;
    }
    if let Some(p) = fit_out {
        if !scan.orders.contains(&Order::One) {
            return Err(Failure::Usage("--fit-out needs first-order rows in the scan".into()));
        }
        let fit = fit_constants(&result);
        for w in &fit.warnings {
            eprintln!("warning: {w}");
        }
        let constants = fit
            .constants
            .ok_or_else(|| Failure::Check("the training scan carries no error to fit constants to".into()))?;
        let file = ConstantsFile {
            c1: constants.c1,
            c2: constants.c2,
            fit_model: "C1 J n t / r + C2 J^3 n t^3 / r^2".into(),
            training_scan: format!(
                "{} n={} {} r={} t_grid={}",
                scan.model.model, scan.model.n, scan.model.boundary, scan.r, scan.t_grid
            ),
        };
        write_json(p, &file)?;
    }
    Ok(())
}

fn dense_delta(h1: &ComplexMatrix, h2: &ComplexMatrix, k: usize) -> ComplexMatrix {
    let pow = |m: &ComplexMatrix, p: usize| {
        (0..p).fold(ComplexMatrix::identity(m.dim()).expect("dimension already checked"), |acc, _| acc.matmul(m))
    };
    let h = h1.add(h2);
    let mut expansion = ComplexMatrix::zeros(h.dim()).expect("dimension already checked");
    let mut binom = 1.0;
    for j in 0..=k {
        expansion.add_assign(&pow(h1, j).matmul(&pow(h2, k - j)).scale(Complex64::new(binom, 0.0)));
        binom = binom * (k - j) as f64 / (j + 1) as f64;
    }
    pow(&h, k).sub(&expansion)
}

fn verify(model: &ModelSpec, k_max: usize) -> Result<(), Failure> {
    let h = build(model)?;
    let bundle = sv_decomposition(&h, k_max).map_err(classify)?;
    let census = term_census(&bundle, h.n());
    let dense = if h.n() <= DENSE_CHECK_MAX_N {
        let h1 = to_matrix(&h.h1()).map_err(classify)?;
        let h2 = to_matrix(&h.h2()).map_err(classify)?;
        let mut devs = Vec::new();
        for k in 2..=k_max {
            let d = to_matrix(bundle.deltas.delta(k)).map_err(classify)?;
            devs.push(dense_delta(&h1, &h2, k).max_abs_diff(&d));
        }
        Some(devs)
    } else {
        None
    };

    println!("{} n={} {} k_max={}", h.model_tag(), h.n(), h.boundary(), k_max);
    println!(
        "{:>2} {:>8} {:>12} {:>8} {:>12} {:>4} {:>4} {:>10} {:>10}  status",
        "k", "m_k", "m_bound", "n_k", "n_bound", "supp", "max", "residual", "dense"
    );
    let mut failures = Vec::new();
    for row in &census {
        let res = row.residual.unwrap_or(f64::NAN);
        let dense_dev = dense.as_ref().map(|d| d[row.k - 2]);
        let ok = row.passes() && res <= DECOMPOSITION_TOL && dense_dev.is_none_or(|d| d <= DECOMPOSITION_TOL);
        if !ok {
            failures.push(row.k);
        }
        println!(
            "{:>2} {:>8} {:>12.0} {:>8} {:>12.1} {:>4} {:>4} {:>10.2e} {:>10}  {}",
            row.k,
            row.m_k,
            row.m_bound,
            row.n_k,
            row.n_bound,
            row.max_support,
            row.support_bound,
            res,
            dense_dev.map_or("-".to_string(), |d| format!("{d:.2e}")),
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failures.is_empty() {
        println!("verify: PASS");
        Ok(())
    } else {
        println!("verify: FAIL");
        Err(Failure::Check(format!("orders {failures:?} failed")))
    }
}

fn random_two_local(n: usize, rng: &mut ChaCha8Rng) -> Result<PauliOperator, Failure> {
    let site = rng.random_range(0..n - 1);
    let label: String = (0..n)
        .map(|i| {
            if i == site || i == site + 1 {
                ['X', 'Y', 'Z'][rng.random_range(0..3)]
            } else {
                'I'
            }
        })
        .collect();
    PauliOperator::from_labels(&[(&label, Complex64::new(1.0, 0.0))]).map_err(classify)
}

fn identity_checks(model: &ModelSpec, t_values: &[f64], samples: usize, seed: u64) -> Result<(), Failure> {
    let h = build(model)?;
    if h.n() > MAX_CHECK_QUBITS {
        return Err(Failure::Capacity(format!(
            "identity checks support n <= {MAX_CHECK_QUBITS}, got {}",
            h.n()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ops = [("H2", h.h2()), ("random 2-local", random_two_local(h.n(), &mut rng)?)];
    let mut ok = true;
    println!("integral identity (tol {IDENTITY_TOL:e})");
    for (name, a) in &ops {
        for &t in t_values {
            let res = integral_identity_check(&h, a, t).map_err(classify)?;
            let pass = res < IDENTITY_TOL;
            ok &= pass;
            println!("  A={name:<15} t={t:<8} residual {res:.2e}  {}", if pass { "PASS" } else { "FAIL" });
        }
    }
    let nj = h.n() as f64 * h.j_scale();
    let mut worst = 0.0f64;
    let mut bound_failures = 0;
    for i in 0..samples {
        let a: u64 = rng.random_range(1..=20);
        let tau = rng.random_range(0.01..0.95) / nj;
        let check = sigma_recursion_check(&h, &ops[i % 2].1, a, tau).map_err(classify)?;
        worst = worst.max(check.residual);
        if !check.bound_holds() {
            bound_failures += 1;
        }
    }
    let sigma_ok = worst < IDENTITY_TOL && bound_failures == 0;
    ok &= sigma_ok;
    println!(
        "recursion: {samples} samples, max residual {worst:.2e}, sigma bound failures {bound_failures}  {}",
        if sigma_ok { "PASS" } else { "FAIL" }
    );
    if ok {
        println!("identity-checks: PASS");
        Ok(())
    } else {
        println!("identity-checks: FAIL");
        Err(Failure::Check("identity residual above tolerance or sigma bound violated".into()))
    }
}

fn conjecture(
    model: &ModelSpec,
    epsilon: f64,
    t_grid: &TGrid,
    constants: Constants,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let h = build(model)?;
    let report = conjecture_scan(&h, epsilon, t_grid.values(), constants).map_err(classify)?;
    match out {
        Some(p) => write_json(p, &report),
        None => print_json(&report),
    }
}
