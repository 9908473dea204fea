//! Python access to the per-mode computations. Profiles are given as the
//! same strings the CLI accepts (`exact`, `bump:0.1`, `poly:0.8,0.2`).

use lightcone::inverse::{find_poles, DeterminantKind, PoleOptions, Window};
use lightcone::linalg::Mat2;
use lightcone::scattering::{closed_form_gamma_quotient, mode_scattering, symbol_order_check, taylor_matching};
use lightcone::{Complex64, ModeProblem, RadialProfile};
use lightcone_cli::config::parse_profile;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn fail(e: lightcone::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", lightcone_cli::error_kind(&e)))
}

fn profile(text: &str) -> PyResult<RadialProfile> {
    let p = parse_profile(text).map_err(PyValueError::new_err)?;
    p.validate().map_err(fail)?;
    Ok(p)
}

fn mode(n: usize, ell: usize, sigma: Complex64, prof: &str) -> PyResult<ModeProblem> {
    ModeProblem::new(n, ell, sigma, profile(prof)?).map_err(fail)
}

fn rows(m: &Mat2) -> Vec<Vec<Complex64>> {
    m.iter().map(|r| r.to_vec()).collect()
}

/// 2^{iσ}Γ(iσ)Γ(ℓ+h−iσ)/(Γ(−iσ)Γ(ℓ+h+iσ)) with h = (n−1)/2.
#[pyfunction]
fn gamma_quotient(n: usize, ell: usize, sigma: Complex64) -> PyResult<Complex64> {
    closed_form_gamma_quotient(n, ell, sigma).map_err(fail)
}

/// Scattering data of one mode as a dict: s_plus, s_minus_rev, S0,
/// S_direct, S_product (2×2 nested lists) and residual.
#[pyfunction]
#[pyo3(signature = (n, ell, sigma, profile = "exact"))]
fn scattering<'py>(py: Python<'py>, n: usize, ell: usize, sigma: Complex64, profile: &str) -> PyResult<Bound<'py, PyDict>> {
    let mp = mode(n, ell, sigma, profile)?;
    let ms = mode_scattering(&mp).map_err(fail)?;
    let d = PyDict::new(py);
    d.set_item("s_plus", ms.s_plus)?;
    d.set_item("s_minus_rev", ms.s_minus_rev)?;
    d.set_item("S0", rows(&ms.s0))?;
    d.set_item("S_direct", rows(&ms.s_global_direct))?;
    d.set_item("S_product", rows(&ms.s_global_product))?;
    d.set_item("residual", ms.residual)?;
    Ok(d)
}

/// Largest relative disagreement of the smooth Taylor coefficients at the
/// first light cone for global data (b₊, b₋).
#[pyfunction]
#[pyo3(signature = (n, ell, sigma, data = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)), count = 6, profile = "exact"))]
fn taylor_defect(n: usize, ell: usize, sigma: Complex64, data: (Complex64, Complex64), count: usize, profile: &str) -> PyResult<f64> {
    let mp = mode(n, ell, sigma, profile)?;
    Ok(taylor_matching(&mp, [data.0, data.1], count).map_err(fail)?.max_rel)
}

/// Zeros of a mode determinant in the window (re_min, re_max, im_min,
/// im_max) as (σ, multiplicity) pairs. `which` is x_plus, x_minus or global.
#[pyfunction]
#[pyo3(signature = (n, ell, which = "global", window = (-3.0, 3.0, -3.0, -0.1), profile = "exact"))]
fn poles(n: usize, ell: usize, which: &str, window: (f64, f64, f64, f64), profile: &str) -> PyResult<Vec<(Complex64, usize)>> {
    let kind = match which {
        "x_plus" => DeterminantKind::CapPlus,
        "x_minus" => DeterminantKind::CapMinus,
        "global" => DeterminantKind::Global,
        other => return Err(PyValueError::new_err(format!("unknown determinant `{other}`"))),
    };
    let base = mode(n, ell, Complex64::new(0.5, 0.25), profile)?;
    let w = Window { re: [window.0, window.1], im: [window.2, window.3] };
    let report = find_poles(&base, kind, w, PoleOptions::default()).map_err(fail)?;
    Ok(report.zeros.iter().map(|z| (Complex64::new(z.sigma[0], z.sigma[1]), z.mult)).collect())
}

/// (c_σ, c_{−σ}, |c_σ c_{−σ} − 1|, bounded) from the large-ℓ extrapolation.
#[pyfunction]
#[pyo3(signature = (n, sigma, profile = "exact", ell_max = 40))]
fn symbol(n: usize, sigma: Complex64, profile: &str, ell_max: usize) -> PyResult<(Complex64, Complex64, f64, bool)> {
    let mp = mode(n, 1, sigma, profile)?;
    let r = symbol_order_check(&mp.sp(), n, &mp.profile, ell_max).map_err(fail)?;
    Ok((r.c_sigma, r.c_minus_sigma, r.defect, r.bounded))
}

/// Runs the command-line driver with the given arguments (without the
/// program name) and returns its exit code.
#[pyfunction]
fn run_cli(args: Vec<String>) -> i32 {
    lightcone_cli::run(std::iter::once("lightcone".to_string()).chain(args))
}

#[pymodule]
fn lightcone_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(gamma_quotient, m)?)?;
    m.add_function(wrap_pyfunction!(scattering, m)?)?;
    m.add_function(wrap_pyfunction!(taylor_defect, m)?)?;
    m.add_function(wrap_pyfunction!(poles, m)?)?;
    m.add_function(wrap_pyfunction!(symbol, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
