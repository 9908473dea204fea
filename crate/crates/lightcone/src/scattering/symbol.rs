//! Large-ℓ behaviour of the scattering data.
//!
//! The cap scalar s₊ behaves like λ_ℓ^{−iσ} times a constant, so
//! r_ℓ = s₊·λ_ℓ^{iσ} has a limit c_σ. The belt matrix, conjugated by
//! diag(1, λ_ℓ^{iσ}), stays bounded.

use super::{smatrix_desitter_backward, smatrix_hyperbolic, symbol_constant, SigmaSign};
use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::model::{ModeProblem, RadialProfile, Region, SpectralPoint};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Nodes used for the extrapolation, spread evenly over [L/2, L].
pub const EXTRAPOLATION_NODES: usize = 7;
/// Agreement required between the two highest extrapolation orders.
pub const CAUCHY_TOL: f64 = 1e-6;
/// Largest tolerated growth of the renormalized belt entries over the last
/// quarter of the ℓ range.
pub const PLATEAU_TOL: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolReport {
    pub n: usize,
    pub sigma: [f64; 2],
    pub ell_max: usize,
    pub c_sigma: Complex64,
    pub c_minus_sigma: Complex64,
    pub defect: f64,
    /// difference between the two highest extrapolation orders
    pub cauchy: f64,
    /// 2^{iσ}Γ(iσ)/Γ(−iσ), available for the exact profile
    pub oracle: Option<Complex64>,
    /// r_ℓ for ℓ = 1..=L
    pub ratios: Vec<Complex64>,
    /// largest entry of the renormalized belt matrix for ℓ = 1..=L
    pub renormalized: Vec<f64>,
    /// largest entry of the raw belt matrix for ℓ = 1..=L
    pub raw: Vec<f64>,
    pub bounded: bool,
}

/// Polynomial extrapolation to x = 0 (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            p[i] = (p[i] * xs[i + k] - p[i + 1] * xs[i]) / (xs[i + k] - xs[i]);
        }
    }
    p[0]
}

fn nodes(ell_max: usize) -> Vec<usize> {
    let lo = ell_max / 2;
    let k = EXTRAPOLATION_NODES - 1;
    let mut v: Vec<usize> = (0..=k).map(|j| lo + ((ell_max - lo) * j + k / 2) / k).collect();
    v.dedup();
    v
}

/// Limit of r_ℓ from the values at ℓ = 1..=L, with the Cauchy difference of
/// the two highest orders.
fn limit(n: usize, ratios: &[Complex64]) -> (Complex64, f64) {
    let ell_max = ratios.len();
    let shift = (n as f64 - 2.0) / 2.0;
    let ls = nodes(ell_max);
    let xs: Vec<f64> = ls.iter().map(|&l| 1.0 / (l as f64 + shift)).collect();
    let ys: Vec<Complex64> = ls.iter().map(|&l| ratios[l - 1]).collect();
    let full = extrapolate_to_zero(&xs, &ys);
    let lower = extrapolate_to_zero(&xs[1..], &ys[1..]);
    (full, (full - lower).norm() / full.norm().max(f64::MIN_POSITIVE))
}

fn max_entry(m: &Mat2) -> f64 {
    m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn symbol_order_check(sp: &SpectralPoint, n: usize, profile: &RadialProfile, ell_max: usize) -> Result<SymbolReport> {
    if ell_max < 20 {
        return Err(Error::InvalidInput(format!("ell_max = {ell_max} is below 20")));
    }
    let base = ModeProblem::new(n, 1, sp.sigma, profile.clone())?;
    let mut ratios = Vec::with_capacity(ell_max);
    let mut ratios_minus = Vec::with_capacity(ell_max);
    let mut renormalized = Vec::with_capacity(ell_max);
    let mut raw = Vec::with_capacity(ell_max);
    let is = Complex64::i() * sp.sigma;
    for ell in 1..=ell_max {
        let mp = base.with_ell(ell);
        let lam = Complex64::new(mp.lambda_ell(), 0.0);
        let up = lam.powc(is);
        ratios.push(smatrix_hyperbolic(&mp, Region::XPlus, SigmaSign::Plus)? * up);
        ratios_minus.push(smatrix_hyperbolic(&mp, Region::XPlus, SigmaSign::Minus)? / up);
        let s0 = smatrix_desitter_backward(&mp)?;
        raw.push(max_entry(&s0));
        let renorm = [[s0[0][0], s0[0][1] / up], [s0[1][0] * up, s0[1][1]]];
        renormalized.push(max_entry(&renorm));
    }
    let (c_sigma, cauchy_plus) = limit(n, &ratios);
    let (c_minus_sigma, cauchy_minus) = limit(n, &ratios_minus);
    let cauchy = cauchy_plus.max(cauchy_minus);
    if !(cauchy <= CAUCHY_TOL) {
        return Err(Error::NoConvergence(format!("r_ell extrapolations differ by {cauchy:.3e}")));
    }
    let oracle = if profile.is_exact() { Some(symbol_constant(sp.sigma)?) } else { None };
    let tail_start = 3 * ell_max / 4;
    let tail = renormalized[tail_start - 1..].iter().cloned().fold(0.0, f64::max);
    let before = renormalized[..tail_start - 1].iter().cloned().fold(0.0, f64::max);
    let bounded = tail.is_finite() && tail <= (1.0 + PLATEAU_TOL) * before;
    Ok(SymbolReport {
        n,
        sigma: [sp.sigma.re, sp.sigma.im],
        ell_max,
        c_sigma,
        c_minus_sigma,
        defect: (c_sigma * c_minus_sigma - 1.0).norm(),
        cauchy,
        oracle,
        ratios,
        renormalized,
        raw,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neville_recovers_quadratic() {
        let xs = [0.1, 0.2, 0.3];
        let ys: Vec<Complex64> = xs.iter().map(|x| Complex64::new(2.0 - x + 3.0 * x * x, x * x)).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - Complex64::new(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn nodes_span_upper_half() {
        let v = nodes(40);
        assert_eq!(v.first(), Some(&20));
        assert_eq!(v.last(), Some(&40));
        assert_eq!(v.len(), EXTRAPOLATION_NODES);
    }

    #[test]
    fn exact_model_constant() {
        let sp = SpectralPoint::new(Complex64::new(0.6, 0.4), 3);
        let r = symbol_order_check(&sp, 3, &RadialProfile::Exact, 40).unwrap();
        let oracle = r.oracle.unwrap();
        assert!(r.defect < 1e-4, "{}", r.defect);
        assert!((r.c_sigma - oracle).norm() < 1e-6 * oracle.norm(), "{} vs {}", r.c_sigma, oracle);
        assert!(r.bounded, "{:?}", r.renormalized);
    }

    #[test]
    fn perturbed_profile_reflection_swaps_constants() {
        let p = RadialProfile::Bump { epsilon: 0.1 };
        let a = symbol_order_check(&SpectralPoint::new(Complex64::new(1.5, -0.7), 2), 2, &p, 40).unwrap();
        let b = symbol_order_check(&SpectralPoint::new(Complex64::new(-1.5, 0.7), 2), 2, &p, 40).unwrap();
        assert!(a.defect < 1e-4 && a.bounded);
        assert!((a.c_sigma - b.c_minus_sigma).norm() < 1e-8 * a.c_sigma.norm());
        assert!((a.defect - b.defect).abs() < 1e-8);
        // the raw belt entries grow, the renormalized ones do not
        assert!(a.raw[39] > 3.0 * a.raw[9]);
    }
}
