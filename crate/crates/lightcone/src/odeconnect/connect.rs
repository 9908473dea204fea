//! Least-squares connection of integrated solutions to Frobenius bases.

use super::frobenius::{FrobeniusBasis, FrobeniusSeries};
use super::integrate::{Integrator, LinearOde, SolutionPath, State};
use crate::error::{Error, Result};
use crate::linalg::lstsq2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const COLLOCATION_POINTS: usize = 12;
pub const MAX_CONDITION: f64 = 1e8;

/// Coordinates of a solution in the normalized basis at one anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionData {
    pub coeff_singular: Complex64,
    pub coeff_smooth: Complex64,
    pub cond: f64,
    pub residual: f64,
}

/// Fits samples (θ, [w, w']) taken on side `side` of the anchor against the
/// basis, after subtracting an optional particular expansion. Each sample
/// contributes the rows w and t·w_t.
pub fn connect_samples(basis: &FrobeniusBasis, samples: &[(f64, State)], particular: Option<&FrobeniusSeries>) -> Result<ConnectionData> {
    let chart = &basis.chart;
    let mut cols = [Vec::new(), Vec::new()];
    let mut rhs = Vec::new();
    for &(theta, [w, dw]) in samples {
        let t = chart.t(theta);
        let dt = chart.dt_dtheta(theta);
        let (mut v, mut vt) = (w, dw / dt);
        if let Some(p) = particular {
            let (pv, pd) = p.eval_t(t);
            v -= pv;
            vt -= pd;
        }
        rhs.push(v);
        rhs.push(vt * t);
        for (col, sol) in cols.iter_mut().zip([basis.singular(), basis.smooth()]) {
            let (y, yt) = sol.eval_t(t);
            col.push(y);
            col.push(yt * t);
        }
    }
    let (c, cond, residual) = lstsq2([&cols[0], &cols[1]], &rhs);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::IllConditioned { cond });
    }
    Ok(ConnectionData { coeff_singular: c[0], coeff_smooth: c[1], cond, residual })
}

/// Samples a path on the annulus of `basis` and fits.
pub fn connect(path: &SolutionPath, basis: &FrobeniusBasis, side: f64, particular: Option<&FrobeniusSeries>) -> Result<ConnectionData> {
    let samples = basis
        .annulus(side, COLLOCATION_POINTS)
        .into_iter()
        .map(|th| Ok((th, path.eval(th)?)))
        .collect::<Result<Vec<_>>>()?;
    connect_samples(basis, &samples, particular)
}

/// State (w, w') of Σ coeffs[i]·solutions[i] (+ particular) at θ.
pub fn basis_state(basis: &FrobeniusBasis, coeffs: &[Complex64], particular: Option<&FrobeniusSeries>, theta: f64) -> State {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (c, sol) in coeffs.iter().zip(&basis.solutions) {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let [v, d] = sol.eval_theta(&basis.chart, theta);
        out[0] += c * v;
        out[1] += c * d;
    }
    if let Some(p) = particular {
        let [v, d] = p.eval_theta(&basis.chart, theta);
        out[0] += v;
        out[1] += d;
    }
    out
}

/// Launch point at the edge of the basis radius on side `side`.
pub fn launch(basis: &FrobeniusBasis, coeffs: &[Complex64], particular: Option<&FrobeniusSeries>, side: f64) -> (f64, State) {
    let theta = basis.chart.theta_at(side * basis.radius);
    (theta, basis_state(basis, coeffs, particular, theta))
}

/// Integrates from a launch state to the annulus of `target` and fits there.
pub fn transport<'a>(
    ode: &'a dyn LinearOde,
    start: (f64, State),
    target: &FrobeniusBasis,
    side: f64,
    particular: Option<&FrobeniusSeries>,
) -> Result<(ConnectionData, SolutionPath<'a>)> {
    let pts = target.annulus(side, COLLOCATION_POINTS);
    let end = *pts.last().expect("annulus is non-empty");
    let path = Integrator::default().run(ode, start.0, start.1, end, &pts)?;
    let samples: Vec<(f64, State)> = path.outputs.clone();
    let data = connect_samples(target, &samples, particular)?;
    Ok((data, path))
}
