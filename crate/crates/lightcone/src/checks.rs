//! Numerical hygiene measurements shared by the command line and the
//! acceptance suite.

use crate::error::Result;
use crate::model::{ambient_convergence, gaussian_trial, validate_against_ambient, light_cone_indicial_roots, verify_conjugation, ModeOperator, ModeProblem, OperatorKind, Region};
use crate::odeconnect::{abel_defect, basis_state, frobenius_at, Chart, Integrator, HANDOFF_RADIUS};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_4;

/// Largest deviation of the light-cone indicial roots of the global operator
/// from {0, iσ}, over both light cones.
pub fn indicial_deviation(mp: &ModeProblem) -> f64 {
    let op = ModeOperator::from_problem(mp, OperatorKind::Global);
    let want = Complex64::i() * mp.sigma;
    [FRAC_PI_4, 3.0 * FRAC_PI_4]
        .iter()
        .map(|&t0| {
            let r = light_cone_indicial_roots(&op, t0);
            // pair the roots in whichever order fits
            let a = r[0].norm().max((r[1] - want).norm());
            let b = r[1].norm().max((r[0] - want).norm());
            a.min(b)
        })
        .fold(0.0, f64::max)
}

/// Abel defect of two integrated solutions, worst over the three operators.
pub fn abel_check(mp: &ModeProblem) -> Result<f64> {
    let y1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)];
    let y2 = [Complex64::new(0.2, -1.0), Complex64::new(1.0, 0.0)];
    let mut worst: f64 = 0.0;
    for kind in [OperatorKind::Global, OperatorKind::Cap, OperatorKind::Belt] {
        let op = ModeOperator::from_problem(mp, kind);
        let (a, b) = if kind == OperatorKind::Belt { (0.9, 2.2) } else { (0.2, 0.7) };
        let pts: Vec<f64> = (1..=20).map(|i| a + (b - a) * i as f64 / 20.0).collect();
        let p1 = Integrator::default().run(&op, a, y1, b, &pts)?;
        let p2 = Integrator::default().run(&op, a, y2, b, &pts)?;
        let mut u = vec![(a, y1)];
        u.extend(p1.outputs.iter().cloned());
        let mut v = vec![(a, y2)];
        v.extend(p2.outputs.iter().cloned());
        worst = worst.max(abel_defect(&op, &u, &v));
    }
    Ok(worst)
}

/// Relative disagreement between Frobenius series and integration across
/// the overlap [r/2, r], worst over light-cone, pole and belt charts.
pub fn overlap_check(mp: &ModeProblem) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (kind, chart, side) in [
        (OperatorKind::Global, Chart::light_cone(FRAC_PI_4), 1.0),
        (OperatorKind::Global, Chart::light_cone(3.0 * FRAC_PI_4), -1.0),
        (OperatorKind::Global, Chart::pole(0.0), 1.0),
        (OperatorKind::Cap, Chart::pole(0.0), 1.0),
        (OperatorKind::Belt, Chart::belt(FRAC_PI_4), 1.0),
    ] {
        let op = ModeOperator::from_problem(mp, kind);
        let b = frobenius_at(&op, chart, HANDOFF_RADIUS)?;
        let coeffs = vec![Complex64::new(1.0, 0.0); b.solutions.len()];
        let th0 = chart.theta_at(side * b.radius / 2.0);
        let far = chart.theta_at(side * b.radius);
        let path = Integrator::default().run(&op, th0, basis_state(&b, &coeffs, None, th0), far, &[])?;
        let got = path.end().1;
        let want = basis_state(&b, &coeffs, None, far);
        worst = worst.max((got[0] - want[0]).norm() / want[0].norm());
    }
    Ok(worst)
}

/// Conjugation identity residuals in the three regions for a Gaussian trial
/// centred in each.
pub fn conjugation_check(mp: &ModeProblem) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (k, region) in [Region::XPlus, Region::XZero, Region::XMinus].into_iter().enumerate() {
        let (a, b) = region.interval();
        let c = 0.5 * (a + b);
        let trial = gaussian_trial(c, 0.25 * (b - a));
        let thetas: Vec<f64> = (1..40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
        out[k] = verify_conjugation(mp, region, &trial, &thetas)?;
    }
    Ok(out)
}

/// All hygiene measurements of one mode problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HygieneReport {
    pub n: usize,
    pub ell: usize,
    pub sigma: [f64; 2],
    pub profile: String,
    pub conjugation: [f64; 3],
    pub indicial: f64,
    pub abel: f64,
    pub overlap: f64,
}

pub fn hygiene(mp: &ModeProblem) -> Result<HygieneReport> {
    Ok(HygieneReport {
        n: mp.n,
        ell: mp.ell,
        sigma: [mp.sigma.re, mp.sigma.im],
        profile: mp.profile.label(),
        conjugation: conjugation_check(mp)?,
        indicial: indicial_deviation(mp),
        abel: abel_check(mp)?,
        overlap: overlap_check(mp)?,
    })
}

/// Steps on which the ambient validator's order is observed. Below about
/// 2e-3 rounding in the second differences dominates the truncation error,
/// so halving there shows no order at all.
pub const AMBIENT_LADDER: f64 = 2e-2;

/// Ambient finite-difference residual at `h`, together with the residuals and
/// observed order on the ladder [`AMBIENT_LADDER`]·{1, 1/2, 1/4}. The trial is
/// a Gaussian spread over the whole interval. Exact profile only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbientReport {
    pub h: f64,
    pub residual: f64,
    pub ladder: Vec<f64>,
    pub order: f64,
}

pub fn ambient_check(mp: &ModeProblem, h: f64) -> Result<AmbientReport> {
    let trial = gaussian_trial(1.6, 0.7);
    let (ladder, order) = ambient_convergence(mp, &trial, AMBIENT_LADDER)?;
    let residual = validate_against_ambient(mp, &trial, h)?;
    Ok(AmbientReport { h, residual, ladder, order })
}
