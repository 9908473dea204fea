//! Right-hand sides for the mode problems.

use crate::error::{Error, Result};
use crate::model::{ModeOperator, Region};
use crate::odeconnect::{local_form, Chart, FrobeniusSeries};
use crate::series::{Analytic, Series};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

/// A mode source on (0, π).
///
/// The smooth shapes are functions of μ = cos 2θ multiplied by sin^ℓθ, so
/// that they vanish at the poles to the order a regular mode solution does.
/// The bump has compact support inside one region and no such factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeSource {
    /// exp(−((μ − center)/width)²)·sin^ℓθ
    Gaussian { center: f64, width: f64 },
    /// Σ cₖ μᵏ · sin^ℓθ
    Poly { coeffs: Vec<f64> },
    /// exp(1 − 1/(1 − x²)) for |x| < 1, x = (θ − center)/half_width
    Bump { center: f64, half_width: f64 },
}

/// Where a source lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceRegion {
    Global,
    Within(Region),
}

fn shape<F: Analytic>(src: &ModeSource, mu: &F) -> F {
    match src {
        ModeSource::Gaussian { center, width } => {
            let x = (mu.clone() - Complex64::new(*center, 0.0)) * Complex64::new(1.0 / width, 0.0);
            (-(x.clone() * x)).exp()
        }
        ModeSource::Poly { coeffs } => {
            let mut acc = mu.cst_re(0.0);
            for c in coeffs.iter().rev() {
                acc = acc * mu.clone() + Complex64::new(*c, 0.0);
            }
            acc
        }
        ModeSource::Bump { .. } => unreachable!("bumps are not analytic"),
    }
}

impl ModeSource {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModeSource::Gaussian { width, .. } if !(*width > 0.0) => Err(Error::InvalidInput("Gaussian width must be positive".into())),
            ModeSource::Poly { coeffs } if coeffs.is_empty() => Err(Error::InvalidInput("polynomial source needs coefficients".into())),
            ModeSource::Bump { half_width, .. } if !(*half_width > 0.0) => Err(Error::InvalidInput("bump half-width must be positive".into())),
            ModeSource::Bump { .. } => self.region().map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match self {
            ModeSource::Bump { center, half_width } => (center - half_width, center + half_width),
            _ => (0.0, PI),
        }
    }

    pub fn region(&self) -> Result<SourceRegion> {
        if !matches!(self, ModeSource::Bump { .. }) {
            return Ok(SourceRegion::Global);
        }
        let (a, b) = self.support();
        [Region::XPlus, Region::XZero, Region::XMinus]
            .into_iter()
            .find(|r| {
                let (lo, hi) = r.interval();
                a > lo && b < hi
            })
            .map(SourceRegion::Within)
            .ok_or_else(|| Error::InvalidInput(format!("bump support [{a}, {b}] is not inside one region")))
    }

    /// The source reflected through θ ↦ π − θ.
    pub fn mirrored(&self) -> Self {
        match self {
            ModeSource::Bump { center, half_width } => ModeSource::Bump { center: PI - center, half_width: *half_width },
            other => other.clone(),
        }
    }

    pub fn eval(&self, ell: usize, theta: f64) -> Complex64 {
        match self {
            ModeSource::Bump { center, half_width } => {
                let x = (theta - center) / half_width;
                if x.abs() < 1.0 {
                    Complex64::new((1.0 - 1.0 / (1.0 - x * x)).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            _ => {
                let mu = Complex64::new((2.0 * theta).cos(), 0.0);
                shape(self, &mu) * theta.sin().powi(ell as i32)
            }
        }
    }

    /// Distance in the local variable of `chart` from its anchor to the
    /// support; infinite for the analytic shapes, which have Taylor data
    /// everywhere.
    pub fn clearance(&self, chart: &Chart) -> f64 {
        match self {
            ModeSource::Bump { .. } => {
                // only the part within π/4 of the anchor can meet its disk
                let (a, b) = self.support();
                let a = a.max(chart.theta0 - FRAC_PI_4);
                let b = b.min(chart.theta0 + FRAC_PI_4);
                if a >= b {
                    f64::INFINITY
                } else if (chart.theta0 - a) * (chart.theta0 - b) <= 0.0 {
                    0.0
                } else {
                    chart.t(a).abs().min(chart.t(b).abs())
                }
            }
            _ => f64::INFINITY,
        }
    }

    /// Taylor particular solution of op·w = source at a light cone (global
    /// operator) or pole chart, or None when the support keeps clear of the
    /// chart's disk of radius `radius`.
    pub fn particular(&self, op: &ModeOperator, ell: usize, chart: &Chart, radius: f64, len: usize) -> Result<Option<FrobeniusSeries>> {
        if matches!(self, ModeSource::Bump { .. }) {
            if self.clearance(chart) > radius {
                return Ok(None);
            }
            return Err(Error::InvalidInput("bump support reaches a Frobenius disk".into()));
        }
        let form = local_form(op, chart, len);
        if chart.is_pole() {
            // t·S with S = (t/2)^{ℓ/2}·shape(1 − t)
            let mu = Series::affine(1.0, -1.0, len);
            let g = shape(self, &mu) * Complex64::new(0.5f64.powf(ell as f64 / 2.0), 0.0);
            let m = Complex64::new(ell as f64 / 2.0 + 1.0, 0.0);
            let coeffs = form.recurrence(m, Some(&g), len)?;
            return Ok(Some(FrobeniusSeries { exponent: m, coeffs }));
        }
        if form.valuation != 1 {
            return Err(Error::InvalidInput("light-cone particular solutions are built for the global operator".into()));
        }
        // t·(1 − μ)·S, with the leading t absorbed into the exponent 1
        let mu = Series::affine(0.0, chart.sign, len);
        let sin_pow = ((mu.cst_re(1.0) - mu.clone()) * Complex64::new(0.5, 0.0)).powc(Complex64::new(ell as f64 / 2.0, 0.0));
        let g = (mu.cst_re(1.0) - mu.clone()) * shape(self, &mu) * sin_pow;
        let w = form.recurrence(Complex64::new(1.0, 0.0), Some(&g), len - 1)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0)];
        coeffs.extend(w);
        Ok(Some(FrobeniusSeries { exponent: Complex64::new(0.0, 0.0), coeffs }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply, ModeProblem, OperatorKind, RadialProfile};
    use crate::odeconnect::{frobenius_at, HANDOFF_RADIUS};

    #[test]
    fn regions_of_bumps() {
        assert_eq!(ModeSource::Bump { center: 0.4, half_width: 0.2 }.region().unwrap(), SourceRegion::Within(Region::XPlus));
        assert_eq!(ModeSource::Bump { center: 1.6, half_width: 0.3 }.region().unwrap(), SourceRegion::Within(Region::XZero));
        assert!(ModeSource::Bump { center: 0.7, half_width: 0.2 }.region().is_err());
        assert_eq!(ModeSource::Gaussian { center: 0.1, width: 0.5 }.region().unwrap(), SourceRegion::Global);
    }

    #[test]
    fn mirrored_gaussian_is_unchanged() {
        let g = ModeSource::Gaussian { center: 0.3, width: 0.6 };
        for th in [0.2, 1.0, 2.5] {
            assert!((g.eval(3, th) - g.mirrored().eval(3, PI - th)).norm() < 1e-15);
        }
    }

    #[test]
    fn particular_series_solve_the_forced_equation() {
        let mp = ModeProblem::new(3, 2, Complex64::new(0.7, 0.3), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let op = ModeOperator::from_problem(&mp, OperatorKind::Global);
        let src = ModeSource::Gaussian { center: 0.2, width: 0.7 };
        for chart in [Chart::light_cone(FRAC_PI_4), Chart::pole(0.0), Chart::light_cone(3.0 * FRAC_PI_4), Chart::pole(PI)] {
            let basis = frobenius_at(&op, chart, HANDOFF_RADIUS).unwrap();
            let p = src.particular(&op, 2, &chart, basis.radius, 60).unwrap().unwrap();
            for side in [1.0, -1.0] {
                if chart.is_pole() && side < 0.0 {
                    continue;
                }
                let theta = chart.theta_at(side * 0.1);
                let h = 1e-4;
                let d = |th: f64| p.eval_theta(&chart, th);
                let w2 = (d(theta + h)[1] - d(theta - h)[1]) / (2.0 * h);
                let lhs = apply(&op, theta, [d(theta)[0], d(theta)[1], w2]);
                let rhs = src.eval(2, theta);
                assert!((lhs - rhs).norm() < 1e-6 * rhs.norm(), "{chart:?} {side}: {lhs} vs {rhs}");
            }
        }
    }
}
