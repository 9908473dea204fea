//! Metric family, mode problems and the per-mode operators.
//!
//! The global coordinate is θ ∈ (0, π) with μ = cos 2θ. The caps are
//! θ < π/4 and θ > 3π/4 (μ > 0), the belt is π/4 < θ < 3π/4 (μ < 0). Every
//! operator is written as w ↦ A w'' + B w' + C w in θ, and also in the
//! variable μ after multiplying through by (1 − μ), which makes all
//! coefficients analytic on [−1, 1].

use crate::error::{Error, Result};
use crate::series::Analytic;
use crate::specfun::distance_from_integer;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

pub const DEFAULT_MARGIN: f64 = 1e-3;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Mellin parameter σ together with the dimension it refers to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    pub sigma: Complex64,
    pub n: usize,
}

impl SpectralPoint {
    pub fn new(sigma: Complex64, n: usize) -> Self {
        Self { sigma, n }
    }

    pub fn half(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    pub fn sigma_tilde(&self) -> Complex64 {
        self.sigma + Complex64::new(0.0, self.half())
    }

    pub fn lambda(&self) -> Complex64 {
        self.sigma * self.sigma + self.half() * self.half()
    }

    pub fn s_plus(&self) -> Complex64 {
        re(self.half()) - Complex64::i() * self.sigma
    }

    pub fn s_minus(&self) -> Complex64 {
        re(self.half()) + Complex64::i() * self.sigma
    }

    /// Distance of iσ from the integers.
    pub fn margin(&self) -> f64 {
        distance_from_integer(Complex64::i() * self.sigma)
    }

    pub fn check_margin(&self, threshold: f64) -> Result<()> {
        let d = self.margin();
        if d <= threshold {
            Err(Error::IntegerDegeneracy { distance: d, margin: threshold })
        } else {
            Ok(())
        }
    }

    pub fn negated(&self) -> Self {
        Self::new(-self.sigma, self.n)
    }
}

/// Cross-section profile f(μ); the sphere factor of the metric is f(cos 2θ)·round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RadialProfile {
    Exact,
    Poly { coeffs: Vec<f64> },
    Bump { epsilon: f64 },
}

impl RadialProfile {
    pub fn value<F: Analytic>(&self, mu: &F) -> F {
        match self {
            RadialProfile::Exact => mu.cst_re(1.0),
            RadialProfile::Poly { coeffs } => {
                let mut acc = mu.cst_re(0.0);
                for c in coeffs.iter().rev() {
                    acc = acc * mu.clone() + re(*c);
                }
                acc
            }
            RadialProfile::Bump { epsilon } => {
                let g = (-(mu.clone() * mu.clone())).exp();
                mu.clone() * (mu.clone() - re(1.0)) * g * re(*epsilon) + re(1.0)
            }
        }
    }

    pub fn derivative<F: Analytic>(&self, mu: &F) -> F {
        match self {
            RadialProfile::Exact => mu.cst_re(0.0),
            RadialProfile::Poly { coeffs } => {
                let mut acc = mu.cst_re(0.0);
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * mu.clone() + re(*c * k as f64);
                }
                acc
            }
            RadialProfile::Bump { epsilon } => {
                let g = (-(mu.clone() * mu.clone())).exp();
                let m2 = mu.clone() * mu.clone();
                let p = mu.clone() * re(2.0) - re(1.0) + m2.clone() * re(2.0) - m2 * mu.clone() * re(2.0);
                p * g * re(*epsilon)
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, RadialProfile::Exact)
    }

    pub fn validate(&self) -> Result<()> {
        if let RadialProfile::Poly { coeffs } = self {
            if coeffs.is_empty() {
                return Err(Error::InvalidProfile("empty coefficient list".into()));
            }
        }
        let f1 = self.value(&re(1.0));
        if !(f1.re.is_finite()) || (f1 - re(1.0)).norm() > 1e-12 {
            return Err(Error::InvalidProfile(format!("f(1) = {} but must equal 1", f1.re)));
        }
        for i in 0..=2000 {
            let mu = -1.0 + i as f64 * 1e-3;
            let v = self.value(&re(mu)).re;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProfile(format!("f({mu}) = {v} is not positive")));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            RadialProfile::Exact => "exact".into(),
            RadialProfile::Poly { coeffs } => format!("poly{coeffs:?}"),
            RadialProfile::Bump { epsilon } => format!("bump({epsilon})"),
        }
    }
}

/// One global mode ODE: dimension, spherical-harmonic degree, σ and profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeProblem {
    pub n: usize,
    pub ell: usize,
    pub sigma: Complex64,
    pub profile: RadialProfile,
}

impl ModeProblem {
    pub fn new(n: usize, ell: usize, sigma: Complex64, profile: RadialProfile) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("dimension n = {n} must be at least 2")));
        }
        if !(sigma.re.is_finite() && sigma.im.is_finite()) {
            return Err(Error::NonFinite("sigma"));
        }
        profile.validate()?;
        Ok(Self { n, ell, sigma, profile })
    }

    pub fn sp(&self) -> SpectralPoint {
        SpectralPoint::new(self.sigma, self.n)
    }

    pub fn lambda_ell(&self) -> f64 {
        (self.ell * (self.ell + self.n - 2)) as f64
    }

    pub fn with_sigma(&self, sigma: Complex64) -> Self {
        Self { sigma, ..self.clone() }
    }

    pub fn with_ell(&self, ell: usize) -> Self {
        Self { ell, ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    XPlus,
    XZero,
    XMinus,
}

impl Region {
    /// Open θ-interval of the region.
    pub fn interval(&self) -> (f64, f64) {
        match self {
            Region::XPlus => (0.0, FRAC_PI_4),
            Region::XZero => (FRAC_PI_4, 3.0 * FRAC_PI_4),
            Region::XMinus => (3.0 * FRAC_PI_4, PI),
        }
    }

    pub fn contains(&self, theta: f64) -> bool {
        let (a, b) = self.interval();
        theta > a && theta < b
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    /// The Mellin-reduced operator on the whole sphere, conjugated picture.
    Global,
    /// Unconjugated constituent operator on a cap.
    Cap,
    /// Unconjugated constituent operator on the belt.
    Belt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingularKind {
    Pole,
    LightCone,
}

pub const SINGULAR_POINTS: [(f64, SingularKind); 4] = [
    (0.0, SingularKind::Pole),
    (FRAC_PI_4, SingularKind::LightCone),
    (3.0 * FRAC_PI_4, SingularKind::LightCone),
    (PI, SingularKind::Pole),
];

/// Mode reduction of one operator; immutable and cheap to share.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeOperator {
    pub kind: OperatorKind,
    pub n: usize,
    pub ell: usize,
    pub sigma: Complex64,
    pub profile: RadialProfile,
}

pub fn assemble_global_mode_ode(mp: &ModeProblem) -> Result<ModeOperator> {
    mp.profile.validate()?;
    Ok(ModeOperator::from_problem(mp, OperatorKind::Global))
}

pub fn assemble_constituent_mode_ode(mp: &ModeProblem, region: Region) -> Result<ModeOperator> {
    mp.profile.validate()?;
    let kind = match region {
        Region::XPlus | Region::XMinus => OperatorKind::Cap,
        Region::XZero => OperatorKind::Belt,
    };
    Ok(ModeOperator::from_problem(mp, kind))
}

impl ModeOperator {
    pub fn from_problem(mp: &ModeProblem, kind: OperatorKind) -> Self {
        Self { kind, n: mp.n, ell: mp.ell, sigma: mp.sigma, profile: mp.profile.clone() }
    }

    pub fn half(&self) -> f64 {
        (self.n as f64 - 1.0) / 2.0
    }

    pub fn lambda_ell(&self) -> f64 {
        (self.ell * (self.ell + self.n - 2)) as f64
    }

    /// iσ̃ = iσ − (n−1)/2.
    pub fn alpha(&self) -> Complex64 {
        Complex64::i() * self.sigma - self.half()
    }

    /// Exponent k with P̃ = x^{−k−2} P x^{k} on the constituent regions.
    pub fn conjugation_exponent(&self) -> Complex64 {
        -Complex64::i() * self.sigma + self.half()
    }

    pub fn singular_points(&self) -> [(f64, SingularKind); 4] {
        SINGULAR_POINTS
    }

    // (1 − μ)·ω with ω = (n−1)(1/(1−μ) − f'/f)
    fn omega_hat<F: Analytic>(&self, mu: &F, f: &F, fp: &F) -> F {
        let one_minus = mu.cst_re(1.0) - mu.clone();
        (mu.cst_re(1.0) - one_minus * fp.clone() / f.clone()) * re(self.n as f64 - 1.0)
    }

    /// Returns ((1−μ)A, (1−μ)B/sin2θ, (1−μ)C) as analytic functions of μ.
    fn reduced<F: Analytic>(&self, mu: &F) -> [F; 3] {
        let f = self.profile.value(mu);
        let fp = self.profile.derivative(mu);
        let om = self.omega_hat(mu, &f, &fp);
        let one = mu.cst_re(1.0);
        let one_minus = one.clone() - mu.clone();
        let h = self.half();
        let lam = self.lambda_ell();
        let sig2h = self.sigma * self.sigma + h * h;
        let mu2 = mu.clone() * mu.clone();
        match self.kind {
            OperatorKind::Global => {
                let al = self.alpha();
                let a = -(mu.clone() * one_minus.clone());
                let b = one_minus.clone() * (re(2.0) - Complex64::i() * self.sigma * 2.0) - mu.clone() * om.clone();
                let c = -(mu.clone() * one_minus.clone() * sig2h)
                    - ((one - mu2) * om + mu.clone() * one_minus * re(2.0)) * al
                    + mu.cst_re(1.0) / f * re(2.0 * lam);
                [a, b, c]
            }
            OperatorKind::Cap | OperatorKind::Belt => {
                let sign = if self.kind == OperatorKind::Cap { 1.0 } else { -1.0 };
                let a = -(mu2.clone() * one_minus.clone());
                let b = -(mu2 * om) + mu.clone() * one_minus.clone() * re(3.0 - self.n as f64);
                let c = mu.clone() / f * re(2.0 * lam) - one_minus * sig2h;
                [a * re(sign), b * re(sign), c * re(sign)]
            }
        }
    }

    /// Coefficients of the μ-form multiplied by (1 − μ):
    /// Â w_μμ + B̂ w_μ + Ĉ w = (1 − μ)·(source).
    pub fn mu_coeffs<F: Analytic>(&self, mu: &F) -> [F; 3] {
        let [a1, b1, c1] = self.reduced(mu);
        let one_minus_sq = mu.cst_re(1.0) - mu.clone() * mu.clone();
        let big_a = one_minus_sq.clone() * a1.clone() * re(4.0);
        // (1−μ)·(−4μA) = −4μ·a1
        let big_b = -(mu.clone() * a1 * re(4.0)) - one_minus_sq * b1 * re(2.0);
        [big_a, big_b, c1]
    }

    /// (A, B, C) at θ, away from the poles.
    pub fn theta_coeffs(&self, theta: f64) -> [Complex64; 3] {
        let mu = re((2.0 * theta).cos());
        let s = (2.0 * theta).sin();
        let one_minus = 2.0 * theta.sin().powi(2);
        let [a1, b1, c1] = self.reduced(&mu);
        [a1 / one_minus, b1 * s / one_minus, c1 / one_minus]
    }
}

/// Applies w ↦ A w'' + B w' + C w at θ to a jet (w, w', w'').
pub fn apply(op: &ModeOperator, theta: f64, jet: [Complex64; 3]) -> Complex64 {
    let [a, b, c] = op.theta_coeffs(theta);
    a * jet[2] + b * jet[1] + c * jet[0]
}

/// Indicial roots {0, 1 − B/A'} of an operator with a simple zero of A at θ0.
pub fn light_cone_indicial_roots(op: &ModeOperator, theta0: f64) -> [Complex64; 2] {
    let h = 1e-3;
    let a = |t: f64| op.theta_coeffs(t)[0];
    let da = (a(theta0 - 2.0 * h) - a(theta0 - h) * 8.0 + a(theta0 + h) * 8.0 - a(theta0 + 2.0 * h)) / (12.0 * h);
    // B is smooth across the light cone; average symmetric samples to stay off θ0
    let b = (op.theta_coeffs(theta0 - 1e-7)[1] + op.theta_coeffs(theta0 + 1e-7)[1]) * 0.5;
    let r = re(1.0) - b / da;
    let (lo, hi) = if r.norm() < 1e-14 { (r, re(0.0)) } else { (re(0.0), r) };
    [lo, hi]
}

/// Jet (w, w', w'') of a trial function in θ.
pub type Trial<'a> = &'a dyn Fn(f64) -> [Complex64; 3];

/// Gaussian trial exp(−(θ−c)²/(2w²)) with its θ-derivatives.
pub fn gaussian_trial(center: f64, width: f64) -> impl Fn(f64) -> [Complex64; 3] {
    move |t: f64| {
        let x = (t - center) / width;
        let g = (-0.5 * x * x).exp();
        let d1 = -x / width * g;
        let d2 = (x * x - 1.0) / (width * width) * g;
        [re(g), re(d1), re(d2)]
    }
}

/// sup over `thetas` of |x^{−k−2}·P(x^k w) − P̃ w|, relative to sup |P̃ w|.
pub fn verify_conjugation(mp: &ModeProblem, region: Region, trial: Trial, thetas: &[f64]) -> Result<f64> {
    let global = assemble_global_mode_ode(mp)?;
    let local = assemble_constituent_mode_ode(mp, region)?;
    let k = global.conjugation_exponent();
    let sign = if region == Region::XZero { -1.0 } else { 1.0 };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &t in thetas {
        if !region.contains(t) {
            return Err(Error::InvalidInput(format!("theta = {t} outside {region:?}")));
        }
        // y = sign·μ > 0 and x = y^{1/2}; derivatives of x^k = y^{k/2} in θ
        let y = sign * (2.0 * t).cos();
        let dy = -2.0 * sign * (2.0 * t).sin();
        let ddy = -4.0 * sign * (2.0 * t).cos();
        let e = k / 2.0;
        let xk = re(y).powc(e);
        let xk1 = xk * e * dy / y;
        let xk2 = xk * e * ((e - 1.0) * dy * dy / (y * y) + ddy / y);
        let w = trial(t);
        let jet = [xk * w[0], xk1 * w[0] + xk * w[1], xk2 * w[0] + xk1 * w[1] * 2.0 + xk * w[2]];
        let lhs = re(y).powc(-(k + 2.0) / 2.0) * apply(&local, t, jet);
        let rhs = apply(&global, t, w);
        worst = worst.max((lhs - rhs).norm());
        scale = scale.max(rhs.norm());
    }
    if scale == 0.0 {
        return Ok(worst);
    }
    Ok(worst / scale)
}

/// Compares a fourth-order finite-difference d'Alembertian ∂²_{z_{n+1}} − Δ_{z'}
/// of u = ρ^{iσ̃}·w(θ)·((z₁+iz₂)/|z'|)^ℓ against ρ^{iσ̃−2}(P̃w)·Y on a fixed
/// point cloud. Exact profile only.
pub fn validate_against_ambient(mp: &ModeProblem, trial: Trial, h: f64) -> Result<f64> {
    if !mp.profile.is_exact() {
        return Err(Error::ExactOnly);
    }
    let op = assemble_global_mode_ode(mp)?;
    let n = mp.n;
    let ist = Complex64::i() * mp.sp().sigma_tilde();
    let ell = mp.ell as i32;
    let u = |z: &[f64]| -> Complex64 {
        let zp = &z[..n];
        let t = z[n];
        let r2: f64 = zp.iter().map(|v| v * v).sum();
        let rho = (r2 + t * t).sqrt();
        let theta = (t / rho).acos();
        let y = (Complex64::new(zp[0], zp[1]) / r2.sqrt()).powi(ell);
        re(rho).powc(ist) * trial(theta)[0] * y
    };
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for p in ambient_points(n) {
        let mut z = p.clone();
        let mut lap = Complex64::new(0.0, 0.0);
        for axis in 0..=n {
            let x0 = p[axis];
            let mut vals = [Complex64::new(0.0, 0.0); 5];
            for (i, off) in [-2.0, -1.0, 0.0, 1.0, 2.0].iter().enumerate() {
                z[axis] = x0 + off * h;
                vals[i] = u(&z);
            }
            z[axis] = x0;
            let d2 = (-vals[0] + vals[1] * 16.0 - vals[2] * 30.0 + vals[3] * 16.0 - vals[4]) / (12.0 * h * h);
            if axis == n {
                lap += d2;
            } else {
                lap -= d2;
            }
        }
        let zp = &p[..n];
        let r2: f64 = zp.iter().map(|v| v * v).sum();
        let rho = (r2 + p[n] * p[n]).sqrt();
        let theta = (p[n] / rho).acos();
        let y = (Complex64::new(zp[0], zp[1]) / r2.sqrt()).powi(ell);
        let exact = re(rho).powc(ist - 2.0) * apply(&op, theta, trial(theta)) * y;
        worst = worst.max((lap - exact).norm());
        scale = scale.max(exact.norm()).max((u(&p) / (rho * rho)).norm());
    }
    Ok(worst / scale)
}

/// Runs the ambient validator at h, h/2, h/4 and returns the residuals and the
/// observed order of the last halving.
pub fn ambient_convergence(mp: &ModeProblem, trial: Trial, h: f64) -> Result<(Vec<f64>, f64)> {
    let res: Vec<f64> = [h, h / 2.0, h / 4.0]
        .iter()
        .map(|&s| validate_against_ambient(mp, trial, s))
        .collect::<Result<_>>()?;
    let order = (res[1] / res[2]).log2();
    if !(order >= 3.5) {
        return Err(Error::StepTooCoarse { order });
    }
    Ok((res, order))
}

// Deterministic points with ρ ≈ 1, θ inside the three regions away from the
// singular set, and z' off the z₁ = z₂ = 0 axis.
fn ambient_points(n: usize) -> Vec<Vec<f64>> {
    let thetas: [f64; 7] = [0.45, 0.6, 1.2, 1.6, 1.9, 2.5, 2.7];
    let mut out = Vec::new();
    for (i, &th) in thetas.iter().enumerate() {
        let rho = 0.8 + 0.07 * i as f64;
        let t = rho * th.cos();
        let r = rho * th.sin();
        // direction on S^{n-1}
        let mut dir: Vec<f64> = (0..n).map(|k| ((k + 1) as f64 * 0.7 + i as f64 * 1.3).cos() + 0.3).collect();
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in dir.iter_mut() {
            *v *= r / norm;
        }
        dir.push(t);
        out.push(dir);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(n: usize, ell: usize, s: Complex64, f: RadialProfile) -> ModeProblem {
        ModeProblem::new(n, ell, s, f).unwrap()
    }

    #[test]
    fn a_at_equator() {
        let op = assemble_global_mode_ode(&mp(3, 0, re(1.0), RadialProfile::Exact)).unwrap();
        let a = op.theta_coeffs(PI / 2.0)[0];
        assert!((a - re(1.0)).norm() < 1e-14);
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::Poly { coeffs: vec![0.5, 0.2] }.validate().is_err());
        assert!(RadialProfile::Poly { coeffs: vec![0.5, 0.5] }.validate().is_err()); // f(-1) = 0
        assert!(RadialProfile::Poly { coeffs: vec![0.8, 0.2] }.validate().is_ok());
        assert!(RadialProfile::Bump { epsilon: 0.1 }.validate().is_ok());
        assert!(RadialProfile::Bump { epsilon: 1e6 }.validate().is_err());
    }

    #[test]
    fn profile_derivatives_match_difference_quotients() {
        for f in [RadialProfile::Bump { epsilon: 0.3 }, RadialProfile::Poly { coeffs: vec![0.7, 0.1, 0.2] }] {
            for mu in [-0.9, -0.2, 0.3, 0.8] {
                let h = 1e-5;
                let fd = (f.value(&re(mu + h)) - f.value(&re(mu - h))) / (2.0 * h);
                assert!((fd - f.derivative(&re(mu))).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn indicial_roots_are_zero_and_i_sigma() {
        let s = Complex64::new(0.7, 0.3);
        for f in [RadialProfile::Exact, RadialProfile::Bump { epsilon: 0.1 }] {
            let op = assemble_global_mode_ode(&mp(3, 2, s, f)).unwrap();
            for th in [FRAC_PI_4, 3.0 * FRAC_PI_4] {
                let r = light_cone_indicial_roots(&op, th);
                assert!(r[0].norm() < 1e-10);
                assert!((r[1] - Complex64::i() * s).norm() < 1e-10, "{r:?}");
            }
        }
    }

    #[test]
    fn reflection_symmetry_of_coefficients() {
        let op = assemble_global_mode_ode(&mp(4, 3, Complex64::new(0.4, -0.2), RadialProfile::Bump { epsilon: 0.1 })).unwrap();
        for th in [0.2, 0.5, 1.0, 1.3] {
            let a = op.theta_coeffs(th);
            let b = op.theta_coeffs(PI - th);
            assert!((a[0] - b[0]).norm() < 1e-12);
            assert!((a[1] + b[1]).norm() < 1e-10 * a[1].norm().max(1.0));
            assert!((a[2] - b[2]).norm() < 1e-10 * a[2].norm().max(1.0));
        }
    }

    #[test]
    fn mu_form_matches_theta_form() {
        // w(θ) = g(μ): A w'' + B w' + C w == (Â g'' + B̂ g' + Ĉ g)/(1−μ)
        let op = assemble_global_mode_ode(&mp(3, 1, Complex64::new(0.5, 0.2), RadialProfile::Bump { epsilon: 0.2 })).unwrap();
        let th: f64 = 0.4;
        let mu = (2.0 * th).cos();
        let s = (2.0 * th).sin();
        let g = [re(mu.exp()), re(mu.exp()), re(mu.exp())];
        let jet = [g[0], g[1] * (-2.0 * s), g[2] * 4.0 * s * s + g[1] * (-4.0 * mu)];
        let lhs = apply(&op, th, jet);
        let [a, b, c] = op.mu_coeffs(&re(mu));
        let rhs = (a * g[2] + b * g[1] + c * g[0]) / (1.0 - mu);
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn conjugation_zero_trial() {
        let p = mp(3, 2, Complex64::new(0.7, 0.3), RadialProfile::Exact);
        let zero = |_t: f64| [re(0.0); 3];
        assert_eq!(verify_conjugation(&p, Region::XPlus, &zero, &[0.3, 0.5]).unwrap(), 0.0);
    }

    #[test]
    fn belt_coefficients_real_for_real_sigma() {
        let op = assemble_constituent_mode_ode(&mp(3, 2, re(0.8), RadialProfile::Exact), Region::XZero).unwrap();
        for th in [1.0, 1.3, 1.9] {
            let c = op.theta_coeffs(th);
            assert!(c.iter().all(|v| v.im.abs() < 1e-14));
            let d = op.theta_coeffs(PI - th);
            assert!((c[0] - d[0]).norm() < 1e-13 && (c[1] + d[1]).norm() < 1e-12 && (c[2] - d[2]).norm() < 1e-12);
        }
    }
}
