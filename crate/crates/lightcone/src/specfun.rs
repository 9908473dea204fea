//! Complex log-Gamma, Gamma quotients and the Gauss hypergeometric function.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Distance below which a quantity counts as an integer for connection formulas.
pub const INTEGER_TOL: f64 = 1e-8;

const POLE_TOL: f64 = 1e-12;
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyp2F1Params {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub z: Complex64,
}

impl Hyp2F1Params {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, z: Complex64) -> Self {
        Self { a, b, c, z }
    }
}

/// Distance of `x` from the nearest integer, measured in the complex plane.
pub fn distance_from_integer(x: Complex64) -> f64 {
    (x - Complex64::new(x.re.round(), 0.0)).norm()
}

fn nonpositive_integer(z: Complex64) -> Option<i64> {
    let k = z.re.round();
    if k <= 0.0 && (z - Complex64::new(k, 0.0)).norm() <= POLE_TOL * (1.0 + k.abs()) {
        Some(k as i64)
    } else {
        None
    }
}

fn lanczos(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, p) in LANCZOS.iter().enumerate().skip(1) {
        x += *p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

// log sin(pi z) on the branch that is analytic in the upper half plane and
// real on (0, 1).
fn log_sin_pi_upper(z: Complex64) -> Complex64 {
    let i = Complex64::i();
    let e = (2.0 * PI * i * z).exp();
    Complex64::new(0.5f64.ln(), PI / 2.0) - i * PI * z + (Complex64::new(1.0, 0.0) - e).ln()
}

/// Principal branch of log Γ(z).
pub fn log_gamma(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("log_gamma"));
    }
    if nonpositive_integer(z).is_some() {
        return Err(Error::PoleOfGamma(z));
    }
    if z.re >= 0.5 {
        return Ok(lanczos(z));
    }
    // reflection; the lower half plane follows by conjugate symmetry
    let (w, flip) = if z.im < 0.0 { (z.conj(), true) } else { (z, false) };
    let v = PI.ln() - log_sin_pi_upper(w) - lanczos(Complex64::new(1.0, 0.0) - w);
    Ok(if flip { v.conj() } else { v })
}

pub fn gamma(z: Complex64) -> Result<Complex64> {
    Ok(log_gamma(z)?.exp())
}

// Γ(-m + eps) ~ (-1)^m / (m! eps)
fn pole_residue(m: i64) -> f64 {
    let m = -m;
    let mut r = if m % 2 == 0 { 1.0 } else { -1.0 };
    for k in 1..=m {
        r /= k as f64;
    }
    r
}

/// Π Γ(num) / Π Γ(den), computed from summed log-Gammas. Poles that cancel
/// between numerator and denominator are resolved by their common limit.
pub fn gamma_ratio(num: &[Complex64], den: &[Complex64]) -> Result<Complex64> {
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut factor = 1.0;
    let mut excess: i64 = 0;
    for &z in num {
        match nonpositive_integer(z) {
            Some(m) => {
                excess += 1;
                factor *= pole_residue(m);
            }
            None => log_sum += log_gamma(z)?,
        }
    }
    for &z in den {
        match nonpositive_integer(z) {
            Some(m) => {
                excess -= 1;
                factor /= pole_residue(m);
            }
            None => log_sum -= log_gamma(z)?,
        }
    }
    match excess {
        0 => Ok(factor * log_sum.exp()),
        e if e > 0 => Err(Error::UncancelledPole),
        _ => Ok(Complex64::new(0.0, 0.0)),
    }
}

fn check_c(c: Complex64) -> Result<()> {
    if nonpositive_integer(c).is_some() {
        return Err(Error::InvalidParameter(format!("c = {c} is a non-positive integer")));
    }
    Ok(())
}

/// Gauss series, used for |z| ≤ 0.75. Terminates once a geometric bound on
/// the tail falls below 1e-16 of the partial sum.
pub fn hyp2f1_series(a: Complex64, b: Complex64, c: Complex64, z: Complex64) -> Result<Complex64> {
    check_c(c)?;
    let one = Complex64::new(1.0, 0.0);
    let mut term = one;
    let mut sum = one;
    for k in 0..20_000usize {
        let kf = k as f64;
        let ratio = (a + kf) * (b + kf) / ((c + kf) * (kf + 1.0)) * z;
        term *= ratio;
        sum += term;
        if term.norm() == 0.0 {
            return Ok(sum);
        }
        let kn = kf + 1.0;
        let denom = kn + c.re;
        if denom > 0.0 {
            let q = z.norm() * (1.0 + (a - 1.0).norm() / (kn + 1.0)) * (1.0 + (b - c).norm() / denom);
            if q < 1.0 && term.norm() * q / (1.0 - q) <= 1e-16 * sum.norm() {
                return Ok(sum);
            }
        }
    }
    Err(Error::NonConvergent(format!("2F1 series at z = {z}")))
}

/// ₂F₁(a,b;c;z) on the principal branch.
pub fn hyp2f1(p: Hyp2F1Params) -> Result<Complex64> {
    let Hyp2F1Params { a, b, c, z } = p;
    check_c(c)?;
    let one = Complex64::new(1.0, 0.0);
    if z.norm() <= 0.75 {
        return hyp2f1_series(a, b, c, z);
    }
    if z.im == 0.0 && z.re > 1.0 {
        return Err(Error::NonConvergent(format!("z = {z} lies on the branch cut")));
    }
    let w = one - z;
    if w.norm() <= 0.75 && distance_from_integer(c - a - b) > INTEGER_TOL {
        let (c1, c2) = hyp2f1_connection(p)?;
        let f1 = hyp2f1_series(a, b, a + b - c + 1.0, w)?;
        let f2 = hyp2f1_series(c - a, c - b, c - a - b + 1.0, w)?;
        return Ok(c1 * f1 + c2 * w.powc(c - a - b) * f2);
    }
    let pf = z / (z - 1.0);
    if pf.norm() <= 0.75 {
        return Ok(w.powc(-a) * hyp2f1_series(a, c - b, c, pf)?);
    }
    let inv = one / z;
    if inv.norm() <= 0.75 && distance_from_integer(a - b) > INTEGER_TOL {
        let mz = -z;
        let t1 = gamma_ratio(&[c, b - a], &[b, c - a])?
            * mz.powc(-a)
            * hyp2f1_series(a, a - c + 1.0, a - b + 1.0, inv)?;
        let t2 = gamma_ratio(&[c, a - b], &[a, c - b])?
            * mz.powc(-b)
            * hyp2f1_series(b, b - c + 1.0, b - a + 1.0, inv)?;
        return Ok(t1 + t2);
    }
    // slow but convergent: whichever of z, z/(z−1) is smaller
    if z.norm().min(pf.norm()) <= 0.97 {
        return if z.norm() <= pf.norm() {
            hyp2f1_series(a, b, c, z)
        } else {
            Ok(w.powc(-a) * hyp2f1_series(a, c - b, c, pf)?)
        };
    }
    Err(Error::NonConvergent(format!("no representation applies at z = {z}")))
}

/// Coefficients (C₁, C₂) of the z ↔ 1−z connection
/// F(a,b;c;z) = C₁ F(a,b;a+b−c+1;1−z) + C₂ (1−z)^{c−a−b} F(c−a,c−b;c−a−b+1;1−z).
pub fn hyp2f1_connection(p: Hyp2F1Params) -> Result<(Complex64, Complex64)> {
    let Hyp2F1Params { a, b, c, .. } = p;
    check_c(c)?;
    let d = distance_from_integer(c - a - b);
    if d <= INTEGER_TOL {
        return Err(Error::IntegerDegeneracy { distance: d, margin: INTEGER_TOL });
    }
    let c1 = gamma_ratio(&[c, c - a - b], &[c - a, c - b])?;
    let c2 = gamma_ratio(&[c, a + b - c], &[a, b])?;
    Ok((c1, c2))
}
