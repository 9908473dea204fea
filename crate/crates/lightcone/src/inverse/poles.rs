//! Zeros of the mode determinants in a σ-window by the argument principle.
//!
//! Each determinant is holomorphic in σ away from iℤ, where the light-cone
//! exponents collide. Those points are cut out by small circles whose
//! winding is subtracted, and no contour is allowed to pass near them.

use super::global_determinant;
use crate::error::{Error, Result};
use crate::model::{ModeOperator, ModeProblem, OperatorKind, Region};
use crate::scattering::cap_solution;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Mutex;

/// Which determinant to scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeterminantKind {
    /// singular coordinate of the regular solution on X₊ at σ
    CapPlus,
    /// same on X₋ at −σ
    CapMinus,
    /// determinant of the global linear system at σ
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re: [f64; 2],
    pub im: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleOptions {
    /// levels of quadtree refinement
    pub depth: usize,
    /// radius of the circles cut out around σ ∈ iℤ
    pub exclusion: f64,
    /// Newton step size at which iteration stops
    pub newton_tol: f64,
    /// initial samples per edge
    pub edge_samples: usize,
}

impl Default for PoleOptions {
    fn default() -> Self {
        Self { depth: 4, exclusion: 0.02, newton_tol: 1e-12, edge_samples: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zero {
    pub sigma: [f64; 2],
    pub mult: usize,
    /// |det| at the zero over the largest |det| seen on the window boundary
    pub residual: f64,
    /// distance from iℤ
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoleReport {
    /// the window actually scanned, after moving edges off iℤ
    pub window: Window,
    pub which: DeterminantKind,
    pub n: usize,
    pub ell: usize,
    pub zeros: Vec<Zero>,
    /// every polished zero lies in the box whose winding number found it
    pub consistent: bool,
}

/// Largest phase change accepted between neighbouring contour samples.
const MAX_ARG_STEP: f64 = PI / 4.0;
const MIN_SEGMENT: f64 = 1e-9;
const NEWTON_ITERS: usize = 60;

/// The determinant of `which` for the problem `base` at σ.
pub fn determinant(base: &ModeProblem, which: DeterminantKind, sigma: Complex64) -> Result<Complex64> {
    match which {
        DeterminantKind::CapPlus => {
            let op = ModeOperator::from_problem(&base.with_sigma(sigma), OperatorKind::Global);
            Ok(cap_solution(&op, Region::XPlus)?.data.coeff_singular)
        }
        DeterminantKind::CapMinus => {
            let op = ModeOperator::from_problem(&base.with_sigma(-sigma), OperatorKind::Global);
            Ok(cap_solution(&op, Region::XMinus)?.data.coeff_singular)
        }
        DeterminantKind::Global => global_determinant(&base.with_sigma(sigma)),
    }
}

fn key(z: Complex64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

struct Scanner<'a> {
    base: &'a ModeProblem,
    which: DeterminantKind,
    opts: PoleOptions,
    cache: Mutex<HashMap<(u64, u64), Complex64>>,
}

impl Scanner<'_> {
    fn values(&self, pts: &[Complex64]) -> Result<Vec<Complex64>> {
        let missing: Vec<Complex64> = {
            let cache = self.cache.lock().expect("cache lock");
            let mut m: Vec<Complex64> = pts.iter().cloned().filter(|p| !cache.contains_key(&key(*p))).collect();
            m.sort_by_key(|a| key(*a));
            m.dedup();
            m
        };
        let fresh: Vec<Result<Complex64>> = missing.par_iter().map(|&s| determinant(self.base, self.which, s)).collect();
        let mut cache = self.cache.lock().expect("cache lock");
        for (s, v) in missing.iter().zip(fresh) {
            cache.insert(key(*s), v?);
        }
        Ok(pts.iter().map(|p| cache[&key(*p)]).collect())
    }

    /// Change of log f along the polyline through `pts`, refined until every
    /// step of arg f is below MAX_ARG_STEP; also returns ∫ σ d(log f).
    fn contour(&self, pts: &[Complex64]) -> Result<(Complex64, Complex64)> {
        let mut pts = pts.to_vec();
        loop {
            let vals = self.values(&pts)?;
            if let Some(p) = vals.iter().zip(&pts).find(|(v, _)| v.norm() == 0.0 || !v.is_finite()) {
                return Err(Error::ContourThroughZero(*p.1));
            }
            let mut refined = Vec::with_capacity(pts.len());
            let mut total = Complex64::new(0.0, 0.0);
            let mut moment = Complex64::new(0.0, 0.0);
            let mut split = false;
            for k in 0..pts.len() - 1 {
                refined.push(pts[k]);
                let dlog = (vals[k + 1] / vals[k]).ln();
                if dlog.im.abs() > MAX_ARG_STEP {
                    if (pts[k + 1] - pts[k]).norm() < MIN_SEGMENT {
                        return Err(Error::ContourThroughZero(pts[k]));
                    }
                    refined.push(0.5 * (pts[k] + pts[k + 1]));
                    split = true;
                }
                total += dlog;
                moment += 0.5 * (pts[k] + pts[k + 1]) * dlog;
            }
            refined.push(*pts.last().expect("non-empty"));
            if !split {
                return Ok((total, moment));
            }
            pts = refined;
        }
    }

    fn rectangle(&self, w: &Window) -> Vec<Complex64> {
        let m = self.opts.edge_samples.max(2);
        let corners = [
            Complex64::new(w.re[0], w.im[0]),
            Complex64::new(w.re[1], w.im[0]),
            Complex64::new(w.re[1], w.im[1]),
            Complex64::new(w.re[0], w.im[1]),
        ];
        let mut pts = Vec::with_capacity(4 * m + 1);
        for e in 0..4 {
            let (a, b) = (corners[e], corners[(e + 1) % 4]);
            for j in 0..m {
                pts.push(a + (b - a) * (j as f64 / m as f64));
            }
        }
        pts.push(corners[0]);
        pts
    }

    fn circle(&self, center: Complex64) -> Vec<Complex64> {
        let m = 4 * self.opts.edge_samples.max(2);
        (0..=m).map(|j| center + self.opts.exclusion * Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)).collect()
    }

    /// Zeros inside `w` minus those inside the excluded circles, with the
    /// sum of their locations.
    fn count(&self, w: &Window) -> Result<(i64, Complex64)> {
        let (mut total, mut moment) = self.contour(&self.rectangle(w))?;
        for c in excluded_in(w) {
            let (t, m) = self.contour(&self.circle(c))?;
            total -= t;
            moment -= m;
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        Ok(((total.im / (2.0 * PI)).round() as i64, moment / two_pi_i))
    }

    /// Newton polish with a finite-difference derivative; steps that do not
    /// reduce |f| are halved.
    fn newton(&self, start: Complex64, mult: usize) -> Result<Complex64> {
        let f = |s: Complex64| determinant(self.base, self.which, s);
        let mut s = start;
        let mut fs = f(s)?;
        for _ in 0..NEWTON_ITERS {
            let h = 1e-6 * s.norm().max(1.0);
            let fp = (f(s + h)? - f(s - h)?) / (2.0 * h);
            let mut step = fs / fp * mult as f64;
            if !step.is_finite() {
                break;
            }
            let mut accepted = false;
            for _ in 0..20 {
                let cand = s - step;
                let fc = f(cand)?;
                if fc.norm() < fs.norm() || step.norm() <= self.opts.newton_tol * s.norm().max(1.0) {
                    s = cand;
                    fs = fc;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || step.norm() <= self.opts.newton_tol * s.norm().max(1.0) || fs.norm() == 0.0 {
                return Ok(s);
            }
        }
        Err(Error::NoConvergence(format!("Newton iteration from {start} did not settle")))
    }

    /// Splits `w` into quadrants until each holds one zero or the depth
    /// limit is reached. Leaves are (cell, count, sum of zeros).
    fn search(&self, w: Window, n: i64, sum: Complex64, level: usize, out: &mut Vec<Leaf>) -> Result<()> {
        if n <= 0 {
            return Ok(());
        }
        if n == 1 || level >= self.opts.depth {
            out.push(Leaf { cell: w, count: n as usize, guess: sum / n as f64 });
            return Ok(());
        }
        let rho = self.opts.exclusion;
        let (wr, wi) = (w.re[1] - w.re[0], w.im[1] - w.im[0]);
        for attempt in 0..=JITTER_TRIES {
            // jittered retries move the split lines when a contour meets a zero
            let jitter = attempt as f64 * 0.0137;
            let mx = shift_re(w.re[0] + wr * (0.5 + jitter), rho);
            let my = shift_im(w.im[0] + wi * (0.5 + 1.3 * jitter), rho);
            let quads = [([w.re[0], mx], [w.im[0], my]), ([mx, w.re[1]], [w.im[0], my]), ([w.re[0], mx], [my, w.im[1]]), ([mx, w.re[1]], [my, w.im[1]])];
            let counts: Vec<Result<(i64, Complex64)>> = quads.par_iter().map(|(re, im)| self.count(&Window { re: *re, im: *im })).collect();
            if counts.iter().any(|c| matches!(c, Err(Error::ContourThroughZero(_)))) && attempt < JITTER_TRIES {
                continue;
            }
            for ((re, im), c) in quads.iter().zip(counts) {
                let (cn, cs) = c?;
                self.search(Window { re: *re, im: *im }, cn, cs, level + 1, out)?;
            }
            return Ok(());
        }
        unreachable!("the last attempt always returns")
    }
}

struct Leaf {
    cell: Window,
    count: usize,
    guess: Complex64,
}

const JITTER_TRIES: usize = 3;

fn inside(w: &Window, z: Complex64) -> bool {
    z.re >= w.re[0] && z.re <= w.re[1] && z.im >= w.im[0] && z.im <= w.im[1]
}

/// Points of iℤ strictly inside the window.
fn excluded_in(w: &Window) -> Vec<Complex64> {
    if !(w.re[0] < 0.0 && w.re[1] > 0.0) {
        return Vec::new();
    }
    let lo = w.im[0].ceil() as i64;
    let hi = w.im[1].floor() as i64;
    (lo..=hi).map(|k| Complex64::new(0.0, k as f64)).filter(|z| z.im > w.im[0] && z.im < w.im[1]).collect()
}

fn shift_re(x: f64, rho: f64) -> f64 {
    if x.abs() < 2.0 * rho {
        if x < 0.0 {
            -2.0 * rho
        } else {
            2.0 * rho
        }
    } else {
        x
    }
}

fn shift_im(y: f64, rho: f64) -> f64 {
    let k = y.round();
    if (y - k).abs() < 2.0 * rho {
        if y < k {
            k - 2.0 * rho
        } else {
            k + 2.0 * rho
        }
    } else {
        y
    }
}

/// Moves window edges that pass within 2ρ of iℤ outward.
fn adjusted(w: &Window, rho: f64) -> Window {
    let near_axis = w.re[0] < 2.0 * rho && w.re[1] > -2.0 * rho;
    let out_re = |x: f64, dir: f64| if x.abs() < 2.0 * rho { dir * 2.0 * rho } else { x };
    let out_im = |y: f64, dir: f64| {
        let k = y.round();
        if near_axis && (y - k).abs() < 2.0 * rho {
            k + dir * 2.0 * rho
        } else {
            y
        }
    };
    let im = [out_im(w.im[0], -1.0), out_im(w.im[1], 1.0)];
    let re = [out_re(w.re[0], -1.0), out_re(w.re[1], 1.0)];
    Window { re, im }
}

/// Zeros of the chosen determinant in the window, with multiplicities.
pub fn find_poles(base: &ModeProblem, which: DeterminantKind, window: Window, opts: PoleOptions) -> Result<PoleReport> {
    if !(window.re[0] < window.re[1] && window.im[0] < window.im[1]) {
        return Err(Error::InvalidInput("window must have positive width and height".into()));
    }
    let sc = Scanner { base, which, opts, cache: Mutex::new(HashMap::new()) };
    let mut w = adjusted(&window, opts.exclusion);
    let mut top = sc.count(&w);
    for attempt in 1..=JITTER_TRIES {
        if !matches!(top, Err(Error::ContourThroughZero(_))) {
            break;
        }
        let d = 1e-3 * attempt as f64;
        w = adjusted(&Window { re: [w.re[0] - d, w.re[1] + d], im: [w.im[0] - d, w.im[1] + d] }, opts.exclusion);
        top = sc.count(&w);
    }
    let (n, sum) = top?;
    let mut leaves = Vec::new();
    sc.search(w, n, sum, 0, &mut leaves)?;
    let scale = sc.values(&sc.rectangle(&w))?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let polished: Vec<Result<Complex64>> = leaves.par_iter().map(|l| sc.newton(l.guess, l.count)).collect();
    let mut zeros: Vec<Zero> = Vec::new();
    let mut consistent = true;
    for (leaf, z) in leaves.iter().zip(polished) {
        let z = z?;
        consistent &= inside(&leaf.cell, z);
        let residual = determinant(base, which, z)?.norm() / scale.max(f64::MIN_POSITIVE);
        zeros.push(Zero { sigma: [z.re, z.im], mult: leaf.count, residual, margin: distance_from_imaginary_integers(z) });
    }
    zeros.sort_by(|a, b| a.sigma[1].total_cmp(&b.sigma[1]).then(a.sigma[0].total_cmp(&b.sigma[0])));
    Ok(PoleReport { window: w, which, n: base.n, ell: base.ell, zeros, consistent })
}

fn distance_from_imaginary_integers(z: Complex64) -> f64 {
    (z - Complex64::new(0.0, z.im.round())).norm()
}

fn nearest(z: &Zero, set: &[&Zero]) -> f64 {
    set.iter().map(|w| ((z.sigma[0] - w.sigma[0]).powi(2) + (z.sigma[1] - w.sigma[1]).powi(2)).sqrt()).fold(f64::INFINITY, f64::min)
}

/// Symmetric distance between the global zeros and the union of the
/// constituent zeros; 0 when both are empty and infinite when only one is.
pub fn union_distance(global: &[Zero], plus: &[Zero], minus: &[Zero]) -> f64 {
    let g: Vec<&Zero> = global.iter().collect();
    let u: Vec<&Zero> = plus.iter().chain(minus).collect();
    let there = g.iter().map(|z| nearest(z, &u)).fold(0.0, f64::max);
    let back = u.iter().map(|z| nearest(z, &g)).fold(0.0, f64::max);
    there.max(back)
}

/// Departure from holomorphy on a circle: the determinant is sampled at
/// `nodes` points and expanded in powers of (σ − c) and of its conjugate;
/// returns the norm of the conjugate part over the norm of the whole.
pub fn holomorphy_defect(base: &ModeProblem, which: DeterminantKind, center: Complex64, radius: f64, nodes: usize) -> Result<f64> {
    let pts: Vec<Complex64> = (0..nodes).map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / nodes as f64)).collect();
    let vals: Vec<Result<Complex64>> = pts.par_iter().map(|&u| determinant(base, which, center + radius * u)).collect();
    let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
    // Fourier mode k of the samples is the coefficient of u^k; k < 0 are the
    // conjugate powers. Modes beyond nodes/4 are left out against aliasing.
    let mode = |k: i64| -> Complex64 { pts.iter().zip(&vals).map(|(u, v)| v * u.powi(-k as i32)).sum::<Complex64>() / nodes as f64 };
    let q = (nodes / 4) as i64;
    let conj: f64 = (1..=q).map(|k| mode(-k).norm_sqr()).sum();
    let all: f64 = (-q..=q).map(|k| mode(k).norm_sqr()).sum();
    Ok((conj / all.max(f64::MIN_POSITIVE)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RadialProfile;

    #[test]
    fn shifts_avoid_integer_points() {
        assert_eq!(shift_im(-2.01, 0.02), -2.04);
        assert_eq!(shift_im(-2.5, 0.02), -2.5);
        assert_eq!(shift_re(0.01, 0.02), 0.04);
        let w = adjusted(&Window { re: [-1.0, 1.0], im: [-3.0, -0.5] }, 0.02);
        assert_eq!(w.im[0], -3.04);
        assert_eq!(excluded_in(&w).len(), 3);
    }

    #[test]
    fn exact_cap_poles_in_two_dimensions() {
        // regular-solution singular coordinate vanishes at σ = −i(ℓ + 1/2 + k)
        let mp = ModeProblem::new(2, 1, Complex64::new(0.3, 0.0), RadialProfile::Exact).unwrap();
        let r = find_poles(&mp, DeterminantKind::CapPlus, Window { re: [-1.0, 1.0], im: [-3.3, -0.4] }, PoleOptions::default()).unwrap();
        let got: Vec<f64> = r.zeros.iter().map(|z| z.sigma[1]).collect();
        assert_eq!(got.len(), 2, "{:?}", r.zeros);
        for (z, want) in r.zeros.iter().zip([-2.5, -1.5]) {
            assert!((z.sigma[1] - want).abs() < 1e-8 && z.sigma[0].abs() < 1e-8, "{z:?}");
            assert_eq!(z.mult, 1);
        }
    }

    #[test]
    fn determinant_is_holomorphic() {
        let mp = ModeProblem::new(3, 2, Complex64::new(0.3, 0.0), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        for which in [DeterminantKind::CapPlus, DeterminantKind::Global] {
            let d = holomorphy_defect(&mp, which, Complex64::new(1.0, 0.4), 0.2, 64).unwrap();
            assert!(d < 1e-8, "{which:?}: {d}");
        }
    }

    #[test]
    fn exact_three_dimensional_caps_have_no_poles_below() {
        let win = Window { re: [-3.0, 3.0], im: [-3.0, -0.1] };
        for ell in 0..=5 {
            let mp = ModeProblem::new(3, ell, Complex64::new(0.3, 0.0), RadialProfile::Exact).unwrap();
            let r = find_poles(&mp, DeterminantKind::CapPlus, win, PoleOptions::default()).unwrap();
            assert!(r.zeros.is_empty(), "ell {ell}: {:?}", r.zeros);
            assert!(r.window.im[0] < -3.0);
        }
    }

    #[test]
    fn global_poles_are_the_union() {
        let mp = ModeProblem::new(3, 1, Complex64::new(0.3, 0.0), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let win = Window { re: [-3.0, 3.0], im: [-3.0, -0.1] };
        let opts = PoleOptions::default();
        let g = find_poles(&mp, DeterminantKind::Global, win, opts).unwrap();
        let p = find_poles(&mp, DeterminantKind::CapPlus, win, opts).unwrap();
        let m = find_poles(&mp, DeterminantKind::CapMinus, win, opts).unwrap();
        assert!(g.consistent && p.consistent && m.consistent);
        assert!(union_distance(&g.zeros, &p.zeros, &m.zeros) <= 1e-6, "{:?} {:?} {:?}", g.zeros, p.zeros, m.zeros);
    }
}
