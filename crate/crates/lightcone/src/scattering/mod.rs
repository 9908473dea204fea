//! Per-mode scattering: constituent scalars on the caps, the backward de
//! Sitter matrix on the belt, and the global matrix by direct transfer and by
//! the product of the constituent pieces.

use crate::error::{Error, Result};
use crate::linalg::{diag2, mat2_apply, mat2_inv, mat2_mul, Mat2};
use crate::model::{ModeOperator, ModeProblem, OperatorKind, Region, DEFAULT_MARGIN};
use crate::odeconnect::{frobenius_at, launch, transport, Anchor, Chart, ConnectionData, RegionSolution, HANDOFF_RADIUS};
use crate::specfun::{gamma_ratio, hyp2f1_connection, Hyp2F1Params};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

pub mod symbol;

pub use symbol::{symbol_order_check, SymbolReport};

/// Relative size below which a leading connection coefficient counts as zero.
pub const POLE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaSign {
    Plus,
    Minus,
}

pub(crate) fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// [[e^{−πσ}, e^{πσ}], [1, 1]].
pub fn desitter_matrix(sigma: Complex64) -> Mat2 {
    [[(-PI * sigma).exp(), (PI * sigma).exp()], [re(1.0), re(1.0)]]
}

/// Coefficients of (μ+i0)^{iσ} and (μ−i0)^{iσ} at a light cone, with the
/// boundary value of the smooth part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightConeData {
    pub a_plus: Complex64,
    pub a_minus: Complex64,
    pub smooth: Complex64,
}

impl LightConeData {
    /// Singular coefficient of |μ|^{iσ} on the cap side.
    pub fn cap_singular(&self) -> Complex64 {
        self.a_plus + self.a_minus
    }

    /// Singular coefficient of |μ|^{iσ} on the belt side.
    pub fn belt_singular(&self, sigma: Complex64) -> Complex64 {
        (-PI * sigma).exp() * self.a_plus + (PI * sigma).exp() * self.a_minus
    }

    /// Recovers (a₊, a₋) from the two one-sided singular coefficients.
    pub fn from_sides(sigma: Complex64, belt_singular: Complex64, cap_singular: Complex64, smooth: Complex64) -> Result<Self> {
        let m = desitter_matrix(sigma);
        let inv = mat2_inv(&m).ok_or(Error::IntegerDegeneracy { distance: 0.0, margin: DEFAULT_MARGIN })?;
        let [a_plus, a_minus] = mat2_apply(&inv, [belt_singular, cap_singular]);
        Ok(Self { a_plus, a_minus, smooth })
    }
}

pub(crate) fn pole_of(region: Region) -> Result<f64> {
    match region {
        Region::XPlus => Ok(0.0),
        Region::XMinus => Ok(PI),
        Region::XZero => Err(Error::InvalidInput("the belt has no pole".into())),
    }
}

pub(crate) fn cone_of(region: Region) -> f64 {
    match region {
        Region::XPlus => FRAC_PI_4,
        Region::XZero | Region::XMinus => 3.0 * FRAC_PI_4,
    }
}

/// Solution regular at the pole of a cap, with its light-cone coordinates.
#[derive(Debug, Clone)]
pub struct CapSolution {
    pub solution: RegionSolution,
    pub data: ConnectionData,
}

/// Regular solution of a cap or global operator on a cap.
pub fn cap_solution(op: &ModeOperator, region: Region) -> Result<CapSolution> {
    if op.kind == OperatorKind::Belt {
        return Err(Error::InvalidInput("cap solution requested for the belt operator".into()));
    }
    let pole = frobenius_at(op, Chart::pole(pole_of(region)?), HANDOFF_RADIUS)?;
    let cone = frobenius_at(op, Chart::light_cone(cone_of(region)), HANDOFF_RADIUS)?;
    let start = launch(&pole, &[re(1.0)], None, 1.0);
    let (data, _) = transport(op, start, &cone, 1.0, None)?;
    let anchors = vec![
        Anchor::new(pole, vec![re(1.0)], 1.0),
        Anchor::new(cone, vec![data.coeff_singular, data.coeff_smooth], 1.0),
    ];
    Ok(CapSolution { solution: RegionSolution::from_anchors(op.clone(), anchors), data })
}

fn smooth_over_singular(d: &ConnectionData) -> Result<Complex64> {
    if d.coeff_singular.norm() <= POLE_TOL * d.coeff_smooth.norm() {
        return Err(Error::ResolventPole { value: d.coeff_singular.norm() / d.coeff_smooth.norm() });
    }
    Ok(d.coeff_smooth / d.coeff_singular)
}

fn signed(mp: &ModeProblem, sign: SigmaSign) -> ModeProblem {
    match sign {
        SigmaSign::Plus => mp.clone(),
        SigmaSign::Minus => mp.with_sigma(-mp.sigma),
    }
}

/// Mode eigenvalue of the cap scattering operator at ±σ: the smooth
/// coefficient of the pole-regular solution per unit |μ|^{iσ} coefficient.
pub fn smatrix_hyperbolic(mp: &ModeProblem, region: Region, sign: SigmaSign) -> Result<Complex64> {
    let mp = signed(mp, sign);
    mp.sp().check_margin(DEFAULT_MARGIN)?;
    let op = ModeOperator::from_problem(&mp, OperatorKind::Cap);
    smooth_over_singular(&cap_solution(&op, region)?.data)
}

/// Closed-form cap eigenvalue for f ≡ 1 from the hypergeometric connection.
///
/// On the cap, w = x^{ℓ}(1+x²)^{…}-type reduction gives ₂F₁(a, b; c; tan²θ)
/// with a = (ℓ+h+iσ)/2, b = a + 1/2, c = ℓ + n/2, and the eigenvalue is
/// 2^{−iσ}·C₂/C₁ from the z ↔ 1−z connection.
pub fn smatrix_closed_form(mp: &ModeProblem, region: Region) -> Result<Complex64> {
    if !mp.profile.is_exact() {
        return Err(Error::ExactOnly);
    }
    pole_of(region)?;
    mp.sp().check_margin(DEFAULT_MARGIN)?;
    let is = Complex64::i() * mp.sigma;
    let h = mp.sp().half();
    let ell = mp.ell as f64;
    let a = (is + ell + h) / 2.0;
    let b = a + 0.5;
    let c = re(ell + mp.n as f64 / 2.0);
    let (c1, c2) = hyp2f1_connection(Hyp2F1Params::new(a, b, c, re(0.5)))?;
    if c1.norm() == 0.0 {
        return Err(Error::ResolventPole { value: 0.0 });
    }
    Ok(re(2.0).powc(-is) * c2 / c1)
}

/// 2^{iσ}Γ(iσ)Γ(ℓ+h−iσ)/(Γ(−iσ)Γ(ℓ+h+iσ)) evaluated directly.
pub fn closed_form_gamma_quotient(n: usize, ell: usize, sigma: Complex64) -> Result<Complex64> {
    let is = Complex64::i() * sigma;
    let h = (n as f64 - 1.0) / 2.0;
    let l = ell as f64 + h;
    Ok(re(2.0).powc(is) * gamma_ratio(&[is, -is + l], &[-is, is + l])?)
}

/// 2^{iσ}Γ(iσ)/Γ(−iσ), the large-ℓ limit of s₊·λ_ℓ^{iσ} for f ≡ 1.
pub fn symbol_constant(sigma: Complex64) -> Result<Complex64> {
    let is = Complex64::i() * sigma;
    Ok(re(2.0).powc(is) * gamma_ratio(&[is], &[-is])?)
}

/// Backward belt propagation: columns map (singular, smooth) data at π/4 to
/// (singular, smooth) coordinates at 3π/4.
pub fn smatrix_desitter_backward(mp: &ModeProblem) -> Result<Mat2> {
    mp.sp().check_margin(DEFAULT_MARGIN)?;
    let op = ModeOperator::from_problem(mp, OperatorKind::Belt);
    let b_in = frobenius_at(&op, Chart::belt(FRAC_PI_4), HANDOFF_RADIUS)?;
    let b_out = frobenius_at(&op, Chart::belt(3.0 * FRAC_PI_4), HANDOFF_RADIUS)?;
    let mut s0 = [[re(0.0); 2]; 2];
    for col in 0..2 {
        let mut e = [re(0.0); 2];
        e[col] = re(1.0);
        let (d, _) = transport(&op, launch(&b_in, &e, None, 1.0), &b_out, 1.0, None)?;
        s0[0][col] = d.coeff_singular;
        s0[1][col] = d.coeff_smooth;
    }
    Ok(s0)
}

/// Connection data of the global operator: pole-regular solutions on both
/// caps and the transfer across the belt.
#[derive(Debug, Clone)]
pub struct GlobalConnection {
    pub op: ModeOperator,
    pub x_plus: CapSolution,
    pub x_minus: CapSolution,
    pub y_plus: crate::odeconnect::FrobeniusBasis,
    pub y_minus: crate::odeconnect::FrobeniusBasis,
}

impl GlobalConnection {
    pub fn new(mp: &ModeProblem) -> Result<Self> {
        mp.sp().check_margin(DEFAULT_MARGIN)?;
        let op = ModeOperator::from_problem(mp, OperatorKind::Global);
        let x_plus = cap_solution(&op, Region::XPlus)?;
        let x_minus = cap_solution(&op, Region::XMinus)?;
        let y_plus = x_plus.solution.anchors[1].basis.clone();
        let y_minus = x_minus.solution.anchors[1].basis.clone();
        Ok(Self { op, x_plus, x_minus, y_plus, y_minus })
    }

    pub fn sigma(&self) -> Complex64 {
        self.op.sigma
    }

    /// Smooth-over-singular ratio of the X₊ regular solution.
    pub fn s_plus(&self) -> Result<Complex64> {
        smooth_over_singular(&self.x_plus.data).map_err(|_| Error::GlobalPole { pivot: self.x_plus.data.coeff_singular.norm() })
    }

    /// Belt-side data at Y₊ for inputs (b₊, b₋).
    pub fn belt_launch(&self, b: [Complex64; 2]) -> Result<[Complex64; 2]> {
        let m = desitter_matrix(self.sigma());
        let [sing, cap_sing] = mat2_apply(&m, b);
        Ok([sing, self.s_plus()? * cap_sing])
    }

    /// Belt solution with (singular, smooth) data at Y₊ and its coordinates at Y₋.
    pub fn belt_solution(&self, data: [Complex64; 2]) -> Result<(RegionSolution, ConnectionData)> {
        let first = Anchor::new(self.y_plus.clone(), data.to_vec(), -1.0);
        let (out, _) = transport(&self.op, first.launch(), &self.y_minus, -1.0, None)?;
        let second = Anchor::new(self.y_minus.clone(), vec![out.coeff_singular, out.coeff_smooth], -1.0);
        Ok((RegionSolution::from_anchors(self.op.clone(), vec![first, second]), out))
    }

    /// Splits belt-side coordinates (p', q') at Y₋ using X₋ regularity:
    /// returns (ã₊, ã₋) and the multiplier of the X₋ regular solution.
    pub fn split_at_y_minus(&self, belt: &ConnectionData) -> Result<([Complex64; 2], Complex64)> {
        let d3 = &self.x_minus.data;
        if d3.coeff_smooth.norm() <= POLE_TOL * d3.coeff_singular.norm() {
            return Err(Error::GlobalPole { pivot: d3.coeff_smooth.norm() / d3.coeff_singular.norm() });
        }
        let kappa = belt.coeff_smooth / d3.coeff_smooth;
        let lc = LightConeData::from_sides(self.sigma(), belt.coeff_singular, kappa * d3.coeff_singular, belt.coeff_smooth)?;
        Ok(([lc.a_plus, lc.a_minus], kappa))
    }

    /// Backward global Poisson solution for (b₊, b₋), one piece per region.
    pub fn poisson(&self, b: [Complex64; 2]) -> Result<GlobalPoisson> {
        let s_plus = self.s_plus()?;
        let cap_sing = b[0] + b[1];
        let scale_plus = cap_sing / self.x_plus.data.coeff_singular;
        let (belt, out) = self.belt_solution(self.belt_launch(b)?)?;
        let (tilde, kappa) = self.split_at_y_minus(&out)?;
        Ok(GlobalPoisson {
            x_plus: scaled(&self.x_plus.solution, scale_plus),
            belt,
            x_minus: scaled(&self.x_minus.solution, kappa),
            y_plus: LightConeData { a_plus: b[0], a_minus: b[1], smooth: s_plus * cap_sing },
            y_minus: LightConeData { a_plus: tilde[0], a_minus: tilde[1], smooth: out.coeff_smooth },
        })
    }

    /// Columns (ã₊, ã₋) for the inputs (1, 0) and (0, 1).
    pub fn smatrix(&self) -> Result<Mat2> {
        let mut s = [[re(0.0); 2]; 2];
        for col in 0..2 {
            let mut e = [re(0.0); 2];
            e[col] = re(1.0);
            let (_, out) = self.belt_solution(self.belt_launch(e)?)?;
            let (tilde, _) = self.split_at_y_minus(&out)?;
            s[0][col] = tilde[0];
            s[1][col] = tilde[1];
        }
        Ok(s)
    }
}

fn scaled(sol: &RegionSolution, c: Complex64) -> RegionSolution {
    let mut out = sol.clone();
    for a in out.anchors.iter_mut() {
        for v in a.coeffs.iter_mut() {
            *v *= c;
        }
    }
    out.start.1 = [out.start.1[0] * c, out.start.1[1] * c];
    out
}

/// The backward global Poisson solution, conjugated picture.
#[derive(Debug, Clone)]
pub struct GlobalPoisson {
    pub x_plus: RegionSolution,
    pub belt: RegionSolution,
    pub x_minus: RegionSolution,
    pub y_plus: LightConeData,
    pub y_minus: LightConeData,
}

impl GlobalPoisson {
    pub fn piece(&self, theta: f64) -> Result<&RegionSolution> {
        match region_of(theta)? {
            Region::XPlus => Ok(&self.x_plus),
            Region::XZero => Ok(&self.belt),
            Region::XMinus => Ok(&self.x_minus),
        }
    }

    pub fn eval(&self, theta: f64) -> Result<Complex64> {
        self.piece(theta)?.eval(theta)
    }
}

pub(crate) fn region_of(theta: f64) -> Result<Region> {
    [Region::XPlus, Region::XZero, Region::XMinus]
        .into_iter()
        .find(|r| r.contains(theta))
        .ok_or_else(|| Error::InvalidInput(format!("theta = {theta} is not inside a region")))
}

pub fn smatrix_global_direct(mp: &ModeProblem) -> Result<Mat2> {
    GlobalConnection::new(mp)?.smatrix()
}

/// M⁻¹·diag(1, s₋(−σ))·S0·diag(1, s₊(σ))·M.
pub fn smatrix_global_product(mp: &ModeProblem) -> Result<Mat2> {
    let s_plus = smatrix_hyperbolic(mp, Region::XPlus, SigmaSign::Plus)?;
    let s_minus_rev = smatrix_hyperbolic(mp, Region::XMinus, SigmaSign::Minus)?;
    let s0 = smatrix_desitter_backward(mp)?;
    assemble_product(mp.sigma, s_plus, s_minus_rev, &s0)
}

pub fn assemble_product(sigma: Complex64, s_plus: Complex64, s_minus_rev: Complex64, s0: &Mat2) -> Result<Mat2> {
    let m = desitter_matrix(sigma);
    let inv = mat2_inv(&m).ok_or(Error::IntegerDegeneracy { distance: 0.0, margin: DEFAULT_MARGIN })?;
    let right = mat2_mul(&diag2(re(1.0), s_plus), &m);
    let mid = mat2_mul(s0, &right);
    Ok(mat2_mul(&inv, &mat2_mul(&diag2(re(1.0), s_minus_rev), &mid)))
}

/// Floor, as a fraction of the largest entry of either matrix, for the
/// denominator of the entrywise comparison. Both computations carry absolute
/// errors near 1e−13 of the largest entry, which the M(σ) split spreads over
/// all four entries, so entries far below the matrix scale cannot be resolved
/// relatively.
pub const ENTRY_FLOOR: f64 = 1e-4;

/// Largest entrywise |a − b| / max(|a|, |b|, ENTRY_FLOOR·max entry).
pub fn entrywise_deviation(a: &Mat2, b: &Mat2) -> f64 {
    let top = (0..4).map(|k| a[k / 2][k % 2].norm().max(b[k / 2][k % 2].norm())).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let scale = a[i][j].norm().max(b[i][j].norm()).max(ENTRY_FLOOR * top);
            if scale > 0.0 {
                worst = worst.max((a[i][j] - b[i][j]).norm() / scale);
            }
        }
    }
    worst
}

/// Scattering data of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeScattering {
    pub s_plus: Complex64,
    pub s_minus_rev: Complex64,
    pub s0: Mat2,
    pub s_global_direct: Mat2,
    pub s_global_product: Mat2,
    pub residual: f64,
}

pub fn mode_scattering(mp: &ModeProblem) -> Result<ModeScattering> {
    let s_plus = smatrix_hyperbolic(mp, Region::XPlus, SigmaSign::Plus)?;
    let s_minus_rev = smatrix_hyperbolic(mp, Region::XMinus, SigmaSign::Minus)?;
    let s0 = smatrix_desitter_backward(mp)?;
    let product = assemble_product(mp.sigma, s_plus, s_minus_rev, &s0)?;
    let direct = smatrix_global_direct(mp)?;
    let residual = entrywise_deviation(&direct, &product);
    Ok(ModeScattering { s_plus, s_minus_rev, s0, s_global_direct: direct, s_global_product: product, residual })
}

/// Serialized record of one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringReport {
    pub n: usize,
    pub ell: usize,
    pub sigma: [f64; 2],
    pub profile: String,
    pub s_plus: [f64; 2],
    pub s_minus_rev: [f64; 2],
    #[serde(rename = "S0")]
    pub s0: [[[f64; 2]; 2]; 2],
    #[serde(rename = "S_direct")]
    pub s_direct: [[[f64; 2]; 2]; 2],
    #[serde(rename = "S_product")]
    pub s_product: [[[f64; 2]; 2]; 2],
    pub residual: f64,
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

fn mat_pairs(m: &Mat2) -> [[[f64; 2]; 2]; 2] {
    [[pair(m[0][0]), pair(m[0][1])], [pair(m[1][0]), pair(m[1][1])]]
}

impl ScatteringReport {
    pub fn new(mp: &ModeProblem, ms: &ModeScattering) -> Self {
        Self {
            n: mp.n,
            ell: mp.ell,
            sigma: pair(mp.sigma),
            profile: mp.profile.label(),
            s_plus: pair(ms.s_plus),
            s_minus_rev: pair(ms.s_minus_rev),
            s0: mat_pairs(&ms.s0),
            s_direct: mat_pairs(&ms.s_global_direct),
            s_product: mat_pairs(&ms.s_global_product),
            residual: ms.residual,
        }
    }

    pub const CSV_HEADER: &'static str = "n,ell,sigma_re,sigma_im,profile,s_plus_re,s_plus_im,s_minus_rev_re,s_minus_rev_im,\
S0_00_re,S0_00_im,S0_01_re,S0_01_im,S0_10_re,S0_10_im,S0_11_re,S0_11_im,\
S_direct_00_re,S_direct_00_im,S_direct_01_re,S_direct_01_im,S_direct_10_re,S_direct_10_im,S_direct_11_re,S_direct_11_im,\
S_product_00_re,S_product_00_im,S_product_01_re,S_product_01_im,S_product_10_re,S_product_10_im,S_product_11_re,S_product_11_im,residual";

    /// One CSV row in the column order of [`Self::CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let mut cols = vec![self.n.to_string(), self.ell.to_string(), fmt17(self.sigma[0]), fmt17(self.sigma[1])];
        cols.push(format!("\"{}\"", self.profile));
        for p in [self.s_plus, self.s_minus_rev] {
            cols.extend(p.iter().map(|v| fmt17(*v)));
        }
        for m in [&self.s0, &self.s_direct, &self.s_product] {
            for row in m.iter() {
                for p in row.iter() {
                    cols.extend(p.iter().map(|v| fmt17(*v)));
                }
            }
        }
        cols.push(fmt17(self.residual));
        cols.join(",")
    }
}

/// Seventeen significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Which Poisson operator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoissonKind {
    /// Cap X₊ at σ; datum: coefficient of x^{h+iσ}.
    XPlus,
    /// Cap X₋ at −σ; datum: coefficient of x^{h−iσ}.
    XMinusReversed,
    /// Belt, data (singular, smooth) at π/4.
    XZeroBackward,
    /// Global backward operator, data (b₊, b₋), conjugated picture.
    GlobalBackward,
}

/// A prepared Poisson solution.
#[derive(Debug, Clone)]
pub enum PoissonSolution {
    Region(RegionSolution),
    Global(Box<GlobalPoisson>),
}

impl PoissonSolution {
    pub fn new(mp: &ModeProblem, which: PoissonKind, data: [Complex64; 2]) -> Result<Self> {
        mp.sp().check_margin(DEFAULT_MARGIN)?;
        match which {
            PoissonKind::XPlus | PoissonKind::XMinusReversed => {
                let (region, sign) = if which == PoissonKind::XPlus {
                    (Region::XPlus, SigmaSign::Plus)
                } else {
                    (Region::XMinus, SigmaSign::Minus)
                };
                let op = ModeOperator::from_problem(&signed(mp, sign), OperatorKind::Cap);
                let cap = cap_solution(&op, region)?;
                if cap.data.coeff_singular.norm() <= POLE_TOL * cap.data.coeff_smooth.norm() {
                    return Err(Error::ResolventPole { value: cap.data.coeff_singular.norm() });
                }
                Ok(Self::Region(scaled(&cap.solution, data[0] / cap.data.coeff_singular)))
            }
            PoissonKind::XZeroBackward => {
                let op = ModeOperator::from_problem(mp, OperatorKind::Belt);
                let b_in = frobenius_at(&op, Chart::belt(FRAC_PI_4), HANDOFF_RADIUS)?;
                let b_out = frobenius_at(&op, Chart::belt(3.0 * FRAC_PI_4), HANDOFF_RADIUS)?;
                let first = Anchor::new(b_in, data.to_vec(), 1.0);
                let (out, _) = transport(&op, first.launch(), &b_out, 1.0, None)?;
                let second = Anchor::new(b_out, vec![out.coeff_singular, out.coeff_smooth], 1.0);
                Ok(Self::Region(RegionSolution::from_anchors(op, vec![first, second])))
            }
            PoissonKind::GlobalBackward => Ok(Self::Global(Box::new(GlobalConnection::new(mp)?.poisson(data)?))),
        }
    }

    pub fn eval(&self, theta: f64) -> Result<Complex64> {
        match self {
            Self::Region(s) => s.eval(theta),
            Self::Global(g) => g.eval(theta),
        }
    }
}

pub fn poisson_eval(mp: &ModeProblem, which: PoissonKind, data: [Complex64; 2], theta: f64) -> Result<Complex64> {
    let region = region_of(theta)?;
    let expected = match which {
        PoissonKind::XPlus => Some(Region::XPlus),
        PoissonKind::XMinusReversed => Some(Region::XMinus),
        PoissonKind::XZeroBackward => Some(Region::XZero),
        PoissonKind::GlobalBackward => None,
    };
    if expected.is_some_and(|r| r != region) {
        return Err(Error::InvalidInput(format!("theta = {theta} is outside the operator's region")));
    }
    PoissonSolution::new(mp, which, data)?.eval(theta)
}

/// x^{h−iσ} with x = |μ|^{1/2}: multiplies a conjugated-picture value into
/// the constituent picture.
pub fn conjugation_factor(n: usize, sigma: Complex64, theta: f64) -> Complex64 {
    let k = re((n as f64 - 1.0) / 2.0) - Complex64::i() * sigma;
    re((2.0 * theta).cos().abs()).powc(k / 2.0)
}

/// Taylor coefficients in μ at Y₊ of the smooth coefficient function of a
/// Poisson solution, from the cap side and from the belt side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaylorMatch {
    /// smooth coefficient of the cap solution times the cap smooth series in μ
    pub from_cap: Vec<Complex64>,
    /// refitted belt smooth coefficient times the belt smooth series in ν = −μ,
    /// rewritten in μ (odd coefficients change sign)
    pub from_belt: Vec<Complex64>,
    /// global smooth coefficient times the global smooth series
    pub from_global: Vec<Complex64>,
    pub max_rel: f64,
}

/// Compares the two smooth parts at Y₊ for global data (b₊, b₋).
///
/// The belt coefficient is not taken from the launch data: the belt solution
/// is transported to Y₋, relaunched from its coordinates there and fitted
/// again at Y₊.
pub fn taylor_matching(mp: &ModeProblem, data: [Complex64; 2], count: usize) -> Result<TaylorMatch> {
    mp.sp().check_margin(DEFAULT_MARGIN)?;
    let cap_op = ModeOperator::from_problem(mp, OperatorKind::Cap);
    let cap = cap_solution(&cap_op, Region::XPlus)?;
    let cap_basis = &cap.solution.anchors[1].basis;
    let datum = data[0] + data[1];
    let q_cap = datum * smooth_over_singular(&cap.data)?;

    let belt_op = ModeOperator::from_problem(mp, OperatorKind::Belt);
    let b_in = frobenius_at(&belt_op, Chart::belt(FRAC_PI_4), HANDOFF_RADIUS)?;
    let b_out = frobenius_at(&belt_op, Chart::belt(3.0 * FRAC_PI_4), HANDOFF_RADIUS)?;
    let sing = mat2_apply(&desitter_matrix(mp.sigma), data)[0];
    let (out, _) = transport(&belt_op, launch(&b_in, &[sing, q_cap], None, 1.0), &b_out, 1.0, None)?;
    let (back, _) = transport(&belt_op, launch(&b_out, &[out.coeff_singular, out.coeff_smooth], None, 1.0), &b_in, 1.0, None)?;

    let g = GlobalConnection::new(mp)?;
    let q_glob = datum * g.s_plus()?;

    let coeff = |b: &crate::odeconnect::FrobeniusBasis, k: usize| b.smooth().coeffs.get(k).copied().unwrap_or_default();
    let from_cap: Vec<Complex64> = (0..count).map(|k| q_cap * coeff(cap_basis, k)).collect();
    let from_belt: Vec<Complex64> = (0..count).map(|k| back.coeff_smooth * coeff(&b_in, k) * if k % 2 == 1 { -1.0 } else { 1.0 }).collect();
    let from_global: Vec<Complex64> = (0..count).map(|k| q_glob * coeff(&g.y_plus, k)).collect();
    let mut max_rel: f64 = 0.0;
    for k in 0..count {
        for other in [from_belt[k], from_global[k]] {
            let scale = from_cap[k].norm().max(other.norm());
            if scale > 0.0 {
                max_rel = max_rel.max((from_cap[k] - other).norm() / scale);
            }
        }
    }
    Ok(TaylorMatch { from_cap, from_belt, from_global, max_rel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RadialProfile;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn desitter_matrix_at_one() {
        let m = desitter_matrix(c(1.0, 0.0));
        assert!((m[0][0].re - 0.0432139).abs() < 1e-7);
        assert!((m[0][1].re - 23.140693).abs() < 1e-6);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det.re + 23.097479).abs() < 1e-6);
    }

    #[test]
    fn closed_form_matches_gamma_quotient() {
        for (n, ell, s) in [(3, 0, c(0.7, 0.3)), (2, 4, c(-1.2, 0.5)), (4, 7, c(2.1, -0.8))] {
            let mp = ModeProblem::new(n, ell, s, RadialProfile::Exact).unwrap();
            let a = smatrix_closed_form(&mp, Region::XPlus).unwrap();
            let b = closed_form_gamma_quotient(n, ell, s).unwrap();
            assert!((a - b).norm() < 1e-12 * b.norm(), "{a} {b}");
        }
    }

    #[test]
    fn light_cone_data_round_trip() {
        let s = c(0.4, -0.2);
        let lc = LightConeData { a_plus: c(1.0, 2.0), a_minus: c(-0.5, 0.1), smooth: c(0.0, 0.0) };
        let back = LightConeData::from_sides(s, lc.belt_singular(s), lc.cap_singular(), lc.smooth).unwrap();
        assert!((back.a_plus - lc.a_plus).norm() < 1e-13 && (back.a_minus - lc.a_minus).norm() < 1e-13);
    }

    #[test]
    fn numeric_cap_matches_closed_form() {
        for (n, ell, s) in [(3, 0, c(0.7, 0.3)), (2, 2, c(-1.2, 0.5)), (4, 5, c(2.1, -0.8)), (3, 12, c(0.3, -2.5))] {
            let mp = ModeProblem::new(n, ell, s, RadialProfile::Exact).unwrap();
            let num = smatrix_hyperbolic(&mp, Region::XPlus, SigmaSign::Plus).unwrap();
            let exact = closed_form_gamma_quotient(n, ell, s).unwrap();
            assert!((num - exact).norm() < 1e-10 * exact.norm(), "{n} {ell} {s}: {num} {exact}");
        }
    }

    #[test]
    fn direct_matches_product() {
        for (n, ell, s, f) in [
            (3, 0, c(0.7, 0.3), RadialProfile::Exact),
            (2, 3, c(-1.1, -0.6), RadialProfile::Bump { epsilon: 0.1 }),
            (4, 6, c(2.2, 0.4), RadialProfile::Bump { epsilon: 0.1 }),
        ] {
            let mp = ModeProblem::new(n, ell, s, f).unwrap();
            let ms = mode_scattering(&mp).unwrap();
            assert!(ms.residual < 1e-8, "{n} {ell} {s}: {}", ms.residual);
        }
    }

    #[test]
    fn taylor_series_match_across_light_cone() {
        for (n, ell, sigma) in [(3, 2, c(0.7, 0.3)), (4, 5, c(-1.2, -0.4)), (2, 0, c(2.0, 0.5))] {
            let mp = ModeProblem::new(n, ell, sigma, RadialProfile::Bump { epsilon: 0.1 }).unwrap();
            let tm = taylor_matching(&mp, [c(1.0, 0.0), c(0.3, -0.2)], 6).unwrap();
            assert!(tm.max_rel < 1e-8, "n={n} ell={ell}: {}", tm.max_rel);
        }
    }

    #[test]
    fn sign_flip_swaps_desitter_exponents() {
        let a = ModeProblem::new(3, 4, c(0.8, 0.4), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let b = ModeProblem::new(3, 4, c(-0.8, -0.4), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let sa = smatrix_desitter_backward(&a).unwrap();
        let sb = smatrix_desitter_backward(&b).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let d = (sa[i][j] - sb[1 - i][1 - j]).norm();
                assert!(d < 1e-9 * (1.0 + sa[i][j].norm()), "{i}{j}: {d}");
            }
        }
    }

    #[test]
    fn desitter_transport_is_an_involution() {
        let mp = ModeProblem::new(2, 3, c(1.1, -0.6), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let s0 = smatrix_desitter_backward(&mp).unwrap();
        let sq = mat2_mul(&s0, &s0);
        assert!((sq[0][0] - c(1.0, 0.0)).norm() < 1e-9 && sq[0][1].norm() < 1e-9);
        assert!((sq[1][1] - c(1.0, 0.0)).norm() < 1e-9 && sq[1][0].norm() < 1e-9);
    }

    #[test]
    fn global_poisson_restricts_to_constituents() {
        let mp = ModeProblem::new(3, 2, c(0.9, 0.35), RadialProfile::Bump { epsilon: 0.1 }).unwrap();
        let b = [c(1.0, 0.2), c(-0.4, 0.5)];
        let g = GlobalConnection::new(&mp).unwrap();
        let gp = g.poisson(b).unwrap();
        let plus = PoissonSolution::new(&mp, PoissonKind::XPlus, [b[0] + b[1], c(0.0, 0.0)]).unwrap();
        let belt = PoissonSolution::new(&mp, PoissonKind::XZeroBackward, g.belt_launch(b).unwrap()).unwrap();
        let minus = PoissonSolution::new(&mp, PoissonKind::XMinusReversed, [gp.y_minus.smooth, c(0.0, 0.0)]).unwrap();
        for (theta, piece) in [(0.3, &plus), (0.6, &plus), (1.0, &belt), (1.5, &belt), (2.1, &belt), (2.5, &minus), (2.9, &minus)] {
            let want = gp.eval(theta).unwrap() * conjugation_factor(3, mp.sigma, theta);
            let got = piece.eval(theta).unwrap();
            assert!((want - got).norm() < 1e-9 * (1.0 + want.norm()), "theta={theta}: {want} vs {got}");
        }
        let zero = g.poisson([c(0.0, 0.0); 2]).unwrap();
        assert_eq!(zero.eval(1.2).unwrap(), c(0.0, 0.0));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn cap_scalar_matches_gamma_quotient_and_inverts(
                n in 2usize..=4, ell in 0usize..=12, re in -3.0f64..3.0, im in -3.0f64..3.0,
            ) {
                let s = c(re, im);
                prop_assume!(crate::model::SpectralPoint::new(s, n).margin() >= 0.05);
                let q = closed_form_gamma_quotient(n, ell, s).unwrap();
                let back = closed_form_gamma_quotient(n, ell, -s).unwrap();
                prop_assert!((q * back - 1.0).norm() < 1e-12);
                let mp = ModeProblem::new(n, ell, s, RadialProfile::Exact).unwrap();
                let num = smatrix_hyperbolic(&mp, Region::XPlus, SigmaSign::Plus).unwrap();
                prop_assert!((num - q).norm() < 1e-10 * q.norm(), "{} vs {}", num, q);
            }
        }
    }
}
