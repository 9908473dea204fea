//! Small dense complex linear algebra.

use num_complex::Complex64;

pub type Mat2 = [[Complex64; 2]; 2];

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_det(a: &Mat2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

pub fn mat2_inv(a: &Mat2) -> Option<Mat2> {
    let d = mat2_det(a);
    if d.norm() == 0.0 || !d.is_finite() {
        return None;
    }
    Some([[a[1][1] / d, -a[0][1] / d], [-a[1][0] / d, a[0][0] / d]])
}

pub fn mat2_apply(a: &Mat2, v: [Complex64; 2]) -> [Complex64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

pub fn diag2(a: Complex64, b: Complex64) -> Mat2 {
    [[a, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), b]]
}

/// Gaussian elimination with partial pivoting. Returns the solution, the
/// determinant and the smallest pivot relative to the largest row scale.
pub fn solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> (Vec<Complex64>, Complex64, f64) {
    let n = b.len();
    let scale = a
        .iter()
        .map(|row| row.iter().map(|v| v.norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let mut det = Complex64::new(1.0, 0.0);
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().partial_cmp(&a[j][col].norm()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if piv != col {
            a.swap(piv, col);
            b.swap(piv, col);
            det = -det;
        }
        let p = a[col][col];
        det *= p;
        min_pivot = min_pivot.min(p.norm() / scale);
        if p.norm() == 0.0 {
            return (vec![Complex64::new(f64::NAN, f64::NAN); n], Complex64::new(0.0, 0.0), 0.0);
        }
        for row in col + 1..n {
            let f = a[row][col] / p;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let mut acc = b[i];
        for k in i + 1..n {
            acc -= a[i][k] * x[k];
        }
        x[i] = acc / a[i][i];
    }
    (x, det, min_pivot)
}

/// Least-squares fit of `rhs` by two columns. Columns are normalized before a
/// twice-orthogonalized QR; the returned condition number is that of the
/// normalized column pair.
pub fn lstsq2(cols: [&[Complex64]; 2], rhs: &[Complex64]) -> ([Complex64; 2], f64, f64) {
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let dot = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let n0 = norm(cols[0]);
    let n1 = norm(cols[1]);
    let q0: Vec<Complex64> = cols[0].iter().map(|v| v / n0).collect();
    let mut v: Vec<Complex64> = cols[1].iter().map(|x| x / n1).collect();
    let mut r01 = Complex64::new(0.0, 0.0);
    for _ in 0..2 {
        let d = dot(&q0, &v);
        r01 += d;
        for (vi, qi) in v.iter_mut().zip(&q0) {
            *vi -= d * qi;
        }
    }
    let r11 = norm(&v);
    let q1: Vec<Complex64> = v.iter().map(|x| x / r11).collect();
    let b0 = dot(&q0, rhs);
    let b1 = dot(&q1, rhs);
    let x1 = b1 / r11;
    let x0 = b0 - r01 * x1;
    // singular values of [[1, r01], [0, r11]]
    let t = 1.0 + r01.norm_sqr() + r11 * r11;
    let d = r11;
    let disc = (t * t - 4.0 * d * d).max(0.0).sqrt();
    let smax = ((t + disc) / 2.0).sqrt();
    let smin = (2.0 * d * d / (t + disc)).sqrt();
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    let coeffs = [x0 / n0, x1 / n1];
    let resid: f64 = rhs
        .iter()
        .enumerate()
        .map(|(i, r)| (r - coeffs[0] * cols[0][i] - coeffs[1] * cols[1][i]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let rn = norm(rhs).max(f64::MIN_POSITIVE);
    (coeffs, cond, resid / rn)
}

/// Least-squares solution of Σ_j x_j·cols[j] ≈ rhs by modified Gram–Schmidt
/// with one reorthogonalization pass. Returns the coefficients and the
/// relative residual.
pub fn lstsq(cols: &[Vec<Complex64>], rhs: &[Complex64]) -> (Vec<Complex64>, f64) {
    let m = cols.len();
    let dot = |u: &[Complex64], v: &[Complex64]| u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let norm = |v: &[Complex64]| v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let scales: Vec<f64> = cols.iter().map(|c| norm(c).max(f64::MIN_POSITIVE)).collect();
    let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(m);
    let mut r = vec![vec![Complex64::new(0.0, 0.0); m]; m];
    for j in 0..m {
        let mut v: Vec<Complex64> = cols[j].iter().map(|x| x / scales[j]).collect();
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let d = dot(qi, &v);
                r[i][j] += d;
                for (vk, qk) in v.iter_mut().zip(qi) {
                    *vk -= d * qk;
                }
            }
        }
        let nv = norm(&v);
        r[j][j] = Complex64::new(nv, 0.0);
        q.push(v.iter().map(|x| x / nv).collect());
    }
    let b: Vec<Complex64> = q.iter().map(|qi| dot(qi, rhs)).collect();
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    for i in (0..m).rev() {
        let mut acc = b[i];
        for k in i + 1..m {
            acc -= r[i][k] * x[k];
        }
        x[i] = acc / r[i][i];
    }
    for (xi, s) in x.iter_mut().zip(&scales) {
        *xi /= s;
    }
    let resid: f64 = rhs
        .iter()
        .enumerate()
        .map(|(k, v)| (v - cols.iter().zip(&x).map(|(c, xi)| c[k] * xi).sum::<Complex64>()).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (x, resid / norm(rhs).max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_small_system() {
        let a = vec![vec![c(2.0, 0.0), c(1.0, 1.0)], vec![c(0.0, 1.0), c(3.0, 0.0)]];
        let x = vec![c(1.0, -1.0), c(0.5, 2.0)];
        let b: Vec<Complex64> = a.iter().map(|r| r[0] * x[0] + r[1] * x[1]).collect();
        let (y, det, _) = solve(a.clone(), b);
        assert!((y[0] - x[0]).norm() < 1e-14 && (y[1] - x[1]).norm() < 1e-14);
        assert!((det - mat2_det(&[[a[0][0], a[0][1]], [a[1][0], a[1][1]]])).norm() < 1e-14);
    }

    #[test]
    fn lstsq_exact_fit() {
        let c0: Vec<Complex64> = (0..8).map(|i| c(1.0 + i as f64, 0.5)).collect();
        let c1: Vec<Complex64> = (0..8).map(|i| c((i as f64).sin(), i as f64 * 0.1)).collect();
        let rhs: Vec<Complex64> = (0..8).map(|i| c0[i] * c(2.0, -1.0) + c1[i] * c(0.3, 0.7)).collect();
        let (x, cond, res) = lstsq2([&c0, &c1], &rhs);
        assert!((x[0] - c(2.0, -1.0)).norm() < 1e-13);
        assert!((x[1] - c(0.3, 0.7)).norm() < 1e-13);
        assert!(cond >= 1.0 && res < 1e-14);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = [[c(1.0, 2.0), c(0.3, 0.0)], [c(-1.0, 0.5), c(2.0, -1.0)]];
        let p = mat2_mul(&a, &mat2_inv(&a).unwrap());
        assert!((p[0][0] - c(1.0, 0.0)).norm() < 1e-15 && p[0][1].norm() < 1e-15);
    }

    #[test]
    fn lstsq_polynomial_fit() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let cols: Vec<Vec<Complex64>> = (0..4).map(|k| xs.iter().map(|x| c(x.powi(k), 0.0)).collect()).collect();
        let rhs: Vec<Complex64> = xs.iter().map(|x| c(1.0 - 2.0 * x + 0.5 * x * x * x, x * x)).collect();
        let (coef, res) = lstsq(&cols, &rhs);
        assert!(res < 1e-14);
        assert!((coef[0] - c(1.0, 0.0)).norm() < 1e-12 && (coef[2] - c(0.0, 1.0)).norm() < 1e-12);
    }
}
