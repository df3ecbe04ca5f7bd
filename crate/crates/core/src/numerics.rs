//! Dense complex linear algebra and scalar root finding.
//!
//! All matrices in this crate are small (at most a few dozen rows), so
//! everything here is dense and favours robustness over speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Channels whose condition number exceeds this are treated as unusable.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

/// Elementwise tolerance for treating a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real_matrix(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_iterator(rows, cols, data.iter().map(|&x| c(x, 0.0)))
}

pub fn diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(
        values.len(),
        values.iter().map(|&x| c(x, 0.0)),
    ))
}

/// Ratio of the extreme singular values; infinite for singular input.
pub fn condition_number(m: &CMatrix) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn invert(m: &CMatrix) -> Result<CMatrix> {
    invert_with_cap(m, DEFAULT_CONDITION_CAP)
}

pub fn invert_with_cap(m: &CMatrix, cap: f64) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let condition = condition_number(m);
    if !(condition <= cap) {
        return Err(Error::IllConditioned { condition });
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::IllConditioned { condition })
}

/// Largest elementwise deviation `|m_ij - conj(m_ji)|`.
pub fn max_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// The unitary factor of a QR decomposition of `m`.
pub fn unitary_from(m: &CMatrix) -> CMatrix {
    m.clone().qr().q()
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(m: &CMatrix) -> bool {
    m.is_square() && max_asymmetry(m) <= HERMITIAN_TOL * max_abs(m).max(1.0)
}

/// `(m + mᴴ)/2`, used to scrub rounding asymmetry.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm2(m: &CMatrix) -> f64 {
    let (vals, _) = hermitian_eigen(m);
    vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsdReport {
    pub is_psd: bool,
    pub min_eigenvalue: f64,
}

/// PSD test: smallest eigenvalue at least `-1e-9·‖m‖₂`.
pub fn psd_check(m: &CMatrix) -> Result<PsdReport> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let asymmetry = max_asymmetry(m);
    if asymmetry > HERMITIAN_TOL * max_abs(m).max(1.0) {
        return Err(Error::NotHermitian { asymmetry });
    }
    let (vals, _) = hermitian_eigen(m);
    let min = vals.first().copied().unwrap_or(0.0);
    let norm = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(PsdReport {
        is_psd: min >= -1e-9 * norm,
        min_eigenvalue: min,
    })
}

/// `aᴴ S a`.
pub fn quad_form(s: &CMatrix, a: &CVector) -> Complex64 {
    a.dotc(&(s * a))
}

/// Real part of `aᴴ S a` for Hermitian `S`.
pub fn hermitian_quad(s: &CMatrix, a: &CVector) -> f64 {
    quad_form(s, a).re
}

/// Coefficients of `c4 x⁴ + c3 x³ + c2 x² + c1 x + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticCoefficients {
    pub c4: f64,
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl QuarticCoefficients {
    pub fn new(c4: f64, c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        Self { c4, c3, c2, c1, c0 }
    }

    /// Highest degree first.
    pub fn as_array(&self) -> [f64; 5] {
        [self.c4, self.c3, self.c2, self.c1, self.c0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.as_array().iter().fold(0.0, |acc, &ci| acc * x + ci)
    }

    fn derivative(&self, x: f64) -> f64 {
        ((4.0 * self.c4 * x + 3.0 * self.c3) * x + 2.0 * self.c2) * x + self.c1
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.as_array().iter().fold(0.0_f64, |a, c| a.max(c.abs()))
    }

    /// All real roots in descending order.
    ///
    /// Roots come from the eigenvalues of the companion matrix. An eigenvalue is
    /// accepted as real when its imaginary part is at most `1e-8·(1+|re|)`, or
    /// when the polynomial residual at its real part is within `1e-8·max|cᵢ|`
    /// (this catches double roots that the eigensolver splits into a
    /// conjugate pair). Accepted roots get a few guarded Newton steps.
    pub fn real_roots(&self) -> Result<Vec<f64>> {
        let coeffs = self.as_array();
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NoRealRoot);
        }
        let scale = self.max_abs_coefficient();
        if scale == 0.0 {
            return Err(Error::NoRealRoot);
        }
        let lead = coeffs
            .iter()
            .position(|c| c.abs() > 1e-13 * scale)
            .ok_or(Error::NoRealRoot)?;
        let poly = &coeffs[lead..];
        let degree = poly.len() - 1;
        if degree == 0 {
            return Err(Error::NoRealRoot);
        }

        let candidates: Vec<Complex64> = if degree == 1 {
            vec![c(-poly[1] / poly[0], 0.0)]
        } else {
            aberth_roots(poly)
        };

        let tol = 1e-8 * scale;
        let mut roots = Vec::new();
        for z in candidates {
            let re = z.re;
            let near_real = z.im.abs() <= 1e-8 * (1.0 + re.abs());
            let residual_ok = self.eval(re).abs() <= tol;
            if !(near_real || (z.im.abs() <= 1e-4 * (1.0 + re.abs()) && residual_ok)) {
                continue;
            }
            let root = self.polish(re);
            if self.eval(root).abs() <= tol || near_real {
                roots.push(root);
            }
        }
        if roots.is_empty() {
            return Err(Error::NoRealRoot);
        }
        roots.sort_by(|a, b| b.total_cmp(a));
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + a.abs()));
        Ok(roots)
    }

    fn polish(&self, mut x: f64) -> f64 {
        let mut best = self.eval(x).abs();
        for _ in 0..8 {
            let d = self.derivative(x);
            if d == 0.0 || !d.is_finite() {
                break;
            }
            let next = x - self.eval(x) / d;
            let r = self.eval(next).abs();
            if !(r < best) {
                break;
            }
            best = r;
            x = next;
        }
        x
    }
}

/// The largest real root of the quartic.
pub fn largest_real_root(q: &QuarticCoefficients) -> Result<f64> {
    q.real_roots().map(|r| r[0])
}

/// All complex roots of `poly[0]·xᵈ + … + poly[d]` by Aberth–Ehrlich
/// iteration.
fn aberth_roots(poly: &[f64]) -> Vec<Complex64> {
    let degree = poly.len() - 1;
    let monic: Vec<f64> = poly.iter().map(|v| v / poly[0]).collect();
    let eval = |z: Complex64| -> (Complex64, Complex64) {
        let mut p = c(monic[0], 0.0);
        let mut dp = c(0.0, 0.0);
        for &coef in &monic[1..] {
            dp = dp * z + p;
            p = p * z + coef;
        }
        (p, dp)
    };
    // Cauchy bound for the initial circle.
    let radius = 1.0 + monic[1..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(0.5 * radius, 0.4 + std::f64::consts::TAU * k as f64 / degree as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for k in 0..degree {
            let (p, dp) = eval(z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != k)
                .map(|j| {
                    let d = z[k] - z[j];
                    if d.norm() == 0.0 {
                        c(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let step = ratio / (c(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Sign-bracketed root of a scalar function: `positive` has `f > 0`,
/// `negative` has `f ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub positive: f64,
    pub negative: f64,
    pub iterations: usize,
}

/// Brent's method on `[lo, hi]` given `f(lo) > 0 ≥ f(hi)` (either order).
/// Stops once the bracket is narrower than `xtol` or `max_iter` is reached;
/// errors from `f` abort the search.
pub fn brent_root<E>(
    mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    lo: f64,
    f_lo: f64,
    hi: f64,
    f_hi: f64,
    xtol: f64,
    max_iter: usize,
) -> std::result::Result<Bracket, E> {
    let (mut a, mut fa, mut b, mut fb) = (lo, f_lo, hi, f_hi);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    let mut iterations = 0;
    let finish = |b: f64, fb: f64, c: f64, iterations: usize| {
        let (positive, negative) = if fb > 0.0 { (b, c) } else { (c, b) };
        Bracket {
            positive,
            negative,
            iterations,
        }
    };
    while iterations < max_iter {
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            break;
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                (2.0 * m * s, 1.0 - s)
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0)),
                    (qa - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b)?;
        iterations += 1;
    }
    if (fb > 0.0) == (fc > 0.0) {
        c = a;
    }
    Ok(finish(b, fb, c, iterations))
}
