//! Real-coefficient polynomials and their roots.
//!
//! Coefficients are stored in ascending degree order. Roots are found as the
//! eigenvalues of the balanced companion matrix (Francis double-shift QR),
//! followed by a Newton polish of each root.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairing tolerance for conjugate roots, relative to `1 + |r|`.
pub const CONJUGATE_TOL: f64 = 1e-9;

/// Bound on the normalized residual of a polished root.
pub const POLISH_TOL: f64 = 1e-9;

const MAX_DEGREE: usize = 16;
const QR_MAX_ITERATIONS: usize = 60;
const NEWTON_STEPS: usize = 8;

/// Real polynomial, coefficients in ascending degree order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPolynomial {
    coeffs: Vec<f64>,
}

/// Multiset of complex roots, closed under conjugation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RootSet(Vec<Complex64>);

/// A real linear or quadratic factor produced by pairing conjugate roots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum RealFactor {
    /// `x - r`
    Linear(f64),
    /// `x^2 - 2 Re(r) x + |r|^2`, stored as the root with positive imaginary part.
    Quadratic(Complex64),
}

impl RootSet {
    /// Builds a root set, checking closure under conjugation.
    pub fn new(roots: Vec<Complex64>) -> Result<Self> {
        pair_conjugates(&roots)?;
        Ok(Self(roots))
    }

    /// Wraps roots already known to be conjugate-closed.
    pub(crate) fn new_unchecked(roots: Vec<Complex64>) -> Self {
        Self(roots)
    }

    pub fn from_real(roots: &[f64]) -> Self {
        Self(roots.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    /// `count` copies of the real root `b`.
    pub fn repeated(b: f64, count: usize) -> Self {
        Self(vec![Complex64::new(b, 0.0); count])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.0.iter()
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.0
    }

    /// Returns `Some(b)` when every root equals the same real value `b`.
    pub fn common_real_root(&self) -> Option<f64> {
        let first = *self.0.first()?;
        if first.im != 0.0 {
            return None;
        }
        self.0.iter().all(|r| *r == first).then_some(first.re)
    }

    /// Sorts by descending imaginary part, then ascending real part.
    pub fn sorted(mut self) -> Self {
        self.0.sort_by(|a, b| {
            b.im.partial_cmp(&a.im)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.re.partial_cmp(&b.re).unwrap_or(std::cmp::Ordering::Equal))
        });
        self
    }
}

/// Groups a root multiset into real linear and quadratic factors.
pub(crate) fn pair_conjugates(roots: &[Complex64]) -> Result<Vec<RealFactor>> {
    let mut used = vec![false; roots.len()];
    let mut factors = Vec::with_capacity(roots.len());
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        let r = roots[i];
        if !(r.re.is_finite() && r.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite root {r}")));
        }
        used[i] = true;
        let tol = CONJUGATE_TOL * (1.0 + r.norm());
        if 2.0 * r.im.abs() < tol {
            factors.push(RealFactor::Linear(r.re));
            continue;
        }
        // nearest unused partner whose conjugate lies within tolerance
        let partner = (i + 1..roots.len())
            .filter(|&j| !used[j])
            .map(|j| (j, (r - roots[j].conj()).norm()))
            .filter(|&(_, dist)| dist < tol)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match partner {
            Some((j, _)) => {
                used[j] = true;
                let avg = (r + roots[j].conj()) * 0.5;
                let upper = if avg.im > 0.0 { avg } else { avg.conj() };
                factors.push(RealFactor::Quadratic(upper));
            }
            None => return Err(Error::NotConjugateClosed { re: r.re, im: r.im }),
        }
    }
    Ok(factors)
}

impl RealPolynomial {
    /// Wraps ascending coefficients; rejects non-finite entries and an empty list.
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "polynomial needs at least one coefficient".into(),
            ));
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite coefficient {c}"
            )));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().expect("non-empty")
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, x: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    /// `|p(x)|` divided by `sum |c_j| |x|^j`: the relative backward error of `x` as a root.
    pub fn normalized_residual(&self, x: Complex64) -> f64 {
        let ax = x.norm();
        let scale = self
            .coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * ax + c.abs());
        if scale == 0.0 {
            return 0.0;
        }
        self.eval_complex(x).norm() / scale
    }

    fn mul_factor(&mut self, factor: &[f64]) {
        let mut out = vec![0.0; self.coeffs.len() + factor.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in factor.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        self.coeffs = out;
    }

    /// Monic polynomial with the given roots.
    ///
    /// Conjugate pairs are multiplied as real quadratic factors, so the result has no
    /// imaginary residue to drop. When every root is the same real value the
    /// coefficients come straight from the binomial expansion of `(x - b)^n`.
    pub fn from_roots(roots: &RootSet) -> Result<Self> {
        if let Some(b) = roots.common_real_root() {
            return Ok(Self::binomial(b, roots.len()));
        }
        let factors = pair_conjugates(roots.as_slice())?;
        let mut p = Self { coeffs: vec![1.0] };
        for f in factors {
            match f {
                RealFactor::Linear(r) => p.mul_factor(&[-r, 1.0]),
                RealFactor::Quadratic(r) => p.mul_factor(&[r.norm_sqr(), -2.0 * r.re, 1.0]),
            }
        }
        Ok(p)
    }

    /// Coefficients of `(x - b)^n`.
    pub fn binomial(b: f64, n: usize) -> Self {
        let mut binom = 1.0;
        let coeffs = (0..=n)
            .map(|j| {
                // coefficient of x^j is C(n, j) (-b)^(n-j)
                let c = binom * (-b).powi((n - j) as i32);
                binom = binom * (n - j) as f64 / (j + 1) as f64;
                c
            })
            .collect();
        Self { coeffs }
    }

    /// The characteristic polynomial of the homogeneous differentiator error matrix,
    /// `b^{m+1} + sum_j lambda_j L^{(m+1-j)/(m+1)} b^j`.
    pub fn homogeneous_char_poly(lambda: &[f64], lipschitz: f64, m: usize) -> Result<Self> {
        if lambda.len() != m + 1 {
            return Err(Error::DimensionMismatch(format!(
                "expected {} gains for m = {m}, got {}",
                m + 1,
                lambda.len()
            )));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "L must be positive, got {lipschitz}"
            )));
        }
        if let Some(g) = lambda.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "gains must be positive, got {g}"
            )));
        }
        let order = (m + 1) as f64;
        let mut coeffs: Vec<f64> = lambda
            .iter()
            .enumerate()
            .map(|(j, &g)| g * lipschitz.powf((m + 1 - j) as f64 / order))
            .collect();
        coeffs.push(1.0);
        Ok(Self { coeffs })
    }

    /// All roots of a monic polynomial, polished and conjugate-closed.
    pub fn roots(&self) -> Result<RootSet> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::InvalidParameter("degree must be at least 1".into()));
        }
        if n > MAX_DEGREE {
            return Err(Error::InvalidParameter(format!(
                "degree {n} exceeds {MAX_DEGREE}"
            )));
        }
        if !self.is_monic() {
            return Err(Error::InvalidParameter("polynomial must be monic".into()));
        }
        let mut companion = DMatrix::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            companion[(i, n - 1)] = -self.coeffs[i];
        }
        balance(&mut companion);
        let raw = hessenberg_eigenvalues(companion)?;

        let mut roots = Vec::with_capacity(n);
        let mut i = 0;
        while i < raw.len() {
            let r = raw[i];
            if r.im == 0.0 {
                roots.push(Complex64::new(self.polish_real(r.re), 0.0));
                i += 1;
            } else {
                // QR emits conjugate pairs adjacently
                let upper = if r.im > 0.0 { r } else { r.conj() };
                let polished = self.polish_complex(upper);
                roots.push(polished);
                roots.push(polished.conj());
                i += 2;
            }
        }
        for r in &roots {
            let residual = self.normalized_residual(*r);
            if !(residual < POLISH_TOL) {
                return Err(Error::ConvergenceFailure {
                    re: r.re,
                    im: r.im,
                    residual,
                });
            }
        }
        Ok(RootSet(roots))
    }

    fn polish_real(&self, mut x: f64) -> f64 {
        let mut best = self.eval(x).abs();
        for _ in 0..NEWTON_STEPS {
            let (p, dp) = self.eval_with_derivative(Complex64::new(x, 0.0));
            if dp.re == 0.0 || best == 0.0 {
                break;
            }
            let next = x - p.re / dp.re;
            let value = self.eval(next).abs();
            if !(value < best) {
                break;
            }
            x = next;
            best = value;
        }
        x
    }

    fn polish_complex(&self, mut x: Complex64) -> Complex64 {
        let mut best = self.eval_complex(x).norm();
        for _ in 0..NEWTON_STEPS {
            let (p, dp) = self.eval_with_derivative(x);
            if dp.norm() == 0.0 || best == 0.0 {
                break;
            }
            let next = x - p / dp;
            let value = self.eval_complex(next).norm();
            if !(value < best) {
                break;
            }
            x = next;
            best = value;
        }
        x
    }

    fn eval_with_derivative(&self, x: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        self.coeffs
            .iter()
            .rev()
            .fold((zero, zero), |(p, dp), &c| (p * x + c, dp * x + p))
    }

    /// `sum_j c_j M^j` given `powers[j] = M^j`.
    pub fn eval_at_matrix(&self, powers: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
        if powers.len() < self.coeffs.len() {
            return Err(Error::DimensionMismatch(format!(
                "need {} matrix powers, got {}",
                self.coeffs.len(),
                powers.len()
            )));
        }
        let dim = powers[0].nrows();
        if powers.iter().any(|p| p.nrows() != dim || p.ncols() != dim) {
            return Err(Error::DimensionMismatch("matrix powers are ragged".into()));
        }
        let mut out = DMatrix::zeros(dim, dim);
        for (c, m) in self.coeffs.iter().zip(powers) {
            out += m * *c;
        }
        Ok(out)
    }

    /// Characteristic polynomial `det(xI - M)` of a square matrix.
    ///
    /// The matrix is balanced and reduced to Hessenberg form first; the
    /// polynomial then follows from the Hessenberg determinant recurrence.
    pub fn characteristic(matrix: &DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(
                "characteristic polynomial of non-square matrix".into(),
            ));
        }
        let n = matrix.nrows();
        if n == 0 {
            return Ok(Self { coeffs: vec![1.0] });
        }
        let mut a = matrix.clone();
        balance(&mut a);
        let h = a.hessenberg().h();

        // polys[k] = characteristic polynomial of the leading k x k block
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..n {
            let prev = &polys[k];
            let mut next = vec![0.0; k + 2];
            for (i, &c) in prev.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= h[(k, k)] * c;
            }
            let mut sub = 1.0;
            for i in (0..k).rev() {
                sub *= h[(i + 1, i)];
                let coef = h[(i, k)] * sub;
                if coef != 0.0 {
                    for (j, &c) in polys[i].iter().enumerate() {
                        next[j] -= coef * c;
                    }
                }
            }
            polys.push(next);
        }
        Ok(Self {
            coeffs: polys.pop().expect("n >= 1"),
        })
    }
}

/// Eigenvalues of a square matrix: balancing, Hessenberg reduction and shifted QR.
pub fn matrix_eigenvalues(matrix: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    if !matrix.is_square() {
        return Err(Error::DimensionMismatch(
            "eigenvalues of non-square matrix".into(),
        ));
    }
    if matrix.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut a = matrix.clone();
    balance(&mut a);
    hessenberg_eigenvalues(a.hessenberg().h())
}

/// Parlett–Reinsch diagonal balancing in place (radix 2, exact in floating point).
pub fn balance(a: &mut DMatrix<f64>) {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut g = r / RADIX;
            let mut f = 1.0;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by the Francis double-shift QR iteration.
///
/// Complex eigenvalues come out as adjacent conjugate pairs.
#[allow(clippy::needless_range_loop)]
fn hessenberg_eigenvalues(h: DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = h.nrows();
    // 1-based working copy
    let mut a = vec![vec![0.0f64; n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = h[(i, j)];
        }
    }
    let mut wr = vec![0.0; n + 1];
    let mut wi = vec![0.0; n + 1];

    let mut anorm = 0.0;
    for i in 1..=n {
        for j in i.saturating_sub(1).max(1)..=n {
            anorm += a[i][j].abs();
        }
    }

    let sign = |a: f64, b: f64| if b >= 0.0 { a.abs() } else { -a.abs() };
    let mut nn = n as isize;
    let mut t = 0.0;
    while nn >= 1 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = 1usize;
            for ll in (2..=nu).rev() {
                let mut s = a[ll - 1][ll - 1].abs() + a[ll][ll].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[ll][ll - 1].abs() + s == s {
                    a[ll][ll - 1] = 0.0;
                    l = ll;
                    break;
                }
            }
            let mut x = a[nu][nu];
            if l == nu {
                wr[nu] = x + t;
                wi[nu] = 0.0;
                nn -= 1;
            } else {
                let mut y = a[nu - 1][nu - 1];
                let mut w = a[nu][nu - 1] * a[nu - 1][nu];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + sign(z, p);
                        wr[nu - 1] = x + z;
                        wr[nu] = x + z;
                        if z != 0.0 {
                            wr[nu] = x - w / z;
                        }
                        wi[nu - 1] = 0.0;
                        wi[nu] = 0.0;
                    } else {
                        wr[nu - 1] = x + p;
                        wr[nu] = x + p;
                        wi[nu - 1] = -z;
                        wi[nu] = z;
                    }
                    nn -= 2;
                } else {
                    if its == QR_MAX_ITERATIONS {
                        return Err(Error::ConvergenceFailure {
                            re: x,
                            im: 0.0,
                            residual: f64::NAN,
                        });
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // exceptional shift
                        t += x;
                        for i in 1..=nu {
                            a[i][i] -= x;
                        }
                        let s = a[nu][nu - 1].abs() + a[nu - 1][nu - 2].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nu - 2;
                    let (mut p, mut q, mut r);
                    let mut z;
                    loop {
                        z = a[m][m];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / a[m + 1][m] + a[m][m + 1];
                        q = a[m + 1][m + 1] - z - rr - ss;
                        r = a[m + 2][m + 1];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = a[m][m - 1].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (a[m - 1][m - 1].abs() + z.abs() + a[m + 1][m + 1].abs());
                        if u + v == v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m + 2..=nu {
                        a[i][i - 2] = 0.0;
                        if i != m + 2 {
                            a[i][i - 3] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nu {
                        if k != m {
                            p = a[k][k - 1];
                            q = a[k + 1][k - 1];
                            r = if k != nu - 1 { a[k + 2][k - 1] } else { 0.0 };
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = sign((p * p + q * q + r * r).sqrt(), p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    a[k][k - 1] = -a[k][k - 1];
                                }
                            } else {
                                a[k][k - 1] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nu {
                                p = a[k][j] + q * a[k + 1][j];
                                if k != nu - 1 {
                                    p += r * a[k + 2][j];
                                    a[k + 2][j] -= p * z;
                                }
                                a[k + 1][j] -= p * y;
                                a[k][j] -= p * x;
                            }
                            let mmin = nu.min(k + 3);
                            for i in l..=mmin {
                                p = x * a[i][k] + y * a[i][k + 1];
                                if k != nu - 1 {
                                    p += z * a[i][k + 2];
                                    a[i][k + 2] -= p * r;
                                }
                                a[i][k + 1] -= p * q;
                                a[i][k] -= p;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if nn < 1 || l as isize >= nn - 1 {
                break;
            }
        }
    }
    Ok((1..=n).map(|i| Complex64::new(wr[i], wi[i])).collect())
}

/// Greedy nearest-neighbour matching between two root lists of equal length.
///
/// Returns, for each entry of `expected`, the index of its partner in `actual`.
pub fn match_roots(expected: &[Complex64], actual: &[Complex64]) -> Vec<usize> {
    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(expected.len() * actual.len());
    for (i, e) in expected.iter().enumerate() {
        for (j, a) in actual.iter().enumerate() {
            pairs.push((i, j, (e - a).norm()));
        }
    }
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut assignment = vec![usize::MAX; expected.len()];
    let mut taken = vec![false; actual.len()];
    for (i, j, _) in pairs {
        if assignment[i] == usize::MAX && !taken[j] {
            assignment[i] = j;
            taken[j] = true;
        }
    }
    assignment
}

/// Largest `|e - a| / |e|` over a greedy matching of `expected` to `actual`.
pub fn max_relative_mismatch(expected: &[Complex64], actual: &[Complex64]) -> f64 {
    if expected.len() != actual.len() {
        return f64::INFINITY;
    }
    match_roots(expected, actual)
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let e = expected[i];
            let scale = if e.norm() > 0.0 { e.norm() } else { 1.0 };
            (e - actual[j]).norm() / scale
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    pub(crate) const SIM1_LAMBDA: [f64; 6] = [1.1, 6.75, 20.26, 32.24, 23.72, 7.0];

    #[test]
    fn repeated_zero_roots() {
        let p = RealPolynomial::from_roots(&RootSet::repeated(0.0, 2)).unwrap();
        assert_eq!(p.coeffs(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn conjugate_pair_gives_real_quadratic() {
        let roots = RootSet::new(vec![c(-1.0, 1.0), c(-1.0, -1.0)]).unwrap();
        let p = RealPolynomial::from_roots(&roots).unwrap();
        assert_eq!(p.coeffs(), &[2.0, 2.0, 1.0]);
    }

    #[test]
    fn unpaired_complex_root_is_rejected() {
        let err = RootSet::new(vec![c(-1.0, 1.0), c(-1.0, 0.5)]).unwrap_err();
        assert!(matches!(err, Error::NotConjugateClosed { .. }));
    }

    #[test]
    fn nearly_real_root_pairs_with_itself() {
        let roots = RootSet::new(vec![c(-2.0, 1e-12)]).unwrap();
        let p = RealPolynomial::from_roots(&roots).unwrap();
        assert_eq!(p.coeffs(), &[2.0, 1.0]);
    }

    #[test]
    fn quadratic_roots() {
        let p = RealPolynomial::new(vec![2.0, 2.0, 1.0]).unwrap();
        let roots = p.roots().unwrap().sorted();
        assert_abs_diff_eq!(roots.as_slice()[0].re, -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(roots.as_slice()[0].im, 1.0, epsilon = 1e-14);
        assert_eq!(roots.as_slice()[1], roots.as_slice()[0].conj());
    }

    #[test]
    fn non_monic_is_rejected() {
        let p = RealPolynomial::new(vec![1.0, 2.0]).unwrap();
        assert!(p.roots().is_err());
        let constant = RealPolynomial::new(vec![1.0]).unwrap();
        assert!(constant.roots().is_err());
    }

    #[test]
    fn char_poly_unit_gains() {
        let q = RealPolynomial::homogeneous_char_poly(&[1.0, 1.0], 1.0, 1).unwrap();
        assert_eq!(q.coeffs(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn char_poly_sim1_coefficients() {
        let q = RealPolynomial::homogeneous_char_poly(&SIM1_LAMBDA, 2.0, 5).unwrap();
        assert_abs_diff_eq!(q.coeffs()[0], 2.2, epsilon = 1e-12);
        assert_abs_diff_eq!(q.coeffs()[5], 7.0 * 2f64.powf(1.0 / 6.0), epsilon = 1e-12);
        assert_abs_diff_eq!(q.coeffs()[5], 7.8572, epsilon = 1e-4);
    }

    #[test]
    fn char_poly_gain_count_checked() {
        let err = RealPolynomial::homogeneous_char_poly(&[1.0, 2.0, 3.0], 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn sim1_roots_round_trip_through_coefficients() {
        // roots as printed for L = 2
        let printed = RootSet::new(vec![
            c(-2.8072, 2.7583),
            c(-2.8072, -2.7583),
            c(-0.2725, 0.3729),
            c(-0.2725, -0.3729),
            c(-1.0831, 0.0),
            c(-0.6148, 0.0),
        ])
        .unwrap();
        let p = RealPolynomial::from_roots(&printed).unwrap();
        let expected = [2.2, 12.027, 32.161, 45.594, 29.885, 7.857, 1.0];
        for (a, e) in p.coeffs().iter().zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-2);
        }
        let q = RealPolynomial::homogeneous_char_poly(&SIM1_LAMBDA, 2.0, 5).unwrap();
        for (a, e) in p.coeffs().iter().zip(q.coeffs()) {
            assert_abs_diff_eq!(*a, *e, epsilon = 1e-2);
        }
    }

    #[test]
    fn identity_annihilates_r_minus_one() {
        let p = RealPolynomial::new(vec![-1.0, 1.0]).unwrap();
        let id = DMatrix::<f64>::identity(3, 3);
        let out = p.eval_at_matrix(&[id.clone(), id]).unwrap();
        assert_eq!(out, DMatrix::zeros(3, 3));
    }

    #[test]
    fn square_of_shear() {
        let tau = 0.3;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, tau, 0.0, 1.0]);
        let powers = vec![DMatrix::identity(2, 2), m.clone(), &m * &m];
        let p = RealPolynomial::new(vec![0.0, 0.0, 1.0]).unwrap();
        let out = p.eval_at_matrix(&powers).unwrap();
        assert_eq!(
            out,
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0 * tau, 0.0, 1.0])
        );
    }

    #[test]
    fn ragged_powers_rejected() {
        let p = RealPolynomial::new(vec![0.0, 1.0]).unwrap();
        let err = p
            .eval_at_matrix(&[DMatrix::identity(2, 2), DMatrix::identity(3, 3)])
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn cayley_hamilton() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 4.0, 2.0, 0.0, -0.7]);
        let p = RealPolynomial::characteristic(&m).unwrap();
        let mut powers = vec![DMatrix::identity(3, 3)];
        for j in 0..3 {
            powers.push(&powers[j] * &m);
        }
        let out = p.eval_at_matrix(&powers).unwrap();
        assert!(out.amax() < 1e-12, "{out}");
        // trace and determinant
        assert_abs_diff_eq!(p.coeffs()[2], -(1.0 + 0.3 - 0.7), epsilon = 1e-12);
        assert_abs_diff_eq!(p.coeffs()[0], -m.determinant(), epsilon = 1e-12);
    }

    #[test]
    fn binomial_expansion() {
        let p = RealPolynomial::binomial(-1.5, 3);
        assert_eq!(p.coeffs(), &[3.375, 6.75, 4.5, 1.0]);
    }

    #[test]
    fn repeated_roots_have_small_residual() {
        let p = RealPolynomial::binomial(-2.5, 6);
        let roots = p.roots().unwrap();
        assert_eq!(roots.len(), 6);
        for r in roots.iter() {
            assert!((r - c(-2.5, 0.0)).norm() < 1e-2);
        }
    }

    #[test]
    fn greedy_matching_pairs_nearest() {
        let a = [c(0.0, 0.0), c(1.0, 0.0)];
        let b = [c(1.0, 1e-9), c(1e-9, 0.0)];
        assert_eq!(match_roots(&a, &b), vec![1, 0]);
        assert!(max_relative_mismatch(&a, &b) < 1e-8);
    }
}
