//! Discrete transition matrix, observability matrix and injection-gain synthesis.
//!
//! The state is ordered `(w_1..w_{n_f}, z_0..z_n)`, `m = n + n_f`, dimension `m + 1`.
//! The injection gain places the eigenvalues of `Psi + Gamma e_1^T` at the desired
//! discrete roots `d_j` (Ackermann's formula with output row `e_1^T`).

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{RealPolynomial, RootSet};

/// Smallest `|w_1|` used before taking the `-1/(m+1)` power.
pub const DEFAULT_EPSILON_W: f64 = 1e-300;

/// Transition matrix of the discrete differentiator.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiMatrix {
    pub matrix: DMatrix<f64>,
    pub n: usize,
    pub n_f: usize,
    pub tau: f64,
}

impl PsiMatrix {
    pub fn dim(&self) -> usize {
        self.n + self.n_f + 1
    }

    /// `m = n + n_f`
    pub fn m(&self) -> usize {
        self.n + self.n_f
    }
}

/// Builds `Psi(tau)`: Euler shifts on the filter rows, the exact Taylor
/// propagator `tau^(j-i)/(j-i)!` on the estimator block.
pub fn build_psi(n: usize, n_f: usize, tau: f64) -> Result<PsiMatrix> {
    if n_f < 1 {
        return Err(Error::InvalidOrder(format!(
            "filtering order must be >= 1, got {n_f}"
        )));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sampling period must be >= 0, got {tau}"
        )));
    }
    let dim = n + n_f + 1;
    let mut psi = DMatrix::identity(dim, dim);
    for i in 0..n_f {
        psi[(i, i + 1)] = tau;
    }
    for i in n_f..dim {
        let mut term = 1.0;
        for (l, j) in (i + 1..dim).enumerate() {
            term *= tau / (l + 1) as f64;
            psi[(i, j)] = term;
        }
    }
    Ok(PsiMatrix {
        matrix: psi,
        n,
        n_f,
        tau,
    })
}

/// Observability matrix `S` (rows `e_1^T Psi^j`, `j = 0..m`) with its LU factors.
#[derive(Debug, Clone)]
pub struct Observability {
    pub s: DMatrix<f64>,
    lu: LU<f64, Dyn, Dyn>,
}

impl Observability {
    /// Solves `S x = rhs`.
    pub fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.lu.solve(rhs).ok_or(Error::Singular)
    }

    /// `S^{-1} e_{m+1}`.
    pub fn last_column_of_inverse(&self) -> Result<DVector<f64>> {
        let dim = self.s.nrows();
        let mut e = DVector::zeros(dim);
        e[dim - 1] = 1.0;
        self.solve(&e)
    }
}

pub fn build_observability(psi: &PsiMatrix) -> Result<Observability> {
    let dim = psi.dim();
    let mut s = DMatrix::zeros(dim, dim);
    let mut row = DMatrix::zeros(1, dim);
    row[(0, 0)] = 1.0;
    for j in 0..dim {
        s.set_row(j, &row.row(0));
        row = &row * &psi.matrix;
    }
    let lu = s.clone().lu();
    if (0..dim).any(|i| lu.u()[(i, i)] == 0.0) {
        return Err(Error::Singular);
    }
    Ok(Observability { s, lu })
}

/// Everything that depends only on `(n, n_f, tau)`.
#[derive(Debug, Clone)]
pub struct SynthesisCache {
    pub psi: PsiMatrix,
    /// `Psi^0 .. Psi^{m+1}`
    pub psi_powers: Vec<DMatrix<f64>>,
    /// `S^{-1} e_{m+1}`
    pub s_inv_col: DVector<f64>,
    /// `Psi^j S^{-1} e_{m+1}`, `j = 0..m+1`
    power_cols: Vec<DVector<f64>>,
    /// `(Psi - I)^j S^{-1} e_{m+1}`, `j = 0..m+1`
    shifted_cols: Vec<DVector<f64>>,
}

impl SynthesisCache {
    pub fn new(n: usize, n_f: usize, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling period must be > 0, got {tau}"
            )));
        }
        let psi = build_psi(n, n_f, tau)?;
        let s_inv_col = build_observability(&psi)?.last_column_of_inverse()?;
        let dim = psi.dim();

        let mut psi_powers = vec![DMatrix::identity(dim, dim)];
        for j in 0..=psi.m() {
            let next = &psi_powers[j] * &psi.matrix;
            psi_powers.push(next);
        }
        let power_cols = psi_powers.iter().map(|p| p * &s_inv_col).collect();

        let nilpotent = &psi.matrix - DMatrix::<f64>::identity(dim, dim);
        let mut shifted_cols = vec![s_inv_col.clone()];
        for j in 0..=psi.m() {
            let next = &nilpotent * &shifted_cols[j];
            shifted_cols.push(next);
        }
        Ok(Self {
            psi,
            psi_powers,
            s_inv_col,
            power_cols,
            shifted_cols,
        })
    }

    pub fn dim(&self) -> usize {
        self.psi.dim()
    }

    pub fn m(&self) -> usize {
        self.psi.m()
    }

    pub fn tau(&self) -> f64 {
        self.psi.tau
    }
}

/// Injection gain `Gamma_k`, one entry per state.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVector(pub DVector<f64>);

impl GammaVector {
    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Continuous roots scaled by `|w_1|^{-1/(m+1)}`, i.e. `c_j = |w_1|^{-1/(m+1)} b_j`.
///
/// Returns `None` at `w_1 = 0`, where every `c_j` diverges to `-inf`.
fn scaled_exponent(w1: f64, tau: f64, m: usize, epsilon_w: f64) -> Option<f64> {
    if w1 == 0.0 {
        return None;
    }
    let mag = w1.abs().max(epsilon_w);
    Some(tau * mag.powf(-1.0 / (m + 1) as f64))
}

fn check_stable(b: &RootSet) -> Result<()> {
    match b.iter().find(|r| !(r.re < 0.0)) {
        Some(r) => Err(Error::UnstableRoot { re: r.re, im: r.im }),
        None => Ok(()),
    }
}

/// Matched discrete roots `d_j = exp(tau |w_1|^{-1/(m+1)} b_j)`, with `d_j = 0` at `w_1 = 0`.
pub fn matching_map(b: &RootSet, w1: f64, tau: f64, m: usize) -> Result<RootSet> {
    matching_map_with_floor(b, w1, tau, m, DEFAULT_EPSILON_W)
}

pub fn matching_map_with_floor(
    b: &RootSet,
    w1: f64,
    tau: f64,
    m: usize,
    epsilon_w: f64,
) -> Result<RootSet> {
    check_stable(b)?;
    let roots = match scaled_exponent(w1, tau, m, epsilon_w) {
        None => vec![Complex64::new(0.0, 0.0); b.len()],
        Some(scale) => b.iter().map(|r| (r * scale).exp()).collect(),
    };
    Ok(RootSet::new_unchecked(roots))
}

/// `1 - d_j` for the matched roots, computed without cancellation when `d_j` is near 1.
pub fn matching_shift(
    b: &RootSet,
    w1: f64,
    tau: f64,
    m: usize,
    epsilon_w: f64,
) -> Result<Vec<Complex64>> {
    check_stable(b)?;
    Ok(match scaled_exponent(w1, tau, m, epsilon_w) {
        None => vec![Complex64::new(1.0, 0.0); b.len()],
        Some(scale) => b.iter().map(|r| one_minus_exp(r * scale)).collect(),
    })
}

fn one_minus_exp(c: Complex64) -> Complex64 {
    if c.im == 0.0 {
        return Complex64::new(-c.re.exp_m1(), 0.0);
    }
    let half = (0.5 * c.im).sin();
    // 1 - e^a cos b = 2 sin^2(b/2) - expm1(a) cos b
    Complex64::new(
        2.0 * half * half - c.re.exp_m1() * c.im.cos(),
        -c.re.exp() * c.im.sin(),
    )
}

fn check_len(count: usize, cache: &SynthesisCache) -> Result<()> {
    if count != cache.dim() {
        return Err(Error::DimensionMismatch(format!(
            "need {} desired roots, got {count}",
            cache.dim()
        )));
    }
    Ok(())
}

fn combine(coeffs: &[f64], cols: &[DVector<f64>]) -> GammaVector {
    let mut out = DVector::zeros(cols[0].len());
    for (c, col) in coeffs.iter().zip(cols) {
        out.axpy(-*c, col, 1.0);
    }
    GammaVector(out)
}

/// `Gamma = -P_d(Psi) S^{-1} e_{m+1}` with `P_d` expanded in powers of `Psi`.
pub fn gamma(d: &RootSet, cache: &SynthesisCache) -> Result<GammaVector> {
    check_len(d.len(), cache)?;
    let alpha = RealPolynomial::from_roots(d)?;
    Ok(combine(alpha.coeffs(), &cache.power_cols))
}

/// Same gain, with `P_d` expanded in powers of `Psi - I` from the shifts `1 - d_j`.
///
/// Every eigenvalue of `Psi` is 1, so the shifted basis keeps full relative accuracy
/// when the desired roots crowd toward 1 (small `tau`, large `|w_1|`).
pub fn gamma_from_shifts(shifts: &[Complex64], cache: &SynthesisCache) -> Result<GammaVector> {
    check_len(shifts.len(), cache)?;
    let negated = RootSet::new(shifts.iter().map(|s| -s).collect())?;
    let beta = RealPolynomial::from_roots(&negated)?;
    Ok(combine(beta.coeffs(), &cache.shifted_cols))
}

/// `Psi + Gamma e_1^T`
pub fn closed_loop(psi: &PsiMatrix, gamma: &GammaVector) -> Result<DMatrix<f64>> {
    if gamma.0.len() != psi.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gain has {} entries, state has {}",
            gamma.0.len(),
            psi.dim()
        )));
    }
    let mut e = psi.matrix.clone();
    for i in 0..psi.dim() {
        e[(i, 0)] += gamma.0[i];
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn psi_first_order() {
        let psi = build_psi(1, 1, 0.1).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.1, 0.0, 0.0, 1.0]);
        assert_eq!(psi.matrix, expected);
    }

    #[test]
    fn psi_smallest_case() {
        let psi = build_psi(0, 1, 0.7).unwrap();
        assert_eq!(
            psi.matrix,
            DMatrix::from_row_slice(2, 2, &[1.0, 0.7, 0.0, 1.0])
        );
    }

    #[test]
    fn psi_taylor_block() {
        let tau = 0.01;
        let psi = build_psi(3, 2, tau).unwrap();
        let m = &psi.matrix;
        assert_eq!(m.nrows(), 6);
        // filter rows
        assert_eq!(
            m.row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, tau, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(
            m.row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 1.0, tau, 0.0, 0.0, 0.0]
        );
        // z_0 row
        assert_abs_diff_eq!(m[(2, 3)], 0.01, epsilon = 1e-18);
        assert_abs_diff_eq!(m[(2, 4)], 5e-5, epsilon = 1e-18);
        assert_abs_diff_eq!(m[(2, 5)], 1.0e-6 / 6.0, epsilon = 1e-20);
        for i in 0..6 {
            assert_eq!(m[(i, i)], 1.0);
        }
    }

    #[test]
    fn psi_at_zero_is_identity() {
        let psi = build_psi(3, 2, 0.0).unwrap();
        assert_eq!(psi.matrix, DMatrix::identity(6, 6));
    }

    #[test]
    fn psi_requires_filter() {
        assert!(matches!(build_psi(2, 0, 0.1), Err(Error::InvalidOrder(_))));
    }

    #[test]
    fn observability_two_states() {
        let tau = 0.25;
        let psi = build_psi(0, 1, tau).unwrap();
        let obs = build_observability(&psi).unwrap();
        assert_eq!(obs.s, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, tau]));
        let col = obs.last_column_of_inverse().unwrap();
        assert_abs_diff_eq!(col[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(col[1], 1.0 / tau, epsilon = 1e-12);
    }

    #[test]
    fn observability_singular_at_zero_tau() {
        let psi = build_psi(1, 1, 0.0).unwrap();
        assert!(matches!(build_observability(&psi), Err(Error::Singular)));
    }

    #[test]
    fn cache_two_states() {
        let cache = SynthesisCache::new(0, 1, 0.5).unwrap();
        assert_abs_diff_eq!(cache.s_inv_col[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cache.s_inv_col[1], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn cache_sizes_and_residual() {
        let cache = SynthesisCache::new(3, 2, 0.01).unwrap();
        assert_eq!(cache.psi_powers.len(), 7);
        assert_eq!(cache.psi_powers[0], DMatrix::identity(6, 6));
        let obs = build_observability(&cache.psi).unwrap();
        let mut e = DVector::zeros(6);
        e[5] = 1.0;
        assert!((&obs.s * &cache.s_inv_col - e).amax() < 1e-12);
    }

    #[test]
    fn matching_zero_w1_is_deadbeat() {
        let b = RootSet::repeated(-1.5, 6);
        let d = matching_map(&b, 0.0, 0.01, 5).unwrap();
        assert!(d.iter().all(|r| r.norm() == 0.0));
    }

    #[test]
    fn matching_repeated_real() {
        let b = RootSet::repeated(-1.5, 6);
        let d = matching_map(&b, 1.0, 0.01, 5).unwrap();
        for r in d.iter() {
            assert_abs_diff_eq!(r.re, (-0.015f64).exp(), epsilon = 1e-15);
            assert_abs_diff_eq!(r.re, 0.985112, epsilon = 1e-6);
        }
    }

    #[test]
    fn matching_complex_pair() {
        let b = RootSet::new(vec![Complex64::new(-1.0, 1.0), Complex64::new(-1.0, -1.0)]).unwrap();
        let d = matching_map(&b, 1.0, 1.0, 1).unwrap();
        assert_abs_diff_eq!(d.as_slice()[0].re, 0.19877, epsilon = 1e-5);
        assert_abs_diff_eq!(d.as_slice()[0].im, 0.30956, epsilon = 1e-5);
        assert_eq!(d.as_slice()[1], d.as_slice()[0].conj());
    }

    #[test]
    fn matching_rejects_unstable_roots() {
        let b = RootSet::repeated(0.0, 2);
        assert!(matches!(
            matching_map(&b, 1.0, 0.1, 1),
            Err(Error::UnstableRoot { .. })
        ));
    }

    #[test]
    fn shift_matches_one_minus_root() {
        let b = RootSet::new(vec![
            Complex64::new(-2.0, 3.0),
            Complex64::new(-2.0, -3.0),
            Complex64::new(-0.5, 0.0),
        ])
        .unwrap();
        let d = matching_map(&b, 0.3, 0.2, 2).unwrap();
        let eps = matching_shift(&b, 0.3, 0.2, 2, DEFAULT_EPSILON_W).unwrap();
        for (di, ei) in d.iter().zip(&eps) {
            assert!((Complex64::new(1.0, 0.0) - di - ei).norm() < 1e-15);
        }
    }

    #[test]
    fn gamma_vanishes_at_psi_spectrum() {
        let cache = SynthesisCache::new(1, 1, 0.1).unwrap();
        let g = gamma(&RootSet::repeated(1.0, 3), &cache).unwrap();
        assert!(g.0.amax() < 1e-9, "{:?}", g);
        let g = gamma_from_shifts(&[Complex64::new(0.0, 0.0); 3], &cache).unwrap();
        assert_eq!(g.0.amax(), 0.0);
    }

    #[test]
    fn gamma_two_state_closed_form() {
        let tau = 0.1;
        let cache = SynthesisCache::new(0, 1, tau).unwrap();
        let (d1, d2) = (0.3, -0.6);
        let g = gamma(&RootSet::from_real(&[d1, d2]), &cache).unwrap();
        assert_abs_diff_eq!(g.0[0], (d1 + d2) - 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(g.0[1], -(1.0 - d1) * (1.0 - d2) / tau, epsilon = 1e-12);
        let e = closed_loop(&cache.psi, &g).unwrap();
        assert_abs_diff_eq!(e.trace(), d1 + d2, epsilon = 1e-13);
        assert_abs_diff_eq!(e.determinant(), d1 * d2, epsilon = 1e-13);
    }

    #[test]
    fn gamma_deadbeat_two_state() {
        let cache = SynthesisCache::new(0, 1, 0.1).unwrap();
        let g = gamma(&RootSet::repeated(0.0, 2), &cache).unwrap();
        assert_abs_diff_eq!(g.0[0], -2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(g.0[1], -10.0, epsilon = 1e-12);
    }

    #[test]
    fn gamma_routes_agree() {
        let cache = SynthesisCache::new(3, 2, 0.05).unwrap();
        let b = PolyFixture::sim1();
        for w1 in [0.0, 1e-6, 0.01, 1.0] {
            let d = matching_map(&b, w1, 0.05, 5).unwrap();
            let eps = matching_shift(&b, w1, 0.05, 5, DEFAULT_EPSILON_W).unwrap();
            let a = gamma(&d, &cache).unwrap();
            let s = gamma_from_shifts(&eps, &cache).unwrap();
            for i in 0..6 {
                let scale = a.0[i].abs().max(1.0);
                assert!(
                    (a.0[i] - s.0[i]).abs() / scale < 1e-8,
                    "w1={w1} i={i} {} {}",
                    a.0[i],
                    s.0[i]
                );
            }
        }
    }

    #[test]
    fn gamma_length_checked() {
        let cache = SynthesisCache::new(1, 1, 0.1).unwrap();
        assert!(matches!(
            gamma(&RootSet::repeated(0.0, 2), &cache),
            Err(Error::DimensionMismatch(_))
        ));
    }

    struct PolyFixture;

    impl PolyFixture {
        fn sim1() -> RootSet {
            RealPolynomial::homogeneous_char_poly(&[1.1, 6.75, 20.26, 32.24, 23.72, 7.0], 2.0, 5)
                .unwrap()
                .roots()
                .unwrap()
        }
    }
}
