//! Stability certificates and accuracy metrics.
//!
//! The closed loop `E = Psi + Gamma e_1^T` depends on `w_1` through the matched
//! roots. Certificates are computed with `E` frozen at chosen `|w_1|` values: for
//! each one a Lyapunov matrix `P` with `E^T P E - P = -Q` and the neighborhood
//! constant `K = sqrt((sigma_max(E) + lambda_max(P)) / (lambda_min(Q) - 1))`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::differentiators::DifferentiatorParams;
use crate::error::{Error, Result};
use crate::harness::StepRecord;
use crate::poly::{pair_conjugates, RealFactor, RealPolynomial, RootSet};
use crate::synthesis::{self, GammaVector, PsiMatrix, SynthesisCache, DEFAULT_EPSILON_W};

const LYAPUNOV_REL_TOL: f64 = 1e-12;
const LYAPUNOV_MAX_ITER: usize = 1_000_000;
const STABILITY_MARGIN: f64 = 1e-9;
const SETTLE_SLACK: f64 = 1.05;

/// Spectral radius.
pub fn spectral_radius(matrix: &DMatrix<f64>) -> Result<f64> {
    eigenvalues(matrix).map(|ev| ev.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigenvalues of a square matrix, computed directly by balanced QR.
pub fn eigenvalues(matrix: &DMatrix<f64>) -> Result<RootSet> {
    RootSet::new(crate::poly::matrix_eigenvalues(matrix)?)
}

/// Largest singular value.
pub fn spectral_norm(matrix: &DMatrix<f64>) -> f64 {
    matrix.singular_values().iter().copied().fold(0.0, f64::max)
}

fn symmetric_extremes(matrix: &DMatrix<f64>) -> (f64, f64) {
    let ev = matrix.symmetric_eigenvalues();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// `E^T P E - P + Q`
pub fn lyapunov_residual(e: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> DMatrix<f64> {
    e.transpose() * p * e - p + q
}

/// Residual norm relative to the terms of the equation,
/// `||E^T P E - P + Q|| / (||E^T P E|| + ||P|| + ||Q||)` in Frobenius norm.
pub fn relative_lyapunov_residual(e: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let epe = e.transpose() * p * e;
    let scale = epe.norm() + p.norm() + q.norm();
    (&epe - p + q).norm() / scale
}

/// Solves `E^T P E - P = -Q` by the fixed-point iteration `P <- E^T P E + Q`.
pub fn solve_discrete_lyapunov(e: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !e.is_square() || q.shape() != e.shape() {
        return Err(Error::DimensionMismatch(
            "E and Q must be square and of equal size".into(),
        ));
    }
    let rho = spectral_radius(e)?;
    if !(rho < 1.0 - STABILITY_MARGIN) {
        return Err(Error::Unstable {
            spectral_radius: rho,
        });
    }
    let et = e.transpose();
    let mut p = q.clone();
    for _ in 0..LYAPUNOV_MAX_ITER {
        let next = &et * &p * e + q;
        let change = (&next - &p).norm();
        let size = next.norm();
        p = next;
        if change <= LYAPUNOV_REL_TOL * size {
            return Ok((&p + p.transpose()) * 0.5);
        }
    }
    Err(Error::LyapunovNoConvergence {
        iterations: LYAPUNOV_MAX_ITER,
    })
}

/// Neighborhood constant `K`, reading `lambda_max(E)` as the largest singular value.
pub fn theorem1_bound(e: &DMatrix<f64>, p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let (q_min, _) = symmetric_extremes(q);
    if !(q_min > 1.0) {
        return Err(Error::InvalidQ {
            min_eigenvalue: q_min,
        });
    }
    let (_, p_max) = symmetric_extremes(p);
    Ok(((spectral_norm(e) + p_max) / (q_min - 1.0)).sqrt())
}

/// Lyapunov certificate of the closed loop frozen at one `|w_1|`.
#[derive(Debug, Clone)]
pub struct LyapunovCertificate {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub k: f64,
    pub w1_frozen: f64,
    pub spectral_radius: f64,
    /// Relative residual, see [`relative_lyapunov_residual`].
    pub residual: f64,
}

/// The serialized form of a certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub w1: f64,
    pub spectral_radius: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub residual: f64,
}

impl From<&LyapunovCertificate> for CertificateRecord {
    fn from(c: &LyapunovCertificate) -> Self {
        Self {
            w1: c.w1_frozen,
            spectral_radius: c.spectral_radius,
            k: c.k,
            residual: c.residual,
        }
    }
}

/// Closed-loop matrix of the matching differentiator with `w_1` frozen.
pub fn frozen_closed_loop(cache: &SynthesisCache, b: &RootSet, w1: f64) -> Result<DMatrix<f64>> {
    let shifts = synthesis::matching_shift(b, w1, cache.tau(), cache.m(), DEFAULT_EPSILON_W)?;
    let gamma = synthesis::gamma_from_shifts(&shifts, cache)?;
    synthesis::closed_loop(&cache.psi, &gamma)
}

/// Certificate with the default `Q = 2I`.
pub fn certify(cache: &SynthesisCache, b: &RootSet, w1: f64) -> Result<LyapunovCertificate> {
    let dim = cache.dim();
    certify_with_q(cache, b, w1, DMatrix::identity(dim, dim) * 2.0)
}

pub fn certify_with_q(
    cache: &SynthesisCache,
    b: &RootSet,
    w1: f64,
    q: DMatrix<f64>,
) -> Result<LyapunovCertificate> {
    let e = frozen_closed_loop(cache, b, w1)?;
    let spectral_radius = spectral_radius(&e)?;
    let p = solve_discrete_lyapunov(&e, &q)?;
    let k = theorem1_bound(&e, &p, &q)?;
    let residual = relative_lyapunov_residual(&e, &p, &q);
    Ok(LyapunovCertificate {
        p,
        q,
        k,
        w1_frozen: w1.abs(),
        spectral_radius,
        residual,
    })
}

/// `points` values log-spaced over `[min, max]`.
pub fn log_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max >= min && points >= 1) || (points == 1 && min != max) {
        return Err(Error::InvalidParameter(format!(
            "bad grid [{min}, {max}] with {points} points"
        )));
    }
    if points == 1 {
        return Ok(vec![min]);
    }
    let (lo, hi) = (min.log10(), max.log10());
    Ok((0..points)
        .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64))
        .collect())
}

/// Certificates over a grid of frozen `|w_1|` values.
pub fn certify_grid(
    params: &DifferentiatorParams,
    grid: &[f64],
) -> Result<Vec<LyapunovCertificate>> {
    let b = params.resolve_roots()?;
    let cache = SynthesisCache::new(params.n, params.n_f, params.tau)?;
    grid.iter().map(|&w1| certify(&cache, &b, w1)).collect()
}

/// Taylor remainder bounds per estimator row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemainderBound {
    /// `L tau^{n+1-j} / (n+1-j)`, the bound used for the neighborhood check.
    pub h_bound: Vec<f64>,
    /// `L tau^{n+1-j} / (n+1-j)!`, the standard Lagrange form.
    pub h_bound_factorial: Vec<f64>,
}

impl RemainderBound {
    pub fn norm(&self) -> f64 {
        self.h_bound.iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    pub fn norm_factorial(&self) -> f64 {
        self.h_bound_factorial
            .iter()
            .map(|h| h * h)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn remainder_bound(lipschitz: f64, tau: f64, n: usize) -> RemainderBound {
    let mut h_bound = Vec::with_capacity(n + 1);
    let mut h_bound_factorial = Vec::with_capacity(n + 1);
    for j in 0..=n {
        let power = n + 1 - j;
        let num = lipschitz * tau.powi(power as i32);
        let factorial: f64 = (1..=power).map(|v| v as f64).product();
        h_bound.push(num / power as f64);
        h_bound_factorial.push(num / factorial);
    }
    RemainderBound {
        h_bound,
        h_bound_factorial,
    }
}

/// Tail accuracy of a recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// `sup |sigma_j|` over the tail window, per derivative.
    pub tail_sup: Vec<f64>,
    /// Per-derivative settling step.
    pub settling_steps: Vec<u64>,
    /// Latest of the per-derivative settling steps.
    pub settling_step: u64,
    /// Number of records in the tail window.
    pub tail_len: usize,
}

/// Index of the first record after which `series` never exceeds `SETTLE_SLACK * bound`.
fn settling_index(
    series: impl DoubleEndedIterator<Item = f64> + ExactSizeIterator,
    bound: f64,
) -> usize {
    let len = series.len();
    let limit = SETTLE_SLACK * bound;
    series
        .rev()
        .position(|v| v > limit)
        .map(|from_end| len - from_end)
        .unwrap_or(0)
}

fn tail_start(len: usize, settle_fraction: f64) -> usize {
    let tail = ((len as f64) * settle_fraction).ceil() as usize;
    len - tail.clamp(1, len)
}

/// Sup errors over the last `settle_fraction` of the records, plus settling steps.
pub fn error_metrics(records: &[StepRecord], settle_fraction: f64) -> Result<ErrorMetrics> {
    if !(settle_fraction > 0.0 && settle_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "settle fraction must lie in (0, 1), got {settle_fraction}"
        )));
    }
    if records.is_empty() || records.iter().any(|r| r.sigma.is_none()) {
        return Err(Error::NoTruth);
    }
    let sigma = |r: &StepRecord, j: usize| r.sigma.as_ref().expect("checked")[j].abs();
    let orders = records[0].z.len();
    let start = tail_start(records.len(), settle_fraction);
    let mut tail_sup = Vec::with_capacity(orders);
    let mut settling_steps = Vec::with_capacity(orders);
    for j in 0..orders {
        let sup = records[start..]
            .iter()
            .map(|r| sigma(r, j))
            .fold(0.0, f64::max);
        let idx = settling_index(records.iter().map(|r| sigma(r, j)), sup);
        tail_sup.push(sup);
        settling_steps.push(
            records
                .get(idx)
                .map_or(records[records.len() - 1].k + 1, |r| r.k),
        );
    }
    let settling_step = settling_steps.iter().copied().max().unwrap_or(0);
    Ok(ErrorMetrics {
        tail_sup,
        settling_steps,
        settling_step,
        tail_len: records.len() - start,
    })
}

/// `||(w_k, sigma_k)||_2` for each record.
pub fn error_norms(records: &[StepRecord]) -> Result<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            let sigma = r.sigma.as_ref().ok_or(Error::NoTruth)?;
            Ok(r.w.iter().chain(sigma).map(|v| v * v).sum::<f64>().sqrt())
        })
        .collect()
}

/// `max_j |charpoly(Psi + Gamma e_1^T)(d_j)| / (1 + |d_j|)^{m+1}`
pub fn pole_placement_residual(psi: &PsiMatrix, gamma: &GammaVector, d: &RootSet) -> Result<f64> {
    let e = synthesis::closed_loop(psi, gamma)?;
    let p = RealPolynomial::characteristic(&e)?;
    let order = p.degree() as i32;
    Ok(d.iter()
        .map(|r| p.eval_complex(*r).norm() / (1.0 + r.norm()).powi(order))
        .fold(0.0, f64::max))
}

/// `||P_d(E)|| / max(1, ||E||)^{m+1}` evaluated on the balanced closed loop.
///
/// `P_d(D^{-1} E D) = D^{-1} P_d(E) D`, so a diagonal similarity only rescales the
/// residual; balancing removes the `tau^{-j}` grading of the gain entries.
pub fn annihilation_residual(psi: &PsiMatrix, gamma: &GammaVector, d: &RootSet) -> Result<f64> {
    let mut e = synthesis::closed_loop(psi, gamma)?;
    crate::poly::balance(&mut e);
    let dim = e.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let mut acc = id.clone();
    for f in pair_conjugates(d.as_slice())? {
        acc = match f {
            RealFactor::Linear(r) => acc * (&e - &id * r),
            RealFactor::Quadratic(r) => acc * (&e * &e - &e * (2.0 * r.re) + &id * r.norm_sqr()),
        };
    }
    let scale = spectral_norm(&e).max(1.0).powi(dim as i32);
    Ok(spectral_norm(&acc) / scale)
}

/// Outcome of the neighborhood check on a recorded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodCheck {
    /// `||h_k(tau)||_2` from the remainder bound.
    pub h_norm: f64,
    /// Largest certificate `K` over the observed `|w_1|` range.
    pub k_max: f64,
    /// `k_max * h_norm`
    pub radius: f64,
    /// Observed `|w_1|` range from the first entry into the neighborhood onward.
    pub w1_range: Option<(f64, f64)>,
    /// Step at which the error norm first dropped inside the radius.
    pub entry_step: Option<u64>,
    /// Largest error norm after entry.
    pub max_after_entry: f64,
    /// Error norm never left the neighborhood after entering it.
    pub holds: bool,
    pub certificates: Vec<CertificateRecord>,
}

/// Checks that the error norm of a matching run stays inside `K_max ||h||` once it enters.
///
/// `K_max` is the largest certificate over the grid points inside the observed
/// `|w_1|` range together with the two range endpoints themselves.
pub fn neighborhood_check(
    params: &DifferentiatorParams,
    records: &[StepRecord],
    grid: &[f64],
) -> Result<NeighborhoodCheck> {
    let lipschitz = params
        .lipschitz
        .ok_or_else(|| Error::InvalidParameter("neighborhood check needs L".into()))?;
    let h_norm = remainder_bound(lipschitz, params.tau, params.n).norm();
    let norms = error_norms(records)?;
    let b = params.resolve_roots()?;
    let cache = SynthesisCache::new(params.n, params.n_f, params.tau)?;

    let observed = observed_w1(records);
    let k_for = |range: (f64, f64)| k_max_over_range(&cache, &b, grid, range);

    // K depends on the range, the range on the entry step: start from the whole run
    // and shrink to the post-entry range once.
    let full = range_of(&observed);
    let (mut k_max, mut certificates) = k_for(full)?;
    let mut entry = norms.iter().position(|v| *v <= k_max * h_norm);
    if let Some(i) = entry {
        let tail = range_of(&observed[i..]);
        let (k_tail, certs_tail) = k_for(tail)?;
        if k_tail < k_max {
            if let Some(j) = norms.iter().position(|v| *v <= k_tail * h_norm) {
                k_max = k_tail;
                certificates = certs_tail;
                entry = Some(j);
            }
        }
    }
    let radius = k_max * h_norm;
    let (entry_step, max_after_entry, holds, w1_range) = match entry {
        Some(i) => {
            let max_after = norms[i..].iter().copied().fold(0.0, f64::max);
            (
                Some(records[i].k),
                max_after,
                max_after <= radius,
                Some(range_of(&observed[i..])),
            )
        }
        None => (None, f64::NAN, false, None),
    };
    Ok(NeighborhoodCheck {
        h_norm,
        k_max,
        radius,
        w1_range,
        entry_step,
        max_after_entry,
        holds,
        certificates,
    })
}

/// Largest certificate `K` over the grid points inside `range` and the two endpoints.
pub fn k_max_over_range(
    cache: &SynthesisCache,
    b: &RootSet,
    grid: &[f64],
    range: (f64, f64),
) -> Result<(f64, Vec<CertificateRecord>)> {
    let mut points: Vec<f64> = grid
        .iter()
        .copied()
        .filter(|w| *w >= range.0 && *w <= range.1)
        .collect();
    points.push(range.0);
    points.push(range.1);
    let certs = points
        .iter()
        .map(|&w| certify(cache, b, w).map(|c| CertificateRecord::from(&c)))
        .collect::<Result<Vec<_>>>()?;
    Ok((certs.iter().map(|c| c.k).fold(0.0, f64::max), certs))
}

/// `|w_1|` of each record.
pub fn observed_w1(records: &[StepRecord]) -> Vec<f64> {
    records
        .iter()
        .map(|r| r.w.first().copied().unwrap_or(0.0).abs())
        .collect()
}

/// `(min, max)` of non-negative values.
pub fn range_of(values: &[f64]) -> (f64, f64) {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(0.0, f64::max);
    (min, max)
}

/// Relative eigenvalue mismatch between the closed loop and the desired roots.
pub fn placement_mismatch(psi: &PsiMatrix, gamma: &GammaVector, d: &RootSet) -> Result<f64> {
    let e = synthesis::closed_loop(psi, gamma)?;
    let ev = eigenvalues(&e)?;
    let expected: Vec<Complex64> = d.iter().copied().collect();
    Ok(crate::poly::max_relative_mismatch(&expected, ev.as_slice()))
}
