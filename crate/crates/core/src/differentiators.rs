//! Streaming differentiators behind a common per-sample interface.
//!
//! * [`MatchingDifferentiator`]: the discrete-time matching filtering differentiator.
//!   Exact Taylor propagation of the estimates, Euler propagation of the filter
//!   states, and an injection gain re-synthesized at every sample from matched
//!   discrete roots.
//! * [`StandardEuler`]: explicit Euler step of the homogeneous (Levant) differentiator.
//! * [`FilteringEuler`]: explicit Euler step of the filtering differentiator.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{RealPolynomial, RootSet};
use crate::synthesis::{self, SynthesisCache, DEFAULT_EPSILON_W};

/// Any state entry above this magnitude is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Gain sequence of the `sim1` and `sim2` presets, `m = 5`.
pub const SIM_LAMBDA: [f64; 6] = [1.1, 6.75, 20.26, 32.24, 23.72, 7.0];

/// Standard gain sequences `lambda_0..lambda_k` for orders `k = 1..=5`.
const LEVANT_LAMBDA: [&[f64]; 5] = [
    &[1.1, 1.5],
    &[1.1, 2.12, 2.0],
    &[1.1, 3.06, 4.16, 3.0],
    &[1.1, 4.57, 9.30, 10.03, 5.0],
    &SIM_LAMBDA,
];

/// Tabulated gains for a homogeneous differentiator of order `k` (`m` for the
/// filtering form, `n` for the standard one).
pub fn levant_lambda(k: usize) -> Option<&'static [f64]> {
    k.checked_sub(1).and_then(|i| LEVANT_LAMBDA.get(i)).copied()
}

/// How the continuous roots `b_j` are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum RootSpec {
    /// All `m + 1` roots equal to the given negative real value.
    Repeated(f64),
    /// Roots of the homogeneous characteristic polynomial built from `lambda` and `L`.
    FromCharPoly,
    /// An explicit conjugate-closed root list.
    Explicit(Vec<Complex64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifferentiatorParams {
    /// Number of derivatives estimated.
    pub n: usize,
    /// Filtering order; zero only for the standard differentiator.
    pub n_f: usize,
    /// Sampling period in seconds.
    pub tau: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    /// Bound on `|f_0^{(n+1)}|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    pub roots: RootSpec,
}

impl DifferentiatorParams {
    pub fn m(&self) -> usize {
        self.n + self.n_f
    }

    fn check_common(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "tau must be > 0, got {}",
                self.tau
            )));
        }
        if let Some(lambda) = &self.lambda {
            if lambda.len() != self.m() + 1 {
                return Err(Error::DimensionMismatch(format!(
                    "expected {} gains for m = {}, got {}",
                    self.m() + 1,
                    self.m(),
                    lambda.len()
                )));
            }
            if let Some(g) = lambda.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
                return Err(Error::InvalidParameter(format!(
                    "gains must be positive, got {g}"
                )));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!("L must be > 0, got {l}")));
            }
        }
        Ok(())
    }

    /// Gains and Lipschitz bound, required by the Euler baselines and by
    /// [`RootSpec::FromCharPoly`].
    pub fn gains(&self) -> Result<(&[f64], f64)> {
        match (&self.lambda, self.lipschitz) {
            (Some(lambda), Some(l)) => Ok((lambda, l)),
            _ => Err(Error::InvalidParameter(
                "gains lambda and Lipschitz bound L are required".into(),
            )),
        }
    }

    /// Validates the parameters and resolves the continuous roots `b_j`.
    pub fn resolve_roots(&self) -> Result<RootSet> {
        self.check_common()?;
        let count = self.m() + 1;
        let roots = match &self.roots {
            RootSpec::Repeated(b) => RootSet::repeated(*b, count),
            RootSpec::FromCharPoly => {
                let (lambda, l) = self.gains()?;
                RealPolynomial::homogeneous_char_poly(lambda, l, self.m())?.roots()?
            }
            RootSpec::Explicit(list) => {
                if list.len() != count {
                    return Err(Error::DimensionMismatch(format!(
                        "expected {count} explicit roots, got {}",
                        list.len()
                    )));
                }
                RootSet::new(list.clone())?
            }
        };
        if let Some(r) = roots.iter().find(|r| !(r.re < 0.0)) {
            return Err(Error::UnstableRoot { re: r.re, im: r.im });
        }
        Ok(roots)
    }
}

/// Live state of a running differentiator.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    /// Filter states `w_1..w_{n_f}`.
    pub w: Vec<f64>,
    /// Estimates `z_0..z_n`.
    pub z: Vec<f64>,
    pub k: u64,
    pub t0: f64,
    pub tau: f64,
}

impl FilterState {
    /// Default initialization: `z_0` from the first sample, everything else zero.
    pub fn init(params: &DifferentiatorParams, f0_sample: f64, t0: f64) -> Self {
        let mut z = vec![0.0; params.n + 1];
        z[0] = f0_sample;
        Self {
            w: vec![0.0; params.n_f],
            z,
            k: 0,
            t0,
            tau: params.tau,
        }
    }

    pub fn from_parts(w: Vec<f64>, z: Vec<f64>, t0: f64, tau: f64) -> Self {
        Self {
            w,
            z,
            k: 0,
            t0,
            tau,
        }
    }

    pub fn t(&self) -> f64 {
        self.t0 + self.k as f64 * self.tau
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            derivatives: self.z.clone(),
        }
    }

    fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.w.len() + self.z.len(),
            self.w.iter().chain(&self.z).copied(),
        )
    }

    fn successor(&self, x: &[f64]) -> Result<Self> {
        let k = self.k + 1;
        if let Some((index, value)) = x
            .iter()
            .copied()
            .enumerate()
            .find(|(_, v)| !(v.abs() <= DIVERGENCE_LIMIT))
        {
            return Err(Error::NonFinite {
                step: k,
                index,
                value,
            });
        }
        let nf = self.w.len();
        Ok(Self {
            w: x[..nf].to_vec(),
            z: x[nf..].to_vec(),
            k,
            t0: self.t0,
            tau: self.tau,
        })
    }
}

/// Estimates of `f_0, f_0', .., f_0^{(n)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub derivatives: Vec<f64>,
}

/// `|x|^p sign(x)`, with `sign(0) = 0`.
fn signed_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(p) * x.signum()
    }
}

/// One sample of the matching differentiator; also returns the gain used.
pub fn step_matching_with_gain(
    state: &FilterState,
    f_k: f64,
    cache: &SynthesisCache,
    b: &RootSet,
    epsilon_w: f64,
) -> Result<(FilterState, Estimate, synthesis::GammaVector)> {
    let n_f = state.w.len();
    if n_f == 0 || state.w.len() + state.z.len() != cache.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state ({} + {}) does not match cache dimension {}",
            state.w.len(),
            state.z.len(),
            cache.dim()
        )));
    }
    let w1 = state.w[0];
    let shifts = synthesis::matching_shift(b, w1, cache.tau(), cache.m(), epsilon_w)?;
    let gamma = synthesis::gamma_from_shifts(&shifts, cache)?;
    let x = state.stacked();
    let mut next = &cache.psi.matrix * &x;
    next.axpy(w1, &gamma.0, 1.0);
    next[n_f - 1] -= cache.tau() * f_k;
    let succ = state.successor(next.as_slice())?;
    let est = succ.estimate();
    Ok((succ, est, gamma))
}

/// One sample of the matching differentiator.
pub fn step_matching(
    state: &FilterState,
    f_k: f64,
    cache: &SynthesisCache,
    b: &RootSet,
) -> Result<(FilterState, Estimate)> {
    let (s, e, _) = step_matching_with_gain(state, f_k, cache, b, DEFAULT_EPSILON_W)?;
    Ok((s, e))
}

/// One explicit Euler step of the standard differentiator.
pub fn step_standard_euler(
    state: &FilterState,
    f_k: f64,
    params: &DifferentiatorParams,
) -> Result<(FilterState, Estimate)> {
    let (lambda, l) = params.gains()?;
    let n = params.n;
    if params.n_f != 0 || !state.w.is_empty() || state.z.len() != n + 1 {
        return Err(Error::DimensionMismatch(
            "standard differentiator takes n_f = 0".into(),
        ));
    }
    let order = (n + 1) as f64;
    let sigma = state.z[0] - f_k;
    let z = &state.z;
    let next: Vec<f64> = (0..=n)
        .map(|j| {
            let inj = -lambda[n - j]
                * l.powf((j + 1) as f64 / order)
                * signed_pow(sigma, (n - j) as f64 / order);
            let drift = if j < n { z[j + 1] } else { 0.0 };
            z[j] + params.tau * (drift + inj)
        })
        .collect();
    let succ = state.successor(&next)?;
    let est = succ.estimate();
    Ok((succ, est))
}

/// One explicit Euler step of the filtering differentiator.
///
/// Row `i` (1-based over the stacked state) carries the injection
/// `-lambda_{m+1-i} L^{i/(m+1)} |w_1|^{(m+1-i)/(m+1)} sign(w_1)`.
pub fn step_filtering_euler(
    state: &FilterState,
    f_k: f64,
    params: &DifferentiatorParams,
) -> Result<(FilterState, Estimate)> {
    let (lambda, l) = params.gains()?;
    let m = params.m();
    let n_f = params.n_f;
    if n_f == 0 || state.w.len() != n_f || state.z.len() != params.n + 1 {
        return Err(Error::DimensionMismatch(
            "filtering differentiator needs n_f >= 1 filter states".into(),
        ));
    }
    let order = (m + 1) as f64;
    let x: Vec<f64> = state.w.iter().chain(&state.z).copied().collect();
    let w1 = x[0];
    let next: Vec<f64> = (1..=m + 1)
        .map(|i| {
            let inj = -lambda[m + 1 - i]
                * l.powf(i as f64 / order)
                * signed_pow(w1, (m + 1 - i) as f64 / order);
            let drift = match i {
                _ if i == m + 1 => 0.0,
                _ if i == n_f => x[i] - f_k,
                _ => x[i],
            };
            x[i - 1] + params.tau * (drift + inj)
        })
        .collect();
    let succ = state.successor(&next)?;
    let est = succ.estimate();
    Ok((succ, est))
}

/// Which differentiator to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Matching,
    StandardEuler,
    FilteringEuler,
}

/// Per-sample interface shared by all differentiators.
pub trait Differentiator {
    fn state(&self) -> &FilterState;

    /// Consumes one sample and returns the updated estimates.
    fn step(&mut self, f_k: f64) -> Result<Estimate>;

    /// Norm of the injection gain used in the last step, zero when there is none.
    fn gamma_norm(&self) -> f64 {
        0.0
    }
}

pub struct MatchingDifferentiator {
    cache: SynthesisCache,
    roots: RootSet,
    state: FilterState,
    epsilon_w: f64,
    last_gamma_norm: f64,
}

impl MatchingDifferentiator {
    pub fn new(params: &DifferentiatorParams, state: FilterState) -> Result<Self> {
        let roots = params.resolve_roots()?;
        let cache = SynthesisCache::new(params.n, params.n_f, params.tau)?;
        Ok(Self {
            cache,
            roots,
            state,
            epsilon_w: DEFAULT_EPSILON_W,
            last_gamma_norm: 0.0,
        })
    }

    pub fn with_epsilon_w(mut self, epsilon_w: f64) -> Self {
        self.epsilon_w = epsilon_w;
        self
    }

    pub fn cache(&self) -> &SynthesisCache {
        &self.cache
    }

    pub fn roots(&self) -> &RootSet {
        &self.roots
    }
}

impl Differentiator for MatchingDifferentiator {
    fn state(&self) -> &FilterState {
        &self.state
    }

    fn step(&mut self, f_k: f64) -> Result<Estimate> {
        let (state, est, gamma) =
            step_matching_with_gain(&self.state, f_k, &self.cache, &self.roots, self.epsilon_w)?;
        self.state = state;
        self.last_gamma_norm = gamma.norm();
        Ok(est)
    }

    fn gamma_norm(&self) -> f64 {
        self.last_gamma_norm
    }
}

pub struct StandardEuler {
    params: DifferentiatorParams,
    state: FilterState,
}

impl StandardEuler {
    pub fn new(params: &DifferentiatorParams, state: FilterState) -> Result<Self> {
        params.check_common()?;
        params.gains()?;
        if params.n_f != 0 {
            return Err(Error::InvalidOrder(format!(
                "standard differentiator takes n_f = 0, got {}",
                params.n_f
            )));
        }
        Ok(Self {
            params: params.clone(),
            state,
        })
    }
}

impl Differentiator for StandardEuler {
    fn state(&self) -> &FilterState {
        &self.state
    }

    fn step(&mut self, f_k: f64) -> Result<Estimate> {
        let (state, est) = step_standard_euler(&self.state, f_k, &self.params)?;
        self.state = state;
        Ok(est)
    }
}

pub struct FilteringEuler {
    params: DifferentiatorParams,
    state: FilterState,
}

impl FilteringEuler {
    pub fn new(params: &DifferentiatorParams, state: FilterState) -> Result<Self> {
        params.check_common()?;
        params.gains()?;
        if params.n_f == 0 {
            return Err(Error::InvalidOrder(
                "filtering differentiator needs n_f >= 1".into(),
            ));
        }
        Ok(Self {
            params: params.clone(),
            state,
        })
    }
}

impl Differentiator for FilteringEuler {
    fn state(&self) -> &FilterState {
        &self.state
    }

    fn step(&mut self, f_k: f64) -> Result<Estimate> {
        let (state, est) = step_filtering_euler(&self.state, f_k, &self.params)?;
        self.state = state;
        Ok(est)
    }
}

/// Builds the selected differentiator from parameters and an initial state.
pub fn build(
    variant: Variant,
    params: &DifferentiatorParams,
    state: FilterState,
) -> Result<Box<dyn Differentiator>> {
    Ok(match variant {
        Variant::Matching => Box::new(MatchingDifferentiator::new(params, state)?),
        Variant::StandardEuler => Box::new(StandardEuler::new(params, state)?),
        Variant::FilteringEuler => Box::new(FilteringEuler::new(params, state)?),
    })
}
