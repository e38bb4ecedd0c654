//! Simulation engine: signal and noise models, the run loop, trace records and presets.

mod noise;
mod signal;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

pub use noise::{GaussianRng, NoiseModel, NoiseSource};
pub use signal::{SignalModel, Sinusoid};

use crate::differentiators::{
    self, DifferentiatorParams, FilterState, RootSpec, Variant, SIM_LAMBDA,
};
use crate::error::{Error, Result};

/// Longest run accepted, in steps.
pub const MAX_STEPS: u64 = 100_000_000;

/// Seed of the Gaussian noise in the `sim2` preset.
pub const DEFAULT_SEED: u64 = 20_200_817;

/// Validity limit of `L = 2` for `t cos(t/2)`.
pub const SIM1_L_VALID_UNTIL: f64 = 31.54619;

/// One recorded sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    pub t: f64,
    /// Measured input `f_0(t_k) + Delta(t_k)`.
    pub f: f64,
    pub z: Vec<f64>,
    /// Exact derivatives, when the signal is known.
    pub x: Option<Vec<f64>>,
    /// `z - x`
    pub sigma: Option<Vec<f64>>,
    pub w: Vec<f64>,
    pub gamma_norm: f64,
}

/// How the differentiator state is seeded at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// `z_0` from the first measured sample, all else zero.
    #[default]
    FirstSample,
    /// `z = x(t0)`, `w = 0`.
    Exact,
    /// `z = x(t0) + sigma`, `w` as given.
    ErrorOffset {
        w: Vec<f64>,
        sigma: Vec<f64>,
    },
    Explicit {
        w: Vec<f64>,
        z: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: DifferentiatorParams,
    pub signal: SignalModel,
    pub noise: NoiseModel,
    pub t0: f64,
    pub t_end: f64,
    pub variant: Variant,
    #[serde(default = "default_stride")]
    pub record_stride: u64,
    #[serde(default)]
    pub initial: InitialCondition,
}

fn default_stride() -> u64 {
    1
}

impl RunConfig {
    /// Number of steps from `t0` to `t_end`.
    pub fn steps(&self) -> Result<u64> {
        if !(self.t_end > self.t0) || !self.t0.is_finite() || !self.t_end.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need t_end > t0, got [{}, {}]",
                self.t0, self.t_end
            )));
        }
        if !(self.params.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be > 0, got {}",
                self.params.tau
            )));
        }
        let steps = ((self.t_end - self.t0) / self.params.tau).round();
        if !(steps >= 1.0 && steps <= MAX_STEPS as f64) {
            return Err(Error::InvalidParameter(format!(
                "{steps} steps outside [1, {MAX_STEPS}]"
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record stride must be >= 1".into()));
        }
        Ok(steps as u64)
    }

    fn initial_state(&self, f_first: f64) -> Result<FilterState> {
        let p = &self.params;
        let (nw, nz) = (p.n_f, p.n + 1);
        let check = |name: &str, v: &[f64], len: usize| {
            if v.len() == len {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(format!(
                    "initial {name} has {} entries, expected {len}",
                    v.len()
                )))
            }
        };
        Ok(match &self.initial {
            InitialCondition::FirstSample => FilterState::init(p, f_first, self.t0),
            InitialCondition::Exact => FilterState::from_parts(
                vec![0.0; nw],
                self.signal.truth(self.t0, p.n),
                self.t0,
                p.tau,
            ),
            InitialCondition::ErrorOffset { w, sigma } => {
                check("w", w, nw)?;
                check("sigma", sigma, nz)?;
                let z = self
                    .signal
                    .truth(self.t0, p.n)
                    .iter()
                    .zip(sigma)
                    .map(|(x, s)| x + s)
                    .collect();
                FilterState::from_parts(w.clone(), z, self.t0, p.tau)
            }
            InitialCondition::Explicit { w, z } => {
                check("w", w, nw)?;
                check("z", z, nz)?;
                FilterState::from_parts(w.clone(), z.clone(), self.t0, p.tau)
            }
        })
    }
}

/// Runs a configuration, handing every `record_stride`-th record (and the last) to `visit`.
pub fn run_with(config: &RunConfig, mut visit: impl FnMut(StepRecord)) -> Result<()> {
    let steps = config.steps()?;
    let n = config.params.n;
    let mut noise = config.noise.source();
    let sample = |noise: &mut NoiseSource, t: f64| config.signal.value(t) + noise.sample(t);

    let mut f_k = sample(&mut noise, config.t0);
    let mut diff =
        differentiators::build(config.variant, &config.params, config.initial_state(f_k)?)?;
    for k in 0..=steps {
        let state = diff.state();
        if k % config.record_stride == 0 || k == steps {
            let t = state.t();
            let x = config.signal.truth(t, n);
            let sigma = state.z.iter().zip(&x).map(|(z, x)| z - x).collect();
            visit(StepRecord {
                k,
                t,
                f: f_k,
                z: state.z.clone(),
                x: Some(x),
                sigma: Some(sigma),
                w: state.w.clone(),
                gamma_norm: diff.gamma_norm(),
            });
        }
        if k == steps {
            break;
        }
        diff.step(f_k).map_err(|e| Error::Diverged {
            step: k + 1,
            source: Box::new(e),
        })?;
        f_k = sample(&mut noise, diff.state().t());
    }
    Ok(())
}

/// Runs a configuration and collects the recorded samples.
pub fn run(config: &RunConfig) -> Result<Vec<StepRecord>> {
    let mut records = Vec::new();
    run_with(config, |r| records.push(r))?;
    Ok(records)
}

/// Runs independent configurations on separate threads.
pub fn run_many(configs: &[RunConfig]) -> Vec<Result<Vec<StepRecord>>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("run thread panicked"))
            .collect()
    })
}

/// Explicit changes applied on top of a preset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PresetOverrides {
    pub roots: Option<RootSpec>,
    pub tau: Option<f64>,
    pub t_end: Option<f64>,
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub record_stride: Option<u64>,
}

/// The two experiment presets, `sim1` (noise-free `t cos(t/2)`) and `sim2`
/// (harmonic mix under `cos(10000 t)` plus unit Gaussian noise).
pub fn preset(name: &str, overrides: &PresetOverrides) -> Result<RunConfig> {
    let mut config = match name {
        "sim1" => RunConfig {
            params: DifferentiatorParams {
                n: 3,
                n_f: 2,
                tau: 0.01,
                lambda: Some(SIM_LAMBDA.to_vec()),
                lipschitz: Some(2.0),
                roots: RootSpec::FromCharPoly,
            },
            signal: SignalModel::TCosHalf,
            noise: NoiseModel::None,
            t0: 0.0,
            t_end: 30.0,
            variant: Variant::Matching,
            record_stride: 1,
            initial: InitialCondition::FirstSample,
        },
        "sim2" => RunConfig {
            params: DifferentiatorParams {
                n: 3,
                n_f: 2,
                tau: 1e-4,
                lambda: Some(SIM_LAMBDA.to_vec()),
                lipschitz: Some(320.0),
                roots: RootSpec::FromCharPoly,
            },
            signal: SignalModel::HarmonicMix,
            noise: NoiseModel::Sum {
                terms: vec![
                    NoiseModel::Sinusoid {
                        amplitude: 1.0,
                        frequency: 10000.0,
                    },
                    NoiseModel::Gaussian {
                        sigma: 1.0,
                        seed: DEFAULT_SEED,
                    },
                ],
            },
            t0: 0.0,
            t_end: 10.0,
            variant: Variant::Matching,
            record_stride: 10,
            initial: InitialCondition::FirstSample,
        },
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    if let Some(roots) = &overrides.roots {
        config.params.roots = roots.clone();
    }
    if let Some(tau) = overrides.tau {
        config.params.tau = tau;
    }
    if let Some(t_end) = overrides.t_end {
        config.t_end = t_end;
    }
    if let Some(seed) = overrides.seed {
        config.noise = config.noise.with_seed(seed);
    }
    if let Some(variant) = overrides.variant {
        config.variant = variant;
        if variant == Variant::StandardEuler {
            // the standard differentiator has no filter states and its own gain table
            config.params.n_f = 0;
            config.params.lambda =
                differentiators::levant_lambda(config.params.n).map(<[f64]>::to_vec);
        }
    }
    if let Some(stride) = overrides.record_stride {
        config.record_stride = stride;
    }
    Ok(config)
}

/// Header of the trace CSV.
pub fn csv_header(n: usize, n_f: usize) -> String {
    let mut cols = vec!["k".to_string(), "t".to_string(), "f".to_string()];
    for prefix in ["z", "x", "sigma"] {
        cols.extend((0..=n).map(|j| format!("{prefix}{j}")));
    }
    cols.extend((1..=n_f).map(|j| format!("w{j}")));
    cols.push("gamma_norm".to_string());
    cols.join(",")
}

fn push_num(line: &mut String, v: f64) {
    use std::fmt::Write as _;
    // Debug formatting is the shortest string that parses back to the same f64
    let _ = write!(line, ",{v:?}");
}

/// One CSV row.
pub fn csv_row(r: &StepRecord) -> String {
    let mut line = r.k.to_string();
    push_num(&mut line, r.t);
    push_num(&mut line, r.f);
    let nan = vec![f64::NAN; r.z.len()];
    for v in
        r.z.iter()
            .chain(r.x.as_ref().unwrap_or(&nan))
            .chain(r.sigma.as_ref().unwrap_or(&nan))
            .chain(&r.w)
    {
        push_num(&mut line, *v);
    }
    push_num(&mut line, r.gamma_norm);
    line
}

/// Streams records as CSV; used through [`run_with`] for long runs.
pub struct CsvTraceWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvTraceWriter<W> {
    /// Writes the optional `# ` comment line and the header row.
    pub fn new(mut out: W, n: usize, n_f: usize, comment: Option<&str>) -> io::Result<Self> {
        if let Some(c) = comment {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "{}", csv_header(n, n_f))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, record: &StepRecord) -> io::Result<()> {
        writeln!(self.out, "{}", csv_row(record))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
