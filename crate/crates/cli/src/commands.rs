use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use smdiff::analysis::{self, CertificateRecord, ErrorMetrics, NeighborhoodCheck, RemainderBound};
use smdiff::harness::{
    self, CsvTraceWriter, InitialCondition, NoiseModel, PresetOverrides, RunConfig, SignalModel,
    StepRecord,
};
use smdiff::num_complex::Complex64;
use smdiff::synthesis::{self, SynthesisCache};
use smdiff::{DifferentiatorParams, RealPolynomial, RootSet, Variant};

use crate::{CertifyArgs, GainsArgs, RootsArgs, RunArgs, Source};

const DEFAULT_SETTLE_FRACTION: f64 = 0.5;

/// Log grid of frozen `|w_1|` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub w1_min: f64,
    pub w1_max: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            w1_min: 1e-4,
            w1_max: 1e2,
            points: 13,
        }
    }
}

impl GridSpec {
    fn values(&self) -> Result<Vec<f64>> {
        Ok(analysis::log_grid(self.w1_min, self.w1_max, self.points)?)
    }
}

/// JSON config file: a run configuration plus output and analysis settings.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct CliConfig {
    params: DifferentiatorParams,
    signal: SignalModel,
    #[serde(default = "no_noise")]
    noise: NoiseModel,
    #[serde(default)]
    t0: f64,
    t_end: f64,
    #[serde(default = "matching")]
    variant: Variant,
    #[serde(default = "one")]
    record_stride: u64,
    #[serde(default)]
    initial: InitialCondition,
    out: Option<PathBuf>,
    metrics: Option<PathBuf>,
    settle_fraction: Option<f64>,
    grid: Option<GridSpec>,
}

fn no_noise() -> NoiseModel {
    NoiseModel::None
}

fn matching() -> Variant {
    Variant::Matching
}

fn one() -> u64 {
    1
}

struct Resolved {
    config: RunConfig,
    out: Option<PathBuf>,
    metrics: Option<PathBuf>,
    settle_fraction: Option<f64>,
    grid: Option<GridSpec>,
}

fn read_config(path: &Path) -> Result<CliConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn resolve(source: &Source, overrides: PresetOverrides) -> Result<Resolved> {
    match (&source.preset, &source.config) {
        (Some(name), None) => Ok(Resolved {
            config: harness::preset(name, &overrides)?,
            out: None,
            metrics: None,
            settle_fraction: None,
            grid: None,
        }),
        (None, Some(path)) => {
            let file = read_config(path)?;
            let mut config = RunConfig {
                params: file.params,
                signal: file.signal,
                noise: file.noise,
                t0: file.t0,
                t_end: file.t_end,
                variant: file.variant,
                record_stride: file.record_stride,
                initial: file.initial,
            };
            if let Some(roots) = overrides.roots {
                config.params.roots = roots;
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
            }
            if let Some(stride) = overrides.record_stride {
                config.record_stride = stride;
            }
            Ok(Resolved {
                config,
                out: file.out,
                metrics: file.metrics,
                settle_fraction: file.settle_fraction,
                grid: file.grid,
            })
        }
        _ => bail!("give exactly one of --preset or --config"),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct RunMetrics<'a> {
    config: &'a RunConfig,
    steps: u64,
    settle_fraction: f64,
    #[serde(flatten)]
    errors: ErrorMetrics,
    remainder_bound: Option<RemainderBound>,
    /// Analytic bound on `|f_0^{(n+1)}|`, when the signal has one.
    signal_derivative_bound: Option<f64>,
    noise_free: bool,
    neighborhood: Option<NeighborhoodCheck>,
}

fn run_metrics<'a>(
    config: &'a RunConfig,
    records: &[StepRecord],
    settle_fraction: f64,
    grid: &GridSpec,
) -> Result<RunMetrics<'a>> {
    let params = &config.params;
    let neighborhood = match (config.variant, params.lipschitz) {
        (Variant::Matching, Some(_)) => Some(analysis::neighborhood_check(
            params,
            records,
            &grid.values()?,
        )?),
        _ => None,
    };
    Ok(RunMetrics {
        config,
        steps: config.steps()?,
        settle_fraction,
        errors: analysis::error_metrics(records, settle_fraction)?,
        remainder_bound: params
            .lipschitz
            .map(|l| analysis::remainder_bound(l, params.tau, params.n)),
        signal_derivative_bound: config.signal.derivative_bound(params.n + 1),
        noise_free: config.noise == NoiseModel::None,
        neighborhood,
    })
}

pub fn run(args: RunArgs) -> Result<()> {
    let overrides = PresetOverrides {
        roots: args.overrides.roots,
        tau: args.overrides.tau,
        t_end: args.t_end,
        seed: args.seed,
        variant: args.variant.map(Variant::from),
        record_stride: args.record_stride,
    };
    let resolved = resolve(&args.source, overrides)?;
    let config = resolved.config;
    let settle_fraction = args
        .settle_fraction
        .or(resolved.settle_fraction)
        .unwrap_or(DEFAULT_SETTLE_FRACTION);
    let grid = resolved.grid.unwrap_or_default();
    let out_path = args.out.or(resolved.out);
    let metrics_path = args.metrics.or(resolved.metrics);

    // fail on bad parameters before touching any output file
    config.steps()?;
    if config.variant == Variant::Matching {
        config.params.resolve_roots()?;
    }
    if !(settle_fraction > 0.0 && settle_fraction < 1.0) {
        bail!("settle fraction must lie in (0, 1), got {settle_fraction}");
    }

    let echo = serde_json::to_string(&config)?;
    let sink: Box<dyn Write> = match &out_path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut writer = CsvTraceWriter::new(
        sink,
        config.params.n,
        config.params.n_f,
        Some(&format!("config {echo}")),
    )?;
    let mut records = Vec::new();
    let mut io_error = None;
    let outcome = harness::run_with(&config, |r| {
        if io_error.is_none() {
            if let Err(e) = writer.write(&r) {
                io_error = Some(e);
            }
        }
        records.push(r);
    });
    let flushed = writer.finish();
    if let Some(e) = io_error {
        return Err(anyhow!(e).context("writing trace"));
    }
    flushed.context("writing trace")?;
    outcome.with_context(|| format!("run stopped after {} recorded samples", records.len()))?;

    let metrics = run_metrics(&config, &records, settle_fraction, &grid)?;
    let value = serde_json::to_value(&metrics)?;
    match (&metrics_path, &out_path) {
        (Some(p), _) => {
            let mut w = create(p)?;
            serde_json::to_writer_pretty(&mut w, &value)?;
            writeln!(w)?;
            w.flush()?;
        }
        (None, Some(_)) => print_json(&value)?,
        (None, None) => eprintln!("{}", serde_json::to_string_pretty(&value)?),
    }
    Ok(())
}

#[derive(Serialize)]
struct RootRecord {
    re: f64,
    im: f64,
    residual: f64,
}

pub fn roots(args: RootsArgs) -> Result<()> {
    let (lambda, lipschitz) = match &args.preset {
        Some(name) => {
            let config = harness::preset(name, &PresetOverrides::default())?;
            let lambda = config
                .params
                .lambda
                .ok_or_else(|| anyhow!("preset has no gains"))?;
            (
                args.lambda.unwrap_or(lambda),
                args.lipschitz.or(config.params.lipschitz),
            )
        }
        None => (
            args.lambda.ok_or_else(|| anyhow!("--lambda is required"))?,
            args.lipschitz,
        ),
    };
    let lipschitz = lipschitz.ok_or_else(|| anyhow!("--lipschitz is required"))?;
    if lambda.is_empty() {
        bail!("--lambda needs at least one gain");
    }
    let m = args.m.unwrap_or(lambda.len() - 1);
    let q = RealPolynomial::homogeneous_char_poly(&lambda, lipschitz, m)?;
    let found = q.roots()?.sorted();
    let roots: Vec<RootRecord> = found
        .iter()
        .map(|r| RootRecord {
            re: r.re,
            im: r.im,
            residual: q.normalized_residual(*r),
        })
        .collect();
    print_json(&json!({
        "lambda": lambda,
        "L": lipschitz,
        "m": m,
        "coefficients": q.coeffs(),
        "roots": roots,
    }))
}

#[derive(Serialize)]
struct ComplexRecord {
    re: f64,
    im: f64,
}

impl From<&Complex64> for ComplexRecord {
    fn from(c: &Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

pub fn gains(args: GainsArgs) -> Result<()> {
    let d = RootSet::new(args.d.clone())?;
    let cache = SynthesisCache::new(args.n, args.nf, args.tau)?;
    let gamma = synthesis::gamma(&d, &cache)?;
    let psi = &cache.psi;
    print_json(&json!({
        "n": args.n,
        "n_f": args.nf,
        "tau": args.tau,
        "d": d.iter().map(ComplexRecord::from).collect::<Vec<_>>(),
        "gamma": gamma.as_slice(),
        "residual": analysis::pole_placement_residual(psi, &gamma, &d)?,
        "annihilation_residual": analysis::annihilation_residual(psi, &gamma, &d)?,
    }))
}

fn certify_params(args: &CertifyArgs) -> Result<(DifferentiatorParams, Option<GridSpec>)> {
    let from_source = args.source.preset.is_some() || args.source.config.is_some();
    let (mut params, grid) = if from_source {
        let overrides = PresetOverrides {
            roots: args.overrides.roots.clone(),
            tau: args.overrides.tau,
            ..Default::default()
        };
        let resolved = resolve(&args.source, overrides)?;
        (resolved.config.params, resolved.grid)
    } else {
        let params = DifferentiatorParams {
            n: args
                .n
                .ok_or_else(|| anyhow!("--n is required without --preset or --config"))?,
            n_f: args
                .nf
                .ok_or_else(|| anyhow!("--nf is required without --preset or --config"))?,
            tau: args
                .overrides
                .tau
                .ok_or_else(|| anyhow!("--tau is required without --preset or --config"))?,
            lambda: None,
            lipschitz: None,
            roots: args
                .overrides
                .roots
                .clone()
                .ok_or_else(|| anyhow!("--roots is required without --preset or --config"))?,
        };
        (params, None)
    };
    if let Some(n) = args.n {
        params.n = n;
    }
    if let Some(n_f) = args.nf {
        params.n_f = n_f;
    }
    if let Some(lambda) = &args.lambda {
        params.lambda = Some(lambda.clone());
    }
    if let Some(l) = args.lipschitz {
        params.lipschitz = Some(l);
    }
    Ok((params, grid))
}

pub fn certify(args: CertifyArgs) -> Result<()> {
    let (params, grid) = certify_params(&args)?;
    let base = grid.unwrap_or_default();
    let grid = GridSpec {
        w1_min: args.w1_min.unwrap_or(base.w1_min),
        w1_max: args.w1_max.unwrap_or(base.w1_max),
        points: args.points.unwrap_or(base.points),
    };
    let certificates = analysis::certify_grid(&params, &grid.values()?)?;
    let records: Vec<CertificateRecord> =
        certificates.iter().map(CertificateRecord::from).collect();
    let k_max = records.iter().map(|c| c.k).fold(0.0, f64::max);
    print_json(&json!({
        "params": params,
        "grid": grid,
        "certificates": records,
        "K_max": k_max,
    }))
}
