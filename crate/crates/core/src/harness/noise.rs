//! Measurement noise models.
//!
//! Gaussian noise uses xoshiro256++ seeded through SplitMix64, and the Box–Muller
//! transform on two uniforms per draw (cosine branch only), so a seed fixes the
//! sequence on every platform.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    None,
    /// `amplitude cos(frequency t)`, frequency in rad/s.
    Sinusoid {
        amplitude: f64,
        frequency: f64,
    },
    /// i.i.d. `N(0, sigma^2)`, one draw per sample.
    Gaussian {
        sigma: f64,
        seed: u64,
    },
    Sum {
        terms: Vec<NoiseModel>,
    },
}

impl NoiseModel {
    /// Replaces the seed of every Gaussian term.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            NoiseModel::Gaussian { sigma, .. } => NoiseModel::Gaussian {
                sigma: *sigma,
                seed,
            },
            NoiseModel::Sum { terms } => NoiseModel::Sum {
                terms: terms.iter().map(|t| t.with_seed(seed)).collect(),
            },
            other => other.clone(),
        }
    }

    /// Upper bound on `|Delta|` for the deterministic parts, `None` if unbounded.
    pub fn bound(&self) -> Option<f64> {
        match self {
            NoiseModel::None => Some(0.0),
            NoiseModel::Sinusoid { amplitude, .. } => Some(amplitude.abs()),
            NoiseModel::Gaussian { .. } => None,
            NoiseModel::Sum { terms } => terms.iter().map(|t| t.bound()).sum(),
        }
    }

    pub fn source(&self) -> NoiseSource {
        NoiseSource::new(self)
    }
}

/// Seedable standard normal generator.
#[derive(Debug, Clone)]
pub struct GaussianRng {
    rng: Xoshiro256PlusPlus,
}

impl GaussianRng {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One standard normal draw.
    pub fn next_standard(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform(); // (0, 1]
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Stateful sampler for a [`NoiseModel`]; call [`NoiseSource::sample`] once per sample time.
#[derive(Debug, Clone)]
pub enum NoiseSource {
    None,
    Sinusoid { amplitude: f64, frequency: f64 },
    Gaussian { sigma: f64, rng: GaussianRng },
    Sum(Vec<NoiseSource>),
}

impl NoiseSource {
    pub fn new(model: &NoiseModel) -> Self {
        match model {
            NoiseModel::None => NoiseSource::None,
            NoiseModel::Sinusoid {
                amplitude,
                frequency,
            } => NoiseSource::Sinusoid {
                amplitude: *amplitude,
                frequency: *frequency,
            },
            NoiseModel::Gaussian { sigma, seed } => NoiseSource::Gaussian {
                sigma: *sigma,
                rng: GaussianRng::new(*seed),
            },
            NoiseModel::Sum { terms } => {
                NoiseSource::Sum(terms.iter().map(NoiseSource::new).collect())
            }
        }
    }

    pub fn sample(&mut self, t: f64) -> f64 {
        match self {
            NoiseSource::None => 0.0,
            NoiseSource::Sinusoid {
                amplitude,
                frequency,
            } => *amplitude * (*frequency * t).cos(),
            NoiseSource::Gaussian { sigma, rng } => *sigma * rng.next_standard(),
            NoiseSource::Sum(terms) => terms.iter_mut().map(|s| s.sample(t)).sum(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_statistics() {
        let mut rng = GaussianRng::new(12345);
        let count = 1_000_000;
        let draws: Vec<f64> = (0..count).map(|_| rng.next_standard()).collect();
        let mean = draws.iter().sum::<f64>() / count as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
        assert!(mean.abs() < 4.0 / (count as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn gaussian_is_seeded() {
        let model = NoiseModel::Gaussian {
            sigma: 2.0,
            seed: 9,
        };
        let mut a = model.source();
        let mut b = model.source();
        for k in 0..100 {
            assert_eq!(a.sample(k as f64).to_bits(), b.sample(k as f64).to_bits());
        }
        let mut c = model.with_seed(10).source();
        assert_ne!(a.sample(0.0), c.sample(0.0));
    }

    #[test]
    fn sum_of_sinusoid_and_none() {
        let model = NoiseModel::Sum {
            terms: vec![
                NoiseModel::Sinusoid {
                    amplitude: 1.0,
                    frequency: 10000.0,
                },
                NoiseModel::None,
            ],
        };
        let mut s = model.source();
        assert_eq!(s.sample(0.0), 1.0);
        assert_eq!(model.bound(), Some(1.0));
        let with_gauss = NoiseModel::Sum {
            terms: vec![NoiseModel::Gaussian {
                sigma: 1.0,
                seed: 1,
            }],
        };
        assert_eq!(with_gauss.bound(), None);
    }
}
