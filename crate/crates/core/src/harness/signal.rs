use serde::{Deserialize, Serialize};

/// `a sin(omega t + phi)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    #[serde(default)]
    pub phase: f64,
}

/// Test signals with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalModel {
    /// Ascending coefficients.
    Polynomial { coeffs: Vec<f64> },
    /// `t cos(t/2)`
    TCosHalf,
    /// `sin t + cos 2t + sin 3t + cos 4t`
    HarmonicMix,
    Custom {
        #[serde(default)]
        sinusoids: Vec<Sinusoid>,
        #[serde(default)]
        polynomial: Vec<f64>,
    },
}

/// k-th derivative of `sin x` (or `cos x`) evaluated at `x`, without the chain-rule factor.
fn trig_derivative(k: usize, x: f64, cosine: bool) -> f64 {
    let shift = if cosine { k + 1 } else { k };
    match shift % 4 {
        0 => x.sin(),
        1 => x.cos(),
        2 => -x.sin(),
        _ => -x.cos(),
    }
}

fn poly_derivative(coeffs: &[f64], k: usize, t: f64) -> f64 {
    // Horner on the k-th derivative's coefficients c_i i!/(i-k)!
    coeffs
        .iter()
        .enumerate()
        .skip(k)
        .rev()
        .fold(0.0, |acc, (i, &c)| {
            let falling: f64 = (i - k + 1..=i).map(|v| v as f64).product();
            acc * t + c * falling
        })
}

impl SignalModel {
    /// `f_0(t), f_0'(t), .., f_0^{(up_to)}(t)`.
    pub fn truth(&self, t: f64, up_to: usize) -> Vec<f64> {
        (0..=up_to).map(|k| self.derivative(k, t)).collect()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    pub fn derivative(&self, k: usize, t: f64) -> f64 {
        match self {
            SignalModel::Polynomial { coeffs } => poly_derivative(coeffs, k, t),
            SignalModel::TCosHalf => {
                // (t g)^(k) = t g^(k) + k g^(k-1), g = cos(t/2)
                let g = |j: usize| 0.5f64.powi(j as i32) * trig_derivative(j, 0.5 * t, true);
                let lower = if k > 0 { k as f64 * g(k - 1) } else { 0.0 };
                t * g(k) + lower
            }
            SignalModel::HarmonicMix => [(1.0f64, false), (2.0, true), (3.0, false), (4.0, true)]
                .iter()
                .map(|&(w, cosine)| w.powi(k as i32) * trig_derivative(k, w * t, cosine))
                .sum(),
            SignalModel::Custom {
                sinusoids,
                polynomial,
            } => {
                let wave: f64 = sinusoids
                    .iter()
                    .map(|s| {
                        s.amplitude
                            * s.frequency.powi(k as i32)
                            * trig_derivative(k, s.frequency * t + s.phase, false)
                    })
                    .sum();
                wave + poly_derivative(polynomial, k, t)
            }
        }
    }

    /// Analytic bound on `|f_0^{(k)}|` where one exists over all `t`.
    pub fn derivative_bound(&self, k: usize) -> Option<f64> {
        match self {
            SignalModel::HarmonicMix => Some((1..=4).map(|w| (w as f64).powi(k as i32)).sum()),
            SignalModel::Custom {
                sinusoids,
                polynomial,
            } if polynomial.len() <= k => Some(
                sinusoids
                    .iter()
                    .map(|s| s.amplitude.abs() * s.frequency.abs().powi(k as i32))
                    .sum(),
            ),
            SignalModel::Polynomial { coeffs } if coeffs.len() <= k => Some(0.0),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cubic_truth() {
        let s = SignalModel::Polynomial {
            coeffs: vec![0.0, 0.0, 0.0, 1.0],
        };
        assert_eq!(s.truth(2.0, 4), vec![8.0, 12.0, 12.0, 6.0, 0.0]);
    }

    #[test]
    fn t_cos_half_at_origin() {
        let x = SignalModel::TCosHalf.truth(0.0, 4);
        let expected = [0.0, 1.0, 0.0, -0.75, 0.0];
        for (a, e) in x.iter().zip(expected) {
            assert_abs_diff_eq!(*a, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn t_cos_half_first_derivative() {
        let t = 1.3;
        let d = SignalModel::TCosHalf.derivative(1, t);
        assert_abs_diff_eq!(
            d,
            (t / 2.0).cos() - (t / 2.0) * (t / 2.0).sin(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn harmonic_mix_bound() {
        assert_eq!(SignalModel::HarmonicMix.derivative_bound(4), Some(354.0));
        let x = SignalModel::HarmonicMix.truth(0.0, 4);
        // f(0) = 2, f''''(0) = 16 + 256
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x[4], 272.0, epsilon = 1e-12);
    }

    #[test]
    fn custom_combines_parts() {
        let s = SignalModel::Custom {
            sinusoids: vec![Sinusoid {
                amplitude: 2.0,
                frequency: 3.0,
                phase: 0.5,
            }],
            polynomial: vec![1.0, 1.0],
        };
        let t = 0.7;
        assert_abs_diff_eq!(
            s.value(t),
            2.0 * (3.0 * t + 0.5).sin() + 1.0 + t,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.derivative(1, t),
            6.0 * (3.0 * t + 0.5).cos() + 1.0,
            epsilon = 1e-14
        );
    }
}
