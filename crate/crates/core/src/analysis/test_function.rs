use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sharpness of the log-sum-exp smoothing used when second derivatives of
/// the coordinate maximum are needed.
pub const DEFAULT_SMOOTHING: f64 = 50.0;

/// Functions `f: ℝ^d → ℝ` used by the comparison and concentration checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    /// `max_i x_i`.
    Max,
    /// `min_i x_i`.
    Min,
    /// `β⁻¹ ln Σ_i exp(β x_i)`, a C^∞ upper approximation of the maximum
    /// within `ln d / β`.
    SmoothMax { beta: f64 },
    /// `x_1 · x_2`.
    Product,
    /// `Σ_i w_i x_i`.
    Linear(Vec<f64>),
}

impl TestFunction {
    pub fn smooth_max() -> Self {
        TestFunction::SmoothMax {
            beta: DEFAULT_SMOOTHING,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Max => "max",
            TestFunction::Min => "min",
            TestFunction::SmoothMax { .. } => "smooth_max",
            TestFunction::Product => "product",
            TestFunction::Linear(_) => "linear",
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Max => x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            TestFunction::Min => x.iter().copied().fold(f64::INFINITY, f64::min),
            TestFunction::SmoothMax { beta } => {
                let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let s: f64 = x.iter().map(|&xi| (beta * (xi - m)).exp()).sum();
                m + s.ln() / beta
            }
            TestFunction::Product => x[0] * x[1],
            TestFunction::Linear(w) => w.iter().zip(x).map(|(a, b)| a * b).sum(),
        }
    }

    /// Whether [`TestFunction::hessian`] is available.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, TestFunction::Max | TestFunction::Min)
    }

    /// Writes the row-major `d×d` Hessian at `x` into `out`.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = x.len();
        debug_assert_eq!(out.len(), d * d);
        out.fill(0.0);
        match self {
            TestFunction::Max | TestFunction::Min => return Err(Error::NotSmooth(self.name())),
            TestFunction::SmoothMax { beta } => {
                // ∂_ij f = β (p_i δ_ij − p_i p_j) with p = softmax(βx)
                let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut p: Vec<f64> = x.iter().map(|&xi| (beta * (xi - m)).exp()).collect();
                let s: f64 = p.iter().sum();
                p.iter_mut().for_each(|pi| *pi /= s);
                for i in 0..d {
                    for j in 0..d {
                        out[i * d + j] = -beta * p[i] * p[j];
                    }
                    out[i * d + i] += beta * p[i];
                }
            }
            TestFunction::Product => {
                out[1] = 1.0;
                out[d] = 1.0;
            }
            TestFunction::Linear(_) => {}
        }
        Ok(())
    }

    /// Minimum input dimension.
    pub fn min_dim(&self) -> usize {
        match self {
            TestFunction::Product => 2,
            TestFunction::Linear(w) => w.len(),
            _ => 1,
        }
    }
}
