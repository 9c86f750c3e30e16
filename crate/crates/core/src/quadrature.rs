//! Adaptive Gauss–Kronrod quadrature and a dyadic-shell test for integrals
//! with a possible singularity at the lower endpoint.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Kronrod 15-point abscissae (symmetric, non-negative half) and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss 7-point weights; the Gauss nodes are XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 2000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

/// Globally adaptive G7–K15 quadrature of `f` over `[a, b]` to absolute
/// tolerance `tol`. Returns `(value, error_estimate)`.
///
/// Non-finite integrand values are propagated into the result rather than
/// reported as failures, so callers can detect divergence themselves.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v0, e0) = gk15(&f, a, b);
    if !v0.is_finite() {
        return Ok((v0, f64::INFINITY));
    }
    // (lo, hi, value, error)
    let mut intervals = vec![(a, b, v0, e0)];
    let mut total_err = e0;
    while total_err > tol {
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::QuadratureFailure { lo: a, hi: b });
        }
        let (worst, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, e) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval can no longer be split in floating point
            return Err(Error::QuadratureFailure { lo: a, hi: b });
        }
        let (vl, el) = gk15(&f, lo, mid);
        let (vr, er) = gk15(&f, mid, hi);
        if !(vl.is_finite() && vr.is_finite()) {
            return Ok((f64::INFINITY, f64::INFINITY));
        }
        total_err += el + er - e;
        intervals.push((lo, mid, vl, el));
        intervals.push((mid, hi, vr, er));
    }
    let value = intervals.iter().map(|iv| iv.2).sum();
    let err = intervals.iter().map(|iv| iv.3).sum();
    Ok((value, err))
}

/// Outcome of a singular-integral convergence test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegralStatus {
    Convergent,
    Divergent,
}

/// Result of [`crate::covariance::dudley_integral`] and
/// [`crate::covariance::coalescence_criterion`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegralVerdict {
    pub status: IntegralStatus,
    /// Present iff the status is convergent.
    pub value: Option<f64>,
    pub abs_error: f64,
}

impl IntegralVerdict {
    pub fn divergent() -> Self {
        IntegralVerdict {
            status: IntegralStatus::Divergent,
            value: None,
            abs_error: 0.0,
        }
    }

    pub fn is_convergent(&self) -> bool {
        self.status == IntegralStatus::Convergent
    }
}

/// Shells that must be integrated before any verdict is issued.
pub const MIN_SHELLS: usize = 40;
/// Number of trailing shells whose ratios must show geometric decay.
const DECAY_WINDOW: usize = 10;
/// Largest consecutive-shell ratio accepted as geometric decay.
const DECAY_RATIO: f64 = 0.9;
const MAX_SHELLS: usize = 400;

/// Integrates `f` over `(0, upper]` by dyadic shells
/// `[upper·2^{-k-1}, upper·2^{-k}]`.
///
/// After [`MIN_SHELLS`] shells the trailing shell contributions must decay
/// geometrically (every ratio ≤ 0.9 over the last ten shells); otherwise the
/// integral is declared divergent. A convergent integral keeps adding shells
/// until the geometric tail bound drops below `tol / 2`.
pub fn dyadic_shell_integral<F: Fn(f64) -> f64>(f: F, upper: f64, tol: f64) -> Result<IntegralVerdict> {
    let shell_tol = tol / 128.0;
    let mut shells: Vec<f64> = Vec::with_capacity(MIN_SHELLS + DECAY_WINDOW);
    let mut quad_err = 0.0;
    let mut hi = upper;
    loop {
        let lo = 0.5 * hi;
        let (v, e) = integrate(&f, lo, hi, shell_tol)?;
        if !v.is_finite() {
            return Ok(IntegralVerdict::divergent());
        }
        shells.push(v.abs());
        quad_err += e;
        hi = lo;

        let k = shells.len();
        if k < MIN_SHELLS {
            continue;
        }
        let window = &shells[k - DECAY_WINDOW - 1..];
        let mut worst_ratio: f64 = 0.0;
        let mut geometric = true;
        for w in window.windows(2) {
            let (prev, next) = (w[0], w[1]);
            if next == 0.0 {
                continue;
            }
            if prev == 0.0 {
                geometric = false;
                break;
            }
            let r = next / prev;
            worst_ratio = worst_ratio.max(r);
            if r > DECAY_RATIO {
                geometric = false;
                break;
            }
        }
        if !geometric {
            return Ok(IntegralVerdict::divergent());
        }
        let last = shells[k - 1];
        let tail = last * worst_ratio / (1.0 - worst_ratio);
        if tail < 0.5 * tol || k >= MAX_SHELLS {
            let partial: f64 = shells.iter().sum();
            return Ok(IntegralVerdict {
                status: IntegralStatus::Convergent,
                value: Some(partial + tail),
                abs_error: quad_err + tail,
            });
        }
    }
}
