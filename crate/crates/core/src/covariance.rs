//! Covariation functions φ and the two integral criteria built on them.
//!
//! A Harris flow is specified by a real positive definite function φ with
//! φ(0) = 1 and |φ(x)| < 1 away from the origin. Three families are built in:
//!
//! | family       | φ(x)            |
//! |--------------|-----------------|
//! | `Arratia`    | 1 if x = 0 else 0 |
//! | `ExpAlpha`   | exp(−\|x\|^α), 0 < α ≤ 2 |
//! | `Gaussian`   | exp(−x²)        |
//!
//! [`dudley_integral`] decides whether the tangent process has a continuous
//! version, and [`coalescence_criterion`] whether the flow coalesces.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{dyadic_shell_integral, IntegralVerdict};

/// An even covariation function with value 1 at the origin.
///
/// `deficit` must return `1 − φ(x)`; implementations should override it when
/// the subtraction loses precision for small `x`.
pub trait CovariationFunction {
    fn value(&self, x: f64) -> f64;

    fn deficit(&self, x: f64) -> f64 {
        1.0 - self.value(x)
    }
}

impl<F: Fn(f64) -> f64> CovariationFunction for F {
    fn value(&self, x: f64) -> f64 {
        self(x)
    }
}

/// A built-in covariation function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovarianceModel {
    Arratia,
    ExpAlpha { alpha: f64 },
    Gaussian,
}

impl CovarianceModel {
    /// `exp(−|x|^α)`; α must lie in (0, 2].
    pub fn exp_alpha(alpha: f64) -> Result<Self> {
        let model = CovarianceModel::ExpAlpha { alpha };
        model.validate()?;
        Ok(model)
    }

    /// Looks a family up by its config name (`arratia`, `exp_alpha`, `gaussian`).
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        match name {
            "arratia" => Ok(CovarianceModel::Arratia),
            "gaussian" => Ok(CovarianceModel::Gaussian),
            "exp_alpha" => {
                let alpha =
                    alpha.ok_or_else(|| Error::ConfigInvalid("phi = \"exp_alpha\" requires alpha in (0, 2]".into()))?;
                CovarianceModel::exp_alpha(alpha)
            }
            other => Err(Error::ConfigInvalid(format!(
                "unknown phi {other:?}; expected \"arratia\", \"exp_alpha\" or \"gaussian\""
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CovarianceModel::Arratia => "arratia",
            CovarianceModel::ExpAlpha { .. } => "exp_alpha",
            CovarianceModel::Gaussian => "gaussian",
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match *self {
            CovarianceModel::ExpAlpha { alpha } => Some(alpha),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let CovarianceModel::ExpAlpha { alpha } = *self {
            if !(alpha > 0.0 && alpha <= 2.0) {
                return Err(Error::ConfigInvalid(format!(
                    "alpha = {alpha} is outside the admissible range (0, 2]"
                )));
            }
        }
        Ok(())
    }

    /// Whether φ is continuous at the origin.
    pub fn is_continuous(&self) -> bool {
        !matches!(self, CovarianceModel::Arratia)
    }

    /// φ(x).
    pub fn evaluate(&self, x: f64) -> f64 {
        match *self {
            CovarianceModel::Arratia => {
                if x == 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            CovarianceModel::ExpAlpha { alpha } => (-x.abs().powf(alpha)).exp(),
            CovarianceModel::Gaussian => (-x * x).exp(),
        }
    }

    /// Symmetric matrix `G[i][j] = φ(points[i] − points[j])`.
    pub fn gram(&self, points: &[f64]) -> DMatrix<f64> {
        let n = points.len();
        let mut g = DMatrix::<f64>::identity(n, n);
        for j in 0..n {
            for i in j + 1..n {
                let v = self.evaluate(points[i] - points[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }
}

impl CovariationFunction for CovarianceModel {
    fn value(&self, x: f64) -> f64 {
        self.evaluate(x)
    }

    fn deficit(&self, x: f64) -> f64 {
        match *self {
            CovarianceModel::Arratia => {
                if x == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            CovarianceModel::ExpAlpha { alpha } => -(-x.abs().powf(alpha)).exp_m1(),
            CovarianceModel::Gaussian => -(-x * x).exp_m1(),
        }
    }
}

impl fmt::Display for CovarianceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovarianceModel::ExpAlpha { alpha } => write!(f, "exp_alpha(alpha={alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Checks that φ is non-increasing on `[0, upper]` on a mixed linear and
/// logarithmic sample grid.
fn check_monotone<F: CovariationFunction + ?Sized>(phi: &F, upper: f64) -> Result<()> {
    let mut xs: Vec<f64> = (0..=2000).map(|i| upper * i as f64 / 2000.0).collect();
    xs.extend((1..=60).map(|k| upper * 0.5f64.powi(k)));
    xs.sort_by(f64::total_cmp);
    let mut prev = phi.value(xs[0]);
    for &x in &xs[1..] {
        let v = phi.value(x);
        if v > prev + 1e-14 {
            return Err(Error::NonMonotone { upper, at: x });
        }
        prev = v;
    }
    Ok(())
}

/// Largest `x ∈ [0, 1/2]` with `1 − φ(x) ≤ level`, by bisection to relative
/// precision 1e−12. Returns `None` when the whole half-interval qualifies.
fn level_crossing<F: CovariationFunction + ?Sized>(phi: &F, level: f64) -> Option<f64> {
    let mut hi = 0.5;
    if phi.deficit(hi) <= level {
        return None;
    }
    // Shrink geometrically until the bracket's lower end is inside the level set.
    let mut lo = hi;
    loop {
        lo *= 0.5;
        if lo == 0.0 {
            return Some(0.0);
        }
        if phi.deficit(lo) <= level {
            break;
        }
        hi = lo;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if phi.deficit(mid) <= level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(lo)
}

/// Lebesgue measure of `{x : φ(x) ≥ 1 − u²}`, taken as `2·x*(u)` clipped to 1.
pub fn level_set_measure<F: CovariationFunction + ?Sized>(phi: &F, u: f64) -> f64 {
    match level_crossing(phi, u * u) {
        None => 1.0,
        Some(x) => (2.0 * x).min(1.0),
    }
}

/// Dudley entropy integral `∫_{0+}^{1} |ln λ{φ ≥ 1 − u²}|^{1/2} du`.
///
/// Convergence of this integral is equivalent to the tangent process having a
/// continuous version.
pub fn dudley_integral<F: CovariationFunction + ?Sized>(phi: &F, tol: f64) -> Result<IntegralVerdict> {
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("tol must be positive, got {tol}")));
    }
    check_monotone(phi, 1.0)?;
    dyadic_shell_integral(
        |u| {
            let m = level_set_measure(phi, u);
            if m == 0.0 {
                f64::INFINITY
            } else {
                (-m.ln()).max(0.0).sqrt()
            }
        },
        1.0,
        tol,
    )
}

/// `∫_0^ε x dx / (1 − φ(x))`. A finite value means the flow coalesces; an
/// infinite one means it is a flow of homeomorphisms.
pub fn coalescence_criterion<F: CovariationFunction + ?Sized>(phi: &F, eps: f64, tol: f64) -> Result<IntegralVerdict> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::ConfigInvalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("tol must be positive, got {tol}")));
    }
    check_monotone(phi, eps)?;
    dyadic_shell_integral(|x| x / phi.deficit(x), eps, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::IntegralStatus;

    const MODELS: [CovarianceModel; 4] = [
        CovarianceModel::Arratia,
        CovarianceModel::ExpAlpha { alpha: 1.0 },
        CovarianceModel::ExpAlpha { alpha: 1.5 },
        CovarianceModel::Gaussian,
    ];

    #[test]
    fn evaluate_examples() {
        assert_eq!(CovarianceModel::Arratia.evaluate(0.0), 1.0);
        assert_eq!(CovarianceModel::Arratia.evaluate(1e-300), 0.0);
        assert_eq!(CovarianceModel::Gaussian.evaluate(0.0), 1.0);
        assert!((CovarianceModel::Gaussian.evaluate(0.5) - (-0.25f64).exp()).abs() < 1e-15);
        assert!((CovarianceModel::Gaussian.evaluate(0.5) - 0.778_800_783_071_404_9).abs() < 1e-15);
    }

    #[test]
    fn deficit_is_accurate_near_zero() {
        let g = CovarianceModel::Gaussian;
        assert!((g.deficit(1e-10) - 1e-20).abs() < 1e-35);
        let e = CovarianceModel::ExpAlpha { alpha: 1.0 };
        assert!((e.deficit(1e-12) - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn alpha_out_of_range_is_rejected() {
        for a in [0.0, -1.0, 2.5, 3.0, f64::NAN] {
            let err = CovarianceModel::exp_alpha(a).unwrap_err();
            assert!(err.to_string().contains("(0, 2]"), "{err}");
        }
        assert!(CovarianceModel::exp_alpha(2.0).is_ok());
        assert!(CovarianceModel::from_name("exp_alpha", None).is_err());
        assert!(CovarianceModel::from_name("cauchy", None).is_err());
    }

    #[test]
    fn gram_examples() {
        let g = CovarianceModel::Arratia.gram(&[0.0, 1.0]);
        assert_eq!(g, DMatrix::identity(2, 2));
        let g = CovarianceModel::Gaussian.gram(&[0.0, 0.5]);
        assert_eq!(g[(0, 0)], 1.0);
        assert!((g[(0, 1)] - 0.778_800_783_071_404_9).abs() < 1e-15);
        assert_eq!(g[(0, 1)], g[(1, 0)]);
        for m in MODELS {
            assert_eq!(m.gram(&[0.3]), DMatrix::from_element(1, 1, 1.0));
        }
    }

    #[test]
    fn level_set_measure_gaussian_matches_closed_form() {
        let g = CovarianceModel::Gaussian;
        for u in [1e-6f64, 1e-3, 0.1, 0.3, 0.45] {
            let closed = 2.0 * (-(-u * u).ln_1p()).sqrt().min(0.5);
            let m = level_set_measure(&g, u);
            assert!(
                (m - closed.min(1.0)).abs() <= 1e-11 * closed.max(1e-300),
                "u={u}: {m} vs {closed}"
            );
        }
        assert_eq!(level_set_measure(&g, 0.9), 1.0);
        assert_eq!(level_set_measure(&CovarianceModel::Arratia, 0.5), 0.0);
    }

    #[test]
    fn dudley_verdicts() {
        let arr = dudley_integral(&CovarianceModel::Arratia, 1e-6).unwrap();
        assert_eq!(arr.status, IntegralStatus::Divergent);
        let g = dudley_integral(&CovarianceModel::Gaussian, 1e-6).unwrap();
        assert!(g.is_convergent() && g.value.unwrap() > 0.0);
        let e = dudley_integral(&CovarianceModel::ExpAlpha { alpha: 1.0 }, 1e-6).unwrap();
        assert!(e.is_convergent() && e.value.unwrap() > 0.0);
    }

    #[test]
    fn coalescence_verdicts() {
        let e = coalescence_criterion(&CovarianceModel::ExpAlpha { alpha: 1.0 }, 0.5, 1e-8).unwrap();
        assert!(e.is_convergent());
        let g = coalescence_criterion(&CovarianceModel::Gaussian, 0.5, 1e-8).unwrap();
        assert_eq!(g.status, IntegralStatus::Divergent);
        let a = coalescence_criterion(&CovarianceModel::Arratia, 0.5, 1e-10).unwrap();
        assert!((a.value.unwrap() - 0.125).abs() < 1e-9);
    }

    #[test]
    fn non_monotone_function_is_rejected() {
        let wavy = |x: f64| (-x * x).exp() * (0.9 + 0.1 * (40.0 * x).cos());
        assert!(matches!(dudley_integral(&wavy, 1e-6), Err(Error::NonMonotone { .. })));
        assert!(matches!(
            coalescence_criterion(&wavy, 0.5, 1e-6),
            Err(Error::NonMonotone { .. })
        ));
    }

    #[test]
    fn bad_arguments() {
        let g = CovarianceModel::Gaussian;
        assert!(coalescence_criterion(&g, 0.0, 1e-6).is_err());
        assert!(coalescence_criterion(&g, 1.5, 1e-6).is_err());
        assert!(dudley_integral(&g, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn model() -> impl Strategy<Value = CovarianceModel> {
            prop_oneof![
                Just(CovarianceModel::Arratia),
                Just(CovarianceModel::Gaussian),
                (0.01f64..=2.0).prop_map(|alpha| CovarianceModel::ExpAlpha { alpha }),
            ]
        }

        proptest! {
            #[test]
            fn even_bounded_and_peaked(m in model(), x in -50.0f64..50.0) {
                prop_assert_eq!(m.evaluate(x), m.evaluate(-x));
                if x == 0.0 {
                    prop_assert_eq!(m.evaluate(x), 1.0);
                } else {
                    prop_assert!(m.evaluate(x).abs() < 1.0);
                }
            }

            #[test]
            fn monotone_on_positive_axis(m in model(), a in 0.0f64..10.0, b in 0.0f64..10.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(m.evaluate(hi) <= m.evaluate(lo));
            }

            #[test]
            fn gram_symmetric_unit_diagonal(m in model(), pts in proptest::collection::vec(-3.0f64..3.0, 1..12)) {
                let g = m.gram(&pts);
                for i in 0..pts.len() {
                    prop_assert_eq!(g[(i, i)], 1.0);
                    for j in 0..pts.len() {
                        prop_assert_eq!(g[(i, j)], g[(j, i)]);
                    }
                }
            }
        }
    }
}
