//! Monte Carlo checks of the Gaussian interpolation identity, the Slepian
//! comparison inequality and submodularity of test functions.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use super::stats::{mean, stderr};
use super::test_function::TestFunction;
use crate::error::{Error, Result};
use crate::gaussian::{derive_seed, factor_psd, PsdFactor, RngStream};
use crate::runner::{map_replicas, try_map_replicas};

/// Midpoint nodes of the time quadrature in [`interpolation_residual`].
pub const INTERPOLATION_NODES: usize = 64;

/// Statistical slack, in standard errors, of every Monte Carlo verdict.
pub const STDERR_SLACK: f64 = 3.0;

/// Both sides of the interpolation identity
/// `E f(M(1)) − E f(N(1)) = ½∫₀¹ Σ_ij E ∂_ij f(M(t) + N(1) − N(t)) (K_M − K_N)_ij dt`.
#[derive(Clone, Debug, Serialize)]
pub struct InterpolationReport {
    pub lhs: f64,
    pub rhs: f64,
    pub lhs_stderr: f64,
    pub rhs_stderr: f64,
    /// `√(lhs_stderr² + rhs_stderr²)`.
    pub stderr: f64,
    /// The right-hand side on twice as many time nodes.
    pub rhs_refined: f64,
    pub verdict: bool,
}

impl InterpolationReport {
    pub fn residual(&self) -> f64 {
        self.lhs - self.rhs
    }
}

fn check_psd(k: &DMatrix<f64>) -> Result<()> {
    let scale = k.amax().max(1.0);
    let min = SymmetricEigen::new(k.clone()).eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(())
}

fn lower_times(factor: &PsdFactor, xi: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (j, &z) in xi.iter().enumerate() {
        let col = factor.lower.column(j);
        for i in j..factor.dim {
            out[i] += col[i] * z;
        }
    }
}

/// Evaluates both sides of the interpolation identity for constant
/// covariation matrices `k_m` and `k_n`, where `M` and `N` are independent
/// Gaussian martingales.
///
/// The right-hand side uses a 64-node midpoint rule in time; each replica
/// draws one pair `(ξ, η)` and evaluates `√t·A_M ξ + √(1−t)·A_N η` at every
/// node. The left-hand side uses separate draws, so the two sides are
/// independent and their standard errors add in quadrature.
pub fn interpolation_residual(
    k_m: &DMatrix<f64>,
    k_n: &DMatrix<f64>,
    f: &TestFunction,
    replicas: usize,
    seed: u64,
) -> Result<InterpolationReport> {
    let d = k_m.nrows();
    if k_n.shape() != (d, d) || !k_m.is_square() {
        return Err(Error::ConfigInvalid(format!(
            "covariance shapes differ: {:?} vs {:?}",
            k_m.shape(),
            k_n.shape()
        )));
    }
    if d < f.min_dim() {
        return Err(Error::ConfigInvalid(format!(
            "{} needs dimension >= {}",
            f.name(),
            f.min_dim()
        )));
    }
    if replicas < 2 {
        return Err(Error::ConfigInvalid("need at least 2 replicas".into()));
    }
    check_psd(k_m)?;
    check_psd(k_n)?;
    let a_m = factor_psd(k_m, 1e-10)?;
    let a_n = factor_psd(k_n, 1e-10)?;
    let mut probe = vec![0.0; d * d];
    f.hessian(&vec![0.0; d], &mut probe)?;
    let dk: Vec<f64> = (k_m - k_n).transpose().iter().copied().collect(); // row-major

    let lhs_seed = derive_seed(seed, 1);
    let rhs_seed = derive_seed(seed, 2);
    let diffs = map_replicas(replicas, |r| {
        let mut rng = RngStream::new(lhs_seed, r);
        let mut xi = vec![0.0; d];
        let mut m1 = vec![0.0; d];
        let mut n1 = vec![0.0; d];
        rng.fill_normals(&mut xi);
        lower_times(&a_m, &xi, &mut m1);
        rng.fill_normals(&mut xi);
        lower_times(&a_n, &xi, &mut n1);
        f.value(&m1) - f.value(&n1)
    });
    let integrands = try_map_replicas(replicas, |r| {
        let mut rng = RngStream::new(rhs_seed, r);
        let mut xi = vec![0.0; d];
        let mut a = vec![0.0; d];
        let mut b = vec![0.0; d];
        rng.fill_normals(&mut xi);
        lower_times(&a_m, &xi, &mut a);
        rng.fill_normals(&mut xi);
        lower_times(&a_n, &xi, &mut b);
        let mut z = vec![0.0; d];
        let mut hess = vec![0.0; d * d];
        let mut rule = |nodes: usize| -> Result<f64> {
            let mut acc = 0.0;
            for k in 0..nodes {
                let t = (k as f64 + 0.5) / nodes as f64;
                let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
                for i in 0..d {
                    z[i] = st * a[i] + sr * b[i];
                }
                f.hessian(&z, &mut hess)?;
                acc += hess.iter().zip(&dk).map(|(h, k)| h * k).sum::<f64>();
            }
            Ok(0.5 * acc / nodes as f64)
        };
        Ok((rule(INTERPOLATION_NODES)?, rule(2 * INTERPOLATION_NODES)?))
    })?;
    let coarse: Vec<f64> = integrands.iter().map(|p| p.0).collect();
    let fine: Vec<f64> = integrands.iter().map(|p| p.1).collect();

    let lhs = mean(&diffs);
    let lhs_stderr = stderr(&diffs);
    let rhs = mean(&coarse);
    let rhs_stderr = stderr(&coarse);
    let se = lhs_stderr.hypot(rhs_stderr);
    Ok(InterpolationReport {
        lhs,
        rhs,
        lhs_stderr,
        rhs_stderr,
        stderr: se,
        rhs_refined: mean(&fine),
        verdict: (lhs - rhs).abs() <= STDERR_SLACK * se,
    })
}

/// `E max` of two equicorrelated Gaussian vectors.
#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub rho_m: f64,
    pub rho_n: f64,
    pub dim: usize,
    pub e_max_m: f64,
    pub e_max_n: f64,
    pub stderr_m: f64,
    pub stderr_n: f64,
    /// `√((1 − ρ_n)/π)`, reported for `dim = 2`.
    pub closed_form_n: Option<f64>,
    /// `e_max_m ≤ e_max_n + 3·(stderr_m + stderr_n)`.
    pub verdict: bool,
}

/// Standard Gaussian vector with all pairwise correlations equal to `rho`.
struct Equicorrelated {
    dim: usize,
    rho: f64,
    factor: Option<PsdFactor>,
}

impl Equicorrelated {
    fn new(dim: usize, rho: f64) -> Result<Self> {
        // For rho ≥ 0 the one-factor representation √ρ·Z₀ + √(1−ρ)·Z_i is
        // exact, including the degenerate rho = 1.
        let factor = if rho >= 0.0 {
            None
        } else {
            let mut k = DMatrix::from_element(dim, dim, rho);
            k.fill_diagonal(1.0);
            Some(factor_psd(&k, 1e-10)?)
        };
        Ok(Equicorrelated { dim, rho, factor })
    }

    fn max(&self, rng: &mut RngStream, xi: &mut [f64], out: &mut [f64]) -> f64 {
        match &self.factor {
            None => {
                let common = self.rho.sqrt() * rng.standard_normal();
                let own = (1.0 - self.rho).sqrt();
                (0..self.dim)
                    .map(|_| common + own * rng.standard_normal())
                    .fold(f64::NEG_INFINITY, f64::max)
            }
            Some(factor) => {
                rng.fill_normals(xi);
                lower_times(factor, xi, out);
                out.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

/// Compares `E max_i M_i` and `E max_i N_i` for equicorrelated standard
/// Gaussian vectors with correlations `rho_m ≥ rho_n`. Larger correlation
/// means smaller increment distances, so the maximum of `M` is smaller.
pub fn slepian_check(rho_m: f64, rho_n: f64, dim: usize, replicas: usize, seed: u64) -> Result<ComparisonReport> {
    if dim < 2 {
        return Err(Error::InvalidCorrelation(format!(
            "dimension must be at least 2, got {dim}"
        )));
    }
    let floor = -1.0 / (dim as f64 - 1.0);
    if !(rho_n > floor && rho_n <= rho_m && rho_m <= 1.0) {
        return Err(Error::InvalidCorrelation(format!(
            "need {floor} < rho_n <= rho_m <= 1, got rho_n = {rho_n}, rho_m = {rho_m}"
        )));
    }
    if replicas < 2 {
        return Err(Error::ConfigInvalid("need at least 2 replicas".into()));
    }
    let sample = |rho: f64, tag: u64| -> Result<Vec<f64>> {
        let law = Equicorrelated::new(dim, rho)?;
        let s = derive_seed(seed, tag);
        Ok(map_replicas(replicas, |r| {
            let mut rng = RngStream::new(s, r);
            let mut xi = vec![0.0; dim];
            let mut out = vec![0.0; dim];
            law.max(&mut rng, &mut xi, &mut out)
        }))
    };
    let m = sample(rho_m, 1)?;
    let n = sample(rho_n, 2)?;
    let (e_max_m, e_max_n) = (mean(&m), mean(&n));
    let (stderr_m, stderr_n) = (stderr(&m), stderr(&n));
    Ok(ComparisonReport {
        rho_m,
        rho_n,
        dim,
        e_max_m,
        e_max_n,
        stderr_m,
        stderr_n,
        closed_form_n: (dim == 2).then(|| ((1.0 - rho_n) / std::f64::consts::PI).sqrt()),
        verdict: e_max_m <= e_max_n + STDERR_SLACK * (stderr_m + stderr_n),
    })
}

/// Tests `f(x∧y) + f(x∨y) ≤ f(x) + f(y) + 1e−12` on `samples` random pairs of
/// standard Gaussian vectors in `dim` dimensions.
pub fn submodularity_check(f: &TestFunction, dim: usize, samples: usize, rng: &mut RngStream) -> bool {
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for _ in 0..samples {
        rng.fill_normals(&mut x);
        rng.fill_normals(&mut y);
        for i in 0..dim {
            lo[i] = x[i].min(y[i]);
            hi[i] = x[i].max(y[i]);
        }
        if f.value(&lo) + f.value(&hi) > f.value(&x) + f.value(&y) + 1e-12 {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_identity_is_exact_on_the_right() {
        let rho = 0.6;
        let k_m = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let k_n = DMatrix::identity(2, 2);
        let rep = interpolation_residual(&k_m, &k_n, &TestFunction::Product, 20_000, 1).unwrap();
        assert!((rep.rhs - rho).abs() < 1e-12);
        assert!(rep.rhs_stderr < 1e-15);
        assert!((rep.lhs - rho).abs() < 4.0 * rep.lhs_stderr, "{rep:?}");
        assert!(rep.verdict);
    }

    #[test]
    fn equal_laws_give_zero() {
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let rep = interpolation_residual(&k, &k, &TestFunction::smooth_max(), 5_000, 2).unwrap();
        assert_eq!(rep.rhs, 0.0);
        assert!(rep.lhs.abs() <= 3.0 * rep.stderr);
    }

    #[test]
    fn interpolation_rejects_bad_inputs() {
        let good = DMatrix::identity(2, 2);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            interpolation_residual(&bad, &good, &TestFunction::Product, 10, 0),
            Err(Error::NotPsd { .. })
        ));
        assert!(matches!(
            interpolation_residual(&good, &good, &TestFunction::Max, 10, 0),
            Err(Error::NotSmooth(_))
        ));
        assert!(interpolation_residual(
            &DMatrix::identity(1, 1),
            &DMatrix::identity(1, 1),
            &TestFunction::Product,
            10,
            0
        )
        .is_err());
    }

    #[test]
    fn fully_correlated_max_is_zero() {
        let rep = slepian_check(1.0, 0.25, 4, 10_000, 3).unwrap();
        assert!(rep.e_max_m.abs() < 4.0 * rep.stderr_m.max(1e-3));
        assert!(rep.verdict);
    }

    #[test]
    fn equal_correlations_agree() {
        let rep = slepian_check(0.5, 0.5, 3, 50_000, 4).unwrap();
        assert!((rep.e_max_m - rep.e_max_n).abs() <= 3.0 * rep.stderr_m.hypot(rep.stderr_n));
    }

    #[test]
    fn negative_correlation_uses_factor() {
        let rep = slepian_check(0.0, -0.3, 3, 20_000, 5).unwrap();
        assert!(rep.e_max_n > rep.e_max_m);
        assert!(rep.verdict);
    }

    #[test]
    fn invalid_correlations() {
        assert!(matches!(
            slepian_check(0.2, 0.5, 2, 10, 0),
            Err(Error::InvalidCorrelation(_))
        ));
        assert!(matches!(
            slepian_check(0.5, -0.6, 3, 10, 0),
            Err(Error::InvalidCorrelation(_))
        ));
        assert!(matches!(
            slepian_check(1.1, 0.5, 3, 10, 0),
            Err(Error::InvalidCorrelation(_))
        ));
        assert!(matches!(
            slepian_check(0.5, 0.5, 1, 10, 0),
            Err(Error::InvalidCorrelation(_))
        ));
    }

    #[test]
    fn submodularity_examples() {
        let mut rng = RngStream::new(8, 0);
        assert!(submodularity_check(&TestFunction::Max, 5, 10_000, &mut rng));
        assert!(submodularity_check(&TestFunction::smooth_max(), 5, 10_000, &mut rng));
        assert!(submodularity_check(
            &TestFunction::Linear(vec![1.0, -2.0, 0.5]),
            3,
            10_000,
            &mut rng
        ));
        assert!(!submodularity_check(&TestFunction::Min, 5, 10_000, &mut rng));
        assert!(!submodularity_check(&TestFunction::Product, 2, 10_000, &mut rng));
    }

    #[test]
    fn min_has_a_brute_force_counterexample() {
        // x = (0, 1), y = (1, 0): min(x∧y) + min(x∨y) = 0 + 1 > 0 + 0
        let f = TestFunction::Min;
        let (x, y) = ([0.0, 1.0], [1.0, 0.0]);
        assert!(f.value(&[0.0, 0.0]) + f.value(&[1.0, 1.0]) > f.value(&x) + f.value(&y));
    }
}
