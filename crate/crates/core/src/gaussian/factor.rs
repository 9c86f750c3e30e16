use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::Serialize;

use super::rng::RngStream;
use crate::error::{Error, Result};

/// Largest diagonal jitter tried before falling back to eigenvalue clipping.
pub const DEFAULT_MAX_JITTER: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-12;
const RECONSTRUCTION_TOL: f64 = 1e-8;

/// Lower-triangular factor `L` with `L·Lᵀ ≈ A + jitter_used·I`.
#[derive(Clone, Debug, Serialize)]
pub struct PsdFactor {
    pub dim: usize,
    #[serde(skip)]
    pub lower: DMatrix<f64>,
    pub jitter_used: f64,
    /// Set when the matrix needed eigenvalue clipping; `L·Lᵀ` then
    /// reproduces the nearest positive semidefinite matrix instead.
    pub clipped: bool,
}

impl PsdFactor {
    pub fn identity(dim: usize) -> Self {
        PsdFactor {
            dim,
            lower: DMatrix::identity(dim, dim),
            jitter_used: 0.0,
            clipped: false,
        }
    }

    /// Writes `scale · L · ξ` into `out`, with `ξ` drawn from `rng`.
    ///
    /// `xi` is scratch space of length `dim`.
    pub fn sample_into(&self, scale: f64, rng: &mut RngStream, xi: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(xi.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        rng.fill_normals(xi);
        out.fill(0.0);
        for (j, &z) in xi.iter().enumerate() {
            let w = scale * z;
            let col = self.lower.column(j);
            for i in j..self.dim {
                out[i] += col[i] * w;
            }
        }
    }

    /// Covariance `L·Lᵀ` reproduced by the factor.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.lower * self.lower.transpose()
    }
}

/// Increment `scale · L · ξ` with covariance `scale² · L·Lᵀ`.
pub fn sample_increment(factor: &PsdFactor, scale: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut xi = vec![0.0; factor.dim];
    let mut out = vec![0.0; factor.dim];
    factor.sample_into(scale, rng, &mut xi, &mut out);
    out
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::FactorizationFailure {
            dim: m.nrows(),
            detail: format!("matrix is {}x{}, not square", m.nrows(), m.ncols()),
        });
    }
    let n = m.nrows();
    for j in 0..n {
        for i in j + 1..n {
            let (a, b) = (m[(i, j)], m[(j, i)]);
            let diff = (a - b).abs();
            if !(diff <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0)) {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}

fn jitter_schedule(max_jitter: f64) -> impl Iterator<Item = f64> {
    std::iter::once(0.0).chain(
        std::iter::successors(Some(1e-12), |j| Some(j * 100.0)).take_while(move |&j| j <= max_jitter * (1.0 + 1e-9)),
    )
}

/// Cholesky that zeroes columns whose pivot is below `tol` instead of failing.
fn semidefinite_cholesky(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            continue;
        }
        let pivot = d.sqrt();
        l[(j, j)] = pivot;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / pivot;
        }
    }
    l
}

/// Factors a symmetric positive semidefinite matrix.
///
/// Tries plain Cholesky with diagonal jitter 0, 1e−12, 1e−10, … up to
/// `max_jitter`. If every attempt fails, negative eigenvalues are clipped to
/// zero and the projected matrix is factored with a rank-revealing Cholesky.
pub fn factor_psd(matrix: &DMatrix<f64>, max_jitter: f64) -> Result<PsdFactor> {
    check_symmetric(matrix)?;
    let n = matrix.nrows();
    if !(max_jitter >= 0.0) {
        return Err(Error::FactorizationFailure {
            dim: n,
            detail: format!("max_jitter must be non-negative, got {max_jitter}"),
        });
    }
    for jitter in jitter_schedule(max_jitter) {
        let mut m = matrix.clone();
        if jitter > 0.0 {
            for i in 0..n {
                m[(i, i)] += jitter;
            }
        }
        if let Some(ch) = Cholesky::new(m) {
            return Ok(PsdFactor {
                dim: n,
                lower: ch.unpack(),
                jitter_used: jitter,
                clipped: false,
            });
        }
    }

    log::debug!("jitter up to {max_jitter:e} insufficient for {n}x{n} matrix; clipping eigenvalues");
    let eig = SymmetricEigen::new(matrix.clone());
    let clipped_vals = eig.eigenvalues.map(|v| v.max(0.0));
    let projected = &eig.eigenvectors * DMatrix::from_diagonal(&clipped_vals) * eig.eigenvectors.transpose();
    let projected = (&projected + projected.transpose()) * 0.5;
    let scale = projected.diagonal().amax().max(f64::MIN_POSITIVE);
    let lower = semidefinite_cholesky(&projected, 1e-13 * scale * n as f64);
    let factor = PsdFactor {
        dim: n,
        lower,
        jitter_used: 0.0,
        clipped: true,
    };
    let err = (factor.reconstruct() - &projected).norm() / projected.norm().max(f64::MIN_POSITIVE);
    if !(err <= RECONSTRUCTION_TOL) {
        return Err(Error::FactorizationFailure {
            dim: n,
            detail: format!("relative reconstruction error {err:e} after eigenvalue clipping"),
        });
    }
    Ok(factor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariance::CovarianceModel;

    fn frob_rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn identity_is_its_own_factor() {
        let f = factor_psd(&DMatrix::identity(3, 3), 1e-8).unwrap();
        assert_eq!(f.lower, DMatrix::identity(3, 3));
        assert_eq!(f.jitter_used, 0.0);
        assert!(!f.clipped);
    }

    #[test]
    fn rank_one_needs_small_jitter() {
        let m = DMatrix::from_element(2, 2, 1.0);
        let f = factor_psd(&m, 1e-8).unwrap();
        assert!(f.jitter_used <= 1e-10, "{}", f.jitter_used);
        assert!(!f.clipped);
    }

    #[test]
    fn closed_form_two_by_two() {
        let rho: f64 = 0.7788;
        let m = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let f = factor_psd(&m, 1e-8).unwrap();
        assert!((f.lower[(1, 1)] - (1.0 - rho * rho).sqrt()).abs() < 1e-14);
        assert!((f.lower[(1, 1)] - 0.6273).abs() < 1e-4);
        assert_eq!(f.lower[(0, 1)], 0.0);
    }

    #[test]
    fn asymmetric_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(factor_psd(&m, 1e-8), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn indefinite_matrix_is_clipped() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let f = factor_psd(&m, 1e-8).unwrap();
        assert!(f.clipped);
        // nearest PSD matrix of [[1,2],[2,1]] keeps only the eigenvalue 3
        let expect = DMatrix::from_element(2, 2, 1.5);
        assert!(frob_rel(&f.reconstruct(), &expect) < 1e-12);
    }

    #[test]
    fn zero_max_jitter_still_clips() {
        let m = DMatrix::from_element(3, 3, 1.0);
        let f = factor_psd(&m, 0.0).unwrap();
        assert!(f.clipped);
        assert!(frob_rel(&f.reconstruct(), &m) < 1e-12);
    }

    #[test]
    fn dense_grid_grams_factor_with_small_jitter() {
        for model in [
            CovarianceModel::Gaussian,
            CovarianceModel::ExpAlpha { alpha: 1.0 },
            CovarianceModel::ExpAlpha { alpha: 1.9 },
        ] {
            for n in [8usize, 64, 256, 512] {
                let pts: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
                let g = model.gram(&pts);
                let f = factor_psd(&g, DEFAULT_MAX_JITTER).unwrap();
                assert!(!f.clipped, "{model} n={n}");
                assert!(f.jitter_used <= 1e-8, "{model} n={n}: {}", f.jitter_used);
                let mut target = g.clone();
                for i in 0..n {
                    target[(i, i)] += f.jitter_used;
                }
                assert!(frob_rel(&f.reconstruct(), &target) < 1e-8, "{model} n={n}");
            }
        }
    }

    #[test]
    fn rank_one_sample_has_equal_coordinates() {
        let f = PsdFactor {
            dim: 2,
            lower: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]),
            jitter_used: 0.0,
            clipped: false,
        };
        for c in 0..100 {
            let v = sample_increment(&f, 0.3, &mut RngStream::at(1, 0, c));
            assert_eq!(v[0], v[1]);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = CovarianceModel::Gaussian.gram(&[0.0, 0.2, 0.9]);
        let f = factor_psd(&g, 1e-8).unwrap();
        let a = sample_increment(&f, 0.1, &mut RngStream::at(3, 4, 5));
        let b = sample_increment(&f, 0.1, &mut RngStream::at(3, 4, 5));
        assert_eq!(a, b);
    }

    #[test]
    fn unit_variance_marginal() {
        // 1-d identity factor scaled by sqrt(t): variance t within 3 stderr.
        let t: f64 = 0.04;
        let f = PsdFactor::identity(1);
        let n = 100_000;
        let mut rng = RngStream::new(77, 0);
        let xs: Vec<f64> = (0..n).map(|_| sample_increment(&f, t.sqrt(), &mut rng)[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        let stderr = t * (2.0 / n as f64).sqrt();
        assert!((var - t).abs() < 3.0 * stderr, "{var} vs {t}");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn factor_reproduces_input(seed in any::<u64>(), n in 1usize..9, rank in 1usize..9) {
                let rank = rank.min(n);
                let mut rng = RngStream::new(seed, 0);
                let mut a = DMatrix::<f64>::zeros(n, rank);
                for v in a.iter_mut() {
                    *v = rng.standard_normal();
                }
                let m = &a * a.transpose();
                let f = factor_psd(&m, DEFAULT_MAX_JITTER).unwrap();
                let mut target = m.clone();
                for i in 0..n {
                    target[(i, i)] += f.jitter_used;
                }
                prop_assert!(frob_rel(&f.reconstruct(), &target) < 1e-8);
                for i in 0..n {
                    for j in i + 1..n {
                        prop_assert_eq!(f.lower[(i, j)], 0.0);
                    }
                }
            }
        }
    }
}
