use serde::Serialize;

use super::comparison::STDERR_SLACK;
use super::stats::{mean, stderr};
use crate::error::{Error, Result};
use crate::gaussian::RngStream;
use crate::runner::map_replicas;

/// Empirical moment generating function and tails of `f(N) = max_i N_i` for a
/// standard Gaussian vector, against the Lipschitz-1 Gaussian concentration
/// bounds.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationReport {
    pub dim: usize,
    pub replicas: usize,
    pub mean_f: f64,
    pub lambda_grid: Vec<f64>,
    /// `ln Ê exp(λ f)`.
    pub empirical_log_mgf: Vec<f64>,
    pub log_mgf_stderr: Vec<f64>,
    /// `λ Ê f + λ²/2`.
    pub mgf_bound: Vec<f64>,
    pub c_grid: Vec<f64>,
    /// `P̂{f − Ê f ≥ C}`.
    pub empirical_tail: Vec<f64>,
    pub tail_stderr: Vec<f64>,
    /// `exp(−C²/2)`.
    pub tail_bound: Vec<f64>,
    pub mgf_verdicts: Vec<bool>,
    pub tail_verdicts: Vec<bool>,
}

impl ConcentrationReport {
    pub fn verdict(&self) -> bool {
        self.mgf_verdicts.iter().chain(&self.tail_verdicts).all(|&v| v)
    }

    /// `|ln Ê exp(λf) − bound| ≤ 3·stderr` at every λ, which holds when `f`
    /// is linear.
    pub fn mgf_is_tight(&self) -> bool {
        self.empirical_log_mgf
            .iter()
            .zip(&self.mgf_bound)
            .zip(&self.log_mgf_stderr)
            .all(|((e, b), se)| (e - b).abs() <= STDERR_SLACK * se)
    }
}

/// Samples `max_i N_i` for `replicas` standard Gaussian vectors in `dim`
/// dimensions and compares its log-MGF and upper tails with the plug-in
/// bounds. Every verdict allows 3 standard errors.
pub fn concentration_check(
    dim: usize,
    lambda_grid: &[f64],
    c_grid: &[f64],
    replicas: usize,
    seed: u64,
) -> Result<ConcentrationReport> {
    if dim == 0 || replicas < 2 {
        return Err(Error::ConfigInvalid(format!(
            "need dim >= 1 and replicas >= 2, got dim = {dim}, replicas = {replicas}"
        )));
    }
    if let Some(bad) = lambda_grid
        .iter()
        .chain(c_grid)
        .find(|v| !(**v >= 0.0 && v.is_finite()))
    {
        return Err(Error::ConfigInvalid(format!(
            "grid values must be finite and non-negative, got {bad}"
        )));
    }
    let f = map_replicas(replicas, |r| {
        let mut rng = RngStream::new(seed, r);
        (0..dim)
            .map(|_| rng.standard_normal())
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let mean_f = mean(&f);
    let n = replicas as f64;

    let mut empirical_log_mgf = Vec::with_capacity(lambda_grid.len());
    let mut log_mgf_stderr = Vec::with_capacity(lambda_grid.len());
    let mut mgf_bound = Vec::with_capacity(lambda_grid.len());
    let mut mgf_verdicts = Vec::with_capacity(lambda_grid.len());
    for &lambda in lambda_grid {
        let e: Vec<f64> = f.iter().map(|x| (lambda * (x - mean_f)).exp()).collect();
        let m = mean(&e);
        // delta method: se(ln m̂) = se(m̂) / m̂
        let se = stderr(&e) / m;
        let emp = lambda * mean_f + m.ln();
        let bound = lambda * mean_f + 0.5 * lambda * lambda;
        empirical_log_mgf.push(emp);
        log_mgf_stderr.push(se);
        mgf_bound.push(bound);
        mgf_verdicts.push(emp <= bound + STDERR_SLACK * se);
    }

    let mut empirical_tail = Vec::with_capacity(c_grid.len());
    let mut tail_stderr = Vec::with_capacity(c_grid.len());
    let mut tail_bound = Vec::with_capacity(c_grid.len());
    let mut tail_verdicts = Vec::with_capacity(c_grid.len());
    for &c in c_grid {
        let p = f.iter().filter(|&&x| x - mean_f >= c).count() as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt();
        let bound = (-0.5 * c * c).exp();
        empirical_tail.push(p);
        tail_stderr.push(se);
        tail_bound.push(bound);
        tail_verdicts.push(p <= bound + STDERR_SLACK * se);
    }

    Ok(ConcentrationReport {
        dim,
        replicas,
        mean_f,
        lambda_grid: lambda_grid.to_vec(),
        empirical_log_mgf,
        log_mgf_stderr,
        mgf_bound,
        c_grid: c_grid.to_vec(),
        empirical_tail,
        tail_stderr,
        tail_bound,
        mgf_verdicts,
        tail_verdicts,
    })
}
