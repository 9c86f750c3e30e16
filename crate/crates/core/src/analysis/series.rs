//! Sup-deviation statistics of flows and tangent processes along geometric
//! time sequences `t_n = qⁿ`.

use serde::Serialize;

use super::stats::{mean, stderr, Summary};
use crate::covariance::CovarianceModel;
use crate::error::{Error, Result};
use crate::flow::{
    make_grid, qv_gap, simulate, simulate_coupled, tangent_terminal, FlowPathRecord, GridRule, SimConfig,
};
use crate::gaussian::{derive_seed, factor_psd, RngStream};
use crate::runner::{map_replicas, try_map_replicas};

const E_TAG: u64 = 1 << 40;

/// `√(t ln(1/t))`.
pub fn scale_tlogt(t: f64) -> f64 {
    (t * (1.0 / t).ln()).sqrt()
}

/// `√(t lnln(1/t))`, defined for `t < 1/e`.
pub fn scale_tloglogt(t: f64) -> f64 {
    (t * (1.0 / t).ln().ln()).sqrt()
}

/// `√(2t lnln(1/t))`, the law-of-the-iterated-logarithm scale.
pub fn scale_lil(t: f64) -> f64 {
    (2.0 * t * (1.0 / t).ln().ln()).sqrt()
}

/// `max_k |X(u_k, t) − u_k|`.
pub fn sup_deviation(record: &FlowPathRecord, t: f64) -> Result<f64> {
    let i = record.time_index(t).ok_or(Error::TimeNotRecorded(t))?;
    Ok(max_abs_deviation(&record.values[i], &record.labels))
}

fn max_abs_deviation(values: &[f64], labels: &[f64]) -> f64 {
    values
        .iter()
        .zip(labels)
        .map(|(x, u)| (x - u).abs())
        .fold(0.0, f64::max)
}

/// Monte Carlo estimate of `E sup_k |Y(u_k, t) − u_k|` on an arbitrary grid,
/// with its standard error.
pub fn expected_sup_on_grid(
    phi: &CovarianceModel,
    grid: &[f64],
    t: f64,
    replicas: usize,
    seed: u64,
    max_jitter: f64,
) -> Result<(f64, f64)> {
    phi.validate()?;
    if grid.is_empty() || replicas == 0 || !(t > 0.0) {
        return Err(Error::ConfigInvalid(format!(
            "need a non-empty grid, t > 0 and replicas > 0 (got {} points, t = {t}, {replicas} replicas)",
            grid.len()
        )));
    }
    let factor = factor_psd(&phi.gram(grid), max_jitter)?;
    let sups = map_replicas(replicas, |r| {
        let mut rng = RngStream::new(seed, r);
        max_abs_deviation(&tangent_terminal(&factor, grid, t, &mut rng), grid)
    });
    Ok((mean(&sups), stderr(&sups)))
}

/// `E(t)`: the expected sup deviation of the tangent process on the
/// spacing-√t grid of [0, 1), from `replicas` exact draws of `Y(·, t)`.
pub fn estimate_e(config: &SimConfig, t: f64, replicas: usize) -> Result<(f64, f64)> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::ConfigInvalid(format!("E(t) needs t in (0, 1], got {t}")));
    }
    expected_sup_on_grid(
        &config.phi,
        &make_grid(t),
        t,
        replicas,
        derive_seed(config.seed, E_TAG ^ t.to_bits()),
        config.max_jitter,
    )
}

/// Block count `N = 2⌈√(ln 1/t)⌉` of the rescaled grid.
pub fn rescale_factor(t: f64) -> usize {
    2 * ((1.0 / t).ln().max(0.0).sqrt().ceil() as usize).max(1)
}

/// `ũ_k = N·u_k` for the spacing-√t grid.
pub fn rescaled_grid(t: f64) -> Vec<f64> {
    let n = rescale_factor(t) as f64;
    make_grid(t).into_iter().map(|u| n * u).collect()
}

/// `e_s + √(2 t ln n_blocks)`: the expected maximum of `n_blocks` identically
/// distributed variables with mean `e_s` and sub-Gaussian variance proxy `t`.
pub fn subgaussian_max_bound(e_s: f64, t: f64, n_blocks: usize) -> f64 {
    e_s + (2.0 * t * (n_blocks.max(1) as f64).ln()).sqrt()
}

/// `(time, cluster count)` at every recorded time.
pub fn cluster_count_series(record: &FlowPathRecord) -> Vec<(f64, usize)> {
    record
        .times
        .iter()
        .copied()
        .zip(record.cluster_counts.iter().copied())
        .collect()
}

fn check_geometric(q: f64, n_min: u32, n_max: u32) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::ConfigInvalid(format!("q must lie in (0, 1), got {q}")));
    }
    if n_min > n_max {
        return Err(Error::ConfigInvalid(format!("n_min = {n_min} exceeds n_max = {n_max}")));
    }
    let t0 = q.powi(n_min as i32);
    if !(t0 < (-1.0f64).exp()) {
        return Err(Error::ConfigInvalid(format!(
            "t = q^n_min = {t0} must be below 1/e for the lnln scale"
        )));
    }
    if !(q.powi(n_max as i32) > 0.0) {
        return Err(Error::ConfigInvalid(format!("q^n_max underflows for n_max = {n_max}")));
    }
    Ok(())
}

/// Statistics of `sup_u |X(u, t_n) − u|` at one `t_n`.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationPoint {
    pub n: u32,
    pub t: f64,
    /// Raw sup deviations across replicas.
    pub sup: Summary,
    /// `mean / √(t ln 1/t)`.
    pub ratio_tlogt: f64,
    pub ratio_tlogt_stderr: f64,
    /// `mean / √(2t lnln 1/t)`.
    pub ratio_tloglogt: f64,
    pub e_t: f64,
    pub e_t_stderr: f64,
    /// `(sup − E(t)) / √(2t lnln 1/t)` across replicas.
    pub centered: Summary,
}

/// Deviation statistics along `t_n = qⁿ`, strictly decreasing in `t`.
#[derive(Clone, Debug, Serialize)]
pub struct DeviationSeries {
    pub phi: CovarianceModel,
    pub q: f64,
    pub points: Vec<DeviationPoint>,
}

/// Simulates the flow to each `t_n = qⁿ`, `n_min ≤ n ≤ n_max`, on the
/// spacing-√t_n grid with `config.replicas` replicas, and normalises the sup
/// deviation by `√(t ln 1/t)`, `√(2t lnln 1/t)` and `E(t_n)`.
///
/// The step count `config.t_target / config.dt` is reused at every `t_n`.
pub fn lil_series(config: &SimConfig, q: f64, n_min: u32, n_max: u32) -> Result<DeviationSeries> {
    check_geometric(q, n_min, n_max)?;
    config.validate()?;
    let mut points = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        let t = q.powi(n as i32);
        let mut cfg = config.rescaled_to(t);
        cfg.grid = GridRule::Sqrt;
        cfg.seed = derive_seed(config.seed, n as u64);
        let sups = try_map_replicas(cfg.replicas, |r| sup_deviation(&simulate(&cfg, r)?, t))?;
        let (e_t, e_t_stderr) = estimate_e(&cfg, t, cfg.replicas)?;
        let sup = Summary::of(&sups);
        let (s1, s2) = (scale_tlogt(t), scale_lil(t));
        let centered: Vec<f64> = sups.iter().map(|s| (s - e_t) / s2).collect();
        log::info!(
            "{} n = {n}: t = {t:e}, mean sup / sqrt(t ln 1/t) = {:.4}",
            config.phi,
            sup.mean / s1
        );
        points.push(DeviationPoint {
            n,
            t,
            sup,
            ratio_tlogt: sup.mean / s1,
            ratio_tlogt_stderr: sup.stderr / s1,
            ratio_tloglogt: sup.mean / s2,
            e_t,
            e_t_stderr,
            centered: Summary::of(&centered),
        });
    }
    Ok(DeviationSeries {
        phi: config.phi,
        q,
        points,
    })
}

/// Flow-versus-tangent gap at one `t_n`.
#[derive(Clone, Debug, Serialize)]
pub struct CouplingPoint {
    pub n: u32,
    pub t: f64,
    pub labels: usize,
    /// `sup_u |X(u, t) − Y(u, t)| / √(t lnln 1/t)` across replicas.
    pub gap: Summary,
    /// `qv_gap / t` across replicas.
    pub qv_ratio: Summary,
}

#[derive(Clone, Debug, Serialize)]
pub struct CouplingSeries {
    pub phi: CovarianceModel,
    pub q: f64,
    pub points: Vec<CouplingPoint>,
}

impl CouplingSeries {
    pub fn median_gaps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.gap.median).collect()
    }

    pub fn median_qv_ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.qv_ratio.median).collect()
    }
}

/// Number of `i` with `xs[i + 1] > xs[i]`.
pub fn inversions(xs: &[f64]) -> usize {
    xs.windows(2).filter(|w| w[1] > w[0]).count()
}

/// Runs the coupled flow and tangent process to each `t_n = qⁿ` and records
/// the normalised terminal gap `sup_k |X(u_k, t_n) − Y(u_k, t_n)|` and the
/// quadratic-variation gap.
///
/// A sqrt grid is re-derived at each `t_n`; an explicit grid is kept fixed.
pub fn coupling_gap_series(config: &SimConfig, q: f64, n_min: u32, n_max: u32) -> Result<CouplingSeries> {
    check_geometric(q, n_min, n_max)?;
    let mut base = config.clone();
    base.couple_tangent = true;
    base.validate()?;
    let mut points = Vec::with_capacity((n_max - n_min + 1) as usize);
    for n in n_min..=n_max {
        let t = q.powi(n as i32);
        let mut cfg = base.rescaled_to(t);
        cfg.seed = derive_seed(config.seed, n as u64);
        let pairs = try_map_replicas(cfg.replicas, |r| {
            let rec = simulate_coupled(&cfg, r)?;
            let gap = max_abs_deviation(rec.x.final_values(), rec.y.final_values());
            Ok((gap, qv_gap(&rec, &cfg.phi)))
        })?;
        let scale = scale_tloglogt(t);
        let gaps: Vec<f64> = pairs.iter().map(|p| p.0 / scale).collect();
        let qv: Vec<f64> = pairs.iter().map(|p| p.1 / t).collect();
        let gap = Summary::of(&gaps);
        log::info!(
            "{} n = {n}: t = {t:e}, median coupling gap ratio = {:.4}",
            config.phi,
            gap.median
        );
        points.push(CouplingPoint {
            n,
            t,
            labels: cfg.grid_points().len(),
            gap,
            qv_ratio: Summary::of(&qv),
        });
    }
    Ok(CouplingSeries {
        phi: config.phi,
        q,
        points,
    })
}
