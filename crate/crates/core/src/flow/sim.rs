use crate::covariance::{CovarianceModel, CovariationFunction};
use crate::error::{Error, Result};
use crate::gaussian::{factor_psd, PsdFactor, RngStream};

use super::config::SimConfig;
use super::record::{CoupledPathRecord, FlowPathRecord};
use super::state::FlowState;

/// Drives a [`FlowState`] through `config.steps()` Euler steps, recording at
/// the configured output steps. `step` receives the state, the step length
/// and the stream for that step, and returns the cluster increments.
fn run_flow<F>(config: &SimConfig, replica: u64, mut step: F) -> Result<FlowPathRecord>
where
    F: FnMut(&FlowState, f64, &mut RngStream, &mut Vec<f64>) -> Result<()>,
{
    config.validate()?;
    let grid = config.grid_points();
    let n_steps = config.steps();
    let h = config.step_length();
    let record_steps = config.record_steps();

    let mut state = FlowState::new(&grid, config.merge_eps);
    let mut record = FlowPathRecord::with_capacity(&grid, record_steps.len());
    let mut inc = Vec::with_capacity(grid.len());
    let snapshot = |state: &FlowState, time: f64, record: &mut FlowPathRecord| {
        let mut pos = Vec::with_capacity(grid.len());
        let mut ids = Vec::with_capacity(grid.len());
        state.write_positions(&mut pos);
        state.write_cluster_ids(&mut ids);
        record.push(time, pos, ids, state.cluster_count());
    };
    snapshot(&state, 0.0, &mut record);

    let mut next_record = 1;
    for k in 1..=n_steps {
        let mut rng = RngStream::at(config.seed, replica, k as u64);
        inc.clear();
        step(&state, h, &mut rng, &mut inc)?;
        state.advance(&inc, config.merge_eps);
        if next_record < record_steps.len() && record_steps[next_record] == k {
            let time = if k == n_steps { config.t_target } else { k as f64 * h };
            snapshot(&state, time, &mut record);
            next_record += 1;
        }
    }
    Ok(record)
}

/// Dispatches to [`simulate_arratia`] or [`simulate_harris`] by family.
pub fn simulate(config: &SimConfig, replica: u64) -> Result<FlowPathRecord> {
    match config.phi {
        CovarianceModel::Arratia => simulate_arratia(config, replica),
        _ => simulate_harris(config, replica),
    }
}

/// Euler scheme for a general Harris flow: each step draws cluster
/// increments with covariance `φ(x_i − x_j)·dt` at the current cluster
/// positions, then merges clusters that crossed.
pub fn simulate_harris(config: &SimConfig, replica: u64) -> Result<FlowPathRecord> {
    if config.phi == CovarianceModel::Arratia {
        log::warn!("simulate_harris called with the Arratia model; simulate_arratia is exact and cheaper");
    }
    let phi = config.phi;
    let max_jitter = config.max_jitter;
    let mut xi = Vec::new();
    run_flow(config, replica, |state, h, rng, inc| {
        let m = state.cluster_count();
        inc.resize(m, 0.0);
        if m == 1 {
            inc[0] = h.sqrt() * rng.standard_normal();
            return Ok(());
        }
        let gram = phi.gram(&state.cluster_positions());
        let factor = factor_psd(&gram, max_jitter)?;
        xi.resize(m, 0.0);
        factor.sample_into(h.sqrt(), rng, &mut xi, inc);
        Ok(())
    })
}

/// Arratia flow: clusters move by independent `N(0, dt)` steps and merge on
/// crossing.
pub fn simulate_arratia(config: &SimConfig, replica: u64) -> Result<FlowPathRecord> {
    if config.phi != CovarianceModel::Arratia {
        return Err(Error::ConfigInvalid(format!(
            "simulate_arratia requires phi = arratia, got {}",
            config.phi
        )));
    }
    run_flow(config, replica, |state, h, rng, inc| {
        let sd = h.sqrt();
        inc.extend((0..state.cluster_count()).map(|_| sd * rng.standard_normal()));
        Ok(())
    })
}

/// `Y(·, t) − u` for one replica: a single draw of `√t · L · ξ`.
///
/// The tangent process has independent stationary increments in time, so its
/// value at `t` is exactly Gaussian with covariance `t · G`.
pub fn tangent_terminal(factor: &PsdFactor, grid: &[f64], t: f64, rng: &mut RngStream) -> Vec<f64> {
    let mut xi = vec![0.0; factor.dim];
    let mut out = vec![0.0; factor.dim];
    factor.sample_into(t.sqrt(), rng, &mut xi, &mut out);
    for (y, u) in out.iter_mut().zip(grid) {
        *y += u;
    }
    out
}

/// Tangent process on the configured grid, recorded at the output times.
///
/// The covariance `φ(u_i − u_j)` never changes, so it is factored once and
/// increments between recorded times are drawn exactly.
pub fn simulate_tangent(config: &SimConfig, replica: u64) -> Result<FlowPathRecord> {
    config.validate()?;
    let grid = config.grid_points();
    let factor = factor_psd(&config.phi.gram(&grid), config.max_jitter)?;
    let h = config.step_length();
    let n_steps = config.steps();
    let record_steps = config.record_steps();
    let ids: Vec<u32> = (0..grid.len() as u32).collect();

    let mut record = FlowPathRecord::with_capacity(&grid, record_steps.len());
    let mut y = grid.clone();
    record.push(0.0, y.clone(), ids.clone(), grid.len());
    let mut xi = vec![0.0; grid.len()];
    let mut inc = vec![0.0; grid.len()];
    for w in record_steps.windows(2) {
        let (from, to) = (w[0], w[1]);
        let mut rng = RngStream::at(config.seed, replica, to as u64);
        factor.sample_into((h * (to - from) as f64).sqrt(), &mut rng, &mut xi, &mut inc);
        for (yk, d) in y.iter_mut().zip(&inc) {
            *yk += d;
        }
        let time = if to == n_steps { config.t_target } else { to as f64 * h };
        record.push(time, y.clone(), ids.clone(), grid.len());
    }
    Ok(record)
}

/// Flow and tangent process driven jointly.
///
/// Each step factors the covariance of the stacked vector
/// `(X clusters, Y labels)`: `φ(X_a − X_b)`, `φ(X_a − u_j)` and `φ(u_i − u_j)`
/// are all entries of the Gram matrix of `φ` on the combined point set.
/// Coalescence acts on the X half only.
pub fn simulate_coupled(config: &SimConfig, replica: u64) -> Result<CoupledPathRecord> {
    config.validate()?;
    if !config.couple_tangent {
        return Err(Error::ConfigInvalid(
            "simulate_coupled requires couple_tangent = true".into(),
        ));
    }
    if !config.phi.is_continuous() {
        return Err(Error::ConfigInvalid(format!(
            "the coupled simulation needs a continuous covariation function, got {}",
            config.phi
        )));
    }
    let grid = config.grid_points();
    let n = grid.len();
    let n_steps = config.steps();
    let h = config.step_length();
    let record_steps = config.record_steps();
    let y_ids: Vec<u32> = (0..n as u32).collect();

    let mut state = FlowState::new(&grid, config.merge_eps);
    let mut y = grid.clone();
    let mut x_rec = FlowPathRecord::with_capacity(&grid, record_steps.len());
    let mut y_rec = FlowPathRecord::with_capacity(&grid, record_steps.len());
    let snapshot = |state: &FlowState, y: &[f64], time: f64, x_rec: &mut FlowPathRecord, y_rec: &mut FlowPathRecord| {
        let mut pos = Vec::with_capacity(n);
        let mut ids = Vec::with_capacity(n);
        state.write_positions(&mut pos);
        state.write_cluster_ids(&mut ids);
        x_rec.push(time, pos, ids, state.cluster_count());
        y_rec.push(time, y.to_vec(), y_ids.clone(), n);
    };
    snapshot(&state, &y, 0.0, &mut x_rec, &mut y_rec);

    let mut points = Vec::with_capacity(2 * n);
    let mut xi = Vec::with_capacity(2 * n);
    let mut inc = Vec::with_capacity(2 * n);
    let mut next_record = 1;
    for k in 1..=n_steps {
        let m = state.cluster_count();
        points.clear();
        points.extend(state.clusters().iter().map(|c| c.position));
        points.extend_from_slice(&grid);
        let gram = config.phi.gram(&points);
        let factor = factor_psd(&gram, config.max_jitter).map_err(|e| {
            log::error!("replica {replica}: coupled factorization failed at step {k}: {e}");
            e
        })?;
        xi.resize(m + n, 0.0);
        inc.resize(m + n, 0.0);
        let mut rng = RngStream::at(config.seed, replica, k as u64);
        factor.sample_into(h.sqrt(), &mut rng, &mut xi, &mut inc);
        for (yk, d) in y.iter_mut().zip(&inc[m..]) {
            *yk += d;
        }
        state.advance(&inc[..m], config.merge_eps);
        if next_record < record_steps.len() && record_steps[next_record] == k {
            let time = if k == n_steps { config.t_target } else { k as f64 * h };
            snapshot(&state, &y, time, &mut x_rec, &mut y_rec);
            next_record += 1;
        }
    }
    Ok(CoupledPathRecord { x: x_rec, y: y_rec })
}

/// Discrete estimate of `sup_u 2∫_0^t (1 − φ(X(u,s) − u)) ds`, the quadratic
/// variation of `X(u,·) − Y(u,·)`, by a left Riemann sum over recorded times.
pub fn qv_gap(coupled: &CoupledPathRecord, phi: &CovarianceModel) -> f64 {
    let rec = &coupled.x;
    let mut acc = vec![0.0; rec.labels.len()];
    for i in 0..rec.times.len().saturating_sub(1) {
        let ds = rec.times[i + 1] - rec.times[i];
        for ((a, x), u) in acc.iter_mut().zip(&rec.values[i]).zip(&rec.labels) {
            *a += phi.deficit(x - u) * ds;
        }
    }
    2.0 * acc.into_iter().fold(0.0, f64::max)
}
