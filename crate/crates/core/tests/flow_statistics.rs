//! Distributional checks of simulated flows against closed-form laws.

use harris_core::analysis::stats::{mean, stderr, variance};
use harris_core::analysis::{
    cluster_count_series, estimate_e, expected_sup_on_grid, lil_series, rescale_factor, rescaled_grid,
    subgaussian_max_bound,
};
use harris_core::flow::{simulate, simulate_tangent, SimConfig};
use harris_core::runner::map_replicas;
use harris_core::CovarianceModel;
use statrs::distribution::{ContinuousCDF, Normal};

fn final_positions(cfg: &SimConfig, replicas: usize) -> Vec<Vec<f64>> {
    map_replicas(replicas, |r| simulate(cfg, r).unwrap().final_values().to_vec())
}

/// Kolmogorov–Smirnov distance between a sample and `N(0, var)`.
fn ks_distance(mut xs: Vec<f64>, var: f64) -> f64 {
    let law = Normal::new(0.0, var.sqrt()).unwrap();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = law.cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn single_particle_is_brownian() {
    let t = 0.04;
    let cfg = SimConfig::new(CovarianceModel::Gaussian, t)
        .with_grid(vec![0.5])
        .with_seed(1);
    let disp: Vec<f64> = final_positions(&cfg, 4000).iter().map(|v| v[0] - 0.5).collect();
    let n = disp.len() as f64;
    assert!(mean(&disp).abs() < 3.0 * (t / n).sqrt());
    assert!(
        (variance(&disp) - t).abs() < 3.0 * t * (2.0 / n).sqrt(),
        "{}",
        variance(&disp)
    );
    // 0.1% critical value of the one-sample KS statistic
    assert!(ks_distance(disp, t) < 1.95 / n.sqrt());
}

#[test]
fn distant_particles_covary_at_phi_of_their_gap() {
    let t = 0.01;
    let cfg = SimConfig::new(CovarianceModel::Gaussian, t)
        .with_grid(vec![0.0, 2.0])
        .with_seed(2);
    let reps = 20_000;
    let finals = final_positions(&cfg, reps);
    let prod: Vec<f64> = finals.iter().map(|v| v[0] * (v[1] - 2.0)).collect();
    let expect = (-4.0f64).exp() * t;
    // the gap stays within a few √t of 2, where φ' is small
    assert!(
        (mean(&prod) - expect).abs() < 3.0 * stderr(&prod) + 0.1 * expect,
        "{} vs {expect}",
        mean(&prod)
    );
}

#[test]
fn distant_arratia_particles_rarely_meet() {
    let cfg = SimConfig::new(CovarianceModel::Arratia, 0.01)
        .with_grid(vec![0.0, 1.0])
        .with_seed(3);
    let met = map_replicas(2000, |r| {
        simulate(&cfg, r).unwrap().cluster_counts.last().copied() == Some(1)
    });
    let fraction = met.iter().filter(|&&m| m).count() as f64 / met.len() as f64;
    assert!(fraction < 0.01, "{fraction}");
}

#[test]
fn tangent_correlation_is_phi() {
    let cfg = SimConfig::new(CovarianceModel::Gaussian, 1.0)
        .with_grid(vec![0.0, 0.5])
        .with_seed(4);
    let reps = 20_000;
    let ys = map_replicas(reps, |r| simulate_tangent(&cfg, r).unwrap().final_values().to_vec());
    let a: Vec<f64> = ys.iter().map(|v| v[0]).collect();
    let b: Vec<f64> = ys.iter().map(|v| v[1] - 0.5).collect();
    let (ma, mb) = (mean(&a), mean(&b));
    let cov: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).collect();
    let corr = mean(&cov) / (variance(&a) * variance(&b)).sqrt();
    let rho = (-0.25f64).exp();
    assert!(
        (corr - rho).abs() < 3.0 * (1.0 - rho * rho) / (reps as f64).sqrt(),
        "{corr} vs {rho}"
    );
}

#[test]
fn tangent_increments_are_stationary() {
    let cfg = SimConfig::new(CovarianceModel::exp_alpha(1.0).unwrap(), 0.25)
        .with_grid(vec![0.0, 0.3, 0.9])
        .with_seed(5);
    let ys = map_replicas(3000, |r| simulate_tangent(&cfg, r).unwrap().final_values().to_vec());
    for (k, u) in [0.0, 0.3, 0.9].into_iter().enumerate() {
        let disp: Vec<f64> = ys.iter().map(|v| v[k] - u).collect();
        assert!(ks_distance(disp, 0.25) < 1.95 / (3000f64).sqrt(), "label {k}");
    }
}

#[test]
fn ratio_verdict_is_stable_under_dt_halving() {
    let base = SimConfig::new(CovarianceModel::Gaussian, 0.01)
        .with_replicas(200)
        .with_seed(6);
    let coarse = lil_series(&base, 0.1, 3, 3).unwrap().points[0].clone();
    let fine = lil_series(&base.clone().with_dt(base.dt / 2.0), 0.1, 3, 3)
        .unwrap()
        .points[0]
        .clone();
    assert!(coarse.ratio_tlogt <= 1.1 && fine.ratio_tlogt <= 1.1);
    let se = coarse.ratio_tlogt_stderr.hypot(fine.ratio_tlogt_stderr);
    assert!((coarse.ratio_tlogt - fine.ratio_tlogt).abs() < 3.0 * se);
}

#[test]
fn correlation_lowers_expected_sup() {
    let t = 1e-4;
    let arratia = SimConfig::new(CovarianceModel::Arratia, t).with_seed(7);
    let gaussian = SimConfig::new(CovarianceModel::Gaussian, t).with_seed(7);
    let (ea, sa) = estimate_e(&arratia, t, 2000).unwrap();
    let (eg, sg) = estimate_e(&gaussian, t, 2000).unwrap();
    assert!(ea - eg > 3.0 * (sa + sg), "{ea} ± {sa} vs {eg} ± {sg}");
}

#[test]
fn rescaled_grid_respects_subgaussian_bound() {
    let t = 1e-4;
    let cfg = SimConfig::new(CovarianceModel::Arratia, t).with_seed(8);
    let (e, _) = estimate_e(&cfg, t, 4000).unwrap();
    let (e_tilde, se) = expected_sup_on_grid(&cfg.phi, &rescaled_grid(t), t, 4000, 9, cfg.max_jitter).unwrap();
    assert!(e_tilde <= subgaussian_max_bound(e, t, rescale_factor(t)) + 3.0 * se);
}

#[test]
fn arratia_coalesces_to_one_cluster() {
    let cfg = SimConfig::new(CovarianceModel::Arratia, 1.0)
        .with_grid(vec![0.0, 0.1, 0.2, 0.3, 0.4])
        .with_seed(10);
    let series = map_replicas(400, |r| cluster_count_series(&simulate(&cfg, r).unwrap()));
    let fraction = |i: usize| series.iter().filter(|s| s[i].1 == 1).count() as f64 / series.len() as f64;
    let last = series[0].len() - 1;
    assert_eq!(series[0][0], (0.0, 5));
    assert!(fraction(last / 8) < fraction(last / 2) && fraction(last / 2) < fraction(last));
    assert!(fraction(last) > 0.5);
}
