//! Executes an [`ExperimentSpec`] and writes its outputs.

use std::path::Path;

use harris_core::analysis::{
    concentration_check, coupling_gap_series, interpolation_residual, inversions, lil_series, slepian_check,
    sup_deviation, TestFunction,
};
use harris_core::covariance::{coalescence_criterion, dudley_integral};
use harris_core::flow::{simulate, FlowPathRecord, SimConfig};
use harris_core::gaussian::{derive_seed, RngStream};
use harris_core::quadrature::{IntegralStatus, IntegralVerdict};
use harris_core::runner::try_map_replicas;
use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};
use crate::format::{fmt_f64, Csv};
use crate::report::{ExperimentReport, Verdict, VERSION};
use crate::row;
use crate::spec::{ExperimentSpec, Kind};
use crate::svg;

/// Files produced by a run, as `(file name, contents)`.
pub type Outputs = Vec<(String, String)>;

#[derive(Debug)]
pub struct Outcome {
    pub verdicts: Vec<Verdict>,
    pub outputs: Outputs,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// Runs the experiment without touching the file system.
pub fn execute(spec: &ExperimentSpec) -> CliResult<Outcome> {
    spec.validate()?;
    let mut out = Outcome {
        verdicts: Vec::new(),
        outputs: Vec::new(),
    };
    match spec.kind {
        Kind::Simulate => run_simulate(spec, &mut out)?,
        Kind::Lil => run_lil(spec, &mut out)?,
        Kind::Coupling => run_coupling(spec, &mut out)?,
        Kind::Comparison => run_comparison(spec, &mut out)?,
        Kind::Concentration => run_concentration(spec, &mut out)?,
        Kind::Covariance => run_covariance(spec, &mut out)?,
    }
    Ok(out)
}

/// Runs the experiment and writes every output plus `report.json` into
/// `spec.output_dir`.
pub fn run(spec: &ExperimentSpec) -> CliResult<Outcome> {
    let outcome = execute(spec)?;
    let dir = &spec.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.clone(), e))?;
    for (name, text) in &outcome.outputs {
        write(&dir.join(name), text)?;
    }
    let report = ExperimentReport {
        name: &spec.name,
        kind: spec.kind.name(),
        version: VERSION,
        seed: spec.sim.seed,
        passed: outcome.passed(),
        spec,
        outputs: outcome.outputs.iter().map(|(n, _)| n.clone()).collect(),
        verdicts: &outcome.verdicts,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    write(&dir.join("report.json"), &json)?;
    Ok(outcome)
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

/// The same path recorded at up to `max_times` times, for plotting.
fn dense_config(sim: &SimConfig, max_times: usize) -> SimConfig {
    let mut cfg = sim.clone();
    let steps = cfg.steps();
    let h = cfg.step_length();
    let keep = steps.min(max_times - 1);
    cfg.checkpoints = (1..=keep)
        .map(|k| (k * steps / keep) as f64 * h)
        .filter(|&t| t <= cfg.t_target)
        .collect();
    cfg
}

struct ReplicaSummary {
    sup: f64,
    counts: Vec<usize>,
    monotone: bool,
    non_increasing: bool,
    absorbing: bool,
}

fn run_simulate(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let sim = &spec.sim;
    let t = sim.t_target;
    let rows = try_map_replicas(sim.replicas, |r| {
        let rec = simulate(sim, r)?;
        Ok(ReplicaSummary {
            sup: sup_deviation(&rec, t)?,
            counts: rec.cluster_counts.clone(),
            monotone: rec.is_monotone(),
            non_increasing: rec.cluster_counts_non_increasing(),
            absorbing: rec.coalescence_is_absorbing(),
        })
    })?;
    let (steps, h) = (sim.steps(), sim.step_length());
    let times: Vec<f64> = sim
        .record_steps()
        .into_iter()
        .map(|k| if k == steps { t } else { k as f64 * h })
        .collect();

    let mut csv = Csv::new(&[
        "replica",
        "sup_deviation",
        "final_clusters",
        "monotone",
        "counts_non_increasing",
    ]);
    for (r, row) in rows.iter().enumerate() {
        csv.row(row![
            r,
            row.sup,
            *row.counts.last().expect("non-empty"),
            row.monotone,
            row.non_increasing
        ]);
    }
    out.outputs.push(("replicas.csv".into(), csv.into_string()));

    let mut csv = Csv::new(&["t", "mean_clusters", "fraction_single"]);
    let n = rows.len() as f64;
    for (i, &time) in times.iter().enumerate() {
        let counts: Vec<f64> = rows.iter().map(|r| r.counts[i] as f64).collect();
        let single = rows.iter().filter(|r| r.counts[i] == 1).count() as f64 / n;
        csv.row(row![time, harris_core::analysis::stats::mean(&counts), single]);
    }
    out.outputs.push(("clusters.csv".into(), csv.into_string()));

    let all = |f: fn(&ReplicaSummary) -> bool| rows.iter().all(f);
    out.verdicts.push(Verdict::holds("monotone", all(|r| r.monotone)));
    out.verdicts.push(Verdict::holds(
        "cluster_counts_non_increasing",
        all(|r| r.non_increasing),
    ));
    out.verdicts
        .push(Verdict::holds("coalescence_absorbing", all(|r| r.absorbing)));

    let rec = simulate(&dense_config(sim, spec.plot.max_times), spec.plot.replica)?;
    out.outputs.push(("trajectories.csv".into(), trajectories_csv(&rec)));
    let title = format!("{} flow, t = {}", sim.phi, fmt_f64(t));
    out.outputs.push((
        "trajectories.svg".into(),
        svg::render(&rec, spec.plot.max_times, &title),
    ));
    Ok(())
}

fn trajectories_csv(rec: &FlowPathRecord) -> String {
    let mut csv = Csv::new(&["t", "label", "u", "x", "cluster"]);
    for (i, &time) in rec.times.iter().enumerate() {
        for (k, &u) in rec.labels.iter().enumerate() {
            csv.row(row![time, k, u, rec.values[i][k], rec.cluster_ids[i][k]]);
        }
    }
    csv.into_string()
}

fn run_lil(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let p = &spec.lil;
    let series = lil_series(&spec.sim, p.q, p.n_min, p.n_max)?;
    let mut csv = Csv::new(&[
        "t",
        "mean_sup",
        "stderr",
        "ratio_tlogt",
        "ratio_tloglogt",
        "E_t",
        "ratio_centered",
    ]);
    let mut detail = Csv::new(&[
        "n",
        "t",
        "median_sup",
        "q25_sup",
        "q75_sup",
        "ratio_tlogt_stderr",
        "E_t_stderr",
        "centered_median",
        "centered_iqr",
        "centered_stderr",
    ]);
    for pt in &series.points {
        csv.row(row![
            pt.t,
            pt.sup.mean,
            pt.sup.stderr,
            pt.ratio_tlogt,
            pt.ratio_tloglogt,
            pt.e_t,
            pt.centered.mean
        ]);
        detail.row(row![
            pt.n,
            pt.t,
            pt.sup.median,
            pt.sup.q25,
            pt.sup.q75,
            pt.ratio_tlogt_stderr,
            pt.e_t_stderr,
            pt.centered.median,
            pt.centered.iqr(),
            pt.centered.stderr
        ]);
        if pt.t <= p.check_below * (1.0 + 1e-9) {
            let tag = format!("n={} t={}", pt.n, fmt_f64(pt.t));
            out.verdicts.push(Verdict::at_most(
                format!("ratio_tlogt {tag}"),
                pt.ratio_tlogt,
                p.max_ratio,
            ));
            out.verdicts.push(Verdict::abs_at_most(
                format!("centered_mean {tag}"),
                pt.centered.mean,
                p.centered_band,
            ));
            out.verdicts.push(Verdict::at_most(
                format!("centered_iqr {tag}"),
                pt.centered.iqr(),
                p.max_iqr,
            ));
        }
    }
    out.outputs.push(("lil.csv".into(), csv.into_string()));
    out.outputs.push(("lil_detail.csv".into(), detail.into_string()));
    Ok(())
}

fn run_coupling(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let p = &spec.coupling;
    let series = coupling_gap_series(&spec.sim, p.q, p.n_min, p.n_max)?;
    let mut csv = Csv::new(&[
        "n",
        "t",
        "labels",
        "median_gap",
        "mean_gap",
        "stderr_gap",
        "median_qv_ratio",
        "mean_qv_ratio",
    ]);
    for pt in &series.points {
        csv.row(row![
            pt.n,
            pt.t,
            pt.labels,
            pt.gap.median,
            pt.gap.mean,
            pt.gap.stderr,
            pt.qv_ratio.median,
            pt.qv_ratio.mean
        ]);
    }
    out.outputs.push(("coupling.csv".into(), csv.into_string()));

    let gaps = series.median_gaps();
    let qv = series.median_qv_ratios();
    out.verdicts.push(Verdict::at_most(
        "median_gap_inversions",
        inversions(&gaps) as f64,
        p.max_inversions as f64,
    ));
    out.verdicts.push(Verdict::at_most(
        "median_gap_final_over_initial",
        gaps[gaps.len() - 1] / gaps[0],
        p.final_fraction,
    ));
    let strictly_decreasing = qv.windows(2).all(|w| w[1] < w[0]);
    out.verdicts
        .push(Verdict::holds("qv_ratio_decreasing", strictly_decreasing));
    Ok(())
}

/// `A Aᵀ / d` with standard normal `A`: a random PSD matrix of unit scale.
fn random_psd(dim: usize, rng: &mut RngStream) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(dim, dim);
    for v in a.iter_mut() {
        *v = rng.standard_normal();
    }
    (&a * a.transpose()) / dim as f64
}

fn run_comparison(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let p = &spec.comparison;
    let seed = spec.sim.seed;
    let mut csv = Csv::new(&[
        "dim",
        "rho_m",
        "rho_n",
        "e_max_m",
        "stderr_m",
        "e_max_n",
        "stderr_n",
        "closed_form_n",
        "verdict",
    ]);
    let mut case = 0u64;
    for &dim in &p.dims {
        for &rho_m in &p.rhos {
            for &rho_n in p.rhos.iter().filter(|&&r| r <= rho_m) {
                case += 1;
                let rep = slepian_check(rho_m, rho_n, dim, p.replicas, derive_seed(seed, case))?;
                let cf = rep.closed_form_n.unwrap_or(f64::NAN);
                csv.row(row![
                    dim,
                    rho_m,
                    rho_n,
                    rep.e_max_m,
                    rep.stderr_m,
                    rep.e_max_n,
                    rep.stderr_n,
                    cf,
                    rep.verdict
                ]);
                let tag = format!("dim={dim} rho_m={} rho_n={}", fmt_f64(rho_m), fmt_f64(rho_n));
                out.verdicts.push(Verdict::at_most(
                    format!("slepian {tag}"),
                    rep.e_max_m,
                    rep.e_max_n + 3.0 * (rep.stderr_m + rep.stderr_n),
                ));
                if let (Some(cf), true) = (rep.closed_form_n, rho_m == rho_n) {
                    out.verdicts.push(Verdict::at_most(
                        format!("closed_form {tag}"),
                        (rep.e_max_n - cf).abs() / cf,
                        p.closed_form_tol,
                    ));
                }
            }
        }
    }
    out.outputs.push(("slepian.csv".into(), csv.into_string()));

    let mut csv = Csv::new(&[
        "case",
        "dim",
        "lhs",
        "rhs",
        "rhs_refined",
        "stderr",
        "residual",
        "verdict",
    ]);
    let mut judge =
        |label: String, k_m: &DMatrix<f64>, k_n: &DMatrix<f64>, f: &TestFunction, tag: u64| -> CliResult<()> {
            let rep = interpolation_residual(k_m, k_n, f, p.interpolation_replicas, derive_seed(seed, tag))?;
            csv.row(row![
                label.as_str(),
                k_m.nrows(),
                rep.lhs,
                rep.rhs,
                rep.rhs_refined,
                rep.stderr,
                rep.residual(),
                rep.verdict
            ]);
            out.verdicts.push(Verdict::abs_at_most(
                format!("interpolation {label}"),
                rep.residual(),
                3.0 * rep.stderr,
            ));
            Ok(())
        };
    let rho = 0.5;
    let k_m = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
    let k_n = DMatrix::identity(2, 2);
    judge("product".into(), &k_m, &k_n, &TestFunction::Product, 1 << 32)?;
    judge(
        "smooth_max".into(),
        &k_m,
        &k_n,
        &TestFunction::smooth_max(),
        (1 << 32) + 1,
    )?;
    let mut rng = RngStream::new(derive_seed(seed, 1 << 33), 0);
    for i in 0..p.interpolation_pairs {
        let dim = 2 + (rng.next_u64() % (p.interpolation_max_dim as u64 - 1)) as usize;
        let k_m = random_psd(dim, &mut rng);
        let k_n = random_psd(dim, &mut rng);
        judge(
            format!("random_{i}"),
            &k_m,
            &k_n,
            &TestFunction::smooth_max(),
            (1 << 34) + i as u64,
        )?;
    }
    out.outputs.push(("interpolation.csv".into(), csv.into_string()));
    Ok(())
}

fn run_concentration(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let p = &spec.concentration;
    let mut csv = Csv::new(&["dim", "quantity", "param", "empirical", "stderr", "bound", "verdict"]);
    for (i, &dim) in p.dims.iter().enumerate() {
        let rep = concentration_check(dim, &p.lambdas, &p.cs, p.replicas, derive_seed(spec.sim.seed, i as u64))?;
        for (j, &lambda) in rep.lambda_grid.iter().enumerate() {
            let (e, se, b) = (rep.empirical_log_mgf[j], rep.log_mgf_stderr[j], rep.mgf_bound[j]);
            csv.row(row![dim, "log_mgf", lambda, e, se, b, rep.mgf_verdicts[j]]);
            out.verdicts.push(Verdict::at_most(
                format!("log_mgf dim={dim} lambda={}", fmt_f64(lambda)),
                e,
                b + 3.0 * se,
            ));
        }
        for (j, &c) in rep.c_grid.iter().enumerate() {
            let (e, se, b) = (rep.empirical_tail[j], rep.tail_stderr[j], rep.tail_bound[j]);
            csv.row(row![dim, "tail", c, e, se, b, rep.tail_verdicts[j]]);
            out.verdicts.push(Verdict::at_most(
                format!("tail dim={dim} C={}", fmt_f64(c)),
                e,
                b + 3.0 * se,
            ));
        }
        if dim == 1 {
            out.verdicts
                .push(Verdict::holds("log_mgf dim=1 equality", rep.mgf_is_tight()));
        }
    }
    out.outputs.push(("concentration.csv".into(), csv.into_string()));
    Ok(())
}

fn status_name(v: &IntegralVerdict) -> &'static str {
    match v.status {
        IntegralStatus::Convergent => "convergent",
        IntegralStatus::Divergent => "divergent",
    }
}

fn run_covariance(spec: &ExperimentSpec, out: &mut Outcome) -> CliResult<()> {
    let p = &spec.covariance;
    let phi = spec.sim.phi;
    let mut csv = Csv::new(&["criterion", "tol", "status", "value", "abs_error"]);
    let eval = |name: &str, tol: f64| match name {
        "dudley" => dudley_integral(&phi, tol),
        _ => coalescence_criterion(&phi, p.eps, tol),
    };
    for name in ["dudley", "coalescence"] {
        let coarse = eval(name, p.tol)?;
        let fine = eval(name, p.tol / 10.0)?;
        for (tol, v) in [(p.tol, &coarse), (p.tol / 10.0, &fine)] {
            csv.row(row![
                name,
                tol,
                status_name(v),
                v.value.unwrap_or(f64::INFINITY),
                v.abs_error
            ]);
        }
        out.verdicts.push(Verdict::holds(
            format!("{name} status stable"),
            coarse.status == fine.status,
        ));
        if let (Some(a), Some(b)) = (coarse.value, fine.value) {
            out.verdicts.push(Verdict::at_most(
                format!("{name} value stable"),
                (a - b).abs(),
                p.stability,
            ));
        }
    }
    out.outputs.push(("covariance.csv".into(), csv.into_string()));
    Ok(())
}
