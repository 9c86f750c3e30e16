//! Experiment specification files.
//!
//! A spec is flat `key = value` text. Keys use dotted sections (`sim.phi`,
//! `lil.q`), lists are comma-separated and `#` starts a comment. The keys
//! `phi`, `alpha`, `t`, `dt`, `seed` and `replicas` are shorthands for their
//! `sim.` forms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use harris_core::flow::{make_grid, GridRule};
use harris_core::{CovarianceModel, SimConfig};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::format::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Simulate,
    Lil,
    Coupling,
    Comparison,
    Concentration,
    Covariance,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Simulate => "simulate",
            Kind::Lil => "lil",
            Kind::Coupling => "coupling",
            Kind::Comparison => "comparison",
            Kind::Concentration => "concentration",
            Kind::Covariance => "covariance",
        }
    }

    fn needs_phi(self) -> bool {
        !matches!(self, Kind::Comparison | Kind::Concentration)
    }
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "simulate" => Kind::Simulate,
            "lil" => Kind::Lil,
            "coupling" => Kind::Coupling,
            "comparison" => Kind::Comparison,
            "concentration" => Kind::Concentration,
            "covariance" => Kind::Covariance,
            other => {
                return Err(format!(
                    "unknown kind {other:?}; expected simulate, lil, coupling, comparison, concentration or covariance"
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LilParams {
    pub q: f64,
    pub n_min: u32,
    pub n_max: u32,
    /// Points with `t` above this are reported but not judged.
    pub check_below: f64,
    pub max_ratio: f64,
    pub centered_band: f64,
    pub max_iqr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CouplingParams {
    pub q: f64,
    pub n_min: u32,
    pub n_max: u32,
    pub max_inversions: usize,
    pub final_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonParams {
    pub rhos: Vec<f64>,
    pub dims: Vec<usize>,
    pub replicas: usize,
    /// Relative tolerance of the dimension-2 closed form.
    pub closed_form_tol: f64,
    pub interpolation_pairs: usize,
    pub interpolation_max_dim: usize,
    pub interpolation_replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationParams {
    pub dims: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub cs: Vec<f64>,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovarianceParams {
    pub tol: f64,
    pub eps: f64,
    /// Largest accepted change of a convergent value when `tol` shrinks tenfold.
    pub stability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotParams {
    pub max_times: usize,
    pub replica: u64,
}

/// A fully resolved experiment: every default is filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub kind: Kind,
    pub output_dir: PathBuf,
    pub sim: SimConfig,
    pub lil: LilParams,
    pub coupling: CouplingParams,
    pub comparison: ComparisonParams,
    pub concentration: ConcentrationParams,
    pub covariance: CovarianceParams,
    pub plot: PlotParams,
}

const ALIASES: [(&str, &str); 6] = [
    ("phi", "sim.phi"),
    ("alpha", "sim.alpha"),
    ("t", "sim.t"),
    ("dt", "sim.dt"),
    ("seed", "sim.seed"),
    ("replicas", "sim.replicas"),
];

const KEYS: &[&str] = &[
    "name",
    "kind",
    "output_dir",
    "sim.phi",
    "sim.alpha",
    "sim.t",
    "sim.dt",
    "sim.grid",
    "sim.replicas",
    "sim.seed",
    "sim.merge_eps",
    "sim.max_jitter",
    "lil.q",
    "lil.n_min",
    "lil.n_max",
    "lil.check_below",
    "lil.max_ratio",
    "lil.centered_band",
    "lil.max_iqr",
    "coupling.q",
    "coupling.n_min",
    "coupling.n_max",
    "coupling.max_inversions",
    "coupling.final_fraction",
    "comparison.rhos",
    "comparison.dims",
    "comparison.replicas",
    "comparison.closed_form_tol",
    "comparison.interpolation_pairs",
    "comparison.interpolation_max_dim",
    "comparison.interpolation_replicas",
    "concentration.dims",
    "concentration.lambdas",
    "concentration.cs",
    "concentration.replicas",
    "covariance.tol",
    "covariance.eps",
    "covariance.stability",
    "plot.max_times",
    "plot.replica",
];

/// Raw `key → (line, value)` entries of a spec file.
struct Entries(BTreeMap<String, (usize, String)>);

impl Entries {
    fn parse(text: &str) -> CliResult<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(line_no, format!("expected `key = value`, got {line:?}")))?;
            let key = key.trim();
            let key = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, full)| full);
            if !KEYS.contains(&key) {
                return Err(CliError::parse(line_no, format!("unknown key {key:?}")));
            }
            let value = unquote(value.trim());
            if let Some((prev, _)) = map.insert(key.to_string(), (line_no, value)) {
                return Err(CliError::parse(line_no, format!("{key} is already set on line {prev}")));
            }
        }
        Ok(Entries(map))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|e| CliError::parse(line, format!("{key}: cannot parse {v:?}: {e}"))),
        }
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&mut self, key: &str, default: Vec<T>) -> CliResult<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.remove(key) {
            None => Ok(default),
            Some((line, v)) => v
                .split(',')
                .map(|s| {
                    let s = s.trim();
                    s.parse()
                        .map_err(|e| CliError::parse(line, format!("{key}: cannot parse {s:?}: {e}")))
                })
                .collect(),
        }
    }
}

fn unquote(v: &str) -> String {
    let stripped = v
        .strip_prefix('"')
        .and_then(|s| s.strip_suffix('"'))
        .or_else(|| v.strip_prefix('\'').and_then(|s| s.strip_suffix('\'')));
    stripped.unwrap_or(v).to_string()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

impl ExperimentSpec {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
        Self::parse(&text, stem)
    }

    /// Parses spec text; `default_name` is used when `name` is absent.
    pub fn parse(text: &str, default_name: &str) -> CliResult<Self> {
        let mut e = Entries::parse(text)?;
        let name: String = e.get("name", default_name.to_string())?;
        let kind: Kind = e.take("kind")?.ok_or_else(|| invalid("missing required key `kind`"))?;
        let output_dir: PathBuf = e.get("output_dir", PathBuf::from("out").join(&name))?;

        let alpha: Option<f64> = e.take("sim.alpha")?;
        let phi = match e.take::<String>("sim.phi")? {
            Some(p) => CovarianceModel::from_name(&p, alpha)?,
            None if kind.needs_phi() => {
                return Err(invalid(format!("missing required key `phi` for kind {}", kind.name())))
            }
            None => CovarianceModel::Gaussian,
        };
        if alpha.is_some() && phi.alpha().is_none() {
            return Err(invalid(format!(
                "alpha only applies to phi = exp_alpha, got phi = {}",
                phi.name()
            )));
        }
        let t: f64 = e.get("sim.t", 0.01)?;
        let mut sim = SimConfig::new(phi, t);
        sim.dt = e.get("sim.dt", sim.dt)?;
        sim.grid = match e.take::<String>("sim.grid")?.as_deref() {
            None | Some("sqrt") => GridRule::Sqrt,
            Some(list) => GridRule::Explicit(
                list.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|err| invalid(format!("sim.grid: {s:?}: {err}")))
                    })
                    .collect::<CliResult<_>>()?,
            ),
        };
        sim.replicas = e.get("sim.replicas", 100)?;
        sim.seed = e.get("sim.seed", 0)?;
        sim.merge_eps = e.get("sim.merge_eps", sim.merge_eps)?;
        sim.max_jitter = e.get("sim.max_jitter", sim.max_jitter)?;
        sim.couple_tangent = kind == Kind::Coupling;

        let lil = LilParams {
            q: e.get("lil.q", 0.1)?,
            n_min: e.get("lil.n_min", 2)?,
            n_max: e.get("lil.n_max", 4)?,
            check_below: e.get("lil.check_below", 1e-3)?,
            max_ratio: e.get("lil.max_ratio", 1.1)?,
            centered_band: e.get("lil.centered_band", 2.0)?,
            max_iqr: e.get("lil.max_iqr", 4.0)?,
        };
        let coupling = CouplingParams {
            q: e.get("coupling.q", 0.5)?,
            n_min: e.get("coupling.n_min", 7)?,
            n_max: e.get("coupling.n_max", 17)?,
            max_inversions: e.get("coupling.max_inversions", 1)?,
            final_fraction: e.get("coupling.final_fraction", 0.5)?,
        };
        let comparison = ComparisonParams {
            rhos: e.list("comparison.rhos", vec![0.0, 0.25, 0.5, 0.75, 0.95])?,
            dims: e.list("comparison.dims", vec![2, 4, 8])?,
            replicas: e.get("comparison.replicas", 100_000)?,
            closed_form_tol: e.get("comparison.closed_form_tol", 0.01)?,
            interpolation_pairs: e.get("comparison.interpolation_pairs", 20)?,
            interpolation_max_dim: e.get("comparison.interpolation_max_dim", 4)?,
            interpolation_replicas: e.get("comparison.interpolation_replicas", 100_000)?,
        };
        let concentration = ConcentrationParams {
            dims: e.list("concentration.dims", vec![1, 2, 10, 100])?,
            lambdas: e.list("concentration.lambdas", vec![0.5, 1.0, 2.0])?,
            cs: e.list("concentration.cs", vec![0.5, 1.0, 2.0])?,
            replicas: e.get("concentration.replicas", 100_000)?,
        };
        let covariance = CovarianceParams {
            tol: e.get("covariance.tol", 1e-6)?,
            eps: e.get("covariance.eps", 0.5)?,
            stability: e.get("covariance.stability", 1e-3)?,
        };
        let plot = PlotParams {
            max_times: e.get("plot.max_times", 2048)?,
            replica: e.get("plot.replica", 0)?,
        };
        debug_assert!(e.0.is_empty(), "unconsumed keys: {:?}", e.0.keys());

        let spec = ExperimentSpec {
            name,
            kind,
            output_dir,
            sim,
            lil,
            coupling,
            comparison,
            concentration,
            covariance,
            plot,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.kind.needs_phi() {
            self.sim.validate()?;
        }
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{key} must be positive, got {v}")))
            }
        };
        match self.kind {
            Kind::Simulate => {
                if self.plot.max_times < 2 {
                    return Err(invalid("plot.max_times must be at least 2"));
                }
            }
            Kind::Lil => {
                positive("lil.check_below", self.lil.check_below)?;
                positive("lil.max_ratio", self.lil.max_ratio)?;
            }
            Kind::Coupling => {
                if !self.sim.phi.is_continuous() {
                    return Err(invalid(format!(
                        "kind coupling needs a continuous phi, got {}",
                        self.sim.phi
                    )));
                }
                if self.coupling.n_max <= self.coupling.n_min {
                    return Err(invalid("coupling.n_max must exceed coupling.n_min"));
                }
            }
            Kind::Comparison => {
                if self.comparison.replicas < 2 || self.comparison.interpolation_replicas < 2 {
                    return Err(invalid("comparison replica counts must be at least 2"));
                }
                if self.comparison.interpolation_max_dim < 2 {
                    return Err(invalid("comparison.interpolation_max_dim must be at least 2"));
                }
            }
            Kind::Concentration => {
                if self.concentration.replicas < 2 {
                    return Err(invalid("concentration.replicas must be at least 2"));
                }
            }
            Kind::Covariance => {
                positive("covariance.tol", self.covariance.tol)?;
                if !(self.covariance.eps > 0.0 && self.covariance.eps <= 1.0) {
                    return Err(invalid(format!(
                        "covariance.eps must lie in (0, 1], got {}",
                        self.covariance.eps
                    )));
                }
            }
        }
        Ok(())
    }

    /// `key = value` lines for every setting that applies to this kind.
    pub fn resolved(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let list = |xs: &[f64]| xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let ulist = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        line("name", self.name.clone());
        line("kind", self.kind.name().into());
        line("output_dir", self.output_dir.display().to_string());
        if self.kind.needs_phi() {
            let s = &self.sim;
            line("sim.phi", s.phi.name().into());
            if let Some(a) = s.phi.alpha() {
                line("sim.alpha", fmt_f64(a));
            }
            line("sim.t", fmt_f64(s.t_target));
            line("sim.dt", fmt_f64(s.dt));
            line("sim.steps", s.steps().to_string());
            match &s.grid {
                GridRule::Sqrt => {
                    line("sim.grid", "sqrt".into());
                    if s.t_target <= 1.0 {
                        line("sim.grid.points", make_grid(s.t_target).len().to_string());
                    }
                }
                GridRule::Explicit(p) => {
                    line("sim.grid", list(p));
                    line("sim.grid.points", p.len().to_string());
                }
            }
            line("sim.replicas", s.replicas.to_string());
            line("sim.seed", s.seed.to_string());
            line("sim.merge_eps", fmt_f64(s.merge_eps));
            line("sim.max_jitter", fmt_f64(s.max_jitter));
        }
        match self.kind {
            Kind::Simulate => {
                line("plot.max_times", self.plot.max_times.to_string());
                line("plot.replica", self.plot.replica.to_string());
            }
            Kind::Lil => {
                let p = &self.lil;
                line("lil.q", fmt_f64(p.q));
                line("lil.n_min", p.n_min.to_string());
                line("lil.n_max", p.n_max.to_string());
                line("lil.check_below", fmt_f64(p.check_below));
                line("lil.max_ratio", fmt_f64(p.max_ratio));
                line("lil.centered_band", fmt_f64(p.centered_band));
                line("lil.max_iqr", fmt_f64(p.max_iqr));
            }
            Kind::Coupling => {
                let p = &self.coupling;
                line("coupling.q", fmt_f64(p.q));
                line("coupling.n_min", p.n_min.to_string());
                line("coupling.n_max", p.n_max.to_string());
                line("coupling.max_inversions", p.max_inversions.to_string());
                line("coupling.final_fraction", fmt_f64(p.final_fraction));
            }
            Kind::Comparison => {
                let p = &self.comparison;
                line("comparison.rhos", list(&p.rhos));
                line("comparison.dims", ulist(&p.dims));
                line("comparison.replicas", p.replicas.to_string());
                line("comparison.closed_form_tol", fmt_f64(p.closed_form_tol));
                line("comparison.interpolation_pairs", p.interpolation_pairs.to_string());
                line("comparison.interpolation_max_dim", p.interpolation_max_dim.to_string());
                line(
                    "comparison.interpolation_replicas",
                    p.interpolation_replicas.to_string(),
                );
                line("sim.seed", self.sim.seed.to_string());
            }
            Kind::Concentration => {
                let p = &self.concentration;
                line("concentration.dims", ulist(&p.dims));
                line("concentration.lambdas", list(&p.lambdas));
                line("concentration.cs", list(&p.cs));
                line("concentration.replicas", p.replicas.to_string());
                line("sim.seed", self.sim.seed.to_string());
            }
            Kind::Covariance => {
                let p = &self.covariance;
                line("covariance.tol", fmt_f64(p.tol));
                line("covariance.eps", fmt_f64(p.eps));
                line("covariance.stability", fmt_f64(p.stability));
            }
        }
        out
    }
}
