//! Run configuration: flat `key = value` files merged with command-line
//! flags, validated into a [`RunSpec`] before anything runs.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::profile::Profile;
use crate::error::{Error, Result};
use crate::heat::{Beta, SolverSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Solve,
    SweepAlpha,
    Simulate,
    HydroCompare,
    GreenCheck,
    Energy,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Solve,
        Experiment::SweepAlpha,
        Experiment::Simulate,
        Experiment::HydroCompare,
        Experiment::GreenCheck,
        Experiment::Energy,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Solve => "solve",
            Experiment::SweepAlpha => "sweep-alpha",
            Experiment::Simulate => "simulate",
            Experiment::HydroCompare => "hydro-compare",
            Experiment::GreenCheck => "green-check",
            Experiment::Energy => "energy",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s.trim())
            .ok_or_else(|| Error::config("experiment", format!("unknown experiment {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub experiment: Experiment,
    pub n: usize,
    /// Lattice sizes for `hydro-compare` and `green-check`.
    pub ns: Vec<usize>,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub beta: Beta,
    /// Regimes for `hydro-compare`.
    pub betas: Vec<Beta>,
    pub dt: f64,
    pub theta: f64,
    pub t_final: f64,
    /// Steps between stored frames; 0 picks about 10 frames for `solve`
    /// and 1 elsewhere.
    pub stride: usize,
    pub profile: Profile,
    pub seed: u64,
    pub replicas: usize,
    pub epsilon: f64,
    /// Snapshot times; empty means `[T]`.
    pub times: Vec<f64>,
    /// Reference grid and step for `hydro-compare`.
    pub n_ref: usize,
    pub dt_ref: f64,
    pub kappa: f64,
    /// `simulate` writes `replica, t, x, eta` rows instead of aggregates.
    pub long_form: bool,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// `lo:hi:k` expands to `k` points per decade from `lo` to `hi`.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) || per_decade == 0 {
        return Err(Error::invalid(
            "geometric grid needs 0 < lo <= hi and k >= 1",
        ));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let steps = ((b - a) * per_decade as f64).round() as usize;
    if steps == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=steps)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / steps as f64))
        .collect())
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            experiment: Experiment::Solve,
            n: 256,
            ns: vec![64, 128, 256],
            alpha: 1.0,
            alpha_grid: geometric_grid(1e-3, 1e3, 4).expect("static grid"),
            beta: Beta::Finite(1.0),
            betas: vec![
                Beta::Finite(0.5),
                Beta::Finite(1.0),
                Beta::Finite(2.0),
                Beta::Infinite,
            ],
            dt: 1e-5,
            theta: 0.5,
            t_final: 0.1,
            stride: 0,
            profile: Profile::Halfcos,
            seed: 42,
            replicas: 200,
            epsilon: 0.05,
            times: Vec::new(),
            n_ref: 1024,
            dt_ref: 1e-6,
            kappa: 2.0,
            long_form: false,
            output: None,
            threads: None,
        }
    }
}

/// Every accepted key, in metadata order.
pub const KEYS: [&str; 22] = [
    "experiment",
    "n",
    "ns",
    "alpha",
    "alpha-grid",
    "beta",
    "betas",
    "dt",
    "theta",
    "T",
    "stride",
    "profile",
    "seed",
    "replicas",
    "epsilon",
    "times",
    "n-ref",
    "dt-ref",
    "kappa",
    "long-form",
    "output",
    "threads",
];

fn canonical_key(key: &str) -> Option<&'static str> {
    let k = key.trim().replace('_', "-");
    let k = match k.as_str() {
        "t" | "t-final" => "T",
        other => other,
    };
    KEYS.into_iter().find(|&c| c == k)
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse {v:?}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    let items: Vec<&str> = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if items.is_empty() {
        return Err(Error::config(key, "empty list"));
    }
    items.into_iter().map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(key, format!("expected a boolean, got {v:?}"))),
    }
}

fn parse_alpha_grid(v: &str) -> Result<Vec<f64>> {
    let key = "alpha-grid";
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::config(key, "expected lo:hi:points-per-decade"));
        }
        let lo: f64 = parse_num(key, parts[0])?;
        let hi: f64 = parse_num(key, parts[1])?;
        let k: usize = parse_num(key, parts[2])?;
        geometric_grid(lo, hi, k).map_err(|e| Error::config(key, e.to_string()))
    } else {
        parse_list(key, v)
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Splits a config file into `(key, value)` pairs, one per non-blank line.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", i + 1),
                format!("expected `key = value`, got {line:?}"),
            ));
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_config_file(path: &std::path::Path) -> Result<Vec<(String, String)>> {
    parse_config_text(&std::fs::read_to_string(path)?)
}

impl RunSpec {
    /// Applies `pairs` in order on top of the defaults, then validates.
    /// An `experiment` key must agree with `experiment` when both are given.
    pub fn from_pairs(experiment: Option<Experiment>, pairs: &[(String, String)]) -> Result<Self> {
        let mut spec = RunSpec::default();
        let mut named: Option<Experiment> = None;
        for (k, v) in pairs {
            let key = canonical_key(k).ok_or_else(|| Error::config(k.as_str(), "unknown key"))?;
            spec.set(key, v, &mut named)?;
        }
        spec.experiment = match (experiment, named) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(
                    "experiment",
                    format!("config says {b} but the command is {a}"),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::config("experiment", "no experiment given")),
        };
        spec.validate()?;
        Ok(spec)
    }

    fn set(&mut self, key: &'static str, v: &str, named: &mut Option<Experiment>) -> Result<()> {
        match key {
            "experiment" => *named = Some(v.parse()?),
            "n" => self.n = parse_num(key, v)?,
            "ns" => self.ns = parse_list(key, v)?,
            "alpha" => self.alpha = parse_num(key, v)?,
            "alpha-grid" => self.alpha_grid = parse_alpha_grid(v)?,
            "beta" => {
                self.beta = v
                    .parse()
                    .map_err(|e: Error| Error::config(key, e.to_string()))?
            }
            "betas" => {
                self.betas = v
                    .split(',')
                    .map(|b| {
                        b.parse()
                            .map_err(|e: Error| Error::config(key, e.to_string()))
                    })
                    .collect::<Result<_>>()?
            }
            "dt" => self.dt = parse_num(key, v)?,
            "theta" => self.theta = parse_num(key, v)?,
            "T" => self.t_final = parse_num(key, v)?,
            "stride" => self.stride = parse_num(key, v)?,
            "profile" => self.profile = v.parse()?,
            "seed" => self.seed = parse_num(key, v)?,
            "replicas" => self.replicas = parse_num(key, v)?,
            "epsilon" => self.epsilon = parse_num(key, v)?,
            "times" => self.times = parse_list(key, v)?,
            "n-ref" => self.n_ref = parse_num(key, v)?,
            "dt-ref" => self.dt_ref = parse_num(key, v)?,
            "kappa" => self.kappa = parse_num(key, v)?,
            "long-form" => self.long_form = parse_bool(key, v)?,
            "output" => self.output = Some(PathBuf::from(v.trim())),
            "threads" => self.threads = Some(parse_num(key, v)?),
            _ => unreachable!("canonical keys are exhaustive"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.n < 3 {
            return fail("n", format!("n must be >= 3, got {}", self.n));
        }
        if self.ns.iter().any(|&n| n < 3) {
            return fail("ns", "every n must be >= 3".into());
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return fail("alpha", "alpha must be > 0".into());
        }
        if self.alpha_grid.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return fail("alpha-grid", "every alpha must be > 0".into());
        }
        if self.alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return fail("alpha-grid", "alphas must be strictly increasing".into());
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return fail("dt", "dt must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return fail("theta", "theta must lie in [0, 1]".into());
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return fail("T", "T must be > 0".into());
        }
        if let Err(e) = SolverSpec::new(self.dt, self.t_final).steps() {
            return fail("T", e.to_string());
        }
        if self.times.iter().any(|t| !(0.0..=self.t_final).contains(t)) {
            return fail("times", "snapshot times must lie in [0, T]".into());
        }
        if self.times.windows(2).any(|w| w[1] < w[0]) {
            return fail("times", "snapshot times must be sorted".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return fail("epsilon", "epsilon must lie in (0, 1/2)".into());
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return fail("kappa", "kappa must be > 0".into());
        }
        if !(self.dt_ref.is_finite() && self.dt_ref > 0.0) {
            return fail("dt-ref", "dt-ref must be > 0".into());
        }
        if self.n_ref < 3 {
            return fail("n-ref", "n-ref must be >= 3".into());
        }
        if self.threads == Some(0) {
            return fail("threads", "threads must be >= 1".into());
        }
        match self.experiment {
            Experiment::Simulate | Experiment::HydroCompare => {
                if !self.profile.is_density() {
                    return fail(
                        "profile",
                        format!("{} is not a density in [0, 1]", self.profile),
                    );
                }
                let min_replicas = if self.long_form { 1 } else { 2 };
                if self.replicas < min_replicas {
                    return fail("replicas", format!("replicas must be >= {min_replicas}"));
                }
                if self.experiment == Experiment::HydroCompare {
                    if let Err(e) = SolverSpec::new(self.dt_ref, self.t_final).steps() {
                        return fail("dt-ref", e.to_string());
                    }
                }
            }
            Experiment::Solve if self.stride > 0 => {
                if let Err(e) = SolverSpec::new(self.dt, self.t_final)
                    .with_stride(self.stride)
                    .steps()
                {
                    return fail("stride", e.to_string());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Snapshot times, defaulting to `[T]`.
    pub fn snapshot_times(&self) -> Vec<f64> {
        if self.times.is_empty() {
            vec![self.t_final]
        } else {
            self.times.clone()
        }
    }

    /// Every setting that affects results, as `key=value` pairs. Output
    /// path and thread count are left out so that files compare equal
    /// across machines and parallelism.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = Vec::new();
        let mut put = |k: &str, v: String| m.push((k.to_string(), v));
        put("experiment", self.experiment.to_string());
        put("n", self.n.to_string());
        put("ns", join(&self.ns));
        put("alpha", self.alpha.to_string());
        put("alpha-grid", join(&self.alpha_grid));
        put("beta", self.beta.to_string());
        put("betas", join(&self.betas));
        put("dt", self.dt.to_string());
        put("theta", self.theta.to_string());
        put("T", self.t_final.to_string());
        put("stride", self.stride.to_string());
        put("profile", self.profile.to_string());
        put("seed", self.seed.to_string());
        put("replicas", self.replicas.to_string());
        put("epsilon", self.epsilon.to_string());
        put("times", join(&self.snapshot_times()));
        put("n-ref", self.n_ref.to_string());
        put("dt-ref", self.dt_ref.to_string());
        put("kappa", self.kappa.to_string());
        put("long-form", self.long_form.to_string());
        m
    }
}
