use std::collections::HashMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use slowbond::experiments::{self, Experiment, Profile, RunSpec};
use slowbond::green;
use slowbond::heat::{self, Beta, SolverSpec};
use slowbond::ssep::{self, SimSpec};

fn err(e: slowbond::Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.category()))
}

fn parse<T: std::str::FromStr>(what: &str, s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse()
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

/// Runs an experiment by name with `key -> value` options and returns the CSV text.
#[pyfunction]
#[pyo3(signature = (experiment, options=None))]
fn run(experiment: &str, options: Option<HashMap<String, String>>) -> PyResult<String> {
    let exp: Experiment = parse("experiment", experiment)?;
    let mut pairs: Vec<(String, String)> = options.unwrap_or_default().into_iter().collect();
    pairs.sort();
    let spec = RunSpec::from_pairs(Some(exp), &pairs).map_err(err)?;
    Ok(experiments::run(&spec).map_err(err)?.to_string_lossy())
}

/// Robin Green kernel `G(u, r)`.
#[pyfunction]
fn kernel_value(alpha: f64, u: f64, r: f64) -> PyResult<f64> {
    green::kernel_value(alpha, u, r).map_err(err)
}

/// Heat-equation trajectory: `(times, frames)` with one list of cell values per frame.
#[pyfunction]
#[pyo3(signature = (profile, n, alpha=1.0, beta="1", dt=1e-5, t_final=0.1, stride=100))]
fn solve(
    profile: &str,
    n: usize,
    alpha: f64,
    beta: &str,
    dt: f64,
    t_final: f64,
    stride: usize,
) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let p: Profile = parse("profile", profile)?;
    let b: Beta = parse("beta", beta)?;
    let rates = heat::build_conductances(n, alpha, b).map_err(err)?;
    let traj = heat::solve(
        |u| p.eval(u),
        &rates,
        &SolverSpec::new(dt, t_final).with_stride(stride),
    )
    .map_err(err)?;
    let times = traj.frames().iter().map(|f| f.time()).collect();
    let frames = traj.frames().iter().map(|f| f.values().to_vec()).collect();
    Ok((times, frames))
}

/// Final occupation of every replica.
#[pyfunction]
#[pyo3(signature = (profile, n, t, alpha=1.0, beta="1", replicas=1, seed=42))]
fn simulate(
    profile: &str,
    n: usize,
    t: f64,
    alpha: f64,
    beta: &str,
    replicas: usize,
    seed: u64,
) -> PyResult<Vec<Vec<u8>>> {
    let p: Profile = parse("profile", profile)?;
    let spec = SimSpec {
        n,
        alpha,
        beta: parse("beta", beta)?,
        t_macro: t,
        snapshot_times: vec![t],
        seed,
        replicas,
    };
    let runs = ssep::run_replicas(&spec, &move |u| p.eval(u)).map_err(err)?;
    Ok(runs
        .into_iter()
        .map(|r| r.run.snapshots[0].eta().to_vec())
        .collect())
}

#[pymodule]
#[pyo3(name = "slowbond")]
fn slowbond_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_value, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}
