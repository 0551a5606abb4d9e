//! Experiment drivers behind the command-line tool. Every driver takes a
//! validated [`RunSpec`] and returns a [`CsvTable`].

pub mod config;
pub mod csv;
pub mod hydro;
pub mod profile;
pub mod sweep;

pub use config::{Experiment, RunSpec};
pub use csv::CsvTable;
pub use hydro::hydro_compare;
pub use profile::Profile;
pub use sweep::{sweep_alpha, SweepResult, SweepRow};

use rand::Rng;

use crate::energy::{EnergyAccumulator, EnergyReport};
use crate::error::{Error, Result};
use crate::green::{
    bilinear_form, check_left_inverse, quadratic_form, GreenOperator, ZeroMeanField,
};
use crate::grid::{l2_inner, project_profile, Field, Grid, Trajectory};
use crate::heat::{build_conductances, BondRates, SolverSpec, ThetaStepper};
use crate::ssep::{self, SimSpec, RNG_ALGORITHM};
use csv::num;

/// Prefixes an error with the alpha it came from, keeping its category.
pub(crate) fn at_alpha(alpha: f64, e: Error) -> Error {
    match e {
        Error::InvalidInput(m) => Error::InvalidInput(format!("alpha = {alpha}: {m}")),
        Error::GridMismatch(m) => Error::GridMismatch(format!("alpha = {alpha}: {m}")),
        other => other,
    }
}

/// Largest stride dividing the step count that keeps at least
/// `min(steps, target)` intervals.
pub(crate) fn auto_stride(dt: f64, t_final: f64, target: usize) -> Result<usize> {
    let steps = SolverSpec::new(dt, t_final).steps()?;
    let want = target.min(steps).max(1);
    Ok((1..=steps / want)
        .rev()
        .find(|s| steps % s == 0)
        .unwrap_or(1))
}

/// Theta-scheme run that calls `on_step(t, values)` at every step
/// (including `t = 0`) and stores every `stride`-th frame.
pub(crate) fn run_solver(
    initial: &Field,
    rates: &BondRates,
    dt: f64,
    theta: f64,
    t_final: f64,
    stride: usize,
    mut on_step: impl FnMut(f64, &[f64]),
) -> Result<Trajectory> {
    let steps = SolverSpec::new(dt, t_final)
        .with_theta(theta)
        .with_stride(stride)
        .steps()?;
    let mut stepper = ThetaStepper::new(rates, dt, theta)?;
    let grid = initial.grid();
    let mut values = initial.values().to_vec();
    let mut frames = vec![initial.clone().at_time(0.0)];
    on_step(0.0, &values);
    for k in 1..=steps {
        stepper.step(&mut values);
        let t = k as f64 * dt;
        on_step(t, &values);
        if k % stride == 0 {
            frames.push(Field::from_parts(grid, values.clone(), t));
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("solver produced non-finite values"));
    }
    Trajectory::new(grid, dt * stride as f64, frames)
}

pub fn run(spec: &RunSpec) -> Result<CsvTable> {
    match spec.experiment {
        Experiment::Solve => solve_table(spec),
        Experiment::SweepAlpha => Ok(sweep::sweep_table(spec, &sweep_alpha(spec)?)),
        Experiment::Simulate => simulate_table(spec),
        Experiment::HydroCompare => hydro_compare(spec),
        Experiment::GreenCheck => green_check(spec),
        Experiment::Energy => energy_table(spec),
    }
}

pub fn solve_table(spec: &RunSpec) -> Result<CsvTable> {
    let rates = build_conductances(spec.n, spec.alpha, spec.beta)?;
    let grid = Grid::torus(spec.n)?;
    let initial = project_profile(|u| spec.profile.eval(u), grid)?;
    let stride = if spec.stride == 0 {
        auto_stride(spec.dt, spec.t_final, 10)?
    } else {
        spec.stride
    };
    let traj = run_solver(
        &initial,
        &rates,
        spec.dt,
        spec.theta,
        spec.t_final,
        stride,
        |_, _| {},
    )?;
    let mut t = CsvTable::new(spec.metadata(), &["t", "x", "u", "rho"]);
    t.meta("output_stride", stride);
    for f in traj.frames() {
        for (x, (v, u)) in f.values().iter().zip(grid.centers()).enumerate() {
            t.push(vec![num(f.time()), x.to_string(), num(u), num(*v)]);
        }
    }
    Ok(t)
}

/// Energy of the solution for one alpha, accumulated at every step.
pub fn energy_for_alpha(spec: &RunSpec, alpha: f64) -> Result<EnergyReport> {
    let rates = build_conductances(spec.n, alpha, spec.beta)?;
    let grid = Grid::torus(spec.n)?;
    let initial = project_profile(|u| spec.profile.eval(u), grid)?;
    let mut acc = EnergyAccumulator::new(alpha, spec.kappa, spec.dt)?;
    let steps = SolverSpec::new(spec.dt, spec.t_final).steps()?;
    run_solver(
        &initial,
        &rates,
        spec.dt,
        spec.theta,
        spec.t_final,
        steps,
        |t, v| {
            acc.push(&Field::from_parts(grid, v.to_vec(), t));
        },
    )?;
    acc.finish()
}

pub fn energy_reports(spec: &RunSpec) -> Result<Vec<EnergyReport>> {
    use rayon::prelude::*;
    spec.alpha_grid
        .par_iter()
        .map(|&a| energy_for_alpha(spec, a).map_err(|e| at_alpha(a, e)))
        .collect()
}

pub fn energy_table(spec: &RunSpec) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        spec.metadata(),
        &["alpha", "bulk", "atom", "total", "bound_check"],
    );
    for r in energy_reports(spec)? {
        t.push(vec![
            num(r.alpha),
            num(r.bulk),
            num(r.atom),
            num(r.total),
            num(r.bound_check),
        ]);
    }
    Ok(t)
}

/// Max over frame pairs `(i, i + 2^j)` of `|<rho_t, H> - <rho_s, H>| / sqrt(t - s)`.
pub fn holder_check(traj: &Trajectory, h: impl Fn(f64) -> f64) -> Result<f64> {
    if traj.len() < 16 {
        return Err(Error::invalid(format!(
            "Hölder check needs at least 16 frames, got {}",
            traj.len()
        )));
    }
    let hf = project_profile(h, traj.grid())?;
    let pairings = traj
        .frames()
        .iter()
        .map(|f| l2_inner(f, &hf))
        .collect::<Result<Vec<_>>>()?;
    let len = pairings.len();
    let mut worst: f64 = 0.0;
    let mut gap = 1;
    while gap < len {
        let dt = (gap as f64 * traj.dt()).sqrt();
        for i in 0..len - gap {
            worst = worst.max((pairings[i + gap] - pairings[i]).abs() / dt);
        }
        gap *= 2;
    }
    Ok(worst)
}

/// Smooth zero-mean random field: a few random Fourier modes.
fn random_smooth(grid: Grid, rng: &mut impl Rng) -> ZeroMeanField {
    let coeffs: Vec<(f64, f64)> = (0..6)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let f = project_profile(
        |u| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, (a, b))| {
                    let w = 2.0 * std::f64::consts::PI * (k + 1) as f64;
                    a * (w * u).cos() + b * (w * u).sin()
                })
                .sum::<f64>()
                + 0.5 * (std::f64::consts::PI * u).cos()
        },
        grid,
    )
    .expect("finite profile");
    ZeroMeanField::normalized(&f)
}

pub fn green_check(spec: &RunSpec) -> Result<CsvTable> {
    let mut t = CsvTable::new(
        spec.metadata(),
        &[
            "alpha",
            "n",
            "symmetry",
            "min_quadratic_form",
            "left_inverse_random",
            "left_inverse_cos",
            "bc_derivative_gap",
            "bc_robin_gap",
            "quadratic_form_cos",
            "quadratic_form_error",
        ],
    );
    t.meta("rng", RNG_ALGORITHM);
    let exact = 1.0 / (8.0 * std::f64::consts::PI.powi(2));
    for &n in &spec.ns {
        let grid = Grid::interval(n)?;
        let cos = ZeroMeanField::normalized(&project_profile(
            |u| (2.0 * std::f64::consts::PI * u).cos(),
            grid,
        )?);
        for (ai, &alpha) in spec.alpha_grid.iter().enumerate() {
            // same random fields at every n, so the columns show refinement
            let mut rng = ssep::replica_rng(spec.seed, ai as u64);
            let g1 = random_smooth(grid, &mut rng);
            let g2 = random_smooth(grid, &mut rng);
            let sym = (bilinear_form(&g1, &g2, alpha)? - bilinear_form(&g2, &g1, alpha)?).abs();
            let qmin = quadratic_form(&g1, alpha)?.min(quadratic_form(&g2, alpha)?);
            let op = GreenOperator::new(alpha, grid)?;
            let f = op.apply(&g1)?;
            let (d0, d1) = op.boundary_derivatives(&g1)?;
            let jump = alpha * (f.trace_left() - f.trace_right());
            let qcos = quadratic_form(&cos, alpha)?;
            t.push(vec![
                num(alpha),
                n.to_string(),
                num(sym),
                num(qmin),
                num(check_left_inverse(&g1, alpha)?),
                num(check_left_inverse(&cos, alpha)?),
                num((d0 - d1).abs()),
                num((d0 - jump).abs()),
                num(qcos),
                num((qcos - exact).abs()),
            ]);
        }
    }
    Ok(t)
}

pub fn sim_spec(spec: &RunSpec, n: usize, beta: crate::heat::Beta) -> SimSpec {
    SimSpec {
        n,
        alpha: spec.alpha,
        beta,
        t_macro: spec.t_final,
        snapshot_times: spec.snapshot_times(),
        seed: spec.seed,
        replicas: spec.replicas,
    }
}

pub fn simulate_table(spec: &RunSpec) -> Result<CsvTable> {
    let sim = sim_spec(spec, spec.n, spec.beta);
    let profile = spec.profile;
    let runs = ssep::run_replicas(&sim, &move |u| profile.eval(u))?;
    let header: &[&str] = if spec.long_form {
        &["replica", "t", "x", "eta"]
    } else {
        &["t", "x", "mean", "stderr", "boxcar_left", "boxcar_right"]
    };
    let mut t = CsvTable::new(spec.metadata(), header);
    t.meta("rng", RNG_ALGORITHM);
    let slow_swaps: u64 = runs.iter().map(|r| r.run.events.slow_swaps).sum();
    let swaps: u64 = runs.iter().map(|r| r.run.events.swaps).sum();
    t.meta("swaps", swaps);
    t.meta("slow_swaps", slow_swaps);
    for r in &runs {
        if r.run
            .snapshots
            .iter()
            .any(|c| c.particles() != r.initial_particles)
        {
            return Err(Error::invalid(format!(
                "replica {} lost particles",
                r.replica
            )));
        }
    }
    if spec.long_form {
        for r in &runs {
            for (time, c) in r.run.times.iter().zip(&r.run.snapshots) {
                for (x, e) in c.eta().iter().enumerate() {
                    t.push(vec![
                        r.replica.to_string(),
                        num(*time),
                        x.to_string(),
                        e.to_string(),
                    ]);
                }
            }
        }
        return Ok(t);
    }
    let stats = ssep::ensemble_stats(&runs)?;
    for (k, time) in stats.times.iter().enumerate() {
        let boxcars: Vec<(f64, f64)> = runs
            .iter()
            .map(|r| ssep::boxcar_averages(&r.run.snapshots[k], spec.epsilon))
            .collect::<Result<_>>()?;
        let left = boxcars.iter().map(|b| b.0).sum::<f64>() / runs.len() as f64;
        let right = boxcars.iter().map(|b| b.1).sum::<f64>() / runs.len() as f64;
        for x in 0..spec.n {
            // boxcar columns repeat per row so the table stays rectangular
            t.push(vec![
                num(*time),
                x.to_string(),
                num(stats.mean[k][x]),
                num(stats.stderr[k][x]),
                num(left),
                num(right),
            ]);
        }
    }
    Ok(t)
}
