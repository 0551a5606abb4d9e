use std::f64::consts::PI;

use super::config::RunSpec;
use super::csv::{num, CsvTable};
use super::{run_solver, sim_spec};
use crate::error::{Error, Result};
use crate::grid::{l2_inner, project_profile, Grid};
use crate::heat::{build_conductances, Beta, SolverSpec};
use crate::ssep::{empirical_pairing, mean_stderr, run_replicas, RNG_ALGORITHM};

pub type TestFunction = (&'static str, fn(f64) -> f64);

/// Test functions paired against both sides, by index.
pub const TEST_FUNCTIONS: [TestFunction; 5] = [
    ("one", |_| 1.0),
    ("cos2pi", |u| (2.0 * PI * u).cos()),
    ("sin2pi", |u| (2.0 * PI * u).sin()),
    ("cospi", |u| (PI * u).cos()),
    ("parabola", |u| u * (1.0 - u)),
];

/// Limiting equation for a given slow-bond exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Regime {
    Periodic,
    Robin,
    Neumann,
}

impl Regime {
    pub fn of(beta: Beta) -> Regime {
        match beta {
            Beta::Finite(b) if b < 1.0 => Regime::Periodic,
            Beta::Finite(1.0) => Regime::Robin,
            _ => Regime::Neumann,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regime::Periodic => "periodic",
            Regime::Robin => "robin",
            Regime::Neumann => "neumann",
        }
    }

    /// Conductances realizing the limit equation on a reference grid.
    fn reference_beta(&self) -> Beta {
        match self {
            Regime::Periodic => Beta::Finite(0.0),
            Regime::Robin => Beta::Finite(1.0),
            Regime::Neumann => Beta::Infinite,
        }
    }
}

/// `<rho_t, H>` for every snapshot time and test function, from a fine
/// finite-volume solve of the regime's equation.
pub fn reference_pairings(spec: &RunSpec, regime: Regime) -> Result<Vec<Vec<f64>>> {
    let grid = Grid::torus(spec.n_ref)?;
    let rates = build_conductances(spec.n_ref, spec.alpha, regime.reference_beta())?;
    let initial = project_profile(|u| spec.profile.eval(u), grid)?;
    let times = spec.snapshot_times();
    let steps_at: Vec<usize> = times
        .iter()
        .map(|&t| {
            let k = (t / spec.dt_ref).round();
            if (k * spec.dt_ref - t).abs() > 1e-9 * t.max(1.0) {
                Err(Error::config(
                    "dt-ref",
                    format!("snapshot time {t} is not a multiple of dt-ref"),
                ))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<_>>()?;
    let tests: Vec<_> = TEST_FUNCTIONS
        .iter()
        .map(|(_, h)| project_profile(h, grid))
        .collect::<Result<_>>()?;
    let steps = SolverSpec::new(spec.dt_ref, spec.t_final).steps()?;
    let mut out = vec![Vec::new(); times.len()];
    let mut step = 0usize;
    run_solver(
        &initial,
        &rates,
        spec.dt_ref,
        spec.theta,
        spec.t_final,
        steps,
        |t, v| {
            for (slot, _) in steps_at.iter().enumerate().filter(|(_, &k)| k == step) {
                let f = crate::grid::Field::from_parts(grid, v.to_vec(), t);
                out[slot] = tests
                    .iter()
                    .map(|h| l2_inner(&f, h).expect("same grid"))
                    .collect();
            }
            step += 1;
        },
    )?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HydroRow {
    pub n: usize,
    pub beta: Beta,
    pub regime: Regime,
    pub h_index: usize,
    pub t: f64,
    pub mc_mean: f64,
    pub pde: f64,
    pub discrepancy: f64,
    pub stderr: f64,
}

impl HydroRow {
    /// Sampling noise dominates the measured gap.
    pub fn underpowered(&self) -> bool {
        self.stderr > self.discrepancy
    }
}

pub fn hydro_rows(spec: &RunSpec) -> Result<Vec<HydroRow>> {
    let mut rows = Vec::new();
    let profile = spec.profile;
    for &beta in &spec.betas {
        let regime = Regime::of(beta);
        let reference = reference_pairings(spec, regime)?;
        for &n in &spec.ns {
            let sim = sim_spec(spec, n, beta);
            let runs = run_replicas(&sim, &move |u| profile.eval(u))?;
            for (k, &t) in sim.snapshot_times.iter().enumerate() {
                for (hi, (_, h)) in TEST_FUNCTIONS.iter().enumerate() {
                    let per_replica: Vec<f64> = runs
                        .iter()
                        .map(|r| empirical_pairing(&r.run.snapshots[k], h))
                        .collect();
                    let (mean, stderr) = mean_stderr(&per_replica);
                    let pde = reference[k][hi];
                    rows.push(HydroRow {
                        n,
                        beta,
                        regime,
                        h_index: hi,
                        t,
                        mc_mean: mean,
                        pde,
                        discrepancy: (mean - pde).abs(),
                        stderr,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn hydro_table(spec: &RunSpec, rows: &[HydroRow]) -> CsvTable {
    let mut t = CsvTable::new(
        spec.metadata(),
        &[
            "n",
            "beta",
            "regime",
            "alpha",
            "h_index",
            "h_name",
            "t",
            "mc_mean",
            "pde",
            "discrepancy",
            "stderr",
            "underpowered",
        ],
    );
    t.meta("rng", RNG_ALGORITHM);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.beta.to_string(),
            r.regime.name().to_string(),
            num(spec.alpha),
            r.h_index.to_string(),
            TEST_FUNCTIONS[r.h_index].0.to_string(),
            num(r.t),
            num(r.mc_mean),
            num(r.pde),
            num(r.discrepancy),
            num(r.stderr),
            r.underpowered().to_string(),
        ]);
    }
    t
}

pub fn hydro_compare(spec: &RunSpec) -> Result<CsvTable> {
    Ok(hydro_table(spec, &hydro_rows(spec)?))
}
