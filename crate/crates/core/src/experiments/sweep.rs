use rayon::prelude::*;

use super::config::RunSpec;
use super::csv::{num, CsvTable};
use super::{at_alpha, auto_stride, run_solver};
use crate::energy::EnergyAccumulator;
use crate::error::Result;
use crate::grid::{project_profile, spacetime_l2_distance, Field, Grid, Trajectory};
use crate::heat::{build_conductances, robin_bc_residual, Beta, BondRates};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub dist_to_neumann: f64,
    pub dist_to_periodic: f64,
    pub energy_total: f64,
    pub mass_drift: f64,
    pub max_robin_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Distance between the Neumann and periodic solutions themselves.
    pub dist_neumann_periodic: f64,
    /// Frames stored per trajectory for the distances.
    pub stride: usize,
}

fn limit(initial: &Field, rates: &BondRates, spec: &RunSpec, stride: usize) -> Result<Trajectory> {
    run_solver(
        initial,
        rates,
        spec.dt,
        spec.theta,
        spec.t_final,
        stride,
        |_, _| {},
    )
}

/// Robin solutions over the alpha grid compared against both limits.
///
/// Distances use frames every `stride` steps; energy and mass drift are
/// accumulated at every step.
pub fn sweep_alpha(spec: &RunSpec) -> Result<SweepResult> {
    let grid = Grid::torus(spec.n)?;
    let initial = project_profile(|u| spec.profile.eval(u), grid)?;
    let stride = if spec.stride == 0 {
        auto_stride(spec.dt, spec.t_final, 1000)?
    } else {
        spec.stride
    };
    let neumann = limit(
        &initial,
        &build_conductances(spec.n, 1.0, Beta::Infinite)?,
        spec,
        stride,
    )?;
    let periodic = limit(
        &initial,
        &build_conductances(spec.n, 1.0, Beta::Finite(0.0))?,
        spec,
        stride,
    )?;
    let dist_neumann_periodic = spacetime_l2_distance(&neumann, &periodic)?;
    let mass0 = initial.mass();
    let h = grid.h();

    let rows = spec
        .alpha_grid
        .par_iter()
        .map(|&alpha| {
            let run = || -> Result<SweepRow> {
                let rates = build_conductances(spec.n, alpha, Beta::Finite(1.0))?;
                let mut energy = EnergyAccumulator::new(alpha, spec.kappa, spec.dt)?;
                let mut drift: f64 = 0.0;
                let traj = run_solver(
                    &initial,
                    &rates,
                    spec.dt,
                    spec.theta,
                    spec.t_final,
                    stride,
                    |t, v| {
                        let f = Field::from_parts(grid, v.to_vec(), t);
                        energy.push(&f);
                        drift = drift.max((h * v.iter().sum::<f64>() - mass0).abs());
                    },
                )?;
                let t_skip = 0.1 * spec.t_final;
                let robin = robin_bc_residual(&traj, alpha)?
                    .into_iter()
                    .zip(traj.frames())
                    .filter(|(_, f)| f.time() >= t_skip)
                    .map(|((a, b), _)| a.abs().max(b.abs()))
                    .fold(0.0, f64::max);
                Ok(SweepRow {
                    alpha,
                    dist_to_neumann: spacetime_l2_distance(&traj, &neumann)?,
                    dist_to_periodic: spacetime_l2_distance(&traj, &periodic)?,
                    energy_total: energy.finish()?.total,
                    mass_drift: drift,
                    max_robin_residual: robin,
                })
            };
            run().map_err(|e| at_alpha(alpha, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        rows,
        dist_neumann_periodic,
        stride,
    })
}

pub fn sweep_table(spec: &RunSpec, result: &SweepResult) -> CsvTable {
    let mut t = CsvTable::new(
        spec.metadata(),
        &[
            "alpha",
            "dist_to_neumann",
            "dist_to_periodic",
            "energy_total",
            "mass_drift",
            "max_robin_residual",
        ],
    );
    t.meta("distance_stride", result.stride);
    t.meta("dist_neumann_periodic", num(result.dist_neumann_periodic));
    t.meta("robin_residual_from", "0.1T");
    for r in &result.rows {
        t.push(vec![
            num(r.alpha),
            num(r.dist_to_neumann),
            num(r.dist_to_periodic),
            num(r.energy_total),
            num(r.mass_drift),
            num(r.max_robin_residual),
        ]);
    }
    t
}
