//! Conservative finite-volume solver for the lattice heat equation with a
//! per-bond conductance vector.
//!
//! A single operator covers the three regimes of the slow-bond system: the
//! bond `{n-1, 0}` carries conductance `alpha n^-beta`, every other bond
//! carries `1`. `beta = 0, alpha = 1` is the periodic heat equation,
//! `beta = 1` the Robin problem `d_u rho(0) = d_u rho(1) = alpha (rho(0) - rho(1))`,
//! and `beta = inf` (blocked bond) the Neumann problem.

mod cyclic;
mod spectral;

use std::fmt;
use std::str::FromStr;

pub use cyclic::CyclicTridiagonal;
pub use spectral::{spectral_neumann, spectral_periodic, CosineSeries, FourierSeries};

use crate::error::{Error, Result};
use crate::grid::{check_alpha, project_profile, Field, Grid, Trajectory};

/// Slow-bond exponent; `Infinite` blocks the bond exactly (`n^-inf = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    Infinite,
}

impl Beta {
    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            return Ok(Beta::Infinite);
        }
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::invalid(format!(
                "beta must be in [0, inf], got {beta}"
            )));
        }
        Ok(Beta::Finite(beta))
    }

    pub fn as_f64(&self) -> f64 {
        match *self {
            Beta::Finite(b) => b,
            Beta::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Beta {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Beta::Infinite),
            other => {
                let b: f64 = other.parse().map_err(|_| {
                    Error::invalid(format!("beta must be a number or `inf`, got `{s}`"))
                })?;
                Beta::new(b)
            }
        }
    }
}

/// Per-bond conductances; `conductance[x]` sits on bond `{x, x+1 mod n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BondRates {
    n: usize,
    alpha: f64,
    beta: Beta,
    conductance: Vec<f64>,
}

impl BondRates {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn conductance(&self) -> &[f64] {
        &self.conductance
    }

    /// Conductance of the slow bond `{n-1, 0}`.
    pub fn slow(&self) -> f64 {
        self.conductance[self.n - 1]
    }

    /// Arbitrary nonnegative conductances, mainly for tests.
    pub fn from_conductances(conductance: Vec<f64>) -> Result<Self> {
        let n = conductance.len();
        if n < 2 {
            return Err(Error::invalid("need at least two bonds"));
        }
        if conductance.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("conductances must be finite and >= 0"));
        }
        Ok(Self {
            n,
            alpha: f64::NAN,
            beta: Beta::Finite(f64::NAN),
            conductance,
        })
    }
}

pub fn build_conductances(n: usize, alpha: f64, beta: Beta) -> Result<BondRates> {
    if n < 2 {
        return Err(Error::invalid(format!("n must be >= 2, got {n}")));
    }
    check_alpha(alpha)?;
    let slow = match beta {
        Beta::Infinite => 0.0,
        Beta::Finite(b) => {
            if !(b.is_finite() && b >= 0.0) {
                return Err(Error::invalid(format!("beta must be in [0, inf], got {b}")));
            }
            alpha * (n as f64).powf(-b)
        }
    };
    let mut conductance = vec![1.0; n];
    conductance[n - 1] = slow;
    Ok(BondRates {
        n,
        alpha,
        beta,
        conductance,
    })
}

fn check_dims(f: &Field, rates: &BondRates) -> Result<()> {
    if f.grid().n() != rates.n {
        return Err(Error::GridMismatch(format!(
            "field has {} cells, rates have {} bonds",
            f.grid().n(),
            rates.n
        )));
    }
    Ok(())
}

fn apply_operator(values: &[f64], conductance: &[f64], out: &mut [f64]) {
    let n = values.len();
    let n2 = (n * n) as f64;
    for x in 0..n {
        let left = (x + n - 1) % n;
        let right = (x + 1) % n;
        out[x] = n2
            * (conductance[left] * (values[left] - values[x])
                + conductance[x] * (values[right] - values[x]));
    }
}

/// `g(x) = n^2 [c(x-1)(f(x-1) - f(x)) + c(x)(f(x+1) - f(x))]`, indices mod n.
pub fn semidiscrete_rhs(f: &Field, rates: &BondRates) -> Result<Field> {
    check_dims(f, rates)?;
    let mut out = vec![0.0; rates.n];
    apply_operator(f.values(), &rates.conductance, &mut out);
    Ok(Field::from_parts(f.grid(), out, f.time()))
}

/// Theta-scheme time stepper with a prefactored system matrix.
///
/// Solves `(I - theta dt L) f_new = (I + (1 - theta) dt L) f`.
#[derive(Debug, Clone)]
pub struct ThetaStepper {
    conductance: Vec<f64>,
    dt: f64,
    theta: f64,
    system: CyclicTridiagonal,
    scratch: Vec<f64>,
}

impl ThetaStepper {
    pub fn new(rates: &BondRates, dt: f64, theta: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid(format!(
                "theta must be in [0, 1], got {theta}"
            )));
        }
        let n = rates.n;
        let c = &rates.conductance;
        let k = theta * dt * (n * n) as f64;
        let lower: Vec<f64> = (0..n).map(|x| -k * c[(x + n - 1) % n]).collect();
        let upper: Vec<f64> = (0..n).map(|x| -k * c[x]).collect();
        let diag: Vec<f64> = (0..n)
            .map(|x| 1.0 + k * (c[(x + n - 1) % n] + c[x]))
            .collect();
        let system = CyclicTridiagonal::new(lower, diag, upper)?;
        Ok(Self {
            conductance: c.clone(),
            dt,
            theta,
            system,
            scratch: vec![0.0; n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `values` by one step in place.
    pub fn step(&mut self, values: &mut [f64]) {
        let explicit = (1.0 - self.theta) * self.dt;
        if explicit > 0.0 {
            apply_operator(values, &self.conductance, &mut self.scratch);
            for (v, l) in values.iter_mut().zip(&self.scratch) {
                *v += explicit * l;
            }
        }
        if self.theta > 0.0 {
            self.system.solve_in_place(values);
        }
    }
}

/// One theta step.
pub fn step_theta(f: &Field, rates: &BondRates, dt: f64, theta: f64) -> Result<Field> {
    check_dims(f, rates)?;
    let mut stepper = ThetaStepper::new(rates, dt, theta)?;
    let mut values = f.values().to_vec();
    stepper.step(&mut values);
    Ok(Field::from_parts(f.grid(), values, f.time() + dt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
}

impl SolverSpec {
    /// Crank-Nicolson (`theta = 1/2`) with every step stored.
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            theta: 0.5,
            dt,
            t_final,
            snapshot_stride: 1,
        }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    /// Number of time steps; `t_final` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final > 0.0) {
            return Err(Error::invalid(format!(
                "T must be > 0, got {}",
                self.t_final
            )));
        }
        if self.dt > self.t_final {
            return Err(Error::invalid(format!(
                "dt = {} exceeds T = {}",
                self.dt, self.t_final
            )));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta must be in [0, 1], got {}",
                self.theta
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::invalid("snapshot stride must be >= 1"));
        }
        let ratio = self.t_final / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() > 1e-6 {
            return Err(Error::invalid(format!(
                "T = {} is not a whole number of steps of dt = {}",
                self.t_final, self.dt
            )));
        }
        let steps = steps as usize;
        if !steps.is_multiple_of(self.snapshot_stride) {
            return Err(Error::invalid(format!(
                "{steps} steps are not divisible by snapshot stride {}",
                self.snapshot_stride
            )));
        }
        Ok(steps)
    }
}

/// Solves from the midpoint projection of `profile`.
pub fn solve(
    profile: impl Fn(f64) -> f64,
    rates: &BondRates,
    spec: &SolverSpec,
) -> Result<Trajectory> {
    let grid = Grid::torus(rates.n)?;
    let initial = project_profile(profile, grid)?;
    solve_field(&initial, rates, spec)
}

pub fn solve_field(initial: &Field, rates: &BondRates, spec: &SolverSpec) -> Result<Trajectory> {
    check_dims(initial, rates)?;
    let steps = spec.steps()?;
    let mut stepper = ThetaStepper::new(rates, spec.dt, spec.theta)?;
    let grid = initial.grid();
    let mut values = initial.values().to_vec();
    let mut frames = Vec::with_capacity(steps / spec.snapshot_stride + 1);
    frames.push(Field::from_parts(grid, values.clone(), 0.0));
    for k in 1..=steps {
        stepper.step(&mut values);
        if k % spec.snapshot_stride == 0 {
            frames.push(Field::from_parts(grid, values.clone(), k as f64 * spec.dt));
        }
    }
    if let Some(x) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "solver produced a non-finite value at cell {x}"
        )));
    }
    Trajectory::new(grid, spec.dt * spec.snapshot_stride as f64, frames)
}

/// One-sided second-order derivative at `0+` from the first three cells.
pub fn derivative_left(f: &Field) -> f64 {
    let v = f.values();
    (2.0 * (v[1] - v[0]) - (v[2] - v[1])) / f.grid().h()
}

/// One-sided second-order derivative at `1-` from the last three cells.
pub fn derivative_right(f: &Field) -> f64 {
    let v = f.values();
    let n = v.len();
    (2.0 * (v[n - 1] - v[n - 2]) - (v[n - 2] - v[n - 3])) / f.grid().h()
}

/// Per-frame Robin residuals `(r0, r1)` with
/// `r = d_u rho - alpha (rho(0+) - rho(1-))` at either end.
pub fn robin_bc_residual(traj: &Trajectory, alpha: f64) -> Result<Vec<(f64, f64)>> {
    check_alpha(alpha)?;
    if traj.grid().n() < 3 {
        return Err(Error::invalid("Robin residual needs at least 3 cells"));
    }
    Ok(traj
        .frames()
        .iter()
        .map(|f| {
            let jump = alpha * (f.trace_left() - f.trace_right());
            (derivative_left(f) - jump, derivative_right(f) - jump)
        })
        .collect())
}
