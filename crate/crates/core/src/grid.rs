//! Cell-centered grids on the unit interval / torus, fields, trajectories
//! and the discrete inner products and norms shared by every other module.
//!
//! Cell `x` covers `[x/n, (x+1)/n)` and its value is attached to the center
//! `(x + 1/2)/n`. Boundary traces are obtained by linear extrapolation from
//! the two outermost cells:
//!
//! ```text
//! f(0+) = (3 f[0]   - f[1]  ) / 2
//! f(1-) = (3 f[n-1] - f[n-2]) / 2
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Interval,
    Torus,
}

/// Uniform grid of `n` cells on `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
    topology: Topology,
}

impl Grid {
    pub fn new(n: usize, topology: Topology) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("grid needs n >= 2 cells, got {n}")));
        }
        Ok(Self { n, topology })
    }

    pub fn torus(n: usize) -> Result<Self> {
        Self::new(n, Topology::Torus)
    }

    pub fn interval(n: usize) -> Result<Self> {
        Self::new(n, Topology::Interval)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Cell width, always recomputed as `1/n`.
    #[inline]
    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    #[inline]
    pub fn topology(&self) -> Topology {
        self.topology
    }

    #[inline]
    pub fn center(&self, x: usize) -> f64 {
        (x as f64 + 0.5) / self.n as f64
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |x| self.center(x))
    }

    pub fn with_topology(&self, topology: Topology) -> Self {
        Self {
            n: self.n,
            topology,
        }
    }

    fn same_cells(&self, other: &Grid) -> bool {
        self.n == other.n
    }
}

/// Real-valued function on the cells of a grid at a given time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
    time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.n()
            )));
        }
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite field value at cell {x}"
            )));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::invalid(format!(
                "field time must be finite and >= 0, got {time}"
            )));
        }
        Ok(Self { grid, values, time })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n()], 0.0)
    }

    /// Unchecked constructor for values produced internally from finite data.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>, time: f64) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values, time }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn at_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// `h * sum(values)`, the discrete integral.
    pub fn mass(&self) -> f64 {
        self.grid.h() * self.values.iter().sum::<f64>()
    }

    pub fn mean(&self) -> f64 {
        self.mass()
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        check_same_grid(self, other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Extrapolated boundary value at `0+`.
    #[inline]
    pub fn trace_left(&self) -> f64 {
        self.values[0] + (self.values[0] - self.values[1]) / 2.0
    }

    /// Extrapolated boundary value at `1-`.
    #[inline]
    pub fn trace_right(&self) -> f64 {
        let n = self.values.len();
        self.values[n - 1] + (self.values[n - 1] - self.values[n - 2]) / 2.0
    }

    /// One CSV row `t, v0, ..., v{n-1}` with 17 significant digits.
    pub fn to_csv_row(&self) -> String {
        let mut row = String::with_capacity(24 * (self.values.len() + 1));
        write!(row, "{:.16e}", self.time).unwrap();
        for v in &self.values {
            write!(row, ",{v:.16e}").unwrap();
        }
        row
    }

    pub fn from_csv_row(grid: Grid, row: &str) -> Result<Self> {
        let mut parts = row.split(',').map(str::trim);
        let parse = |s: Option<&str>| -> Result<f64> {
            let s = s.ok_or_else(|| Error::invalid("short CSV row"))?;
            s.parse::<f64>()
                .map_err(|e| Error::invalid(format!("bad number `{s}`: {e}")))
        };
        let time = parse(parts.next())?;
        let values = (0..grid.n())
            .map(|_| parse(parts.next()))
            .collect::<Result<Vec<_>>>()?;
        if parts.next().is_some() {
            return Err(Error::GridMismatch("CSV row longer than grid".into()));
        }
        Self::new(grid, values, time)
    }
}

fn check_same_grid(f: &Field, g: &Field) -> Result<()> {
    if !f.grid.same_cells(&g.grid) {
        return Err(Error::GridMismatch(format!(
            "{} cells vs {} cells",
            f.grid.n(),
            g.grid.n()
        )));
    }
    Ok(())
}

/// Time-indexed sequence of fields with uniform spacing `dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: Grid,
    dt: f64,
    frames: Vec<Field>,
}

impl Trajectory {
    /// Builds a trajectory, stamping frame `k` with time `k * dt`.
    pub fn new(grid: Grid, dt: f64, frames: Vec<Field>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!(
                "trajectory dt must be > 0, got {dt}"
            )));
        }
        if frames.is_empty() {
            return Err(Error::invalid("trajectory needs at least one frame"));
        }
        let frames = frames
            .into_iter()
            .enumerate()
            .map(|(k, f)| {
                if !f.grid.same_cells(&grid) {
                    return Err(Error::GridMismatch(format!(
                        "frame {k} is on a different grid"
                    )));
                }
                Ok(f.at_time(k as f64 * dt))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { grid, dt, frames })
    }

    /// Samples `rho(t, u)` at cell centers for `t = k dt`, `k = 0..=steps`.
    pub fn from_fn(
        grid: Grid,
        dt: f64,
        steps: usize,
        rho: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let frames = (0..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                Field::new(grid, grid.centers().map(|u| rho(t, u)).collect(), t)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(grid, dt, frames)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        self.dt
    }

    #[inline]
    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn first(&self) -> &Field {
        &self.frames[0]
    }

    pub fn last(&self) -> &Field {
        self.frames.last().expect("trajectory is never empty")
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        (self.frames.len() - 1) as f64 * self.dt
    }

    /// Frame closest to time `t`.
    pub fn frame_at(&self, t: f64) -> &Field {
        let k = (t / self.dt).round().max(0.0) as usize;
        &self.frames[k.min(self.frames.len() - 1)]
    }

    /// Trapezoidal weights `dt * w_k` with `w = 1/2` at both ends.
    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.frames.len(), self.dt)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        for f in &self.frames {
            writeln!(w, "{}", f.to_csv_row())?;
        }
        Ok(())
    }
}

pub(crate) fn trapezoid_weights(len: usize, dt: f64) -> Vec<f64> {
    let mut w = vec![dt; len];
    if len == 1 {
        w[0] = 0.0;
    } else {
        w[0] = 0.5 * dt;
        w[len - 1] = 0.5 * dt;
    }
    w
}

/// Midpoint sampling of `profile` at cell centers.
pub fn project_profile(profile: impl Fn(f64) -> f64, grid: Grid) -> Result<Field> {
    let values: Vec<f64> = grid.centers().map(&profile).collect();
    if let Some(x) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "profile is not finite at u = {}",
            grid.center(x)
        )));
    }
    Ok(Field::from_parts(grid, values, 0.0))
}

/// `h * sum_x f(x) g(x)`.
pub fn l2_inner(f: &Field, g: &Field) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(dot(f.values(), g.values()) * f.grid.h())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn l2_norm_sq(f: &Field) -> f64 {
    dot(f.values(), f.values()) * f.grid.h()
}

/// Inner product against `W_alpha(du) = du + (1/alpha) delta_0(du)`; the atom
/// is evaluated on the extrapolated traces at `0+`.
pub fn walpha_inner(f: &Field, g: &Field, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let bulk = l2_inner(f, g)?;
    Ok(bulk + f.trace_left() * g.trace_left() / alpha)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be > 0, got {alpha}")));
    }
    Ok(())
}

/// Bond differences `n (f(x+1) - f(x))`.
///
/// On the torus there are `n` bonds, the last one wrapping `{n-1, 0}`; on the
/// interval that bond is dropped and `n - 1` values are returned.
pub fn discrete_gradient(f: &Field) -> Vec<f64> {
    let n = f.grid.n();
    let scale = n as f64;
    let v = f.values();
    let bonds = match f.grid.topology() {
        Topology::Torus => n,
        Topology::Interval => n - 1,
    };
    (0..bonds)
        .map(|x| scale * (v[(x + 1) % n] - v[x]))
        .collect()
}

/// Torus divergence of a bond field: `n (g_x - g_{x-1})`, the negative
/// adjoint of [`discrete_gradient`] under `h`-weighted sums.
pub fn discrete_divergence(grid: Grid, bonds: &[f64]) -> Result<Field> {
    let n = grid.n();
    if bonds.len() != n {
        return Err(Error::GridMismatch(format!(
            "torus divergence needs {n} bond values, got {}",
            bonds.len()
        )));
    }
    let scale = n as f64;
    let values = (0..n)
        .map(|x| scale * (bonds[x] - bonds[(x + n - 1) % n]))
        .collect();
    Ok(Field::from_parts(grid, values, 0.0))
}

/// `sqrt( sum_k w_k dt ||a_k - b_k||^2 )`, trapezoidal in time.
pub fn spacetime_l2_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.grid.n() != b.grid.n() {
        return Err(Error::GridMismatch(format!(
            "{} cells vs {} cells",
            a.grid.n(),
            b.grid.n()
        )));
    }
    if a.frames.len() != b.frames.len() {
        return Err(Error::GridMismatch(format!(
            "{} frames vs {} frames",
            a.frames.len(),
            b.frames.len()
        )));
    }
    if (a.dt - b.dt).abs() > 1e-12 * a.dt.max(b.dt) {
        return Err(Error::GridMismatch(format!("dt {} vs {}", a.dt, b.dt)));
    }
    let h = a.grid.h();
    let sum: f64 = a
        .frames
        .iter()
        .zip(&b.frames)
        .zip(a.time_weights())
        .map(|((fa, fb), w)| {
            let d: f64 = fa
                .values()
                .iter()
                .zip(fb.values())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            w * h * d
        })
        .sum();
    Ok(sum.sqrt())
}
