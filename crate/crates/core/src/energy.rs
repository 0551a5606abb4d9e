//! Energy in the `W_alpha` geometry: the closed-form functional
//!
//! ```text
//! (1/4 kappa) int_0^T ( ||d_u rho||^2 + alpha (rho(0+) - rho(1-))^2 ) dt
//! ```
//!
//! its variational characterization over finite test families, and test
//! functions `H` satisfying the `W_alpha` boundary conditions.

use crate::error::{Error, Result};
use crate::grid::{check_alpha, l2_norm_sq, walpha_inner, Field, Grid, Topology, Trajectory};
use crate::heat::{derivative_left, derivative_right};

pub const DEFAULT_KAPPA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub alpha: f64,
    /// `int ||d_u rho||^2 dt` over interior bonds.
    pub bulk: f64,
    /// `int alpha (rho(0+) - rho(1-))^2 dt` on extrapolated traces.
    pub atom: f64,
    /// `(bulk + atom) / (4 kappa)`.
    pub total: f64,
    /// `||rho_0||^2 / (8 kappa)`.
    pub bound_check: f64,
}

/// `alpha (f(0+) - f(1-))`, the derivative at the atom of `W_alpha`.
pub fn walpha_boundary_derivative(f: &Field, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(alpha * (f.trace_left() - f.trace_right()))
}

/// `h * sum (n (f[x+1] - f[x]))^2` over the `n - 1` interior bonds.
fn bulk_gradient_sq(f: &Field) -> f64 {
    let v = f.values();
    let n = v.len() as f64;
    v.windows(2)
        .map(|w| (n * (w[1] - w[0])).powi(2))
        .sum::<f64>()
        / n
}

pub fn energy_functional(traj: &Trajectory, alpha: f64) -> Result<EnergyReport> {
    energy_functional_with_kappa(traj, alpha, DEFAULT_KAPPA)
}

pub fn energy_functional_with_kappa(
    traj: &Trajectory,
    alpha: f64,
    kappa: f64,
) -> Result<EnergyReport> {
    let mut acc = EnergyAccumulator::new(alpha, kappa, traj.dt())?;
    for f in traj.frames() {
        acc.push(f);
    }
    acc.finish()
}

/// Streaming trapezoidal version of [`energy_functional_with_kappa`] for
/// frames spaced `dt` apart, so long runs need not be stored.
#[derive(Debug, Clone)]
pub struct EnergyAccumulator {
    alpha: f64,
    kappa: f64,
    dt: f64,
    bulk: f64,
    atom: f64,
    last: Option<(f64, f64)>,
    initial_norm: Option<f64>,
}

impl EnergyAccumulator {
    pub fn new(alpha: f64, kappa: f64, dt: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be > 0, got {kappa}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        Ok(Self {
            alpha,
            kappa,
            dt,
            bulk: 0.0,
            atom: 0.0,
            last: None,
            initial_norm: None,
        })
    }

    pub fn push(&mut self, f: &Field) {
        let b = bulk_gradient_sq(f);
        let a = self.alpha * (f.trace_left() - f.trace_right()).powi(2);
        if let Some((pb, pa)) = self.last {
            self.bulk += 0.5 * self.dt * (pb + b);
            self.atom += 0.5 * self.dt * (pa + a);
        }
        self.initial_norm.get_or_insert_with(|| l2_norm_sq(f));
        self.last = Some((b, a));
    }

    pub fn finish(&self) -> Result<EnergyReport> {
        let Some(norm) = self.initial_norm else {
            return Err(Error::invalid("energy of an empty trajectory"));
        };
        Ok(EnergyReport {
            alpha: self.alpha,
            bulk: self.bulk,
            atom: self.atom,
            total: (self.bulk + self.atom) / (4.0 * self.kappa),
            bound_check: norm / (8.0 * self.kappa),
        })
    }
}

/// `n (H[x+1] - H[x-1]) / 2` on the torus.
fn central_difference(h: &Field) -> Vec<f64> {
    let v = h.values();
    let n = v.len();
    let half_n = 0.5 * n as f64;
    (0..n)
        .map(|x| half_n * (v[(x + 1) % n] - v[(x + n - 1) % n]))
        .collect()
}

fn check_family_member(traj: &Trajectory, h: &Trajectory) -> Result<()> {
    if h.grid().n() != traj.grid().n() || h.len() != traj.len() {
        return Err(Error::GridMismatch(format!(
            "test function has {} frames on {} cells, trajectory has {} frames on {} cells",
            h.len(),
            h.grid().n(),
            traj.len(),
            traj.grid().n()
        )));
    }
    Ok(())
}

/// `int_0^T <rho, d_u H> - 2 <<H, H>>_alpha dt` for one space-time test function.
pub fn variational_value(traj: &Trajectory, alpha: f64, h: &Trajectory) -> Result<f64> {
    check_alpha(alpha)?;
    check_family_member(traj, h)?;
    let mut acc = 0.0;
    for ((rho, hf), w) in traj
        .frames()
        .iter()
        .zip(h.frames())
        .zip(traj.time_weights())
    {
        let dh = central_difference(hf);
        let pairing = rho
            .values()
            .iter()
            .zip(&dh)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * rho.grid().h();
        acc += w * (pairing - 2.0 * walpha_inner(hf, hf, alpha)?);
    }
    Ok(acc)
}

/// Max of [`variational_value`] over a finite family; a lower estimate of
/// the supremum.
pub fn variational_energy(traj: &Trajectory, alpha: f64, family: &[Trajectory]) -> Result<f64> {
    if family.is_empty() {
        return Err(Error::invalid("test family is empty"));
    }
    family
        .iter()
        .map(|h| variational_value(traj, alpha, h))
        .try_fold(f64::NEG_INFINITY, |m, v| v.map(|v| m.max(v)))
}

/// `H = -d_u rho / (2 kappa)` framewise: centered differences inside,
/// one-sided second-order stencils at the two end cells.
pub fn optimizer(traj: &Trajectory, kappa: f64) -> Result<Trajectory> {
    let grid = traj.grid();
    if grid.n() < 3 {
        return Err(Error::invalid("optimizer needs at least 3 cells"));
    }
    let scale = -1.0 / (2.0 * kappa);
    let frames = traj
        .frames()
        .iter()
        .map(|f| {
            let v = f.values();
            let n = v.len();
            let inv_h = n as f64;
            let mut d: Vec<f64> = (0..n)
                .map(|x| {
                    if x == 0 || x == n - 1 {
                        0.0
                    } else {
                        0.5 * inv_h * (v[x + 1] - v[x - 1])
                    }
                })
                .collect();
            d[0] = inv_h * (-3.0 * v[0] + 4.0 * v[1] - v[2]) / 2.0;
            d[n - 1] = inv_h * (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / 2.0;
            let values = d.into_iter().map(|x| scale * x).collect();
            Field::new(grid, values, f.time())
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(grid, traj.dt(), frames)
}

/// The same static field repeated on every frame of `traj`.
pub fn static_test_function(traj: &Trajectory, h: &Field) -> Result<Trajectory> {
    if h.grid().n() != traj.grid().n() {
        return Err(Error::GridMismatch(
            "static test field has the wrong size".into(),
        ));
    }
    let grid = traj.grid();
    let frames = traj
        .frames()
        .iter()
        .map(|f| Field::new(grid, h.values().to_vec(), f.time()))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(grid, traj.dt(), frames)
}

/// Tolerance on the two domain conditions.
pub const DOMAIN_TOL: f64 = 1e-10;

/// `H(u) = a + b u + int_0^u int_0^v h` realized at cell centers.
#[derive(Debug, Clone, PartialEq)]
pub struct WalphaTestFn {
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub alpha: f64,
    /// `h` sampled at cell centers.
    pub h: Field,
    /// `H` sampled at cell centers.
    pub field: Field,
    /// `int_0^1 h`.
    pub mean_residual: f64,
    /// `int_(0,1] (b + int_0^v h) W_alpha(dv)`.
    pub weight_residual: f64,
}

impl WalphaTestFn {
    /// Max of `|H'(0+) - H'(1-)|` and `|H'(0+) - alpha (H(0+) - H(1-))|`
    /// from one-sided stencils and extrapolated traces.
    pub fn bc_residual(&self) -> f64 {
        let d0 = derivative_left(&self.field);
        let d1 = derivative_right(&self.field);
        let jump = self.alpha * (self.field.trace_left() - self.field.trace_right());
        (d0 - d1).abs().max((d0 - jump).abs())
    }
}

// three-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GL_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

/// `(int_a^b h, int_a^b r h(r) dr)`.
fn moments(h: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .fold((0.0, 0.0), |(m0, m1), (&x, w)| {
            let r = mid + half * x;
            let v = h(r);
            (m0 + half * w * v, m1 + half * w * r * v)
        })
}

/// Builds `H` from `(a, b, h)`. With `b_tilde = None` the slope is solved
/// from the weighted condition, which is affine in `b` with slope
/// `1 + 1/alpha`; an explicit `b_tilde` is checked instead.
pub fn build_walpha_test_function(
    a_tilde: f64,
    b_tilde: Option<f64>,
    h: &dyn Fn(f64) -> f64,
    alpha: f64,
    grid: Grid,
) -> Result<WalphaTestFn> {
    check_alpha(alpha)?;
    if !a_tilde.is_finite() || b_tilde.is_some_and(|b| !b.is_finite()) {
        return Err(Error::invalid("test function constants must be finite"));
    }
    let grid = grid.with_topology(Topology::Interval);
    let n = grid.n();
    let dx = grid.h();
    // cumulative int_0^u h and int_0^u r h at centers, two panels per cell
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut left = 0.0;
    let mut cum = Vec::with_capacity(n);
    for x in 0..n {
        let c = grid.center(x);
        let (a, b) = moments(h, left, c);
        m0 += a;
        m1 += b;
        cum.push((m0, m1));
        let (a, b) = moments(h, c, (x + 1) as f64 * dx);
        m0 += a;
        m1 += b;
        left = (x + 1) as f64 * dx;
    }
    let (total0, total1) = (m0, m1);
    if !(total0.is_finite() && total1.is_finite()) {
        return Err(Error::invalid("h is not finite on [0, 1]"));
    }
    if total0.abs() > DOMAIN_TOL {
        return Err(Error::invalid(format!(
            "h must integrate to zero, residual {total0:e}"
        )));
    }
    // int_0^1 int_0^v h dv = int_0^1 (1 - r) h(r) dr
    let double = total0 - total1;
    let weight = |b: f64| b * (1.0 + 1.0 / alpha) + double + total0 / alpha;
    let b = match b_tilde {
        Some(b) => {
            let r = weight(b);
            if r.abs() > DOMAIN_TOL {
                return Err(Error::invalid(format!(
                    "weighted slope condition violated, residual {r:e}"
                )));
            }
            b
        }
        None => -(double + total0 / alpha) / (1.0 + 1.0 / alpha),
    };
    let values = grid
        .centers()
        .zip(&cum)
        .map(|(u, &(c0, c1))| a_tilde + b * u + u * c0 - c1)
        .collect();
    let samples = grid.centers().map(h).collect();
    Ok(WalphaTestFn {
        a_tilde,
        b_tilde: b,
        alpha,
        h: Field::new(grid, samples, 0.0)?,
        field: Field::new(grid, values, 0.0)?,
        mean_residual: total0,
        weight_residual: weight(b),
    })
}
