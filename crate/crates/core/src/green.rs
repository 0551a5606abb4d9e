//! Explicit inverse of `-Laplacian` on zero-mean functions with the Robin
//! conditions `f'(0) = f'(1) = alpha (f(0) - f(1))` and the gauge `f(0) = 0`.
//!
//! The kernel is
//!
//! ```text
//! G(u, r) = alpha/(alpha+1) u (1 - r) - (u - r) 1{r <= u}
//! ```
//!
//! and the operator is applied through its antiderivative form
//!
//! ```text
//! f(u) = alpha/(alpha+1) u I - u int_0^u g + int_0^u r g(r) dr,   I = int_0^1 (1 - r) g(r) dr
//! ```
//!
//! with `g` read as piecewise constant on cells, so all integrals are exact
//! for that interpolant and the cost is O(n).

use crate::error::{Error, Result};
use crate::grid::{check_alpha, l2_inner, Field, Grid, Topology, Trajectory};

/// Mean tolerance for [`ZeroMeanField`].
pub const ZERO_MEAN_TOL: f64 = 1e-12;

/// A field with vanishing discrete integral.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroMeanField {
    base: Field,
}

impl ZeroMeanField {
    /// Accepts `field` only if `|h sum f| <= 1e-12`.
    pub fn new(field: Field) -> Result<Self> {
        let mean = field.mean();
        if mean.abs() > ZERO_MEAN_TOL {
            return Err(Error::invalid(format!(
                "input must have zero mean, got mean {mean:e}"
            )));
        }
        Ok(Self { base: field })
    }

    /// Subtracts the mean explicitly.
    pub fn normalized(field: &Field) -> Self {
        let mean = field.mean();
        let values = field.values().iter().map(|v| v - mean).collect();
        Self {
            base: Field::from_parts(field.grid(), values, field.time()),
        }
    }

    pub fn field(&self) -> &Field {
        &self.base
    }

    pub fn values(&self) -> &[f64] {
        self.base.values()
    }

    pub fn grid(&self) -> Grid {
        self.base.grid()
    }
}

/// `(-Laplacian)^-1` for a fixed `alpha` on a fixed grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenOperator {
    alpha: f64,
    grid: Grid,
}

/// Cumulative integrals of a piecewise-constant `g` at cell centers.
struct Antiderivatives {
    // int_0^1 (1 - r) g
    weighted_total: f64,
    // int_0^{u_i} g
    g_int: Vec<f64>,
    // int_0^{u_i} r g
    rg_int: Vec<f64>,
    g_total: f64,
    rg_total: f64,
}

impl Antiderivatives {
    fn new(g: &[f64]) -> Self {
        let n = g.len();
        let h = 1.0 / n as f64;
        let mut g_int = Vec::with_capacity(n);
        let mut rg_int = Vec::with_capacity(n);
        let (mut gs, mut rgs) = (0.0, 0.0);
        for (i, &gi) in g.iter().enumerate() {
            let left = i as f64 * h;
            let center = left + 0.5 * h;
            // half cell [left, center]: int r dr = (center^2 - left^2)/2
            g_int.push(gs + gi * 0.5 * h);
            rg_int.push(rgs + gi * 0.5 * (center * center - left * left));
            gs += gi * h;
            rgs += gi * center * h;
        }
        Self {
            weighted_total: gs - rgs,
            g_int,
            rg_int,
            g_total: gs,
            rg_total: rgs,
        }
    }
}

impl GreenOperator {
    pub fn new(alpha: f64, grid: Grid) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self {
            alpha,
            grid: grid.with_topology(Topology::Interval),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    fn ratio(&self) -> f64 {
        self.alpha / (self.alpha + 1.0)
    }

    fn check(&self, g: &ZeroMeanField) -> Result<()> {
        if g.grid().n() != self.grid.n() {
            return Err(Error::GridMismatch(format!(
                "operator on {} cells, input on {}",
                self.grid.n(),
                g.grid().n()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, g: &ZeroMeanField) -> Result<Field> {
        self.check(g)?;
        let a = Antiderivatives::new(g.values());
        let c = self.ratio() * a.weighted_total;
        let values = self
            .grid
            .centers()
            .zip(a.g_int.iter().zip(&a.rg_int))
            .map(|(u, (gi, rgi))| c * u - u * gi + rgi)
            .collect();
        Ok(Field::from_parts(self.grid, values, g.field().time()))
    }

    /// `f' = alpha/(alpha+1) I - int_0^u g` at cell centers.
    pub fn derivative(&self, g: &ZeroMeanField) -> Result<Field> {
        self.check(g)?;
        let a = Antiderivatives::new(g.values());
        let c = self.ratio() * a.weighted_total;
        let values = a.g_int.iter().map(|gi| c - gi).collect();
        Ok(Field::from_parts(self.grid, values, g.field().time()))
    }

    /// Exact `(f'(0), f'(1))` of the piecewise-constant interpolant.
    pub fn boundary_derivatives(&self, g: &ZeroMeanField) -> Result<(f64, f64)> {
        self.check(g)?;
        let a = Antiderivatives::new(g.values());
        let c = self.ratio() * a.weighted_total;
        Ok((c, c - a.g_total))
    }

    /// Exact `(f(0), f(1))` of the piecewise-constant interpolant.
    pub fn boundary_values(&self, g: &ZeroMeanField) -> Result<(f64, f64)> {
        self.check(g)?;
        let a = Antiderivatives::new(g.values());
        let c = self.ratio() * a.weighted_total;
        Ok((0.0, c - a.g_total + a.rg_total))
    }
}

/// `G(u, r)` for `u, r` in `[0, 1]`.
pub fn kernel_value(alpha: f64, u: f64, r: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&r) {
        return Err(Error::invalid(format!(
            "kernel arguments must lie in [0, 1], got u = {u}, r = {r}"
        )));
    }
    let jump = if r <= u { u - r } else { 0.0 };
    Ok(alpha / (alpha + 1.0) * u * (1.0 - r) - jump)
}

pub fn apply_inverse(g: &ZeroMeanField, alpha: f64) -> Result<Field> {
    GreenOperator::new(alpha, g.grid())?.apply(g)
}

pub fn inverse_derivative(g: &ZeroMeanField, alpha: f64) -> Result<Field> {
    GreenOperator::new(alpha, g.grid())?.derivative(g)
}

/// Max over interior cells `1..n-2` of `|-n^2 (f[i-1] - 2 f[i] + f[i+1]) - g[i]|`
/// with `f = apply_inverse(g)`.
pub fn check_left_inverse(g: &ZeroMeanField, alpha: f64) -> Result<f64> {
    let f = apply_inverse(g, alpha)?;
    let n = f.grid().n();
    if n < 3 {
        return Err(Error::invalid("left-inverse check needs at least 3 cells"));
    }
    let n2 = (n * n) as f64;
    let v = f.values();
    Ok((1..n - 1)
        .map(|i| (-n2 * (v[i - 1] - 2.0 * v[i] + v[i + 1]) - g.values()[i]).abs())
        .fold(0.0, f64::max))
}

/// `<g, (-Laplacian)^-1 g>`.
pub fn quadratic_form(g: &ZeroMeanField, alpha: f64) -> Result<f64> {
    let f = apply_inverse(g, alpha)?;
    l2_inner(g.field(), &f)
}

/// `<g1, A g2>` for the bilinear form behind [`quadratic_form`].
pub fn bilinear_form(g1: &ZeroMeanField, g2: &ZeroMeanField, alpha: f64) -> Result<f64> {
    let f = apply_inverse(g2, alpha)?;
    l2_inner(g1.field(), &f)
}

/// Max over frames of `|Q(t) - Q(0) + 2 int_0^t <rho, rho> ds|` where the
/// mean is removed from every frame and `Q(t) = <rho_t, A rho_t>`.
pub fn lyapunov_residual(traj: &Trajectory, alpha: f64) -> Result<f64> {
    let op = GreenOperator::new(alpha, traj.grid())?;
    let mut q0 = None;
    let mut integral = 0.0;
    let mut prev_energy: Option<f64> = None;
    let mut worst: f64 = 0.0;
    for frame in traj.frames() {
        let centered = ZeroMeanField::normalized(frame);
        let q = l2_inner(centered.field(), &op.apply(&centered)?)?;
        let energy = l2_inner(centered.field(), centered.field())?;
        if let Some(e) = prev_energy {
            integral += 0.5 * traj.dt() * (e + energy);
        }
        prev_energy = Some(energy);
        let q0 = *q0.get_or_insert(q);
        worst = worst.max((q - q0 + 2.0 * integral).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::project_profile;
    use std::f64::consts::PI;

    fn zero_mean(n: usize, f: impl Fn(f64) -> f64) -> ZeroMeanField {
        let grid = Grid::interval(n).unwrap();
        ZeroMeanField::new(project_profile(f, grid).unwrap()).unwrap()
    }

    fn cos2pi(u: f64) -> f64 {
        (2.0 * PI * u).cos()
    }

    #[test]
    fn kernel_examples() {
        assert!((kernel_value(1.0, 0.5, 0.25).unwrap() + 0.0625).abs() < 1e-15);
        assert!((kernel_value(1.0, 0.25, 0.5).unwrap() - 0.0625).abs() < 1e-15);
        for alpha in [1e-3, 1.0, 50.0] {
            assert_eq!(kernel_value(alpha, 0.0, 0.5).unwrap(), 0.0);
        }
        assert!(kernel_value(1.0, 1.5, 0.0).is_err());
        assert!(kernel_value(1.0, 0.5, -0.1).is_err());
        assert!(kernel_value(0.0, 0.5, 0.5).is_err());
    }

    #[test]
    fn kernel_vanishes_at_origin_row() {
        for k in 1..=20 {
            let r = k as f64 / 20.0;
            assert_eq!(kernel_value(2.5, 0.0, r).unwrap(), 0.0);
        }
    }

    #[test]
    fn kernel_is_monotone_in_alpha_with_limits() {
        let alphas: Vec<f64> = (-6..=6).map(|k| 10f64.powi(k)).collect();
        for &(u, r) in &[(0.3, 0.7), (0.8, 0.2), (0.5, 0.5), (0.9, 0.95)] {
            let vals: Vec<f64> = alphas
                .iter()
                .map(|&a| kernel_value(a, u, r).unwrap())
                .collect();
            assert!(vals.windows(2).all(|w| w[1] >= w[0]));
            let periodic = u * (1.0 - r) - if r <= u { u - r } else { 0.0 };
            let neumann = -(if r <= u { u - r } else { 0.0 });
            assert!((vals[vals.len() - 1] - periodic).abs() < 1e-6);
            assert!((vals[0] - neumann).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_mean_guard() {
        let grid = Grid::interval(8).unwrap();
        let one = Field::constant(grid, 1.0).unwrap();
        assert!(ZeroMeanField::new(one.clone()).is_err());
        let z = ZeroMeanField::normalized(&one);
        assert!(z.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn inverse_of_cosine_matches_closed_form() {
        let n = 256;
        let g = zero_mean(n, cos2pi);
        for alpha in [1e-2, 1.0, 1e2] {
            let f = apply_inverse(&g, alpha).unwrap();
            let err = f
                .values()
                .iter()
                .zip(f.grid().centers())
                .map(|(v, u)| (v - (cos2pi(u) - 1.0) / (4.0 * PI * PI)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-5, "alpha={alpha}: {err}");
            assert!(f.trace_left().abs() < 1e-4);

            let d = inverse_derivative(&g, alpha).unwrap();
            let derr = d
                .values()
                .iter()
                .zip(d.grid().centers())
                .map(|(v, u)| (v + (2.0 * PI * u).sin() / (2.0 * PI)).abs())
                .fold(0.0, f64::max);
            assert!(derr < 1e-5);
            let (d0, d1) = GreenOperator::new(alpha, g.grid())
                .unwrap()
                .boundary_derivatives(&g)
                .unwrap();
            assert!(d0.abs() < 1e-12 && d1.abs() < 1e-12);
        }
    }

    #[test]
    fn zero_input_maps_to_zero() {
        let g = zero_mean(32, |_| 0.0);
        let f = apply_inverse(&g, 3.0).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert_eq!(inverse_derivative(&g, 3.0).unwrap().values(), &[0.0; 32]);
        assert_eq!(check_left_inverse(&g, 3.0).unwrap(), 0.0);
        assert_eq!(quadratic_form(&g, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn step_input_matches_dense_kernel_quadrature() {
        let n = 512;
        let step = |r: f64| if r < 0.5 { 1.0 } else { -1.0 };
        let g = zero_mean(n, step);
        let alpha = 1.0;
        let f = apply_inverse(&g, alpha).unwrap();
        // kernel times step is piecewise linear in r with breaks at u and 1/2;
        // a fine midpoint rule on each piece is exact up to rounding
        let oracle = |u: f64| {
            let mut breaks = [0.0, 0.5, u, 1.0];
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut acc = 0.0;
            for w in breaks.windows(2) {
                let m = 2000;
                let dr = (w[1] - w[0]) / m as f64;
                for k in 0..m {
                    let r = w[0] + (k as f64 + 0.5) * dr;
                    acc += kernel_value(alpha, u, r).unwrap() * step(r) * dr;
                }
            }
            acc
        };
        let err = f
            .values()
            .iter()
            .zip(f.grid().centers())
            .map(|(v, u)| (v - oracle(u)).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn boundary_property_b_on_random_input() {
        let n = 512;
        let alpha = 3.0;
        // smooth random-looking zero-mean input
        let coeffs = [0.7, -1.3, 0.4, 0.9, -0.2, 0.35];
        let g = ZeroMeanField::normalized(
            &project_profile(
                |u| {
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(k, c)| c * ((k + 1) as f64 * 1.7 * PI * u + 0.3 * k as f64).sin())
                        .sum()
                },
                Grid::interval(n).unwrap(),
            )
            .unwrap(),
        );
        let op = GreenOperator::new(alpha, g.grid()).unwrap();
        let f = op.apply(&g).unwrap();
        let (d0, d1) = op.boundary_derivatives(&g).unwrap();
        let jump = alpha * (f.trace_left() - f.trace_right());
        assert!((d0 - d1).abs() <= 1e-4);
        assert!((d0 - jump).abs() <= 1e-4, "{d0} {jump}");
        // exact boundary values satisfy it to rounding
        let (f0, f1) = op.boundary_values(&g).unwrap();
        assert!((d0 - alpha * (f0 - f1)).abs() < 1e-12);
    }

    #[test]
    fn left_inverse_is_second_order() {
        let r = |n| check_left_inverse(&zero_mean(n, cos2pi), 1.0).unwrap();
        let (r128, r256) = (r(128), r(256));
        assert!(r128 / r256 >= 3.5, "{r128} {r256}");
        let cubic = |u: f64| 20.0 * u.powi(3) - 30.0 * u * u + 12.0 * u - 1.0;
        assert!(check_left_inverse(&zero_mean(512, cubic), 1.0).unwrap() <= 1e-3);
    }

    #[test]
    fn quadratic_form_of_cosine() {
        let q = quadratic_form(&zero_mean(512, cos2pi), 1.0).unwrap();
        assert!((q - 1.0 / (8.0 * PI * PI)).abs() < 1e-6, "{q}");
    }

    #[test]
    fn lyapunov_constant_trajectory() {
        let g = Grid::torus(32).unwrap();
        let t = Trajectory::from_fn(g, 0.01, 10, |_, _| 0.7).unwrap();
        assert!(lyapunov_residual(&t, 1.0).unwrap() < 1e-25);
    }

    #[test]
    fn lyapunov_closed_form_trajectory() {
        let g = Grid::torus(256).unwrap();
        let traj = Trajectory::from_fn(g, 1e-4, 500, |t, u| (-4.0 * PI * PI * t).exp() * cos2pi(u))
            .unwrap();
        assert!(lyapunov_residual(&traj, 1.0).unwrap() < 1e-5);
    }
}
