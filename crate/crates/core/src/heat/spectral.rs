//! Exact series solutions used as oracles for the finite-volume solver.

use std::f64::consts::PI;

use crate::grid::{Field, Grid};

/// `rho(u) = mean + sum_k cos[k-1] cos(2 pi k u) + sin[k-1] sin(2 pi k u)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FourierSeries {
    pub mean: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        let mut acc = self.mean;
        for (k, &a) in self.cos.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            acc += a * (-w * w * t).exp() * (w * u).cos();
        }
        for (k, &b) in self.sin.iter().enumerate() {
            let w = 2.0 * PI * (k + 1) as f64;
            acc += b * (-w * w * t).exp() * (w * u).sin();
        }
        acc
    }
}

/// `rho(u) = sum_k coeffs[k] cos(k pi u)`, `k = 0, 1, ...`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CosineSeries {
    pub coeffs: Vec<f64>,
}

impl CosineSeries {
    pub fn eval(&self, t: f64, u: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let w = PI * k as f64;
                c * (-w * w * t).exp() * (w * u).cos()
            })
            .sum()
    }
}

/// Periodic heat equation solution at time `t`, sampled at cell centers.
pub fn spectral_periodic(series: &FourierSeries, t: f64, grid: Grid) -> Field {
    let values = grid.centers().map(|u| series.eval(t, u)).collect();
    Field::from_parts(grid, values, t)
}

/// Neumann heat equation solution at time `t`, sampled at cell centers.
pub fn spectral_neumann(series: &CosineSeries, t: f64, grid: Grid) -> Field {
    let values = grid.centers().map(|u| series.eval(t, u)).collect();
    Field::from_parts(grid, values, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_examples() {
        let g = Grid::torus(32).unwrap();
        let one = FourierSeries {
            mean: 1.0,
            ..Default::default()
        };
        assert!(spectral_periodic(&one, 3.0, g)
            .values()
            .iter()
            .all(|&v| v == 1.0));

        let s = FourierSeries {
            sin: vec![1.0],
            ..Default::default()
        };
        let t = 0.02;
        let f = spectral_periodic(&s, t, g);
        for (v, u) in f.values().iter().zip(g.centers()) {
            assert!((v - (-4.0 * PI * PI * t).exp() * (2.0 * PI * u).sin()).abs() < 1e-15);
        }
        // amplitude e^-1 at t = 1/(4 pi^2)
        let amp = s.eval(1.0 / (4.0 * PI * PI), 0.25);
        assert!((amp - 0.367_879_441_171_442_3).abs() < 1e-12);
    }

    #[test]
    fn neumann_examples() {
        let c = CosineSeries {
            coeffs: vec![0.0, 1.0],
        };
        assert!((c.eval(1.0 / (PI * PI), 0.0) - (-1.0f64).exp()).abs() < 1e-14);
        let g = Grid::interval(16).unwrap();
        let f = spectral_neumann(&c, 0.1, g);
        for (v, u) in f.values().iter().zip(g.centers()) {
            assert!((v - (-PI * PI * 0.1).exp() * (PI * u).cos()).abs() < 1e-15);
        }

        let half = CosineSeries {
            coeffs: vec![0.5, 0.5],
        };
        let late = spectral_neumann(&half, 50.0, g);
        assert!(late.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }
}
