//! Direct solver for cyclic tridiagonal systems.
//!
//! Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]`
//! with indices taken mod `n`, so `lower[0]` and `upper[n-1]` are the two
//! corner entries. The corners are removed by a Sherman-Morrison rank-one
//! correction and the remaining tridiagonal system is solved by the Thomas
//! algorithm. The factorization is computed once and reused for every
//! right-hand side.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    n: usize,
    lower: Vec<f64>,
    // Thomas factorization of the corner-free matrix
    denom: Vec<f64>,
    upper_scaled: Vec<f64>,
    // rank-one correction data
    gamma: f64,
    corner_top: f64,
    z: Vec<f64>,
    fact_denom: f64,
    // n = 2 falls back to an explicit 2x2 inverse
    small: Option<[f64; 4]>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 || lower.len() != n || upper.len() != n {
            return Err(Error::invalid(
                "cyclic tridiagonal system needs n >= 2 matching bands",
            ));
        }
        if n == 2 {
            // both off-diagonal bands land on the same entries
            let a = diag[0];
            let b = upper[0] + lower[0];
            let c = lower[1] + upper[1];
            let d = diag[1];
            let det = a * d - b * c;
            if det == 0.0 || !det.is_finite() {
                return Err(Error::Singular { row: 0 });
            }
            return Ok(Self {
                n,
                lower,
                denom: Vec::new(),
                upper_scaled: Vec::new(),
                gamma: 0.0,
                corner_top: 0.0,
                z: Vec::new(),
                fact_denom: 1.0,
                small: Some([d / det, -b / det, -c / det, a / det]),
            });
        }

        let corner_top = lower[0]; // row 0, column n-1
        let corner_bottom = upper[n - 1]; // row n-1, column 0
        let gamma = -diag[0];
        let mut modified = diag.clone();
        modified[0] -= gamma;
        modified[n - 1] -= corner_bottom * corner_top / gamma;

        let mut denom = vec![0.0; n];
        let mut upper_scaled = vec![0.0; n];
        let mut prev = 0.0;
        for i in 0..n {
            let d = modified[i] - if i > 0 { lower[i] * prev } else { 0.0 };
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular { row: i });
            }
            denom[i] = d;
            prev = if i + 1 < n { upper[i] / d } else { 0.0 };
            upper_scaled[i] = prev;
        }

        let mut solver = Self {
            n,
            lower,
            denom,
            upper_scaled,
            gamma,
            corner_top,
            z: Vec::new(),
            fact_denom: 1.0,
            small: None,
        };
        let mut u = vec![0.0; n];
        u[0] = gamma;
        u[n - 1] = corner_bottom;
        solver.thomas(&mut u);
        let fact_denom = 1.0 + u[0] + corner_top * u[n - 1] / gamma;
        if fact_denom == 0.0 || !fact_denom.is_finite() {
            return Err(Error::Singular { row: n - 1 });
        }
        solver.z = u;
        solver.fact_denom = fact_denom;
        Ok(solver)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn thomas(&self, x: &mut [f64]) {
        let n = self.n;
        x[0] /= self.denom[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) / self.denom[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper_scaled[i] * x[i + 1];
        }
    }

    /// Solves in place: `rhs` is overwritten by the solution.
    pub fn solve_in_place(&self, rhs: &mut [f64]) {
        debug_assert_eq!(rhs.len(), self.n);
        if let Some([a, b, c, d]) = self.small {
            let (r0, r1) = (rhs[0], rhs[1]);
            rhs[0] = a * r0 + b * r1;
            rhs[1] = c * r0 + d * r1;
            return;
        }
        let n = self.n;
        self.thomas(rhs);
        let fact = (rhs[0] + self.corner_top * rhs[n - 1] / self.gamma) / self.fact_denom;
        for (x, z) in rhs.iter_mut().zip(&self.z) {
            *x -= fact * z;
        }
    }
}
