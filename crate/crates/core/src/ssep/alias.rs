//! Vose alias table for O(1) sampling from a fixed discrete distribution.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    /// Weights must be finite, nonnegative and not all zero.
    pub fn new(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::invalid("alias table needs 1..2^32 weights"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::invalid("alias weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("alias weights sum to zero"));
        }
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / total).collect();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        // zero-weight columns must never be returned, even through rounding
        for i in 0..n {
            if weights[i] == 0.0 {
                prob[i] = 0.0;
            }
        }
        Ok(Self { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Maps one uniform 64-bit word to an index: the high half of
    /// `r * n` picks the column, the low half is the coin.
    #[inline]
    pub fn sample(&self, r: u64) -> usize {
        let wide = r as u128 * self.prob.len() as u128;
        let col = (wide >> 64) as usize;
        let coin = (wide as u64 >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if coin < self.prob[col] {
            col
        } else {
            self.alias[col] as usize
        }
    }

    /// Probability mass assigned to each index.
    pub fn masses(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut m = vec![0.0; n];
        for i in 0..n {
            m[i] += self.prob[i] / n as f64;
            m[self.alias[i] as usize] += (1.0 - self.prob[i]) / n as f64;
        }
        m
    }
}
