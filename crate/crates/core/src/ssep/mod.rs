//! Continuous-time symmetric exclusion on the discrete torus with a slow
//! bond at `{n-1, 0}`, observed at macroscopic times `t = s / n^2`.
//!
//! Randomness: every chain uses `ChaCha8Rng::seed_from_u64(seed)` with an
//! explicit stream. Replica `r` draws its initial configuration from stream
//! `2r` and its dynamics from stream `2r + 1`, so runs are reproducible
//! across machines and independent of how replicas are scheduled.

mod alias;

pub use alias::AliasTable;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::heat::{build_conductances, Beta, BondRates};

/// Recorded in output metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/seed_from_u64/stream=2r(init),2r+1(dynamics)";

pub fn replica_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeConfig {
    eta: Vec<u8>,
}

impl LatticeConfig {
    pub fn new(eta: Vec<u8>) -> Result<Self> {
        if eta.len() < 2 {
            return Err(Error::invalid("lattice needs at least 2 sites"));
        }
        if eta.iter().any(|&e| e > 1) {
            return Err(Error::invalid("occupations must be 0 or 1"));
        }
        Ok(Self { eta })
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(vec![0; n])
    }

    pub fn full(n: usize) -> Result<Self> {
        Self::new(vec![1; n])
    }

    pub fn n(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self) -> &[u8] {
        &self.eta
    }

    pub fn particles(&self) -> usize {
        self.eta.iter().map(|&e| e as usize).sum()
    }
}

/// Independent `eta(x) ~ Bernoulli(profile(x/n))` from `rng`.
pub fn init_bernoulli_with(
    profile: impl Fn(f64) -> f64,
    n: usize,
    rng: &mut impl Rng,
) -> Result<LatticeConfig> {
    let probs = (0..n)
        .map(|x| {
            let u = x as f64 / n as f64;
            let p = profile(u);
            if (0.0..=1.0).contains(&p) {
                Ok(p)
            } else {
                Err(Error::invalid(format!(
                    "profile must lie in [0, 1], got {p} at u = {u}"
                )))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let eta = probs
        .into_iter()
        .map(|p| u8::from(rng.random::<f64>() < p))
        .collect();
    LatticeConfig::new(eta)
}

/// [`init_bernoulli_with`] on stream 0 of `seed`.
pub fn init_bernoulli(profile: impl Fn(f64) -> f64, n: usize, seed: u64) -> Result<LatticeConfig> {
    init_bernoulli_with(profile, n, &mut replica_rng(seed, 0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub n: usize,
    pub alpha: f64,
    pub beta: Beta,
    pub t_macro: f64,
    pub snapshot_times: Vec<f64>,
    pub seed: u64,
    pub replicas: usize,
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        build_conductances(self.n, self.alpha, self.beta)?;
        if !(self.t_macro.is_finite() && self.t_macro >= 0.0) {
            return Err(Error::invalid(format!(
                "T must be >= 0, got {}",
                self.t_macro
            )));
        }
        if self.replicas == 0 {
            return Err(Error::invalid("replicas must be >= 1"));
        }
        let times = &self.snapshot_times;
        if times.iter().any(|t| !(0.0..=self.t_macro).contains(t)) {
            return Err(Error::invalid("snapshot times must lie in [0, T]"));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("snapshot times must be sorted"));
        }
        Ok(())
    }

    pub fn rates(&self) -> Result<BondRates> {
        build_conductances(self.n, self.alpha, self.beta)
    }
}

/// Clock rings and effective exchanges, total and on the slow bond.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EventCounts {
    pub rings: u64,
    pub swaps: u64,
    pub slow_rings: u64,
    pub slow_swaps: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub times: Vec<f64>,
    pub snapshots: Vec<LatticeConfig>,
    pub events: EventCounts,
}

/// Runs one chain from `config` and records it at each snapshot time.
///
/// Bond `x = {x, x+1}` rings at rate `conductance[x]`; the total rate is
/// constant, so the next ring is `Exp(R)` away in microscopic time and the
/// bond is drawn from the alias table.
pub fn simulate_with(
    config: &LatticeConfig,
    rates: &BondRates,
    times: &[f64],
    rng: &mut impl Rng,
) -> Result<SimRun> {
    let n = config.n();
    if rates.n() != n {
        return Err(Error::GridMismatch(format!(
            "lattice has {n} sites, rates have {} bonds",
            rates.n()
        )));
    }
    let mut eta = config.eta.clone();
    let mut events = EventCounts::default();
    let mut snapshots = Vec::with_capacity(times.len());
    let total_rate: f64 = rates.conductance().iter().sum();
    let table = AliasTable::new(rates.conductance())?;
    let n2 = (n * n) as f64;
    let slow = n - 1;

    let mut clock = 0.0;
    let mut next_ring = clock + Distribution::<f64>::sample(&Exp1, rng) / total_rate;
    for &t in times {
        let horizon = t * n2;
        while next_ring <= horizon {
            clock = next_ring;
            let x = table.sample(rng.random());
            let y = if x + 1 == n { 0 } else { x + 1 };
            events.rings += 1;
            let differ = eta[x] != eta[y];
            if differ {
                eta.swap(x, y);
                events.swaps += 1;
            }
            if x == slow {
                events.slow_rings += 1;
                events.slow_swaps += differ as u64;
            }
            next_ring = clock + Distribution::<f64>::sample(&Exp1, rng) / total_rate;
        }
        snapshots.push(LatticeConfig { eta: eta.clone() });
    }
    Ok(SimRun {
        times: times.to_vec(),
        snapshots,
        events,
    })
}

/// One chain on stream 1 of `spec.seed`.
pub fn simulate(config: &LatticeConfig, spec: &SimSpec) -> Result<SimRun> {
    spec.validate()?;
    if config.n() != spec.n {
        return Err(Error::GridMismatch(format!(
            "lattice has {} sites, spec says n = {}",
            config.n(),
            spec.n
        )));
    }
    simulate_with(
        config,
        &spec.rates()?,
        &spec.snapshot_times,
        &mut replica_rng(spec.seed, 1),
    )
}

/// `(1/n) sum_x H(x/n) eta(x)`.
pub fn empirical_pairing(config: &LatticeConfig, h: impl Fn(f64) -> f64) -> f64 {
    let n = config.n() as f64;
    config
        .eta
        .iter()
        .enumerate()
        .filter(|(_, &e)| e == 1)
        .map(|(x, _)| h(x as f64 / n))
        .sum::<f64>()
        / n
}

/// Default boxcar width.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// Densities just right of the slow bond (sites `1..=floor(eps n)`) and just
/// left of it (sites `floor(n - eps n)..=n-1`), each averaged over its window.
pub fn boxcar_averages(config: &LatticeConfig, epsilon: f64) -> Result<(f64, f64)> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::invalid(format!(
            "epsilon must lie in (0, 1/2), got {epsilon}"
        )));
    }
    let n = config.n();
    let width = epsilon * n as f64;
    let k = width.floor() as usize;
    if k < 1 {
        return Err(Error::invalid(format!("epsilon n = {width} < 1")));
    }
    let start = (n as f64 - width).floor() as usize;
    let avg = |lo: usize, hi: usize| {
        config.eta[lo..=hi].iter().map(|&e| e as f64).sum::<f64>() / (hi - lo + 1) as f64
    };
    Ok((avg(1, k), avg(start, n - 1)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub replica: usize,
    pub initial_particles: usize,
    pub run: SimRun,
}

/// Runs `spec.replicas` chains in parallel; results come back in replica
/// order whatever the scheduling.
pub fn run_replicas(
    spec: &SimSpec,
    profile: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<ReplicaRun>> {
    spec.validate()?;
    let rates = spec.rates()?;
    (0..spec.replicas)
        .into_par_iter()
        .map(|r| {
            let config =
                init_bernoulli_with(profile, spec.n, &mut replica_rng(spec.seed, 2 * r as u64))?;
            let run = simulate_with(
                &config,
                &rates,
                &spec.snapshot_times,
                &mut replica_rng(spec.seed, 2 * r as u64 + 1),
            )?;
            Ok(ReplicaRun {
                replica: r,
                initial_particles: config.particles(),
                run,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    /// Site-wise mean per snapshot.
    pub mean: Vec<Vec<f64>>,
    /// Site-wise standard error of the mean per snapshot.
    pub stderr: Vec<Vec<f64>>,
    pub replicas: usize,
}

/// Sequential fold over replicas in index order.
pub fn ensemble_stats(runs: &[ReplicaRun]) -> Result<EnsembleStats> {
    let Some(first) = runs.first() else {
        return Err(Error::invalid("no replicas to aggregate"));
    };
    let r = runs.len();
    if r < 2 {
        return Err(Error::invalid("standard errors need at least 2 replicas"));
    }
    let times = first.run.times.clone();
    let n = first.run.snapshots.first().map_or(0, |c| c.n());
    let mut mean = vec![vec![0.0; n]; times.len()];
    let mut stderr = vec![vec![0.0; n]; times.len()];
    for (k, (m, s)) in mean.iter_mut().zip(stderr.iter_mut()).enumerate() {
        for run in runs {
            for (acc, &e) in m.iter_mut().zip(run.run.snapshots[k].eta()) {
                *acc += e as f64;
            }
        }
        m.iter_mut().for_each(|v| *v /= r as f64);
        for run in runs {
            for ((acc, &e), mu) in s.iter_mut().zip(run.run.snapshots[k].eta()).zip(m.iter()) {
                *acc += (e as f64 - mu).powi(2);
            }
        }
        s.iter_mut()
            .for_each(|v| *v = (*v / ((r - 1) as f64 * r as f64)).sqrt());
    }
    Ok(EnsembleStats {
        times,
        mean,
        stderr,
        replicas: r,
    })
}

pub fn ensemble_run(
    spec: &SimSpec,
    profile: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<EnsembleStats> {
    ensemble_stats(&run_replicas(spec, profile)?)
}

/// Mean and standard error of a per-replica statistic.
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}
