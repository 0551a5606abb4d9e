use slowbond::heat::{Beta, ThetaStepper};
use slowbond::ssep::{
    empirical_pairing, ensemble_stats, init_bernoulli, mean_stderr, run_replicas, simulate,
    ReplicaRun, SimSpec,
};

fn spec(n: usize, beta: Beta, t: f64, replicas: usize, seed: u64) -> SimSpec {
    SimSpec {
        n,
        alpha: 1.0,
        beta,
        t_macro: t,
        snapshot_times: vec![t],
        seed,
        replicas,
    }
}

/// Mean occupations evolve by the lattice heat equation exactly; integrate
/// it with a fine Crank-Nicolson step.
fn lattice_mean(s: &SimSpec, profile: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = s.n;
    let mut v: Vec<f64> = (0..n).map(|x| profile(x as f64 / n as f64)).collect();
    let dt = 1e-6;
    let steps = (s.t_macro / dt).round() as usize;
    let mut st = ThetaStepper::new(&s.rates().unwrap(), dt, 0.5).unwrap();
    for _ in 0..steps {
        st.step(&mut v);
    }
    v
}

fn site_means(runs: &[ReplicaRun]) -> Vec<f64> {
    ensemble_stats(runs).unwrap().mean[0].clone()
}

#[test]
fn product_bernoulli_is_stationary() {
    let gamma = 0.3;
    let s = spec(128, Beta::Finite(1.0), 0.05, 200, 11);
    let runs = run_replicas(&s, &|_| gamma).unwrap();
    let means = site_means(&runs);
    let r = s.replicas as f64;
    let site_sd = (gamma * (1.0 - gamma) / r).sqrt();
    let avg = means.iter().sum::<f64>() / s.n as f64;
    // the particle count is conserved, so the average only carries the initial noise
    assert!(
        (avg - gamma).abs() <= 3.0 * site_sd / (s.n as f64).sqrt(),
        "average {avg}"
    );
    assert!(
        (means[0] - gamma).abs() <= 3.0 * site_sd,
        "site 0: {}",
        means[0]
    );
    assert!(
        (means[s.n - 1] - gamma).abs() <= 3.0 * site_sd,
        "site n-1: {}",
        means[s.n - 1]
    );
    let worst = means
        .iter()
        .map(|m| (m - gamma).abs() / site_sd)
        .fold(0.0, f64::max);
    assert!(worst <= 4.5, "max |z| = {worst}");
}

#[test]
fn particle_count_is_conserved() {
    let s = SimSpec {
        snapshot_times: vec![0.01, 0.02, 0.05],
        ..spec(96, Beta::Finite(0.5), 0.05, 24, 3)
    };
    for run in run_replicas(&s, &|u| 0.2 + 0.6 * u).unwrap() {
        for snap in &run.run.snapshots {
            assert_eq!(snap.particles(), run.initial_particles);
        }
    }
}

#[test]
fn replica_zero_is_the_standalone_chain() {
    let s = spec(64, Beta::Finite(1.0), 0.02, 3, 99);
    let profile = |u: f64| 0.5 + 0.4 * (6.0 * u).sin();
    let runs = run_replicas(&s, &profile).unwrap();
    let config = init_bernoulli(profile, s.n, s.seed).unwrap();
    assert_eq!(runs[0].initial_particles, config.particles());
    assert_eq!(runs[0].run, simulate(&config, &s).unwrap());
    assert_ne!(runs[0].run.snapshots, runs[1].run.snapshots);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = spec(64, Beta::Finite(1.0), 0.03, 16, 5);
    let go = |k: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| {
                run_replicas(&s, &|u| (1.0 + (std::f64::consts::PI * u).cos()) / 2.0).unwrap()
            })
    };
    let one = go(1);
    assert_eq!(one, go(4));
    assert_eq!(one, go(8));
}

#[test]
fn ring_counts_are_poisson_with_the_bond_rates() {
    // total rings ~ Poisson((n - 1 + alpha n^-beta) n^2 T) per replica, slow rings ~ Poisson(alpha n^(2-beta) T)
    let t = 0.1;
    let mut slow_per_n = Vec::new();
    for n in [32usize, 64, 128] {
        let s = spec(n, Beta::Finite(1.0), t, 50, 17);
        let runs = run_replicas(&s, &|_| 0.5).unwrap();
        let n2t = (n * n) as f64 * t * s.replicas as f64;
        let expected_total = (n as f64 - 1.0 + 1.0 / n as f64) * n2t;
        let expected_slow = n2t / n as f64;
        let total: u64 = runs.iter().map(|r| r.run.events.rings).sum();
        let slow: u64 = runs.iter().map(|r| r.run.events.slow_rings).sum();
        assert!(
            (total as f64 - expected_total).abs() <= 5.0 * expected_total.sqrt(),
            "n={n} total {total}"
        );
        assert!(
            (slow as f64 - expected_slow).abs() <= 5.0 * expected_slow.sqrt(),
            "n={n} slow {slow}"
        );
        for r in &runs {
            let e = r.run.events;
            assert!(e.swaps <= e.rings && e.slow_swaps <= e.slow_rings && e.slow_rings <= e.rings);
        }
        slow_per_n.push(slow as f64);
    }
    // beta = 1: slow-bond traffic grows linearly in n on the macroscopic clock
    for w in slow_per_n.windows(2) {
        let ratio = w[1] / w[0];
        assert!((1.0..=4.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn neumann_limit_never_uses_the_slow_bond() {
    let s = spec(48, Beta::Infinite, 0.05, 8, 1);
    let runs = run_replicas(&s, &|u| if u < 0.5 { 0.9 } else { 0.1 }).unwrap();
    assert!(runs.iter().all(|r| r.run.events.slow_rings == 0));
}

#[test]
fn mirror_image_has_mirrored_means() {
    // x -> n-1-x fixes the slow bond {n-1, 0}
    let n = 64;
    let s = spec(n, Beta::Finite(1.0), 0.02, 400, 23);
    let p = |u: f64| 0.15 + 0.7 * u * u;
    let shift = (n as f64 - 1.0) / n as f64;
    let q = move |u: f64| p(shift - u);
    let a = ensemble_stats(&run_replicas(&s, &p).unwrap()).unwrap();
    let b = ensemble_stats(
        &run_replicas(
            &SimSpec {
                seed: 24,
                ..s.clone()
            },
            &q,
        )
        .unwrap(),
    )
    .unwrap();
    let exact = lattice_mean(&s, p);
    let exact_mirror = lattice_mean(&s, q);
    let mut worst: f64 = 0.0;
    for (x, e) in exact.iter().enumerate() {
        let y = n - 1 - x;
        assert!((e - exact_mirror[y]).abs() < 1e-12);
        let se = (a.stderr[0][x].powi(2) + b.stderr[0][y].powi(2))
            .sqrt()
            .max(1e-3);
        worst = worst.max((a.mean[0][x] - b.mean[0][y]).abs() / se);
    }
    assert!(worst <= 4.5, "max |z| = {worst}");
}

#[test]
fn ensemble_mean_follows_the_lattice_heat_equation() {
    for beta in [Beta::Finite(0.5), Beta::Finite(1.0), Beta::Infinite] {
        let s = spec(64, beta, 0.02, 400, 8);
        let profile = |u: f64| (1.0 + (std::f64::consts::PI * u).cos()) / 2.0;
        let runs = run_replicas(&s, &profile).unwrap();
        let stats = ensemble_stats(&runs).unwrap();
        let exact = lattice_mean(&s, profile);
        let worst = (0..s.n)
            .map(|x| (stats.mean[0][x] - exact[x]).abs() / stats.stderr[0][x].max(1e-3))
            .fold(0.0, f64::max);
        assert!(worst <= 4.5, "beta={beta}: max |z| = {worst}");

        let h = |u: f64| (2.0 * std::f64::consts::PI * u).sin();
        let per: Vec<f64> = runs
            .iter()
            .map(|r| empirical_pairing(&r.run.snapshots[0], h))
            .collect();
        let (m, se) = mean_stderr(&per);
        let want: f64 = (0..s.n)
            .map(|x| h(x as f64 / s.n as f64) * exact[x])
            .sum::<f64>()
            / s.n as f64;
        assert!(
            (m - want).abs() <= 4.0 * se,
            "beta={beta}: {m} vs {want} +- {se}"
        );
    }
}
