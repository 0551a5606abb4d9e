use slowbond::experiments::hydro::{hydro_rows, reference_pairings, Regime};
use slowbond::experiments::{
    self, holder_check, sweep_alpha, CsvTable, Experiment, Profile, RunSpec,
};
use slowbond::heat::{build_conductances, solve, Beta, SolverSpec};

fn spec(experiment: Experiment, pairs: &[(&str, &str)]) -> RunSpec {
    let pairs: Vec<(String, String)> = pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
    RunSpec::from_pairs(Some(experiment), &pairs).unwrap()
}

fn column(table: &CsvTable, name: &str) -> Vec<f64> {
    let c = table
        .column(name)
        .unwrap_or_else(|| panic!("no column {name}"));
    table.rows.iter().map(|r| r[c].parse().unwrap()).collect()
}

#[test]
fn sweep_distances_obey_the_triangle_inequality() {
    let s = spec(
        Experiment::SweepAlpha,
        &[
            ("n", "64"),
            ("T", "0.05"),
            ("dt", "1e-4"),
            ("alpha-grid", "1e-2:1e2:2"),
        ],
    );
    let result = sweep_alpha(&s).unwrap();
    let d = result.dist_neumann_periodic;
    assert!(d > 0.0);
    for r in &result.rows {
        assert!(r.dist_to_neumann + r.dist_to_periodic >= d - 1e-12, "{r:?}");
        assert!(
            (r.dist_to_neumann - r.dist_to_periodic).abs() <= d + 1e-12,
            "{r:?}"
        );
        assert!(r.mass_drift <= 1e-12);
    }
    let dn: Vec<f64> = result.rows.iter().map(|r| r.dist_to_neumann).collect();
    assert!(dn.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn holder_statistic_is_bounded_across_alpha() {
    let n = 128;
    let stats: Vec<f64> = [1e-3, 1e-1, 1.0, 10.0, 1e3]
        .iter()
        .map(|&a| {
            let rates = build_conductances(n, a, Beta::Finite(1.0)).unwrap();
            let traj = solve(
                |u| Profile::Halfcos.eval(u),
                &rates,
                &SolverSpec::new(1e-4, 0.1).with_stride(4),
            )
            .unwrap();
            holder_check(&traj, |u| (2.0 * std::f64::consts::PI * u).sin()).unwrap()
        })
        .collect();
    let max = stats.iter().cloned().fold(0.0, f64::max);
    let min = stats.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0 && max / min <= 10.0, "{stats:?}");
}

#[test]
fn holder_statistic_on_the_decaying_mode() {
    // <rho_t, cos 2pi u> = e^{-4 pi^2 t}/2, so every pair starting at 0 is steepest for its gap
    let n = 256;
    let rates = build_conductances(n, 1.0, Beta::Finite(1.0)).unwrap();
    let dt = 1e-4;
    let traj = solve(
        |u| (2.0 * std::f64::consts::PI * u).cos(),
        &rates,
        &SolverSpec::new(dt, 0.02),
    )
    .unwrap();
    let got = holder_check(&traj, |u| (2.0 * std::f64::consts::PI * u).cos()).unwrap();
    let k = 4.0 * std::f64::consts::PI.powi(2);
    let want = (0..8)
        .map(|j| {
            let s = dt * (1 << j) as f64;
            (1.0 - (-k * s).exp()) / 2.0 / s.sqrt()
        })
        .fold(0.0, f64::max);
    assert!((got - want).abs() / want < 1e-3, "{got} vs {want}");
}

#[test]
fn hydro_total_mass_is_within_noise() {
    let s = spec(
        Experiment::HydroCompare,
        &[
            ("ns", "32,64"),
            ("betas", "1,inf"),
            ("replicas", "40"),
            ("T", "0.01"),
            ("n-ref", "256"),
            ("dt-ref", "1e-5"),
        ],
    );
    let rows = hydro_rows(&s).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 5);
    for r in rows.iter().filter(|r| r.h_index == 0) {
        assert!((r.pde - 0.5).abs() < 1e-9);
        assert!(
            r.discrepancy <= 4.0 / ((r.n * s.replicas) as f64).sqrt(),
            "{r:?}"
        );
    }
}

#[test]
fn reference_pairings_separate_the_regimes() {
    let s = spec(
        Experiment::HydroCompare,
        &[("T", "0.05"), ("n-ref", "256"), ("dt-ref", "1e-5")],
    );
    let sin2pi = |regime| reference_pairings(&s, regime).unwrap()[0][2];
    let (p, r, n) = (
        sin2pi(Regime::Periodic),
        sin2pi(Regime::Robin),
        sin2pi(Regime::Neumann),
    );
    assert!(p < r && r < n, "{p} {r} {n}");
}

#[test]
fn every_experiment_writes_prologue_and_header() {
    let cases = [
        (
            Experiment::Solve,
            vec![("n", "32"), ("T", "0.01"), ("dt", "1e-3")],
        ),
        (
            Experiment::SweepAlpha,
            vec![
                ("n", "32"),
                ("T", "0.01"),
                ("dt", "1e-3"),
                ("alpha-grid", "0.1,10"),
            ],
        ),
        (
            Experiment::Simulate,
            vec![
                ("n", "32"),
                ("T", "0.01"),
                ("replicas", "4"),
                ("times", "0.005,0.01"),
            ],
        ),
        (
            Experiment::HydroCompare,
            vec![
                ("ns", "16"),
                ("betas", "0.5"),
                ("replicas", "4"),
                ("T", "0.01"),
                ("n-ref", "64"),
                ("dt-ref", "1e-4"),
            ],
        ),
        (
            Experiment::GreenCheck,
            vec![("ns", "32,64"), ("alpha-grid", "1")],
        ),
        (
            Experiment::Energy,
            vec![
                ("n", "32"),
                ("T", "0.01"),
                ("dt", "1e-3"),
                ("alpha-grid", "1,2"),
            ],
        ),
    ];
    for (e, pairs) in cases {
        let s = spec(e, &pairs);
        let text = experiments::run(&s).unwrap().to_string_lossy();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), format!("# experiment={}", e.name()));
        let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
        let width = header.split(',').count();
        let data: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .skip(1)
            .collect();
        assert!(!data.is_empty(), "{}", e.name());
        assert!(
            data.iter().all(|l| l.split(',').count() == width),
            "{}",
            e.name()
        );
        for key in ["seed", "dt", "T", "profile"] {
            assert!(
                text.contains(&format!("\n# {key}=")),
                "{} lacks {key}",
                e.name()
            );
        }
    }
}

#[test]
fn energy_table_respects_the_bound() {
    let s = spec(
        Experiment::Energy,
        &[("n", "128"), ("T", "0.05"), ("dt", "1e-5")],
    );
    let t = experiments::run(&s).unwrap();
    let total = column(&t, "total");
    let bound = column(&t, "bound_check");
    assert_eq!(total.len(), 25);
    assert!(total.iter().zip(&bound).all(|(a, b)| a <= b));
    assert!((bound[0] - 3.0 / 128.0).abs() < 2e-4);
}

#[test]
fn simulate_csv_is_identical_across_thread_counts() {
    let s = spec(
        Experiment::Simulate,
        &[
            ("n", "48"),
            ("T", "0.02"),
            ("replicas", "12"),
            ("seed", "9"),
        ],
    );
    let go = |k: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .unwrap()
            .install(|| experiments::run(&s).unwrap().to_string_lossy())
    };
    let one = go(1);
    assert_eq!(one, go(4));
    assert_eq!(one, go(8));
    let other = experiments::run(&RunSpec {
        seed: 10,
        ..s.clone()
    })
    .unwrap()
    .to_string_lossy();
    assert_ne!(one, other);
}

#[test]
fn green_check_residuals_shrink() {
    let s = spec(
        Experiment::GreenCheck,
        &[("ns", "64,128,256"), ("alpha-grid", "1")],
    );
    let t = experiments::run(&s).unwrap();
    let cos = column(&t, "left_inverse_cos");
    assert!(cos[1] < cos[0] / 3.5 && cos[2] < cos[1] / 3.5, "{cos:?}");
    assert!(column(&t, "symmetry").iter().all(|&x| x <= 1e-10));
    assert!(column(&t, "min_quadratic_form")
        .iter()
        .all(|&x| x >= -1e-10));
}
