use beamcorr::config::{Command, RunConfig};
use beamcorr::correction::{analytic_upsilon, estimate_upsilon, svd_upsilon};
use beamcorr::runner;
use beamcorr::{ArrayGeometry, BeamStrategy, Executor, FadingLaw, LinkScenario, Visibility};

fn small(visibility: Visibility, paths: usize) -> LinkScenario {
    let ula = ArrayGeometry::ula(32).unwrap();
    LinkScenario {
        visibility,
        paths,
        tx: ula,
        rx: ula,
        ..LinkScenario::default()
    }
}

#[test]
fn nlos_upsilon_decreases_with_path_count() {
    let exec = Executor::new(0);
    let values: Vec<f64> = [1, 2, 5, 10, 19]
        .iter()
        .map(|&eta| {
            estimate_upsilon(&small(Visibility::Nlos, eta), BeamStrategy::PerPath, 3_000, 3, &exec)
                .unwrap()
                .monte_carlo
        })
        .collect();
    for w in values.windows(2) {
        assert!(w[1] < w[0], "{values:?}");
    }
}

#[test]
fn los_upsilon_increases_with_k() {
    let exec = Executor::new(0);
    let values: Vec<f64> = [1.0, 3.0, 10.0, 100.0]
        .iter()
        .map(|&k| {
            let s = LinkScenario {
                k_rician: k,
                ..small(Visibility::Los, 10)
            };
            estimate_upsilon(&s, BeamStrategy::PerPath, 3_000, 3, &exec)
                .unwrap()
                .monte_carlo
        })
        .collect();
    for w in values.windows(2) {
        assert!(w[1] > w[0], "{values:?}");
    }
}

#[test]
fn unconstrained_bound_dominates_every_strategy() {
    let exec = Executor::new(0);
    let s = small(Visibility::Nlos, 5);
    let bound = svd_upsilon(&s, 500, 9, &exec).unwrap();
    for strategy in [
        BeamStrategy::PerPath,
        BeamStrategy::Grid { points: None },
        BeamStrategy::Alternating {
            points: None,
            iters: 4,
        },
    ] {
        let e = estimate_upsilon(&s, strategy, 500, 9, &exec).unwrap();
        assert!(e.monte_carlo <= bound * (1.0 + 1e-9), "{strategy}: {} > {bound}", e.monte_carlo);
    }
}

#[test]
fn constant_gains_approach_reciprocal_path_count() {
    // Sidelobe leakage from the other paths biases Υ above 1/η at finite N.
    let exec = Executor::new(0);
    let bias = |n: usize| {
        let ula = ArrayGeometry::ula(n).unwrap();
        let s = LinkScenario {
            fading: FadingLaw::ConstantUnit,
            tx: ula,
            rx: ula,
            ..small(Visibility::Nlos, 10)
        };
        assert_eq!(analytic_upsilon(&s), Some(0.1));
        let e = estimate_upsilon(&s, BeamStrategy::PerPath, 2_000, 5, &exec).unwrap();
        e.monte_carlo / 0.1 - 1.0
    };
    let (b16, b64, b256) = (bias(16), bias(64), bias(256));
    assert!(b16 > b64 && b64 > b256 && b256 > -0.02, "{b16} {b64} {b256}");
    assert!(b256 < 0.05, "{b256}");
}

#[test]
fn upsilon_run_writes_harmonic_closed_form() {
    let dir = std::env::temp_dir().join(format!("beamcorr-mc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut config = RunConfig::default();
    config.run.command = Command::Upsilon;
    config.run.trials = 500;
    config.scenario.visibility = Visibility::Nlos;
    config.scenario.paths = 10;
    config.fading.law = FadingLaw::IidComplexNormal;
    let outcome = runner::run(&config, &dir).unwrap();
    assert!(outcome.success);
    assert!(outcome.report.contains("closed forms at η=10"));
    let summary = std::fs::read_to_string(dir.join("upsilon_summary.csv")).unwrap();
    let row = summary.lines().nth(1).unwrap();
    let analytic: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
    assert!((analytic - 0.29290).abs() < 5e-6, "{row}");
    std::fs::remove_dir_all(&dir).unwrap();
}
