//! Property suite behind the `validate` command.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::array::{ArrayGeometry, SpatialAngle};
use crate::beam::{self, BeamStrategy};
use crate::channel::{
    ChannelModel, ClusterConfig, FadingLaw, LinkRole, LinkScenario, PathLossModel, Visibility,
};
use crate::config::RunConfig;
use crate::correction;
use crate::exec::{tags, Executor};
use crate::report;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name,
            passed,
            detail: detail.into(),
        }
    }
}

fn geometries() -> Vec<ArrayGeometry> {
    vec![
        ArrayGeometry::ula(1).unwrap(),
        ArrayGeometry::ula(7).unwrap(),
        ArrayGeometry::ula(64).unwrap(),
        ArrayGeometry::upa(4, 4).unwrap(),
        ArrayGeometry::upa(8, 8).unwrap(),
        ArrayGeometry::upa(2, 5).unwrap(),
    ]
}

fn small_scenario(n: usize, paths: usize) -> LinkScenario {
    let g = ArrayGeometry::ula(n).unwrap();
    LinkScenario {
        tx: g,
        rx: g,
        paths,
        distance_m: 1.0,
        path_loss: PathLossModel {
            reference_gain: 1.0,
            los_exponent: 2.0,
            nlos_exponent: 3.0,
        },
        ..Default::default()
    }
}

fn unit_norm_responses(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for g in geometries() {
        for _ in 0..200 {
            let a = g.response(SpatialAngle::planar(
                rng.random::<f64>() * 40.0 - 20.0,
                rng.random::<f64>() * 40.0 - 20.0,
            ));
            for z in a.iter() {
                worst = worst.max((z.norm() - 1.0).abs());
            }
            let n = g.n_elements() as f64;
            worst = worst.max((a.norm_squared() - n).abs() / n);
        }
    }
    CheckOutcome::new(
        "unit-norm responses",
        worst < 1e-12,
        format!("max deviation {worst:.2e}"),
    )
}

fn boresight_gain(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    for g in geometries() {
        let n = g.n_elements() as f64;
        for _ in 0..200 {
            let a = g.uniform_random_angle(rng);
            let b = g.uniform_random_angle(rng);
            worst = worst.max((g.beam_gain(a, a) - n).abs() / n);
            worst = worst.max((g.beam_gain(a, b) - g.beam_gain(b, a)).abs() / n);
        }
    }
    CheckOutcome::new(
        "boresight gain = N, symmetric gains",
        worst < 1e-12,
        format!("max relative deviation {worst:.2e}"),
    )
}

fn phase_and_scaling(rng: &mut ChaCha8Rng) -> (CheckOutcome, CheckOutcome) {
    let s = small_scenario(16, 5);
    let (mut phase_worst, mut scale_worst): (f64, f64) = (0.0, 0.0);
    for _ in 0..30 {
        let h = s.sample(rng).unwrap();
        let c = Complex64::from_polar(rng.random::<f64>() * 5.0 + 0.1, rng.random::<f64>() * TAU);
        let rot = h.scaled(Complex64::from_polar(1.0, c.arg()));
        for strategy in [
            BeamStrategy::PerPath,
            BeamStrategy::Grid { points: Some(32) },
            BeamStrategy::Alternating {
                points: Some(32),
                iters: 4,
            },
        ] {
            let a = beam::best_manifold_pair(&h, strategy).unwrap().gain;
            let b = beam::best_manifold_pair(&rot, strategy).unwrap().gain;
            phase_worst = phase_worst.max((a - b).abs() / a);
        }
        let a = beam::svd_oracle_pair(&h).gain;
        let b = beam::svd_oracle_pair(&rot).gain;
        phase_worst = phase_worst.max((a - b).abs() / a);

        let pair = beam::random_interferer_pair(&h.tx, &h.rx, rng);
        let p = beam::received_power(&h, &pair).unwrap();
        let pc = beam::received_power(&h.scaled(c), &pair).unwrap();
        if pc > 0.0 {
            scale_worst = scale_worst.max((pc - c.norm_sqr() * p).abs() / pc);
        }
    }
    (
        CheckOutcome::new(
            "phase invariance",
            phase_worst <= 1e-12,
            format!("max relative change {phase_worst:.2e}"),
        ),
        CheckOutcome::new(
            "scaling equivariance",
            scale_worst <= 1e-12,
            format!("max relative error {scale_worst:.2e}"),
        ),
    )
}

fn svd_dominates(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut violations = 0;
    let mut grid_order = 0;
    let mut scenarios = vec![small_scenario(16, 6)];
    let mut los = small_scenario(16, 6);
    los.visibility = Visibility::Los;
    los.k_rician = 3.0;
    scenarios.push(los);
    let upa = ArrayGeometry::upa(4, 4).unwrap();
    scenarios.push(LinkScenario {
        tx: upa,
        rx: upa,
        ..small_scenario(16, 4)
    });
    for s in &scenarios {
        for _ in 0..10 {
            let h = s.sample(rng).unwrap();
            let svd = beam::svd_oracle_pair(&h).gain * (1.0 + 1e-12);
            for strategy in [
                BeamStrategy::PerPath,
                BeamStrategy::Grid { points: None },
                BeamStrategy::Alternating {
                    points: None,
                    iters: 4,
                },
            ] {
                if beam::best_manifold_pair(&h, strategy).unwrap().gain > svd {
                    violations += 1;
                }
            }
            if h.rx.kind() == crate::array::ArrayKind::Ula {
                let g1 = beam::best_manifold_pair(&h, BeamStrategy::Grid { points: Some(16) })
                    .unwrap()
                    .gain;
                let g2 = beam::best_manifold_pair(&h, BeamStrategy::Grid { points: Some(32) })
                    .unwrap()
                    .gain;
                if g2 < g1 {
                    grid_order += 1;
                }
            }
        }
    }
    CheckOutcome::new(
        "SVD dominates manifold",
        violations == 0 && grid_order == 0,
        format!("{violations} strategy violations, {grid_order} grid refinement violations"),
    )
}

fn normalization(exec: &Executor, seed: u64) -> CheckOutcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let clustered = ChannelModel::Clustered(ClusterConfig {
        clusters: 19,
        rays_per_cluster: 4,
        angle_spread: 0.3,
        ..Default::default()
    });
    for model in [ChannelModel::Keyhole, ChannelModel::Multipath, clustered] {
        for visibility in [Visibility::Los, Visibility::Nlos] {
            for paths in [1, 10, 19] {
                let s = LinkScenario {
                    model,
                    visibility,
                    paths,
                    ..small_scenario(8, paths)
                };
                let v: Vec<f64> = exec.trials(seed, tags::NORMALIZATION, 10_000, |_, rng| {
                    s.sample(rng).unwrap().normalized_frobenius_sq()
                });
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                worst = worst.max((mean - 1.0).abs());
                if !(0.97..=1.03).contains(&mean) {
                    failures.push(format!("{model:?}/{visibility:?}/η={paths}: {mean:.4}"));
                }
            }
        }
    }
    CheckOutcome::new(
        "Frobenius normalization",
        failures.is_empty(),
        if failures.is_empty() {
            format!("max |mean - 1| = {worst:.4}")
        } else {
            failures.join("; ")
        },
    )
}

fn reproducibility(seed: u64) -> CheckOutcome {
    let mut s = small_scenario(16, 6);
    s.role = LinkRole::Interfering;
    let serving = small_scenario(16, 6);
    let mut csvs = Vec::new();
    let mut bits = Vec::new();
    for workers in [1, 2, 4] {
        let ex = Executor::new(workers);
        let a = correction::estimate_upsilon(&serving, BeamStrategy::PerPath, 400, seed, &ex)
            .unwrap();
        let b = correction::estimate_upsilon(&s, BeamStrategy::PerPath, 400, seed, &ex).unwrap();
        bits.push((a.monte_carlo.to_bits(), b.monte_carlo.to_bits()));
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in a.trials.iter().chain(&b.trials) {
            w.serialize(report::TrialRow::new("x", t)).unwrap();
        }
        csvs.push(w.into_inner().unwrap());
    }
    let same = bits.windows(2).all(|w| w[0] == w[1]) && csvs.windows(2).all(|w| w[0] == w[1]);
    CheckOutcome::new(
        "reproducibility across worker counts",
        same,
        format!("workers 1, 2, 4: {}", if same { "identical" } else { "differ" }),
    )
}

fn config_round_trip(config: &RunConfig) -> CheckOutcome {
    let result = (|| {
        let text = config.to_toml_string()?;
        let back = RunConfig::from_toml_str(&text)?;
        Ok::<_, crate::Error>(back == *config && back.to_toml_string()? == text)
    })();
    match result {
        Ok(ok) => CheckOutcome::new("config round-trip", ok, "parse → serialize → parse"),
        Err(e) => CheckOutcome::new("config round-trip", false, e.to_string()),
    }
}

fn beam_pairs_on_manifold(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let s = LinkScenario {
        tx: ArrayGeometry::upa(4, 4).unwrap(),
        rx: ArrayGeometry::ula(8).unwrap(),
        ..small_scenario(8, 5)
    };
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let h = s.sample(rng).unwrap();
        for pair in [
            beam::best_manifold_pair(&h, BeamStrategy::PerPath).unwrap().pair,
            beam::best_manifold_pair(&h, BeamStrategy::Grid { points: None }).unwrap().pair,
            beam::random_interferer_pair(&h.tx, &h.rx, rng),
            beam::svd_oracle_pair(&h).pair,
        ] {
            worst = worst.max((pair.w.norm() - 1.0).abs());
            worst = worst.max((pair.f.norm() - 1.0).abs());
            if let Some((r, t)) = pair.pointing {
                let w = h.rx.response(r).unscale((h.n_rx() as f64).sqrt());
                let f = h.tx.response(t).unscale((h.n_tx() as f64).sqrt());
                worst = worst.max((w - &pair.w).norm()).max((f - &pair.f).norm());
            }
        }
    }
    CheckOutcome::new(
        "unit-norm beams on the manifold",
        worst < 1e-12,
        format!("max deviation {worst:.2e}"),
    )
}

fn keyhole_self_test(exec: &Executor, seed: u64) -> CheckOutcome {
    let s = LinkScenario {
        model: ChannelModel::Keyhole,
        fading: FadingLaw::ConstantUnit,
        ..small_scenario(16, 4)
    };
    match correction::estimate_upsilon(&s, BeamStrategy::PerPath, 200, seed, exec) {
        Ok(e) => CheckOutcome::new(
            "keyhole self-test Υ = 1",
            (e.monte_carlo - 1.0).abs() < 1e-12,
            format!("Υ = {:.15}", e.monte_carlo),
        ),
        Err(err) => CheckOutcome::new("keyhole self-test Υ = 1", false, err.to_string()),
    }
}

fn distance_invariance(exec: &Executor, seed: u64) -> CheckOutcome {
    let mut s = small_scenario(16, 5);
    let mut bits = Vec::new();
    for d in [10.0, 1000.0] {
        s.distance_m = d;
        let e = correction::estimate_upsilon(&s, BeamStrategy::PerPath, 300, seed, exec).unwrap();
        bits.push(e.monte_carlo.to_bits());
    }
    CheckOutcome::new(
        "Υ independent of distance",
        bits[0] == bits[1],
        "d = 10 m vs 1000 m, shared seed",
    )
}

/// Runs every property check.
pub fn run_all(config: &RunConfig) -> Vec<CheckOutcome> {
    let seed = config.run.seed;
    let exec = config.executor();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (phase, scaling) = phase_and_scaling(&mut rng);
    vec![
        unit_norm_responses(&mut rng),
        boresight_gain(&mut rng),
        phase,
        scaling,
        svd_dominates(&mut rng),
        beam_pairs_on_manifold(&mut rng),
        normalization(&exec, seed),
        keyhole_self_test(&exec, seed),
        distance_invariance(&exec, seed),
        reproducibility(seed),
        config_round_trip(config),
    ]
}
