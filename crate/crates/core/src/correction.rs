//! Correction factor `Υ = E[P_multi] / E[P_keyhole]`.
//!
//! Serving links use the closed-form keyhole mean `N_t N_r ℓ(d)`;
//! interfering links estimate the keyhole mean `ℓ(d) E[G_r G_t]` by Monte
//! Carlo on an independent stream. Per-trial values are the effective gain
//! `|wᴴ H̃ f|²`, so the estimate does not depend on `ℓ(d)` at all.

use serde::Serialize;

use crate::array::SpatialAngle;
use crate::beam::{self, BeamStrategy, BeamformerPair};
use crate::channel::{ChannelModel, FadingLaw, LinkRole, LinkScenario, Visibility};
use crate::error::{Error, Result};
use crate::exec::{tags, Executor};
use crate::stats::{self, MeanCi};

pub const MIN_TRIALS: usize = 100;

/// Mean keyhole received power for a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyholeMean {
    pub power: f64,
    pub halfwidth: f64,
    pub exact: bool,
}

/// One Monte Carlo trial of a Υ estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_id: usize,
    pub p_multi: f64,
    pub p_keyhole_ref: f64,
    pub effective_gain_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionEstimate {
    /// Monte Carlo Υ (linear).
    pub monte_carlo: f64,
    /// 95% confidence halfwidth of `monte_carlo`.
    pub halfwidth: f64,
    pub analytic: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
    pub scenario: LinkScenario,
    pub strategy: BeamStrategy,
    pub keyhole: KeyholeMean,
    pub trials: Vec<TrialRecord>,
}

impl CorrectionEstimate {
    pub fn monte_carlo_db(&self) -> f64 {
        stats::to_db(self.monte_carlo)
    }

    pub fn analytic_db(&self) -> Option<f64> {
        self.analytic.map(stats::to_db)
    }
}

/// `Σ_{k=1}^{η} 1/k`, the mean of the largest of `η` unit-mean exponentials.
pub fn expected_max_exponential(eta: usize) -> Result<f64> {
    if eta < 1 {
        return Err(Error::Domain("path count must be at least 1".into()));
    }
    Ok((1..=eta).map(|k| 1.0 / k as f64).sum())
}

/// Closed-form Υ where one exists:
/// - keyhole channel: 1;
/// - NLOS serving: `E[maxᵢ|γᵢ|²]/η`, i.e. `H_η/η` for iid Rayleigh paths
///   and `1/η` for identical or unit gains;
/// - LOS serving with `K ≥ 1`: `K/(K+1)`;
/// - interfering with iid zero-mean gains and uniform beams and angles: 1.
pub fn analytic_upsilon(scenario: &LinkScenario) -> Option<f64> {
    let eta = scenario.paths;
    match (scenario.model, scenario.role) {
        (ChannelModel::Keyhole, _) => Some(1.0),
        (ChannelModel::Clustered(_), _) => None,
        (ChannelModel::Multipath, LinkRole::Interfering) => {
            (scenario.fading.is_iid_zero_mean() && scenario.angle_law.is_uniform())
                .then_some(1.0)
        }
        (ChannelModel::Multipath, LinkRole::Serving) => match scenario.visibility {
            Visibility::Nlos => {
                let max_mean = match scenario.fading {
                    FadingLaw::IidComplexNormal => expected_max_exponential(eta).ok()?,
                    FadingLaw::IdenticalComplexNormal | FadingLaw::ConstantUnit => 1.0,
                };
                Some(max_mean / eta as f64)
            }
            Visibility::Los => {
                let k = scenario.k_rician;
                if k.is_infinite() {
                    Some(1.0)
                } else {
                    (k >= 1.0).then(|| k / (k + 1.0))
                }
            }
        },
    }
}

/// Keyhole mean power. Exact for serving links; for interfering links a
/// Monte Carlo mean of `ℓ |γ|² G_r G_t` over `n_trials` draws.
pub fn keyhole_mean_power(
    scenario: &LinkScenario,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<KeyholeMean> {
    let ell = scenario.path_gain()?;
    match scenario.role {
        LinkRole::Serving => Ok(KeyholeMean {
            power: scenario.array_product() * ell,
            halfwidth: 0.0,
            exact: true,
        }),
        LinkRole::Interfering => {
            let gains = keyhole_interference_gains(scenario, n_trials, seed, exec);
            let m = stats::mean_ci(&gains);
            Ok(KeyholeMean {
                power: ell * m.mean,
                halfwidth: ell * m.halfwidth,
                exact: false,
            })
        }
    }
}

/// Per-trial `|γ|² G_r(φ, φ') G_t(θ', θ)` for a keyhole interfering link.
fn keyhole_interference_gains(
    scenario: &LinkScenario,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Vec<f64> {
    let law = scenario.angle_law;
    exec.trials(seed, tags::KEYHOLE_REFERENCE, n_trials, |_, rng| {
        let gamma = scenario.fading.sample(1, rng)[0];
        let aoa = law.sample(&scenario.rx, rng);
        let aod = law.sample(&scenario.tx, rng);
        let pair = beam::random_pair_with_law(&law, &scenario.tx, &scenario.rx, rng);
        let (rx_p, tx_p) = pair.pointing.expect("manifold pair");
        gamma.norm_sqr() * scenario.rx.beam_gain(aoa, rx_p) * scenario.tx.beam_gain(tx_p, aod)
    })
}

/// Effective gain of one trial: serving links use `strategy`, interfering
/// links a random pair drawn from the scenario's angle law.
fn trial_gain(
    scenario: &LinkScenario,
    strategy: BeamStrategy,
    rng: &mut crate::exec::TrialRng,
) -> Result<f64> {
    let h = scenario.sample(rng)?;
    match scenario.role {
        LinkRole::Serving => Ok(beam::best_manifold_pair(&h, strategy)?.gain),
        LinkRole::Interfering => {
            let pair = beam::random_pair_with_law(&scenario.angle_law, &h.tx, &h.rx, rng);
            beam::effective_gain(&h, &pair)
        }
    }
}

fn check_trials(n_trials: usize) -> Result<()> {
    if n_trials < MIN_TRIALS {
        return Err(Error::Domain(format!(
            "need at least {MIN_TRIALS} trials, got {n_trials}"
        )));
    }
    Ok(())
}

/// Monte Carlo estimate of Υ paired with the closed form, when one exists.
pub fn estimate_upsilon(
    scenario: &LinkScenario,
    strategy: BeamStrategy,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<CorrectionEstimate> {
    scenario.validate()?;
    check_trials(n_trials)?;
    let ell = scenario.path_gain()?;
    let gains: Vec<f64> = exec
        .trials(seed, tags::UPSILON, n_trials, |_, rng| {
            trial_gain(scenario, strategy, rng)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let numerator = stats::mean_ci(&gains);

    let (monte_carlo, halfwidth, keyhole, references) = match scenario.role {
        LinkRole::Serving => {
            let nn = scenario.array_product();
            let keyhole = KeyholeMean {
                power: nn * ell,
                halfwidth: 0.0,
                exact: true,
            };
            (
                numerator.mean / nn,
                numerator.halfwidth / nn,
                keyhole,
                vec![nn * ell; n_trials],
            )
        }
        LinkRole::Interfering => {
            let ref_gains = keyhole_interference_gains(scenario, n_trials, seed, exec);
            let denominator = stats::mean_ci(&ref_gains);
            let ratio = numerator.mean / denominator.mean;
            // delta method on a ratio of independent means
            let rel = ((numerator.halfwidth / numerator.mean).powi(2)
                + (denominator.halfwidth / denominator.mean).powi(2))
            .sqrt();
            let keyhole = KeyholeMean {
                power: ell * denominator.mean,
                halfwidth: ell * denominator.halfwidth,
                exact: false,
            };
            (
                ratio,
                ratio * rel,
                keyhole,
                ref_gains.iter().map(|g| ell * g).collect(),
            )
        }
    };

    let trials = gains
        .iter()
        .zip(references)
        .enumerate()
        .map(|(trial_id, (&g, p_ref))| TrialRecord {
            trial_id,
            p_multi: ell * g,
            p_keyhole_ref: p_ref,
            effective_gain_db: stats::to_db(g),
        })
        .collect();

    Ok(CorrectionEstimate {
        monte_carlo,
        halfwidth,
        analytic: analytic_upsilon(scenario),
        n_trials,
        seed,
        scenario: scenario.clone(),
        strategy,
        keyhole,
        trials,
    })
}

/// Mean unconstrained gain `σ_max²/(N_t N_r)` on the same realizations an
/// estimate with the same seed sees. Upper bound for any serving-link Υ.
pub fn svd_upsilon(
    scenario: &LinkScenario,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<f64> {
    let gains: Vec<f64> = exec
        .trials(seed, tags::UPSILON, n_trials, |_, rng| {
            scenario.sample(rng).map(|h| beam::svd_oracle_pair(&h).gain)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(stats::mean_ci(&gains).mean / scenario.array_product())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSummary {
    pub median: f64,
    pub mean: f64,
    pub p5: f64,
    pub p25: f64,
    pub p75: f64,
    pub p95: f64,
}

impl GainSummary {
    pub fn from_samples(samples_db: &[f64]) -> Self {
        let s = stats::sorted(samples_db);
        Self {
            median: stats::percentile_sorted(&s, 50.0),
            mean: samples_db.iter().sum::<f64>() / samples_db.len() as f64,
            p5: stats::percentile_sorted(&s, 5.0),
            p25: stats::percentile_sorted(&s, 25.0),
            p75: stats::percentile_sorted(&s, 75.0),
            p95: stats::percentile_sorted(&s, 95.0),
        }
    }
}

/// Effective antenna gains `P_multi/ℓ(d)` in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct GainDistribution {
    pub samples_db: Vec<f64>,
    pub summary: GainSummary,
}

impl GainDistribution {
    pub fn from_samples(samples_db: Vec<f64>) -> Self {
        let summary = GainSummary::from_samples(&samples_db);
        Self {
            samples_db,
            summary,
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        stats::ecdf_sorted(&stats::sorted(&self.samples_db), t)
    }
}

pub fn effective_gain_distribution(
    scenario: &LinkScenario,
    strategy: BeamStrategy,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<GainDistribution> {
    scenario.validate()?;
    check_trials(n_trials)?;
    let samples: Vec<f64> = exec
        .trials(seed, tags::GAINS, n_trials, |_, rng| {
            trial_gain(scenario, strategy, rng).map(stats::to_db)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("non-finite effective gain {bad} dB")));
    }
    Ok(GainDistribution::from_samples(samples))
}

/// Outcome of comparing the full interference power with its cross-term-free
/// part on an NLOS interfering link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossTermReport {
    pub paths: usize,
    pub n_trials: usize,
    /// Mean of `|wᴴ H̃ f|²`, cross terms included.
    pub full_mean: f64,
    pub full_halfwidth: f64,
    /// Mean of `(1/η) Σᵢ |γᵢ|² G_r(φ', φᵢ) G_t(θᵢ, θ')`.
    pub diagonal_mean: f64,
    pub diagonal_halfwidth: f64,
    pub ratio: f64,
    pub ratio_halfwidth: f64,
    /// Independent zero-mean gains and uniform angles.
    pub hypotheses_met: bool,
    /// Largest per-trial relative gap between the two sums; zero up to
    /// rounding for a single path.
    pub max_trial_gap: f64,
}

/// Checks that the cross terms of the interference sum average out.
/// The check runs when the hypotheses fail too, but is flagged.
pub fn cross_term_check(
    scenario: &LinkScenario,
    n_trials: usize,
    seed: u64,
    exec: &Executor,
) -> Result<CrossTermReport> {
    check_trials(n_trials)?;
    let mut nlos = scenario.clone();
    nlos.visibility = Visibility::Nlos;
    nlos.role = LinkRole::Interfering;
    nlos.model = ChannelModel::Multipath;
    nlos.validate()?;
    let eta = nlos.paths as f64;
    let pairs: Vec<(f64, f64)> = exec
        .trials(seed, tags::CROSS_TERMS, n_trials, |_, rng| {
            let h = nlos.sample(rng)?;
            let pair: BeamformerPair =
                beam::random_pair_with_law(&nlos.angle_law, &h.tx, &h.rx, rng);
            let full = beam::effective_gain(&h, &pair)?;
            let (rx_p, tx_p): (SpatialAngle, SpatialAngle) = pair.pointing.expect("manifold");
            let diagonal = h
                .paths
                .iter()
                .map(|p| {
                    p.fading.norm_sqr() * h.rx.beam_gain(rx_p, p.aoa) * h.tx.beam_gain(p.aod, tx_p)
                })
                .sum::<f64>()
                / eta;
            Ok((full, diagonal))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let full: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let diag: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let max_trial_gap = pairs
        .iter()
        .map(|(f, d)| if *d > 0.0 { (f - d).abs() / d } else { (f - d).abs() })
        .fold(0.0, f64::max);
    let (f, d): (MeanCi, MeanCi) = (stats::mean_ci(&full), stats::mean_ci(&diag));
    let ratio = f.mean / d.mean;
    let rel = ((f.halfwidth / f.mean).powi(2) + (d.halfwidth / d.mean).powi(2)).sqrt();
    Ok(CrossTermReport {
        paths: nlos.paths,
        n_trials,
        full_mean: f.mean,
        full_halfwidth: f.halfwidth,
        diagonal_mean: d.mean,
        diagonal_halfwidth: d.halfwidth,
        ratio,
        ratio_halfwidth: ratio * rel,
        hypotheses_met: nlos.fading.is_iid_zero_mean() && nlos.angle_law.is_uniform(),
        max_trial_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ArrayGeometry;
    use crate::channel::PathLossModel;

    fn scenario(n: usize, paths: usize) -> LinkScenario {
        let g = ArrayGeometry::ula(n).unwrap();
        LinkScenario {
            tx: g,
            rx: g,
            paths,
            ..Default::default()
        }
    }

    #[test]
    fn harmonic_sums() {
        assert_eq!(expected_max_exponential(1).unwrap(), 1.0);
        assert_eq!(expected_max_exponential(2).unwrap(), 1.5);
        assert!((expected_max_exponential(10).unwrap() - 2.928_968_253_968_254).abs() < 1e-15);
        assert!(expected_max_exponential(0).is_err());
    }

    #[test]
    fn analytic_cases() {
        let mut s = scenario(64, 1);
        assert_eq!(analytic_upsilon(&s), Some(1.0));
        s.paths = 10;
        let iid = analytic_upsilon(&s).unwrap();
        assert!((iid - 0.292_896_825_396_825_4).abs() < 1e-12);
        assert!((stats::to_db(iid) + 5.33).abs() < 0.01);
        s.fading = FadingLaw::IdenticalComplexNormal;
        assert!((analytic_upsilon(&s).unwrap() - 0.1).abs() < 1e-15);
        s.visibility = Visibility::Los;
        s.k_rician = 10.0;
        assert!((analytic_upsilon(&s).unwrap() - 10.0 / 11.0).abs() < 1e-15);
        s.k_rician = 0.5;
        assert_eq!(analytic_upsilon(&s), None);
        s.role = LinkRole::Interfering;
        assert_eq!(analytic_upsilon(&s), None);
        s.fading = FadingLaw::IidComplexNormal;
        assert_eq!(analytic_upsilon(&s), Some(1.0));
        s.model = ChannelModel::Clustered(Default::default());
        assert_eq!(analytic_upsilon(&s), None);
    }

    #[test]
    fn keyhole_mean_serving_is_exact() {
        let mut s = scenario(64, 10);
        s.path_loss = PathLossModel {
            reference_gain: 1.0,
            los_exponent: 2.0,
            nlos_exponent: 3.0,
        };
        s.distance_m = 1.0;
        let k = keyhole_mean_power(&s, 100, 1, &Executor::sequential()).unwrap();
        assert_eq!(k.power, 4096.0);
        assert!(k.exact);

        s.distance_m = 100.0;
        let k = keyhole_mean_power(&s, 100, 1, &Executor::sequential()).unwrap();
        assert!((k.power - 4096.0 * 1e-6).abs() < 1e-15);
    }

    #[test]
    fn keyhole_mean_interfering_is_path_gain() {
        let mut s = scenario(16, 10);
        s.role = LinkRole::Interfering;
        let ell = s.path_gain().unwrap();
        let k = keyhole_mean_power(&s, 100_000, 3, &Executor::new(0)).unwrap();
        assert!(!k.exact);
        assert!((k.power - ell).abs() < 2.0 * k.halfwidth.max(0.01 * ell));
    }

    #[test]
    fn too_few_trials() {
        let s = scenario(8, 2);
        assert!(
            estimate_upsilon(&s, BeamStrategy::PerPath, 99, 1, &Executor::sequential()).is_err()
        );
    }

    #[test]
    fn upsilon_does_not_depend_on_distance() {
        let mut s = scenario(16, 5);
        let ex = Executor::new(2);
        s.distance_m = 10.0;
        let near = estimate_upsilon(&s, BeamStrategy::PerPath, 500, 7, &ex).unwrap();
        s.distance_m = 1000.0;
        let far = estimate_upsilon(&s, BeamStrategy::PerPath, 500, 7, &ex).unwrap();
        assert_eq!(near.monte_carlo.to_bits(), far.monte_carlo.to_bits());
    }

    #[test]
    fn keyhole_self_test_is_one() {
        let mut s = scenario(16, 5);
        s.model = ChannelModel::Keyhole;
        s.fading = FadingLaw::ConstantUnit;
        let est =
            estimate_upsilon(&s, BeamStrategy::PerPath, 200, 1, &Executor::sequential()).unwrap();
        for t in &est.trials {
            let g = t.p_multi / s.path_gain().unwrap();
            assert!((g / 256.0 - 1.0).abs() < 1e-12);
        }
        assert!((est.monte_carlo - 1.0).abs() < 1e-12);
        assert_eq!(est.analytic, Some(1.0));
    }

    #[test]
    fn constrained_below_unconstrained() {
        let s = scenario(16, 6);
        let ex = Executor::new(0);
        let est = estimate_upsilon(&s, BeamStrategy::PerPath, 300, 5, &ex).unwrap();
        let svd = svd_upsilon(&s, 300, 5, &ex).unwrap();
        assert!(est.monte_carlo <= svd);
    }

    #[test]
    fn keyhole_gain_distribution_is_degenerate() {
        let g = ArrayGeometry::upa(8, 8).unwrap();
        let s = LinkScenario {
            tx: g,
            rx: g,
            model: ChannelModel::Keyhole,
            fading: FadingLaw::ConstantUnit,
            ..Default::default()
        };
        let d = effective_gain_distribution(&s, BeamStrategy::PerPath, 100, 1, &Executor::new(0))
            .unwrap();
        let want = stats::to_db(4096.0);
        assert!(d.samples_db.iter().all(|x| (x - want).abs() < 1e-9));
        assert!((d.summary.median - 36.12).abs() < 0.01);
    }

    #[test]
    fn cross_terms_single_path() {
        let mut s = scenario(16, 1);
        s.role = LinkRole::Interfering;
        let r = cross_term_check(&s, 200, 2, &Executor::sequential()).unwrap();
        assert!(r.max_trial_gap < 1e-9, "{}", r.max_trial_gap);
        assert!((r.ratio - 1.0).abs() < 1e-9);
        assert!(r.hypotheses_met);
    }

    #[test]
    fn cross_terms_flagged_for_identical_fading() {
        let mut s = scenario(16, 4);
        s.fading = FadingLaw::IdenticalComplexNormal;
        let r = cross_term_check(&s, 1000, 2, &Executor::new(0)).unwrap();
        assert!(!r.hypotheses_met);
        assert!(r.ratio.is_finite());
    }

    #[test]
    fn summary_recomputable() {
        let d = GainDistribution::from_samples(vec![3.0, 1.0, 2.0, 5.0, 4.0]);
        assert_eq!(d.summary, GainSummary::from_samples(&d.samples_db));
        assert_eq!(d.summary.median, 3.0);
        assert_eq!(d.cdf(3.0), 0.6);
    }
}
