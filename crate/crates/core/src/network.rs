//! Association and SINR for a receiver at the origin.
//!
//! Serving-link candidates are ranked by mean received power
//! `P_t ℓ(d) N_t N_r Υ_serving(visibility)` with fading averaged out.
//! Interferers contribute `P_t ℓ(d) G_r G_t Υ_interfering` with random beam
//! gains; under the default policy the interfering correction is 1.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{AngleLaw, ArrayGeometry};
use crate::channel::{FadingLaw, PathLossModel, Visibility};
use crate::correction;
use crate::error::{Error, Result};
use crate::exec::{tags, Executor};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CorrectionPolicy {
    None,
    #[default]
    ServingOnly,
    ServingAndInterfering,
}

/// Υ per link class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpsilonTable {
    pub los_serving: f64,
    pub nlos_serving: f64,
    pub los_interfering: f64,
    pub nlos_interfering: f64,
}

impl Default for UpsilonTable {
    fn default() -> Self {
        Self::from_closed_forms(19, FadingLaw::IdenticalComplexNormal, f64::INFINITY)
    }
}

impl UpsilonTable {
    pub fn uniform(value: f64) -> Self {
        Self {
            los_serving: value,
            nlos_serving: value,
            los_interfering: value,
            nlos_interfering: value,
        }
    }

    /// Closed-form serving values for `nlos_paths` NLOS paths with the given
    /// fading law and LOS K-factor; interfering values are 1.
    pub fn from_closed_forms(nlos_paths: usize, fading: FadingLaw, k_rician: f64) -> Self {
        let eta = nlos_paths.max(1);
        let max_mean = match fading {
            FadingLaw::IidComplexNormal => {
                correction::expected_max_exponential(eta).expect("eta >= 1")
            }
            FadingLaw::IdenticalComplexNormal | FadingLaw::ConstantUnit => 1.0,
        };
        let los = if k_rician.is_infinite() {
            1.0
        } else {
            k_rician / (k_rician + 1.0)
        };
        Self {
            los_serving: los,
            nlos_serving: max_mean / eta as f64,
            los_interfering: 1.0,
            nlos_interfering: 1.0,
        }
    }

    pub fn serving(&self, v: Visibility) -> f64 {
        match v {
            Visibility::Los => self.los_serving,
            Visibility::Nlos => self.nlos_serving,
        }
    }

    pub fn interfering(&self, v: Visibility) -> f64 {
        match v {
            Visibility::Los => self.los_interfering,
            Visibility::Nlos => self.nlos_interfering,
        }
    }

    fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("upsilon.los_serving", self.los_serving),
            ("upsilon.nlos_serving", self.nlos_serving),
            ("upsilon.los_interfering", self.los_interfering),
            ("upsilon.nlos_interfering", self.nlos_interfering),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(key, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transmitter {
    /// Position in meters; the receiver sits at the origin.
    pub position: [f64; 2],
    pub visibility: Visibility,
    /// Linear transmit power (W).
    pub tx_power: f64,
}

impl Transmitter {
    pub fn distance(&self) -> f64 {
        self.position[0].hypot(self.position[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkScene {
    pub transmitters: Vec<Transmitter>,
    pub tx_geom: ArrayGeometry,
    pub rx_geom: ArrayGeometry,
    pub path_loss: PathLossModel,
    pub policy: CorrectionPolicy,
    pub upsilon: UpsilonTable,
    /// Linear noise power (W).
    pub noise_power: f64,
    /// Whether interferers count toward the SINR denominator.
    pub interference: bool,
    /// Law of the interferer beam and path angles.
    pub angle_law: AngleLaw,
}

impl NetworkScene {
    pub fn new(transmitters: Vec<Transmitter>, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry) -> Self {
        Self {
            transmitters,
            tx_geom,
            rx_geom,
            path_loss: PathLossModel::default(),
            policy: CorrectionPolicy::default(),
            upsilon: UpsilonTable::default(),
            noise_power: 1e-12,
            interference: true,
            angle_law: AngleLaw::Uniform,
        }
    }

    pub fn with_policy(&self, policy: CorrectionPolicy) -> Self {
        Self {
            policy,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transmitters.is_empty() {
            return Err(Error::EmptyScene);
        }
        for (k, t) in self.transmitters.iter().enumerate() {
            if !(t.distance() > 0.0 && t.distance().is_finite()) {
                return Err(Error::config(
                    format!("scene.transmitters[{k}].position"),
                    "transmitter must not sit on the receiver",
                ));
            }
            if !(t.tx_power > 0.0 && t.tx_power.is_finite()) {
                return Err(Error::config(
                    format!("scene.transmitters[{k}].tx_power"),
                    "must be positive",
                ));
            }
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(Error::config("scene.noise_power", "must be nonnegative"));
        }
        self.path_loss.validate()?;
        self.upsilon.validate()
    }

    fn serving_correction(&self, v: Visibility) -> f64 {
        match self.policy {
            CorrectionPolicy::None => 1.0,
            _ => self.upsilon.serving(v),
        }
    }

    fn interfering_correction(&self, v: Visibility) -> f64 {
        match self.policy {
            CorrectionPolicy::ServingAndInterfering => self.upsilon.interfering(v),
            _ => 1.0,
        }
    }

    fn mean_path_power(&self, t: &Transmitter) -> Result<f64> {
        Ok(t.tx_power * self.path_loss.gain(t.visibility, t.distance())?)
    }

    /// Mean power from transmitter `k` if it served the receiver.
    pub fn serving_power(&self, k: usize) -> Result<f64> {
        let t = &self.transmitters[k];
        let aligned = (self.tx_geom.n_elements() * self.rx_geom.n_elements()) as f64;
        Ok(self.mean_path_power(t)? * aligned * self.serving_correction(t.visibility))
    }

    /// Power from transmitter `k` as an interferer with beam gain product
    /// `gain_product = G_r G_t`.
    pub fn interference_power(&self, k: usize, gain_product: f64) -> Result<f64> {
        let t = &self.transmitters[k];
        Ok(self.mean_path_power(t)? * gain_product * self.interfering_correction(t.visibility))
    }

    /// Random `G_r(φ, φ') G_t(θ', θ)` for every transmitter, in index order.
    pub fn draw_interferer_gains<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let law = self.angle_law;
        (0..self.transmitters.len())
            .map(|_| {
                let arrival = law.sample(&self.rx_geom, rng);
                let rx_pointing = law.sample(&self.rx_geom, rng);
                let departure = law.sample(&self.tx_geom, rng);
                let tx_pointing = law.sample(&self.tx_geom, rng);
                self.rx_geom.beam_gain(rx_pointing, arrival)
                    * self.tx_geom.beam_gain(tx_pointing, departure)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssociationResult {
    pub serving: usize,
    /// Corrected mean serving-hypothesis power per transmitter.
    pub serving_powers: Vec<f64>,
    pub noise_power: f64,
    /// SINR with every interferer at its mean beam gain `E[G_r G_t] = 1`.
    pub sinr: f64,
}

/// Picks the transmitter with the largest corrected mean power, lowest
/// index on ties.
pub fn associate(scene: &NetworkScene) -> Result<AssociationResult> {
    scene.validate()?;
    let serving_powers = (0..scene.transmitters.len())
        .map(|k| scene.serving_power(k))
        .collect::<Result<Vec<_>>>()?;
    let mut serving = 0;
    for (k, &p) in serving_powers.iter().enumerate() {
        if p > serving_powers[serving] {
            serving = k;
        }
    }
    let mean_gains = vec![1.0; scene.transmitters.len()];
    let sinr = sinr_from(scene, serving, serving_powers[serving], &mean_gains)?;
    Ok(AssociationResult {
        serving,
        serving_powers,
        noise_power: scene.noise_power,
        sinr,
    })
}

fn sinr_from(scene: &NetworkScene, serving: usize, signal: f64, gains: &[f64]) -> Result<f64> {
    let mut interference = 0.0;
    if scene.interference {
        for (k, &g) in gains.iter().enumerate() {
            if k != serving {
                interference += scene.interference_power(k, g)?;
            }
        }
    }
    Ok(signal / (interference + scene.noise_power))
}

/// SINR for given interferer beam gain products (indexed by transmitter;
/// the serving entry is ignored).
pub fn sinr_with_gains(
    scene: &NetworkScene,
    assoc: &AssociationResult,
    gains: &[f64],
) -> Result<f64> {
    if gains.len() != scene.transmitters.len() {
        return Err(Error::DimensionMismatch {
            expected: (scene.transmitters.len(), 1),
            found: (gains.len(), 1),
        });
    }
    sinr_from(scene, assoc.serving, assoc.serving_powers[assoc.serving], gains)
}

/// SINR with interferer beams at random angles.
pub fn sinr<R: Rng + ?Sized>(
    scene: &NetworkScene,
    assoc: &AssociationResult,
    rng: &mut R,
) -> Result<f64> {
    let gains = scene.draw_interferer_gains(rng);
    sinr_with_gains(scene, assoc, &gains)
}

/// A two-transmitter scene where the association under the correction
/// differs from the uncorrected one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Crossover {
    /// Largest NLOS distance at which the NLOS transmitter still wins
    /// without correction.
    pub threshold_uncorrected_m: f64,
    /// Same, with the serving correction applied.
    pub threshold_corrected_m: f64,
    /// NLOS distance of the returned scene, between the two thresholds.
    pub nlos_distance_m: f64,
    pub serving_uncorrected: usize,
    pub serving_corrected: usize,
}

/// Bisects the NLOS distance of a scene with one NLOS transmitter (index 0)
/// and one LOS transmitter at `los_distance_m` (index 1).
pub fn find_crossover(template: &NetworkScene, los_distance_m: f64) -> Result<(Crossover, NetworkScene)> {
    let build = |nlos_d: f64| {
        let mut s = template.clone();
        s.transmitters = vec![
            Transmitter {
                position: [nlos_d, 0.0],
                visibility: Visibility::Nlos,
                tx_power: 1.0,
            },
            Transmitter {
                position: [0.0, los_distance_m],
                visibility: Visibility::Los,
                tx_power: 1.0,
            },
        ];
        s
    };
    let nlos_wins = |policy: CorrectionPolicy, d: f64| -> Result<bool> {
        Ok(associate(&build(d).with_policy(policy))?.serving == 0)
    };
    let threshold = |policy: CorrectionPolicy| -> Result<f64> {
        let (mut lo, mut hi) = (1e-3, 1e6);
        if !nlos_wins(policy, lo)? || nlos_wins(policy, hi)? {
            return Err(Error::Domain(
                "NLOS transmitter does not switch from winning to losing over the search range"
                    .into(),
            ));
        }
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if nlos_wins(policy, mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(lo)
    };
    let corrected_policy = match template.policy {
        CorrectionPolicy::None => CorrectionPolicy::ServingOnly,
        p => p,
    };
    let t_none = threshold(CorrectionPolicy::None)?;
    let t_corr = threshold(corrected_policy)?;
    let d = (t_none * t_corr).sqrt();
    let scene = build(d).with_policy(corrected_policy);
    let crossover = Crossover {
        threshold_uncorrected_m: t_none,
        threshold_corrected_m: t_corr,
        nlos_distance_m: d,
        serving_uncorrected: associate(&scene.with_policy(CorrectionPolicy::None))?.serving,
        serving_corrected: associate(&scene)?.serving,
    };
    Ok((crossover, scene))
}

/// Random scenes: transmitters uniform on an annulus around the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneGenerator {
    pub n_transmitters: usize,
    pub radius_m: f64,
    pub min_distance_m: f64,
    pub los_probability: f64,
    pub tx_power: f64,
    pub template: NetworkScene,
}

impl SceneGenerator {
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R) -> NetworkScene {
        let (r0, r1) = (self.min_distance_m, self.radius_m);
        let transmitters = (0..self.n_transmitters)
            .map(|_| {
                let u: f64 = rng.random();
                let r = (r0 * r0 + u * (r1 * r1 - r0 * r0)).sqrt();
                let a = rng.random::<f64>() * TAU;
                let visibility = if rng.random::<f64>() < self.los_probability {
                    Visibility::Los
                } else {
                    Visibility::Nlos
                };
                Transmitter {
                    position: [r * a.cos(), r * a.sin()],
                    visibility,
                    tx_power: self.tx_power,
                }
            })
            .collect();
        NetworkScene {
            transmitters,
            ..self.template.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_transmitters == 0 {
            return Err(Error::EmptyScene);
        }
        if !(self.min_distance_m > 0.0 && self.radius_m > self.min_distance_m) {
            return Err(Error::config(
                "coverage.radius_m",
                "need 0 < min_distance_m < radius_m",
            ));
        }
        if !(0.0..=1.0).contains(&self.los_probability) {
            return Err(Error::config("coverage.los_probability", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// `P(SINR > t)` with and without the correction on identical scenes.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRun {
    pub thresholds_db: Vec<f64>,
    pub p_corrected: Vec<f64>,
    pub p_uncorrected: Vec<f64>,
    pub sinr_corrected_db: Vec<f64>,
    pub sinr_uncorrected_db: Vec<f64>,
    /// Scenes whose serving transmitter is NLOS under the correction.
    pub nlos_served: usize,
}

impl CoverageRun {
    /// Median SINR loss caused by the correction.
    pub fn median_shift_db(&self) -> f64 {
        stats::median(&self.sinr_uncorrected_db) - stats::median(&self.sinr_corrected_db)
    }
}

pub fn coverage_curve(
    generator: &SceneGenerator,
    n_scenes: usize,
    thresholds_db: &[f64],
    seed: u64,
    exec: &Executor,
) -> Result<CoverageRun> {
    if n_scenes == 0 {
        return Err(Error::Domain("need at least one scene".into()));
    }
    generator.validate()?;
    let corrected_policy = match generator.template.policy {
        CorrectionPolicy::None => CorrectionPolicy::ServingOnly,
        p => p,
    };
    let per_scene: Vec<(f64, f64, bool)> = exec
        .trials(seed, tags::SCENES, n_scenes, |_, rng| {
            let scene = generator.generate(rng).with_policy(corrected_policy);
            let gains = scene.draw_interferer_gains(rng);
            let corr = associate(&scene)?;
            let plain_scene = scene.with_policy(CorrectionPolicy::None);
            let plain = associate(&plain_scene)?;
            let s_corr = sinr_with_gains(&scene, &corr, &gains)?;
            let s_plain = sinr_with_gains(&plain_scene, &plain, &gains)?;
            let nlos = scene.transmitters[corr.serving].visibility == Visibility::Nlos;
            Ok((stats::to_db(s_corr), stats::to_db(s_plain), nlos))
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let corr: Vec<f64> = per_scene.iter().map(|s| s.0).collect();
    let plain: Vec<f64> = per_scene.iter().map(|s| s.1).collect();
    let (sc, sp) = (stats::sorted(&corr), stats::sorted(&plain));
    Ok(CoverageRun {
        thresholds_db: thresholds_db.to_vec(),
        p_corrected: thresholds_db.iter().map(|&t| stats::ccdf_sorted(&sc, t)).collect(),
        p_uncorrected: thresholds_db.iter().map(|&t| stats::ccdf_sorted(&sp, t)).collect(),
        sinr_corrected_db: corr,
        sinr_uncorrected_db: plain,
        nlos_served: per_scene.iter().filter(|s| s.2).count(),
    })
}
