//! Run configuration.
//!
//! A TOML document with the sections below; every key is optional and the
//! defaults are shown.
//!
//! ```toml
//! [run]
//! command = "upsilon"          # upsilon | gains | interference | sinr | validate
//! seed = 42
//! trials = 10000
//! workers = 0                  # 0 = all cores
//! strategy = "per-path"        # per-path | grid | alternating
//! # grid_points = 256          # default 4 × largest array dimension
//! alternating_iters = 4
//! sweep_paths = []             # run once per path count instead of scenario.paths
//! # output = "out"
//!
//! [scenario]
//! model = "multipath"          # multipath | keyhole | clustered
//! visibility = "nlos"          # nlos | los
//! role = "serving"             # serving | interfering
//! distance_m = 100.0
//! paths = 10
//! k_rician = 10.0
//! los_aoa = { az = 1.0, el = 0.5 }
//! los_aod = { az = 2.0, el = 1.5 }
//! angle_law = { law = "uniform" }   # or { law = "sector", center = 1.0, width = 0.5 }
//!
//! [cluster]                    # model = "clustered"
//! clusters = 19
//! rays_per_cluster = 20
//! angle_spread = 0.3
//! power_decay = 0.0
//! poisson_clusters = false
//!
//! [arrays]
//! tx = { kind = "ula", elements = 64, spacing = 0.5 }
//! rx = { kind = "upa", rows = 8, cols = 8 }
//!
//! [fading]
//! law = "iid-complex-normal"   # iid-complex-normal | identical-complex-normal | constant-unit
//!
//! [path_loss]
//! reference_gain = 1.068e-7    # (λ/4π)² at 73 GHz
//! los_exponent = 2.0
//! nlos_exponent = 3.0
//!
//! [scene]                      # sinr
//! policy = "serving-only"      # none | serving-only | serving-and-interfering
//! noise_power = 1e-12
//! interference = true
//! crossover_los_distance_m = 200.0
//! transmitters = [{ position = [100.0, 0.0], visibility = "nlos", tx_power = 1.0 }]
//! # upsilon = { los_serving = 1.0, nlos_serving = 0.0526, los_interfering = 1.0, nlos_interfering = 1.0 }
//!
//! [coverage]                   # sinr
//! scenes = 2000
//! transmitters = 10
//! radius_m = 300.0
//! min_distance_m = 10.0
//! los_probability = 0.0
//! tx_power = 1.0
//! thresholds_db = { start = -20.0, stop = 60.0, step = 1.0 }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::{AngleLaw, ArrayGeometry, SpatialAngle};
use crate::beam::BeamStrategy;
use crate::channel::{
    ChannelModel, ClusterConfig, FadingLaw, LinkRole, LinkScenario, PathLossModel, Visibility,
};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::network::{CorrectionPolicy, NetworkScene, SceneGenerator, Transmitter, UpsilonTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    #[default]
    Upsilon,
    Gains,
    Interference,
    Sinr,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyName {
    #[default]
    PerPath,
    Grid,
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub command: Command,
    pub seed: u64,
    pub trials: usize,
    pub workers: usize,
    pub strategy: StrategyName,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub alternating_iters: usize,
    pub sweep_paths: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            command: Command::Upsilon,
            seed: 42,
            trials: 10_000,
            workers: 0,
            strategy: StrategyName::PerPath,
            grid_points: None,
            alternating_iters: 4,
            sweep_paths: Vec::new(),
            output: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Keyhole,
    #[default]
    Multipath,
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub model: ModelName,
    pub visibility: Visibility,
    pub role: LinkRole,
    pub distance_m: f64,
    pub paths: usize,
    pub k_rician: f64,
    pub los_aoa: SpatialAngle,
    pub los_aod: SpatialAngle,
    pub angle_law: AngleLaw,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let d = LinkScenario::default();
        Self {
            model: ModelName::Multipath,
            visibility: d.visibility,
            role: d.role,
            distance_m: d.distance_m,
            paths: d.paths,
            k_rician: d.k_rician,
            los_aoa: d.los_aoa,
            los_aod: d.los_aod,
            angle_law: d.angle_law,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraysSection {
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
}

impl Default for ArraysSection {
    fn default() -> Self {
        let d = LinkScenario::default();
        Self { tx: d.tx, rx: d.rx }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FadingSection {
    pub law: FadingLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSection {
    pub policy: CorrectionPolicy,
    pub noise_power: f64,
    pub interference: bool,
    pub crossover_los_distance_m: f64,
    pub transmitters: Vec<Transmitter>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upsilon: Option<UpsilonTable>,
}

impl Default for SceneSection {
    fn default() -> Self {
        Self {
            policy: CorrectionPolicy::ServingOnly,
            noise_power: 1e-12,
            interference: true,
            crossover_los_distance_m: 200.0,
            transmitters: Vec::new(),
            upsilon: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ThresholdGrid {
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverageSection {
    pub scenes: usize,
    pub transmitters: usize,
    pub radius_m: f64,
    pub min_distance_m: f64,
    pub los_probability: f64,
    pub tx_power: f64,
    pub thresholds_db: ThresholdGrid,
}

impl Default for CoverageSection {
    fn default() -> Self {
        Self {
            scenes: 2000,
            transmitters: 10,
            radius_m: 300.0,
            min_distance_m: 10.0,
            los_probability: 0.0,
            tx_power: 1.0,
            thresholds_db: ThresholdGrid {
                start: -20.0,
                stop: 60.0,
                step: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub scenario: ScenarioSection,
    pub cluster: ClusterConfig,
    pub arrays: ArraysSection,
    pub fading: FadingSection,
    pub path_loss: PathLossModel,
    pub scene: SceneSection,
    pub coverage: CoverageSection,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.trials < crate::correction::MIN_TRIALS {
            return Err(Error::config(
                "run.trials",
                format!("must be at least {}", crate::correction::MIN_TRIALS),
            ));
        }
        if self.run.alternating_iters == 0 {
            return Err(Error::config("run.alternating_iters", "must be positive"));
        }
        if self.run.grid_points == Some(0) {
            return Err(Error::config("run.grid_points", "must be positive"));
        }
        if let Some(k) = self.run.sweep_paths.iter().position(|&p| p == 0) {
            return Err(Error::config(
                format!("run.sweep_paths[{k}]"),
                "path counts must be at least 1",
            ));
        }
        if let AngleLaw::Sector { width, .. } = self.scenario.angle_law {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::config("scenario.angle_law.width", "must be positive"));
            }
        }
        self.link_scenario()?.validate()?;
        if !self.scene.transmitters.is_empty() {
            self.scene_template().validate()?;
        }
        let t = self.coverage.thresholds_db;
        if !(t.step > 0.0 && t.stop >= t.start) {
            return Err(Error::config(
                "coverage.thresholds_db",
                "need step > 0 and stop >= start",
            ));
        }
        self.scene_generator().validate()
    }

    pub fn strategy(&self) -> BeamStrategy {
        match self.run.strategy {
            StrategyName::PerPath => BeamStrategy::PerPath,
            StrategyName::Grid => BeamStrategy::Grid {
                points: self.run.grid_points,
            },
            StrategyName::Alternating => BeamStrategy::Alternating {
                points: self.run.grid_points,
                iters: self.run.alternating_iters,
            },
        }
    }

    pub fn executor(&self) -> Executor {
        Executor::new(self.run.workers)
    }

    pub fn channel_model(&self) -> ChannelModel {
        match self.scenario.model {
            ModelName::Keyhole => ChannelModel::Keyhole,
            ModelName::Multipath => ChannelModel::Multipath,
            ModelName::Clustered => ChannelModel::Clustered(self.cluster),
        }
    }

    pub fn link_scenario(&self) -> Result<LinkScenario> {
        let s = &self.scenario;
        let scenario = LinkScenario {
            visibility: s.visibility,
            role: s.role,
            distance_m: s.distance_m,
            paths: s.paths,
            k_rician: s.k_rician,
            fading: self.fading.law,
            tx: self.arrays.tx,
            rx: self.arrays.rx,
            path_loss: self.path_loss,
            angle_law: s.angle_law,
            los_aoa: s.los_aoa,
            los_aod: s.los_aod,
            model: self.channel_model(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Scenarios to run: one per entry of `run.sweep_paths`, or the
    /// configured scenario alone.
    pub fn sweep(&self) -> Result<Vec<LinkScenario>> {
        let base = self.link_scenario()?;
        if self.run.sweep_paths.is_empty() {
            return Ok(vec![base]);
        }
        Ok(self
            .run
            .sweep_paths
            .iter()
            .map(|&paths| LinkScenario {
                paths,
                ..base.clone()
            })
            .collect())
    }

    /// Υ table for the scene: explicit values, or closed forms from the
    /// scenario's path count, fading law and K-factor.
    pub fn upsilon_table(&self) -> UpsilonTable {
        self.scene.upsilon.unwrap_or_else(|| {
            UpsilonTable::from_closed_forms(
                self.scenario.paths,
                self.fading.law,
                self.scenario.k_rician,
            )
        })
    }

    pub fn scene_template(&self) -> NetworkScene {
        let mut scene = NetworkScene::new(
            self.scene.transmitters.clone(),
            self.arrays.tx,
            self.arrays.rx,
        );
        scene.path_loss = self.path_loss;
        scene.policy = self.scene.policy;
        scene.upsilon = self.upsilon_table();
        scene.noise_power = self.scene.noise_power;
        scene.interference = self.scene.interference;
        scene.angle_law = self.scenario.angle_law;
        scene
    }

    pub fn scene_generator(&self) -> SceneGenerator {
        let c = &self.coverage;
        SceneGenerator {
            n_transmitters: c.transmitters,
            radius_m: c.radius_m,
            min_distance_m: c.min_distance_m,
            los_probability: c.los_probability,
            tx_power: c.tx_power,
            template: self.scene_template(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[run]
command = "gains"
seed = 7
trials = 500
strategy = "grid"
grid_points = 64
sweep_paths = [1, 4, 10]

[scenario]
model = "clustered"
visibility = "los"
k_rician = inf
los_aoa = { az = 0.25, el = 1.5 }

[cluster]
clusters = 5
rays_per_cluster = 3
angle_spread = 0.2
poisson_clusters = true

[arrays]
tx = { kind = "upa", rows = 8, cols = 8 }
rx = { kind = "ula", elements = 16, spacing = 0.25 }

[fading]
law = "identical-complex-normal"

[scene]
policy = "none"
transmitters = [
  { position = [100.0, 0.0], visibility = "nlos", tx_power = 1.0 },
  { position = [0.0, 200.0], visibility = "los", tx_power = 2.0 },
]
upsilon = { los_serving = 1.0, nlos_serving = 0.05, los_interfering = 1.0, nlos_interfering = 1.0 }

[coverage]
thresholds_db = { start = 0.0, stop = 10.0, step = 0.5 }
"#;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let s = cfg.link_scenario().unwrap();
        assert_eq!(s, LinkScenario::default());
    }

    #[test]
    fn full_config_parses() {
        let cfg = RunConfig::from_toml_str(FULL).unwrap();
        assert_eq!(cfg.run.command, Command::Gains);
        assert_eq!(cfg.strategy(), BeamStrategy::Grid { points: Some(64) });
        let s = cfg.link_scenario().unwrap();
        assert!(s.k_rician.is_infinite());
        assert_eq!(s.rx.n_elements(), 16);
        assert!(matches!(s.model, ChannelModel::Clustered(c) if c.poisson_clusters));
        assert_eq!(cfg.sweep().unwrap().len(), 3);
        assert_eq!(cfg.scene_template().transmitters.len(), 2);
        assert_eq!(cfg.coverage.thresholds_db.values().len(), 21);
    }

    #[test]
    fn round_trip_is_identity() {
        for cfg in [RunConfig::default(), RunConfig::from_toml_str(FULL).unwrap()] {
            let text = cfg.to_toml_string().unwrap();
            let back = RunConfig::from_toml_str(&text).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_toml_string().unwrap(), text);
        }
    }

    #[test]
    fn errors_name_the_key() {
        let err = RunConfig::from_toml_str("[scenario]\npaths = 0\n").unwrap_err();
        assert!(err.to_string().contains("scenario.paths"), "{err}");

        let err = RunConfig::from_toml_str("[scenario]\nvisibility = \"maybe\"\n").unwrap_err();
        assert!(err.to_string().contains("visibility"), "{err}");

        let err = RunConfig::from_toml_str("[run]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");

        let err = RunConfig::from_toml_str("[run]\nsweep_paths = [3, 0]\n").unwrap_err();
        assert!(err.to_string().contains("run.sweep_paths[1]"), "{err}");

        let err = RunConfig::from_toml_str(
            "[scene]\ntransmitters = [{ position = [0.0, 0.0], visibility = \"los\", tx_power = 1.0 }]\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("scene.transmitters[0].position"), "{err}");

        let err = RunConfig::from_toml_str(
            "[scenario]\nmodel = \"clustered\"\n[cluster]\nclusters = 3\nrays_per_cluster = 2\nangle_spread = -1.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegenerateCluster(_)), "{err}");
    }

    #[test]
    fn default_upsilon_table_follows_scenario() {
        let mut cfg = RunConfig::default();
        cfg.scenario.paths = 19;
        cfg.fading.law = FadingLaw::IdenticalComplexNormal;
        let t = cfg.upsilon_table();
        assert!((t.nlos_serving - 1.0 / 19.0).abs() < 1e-15);
        assert!((t.los_serving - 10.0 / 11.0).abs() < 1e-15);
        assert_eq!(t.nlos_interfering, 1.0);
    }
}
