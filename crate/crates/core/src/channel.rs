//! Narrowband MIMO channel samplers.
//!
//! All samplers produce `H = √ℓ(d) · H̃` where `H̃` is stored in
//! [`ChannelRealization::matrix`] and `ℓ(d)` in
//! [`ChannelRealization::path_gain`]. Keeping the path gain out of the
//! matrix lets power ratios that do not depend on `ℓ` come out
//! bit-identical across distances.
//!
//! - keyhole: `H̃ = γ a_r(φ) a_t(θ)ᴴ`
//! - NLOS: `H̃ = √(1/η) Σᵢ γᵢ a_r(φᵢ) a_t(θᵢ)ᴴ`
//! - LOS: `H̃ = √(K/(K+1)) a_r(φ₀) a_t(θ₀)ᴴ + √(1/(η(K+1))) Σᵢ γᵢ a_r(φᵢ) a_t(θᵢ)ᴴ`
//! - clustered: NLOS/LOS with every scattered path replaced by a cluster of
//!   rays around a random center, cluster powers from an exponential
//!   profile.
//!
//! The normalizing constant in front of the scattered sum is 1; the tests
//! check `E‖H‖²_F = N_t N_r ℓ(d)` for every sampler.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

pub use crate::array::AngleLaw;
use crate::array::{ArrayGeometry, ArrayKind, SpatialAngle};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Visibility {
    Los,
    Nlos,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkRole {
    Serving,
    Interfering,
}

/// Law of the per-path small-scale gains `γᵢ`. Every law has `E|γᵢ|² = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FadingLaw {
    /// Independent `CN(0, 1)` per path.
    #[default]
    IidComplexNormal,
    /// One `CN(0, 1)` draw shared by all paths.
    IdenticalComplexNormal,
    /// `γᵢ = 1`.
    ConstantUnit,
}

impl FadingLaw {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Complex64> {
        match self {
            FadingLaw::IidComplexNormal => (0..n).map(|_| complex_normal(rng)).collect(),
            FadingLaw::IdenticalComplexNormal => vec![complex_normal(rng); n],
            FadingLaw::ConstantUnit => vec![Complex64::new(1.0, 0.0); n],
        }
    }

    /// Independent, zero-mean gains.
    pub fn is_iid_zero_mean(&self) -> bool {
        matches!(self, FadingLaw::IidComplexNormal)
    }
}

/// `CN(0, 1)` sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// `ℓ(d) = reference_gain · d^(-exponent)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw {
    pub reference_gain: f64,
    pub exponent: f64,
}

impl PowerLaw {
    pub fn gain(&self, d: f64) -> Result<f64> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("distance must be positive, got {d}")));
        }
        Ok(self.reference_gain * d.powf(-self.exponent))
    }
}

pub fn path_loss(model: &PowerLaw, d: f64) -> Result<f64> {
    model.gain(d)
}

/// Free-space gain `(λ / 4π)²` at 1 m for carrier `freq_hz`.
pub fn free_space_reference_gain(freq_hz: f64) -> f64 {
    const C: f64 = 299_792_458.0;
    let lambda = C / freq_hz;
    (lambda / (4.0 * std::f64::consts::PI)).powi(2)
}

pub const DEFAULT_CARRIER_HZ: f64 = 73e9;

/// Power-law path gain with separate LOS and NLOS exponents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossModel {
    pub reference_gain: f64,
    pub los_exponent: f64,
    pub nlos_exponent: f64,
}

impl Default for PathLossModel {
    fn default() -> Self {
        Self {
            reference_gain: free_space_reference_gain(DEFAULT_CARRIER_HZ),
            los_exponent: 2.0,
            nlos_exponent: 3.0,
        }
    }
}

impl PathLossModel {
    pub fn law(&self, visibility: Visibility) -> PowerLaw {
        PowerLaw {
            reference_gain: self.reference_gain,
            exponent: match visibility {
                Visibility::Los => self.los_exponent,
                Visibility::Nlos => self.nlos_exponent,
            },
        }
    }

    pub fn gain(&self, visibility: Visibility, d: f64) -> Result<f64> {
        self.law(visibility).gain(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reference_gain > 0.0 && self.reference_gain.is_finite()) {
            return Err(Error::config(
                "path_loss.reference_gain",
                "must be positive and finite",
            ));
        }
        for (key, e) in [
            ("path_loss.los_exponent", self.los_exponent),
            ("path_loss.nlos_exponent", self.nlos_exponent),
        ] {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::config(key, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// Simplified narrowband clustered model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterConfig {
    /// Cluster count, or its mean when `poisson_clusters` is set.
    pub clusters: usize,
    pub rays_per_cluster: usize,
    /// Standard deviation of the wrapped-Gaussian ray offsets (spatial rad).
    pub angle_spread: f64,
    /// Cluster `c` gets power ∝ `exp(-power_decay · c)`; 0 gives equal powers.
    #[serde(default)]
    pub power_decay: f64,
    #[serde(default)]
    pub poisson_clusters: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            clusters: 19,
            rays_per_cluster: 20,
            angle_spread: 0.3,
            power_decay: 0.0,
            poisson_clusters: false,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.rays_per_cluster == 0 {
            return Err(Error::DegenerateCluster(format!(
                "need at least one cluster and one ray (clusters {}, rays {})",
                self.clusters, self.rays_per_cluster
            )));
        }
        if !(self.angle_spread >= 0.0 && self.angle_spread.is_finite()) {
            return Err(Error::DegenerateCluster(format!(
                "angle spread must be nonnegative, got {}",
                self.angle_spread
            )));
        }
        if self.angle_spread == 0.0 && self.rays_per_cluster > 1 {
            return Err(Error::DegenerateCluster(
                "zero angle spread with several rays stacks them on one direction".into(),
            ));
        }
        if !(self.power_decay >= 0.0 && self.power_decay.is_finite()) {
            return Err(Error::DegenerateCluster(format!(
                "power decay must be nonnegative, got {}",
                self.power_decay
            )));
        }
        Ok(())
    }

    /// Normalized cluster powers for `n` clusters.
    pub fn cluster_powers(&self, n: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..n)
            .map(|c| (-self.power_decay * c as f64).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum ChannelModel {
    Keyhole,
    /// NLOS or LOS multipath depending on the scenario's visibility.
    #[default]
    Multipath,
    Clustered(ClusterConfig),
}

/// A link to be simulated.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub visibility: Visibility,
    pub role: LinkRole,
    pub distance_m: f64,
    /// Path count η.
    pub paths: usize,
    /// Rician K-factor, used for LOS links only. May be infinite.
    pub k_rician: f64,
    pub fading: FadingLaw,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub path_loss: PathLossModel,
    pub angle_law: AngleLaw,
    /// Fixed direct-path AOA and AOD.
    pub los_aoa: SpatialAngle,
    pub los_aod: SpatialAngle,
    pub model: ChannelModel,
}

impl Default for LinkScenario {
    fn default() -> Self {
        let ula = ArrayGeometry::ula(64).expect("64-element ULA");
        Self {
            visibility: Visibility::Nlos,
            role: LinkRole::Serving,
            distance_m: 100.0,
            paths: 10,
            k_rician: 10.0,
            fading: FadingLaw::IidComplexNormal,
            tx: ula,
            rx: ula,
            path_loss: PathLossModel::default(),
            angle_law: AngleLaw::Uniform,
            los_aoa: SpatialAngle::planar(1.0, 0.5),
            los_aod: SpatialAngle::planar(2.0, 1.5),
            model: ChannelModel::Multipath,
        }
    }
}

impl LinkScenario {
    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::config("scenario.paths", "must be at least 1"));
        }
        if self.k_rician.is_nan() || self.k_rician < 0.0 {
            return Err(Error::config("scenario.k_rician", "must be nonnegative"));
        }
        if !(self.distance_m > 0.0 && self.distance_m.is_finite()) {
            return Err(Error::config("scenario.distance_m", "must be positive"));
        }
        self.path_loss.validate()?;
        if let ChannelModel::Clustered(c) = &self.model {
            c.validate()?;
        }
        Ok(())
    }

    pub fn path_gain(&self) -> Result<f64> {
        self.path_loss.gain(self.visibility, self.distance_m)
    }

    /// `N_t · N_r`.
    pub fn array_product(&self) -> f64 {
        (self.tx.n_elements() * self.rx.n_elements()) as f64
    }

    /// Draws one realization from the scenario's channel model.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ChannelRealization> {
        match self.model {
            ChannelModel::Keyhole => sample_keyhole(self, rng),
            ChannelModel::Multipath => match self.visibility {
                Visibility::Nlos => sample_nlos(self, rng),
                Visibility::Los => sample_los(self, rng),
            },
            ChannelModel::Clustered(cfg) => sample_clustered(self, &cfg, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Keyhole,
    Nlos,
    Los,
    Clustered,
}

/// One propagation path. The matrix contribution is
/// `coefficient · a_r(aoa) a_t(aod)ᴴ`; `coefficient` includes `fading` and
/// every amplitude weight except `√ℓ(d)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub coefficient: Complex64,
    pub fading: Complex64,
    pub aoa: SpatialAngle,
    pub aod: SpatialAngle,
    pub cluster: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub kind: ChannelKind,
    /// Small-scale matrix `H̃`, `n_rx × n_tx`.
    pub matrix: DMatrix<Complex64>,
    /// Scattered paths, in path-index order.
    pub paths: Vec<Path>,
    /// Direct path for LOS links.
    pub los: Option<Path>,
    /// `ℓ(d)`.
    pub path_gain: f64,
    pub rx: ArrayGeometry,
    pub tx: ArrayGeometry,
}

impl ChannelRealization {
    pub fn from_paths(
        kind: ChannelKind,
        rx: ArrayGeometry,
        tx: ArrayGeometry,
        los: Option<Path>,
        paths: Vec<Path>,
        path_gain: f64,
    ) -> Self {
        let matrix = outer_product_sum(&rx, &tx, los.iter().chain(paths.iter()));
        Self {
            kind,
            matrix,
            paths,
            los,
            path_gain,
            rx,
            tx,
        }
    }

    pub fn n_rx(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.ncols()
    }

    /// `H = √ℓ · H̃`.
    pub fn full_matrix(&self) -> DMatrix<Complex64> {
        self.matrix.scale(self.path_gain.sqrt())
    }

    /// `‖H‖²_F`.
    pub fn frobenius_sq(&self) -> f64 {
        self.path_gain * self.matrix.norm_squared()
    }

    /// `‖H‖²_F / (N_t N_r ℓ)`.
    pub fn normalized_frobenius_sq(&self) -> f64 {
        self.matrix.norm_squared() / (self.n_rx() * self.n_tx()) as f64
    }

    /// Rebuilds `H̃` from the stored path metadata.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        outer_product_sum(&self.rx, &self.tx, self.los.iter().chain(self.paths.iter()))
    }

    /// Singular values of `H`, descending.
    pub fn singular_values(&self) -> Vec<f64> {
        let mut s: Vec<f64> = self
            .full_matrix()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Count of singular values above `rel_tol · σ_max`.
    pub fn numerical_rank(&self, rel_tol: f64) -> usize {
        let s = self.singular_values();
        let Some(&top) = s.first() else { return 0 };
        s.iter().filter(|&&x| x > rel_tol * top).count()
    }

    /// Copy with `H̃` and every path coefficient multiplied by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let scale = |p: &Path| Path {
            coefficient: p.coefficient * c,
            ..*p
        };
        Self {
            matrix: self.matrix.map(|z| z * c),
            paths: self.paths.iter().map(scale).collect(),
            los: self.los.as_ref().map(scale),
            ..self.clone()
        }
    }

    /// Direct path (index 0) followed by scattered paths.
    pub fn candidate_paths(&self) -> impl Iterator<Item = &Path> {
        self.los.iter().chain(self.paths.iter())
    }

    pub fn has_path_metadata(&self) -> bool {
        self.los.is_some() || !self.paths.is_empty()
    }
}

fn outer_product_sum<'a>(
    rx: &ArrayGeometry,
    tx: &ArrayGeometry,
    paths: impl Iterator<Item = &'a Path>,
) -> DMatrix<Complex64> {
    let (nr, nt) = (rx.n_elements(), tx.n_elements());
    let mut m = DMatrix::<Complex64>::zeros(nr, nt);
    for p in paths {
        let ar: DVector<Complex64> = rx.response(p.aoa);
        let at: DVector<Complex64> = tx.response(p.aod);
        for (c, t) in at.iter().enumerate() {
            let s = p.coefficient * t.conj();
            let col = &mut m.as_mut_slice()[c * nr..(c + 1) * nr];
            for (h, r) in col.iter_mut().zip(ar.iter()) {
                *h += r * s;
            }
        }
    }
    m
}

fn scattered_paths<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    weight: f64,
    rng: &mut R,
) -> Vec<Path> {
    let gains = scenario.fading.sample(scenario.paths, rng);
    gains
        .into_iter()
        .map(|g| {
            let aoa = scenario.angle_law.sample(&scenario.rx, rng);
            let aod = scenario.angle_law.sample(&scenario.tx, rng);
            Path {
                coefficient: g * weight,
                fading: g,
                aoa,
                aod,
                cluster: None,
            }
        })
        .collect()
}

/// Rank-one channel `√ℓ γ a_r(φ) a_t(θ)ᴴ`. The path count is ignored.
pub fn sample_keyhole<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let gamma = scenario.fading.sample(1, rng)[0];
    let aoa = scenario.angle_law.sample(&scenario.rx, rng);
    let aod = scenario.angle_law.sample(&scenario.tx, rng);
    let path = Path {
        coefficient: gamma,
        fading: gamma,
        aoa,
        aod,
        cluster: None,
    };
    Ok(ChannelRealization::from_paths(
        ChannelKind::Keyhole,
        scenario.rx,
        scenario.tx,
        None,
        vec![path],
        scenario.path_gain()?,
    ))
}

pub fn sample_nlos<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let weight = (1.0 / scenario.paths as f64).sqrt();
    let paths = scattered_paths(scenario, weight, rng);
    Ok(ChannelRealization::from_paths(
        ChannelKind::Nlos,
        scenario.rx,
        scenario.tx,
        None,
        paths,
        scenario.path_gain()?,
    ))
}

/// Direct and scattered amplitude weights for Rician factor `k`.
pub fn rician_weights(k: f64) -> (f64, f64) {
    if k.is_infinite() {
        (1.0, 0.0)
    } else {
        ((k / (k + 1.0)).sqrt(), (1.0 / (k + 1.0)).sqrt())
    }
}

fn los_path(scenario: &LinkScenario, weight: f64) -> Path {
    let one = Complex64::new(1.0, 0.0);
    Path {
        coefficient: one * weight,
        fading: one,
        aoa: scenario.los_aoa,
        aod: scenario.los_aod,
        cluster: None,
    }
}

pub fn sample_los<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    rng: &mut R,
) -> Result<ChannelRealization> {
    let (direct, scattered) = rician_weights(scenario.k_rician);
    let weight = scattered * (1.0 / scenario.paths as f64).sqrt();
    let paths = scattered_paths(scenario, weight, rng);
    Ok(ChannelRealization::from_paths(
        ChannelKind::Los,
        scenario.rx,
        scenario.tx,
        Some(los_path(scenario, direct)),
        paths,
        scenario.path_gain()?,
    ))
}

/// Clustered channel. Scenario visibility and K-factor pick the LOS part;
/// `scenario.paths` is not used.
pub fn sample_clustered<R: Rng + ?Sized>(
    scenario: &LinkScenario,
    cfg: &ClusterConfig,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    let n_clusters = if cfg.poisson_clusters {
        let poisson = Poisson::new(cfg.clusters as f64)
            .map_err(|e| Error::DegenerateCluster(e.to_string()))?;
        (poisson.sample(rng) as usize).max(1)
    } else {
        cfg.clusters
    };
    let rays = cfg.rays_per_cluster;
    let (direct, scattered) = match scenario.visibility {
        Visibility::Los => rician_weights(scenario.k_rician),
        Visibility::Nlos => (0.0, 1.0),
    };
    let powers = cfg.cluster_powers(n_clusters);
    let gains = scenario.fading.sample(n_clusters * rays, rng);
    let offset = (cfg.angle_spread > 0.0)
        .then(|| Normal::new(0.0, cfg.angle_spread).expect("finite positive spread"));

    let jitter = |center: SpatialAngle, geom: &ArrayGeometry, rng: &mut R| match offset {
        None => center,
        Some(normal) => {
            let d_az = normal.sample(rng);
            let d_el = match geom.kind() {
                ArrayKind::Ula => 0.0,
                ArrayKind::Upa => normal.sample(rng),
            };
            center.offset(d_az, d_el)
        }
    };

    let mut paths = Vec::with_capacity(n_clusters * rays);
    let mut gain_iter = gains.into_iter();
    for (c, power) in powers.iter().enumerate() {
        let center_aoa = scenario.angle_law.sample(&scenario.rx, rng);
        let center_aod = scenario.angle_law.sample(&scenario.tx, rng);
        let weight = scattered * (power / rays as f64).sqrt();
        for _ in 0..rays {
            let g = gain_iter.next().expect("one gain per ray");
            let aoa = jitter(center_aoa, &scenario.rx, rng);
            let aod = jitter(center_aod, &scenario.tx, rng);
            paths.push(Path {
                coefficient: g * weight,
                fading: g,
                aoa,
                aod,
                cluster: Some(c),
            });
        }
    }
    let los = (scenario.visibility == Visibility::Los).then(|| los_path(scenario, direct));
    Ok(ChannelRealization::from_paths(
        ChannelKind::Clustered,
        scenario.rx,
        scenario.tx,
        los,
        paths,
        scenario.path_gain()?,
    ))
}
