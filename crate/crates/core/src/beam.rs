//! Received power `|wᴴ H f|²` and single-stream beam selection.
//!
//! Analog (manifold) beams are normalized steering vectors,
//! `w = a_r(φ)/√N_r`, `f = a_t(θ)/√N_t`. Serving links pick the pair that
//! maximizes received power; interfering links point at angles drawn
//! independently of the channel.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array::{AngleLaw, ArrayGeometry, ArrayKind, SpatialAngle};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Constraint {
    Manifold,
    Unconstrained,
}

/// Unit-norm combiner `w` (length `N_r`) and precoder `f` (length `N_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerPair {
    pub w: DVector<Complex64>,
    pub f: DVector<Complex64>,
    pub constraint: Constraint,
    /// `(rx, tx)` pointing angles of a manifold pair.
    pub pointing: Option<(SpatialAngle, SpatialAngle)>,
}

impl BeamformerPair {
    pub fn manifold(
        rx: &ArrayGeometry,
        tx: &ArrayGeometry,
        rx_angle: SpatialAngle,
        tx_angle: SpatialAngle,
    ) -> Self {
        Self {
            w: steering_beam(rx, rx_angle),
            f: steering_beam(tx, tx_angle),
            constraint: Constraint::Manifold,
            pointing: Some((rx_angle, tx_angle)),
        }
    }

    pub fn unconstrained(w: DVector<Complex64>, f: DVector<Complex64>) -> Self {
        Self {
            w: w.normalize(),
            f: f.normalize(),
            constraint: Constraint::Unconstrained,
            pointing: None,
        }
    }
}

fn steering_beam(geom: &ArrayGeometry, angle: SpatialAngle) -> DVector<Complex64> {
    geom.response(angle)
        .unscale((geom.n_elements() as f64).sqrt())
}

/// `|wᴴ H̃ f|²`: received power normalized by path gain and transmit power.
pub fn effective_gain(h: &ChannelRealization, pair: &BeamformerPair) -> Result<f64> {
    check_dims(h, pair)?;
    Ok(pair.w.dotc(&(&h.matrix * &pair.f)).norm_sqr())
}

/// `|wᴴ H f|² = ℓ(d) · |wᴴ H̃ f|²`.
pub fn received_power(h: &ChannelRealization, pair: &BeamformerPair) -> Result<f64> {
    Ok(h.path_gain * effective_gain(h, pair)?)
}

fn check_dims(h: &ChannelRealization, pair: &BeamformerPair) -> Result<()> {
    let expected = (h.n_rx(), h.n_tx());
    let found = (pair.w.len(), pair.f.len());
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Serving-link beam search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "strategy", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BeamStrategy {
    /// Steer at each stored path's (AOA, AOD) and keep the strongest.
    #[default]
    PerPath,
    /// Exhaustive search over a uniform spatial-angle grid with `points`
    /// per dimension (default `4 · max array dimension`). Planar arrays use
    /// alternating refinement over the product grid.
    Grid {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
    },
    /// Alternately optimize `w` and `f` over the grid.
    Alternating {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points: Option<usize>,
        #[serde(default = "default_iters")]
        iters: usize,
    },
}

fn default_iters() -> usize {
    4
}

impl fmt::Display for BeamStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BeamStrategy::PerPath => write!(f, "per-path"),
            BeamStrategy::Grid { points: None } => write!(f, "grid"),
            BeamStrategy::Grid { points: Some(m) } => write!(f, "grid({m})"),
            BeamStrategy::Alternating { points, iters } => match points {
                None => write!(f, "alternating(auto,{iters})"),
                Some(m) => write!(f, "alternating({m},{iters})"),
            },
        }
    }
}

impl FromStr for BeamStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-path" => Ok(BeamStrategy::PerPath),
            "grid" => Ok(BeamStrategy::Grid { points: None }),
            "alternating" => Ok(BeamStrategy::Alternating {
                points: None,
                iters: default_iters(),
            }),
            other => Err(Error::config(
                "strategy",
                format!("unknown strategy `{other}` (per-path, grid, alternating)"),
            )),
        }
    }
}

/// Default grid size: four points per Rayleigh resolution cell of the
/// larger array dimension.
pub fn default_grid_points(rx: &ArrayGeometry, tx: &ArrayGeometry) -> usize {
    4 * rx.max_dimension().max(tx.max_dimension())
}

/// A chosen beam pair and its effective gain `|wᴴ H̃ f|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub pair: BeamformerPair,
    pub gain: f64,
}

impl Selection {
    pub fn power(&self, h: &ChannelRealization) -> f64 {
        h.path_gain * self.gain
    }
}

/// Best analog pair under `strategy`. Ties go to the lowest candidate index.
pub fn best_manifold_pair(h: &ChannelRealization, strategy: BeamStrategy) -> Result<Selection> {
    match strategy {
        BeamStrategy::PerPath => per_path(h),
        BeamStrategy::Grid { points } => {
            let m = points.unwrap_or_else(|| default_grid_points(&h.rx, &h.tx));
            if h.rx.kind() == ArrayKind::Ula && h.tx.kind() == ArrayKind::Ula {
                exhaustive_grid(h, m)
            } else {
                alternating(h, m, default_iters())
            }
        }
        BeamStrategy::Alternating { points, iters } => {
            let m = points.unwrap_or_else(|| default_grid_points(&h.rx, &h.tx));
            alternating(h, m, iters)
        }
    }
}

fn per_path(h: &ChannelRealization) -> Result<Selection> {
    if !h.has_path_metadata() {
        return Err(Error::MissingPathMetadata);
    }
    let mut best: Option<(f64, SpatialAngle, SpatialAngle)> = None;
    for p in h.candidate_paths() {
        let w = steering_beam(&h.rx, p.aoa);
        let f = steering_beam(&h.tx, p.aod);
        let g = w.dotc(&(&h.matrix * &f)).norm_sqr();
        if best.is_none_or(|(b, _, _)| g > b) {
            best = Some((g, p.aoa, p.aod));
        }
    }
    let (gain, aoa, aod) = best.expect("at least one candidate path");
    Ok(Selection {
        pair: BeamformerPair::manifold(&h.rx, &h.tx, aoa, aod),
        gain,
    })
}

/// Grid of spatial angles for a geometry: `m` points per dimension,
/// azimuth index fastest for planar arrays.
pub fn angle_grid(geom: &ArrayGeometry, m: usize) -> Vec<SpatialAngle> {
    let step = TAU / m as f64;
    match geom.kind() {
        ArrayKind::Ula => (0..m)
            .map(|k| SpatialAngle::linear(k as f64 * step))
            .collect(),
        ArrayKind::Upa => (0..m * m)
            .map(|k| SpatialAngle::planar((k % m) as f64 * step, (k / m) as f64 * step))
            .collect(),
    }
}

fn codebook(geom: &ArrayGeometry, angles: &[SpatialAngle]) -> DMatrix<Complex64> {
    let cols: Vec<DVector<Complex64>> = angles.iter().map(|&a| steering_beam(geom, a)).collect();
    DMatrix::from_columns(&cols)
}

fn argmax_first(values: impl Iterator<Item = f64>) -> (usize, f64) {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}

fn exhaustive_grid(h: &ChannelRealization, m: usize) -> Result<Selection> {
    if m == 0 {
        return Err(Error::config("strategy.points", "grid needs at least one point"));
    }
    let rx_angles = angle_grid(&h.rx, m);
    let tx_angles = angle_grid(&h.tx, m);
    let w = codebook(&h.rx, &rx_angles);
    let f = codebook(&h.tx, &tx_angles);
    let gains = w.adjoint() * (&h.matrix * f);
    // row-major order over (rx, tx) so ties resolve to the lowest rx index
    let (idx, gain) = argmax_first(
        (0..gains.nrows()).flat_map(|i| (0..gains.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| gains[(i, j)].norm_sqr()),
    );
    let (i, j) = (idx / gains.ncols(), idx % gains.ncols());
    Ok(Selection {
        pair: BeamformerPair::manifold(&h.rx, &h.tx, rx_angles[i], tx_angles[j]),
        gain,
    })
}

fn alternating(h: &ChannelRealization, m: usize, iters: usize) -> Result<Selection> {
    if m == 0 {
        return Err(Error::config("strategy.points", "grid needs at least one point"));
    }
    let rx_angles = angle_grid(&h.rx, m);
    let tx_angles = angle_grid(&h.tx, m);
    let w_book = codebook(&h.rx, &rx_angles);
    let f_book = codebook(&h.tx, &tx_angles);

    let hf = &h.matrix * &f_book;
    let (mut j, _) = argmax_first(hf.column_iter().map(|c| c.norm_squared()));
    let pick_w = |j: usize| {
        let col = hf.column(j);
        argmax_first(w_book.column_iter().map(|w| w.dotc(&col).norm_sqr()))
    };
    let pick_f = |i: usize| {
        let row = w_book.column(i).adjoint() * &h.matrix;
        argmax_first(f_book.column_iter().map(|f| (&row * f)[(0, 0)].norm_sqr()))
    };
    let (mut i, mut gain) = pick_w(j);
    for _ in 0..iters.max(1) {
        let (j_next, g_f) = pick_f(i);
        let (i_next, g_w) = pick_w(j_next);
        let improved = g_w > gain || g_f > gain;
        if (i_next, j_next) == (i, j) || !improved {
            break;
        }
        i = i_next;
        j = j_next;
        gain = g_w;
    }
    Ok(Selection {
        pair: BeamformerPair::manifold(&h.rx, &h.tx, rx_angles[i], tx_angles[j]),
        gain,
    })
}

/// Unconstrained optimum: the top singular vector pair of `H`.
pub fn svd_oracle_pair(h: &ChannelRealization) -> Selection {
    let svd = h.matrix.clone().svd(true, true);
    let (k, sigma) = argmax_first(svd.singular_values.iter().copied());
    let u = svd.u.as_ref().expect("left singular vectors").column(k).into_owned();
    let v = svd
        .v_t
        .as_ref()
        .expect("right singular vectors")
        .row(k)
        .adjoint();
    Selection {
        pair: BeamformerPair::unconstrained(u, v),
        gain: sigma * sigma,
    }
}

/// Analog pair at independent uniform angles, as seen by an interfering link.
pub fn random_interferer_pair<R: Rng + ?Sized>(
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    rng: &mut R,
) -> BeamformerPair {
    random_pair_with_law(&AngleLaw::Uniform, tx, rx, rng)
}

pub fn random_pair_with_law<R: Rng + ?Sized>(
    law: &AngleLaw,
    tx: &ArrayGeometry,
    rx: &ArrayGeometry,
    rng: &mut R,
) -> BeamformerPair {
    let rx_angle = law.sample(rx, rng);
    let tx_angle = law.sample(tx, rng);
    BeamformerPair::manifold(rx, tx, rx_angle, tx_angle)
}
