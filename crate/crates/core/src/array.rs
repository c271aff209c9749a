//! Array geometries, steering vectors and beam gains.
//!
//! Angles are spatial (electrical) angles: the phase increment between
//! adjacent elements. A ULA steering vector is
//! `a(φ) = [1, e^{-jφ}, …, e^{-j(N-1)φ}]ᵀ`. A UPA steering vector is the
//! Kronecker product of a row-direction ULA response (elevation component)
//! and a column-direction ULA response (azimuth component), stored
//! row-major: element `r * cols + c` has phase `-(r·el + c·az)`.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SPACING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrayKind {
    Ula,
    Upa,
}

/// Uniform linear or planar array. A ULA is stored as a single row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeometrySpec", into = "GeometrySpec")]
pub struct ArrayGeometry {
    kind: ArrayKind,
    rows: usize,
    cols: usize,
    spacing: f64,
}

impl ArrayGeometry {
    pub fn ula(n_elements: usize) -> Result<Self> {
        Self::new(ArrayKind::Ula, 1, n_elements, DEFAULT_SPACING)
    }

    pub fn upa(rows: usize, cols: usize) -> Result<Self> {
        Self::new(ArrayKind::Upa, rows, cols, DEFAULT_SPACING)
    }

    pub fn with_spacing(self, spacing: f64) -> Result<Self> {
        Self::new(self.kind, self.rows, self.cols, spacing)
    }

    fn new(kind: ArrayKind, rows: usize, cols: usize, spacing: f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Geometry(format!(
                "element counts must be positive (rows {rows}, cols {cols})"
            )));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::Geometry(format!(
                "spacing must be positive, got {spacing}"
            )));
        }
        Ok(Self {
            kind,
            rows,
            cols,
            spacing,
        })
    }

    pub fn kind(&self) -> ArrayKind {
        self.kind
    }

    pub fn n_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Rows of a UPA; 1 for a ULA.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Largest element count along a single array dimension.
    pub fn max_dimension(&self) -> usize {
        self.rows.max(self.cols)
    }

    /// Steering vector `a(angle)`. A ULA ignores the elevation component.
    pub fn response(&self, angle: SpatialAngle) -> DVector<Complex64> {
        match self.kind {
            ArrayKind::Ula => {
                DVector::from_iterator(self.cols, (0..self.cols).map(|n| phasor(n, angle.az)))
            }
            ArrayKind::Upa => {
                let cols = self.cols;
                DVector::from_iterator(
                    self.n_elements(),
                    (0..self.n_elements())
                        .map(|k| phasor(k / cols, angle.el) * phasor(k % cols, angle.az)),
                )
            }
        }
    }

    /// `|a(pointing)ᴴ a(arrival)|² / N`, the gain `G(pointing, arrival)` of a
    /// beam steered to `pointing` toward a plane wave from `arrival`.
    pub fn beam_gain(&self, pointing: SpatialAngle, arrival: SpatialAngle) -> f64 {
        let a = self.response(pointing);
        let b = self.response(arrival);
        a.dotc(&b).norm_sqr() / self.n_elements() as f64
    }

    pub fn uniform_random_angle<R: Rng + ?Sized>(&self, rng: &mut R) -> SpatialAngle {
        AngleLaw::Uniform.sample(self, rng)
    }
}

fn phasor(n: usize, phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, -(n as f64) * phi)
}

/// Free function form of [`ArrayGeometry::response`].
pub fn array_response(geom: &ArrayGeometry, angle: SpatialAngle) -> DVector<Complex64> {
    geom.response(angle)
}

/// Free function form of [`ArrayGeometry::beam_gain`].
pub fn beam_gain(geom: &ArrayGeometry, pointing: SpatialAngle, arrival: SpatialAngle) -> f64 {
    geom.beam_gain(pointing, arrival)
}

pub fn uniform_random_angle<R: Rng + ?Sized>(geom: &ArrayGeometry, rng: &mut R) -> SpatialAngle {
    geom.uniform_random_angle(rng)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum GeometrySpec {
    Ula {
        elements: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
    Upa {
        rows: usize,
        cols: usize,
        #[serde(default = "default_spacing")]
        spacing: f64,
    },
}

fn default_spacing() -> f64 {
    DEFAULT_SPACING
}

impl TryFrom<GeometrySpec> for ArrayGeometry {
    type Error = Error;

    fn try_from(spec: GeometrySpec) -> Result<Self> {
        match spec {
            GeometrySpec::Ula { elements, spacing } => {
                ArrayGeometry::new(ArrayKind::Ula, 1, elements, spacing)
            }
            GeometrySpec::Upa {
                rows,
                cols,
                spacing,
            } => ArrayGeometry::new(ArrayKind::Upa, rows, cols, spacing),
        }
    }
}

impl From<ArrayGeometry> for GeometrySpec {
    fn from(g: ArrayGeometry) -> Self {
        match g.kind {
            ArrayKind::Ula => GeometrySpec::Ula {
                elements: g.cols,
                spacing: g.spacing,
            },
            ArrayKind::Upa => GeometrySpec::Upa {
                rows: g.rows,
                cols: g.cols,
                spacing: g.spacing,
            },
        }
    }
}

/// Spatial angle pair, each component wrapped to `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialAngle {
    pub az: f64,
    #[serde(default)]
    pub el: f64,
}

impl SpatialAngle {
    pub fn linear(phi: f64) -> Self {
        Self::planar(phi, 0.0)
    }

    pub fn planar(az: f64, el: f64) -> Self {
        Self {
            az: wrap(az),
            el: wrap(el),
        }
    }

    /// Spatial angle of a plane wave at physical angle `theta` (radians from
    /// broadside) for element spacing `spacing` in wavelengths.
    pub fn from_physical(theta: f64, spacing: f64) -> Self {
        Self::linear(TAU * spacing * theta.sin())
    }

    pub fn offset(self, d_az: f64, d_el: f64) -> Self {
        Self::planar(self.az + d_az, self.el + d_el)
    }
}

pub(crate) fn wrap(x: f64) -> f64 {
    let w = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Distribution of AOA/AOD spatial angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AngleLaw {
    /// Uniform on `[0, 2π)` per coordinate.
    #[default]
    Uniform,
    /// Uniform on `[center - width/2, center + width/2)` per coordinate, wrapped.
    Sector { center: f64, width: f64 },
}

impl AngleLaw {
    pub fn sample<R: Rng + ?Sized>(&self, geom: &ArrayGeometry, rng: &mut R) -> SpatialAngle {
        let draw = |rng: &mut R| match *self {
            AngleLaw::Uniform => rng.random::<f64>() * TAU,
            AngleLaw::Sector { center, width } => center + (rng.random::<f64>() - 0.5) * width,
        };
        match geom.kind() {
            ArrayKind::Ula => SpatialAngle::linear(draw(rng)),
            ArrayKind::Upa => {
                let az = draw(rng);
                let el = draw(rng);
                SpatialAngle::planar(az, el)
            }
        }
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, AngleLaw::Uniform)
    }
}
