//! Correction factor for beamformed received power.
//!
//! Compares the mean received power of an analog-beamformed link over a
//! multipath MIMO channel with the power predicted by a rank-one (keyhole)
//! channel, the model behind the usual "path loss × fading × Tx gain × Rx
//! gain" received-power abstraction. The ratio of the two means is the
//! correction factor Υ.
//!
//! Module map:
//! - [`array`]: array geometries, steering vectors and pairwise beam gains.
//! - [`channel`]: keyhole, multipath, Rician and clustered channel samplers.
//! - [`beam`]: received power and beam selection (per-path, grid, SVD).
//! - [`correction`]: Monte Carlo and closed-form estimates of Υ.
//! - [`network`]: association and SINR with the correction applied.
//! - [`config`], [`report`]: run configuration and CSV output.
//! - [`exec`]: deterministic trial scheduling, parallel when the
//!   `parallel` feature is enabled.

pub mod array;
pub mod beam;
pub mod channel;
pub mod config;
pub mod correction;
pub mod error;
pub mod exec;
pub mod network;
pub mod report;
pub mod runner;
pub mod stats;
pub mod validate;

pub use array::{ArrayGeometry, ArrayKind, SpatialAngle};
pub use beam::{BeamStrategy, BeamformerPair, Constraint};
pub use channel::{
    AngleLaw, ChannelKind, ChannelModel, ChannelRealization, ClusterConfig, FadingLaw,
    LinkRole, LinkScenario, PathLossModel, PowerLaw, Visibility,
};
pub use correction::{CorrectionEstimate, GainDistribution};
pub use error::{Error, Result};
pub use exec::Executor;
