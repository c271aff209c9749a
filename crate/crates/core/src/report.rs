//! CSV artifacts. UTF-8, comma-delimited, header row, `.` decimal separator.

use std::path::Path;

use serde::Serialize;

use crate::correction::{CorrectionEstimate, CrossTermReport, GainDistribution, TrialRecord};
use crate::error::Result;
use crate::network::{Crossover, CoverageRun};
use crate::stats;

pub const TRIALS_CSV: &str = "upsilon_trials.csv";
pub const SUMMARY_CSV: &str = "upsilon_summary.csv";
pub const FIG1_CSV: &str = "fig1.csv";
pub const GAINS_SUMMARY_CSV: &str = "gains_summary.csv";
pub const INTERFERENCE_CSV: &str = "interference.csv";
pub const COVERAGE_CSV: &str = "coverage.csv";
pub const CROSSOVER_CSV: &str = "crossover.csv";
pub const ASSOCIATION_CSV: &str = "association.csv";

/// 64-bit FNV-1a, used as a stable scenario fingerprint.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    pub scenario_hash: String,
    pub trial_id: usize,
    #[serde(rename = "P_multi")]
    pub p_multi: f64,
    #[serde(rename = "P_keyhole_ref")]
    pub p_keyhole_ref: f64,
    #[serde(rename = "effective_gain_dB")]
    pub effective_gain_db: f64,
}

impl TrialRow {
    pub fn new(scenario_hash: &str, t: &TrialRecord) -> Self {
        Self {
            scenario_hash: scenario_hash.to_string(),
            trial_id: t.trial_id,
            p_multi: t.p_multi,
            p_keyhole_ref: t.p_keyhole_ref,
            effective_gain_db: t.effective_gain_db,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub scenario_hash: String,
    pub paths: usize,
    pub upsilon_mc: f64,
    pub ci_halfwidth: f64,
    pub upsilon_analytic: Option<f64>,
    pub n_trials: usize,
    pub seed: u64,
}

impl SummaryRow {
    pub fn new(scenario_hash: &str, e: &CorrectionEstimate) -> Self {
        Self {
            scenario_hash: scenario_hash.to_string(),
            paths: e.scenario.paths,
            upsilon_mc: e.monte_carlo,
            ci_halfwidth: e.halfwidth,
            upsilon_analytic: e.analytic,
            n_trials: e.n_trials,
            seed: e.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fig1Row {
    #[serde(rename = "gain_dB")]
    pub gain_db: f64,
    #[serde(rename = "F_LOS")]
    pub f_los: f64,
    #[serde(rename = "F_NLOS")]
    pub f_nlos: f64,
}

/// Both empirical CDFs on a common grid from below the smallest sample to
/// above the largest, `step_db` apart.
pub fn fig1_rows(los: &GainDistribution, nlos: &GainDistribution, step_db: f64) -> Vec<Fig1Row> {
    let (l, n) = (stats::sorted(&los.samples_db), stats::sorted(&nlos.samples_db));
    let lo = l[0].min(n[0]);
    let hi = l[l.len() - 1].max(n[n.len() - 1]);
    let start = (lo / step_db).floor() * step_db - step_db;
    let count = ((hi - start) / step_db).ceil() as usize + 1;
    (0..=count)
        .map(|k| {
            let t = start + k as f64 * step_db;
            Fig1Row {
                gain_db: t,
                f_los: stats::ecdf_sorted(&l, t),
                f_nlos: stats::ecdf_sorted(&n, t),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GainSummaryRow {
    pub visibility: &'static str,
    pub n_trials: usize,
    #[serde(rename = "median_dB")]
    pub median: f64,
    #[serde(rename = "mean_dB")]
    pub mean: f64,
    #[serde(rename = "p5_dB")]
    pub p5: f64,
    #[serde(rename = "p25_dB")]
    pub p25: f64,
    #[serde(rename = "p75_dB")]
    pub p75: f64,
    #[serde(rename = "p95_dB")]
    pub p95: f64,
}

impl GainSummaryRow {
    pub fn new(visibility: &'static str, d: &GainDistribution) -> Self {
        let s = d.summary;
        Self {
            visibility,
            n_trials: d.samples_db.len(),
            median: s.median,
            mean: s.mean,
            p5: s.p5,
            p25: s.p25,
            p75: s.p75,
            p95: s.p95,
        }
    }
}

pub fn interference_rows(reports: &[CrossTermReport]) -> Vec<CrossTermReport> {
    reports.to_vec()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageRow {
    #[serde(rename = "threshold_dB")]
    pub threshold_db: f64,
    #[serde(rename = "P_cov_corrected")]
    pub p_cov_corrected: f64,
    #[serde(rename = "P_cov_uncorrected")]
    pub p_cov_uncorrected: f64,
}

pub fn coverage_rows(run: &CoverageRun) -> Vec<CoverageRow> {
    run.thresholds_db
        .iter()
        .zip(run.p_corrected.iter().zip(&run.p_uncorrected))
        .map(|(&t, (&c, &u))| CoverageRow {
            threshold_db: t,
            p_cov_corrected: c,
            p_cov_uncorrected: u,
        })
        .collect()
}

pub fn crossover_rows(c: &Crossover) -> Vec<Crossover> {
    vec![c.clone()]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssociationRow {
    pub transmitter: usize,
    pub distance_m: f64,
    pub visibility: crate::channel::Visibility,
    pub power_corrected: f64,
    pub power_uncorrected: f64,
    pub serving_corrected: bool,
    pub serving_uncorrected: bool,
}
