//! Subcommand implementations: run a configuration, write CSVs, return a
//! printable report.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::channel::{FadingLaw, LinkRole, LinkScenario, Visibility};
use crate::config::{Command, RunConfig};
use crate::correction::{self, CorrectionEstimate};
use crate::error::{Error, Result};
use crate::network::{self, CorrectionPolicy};
use crate::report::{self, AssociationRow, GainSummaryRow, SummaryRow, TrialRow};
use crate::stats::to_db;
use crate::validate;

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub success: bool,
    pub report: String,
    pub artifacts: Vec<PathBuf>,
}

pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    config.validate()?;
    if config.run.command != Command::Validate && !out_dir.is_dir() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("output directory {} does not exist", out_dir.display()),
        )));
    }
    match config.run.command {
        Command::Upsilon => upsilon(config, out_dir),
        Command::Gains => gains(config, out_dir),
        Command::Interference => interference(config, out_dir),
        Command::Sinr => sinr(config, out_dir),
        Command::Validate => Ok(validate_suite(config)),
    }
}

/// Fingerprint of everything that determines a scenario's trials.
pub fn scenario_hash(scenario: &LinkScenario) -> String {
    format!("{:016x}", report::fnv1a64(format!("{scenario:?}").as_bytes()))
}

fn describe(s: &LinkScenario) -> String {
    let model = match s.model {
        crate::channel::ChannelModel::Keyhole => "keyhole".to_string(),
        crate::channel::ChannelModel::Multipath => format!("η={}", s.paths),
        crate::channel::ChannelModel::Clustered(c) => {
            format!("{} clusters × {} rays", c.clusters, c.rays_per_cluster)
        }
    };
    let vis = match s.visibility {
        Visibility::Los => format!("LOS K={}", s.k_rician),
        Visibility::Nlos => "NLOS".to_string(),
    };
    let role = match s.role {
        LinkRole::Serving => "serving",
        LinkRole::Interfering => "interfering",
    };
    format!(
        "{vis} {role}, {model}, {:?}, N_t={} N_r={}",
        s.fading,
        s.tx.n_elements(),
        s.rx.n_elements()
    )
}

fn fmt_opt_db(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".to_string(), |v| format!("{:8.3}", to_db(v)))
}

fn upsilon(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let exec = config.executor();
    let strategy = config.strategy();
    let estimates: Vec<CorrectionEstimate> = config
        .sweep()?
        .iter()
        .map(|s| correction::estimate_upsilon(s, strategy, config.run.trials, config.run.seed, &exec))
        .collect::<Result<_>>()?;

    let hashes: Vec<String> = estimates.iter().map(|e| scenario_hash(&e.scenario)).collect();
    let trials_path = out.join(report::TRIALS_CSV);
    report::write_rows(
        &trials_path,
        estimates
            .iter()
            .zip(&hashes)
            .flat_map(|(e, h)| e.trials.iter().map(move |t| TrialRow::new(h, t))),
    )?;
    let summary_path = out.join(report::SUMMARY_CSV);
    report::write_rows(
        &summary_path,
        estimates.iter().zip(&hashes).map(|(e, h)| SummaryRow::new(h, e)),
    )?;

    let mut text = String::new();
    writeln!(text, "correction factor, strategy {strategy}, {} trials, seed {}", config.run.trials, config.run.seed).ok();
    writeln!(text, "{:<60} {:>10} {:>8} {:>10} {:>8}", "scenario", "Υ_mc dB", "±CI dB", "Υ_cf dB", "Δ dB").ok();
    for e in &estimates {
        let mc = e.monte_carlo_db();
        let ci = to_db(1.0 + e.halfwidth / e.monte_carlo);
        let delta = e.analytic_db().map_or_else(|| "n/a".to_string(), |a| format!("{:8.3}", mc - a));
        writeln!(
            text,
            "{:<60} {:>10.3} {:>8.3} {:>10} {:>8}",
            describe(&e.scenario),
            mc,
            ci,
            fmt_opt_db(e.analytic),
            delta
        )
        .ok();
        if e.scenario.role == LinkRole::Serving
            && e.scenario.visibility == Visibility::Nlos
            && e.scenario.model == crate::channel::ChannelModel::Multipath
        {
            let iid = correction::analytic_upsilon(&LinkScenario {
                fading: FadingLaw::IidComplexNormal,
                ..e.scenario.clone()
            });
            let identical = correction::analytic_upsilon(&LinkScenario {
                fading: FadingLaw::IdenticalComplexNormal,
                ..e.scenario.clone()
            });
            writeln!(
                text,
                "    closed forms at η={}: iid {} dB, identical {} dB",
                e.scenario.paths,
                fmt_opt_db(iid).trim(),
                fmt_opt_db(identical).trim()
            )
            .ok();
        }
    }
    Ok(RunOutcome {
        success: true,
        report: text,
        artifacts: vec![trials_path, summary_path],
    })
}

fn gains(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let exec = config.executor();
    let strategy = config.strategy();
    let base = config.link_scenario()?;
    let for_visibility = |v: Visibility| LinkScenario {
        visibility: v,
        role: LinkRole::Serving,
        ..base.clone()
    };
    let los = correction::effective_gain_distribution(
        &for_visibility(Visibility::Los),
        strategy,
        config.run.trials,
        config.run.seed,
        &exec,
    )?;
    let nlos = correction::effective_gain_distribution(
        &for_visibility(Visibility::Nlos),
        strategy,
        config.run.trials,
        config.run.seed,
        &exec,
    )?;
    let fig1_path = out.join(report::FIG1_CSV);
    report::write_rows(&fig1_path, report::fig1_rows(&los, &nlos, 0.1))?;
    let summary_path = out.join(report::GAINS_SUMMARY_CSV);
    report::write_rows(
        &summary_path,
        [
            GainSummaryRow::new("los", &los),
            GainSummaryRow::new("nlos", &nlos),
        ],
    )?;
    let boresight = to_db(base.array_product());
    let mut text = String::new();
    writeln!(text, "effective antenna gain, {} trials per link", config.run.trials).ok();
    writeln!(text, "  aligned-array gain 10log10(N_t N_r) = {boresight:.2} dB").ok();
    writeln!(text, "  LOS  median {:.2} dB (p5 {:.2}, p95 {:.2})", los.summary.median, los.summary.p5, los.summary.p95).ok();
    writeln!(text, "  NLOS median {:.2} dB (p5 {:.2}, p95 {:.2})", nlos.summary.median, nlos.summary.p5, nlos.summary.p95).ok();
    writeln!(text, "  NLOS − LOS median: {:.2} dB", nlos.summary.median - los.summary.median).ok();
    Ok(RunOutcome {
        success: true,
        report: text,
        artifacts: vec![fig1_path, summary_path],
    })
}

fn interference(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let exec = config.executor();
    let reports = config
        .sweep()?
        .iter()
        .map(|s| correction::cross_term_check(s, config.run.trials, config.run.seed, &exec))
        .collect::<Result<Vec<_>>>()?;
    let estimates = config
        .sweep()?
        .into_iter()
        .map(|s| {
            let s = LinkScenario {
                role: LinkRole::Interfering,
                visibility: Visibility::Nlos,
                ..s
            };
            correction::estimate_upsilon(&s, config.strategy(), config.run.trials, config.run.seed, &exec)
        })
        .collect::<Result<Vec<_>>>()?;
    let path = out.join(report::INTERFERENCE_CSV);
    report::write_rows(&path, report::interference_rows(&reports))?;
    let mut text = String::new();
    writeln!(text, "NLOS interfering links, {} trials", config.run.trials).ok();
    writeln!(text, "{:>4} {:>12} {:>12} {:>10} {:>10} {:>10}", "η", "full", "diagonal", "ratio", "Υ_mc", "hyp.").ok();
    for (r, e) in reports.iter().zip(&estimates) {
        writeln!(
            text,
            "{:>4} {:>12.5} {:>12.5} {:>10.4} {:>10.4} {:>10}",
            r.paths,
            r.full_mean,
            r.diagonal_mean,
            r.ratio,
            e.monte_carlo,
            if r.hypotheses_met { "met" } else { "unmet" }
        )
        .ok();
    }
    Ok(RunOutcome {
        success: true,
        report: text,
        artifacts: vec![path],
    })
}

fn sinr(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    let exec = config.executor();
    let template = config.scene_template();
    let mut artifacts = Vec::new();
    let mut text = String::new();

    let (crossover, _) =
        network::find_crossover(&template, config.scene.crossover_los_distance_m)?;
    let path = out.join(report::CROSSOVER_CSV);
    report::write_rows(&path, report::crossover_rows(&crossover))?;
    artifacts.push(path);
    writeln!(
        text,
        "crossover: NLOS transmitter wins below {:.2} m uncorrected, {:.2} m corrected; at {:.2} m serving {} → {}",
        crossover.threshold_uncorrected_m,
        crossover.threshold_corrected_m,
        crossover.nlos_distance_m,
        crossover.serving_uncorrected,
        crossover.serving_corrected
    )
    .ok();

    if !template.transmitters.is_empty() {
        let corrected = network::associate(&template)?;
        let plain = network::associate(&template.with_policy(CorrectionPolicy::None))?;
        let rows: Vec<AssociationRow> = template
            .transmitters
            .iter()
            .enumerate()
            .map(|(k, t)| AssociationRow {
                transmitter: k,
                distance_m: t.distance(),
                visibility: t.visibility,
                power_corrected: corrected.serving_powers[k],
                power_uncorrected: plain.serving_powers[k],
                serving_corrected: k == corrected.serving,
                serving_uncorrected: k == plain.serving,
            })
            .collect();
        let path = out.join(report::ASSOCIATION_CSV);
        report::write_rows(&path, rows)?;
        artifacts.push(path);
        writeln!(
            text,
            "scene: serving {} (SINR {:.2} dB) corrected, {} (SINR {:.2} dB) uncorrected",
            corrected.serving,
            to_db(corrected.sinr),
            plain.serving,
            to_db(plain.sinr)
        )
        .ok();
    }

    let generator = config.scene_generator();
    let thresholds = config.coverage.thresholds_db.values();
    let run = network::coverage_curve(
        &generator,
        config.coverage.scenes,
        &thresholds,
        config.run.seed,
        &exec,
    )?;
    let path = out.join(report::COVERAGE_CSV);
    report::write_rows(&path, report::coverage_rows(&run))?;
    artifacts.push(path);
    writeln!(
        text,
        "coverage: {} scenes, {} served by NLOS, median SINR shift {:.3} dB",
        config.coverage.scenes,
        run.nlos_served,
        run.median_shift_db()
    )
    .ok();
    Ok(RunOutcome {
        success: true,
        report: text,
        artifacts,
    })
}

fn validate_suite(config: &RunConfig) -> RunOutcome {
    let checks = validate::run_all(config);
    let mut text = String::new();
    for c in &checks {
        writeln!(
            text,
            "[{}] {:<40} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )
        .ok();
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    writeln!(text, "{} checks, {} failed", checks.len(), failed).ok();
    RunOutcome {
        success: failed == 0,
        report: text,
        artifacts: Vec::new(),
    }
}
