//! Result artifacts: coverage maps and throughput distributions.
//!
//! Output files (all written into one directory):
//!
//! | file | columns / content |
//! |------|-------------------|
//! | `coverage_<mode>.csv` | `x_m,y_m,power_dbm` (0.01 dB precision) |
//! | `cdf_<mode>.csv` | `throughput_bps,probability`, ascending |
//! | `quantiles.json` | per-mode q10/q50/q90/spread and the mode comparison |
//! | `summary.json` | effective configuration, per-mode run statistics, comparison |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{generate_paths_with, LinkResponse};
use crate::engine::Campaign;
use crate::phy::{mrt_precoder, received_power, Precoder};
use crate::scenario::{Point, Scenario, ServingMode};
use crate::units::watts_to_dbm;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no samples to summarize")]
    EmptySamples,
    #[error("quantile level {0} outside [0, 1]")]
    InvalidLevel(f64),
    #[error("mismatched campaigns: {0}")]
    Mismatch(String),
    #[error("nothing to write: {0}")]
    EmptyOutput(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveragePoint {
    pub position: Point,
    /// Strongest single-BS received power, W.
    pub best_single_bs_w: f64,
    /// Coherent all-BS received power, W.
    pub user_centric_w: f64,
}

impl CoveragePoint {
    pub fn best_single_bs_dbm(&self) -> f64 {
        watts_to_dbm(self.best_single_bs_w)
    }

    pub fn user_centric_dbm(&self) -> f64 {
        watts_to_dbm(self.user_centric_w)
    }

    /// User-centric minus network-centric power, dB.
    pub fn gain_db(&self) -> f64 {
        self.user_centric_dbm() - self.best_single_bs_dbm()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub spacing_m: f64,
    pub points: Vec<CoveragePoint>,
}

/// Received power with MRT at every outdoor grid point, averaged over all
/// resource blocks: the best single base station versus all base stations
/// combining coherently. Each BS spends its full per-block budget on the
/// point. Channels are specular only, so `seed` has no effect on the result.
pub fn coverage_map(scenario: &Scenario, spacing: f64, seed: u64) -> CoverageGrid {
    let num_rb = scenario.band.num_resource_blocks;
    let num_bs = scenario.num_bs();
    let powers: Vec<f64> = scenario
        .base_stations
        .iter()
        .map(|bs| bs.tx_power_w() / num_rb as f64)
        .collect();
    let all: Vec<usize> = (0..num_bs).collect();

    let points = scenario
        .outdoor_grid(spacing)
        .into_par_iter()
        .map(|p| {
            let links: Vec<LinkResponse> = scenario
                .base_stations
                .iter()
                .map(|bs| LinkResponse::new(scenario, bs, p, generate_paths_with(scenario, bs, p, seed, 0)))
                .collect();
            let mut single = vec![0.0; num_bs];
            let mut combined = 0.0;
            for rb in 0..num_rb {
                let h: Vec<_> = links.iter().map(|l| l.channel_vector(scenario, 0, rb)).collect();
                let w: Vec<Option<Precoder>> = h.iter().map(|h| mrt_precoder(h).ok()).collect();
                for (l, s) in single.iter_mut().enumerate() {
                    *s += received_power(&h, &w, &powers, &[l]);
                }
                combined += received_power(&h, &w, &powers, &all);
            }
            let best = single.iter().copied().fold(0.0, f64::max);
            CoveragePoint {
                position: p,
                best_single_bs_w: best / num_rb as f64,
                user_centric_w: combined / num_rb as f64,
            }
        })
        .collect();
    CoverageGrid {
        spacing_m: spacing,
        points,
    }
}

/// Linear-interpolation order statistic: with samples sorted ascending and
/// `h = (n - 1) q`, returns `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64, MetricsError> {
    if samples.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64, MetricsError> {
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricsError::InvalidLevel(q));
    }
    if sorted.is_empty() {
        return Err(MetricsError::EmptySamples);
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputDistribution {
    pub samples: Vec<f64>,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
}

impl ThroughputDistribution {
    pub fn new(samples: Vec<f64>) -> Result<Self, MetricsError> {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            q10: quantile_sorted(&sorted, 0.1)?,
            q50: quantile_sorted(&sorted, 0.5)?,
            q90: quantile_sorted(&sorted, 0.9)?,
            samples,
        })
    }

    pub fn spread(&self) -> f64 {
        self.q90 - self.q10
    }

    /// Sorted samples paired with empirical probabilities `i / n`.
    pub fn cdf(&self) -> Vec<(f64, f64)> {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted
            .into_iter()
            .enumerate()
            .map(|(i, x)| (x, (i + 1) as f64 / n))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: String,
    pub num_samples: usize,
    pub q10_bps: f64,
    pub q50_bps: f64,
    pub q90_bps: f64,
    pub spread_bps: f64,
}

impl ModeSummary {
    fn new(mode: ServingMode, d: &ThroughputDistribution) -> Self {
        Self {
            mode: mode.label(),
            num_samples: d.samples.len(),
            q10_bps: d.q10,
            q50_bps: d.q50,
            q90_bps: d.q90,
            spread_bps: d.spread(),
        }
    }
}

/// Values reported for the ray-traced reference deployment, kept next to our
/// own ratios for comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTargets {
    pub q10_ratio_at_least: f64,
    pub q50_ratio: f64,
    pub q90_ratio: f64,
    pub baseline_spread_bps: f64,
    pub candidate_spread_bps: f64,
}

impl Default for ReferenceTargets {
    fn default() -> Self {
        Self {
            q10_ratio_at_least: 3.0,
            q50_ratio: 1.09,
            q90_ratio: 0.70,
            baseline_spread_bps: 9.77e6,
            candidate_spread_bps: 4.76e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: ModeSummary,
    pub candidate: ModeSummary,
    /// candidate / baseline per quantile.
    pub q10_ratio: f64,
    pub q50_ratio: f64,
    pub q90_ratio: f64,
    pub spread_ratio: f64,
    pub reference: ReferenceTargets,
}

/// Quantile ratios of `candidate` over `baseline` (user-centric over
/// network-centric in the standard comparison).
pub fn compare_modes(
    baseline: (ServingMode, &[f64]),
    candidate: (ServingMode, &[f64]),
) -> Result<ComparisonReport, MetricsError> {
    if baseline.1.len() != candidate.1.len() {
        return Err(MetricsError::Mismatch(format!(
            "{} has {} samples but {} has {}",
            baseline.0,
            baseline.1.len(),
            candidate.0,
            candidate.1.len()
        )));
    }
    let b = ThroughputDistribution::new(baseline.1.to_vec())?;
    let c = ThroughputDistribution::new(candidate.1.to_vec())?;
    let ratio = |x: f64, y: f64| if x == y { 1.0 } else { x / y };
    Ok(ComparisonReport {
        q10_ratio: ratio(c.q10, b.q10),
        q50_ratio: ratio(c.q50, b.q50),
        q90_ratio: ratio(c.q90, b.q90),
        spread_ratio: ratio(c.spread(), b.spread()),
        baseline: ModeSummary::new(baseline.0, &b),
        candidate: ModeSummary::new(candidate.0, &c),
        reference: ReferenceTargets::default(),
    })
}

impl ComparisonReport {
    /// Human-readable table.
    pub fn render(&self) -> String {
        let mbps = |v: f64| v / 1e6;
        let mut out = String::new();
        out.push_str(&format!("{:<18}{:>12}{:>12}{:>12}{:>12}\n", "mode", "q10 Mb/s", "q50 Mb/s", "q90 Mb/s", "q90-q10"));
        for m in [&self.baseline, &self.candidate] {
            out.push_str(&format!(
                "{:<18}{:>12.3}{:>12.3}{:>12.3}{:>12.3}\n",
                m.mode,
                mbps(m.q10_bps),
                mbps(m.q50_bps),
                mbps(m.q90_bps),
                mbps(m.spread_bps)
            ));
        }
        out.push_str(&format!(
            "{:<18}{:>12.3}{:>12.3}{:>12.3}{:>12.3}\n",
            "ratio", self.q10_ratio, self.q50_ratio, self.q90_ratio, self.spread_ratio
        ));
        let r = &self.reference;
        out.push_str(&format!(
            "{:<18}{:>11}{:>12.3}{:>12.3}{:>12.3}\n",
            "reference",
            format!(">{:.1}", r.q10_ratio_at_least),
            r.q50_ratio,
            r.q90_ratio,
            r.candidate_spread_bps / r.baseline_spread_bps
        ));
        out
    }
}

/// Everything one CLI invocation produced.
#[derive(Debug, Clone, Default)]
pub struct OutputBundle {
    pub config: serde_json::Value,
    pub coverage: Option<CoverageGrid>,
    pub campaign: Option<Campaign>,
    pub comparison: Option<ComparisonReport>,
}

#[derive(Serialize)]
struct QuantileFile<'a> {
    modes: BTreeMap<String, ModeSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a ComparisonReport>,
}

#[derive(Serialize)]
struct RunStats {
    runs: usize,
    samples: usize,
    transmissions: u64,
    block_errors: u64,
    scheduled_layers: u64,
    delivered_bits: f64,
}

#[derive(Serialize)]
struct CoverageStats {
    spacing_m: f64,
    points: usize,
    median_gain_db: f64,
    max_gain_db: f64,
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    coverage: Option<CoverageStats>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    modes: BTreeMap<String, RunStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    comparison: Option<&'a ComparisonReport>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), MetricsError> {
    fs::write(path, contents).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn json_bytes<T: Serialize>(path: &Path, value: &T) -> Result<Vec<u8>, MetricsError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| MetricsError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn coverage_csv(grid: &CoverageGrid, user_centric: bool) -> Vec<u8> {
    let mut out = String::from("x_m,y_m,power_dbm\n");
    for p in &grid.points {
        let dbm = if user_centric { p.user_centric_dbm() } else { p.best_single_bs_dbm() };
        out.push_str(&format!("{},{},{:.2}\n", p.position.x, p.position.y, dbm));
    }
    out.into_bytes()
}

fn cdf_csv(d: &ThroughputDistribution) -> Vec<u8> {
    let mut out = String::from("throughput_bps,probability\n");
    for (x, p) in d.cdf() {
        out.push_str(&format!("{x},{p}\n"));
    }
    out.into_bytes()
}

/// Writes the bundle's artifacts into `out_dir` and returns the paths
/// written. Everything is rendered in memory first, so a failed check leaves
/// no partial output.
pub fn emit_outputs(bundle: &OutputBundle, out_dir: &Path) -> Result<Vec<PathBuf>, MetricsError> {
    if bundle.coverage.is_none() && bundle.campaign.is_none() {
        return Err(MetricsError::EmptyOutput("neither a coverage map nor a campaign".into()));
    }
    let mut files: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    let mut stats = BTreeMap::new();
    let mut coverage_stats = None;

    if let Some(grid) = &bundle.coverage {
        if grid.points.is_empty() {
            return Err(MetricsError::EmptyOutput("coverage grid has no points".into()));
        }
        for (mode, uc) in [(ServingMode::NetworkCentric, false), (ServingMode::UserCentric, true)] {
            files.push((out_dir.join(format!("coverage_{}.csv", mode.label())), coverage_csv(grid, uc)));
        }
        let gains: Vec<f64> = grid.points.iter().map(CoveragePoint::gain_db).collect();
        coverage_stats = Some(CoverageStats {
            spacing_m: grid.spacing_m,
            points: grid.points.len(),
            median_gain_db: quantile(&gains, 0.5)?,
            max_gain_db: quantile(&gains, 1.0)?,
        });
    }

    if let Some(campaign) = &bundle.campaign {
        if campaign.modes.is_empty() {
            return Err(MetricsError::EmptyOutput("campaign has no modes".into()));
        }
        let mut summaries = BTreeMap::new();
        for m in &campaign.modes {
            let d = ThroughputDistribution::new(m.samples.clone())
                .map_err(|_| MetricsError::EmptyOutput(format!("mode {} has no samples", m.mode)))?;
            files.push((out_dir.join(format!("cdf_{}.csv", m.mode.label())), cdf_csv(&d)));
            summaries.insert(m.mode.label(), ModeSummary::new(m.mode, &d));
            stats.insert(
                m.mode.label(),
                RunStats {
                    runs: m.runs.len(),
                    samples: m.samples.len(),
                    transmissions: m.runs.iter().map(|r| r.transmissions).sum(),
                    block_errors: m.runs.iter().map(|r| r.block_errors).sum(),
                    scheduled_layers: m.runs.iter().map(|r| r.scheduled_layers).sum(),
                    delivered_bits: m.runs.iter().map(|r| r.delivered_bits).sum(),
                },
            );
        }
        let path = out_dir.join("quantiles.json");
        let body = json_bytes(
            &path,
            &QuantileFile {
                modes: summaries,
                comparison: bundle.comparison.as_ref(),
            },
        )?;
        files.push((path, body));
    }

    let path = out_dir.join("summary.json");
    let body = json_bytes(
        &path,
        &SummaryFile {
            config: &bundle.config,
            coverage: coverage_stats,
            modes: stats,
            comparison: bundle.comparison.as_ref(),
        },
    )?;
    files.push((path, body));

    fs::create_dir_all(out_dir).map_err(|source| MetricsError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    for (path, body) in &files {
        write_file(path, body)?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}
