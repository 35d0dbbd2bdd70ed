//! `cfsim` command line.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | usage error (bad flag or value) |
//! | 3 | invalid scenario or override |
//! | 4 | invalid MCS table |
//! | 5 | simulation failure |
//! | 6 | output could not be written |

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::channel::ChannelVector;
use crate::engine::{run_campaign, run_simulation_observed, with_workers, Campaign, EngineError, RunConfig, SlotObserver, UserState};
use crate::link_adaptation::{McsError, McsTable};
use crate::metrics::{compare_modes, coverage_map, emit_outputs, MetricsError, OutputBundle};
use crate::phy::LinkBudget;
use crate::scenario::{Scenario, ScenarioError, ServingMode};
use crate::scheduler::ScheduledRb;
use crate::units::linear_to_db;

pub const OUT_DIR_ENV: &str = "CFSIM_OUT_DIR";
pub const CHANNEL_DUMP_FILE: &str = "channel_dump.csv";
pub const TRACE_FILE: &str = "scheduler_trace.csv";

#[derive(Debug, Parser)]
#[command(name = "cfsim", version, about = "Downlink simulator for network-centric vs user-centric cell-free Massive MIMO")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Received-power maps for the best single BS and for all BSs combined.
    Coverage {
        #[command(flatten)]
        common: CommonArgs,
        /// Grid spacing in meters.
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
    /// Run one serving mode over all runs.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Serving mode: network_centric (nc), user_centric (uc) or cluster_<C>.
        #[arg(long, conflicts_with = "cluster_size")]
        mode: Option<ServingMode>,
        #[command(flatten)]
        dumps: DumpArgs,
    },
    /// Paired campaign of network-centric and user-centric serving.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dumps: DumpArgs,
    },
    /// Load and check a scenario and MCS table.
    Validate {
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    /// Scenario file (TOML); the built-in reference deployment when omitted.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// MCS table (CSV: index,threshold_db,efficiency).
    #[arg(long)]
    pub mcs_table: Option<PathBuf>,
    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    #[serde(skip)]
    pub out: PathBuf,
    /// Worker threads (0 = all available cores).
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    pub workers: usize,
    /// Full experiment scale: 50 users, 1000 slots, 10 runs.
    #[arg(long)]
    pub paper_scale: bool,
    /// Override the number of users.
    #[arg(long)]
    pub users: Option<usize>,
    /// Override the number of slots per run.
    #[arg(long)]
    pub slots: Option<usize>,
    /// Override the number of runs.
    #[arg(long)]
    pub runs: Option<usize>,
    /// Override the scheduler's channel-correlation threshold.
    #[arg(long)]
    pub correlation_threshold: Option<f64>,
    /// Serve each user from its C strongest BSs (adds this mode to `compare`).
    #[arg(long)]
    pub cluster_size: Option<usize>,
    /// Scheduler CSI age in slots (0 or 1).
    #[arg(long)]
    pub csi_delay: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct DumpArgs {
    /// Write per-link gains of run 0 to channel_dump.csv.
    #[arg(long)]
    pub dump_channels: bool,
    /// Write per-slot, per-RB scheduling decisions of run 0 to scheduler_trace.csv.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{0}")]
    Override(String),
    #[error(transparent)]
    Mcs(#[from] McsError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Scenario(_) | CliError::Override(_) => 3,
            CliError::Mcs(_) => 4,
            CliError::Engine(_) => 5,
            CliError::Metrics(MetricsError::Io { .. }) | CliError::Io { .. } => 6,
            CliError::Metrics(_) => 5,
        }
    }
}

/// Scenario after file loading, scale selection and overrides, validated.
pub fn effective_scenario(args: &CommonArgs) -> Result<Scenario, CliError> {
    let mut s = match &args.scenario {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default(),
    };
    if args.paper_scale {
        let p = Scenario::paper_scale();
        s.num_users = p.num_users;
        s.num_slots = p.num_slots;
        s.num_runs = p.num_runs;
    }
    if let Some(v) = args.users {
        s.num_users = v;
    }
    if let Some(v) = args.slots {
        s.num_slots = v;
    }
    if let Some(v) = args.runs {
        s.num_runs = v;
    }
    if let Some(v) = args.correlation_threshold {
        s.scheduler.correlation_threshold = v;
    }
    if let Some(v) = args.csi_delay {
        s.scheduler.csi_delay_slots = v;
    }
    if let Some(c) = args.cluster_size {
        s.serving_mode = ServingMode::Cluster(c);
    }
    s.validate()?;
    Ok(s)
}

fn load_mcs(args: &CommonArgs) -> Result<McsTable, CliError> {
    Ok(match &args.mcs_table {
        Some(path) => McsTable::load(path)?,
        None => McsTable::default(),
    })
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    command: &'a str,
    flags: &'a CommonArgs,
    #[serde(skip_serializing_if = "Option::is_none")]
    dumps: Option<&'a DumpArgs>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spacing_m: Option<f64>,
    modes: Vec<String>,
    scenario: &'a Scenario,
    mcs_table: &'a [crate::link_adaptation::McsEntry],
}

fn config_json(cfg: &EffectiveConfig<'_>) -> serde_json::Value {
    serde_json::to_value(cfg).expect("configuration is serializable")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streams the channel dump and scheduler trace of one run.
struct DumpWriter {
    channels: Option<(PathBuf, BufWriter<File>)>,
    trace: Option<(PathBuf, BufWriter<File>)>,
    error: Option<CliError>,
}

impl DumpWriter {
    fn create(out: &Path, dumps: &DumpArgs) -> Result<Self, CliError> {
        let open = |name: &str, header: &str| -> Result<(PathBuf, BufWriter<File>), CliError> {
            let path = out.join(name);
            let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
            writeln!(w, "{header}").map_err(io_err(&path))?;
            Ok((path, w))
        };
        Ok(Self {
            channels: dumps
                .dump_channels
                .then(|| open(CHANNEL_DUMP_FILE, "slot,rb,user,bs,x_m,y_m,gain_db"))
                .transpose()?,
            trace: dumps
                .trace
                .then(|| {
                    open(
                        TRACE_FILE,
                        "slot,rb,user,group_size,mcs,estimated_sinr_db,realized_sinr_db,delivered_efficiency",
                    )
                })
                .transpose()?,
            error: None,
        })
    }

    fn record(&mut self, path: &Path, r: std::io::Result<()>) {
        if let (Err(source), None) = (r, &self.error) {
            self.error = Some(CliError::Io {
                path: path.to_path_buf(),
                source,
            });
        }
    }

    fn finish(mut self) -> Result<(), CliError> {
        for (path, w) in [self.channels.take(), self.trace.take()].into_iter().flatten().collect::<Vec<_>>().iter_mut() {
            let r = w.flush();
            self.record(path, r);
        }
        self.error.map_or(Ok(()), Err)
    }
}

struct DumpObserver<'a> {
    writer: DumpWriter,
    mcs: &'a McsTable,
}

impl SlotObserver for DumpObserver<'_> {
    fn on_channels(&mut self, slot: usize, users: &[UserState], channels: &[Vec<Vec<ChannelVector>>]) {
        let Some((path, w)) = self.writer.channels.as_mut() else { return };
        let mut r = Ok(());
        'outer: for (rb, per_user) in channels.iter().enumerate() {
            for (k, links) in per_user.iter().enumerate() {
                for (l, h) in links.iter().enumerate() {
                    let u = &users[k];
                    r = writeln!(
                        w,
                        "{slot},{rb},{k},{l},{},{},{:.4}",
                        u.position.x,
                        u.position.y,
                        linear_to_db(h.norm_sqr())
                    );
                    if r.is_err() {
                        break 'outer;
                    }
                }
            }
        }
        let path = path.clone();
        self.writer.record(&path, r);
    }

    fn on_slot(&mut self, slot: usize, rbs: &[ScheduledRb], realized: &[Vec<LinkBudget>]) {
        let Some((path, w)) = self.writer.trace.as_mut() else { return };
        let mut r = Ok(());
        'outer: for (s, budgets) in rbs.iter().zip(realized) {
            for (j, &k) in s.users.iter().enumerate() {
                let (mcs, eff) = match s.mcs[j] {
                    Some(m) => (m.to_string(), self.mcs.transport_outcome(m, budgets[j].sinr_db())),
                    None => (String::new(), 0.0),
                };
                r = writeln!(
                    w,
                    "{slot},{},{k},{},{mcs},{:.4},{:.4},{eff}",
                    s.rb,
                    s.users.len(),
                    s.estimated[j].sinr_db(),
                    budgets[j].sinr_db()
                );
                if r.is_err() {
                    break 'outer;
                }
            }
        }
        let path = path.clone();
        self.writer.record(&path, r);
    }
}

fn write_dumps(scenario: &Scenario, mcs: &McsTable, seed: u64, mode: ServingMode, out: &Path, dumps: &DumpArgs) -> Result<(), CliError> {
    if !dumps.dump_channels && !dumps.trace {
        return Ok(());
    }
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut observer = DumpObserver {
        writer: DumpWriter::create(out, dumps)?,
        mcs,
    };
    let mut s = scenario.clone();
    s.serving_mode = mode;
    let config = RunConfig {
        run_index: 0,
        rng_seed: seed,
        num_slots: s.num_slots,
        mode,
    };
    run_simulation_observed(&s, mcs, &config, &mut observer)?;
    observer.writer.finish()
}

fn campaign_with_progress(common: &CommonArgs, s: &Scenario, mcs: &McsTable, modes: &[ServingMode]) -> Result<Campaign, CliError> {
    let labels: Vec<String> = modes.iter().map(ServingMode::label).collect();
    eprintln!(
        "cfsim: {} runs x [{}], {} users, {} slots, seed {}",
        s.num_runs,
        labels.join(", "),
        s.num_users,
        s.num_slots,
        common.seed
    );
    let start = std::time::Instant::now();
    let campaign = with_workers(common.workers, || run_campaign(s, mcs, common.seed, s.num_runs, modes))?;
    eprintln!("cfsim: campaign done in {:.1} s", start.elapsed().as_secs_f64());
    Ok(campaign)
}

fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Validate { common } => {
            let s = effective_scenario(common)?;
            let mcs = load_mcs(common)?;
            println!(
                "ok: {} base stations ({} antenna elements), {} buildings, {} users, {} slots x {} runs, {} MCS entries",
                s.num_bs(),
                s.base_stations.iter().map(|b| b.num_elements()).sum::<usize>(),
                s.buildings.len(),
                s.num_users,
                s.num_slots,
                s.num_runs,
                mcs.entries().len()
            );
            Ok(())
        }
        Command::Coverage { common, spacing } => {
            if !(spacing.is_finite() && *spacing > 0.0) {
                return Err(CliError::Override(format!("spacing must be positive, got {spacing}")));
            }
            let s = effective_scenario(common)?;
            let mcs = load_mcs(common)?;
            let grid = with_workers(common.workers, || coverage_map(&s, *spacing, common.seed));
            let config = config_json(&EffectiveConfig {
                command: "coverage",
                flags: common,
                dumps: None,
                spacing_m: Some(*spacing),
                modes: vec![ServingMode::NetworkCentric.label(), ServingMode::UserCentric.label()],
                scenario: &s,
                mcs_table: mcs.entries(),
            });
            let bundle = OutputBundle {
                config,
                coverage: Some(grid),
                ..OutputBundle::default()
            };
            report_written(&emit_outputs(&bundle, &common.out)?);
            Ok(())
        }
        Command::Simulate { common, mode, dumps } => {
            let mut s = effective_scenario(common)?;
            if let Some(m) = mode {
                s.serving_mode = *m;
                s.validate()?;
            }
            let mcs = load_mcs(common)?;
            let m = s.serving_mode;
            let campaign = campaign_with_progress(common, &s, &mcs, &[m])?;
            finish_campaign(common, dumps, "simulate", &s, &mcs, campaign, None)
        }
        Command::Compare { common, dumps } => {
            let s = effective_scenario(common)?;
            let mcs = load_mcs(common)?;
            let mut modes = vec![ServingMode::NetworkCentric, ServingMode::UserCentric];
            if let Some(c) = common.cluster_size {
                modes.push(ServingMode::Cluster(c));
            }
            let campaign = campaign_with_progress(common, &s, &mcs, &modes)?;
            let nc = campaign.mode(ServingMode::NetworkCentric).expect("mode was run");
            let uc = campaign.mode(ServingMode::UserCentric).expect("mode was run");
            let report = compare_modes((nc.mode, &nc.samples), (uc.mode, &uc.samples))?;
            print!("{}", report.render());
            finish_campaign(common, dumps, "compare", &s, &mcs, campaign, Some(report))
        }
    }
}

fn finish_campaign(
    common: &CommonArgs,
    dumps: &DumpArgs,
    command: &str,
    s: &Scenario,
    mcs: &McsTable,
    campaign: Campaign,
    comparison: Option<crate::metrics::ComparisonReport>,
) -> Result<(), CliError> {
    let modes: Vec<ServingMode> = campaign.modes.iter().map(|m| m.mode).collect();
    let config = config_json(&EffectiveConfig {
        command,
        flags: common,
        dumps: Some(dumps),
        spacing_m: None,
        modes: modes.iter().map(ServingMode::label).collect(),
        scenario: s,
        mcs_table: mcs.entries(),
    });
    let bundle = OutputBundle {
        config,
        campaign: Some(campaign),
        comparison,
        ..OutputBundle::default()
    };
    report_written(&emit_outputs(&bundle, &common.out)?);
    with_workers(common.workers, || write_dumps(s, mcs, common.seed, modes[0], &common.out, dumps))?;
    Ok(())
}

/// Parses `args` (including the program name) and runs the command, returning
/// the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn common(extra: &[&str]) -> CommonArgs {
        let mut args = vec!["cfsim", "validate"];
        args.extend_from_slice(extra);
        match Cli::try_parse_from(args).unwrap().command {
            Command::Validate { common } => common,
            _ => unreachable!(),
        }
    }

    #[test]
    fn overrides_apply_and_validate() {
        let s = effective_scenario(&common(&["--users", "7", "--slots", "9", "--runs", "2"])).unwrap();
        assert_eq!((s.num_users, s.num_slots, s.num_runs), (7, 9, 2));
        let s = effective_scenario(&common(&["--paper-scale"])).unwrap();
        assert_eq!((s.num_users, s.num_slots, s.num_runs), (50, 1000, 10));
        let err = effective_scenario(&common(&["--cluster-size", "7"])).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let err = effective_scenario(&common(&["--correlation-threshold", "1.5"])).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(main_with_args(["cfsim", "validate"]), 0);
        assert_eq!(main_with_args(["cfsim", "bogus"]), 2);
        assert_eq!(main_with_args(["cfsim", "validate", "--users", "x"]), 2);
        assert_eq!(main_with_args(["cfsim", "validate", "--scenario", "/nonexistent/s.toml"]), 3);
        assert_eq!(main_with_args(["cfsim", "validate", "--mcs-table", "/nonexistent/m.csv"]), 4);
    }
}
