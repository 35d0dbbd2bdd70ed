//! Downlink system-level simulator comparing network-centric (one serving
//! base station per user) and user-centric cell-free Massive MIMO (every base
//! station serves every user coherently).

pub mod channel;
pub mod cli;
pub mod engine;
pub mod link_adaptation;
pub mod metrics;
pub mod phy;
pub mod scenario;
pub mod scheduler;
pub mod seeds;
pub mod units;

pub use channel::{ChannelVector, LinkResponse, Path, PathSet};
pub use engine::{run_campaign, run_simulation, Campaign, EngineError, ModeResult, RunConfig, RunMetrics, UserState};
pub use link_adaptation::{McsEntry, McsError, McsTable};
pub use metrics::{compare_modes, coverage_map, emit_outputs, quantile, ComparisonReport, CoverageGrid, CoveragePoint, MetricsError, ThroughputDistribution};
pub use phy::{LinkBudget, PhyError, PowerAllocation, Precoder};
pub use scenario::{BandPlan, BaseStation, Building, Point, Rect, Scenario, ScenarioError, ServingMode};
pub use scheduler::{PfState, ScheduledRb, SchedulerError};
