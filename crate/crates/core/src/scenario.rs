//! Simulated world: band plan, base stations, buildings and run parameters.
//!
//! A [`Scenario`] is immutable once validated. It is read from and written to
//! a TOML document whose keys carry their units (`_hz`, `_m`, `_dbm`, ...).
//! [`Scenario::default`] reproduces the reference deployment: one 128-element
//! macro and five 16-element micro base stations over a 387 m x 552 m
//! Manhattan grid, 25 MHz at 3.6 GHz split into 69 resource blocks.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::dbm_to_watts;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid scenario: `{field}` {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// A horizontal position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min_m: f64,
    pub y_min_m: f64,
    pub x_max_m: f64,
    pub y_max_m: f64,
}

impl Rect {
    pub const fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self {
            x_min_m: x_min,
            y_min_m: y_min,
            x_max_m: x_max,
            y_max_m: y_max,
        }
    }

    pub fn width(&self) -> f64 {
        self.x_max_m - self.x_min_m
    }

    pub fn height(&self) -> f64 {
        self.y_max_m - self.y_min_m
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        Point::new(
            0.5 * (self.x_min_m + self.x_max_m),
            0.5 * (self.y_min_m + self.y_max_m),
        )
    }

    /// Closed containment test.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min_m && p.x <= self.x_max_m && p.y >= self.y_min_m && p.y <= self.y_max_m
    }

    fn contains_rect(&self, other: &Rect) -> bool {
        other.x_min_m >= self.x_min_m
            && other.x_max_m <= self.x_max_m
            && other.y_min_m >= self.y_min_m
            && other.y_max_m <= self.y_max_m
    }

    /// Half-open containment `[min, max)` on each axis, except that a max edge
    /// lying on the max edge of `outer` is closed. Footprints laid out this way
    /// tile `outer` without double-counting shared edges.
    pub fn contains_tiled(&self, p: Point, outer: &Rect) -> bool {
        let upper = |v: f64, max: f64, outer_max: f64| v < max || (max >= outer_max && v <= max);
        p.x >= self.x_min_m
            && p.y >= self.y_min_m
            && upper(p.x, self.x_max_m, outer.x_max_m)
            && upper(p.y, self.y_max_m, outer.y_max_m)
    }
}

/// Frequency/time resource layout of the downlink carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    pub center_frequency_hz: f64,
    pub bandwidth_hz: f64,
    pub num_resource_blocks: usize,
    pub rb_bandwidth_hz: f64,
    pub slot_duration_s: f64,
}

impl Default for BandPlan {
    fn default() -> Self {
        Self {
            center_frequency_hz: 3.6e9,
            bandwidth_hz: 25e6,
            num_resource_blocks: 69,
            // 12 subcarriers x 30 kHz
            rb_bandwidth_hz: 360e3,
            slot_duration_s: 0.5e-3,
        }
    }
}

impl BandPlan {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_frequency_hz
    }

    /// Center frequency of resource block `rb`; blocks are laid out
    /// symmetrically around the carrier.
    pub fn rb_center_frequency_hz(&self, rb: usize) -> f64 {
        let offset = rb as f64 - (self.num_resource_blocks as f64 - 1.0) / 2.0;
        self.center_frequency_hz + offset * self.rb_bandwidth_hz
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        for (name, v) in [
            ("band.center_frequency_hz", self.center_frequency_hz),
            ("band.bandwidth_hz", self.bandwidth_hz),
            ("band.rb_bandwidth_hz", self.rb_bandwidth_hz),
            ("band.slot_duration_s", self.slot_duration_s),
        ] {
            check_positive(name, v)?;
        }
        if self.num_resource_blocks == 0 {
            return Err(invalid("band.num_resource_blocks", "must be at least 1"));
        }
        let occupied = self.num_resource_blocks as f64 * self.rb_bandwidth_hz;
        if occupied > self.bandwidth_hz * (1.0 + 1e-12) {
            return Err(invalid(
                "band.num_resource_blocks",
                format!(
                    "x rb_bandwidth_hz = {occupied} Hz exceeds bandwidth_hz = {}",
                    self.bandwidth_hz
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BsKind {
    Macro,
    Micro,
}

/// Uniform planar array. Elements sit on a `rows x cols` lattice in the plane
/// orthogonal to the boresight; columns run horizontally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaPanel {
    pub rows: usize,
    pub cols: usize,
    pub element_spacing_wavelengths: f64,
    pub azimuth_deg: f64,
    pub downtilt_deg: f64,
    /// Element gain toward boresight over gain toward the back, dB. Only
    /// matters for BSs with several panels.
    #[serde(default = "default_front_to_back_db")]
    pub front_to_back_db: f64,
}

fn default_front_to_back_db() -> f64 {
    20.0
}

impl AntennaPanel {
    pub fn new(rows: usize, cols: usize, azimuth_deg: f64, downtilt_deg: f64) -> Self {
        Self {
            rows,
            cols,
            element_spacing_wavelengths: 0.5,
            azimuth_deg,
            downtilt_deg,
            front_to_back_db: default_front_to_back_db(),
        }
    }

    /// Unit vector along the (tilted) boresight.
    pub fn boresight(&self) -> [f64; 3] {
        let (a, t) = (self.azimuth_rad(), self.downtilt_rad());
        [t.cos() * a.cos(), t.cos() * a.sin(), -t.sin()]
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn azimuth_rad(&self) -> f64 {
        self.azimuth_deg.to_radians()
    }

    pub fn downtilt_rad(&self) -> f64 {
        self.downtilt_deg.to_radians()
    }

    fn validate(&self, field: &str) -> Result<(), ScenarioError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(invalid(field, "rows and cols must be at least 1"));
        }
        check_positive(
            &format!("{field}.element_spacing_wavelengths"),
            self.element_spacing_wavelengths,
        )?;
        if !(self.front_to_back_db.is_finite() && self.front_to_back_db >= 0.0) {
            return Err(invalid(&format!("{field}.front_to_back_db"), "must be finite and nonnegative"));
        }
        check_finite(&format!("{field}.azimuth_deg"), self.azimuth_deg)?;
        check_finite(&format!("{field}.downtilt_deg"), self.downtilt_deg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub kind: BsKind,
    pub position_m: Point,
    pub height_m: f64,
    pub tx_power_dbm: f64,
    /// Declared element count M; must equal the sum over panels.
    pub num_antennas: usize,
    pub panels: Vec<AntennaPanel>,
}

impl BaseStation {
    /// Total transmit power P^tx in watts.
    pub fn tx_power_w(&self) -> f64 {
        dbm_to_watts(self.tx_power_dbm)
    }

    pub fn num_elements(&self) -> usize {
        self.panels.iter().map(AntennaPanel::num_elements).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub x_min_m: f64,
    pub y_min_m: f64,
    pub x_max_m: f64,
    pub y_max_m: f64,
    pub height_m: f64,
}

impl Building {
    pub fn new(footprint: Rect, height_m: f64) -> Self {
        Self {
            x_min_m: footprint.x_min_m,
            y_min_m: footprint.y_min_m,
            x_max_m: footprint.x_max_m,
            y_max_m: footprint.y_max_m,
            height_m,
        }
    }

    pub fn footprint(&self) -> Rect {
        Rect::new(self.x_min_m, self.y_min_m, self.x_max_m, self.y_max_m)
    }
}

/// Which base stations serve a user: the strongest one, all of them, or the
/// `C` strongest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServingMode {
    NetworkCentric,
    UserCentric,
    Cluster(usize),
}

impl ServingMode {
    /// Number of serving base stations out of `num_bs`.
    pub fn cluster_size(&self, num_bs: usize) -> usize {
        match *self {
            ServingMode::NetworkCentric => 1,
            ServingMode::UserCentric => num_bs,
            ServingMode::Cluster(c) => c,
        }
    }

    /// Stable identifier used in output file names.
    pub fn label(&self) -> String {
        match self {
            ServingMode::NetworkCentric => "network_centric".into(),
            ServingMode::UserCentric => "user_centric".into(),
            ServingMode::Cluster(c) => format!("cluster_{c}"),
        }
    }
}

impl fmt::Display for ServingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for ServingMode {
    type Err = String;

    /// Accepts `network_centric` (or `nc`), `user_centric` (or `uc`) and
    /// `cluster_<C>` / `cluster:<C>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "network_centric" | "nc" => Ok(ServingMode::NetworkCentric),
            "user_centric" | "uc" => Ok(ServingMode::UserCentric),
            other => other
                .strip_prefix("cluster")
                .map(|rest| rest.trim_start_matches(['_', ':', '=']))
                .and_then(|n| n.parse::<usize>().ok())
                .map(ServingMode::Cluster)
                .ok_or_else(|| format!("unknown serving mode `{s}`")),
        }
    }
}

/// Parameters of the synthetic geometry-based channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelParams {
    pub user_height_m: f64,
    pub los_exponent: f64,
    pub nlos_exponent: f64,
    pub nlos_excess_macro_db: f64,
    pub nlos_excess_micro_db: f64,
    pub num_scatter: usize,
    /// Power ratio of the specular path to the scattered paths on LOS links.
    pub rician_k_db: f64,
    pub delay_spread_s: f64,
    pub elevation_spread_deg: f64,
    /// Slots between scatterer redraws.
    pub coherence_slots: usize,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            user_height_m: 1.5,
            los_exponent: 2.0,
            nlos_exponent: 3.5,
            nlos_excess_macro_db: 20.0,
            nlos_excess_micro_db: 15.0,
            num_scatter: 8,
            rician_k_db: 6.0,
            delay_spread_s: 100e-9,
            elevation_spread_deg: 5.0,
            coherence_slots: 100,
        }
    }
}

impl ChannelParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        check_positive("channel.user_height_m", self.user_height_m)?;
        check_positive("channel.los_exponent", self.los_exponent)?;
        if !(self.nlos_exponent.is_finite() && self.nlos_exponent > self.los_exponent) {
            return Err(invalid(
                "channel.nlos_exponent",
                "must be finite and larger than los_exponent",
            ));
        }
        check_non_negative("channel.nlos_excess_macro_db", self.nlos_excess_macro_db)?;
        check_non_negative("channel.nlos_excess_micro_db", self.nlos_excess_micro_db)?;
        check_finite("channel.rician_k_db", self.rician_k_db)?;
        check_non_negative("channel.delay_spread_s", self.delay_spread_s)?;
        check_non_negative("channel.elevation_spread_deg", self.elevation_spread_deg)?;
        if self.coherence_slots == 0 {
            return Err(invalid("channel.coherence_slots", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerParams {
    /// Maximum pairwise channel correlation among co-scheduled users.
    pub correlation_threshold: f64,
    pub pf_horizon_slots: f64,
    pub pf_floor_bps: f64,
    /// Age of the channel state the scheduler sees, in slots. Zero makes the
    /// estimated and realized SINR identical.
    pub csi_delay_slots: usize,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            correlation_threshold: 0.5,
            pf_horizon_slots: 100.0,
            pf_floor_bps: 1e3,
            csi_delay_slots: 1,
        }
    }
}

impl SchedulerParams {
    fn validate(&self) -> Result<(), ScenarioError> {
        let t = self.correlation_threshold;
        if !(0.0..=1.0).contains(&t) {
            return Err(invalid("scheduler.correlation_threshold", "must lie in [0, 1]"));
        }
        if !(self.pf_horizon_slots.is_finite() && self.pf_horizon_slots >= 1.0) {
            return Err(invalid("scheduler.pf_horizon_slots", "must be at least 1"));
        }
        check_positive("scheduler.pf_floor_bps", self.pf_floor_bps)?;
        if self.csi_delay_slots > 1 {
            return Err(invalid("scheduler.csi_delay_slots", "must be 0 or 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub num_users: usize,
    pub user_speed_mps: f64,
    pub num_slots: usize,
    pub num_runs: usize,
    pub noise_figure_db: f64,
    pub serving_mode: ServingMode,
    pub bounds: Rect,
    pub band: BandPlan,
    #[serde(default)]
    pub channel: ChannelParams,
    #[serde(default)]
    pub scheduler: SchedulerParams,
    pub base_stations: Vec<BaseStation>,
    #[serde(default)]
    pub buildings: Vec<Building>,
}

impl Default for Scenario {
    /// Reference deployment at desk scale (20 users, 200 slots, 4 runs).
    fn default() -> Self {
        reference_scenario()
    }
}

impl Scenario {
    /// Reference deployment at the full experiment scale: 50 users,
    /// 1000 slots of 0.5 ms, 10 runs.
    pub fn paper_scale() -> Self {
        Self {
            num_users: 50,
            num_slots: 1000,
            num_runs: 10,
            ..Self::default()
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml_string(&self) -> Result<String, ScenarioError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_toml_string()?).map_err(|source| ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn num_bs(&self) -> usize {
        self.base_stations.len()
    }

    /// True if `p` lies inside a building footprint.
    pub fn is_indoor(&self, p: Point) -> bool {
        self.buildings
            .iter()
            .any(|b| b.footprint().contains_tiled(p, &self.bounds))
    }

    /// Outdoor and within the bounding box.
    pub fn is_outdoor(&self, p: Point) -> bool {
        self.bounds.contains(p) && !self.is_indoor(p)
    }

    /// Every grid point at `spacing` meters inside the bounds and outside all
    /// buildings, row-major (x varies fastest), anchored at the bounds'
    /// lower-left corner. Non-positive spacing yields an empty grid.
    pub fn outdoor_grid(&self, spacing: f64) -> Vec<Point> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Vec::new();
        }
        let count = |extent: f64| (extent / spacing + 1e-9).floor() as usize + 1;
        let (nx, ny) = (count(self.bounds.width()), count(self.bounds.height()));
        (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| {
                    Point::new(
                        self.bounds.x_min_m + i as f64 * spacing,
                        self.bounds.y_min_m + j as f64 * spacing,
                    )
                })
            })
            .filter(|p| !self.is_indoor(*p))
            .collect()
    }

    /// Checks every structural invariant, reporting the first violation.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.band.validate()?;
        self.channel.validate()?;
        self.scheduler.validate()?;

        let b = &self.bounds;
        for (name, v) in [
            ("bounds.x_min_m", b.x_min_m),
            ("bounds.y_min_m", b.y_min_m),
            ("bounds.x_max_m", b.x_max_m),
            ("bounds.y_max_m", b.y_max_m),
        ] {
            check_finite(name, v)?;
        }
        if b.width() <= 0.0 || b.height() <= 0.0 {
            return Err(invalid("bounds", "must have positive extents"));
        }

        if self.num_users == 0 {
            return Err(invalid("num_users", "must be at least 1"));
        }
        if self.num_runs == 0 {
            return Err(invalid("num_runs", "must be at least 1"));
        }
        check_non_negative("user_speed_mps", self.user_speed_mps)?;
        check_finite("noise_figure_db", self.noise_figure_db)?;

        for (i, bld) in self.buildings.iter().enumerate() {
            let field = format!("buildings[{i}]");
            let fp = bld.footprint();
            for v in [fp.x_min_m, fp.y_min_m, fp.x_max_m, fp.y_max_m] {
                check_finite(&field, v)?;
            }
            if fp.width() <= 0.0 || fp.height() <= 0.0 {
                return Err(invalid(field, "footprint must have positive extents"));
            }
            check_positive(&format!("{field}.height_m"), bld.height_m)?;
            if !b.contains_rect(&fp) {
                return Err(invalid(field, "footprint must lie inside bounds"));
            }
        }

        if self.base_stations.is_empty() {
            return Err(invalid("base_stations", "at least one base station is required"));
        }
        for (l, bs) in self.base_stations.iter().enumerate() {
            let field = format!("base_stations[{l}]");
            if bs.id != l {
                return Err(invalid(format!("{field}.id"), format!("must equal its index {l}")));
            }
            check_finite(&format!("{field}.tx_power_dbm"), bs.tx_power_dbm)?;
            check_positive(&format!("{field}.height_m"), bs.height_m)?;
            if !b.contains(bs.position_m) {
                return Err(invalid(format!("{field}.position_m"), "must lie inside bounds"));
            }
            if let Some(bld) = self
                .buildings
                .iter()
                .find(|bld| bld.footprint().contains(bs.position_m) && bld.height_m >= bs.height_m)
            {
                return Err(invalid(
                    format!("{field}.position_m"),
                    format!("antenna is inside a {} m building", bld.height_m),
                ));
            }
            if bs.panels.is_empty() {
                return Err(invalid(format!("{field}.panels"), "at least one panel is required"));
            }
            if bs.kind == BsKind::Macro && bs.panels.len() != 1 {
                return Err(invalid(format!("{field}.panels"), "a macro has exactly one panel"));
            }
            for (p, panel) in bs.panels.iter().enumerate() {
                panel.validate(&format!("{field}.panels[{p}]"))?;
            }
            if bs.num_elements() != bs.num_antennas {
                return Err(invalid(
                    format!("{field}.num_antennas"),
                    format!("is {} but the panels hold {}", bs.num_antennas, bs.num_elements()),
                ));
            }
        }

        if let ServingMode::Cluster(c) = self.serving_mode {
            if c == 0 || c > self.num_bs() {
                return Err(invalid(
                    "serving_mode",
                    format!("cluster size {c} outside 1..={}", self.num_bs()),
                ));
            }
        }
        Ok(())
    }
}

fn check_finite(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, "must be finite"))
    }
}

fn check_positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, "must be finite and strictly positive"))
    }
}

fn check_non_negative(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(field, "must be finite and non-negative"))
    }
}

// Street grid of the reference layout. Blocks are separated by 15 m streets;
// the eastern street (x 360..387) is a 27 m wide avenue lined with micro cells.
const BLOCK_X: [(f64, f64); 3] = [(15.0, 120.0), (135.0, 240.0), (255.0, 360.0)];
const BLOCK_Y: [(f64, f64); 4] = [(15.0, 135.0), (150.0, 270.0), (285.0, 405.0), (420.0, 537.0)];
const BLOCK_HEIGHT_M: [[f64; 3]; 4] = [
    [24.0, 30.0, 21.0],
    [33.0, 27.0, 36.0],
    [21.0, 30.0, 24.0],
    [27.0, 36.0, 30.0],
];

fn reference_scenario() -> Scenario {
    let bounds = Rect::new(0.0, 0.0, 387.0, 552.0);
    let buildings = BLOCK_Y
        .iter()
        .zip(BLOCK_HEIGHT_M.iter())
        .flat_map(|(&(y0, y1), heights)| {
            BLOCK_X
                .iter()
                .zip(heights.iter())
                .map(move |(&(x0, x1), &h)| Building::new(Rect::new(x0, y0, x1, y1), h))
        })
        .collect();

    // The macro mast stands on the crossing of the second north-south street
    // and the central east-west street, facing the middle of the area.
    let macro_pos = Point::new(127.5, 277.5);
    let center = bounds.center();
    let boresight = (center.y - macro_pos.y)
        .atan2(center.x - macro_pos.x)
        .to_degrees();
    let mut base_stations = vec![BaseStation {
        id: 0,
        kind: BsKind::Macro,
        position_m: macro_pos,
        height_m: 45.0,
        tx_power_dbm: 46.0,
        num_antennas: 128,
        panels: vec![AntennaPanel::new(8, 16, boresight, 6.0)],
    }];
    // Micro cells along the eastern avenue, two back-to-back panels each,
    // looking up and down the street.
    for (i, y) in [60.0, 142.5, 277.5, 412.5, 495.0].into_iter().enumerate() {
        base_stations.push(BaseStation {
            id: i + 1,
            kind: BsKind::Micro,
            position_m: Point::new(373.5, y),
            height_m: 6.0,
            tx_power_dbm: 30.0,
            num_antennas: 16,
            panels: vec![
                AntennaPanel::new(4, 2, 90.0, 0.0),
                AntennaPanel::new(4, 2, 270.0, 0.0),
            ],
        });
    }

    Scenario {
        num_users: 20,
        user_speed_mps: 1.5,
        num_slots: 200,
        num_runs: 4,
        noise_figure_db: 9.0,
        serving_mode: ServingMode::UserCentric,
        bounds,
        band: BandPlan::default(),
        channel: ChannelParams::default(),
        scheduler: SchedulerParams::default(),
        base_stations,
        buildings,
    }
}
