use cfsim_core::scenario::{AntennaPanel, BsKind, ScenarioError};
use cfsim_core::{Building, Point, Rect, Scenario, ServingMode};
use proptest::prelude::*;

fn reference_file() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/default.toml")
}

#[test]
fn shipped_scenario_file_is_the_default() {
    let s = Scenario::load(reference_file()).unwrap();
    assert_eq!(s, Scenario::default());
}

#[test]
fn default_constants() {
    let s = Scenario::default();
    assert_eq!(s.num_bs(), 6);
    assert_eq!(s.band.num_resource_blocks, 69);
    assert_eq!(s.base_stations[0].tx_power_dbm, 46.0);
    assert_eq!(s.base_stations[0].num_elements(), 128);
    assert_eq!(s.base_stations[0].kind, BsKind::Macro);
    for bs in &s.base_stations[1..] {
        assert_eq!(bs.kind, BsKind::Micro);
        assert_eq!((bs.height_m, bs.tx_power_dbm, bs.num_elements(), bs.panels.len()), (6.0, 30.0, 16, 2));
    }
    assert!((s.base_stations[0].tx_power_w() - 39.81).abs() < 0.01);
    assert!(s.band.num_resource_blocks as f64 * s.band.rb_bandwidth_hz <= s.band.bandwidth_hz);
}

/// Counts grid points by direct enumeration and a point-in-rectangle test.
fn enumerate_outdoor(bounds: Rect, buildings: &[Rect], spacing: f64) -> usize {
    let nx = ((bounds.width() / spacing) + 1e-9).floor() as usize + 1;
    let ny = ((bounds.height() / spacing) + 1e-9).floor() as usize + 1;
    let mut n = 0;
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = (bounds.x_min_m + i as f64 * spacing, bounds.y_min_m + j as f64 * spacing);
            let inside = buildings.iter().any(|r| {
                let in_x = x >= r.x_min_m && (x < r.x_max_m || (r.x_max_m == bounds.x_max_m && x <= r.x_max_m));
                let in_y = y >= r.y_min_m && (y < r.y_max_m || (r.y_max_m == bounds.y_max_m && y <= r.y_max_m));
                in_x && in_y
            });
            n += usize::from(!inside);
        }
    }
    n
}

#[test]
fn grid_examples() {
    let mut s = Scenario::default();
    s.bounds = Rect::new(0.0, 0.0, 100.0, 100.0);
    s.buildings.clear();
    s.base_stations.truncate(1);
    s.base_stations[0].position_m = Point::new(50.0, 50.0);
    assert_eq!(s.outdoor_grid(5.0).len(), 441);

    let left = Rect::new(0.0, 0.0, 50.0, 100.0);
    s.buildings = vec![Building::new(left, 10.0)];
    s.base_stations[0].position_m = Point::new(75.0, 50.0);
    let grid = s.outdoor_grid(5.0);
    assert_eq!(grid.len(), 231);
    assert_eq!(grid.len(), enumerate_outdoor(s.bounds, &[left], 5.0));
    // Row-major: x varies fastest.
    assert_eq!(grid[0], Point::new(50.0, 0.0));
    assert_eq!(grid[1], Point::new(55.0, 0.0));
    assert_eq!(grid[11], Point::new(50.0, 5.0));
}

#[test]
fn default_grid_at_five_meters() {
    let s = Scenario::default();
    let grid = s.outdoor_grid(5.0);
    let footprints: Vec<Rect> = s.buildings.iter().map(Building::footprint).collect();
    assert_eq!(grid.len(), enumerate_outdoor(s.bounds, &footprints, 5.0));
}

#[test]
fn cluster_bounds() {
    let mut s = Scenario::default();
    for (c, ok) in [(0, false), (1, true), (6, true), (7, false)] {
        s.serving_mode = ServingMode::Cluster(c);
        assert_eq!(s.validate().is_ok(), ok, "C = {c}");
    }
}

#[test]
fn minimal_scenario_is_valid() {
    let mut s = Scenario::default();
    s.num_users = 1;
    s.buildings.clear();
    s.base_stations.truncate(1);
    s.band.num_resource_blocks = 1;
    s.validate().unwrap();
    let back = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, s);
}

#[test]
fn malformed_file_is_a_parse_error() {
    let err = Scenario::from_toml_str("num_users = \"many\"").unwrap_err();
    assert!(matches!(err, ScenarioError::Parse(_)));
    let err = Scenario::load("/nonexistent/scenario.toml").unwrap_err();
    assert!(matches!(err, ScenarioError::Io { .. }));
}

fn field_of(err: ScenarioError) -> String {
    match err {
        ScenarioError::Invalid { field, .. } => field,
        other => panic!("expected a validation error, got {other}"),
    }
}

/// One mutation per invariant, each paired with the field the error must name.
fn single_field_violations() -> Vec<(&'static str, Box<dyn Fn(&mut Scenario)>)> {
    vec![
        ("num_users", Box::new(|s| s.num_users = 0)),
        ("num_runs", Box::new(|s| s.num_runs = 0)),
        ("user_speed_mps", Box::new(|s| s.user_speed_mps = -1.0)),
        ("noise_figure_db", Box::new(|s| s.noise_figure_db = f64::NAN)),
        ("band.center_frequency_hz", Box::new(|s| s.band.center_frequency_hz = 0.0)),
        ("band.bandwidth_hz", Box::new(|s| s.band.bandwidth_hz = -25e6)),
        ("band.num_resource_blocks", Box::new(|s| s.band.num_resource_blocks = 0)),
        ("band.rb_bandwidth_hz", Box::new(|s| s.band.rb_bandwidth_hz = 0.0)),
        ("band.slot_duration_s", Box::new(|s| s.band.slot_duration_s = 0.0)),
        ("band", Box::new(|s| s.band.num_resource_blocks = 70)),
        ("bounds", Box::new(|s| s.bounds.x_max_m = s.bounds.x_min_m)),
        ("serving_mode", Box::new(|s| s.serving_mode = ServingMode::Cluster(7))),
        ("base_stations", Box::new(|s| s.base_stations.clear())),
        ("base_stations[0].height_m", Box::new(|s| s.base_stations[0].height_m = 0.0)),
        ("base_stations[0].tx_power_dbm", Box::new(|s| s.base_stations[0].tx_power_dbm = f64::INFINITY)),
        ("base_stations[2].id", Box::new(|s| s.base_stations[2].id = 9)),
        ("base_stations[0].panels", Box::new(|s| {
            let extra = s.base_stations[0].panels[0].clone();
            s.base_stations[0].panels.push(extra);
        })),
        ("base_stations[1].num_antennas", Box::new(|s| s.base_stations[1].num_antennas = 32)),
        ("base_stations[1].panels[0].element_spacing_wavelengths", Box::new(|s| {
            s.base_stations[1].panels[0].element_spacing_wavelengths = 0.0
        })),
        ("base_stations[3].position_m", Box::new(|s| s.base_stations[3].position_m = Point::new(-5.0, 10.0))),
        ("buildings[0].height_m", Box::new(|s| s.buildings[0].height_m = 0.0)),
        ("buildings[1]", Box::new(|s| s.buildings[1].x_max_m = 1000.0)),
        ("channel.nlos_exponent", Box::new(|s| s.channel.nlos_exponent = 1.5)),
        ("channel.coherence_slots", Box::new(|s| s.channel.coherence_slots = 0)),
        ("scheduler.correlation_threshold", Box::new(|s| s.scheduler.correlation_threshold = 1.5)),
        ("scheduler.csi_delay_slots", Box::new(|s| s.scheduler.csi_delay_slots = 2)),
    ]
}

#[test]
fn every_single_field_violation_is_rejected() {
    Scenario::default().validate().unwrap();
    for (field, mutate) in single_field_violations() {
        let mut s = Scenario::default();
        mutate(&mut s);
        let got = field_of(s.validate().unwrap_err());
        assert!(got.starts_with(field), "mutating {field} reported {got}");
    }
}

fn arb_panel() -> impl Strategy<Value = AntennaPanel> {
    (1usize..5, 1usize..5, -180.0f64..180.0, 0.0f64..15.0)
        .prop_map(|(r, c, az, tilt)| AntennaPanel::new(r, c, az, tilt))
}

fn arb_scenario() -> impl Strategy<Value = Scenario> {
    (
        1usize..60,
        0.0f64..5.0,
        0usize..500,
        1usize..12,
        0.0f64..12.0,
        prop::collection::vec(arb_panel(), 2),
        proptest::bool::ANY,
        0.05f64..0.95,
    )
        .prop_map(|(users, speed, slots, runs, nf, panels, uc, thr)| {
            let mut s = Scenario::default();
            s.num_users = users;
            s.user_speed_mps = speed;
            s.num_slots = slots;
            s.num_runs = runs;
            s.noise_figure_db = nf;
            s.serving_mode = if uc { ServingMode::UserCentric } else { ServingMode::Cluster(1 + users % 6) };
            s.scheduler.correlation_threshold = thr;
            s.base_stations[2].panels = panels;
            s.base_stations[2].num_antennas = s.base_stations[2].num_elements();
            s
        })
}

fn arb_rect(outer: f64) -> impl Strategy<Value = Rect> {
    (0.0..outer, 0.0..outer, 1.0..outer / 2.0, 1.0..outer / 2.0).prop_map(move |(x, y, w, h)| {
        Rect::new(x.min(outer - w), y.min(outer - h), (x + w).min(outer), (y + h).min(outer))
    })
}

proptest! {
    #[test]
    fn toml_round_trip(s in arb_scenario()) {
        s.validate().unwrap();
        let text = s.to_toml_string().unwrap();
        prop_assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
    }

    #[test]
    fn file_round_trip(s in arb_scenario()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.toml");
        s.write(&path).unwrap();
        prop_assert_eq!(Scenario::load(&path).unwrap(), s);
    }

    #[test]
    fn grid_avoids_footprints(rects in prop::collection::vec(arb_rect(100.0), 0..6), spacing in 1.0f64..9.0) {
        let mut s = Scenario::default();
        s.bounds = Rect::new(0.0, 0.0, 100.0, 100.0);
        s.buildings = rects.iter().map(|r| Building::new(*r, 10.0)).collect();
        s.base_stations.truncate(1);
        s.base_stations[0].position_m = Point::new(50.0, 50.0);
        s.base_stations[0].height_m = 45.0;
        let grid = s.outdoor_grid(spacing);
        for p in &grid {
            prop_assert!(s.bounds.contains(*p));
            for r in &rects {
                let strictly_inside = p.x > r.x_min_m && p.x < r.x_max_m && p.y > r.y_min_m && p.y < r.y_max_m;
                prop_assert!(!strictly_inside, "{:?} inside {:?}", p, r);
            }
        }
        prop_assert_eq!(grid.len(), enumerate_outdoor(s.bounds, &rects, spacing));
    }
}
