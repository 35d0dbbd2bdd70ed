//! Synthetic geometry-based multipath channel.
//!
//! Each (user, base station) link is a [`PathSet`]: a specular path when the
//! link is line-of-sight, plus a handful of scattered paths with complex
//! Gaussian gains and exponentially distributed excess delays. The channel
//! vector on resource block `n` sums the paths' array responses, each rotated
//! by the delay phase at the block's center frequency, so blocks differ only
//! through that phase.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::scenario::{AntennaPanel, BaseStation, BsKind, Point, Scenario, SPEED_OF_LIGHT};
use crate::seeds::mix;
use crate::units::db_to_linear;

#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub delay_s: f64,
    pub gain: Complex64,
    pub azimuth_aod: f64,
    pub elevation_aod: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    /// Sorted by ascending delay.
    pub paths: Vec<Path>,
    pub los: bool,
}

impl PathSet {
    /// Sum of path powers, i.e. the link gain of this realization per element.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    pub coefficients: Vec<Complex64>,
    pub user_id: usize,
    pub bs_id: usize,
    pub rb_index: usize,
}

impl ChannelVector {
    pub fn new(coefficients: Vec<Complex64>, user_id: usize, bs_id: usize, rb_index: usize) -> Self {
        Self {
            coefficients,
            user_id,
            bs_id,
            rb_index,
        }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coefficients.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

/// `a^H b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Line of sight between the BS antenna and a user at the configured UE
/// height: no building volume intersects the 3D segment.
pub fn is_los(scenario: &Scenario, bs: &BaseStation, user_position: Point) -> bool {
    let from = [bs.position_m.x, bs.position_m.y, bs.height_m];
    let to = [user_position.x, user_position.y, scenario.channel.user_height_m];
    !scenario.buildings.iter().any(|b| {
        segment_hits_box(
            from,
            to,
            [b.x_min_m, b.y_min_m, 0.0],
            [b.x_max_m, b.y_max_m, b.height_m],
        )
    })
}

/// Slab test; touching a face or edge does not count as a hit.
fn segment_hits_box(from: [f64; 3], to: [f64; 3], lo: [f64; 3], hi: [f64; 3]) -> bool {
    const EPS: f64 = 1e-9;
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for axis in 0..3 {
        let d = to[axis] - from[axis];
        if d.abs() < 1e-15 {
            if from[axis] <= lo[axis] || from[axis] >= hi[axis] {
                return false;
            }
            continue;
        }
        let (mut a, mut b) = ((lo[axis] - from[axis]) / d, (hi[axis] - from[axis]) / d);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t1 - t0 <= EPS {
            return false;
        }
    }
    true
}

/// Free-space loss at 1 m, `20 log10(4 pi f / c)`.
pub fn free_space_reference_db(frequency_hz: f64) -> f64 {
    20.0 * (4.0 * PI * frequency_hz / SPEED_OF_LIGHT).log10()
}

/// Log-distance loss in dB anchored at the 1 m free-space loss. NLOS links
/// use the steeper exponent plus a per-BS-class excess.
pub fn path_loss(scenario: &Scenario, bs: &BaseStation, user_position: Point, los: bool) -> f64 {
    let ch = &scenario.channel;
    let d2 = bs.position_m.distance(&user_position);
    let dz = bs.height_m - ch.user_height_m;
    let d = d2.hypot(dz).max(1.0);
    let reference = free_space_reference_db(scenario.band.center_frequency_hz);
    if los {
        reference + 10.0 * ch.los_exponent * d.log10()
    } else {
        let excess = match bs.kind {
            BsKind::Macro => ch.nlos_excess_macro_db,
            BsKind::Micro => ch.nlos_excess_micro_db,
        };
        reference + 10.0 * ch.nlos_exponent * d.log10() + excess
    }
}

/// Response of a uniform planar array toward (`azimuth`, `elevation`),
/// element `(r, c)` at index `r * cols + c`. Element positions are measured
/// from element (0, 0) along the panel's horizontal and tilted vertical axes,
/// so the boresight response is all ones.
pub fn steering_vector(
    panel: &AntennaPanel,
    azimuth: f64,
    elevation: f64,
    frequency_hz: f64,
) -> Vec<Complex64> {
    let spacing = panel.element_spacing_wavelengths * SPEED_OF_LIGHT / frequency_hz;
    let k = TAU * frequency_hz / SPEED_OF_LIGHT;
    let (a0, tilt) = (panel.azimuth_rad(), panel.downtilt_rad());
    let horizontal = [-a0.sin(), a0.cos(), 0.0];
    let vertical = [tilt.sin() * a0.cos(), tilt.sin() * a0.sin(), tilt.cos()];
    let dir = [
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    ];
    let dot = |v: [f64; 3]| v[0] * dir[0] + v[1] * dir[1] + v[2] * dir[2];
    let (step_h, step_v) = (k * spacing * dot(horizontal), k * spacing * dot(vertical));
    let mut out = Vec::with_capacity(panel.num_elements());
    for r in 0..panel.rows {
        for c in 0..panel.cols {
            out.push(Complex64::cis(r as f64 * step_v + c as f64 * step_h));
        }
    }
    out
}

/// Relative element power gain of a panel toward a direction: a cardioid
/// from 1 at boresight down to the front-to-back ratio behind the panel.
pub fn panel_pattern(panel: &AntennaPanel, azimuth: f64, elevation: f64) -> f64 {
    let n = panel.boresight();
    let cos_off = elevation.cos() * azimuth.cos() * n[0] + elevation.cos() * azimuth.sin() * n[1] + elevation.sin() * n[2];
    let back = db_to_linear(-panel.front_to_back_db);
    back + (1.0 - back) * (1.0 + cos_off) / 2.0
}

/// Concatenated response over all panels of a BS. Each panel is weighted by
/// its element pattern, normalized so the squared norm is always the total
/// element count; a single panel is therefore unweighted.
pub fn bs_steering_vector(bs: &BaseStation, azimuth: f64, elevation: f64, frequency_hz: f64) -> Vec<Complex64> {
    let pattern: Vec<f64> = bs.panels.iter().map(|p| panel_pattern(p, azimuth, elevation)).collect();
    let total: f64 = bs.panels.iter().zip(&pattern).map(|(p, g)| p.num_elements() as f64 * g).sum();
    let m = bs.num_elements() as f64;
    bs.panels
        .iter()
        .zip(&pattern)
        .flat_map(|(p, g)| {
            let amp = (g * m / total).sqrt();
            steering_vector(p, azimuth, elevation, frequency_hz)
                .into_iter()
                .map(move |a| a * amp)
        })
        .collect()
}

/// Multipath realization for one link. The result depends only on `rng_seed`,
/// the BS id and the user position quantized to 1 cm.
pub fn generate_paths(scenario: &Scenario, bs: &BaseStation, user_position: Point, rng_seed: u64) -> PathSet {
    generate_paths_with(scenario, bs, user_position, rng_seed, scenario.channel.num_scatter)
}

/// As [`generate_paths`] with an explicit scattered-path count; zero gives a
/// single deterministic path carrying the whole link gain.
pub fn generate_paths_with(
    scenario: &Scenario,
    bs: &BaseStation,
    user_position: Point,
    rng_seed: u64,
    num_scatter: usize,
) -> PathSet {
    let ch = &scenario.channel;
    let los = is_los(scenario, bs, user_position);
    let link_gain = db_to_linear(-path_loss(scenario, bs, user_position, los));

    let dx = user_position.x - bs.position_m.x;
    let dy = user_position.y - bs.position_m.y;
    let dz = ch.user_height_m - bs.height_m;
    let d2 = dx.hypot(dy);
    let base_delay = d2.hypot(dz) / SPEED_OF_LIGHT;
    let azimuth = dy.atan2(dx);
    let elevation = dz.atan2(d2);

    let specular = |power: f64| Path {
        delay_s: base_delay,
        gain: Complex64::new(power.sqrt(), 0.0),
        azimuth_aod: azimuth,
        elevation_aod: elevation,
    };

    if num_scatter == 0 {
        return PathSet {
            paths: vec![specular(link_gain)],
            los,
        };
    }

    let quantize = |v: f64| (v * 100.0).round() as i64 as u64;
    let key = mix(mix(mix(rng_seed, bs.id as u64), quantize(user_position.x)), quantize(user_position.y));
    let mut rng = ChaCha8Rng::seed_from_u64(key);

    let mut paths = Vec::with_capacity(num_scatter + 1);
    let scattered_power = if los {
        let k = db_to_linear(ch.rician_k_db);
        paths.push(specular(link_gain * k / (k + 1.0)));
        link_gain / (k + 1.0)
    } else {
        link_gain
    };

    let per_path = scattered_power / num_scatter as f64;
    let amplitude = Normal::new(0.0, (per_path / 2.0).sqrt()).expect("finite std");
    let elevation_jitter = Normal::new(0.0, ch.elevation_spread_deg.to_radians()).expect("finite std");
    let excess = (ch.delay_spread_s > 0.0).then(|| Exp::new(1.0 / ch.delay_spread_s).expect("positive rate"));
    for _ in 0..num_scatter {
        let extra = excess.as_ref().map_or(0.0, |e| e.sample(&mut rng));
        let gain = Complex64::new(amplitude.sample(&mut rng), amplitude.sample(&mut rng));
        paths.push(Path {
            delay_s: base_delay + extra,
            gain,
            azimuth_aod: rng.random_range(0.0..TAU),
            elevation_aod: elevation + elevation_jitter.sample(&mut rng),
        });
    }
    paths.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
    PathSet { paths, los }
}

/// `h = sum_p g_p exp(-j 2 pi f_n tau_p) a(theta_p, phi_p)` on resource block
/// `rb_index`, with array responses evaluated at the carrier frequency.
pub fn channel_vector(scenario: &Scenario, paths: &PathSet, bs: &BaseStation, rb_index: usize) -> ChannelVector {
    let n = scenario.band.rb_center_frequency_hz(rb_index);
    let fc = scenario.band.center_frequency_hz;
    let mut h = vec![Complex64::new(0.0, 0.0); bs.num_elements()];
    for path in &paths.paths {
        let coef = path.gain * Complex64::cis(-TAU * (n * path.delay_s).fract());
        let a = bs_steering_vector(bs, path.azimuth_aod, path.elevation_aod, fc);
        for (hi, ai) in h.iter_mut().zip(&a) {
            *hi += coef * ai;
        }
    }
    ChannelVector::new(h, 0, bs.id, rb_index)
}

/// A link's paths together with their cached array responses.
///
/// Within a coherence block the scatterers move rigidly with the user: a
/// displacement lengthens every path by the change in BS-user distance, so
/// the link only picks up a per-RB phase rotation.
#[derive(Debug, Clone)]
pub struct LinkResponse {
    pub bs_id: usize,
    pub paths: PathSet,
    /// BS antenna (x, y, height above user antenna).
    bs_xyz: (f64, f64, f64),
    /// Current user position.
    anchor: Point,
    steering: Vec<Vec<Complex64>>,
}

impl LinkResponse {
    pub fn new(scenario: &Scenario, bs: &BaseStation, user_position: Point, paths: PathSet) -> Self {
        let fc = scenario.band.center_frequency_hz;
        let steering = paths
            .paths
            .iter()
            .map(|p| bs_steering_vector(bs, p.azimuth_aod, p.elevation_aod, fc))
            .collect();
        Self {
            bs_id: bs.id,
            paths,
            bs_xyz: (bs.position_m.x, bs.position_m.y, bs.height_m - scenario.channel.user_height_m),
            anchor: user_position,
            steering,
        }
    }

    pub fn num_elements(&self) -> usize {
        self.steering.first().map_or(0, Vec::len)
    }

    fn distance_to(&self, p: Point) -> f64 {
        let (x, y, dz) = self.bs_xyz;
        (p.x - x).hypot(p.y - y).hypot(dz)
    }

    /// Same scatterers, user moved by `delta`.
    pub fn displaced(&self, delta: Point) -> Self {
        let moved = Point::new(self.anchor.x + delta.x, self.anchor.y + delta.y);
        let shift = (self.distance_to(moved) - self.distance_to(self.anchor)) / SPEED_OF_LIGHT;
        let mut out = self.clone();
        out.anchor = moved;
        for p in &mut out.paths.paths {
            p.delay_s = (p.delay_s + shift).max(0.0);
        }
        out
    }

    pub fn coefficients(&self, scenario: &Scenario, rb_index: usize) -> Vec<Complex64> {
        let f = scenario.band.rb_center_frequency_hz(rb_index);
        let mut h = vec![Complex64::new(0.0, 0.0); self.num_elements()];
        for (path, a) in self.paths.paths.iter().zip(&self.steering) {
            let phase = -TAU * (f * path.delay_s).fract();
            let coef = path.gain * Complex64::cis(phase);
            for (hi, ai) in h.iter_mut().zip(a) {
                *hi += coef * ai;
            }
        }
        h
    }

    pub fn channel_vector(&self, scenario: &Scenario, user_id: usize, rb_index: usize) -> ChannelVector {
        ChannelVector::new(self.coefficients(scenario, rb_index), user_id, self.bs_id, rb_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{Building, Rect};

    fn open_scenario() -> Scenario {
        Scenario {
            buildings: vec![],
            ..Scenario::default()
        }
    }

    #[test]
    fn empty_city_is_always_los() {
        let s = open_scenario();
        for bs in &s.base_stations {
            for p in s.outdoor_grid(50.0) {
                assert!(is_los(&s, bs, p));
            }
        }
    }

    #[test]
    fn tall_building_blocks_and_low_building_does_not() {
        let mut s = open_scenario();
        let bs = s.base_stations[0].clone();
        let user = Point::new(bs.position_m.x + 100.0, bs.position_m.y);
        let mid = Rect::new(bs.position_m.x + 40.0, bs.position_m.y - 10.0, bs.position_m.x + 60.0, bs.position_m.y + 10.0);

        s.buildings = vec![Building::new(mid, 60.0)];
        assert!(!is_los(&s, &bs, user));

        // Segment height over the building spans 45 - 43.5 * 0.6 > 3 m.
        s.buildings = vec![Building::new(mid, 3.0)];
        assert!(is_los(&s, &bs, user));

        // Oracle: the segment's height at the far wall (t = 0.6) is
        // 45 + 0.6 * (1.5 - 45) = 18.9 m; a 19 m block occludes, 18.8 m does not.
        s.buildings = vec![Building::new(mid, 19.0)];
        assert!(!is_los(&s, &bs, user));
        s.buildings = vec![Building::new(mid, 18.8)];
        assert!(is_los(&s, &bs, user));
    }

    #[test]
    fn free_space_at_one_meter() {
        let s = open_scenario();
        let mut bs = s.base_stations[1].clone();
        bs.height_m = s.channel.user_height_m;
        let oracle = 20.0 * (4.0 * PI * 1.0 * 3.6e9 / 299_792_458.0f64).log10();
        let pl = path_loss(&s, &bs, Point::new(bs.position_m.x + 1.0, bs.position_m.y), true);
        assert!((pl - 43.6).abs() < 0.1, "{pl}");
        assert!((pl - oracle).abs() < 1e-9);
    }

    #[test]
    fn los_doubling_distance_adds_six_db() {
        let s = open_scenario();
        let mut bs = s.base_stations[1].clone();
        bs.height_m = s.channel.user_height_m;
        let at = |d: f64| path_loss(&s, &bs, Point::new(bs.position_m.x + d, bs.position_m.y), true);
        assert!((at(80.0) - at(40.0) - 6.0206).abs() < 1e-3);
    }

    #[test]
    fn nlos_exceeds_los_and_is_continuous() {
        let s = open_scenario();
        for bs in &s.base_stations {
            let mut prev: Option<(f64, f64)> = None;
            for step in 0..=2000 {
                let d = 10.0 + step as f64 * 0.495;
                let p = Point::new(bs.position_m.x + d, bs.position_m.y);
                let (los, nlos) = (path_loss(&s, bs, p, true), path_loss(&s, bs, p, false));
                assert!(nlos > los, "d = {d}");
                if let Some((pl, pn)) = prev {
                    // The 3D distance grows by at most one step, so the loss
                    // can rise by at most 10 n log10(1 + step / d).
                    let d3 = d.hypot(bs.height_m - s.channel.user_height_m) - 0.495;
                    let bound = |n: f64| 10.0 * n * (1.0 + 0.495 / d3).log10() + 1e-9;
                    assert!((los - pl).abs() <= bound(s.channel.los_exponent));
                    assert!((nlos - pn).abs() <= bound(s.channel.nlos_exponent));
                }
                prev = Some((los, nlos));
            }
        }
    }

    #[test]
    fn single_element_and_boresight_steering() {
        let single = AntennaPanel::new(1, 1, 30.0, 10.0);
        for (az, el) in [(0.0, 0.0), (1.0, -0.3), (3.0, 0.7)] {
            assert_eq!(steering_vector(&single, az, el, 3.6e9), vec![Complex64::new(1.0, 0.0)]);
        }
        let panel = AntennaPanel::new(8, 16, 40.0, 6.0);
        let a = steering_vector(&panel, panel.azimuth_rad(), -panel.downtilt_rad(), 3.6e9);
        assert_eq!(a.len(), 128);
        for v in a {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn steering_matches_element_positions() {
        // Untilted vertical 8x2 panel facing +x: element (r, c) sits at
        // (0, c d, r d); a plane wave from azimuth 30 deg adds phase
        // k (c d sin 30).
        let panel = AntennaPanel::new(8, 2, 0.0, 0.0);
        let f = 3.6e9;
        let lambda = SPEED_OF_LIGHT / f;
        let d = 0.5 * lambda;
        let az = 30f64.to_radians();
        let a = steering_vector(&panel, az, 0.0, f);
        for r in 0..8 {
            for c in 0..2 {
                let pos = [0.0, c as f64 * d, r as f64 * d];
                let u = [az.cos(), az.sin(), 0.0];
                let phase = TAU / lambda * (pos[0] * u[0] + pos[1] * u[1] + pos[2] * u[2]);
                let got = a[r * 2 + c];
                assert!((got - Complex64::cis(phase)).norm() < 1e-12);
                assert!((got.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_path_set_carries_full_gain() {
        let s = open_scenario();
        let bs = &s.base_stations[0];
        let u = Point::new(250.0, 300.0);
        let ps = generate_paths_with(&s, bs, u, 3, 0);
        assert!(ps.los);
        assert_eq!(ps.paths.len(), 1);
        let gain_db = 10.0 * ps.paths[0].gain.norm_sqr().log10();
        assert!((gain_db + path_loss(&s, bs, u, true)).abs() < 1e-9);
    }

    #[test]
    fn paths_are_deterministic_and_sorted() {
        let s = Scenario::default();
        let u = Point::new(7.5, 200.0);
        for bs in &s.base_stations {
            let a = generate_paths(&s, bs, u, 42);
            assert_eq!(a, generate_paths(&s, bs, u, 42));
            assert_ne!(a, generate_paths(&s, bs, u, 43));
            assert!(a.paths.windows(2).all(|w| w[0].delay_s <= w[1].delay_s));
            assert!(a.paths.iter().all(|p| p.delay_s >= 0.0));
            let expected = s.channel.num_scatter + usize::from(a.los);
            assert_eq!(a.paths.len(), expected);
        }
    }

    #[test]
    fn flat_channel_for_single_zero_delay_path() {
        let s = Scenario::default();
        let bs = &s.base_stations[1];
        let ps = PathSet {
            paths: vec![Path {
                delay_s: 0.0,
                gain: Complex64::new(0.3, -0.4),
                azimuth_aod: 0.7,
                elevation_aod: -0.1,
            }],
            los: true,
        };
        let h0 = channel_vector(&s, &ps, bs, 0);
        let a = bs_steering_vector(bs, 0.7, -0.1, s.band.center_frequency_hz);
        for rb in [0, 17, 68] {
            let h = channel_vector(&s, &ps, bs, rb);
            assert_eq!(h.len(), 16);
            assert_eq!(h.coefficients, h0.coefficients);
            for (hi, ai) in h.coefficients.iter().zip(&a) {
                assert!((hi - Complex64::new(0.3, -0.4) * ai).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn half_rb_delay_difference_alternates() {
        let s = Scenario::default();
        let bs = &s.base_stations[1];
        let tau = 1.0 / (2.0 * s.band.rb_bandwidth_hz);
        let mk = |delay_s| Path {
            delay_s,
            gain: Complex64::new(1.0, 0.0),
            azimuth_aod: 0.2,
            elevation_aod: 0.0,
        };
        let ps = PathSet {
            paths: vec![mk(0.0), mk(tau)],
            los: true,
        };
        let m = bs.num_elements() as f64;
        // Two-phasor oracle: |1 + exp(-j 2 pi f_n tau)|^2 per element.
        for rb in 0..s.band.num_resource_blocks {
            let f = s.band.rb_center_frequency_hz(rb);
            let oracle = (Complex64::new(1.0, 0.0) + Complex64::cis(-TAU * f * tau)).norm_sqr() * m;
            let got = channel_vector(&s, &ps, bs, rb).norm_sqr();
            assert!((got - oracle).abs() < 1e-6, "rb {rb}: {got} vs {oracle}");
        }
        let g34 = channel_vector(&s, &ps, bs, 34).norm_sqr();
        let g35 = channel_vector(&s, &ps, bs, 35).norm_sqr();
        assert!((g34 - 4.0 * m).abs() < 1e-6 && g35 < 1e-6);
    }

    #[test]
    fn channel_matches_phasor_oracle() {
        let s = Scenario::default();
        let fc = s.band.center_frequency_hz;
        for seed in 0..100u64 {
            let bs = &s.base_stations[(seed % 6) as usize];
            let u = Point::new(5.0 + (seed as f64 * 37.0) % 370.0, 7.5);
            let ps = generate_paths(&s, bs, u, seed);
            let rb = (seed as usize * 7) % 69;
            let f = s.band.rb_center_frequency_hz(rb);
            let mut oracle = vec![Complex64::new(0.0, 0.0); bs.num_elements()];
            for p in &ps.paths {
                let (phase_re, phase_im) = ((TAU * f * p.delay_s).cos(), -(TAU * f * p.delay_s).sin());
                let a = bs_steering_vector(bs, p.azimuth_aod, p.elevation_aod, fc);
                for (o, ai) in oracle.iter_mut().zip(&a) {
                    *o += p.gain * Complex64::new(phase_re, phase_im) * ai;
                }
            }
            let expected: f64 = oracle.iter().map(|c| c.re * c.re + c.im * c.im).sum();
            let got = channel_vector(&s, &ps, bs, rb).norm_sqr();
            assert!((got - expected).abs() <= 1e-9 * expected.max(1e-300), "{got} vs {expected}");
        }
    }

    #[test]
    fn mean_channel_energy_matches_link_gain() {
        let s = Scenario::default();
        for (bs, u) in [(&s.base_stations[1], Point::new(373.5, 100.0)), (&s.base_stations[0], Point::new(7.5, 450.0))] {
            let los = is_los(&s, bs, u);
            let gain = db_to_linear(-path_loss(&s, bs, u, los));
            let m = bs.num_elements() as f64;
            let n = 10_000;
            let mean: f64 = (0..n)
                .map(|seed| channel_vector(&s, &generate_paths(&s, bs, u, seed), bs, 10).norm_sqr())
                .sum::<f64>()
                / n as f64;
            let rel = (mean / (gain * m) - 1.0).abs();
            assert!(rel < 0.05, "bs {} los {los}: relative error {rel}", bs.id);
        }
    }

    #[test]
    fn small_motion_barely_changes_gain() {
        let s = Scenario::default();
        let eps = 0.009 * s.band.wavelength_m();
        for bs in &s.base_stations {
            for seed in 0..20 {
                let u = Point::new(187.5 + seed as f64, 142.5);
                let link = LinkResponse::new(&s, bs, u, generate_paths(&s, bs, u, seed));
                let moved = link.displaced(Point::new(eps * 0.6, eps * 0.8));
                for rb in 0..s.band.num_resource_blocks {
                    let a: f64 = link.coefficients(&s, rb).iter().map(|c| c.norm_sqr()).sum();
                    let b: f64 = moved.coefficients(&s, rb).iter().map(|c| c.norm_sqr()).sum();
                    assert!((b / a - 1.0).abs() < 0.01, "bs {} seed {seed} rb {rb}: {}", bs.id, b / a);
                }
            }
        }
    }

    #[test]
    fn displacement_tracks_geometric_delay() {
        let s = Scenario::default();
        let bs = &s.base_stations[2];
        let u = Point::new(300.0, 140.0);
        let link = LinkResponse::new(&s, bs, u, generate_paths(&s, bs, u, 4));
        let delta = Point::new(-0.7, 1.9);
        let moved = link.displaced(delta);
        let dist = |p: Point| {
            let dx = p.x - bs.position_m.x;
            let dy = p.y - bs.position_m.y;
            let dz = bs.height_m - s.channel.user_height_m;
            (dx * dx + dy * dy + dz * dz).sqrt()
        };
        let expected = (dist(Point::new(u.x + delta.x, u.y + delta.y)) - dist(u)) / SPEED_OF_LIGHT;
        for (a, b) in link.paths.paths.iter().zip(&moved.paths.paths) {
            assert!((b.delay_s - a.delay_s - expected).abs() < 1e-18);
            assert_eq!(a.gain, b.gain);
        }
        let back = moved.displaced(Point::new(-delta.x, -delta.y));
        for (a, b) in link.paths.paths.iter().zip(&back.paths.paths) {
            assert!((a.delay_s - b.delay_s).abs() < 1e-15 * a.delay_s);
        }
    }

    #[test]
    fn inter_rb_correlation_decays_with_separation() {
        let s = Scenario::default();
        let bs = &s.base_stations[1];
        let u = Point::new(373.5, 200.0);
        let mut corr = [0.0f64; 4];
        let seps = [1usize, 4, 16, 60];
        let n = 400;
        for seed in 0..n {
            let link = LinkResponse::new(&s, bs, u, generate_paths(&s, bs, u, seed));
            let h0 = link.coefficients(&s, 0);
            for (c, &sep) in corr.iter_mut().zip(&seps) {
                let h = link.coefficients(&s, sep);
                let num = inner(&h0, &h).norm();
                let den = (inner(&h0, &h0).re * inner(&h, &h).re).sqrt();
                *c += num / den / n as f64;
            }
        }
        assert!(corr.windows(2).all(|w| w[0] > w[1]), "{corr:?}");
    }
}
