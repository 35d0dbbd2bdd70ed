//! Precoding, power allocation and link budgets.
//!
//! Every base station uses maximum-ratio transmission, `w = h / |h|`, and
//! splits its per-block power budget `P_l / N_rb` over the users it serves in
//! proportion to their channel gains. The signal a user receives from its
//! serving set adds coherently:
//!
//! ```text
//! P_k = | sum_{l in S(k)} sqrt(p_kl) h_kl^H w_kl |^2
//! I_k = sum_{i in K} | sum_{l in S(i)} sqrt(p_il) h_kl^H w_il |^2 - P_k
//! ```

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{inner, ChannelVector};
use crate::scenario::BandPlan;
use crate::units::db_to_linear;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;
/// Reference noise temperature, K.
pub const NOISE_TEMPERATURE_K: f64 = 290.0;

const INTERFERENCE_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhyError {
    #[error("zero channel between user {user_id} and BS {bs_id} on RB {rb_index}")]
    ZeroChannel {
        user_id: usize,
        bs_id: usize,
        rb_index: usize,
    },
    #[error("negative interference {value:e} W for user {user_id}")]
    NegativeInterference { user_id: usize, value: f64 },
    #[error("invalid link budget component: {0}")]
    InvalidBudget(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub weights: Vec<Complex64>,
    pub user_id: usize,
    pub bs_id: usize,
    pub rb_index: usize,
}

/// Maximum-ratio transmission weights `h / |h|`.
pub fn mrt_precoder(h: &ChannelVector) -> Result<Precoder, PhyError> {
    let norm = h.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(PhyError::ZeroChannel {
            user_id: h.user_id,
            bs_id: h.bs_id,
            rb_index: h.rb_index,
        });
    }
    Ok(Precoder {
        weights: h.coefficients.iter().map(|c| c / norm).collect(),
        user_id: h.user_id,
        bs_id: h.bs_id,
        rb_index: h.rb_index,
    })
}

/// Transmit powers `p_kln` of one resource block.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    /// Scheduled users in selection order.
    pub users: Vec<usize>,
    /// `watts[j][l]`: power from BS `l` to `users[j]`.
    pub watts: Vec<Vec<f64>>,
    /// Per-BS budget `P_l / N_rb`.
    pub budget_w: Vec<f64>,
    /// Base stations with no gain toward any scheduled user; they stay silent.
    pub muted: Vec<usize>,
}

impl PowerAllocation {
    pub fn num_bs(&self) -> usize {
        self.budget_w.len()
    }

    /// Power toward `user_id` from `bs`, zero when the user is not scheduled.
    pub fn power(&self, user_id: usize, bs: usize) -> f64 {
        self.users
            .iter()
            .position(|&u| u == user_id)
            .map_or(0.0, |j| self.watts[j][bs])
    }

    pub fn bs_total(&self, bs: usize) -> f64 {
        self.watts.iter().map(|row| row[bs]).sum()
    }
}

/// Gain-proportional split of each BS's per-block budget:
/// `p_kl = (P_l / N_rb) |h_kl|^2 / sum_{i in K} |h_il|^2`.
///
/// `h_norms[j][l]` is `|h|^2` between `scheduled[j]` and BS `l`. The split
/// runs over every scheduled user, served or not; a BS only radiates the
/// shares of users it serves. A BS whose column sums to zero is listed in
/// `muted`.
pub fn allocate_power(h_norms: &[Vec<f64>], scheduled: &[usize], tx_power_w: &[f64], num_rb: usize) -> PowerAllocation {
    debug_assert_eq!(h_norms.len(), scheduled.len());
    let num_bs = tx_power_w.len();
    let budget_w: Vec<f64> = tx_power_w.iter().map(|p| p / num_rb as f64).collect();
    let mut watts = vec![vec![0.0; num_bs]; scheduled.len()];
    let mut muted = Vec::new();
    for l in 0..num_bs {
        let total: f64 = h_norms.iter().map(|row| row[l]).sum();
        if !(total > 0.0) {
            muted.push(l);
            continue;
        }
        for (row, norms) in watts.iter_mut().zip(h_norms) {
            debug_assert!(norms[l] >= 0.0);
            row[l] = budget_w[l] * norms[l] / total;
        }
    }
    PowerAllocation {
        users: scheduled.to_vec(),
        watts,
        budget_w,
        muted,
    }
}

/// `sum_{l in serving} sqrt(p_l) h_l^H w_l` for a receiving user with
/// per-BS channels `h` and a transmitting user's per-BS precoders `w` and
/// powers `p`. Base stations without a precoder contribute nothing.
pub fn coherent_amplitude(h: &[ChannelVector], w: &[Option<Precoder>], p: &[f64], serving: &[usize]) -> Complex64 {
    serving
        .iter()
        .filter_map(|&l| {
            w[l].as_ref()
                .map(|w| p[l].sqrt() * inner(&h[l].coefficients, &w.weights))
        })
        .sum()
}

/// Coherently combined wanted power of a user.
pub fn received_power(h: &[ChannelVector], w: &[Option<Precoder>], p: &[f64], serving_set: &[usize]) -> f64 {
    coherent_amplitude(h, w, p, serving_set).norm_sqr()
}

/// Everything user `user_id` receives from the streams of all users in the
/// allocation minus its own wanted power.
///
/// `precoders[j]` and `serving_sets[j]` belong to `power.users[j]`, and
/// `h_k` holds the per-BS channels of `user_id`.
pub fn interference_power(
    user_id: usize,
    h_k: &[ChannelVector],
    precoders: &[Vec<Option<Precoder>>],
    power: &PowerAllocation,
    serving_sets: &[Vec<usize>],
) -> Result<f64, PhyError> {
    let own = power
        .users
        .iter()
        .position(|&u| u == user_id)
        .expect("interference requested for an unscheduled user");
    let mut total = 0.0;
    let mut wanted = 0.0;
    for (j, _) in power.users.iter().enumerate() {
        let term = coherent_amplitude(h_k, &precoders[j], &power.watts[j], &serving_sets[j]).norm_sqr();
        if j == own {
            wanted = term;
        }
        total += term;
    }
    clamp_interference(user_id, total - wanted, total)
}

fn clamp_interference(user_id: usize, value: f64, scale: f64) -> Result<f64, PhyError> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -INTERFERENCE_SLACK * scale.max(1.0) {
        Ok(0.0)
    } else {
        Err(PhyError::NegativeInterference { user_id, value })
    }
}

/// Thermal noise over one resource block, `k T B` scaled by the receiver
/// noise figure.
pub fn noise_power(band: &BandPlan, noise_figure_db: f64) -> f64 {
    noise_power_in(band.rb_bandwidth_hz, noise_figure_db)
}

pub fn noise_power_in(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz * db_to_linear(noise_figure_db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub wanted_power: f64,
    pub interference: f64,
    pub noise: f64,
    pub sinr: f64,
}

impl LinkBudget {
    pub fn sinr_db(&self) -> f64 {
        10.0 * self.sinr.log10()
    }
}

/// `P / (I + N)`.
pub fn sinr(wanted_power: f64, interference: f64, noise: f64) -> Result<LinkBudget, PhyError> {
    for (name, v) in [("wanted power", wanted_power), ("interference", interference), ("noise", noise)] {
        if v.is_nan() || v < 0.0 {
            return Err(PhyError::InvalidBudget(format!("{name} = {v}")));
        }
    }
    let denom = interference + noise;
    let ratio = if denom.is_infinite() {
        0.0
    } else if denom > 0.0 {
        wanted_power / denom
    } else {
        f64::INFINITY
    };
    Ok(LinkBudget {
        wanted_power,
        interference,
        noise,
        sinr: ratio,
    })
}
