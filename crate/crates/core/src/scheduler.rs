//! Centralized proportional-fair scheduling with correlation-gated spatial
//! multiplexing.
//!
//! Every resource block is scheduled on its own. Users are added greedily:
//! each step tries every remaining user whose channel is weakly correlated
//! with all users already selected, re-estimates the SINR of the whole group
//! with gain-proportional powers and MRT, and keeps the candidate that raises
//! `sum_k r_k / R_k` the most. Selection stops once no candidate raises it.

use num_complex::Complex64;
use thiserror::Error;

use crate::channel::{inner, ChannelVector};
use crate::link_adaptation::McsTable;
use crate::phy::{self, allocate_power, mrt_precoder, LinkBudget, PhyError, PowerAllocation, Precoder};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchedulerError {
    #[error("cannot correlate a zero-norm channel")]
    ZeroNorm,
    #[error(transparent)]
    Phy(#[from] PhyError),
}

/// Exponential moving average of each user's served throughput.
#[derive(Debug, Clone, PartialEq)]
pub struct PfState {
    /// bits/s, never below `floor`.
    pub avg_throughput: Vec<f64>,
    /// Averaging horizon T in slots.
    pub ema_horizon: f64,
    pub floor: f64,
}

impl PfState {
    pub fn new(num_users: usize, ema_horizon: f64, floor: f64) -> Self {
        Self {
            avg_throughput: vec![floor; num_users],
            ema_horizon,
            floor,
        }
    }

    /// `R <- (1 - 1/T) R + (1/T) bits / slot_duration`, floored.
    pub fn update(&mut self, realized_bits: &[f64], slot_duration: f64) {
        let alpha = 1.0 / self.ema_horizon;
        for (avg, bits) in self.avg_throughput.iter_mut().zip(realized_bits) {
            *avg = ((1.0 - alpha) * *avg + alpha * bits / slot_duration).max(self.floor);
        }
    }
}

pub fn update_pf(pf: &PfState, realized_bits: &[f64], slot_duration: f64) -> PfState {
    let mut next = pf.clone();
    next.update(realized_bits, slot_duration);
    next
}

/// `|a^H b| / (|a| |b|)`.
pub fn channel_correlation(h_a: &ChannelVector, h_b: &ChannelVector) -> Result<f64, SchedulerError> {
    let den = h_a.norm() * h_b.norm();
    if !(den > 0.0) {
        return Err(SchedulerError::ZeroNorm);
    }
    Ok((inner(&h_a.coefficients, &h_b.coefficients).norm() / den).min(1.0))
}

/// Correlation of two users over the base stations in `common`, each BS
/// weighted by `|h_a| |h_b|`:
/// `sum_l |h_al^H h_bl| / sum_l |h_al| |h_bl|`. Zero when nothing is shared.
pub fn multi_bs_correlation(h_a: &[ChannelVector], h_b: &[ChannelVector], common: &[usize]) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for &l in common {
        num += inner(&h_a[l].coefficients, &h_b[l].coefficients).norm();
        den += h_a[l].norm() * h_b[l].norm();
    }
    if den > 0.0 {
        (num / den).min(1.0)
    } else {
        0.0
    }
}

/// Everything the scheduler needs to know about one resource block.
#[derive(Debug, Clone, Copy)]
pub struct RbContext<'a> {
    pub rb: usize,
    /// `channels[k][l]`: channel of user `k` toward BS `l` as known to the
    /// scheduler.
    pub channels: &'a [Vec<ChannelVector>],
    /// Serving base stations of each user, ascending.
    pub serving_sets: &'a [Vec<usize>],
    pub tx_power_w: &'a [f64],
    pub num_rb: usize,
    pub noise_w: f64,
    pub rb_bandwidth_hz: f64,
    pub mcs: &'a McsTable,
    pub correlation_threshold: f64,
}

/// Outcome of scheduling one resource block.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledRb {
    pub rb: usize,
    /// K_n in selection order.
    pub users: Vec<usize>,
    pub serving_sets: Vec<Vec<usize>>,
    pub power: PowerAllocation,
    /// `precoders[j][l]` for `users[j]`; `None` where BS `l` does not serve
    /// the user or has no channel to it.
    pub precoders: Vec<Vec<Option<Precoder>>>,
    pub estimated: Vec<LinkBudget>,
    pub mcs: Vec<Option<usize>>,
    pub pf_objective: f64,
}

impl ScheduledRb {
    pub fn empty(rb: usize, num_bs: usize) -> Self {
        Self {
            rb,
            users: vec![],
            serving_sets: vec![],
            power: allocate_power(&[], &[], &vec![0.0; num_bs], 1),
            precoders: vec![],
            estimated: vec![],
            mcs: vec![],
            pf_objective: 0.0,
        }
    }
}

/// Per-RB inner products among the candidate users.
struct Gram {
    /// `norm[k][l] = |h_kl|^2`
    norm: Vec<Vec<f64>>,
    /// `cross[l][a][b] = h_al^H h_bl`, only for a <= b.
    cross: Vec<Vec<Vec<Complex64>>>,
}

impl Gram {
    fn new(ctx: &RbContext<'_>, users: &[usize]) -> Self {
        let num_bs = ctx.tx_power_w.len();
        let n = users.len();
        let mut cross = vec![vec![vec![Complex64::new(0.0, 0.0); n]; n]; num_bs];
        let mut norm = vec![vec![0.0; num_bs]; n];
        for (l, table) in cross.iter_mut().enumerate() {
            for a in 0..n {
                let ha = &ctx.channels[users[a]][l].coefficients;
                for b in a..n {
                    let v = inner(ha, &ctx.channels[users[b]][l].coefficients);
                    table[a][b] = v;
                }
                norm[a][l] = table[a][a].re;
            }
        }
        Self { norm, cross }
    }

    /// `h_al^H h_bl`
    fn get(&self, l: usize, a: usize, b: usize) -> Complex64 {
        if a <= b {
            self.cross[l][a][b]
        } else {
            self.cross[l][b][a].conj()
        }
    }
}

struct Greedy<'c, 'a> {
    ctx: &'c RbContext<'a>,
    users: &'c [usize],
    gram: Gram,
    avg: Vec<f64>,
}

impl Greedy<'_, '_> {
    fn serves(&self, a: usize, l: usize) -> bool {
        self.ctx.serving_sets[self.users[a]].binary_search(&l).is_ok()
    }

    fn correlation(&self, a: usize, b: usize) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for &l in &self.ctx.serving_sets[self.users[a]] {
            if self.serves(b, l) {
                num += self.gram.get(l, a, b).norm();
                den += (self.gram.norm[a][l] * self.gram.norm[b][l]).sqrt();
            }
        }
        if den > 0.0 {
            (num / den).min(1.0)
        } else {
            0.0
        }
    }

    /// PF objective of a candidate group (indices into `users`).
    fn objective(&self, group: &[usize]) -> f64 {
        let num_bs = self.ctx.tx_power_w.len();
        let mut totals = vec![0.0; num_bs];
        for &a in group {
            for (l, t) in totals.iter_mut().enumerate() {
                *t += self.gram.norm[a][l];
            }
        }
        // amp_scale[j][l] = sqrt(p_jl) / |h_jl|
        let scale: Vec<Vec<f64>> = group
            .iter()
            .map(|&a| {
                (0..num_bs)
                    .map(|l| {
                        let n = self.gram.norm[a][l];
                        if self.serves(a, l) && n > 0.0 && totals[l] > 0.0 {
                            let budget = self.ctx.tx_power_w[l] / self.ctx.num_rb as f64;
                            (budget / totals[l]).sqrt()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let mut sum = 0.0;
        for &k in group {
            let (mut wanted, mut interference) = (0.0, 0.0);
            for (j, &i) in group.iter().enumerate() {
                let amp: Complex64 = (0..num_bs)
                    .filter(|&l| scale[j][l] > 0.0)
                    .map(|l| scale[j][l] * self.gram.get(l, k, i))
                    .sum();
                if i == k {
                    wanted = amp.norm_sqr();
                } else {
                    interference += amp.norm_sqr();
                }
            }
            let sinr = wanted / (interference + self.ctx.noise_w);
            let rate = self.ctx.mcs.efficiency_at(10.0 * sinr.log10()) * self.ctx.rb_bandwidth_hz;
            sum += rate / self.avg[k];
        }
        sum
    }

    fn run(&self) -> Vec<usize> {
        let n = self.users.len();
        let mut selected: Vec<usize> = Vec::new();
        let mut current = 0.0;
        loop {
            let mut best: Option<(f64, usize)> = None;
            let mut trial = selected.clone();
            trial.push(usize::MAX);
            // `users` is ascending, so strict comparison keeps the lowest id.
            for c in 0..n {
                if selected.contains(&c) {
                    continue;
                }
                if selected
                    .iter()
                    .any(|&s| self.correlation(s, c) > self.ctx.correlation_threshold)
                {
                    continue;
                }
                *trial.last_mut().unwrap() = c;
                let obj = self.objective(&trial);
                if best.is_none_or(|(b, _)| obj > b) {
                    best = Some((obj, c));
                }
            }
            match best {
                Some((obj, c)) if selected.is_empty() || obj > current => {
                    selected.push(c);
                    current = obj;
                }
                _ => break,
            }
        }
        selected
    }
}

/// Greedy proportional-fair selection on one resource block, followed by
/// power allocation, MRT precoding and SINR estimation for the chosen group.
/// `users` must be sorted ascending; the result is empty only if `users` is.
pub fn schedule_rb(ctx: &RbContext<'_>, users: &[usize], pf: &PfState) -> Result<ScheduledRb, SchedulerError> {
    let num_bs = ctx.tx_power_w.len();
    if users.is_empty() {
        return Ok(ScheduledRb::empty(ctx.rb, num_bs));
    }
    debug_assert!(users.windows(2).all(|w| w[0] < w[1]));
    let greedy = Greedy {
        ctx,
        users,
        gram: Gram::new(ctx, users),
        avg: users.iter().map(|&u| pf.avg_throughput[u]).collect(),
    };
    let chosen: Vec<usize> = greedy.run().into_iter().map(|a| users[a]).collect();
    finalize(ctx, &chosen, pf)
}

/// Powers, precoders and estimated link budgets for a fixed group.
pub fn finalize(ctx: &RbContext<'_>, chosen: &[usize], pf: &PfState) -> Result<ScheduledRb, SchedulerError> {
    let num_bs = ctx.tx_power_w.len();
    let serving_sets: Vec<Vec<usize>> = chosen.iter().map(|&k| ctx.serving_sets[k].clone()).collect();
    let norms: Vec<Vec<f64>> = chosen
        .iter()
        .map(|&k| ctx.channels[k].iter().map(ChannelVector::norm_sqr).collect())
        .collect();
    let power = allocate_power(&norms, chosen, ctx.tx_power_w, ctx.num_rb);
    // Only serving links are precoded; power assigned on other links is not
    // radiated.
    let precoders: Vec<Vec<Option<Precoder>>> = chosen
        .iter()
        .zip(&serving_sets)
        .zip(&norms)
        .map(|((&k, serving), norms)| {
            (0..num_bs)
                .map(|l| {
                    if norms[l] > 0.0 && serving.contains(&l) {
                        mrt_precoder(&ctx.channels[k][l]).ok()
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();
    let estimated = link_budgets(ctx.channels, chosen, &precoders, &power, &serving_sets, ctx.noise_w)?;
    let mcs: Vec<Option<usize>> = estimated.iter().map(|b| ctx.mcs.select_mcs(b.sinr_db())).collect();
    let pf_objective = chosen
        .iter()
        .zip(&mcs)
        .map(|(&k, m)| {
            let eff = m.map_or(0.0, |i| ctx.mcs.entry(i).efficiency);
            eff * ctx.rb_bandwidth_hz / pf.avg_throughput[k]
        })
        .sum();
    Ok(ScheduledRb {
        rb: ctx.rb,
        users: chosen.to_vec(),
        serving_sets,
        power,
        precoders,
        estimated,
        mcs,
        pf_objective,
    })
}

/// Link budget of every user in the group on the given channels.
pub fn link_budgets(
    channels: &[Vec<ChannelVector>],
    users: &[usize],
    precoders: &[Vec<Option<Precoder>>],
    power: &PowerAllocation,
    serving_sets: &[Vec<usize>],
    noise_w: f64,
) -> Result<Vec<LinkBudget>, PhyError> {
    users
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let wanted = phy::received_power(&channels[k], &precoders[j], &power.watts[j], &serving_sets[j]);
            let interference = phy::interference_power(k, &channels[k], precoders, power, serving_sets)?;
            phy::sinr(wanted, interference, noise_w)
        })
        .collect()
}
