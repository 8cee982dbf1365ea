//! Regret, the logarithmic regret bound, optimal-set occupancy and network
//! throughput.
//!
//! Every metric comes in two flavours: a streaming meter fed one
//! [`SlotOutcome`] at a time (what the harness uses, so long runs never hold
//! their trace) and a function over a complete trace.

use serde::Deserialize;

use crate::assignment::{hungarian_solve, optimal_channel_sets, rank_top_k, WeightMatrix};
use crate::error::{Error, Result};
use crate::policy::SlotOutcome;
use crate::scalar::Real;

/// What a user is credited with in the regret sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegretKind {
    /// Expected reward of the choice (collisions priced in).
    #[default]
    Pseudo,
    /// The reward actually received.
    Realized,
}

impl std::str::FromStr for RegretKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pseudo" => Ok(RegretKind::Pseudo),
            "realized" => Ok(RegretKind::Realized),
            _ => Err(format!(
                "unknown regret kind `{s}` (expected pseudo or realized)"
            )),
        }
    }
}

fn check_outcome<T: Real>(o: &SlotOutcome<T>, users: usize, channels: usize) -> Result<()> {
    if o.users.len() != users {
        return Err(Error::DimensionMismatch(format!(
            "slot {} has {} users, quality matrix has {users}",
            o.slot,
            o.users.len()
        )));
    }
    match o.users.iter().find(|u| u.channel >= channels) {
        Some(u) => Err(Error::BadChannel {
            channel: u.channel,
            channels,
        }),
        None => Ok(()),
    }
}

/// Streaming regret against the fair share `V*/K` per user and slot.
#[derive(Debug, Clone)]
pub struct RegretMeter<T> {
    kind: RegretKind,
    channels: usize,
    optimal_value: T,
    fair_share: T,
    average: T,
    per_user: Vec<T>,
    slots: u64,
}

impl<T: Real> RegretMeter<T> {
    pub fn new(lambda: &WeightMatrix<T>, kind: RegretKind) -> Result<Self> {
        let optimal_value = hungarian_solve(lambda)?.value;
        let k = lambda.rows();
        Ok(Self {
            kind,
            channels: lambda.cols(),
            optimal_value,
            fair_share: optimal_value / T::from_count(k.max(1) as u64),
            average: T::zero(),
            per_user: vec![T::zero(); k],
            slots: 0,
        })
    }

    /// Adds one slot; returns the user-averaged cumulative regret.
    pub fn record(&mut self, o: &SlotOutcome<T>) -> Result<T> {
        check_outcome(o, self.per_user.len(), self.channels)?;
        let mut sum = T::zero();
        for (acc, u) in self.per_user.iter_mut().zip(&o.users) {
            let got = match self.kind {
                RegretKind::Pseudo => u.expected_reward,
                RegretKind::Realized => T::from_count(u64::from(u.reward)),
            };
            *acc = *acc + self.fair_share - got;
            sum = sum + got;
        }
        let k = T::from_count(self.per_user.len() as u64);
        self.average = self.average + self.fair_share - sum / k;
        self.slots += 1;
        Ok(self.average)
    }

    pub fn optimal_value(&self) -> T {
        self.optimal_value
    }

    pub fn average(&self) -> T {
        self.average
    }

    pub fn per_user(&self) -> &[T] {
        &self.per_user
    }

    pub fn slots(&self) -> u64 {
        self.slots
    }
}

/// Cumulative regret after `t` slots for `t = 0..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace<T> {
    /// Averaged over users; `cumulative[0] = 0`.
    pub cumulative: Vec<T>,
    /// `per_user[k][t]`.
    pub per_user: Vec<Vec<T>>,
    pub optimal_value: T,
}

impl<T: Real> RegretTrace<T> {
    pub fn horizon(&self) -> u64 {
        self.cumulative.len().saturating_sub(1) as u64
    }

    pub fn at(&self, t: u64) -> Option<T> {
        self.cumulative.get(t as usize).copied()
    }
}

pub fn cumulative_regret<T: Real>(
    trace: &[SlotOutcome<T>],
    lambda: &WeightMatrix<T>,
    kind: RegretKind,
) -> Result<RegretTrace<T>> {
    let mut meter = RegretMeter::new(lambda, kind)?;
    let mut cumulative = Vec::with_capacity(trace.len() + 1);
    let mut per_user = vec![Vec::with_capacity(trace.len() + 1); lambda.rows()];
    cumulative.push(T::zero());
    per_user.iter_mut().for_each(|p| p.push(T::zero()));
    for o in trace {
        cumulative.push(meter.record(o)?);
        for (p, &v) in per_user.iter_mut().zip(meter.per_user()) {
            p.push(v);
        }
    }
    Ok(RegretTrace {
        cumulative,
        per_user,
        optimal_value: meter.optimal_value(),
    })
}

/// Constants of the logarithmic regret bound for a symmetric network.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams<T> {
    lambda: Vec<T>,
    users: usize,
    optimal_set: Vec<usize>,
    lambda_bar_star: T,
    gaps: Vec<(usize, T)>,
    alpha: T,
}

impl<T: Real> BoundParams<T> {
    /// `lambda` holds the common per-channel quality `(1 - eps_n) mu_n`.
    pub fn new(lambda: Vec<T>, users: usize, alpha: T) -> Result<Self> {
        if users == 0 {
            return Err(Error::config("users", "need at least one user"));
        }
        if users > lambda.len() {
            return Err(Error::MoreUsersThanChannels {
                users,
                channels: lambda.len(),
            });
        }
        if alpha.partial_cmp(&T::one()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::config("alpha", "the bound needs alpha > 1"));
        }
        let mut optimal_set = rank_top_k(&lambda, users);
        optimal_set.sort_unstable();
        let worst_optimal = optimal_set
            .iter()
            .map(|&n| lambda[n])
            .fold(T::infinity(), T::min);
        let lambda_bar_star =
            optimal_set.iter().map(|&n| lambda[n]).sum::<T>() / T::from_count(users as u64);
        let mut gaps = Vec::new();
        for (n, &l) in lambda.iter().enumerate() {
            if optimal_set.contains(&n) {
                continue;
            }
            let gap = worst_optimal - l;
            if gap <= T::zero() {
                return Err(Error::DegenerateGap(n));
            }
            gaps.push((n, gap));
        }
        Ok(Self {
            lambda,
            users,
            optimal_set,
            lambda_bar_star,
            gaps,
            alpha,
        })
    }

    /// From a quality matrix whose rows all agree.
    pub fn from_quality(quality: &WeightMatrix<T>, alpha: T) -> Result<Self> {
        if !quality.is_symmetric() {
            return Err(Error::DimensionMismatch(
                "the regret bound needs identical quality rows".into(),
            ));
        }
        Self::new(quality.row(0).to_vec(), quality.rows(), alpha)
    }

    pub fn optimal_set(&self) -> &[usize] {
        &self.optimal_set
    }

    pub fn lambda_bar_star(&self) -> T {
        self.lambda_bar_star
    }

    /// `(channel, gap)` for every channel outside the optimal set.
    pub fn gaps(&self) -> &[(usize, T)] {
        &self.gaps
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    /// Factor in front of `ln(t + K - 1)`.
    pub fn coefficient(&self) -> T {
        let four_alpha = T::lit(4.0) * self.alpha;
        let k = T::from_count(self.users as u64);
        self.gaps
            .iter()
            .map(|&(n, d)| four_alpha * (self.lambda_bar_star - self.lambda[n]) / (k * d * d))
            .sum()
    }

    fn log_term(&self, t: u64) -> T {
        T::from_count(t + self.users as u64 - 1).max(T::one()).ln()
    }

    /// Leading term of the expected number of plays of suboptimal `channel`
    /// by the end of the round containing slot `t`.
    pub fn suboptimal_pulls_bound(&self, channel: usize, t: u64) -> Option<T> {
        let &(_, d) = self.gaps.iter().find(|&&(n, _)| n == channel)?;
        Some(T::lit(4.0) * self.alpha / (d * d) * self.log_term(t))
    }

    /// Per-user regret implied by a given count of plays of each channel.
    pub fn regret_from_pulls(&self, pulls: &[T]) -> T {
        let k = T::from_count(self.users as u64);
        self.gaps
            .iter()
            .map(|&(n, _)| (self.lambda_bar_star - self.lambda[n]) * pulls[n] / k)
            .sum()
    }
}

/// Leading logarithmic term of the per-user regret bound after `t` slots;
/// the `o(ln t)` remainder is not included.
pub fn theorem1_bound<T: Real>(params: &BoundParams<T>, t: u64) -> T {
    params.coefficient() * params.log_term(t)
}

/// Streaming share of user-slots spent inside the user's optimal set.
#[derive(Debug, Clone)]
pub struct OptimalSetMeter {
    member: Vec<Vec<bool>>,
    hits: u64,
    user_slots: u64,
}

impl OptimalSetMeter {
    pub fn new<T: Real>(lambda: &WeightMatrix<T>) -> Result<Self> {
        let sets = optimal_channel_sets(lambda)?;
        let member = sets
            .iter()
            .map(|s| (0..lambda.cols()).map(|c| s.contains(&c)).collect())
            .collect();
        Ok(Self {
            member,
            hits: 0,
            user_slots: 0,
        })
    }

    pub fn optimal_sets(&self) -> Vec<Vec<usize>> {
        self.member
            .iter()
            .map(|m| (0..m.len()).filter(|&c| m[c]).collect())
            .collect()
    }

    /// Adds one slot; returns the cumulative fraction.
    pub fn record<T: Real>(&mut self, o: &SlotOutcome<T>) -> Result<f64> {
        let channels = self.member.first().map_or(0, Vec::len);
        check_outcome(o, self.member.len(), channels)?;
        for (m, u) in self.member.iter().zip(&o.users) {
            self.hits += u64::from(m[u.channel]);
        }
        self.user_slots += self.member.len() as u64;
        Ok(self.fraction())
    }

    pub fn fraction(&self) -> f64 {
        if self.user_slots == 0 {
            0.0
        } else {
            self.hits as f64 / self.user_slots as f64
        }
    }
}

/// Cumulative fraction through each slot of the trace.
pub fn optimal_set_fraction<T: Real>(
    trace: &[SlotOutcome<T>],
    lambda: &WeightMatrix<T>,
) -> Result<Vec<f64>> {
    let mut meter = OptimalSetMeter::new(lambda)?;
    trace.iter().map(|o| meter.record(o)).collect()
}

pub const DEFAULT_PACKET_SIZE: u32 = 1000;

/// Bytes delivered network-wide in one slot.
pub fn slot_bytes<T: Real>(o: &SlotOutcome<T>, packet_size: u32) -> u64 {
    u64::from(o.successes()) * u64::from(packet_size)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputTrace {
    /// Mean over runs of the bytes delivered in each slot.
    pub per_slot: Vec<f64>,
    pub packet_size: u32,
}

impl ThroughputTrace {
    /// Average of `per_slot` over the slots in `range` that exist.
    pub fn mean_over(&self, range: std::ops::Range<usize>) -> f64 {
        let end = range.end.min(self.per_slot.len());
        let slice = &self.per_slot[range.start.min(end)..end];
        if slice.is_empty() {
            0.0
        } else {
            slice.iter().sum::<f64>() / slice.len() as f64
        }
    }
}

/// Mean over runs, slot by slot. Runs shorter than the longest one simply
/// stop contributing.
pub fn network_throughput<T: Real>(
    runs: &[Vec<SlotOutcome<T>>],
    packet_size: u32,
) -> ThroughputTrace {
    let len = runs.iter().map(Vec::len).max().unwrap_or(0);
    let per_slot = (0..len)
        .map(|m| {
            let (sum, count) = runs
                .iter()
                .filter_map(|r| r.get(m))
                .fold((0u64, 0u64), |(s, c), o| {
                    (s + slot_bytes(o, packet_size), c + 1)
                });
            sum as f64 / count as f64
        })
        .collect();
    ThroughputTrace {
        per_slot,
        packet_size,
    }
}
