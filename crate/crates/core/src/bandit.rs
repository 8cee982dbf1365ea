//! UCB1 statistics per learner and the fairness-rotated index matrix `B(t)`.
//!
//! In [`LearningMode::Shared`] all users fold their outcomes into one common
//! learner, so every row of `B(t)` is the same. In
//! [`LearningMode::Individual`] each user keeps its own row and the
//! coordinator sees all of them.

use crate::assignment::{rotated_row, WeightMatrix};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearningMode {
    Shared,
    Individual,
}

#[derive(Debug, Clone)]
pub struct UcbState<T> {
    mode: LearningMode,
    users: usize,
    channels: usize,
    pulls: Vec<u64>,
    reward_sums: Vec<u64>,
    clock: u64,
    alpha: T,
}

/// Snapshot of `B(t)`: row `k` holds the indices of learner
/// `(k + t) mod K`. Unexplored cells hold `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexMatrix<T> {
    pub values: WeightMatrix<T>,
    pub slot: u64,
}

impl<T: Real> UcbState<T> {
    pub fn new(mode: LearningMode, users: usize, channels: usize, alpha: T) -> Self {
        let learners = match mode {
            LearningMode::Shared => 1,
            LearningMode::Individual => users,
        };
        Self {
            mode,
            users,
            channels,
            pulls: vec![0; learners * channels],
            reward_sums: vec![0; learners * channels],
            clock: 0,
            alpha,
        }
    }

    pub fn mode(&self) -> LearningMode {
        self.mode
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn learners(&self) -> usize {
        self.pulls.len() / self.channels
    }

    /// Learner row that holds user `user`'s statistics.
    pub fn learner_of(&self, user: usize) -> usize {
        match self.mode {
            LearningMode::Shared => 0,
            LearningMode::Individual => user,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Called once per completed slot, independent of the number of updates.
    pub fn advance_clock(&mut self) {
        self.clock += 1;
    }

    pub fn pulls(&self, learner: usize, channel: usize) -> u64 {
        self.pulls[learner * self.channels + channel]
    }

    pub fn reward_sum(&self, learner: usize, channel: usize) -> u64 {
        self.reward_sums[learner * self.channels + channel]
    }

    pub fn total_pulls(&self) -> u64 {
        self.pulls.iter().sum()
    }

    pub fn update(&mut self, learner: usize, channel: usize, reward: u8) {
        let i = learner * self.channels + channel;
        self.pulls[i] += 1;
        self.reward_sums[i] += u64::from(reward.min(1));
    }

    /// Sample mean `W`, or `None` before the first pull.
    pub fn mean(&self, learner: usize, channel: usize) -> Option<T> {
        let n = self.pulls(learner, channel);
        (n > 0).then(|| T::from_count(self.reward_sum(learner, channel)) / T::from_count(n))
    }

    /// `W + sqrt(alpha ln t / T_n)`, or `+inf` when `T_n = 0`. `t` is clamped
    /// to at least 1 so the bias is never `ln 0`.
    pub fn index(&self, learner: usize, channel: usize, t: u64) -> T {
        let n = self.pulls(learner, channel);
        if n == 0 {
            return T::infinity();
        }
        let mean = T::from_count(self.reward_sum(learner, channel)) / T::from_count(n);
        let ln_t = T::from_count(t.max(1)).ln();
        mean + (self.alpha * ln_t / T::from_count(n)).sqrt()
    }

    /// Unrotated `K x N` weights: row `k` is the learner user `k` reads.
    pub fn user_weights(&self, t: u64) -> WeightMatrix<T> {
        let values = (0..self.users)
            .flat_map(|k| {
                let l = self.learner_of(k);
                (0..self.channels).map(move |n| (l, n))
            })
            .map(|(l, n)| self.index(l, n, t))
            .collect();
        WeightMatrix::from_raw(self.users, self.channels, values)
    }

    /// `B(t)`.
    pub fn index_matrix(&self, t: u64) -> IndexMatrix<T> {
        let values = (0..self.users)
            .flat_map(|k| {
                let l = self.learner_of(rotated_row(k, t, self.users));
                (0..self.channels).map(move |n| (l, n))
            })
            .map(|(l, n)| self.index(l, n, t))
            .collect();
        IndexMatrix {
            values: WeightMatrix::from_raw(self.users, self.channels, values),
            slot: t,
        }
    }
}
