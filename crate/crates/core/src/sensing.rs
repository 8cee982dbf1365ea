//! Imperfect detectors and the sense-then-access reward.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{bernoulli, is_probability, Real};

/// Per-user, per-channel false-alarm (`epsilon`) and miss-detection (`delta`)
/// probabilities, stored row-major as `K x N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorProfile<T> {
    users: usize,
    channels: usize,
    false_alarm: Vec<T>,
    miss_detection: Vec<T>,
}

/// Outcome of the detection phase. `1` means the channel was sensed free.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation(u8);

impl Observation {
    pub const BUSY: Observation = Observation(0);
    pub const FREE: Observation = Observation(1);

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn is_free(self) -> bool {
        self.0 == 1
    }
}

impl<T: Real> SensorProfile<T> {
    pub fn new(
        users: usize,
        channels: usize,
        false_alarm: Vec<T>,
        miss_detection: Vec<T>,
    ) -> Result<Self> {
        for (name, m) in [
            ("false_alarm", &false_alarm),
            ("miss_detection", &miss_detection),
        ] {
            if m.len() != users * channels {
                return Err(Error::config(
                    name,
                    format!("expected {users}x{channels} entries, got {}", m.len()),
                ));
            }
            if let Some(i) = m.iter().position(|&p| !is_probability(p)) {
                return Err(Error::config(
                    format!("{name}[{}][{}]", i / channels, i % channels),
                    format!("{} is outside [0, 1]", m[i]),
                ));
            }
        }
        Ok(Self {
            users,
            channels,
            false_alarm,
            miss_detection,
        })
    }

    /// Same `(epsilon, delta)` for every user and channel.
    pub fn uniform(users: usize, channels: usize, epsilon: T, delta: T) -> Result<Self> {
        Self::new(
            users,
            channels,
            vec![epsilon; users * channels],
            vec![delta; users * channels],
        )
    }

    pub fn perfect(users: usize, channels: usize) -> Self {
        Self::uniform(users, channels, T::zero(), T::zero()).expect("zero is a probability")
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    fn cell(&self, user: usize, channel: usize) -> Result<usize> {
        if user >= self.users {
            return Err(Error::BadUser {
                user,
                users: self.users,
            });
        }
        if channel >= self.channels {
            return Err(Error::BadChannel {
                channel,
                channels: self.channels,
            });
        }
        Ok(user * self.channels + channel)
    }

    pub fn false_alarm(&self, user: usize, channel: usize) -> Result<T> {
        Ok(self.false_alarm[self.cell(user, channel)?])
    }

    pub fn miss_detection(&self, user: usize, channel: usize) -> Result<T> {
        Ok(self.miss_detection[self.cell(user, channel)?])
    }

    /// Runs user `user`'s detector on `channel` whose true state is
    /// `true_state` (1 idle, 0 busy).
    pub fn sense<R: Rng + ?Sized>(
        &self,
        user: usize,
        channel: usize,
        true_state: u8,
        rng: &mut R,
    ) -> Result<Observation> {
        let i = self.cell(user, channel)?;
        let obs = if true_state == 1 {
            if bernoulli(rng, self.false_alarm[i]) {
                Observation::BUSY
            } else {
                Observation::FREE
            }
        } else if bernoulli(rng, self.miss_detection[i]) {
            Observation::FREE
        } else {
            Observation::BUSY
        };
        Ok(obs)
    }
}

/// `r = S * X`: only a free channel that was also sensed free pays off.
pub fn reward(true_state: u8, observation: Observation) -> u8 {
    true_state * observation.value()
}

/// Expected reward `(1 - epsilon) * mu`; this is the coordination weight.
pub fn expected_reward<T: Real>(mu: T, epsilon: T) -> T {
    (T::one() - epsilon) * mu
}
