//! What a user experiences when it senses a channel.

use crate::assignment::WeightMatrix;
use crate::error::{Error, Result};
use crate::primary::{PrimaryNetwork, SlotState};
use crate::scalar::{bernoulli, is_probability, Real};
use crate::sensing::{expected_reward, Observation, SensorProfile};
use crate::streams::{RunSeed, StreamRng};

/// One slot-synchronous world the secondary users act in.
pub trait Environment<T: Real> {
    fn users(&self) -> usize;

    fn channels(&self) -> usize;

    /// Draws the channel states of slot `t`. Called once before any `sense`.
    fn begin_slot(&mut self, t: u64);

    /// `user` senses `channel` in the current slot; returns the true state
    /// (1 idle) and the user's observation.
    fn sense(&mut self, user: usize, channel: usize) -> (u8, Observation);

    /// Expected reward matrix `lambda` (users x channels).
    fn quality(&self) -> &WeightMatrix<T>;

    /// Probability that `user` transmits on `channel` given that the channel
    /// is usable for it; used to price collisions in expectation.
    fn transmit_given_idle(&self, user: usize, channel: usize) -> T;
}

impl<T: Real, E: Environment<T> + ?Sized> Environment<T> for Box<E> {
    fn users(&self) -> usize {
        (**self).users()
    }
    fn channels(&self) -> usize {
        (**self).channels()
    }
    fn begin_slot(&mut self, t: u64) {
        (**self).begin_slot(t)
    }
    fn sense(&mut self, user: usize, channel: usize) -> (u8, Observation) {
        (**self).sense(user, channel)
    }
    fn quality(&self) -> &WeightMatrix<T> {
        (**self).quality()
    }
    fn transmit_given_idle(&self, user: usize, channel: usize) -> T {
        (**self).transmit_given_idle(user, channel)
    }
}

/// Primary network plus imperfect detectors.
#[derive(Debug, Clone)]
pub struct SpectrumEnvironment<T> {
    network: PrimaryNetwork<T>,
    sensors: SensorProfile<T>,
    quality: WeightMatrix<T>,
    channel_rngs: Vec<StreamRng>,
    sensor_rngs: Vec<StreamRng>,
    current: SlotState,
}

impl<T: Real> SpectrumEnvironment<T> {
    pub fn new(
        network: PrimaryNetwork<T>,
        sensors: SensorProfile<T>,
        seed: RunSeed,
    ) -> Result<Self> {
        let n = network.n_channels();
        if sensors.channels() != n {
            return Err(Error::DimensionMismatch(format!(
                "sensor profile covers {} channels, network has {n}",
                sensors.channels()
            )));
        }
        let k = sensors.users();
        let mut values = Vec::with_capacity(k * n);
        for user in 0..k {
            for (c, &mu) in network.availability().iter().enumerate() {
                values.push(expected_reward(mu, sensors.false_alarm(user, c)?));
            }
        }
        Ok(Self {
            quality: WeightMatrix::new(k, n, values)?,
            channel_rngs: seed.channel_streams(n),
            sensor_rngs: seed.sensor_streams(k),
            current: SlotState {
                slot: 0,
                states: vec![0; n],
            },
            network,
            sensors,
        })
    }

    pub fn network(&self) -> &PrimaryNetwork<T> {
        &self.network
    }

    pub fn sensors(&self) -> &SensorProfile<T> {
        &self.sensors
    }

    pub fn current_slot(&self) -> &SlotState {
        &self.current
    }
}

impl<T: Real> Environment<T> for SpectrumEnvironment<T> {
    fn users(&self) -> usize {
        self.sensors.users()
    }

    fn channels(&self) -> usize {
        self.network.n_channels()
    }

    fn begin_slot(&mut self, t: u64) {
        self.current = self.network.sample_slot(&mut self.channel_rngs, t);
    }

    fn sense(&mut self, user: usize, channel: usize) -> (u8, Observation) {
        let state = self.current.states[channel];
        let obs = self
            .sensors
            .sense(user, channel, state, &mut self.sensor_rngs[user])
            .expect("engine only senses valid (user, channel) pairs");
        (state, obs)
    }

    fn quality(&self) -> &WeightMatrix<T> {
        &self.quality
    }

    fn transmit_given_idle(&self, user: usize, channel: usize) -> T {
        T::one()
            - self
                .sensors
                .false_alarm(user, channel)
                .unwrap_or_else(|_| T::one())
    }
}

/// Abstract mode: user `k` on channel `n` sees a free channel with
/// probability `lambda[k][n]`, drawn independently per user. There is no
/// primary user to interfere with.
#[derive(Debug, Clone)]
pub struct BernoulliEnvironment<T> {
    quality: WeightMatrix<T>,
    rngs: Vec<StreamRng>,
}

impl<T: Real> BernoulliEnvironment<T> {
    pub fn new(quality: WeightMatrix<T>, seed: RunSeed) -> Result<Self> {
        if let Some(i) = quality.values().iter().position(|&p| !is_probability(p)) {
            return Err(Error::config(
                format!("quality[{}][{}]", i / quality.cols(), i % quality.cols()),
                "not a probability",
            ));
        }
        let rngs = seed.sensor_streams(quality.rows());
        Ok(Self { quality, rngs })
    }
}

impl<T: Real> Environment<T> for BernoulliEnvironment<T> {
    fn users(&self) -> usize {
        self.quality.rows()
    }

    fn channels(&self) -> usize {
        self.quality.cols()
    }

    fn begin_slot(&mut self, _t: u64) {}

    fn sense(&mut self, user: usize, channel: usize) -> (u8, Observation) {
        let free = bernoulli(&mut self.rngs[user], self.quality.get(user, channel));
        if free {
            (1, Observation::FREE)
        } else {
            (0, Observation::BUSY)
        }
    }

    fn quality(&self) -> &WeightMatrix<T> {
        &self.quality
    }

    fn transmit_given_idle(&self, user: usize, channel: usize) -> T {
        self.quality.get(user, channel)
    }
}
