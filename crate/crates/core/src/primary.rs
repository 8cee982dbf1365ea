//! The licensed network: `N` independent, stationary Bernoulli channels.

use crate::error::{Error, Result};
use crate::scalar::{bernoulli, is_probability, Real};
use crate::streams::StreamRng;

/// Channel availabilities `mu_n = P(channel n idle)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimaryNetwork<T> {
    availability: Vec<T>,
}

/// Channel occupancy at one slot. `1` is idle, `0` is busy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotState {
    pub slot: u64,
    pub states: Vec<u8>,
}

impl SlotState {
    pub fn is_idle(&self, channel: usize) -> bool {
        self.states[channel] == 1
    }
}

impl<T: Real> PrimaryNetwork<T> {
    /// Out-of-range availabilities are rejected, never clamped.
    pub fn new(availability: Vec<T>) -> Result<Self> {
        if availability.is_empty() {
            return Err(Error::config(
                "availability",
                "at least one channel is required",
            ));
        }
        for (n, &mu) in availability.iter().enumerate() {
            if !is_probability(mu) {
                return Err(Error::config(
                    format!("availability[{n}]"),
                    format!("{mu} is outside [0, 1]"),
                ));
            }
        }
        Ok(Self { availability })
    }

    pub fn n_channels(&self) -> usize {
        self.availability.len()
    }

    pub fn availability(&self) -> &[T] {
        &self.availability
    }

    /// Draws `S_t`. `streams[n]` feeds channel `n` and is consumed exactly once
    /// per call, so each channel's sequence is i.i.d. over slots and
    /// independent of every other channel.
    pub fn sample_slot(&self, streams: &mut [StreamRng], t: u64) -> SlotState {
        debug_assert_eq!(streams.len(), self.availability.len());
        let states = self
            .availability
            .iter()
            .zip(streams.iter_mut())
            .map(|(&mu, rng)| u8::from(bernoulli(rng, mu)))
            .collect();
        SlotState { slot: t, states }
    }
}

/// Fraction of slots in which `channel` was idle.
pub fn empirical_availability(trace: &[SlotState], channel: usize) -> Result<f64> {
    let first = trace.first().ok_or(Error::EmptyTrace)?;
    if channel >= first.states.len() {
        return Err(Error::BadChannel {
            channel,
            channels: first.states.len(),
        });
    }
    let idle: u64 = trace.iter().map(|s| u64::from(s.states[channel])).sum();
    Ok(idle as f64 / trace.len() as f64)
}
