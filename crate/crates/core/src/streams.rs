//! Deterministic sub-stream splitting.
//!
//! A run owns one seed. Every consumer of randomness (each channel, each
//! user's detector, each user's decision maker) draws from its own ChaCha
//! stream keyed by that seed, so resizing one population never shifts the
//! draws seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const CHANNEL_BASE: u64 = 0;
const SENSOR_BASE: u64 = 1 << 32;
const DECISION_BASE: u64 = 2 << 32;

/// Which population a sub-stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Channel(usize),
    Sensor(usize),
    Decision(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Channel(n) => CHANNEL_BASE + n as u64,
            Stream::Sensor(k) => SENSOR_BASE + k as u64,
            Stream::Decision(k) => DECISION_BASE + k as u64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeed(pub u64);

impl RunSeed {
    pub fn stream(self, which: Stream) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(which.id());
        rng
    }

    pub fn channel_streams(self, n: usize) -> Vec<StreamRng> {
        (0..n).map(|c| self.stream(Stream::Channel(c))).collect()
    }

    pub fn sensor_streams(self, k: usize) -> Vec<StreamRng> {
        (0..k).map(|u| self.stream(Stream::Sensor(u))).collect()
    }

    pub fn decision_streams(self, k: usize) -> Vec<StreamRng> {
        (0..k).map(|u| self.stream(Stream::Decision(u))).collect()
    }
}
