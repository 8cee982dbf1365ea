//! Per-slot strategies: the coordinated CC-UCB1 policy and the three
//! uncoordinated baselines.

mod environment;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use environment::{BernoulliEnvironment, Environment, SpectrumEnvironment};

use crate::assignment::{rank_top_k, rotate_then_solve, round_robin_assign};
use crate::bandit::{LearningMode, UcbState};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sensing::{reward, Observation};
use crate::streams::{RunSeed, StreamRng};

/// Floor applied to baseline selection weights before normalization.
pub const WEIGHT_FLOOR: f64 = 1e-6;

macro_rules! cli_enum {
    ($name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                let wanted = s.replace('_', "-");
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.as_str() == wanted)
                    .ok_or_else(|| {
                        let names: Vec<_> = Self::ALL.iter().map(|v| v.as_str()).collect();
                        format!("unknown value `{s}` (expected one of {})", names.join(", "))
                    })
            }
        }
    };
}

cli_enum!(PolicyKind {
    CcUcb1 => "cc-ucb1",
    Random => "random",
    IndividualUcb => "individual-ucb",
    CooperativeUcb => "cooperative-ucb",
});

cli_enum!(Coordination {
    Hungarian => "hungarian",
    RoundRobin => "round-robin",
});

cli_enum!(SelectionRule {
    PaperLiteral => "paper-literal",
    ProportionalToIndex => "proportional-to-index",
});

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig<T> {
    pub kind: PolicyKind,
    pub coordination: Coordination,
    /// Coordination period `R`: 1 or `K`.
    pub r_period: usize,
    pub alpha: T,
    pub selection: SelectionRule,
}

impl<T: Real> PolicyConfig<T> {
    /// CC-UCB1 with the period the coordination scheme implies.
    pub fn cc_ucb1(coordination: Coordination, users: usize, alpha: T) -> Self {
        let r_period = match coordination {
            Coordination::Hungarian => 1,
            Coordination::RoundRobin => users,
        };
        Self {
            kind: PolicyKind::CcUcb1,
            coordination,
            r_period,
            alpha,
            selection: SelectionRule::PaperLiteral,
        }
    }

    pub fn baseline(kind: PolicyKind, selection: SelectionRule, alpha: T) -> Self {
        Self {
            kind,
            coordination: Coordination::Hungarian,
            r_period: 1,
            alpha,
            selection,
        }
    }

    /// Learning mode this configuration runs in for `users` users.
    pub fn learning_mode(&self, users: usize) -> LearningMode {
        match self.kind {
            PolicyKind::CcUcb1 if self.r_period == users => LearningMode::Shared,
            PolicyKind::CcUcb1 | PolicyKind::IndividualUcb => LearningMode::Individual,
            PolicyKind::Random | PolicyKind::CooperativeUcb => LearningMode::Shared,
        }
    }

    pub fn validate(&self, users: usize) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= T::zero()) {
            return Err(Error::config(
                "policy.alpha",
                "must be finite and non-negative",
            ));
        }
        if self.kind != PolicyKind::CcUcb1 {
            return Ok(());
        }
        if self.r_period != 1 && self.r_period != users {
            return Err(Error::config(
                "policy.period",
                format!(
                    "must be 1 or the number of users ({users}), got {}",
                    self.r_period
                ),
            ));
        }
        if self.coordination == Coordination::RoundRobin && self.r_period != users {
            return Err(Error::config(
                "policy.period",
                format!("round-robin coordination needs period = {users} (shared learning)"),
            ));
        }
        Ok(())
    }

    /// Human-readable cautions about parameter choices that void the regret
    /// guarantee. Empty when nothing is off.
    pub fn advisories(&self, users: usize, symmetric: bool) -> Vec<String> {
        let mut out = Vec::new();
        let uses_ucb = self.kind != PolicyKind::Random;
        if uses_ucb && self.alpha <= T::one() {
            out.push(format!(
                "alpha = {} <= 1: the logarithmic regret bound does not apply",
                self.alpha
            ));
        }
        if self.kind == PolicyKind::CcUcb1 && !symmetric && self.alpha < T::from_count(users as u64)
        {
            out.push(format!(
                "alpha = {} < K = {users} on a heterogeneous network: exploration may be too weak",
                self.alpha
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserOutcome<T> {
    pub channel: usize,
    pub true_state: u8,
    pub observation: Observation,
    pub transmitted: bool,
    pub reward: u8,
    pub su_collision: bool,
    pub pu_interference: bool,
    /// Success probability of this choice given everyone else's choice.
    pub expected_reward: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome<T> {
    pub slot: u64,
    pub users: Vec<UserOutcome<T>>,
}

impl<T: Real> SlotOutcome<T> {
    pub fn successes(&self) -> u32 {
        self.users.iter().map(|u| u32::from(u.reward)).sum()
    }

    pub fn channels(&self) -> Vec<usize> {
        self.users.iter().map(|u| u.channel).collect()
    }
}

/// Normalized baseline selection probabilities for one user's index row.
/// Infinite indices never reach here: unexplored channels are forced first.
pub fn selection_weights<T: Real>(indices: &[T], rule: SelectionRule) -> Vec<T> {
    let floor = T::lit(WEIGHT_FLOOR);
    let raw: Vec<T> = indices
        .iter()
        .map(|&b| {
            let w = match rule {
                SelectionRule::PaperLiteral => T::one() - b,
                SelectionRule::ProportionalToIndex => b,
            };
            w.max(floor)
        })
        .collect();
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|w| w / total).collect()
}

fn sample_weighted<T: Real>(weights: &[T], rng: &mut StreamRng) -> usize {
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    for (i, &w) in weights.iter().enumerate() {
        acc = acc + w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Runs one policy against one environment, slot by slot.
#[derive(Debug, Clone)]
pub struct Engine<T, E> {
    config: PolicyConfig<T>,
    env: E,
    state: UcbState<T>,
    decision_rngs: Vec<StreamRng>,
    /// Coordination output of the current block: `channel_of` for
    /// Hungarian, the ranked top-K list for Round-Robin.
    plan: Vec<usize>,
    /// Outcomes waiting for the end of the block: (learner, channel, reward).
    pending: Vec<(usize, usize, u8)>,
    t: u64,
}

impl<T: Real, E: Environment<T>> Engine<T, E> {
    pub fn new(config: PolicyConfig<T>, env: E, seed: RunSeed) -> Result<Self> {
        let (k, n) = (env.users(), env.channels());
        if k == 0 {
            return Err(Error::config("network.users", "need at least one user"));
        }
        if k > n {
            return Err(Error::MoreUsersThanChannels {
                users: k,
                channels: n,
            });
        }
        config.validate(k)?;
        let state = UcbState::new(config.learning_mode(k), k, n, config.alpha);
        Ok(Self {
            config,
            decision_rngs: seed.decision_streams(k),
            env,
            state,
            plan: Vec::new(),
            pending: Vec::new(),
            t: 0,
        })
    }

    pub fn config(&self) -> &PolicyConfig<T> {
        &self.config
    }

    pub fn environment(&self) -> &E {
        &self.env
    }

    pub fn state(&self) -> &UcbState<T> {
        &self.state
    }

    /// Number of completed slots.
    pub fn slot(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self) -> SlotOutcome<T> {
        let channels = match self.config.kind {
            PolicyKind::CcUcb1 => self.coordinated_choice(),
            _ => self.baseline_choice(),
        };
        let outcome = self.play(&channels);
        self.learn(&outcome);
        self.t += 1;
        self.state.advance_clock();
        outcome
    }

    fn coordinated_choice(&mut self) -> Vec<usize> {
        let t = self.t;
        let k = self.env.users();
        let r = self.config.r_period as u64;
        if t.is_multiple_of(r) {
            self.plan = match self.config.coordination {
                Coordination::Hungarian => {
                    rotate_then_solve(&self.state.user_weights(t), t)
                        .expect("users <= channels checked at construction")
                        .channel_of
                }
                Coordination::RoundRobin => rank_top_k(self.state.user_weights(t).row(0), k),
            };
        }
        match self.config.coordination {
            Coordination::Hungarian => {
                let offset = (t % r) as usize;
                (0..k).map(|u| self.plan[(u + offset) % k]).collect()
            }
            Coordination::RoundRobin => (0..k)
                .map(|u| round_robin_assign(&self.plan, u, t).expect("ranking is duplicate-free"))
                .collect(),
        }
    }

    fn baseline_choice(&mut self) -> Vec<usize> {
        let t = self.t;
        let (k, n) = (self.env.users(), self.env.channels());
        let mut out = Vec::with_capacity(k);
        for u in 0..k {
            let rng = &mut self.decision_rngs[u];
            let choice = if self.config.kind == PolicyKind::Random {
                rng.gen_range(0..n)
            } else {
                let l = self.state.learner_of(u);
                let unexplored: Vec<usize> =
                    (0..n).filter(|&c| self.state.pulls(l, c) == 0).collect();
                if unexplored.is_empty() {
                    let idx: Vec<T> = (0..n).map(|c| self.state.index(l, c, t)).collect();
                    sample_weighted(&selection_weights(&idx, self.config.selection), rng)
                } else {
                    unexplored[rng.gen_range(0..unexplored.len())]
                }
            };
            out.push(choice);
        }
        out
    }

    fn play(&mut self, channels: &[usize]) -> SlotOutcome<T> {
        self.env.begin_slot(self.t);
        let mut users: Vec<UserOutcome<T>> = channels
            .iter()
            .enumerate()
            .map(|(u, &c)| {
                let (true_state, observation) = self.env.sense(u, c);
                let transmitted = observation.is_free();
                UserOutcome {
                    channel: c,
                    true_state,
                    observation,
                    transmitted,
                    reward: reward(true_state, observation),
                    su_collision: false,
                    pu_interference: transmitted && true_state == 0,
                    expected_reward: T::zero(),
                }
            })
            .collect();
        let transmitters: Vec<(usize, bool)> =
            users.iter().map(|o| (o.channel, o.transmitted)).collect();
        let quality = self.env.quality();
        for (u, out) in users.iter_mut().enumerate() {
            let mut expected = quality.get(u, out.channel);
            for (j, &(c, tx)) in transmitters.iter().enumerate() {
                if j == u || c != out.channel {
                    continue;
                }
                expected = expected * (T::one() - self.env.transmit_given_idle(j, c));
                if tx && out.transmitted {
                    out.su_collision = true;
                }
            }
            if out.su_collision {
                out.reward = 0;
            }
            out.expected_reward = expected;
        }
        SlotOutcome {
            slot: self.t,
            users,
        }
    }

    fn learn(&mut self, outcome: &SlotOutcome<T>) {
        if self.config.kind == PolicyKind::Random {
            return;
        }
        for (u, o) in outcome.users.iter().enumerate() {
            self.pending
                .push((self.state.learner_of(u), o.channel, o.reward));
        }
        let r = match self.config.kind {
            PolicyKind::CcUcb1 => self.config.r_period as u64,
            _ => 1,
        };
        if (self.t + 1).is_multiple_of(r) {
            for (l, c, rw) in self.pending.drain(..) {
                self.state.update(l, c, rw);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::WeightMatrix;
    use crate::primary::PrimaryNetwork;
    use crate::sensing::SensorProfile;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const S1: [f64; 10] = [0.1, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

    fn spectrum(
        mu: &[f64],
        users: usize,
        eps: f64,
        delta: f64,
        seed: u64,
    ) -> SpectrumEnvironment<f64> {
        let net = PrimaryNetwork::new(mu.to_vec()).unwrap();
        let sensors = SensorProfile::uniform(users, mu.len(), eps, delta).unwrap();
        SpectrumEnvironment::new(net, sensors, RunSeed(seed)).unwrap()
    }

    fn symmetric(users: usize, row: &[f64], seed: u64) -> BernoulliEnvironment<f64> {
        let w = WeightMatrix::from_rows(vec![row.to_vec(); users]).unwrap();
        BernoulliEnvironment::new(w, RunSeed(seed)).unwrap()
    }

    #[test]
    fn single_user_locks_onto_the_good_channel() {
        let cfg = PolicyConfig::cc_ucb1(Coordination::Hungarian, 1, 0.2);
        let mut e = Engine::new(cfg, spectrum(&[1.0, 0.0], 1, 0.0, 0.0, 3), RunSeed(3)).unwrap();
        let total: u32 = (0..100).map(|_| e.step().successes()).sum();
        assert_eq!(total, 99);
        assert_eq!(e.state().pulls(0, 0), 99);
        assert_eq!(e.state().pulls(0, 1), 1);
    }

    #[test]
    fn larger_alpha_explores_more() {
        let cfg = PolicyConfig::cc_ucb1(Coordination::Hungarian, 1, 1.1);
        let mut e = Engine::new(cfg, spectrum(&[1.0, 0.0], 1, 0.0, 0.0, 3), RunSeed(3)).unwrap();
        let total: u32 = (0..100).map(|_| e.step().successes()).sum();
        assert_eq!(total, 96);
    }

    /// Textbook single-user UCB1: first-best argmax, unexplored arms first.
    fn reference_ucb1(mu: &[f64], alpha: f64, horizon: u64, seed: u64) -> Vec<usize> {
        let mut env = spectrum(mu, 1, 0.0, 0.0, seed);
        let n = mu.len();
        let (mut pulls, mut sums) = (vec![0u64; n], vec![0u64; n]);
        let mut picks = Vec::new();
        for t in 0..horizon {
            let idx = |c: usize| {
                if pulls[c] == 0 {
                    f64::INFINITY
                } else {
                    sums[c] as f64 / pulls[c] as f64
                        + (alpha * (t.max(1) as f64).ln() / pulls[c] as f64).sqrt()
                }
            };
            let mut best = 0;
            for c in 1..n {
                if idx(c) > idx(best) {
                    best = c;
                }
            }
            env.begin_slot(t);
            let (s, x) = env.sense(0, best);
            pulls[best] += 1;
            sums[best] += u64::from(reward(s, x));
            picks.push(best);
        }
        picks
    }

    #[test]
    fn single_user_matches_reference_ucb1() {
        let mu = [0.3, 0.9, 0.5, 0.7, 0.2];
        for seed in 0..5 {
            let cfg = PolicyConfig::cc_ucb1(Coordination::Hungarian, 1, 1.5);
            let mut e = Engine::new(cfg, spectrum(&mu, 1, 0.0, 0.0, seed), RunSeed(seed)).unwrap();
            let ours: Vec<usize> = (0..3000).map(|_| e.step().users[0].channel).collect();
            assert_eq!(ours, reference_ucb1(&mu, 1.5, 3000, seed), "seed {seed}");
        }
    }

    #[test]
    fn config_pairings() {
        let mut cfg = PolicyConfig::cc_ucb1(Coordination::RoundRobin, 3, 1.1);
        assert!(cfg.validate(3).is_ok());
        assert_eq!(cfg.learning_mode(3), LearningMode::Shared);
        cfg.r_period = 1;
        assert!(cfg
            .validate(3)
            .unwrap_err()
            .to_string()
            .contains("round-robin"));
        cfg.r_period = 2;
        assert!(cfg.validate(3).is_err());
        let h = PolicyConfig::cc_ucb1(Coordination::Hungarian, 3, 1.1);
        assert_eq!(h.learning_mode(3), LearningMode::Individual);
        assert!(Engine::new(h, symmetric(4, &[0.5; 3], 0), RunSeed(0)).is_err());
    }

    #[test]
    fn advisories() {
        let cfg = PolicyConfig::cc_ucb1(Coordination::Hungarian, 3, 1.1);
        assert!(cfg.advisories(3, true).is_empty());
        assert_eq!(cfg.advisories(3, false).len(), 1);
        let low = PolicyConfig::cc_ucb1(Coordination::Hungarian, 3, 0.5);
        assert_eq!(low.advisories(3, true).len(), 1);
    }

    #[test]
    fn names_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.as_str().parse::<PolicyKind>().unwrap(), *k);
        }
        assert_eq!(
            "round_robin".parse::<Coordination>().unwrap(),
            Coordination::RoundRobin
        );
        assert!("softmax".parse::<PolicyKind>().is_err());
    }

    #[test]
    fn paper_literal_weights_clamp_and_normalize() {
        let w = selection_weights(&[1.2, 0.4], SelectionRule::PaperLiteral);
        assert_abs_diff_eq!(w[0], 1.6666638888935185e-06, epsilon = 1e-18);
        assert_abs_diff_eq!(w[1], 0.9999983333361111, epsilon = 1e-15);
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        let p = selection_weights(&[1.2, 0.4], SelectionRule::ProportionalToIndex);
        assert_abs_diff_eq!(p[0], 0.75, epsilon = 1e-15);
    }

    #[test]
    fn random_pair_collides_half_the_time() {
        let cfg = PolicyConfig::baseline(PolicyKind::Random, SelectionRule::PaperLiteral, 1.1);
        let mut e = Engine::new(cfg, symmetric(2, &[1.0, 1.0], 9), RunSeed(9)).unwrap();
        let slots = 100_000;
        let mut same = 0;
        for _ in 0..slots {
            let o = e.step();
            if o.users[0].channel == o.users[1].channel {
                same += 1;
                assert!(o.users.iter().all(|u| u.su_collision && u.reward == 0));
                assert_eq!(o.users[0].expected_reward, 0.0);
            }
        }
        let p = same as f64 / slots as f64;
        // 4 standard errors of a Bernoulli(1/2) mean
        assert!((p - 0.5).abs() < 4.0 * (0.25 / slots as f64).sqrt(), "{p}");
    }

    #[test]
    fn baselines_explore_every_channel_first() {
        for kind in [PolicyKind::IndividualUcb, PolicyKind::CooperativeUcb] {
            let cfg = PolicyConfig::baseline(kind, SelectionRule::ProportionalToIndex, 1.1);
            let mut e = Engine::new(cfg, spectrum(&S1, 2, 0.2, 0.1, 4), RunSeed(4)).unwrap();
            for _ in 0..10 {
                e.step();
            }
            let s = e.state();
            for l in 0..s.learners() {
                assert!((0..10).all(|c| s.pulls(l, c) >= 1), "{kind}");
            }
        }
    }

    #[test]
    fn pu_interference_only_on_missed_detection() {
        let cfg = PolicyConfig::baseline(PolicyKind::Random, SelectionRule::PaperLiteral, 1.1);
        let mut e = Engine::new(cfg, spectrum(&[0.5; 4], 1, 0.1, 0.3, 2), RunSeed(2)).unwrap();
        let mut hits = 0;
        for _ in 0..20_000 {
            let u = e.step().users[0];
            assert_eq!(u.pu_interference, u.transmitted && u.true_state == 0);
            if u.pu_interference {
                hits += 1;
            }
        }
        // P = (1 - mu) * delta = 0.15
        assert!((hits as f64 / 20_000.0 - 0.15).abs() < 0.01);
    }

    #[test]
    fn shared_round_robin_adds_k_samples_per_channel_per_round() {
        let k = 3;
        let cfg = PolicyConfig::cc_ucb1(Coordination::RoundRobin, k, 1.1);
        let mut e = Engine::new(cfg, symmetric(k, &S1, 5), RunSeed(5)).unwrap();
        let mut before: Vec<u64> = (0..10).map(|c| e.state().pulls(0, c)).collect();
        for round in 0..200 {
            let mut used = Vec::new();
            for _ in 0..k {
                used.extend(e.step().channels());
            }
            let after: Vec<u64> = (0..10).map(|c| e.state().pulls(0, c)).collect();
            used.sort_unstable();
            used.dedup();
            assert_eq!(used.len(), k);
            for c in 0..10 {
                let want = if used.contains(&c) { k as u64 } else { 0 };
                assert_eq!(after[c] - before[c], want, "round {round} channel {c}");
            }
            before = after;
        }
        // the initial rounds sweep all channels at least K times
        assert!((0..10).all(|c| e.state().pulls(0, c) >= k as u64));
    }

    #[test]
    fn held_hungarian_block_cycles_assigned_channels() {
        let k = 3;
        let mut cfg = PolicyConfig::cc_ucb1(Coordination::Hungarian, k, 1.1);
        cfg.r_period = k;
        let mut e = Engine::new(cfg, symmetric(k, &S1, 6), RunSeed(6)).unwrap();
        for _ in 0..100 {
            let block: Vec<Vec<usize>> = (0..k).map(|_| e.step().channels()).collect();
            let mut first = block[0].clone();
            first.sort_unstable();
            for u in 0..k {
                let mut mine: Vec<usize> = block.iter().map(|s| s[u]).collect();
                mine.sort_unstable();
                assert_eq!(mine, first);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn coordinated_choices_never_collide(
            seed in 0u64..1000,
            k in 1usize..5,
            rr in any::<bool>(),
            rows in proptest::collection::vec(proptest::collection::vec(0.0f64..=1.0, 6), 4),
        ) {
            let coord = if rr { Coordination::RoundRobin } else { Coordination::Hungarian };
            let quality = WeightMatrix::from_rows(rows[..k].to_vec()).unwrap();
            let env = BernoulliEnvironment::new(quality, RunSeed(seed)).unwrap();
            let cfg = PolicyConfig::cc_ucb1(coord, k, 1.1);
            let mut e = Engine::new(cfg, env, RunSeed(seed)).unwrap();
            for _ in 0..200 {
                let o = e.step();
                let mut ch = o.channels();
                ch.sort_unstable();
                ch.dedup();
                prop_assert_eq!(ch.len(), k);
                for u in &o.users {
                    prop_assert!(!u.su_collision);
                    if u.reward == 1 {
                        prop_assert!(u.transmitted && !u.pu_interference);
                    }
                }
            }
        }

        #[test]
        fn round_robin_windows_are_fair(seed in 0u64..1000, k in 1usize..5) {
            let cfg = PolicyConfig::cc_ucb1(Coordination::RoundRobin, k, 1.1);
            let mut e = Engine::new(cfg, symmetric(k, &S1, seed), RunSeed(seed)).unwrap();
            for _ in 0..50 {
                let window: Vec<Vec<usize>> = (0..k).map(|_| e.step().channels()).collect();
                let mut top = window[0].clone();
                top.sort_unstable();
                for u in 0..k {
                    let mut mine: Vec<usize> = window.iter().map(|s| s[u]).collect();
                    mine.sort_unstable();
                    prop_assert_eq!(&mine, &top);
                }
            }
        }
    }
}
