//! Experiment descriptions: TOML files and the compiled-in presets.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::assignment::WeightMatrix;
use crate::error::{Error, Result};
use crate::metrics::{BoundParams, RegretKind, DEFAULT_PACKET_SIZE};
use crate::policy::{
    BernoulliEnvironment, Coordination, Environment, PolicyConfig, PolicyKind, SelectionRule,
    SpectrumEnvironment,
};
use crate::primary::PrimaryNetwork;
use crate::sensing::{expected_reward, SensorProfile};
use crate::streams::RunSeed;

/// Channel availabilities shared by Scenario 1 and the throughput study.
pub const THETA: [f64; 10] = [0.1, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
/// Third user's row in Scenario 2.
pub const SCENARIO2_ROW3: [f64; 10] = [0.1, 0.1, 0.2, 0.3, 0.4, 0.7, 0.9, 0.7, 0.7, 0.6];

pub const THROUGHPUT_FALSE_ALARM: f64 = 0.2;
pub const THROUGHPUT_MISS_DETECTION: f64 = 0.1;
pub const DEFAULT_ALPHA: f64 = 1.1;

pub const PRESETS: &[&str] = &[
    "scenario1",
    "scenario2",
    "throughput-c1",
    "throughput-c2",
    "throughput-c3",
    "throughput-c4",
];

/// Scale of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// 10^5 slots, 30 runs, every 100th slot emitted.
    #[default]
    Desk,
    /// 10^6 slots, every 1000th slot emitted; 30 runs, or 1000 for the
    /// throughput study.
    Full,
}

#[derive(Debug, Clone)]
pub enum ChannelModel {
    /// Primary users with availability `mu` observed through imperfect
    /// detectors.
    Spectrum {
        network: PrimaryNetwork<f64>,
        sensors: SensorProfile<f64>,
    },
    /// Abstract mode: each user sees channel `n` free with probability
    /// `quality[k][n]`, independently.
    Quality(WeightMatrix<f64>),
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub name: String,
    pub users: usize,
    pub channels: usize,
    pub model: ChannelModel,
    pub policy: PolicyConfig<f64>,
    pub horizon: u64,
    pub runs: usize,
    pub seed: u64,
    pub stride: u64,
    pub packet_size: u32,
    pub regret: RegretKind,
    pub out: Option<PathBuf>,
}

impl ScenarioConfig {
    /// Expected reward matrix `lambda`.
    pub fn quality(&self) -> WeightMatrix<f64> {
        match &self.model {
            ChannelModel::Quality(q) => q.clone(),
            ChannelModel::Spectrum { network, sensors } => {
                let values = (0..sensors.users())
                    .flat_map(|k| {
                        network
                            .availability()
                            .iter()
                            .enumerate()
                            .map(move |(n, &mu)| {
                                expected_reward(mu, sensors.false_alarm(k, n).unwrap_or(1.0))
                            })
                    })
                    .collect();
                WeightMatrix::new(self.users, self.channels, values).expect("validated shape")
            }
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.quality().is_symmetric()
    }

    /// Bound constants, when the network is symmetric and the bound applies.
    pub fn bound_params(&self) -> Option<BoundParams<f64>> {
        BoundParams::from_quality(&self.quality(), self.policy.alpha).ok()
    }

    pub fn environment(&self, seed: RunSeed) -> Result<Box<dyn Environment<f64> + Send>> {
        Ok(match &self.model {
            ChannelModel::Spectrum { network, sensors } => Box::new(SpectrumEnvironment::new(
                network.clone(),
                sensors.clone(),
                seed,
            )?),
            ChannelModel::Quality(q) => Box::new(BernoulliEnvironment::new(q.clone(), seed)?),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::config("network.users", "need at least one user"));
        }
        if self.users > self.channels {
            return Err(Error::MoreUsersThanChannels {
                users: self.users,
                channels: self.channels,
            });
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        self.policy.validate(self.users)
    }

    /// Period implied by the coordination scheme and the network: shared
    /// learning (period `K`) for round-robin and for symmetric networks,
    /// per-user learning otherwise.
    pub fn default_period(&self) -> usize {
        if self.policy.coordination == Coordination::RoundRobin || self.is_symmetric() {
            self.users
        } else {
            1
        }
    }

    pub fn apply_profile(&mut self, profile: Profile) {
        match profile {
            Profile::Desk => {
                self.horizon = 100_000;
                self.runs = 30;
                self.stride = 100;
            }
            Profile::Full => {
                self.horizon = 1_000_000;
                self.stride = 1000;
                self.runs = if self.name.starts_with("throughput") {
                    1000
                } else {
                    30
                };
            }
        }
    }

    /// Same experiment with `users` users. Only possible when every user has
    /// the same sensor, which is the case for the throughput study.
    pub fn with_users(&self, users: usize) -> Result<Self> {
        let ChannelModel::Spectrum { network, sensors } = &self.model else {
            return Err(Error::config(
                "network.users",
                "can only be changed for availability-based scenarios",
            ));
        };
        let n = self.channels;
        let eps = sensors.false_alarm(0, 0)?;
        let delta = sensors.miss_detection(0, 0)?;
        for k in 0..sensors.users() {
            for c in 0..n {
                if sensors.false_alarm(k, c)? != eps || sensors.miss_detection(k, c)? != delta {
                    return Err(Error::config(
                        "sensing",
                        "can only change the user count when sensing is uniform",
                    ));
                }
            }
        }
        let mut out = self.clone();
        out.users = users;
        out.model = ChannelModel::Spectrum {
            network: network.clone(),
            sensors: SensorProfile::uniform(users, n, eps, delta)?,
        };
        if out.policy.kind == PolicyKind::CcUcb1 && self.policy.r_period == self.users {
            out.policy.r_period = users;
        }
        out.validate()?;
        Ok(out)
    }
}

fn base(
    name: &str,
    users: usize,
    model: ChannelModel,
    policy: PolicyConfig<f64>,
) -> ScenarioConfig {
    let mut cfg = ScenarioConfig {
        name: name.to_string(),
        users,
        channels: 10,
        model,
        policy,
        horizon: 0,
        runs: 0,
        seed: 1,
        stride: 1,
        packet_size: DEFAULT_PACKET_SIZE,
        regret: RegretKind::Pseudo,
        out: None,
    };
    cfg.apply_profile(Profile::Desk);
    cfg
}

fn quality_model(rows: Vec<Vec<f64>>) -> ChannelModel {
    ChannelModel::Quality(WeightMatrix::from_rows(rows).expect("preset matrix is well formed"))
}

/// Compiled-in experiment, at the given scale.
pub fn preset(name: &str, profile: Profile) -> Option<ScenarioConfig> {
    let mut cfg = match name {
        "scenario1" => base(
            name,
            3,
            quality_model(vec![THETA.to_vec(); 3]),
            PolicyConfig::cc_ucb1(Coordination::RoundRobin, 3, DEFAULT_ALPHA),
        ),
        "scenario2" => base(
            name,
            3,
            quality_model(vec![
                THETA.to_vec(),
                THETA.to_vec(),
                SCENARIO2_ROW3.to_vec(),
            ]),
            PolicyConfig::cc_ucb1(Coordination::Hungarian, 3, DEFAULT_ALPHA),
        ),
        "throughput-c1" | "throughput-c2" | "throughput-c3" | "throughput-c4" => {
            let users = 4;
            let policy = match name {
                "throughput-c1" => PolicyConfig::baseline(
                    PolicyKind::Random,
                    SelectionRule::ProportionalToIndex,
                    DEFAULT_ALPHA,
                ),
                "throughput-c2" => PolicyConfig::baseline(
                    PolicyKind::IndividualUcb,
                    SelectionRule::ProportionalToIndex,
                    DEFAULT_ALPHA,
                ),
                "throughput-c3" => PolicyConfig::baseline(
                    PolicyKind::CooperativeUcb,
                    SelectionRule::ProportionalToIndex,
                    DEFAULT_ALPHA,
                ),
                _ => PolicyConfig::cc_ucb1(Coordination::RoundRobin, users, DEFAULT_ALPHA),
            };
            let model = ChannelModel::Spectrum {
                network: PrimaryNetwork::new(THETA.to_vec()).expect("valid availabilities"),
                sensors: SensorProfile::uniform(
                    users,
                    THETA.len(),
                    THROUGHPUT_FALSE_ALARM,
                    THROUGHPUT_MISS_DETECTION,
                )
                .expect("valid sensor"),
            };
            base(name, users, model, policy)
        }
        _ => return None,
    };
    cfg.apply_profile(profile);
    Some(cfg)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    horizon: Option<u64>,
    runs: Option<usize>,
    seed: Option<u64>,
    stride: Option<u64>,
    packet_size: Option<u32>,
    regret: Option<RegretKind>,
    out: Option<PathBuf>,
    network: NetworkSection,
    sensing: Option<SensingSection>,
    #[serde(default)]
    policy: PolicySection,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSection {
    users: usize,
    channels: usize,
    availability: Option<Vec<f64>>,
    quality: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SensingSection {
    #[serde(default)]
    false_alarm: PerUserChannel,
    #[serde(default)]
    miss_detection: PerUserChannel,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PerUserChannel {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl Default for PerUserChannel {
    fn default() -> Self {
        PerUserChannel::Scalar(0.0)
    }
}

impl PerUserChannel {
    fn expand(&self, path: &str, users: usize, channels: usize) -> Result<Vec<Vec<f64>>> {
        match self {
            PerUserChannel::Scalar(p) => Ok(vec![vec![*p; channels]; users]),
            PerUserChannel::Matrix(rows) => {
                if rows.len() != users || rows.iter().any(|r| r.len() != channels) {
                    return Err(Error::config(
                        path,
                        format!("expected a {users}x{channels} matrix"),
                    ));
                }
                Ok(rows.clone())
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicySection {
    kind: Option<PolicyKind>,
    coordination: Option<Coordination>,
    period: Option<usize>,
    alpha: Option<f64>,
    selection: Option<SelectionRule>,
}

fn prefix_path(err: Error, prefix: &str) -> Error {
    match err {
        Error::Config { path, message } => Error::config(format!("{prefix}.{path}"), message),
        other => other,
    }
}

/// Parses and validates a scenario written in TOML. `origin` names the
/// source in the scenario name when the file has none.
pub fn parse_scenario(text: &str, origin: &str) -> Result<ScenarioConfig> {
    let de = toml::Deserializer::new(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            if path == "." {
                "scenario".to_string()
            } else {
                path
            },
            e.into_inner().message().trim().to_string(),
        )
    })?;

    let (users, channels) = (file.network.users, file.network.channels);
    if users > channels {
        return Err(Error::MoreUsersThanChannels { users, channels });
    }
    let model = match (&file.network.availability, &file.network.quality) {
        (Some(mu), None) => {
            if mu.len() != channels {
                return Err(Error::config(
                    "network.availability",
                    format!("expected {channels} entries, got {}", mu.len()),
                ));
            }
            let network = PrimaryNetwork::new(mu.clone()).map_err(|e| prefix_path(e, "network"))?;
            let sensing = file.sensing.unwrap_or(SensingSection {
                false_alarm: PerUserChannel::default(),
                miss_detection: PerUserChannel::default(),
            });
            let fa = sensing
                .false_alarm
                .expand("sensing.false_alarm", users, channels)?;
            let md = sensing
                .miss_detection
                .expand("sensing.miss_detection", users, channels)?;
            let sensors = SensorProfile::new(users, channels, fa.concat(), md.concat())
                .map_err(|e| prefix_path(e, "sensing"))?;
            ChannelModel::Spectrum { network, sensors }
        }
        (None, Some(q)) => {
            if file.sensing.is_some() {
                return Err(Error::config(
                    "sensing",
                    "only valid together with network.availability",
                ));
            }
            if q.len() != users || q.iter().any(|r| r.len() != channels) {
                return Err(Error::config(
                    "network.quality",
                    format!("expected a {users}x{channels} matrix"),
                ));
            }
            for (k, row) in q.iter().enumerate() {
                if let Some(n) = row.iter().position(|p| !(0.0..=1.0).contains(p)) {
                    return Err(Error::config(
                        format!("network.quality[{k}][{n}]"),
                        "not a probability",
                    ));
                }
            }
            quality_model(q.clone())
        }
        _ => {
            return Err(Error::config(
                "network",
                "exactly one of `availability` or `quality` must be given",
            ))
        }
    };

    let p = &file.policy;
    let kind = p.kind.unwrap_or(PolicyKind::CcUcb1);
    let alpha = p.alpha.unwrap_or(DEFAULT_ALPHA);
    let coordination = p.coordination.unwrap_or(Coordination::Hungarian);
    let policy = PolicyConfig {
        kind,
        coordination,
        r_period: 1,
        alpha,
        selection: p.selection.unwrap_or(SelectionRule::PaperLiteral),
    };
    let mut cfg = base(file.name.as_deref().unwrap_or(origin), users, model, policy);
    cfg.channels = channels;
    cfg.policy.r_period = p.period.unwrap_or_else(|| cfg.default_period());
    if let Some(h) = file.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = file.runs {
        cfg.runs = r;
    }
    if let Some(s) = file.seed {
        cfg.seed = s;
    }
    if let Some(s) = file.stride {
        cfg.stride = s;
    }
    if let Some(b) = file.packet_size {
        cfg.packet_size = b;
    }
    if let Some(r) = file.regret {
        cfg.regret = r;
    }
    cfg.out = file.out;
    cfg.validate()?;
    Ok(cfg)
}

/// A preset name or the path of a TOML scenario file.
pub fn load_scenario(name_or_path: &str) -> Result<ScenarioConfig> {
    if let Some(cfg) = preset(name_or_path, Profile::Desk) {
        return Ok(cfg);
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::config(
            name_or_path,
            format!("{e} (not a preset either; presets: {})", PRESETS.join(", ")),
        )
    })?;
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name_or_path);
    parse_scenario(&text, stem)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::LearningMode;

    #[test]
    fn presets_carry_the_published_matrices() {
        let s1 = preset("scenario1", Profile::Desk).unwrap();
        let q = s1.quality();
        for k in 0..3 {
            assert_eq!(q.row(k), &THETA);
        }
        assert_eq!(s1.policy.coordination, Coordination::RoundRobin);
        assert_eq!(s1.policy.learning_mode(3), LearningMode::Shared);
        let s2 = preset("scenario2", Profile::Desk).unwrap();
        let q = s2.quality();
        assert_eq!(
            q.row(2),
            &[0.1, 0.1, 0.2, 0.3, 0.4, 0.7, 0.9, 0.7, 0.7, 0.6]
        );
        assert_eq!(q.row(0), &THETA);
        assert_eq!(s2.policy.r_period, 1);
        assert_eq!((s1.horizon, s1.runs, s1.stride), (100_000, 30, 100));
    }

    #[test]
    fn throughput_presets() {
        for name in &PRESETS[2..] {
            let cfg = preset(name, Profile::Full).unwrap();
            assert_eq!((cfg.users, cfg.channels, cfg.runs), (4, 10, 1000));
            assert_eq!(cfg.horizon, 1_000_000);
            let q = cfg.quality();
            assert!((q.get(0, 9) - 0.72).abs() < 1e-12);
            cfg.validate().unwrap();
        }
        let c4 = preset("throughput-c4", Profile::Desk)
            .unwrap()
            .with_users(6)
            .unwrap();
        assert_eq!(c4.policy.r_period, 6);
        assert_eq!(c4.quality().rows(), 6);
        assert!(preset("scenario1", Profile::Desk)
            .unwrap()
            .with_users(2)
            .is_err());
        assert!(preset("nope", Profile::Desk).is_none());
    }

    #[test]
    fn full_file_round_trip() {
        let text = r#"
            name = "custom"
            horizon = 500
            runs = 2
            seed = 7
            stride = 10
            regret = "realized"

            [network]
            users = 2
            channels = 3
            availability = [0.2, 0.5, 0.9]

            [sensing]
            false_alarm = 0.1
            miss_detection = [[0.0, 0.1, 0.2], [0.2, 0.1, 0.0]]

            [policy]
            kind = "cc-ucb1"
            coordination = "round-robin"
            alpha = 2.0
        "#;
        let cfg = parse_scenario(text, "file").unwrap();
        assert_eq!(cfg.name, "custom");
        assert_eq!(
            (cfg.horizon, cfg.runs, cfg.seed, cfg.stride),
            (500, 2, 7, 10)
        );
        assert_eq!(cfg.policy.r_period, 2);
        assert_eq!(cfg.regret, RegretKind::Realized);
        assert!((cfg.quality().get(1, 2) - 0.81).abs() < 1e-12);
    }

    #[test]
    fn heterogeneous_file_defaults_to_per_user_learning() {
        let text = r#"
            [network]
            users = 2
            channels = 2
            quality = [[0.1, 0.9], [0.9, 0.1]]
        "#;
        let cfg = parse_scenario(text, "hetero").unwrap();
        assert_eq!(cfg.name, "hetero");
        assert_eq!(cfg.policy.r_period, 1);
        assert_eq!(cfg.policy.coordination, Coordination::Hungarian);
    }

    fn err(text: &str) -> String {
        parse_scenario(text, "t").unwrap_err().to_string()
    }

    #[test]
    fn schema_errors_name_the_field() {
        let e = err("[network]\nusers = 5\nchannels = 3\navailability = [0.5, 0.5, 0.5]\n");
        assert!(e.contains("more users than channels"), "{e}");
        let e = err("[network]\nusers = \"two\"\nchannels = 3\n");
        assert!(e.starts_with("network.users"), "{e}");
        let e = err("[network]\nusers = 1\nchannels = 2\navailability = [0.5, 1.5]\n");
        assert!(e.starts_with("network.availability[1]"), "{e}");
        let e = err("[network]\nusers = 1\nchannels = 2\n");
        assert!(e.contains("exactly one of"), "{e}");
        let e = err("[network]\nusers = 1\nchannels = 2\nquality = [[0.5, 0.5]]\n[policy]\nkind = \"softmax\"\n");
        assert!(e.starts_with("policy.kind"), "{e}");
        let e = err("[network]\nusers = 1\nchannels = 2\nquality = [[0.5, 0.5]]\ncolour = 1\n");
        assert!(e.starts_with("network"), "{e}");
        let e = err("[network]\nusers = 2\nchannels = 2\nquality = [[0.5, 0.5], [0.5, 0.5]]\n[policy]\ncoordination = \"round-robin\"\nperiod = 1\n");
        assert!(e.starts_with("policy.period"), "{e}");
        let e = err("[network]\nusers = 1\nchannels = 2\navailability = [0.5, 0.5]\n[sensing]\nfalse_alarm = [[0.1]]\n");
        assert!(e.starts_with("sensing.false_alarm"), "{e}");
        let e = err("runs = 0\n[network]\nusers = 1\nchannels = 2\nquality = [[0.5, 0.5]]\n");
        assert!(e.starts_with("runs"), "{e}");
    }

    #[test]
    fn missing_file_mentions_presets() {
        let e = load_scenario("/definitely/not/here.toml")
            .unwrap_err()
            .to_string();
        assert!(e.contains("scenario1"), "{e}");
    }
}
