//! Seeded experiment batches and their CSV output.

mod scenario;

use std::fmt;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

pub use scenario::{
    load_scenario, parse_scenario, preset, ChannelModel, Profile, ScenarioConfig, DEFAULT_ALPHA,
    PRESETS, SCENARIO2_ROW3, THETA, THROUGHPUT_FALSE_ALARM, THROUGHPUT_MISS_DETECTION,
};

use crate::error::Result;
use crate::metrics::{slot_bytes, theorem1_bound, OptimalSetMeter, RegretMeter};
use crate::policy::{Engine, PolicyKind};
use crate::streams::RunSeed;

pub const CSV_HEADER: [&str; 8] = [
    "slot",
    "mean_regret",
    "se_regret",
    "mean_ntp_bytes",
    "se_ntp",
    "optimal_set_fraction",
    "pu_interference_rate",
    "su_collision_rate",
];

/// Downsampled trace of one run. Entry `i` describes the state after
/// `slots[i]` slots; `ntp_bytes[i]` is the traffic of the last of those slots.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub seed: u64,
    pub slots: Vec<u64>,
    /// User-averaged cumulative regret.
    pub regret: Vec<f64>,
    /// `per_user_regret[i][k]`.
    pub per_user_regret: Vec<Vec<f64>>,
    pub ntp_bytes: Vec<f64>,
    pub optimal_set_fraction: Vec<f64>,
    /// Cumulative number of user-slots with primary interference.
    pub pu_interference: Vec<u64>,
    /// Cumulative number of user-slots lost to secondary collisions.
    pub su_collisions: Vec<u64>,
}

/// Slots at which a run is sampled: `0, stride, 2 stride, ...` up to the
/// horizon.
pub fn sample_slots(horizon: u64, stride: u64) -> impl Iterator<Item = u64> {
    (0..=horizon / stride).map(move |i| i * stride)
}

/// Runs the scenario once with seed `cfg.seed + run`.
pub fn run_single(cfg: &ScenarioConfig, run: usize) -> Result<RunRecord> {
    let seed = cfg.seed.wrapping_add(run as u64);
    let quality = cfg.quality();
    let env = cfg.environment(RunSeed(seed))?;
    let mut engine = Engine::new(cfg.policy, env, RunSeed(seed))?;
    let mut regret = RegretMeter::new(&quality, cfg.regret)?;
    let mut occupancy = OptimalSetMeter::new(&quality)?;

    let rows = (cfg.horizon / cfg.stride + 1) as usize;
    let k = cfg.users;
    let mut rec = RunRecord {
        seed,
        slots: Vec::with_capacity(rows),
        regret: Vec::with_capacity(rows),
        per_user_regret: Vec::with_capacity(rows),
        ntp_bytes: Vec::with_capacity(rows),
        optimal_set_fraction: Vec::with_capacity(rows),
        pu_interference: Vec::with_capacity(rows),
        su_collisions: Vec::with_capacity(rows),
    };
    let (mut pu, mut su) = (0u64, 0u64);
    let push = |rec: &mut RunRecord, t, r, per_user: &[f64], bytes, frac, pu, su| {
        rec.slots.push(t);
        rec.regret.push(r);
        rec.per_user_regret.push(per_user.to_vec());
        rec.ntp_bytes.push(bytes);
        rec.optimal_set_fraction.push(frac);
        rec.pu_interference.push(pu);
        rec.su_collisions.push(su);
    };
    push(&mut rec, 0, 0.0, &vec![0.0; k], 0.0, 0.0, 0, 0);
    for m in 0..cfg.horizon {
        let o = engine.step();
        let r = regret.record(&o)?;
        let frac = occupancy.record(&o)?;
        pu += o.users.iter().filter(|u| u.pu_interference).count() as u64;
        su += o.users.iter().filter(|u| u.su_collision).count() as u64;
        let t = m + 1;
        if t % cfg.stride == 0 {
            let bytes = slot_bytes(&o, cfg.packet_size) as f64;
            push(&mut rec, t, r, regret.per_user(), bytes, frac, pu, su);
        }
    }
    Ok(rec)
}

/// One line of the batch CSV.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AggregateRow {
    pub slot: u64,
    pub mean_regret: f64,
    pub se_regret: f64,
    pub mean_ntp_bytes: f64,
    pub se_ntp: f64,
    pub optimal_set_fraction: f64,
    pub pu_interference_rate: f64,
    pub su_collision_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub scenario: String,
    pub policy: String,
    pub users: usize,
    pub channels: usize,
    pub runs: usize,
    pub horizon: u64,
    pub optimal_value: f64,
    pub final_regret: f64,
    pub final_regret_se: f64,
    /// Leading term of the regret bound at the horizon, when it applies.
    pub bound: Option<f64>,
    pub mean_ntp_bytes: f64,
    pub optimal_set_fraction: f64,
    pub pu_interference_rate: f64,
    pub su_collision_rate: f64,
    pub advisories: Vec<String>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} | {} | K={} N={} | {} runs x {} slots",
            self.scenario, self.policy, self.users, self.channels, self.runs, self.horizon
        )?;
        writeln!(f, "  optimal assignment value  {:.4}", self.optimal_value)?;
        write!(
            f,
            "  regret at horizon         {:.3} (se {:.3})",
            self.final_regret, self.final_regret_se
        )?;
        match self.bound {
            Some(b) => writeln!(f, ", bound leading term {b:.3}")?,
            None => writeln!(f)?,
        }
        writeln!(
            f,
            "  mean throughput           {:.1} bytes/slot",
            self.mean_ntp_bytes
        )?;
        writeln!(
            f,
            "  optimal-set fraction      {:.4}",
            self.optimal_set_fraction
        )?;
        writeln!(
            f,
            "  PU interference rate      {:.5}",
            self.pu_interference_rate
        )?;
        write!(
            f,
            "  SU collision rate         {:.5}",
            self.su_collision_rate
        )?;
        for a in &self.advisories {
            write!(f, "\n  note: {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub rows: Vec<AggregateRow>,
    /// Mean cumulative regret of each user, `per_user_regret[i][k]`.
    pub per_user_regret: Vec<Vec<f64>>,
    pub summary: Summary,
}

impl BatchResult {
    pub fn final_row(&self) -> Option<&AggregateRow> {
        self.rows.last()
    }

    pub fn row_at(&self, slot: u64) -> Option<&AggregateRow> {
        self.rows.iter().find(|r| r.slot == slot)
    }

    /// Mean throughput over the sampled slots among the last `window`.
    pub fn tail_ntp(&self, window: u64) -> f64 {
        let horizon = self.summary.horizon;
        let from = horizon.saturating_sub(window);
        let tail: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.slot > from && r.slot >= 1)
            .map(|r| r.mean_ntp_bytes)
            .collect();
        if tail.is_empty() {
            0.0
        } else {
            tail.iter().sum::<f64>() / tail.len() as f64
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
        }
    }
}

struct Aggregator {
    slots: Vec<u64>,
    users: usize,
    regret: Vec<Welford>,
    ntp: Vec<Welford>,
    fraction: Vec<f64>,
    pu_rate: Vec<f64>,
    su_rate: Vec<f64>,
    per_user: Vec<Vec<f64>>,
    runs: usize,
}

impl Aggregator {
    fn new(slots: Vec<u64>, users: usize) -> Self {
        let n = slots.len();
        Self {
            slots,
            users,
            regret: vec![Welford::default(); n],
            ntp: vec![Welford::default(); n],
            fraction: vec![0.0; n],
            pu_rate: vec![0.0; n],
            su_rate: vec![0.0; n],
            per_user: vec![vec![0.0; users]; n],
            runs: 0,
        }
    }

    fn add(&mut self, rec: &RunRecord) {
        for i in 0..self.slots.len() {
            self.regret[i].push(rec.regret[i]);
            self.ntp[i].push(rec.ntp_bytes[i]);
            self.fraction[i] += rec.optimal_set_fraction[i];
            let user_slots = (self.slots[i] * self.users as u64).max(1) as f64;
            self.pu_rate[i] += rec.pu_interference[i] as f64 / user_slots;
            self.su_rate[i] += rec.su_collisions[i] as f64 / user_slots;
            for (acc, v) in self.per_user[i].iter_mut().zip(&rec.per_user_regret[i]) {
                *acc += v;
            }
        }
        self.runs += 1;
    }

    fn finish(self) -> (Vec<AggregateRow>, Vec<Vec<f64>>) {
        let n = self.runs.max(1) as f64;
        let rows = (0..self.slots.len())
            .map(|i| AggregateRow {
                slot: self.slots[i],
                mean_regret: self.regret[i].mean,
                se_regret: self.regret[i].standard_error(),
                mean_ntp_bytes: self.ntp[i].mean,
                se_ntp: self.ntp[i].standard_error(),
                optimal_set_fraction: self.fraction[i] / n,
                pu_interference_rate: self.pu_rate[i] / n,
                su_collision_rate: self.su_rate[i] / n,
            })
            .collect();
        let per_user = self
            .per_user
            .into_iter()
            .map(|row| row.into_iter().map(|v| v / n).collect())
            .collect();
        (rows, per_user)
    }
}

fn policy_label(cfg: &ScenarioConfig) -> String {
    let p = &cfg.policy;
    match p.kind {
        PolicyKind::CcUcb1 => format!(
            "{} {} R={} alpha={}",
            p.kind, p.coordination, p.r_period, p.alpha
        ),
        PolicyKind::Random => p.kind.to_string(),
        _ => format!("{} {} alpha={}", p.kind, p.selection, p.alpha),
    }
}

/// Runs `cfg.runs` independent runs (in parallel) and averages them. The
/// reduction walks the runs in index order, so the result does not depend
/// on the thread count.
pub fn run_batch(cfg: &ScenarioConfig) -> Result<BatchResult> {
    cfg.validate()?;
    let advisories = cfg.policy.advisories(cfg.users, cfg.is_symmetric());
    for a in &advisories {
        log::warn!("{a}");
    }
    log::info!(
        "{}: {} runs x {} slots, {}",
        cfg.name,
        cfg.runs,
        cfg.horizon,
        policy_label(cfg)
    );

    let mut agg = Aggregator::new(sample_slots(cfg.horizon, cfg.stride).collect(), cfg.users);
    let chunk = (rayon::current_num_threads() * 2).max(1);
    let indices: Vec<usize> = (0..cfg.runs).collect();
    for block in indices.chunks(chunk) {
        let records: Vec<RunRecord> = block
            .par_iter()
            .map(|&i| run_single(cfg, i))
            .collect::<Result<_>>()?;
        for rec in &records {
            agg.add(rec);
        }
        log::debug!("{}: {} of {} runs done", cfg.name, agg.runs, cfg.runs);
    }
    let (rows, per_user_regret) = agg.finish();

    let last = rows.last().copied().unwrap_or_default();
    let active: Vec<f64> = rows
        .iter()
        .filter(|r| r.slot > 0)
        .map(|r| r.mean_ntp_bytes)
        .collect();
    let optimal_value = crate::assignment::hungarian_solve(&cfg.quality())?.value;
    let summary = Summary {
        scenario: cfg.name.clone(),
        policy: policy_label(cfg),
        users: cfg.users,
        channels: cfg.channels,
        runs: cfg.runs,
        horizon: cfg.horizon,
        optimal_value,
        final_regret: last.mean_regret,
        final_regret_se: last.se_regret,
        bound: cfg.bound_params().map(|p| theorem1_bound(&p, cfg.horizon)),
        mean_ntp_bytes: if active.is_empty() {
            0.0
        } else {
            active.iter().sum::<f64>() / active.len() as f64
        },
        optimal_set_fraction: last.optimal_set_fraction,
        pu_interference_rate: last.pu_interference_rate,
        su_collision_rate: last.su_collision_rate,
        advisories,
    };
    Ok(BatchResult {
        rows,
        per_user_regret,
        summary,
    })
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// Header plus one row per sampled slot.
pub fn write_csv_to<W: Write>(batch: &BatchResult, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &batch.rows {
        w.write_record([
            r.slot.to_string(),
            r.mean_regret.to_string(),
            r.se_regret.to_string(),
            r.mean_ntp_bytes.to_string(),
            r.se_ntp.to_string(),
            r.optimal_set_fraction.to_string(),
            r.pu_interference_rate.to_string(),
            r.su_collision_rate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(batch: &BatchResult, path: &Path) -> Result<()> {
    write_csv_to(batch, std::fs::File::create(path)?)
}

/// `slot, regret_user0, regret_user1, ...`: mean cumulative regret per user.
pub fn write_per_user_csv_to<W: Write>(batch: &BatchResult, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    let mut header = vec!["slot".to_string()];
    header.extend((0..batch.summary.users).map(|k| format!("regret_user{k}")));
    w.write_record(&header)?;
    for (row, users) in batch.rows.iter().zip(&batch.per_user_regret) {
        let mut rec = vec![row.slot.to_string()];
        rec.extend(users.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_user_csv(batch: &BatchResult, path: &Path) -> Result<()> {
    write_per_user_csv_to(batch, std::fs::File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(name: &str) -> ScenarioConfig {
        let mut cfg = preset(name, Profile::Desk).unwrap();
        cfg.horizon = 2000;
        cfg.runs = 5;
        cfg.stride = 100;
        cfg
    }

    #[test]
    fn sample_slot_arithmetic() {
        assert_eq!(sample_slots(1_000_000, 1000).count(), 1001);
        assert_eq!(sample_slots(10, 3).collect::<Vec<_>>(), vec![0, 3, 6, 9]);
    }

    #[test]
    fn run_record_lengths() {
        let cfg = small("scenario1");
        let rec = run_single(&cfg, 0).unwrap();
        assert_eq!(rec.slots.len(), 21);
        assert_eq!(rec.seed, cfg.seed);
        assert_eq!(rec.regret[0], 0.0);
        assert!(rec.su_collisions.iter().all(|&c| c == 0));
    }

    #[test]
    fn stride_only_selects_rows() {
        let mut fine = small("scenario2");
        fine.stride = 10;
        let coarse = small("scenario2");
        let a = run_batch(&fine).unwrap();
        let b = run_batch(&coarse).unwrap();
        for row in &b.rows {
            assert_eq!(a.row_at(row.slot), Some(row));
        }
    }

    #[test]
    fn batch_is_deterministic_and_bounded() {
        let cfg = small("throughput-c1");
        let a = run_batch(&cfg).unwrap();
        let b = run_batch(&cfg).unwrap();
        assert_eq!(a, b);
        for r in &a.rows {
            assert!(r.mean_ntp_bytes >= 0.0 && r.mean_ntp_bytes <= 4000.0);
        }
        assert!(a.summary.su_collision_rate > 0.0);
        assert!(a.summary.pu_interference_rate > 0.0);
    }

    #[test]
    fn csv_shape() {
        let batch = run_batch(&small("scenario1")).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&batch, &mut buf).unwrap();
        let mut rdr = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(rdr.headers().unwrap().len(), 8);
        let slots: Vec<u64> = rdr
            .records()
            .map(|r| r.unwrap()[0].parse().unwrap())
            .collect();
        assert_eq!(slots.len(), 21);
        assert!(slots.windows(2).all(|w| w[0] < w[1]));
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().skip(1).all(|l| !l.contains(['e', 'E'])));
    }

    #[test]
    fn empty_batch_writes_header_only() {
        let mut batch = run_batch(&small("scenario1")).unwrap();
        batch.rows.clear();
        batch.per_user_regret.clear();
        let mut buf = Vec::new();
        write_csv_to(&batch, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", CSV_HEADER.join(","))
        );
    }

    #[test]
    fn per_user_csv() {
        let batch = run_batch(&small("scenario2")).unwrap();
        let mut buf = Vec::new();
        write_per_user_csv_to(&batch, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("slot,regret_user0,regret_user1,regret_user2\n"));
        assert_eq!(text.lines().count(), 22);
    }

    #[test]
    fn summary_mentions_bound_for_symmetric_runs() {
        let batch = run_batch(&small("scenario1")).unwrap();
        assert!(batch.summary.bound.is_some());
        assert!(batch.summary.to_string().contains("bound"));
        let batch = run_batch(&small("scenario2")).unwrap();
        assert!(batch.summary.bound.is_none());
        assert!(!batch.summary.advisories.is_empty());
    }
}
