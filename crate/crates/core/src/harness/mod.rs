//! Declarative experiment runner.
//!
//! Three built-in experiments mirror the prototype's measurement campaigns:
//!
//! * `E1` small networks (N = 6, 7, 8) over a sweep of age thresholds,
//!   800-slot runs with 2% misdetection;
//! * `E2` 8 to 40 virtual devices multiplexed onto 8 radios;
//! * `E3` two receive-power groups under the capture channel, sweeping the
//!   power gap.
//!
//! Replications of one sweep point use seeds derived from the master seed
//! and the replication index only, so every sweep point sees the same
//! random numbers. Replications run in parallel; results are collected in
//! index order, which keeps reports byte-reproducible.

mod config_file;
mod report;

use std::path::PathBuf;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{ChannelModel, ChannelParams, REFERENCE_POWER_DB};
use crate::engine::{run_summary, ConfigError, NetworkConfig, RunSummary};
use crate::protocols::{
    adra_average_aoi, adra_optimize_cap, aira_average_aoi, aira_optimal_cap, AnalyticError, Policy,
};

pub use config_file::parse_config;
pub use report::{csv_header, emit_csv, render_table, write_csv};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Network(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    E1,
    E2,
    E3,
    Custom,
}

impl ExperimentId {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::E1 => "e1",
            ExperimentId::E2 => "e2",
            ExperimentId::E3 => "e3",
            ExperimentId::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ExperimentId {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e1" => Ok(ExperimentId::E1),
            "e2" => Ok(ExperimentId::E2),
            "e3" => Ok(ExperimentId::E3),
            "custom" => Ok(ExperimentId::Custom),
            other => Err(HarnessError::Config(format!(
                "unknown experiment {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Aira,
    Adra,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Aira => "AIRA",
            Protocol::Adra => "ADRA",
        }
    }
}

impl std::str::FromStr for Protocol {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aira" => Ok(Protocol::Aira),
            "adra" => Ok(Protocol::Adra),
            other => Err(HarnessError::Config(format!("unknown protocol {other:?}"))),
        }
    }
}

/// Receive-power group of a device in E3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Group {
    Low,
    High,
}

impl Group {
    pub fn name(self) -> &'static str {
        match self {
            Group::Low => "low",
            Group::High => "high",
        }
    }
}

pub const E1_DELTAS: [u64; 10] = [1, 2, 4, 8, 12, 16, 20, 24, 28, 32];
pub const E3_GAPS_DB: [f64; 7] = [0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: ExperimentId,
    pub n_values: Vec<u16>,
    /// Thresholds swept by E1 and used by `custom` (first entry).
    pub deltas: Vec<u64>,
    /// High-group power gaps for E3.
    pub gaps_db: Vec<f64>,
    pub horizon: u64,
    pub replications: u32,
    pub master_seed: u64,
    pub channel: ChannelModel,
    pub beta_db: f64,
    pub noise_floor_db: f64,
    pub misdetection: f64,
    pub reference_power_db: f64,
    /// Radios hosting the virtual devices; `None` gives one radio per device.
    pub radios: Option<usize>,
    /// E2 picks the ADRA threshold as `round(delta_per_device * N)`.
    pub delta_per_device: f64,
    /// E3 high-power group size; `None` splits evenly.
    pub high_group_size: Option<u16>,
    /// Policy for E3 and `custom`.
    pub protocol: Protocol,
    /// Fixed CAP for E3 and `custom`; `None` uses the optimiser.
    pub cap: Option<f64>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    fn base(id: ExperimentId) -> Self {
        ExperimentConfig {
            id,
            n_values: vec![],
            deltas: vec![],
            gaps_db: vec![],
            horizon: 800,
            replications: 20,
            master_seed: 2021,
            channel: ChannelModel::CollisionOnly,
            beta_db: crate::channel::DEFAULT_SINR_THRESHOLD_DB,
            noise_floor_db: crate::channel::DEFAULT_NOISE_FLOOR_DB,
            misdetection: 0.0,
            reference_power_db: REFERENCE_POWER_DB,
            radios: None,
            delta_per_device: 1.0,
            high_group_size: None,
            protocol: Protocol::Aira,
            cap: None,
            output: None,
        }
    }

    pub fn e1() -> Self {
        ExperimentConfig {
            n_values: vec![6, 7, 8],
            deltas: E1_DELTAS.to_vec(),
            misdetection: 0.02,
            ..Self::base(ExperimentId::E1)
        }
    }

    pub fn e2() -> Self {
        ExperimentConfig {
            n_values: vec![8, 16, 24, 32, 40],
            horizon: 1_000,
            radios: Some(8),
            ..Self::base(ExperimentId::E2)
        }
    }

    pub fn e3() -> Self {
        ExperimentConfig {
            n_values: vec![4, 6, 8],
            gaps_db: E3_GAPS_DB.to_vec(),
            horizon: 10_000,
            channel: ChannelModel::Capture,
            ..Self::base(ExperimentId::E3)
        }
    }

    pub fn custom() -> Self {
        ExperimentConfig {
            n_values: vec![8],
            deltas: vec![1],
            ..Self::base(ExperimentId::Custom)
        }
    }

    pub fn defaults_for(id: ExperimentId) -> Self {
        match id {
            ExperimentId::E1 => Self::e1(),
            ExperimentId::E2 => Self::e2(),
            ExperimentId::E3 => Self::e3(),
            ExperimentId::Custom => Self::custom(),
        }
    }

    /// One run per sweep point, as on the hardware.
    pub fn paper_faithful(mut self) -> Self {
        self.replications = 1;
        self
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1 slot".into());
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n == 0 || n == u16::MAX) {
            return fail(format!(
                "device counts must lie in 1..65535: {:?}",
                self.n_values
            ));
        }
        if matches!(self.id, ExperimentId::E1 | ExperimentId::Custom)
            && (self.deltas.is_empty() || self.deltas.contains(&0))
        {
            return fail(format!("thresholds must be at least 1: {:?}", self.deltas));
        }
        if self.id == ExperimentId::E3 {
            if self.gaps_db.is_empty() || self.gaps_db.iter().any(|g| !g.is_finite()) {
                return fail(format!("power gaps must be finite: {:?}", self.gaps_db));
            }
            for &n in &self.n_values {
                let high = self.high_group_size.unwrap_or(n / 2);
                if high == 0 || high >= n {
                    return fail(format!("E3 needs two non-empty groups, N={n} high={high}"));
                }
            }
        }
        if !(self.delta_per_device > 0.0 && self.delta_per_device.is_finite()) {
            return fail("delta_per_device must be positive".into());
        }
        if let Some(p) = self.cap {
            if !(p > 0.0 && p <= 1.0) {
                return fail(format!("CAP must lie in (0, 1], got {p}"));
            }
        }
        if self.radios == Some(0) {
            return fail("radio count must be at least 1".into());
        }
        self.channel_params()
            .validate()
            .map_err(ConfigError::from)?;
        Ok(())
    }

    pub fn channel_params(&self) -> ChannelParams<f64> {
        ChannelParams {
            model: self.channel,
            sinr_threshold_db: self.beta_db,
            noise_floor_db: self.noise_floor_db,
            misdetection_prob: self.misdetection,
        }
    }

    /// The closed-form expressions assume the collision-only channel.
    pub fn analytic_applicable(&self) -> bool {
        self.channel == ChannelModel::CollisionOnly
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: u16,
    pub delta: u64,
    pub protocol: Protocol,
    pub p: f64,
    pub group: Option<Group>,
    pub gap_db: Option<f64>,
    pub empirical_mean: f64,
    /// NaN with a single replication.
    pub stderr: f64,
    pub analytical: Option<f64>,
    /// Per-replication averages, in replication order.
    pub samples: Vec<f64>,
}

impl ReportRow {
    pub fn abs_diff(&self) -> Option<f64> {
        self.analytical.map(|a| (self.empirical_mean - a).abs())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub id: ExperimentId,
    pub horizon: u64,
    pub replications: u32,
    pub master_seed: u64,
    pub rows: Vec<ReportRow>,
}

/// Seed of replication `index`, independent of the sweep point.
pub fn replication_seed(master_seed: u64, index: u32) -> u64 {
    // splitmix64 finaliser
    let mut z = master_seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean and standard error of the mean.
pub fn mean_and_stderr(samples: &[f64]) -> (f64, f64) {
    let count = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / count;
    if samples.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
    (mean, (var / count).sqrt())
}

fn replicate(
    cfg: &ExperimentConfig,
    network: &NetworkConfig<f64>,
) -> Result<Vec<RunSummary>, HarnessError> {
    (0..cfg.replications)
        .into_par_iter()
        .map(|r| {
            run_summary(
                &network
                    .clone()
                    .with_seed(replication_seed(cfg.master_seed, r)),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(HarnessError::from)
}

fn network_for(cfg: &ExperimentConfig, n: u16, policy: Policy<f64>) -> NetworkConfig<f64> {
    let mut network = NetworkConfig::homogeneous(
        n,
        policy,
        cfg.channel_params(),
        cfg.horizon,
        cfg.master_seed,
    );
    for d in &mut network.devices {
        d.received_power_db = cfg.reference_power_db;
    }
    match cfg.radios {
        Some(count) => network.with_radio_count(count),
        None => network,
    }
}

fn analytic_value(
    cfg: &ExperimentConfig,
    n: u16,
    policy: &Policy<f64>,
) -> Result<Option<f64>, HarnessError> {
    if !cfg.analytic_applicable() {
        return Ok(None);
    }
    let value = match policy {
        Policy::Aira(a) => aira_average_aoi(n as u32, a.p()),
        Policy::Adra(a) => adra_average_aoi(n as u32, a.delta(), a.p()),
    };
    match value {
        Ok(v) => Ok(Some(v)),
        Err(AnalyticError::Divergent { .. }) => Ok(Some(f64::INFINITY)),
        Err(e) => Err(e.into()),
    }
}

fn network_row(
    cfg: &ExperimentConfig,
    n: u16,
    policy: Policy<f64>,
) -> Result<ReportRow, HarnessError> {
    let network = network_for(cfg, n, policy);
    let samples: Vec<f64> = replicate(cfg, &network)?
        .iter()
        .map(|s| s.network_average())
        .collect();
    let (empirical_mean, stderr) = mean_and_stderr(&samples);
    Ok(ReportRow {
        n,
        delta: policy.threshold(),
        protocol: match policy {
            Policy::Aira(_) => Protocol::Aira,
            Policy::Adra(_) => Protocol::Adra,
        },
        p: policy.cap(),
        group: None,
        gap_db: None,
        empirical_mean,
        stderr,
        analytical: analytic_value(cfg, n, &policy)?,
        samples,
    })
}

fn aira_baseline(n: u16) -> Result<Policy<f64>, HarnessError> {
    Ok(Policy::aira(aira_optimal_cap(n as u32)?)?)
}

fn optimised_adra(n: u16, delta: u64) -> Result<Policy<f64>, HarnessError> {
    let p = adra_optimize_cap(n as u32, delta)?;
    Ok(Policy::adra(delta, p)?)
}

fn report(cfg: &ExperimentConfig, rows: Vec<ReportRow>) -> ExperimentReport {
    ExperimentReport {
        id: cfg.id,
        horizon: cfg.horizon,
        replications: cfg.replications,
        master_seed: cfg.master_seed,
        rows,
    }
}

/// Small-network comparison: for each N, the AIRA baseline (threshold 1,
/// CAP 1/N) and ADRA at every configured threshold with its optimised CAP.
pub fn run_experiment_e1(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        rows.push(network_row(cfg, n, aira_baseline(n)?)?);
        for &delta in &cfg.deltas {
            rows.push(network_row(cfg, n, optimised_adra(n, delta)?)?);
        }
    }
    Ok(report(cfg, rows))
}

/// ADRA threshold used by E2 for a network of `n` devices.
pub fn e2_threshold(cfg: &ExperimentConfig, n: u16) -> u64 {
    ((cfg.delta_per_device * n as f64).round() as u64).max(1)
}

/// Larger networks of virtual devices multiplexed onto a few radios: AIRA
/// at CAP 1/N against ADRA at threshold `round(delta_per_device * N)` with
/// its optimised CAP.
pub fn run_experiment_e2(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        rows.push(network_row(cfg, n, aira_baseline(n)?)?);
        rows.push(network_row(
            cfg,
            n,
            optimised_adra(n, e2_threshold(cfg, n))?,
        )?);
    }
    Ok(report(cfg, rows))
}

fn configured_policy(cfg: &ExperimentConfig, n: u16) -> Result<Policy<f64>, HarnessError> {
    let delta = cfg.deltas.first().copied().unwrap_or(1);
    Ok(match (cfg.protocol, cfg.cap) {
        (Protocol::Aira, Some(p)) => Policy::aira(p)?,
        (Protocol::Aira, None) => aira_baseline(n)?,
        (Protocol::Adra, Some(p)) => Policy::adra(delta, p)?,
        (Protocol::Adra, None) => optimised_adra(n, delta)?,
    })
}

/// Two receive-power groups under the capture channel. The low group stays
/// at the reference power; the high group (the last devices) is raised by
/// each configured gap. One row per (N, gap, group).
pub fn run_experiment_e3(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &n in &cfg.n_values {
        let policy = configured_policy(cfg, n)?;
        let high = cfg.high_group_size.unwrap_or(n / 2) as usize;
        let low = n as usize - high;
        let low_idx: Vec<usize> = (0..low).collect();
        let high_idx: Vec<usize> = (low..n as usize).collect();
        for &gap in &cfg.gaps_db {
            let mut network = network_for(cfg, n, policy);
            for d in network.devices.iter_mut().skip(low) {
                d.received_power_db = cfg.reference_power_db + gap;
            }
            let runs = replicate(cfg, &network)?;
            for (group, idx) in [(Group::Low, &low_idx), (Group::High, &high_idx)] {
                let samples: Vec<f64> = runs.iter().map(|s| s.group_average(idx)).collect();
                let (empirical_mean, stderr) = mean_and_stderr(&samples);
                rows.push(ReportRow {
                    n,
                    delta: policy.threshold(),
                    protocol: if matches!(policy, Policy::Aira(_)) {
                        Protocol::Aira
                    } else {
                        Protocol::Adra
                    },
                    p: policy.cap(),
                    group: Some(group),
                    gap_db: Some(gap),
                    empirical_mean,
                    stderr,
                    analytical: analytic_value(cfg, n, &policy)?,
                    samples,
                });
            }
        }
    }
    Ok(report(cfg, rows))
}

/// One row per configured N for the configured protocol, threshold and CAP.
pub fn run_experiment_custom(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let rows = cfg
        .n_values
        .iter()
        .map(|&n| network_row(cfg, n, configured_policy(cfg, n)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(report(cfg, rows))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    match cfg.id {
        ExperimentId::E1 => run_experiment_e1(cfg),
        ExperimentId::E2 => run_experiment_e2(cfg),
        ExperimentId::E3 => run_experiment_e3(cfg),
        ExperimentId::Custom => run_experiment_custom(cfg),
    }
}
