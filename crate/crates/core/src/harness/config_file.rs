//! Plain-text `key = value` experiment configuration.
//!
//! Blank lines and lines starting with `#` are ignored. List values are
//! comma separated. Keys override the fields of a base configuration.

use std::path::PathBuf;

use super::{ExperimentConfig, HarnessError};
use crate::channel::ChannelModel;

fn parse_value<T: std::str::FromStr>(
    key: &str,
    value: &str,
    line: usize,
) -> Result<T, HarnessError> {
    value
        .parse()
        .map_err(|_| HarnessError::Config(format!("line {line}: cannot parse {key} = {value:?}")))
}

fn parse_list<T: std::str::FromStr>(
    key: &str,
    value: &str,
    line: usize,
) -> Result<Vec<T>, HarnessError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s, line))
        .collect()
}

fn parse_channel(value: &str, line: usize) -> Result<ChannelModel, HarnessError> {
    match value.to_ascii_lowercase().replace('-', "_").as_str() {
        "collision" | "collision_only" => Ok(ChannelModel::CollisionOnly),
        "capture" => Ok(ChannelModel::Capture),
        other => Err(HarnessError::Config(format!(
            "line {line}: unknown channel {other:?}"
        ))),
    }
}

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, base: ExperimentConfig) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = base;
    for (index, raw) in text.lines().enumerate() {
        let line = index + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!(
                "line {line}: expected key = value, got {trimmed:?}"
            ))
        })?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "n" => cfg.n_values = parse_list(key, value, line)?,
            "delta" => cfg.deltas = parse_list(key, value, line)?,
            "gaps_db" | "gap_db" => cfg.gaps_db = parse_list(key, value, line)?,
            "horizon" => cfg.horizon = parse_value(key, value, line)?,
            "replications" => cfg.replications = parse_value(key, value, line)?,
            "seed" => cfg.master_seed = parse_value(key, value, line)?,
            "channel" => cfg.channel = parse_channel(value, line)?,
            "beta_db" => cfg.beta_db = parse_value(key, value, line)?,
            "noise_floor_db" => cfg.noise_floor_db = parse_value(key, value, line)?,
            "misdetect" | "misdetection" => cfg.misdetection = parse_value(key, value, line)?,
            "reference_power_db" => cfg.reference_power_db = parse_value(key, value, line)?,
            "radios" => cfg.radios = Some(parse_value(key, value, line)?),
            "delta_per_device" => cfg.delta_per_device = parse_value(key, value, line)?,
            "high_group_size" => cfg.high_group_size = Some(parse_value(key, value, line)?),
            "protocol" => cfg.protocol = value.parse()?,
            "p" => cfg.cap = Some(parse_value(key, value, line)?),
            "out" => cfg.output = Some(PathBuf::from(value)),
            "paper_faithful" => {
                if parse_value::<bool>(key, value, line)? {
                    cfg = cfg.paper_faithful();
                }
            }
            other => {
                return Err(HarnessError::Config(format!(
                    "line {line}: unknown key {other:?}"
                )))
            }
        }
    }
    Ok(cfg)
}
