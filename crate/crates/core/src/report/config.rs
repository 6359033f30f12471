//! Flat `key = value` study configuration files. Keys are the long CLI flag
//! names without the leading dashes, e.g. `sample-size = 100`. Blank lines and
//! `#` comments are ignored.

use std::path::Path;

use crate::error::{Error, Result};
use crate::montecarlo::StudyConfig;

pub const KEYS: [&str; 8] = [
    "distributions",
    "replicates",
    "sample-size",
    "alpha",
    "seed",
    "zero-cell-policy",
    "null-calibration",
    "null-distributions",
];

/// Splits a config text into ordered `(key, value)` pairs.
pub fn parse_entries(text: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim().trim_start_matches("--").to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(format!("line {}: unknown key {key:?}", lineno + 1));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("{key}: cannot parse {value:?}: {e}"))
}

/// Applies one entry to `cfg`.
pub fn apply_entry(cfg: &mut StudyConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "distributions" => cfg.n_distributions = parse_value(key, value)?,
        "replicates" => cfg.n_replicates = parse_value(key, value)?,
        "sample-size" => cfg.sample_size = parse_value(key, value)?,
        "alpha" => cfg.alpha = parse_value(key, value)?,
        "seed" => cfg.master_seed = parse_value(key, value)?,
        "zero-cell-policy" => cfg.zero_cell_policy = parse_value(key, value)?,
        "null-calibration" => cfg.include_null_calibration = parse_value(key, value)?,
        "null-distributions" => cfg.n_null_distributions = parse_value(key, value)?,
        other => return Err(format!("unknown key {other:?}")),
    }
    Ok(())
}

/// Config built from defaults overlaid with the file's entries.
pub fn parse_config(text: &str) -> std::result::Result<StudyConfig, String> {
    let mut cfg = StudyConfig::default();
    for (key, value) in parse_entries(text)? {
        apply_entry(&mut cfg, &key, &value)?;
    }
    Ok(cfg)
}

pub fn read_config_file(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|m| Error::parse(path, m))
}

/// Renders `cfg` in the same format `parse_config` reads.
pub fn render_config(cfg: &StudyConfig) -> String {
    format!(
        "distributions = {}\nreplicates = {}\nsample-size = {}\nalpha = {}\nseed = {}\n\
         zero-cell-policy = {}\nnull-calibration = {}\nnull-distributions = {}\n",
        cfg.n_distributions,
        cfg.n_replicates,
        cfg.sample_size,
        cfg.alpha,
        cfg.master_seed,
        cfg.zero_cell_policy,
        cfg.include_null_calibration,
        cfg.n_null_distributions,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::ZeroCellPolicy;

    #[test]
    fn round_trip() {
        let cfg = StudyConfig {
            n_distributions: 7,
            alpha: 0.01,
            master_seed: u64::MAX,
            zero_cell_policy: ZeroCellPolicy::NeverReject,
            include_null_calibration: true,
            ..StudyConfig::default()
        };
        assert_eq!(parse_config(&render_config(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn comments_and_dashes() {
        let cfg = parse_config("# sweep\n--replicates = 20 # short\n\nseed=7\n").unwrap();
        assert_eq!(cfg.n_replicates, 20);
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.sample_size, 100);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(parse_config("colour = red").is_err());
        assert!(parse_config("replicates 20").is_err());
        assert!(parse_config("replicates = many").is_err());
    }
}
