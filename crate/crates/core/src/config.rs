//! Campaign configuration: an INI-style `key=value` file naming the seed,
//! mode, horizon, fault counts, timer settings, and output paths.

use std::path::Path;

use thiserror::Error;

use crate::fault::FaultKind;

/// How fatal errors are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Correct in place with the link kept in L0.
    Proposed,
    /// Take the link down and retrain on every fatal error.
    Baseline,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Proposed => "proposed",
            Mode::Baseline => "baseline",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "proposed" => Ok(Mode::Proposed),
            "baseline" => Ok(Mode::Baseline),
            other => Err(format!("unknown mode {other:?}, expected proposed or baseline")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("missing required key {key:?}")]
    Missing { key: &'static str },
    #[error("invalid value for {key:?}: {reason}")]
    Invalid { key: String, reason: String },
    #[error("unknown key {key:?}")]
    UnknownKey { key: String },
    #[error("duplicate key {key:?}")]
    Duplicate { key: String },
    #[error("line {line} is not a key=value pair: {text:?}")]
    NotKeyValue { line: usize, text: String },
    #[error("cannot read {path}: {reason}")]
    Unreadable { path: String, reason: String },
}

/// Everything a campaign run needs. Same config, same run, bit for bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignConfig {
    pub seed: u64,
    pub mode: Mode,
    pub horizon_cycles: u64,
    pub count_per_kind: u64,
    pub snapshot_interval: u64,
    pub retrain_cost: u64,
    pub completion_timeout_cycles: u64,
    pub replay_timeout_cycles: u64,
    pub trace_path: Option<String>,
    pub report_path: Option<String>,
    /// When set, the campaign draws only these fault kinds.
    pub kinds: Option<Vec<FaultKind>>,
}

impl CampaignConfig {
    /// A config with the defaulted fields at their defaults and no output
    /// paths.
    pub fn new(seed: u64, mode: Mode, horizon_cycles: u64, count_per_kind: u64) -> CampaignConfig {
        CampaignConfig {
            seed,
            mode,
            horizon_cycles,
            count_per_kind,
            snapshot_interval: 1,
            retrain_cost: 40,
            completion_timeout_cycles: 1024,
            replay_timeout_cycles: 64,
            trace_path: None,
            report_path: None,
            kinds: None,
        }
    }

    pub fn load(path: &Path) -> Result<CampaignConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<CampaignConfig, ConfigError> {
        let mut seed = None;
        let mut mode = None;
        let mut horizon_cycles = None;
        let mut count_per_kind = None;
        let mut snapshot_interval = None;
        let mut retrain_cost = None;
        let mut completion_timeout_cycles = None;
        let mut replay_timeout_cycles = None;
        let mut trace_path = None;
        let mut report_path = None;
        let mut kinds = None;

        fn set<T>(slot: &mut Option<T>, key: &str, value: T) -> Result<(), ConfigError> {
            if slot.is_some() {
                return Err(ConfigError::Duplicate { key: key.to_string() });
            }
            *slot = Some(value);
            Ok(())
        }

        fn number(key: &str, value: &str) -> Result<u64, ConfigError> {
            value.parse::<u64>().map_err(|e| ConfigError::Invalid {
                key: key.to_string(),
                reason: format!("{value:?}: {e}"),
            })
        }

        for (index, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::NotKeyValue {
                line: index + 1,
                text: line.to_string(),
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "seed" => set(&mut seed, key, number(key, value)?)?,
                "mode" => {
                    let parsed = value.parse::<Mode>().map_err(|reason| ConfigError::Invalid {
                        key: key.to_string(),
                        reason,
                    })?;
                    set(&mut mode, key, parsed)?;
                }
                "horizon_cycles" => set(&mut horizon_cycles, key, number(key, value)?)?,
                "count_per_kind" => set(&mut count_per_kind, key, number(key, value)?)?,
                "snapshot_interval" => set(&mut snapshot_interval, key, number(key, value)?)?,
                "retrain_cost" => set(&mut retrain_cost, key, number(key, value)?)?,
                "completion_timeout_cycles" => {
                    set(&mut completion_timeout_cycles, key, number(key, value)?)?
                }
                "replay_timeout_cycles" => {
                    set(&mut replay_timeout_cycles, key, number(key, value)?)?
                }
                "trace_path" => set(&mut trace_path, key, value.to_string())?,
                "report_path" => set(&mut report_path, key, value.to_string())?,
                "kinds" => {
                    let mut list = Vec::new();
                    for name in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                        let kind =
                            FaultKind::from_name(name).ok_or_else(|| ConfigError::Invalid {
                                key: key.to_string(),
                                reason: format!("unknown fault kind {name:?}"),
                            })?;
                        list.push(kind);
                    }
                    if list.is_empty() {
                        return Err(ConfigError::Invalid {
                            key: key.to_string(),
                            reason: "empty kind list".to_string(),
                        });
                    }
                    set(&mut kinds, key, list)?;
                }
                other => return Err(ConfigError::UnknownKey { key: other.to_string() }),
            }
        }

        let config = CampaignConfig {
            seed: seed.ok_or(ConfigError::Missing { key: "seed" })?,
            mode: mode.ok_or(ConfigError::Missing { key: "mode" })?,
            horizon_cycles: horizon_cycles.ok_or(ConfigError::Missing { key: "horizon_cycles" })?,
            count_per_kind: count_per_kind.ok_or(ConfigError::Missing { key: "count_per_kind" })?,
            snapshot_interval: snapshot_interval.unwrap_or(1),
            retrain_cost: retrain_cost.unwrap_or(40),
            completion_timeout_cycles: completion_timeout_cycles.unwrap_or(1024),
            replay_timeout_cycles: replay_timeout_cycles.unwrap_or(64),
            trace_path,
            report_path,
            kinds,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive: [(&str, u64); 4] = [
            ("snapshot_interval", self.snapshot_interval),
            ("retrain_cost", self.retrain_cost),
            ("completion_timeout_cycles", self.completion_timeout_cycles),
            ("replay_timeout_cycles", self.replay_timeout_cycles),
        ];
        for (key, value) in positive {
            if value == 0 {
                return Err(ConfigError::Invalid {
                    key: key.to_string(),
                    reason: "must be at least 1".to_string(),
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = "\
# campaign settings
seed = 42
mode = proposed
horizon_cycles = 5000
count_per_kind = 2
snapshot_interval = 1
retrain_cost = 40
completion_timeout_cycles = 1024
replay_timeout_cycles = 64
trace_path = /tmp/run.trace
report_path = /tmp/run.report
";

    #[test]
    fn full_config_parses() {
        let config = CampaignConfig::parse(FULL).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.mode, Mode::Proposed);
        assert_eq!(config.horizon_cycles, 5000);
        assert_eq!(config.count_per_kind, 2);
        assert_eq!(config.trace_path.as_deref(), Some("/tmp/run.trace"));
        assert_eq!(config.report_path.as_deref(), Some("/tmp/run.report"));
        assert_eq!(config.kinds, None);
    }

    #[test]
    fn omitted_keys_take_defaults() {
        let config =
            CampaignConfig::parse("seed=1\nmode=baseline\nhorizon_cycles=100\ncount_per_kind=0\n")
                .unwrap();
        assert_eq!(config.snapshot_interval, 1);
        assert_eq!(config.retrain_cost, 40);
        assert_eq!(config.completion_timeout_cycles, 1024);
        assert_eq!(config.replay_timeout_cycles, 64);
        assert_eq!(config.trace_path, None);
        assert_eq!(config, CampaignConfig::new(1, Mode::Baseline, 100, 0));
    }

    #[test]
    fn missing_required_key_is_reported() {
        let err = CampaignConfig::parse("mode=proposed\nhorizon_cycles=10\ncount_per_kind=1\n")
            .unwrap_err();
        assert_eq!(err, ConfigError::Missing { key: "seed" });
    }

    #[test]
    fn bad_values_are_invalid() {
        let err = CampaignConfig::parse("seed=abc\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "seed"));
        let err = CampaignConfig::parse("mode=turbo\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "mode"));
    }

    #[test]
    fn unknown_and_duplicate_keys_are_rejected() {
        let err = CampaignConfig::parse("seeds=1\n").unwrap_err();
        assert_eq!(err, ConfigError::UnknownKey { key: "seeds".to_string() });
        let err = CampaignConfig::parse("seed=1\nseed=2\n").unwrap_err();
        assert_eq!(err, ConfigError::Duplicate { key: "seed".to_string() });
    }

    #[test]
    fn non_key_value_lines_are_rejected() {
        let err = CampaignConfig::parse("seed\n").unwrap_err();
        assert!(matches!(err, ConfigError::NotKeyValue { line: 1, .. }));
    }

    #[test]
    fn zero_timers_are_rejected() {
        let err = CampaignConfig::parse(
            "seed=1\nmode=proposed\nhorizon_cycles=10\ncount_per_kind=0\nsnapshot_interval=0\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "snapshot_interval"));
    }

    #[test]
    fn kind_list_parses_and_validates() {
        let config = CampaignConfig::parse(
            "seed=1\nmode=proposed\nhorizon_cycles=10\ncount_per_kind=1\nkinds=DropAck, FlipLcrcBit\n",
        )
        .unwrap();
        assert_eq!(config.kinds, Some(vec![FaultKind::DropAck, FaultKind::FlipLcrcBit]));

        let err = CampaignConfig::parse(
            "seed=1\nmode=proposed\nhorizon_cycles=10\ncount_per_kind=1\nkinds=NoSuch\n",
        )
        .unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "kinds"));
    }
}
