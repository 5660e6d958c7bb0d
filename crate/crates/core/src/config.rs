//! Layered pipeline configuration.
//!
//! Precedence, lowest first: built-in defaults, the TOML file, `ETRK_*`
//! environment variables, then `key=value` overrides from the command line.
//! Environment keys use `__` between section and field, e.g.
//! `ETRK_TRK__ALPHA=0.25` sets `trk.alpha`. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::ebms::EbmsConfig;
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::event_io::Sensor;
use crate::quant::FixedPointConfig;
use crate::regionprop::RegionPropConfig;
use crate::tracker::{fixed_mode, TrackerConfig};

pub const ENV_PREFIX: &str = "ETRK_";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    pub period_us: u64,
    /// Events a pixel needs inside one window to be set.
    pub min_count: u32,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            period_us: 33_000,
            min_count: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    /// Side of the square classifier input.
    pub side: u32,
    pub bits_per_spike: u32,
}

impl Default for ExportConfig {
    fn default() -> Self {
        ExportConfig {
            side: 42,
            bits_per_spike: 24,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub sensor: Sensor,
    pub frame: FrameConfig,
    pub rp: RegionPropConfig,
    pub trk: TrackerConfig,
    pub fx: FixedPointConfig,
    pub ebms: EbmsConfig,
    pub eval: EvalConfig,
    pub export: ExportConfig,
}

fn parse_scalar(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set_dotted(root: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed key {key:?}")));
    }
    let (last, sections) = parts.split_last().expect("split yields one part");
    let mut node = root;
    for s in sections {
        let entry = node
            .entry(s.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{key:?}: {s:?} is not a section")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Self::layered(Some(text), std::iter::empty(), &[])
    }

    /// Builds the config from an optional file body, environment pairs and
    /// `key=value` overrides.
    pub fn layered<I>(file: Option<&str>, env: I, overrides: &[String]) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut root: Table = match file {
            Some(text) => toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?,
            None => Table::new(),
        };
        let mut env: Vec<(String, String)> = env
            .into_iter()
            .filter_map(|(k, v)| {
                let rest = k.strip_prefix(ENV_PREFIX)?;
                rest.contains("__")
                    .then(|| (rest.to_ascii_lowercase().replace("__", "."), v))
            })
            .collect();
        env.sort();
        for (k, v) in env {
            set_dotted(&mut root, &k, parse_scalar(&v))?;
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {o:?} is not key=value")))?;
            set_dotted(&mut root, k.trim(), parse_scalar(v.trim()))?;
        }
        let cfg: PipelineConfig = Value::Table(root)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sensor.width == 0 || self.sensor.height == 0 {
            return Err(Error::Config("sensor size must be positive".into()));
        }
        if self.sensor.width > u32::from(u16::MAX) + 1
            || self.sensor.height > u32::from(u16::MAX) + 1
        {
            return Err(Error::Config(
                "sensor size exceeds 16-bit coordinates".into(),
            ));
        }
        if self.frame.period_us == 0 || self.frame.min_count == 0 {
            return Err(Error::Config(
                "frame.period_us and frame.min_count must be positive".into(),
            ));
        }
        if self.export.side == 0 || self.export.bits_per_spike == 0 {
            return Err(Error::Config(
                "export.side and export.bits_per_spike must be positive".into(),
            ));
        }
        if !(self.eval.iou_threshold > 0.0 && self.eval.iou_threshold <= 1.0) {
            return Err(Error::Config("eval.iou_threshold must be in (0, 1]".into()));
        }
        self.trk.validate()?;
        self.ebms.validate()?;
        self.fx.datapath()?;
        Ok(())
    }

    /// Tracker settings with the fixed-point datapath applied when enabled.
    pub fn tracker_config(&self) -> Result<TrackerConfig> {
        if self.fx.enabled {
            fixed_mode(&self.trk, &self.fx)
        } else {
            Ok(self.trk.clone())
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::Arith;

    fn env(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn defaults() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c, PipelineConfig::default());
        assert_eq!(c.frame.period_us, 33_000);
        assert_eq!(c.trk.max_tracks, 8);
        assert_eq!(c.ebms.max_clusters, 16);
        assert_eq!(c.export.side, 42);
    }

    #[test]
    fn precedence_file_env_flag() {
        let file = "[trk]\nalpha = 0.25\nmax_unlocks = 4\n[frame]\nperiod_us = 20000\n";
        let c = PipelineConfig::layered(
            Some(file),
            env(&[
                ("ETRK_TRK__ALPHA", "0.75"),
                ("ETRK_FRAME__MIN_COUNT", "2"),
                ("HOME", "/x"),
            ]),
            &["trk.alpha=1.0".into()],
        )
        .unwrap();
        assert_eq!(c.trk.alpha, 1.0);
        assert_eq!(c.trk.max_unlocks, 4);
        assert_eq!(c.frame.period_us, 20_000);
        assert_eq!(c.frame.min_count, 2);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(PipelineConfig::from_toml("[trk]\nalfa = 0.5\n").is_err());
        assert!(PipelineConfig::from_toml("[nope]\nx = 1\n").is_err());
        assert!(PipelineConfig::layered(None, env(&[("ETRK_RP__BOGUS", "1")]), &[]).is_err());
        assert!(PipelineConfig::layered(None, env(&[]), &["fx.enabled".into()]).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(PipelineConfig::from_toml("[trk]\nalpha = 1.5\n").is_err());
        assert!(PipelineConfig::from_toml("[frame]\nperiod_us = 0\n").is_err());
        assert!(PipelineConfig::from_toml("[fx]\nvel_int_bits = 8\nvel_frac_bits = 30\n").is_err());
    }

    #[test]
    fn fixed_mode_switch() {
        let c = PipelineConfig::layered(
            None,
            env(&[]),
            &["fx.enabled=true".into(), "trk.alpha=0.3".into()],
        )
        .unwrap();
        let t = c.tracker_config().unwrap();
        assert!(t.arith.is_fixed());
        assert_eq!(t.alpha, 0.25);
        assert_eq!(
            PipelineConfig::default().tracker_config().unwrap().arith,
            Arith::Float
        );
    }

    #[test]
    fn toml_round_trip() {
        let c = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml(&c.to_toml()).unwrap(), c);
    }
}
