//! Run configuration: a TOML file with `[channel]`, `[model]`, `[train]`,
//! `[overhead]`, `[eval]` and `[data]` sections, plus `section.key=value`
//! overrides. Missing keys take their defaults; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::airphy::Aggregation;
use crate::error::{Error, Result};
use crate::evalmetrics::{LinkBudget, OverheadConfig};
use crate::gnn::{GainScale, PolicyKind};
use crate::netgen::ChannelParams;
use crate::train::{EvalOptions, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub layers: usize,
    pub gain_scale: GainScale,
    /// Overrides the per-kind default aggregation.
    pub aggregation: Option<Aggregation>,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { layers: 3, gain_scale: GainScale::Log, aggregation: None, init_seed: 7 }
    }
}

impl ModelConfig {
    pub fn aggregation_for(&self, kind: PolicyKind) -> Aggregation {
        self.aggregation.unwrap_or(kind.default_aggregation())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_layouts: usize,
    pub test_layouts: usize,
    pub train_seed: u64,
    pub test_seed: u64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { train_layouts: 2000, test_layouts: 500, train_seed: 1, test_seed: 2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelParams,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub overhead: OverheadConfig,
    pub eval: EvalOptions,
    pub data: DataConfig,
}

impl RunConfig {
    /// Parses `text` and applies `overrides` (`section.key=value`) on top.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: Table = text.parse().map_err(|e: toml::de::Error| parse_error(text, &e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let rendered = toml::to_string(&table).map_err(|e| Error::config(e.to_string()))?;
        let cfg: RunConfig = toml::from_str(&rendered).map_err(|e| {
            // overrides can introduce the offending key; report against the original text when possible
            match toml::from_str::<RunConfig>(text) {
                Err(orig) => parse_error(text, &orig),
                Ok(_) => Error::config(e.message().to_string()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.overhead.validate()?;
        let c = &self.channel;
        if c.pairs == 0 || c.frames == 0 {
            return Err(Error::config("channel.pairs and channel.frames must be positive"));
        }
        if !(c.bandwidth_hz > 0.0) {
            return Err(Error::config("channel.bandwidth_hz must be positive"));
        }
        if self.model.layers == 0 {
            return Err(Error::config("model.layers must be positive"));
        }
        Ok(())
    }

    pub fn budget(&self) -> LinkBudget<f64> {
        LinkBudget { max_power: self.channel.max_power_mw(), noise: self.channel.noise_mw() }
    }

    /// Resolved configuration as TOML, every key present.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }
}

fn parse_error(text: &str, e: &toml::de::Error) -> Error {
    let line = e.span().map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1).unwrap_or(0);
    Error::Parse { line, message: e.message().to_string() }
}

fn apply_override(table: &mut Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::usage(format!("override {spec:?} must look like section.key=value")))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| Error::usage(format!("override key {path:?} must look like section.key")))?;
    let raw = raw.trim();
    let value = match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    };
    let entry = table.entry(section.to_string()).or_insert_with(|| Value::Table(Table::new()));
    let sect = entry.as_table_mut().ok_or_else(|| Error::usage(format!("{section} is not a section")))?;
    sect.insert(key.to_string(), value);
    Ok(())
}
