//! JSON experiment configuration with flat dotted keys.
//!
//! Every key is optional; missing keys keep the defaults of [`SimConfig`].
//! Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::construction::TcProtocol;
use crate::engine::{SimConfig, TmChoice};
use crate::error::{Result, SimError};
use crate::maintenance::{TriggerFamily, TriggerPolicy};

/// Keys accepted in a config file, in documentation order.
pub const KEYS: &[&str] = &[
    "deployment.node_count",
    "deployment.width",
    "deployment.height",
    "deployment.seed",
    "radio.tx_power",
    "radio.gain_tx",
    "radio.gain_rx",
    "radio.height_tx",
    "radio.height_rx",
    "radio.transceiver_const",
    "radio.comm_radius",
    "radio.sensing_radius",
    "energy.elec_per_bit",
    "energy.amp_per_bit_m2",
    "energy.initial",
    "energy.control_packet_bits",
    "energy.data_packet_bits",
    "sensing.uncertainty_radius",
    "sensing.lambda",
    "sensing.beta",
    "sensing.detection_threshold",
    "a3.energy_weight",
    "a3.distance_weight",
    "tc",
    "tm",
    "trigger.kind",
    "trigger.period",
    "trigger.threshold",
    "rotation_k",
    "grid_cell",
    "max_steps",
    "metrics_stride",
    "tc_list",
    "tm_list",
    "seeds",
    "output_dir",
];

/// A parsed experiment: a base configuration and the protocol/seed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub tc_list: Vec<TcProtocol>,
    pub tm_list: Vec<TmChoice>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Period used for time-triggered protocols in the grid.
    pub trigger_period: u64,
    /// Threshold used for energy-triggered protocols in the grid.
    pub trigger_threshold: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        let base = SimConfig::default();
        ExperimentSpec {
            tc_list: vec![base.tc],
            tm_list: vec![base.tm],
            seeds: vec![base.deployment.seed],
            base,
            output_dir: PathBuf::from("out"),
            trigger_period: TriggerPolicy::DEFAULT_PERIOD,
            trigger_threshold: TriggerPolicy::DEFAULT_THRESHOLD,
        }
    }
}

impl ExperimentSpec {
    /// Configuration of one grid cell. The trigger follows the family of
    /// `tm`; the baseline keeps the base trigger.
    pub fn run_config(&self, tc: TcProtocol, tm: TmChoice, seed: u64) -> SimConfig {
        let mut config = self.base.clone();
        config.tc = tc;
        config.tm = tm;
        config.deployment.seed = seed;
        if let TmChoice::Protocol(p) = tm {
            config.trigger = self.policy_for(p.family());
        }
        config
    }

    fn policy_for(&self, family: TriggerFamily) -> TriggerPolicy {
        match family {
            TriggerFamily::Time => TriggerPolicy::Time {
                period: self.trigger_period,
            },
            TriggerFamily::Energy => TriggerPolicy::Energy {
                threshold: self.trigger_threshold,
            },
        }
    }

    /// Every (tc, tm, seed) combination in grid order.
    pub fn combinations(&self) -> Vec<(TcProtocol, TmChoice, u64)> {
        let mut out = Vec::with_capacity(self.tc_list.len() * self.tm_list.len() * self.seeds.len());
        for &tc in &self.tc_list {
            for &tm in &self.tm_list {
                for &seed in &self.seeds {
                    out.push((tc, tm, seed));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.tc_list.is_empty() {
            return Err(SimError::config("tc_list", "must not be empty"));
        }
        if self.tm_list.is_empty() {
            return Err(SimError::config("tm_list", "must not be empty"));
        }
        if self.seeds.is_empty() {
            return Err(SimError::config("seeds", "must not be empty"));
        }
        self.base.validate()?;
        for (tc, tm, seed) in self.combinations() {
            self.run_config(tc, tm, seed).validate()?;
        }
        Ok(())
    }
}

/// Reads and validates a config file.
pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::ConfigSyntax {
        path: path.to_path_buf(),
        reason: format!("cannot read file: {e}"),
    })?;
    parse_config_str(&text, path)
}

/// Parses config text; `path` is only used in error messages.
pub fn parse_config_str(text: &str, path: &Path) -> Result<ExperimentSpec> {
    let value: Value = serde_json::from_str(text).map_err(|e| SimError::ConfigSyntax {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(SimError::ConfigSyntax {
            path: path.to_path_buf(),
            reason: "top level must be a JSON object".into(),
        });
    };
    from_map(&map)
}

fn from_map(map: &Map<String, Value>) -> Result<ExperimentSpec> {
    if let Some(unknown) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
        return Err(SimError::config(unknown.as_str(), "unknown key"));
    }
    let mut spec = ExperimentSpec::default();
    let c = &mut spec.base;

    for (key, value) in map {
        let v = Field { key, value };
        match key.as_str() {
            "deployment.node_count" => c.deployment.node_count = v.uint()? as usize,
            "deployment.width" => c.deployment.area.width = v.float()?,
            "deployment.height" => c.deployment.area.height = v.float()?,
            "deployment.seed" => c.deployment.seed = v.uint()?,
            "radio.tx_power" => c.radio.tx_power = v.float()?,
            "radio.gain_tx" => c.radio.gain_tx = v.float()?,
            "radio.gain_rx" => c.radio.gain_rx = v.float()?,
            "radio.height_tx" => c.radio.height_tx = v.float()?,
            "radio.height_rx" => c.radio.height_rx = v.float()?,
            "radio.transceiver_const" => c.radio.transceiver_const = v.float()?,
            "radio.comm_radius" => c.radio.comm_radius = v.float()?,
            "radio.sensing_radius" => c.radio.sensing_radius = v.float()?,
            "energy.elec_per_bit" => c.energy.elec_per_bit = v.float()?,
            "energy.amp_per_bit_m2" => c.energy.amp_per_bit_m2 = v.float()?,
            "energy.initial" => c.energy.initial = v.float()?,
            "energy.control_packet_bits" => c.energy.control_packet_bits = v.uint()?,
            "energy.data_packet_bits" => c.energy.data_packet_bits = v.uint()?,
            "sensing.uncertainty_radius" => c.sensing.uncertainty_radius = v.float()?,
            "sensing.lambda" => c.sensing.lambda = v.float()?,
            "sensing.beta" => c.sensing.beta = v.float()?,
            "sensing.detection_threshold" => c.sensing.detection_threshold = v.float()?,
            "a3.energy_weight" => c.a3.energy_weight = v.float()?,
            "a3.distance_weight" => c.a3.distance_weight = v.float()?,
            "rotation_k" => c.rotation_k = v.uint()? as usize,
            "grid_cell" => c.grid_cell = v.float()?,
            "max_steps" => c.max_steps = v.uint()?,
            "metrics_stride" => c.metrics_stride = v.uint()?,
            "trigger.period" => spec.trigger_period = v.uint()?,
            "trigger.threshold" => spec.trigger_threshold = v.float()?,
            "output_dir" => spec.output_dir = PathBuf::from(v.string()?),
            // Handled below: they depend on each other.
            "tc" | "tm" | "trigger.kind" | "tc_list" | "tm_list" | "seeds" => {}
            _ => unreachable!("key list checked above"),
        }
    }

    if let Some(v) = map.get("tc") {
        spec.base.tc = Field { key: "tc", value: v }.parse()?;
    }
    if let Some(v) = map.get("tm") {
        spec.base.tm = Field { key: "tm", value: v }.parse()?;
    }
    spec.tc_list = match map.get("tc_list") {
        Some(v) => Field { key: "tc_list", value: v }.parse_list()?,
        None => vec![spec.base.tc],
    };
    spec.tm_list = match map.get("tm_list") {
        Some(v) => Field { key: "tm_list", value: v }.parse_list()?,
        None => vec![spec.base.tm],
    };
    spec.seeds = match map.get("seeds") {
        Some(v) => Field { key: "seeds", value: v }.uint_list()?,
        None => vec![spec.base.deployment.seed],
    };

    let explicit_kind = match map.get("trigger.kind") {
        Some(v) => Some(match (Field { key: "trigger.kind", value: v }).string()? {
            "time" => TriggerFamily::Time,
            "energy" => TriggerFamily::Energy,
            other => {
                return Err(SimError::config(
                    "trigger.kind",
                    format!("expected \"time\" or \"energy\", got \"{other}\""),
                ))
            }
        }),
        None => None,
    };
    if let Some(kind) = explicit_kind {
        let tms = std::iter::once(spec.base.tm).chain(spec.tm_list.iter().copied());
        for tm in tms {
            if let TmChoice::Protocol(p) = tm {
                if p.family() != kind {
                    return Err(SimError::config(
                        "trigger.kind",
                        format!("{p} needs a {} trigger but trigger.kind is \"{kind}\"", p.family()),
                    ));
                }
            }
        }
    }
    let family = explicit_kind.unwrap_or(match spec.base.tm {
        TmChoice::Protocol(p) => p.family(),
        TmChoice::None => TriggerFamily::Energy,
    });
    spec.base.trigger = spec.policy_for(family);
    TriggerPolicy::Time { period: spec.trigger_period }.validate()?;
    TriggerPolicy::Energy { threshold: spec.trigger_threshold }.validate()?;

    spec.validate()?;
    Ok(spec)
}

struct Field<'a> {
    key: &'a str,
    value: &'a Value,
}

impl Field<'_> {
    fn err(&self, reason: impl Into<String>) -> SimError {
        SimError::config(self.key, reason)
    }

    fn float(&self) -> Result<f64> {
        self.value
            .as_f64()
            .ok_or_else(|| self.err(format!("expected a number, got {}", self.value)))
    }

    fn uint(&self) -> Result<u64> {
        self.value
            .as_u64()
            .ok_or_else(|| self.err(format!("expected a non-negative integer, got {}", self.value)))
    }

    fn string(&self) -> Result<&str> {
        self.value
            .as_str()
            .ok_or_else(|| self.err(format!("expected a string, got {}", self.value)))
    }

    fn parse<T: std::str::FromStr<Err = String>>(&self) -> Result<T> {
        self.string()?.parse().map_err(|e: String| self.err(e))
    }

    fn array(&self) -> Result<&Vec<Value>> {
        self.value
            .as_array()
            .ok_or_else(|| self.err(format!("expected an array, got {}", self.value)))
    }

    fn parse_list<T: std::str::FromStr<Err = String>>(&self) -> Result<Vec<T>> {
        self.array()?
            .iter()
            .map(|value| Field { key: self.key, value }.parse())
            .collect()
    }

    fn uint_list(&self) -> Result<Vec<u64>> {
        self.array()?
            .iter()
            .map(|value| Field { key: self.key, value }.uint())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maintenance::TmProtocol;

    fn parse(text: &str) -> Result<ExperimentSpec> {
        parse_config_str(text, Path::new("test.json"))
    }

    fn field_of(err: SimError) -> String {
        match err {
            SimError::InvalidConfig { field, .. } => field,
            other => panic!("expected a field error, got {other}"),
        }
    }

    #[test]
    fn empty_object_gives_defaults() {
        let spec = parse("{}").unwrap();
        assert_eq!(spec.base.deployment.node_count, 300);
        assert_eq!(spec.base.deployment.area.width, 1074.0);
        assert_eq!(spec.base.deployment.area.height, 660.0);
        assert_eq!(spec.base.radio.comm_radius, 100.0);
        assert_eq!(spec.base.radio.sensing_radius, 20.0);
        assert_eq!(spec.base, SimConfig::default());
        assert_eq!(spec.combinations().len(), 1);
    }

    #[test]
    fn zero_nodes_names_field() {
        let err = parse(r#"{"deployment.node_count": 0}"#).unwrap_err();
        assert_eq!(field_of(err), "deployment.node_count");
    }

    #[test]
    fn family_mismatch() {
        let err = parse(r#"{"tm": "SGETRot", "trigger.kind": "time"}"#).unwrap_err();
        assert_eq!(field_of(err), "trigger.kind");
        let spec = parse(r#"{"tm": "SGTTRot", "trigger.kind": "time", "trigger.period": 40}"#).unwrap();
        assert_eq!(spec.base.trigger, TriggerPolicy::Time { period: 40 });
    }

    #[test]
    fn trigger_follows_tm_family() {
        let spec = parse(r#"{"tm": "DGTTRec"}"#).unwrap();
        assert_eq!(spec.base.trigger.family(), TriggerFamily::Time);
        let cfg = spec.run_config(TcProtocol::A3Cov, TmChoice::Protocol(TmProtocol::SGETRot), 9);
        assert_eq!(cfg.trigger, TriggerPolicy::Energy { threshold: 0.6 });
        assert_eq!(cfg.deployment.seed, 9);
        assert_eq!(cfg.tc, TcProtocol::A3Cov);
    }

    #[test]
    fn unknown_and_malformed() {
        assert_eq!(field_of(parse(r#"{"radio.range": 5}"#).unwrap_err()), "radio.range");
        assert!(matches!(parse("{ not json").unwrap_err(), SimError::ConfigSyntax { .. }));
        assert!(matches!(parse("[1, 2]").unwrap_err(), SimError::ConfigSyntax { .. }));
        assert_eq!(field_of(parse(r#"{"radio.comm_radius": "far"}"#).unwrap_err()), "radio.comm_radius");
        assert_eq!(field_of(parse(r#"{"radio.comm_radius": -1}"#).unwrap_err()), "radio.comm_radius");
        assert_eq!(field_of(parse(r#"{"tm": "Fast"}"#).unwrap_err()), "tm");
        assert_eq!(field_of(parse(r#"{"seeds": []}"#).unwrap_err()), "seeds");
        assert_eq!(field_of(parse(r#"{"trigger.threshold": 1.5}"#).unwrap_err()), "trigger.threshold");
        let err = parse_config(Path::new("/definitely/missing.json")).unwrap_err();
        assert!(err.is_validation());
    }

    #[test]
    fn grid_lists() {
        let spec = parse(
            r#"{"tc_list": ["A3", "A3Cov"],
                "tm_list": ["DGETRec", "HGETRecRot", "SGETRot", "DGTTRec", "HGTTRecRot", "SGTTRot", "None"],
                "seeds": [1, 2, 3], "output_dir": "runs"}"#,
        )
        .unwrap();
        assert_eq!(spec.combinations().len(), 2 * 7 * 3);
        assert_eq!(spec.output_dir, PathBuf::from("runs"));
    }
}
