//! Layered rule engine: raw-stage checks over parsed records and
//! frame-stage domain checks over the merged matrix and its profile.
//!
//! Rules are advisory by default: real performance data may legitimately
//! violate them while being correctly measured. Every built-in defaults
//! to Warning severity, never mutates data, and never aborts a run.
//! Escalation to Error, threshold overrides, and disabling are config
//! choices.
//!
//! Built-in rules:
//!
//! | id        | stage | checks                                             |
//! |-----------|-------|----------------------------------------------------|
//! | R-DUP     | raw   | duplicate (timestamp, machine/counter) combination |
//! | R-MONO    | raw   | non-monotonic timestamps within a source           |
//! | R-CADENCE | raw   | gaps deviating from the declared sample interval   |
//! | R-CPU     | frame | CPU-percentage cells outside [0, 100]              |
//! | R-CPI     | frame | CPI column minimum below 0.25                      |
//! | R-NOISE   | frame | column missing in every row (merely noise)         |
//! | R-GC-MEM  | frame | GC memory level above the recorded heap size       |
//! | R-RANGE   | frame | profile minimum above maximum (internal check)     |

mod frame;
mod raw;

pub use frame::check_frame;
pub use raw::check_raw;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::timebase::EpochMillis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RuleStage {
    Raw,
    Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamValue {
    Num(f64),
    Text(String),
}

/// One configured rule: identity, stage, severity, and its thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub id: &'static str,
    pub stage: RuleStage,
    pub severity: Severity,
    pub enabled: bool,
    pub params: BTreeMap<String, ParamValue>,
}

impl Rule {
    fn new(id: &'static str, stage: RuleStage, params: &[(&str, ParamValue)]) -> Self {
        Self {
            id,
            stage,
            severity: Severity::Warning,
            enabled: true,
            params: params
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
        }
    }

    pub fn num_param(&self, name: &str) -> f64 {
        match self.params.get(name) {
            Some(ParamValue::Num(v)) => *v,
            _ => panic!("rule {} has no numeric param {name}", self.id),
        }
    }

    pub fn text_param(&self, name: &str) -> &str {
        match self.params.get(name) {
            Some(ParamValue::Text(v)) => v,
            _ => panic!("rule {} has no text param {name}", self.id),
        }
    }
}

/// Where a finding points: a source or column, optionally narrowed to a
/// timestamp and/or a 1-based record index.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct FindingLocation {
    pub scope: String,
    pub ts_ms: Option<i64>,
    pub index: Option<usize>,
}

/// One rule violation. Findings never mutate data; re-running checks on the
/// same inputs reproduces the same list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleFinding {
    pub rule_id: String,
    pub stage: RuleStage,
    pub severity: Severity,
    pub location: FindingLocation,
    pub observed: String,
    pub message: String,
}

impl RuleFinding {
    fn sort_key(&self) -> (RuleStage, &str, &FindingLocation) {
        (self.stage, &self.rule_id, &self.location)
    }
}

/// Deterministic finding order: stage, rule id, location.
pub(crate) fn sort_findings(findings: &mut [RuleFinding]) {
    findings.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub(crate) fn finding(
    rule: &Rule,
    scope: impl Into<String>,
    ts: Option<EpochMillis>,
    index: Option<usize>,
    observed: impl ToString,
    message: impl Into<String>,
) -> RuleFinding {
    RuleFinding {
        rule_id: rule.id.to_string(),
        stage: rule.stage,
        severity: rule.severity,
        location: FindingLocation {
            scope: scope.into(),
            ts_ms: ts.map(|t| t.0),
            index,
        },
        observed: observed.to_string(),
        message: message.into(),
    }
}

pub const R_DUP: &str = "R-DUP";
pub const R_MONO: &str = "R-MONO";
pub const R_CADENCE: &str = "R-CADENCE";
pub const R_CPU: &str = "R-CPU";
pub const R_CPI: &str = "R-CPI";
pub const R_NOISE: &str = "R-NOISE";
pub const R_GC_MEM: &str = "R-GC-MEM";
pub const R_RANGE: &str = "R-RANGE";

/// All configured rules, keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleRegistry {
    rules: BTreeMap<String, Rule>,
}

impl Default for RuleRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl RuleRegistry {
    /// Every built-in rule at its default severity and thresholds.
    pub fn builtin() -> Self {
        let num = ParamValue::Num;
        let text = |s: &str| ParamValue::Text(s.to_string());
        let rules = [
            Rule::new(R_DUP, RuleStage::Raw, &[]),
            Rule::new(R_MONO, RuleStage::Raw, &[]),
            Rule::new(
                R_CADENCE,
                RuleStage::Raw,
                &[("tolerance_ms", num(0.0)), ("client_interval_s", num(5.0))],
            ),
            Rule::new(
                R_CPU,
                RuleStage::Frame,
                &[
                    ("min", num(0.0)),
                    ("max", num(100.0)),
                    ("prefix", text("%")),
                    ("suffix", text("_pct")),
                ],
            ),
            Rule::new(
                R_CPI,
                RuleStage::Frame,
                &[("threshold", num(0.25)), ("pattern", text("cpi"))],
            ),
            Rule::new(R_NOISE, RuleStage::Frame, &[]),
            Rule::new(R_GC_MEM, RuleStage::Frame, &[]),
            Rule::new(R_RANGE, RuleStage::Frame, &[]),
        ];
        Self {
            rules: rules.into_iter().map(|r| (r.id.to_string(), r)).collect(),
        }
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.get(id)
    }

    /// The rule if it exists and is enabled.
    pub(crate) fn active(&self, id: &str) -> Option<&Rule> {
        self.rules.get(id).filter(|r| r.enabled)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {line_no}: expected `<rule-id>.<param> = <value>`, got {text:?}")]
    BadLine { line_no: usize, text: String },
    #[error("line {line_no}: unknown rule id {id:?}")]
    UnknownRule { line_no: usize, id: String },
    #[error("line {line_no}: rule {id} has no param {param:?}")]
    UnknownParam {
        line_no: usize,
        id: String,
        param: String,
    },
    #[error("line {line_no}: bad value {value:?} for {key}")]
    BadValue {
        line_no: usize,
        key: String,
        value: String,
    },
}

/// Parse a rule-config document over the built-in registry.
///
/// Plain-text key/value lines keyed by rule id:
///
/// ```text
/// R-CPI.threshold = 0.25
/// R-CPU.severity = error
/// R-MONO.enabled = false
/// ```
pub fn load_registry(config: &str) -> Result<RuleRegistry, ConfigError> {
    let mut registry = RuleRegistry::builtin();
    for (i, raw_line) in config.lines().enumerate() {
        let line_no = i + 1;
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::BadLine {
            line_no,
            text: raw_line.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let (id, param) = key.split_once('.').ok_or_else(|| ConfigError::BadLine {
            line_no,
            text: raw_line.to_string(),
        })?;
        let rule = registry
            .rules
            .get_mut(id)
            .ok_or_else(|| ConfigError::UnknownRule {
                line_no,
                id: id.to_string(),
            })?;
        let bad_value = || ConfigError::BadValue {
            line_no,
            key: key.to_string(),
            value: value.to_string(),
        };
        match param {
            "severity" => {
                rule.severity = match value.to_ascii_lowercase().as_str() {
                    "warning" => Severity::Warning,
                    "error" => Severity::Error,
                    _ => return Err(bad_value()),
                }
            }
            "enabled" => {
                rule.enabled = match value.to_ascii_lowercase().as_str() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(bad_value()),
                }
            }
            name => match rule.params.get_mut(name) {
                Some(ParamValue::Num(slot)) => {
                    *slot = value.parse().map_err(|_| bad_value())?;
                }
                Some(ParamValue::Text(slot)) => *slot = value.to_string(),
                None => {
                    return Err(ConfigError::UnknownParam {
                        line_no,
                        id: id.to_string(),
                        param: name.to_string(),
                    })
                }
            },
        }
    }
    Ok(registry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_keeps_builtin_defaults() {
        let registry = load_registry("").unwrap();
        assert_eq!(registry, RuleRegistry::builtin());
        let cpu = registry.rule(R_CPU).unwrap();
        assert_eq!(cpu.severity, Severity::Warning);
        assert_eq!(cpu.num_param("max"), 100.0);
        let cpi = registry.rule(R_CPI).unwrap();
        assert_eq!(cpi.num_param("threshold"), 0.25);
    }

    #[test]
    fn config_overrides_apply() {
        let registry = load_registry(
            "# escalate CPU\nR-CPU.severity = error\nR-CPI.threshold = 0.5\nR-MONO.enabled = false\n",
        )
        .unwrap();
        assert_eq!(registry.rule(R_CPU).unwrap().severity, Severity::Error);
        assert_eq!(registry.rule(R_CPI).unwrap().num_param("threshold"), 0.5);
        assert!(!registry.rule(R_MONO).unwrap().enabled);
        assert!(registry.active(R_MONO).is_none());
    }

    #[test]
    fn unknown_rule_id_is_rejected() {
        let err = load_registry("R-BOGUS.threshold = 1\n").unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownRule {
                line_no: 1,
                id: "R-BOGUS".to_string()
            }
        );
    }

    #[test]
    fn bad_values_are_rejected() {
        assert!(matches!(
            load_registry("R-CPI.threshold = lots\n").unwrap_err(),
            ConfigError::BadValue { .. }
        ));
        assert!(matches!(
            load_registry("R-CPU.severity = fatal\n").unwrap_err(),
            ConfigError::BadValue { .. }
        ));
        assert!(matches!(
            load_registry("R-CPU.bogus_param = 1\n").unwrap_err(),
            ConfigError::UnknownParam { .. }
        ));
        assert!(matches!(
            load_registry("not a config line\n").unwrap_err(),
            ConfigError::BadLine { .. }
        ));
    }
}
