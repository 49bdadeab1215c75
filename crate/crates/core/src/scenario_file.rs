//! TOML scenario files.
//!
//! ```toml
//! variant = "latency_weighted"   # or "latency_constrained"
//!
//! [[ue]]
//! id = 1
//! class = "aoi"                  # aoi | latency | throughput
//! q = 0.9
//! p = 0.7
//! rho = 1.0
//! ```
//!
//! Each entry carries only the fields that apply to its class:
//! `aoi` takes `q, p, rho`; `latency` takes `q, p` plus `rho` and/or `beta`;
//! `throughput` takes `alpha, p`. Unknown keys are rejected.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use crate::model::{ModelError, ProblemVariant, Scenario, UeClass, UeConfig, UeParams};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioFileError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}: {message}")]
    Field { line: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] ModelError),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    variant: Spanned<String>,
    #[serde(default)]
    ue: Vec<RawUe>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawUe {
    id: Spanned<u32>,
    class: Spanned<String>,
    q: Option<Spanned<f64>>,
    p: Option<Spanned<f64>>,
    rho: Option<Spanned<f64>>,
    beta: Option<Spanned<f64>>,
    alpha: Option<Spanned<f64>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

pub fn parse_scenario_str(text: &str) -> Result<Scenario, ScenarioFileError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| ScenarioFileError::Syntax(e.to_string()))?;
    let field_err = |span: std::ops::Range<usize>, message: String| ScenarioFileError::Field {
        line: line_of(text, span.start),
        message,
    };

    let variant = ProblemVariant::parse(raw.variant.get_ref()).ok_or_else(|| {
        field_err(
            raw.variant.span(),
            format!(
                "`variant` = \"{}\" is not one of latency_constrained, latency_weighted",
                raw.variant.get_ref()
            ),
        )
    })?;

    let mut ues = Vec::with_capacity(raw.ue.len());
    for entry in &raw.ue {
        let id = *entry.id.get_ref();
        let class = UeClass::parse(entry.class.get_ref()).ok_or_else(|| {
            field_err(
                entry.class.span(),
                format!("ue {id}: `class` = \"{}\" is not one of aoi, latency, throughput", entry.class.get_ref()),
            )
        })?;
        let required = |field: &'static str, v: &Option<Spanned<f64>>| {
            v.as_ref().map(|s| *s.get_ref()).ok_or_else(|| {
                field_err(entry.id.span(), format!("ue {id}: missing field `{field}` required for class {class}"))
            })
        };
        let forbid = |field: &'static str, v: &Option<Spanned<f64>>| match v {
            Some(s) => Err(field_err(s.span(), format!("ue {id}: field `{field}` does not apply to class {class}"))),
            None => Ok(()),
        };
        let p = required("p", &entry.p)?;
        let params = match class {
            UeClass::AoiSensitive => {
                forbid("beta", &entry.beta)?;
                forbid("alpha", &entry.alpha)?;
                UeParams::Aoi { q: required("q", &entry.q)?, rho: required("rho", &entry.rho)? }
            }
            UeClass::LatencySensitive => {
                forbid("alpha", &entry.alpha)?;
                UeParams::Latency {
                    q: required("q", &entry.q)?,
                    rho: entry.rho.as_ref().map(|s| *s.get_ref()),
                    beta: entry.beta.as_ref().map(|s| *s.get_ref()),
                }
            }
            UeClass::ThroughputSensitive => {
                forbid("q", &entry.q)?;
                forbid("rho", &entry.rho)?;
                forbid("beta", &entry.beta)?;
                UeParams::Throughput { alpha: required("alpha", &entry.alpha)? }
            }
        };
        ues.push((UeConfig { id: crate::model::UeId(id), p, params }, entry));
    }

    let configs: Vec<UeConfig> = ues.iter().map(|(u, _)| u.clone()).collect();
    Scenario::new(configs, variant).map_err(|e| {
        // attach a line number when the error names a specific field
        let located = match &e {
            ModelError::OutOfRange { ue, field, .. } => ues.iter().find(|(u, _)| u.id == *ue).and_then(|(_, raw)| {
                let span = match *field {
                    "q" => raw.q.as_ref().map(|s| s.span()),
                    "p" => raw.p.as_ref().map(|s| s.span()),
                    "rho" => raw.rho.as_ref().map(|s| s.span()),
                    "beta" => raw.beta.as_ref().map(|s| s.span()),
                    "alpha" => raw.alpha.as_ref().map(|s| s.span()),
                    _ => None,
                };
                span.map(|s| line_of(text, s.start))
            }),
            ModelError::DuplicateId(id) | ModelError::MissingField { ue: id, .. } => ues
                .iter()
                .rev()
                .find(|(u, _)| u.id == *id)
                .map(|(_, raw)| line_of(text, raw.id.span().start)),
            _ => None,
        };
        match located {
            Some(line) => ScenarioFileError::Field { line, message: e.to_string() },
            None => ScenarioFileError::Invalid(e),
        }
    })
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioFileError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioFileError::Io { path: path.display().to_string(), source })?;
    parse_scenario_str(&text)
}

/// Serializes a scenario in the same format [`parse_scenario_str`] reads.
pub fn emit_scenario(scenario: &Scenario) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "variant = \"{}\"", scenario.variant().as_str());
    for ue in scenario.ues() {
        let _ = writeln!(out, "\n[[ue]]\nid = {}\nclass = \"{}\"", ue.id, ue.class());
        let mut field = |name: &str, v: f64| {
            // `{:?}` keeps a decimal point and round-trips exactly
            let _ = writeln!(out, "{name} = {v:?}");
        };
        match ue.params {
            UeParams::Aoi { q, rho } => {
                field("q", q);
                field("p", ue.p);
                field("rho", rho);
            }
            UeParams::Latency { q, rho, beta } => {
                field("q", q);
                field("p", ue.p);
                if let Some(rho) = rho {
                    field("rho", rho);
                }
                if let Some(beta) = beta {
                    field("beta", beta);
                }
            }
            UeParams::Throughput { alpha } => {
                field("alpha", alpha);
                field("p", ue.p);
            }
        }
    }
    out
}
