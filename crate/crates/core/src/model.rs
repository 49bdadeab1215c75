//! Scenario description: user classes, per-user QoS parameters and the
//! feasibility checks that gate every simulation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Identifier of a user within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UeId(pub u32);

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UeClass {
    AoiSensitive,
    LatencySensitive,
    ThroughputSensitive,
}

impl UeClass {
    /// Short name used in scenario files and CSV output.
    pub fn as_str(self) -> &'static str {
        match self {
            UeClass::AoiSensitive => "aoi",
            UeClass::LatencySensitive => "latency",
            UeClass::ThroughputSensitive => "throughput",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "aoi" => Some(UeClass::AoiSensitive),
            "latency" => Some(UeClass::LatencySensitive),
            "throughput" => Some(UeClass::ThroughputSensitive),
            _ => None,
        }
    }
}

impl fmt::Display for UeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Class-specific parameters. Fields that do not apply to a class cannot be
/// represented, so they are never silently defaulted.
#[derive(Debug, Clone, PartialEq)]
pub enum UeParams {
    Aoi { q: f64, rho: f64 },
    Latency { q: f64, rho: Option<f64>, beta: Option<f64> },
    /// Always backlogged; the arrival rate is implicitly 1.
    Throughput { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeConfig {
    pub id: UeId,
    /// Transmission success probability.
    pub p: f64,
    pub params: UeParams,
}

impl UeConfig {
    pub fn aoi(id: u32, q: f64, p: f64, rho: f64) -> Self {
        UeConfig { id: UeId(id), p, params: UeParams::Aoi { q, rho } }
    }

    pub fn latency(id: u32, q: f64, p: f64, rho: Option<f64>, beta: Option<f64>) -> Self {
        UeConfig { id: UeId(id), p, params: UeParams::Latency { q, rho, beta } }
    }

    pub fn throughput(id: u32, alpha: f64, p: f64) -> Self {
        UeConfig { id: UeId(id), p, params: UeParams::Throughput { alpha } }
    }

    pub fn class(&self) -> UeClass {
        match self.params {
            UeParams::Aoi { .. } => UeClass::AoiSensitive,
            UeParams::Latency { .. } => UeClass::LatencySensitive,
            UeParams::Throughput { .. } => UeClass::ThroughputSensitive,
        }
    }

    /// Per-slot arrival probability (1 for throughput users).
    pub fn q(&self) -> f64 {
        match self.params {
            UeParams::Aoi { q, .. } | UeParams::Latency { q, .. } => q,
            UeParams::Throughput { .. } => 1.0,
        }
    }

    pub fn rho(&self) -> Option<f64> {
        match self.params {
            UeParams::Aoi { rho, .. } => Some(rho),
            UeParams::Latency { rho, .. } => rho,
            UeParams::Throughput { .. } => None,
        }
    }

    pub fn beta(&self) -> Option<f64> {
        match self.params {
            UeParams::Latency { beta, .. } => beta,
            _ => None,
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.params {
            UeParams::Throughput { alpha } => Some(alpha),
            _ => None,
        }
    }
}

/// Which optimization problem the scenario poses for latency users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemVariant {
    /// Latency users carry a maximum tolerable average latency `beta`.
    LatencyConstrained,
    /// Latency users carry a weight `rho` and enter the cost directly.
    LatencyWeighted,
}

impl ProblemVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemVariant::LatencyConstrained => "latency_constrained",
            ProblemVariant::LatencyWeighted => "latency_weighted",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "latency_constrained" => Some(ProblemVariant::LatencyConstrained),
            "latency_weighted" => Some(ProblemVariant::LatencyWeighted),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("scenario has no users")]
    Empty,
    #[error("duplicate user id {0}")]
    DuplicateId(UeId),
    #[error("user {ue}: missing field `{field}` required for class {class}")]
    MissingField { ue: UeId, field: &'static str, class: UeClass },
    #[error("user {ue}: field `{field}` does not apply to class {class}")]
    NotApplicable { ue: UeId, field: &'static str, class: UeClass },
    #[error("user {ue}: field `{field}` = {value} is out of range, expected {expected}")]
    OutOfRange { ue: UeId, field: &'static str, value: f64, expected: &'static str },
    #[error("operation requires the {expected} variant")]
    WrongVariant { expected: &'static str },
    #[error("no user with id {0}")]
    UnknownUe(UeId),
}

/// A structurally valid set of users. Construction checks every invariant;
/// load feasibility is a separate question answered by [`Scenario::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    ues: Vec<UeConfig>,
    variant: ProblemVariant,
}

fn check_range(
    ue: UeId,
    field: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<(), ModelError> {
    if value.is_finite() && ok {
        Ok(())
    } else {
        Err(ModelError::OutOfRange { ue, field, value, expected })
    }
}

fn check_ue(ue: &UeConfig, variant: ProblemVariant) -> Result<(), ModelError> {
    let id = ue.id;
    check_range(id, "p", ue.p, ue.p > 0.0 && ue.p <= 1.0, "(0, 1]")?;
    match ue.params {
        UeParams::Aoi { q, rho } => {
            check_range(id, "q", q, q > 0.0 && q <= 1.0, "(0, 1]")?;
            check_range(id, "rho", rho, rho > 0.0, "> 0")?;
        }
        UeParams::Latency { q, rho, beta } => {
            check_range(id, "q", q, q > 0.0 && q <= 1.0, "(0, 1]")?;
            if let Some(rho) = rho {
                check_range(id, "rho", rho, rho > 0.0, "> 0")?;
            }
            if let Some(beta) = beta {
                // a target of exactly 1 is allowed; it is only met by instant service
                check_range(id, "beta", beta, beta >= 1.0, ">= 1")?;
            }
            let class = UeClass::LatencySensitive;
            match variant {
                ProblemVariant::LatencyWeighted if rho.is_none() => {
                    return Err(ModelError::MissingField { ue: id, field: "rho", class });
                }
                ProblemVariant::LatencyConstrained if beta.is_none() => {
                    return Err(ModelError::MissingField { ue: id, field: "beta", class });
                }
                _ => {}
            }
        }
        UeParams::Throughput { alpha } => {
            check_range(id, "alpha", alpha, alpha > 0.0 && alpha < 1.0, "(0, 1)")?;
        }
    }
    Ok(())
}

impl Scenario {
    /// Builds a scenario, ordering users by id.
    pub fn new(mut ues: Vec<UeConfig>, variant: ProblemVariant) -> Result<Self, ModelError> {
        if ues.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut seen = BTreeSet::new();
        for ue in &ues {
            if !seen.insert(ue.id) {
                return Err(ModelError::DuplicateId(ue.id));
            }
            check_ue(ue, variant)?;
        }
        ues.sort_by_key(|u| u.id);
        Ok(Scenario { ues, variant })
    }

    pub fn ues(&self) -> &[UeConfig] {
        &self.ues
    }

    pub fn variant(&self) -> ProblemVariant {
        self.variant
    }

    pub fn ue(&self, id: UeId) -> Option<&UeConfig> {
        self.ues.iter().find(|u| u.id == id)
    }

    pub fn ues_of(&self, class: UeClass) -> impl Iterator<Item = &UeConfig> {
        self.ues.iter().filter(move |u| u.class() == class)
    }

    /// Attempt-rate load of latency and throughput users:
    /// `sum q_j/p_j + sum alpha_k/p_k`.
    pub fn load(&self) -> f64 {
        self.ues
            .iter()
            .map(|u| match u.params {
                UeParams::Latency { q, .. } => q / u.p,
                UeParams::Throughput { alpha } => alpha / u.p,
                UeParams::Aoi { .. } => 0.0,
            })
            .sum()
    }

    /// Attempt budget left for AoI users.
    pub fn zeta(&self) -> f64 {
        1.0 - self.load()
    }

    pub fn validate(&self) -> FeasibilityReport {
        let load = self.load();
        let theta_sum = self.theta_sum().ok();
        FeasibilityReport {
            load,
            feasible: load < 1.0,
            zeta: 1.0 - load,
            theta_sum,
            rd_feasible: theta_sum.map(|s| s <= 1.0),
        }
    }

    /// Sum of the randomized policy's per-slot service probabilities for
    /// latency users.
    pub fn theta_sum(&self) -> Result<f64, ModelError> {
        Ok(self.thetas()?.iter().map(|(_, th)| th).sum())
    }

    /// Per latency user service probability `(q + (1 - q)/beta) / p`.
    pub fn thetas(&self) -> Result<Vec<(UeId, f64)>, ModelError> {
        if self.variant != ProblemVariant::LatencyConstrained {
            return Err(ModelError::WrongVariant { expected: "latency_constrained" });
        }
        self.ues_of(UeClass::LatencySensitive)
            .map(|u| {
                let beta = u.beta().ok_or(ModelError::MissingField {
                    ue: u.id,
                    field: "beta",
                    class: UeClass::LatencySensitive,
                })?;
                Ok((u.id, theta(u.q(), u.p, beta)))
            })
            .collect()
    }

    /// Returns a copy with one user's alpha or beta replaced, re-validated.
    pub fn with_param(&self, ue: UeId, param: SweepParam, value: f64) -> Result<Self, ModelError> {
        let mut ues = self.ues.clone();
        let target = ues.iter_mut().find(|u| u.id == ue).ok_or(ModelError::UnknownUe(ue))?;
        let class = target.class();
        match (&mut target.params, param) {
            (UeParams::Throughput { alpha }, SweepParam::Alpha) => *alpha = value,
            (UeParams::Latency { beta, .. }, SweepParam::Beta) => *beta = Some(value),
            (_, p) => {
                return Err(ModelError::NotApplicable { ue, field: p.as_str(), class });
            }
        }
        Scenario::new(ues, self.variant)
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: f64) -> Result<Self, ModelError> {
        let ues = self
            .ues
            .iter()
            .cloned()
            .map(|mut u| {
                match &mut u.params {
                    UeParams::Aoi { rho, .. } => *rho *= factor,
                    UeParams::Latency { rho: Some(rho), .. } => *rho *= factor,
                    _ => {}
                }
                u
            })
            .collect();
        Scenario::new(ues, self.variant)
    }

    /// The single user a sweep parameter applies to, if unambiguous.
    pub fn sole_target(&self, param: SweepParam) -> Option<UeId> {
        let class = match param {
            SweepParam::Alpha => UeClass::ThroughputSensitive,
            SweepParam::Beta => UeClass::LatencySensitive,
        };
        let mut it = self.ues_of(class);
        match (it.next(), it.next()) {
            (Some(u), None) => Some(u.id),
            _ => None,
        }
    }

    /// Copy with a different variant tag (re-validated).
    pub fn with_variant(&self, variant: ProblemVariant) -> Result<Self, ModelError> {
        Scenario::new(self.ues.clone(), variant)
    }
}

/// `(q + (1 - q)/beta) / p`.
pub fn theta(q: f64, p: f64, beta: f64) -> f64 {
    (q + (1.0 - q) / beta) / p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepParam {
    Alpha,
    Beta,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Beta => "beta",
        }
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "beta" => Ok(SweepParam::Beta),
            other => Err(format!("unknown sweep parameter `{other}` (expected alpha or beta)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityReport {
    pub load: f64,
    /// `load < 1`, strictly.
    pub feasible: bool,
    pub zeta: f64,
    /// Only for the latency-constrained variant.
    pub theta_sum: Option<f64>,
    pub rd_feasible: Option<bool>,
}

/// Three-user system used throughout the figure presets: one AoI user, one
/// latency user and one throughput user.
pub fn three_ue_system(variant: ProblemVariant, alpha: f64, beta: Option<f64>) -> Scenario {
    let latency = match variant {
        ProblemVariant::LatencyWeighted => UeConfig::latency(2, 0.2, 0.8, Some(1.0), beta),
        ProblemVariant::LatencyConstrained => UeConfig::latency(2, 0.2, 0.8, None, beta),
    };
    Scenario::new(
        vec![UeConfig::aoi(1, 0.9, 0.7, 1.0), latency, UeConfig::throughput(3, alpha, 0.9)],
        variant,
    )
    .expect("three-user preset parameters are valid")
}
