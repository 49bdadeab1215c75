//! Online per-user statistics and the cost functionals assembled from them.
//!
//! Conventions:
//! * AoI starts from a virtual packet that arrived in slot 0, so the age in
//!   slot `t` is `t` until the first delivery.
//! * Inter-arrival samples are taken between the arrival slots of
//!   *delivered* packets, ordered by arrival slot.
//! * Average latency counts every arrived packet; packets still queued at
//!   the horizon contribute as if delivered in the last slot. AoI users only
//!   average over delivered packets (superseded packets are discarded).

use crate::model::{ProblemVariant, Scenario, UeClass, UeId};

/// Slot index. Slots are numbered from 1; 0 denotes the virtual initial packet.
pub type Slot = u64;

#[derive(Debug, Clone)]
pub struct UeMetrics {
    class: UeClass,
    warmup: Slot,
    /// Arrival slot of the freshest delivered packet.
    lambda: Slot,
    aoi_sum: u64,
    arrivals: u64,
    deliveries: u64,
    attempts: u64,
    // latency accounting restricted to packets arriving after warm-up
    latency_arrivals: u64,
    latency_deliveries: u64,
    latency_sum_delivered: u64,
    pending_count: u64,
    pending_arrival_sum: u64,
    delivered_arrivals: Vec<Slot>,
    in_order: bool,
    prev_delivered: Slot,
    /// Sum over deliveries of `T_i (L_i - 1)`.
    spacing_latency_sum: u64,
}

impl UeMetrics {
    pub fn new(class: UeClass) -> Self {
        Self::with_warmup(class, 0)
    }

    pub fn with_warmup(class: UeClass, warmup: Slot) -> Self {
        UeMetrics {
            class,
            warmup,
            lambda: 0,
            aoi_sum: 0,
            arrivals: 0,
            deliveries: 0,
            attempts: 0,
            latency_arrivals: 0,
            latency_deliveries: 0,
            latency_sum_delivered: 0,
            pending_count: 0,
            pending_arrival_sum: 0,
            delivered_arrivals: Vec::new(),
            in_order: true,
            prev_delivered: 0,
            spacing_latency_sum: 0,
        }
    }

    pub fn class(&self) -> UeClass {
        self.class
    }

    pub fn lambda(&self) -> Slot {
        self.lambda
    }

    pub fn aoi_sum(&self) -> u64 {
        self.aoi_sum
    }

    pub fn arrivals(&self) -> u64 {
        self.arrivals
    }

    pub fn deliveries(&self) -> u64 {
        self.deliveries
    }

    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    pub fn latency_sum_delivered(&self) -> u64 {
        self.latency_sum_delivered
    }

    /// Current age `t - lambda`, accumulated into the running sum.
    /// Call once per slot before that slot's delivery is recorded.
    pub fn step_aoi(&mut self, t: Slot) -> u64 {
        let age = t - self.lambda;
        if t > self.warmup {
            self.aoi_sum += age;
        }
        age
    }

    pub fn on_arrival(&mut self, g: Slot) {
        self.arrivals += 1;
        if self.tracks_backlog() && g > self.warmup {
            self.latency_arrivals += 1;
            self.pending_count += 1;
            self.pending_arrival_sum += g;
        }
    }

    pub fn on_attempt(&mut self) {
        self.attempts += 1;
    }

    /// Records a successful delivery in slot `t` of a packet that arrived in
    /// slot `g`.
    ///
    /// Panics if `g > t`.
    pub fn on_delivery(&mut self, g: Slot, t: Slot) {
        assert!(g <= t, "packet from slot {g} delivered in earlier slot {t}");
        let latency = t - g + 1;
        self.deliveries += 1;
        if g > self.warmup {
            self.latency_deliveries += 1;
            self.latency_sum_delivered += latency;
            if self.tracks_backlog() {
                self.pending_count -= 1;
                self.pending_arrival_sum -= g;
            }
        }
        if g < self.prev_delivered {
            self.in_order = false;
        } else {
            self.spacing_latency_sum += (g - self.prev_delivered) * (latency - 1);
        }
        self.prev_delivered = self.prev_delivered.max(g);
        self.lambda = self.lambda.max(g);
        self.delivered_arrivals.push(g);
    }

    fn tracks_backlog(&self) -> bool {
        self.class == UeClass::LatencySensitive
    }

    /// `sum (t - g + 1)` over packets that arrived but are not yet delivered.
    pub fn backlog_age_sum(&self, t: Slot) -> u64 {
        self.pending_count * (t + 1) - self.pending_arrival_sum
    }

    /// Running average latency at slot `t`, with queued packets counted as
    /// delivered in `t`.
    pub fn avg_latency_at(&self, t: Slot) -> Option<f64> {
        match self.class {
            UeClass::LatencySensitive if self.latency_arrivals > 0 => Some(
                (self.latency_sum_delivered + self.backlog_age_sum(t)) as f64 / self.latency_arrivals as f64,
            ),
            UeClass::AoiSensitive if self.latency_deliveries > 0 => {
                Some(self.latency_sum_delivered as f64 / self.latency_deliveries as f64)
            }
            _ => None,
        }
    }

    /// Inter-arrival samples between consecutive delivered packets, ordered
    /// by arrival slot.
    pub fn t_samples(&self) -> Vec<u64> {
        let mut arrivals = self.delivered_arrivals.clone();
        if !self.in_order {
            arrivals.sort_unstable();
        }
        arrivals.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn finalize(&self, id: UeId, horizon: Slot) -> UeSummary {
        assert!(horizon > self.warmup, "horizon must exceed warm-up");
        let counted = (horizon - self.warmup) as f64;
        let t = horizon as f64;
        let samples = self.t_samples();
        let (t_bar, delta_sq) = if samples.is_empty() {
            (None, None)
        } else {
            let n = samples.len() as f64;
            let mean = samples.iter().sum::<u64>() as f64 / n;
            let var = samples.iter().map(|&x| (x as f64 - mean).powi(2)).sum::<f64>() / n;
            (Some(mean), Some(var))
        };
        let latency_total = match self.class {
            UeClass::LatencySensitive => (self.latency_sum_delivered + self.backlog_age_sum(horizon)) as f64,
            _ => self.latency_sum_delivered as f64,
        };
        let avg_aoi = (self.class == UeClass::AoiSensitive).then(|| self.aoi_sum as f64 / counted);
        let mut summary = UeSummary {
            id,
            class: self.class,
            arrivals: self.arrivals,
            deliveries: self.deliveries,
            attempts: self.attempts,
            avg_aoi,
            avg_latency: self.avg_latency_at(horizon),
            throughput: self.deliveries as f64 / t,
            t_bar,
            delta_sq,
            attempts_share: self.attempts as f64 / t,
            latency_total,
            spacing_latency_term: self.spacing_latency_sum as f64 / t,
            aoi_residual: None,
        };
        summary.aoi_residual = aoi_decomposition_audit(&summary);
        summary
    }
}

/// Finalized statistics for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct UeSummary {
    pub id: UeId,
    pub class: UeClass,
    pub arrivals: u64,
    pub deliveries: u64,
    pub attempts: u64,
    pub avg_aoi: Option<f64>,
    /// Absent for throughput users and when nothing arrived.
    pub avg_latency: Option<f64>,
    pub throughput: f64,
    pub t_bar: Option<f64>,
    pub delta_sq: Option<f64>,
    pub attempts_share: f64,
    /// Sum of latencies over all arrived packets (queued ones counted at the
    /// horizon); delivered packets only for AoI users.
    pub latency_total: f64,
    /// `sum T_i (L_i - 1) / t` over delivered packets.
    pub spacing_latency_term: f64,
    pub aoi_residual: Option<f64>,
}

/// Absolute gap between the measured average AoI and its reconstruction
/// `(t_bar + delta_sq / t_bar + 1) / 2 + sum T_i (L_i - 1) / t`.
///
/// `None` unless the user is AoI-sensitive with at least two deliveries.
pub fn aoi_decomposition_audit(s: &UeSummary) -> Option<f64> {
    if s.class != UeClass::AoiSensitive || s.deliveries < 2 {
        return None;
    }
    let (avg, t_bar, delta_sq) = (s.avg_aoi?, s.t_bar?, s.delta_sq?);
    let predicted = 0.5 * (t_bar + delta_sq / t_bar + 1.0) + s.spacing_latency_term;
    Some((avg - predicted).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CostSummary {
    /// `sum rho_i A_i`, plus `sum rho_j L_j` for the latency-weighted variant.
    pub cost_objective: f64,
    pub f1: f64,
    pub f2: f64,
}

/// Assembles the objective and its two-term decomposition from finalized
/// per-user summaries.
pub fn assemble_cost(per_ue: &[UeSummary], scenario: &Scenario, horizon: Slot) -> CostSummary {
    let t = horizon as f64;
    let mut out = CostSummary::default();
    for s in per_ue {
        let Some(cfg) = scenario.ue(s.id) else { continue };
        match s.class {
            UeClass::AoiSensitive => {
                let rho = cfg.rho().unwrap_or(0.0);
                out.cost_objective += rho * s.avg_aoi.unwrap_or(0.0);
                if let (Some(t_bar), Some(delta_sq)) = (s.t_bar, s.delta_sq) {
                    out.f1 += 0.5 * rho * (t_bar + delta_sq / t_bar + 1.0);
                }
                out.f2 += rho * s.spacing_latency_term;
            }
            UeClass::LatencySensitive => {
                if let Some(rho) = cfg.rho() {
                    out.f2 += rho / cfg.q() * s.latency_total / t;
                    if scenario.variant() == ProblemVariant::LatencyWeighted {
                        out.cost_objective += rho * s.avg_latency.unwrap_or(0.0);
                    }
                }
            }
            UeClass::ThroughputSensitive => {}
        }
    }
    out
}

/// One virtual-weight update of a latency user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightSample {
    pub update: u64,
    pub slot: Slot,
    pub ue: UeId,
    pub rho: f64,
    pub avg_latency: f64,
}

/// Everything measured in one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub policy: String,
    pub seed: u64,
    pub horizon: Slot,
    pub warmup: Slot,
    pub per_ue: Vec<UeSummary>,
    pub cost: CostSummary,
    /// Filled in by callers that also compute the lower bound.
    pub lb: Option<f64>,
    pub weight_trace: Vec<WeightSample>,
}

impl RunReport {
    pub fn ue(&self, id: UeId) -> Option<&UeSummary> {
        self.per_ue.iter().find(|s| s.id == id)
    }
}
