//! Scheduling policies and the per-user state they carry.
//!
//! Users are addressed by their position in [`Scenario::ues`], which is
//! sorted by id, so "lowest index" and "lowest id" coincide for tie-breaks.
//!
//! Within a slot the simulator calls, in order: [`PolicyState::update_index`]
//! for the slot's arrivals, one of the `*_select` methods, then
//! [`PolicyState::on_outcome`] if something was transmitted.

use std::collections::VecDeque;

use crate::metrics::Slot;
use crate::model::{ModelError, ProblemVariant, Scenario, UeClass, UeId};
use crate::solver::{self, TStarSolution};

/// Position of a user in the scenario's (id-sorted) user list.
pub type UeIndex = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Transmit { ue: UeIndex, packet: Slot },
    Idle,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error("latency users must carry rho for this policy (user {0})")]
    MissingRho(UeId),
    #[error("this policy needs beta on every latency user (user {0})")]
    MissingBeta(UeId),
    #[error("c-mu scheduling only handles latency users (user {0} is {1})")]
    NotLatencyOnly(UeId, UeClass),
    #[error("randomized split over backlogged latency users sums to {0} > 1")]
    ThetaOverflow(f64),
    #[error("AoI user {0} has no target spacing")]
    MissingTarget(UeId),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone)]
struct UeState {
    class: UeClass,
    p: f64,
    q: f64,
    rho: f64,
    alpha: f64,
    beta: f64,
    theta: f64,
    threshold: u64,
    /// Scheduling index; 0 when nothing is pending.
    w: f64,
    /// Arrival slot of the packet that last advanced the counter.
    last_counted: Slot,
    counter: u64,
    pending: Option<Slot>,
    queue: VecDeque<Slot>,
    lambda: Slot,
    deliveries: u64,
    attempts: u64,
}

impl UeState {
    fn in_set(&self) -> bool {
        match self.class {
            UeClass::AoiSensitive => self.pending.is_some(),
            UeClass::LatencySensitive => !self.queue.is_empty(),
            UeClass::ThroughputSensitive => false,
        }
    }

    fn newest_packet(&self) -> Option<Slot> {
        match self.class {
            UeClass::AoiSensitive => self.pending,
            UeClass::LatencySensitive => self.queue.back().copied(),
            UeClass::ThroughputSensitive => None,
        }
    }
}

/// Mutable scheduler state shared by all policies.
#[derive(Debug, Clone)]
pub struct PolicyState {
    ues: Vec<UeState>,
    ids: Vec<UeId>,
}

impl PolicyState {
    /// Builds the state for `scenario`. AoI users get their counter
    /// thresholds from `t_star`; latency users take `latency_rho` when
    /// given (virtual weights) and their configured rho otherwise.
    fn build(scenario: &Scenario, t_star: &TStarSolution, latency_rho: Option<f64>) -> Result<Self, PolicyError> {
        let mut ues = Vec::with_capacity(scenario.ues().len());
        for cfg in scenario.ues() {
            let class = cfg.class();
            let threshold = if class == UeClass::AoiSensitive {
                let t = t_star.get(cfg.id).ok_or(PolicyError::MissingTarget(cfg.id))?;
                solver::hier_threshold(t, cfg.q())
            } else {
                0
            };
            let rho = match (class, latency_rho) {
                (UeClass::LatencySensitive, Some(r)) => r,
                _ => cfg.rho().unwrap_or(0.0),
            };
            ues.push(UeState {
                class,
                p: cfg.p,
                q: cfg.q(),
                rho,
                alpha: cfg.alpha().unwrap_or(0.0),
                beta: cfg.beta().unwrap_or(f64::INFINITY),
                theta: 0.0,
                threshold,
                w: 0.0,
                last_counted: 0,
                counter: 0,
                pending: None,
                queue: VecDeque::new(),
                lambda: 0,
                deliveries: 0,
                attempts: 0,
            });
        }
        Ok(PolicyState { ues, ids: scenario.ues().iter().map(|u| u.id).collect() })
    }

    /// State for the hierarchical policy with fixed latency weights.
    pub fn hierarchical(scenario: &Scenario, t_star: &TStarSolution) -> Result<Self, PolicyError> {
        if let Some(u) = scenario.ues_of(UeClass::LatencySensitive).find(|u| u.rho().is_none()) {
            return Err(PolicyError::MissingRho(u.id));
        }
        Self::build(scenario, t_star, None)
    }

    /// State for the hierarchical policy driven by virtual weights, all
    /// starting at `initial_rho`.
    pub fn virtual_weights(scenario: &Scenario, t_star: &TStarSolution, initial_rho: f64) -> Result<Self, PolicyError> {
        require_beta(scenario)?;
        Self::build(scenario, t_star, Some(initial_rho))
    }

    /// State for the randomized policy. When the latency users' shares sum
    /// above 1 they are scaled down proportionally to fit.
    pub fn randomized(scenario: &Scenario, t_star: &TStarSolution) -> Result<Self, PolicyError> {
        require_beta(scenario)?;
        let mut state = Self::build(scenario, t_star, None)?;
        let thetas = scenario.thetas()?;
        let total: f64 = thetas.iter().map(|&(_, th)| th).sum();
        let scale = if total > 1.0 { 1.0 / total } else { 1.0 };
        for (id, th) in thetas {
            let i = state.index_of(id).expect("theta for known user");
            state.ues[i].theta = th * scale;
        }
        Ok(state)
    }

    /// State for the c-mu rule on a latency-only system.
    pub fn c_mu(scenario: &Scenario) -> Result<Self, PolicyError> {
        for u in scenario.ues() {
            if u.class() != UeClass::LatencySensitive {
                return Err(PolicyError::NotLatencyOnly(u.id, u.class()));
            }
            if u.rho().is_none() {
                return Err(PolicyError::MissingRho(u.id));
            }
        }
        let empty = TStarSolution { t_star: vec![], mu: 0.0, binding: false, objective: 0.0 };
        Self::build(scenario, &empty, None)
    }

    pub fn len(&self) -> usize {
        self.ues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ues.is_empty()
    }

    pub fn id(&self, i: UeIndex) -> UeId {
        self.ids[i]
    }

    pub fn index_of(&self, id: UeId) -> Option<UeIndex> {
        self.ids.iter().position(|&u| u == id)
    }

    pub fn index(&self, i: UeIndex) -> f64 {
        self.ues[i].w
    }

    pub fn counter(&self, i: UeIndex) -> u64 {
        self.ues[i].counter
    }

    pub fn threshold(&self, i: UeIndex) -> u64 {
        self.ues[i].threshold
    }

    pub fn deliveries(&self, i: UeIndex) -> u64 {
        self.ues[i].deliveries
    }

    pub fn attempts(&self, i: UeIndex) -> u64 {
        self.ues[i].attempts
    }

    /// Latency weight currently used for scheduling.
    pub fn rho(&self, i: UeIndex) -> f64 {
        self.ues[i].rho
    }

    /// Probability mass assigned by the randomized policy.
    pub fn theta(&self, i: UeIndex) -> f64 {
        self.ues[i].theta
    }

    pub fn queue_len(&self, i: UeIndex) -> usize {
        self.ues[i].queue.len()
    }

    pub fn pending_packet(&self, i: UeIndex) -> Option<Slot> {
        self.ues[i].pending
    }

    /// Whether user `i` holds a packet eligible for the first scheduling tier.
    pub fn in_set(&self, i: UeIndex) -> bool {
        self.ues[i].in_set()
    }

    pub fn any_in_set(&self) -> bool {
        self.ues.iter().any(UeState::in_set)
    }

    /// Registers the packets that arrived in slot `t`.
    ///
    /// An AoI arrival advances the counter only if more than `threshold`
    /// slots have passed since the last counted arrival, and becomes the
    /// pending packet while the counter is ahead of deliveries. Latency
    /// arrivals are queued and, when `latency_index` is set, refresh the
    /// user's index to `rho p / q`.
    pub fn update_index(&mut self, arrivals: &[UeIndex], t: Slot, latency_index: bool) {
        for &i in arrivals {
            let u = &mut self.ues[i];
            match u.class {
                UeClass::AoiSensitive => {
                    if t - u.last_counted > u.threshold {
                        u.last_counted = t;
                        u.counter += 1;
                    }
                    if u.counter > u.deliveries {
                        u.pending = Some(t);
                        u.w = u.rho * u.p * (t - u.lambda) as f64;
                    }
                }
                UeClass::LatencySensitive => {
                    u.queue.push_back(t);
                    if latency_index {
                        u.w = u.rho * u.p / u.q;
                    }
                }
                UeClass::ThroughputSensitive => {}
            }
        }
    }

    fn best_in_set(&self, class: Option<UeClass>) -> Option<UeIndex> {
        let mut best: Option<UeIndex> = None;
        for (i, u) in self.ues.iter().enumerate() {
            if !u.in_set() || class.is_some_and(|c| c != u.class) {
                continue;
            }
            if best.is_none_or(|b| u.w > self.ues[b].w) {
                best = Some(i);
            }
        }
        best
    }

    /// Throughput user furthest behind its floor, `alpha t / p - attempts`.
    fn neediest_throughput(&self, t: Slot) -> Option<UeIndex> {
        let mut best: Option<(UeIndex, f64)> = None;
        for (i, u) in self.ues.iter().enumerate() {
            if u.class != UeClass::ThroughputSensitive {
                continue;
            }
            let debt = u.alpha * t as f64 / u.p - u.attempts as f64;
            if best.is_none_or(|(_, d)| debt > d) {
                best = Some((i, debt));
            }
        }
        best.map(|(i, _)| i)
    }

    fn transmit(&self, i: UeIndex, t: Slot) -> Action {
        // throughput users are always backlogged: send a fresh packet
        let packet = self.ues[i].newest_packet().unwrap_or(t);
        Action::Transmit { ue: i, packet }
    }

    /// Hierarchical selection: the pending packet with the largest index,
    /// otherwise the neediest throughput user.
    pub fn hier_select(&self, t: Slot) -> Action {
        match self.best_in_set(None).or_else(|| self.neediest_throughput(t)) {
            Some(i) => self.transmit(i, t),
            None => Action::Idle,
        }
    }

    /// Randomized selection driven by one uniform `draw` in `[0, 1)`.
    ///
    /// Backlogged latency users own consecutive intervals of length `theta`
    /// in ascending id order; the remainder goes to the AoI user with the
    /// largest index, or to the neediest throughput user if no AoI packet is
    /// pending.
    pub fn rd_select(&self, t: Slot, draw: f64) -> Result<Action, PolicyError> {
        let total: f64 = self.ues.iter().filter(|u| u.class == UeClass::LatencySensitive && u.in_set()).map(|u| u.theta).sum();
        if total > 1.0 + 1e-12 {
            return Err(PolicyError::ThetaOverflow(total));
        }
        let mut edge = 0.0;
        for (i, u) in self.ues.iter().enumerate() {
            if u.class == UeClass::LatencySensitive && u.in_set() {
                edge += u.theta;
                if draw < edge {
                    return Ok(self.transmit(i, t));
                }
            }
        }
        let fallback = self.best_in_set(Some(UeClass::AoiSensitive)).or_else(|| self.neediest_throughput(t));
        Ok(match fallback {
            Some(i) => self.transmit(i, t),
            None => Action::Idle,
        })
    }

    /// Serves the backlogged latency user with the largest `rho p / q`.
    pub fn cmu_select(&self, t: Slot) -> Action {
        let mut best: Option<(UeIndex, f64)> = None;
        for (i, u) in self.ues.iter().enumerate() {
            if u.class != UeClass::LatencySensitive || u.queue.is_empty() {
                continue;
            }
            let priority = u.rho * u.p / u.q;
            if best.is_none_or(|(_, b)| priority > b) {
                best = Some((i, priority));
            }
        }
        match best {
            Some((i, _)) => self.transmit(i, t),
            None => Action::Idle,
        }
    }

    /// Applies the outcome of the slot's transmission.
    pub fn on_outcome(&mut self, action: Action, success: bool) {
        let Action::Transmit { ue, packet } = action else { return };
        let u = &mut self.ues[ue];
        u.attempts += 1;
        if !success {
            return;
        }
        u.deliveries += 1;
        match u.class {
            UeClass::AoiSensitive => {
                u.lambda = u.lambda.max(packet);
                u.pending = None;
                u.w = 0.0;
            }
            UeClass::LatencySensitive => {
                let sent = u.queue.pop_back();
                debug_assert_eq!(sent, Some(packet));
                if u.queue.is_empty() {
                    u.w = 0.0;
                }
            }
            UeClass::ThroughputSensitive => {}
        }
    }

    /// Virtual-weight step for every latency user:
    /// `rho <- max(0, rho - eta (beta - avg_latency))`.
    ///
    /// Users without a latency estimate yet keep their weight. Returns the
    /// `(index, new rho, latency used)` triples that were updated.
    pub fn vw_update(&mut self, eta: f64, avg_latency: impl Fn(UeIndex) -> Option<f64>) -> Vec<(UeIndex, f64, f64)> {
        let mut out = Vec::new();
        for (i, u) in self.ues.iter_mut().enumerate() {
            if u.class != UeClass::LatencySensitive {
                continue;
            }
            let Some(lat) = avg_latency(i) else { continue };
            u.rho = (u.rho - eta * (u.beta - lat)).max(0.0);
            out.push((i, u.rho, lat));
        }
        out
    }
}

fn require_beta(scenario: &Scenario) -> Result<(), PolicyError> {
    if scenario.variant() != ProblemVariant::LatencyConstrained {
        if let Some(u) = scenario.ues_of(UeClass::LatencySensitive).next() {
            return Err(PolicyError::MissingBeta(u.id));
        }
    }
    match scenario.ues_of(UeClass::LatencySensitive).find(|u| u.beta().is_none()) {
        Some(u) => Err(PolicyError::MissingBeta(u.id)),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::UeConfig;

    fn targets(pairs: &[(u32, f64)]) -> TStarSolution {
        TStarSolution {
            t_star: pairs.iter().map(|&(id, t)| (UeId(id), t)).collect(),
            mu: 0.0,
            binding: false,
            objective: 0.0,
        }
    }

    fn weighted(ues: Vec<UeConfig>) -> Scenario {
        Scenario::new(ues, ProblemVariant::LatencyWeighted).unwrap()
    }

    #[test]
    fn aoi_index_is_weighted_age_of_freshest_delivery() {
        let s = weighted(vec![UeConfig::aoi(1, 0.5, 0.5, 2.0)]);
        // T* = 1/q -> threshold 0
        let mut st = PolicyState::hierarchical(&s, &targets(&[(1, 2.0)])).unwrap();
        assert_eq!(st.threshold(0), 0);
        st.update_index(&[0], 10, true);
        assert_eq!(st.counter(0), 1);
        // lambda = 0, t = 10
        assert_eq!(st.index(0), 2.0 * 0.5 * 10.0);
        assert_eq!(st.pending_packet(0), Some(10));
    }

    #[test]
    fn newer_arrival_replaces_pending_packet() {
        let s = weighted(vec![UeConfig::aoi(1, 0.5, 0.5, 1.0)]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[(1, 2.0)])).unwrap();
        st.update_index(&[0], 3, true);
        let a = st.hier_select(3);
        assert_eq!(a, Action::Transmit { ue: 0, packet: 3 });
        st.on_outcome(a, false);
        st.update_index(&[0], 4, true);
        assert_eq!(st.pending_packet(0), Some(4));
        let a = st.hier_select(4);
        assert_eq!(a, Action::Transmit { ue: 0, packet: 4 });
        st.on_outcome(a, true);
        assert_eq!(st.index(0), 0.0);
        assert!(!st.in_set(0));
        assert_eq!(st.deliveries(0), 1);
        assert_eq!(st.attempts(0), 2);
        st.update_index(&[0], 6, true);
        assert_eq!(st.index(0), 0.5 * (6 - 4) as f64);
    }

    #[test]
    fn threshold_gates_counter() {
        let s = weighted(vec![UeConfig::aoi(1, 0.9, 0.7, 1.0)]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[(1, 2.7068)])).unwrap();
        assert_eq!(st.threshold(0), 2);
        // first counted arrival needs t - 0 > 2
        st.update_index(&[0], 1, true);
        st.update_index(&[0], 2, true);
        assert_eq!(st.counter(0), 0);
        assert!(!st.in_set(0));
        st.update_index(&[0], 3, true);
        assert_eq!(st.counter(0), 1);
        let a = st.hier_select(3);
        st.on_outcome(a, true);
        // 4, 5 are within the gap; 6 is counted
        st.update_index(&[0], 4, true);
        st.update_index(&[0], 5, true);
        assert!(!st.in_set(0));
        st.update_index(&[0], 6, true);
        assert_eq!(st.counter(0), 2);
        assert_eq!(st.pending_packet(0), Some(6));
    }

    #[test]
    fn failed_attempt_keeps_packet_eligible_past_threshold() {
        let s = weighted(vec![UeConfig::aoi(1, 0.9, 0.7, 1.0)]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[(1, 2.7068)])).unwrap();
        st.update_index(&[0], 3, true);
        st.on_outcome(st.hier_select(3), false);
        // counter 1 > deliveries 0: an ungated arrival still replaces the packet
        st.update_index(&[0], 4, true);
        assert_eq!(st.counter(0), 1);
        assert_eq!(st.pending_packet(0), Some(4));
    }

    #[test]
    fn latency_queue_is_lifo() {
        let s = weighted(vec![UeConfig::latency(2, 0.2, 0.8, Some(1.0), None)]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[])).unwrap();
        st.update_index(&[0], 1, true);
        st.update_index(&[0], 2, true);
        assert_eq!(st.index(0), 1.0 * 0.8 / 0.2);
        let a = st.hier_select(2);
        assert_eq!(a, Action::Transmit { ue: 0, packet: 2 });
        st.on_outcome(a, true);
        assert_eq!(st.queue_len(0), 1);
        assert_eq!(st.index(0), 4.0);
        let a = st.hier_select(3);
        assert_eq!(a, Action::Transmit { ue: 0, packet: 1 });
        st.on_outcome(a, true);
        assert_eq!(st.index(0), 0.0);
        assert_eq!(st.hier_select(4), Action::Idle);
    }

    #[test]
    fn pending_packets_pre_empt_throughput_users() {
        let s = weighted(vec![
            UeConfig::aoi(1, 0.5, 0.5, 1.0),
            UeConfig::latency(2, 0.2, 0.8, Some(1.0), None),
            UeConfig::throughput(3, 0.2, 0.9),
        ]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[(1, 2.0)])).unwrap();
        assert_eq!(st.hier_select(1), Action::Transmit { ue: 2, packet: 1 });
        st.update_index(&[1], 1, true);
        assert_eq!(st.hier_select(1), Action::Transmit { ue: 1, packet: 1 });
        // AoI index rho p (t - lambda) = 0.5 * 20 = 10 > 4
        st.update_index(&[0], 20, true);
        assert_eq!(st.hier_select(20), Action::Transmit { ue: 0, packet: 20 });
    }

    #[test]
    fn index_ties_go_to_lowest_id() {
        let s = weighted(vec![
            UeConfig::latency(5, 0.2, 0.8, Some(1.0), None),
            UeConfig::latency(3, 0.2, 0.8, Some(1.0), None),
        ]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[])).unwrap();
        st.update_index(&[0, 1], 1, true);
        assert_eq!(st.id(0), UeId(3));
        assert_eq!(st.hier_select(1), Action::Transmit { ue: 0, packet: 1 });
    }

    #[test]
    fn throughput_user_with_largest_debt_is_served() {
        let s = weighted(vec![UeConfig::throughput(1, 0.2, 0.9), UeConfig::throughput(2, 0.3, 0.9)]);
        let mut st = PolicyState::hierarchical(&s, &targets(&[])).unwrap();
        // at t = 10: 2.22 vs 3.33 -> user 2
        let a = st.hier_select(10);
        assert_eq!(a, Action::Transmit { ue: 1, packet: 10 });
        for _ in 0..2 {
            st.on_outcome(Action::Transmit { ue: 1, packet: 10 }, true);
        }
        // 2.22 vs 1.33
        assert_eq!(st.hier_select(10), Action::Transmit { ue: 0, packet: 10 });
        // equal debt at t = 0 -> lowest id
        let fresh = PolicyState::hierarchical(&s, &targets(&[])).unwrap();
        assert_eq!(fresh.hier_select(0), Action::Transmit { ue: 0, packet: 0 });
    }

    #[test]
    fn zero_weight_latency_packet_still_beats_throughput() {
        let s = Scenario::new(
            vec![UeConfig::latency(2, 0.2, 0.8, None, Some(5.0)), UeConfig::throughput(3, 0.2, 0.9)],
            ProblemVariant::LatencyConstrained,
        )
        .unwrap();
        let mut st = PolicyState::virtual_weights(&s, &targets(&[]), 0.0).unwrap();
        st.update_index(&[0], 1, true);
        assert_eq!(st.index(0), 0.0);
        assert_eq!(st.hier_select(1), Action::Transmit { ue: 0, packet: 1 });
    }

    #[test]
    fn virtual_weight_step() {
        let s = Scenario::new(
            vec![UeConfig::latency(2, 0.2, 0.8, None, Some(2.0))],
            ProblemVariant::LatencyConstrained,
        )
        .unwrap();
        let mut st = PolicyState::virtual_weights(&s, &targets(&[]), 1.0).unwrap();
        let upd = st.vw_update(0.1, |_| Some(3.0));
        assert_eq!(upd.len(), 1);
        assert!((st.rho(0) - 1.1).abs() < 1e-12);
        st.vw_update(0.1, |_| Some(1.0));
        assert!((st.rho(0) - 1.0).abs() < 1e-12);
        st.vw_update(0.1, |_| Some(-100.0));
        assert_eq!(st.rho(0), 0.0);
        st.vw_update(0.1, |_| None);
        assert_eq!(st.rho(0), 0.0);
    }

    #[test]
    fn weighted_policies_need_the_right_fields() {
        let s = three_ue(ProblemVariant::LatencyConstrained);
        assert!(matches!(PolicyState::hierarchical(&s, &targets(&[(1, 3.0)])), Err(PolicyError::MissingRho(_))));
        let s = three_ue(ProblemVariant::LatencyWeighted);
        assert!(matches!(PolicyState::randomized(&s, &targets(&[(1, 3.0)])), Err(PolicyError::MissingBeta(_))));
        assert!(matches!(PolicyState::c_mu(&s), Err(PolicyError::NotLatencyOnly(..))));
        assert!(matches!(PolicyState::hierarchical(&s, &targets(&[])), Err(PolicyError::MissingTarget(_))));
    }

    fn three_ue(variant: ProblemVariant) -> Scenario {
        crate::model::three_ue_system(variant, 0.2, Some(2.0))
    }

    fn randomized_two_latency() -> PolicyState {
        // thetas: (0.2 + 0.8/2)/0.8 = 0.75 and (0.1 + 0.9/4)/0.9 = 0.3611 -> scaled by 1/1.1111
        let s = Scenario::new(
            vec![
                UeConfig::aoi(1, 0.5, 0.5, 1.0),
                UeConfig::latency(2, 0.2, 0.8, None, Some(2.0)),
                UeConfig::latency(3, 0.1, 0.9, None, Some(4.0)),
                UeConfig::throughput(4, 0.1, 0.9),
            ],
            ProblemVariant::LatencyConstrained,
        )
        .unwrap();
        PolicyState::randomized(&s, &targets(&[(1, 2.0)])).unwrap()
    }

    #[test]
    fn randomized_partition() {
        let mut st = randomized_two_latency();
        let total = st.theta(1) + st.theta(2);
        assert!((total - 1.0).abs() < 1e-12);
        // empty queues: everything falls through to the throughput user
        assert_eq!(st.rd_select(5, 0.1).unwrap(), Action::Transmit { ue: 3, packet: 5 });
        st.update_index(&[0, 2], 5, false);
        // only user 3 backlogged: [0, theta_3) then AoI
        let th3 = st.theta(2);
        assert_eq!(st.rd_select(5, th3 * 0.99).unwrap(), Action::Transmit { ue: 2, packet: 5 });
        assert_eq!(st.rd_select(5, th3 * 1.01).unwrap(), Action::Transmit { ue: 0, packet: 5 });
        st.update_index(&[1], 6, false);
        // latency index stays untouched without index updates
        assert_eq!(st.index(1), 0.0);
        let th2 = st.theta(1);
        assert_eq!(st.rd_select(6, th2 * 0.5).unwrap(), Action::Transmit { ue: 1, packet: 6 });
        assert_eq!(st.rd_select(6, th2 + th3 * 0.5).unwrap(), Action::Transmit { ue: 2, packet: 5 });
    }

    #[test]
    fn randomized_split_without_scaling() {
        let s = three_ue(ProblemVariant::LatencyConstrained);
        let mut st = PolicyState::randomized(&s, &targets(&[(1, 3.0)])).unwrap();
        assert!((st.theta(1) - 0.75).abs() < 1e-12);
        st.update_index(&[1], 1, false);
        assert_eq!(st.rd_select(1, 0.7499).unwrap(), Action::Transmit { ue: 1, packet: 1 });
        assert_eq!(st.rd_select(1, 0.7501).unwrap(), Action::Transmit { ue: 2, packet: 1 });
    }

    #[test]
    fn cmu_prefers_largest_priority() {
        let s = weighted(vec![
            UeConfig::latency(1, 0.2, 0.8, Some(1.0), None),
            UeConfig::latency(2, 0.1, 0.5, Some(1.0), None),
        ]);
        let mut st = PolicyState::c_mu(&s).unwrap();
        assert_eq!(st.cmu_select(1), Action::Idle);
        st.update_index(&[0, 1], 1, true);
        // 4 vs 5
        assert_eq!(st.cmu_select(1), Action::Transmit { ue: 1, packet: 1 });
        st.on_outcome(Action::Transmit { ue: 1, packet: 1 }, true);
        assert_eq!(st.cmu_select(2), Action::Transmit { ue: 0, packet: 1 });
    }
}
