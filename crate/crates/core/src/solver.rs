//! Numerical pieces: the spacing program that sets AoI targets, Geo/Geo/1
//! latency, and the cost lower bound.
//!
//! The spacing program is
//!
//! ```text
//! minimize   sum_l rho_l / 2 * (T_l + c_l / T_l)
//! subject to sum_l 1 / (p_l T_l) <= zeta,   T_l >= 1
//! ```
//!
//! Stationarity gives `T_l(mu) = max(1, sqrt(c_l + 2 mu / (rho_l p_l)))` for
//! the multiplier `mu >= 0` of the budget constraint. The budget used by
//! `T(mu)` is strictly decreasing in `mu`, so `mu` is found by bisection.

use crate::model::{ProblemVariant, Scenario, UeClass, UeId};
use crate::sim::{self, Policy, RunConfig};

/// Residual tolerance on the budget constraint.
pub const BUDGET_TOL: f64 = 1e-9;
/// Bisection stops once the multiplier bracket is this narrow.
pub const MU_TOL: f64 = 1e-12;
pub const MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("no attempt budget left for AoI users (zeta = {0})")]
    Infeasible(f64),
    #[error("multiplier search did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("queue is unstable: service rate {p} <= arrival rate {q}")]
    UnstableQueue { p: f64, q: f64 },
    #[error("lower bound requires the latency_weighted variant")]
    WrongVariant,
    #[error("invalid spacing term for user {0}")]
    InvalidTerm(UeId),
}

/// One AoI user's contribution to the spacing program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacingTerm {
    pub id: UeId,
    pub p: f64,
    pub rho: f64,
    /// Variance-like constant in the objective.
    pub c: f64,
}

impl SpacingTerm {
    fn spacing(&self, mu: f64) -> f64 {
        (self.c + 2.0 * mu / (self.rho * self.p)).sqrt().max(1.0)
    }

    pub fn cost(&self, t: f64) -> f64 {
        0.5 * self.rho * (t + self.c / t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStarSolution {
    /// Target spacing per AoI user, in scenario order.
    pub t_star: Vec<(UeId, f64)>,
    pub mu: f64,
    /// Whether the budget constraint is tight at the optimum.
    pub binding: bool,
    /// Objective value at `t_star`.
    pub objective: f64,
}

impl TStarSolution {
    pub fn get(&self, id: UeId) -> Option<f64> {
        self.t_star.iter().find(|(u, _)| *u == id).map(|&(_, t)| t)
    }
}

fn budget(terms: &[SpacingTerm], mu: f64) -> f64 {
    terms.iter().map(|term| 1.0 / (term.p * term.spacing(mu))).sum()
}

/// Solves the spacing program for arbitrary constants `c_l` via the KKT
/// conditions.
pub fn solve_spacing(terms: &[SpacingTerm], zeta: f64) -> Result<TStarSolution, SolverError> {
    if zeta.is_nan() || zeta <= 0.0 {
        return Err(SolverError::Infeasible(zeta));
    }
    for term in terms {
        let ok = term.p > 0.0 && term.p <= 1.0 && term.rho > 0.0 && term.c >= 0.0 && term.c.is_finite();
        if !ok {
            return Err(SolverError::InvalidTerm(term.id));
        }
    }
    let finish = |mu: f64| {
        let t_star: Vec<_> = terms.iter().map(|term| (term.id, term.spacing(mu))).collect();
        let objective = terms.iter().zip(&t_star).map(|(term, &(_, t))| term.cost(t)).sum();
        let used = budget(terms, mu);
        TStarSolution { t_star, mu, binding: (zeta - used).abs() <= BUDGET_TOL, objective }
    };

    if budget(terms, 0.0) <= zeta {
        return Ok(finish(0.0));
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut iter = 0;
    while budget(terms, hi) > zeta {
        lo = hi;
        hi *= 2.0;
        iter += 1;
        if iter >= MAX_ITER {
            return Err(SolverError::NoConvergence(MAX_ITER));
        }
    }
    // invariant: budget(lo) > zeta >= budget(hi)
    for _ in 0..MAX_ITER {
        let slack = zeta - budget(terms, hi);
        if slack <= BUDGET_TOL || hi - lo <= MU_TOL {
            return Ok(finish(hi));
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(finish(hi));
        }
        if budget(terms, mid) > zeta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(SolverError::NoConvergence(MAX_ITER))
}

/// `(1 - q) / q^2`, the inter-delivery variance of a threshold-gated
/// geometric arrival stream.
pub fn spacing_variance(q: f64) -> f64 {
    (1.0 - q) / (q * q)
}

fn aoi_terms(scenario: &Scenario, c_of_q: impl Fn(f64) -> f64) -> Vec<SpacingTerm> {
    scenario
        .ues_of(UeClass::AoiSensitive)
        .map(|u| SpacingTerm {
            id: u.id,
            p: u.p,
            rho: u.rho().expect("AoI users always carry rho"),
            c: c_of_q(u.q()),
        })
        .collect()
}

/// Target inter-delivery spacing `T*` for every AoI user of the scenario,
/// using the scenario's residual budget `zeta`.
pub fn compute_t_star(scenario: &Scenario) -> Result<TStarSolution, SolverError> {
    solve_spacing(&aoi_terms(scenario, spacing_variance), scenario.zeta())
}

/// Counter threshold `ceil(T* - 1/q)`, floored at 0.
///
/// A 1e-9 slack absorbs rounding when `T*` sits exactly on an integer
/// offset from `1/q`.
pub fn hier_threshold(t_star: f64, q: f64) -> u64 {
    let x = (t_star - 1.0 / q - 1e-9).ceil();
    if x <= 0.0 {
        0
    } else {
        x as u64
    }
}

/// Mean latency of a Geo/Geo/1 queue under any work-conserving discipline:
/// `(1 - p) / (p - q) + 1`.
pub fn geo_geo1_latency(p: f64, q: f64) -> Result<f64, SolverError> {
    if p <= q {
        return Err(SolverError::UnstableQueue { p, q });
    }
    Ok((1.0 - p) / (p - q) + 1.0)
}

/// Service rate at which the Geo/Geo/1 mean latency equals `beta`.
pub fn effective_rate_for_beta(q: f64, beta: f64) -> f64 {
    q + (1.0 - q) / beta
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowerBound {
    pub lb_f1: f64,
    pub lb_f2: f64,
    pub lb: f64,
}

/// Lower bound on the weighted AoI + latency cost over all feasible policies.
///
/// The AoI part minimizes the spacing objective with the smaller variance
/// constant `(1 - q) / (2 q^2)`; the latency part is the simulated cost of a
/// system holding only the latency users under the c-mu rule.
pub fn lower_bound(scenario: &Scenario, horizon: u64, seed: u64) -> Result<LowerBound, crate::Error> {
    if scenario.variant() != ProblemVariant::LatencyWeighted {
        return Err(SolverError::WrongVariant.into());
    }
    let zeta = scenario.zeta();
    if !scenario.validate().feasible {
        return Err(SolverError::Infeasible(zeta).into());
    }
    let terms = aoi_terms(scenario, |q| spacing_variance(q) / 2.0);
    let lb_f1 = if terms.is_empty() {
        0.0
    } else {
        let sol = solve_spacing(&terms, zeta)?;
        terms
            .iter()
            .zip(&sol.t_star)
            .map(|(term, &(_, t))| term.cost(t) + 0.5 * term.rho)
            .sum()
    };

    let latency: Vec<_> = scenario.ues_of(UeClass::LatencySensitive).cloned().collect();
    let lb_f2 = if latency.is_empty() {
        0.0
    } else {
        let sub = Scenario::new(latency, ProblemVariant::LatencyWeighted)?;
        let report = sim::run(&RunConfig::new(sub, Policy::CMu, horizon, seed))?;
        report.cost.f2
    };
    Ok(LowerBound { lb_f1, lb_f2, lb: lb_f1 + lb_f2 })
}
