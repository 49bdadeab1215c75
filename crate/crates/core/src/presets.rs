//! Built-in experiments on the three-user reference system, each producing
//! a CSV and a list of pass/fail checks.

use rayon::prelude::*;
use serde::Serialize;

use crate::metrics::{RunReport, UeSummary};
use crate::model::{ProblemVariant, Scenario, SweepParam, UeId};
use crate::scenario_file::parse_scenario_str;
use crate::sim::{self, derive_seed, Policy, RunConfig, SimError, SweepOutcome, SweepSpec};
use crate::solver::{self, LowerBound};
use crate::{output, Error};

pub const WEIGHTED_SCENARIO: &str = include_str!("../presets/three_ue_weighted.toml");
pub const CONSTRAINED_SCENARIO: &str = include_str!("../presets/three_ue_constrained.toml");

pub const ALPHA_GRID: [f64; 6] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
pub const WEIGHT_TRACE_BETAS: [f64; 3] = [1.0, 2.0, 5.0];

const AOI_UE: UeId = UeId(1);
const LATENCY_UE: UeId = UeId(2);
const THROUGHPUT_UE: UeId = UeId(3);

/// Latency floor of the reference latency user: Geo/Geo/1 with q 0.2, p 0.8.
const LATENCY_FLOOR: f64 = 4.0 / 3.0;

/// Beta values for the latency sweeps: 1.0 to 4.0 in steps of 0.25.
pub fn beta_grid() -> Vec<f64> {
    sim::grid(1.0, 4.0, 0.25)
}

/// The bundled three-user scenario for `variant`.
pub fn reference_scenario(variant: ProblemVariant) -> Scenario {
    let text = match variant {
        ProblemVariant::LatencyWeighted => WEIGHTED_SCENARIO,
        ProblemVariant::LatencyConstrained => CONSTRAINED_SCENARIO,
    };
    parse_scenario_str(text).expect("bundled scenario parses")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Per-user throughput, AoI and latency of the hierarchical policy over alpha.
    Fig4,
    /// Cost of the hierarchical policy against the lower bound over alpha.
    Fig5Cost,
    /// Virtual-weight trajectories for a few latency caps.
    Fig5Weights,
    /// AoI and latency of the virtual-weight and randomized policies over beta.
    Fig6,
    /// Throughput of the same runs over beta.
    Fig8,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig4, Preset::Fig5Cost, Preset::Fig5Weights, Preset::Fig6, Preset::Fig8];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig4 => "fig4",
            Preset::Fig5Cost => "fig5_cost",
            Preset::Fig5Weights => "fig5_weights",
            Preset::Fig6 => "fig6",
            Preset::Fig8 => "fig8",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Weight trajectories run long enough for 200 updates at the default
    /// period.
    pub fn default_horizon(self) -> u64 {
        match self {
            Preset::Fig5Weights => 200 * sim::DEFAULT_VW_PERIOD,
            _ => 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(check: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Verdict { check: check.into(), pass, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reproduction {
    pub preset: Preset,
    pub csv: String,
    pub verdicts: Vec<Verdict>,
}

impl Reproduction {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            out.push_str(&format!("{}  {}: {}\n", if v.pass { "PASS" } else { "FAIL" }, v.check, v.detail));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub horizon: u64,
    pub seeds: u64,
}

pub fn reproduce(preset: Preset, opts: ReproduceOptions) -> Result<Reproduction, Error> {
    let (csv, verdicts) = match preset {
        Preset::Fig4 => fig4(opts)?,
        Preset::Fig5Cost => fig5_cost(opts)?,
        Preset::Fig5Weights => fig5_weights(opts)?,
        Preset::Fig6 => fig6(opts)?,
        Preset::Fig8 => fig8(opts)?,
    };
    Ok(Reproduction { preset, csv, verdicts })
}

/// All replicates of one grid point.
#[derive(Debug, Clone)]
pub struct PointRuns {
    pub value: f64,
    pub scenario: Scenario,
    pub t_star: Vec<(UeId, f64)>,
    pub reports: Vec<RunReport>,
}

impl PointRuns {
    /// Mean over replicates of a per-user quantity, skipping absent values.
    pub fn ue_mean(&self, id: UeId, f: impl Fn(&UeSummary) -> Option<f64>) -> Option<f64> {
        mean(self.reports.iter().filter_map(|r| r.ue(id).and_then(&f)))
    }

    pub fn run_mean(&self, f: impl Fn(&RunReport) -> f64) -> f64 {
        mean(self.reports.iter().map(f)).unwrap_or(f64::NAN)
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Sweeps `param` of the reference system and groups replicates by point.
pub fn sweep_points(
    variant: ProblemVariant,
    policy: Policy,
    param: SweepParam,
    values: &[f64],
    opts: ReproduceOptions,
) -> Result<Vec<PointRuns>, Error> {
    let base = reference_scenario(variant);
    let spec = SweepSpec {
        base: RunConfig::new(base.clone(), policy, opts.horizon, opts.seed),
        param,
        target: None,
        values: values.to_vec(),
        replicates: opts.seeds,
        with_lower_bound: false,
    };
    let rows = sim::sweep(&spec)?;
    let mut points: Vec<PointRuns> = Vec::with_capacity(values.len());
    for row in rows {
        let report = match row.outcome {
            SweepOutcome::Ran(r) => r,
            SweepOutcome::Infeasible { load } => return Err(SimError::Infeasible { load }.into()),
            SweepOutcome::Invalid(msg) => return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, msg).into()),
        };
        if points.len() <= row.point {
            let target = base.sole_target(param).expect("reference system has one target");
            points.push(PointRuns {
                value: row.value,
                scenario: base.with_param(target, param, row.value)?,
                t_star: row.t_star,
                reports: Vec::new(),
            });
        }
        points[row.point].reports.push(report);
    }
    Ok(points)
}

/// Lower bound at every point, averaged over the same seeds as the runs.
fn lower_bounds(points: &[PointRuns], horizon: u64) -> Result<Vec<LowerBound>, Error> {
    points
        .par_iter()
        .map(|p| {
            let lbs = p
                .reports
                .iter()
                .map(|r| solver::lower_bound(&p.scenario, horizon, r.seed))
                .collect::<Result<Vec<_>, _>>()?;
            let avg = |f: fn(&LowerBound) -> f64| mean(lbs.iter().map(f)).unwrap_or(f64::NAN);
            Ok(LowerBound { lb_f1: avg(|l| l.lb_f1), lb_f2: avg(|l| l.lb_f2), lb: avg(|l| l.lb) })
        })
        .collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ")
}

#[derive(Serialize)]
struct Fig4Row {
    alpha: f64,
    ue_id: u32,
    throughput: Option<f64>,
    avg_aoi: Option<f64>,
    avg_latency: Option<f64>,
    t_star: Option<f64>,
    lb: f64,
}

fn fig4(opts: ReproduceOptions) -> Result<(String, Vec<Verdict>), Error> {
    let points =
        sweep_points(ProblemVariant::LatencyWeighted, Policy::Hierarchical, SweepParam::Alpha, &ALPHA_GRID, opts)?;
    let lbs = lower_bounds(&points, opts.horizon)?;
    let mut rows = Vec::new();
    for (p, lb) in points.iter().zip(&lbs) {
        for ue in p.scenario.ues() {
            rows.push(Fig4Row {
                alpha: p.value,
                ue_id: ue.id.0,
                throughput: p.ue_mean(ue.id, |u| Some(u.throughput)),
                avg_aoi: p.ue_mean(ue.id, |u| u.avg_aoi),
                avg_latency: p.ue_mean(ue.id, |u| u.avg_latency),
                t_star: p.t_star.iter().find(|(id, _)| *id == ue.id).map(|&(_, t)| t),
                lb: lb.lb,
            });
        }
    }
    Ok((output::csv_string(&rows)?, alpha_sweep_verdicts(&points)))
}

/// Checks on the hierarchical policy's alpha sweep.
pub fn alpha_sweep_verdicts(points: &[PointRuns]) -> Vec<Verdict> {
    let mut out = Vec::new();
    let tp = |p: &PointRuns, id| p.ue_mean(id, |u| Some(u.throughput)).unwrap_or(f64::NAN);

    let r2: Vec<f64> = points.iter().map(|p| tp(p, LATENCY_UE)).collect();
    out.push(Verdict::new(
        "latency user throughput 0.2 +- 0.01 at every alpha",
        r2.iter().all(|r| (r - 0.2).abs() <= 0.01),
        fmt_list(&r2),
    ));

    let r3_ok = points.iter().all(|p| tp(p, THROUGHPUT_UE) >= p.value - 0.01);
    let r3: Vec<f64> = points.iter().map(|p| tp(p, THROUGHPUT_UE)).collect();
    out.push(Verdict::new("throughput user delivers at least alpha - 0.01", r3_ok, fmt_list(&r3)));

    let r1: Vec<f64> = points.iter().map(|p| tp(p, AOI_UE)).collect();
    out.push(Verdict::new(
        "AoI user throughput non-increasing in alpha",
        r1.windows(2).all(|w| w[1] <= w[0] + 0.01),
        fmt_list(&r1),
    ));

    // plateaus: points sharing a counter threshold
    let thresholds: Vec<u64> = points
        .iter()
        .map(|p| {
            let t = p.t_star.iter().find(|(id, _)| *id == AOI_UE).map_or(f64::NAN, |&(_, t)| t);
            solver::hier_threshold(t, 0.9)
        })
        .collect();
    let mut plateau_ok = true;
    let mut detail = Vec::new();
    for (i, &thr) in thresholds.iter().enumerate() {
        if thresholds[..i].contains(&thr) {
            continue;
        }
        let members: Vec<f64> = (0..points.len()).filter(|&j| thresholds[j] == thr).map(|j| r1[j]).collect();
        let spread = members.iter().cloned().fold(f64::MIN, f64::max) - members.iter().cloned().fold(f64::MAX, f64::min);
        plateau_ok &= spread < 0.01;
        detail.push(format!("threshold {thr}: {} points, spread {spread:.4}", members.len()));
    }
    out.push(Verdict::new("AoI user throughput flat where thresholds agree", plateau_ok, detail.join("; ")));

    let share: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let p3 = p.scenario.ue(THROUGHPUT_UE).map_or(1.0, |u| u.p);
            (p.ue_mean(THROUGHPUT_UE, |u| Some(u.attempts_share)).unwrap_or(f64::NAN), p.value / p3 - 0.01)
        })
        .collect();
    out.push(Verdict::new(
        "throughput attempt share at least alpha/p - 0.01",
        share.iter().all(|(s, need)| s >= need),
        share.iter().map(|(s, need)| format!("{s:.4}>={need:.4}")).collect::<Vec<_>>().join(", "),
    ));

    let mut worst: f64 = 0.0;
    for p in points {
        for r in &p.reports {
            for u in &r.per_ue {
                if let (Some(t_bar), true) = (u.t_bar, u.deliveries >= 1000) {
                    worst = worst.max((t_bar - 1.0 / u.throughput).abs() / t_bar);
                }
            }
        }
    }
    out.push(Verdict::new(
        "mean inter-arrival equals 1/throughput within 1%",
        worst < 0.01,
        format!("worst relative gap {worst:.2e}"),
    ));

    let mut worst: f64 = 0.0;
    for p in points {
        for r in &p.reports {
            if let Some(u) = r.ue(AOI_UE) {
                if let (Some(res), Some(aoi)) = (u.aoi_residual, u.avg_aoi) {
                    worst = worst.max(res / aoi);
                }
            }
        }
    }
    out.push(Verdict::new(
        "AoI decomposition residual below 1% of average AoI",
        worst < 0.01,
        format!("worst relative residual {worst:.2e}"),
    ));

    if let Some(p) = points.iter().find(|p| (p.value - 0.2).abs() < 1e-9) {
        out.extend(spacing_verdicts(p));
    }
    out
}

/// Inter-delivery spacing of the AoI user against its target at one point.
pub fn spacing_verdicts(p: &PointRuns) -> Vec<Verdict> {
    let q = p.scenario.ue(AOI_UE).map_or(f64::NAN, |u| u.q());
    let t_star = p.t_star.iter().find(|(id, _)| *id == AOI_UE).map_or(f64::NAN, |&(_, t)| t);
    let t_bar = p.ue_mean(AOI_UE, |u| u.t_bar).unwrap_or(f64::NAN);
    let delta_sq = p.ue_mean(AOI_UE, |u| u.delta_sq).unwrap_or(f64::NAN);
    let predicted_mean = solver::hier_threshold(t_star, q) as f64 + 1.0 / q;
    let predicted_var = solver::spacing_variance(q);
    vec![
        Verdict::new(
            format!("AoI spacing within [T*, T*+1) at alpha {}", p.value),
            t_bar >= t_star && t_bar < t_star + 1.0,
            format!("{t_bar:.4} in [{t_star:.4}, {:.4})", t_star + 1.0),
        ),
        Verdict::new(
            "AoI spacing mean within 2% of threshold + 1/q",
            ((t_bar - predicted_mean) / predicted_mean).abs() <= 0.02,
            format!("{t_bar:.4} vs {predicted_mean:.4}"),
        ),
        Verdict::new(
            "AoI spacing variance within 10% of (1-q)/q^2",
            ((delta_sq - predicted_var) / predicted_var).abs() <= 0.10,
            format!("{delta_sq:.4} vs {predicted_var:.5}"),
        ),
    ]
}

#[derive(Serialize)]
struct Fig5CostRow {
    alpha: f64,
    avg_aoi: Option<f64>,
    avg_latency: Option<f64>,
    cost_objective: f64,
    f1: f64,
    f2: f64,
    lb_f1: f64,
    lb_f2: f64,
    lb: f64,
}

fn fig5_cost(opts: ReproduceOptions) -> Result<(String, Vec<Verdict>), Error> {
    let points =
        sweep_points(ProblemVariant::LatencyWeighted, Policy::Hierarchical, SweepParam::Alpha, &ALPHA_GRID, opts)?;
    let lbs = lower_bounds(&points, opts.horizon)?;
    let rows: Vec<Fig5CostRow> = points
        .iter()
        .zip(&lbs)
        .map(|(p, lb)| Fig5CostRow {
            alpha: p.value,
            avg_aoi: p.ue_mean(AOI_UE, |u| u.avg_aoi),
            avg_latency: p.ue_mean(LATENCY_UE, |u| u.avg_latency),
            cost_objective: p.run_mean(|r| r.cost.cost_objective),
            f1: p.run_mean(|r| r.cost.f1),
            f2: p.run_mean(|r| r.cost.f2),
            lb_f1: lb.lb_f1,
            lb_f2: lb.lb_f2,
            lb: lb.lb,
        })
        .collect();
    let verdicts = cost_verdicts(&rows.iter().map(|r| (r.alpha, r.cost_objective, r.lb)).collect::<Vec<_>>());
    Ok((output::csv_string(&rows)?, verdicts))
}

/// `(alpha, cost, lower bound)` per grid point.
pub fn cost_verdicts(points: &[(f64, f64, f64)]) -> Vec<Verdict> {
    let gap = |cost: f64, lb: f64| (cost - lb) / cost;
    let dominated = points.iter().all(|&(_, cost, lb)| cost >= lb);
    let gaps: Vec<f64> = points.iter().map(|&(_, c, lb)| gap(c, lb)).collect();
    let at = |alpha: f64| points.iter().position(|&(a, ..)| (a - alpha).abs() < 1e-9).map(|i| gaps[i]);
    let trend = match (at(0.1), at(0.6)) {
        (Some(lo), Some(hi)) => Some((hi < lo, format!("gap {lo:.4} at 0.1, {hi:.4} at 0.6"))),
        _ => None,
    };
    let mut out = vec![Verdict::new("cost never below the lower bound", dominated, format!("relative gaps {}", fmt_list(&gaps)))];
    if let Some((pass, detail)) = trend {
        out.push(Verdict::new("relative gap shrinks from alpha 0.1 to 0.6", pass, detail));
    }
    out
}

#[derive(Serialize)]
struct WeightRow {
    beta: f64,
    seed: u64,
    update: u64,
    slot: u64,
    ue_id: u32,
    rho: f64,
    avg_latency: f64,
}

/// Virtual-weight trajectories of the latency user, per seed.
pub fn weight_trajectories(beta: f64, opts: ReproduceOptions, point: usize) -> Result<Vec<RunReport>, Error> {
    let scenario = reference_scenario(ProblemVariant::LatencyConstrained).with_param(LATENCY_UE, SweepParam::Beta, beta)?;
    (0..opts.seeds)
        .into_par_iter()
        .map(|r| {
            let config = RunConfig::new(scenario.clone(), Policy::virtual_weights(), opts.horizon, derive_seed(opts.seed, point, r));
            Ok(sim::run(&config)?)
        })
        .collect()
}

fn fig5_weights(opts: ReproduceOptions) -> Result<(String, Vec<Verdict>), Error> {
    let mut rows = Vec::new();
    let mut traces = Vec::new();
    for (k, &beta) in WEIGHT_TRACE_BETAS.iter().enumerate() {
        let reports = weight_trajectories(beta, opts, k)?;
        for r in &reports {
            for w in r.weight_trace.iter().filter(|w| w.ue == LATENCY_UE) {
                rows.push(WeightRow {
                    beta,
                    seed: r.seed,
                    update: w.update,
                    slot: w.slot,
                    ue_id: w.ue.0,
                    rho: w.rho,
                    avg_latency: w.avg_latency,
                });
            }
        }
        traces.push((beta, reports));
    }
    let mut verdicts = Vec::new();
    for (beta, reports) in &traces {
        let per_seed: Vec<Vec<(f64, f64)>> = reports
            .iter()
            .map(|r| r.weight_trace.iter().filter(|w| w.ue == LATENCY_UE).map(|w| (w.rho, w.avg_latency)).collect())
            .collect();
        if *beta == 1.0 {
            verdicts.extend(growth_verdicts(*beta, &per_seed));
        }
        if *beta == 5.0 {
            verdicts.push(collapse_verdict(*beta, &per_seed));
        }
    }
    Ok((output::csv_string(&rows)?, verdicts))
}

/// Checks on weight trajectories `(rho, avg latency)` for an unattainable cap.
pub fn growth_verdicts(beta: f64, per_seed: &[Vec<(f64, f64)>]) -> Vec<Verdict> {
    let peaks: Vec<f64> = per_seed.iter().map(|t| t.iter().take(200).map(|w| w.0).fold(0.0, f64::max)).collect();
    let updates = per_seed.iter().map(Vec::len).min().unwrap_or(0);
    let monotone = per_seed.iter().all(|t| {
        let start = t.iter().position(|&(_, lat)| lat > beta).unwrap_or(t.len());
        t[start..].windows(2).all(|w| w[1].0 >= w[0].0)
    });
    vec![
        Verdict::new(
            format!("beta {beta}: weight exceeds 50 within 200 updates"),
            updates >= 1 && peaks.iter().all(|&p| p > 50.0),
            format!("peak weight per seed {} over {updates} updates", fmt_list(&peaks)),
        ),
        Verdict::new(
            format!("beta {beta}: weight never decreases once latency exceeds beta"),
            monotone,
            String::new(),
        ),
    ]
}

/// Checks that the weight hits 0 and stays there.
pub fn collapse_verdict(beta: f64, per_seed: &[Vec<(f64, f64)>]) -> Verdict {
    let mut detail = Vec::new();
    let pass = per_seed.iter().all(|t| match t.iter().position(|w| w.0 == 0.0) {
        Some(first) => {
            detail.push(format!("zero from update {}", first + 1));
            t[first..].iter().all(|w| w.0 == 0.0)
        }
        None => {
            detail.push("never zero".to_string());
            false
        }
    });
    Verdict::new(format!("beta {beta}: weight reaches 0 and stays 0"), pass, detail.join(", "))
}

/// Virtual-weight and randomized sweeps over the beta grid.
pub fn beta_sweeps(opts: ReproduceOptions) -> Result<Vec<(Policy, Vec<PointRuns>)>, Error> {
    let grid = beta_grid();
    [Policy::virtual_weights(), Policy::Randomized]
        .into_iter()
        .map(|policy| {
            let points = sweep_points(ProblemVariant::LatencyConstrained, policy, SweepParam::Beta, &grid, opts)?;
            Ok((policy, points))
        })
        .collect()
}

#[derive(Serialize)]
struct Fig6Row {
    policy: &'static str,
    beta: f64,
    ue_id: u32,
    throughput: Option<f64>,
    avg_aoi: Option<f64>,
    avg_latency: Option<f64>,
}

fn fig6(opts: ReproduceOptions) -> Result<(String, Vec<Verdict>), Error> {
    let sweeps = beta_sweeps(opts)?;
    let mut rows = Vec::new();
    for (policy, points) in &sweeps {
        for p in points {
            for ue in p.scenario.ues() {
                rows.push(Fig6Row {
                    policy: policy.name(),
                    beta: p.value,
                    ue_id: ue.id.0,
                    throughput: p.ue_mean(ue.id, |u| Some(u.throughput)),
                    avg_aoi: p.ue_mean(ue.id, |u| u.avg_aoi),
                    avg_latency: p.ue_mean(ue.id, |u| u.avg_latency),
                });
            }
        }
    }
    let rd = &sweeps.iter().find(|(p, _)| *p == Policy::Randomized).expect("randomized sweep").1;
    Ok((output::csv_string(&rows)?, randomized_latency_verdicts(rd)))
}

/// Latency of the randomized policy: on target for attainable caps, at the
/// queueing floor below it.
pub fn randomized_latency_verdicts(points: &[PointRuns]) -> Vec<Verdict> {
    let lat = |p: &PointRuns| p.ue_mean(LATENCY_UE, |u| u.avg_latency).unwrap_or(f64::NAN);
    let on_target: Vec<&PointRuns> = points.iter().filter(|p| p.value >= 1.5).collect();
    let below: Vec<&PointRuns> = points.iter().filter(|p| p.value < LATENCY_FLOOR).collect();
    vec![
        Verdict::new(
            "randomized latency within 5% of beta for beta >= 1.5",
            !on_target.is_empty() && on_target.iter().all(|p| ((lat(p) - p.value) / p.value).abs() <= 0.05),
            on_target.iter().map(|p| format!("{}->{:.4}", p.value, lat(p))).collect::<Vec<_>>().join(", "),
        ),
        Verdict::new(
            "randomized latency at the 4/3 floor (+-3%) for beta < 4/3",
            !below.is_empty() && below.iter().all(|p| ((lat(p) - LATENCY_FLOOR) / LATENCY_FLOOR).abs() <= 0.03),
            below.iter().map(|p| format!("{}->{:.4}", p.value, lat(p))).collect::<Vec<_>>().join(", "),
        ),
    ]
}

#[derive(Serialize)]
struct Fig8Row {
    policy: &'static str,
    beta: Option<f64>,
    ue_id: u32,
    throughput: Option<f64>,
}

fn fig8(opts: ReproduceOptions) -> Result<(String, Vec<Verdict>), Error> {
    let sweeps = beta_sweeps(opts)?;
    let hier = sweep_points(ProblemVariant::LatencyWeighted, Policy::Hierarchical, SweepParam::Alpha, &[0.2], opts)?;
    let mut rows = Vec::new();
    for p in &hier {
        for ue in p.scenario.ues() {
            rows.push(Fig8Row { policy: "hier", beta: None, ue_id: ue.id.0, throughput: p.ue_mean(ue.id, |u| Some(u.throughput)) });
        }
    }
    for (policy, points) in &sweeps {
        for p in points {
            for ue in p.scenario.ues() {
                rows.push(Fig8Row {
                    policy: policy.name(),
                    beta: Some(p.value),
                    ue_id: ue.id.0,
                    throughput: p.ue_mean(ue.id, |u| Some(u.throughput)),
                });
            }
        }
    }
    Ok((output::csv_string(&rows)?, throughput_verdicts(&hier[0], &sweeps)))
}

/// Throughput checks across the beta sweeps, plus the hierarchical run
/// at the same throughput floor.
pub fn throughput_verdicts(hier: &PointRuns, sweeps: &[(Policy, Vec<PointRuns>)]) -> Vec<Verdict> {
    let tp = |p: &PointRuns, id| p.ue_mean(id, |u| Some(u.throughput)).unwrap_or(f64::NAN);
    let mut floor_detail = vec![format!("hier {:.4}", tp(hier, THROUGHPUT_UE))];
    let mut floor_ok = tp(hier, THROUGHPUT_UE) >= 0.19;
    let mut spread_ok = true;
    let mut spread_detail = Vec::new();
    for (policy, points) in sweeps {
        let r3: Vec<f64> = points.iter().map(|p| tp(p, THROUGHPUT_UE)).collect();
        floor_ok &= r3.iter().all(|&r| r >= 0.19);
        floor_detail.push(format!("{} min {:.4}", policy.name(), r3.iter().cloned().fold(f64::MAX, f64::min)));
        for ue in hier.scenario.ues() {
            let xs: Vec<f64> = points.iter().map(|p| tp(p, ue.id)).collect();
            let spread = xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
            spread_ok &= spread < 0.01;
            spread_detail.push(format!("{} ue {} {spread:.4}", policy.name(), ue.id));
        }
    }
    let mut agree_ok = true;
    let mut worst: f64 = 0.0;
    if let [(_, a), (_, b)] = sweeps {
        for (pa, pb) in a.iter().zip(b) {
            for ue in hier.scenario.ues() {
                let d = (tp(pa, ue.id) - tp(pb, ue.id)).abs();
                worst = worst.max(d);
                agree_ok &= d <= 0.01;
            }
        }
    }
    vec![
        Verdict::new("throughput user at least 0.19 under every policy and beta", floor_ok, floor_detail.join(", ")),
        Verdict::new("per-user throughput spread across beta below 0.01", spread_ok, spread_detail.join(", ")),
        Verdict::new("policies agree on per-user throughput within 0.01", agree_ok, format!("max difference {worst:.4}")),
    ]
}
