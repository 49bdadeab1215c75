//! CSV output and the markdown summary built from it.
//!
//! Run CSVs have one row per user and one `summary` row per run, in this
//! column order:
//!
//! ```text
//! run_id,policy,seed,horizon,ue_id,class,avg_aoi,avg_latency,throughput,
//! t_bar,delta_sq,attempts_share,cost_objective,f1,f2,lb,param,value
//! ```
//!
//! User rows leave the cost columns empty; summary rows leave the user
//! columns empty and carry `class = summary`. Sweep points that are
//! infeasible produce a single row with `class = infeasible`. Absent values
//! are empty cells.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use serde::{Deserialize, Serialize};

use crate::metrics::RunReport;
use crate::model::SweepParam;
use crate::sim::{SweepOutcome, SweepRow};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RunRow {
    pub run_id: String,
    pub policy: String,
    pub seed: Option<u64>,
    pub horizon: Option<u64>,
    pub ue_id: Option<u32>,
    pub class: String,
    pub avg_aoi: Option<f64>,
    pub avg_latency: Option<f64>,
    pub throughput: Option<f64>,
    pub t_bar: Option<f64>,
    pub delta_sq: Option<f64>,
    pub attempts_share: Option<f64>,
    pub cost_objective: Option<f64>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub lb: Option<f64>,
    pub param: String,
    pub value: Option<f64>,
}

/// Rows for one run: its users followed by the summary row.
pub fn run_rows(run_id: &str, report: &RunReport, point: Option<(SweepParam, f64)>) -> Vec<RunRow> {
    let (param, value) = match point {
        Some((p, v)) => (p.as_str().to_string(), Some(v)),
        None => (String::new(), None),
    };
    let base = RunRow {
        run_id: run_id.to_string(),
        policy: report.policy.clone(),
        seed: Some(report.seed),
        horizon: Some(report.horizon),
        param,
        value,
        ..RunRow::default()
    };
    let mut rows: Vec<RunRow> = report
        .per_ue
        .iter()
        .map(|u| RunRow {
            ue_id: Some(u.id.0),
            class: u.class.as_str().to_string(),
            avg_aoi: u.avg_aoi,
            avg_latency: u.avg_latency,
            throughput: Some(u.throughput),
            t_bar: u.t_bar,
            delta_sq: u.delta_sq,
            attempts_share: Some(u.attempts_share),
            ..base.clone()
        })
        .collect();
    rows.push(RunRow {
        class: "summary".to_string(),
        cost_objective: Some(report.cost.cost_objective),
        f1: Some(report.cost.f1),
        f2: Some(report.cost.f2),
        lb: report.lb,
        ..base
    });
    rows
}

/// Rows for a whole sweep, in sweep order.
pub fn sweep_rows(rows: &[SweepRow], param: SweepParam, policy: &str, horizon: u64) -> Vec<RunRow> {
    let mut out = Vec::new();
    for row in rows {
        let run_id = format!("p{}r{}", row.point, row.replicate);
        match &row.outcome {
            SweepOutcome::Ran(report) => out.extend(run_rows(&run_id, report, Some((param, row.value)))),
            SweepOutcome::Infeasible { .. } | SweepOutcome::Invalid(_) => out.push(RunRow {
                run_id,
                policy: policy.to_string(),
                seed: Some(row.seed),
                horizon: Some(horizon),
                class: "infeasible".to_string(),
                param: param.as_str().to_string(),
                value: Some(row.value),
                ..RunRow::default()
            }),
        }
    }
    out
}

/// Writes any serializable rows as CSV with a header line.
pub fn write_csv<W: io::Write, R: Serialize>(writer: W, rows: &[R]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<R: Serialize>(rows: &[R]) -> Result<String, csv::Error> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

// columns that identify a group rather than measure something
const KEY_COLUMNS: [&str; 8] = ["policy", "param", "value", "alpha", "beta", "update", "ue_id", "class"];
const IGNORED_COLUMNS: [&str; 4] = ["run_id", "seed", "horizon", "slot"];

struct Group {
    key: Vec<String>,
    sums: Vec<f64>,
    counts: Vec<u64>,
}

impl Group {
    fn mean(&self, i: usize) -> Option<f64> {
        (self.counts[i] > 0).then(|| self.sums[i] / self.counts[i] as f64)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

/// Builds a markdown summary of any CSV written by this tool: per-group
/// means of every numeric column, and how much each user's throughput moves
/// across the swept parameter.
pub fn report(csv_text: &str) -> Result<String, csv::Error> {
    let mut out = String::from("# Summary\n\n");
    if csv_text.trim().is_empty() {
        out.push_str("No rows.\n");
        return Ok(out);
    }
    let mut reader = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let keys: Vec<(usize, &str)> = KEY_COLUMNS.iter().filter_map(|&k| col(k).map(|i| (i, k))).collect();
    let metrics: Vec<(usize, &str)> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| !KEY_COLUMNS.contains(h) && !IGNORED_COLUMNS.contains(h))
        .collect();

    let mut groups: Vec<Group> = Vec::new();
    let mut index: HashMap<Vec<String>, usize> = HashMap::new();
    let mut infeasible: Vec<String> = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record?;
        rows += 1;
        let key: Vec<String> = keys.iter().map(|&(i, _)| record.get(i).unwrap_or("").to_string()).collect();
        if col("class").and_then(|i| record.get(i)) == Some("infeasible") {
            infeasible.push(key.iter().filter(|k| !k.is_empty()).cloned().collect::<Vec<_>>().join(" "));
            continue;
        }
        let g = *index.entry(key.clone()).or_insert_with(|| {
            groups.push(Group { key, sums: vec![0.0; metrics.len()], counts: vec![0; metrics.len()] });
            groups.len() - 1
        });
        for (m, &(i, name)) in metrics.iter().enumerate() {
            let cell = record.get(i).unwrap_or("").trim();
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                csv::Error::from(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("row {rows}: column `{name}` holds non-numeric value `{cell}`"),
                ))
            })?;
            groups[g].sums[m] += v;
            groups[g].counts[m] += 1;
        }
    }
    let _ = writeln!(out, "{rows} rows, {} groups.\n", groups.len());
    if groups.is_empty() && infeasible.is_empty() {
        return Ok(out);
    }

    // only show metric columns that hold at least one value
    let shown: Vec<usize> = (0..metrics.len()).filter(|&m| groups.iter().any(|g| g.counts[m] > 0)).collect();
    if !groups.is_empty() {
        out.push_str("## Means\n\n|");
        for &(_, k) in &keys {
            let _ = write!(out, " {k} |");
        }
        for &m in &shown {
            let _ = write!(out, " {} |", metrics[m].1);
        }
        out.push_str("\n|");
        for _ in 0..keys.len() + shown.len() {
            out.push_str("---|");
        }
        out.push('\n');
        for g in &groups {
            out.push('|');
            for k in &g.key {
                let _ = write!(out, " {} |", if k.is_empty() { "-" } else { k });
            }
            for &m in &shown {
                let _ = write!(out, " {} |", fmt_opt(g.mean(m)));
            }
            out.push('\n');
        }
    }
    if !infeasible.is_empty() {
        out.push_str("\n## Infeasible points\n\n");
        for p in &infeasible {
            let _ = writeln!(out, "- {p}");
        }
    }
    throughput_verdicts(&mut out, &keys, &metrics, &groups);
    Ok(out)
}

/// Spread of each user's mean throughput across the swept parameter.
fn throughput_verdicts(out: &mut String, keys: &[(usize, &str)], metrics: &[(usize, &str)], groups: &[Group]) {
    let Some(tp) = metrics.iter().position(|&(_, n)| n == "throughput") else { return };
    let key_pos = |name: &str| keys.iter().position(|&(_, k)| k == name);
    let (Some(ue_pos), Some(sweep_pos)) = (key_pos("ue_id"), key_pos("value").or(key_pos("alpha")).or(key_pos("beta"))) else {
        return;
    };
    let sweep_name = match keys[sweep_pos].1 {
        "value" => key_pos("param")
            .and_then(|p| groups.iter().map(|g| g.key[p].clone()).find(|s| !s.is_empty()))
            .unwrap_or_else(|| "value".to_string()),
        other => other.to_string(),
    };
    let policy_pos = key_pos("policy");

    // (policy, ue) -> (min, max, points)
    let mut spreads: Vec<((String, String), f64, f64, usize)> = Vec::new();
    for g in groups {
        let ue = &g.key[ue_pos];
        if ue.is_empty() {
            continue;
        }
        let Some(v) = g.mean(tp) else { continue };
        let policy = policy_pos.map(|p| g.key[p].clone()).unwrap_or_default();
        let id = (policy, ue.clone());
        match spreads.iter_mut().find(|(k, ..)| *k == id) {
            Some((_, lo, hi, n)) => {
                *lo = lo.min(v);
                *hi = hi.max(v);
                *n += 1;
            }
            None => spreads.push((id, v, v, 1)),
        }
    }
    if spreads.is_empty() {
        return;
    }
    let _ = writeln!(out, "\n## Throughput across {sweep_name}\n");
    let mut worst: f64 = 0.0;
    for ((policy, ue), lo, hi, n) in &spreads {
        let spread = hi - lo;
        worst = worst.max(spread);
        let label = if policy.is_empty() { format!("ue {ue}") } else { format!("{policy}, ue {ue}") };
        let verdict = if spread < 0.01 { "flat" } else { "varies" };
        let _ = writeln!(out, "- {label}: spread {spread:.4} over {n} points ({verdict})");
    }
    if sweep_name == "beta" {
        let verdict = if worst < 0.01 { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "\nThroughput independent of beta (max spread {worst:.4} < 0.01): {verdict}");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{three_ue_system, ProblemVariant};
    use crate::sim::{run, Policy, RunConfig};

    fn sample_report(alpha: f64) -> RunReport {
        let s = three_ue_system(ProblemVariant::LatencyWeighted, alpha, None);
        run(&RunConfig::new(s, Policy::Hierarchical, 2_000, 4)).unwrap()
    }

    #[test]
    fn header_order_is_fixed() {
        let text = csv_string(&run_rows("r0", &sample_report(0.2), None)).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(
            header,
            "run_id,policy,seed,horizon,ue_id,class,avg_aoi,avg_latency,throughput,t_bar,delta_sq,\
             attempts_share,cost_objective,f1,f2,lb,param,value"
        );
        assert_eq!(text.lines().count(), 1 + 3 + 1);
        assert!(text.lines().last().unwrap().contains(",summary,"));
    }

    #[test]
    fn rows_read_back() {
        let rows = run_rows("r0", &sample_report(0.3), Some((SweepParam::Alpha, 0.3)));
        let text = csv_string(&rows).unwrap();
        let back: Vec<RunRow> =
            csv::Reader::from_reader(text.as_bytes()).deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_input_gives_valid_summary() {
        assert_eq!(report("").unwrap(), "# Summary\n\nNo rows.\n");
        let header_only = "run_id,policy,seed,horizon,ue_id,class,avg_aoi\n";
        let md = report(header_only).unwrap();
        assert!(md.contains("0 rows"));
    }

    #[test]
    fn report_flags_flat_and_varying_throughput() {
        let mut rows = Vec::new();
        for (k, alpha) in [0.2, 0.3, 0.4].into_iter().enumerate() {
            rows.extend(run_rows(&format!("r{k}"), &sample_report(alpha), Some((SweepParam::Alpha, alpha))));
        }
        let md = report(&csv_string(&rows).unwrap()).unwrap();
        assert!(md.contains("## Throughput across alpha"), "{md}");
        assert!(md.contains("hier, ue 3"), "{md}");
        assert!(md.contains("varies"), "{md}");
        assert!(!md.contains("independent of beta"));
    }

    #[test]
    fn report_handles_preset_shaped_csv() {
        let text = "policy,beta,ue_id,throughput\nvw,1.5,1,0.32\nvw,2,1,0.321\nvw,1.5,3,0.26\nvw,2,3,0.262\n";
        let md = report(text).unwrap();
        assert!(md.contains("vw, ue 1: spread 0.0010"), "{md}");
        assert!(md.contains("independent of beta (max spread 0.0020 < 0.01): PASS"), "{md}");
    }

    #[test]
    fn malformed_csv_is_an_error() {
        assert!(report("a,throughput\n1,abc\n").is_err());
        assert!(report("a,b\n1,2,3\n").is_err());
    }

    #[test]
    fn infeasible_rows_are_listed() {
        let rows = vec![RunRow {
            run_id: "p0r0".into(),
            policy: "hier".into(),
            class: "infeasible".into(),
            param: "alpha".into(),
            value: Some(0.7),
            ..RunRow::default()
        }];
        let md = report(&csv_string(&rows).unwrap()).unwrap();
        assert!(md.contains("## Infeasible points"), "{md}");
        assert!(md.contains("hier alpha 0.7"), "{md}");
    }
}
