use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use aoisched::model::{SweepParam, UeId};
use aoisched::output::{self, run_rows, sweep_rows};
use aoisched::presets::{self, Preset, ReproduceOptions};
use aoisched::scenario_file::parse_scenario;
use aoisched::sim::{self, Policy, RunConfig, SweepSpec};
use aoisched::solver;

#[derive(Parser)]
#[command(name = "aoisched", version, about = "Simulate downlink schedulers for AoI, latency and throughput users")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and report its load and feasibility
    Validate { scenario: PathBuf },
    /// Print target AoI spacings and counter thresholds as CSV
    Tstar {
        scenario: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the cost lower bound as CSV
    Lb {
        scenario: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one run
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate a grid of alpha or beta values
    Sweep {
        scenario: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
        /// Base seed; each run derives its own from it
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        param: SweepParam,
        /// Inclusive range `start:stop:step`
        #[arg(long, value_parser = parse_grid)]
        grid: Grid,
        /// User whose parameter is swept (default: the only one that has it)
        #[arg(long)]
        ue: Option<u32>,
        /// Also compute the lower bound for every run
        #[arg(long)]
        lb: bool,
    },
    /// Re-run a built-in experiment and check its outcome
    Reproduce {
        #[arg(value_parser = parse_preset)]
        preset: Preset,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a CSV written by this tool as markdown
    Report { csv: PathBuf },
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value_t = PolicyArg::Hier)]
    policy: PolicyArg,
    /// Slots between virtual-weight updates
    #[arg(long, default_value_t = sim::DEFAULT_VW_PERIOD)]
    f: u64,
    /// Virtual-weight step size
    #[arg(long, default_value_t = sim::DEFAULT_VW_STEP)]
    eta: f64,
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Slots excluded from AoI and latency averages
    #[arg(long, default_value_t = 0)]
    warmup: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Hier,
    Vw,
    Rd,
    Cmu,
}

impl SimArgs {
    fn policy(&self) -> Policy {
        match self.policy {
            PolicyArg::Hier => Policy::Hierarchical,
            PolicyArg::Vw => Policy::VirtualWeights { period: self.f, step: self.eta },
            PolicyArg::Rd => Policy::Randomized,
            PolicyArg::Cmu => Policy::CMu,
        }
    }
}

#[derive(Clone)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("`{p}` is not a number")))
        .collect::<Result<Vec<_>, _>>()?;
    match nums[..] {
        [v] => Ok(Grid(vec![v])),
        [start, stop, step] if step > 0.0 && stop >= start => Ok(Grid(sim::grid(start, stop, step))),
        _ => Err("expected `start:stop:step` with step > 0 and stop >= start".to_string()),
    }
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    Preset::parse(s).ok_or_else(|| {
        let names: Vec<_> = Preset::ALL.iter().map(|p| p.name()).collect();
        format!("unknown preset `{s}` (expected one of {})", names.join(", "))
    })
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => fs::write(path, text),
        None => io::stdout().write_all(text.as_bytes()),
    }
}

#[derive(Serialize)]
struct TStarRow {
    ue_id: u32,
    t_star: f64,
    threshold: u64,
    mu: f64,
    binding: bool,
}

#[derive(Serialize)]
struct LbRow {
    lb_f1: f64,
    lb_f2: f64,
    lb: f64,
}

fn execute(cli: Cli) -> Result<ExitCode, aoisched::Error> {
    match cli.command {
        Command::Validate { scenario } => {
            let s = parse_scenario(&scenario)?;
            let r = s.validate();
            println!("users: {}", s.ues().len());
            println!("variant: {}", s.variant().as_str());
            println!("load: {:.6}", r.load);
            println!("zeta: {:.6}", r.zeta);
            println!("feasible: {}", r.feasible);
            if let (Some(sum), Some(ok)) = (r.theta_sum, r.rd_feasible) {
                println!("theta_sum: {sum:.6}");
                println!("randomized_feasible: {ok}");
            }
        }
        Command::Tstar { scenario, out } => {
            let s = parse_scenario(&scenario)?;
            let sol = solver::compute_t_star(&s)?;
            let rows: Vec<TStarRow> = sol
                .t_star
                .iter()
                .map(|&(id, t)| TStarRow {
                    ue_id: id.0,
                    t_star: t,
                    threshold: solver::hier_threshold(t, s.ue(id).map_or(1.0, |u| u.q())),
                    mu: sol.mu,
                    binding: sol.binding,
                })
                .collect();
            emit(out.as_deref(), &output::csv_string(&rows)?)?;
        }
        Command::Lb { scenario, horizon, seed, out } => {
            let s = parse_scenario(&scenario)?;
            let lb = solver::lower_bound(&s, horizon, seed)?;
            emit(out.as_deref(), &output::csv_string(&[LbRow { lb_f1: lb.lb_f1, lb_f2: lb.lb_f2, lb: lb.lb }])?)?;
        }
        Command::Run { scenario, sim: args, seed } => {
            let s = parse_scenario(&scenario)?;
            let config = RunConfig { scenario: s, policy: args.policy(), horizon: args.horizon, seed, warmup: args.warmup };
            let report = sim::run(&config)?;
            emit(args.out.as_deref(), &output::csv_string(&run_rows("r0", &report, None))?)?;
        }
        Command::Sweep { scenario, sim: args, seed, seeds, param, grid, ue, lb } => {
            let s = parse_scenario(&scenario)?;
            let policy = args.policy();
            let spec = SweepSpec {
                base: RunConfig { scenario: s, policy, horizon: args.horizon, seed, warmup: args.warmup },
                param,
                target: ue.map(UeId),
                values: grid.0,
                replicates: seeds,
                with_lower_bound: lb,
            };
            let rows = sim::sweep(&spec)?;
            let csv = output::csv_string(&sweep_rows(&rows, param, policy.name(), args.horizon))?;
            emit(args.out.as_deref(), &csv)?;
        }
        Command::Reproduce { preset, seed, horizon, seeds, out } => {
            let opts = ReproduceOptions { seed, horizon: horizon.unwrap_or(preset.default_horizon()), seeds };
            let result = presets::reproduce(preset, opts)?;
            match &out {
                Some(path) => {
                    fs::write(path, &result.csv)?;
                    print!("{}", result.summary());
                }
                None => {
                    print!("{}", result.csv);
                    eprint!("{}", result.summary());
                }
            }
            if !result.passed() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report { csv } => {
            let text = fs::read_to_string(&csv)?;
            print!("{}", output::report(&text)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
