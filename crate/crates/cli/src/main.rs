use std::fs;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use resched_core::engine::{run_until_stable, FulfillmentMode, RunResult};
use resched_core::metrics::{compute_kpis, sweep, write_csv, KpiReport, SweepConfig, SweepGrid, SweepSource};
use resched_core::model::{DisruptionEvent, DisruptionKind};
use resched_core::scenario::{generate_scenario, load_scenario, GeneratorParams, ScenarioFile};
use resched_core::solver::{
    oracle, solve_all_or_nothing, solve_capacity, solve_consolidation, solve_partial, AllocationProblem, Mode,
    ReductionProblem, WeightConfig,
};
use serde_json::json;

/// Multi-agent production rescheduling simulator.
#[derive(Parser)]
#[command(name = "resched", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario.
    Gen(GenCmd),
    /// Apply disruptions to a scenario and negotiate until stable.
    Run(RunCmd),
    /// Run a grid of disruptions and report KPIs per cell.
    Sweep(SweepCmd),
    /// Solve one local allocation or consolidation problem read as JSON.
    Solve(SolveCmd),
    /// Serve the session API.
    Serve(ServeCmd),
}

/// Network shape shared by `gen` and `sweep`.
#[derive(Args, Clone)]
struct ShapeArgs {
    /// Number of independent product groups.
    #[arg(long, default_value_t = 5)]
    boms: usize,
    /// Shallowest BOM depth in levels.
    #[arg(long, default_value_t = 2)]
    depth_min: u32,
    /// Deepest BOM depth in levels.
    #[arg(long, default_value_t = 7)]
    depth_max: u32,
    /// Total material agents.
    #[arg(long, default_value_t = 39)]
    materials: usize,
    /// Total capacity packages.
    #[arg(long, default_value_t = 18)]
    capacities: usize,
    /// Exact number of finished-good orders (default: drawn from --density).
    #[arg(long)]
    orders: Option<usize>,
    /// Chance that a finished good has an order on a given day.
    #[arg(long, default_value_t = 0.5)]
    density: f64,
    /// Planning horizon in days.
    #[arg(long, default_value_t = 14)]
    horizon: u32,
    /// Capacity above the baseline peak load, as a fraction.
    #[arg(long, default_value_t = 0.1)]
    headroom: f64,
    /// Days between raw-material deliveries.
    #[arg(long, default_value_t = 3)]
    rm_interval: u32,
}

impl ShapeArgs {
    fn params(&self, seed: u64, doh: f64) -> GeneratorParams {
        GeneratorParams {
            boms: self.boms,
            depth_min: self.depth_min,
            depth_max: self.depth_max,
            materials: self.materials,
            capacities: self.capacities,
            days_on_hand: doh,
            order_density: self.density,
            orders: self.orders,
            horizon_days: self.horizon,
            seed,
            capacity_headroom: self.headroom,
            rm_delivery_interval: self.rm_interval,
        }
    }
}

#[derive(Args)]
struct GenCmd {
    #[command(flatten)]
    shape: ShapeArgs,
    /// Inventory buffer in days of average consumption.
    #[arg(long, default_value_t = 6.7)]
    doh: f64,
    /// Generator seed; the same seed always gives the same file
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EngineArgs {
    /// Fulfillment rule: partial or all-or-nothing.
    #[arg(long)]
    mode: Option<FulfillmentMode>,
    /// Safety bound on negotiation rounds.
    #[arg(long)]
    max_iterations: Option<u32>,
}

#[derive(Args)]
struct RunCmd {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: PathBuf,
    /// Extra disruption as kind:target:start:duration[:qty], e.g. rm-delay:RM1:4:2.
    #[arg(long = "event")]
    events: Vec<DisruptionEvent>,
    #[command(flatten)]
    engine: EngineArgs,
    /// Strip production left without downstream demand after stabilizing.
    #[arg(long)]
    inventory_reduction: bool,
    /// Evaluate agents within a phase on all cores (same result).
    #[arg(long)]
    parallel: bool,
    /// Directory for result.json, kpis.json, world.json and trace.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    /// Sweep a fixed scenario instead of generated ones.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Disruption kinds: `all` or a comma list of line_stoppage, raw_material_delay, sfg_quarantine.
    #[arg(long, default_value = "all", value_parser = parse_kinds)]
    kinds: Kinds,
    /// Disruption durations in days.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
    durations: Vec<u32>,
    /// Days-on-hand levels.
    #[arg(long, value_delimiter = ',', default_value = "6.7")]
    doh: Vec<f64>,
    /// Generator seeds; each one is a separate network.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// First disrupted day.
    #[arg(long, default_value_t = 1)]
    start_day: u32,
    #[command(flatten)]
    engine: EngineArgs,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output file (default: stdout). CSV unless --json is given.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone)]
struct Kinds(Vec<DisruptionKind>);

fn parse_kinds(s: &str) -> Result<Kinds, String> {
    if s == "all" {
        return Ok(Kinds(DisruptionKind::ALL.to_vec()));
    }
    s.split(',').map(|k| k.trim().parse().map_err(|e: resched_core::ModelError| e.to_string())).collect::<Result<_, _>>().map(Kinds)
}

#[derive(Args)]
struct SolveCmd {
    /// partial, all-or-nothing, capacity or consolidation (default: the problem's own mode).
    #[arg(long)]
    mode: Option<String>,
    /// Problem file (default: stdin).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Weight configuration JSON for partial and all-or-nothing problems.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Also run the exhaustive oracle and report whether the objectives agree.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct ServeCmd {
    /// TCP port to listen on
    #[arg(long, env = "RESCHED_PORT", default_value_t = 8080)]
    port: u16,
    /// Address to bind
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Directory with the built console bundle.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
    /// Shared bearer token required on session routes.
    #[arg(long, env = "RESCHED_TOKEN", hide_env_values = true)]
    token: Option<String>,
}

/// Exit codes: 0 done, 1 bad input or failure, 2 a run did not stabilize.
fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors are input errors; 2 is reserved for non-convergence
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Gen(c) => gen(c, cli.json),
        Command::Run(c) => run(c, cli.json),
        Command::Sweep(c) => run_sweep(c, cli.json),
        Command::Solve(c) => solve(c),
        Command::Serve(c) => serve(c),
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(out.flush()?)
        }
    }
}

fn gen(c: &GenCmd, json: bool) -> Result<bool> {
    let file = generate_scenario(&c.shape.params(c.seed, c.doh))?;
    let text = file.to_canonical_json() + "\n";
    write_or_print(c.out.as_deref(), &text)?;
    if let Some(path) = &c.out {
        let summary = json!({
            "path": path,
            "materials": file.materials.len(),
            "capacities": file.capacities.len(),
            "orders": file.orders.len(),
            "days_on_hand": file.days_on_hand(),
        });
        if json {
            println!("{summary}");
        } else {
            println!(
                "wrote {}: {} materials, {} capacity packages, {} orders, {:.2} days on hand",
                path.display(),
                file.materials.len(),
                file.capacities.len(),
                file.orders.len(),
                file.days_on_hand()
            );
        }
    }
    Ok(true)
}

fn run(c: &RunCmd, json: bool) -> Result<bool> {
    let bytes = fs::read(&c.scenario).with_context(|| format!("reading {}", c.scenario.display()))?;
    let loaded = load_scenario(&bytes).with_context(|| format!("loading {}", c.scenario.display()))?;
    let mut config = loaded.config.clone();
    if let Some(m) = c.engine.mode {
        config.fulfillment_mode = m;
    }
    if let Some(n) = c.engine.max_iterations {
        config.max_iterations = n;
    }
    config.inventory_reduction_enabled |= c.inventory_reduction;
    config.deterministic_order &= !c.parallel;
    let mut events = loaded.events.clone();
    events.extend(c.events.iter().cloned());

    let result = run_until_stable(&loaded.world, &events, &config)?;
    let kpis = compute_kpis(&loaded.world, &result)?;
    let summary = json!({
        "stabilized": result.stabilized,
        "iterations": result.iterations_used,
        "events": events,
        "rounds": result.rounds,
        "affected": result.affected,
        "kpis": kpis,
    });
    if let Some(dir) = &c.out {
        write_run(dir, &result, &kpis, &summary)?;
    }
    if json {
        println!("{}", resched_core::canonical_json(&summary));
    } else {
        print_run(&result, &kpis);
    }
    Ok(result.stabilized)
}

fn write_run(dir: &Path, result: &RunResult, kpis: &KpiReport, summary: &serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let put = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    };
    put("result.json", resched_core::canonical_json(summary) + "\n")?;
    put("kpis.json", resched_core::canonical_json(kpis) + "\n")?;
    put("world.json", result.world.canonical_json() + "\n")?;
    put("trace.jsonl", result.trace_jsonl())
}

fn print_run(result: &RunResult, k: &KpiReport) {
    let state = if result.stabilized { "stabilized" } else { "did not stabilize" };
    println!("{state} after {} iteration(s)", result.iterations_used);
    println!(
        "rescheduled: {} material agents, {} capacity agents, {} finished goods",
        k.rescheduled_material_agents, k.rescheduled_capacity_agents, k.rescheduled_finished_goods
    );
    println!(
        "fulfillment: {:.3} by orders, {:.3} by volume; max delay {} day(s)",
        k.fg_fulfillment_by_orders, k.fg_fulfillment_by_volume, k.max_delay_days
    );
}

fn run_sweep(c: &SweepCmd, json: bool) -> Result<bool> {
    let source = match &c.scenario {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            SweepSource::Fixed(ScenarioFile::parse(&bytes)?)
        }
        None => SweepSource::Generated(c.shape.params(0, 0.0)),
    };
    let defaults = SweepConfig::default();
    let config = SweepConfig {
        source,
        start_day: c.start_day,
        fulfillment_mode: c.engine.mode.unwrap_or(defaults.fulfillment_mode),
        max_iterations: c.engine.max_iterations.unwrap_or(defaults.max_iterations),
        jobs: c.jobs,
    };
    let grid = SweepGrid { kinds: c.kinds.0.clone(), durations: c.durations.clone(), days_on_hand: c.doh.clone(), seeds: c.seeds.clone() };
    if grid.kinds.is_empty() || grid.durations.is_empty() || grid.days_on_hand.is_empty() || grid.seeds.is_empty() {
        bail!("every grid axis needs at least one value");
    }
    let report = sweep(&grid, &config);
    let text = if json {
        resched_core::canonical_json(&report) + "\n"
    } else {
        let mut buf = Vec::new();
        write_csv(&report, &mut buf)?;
        String::from_utf8(buf)?
    };
    write_or_print(c.out.as_deref(), &text)?;
    for row in &report.rows {
        if let Some(e) = &row.error {
            eprintln!("warning: {} {} days (seed {}): {e}", row.disruption_type, row.disruption_duration, row.seed);
        }
    }
    Ok(report.rows.iter().all(|r| r.stabilized))
}

fn solve(c: &SolveCmd) -> Result<bool> {
    let text = match &c.input {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    let out = if c.mode.as_deref() == Some("consolidation") {
        let problem: ReductionProblem = serde_json::from_str(&text).context("parsing reduction problem")?;
        let plan = solve_consolidation(&problem)?;
        let mut out = json!({ "plan": plan });
        if c.check {
            let best = oracle::reduction(&problem, oracle::DEFAULT_BOUND)?;
            out["oracle_objective"] = best.objective.into();
            out["matches_oracle"] = (best.objective == plan.objective).into();
        }
        out
    } else {
        // either a bare problem or {"problem": ..., "weights": ...}
        let mut value: serde_json::Value = serde_json::from_str(&text).context("parsing allocation problem")?;
        let (problem, weights) = match value.get_mut("problem") {
            Some(p) => (p.take(), value.get_mut("weights").map(serde_json::Value::take)),
            None => (value, None),
        };
        let mut problem: AllocationProblem = serde_json::from_value(problem).context("parsing allocation problem")?;
        let mut weights: WeightConfig = match weights {
            Some(w) => serde_json::from_value(w).context("parsing weights")?,
            None => WeightConfig::default(),
        };
        if let Some(path) = &c.weights {
            let w = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            weights = serde_json::from_str(&w).context("parsing weights")?;
        }
        if let Some(m) = &c.mode {
            problem.mode = match m.as_str() {
                "partial" => Mode::Partial,
                "all-or-nothing" | "all_or_nothing" => Mode::AllOrNothing,
                "capacity" => Mode::Capacity,
                other => bail!("unknown mode `{other}`"),
            };
        }
        let allocation = match problem.mode {
            Mode::Partial => solve_partial(&problem, &weights)?,
            Mode::AllOrNothing => solve_all_or_nothing(&problem, &weights)?,
            Mode::Capacity => solve_capacity(&problem)?,
        };
        let mut out = json!({ "mode": problem.mode, "allocation": allocation });
        if c.check {
            let best = oracle::allocation(&problem, &weights, oracle::DEFAULT_BOUND)?;
            out["oracle_objective"] = best.objective.into();
            out["matches_oracle"] = (best.objective == allocation.objective).into();
        }
        out
    };
    println!("{}", resched_core::canonical_json(&out));
    Ok(true)
}

fn serve(c: &ServeCmd) -> Result<bool> {
    let addr = SocketAddr::new(c.host, c.port);
    let config = resched_server::ServerConfig { static_dir: c.static_dir.clone(), token: c.token.clone() };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(resched_server::serve(addr, config)).with_context(|| format!("serving on {addr}"))?;
    Ok(true)
}
