use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compute_kpis, KpiReport};
use crate::engine::{run_until_stable, EngineConfig, FulfillmentMode, RunResult};
use crate::error::EngineError;
use crate::model::{DisruptionEvent, DisruptionKind, World};
use crate::scenario::{generate_scenario, sweep_targets, GeneratorParams, ScenarioFile, SweepTarget};

pub const CSV_HEADER: [&str; 13] = [
    "disruption_type",
    "days_on_hand",
    "disruption_duration",
    "seed",
    "iterations",
    "rescheduled_material_agents",
    "rescheduled_capacity_agents",
    "rescheduled_fgs",
    "fg_fulfillment_by_orders",
    "fg_fulfillment_by_volume",
    "max_delay_days",
    "stabilized",
    "error",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub kinds: Vec<DisruptionKind>,
    pub durations: Vec<u32>,
    pub days_on_hand: Vec<f64>,
    pub seeds: Vec<u64>,
}

impl Default for SweepGrid {
    fn default() -> Self {
        SweepGrid {
            kinds: DisruptionKind::ALL.to_vec(),
            durations: vec![1, 3, 5, 7, 9],
            days_on_hand: vec![6.7],
            seeds: vec![0],
        }
    }
}

/// Where the networks of a sweep come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSource {
    /// A fresh network per seed; the grid's days-on-hand replace the
    /// generator's.
    Generated(GeneratorParams),
    /// One network re-buffered per days-on-hand level; seeds only label rows.
    Fixed(ScenarioFile),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub source: SweepSource,
    /// First disrupted day.
    pub start_day: u32,
    pub fulfillment_mode: FulfillmentMode,
    pub max_iterations: u32,
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            source: SweepSource::Generated(GeneratorParams::default()),
            start_day: 1,
            fulfillment_mode: FulfillmentMode::Partial,
            max_iterations: EngineConfig::default().max_iterations,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub disruption_type: DisruptionKind,
    pub days_on_hand: f64,
    pub disruption_duration: u32,
    pub seed: u64,
    pub stabilized: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kpis: Option<KpiReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Averages over the seeds of one grid cell. Rows that failed are left out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMean {
    pub disruption_type: DisruptionKind,
    pub days_on_hand: f64,
    pub disruption_duration: u32,
    pub runs: usize,
    pub iterations: f64,
    pub rescheduled_material_agents: f64,
    pub rescheduled_capacity_agents: f64,
    pub rescheduled_fgs: f64,
    pub fg_fulfillment_by_orders: f64,
    pub fg_fulfillment_by_volume: f64,
    pub max_delay_days: f64,
    /// Every seed stabilized.
    pub stabilized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub means: Vec<SweepMean>,
}

/// One disruption per product group, all starting on `start`.
pub fn cell_events(targets: &[SweepTarget], kind: DisruptionKind, start: u32, duration: u32) -> Vec<DisruptionEvent> {
    targets
        .iter()
        .filter_map(|t| match kind {
            DisruptionKind::LineStoppage => t.package.clone(),
            DisruptionKind::RawMaterialDelay => t.raw_material.clone(),
            DisruptionKind::SfgQuarantine => t.quarantine.clone(),
        })
        .map(|target| DisruptionEvent::new(kind, target, start, duration))
        .collect()
}

struct Network {
    days_on_hand: f64,
    seed: u64,
    scenario: Result<(World, EngineConfig, Vec<SweepTarget>), String>,
}

fn networks(grid: &SweepGrid, config: &SweepConfig) -> Vec<Network> {
    let mut out = Vec::new();
    for &doh in &grid.days_on_hand {
        for &seed in &grid.seeds {
            let file = match &config.source {
                SweepSource::Generated(p) => {
                    generate_scenario(&GeneratorParams { seed, days_on_hand: doh, ..p.clone() }).map_err(|e| e.to_string())
                }
                SweepSource::Fixed(f) => Ok(f.with_days_on_hand(doh)),
            };
            let scenario = file.and_then(|f| {
                let world = f.build().map_err(|e| e.to_string())?;
                let engine = EngineConfig {
                    fulfillment_mode: config.fulfillment_mode,
                    max_iterations: config.max_iterations,
                    ..f.engine_config()
                };
                let targets = sweep_targets(&world);
                Ok((world, engine, targets))
            });
            out.push(Network { days_on_hand: doh, seed, scenario });
        }
    }
    out
}

fn run_cell(world: &World, config: &EngineConfig, events: &[DisruptionEvent]) -> Result<(RunResult, KpiReport), String> {
    let result = run_until_stable(world, events, config).map_err(|e: EngineError| e.to_string())?;
    let kpis = compute_kpis(world, &result).map_err(|e| e.to_string())?;
    Ok((result, kpis))
}

/// Runs every (kind, days-on-hand, duration, seed) cell of `grid`. Rows come
/// back in that nesting order whatever the number of jobs.
pub fn sweep(grid: &SweepGrid, config: &SweepConfig) -> SweepReport {
    let nets = networks(grid, config);
    let seeds = grid.seeds.len();
    let mut cells = Vec::new();
    for &kind in &grid.kinds {
        for d in 0..grid.days_on_hand.len() {
            for &duration in &grid.durations {
                for s in 0..seeds {
                    cells.push((kind, &nets[d * seeds + s], duration));
                }
            }
        }
    }
    let evaluate = |&(kind, net, duration): &(DisruptionKind, &Network, u32)| {
        let mut row = SweepRow {
            disruption_type: kind,
            days_on_hand: net.days_on_hand,
            disruption_duration: duration,
            seed: net.seed,
            stabilized: false,
            kpis: None,
            error: None,
        };
        let outcome = net.scenario.as_ref().map_err(Clone::clone).and_then(|(world, engine, targets)| {
            run_cell(world, engine, &cell_events(targets, kind, config.start_day, duration))
        });
        match outcome {
            Ok((result, kpis)) => {
                row.stabilized = result.stabilized;
                row.kpis = Some(kpis);
            }
            Err(e) => row.error = Some(e),
        }
        row
    };
    let rows: Vec<SweepRow> = match rayon::ThreadPoolBuilder::new().num_threads(config.jobs.max(1)).build() {
        Ok(pool) => pool.install(|| cells.par_iter().map(evaluate).collect()),
        Err(_) => cells.iter().map(evaluate).collect(),
    };
    let means = if seeds == 0 { Vec::new() } else { rows.chunks(seeds).map(mean).collect() };
    SweepReport { rows, means }
}

fn mean(rows: &[SweepRow]) -> SweepMean {
    let ok: Vec<&KpiReport> = rows.iter().filter_map(|r| r.kpis.as_ref()).collect();
    let avg = |f: &dyn Fn(&KpiReport) -> f64| {
        if ok.is_empty() {
            0.0
        } else {
            ok.iter().map(|k| f(k)).sum::<f64>() / ok.len() as f64
        }
    };
    SweepMean {
        disruption_type: rows[0].disruption_type,
        days_on_hand: rows[0].days_on_hand,
        disruption_duration: rows[0].disruption_duration,
        runs: ok.len(),
        iterations: avg(&|k| k.iterations as f64),
        rescheduled_material_agents: avg(&|k| k.rescheduled_material_agents as f64),
        rescheduled_capacity_agents: avg(&|k| k.rescheduled_capacity_agents as f64),
        rescheduled_fgs: avg(&|k| k.rescheduled_finished_goods as f64),
        fg_fulfillment_by_orders: avg(&|k| k.fg_fulfillment_by_orders),
        fg_fulfillment_by_volume: avg(&|k| k.fg_fulfillment_by_volume),
        max_delay_days: avg(&|k| k.max_delay_days as f64),
        stabilized: rows.iter().all(|r| r.stabilized),
    }
}

fn f6(x: f64) -> String {
    format!("{x:.6}")
}

/// Per-seed rows followed by one `mean` row per grid cell.
pub fn write_csv<W: Write>(report: &SweepReport, out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        let mut rec = vec![r.disruption_type.to_string(), f6(r.days_on_hand), r.disruption_duration.to_string(), r.seed.to_string()];
        match &r.kpis {
            Some(k) => rec.extend([
                k.iterations.to_string(),
                k.rescheduled_material_agents.to_string(),
                k.rescheduled_capacity_agents.to_string(),
                k.rescheduled_finished_goods.to_string(),
                f6(k.fg_fulfillment_by_orders),
                f6(k.fg_fulfillment_by_volume),
                k.max_delay_days.to_string(),
            ]),
            None => rec.extend(std::iter::repeat_n(String::new(), 7)),
        }
        rec.push(r.stabilized.to_string());
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    for m in &report.means {
        w.write_record([
            m.disruption_type.to_string(),
            f6(m.days_on_hand),
            m.disruption_duration.to_string(),
            "mean".to_string(),
            f6(m.iterations),
            f6(m.rescheduled_material_agents),
            f6(m.rescheduled_capacity_agents),
            f6(m.rescheduled_fgs),
            f6(m.fg_fulfillment_by_orders),
            f6(m.fg_fulfillment_by_volume),
            f6(m.max_delay_days),
            m.stabilized.to_string(),
            String::new(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
