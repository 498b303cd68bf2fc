//! Session state kept independent of HTTP so it can be driven directly.

use std::collections::BTreeMap;

use resched_core::engine::{
    trigger, AffectedSets, EngineConfig, Negotiation, RoundReport, RoundSummary, RunResult, TraceRecord,
};
use resched_core::metrics::{compute_kpis, KpiReport};
use resched_core::model::{apply_disruption, apply_intervention, Day, DisruptionEvent, Intervention, World};
use resched_core::scenario::LoadedScenario;
use serde::{Deserialize, Serialize};

use crate::error::ApiError;

/// One committed change, in the order it was applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    Disruption { events: Vec<DisruptionEvent> },
    Intervention { intervention: Intervention },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stabilized: bool,
    pub iterations: u32,
    pub rounds: Vec<RoundSummary>,
    pub affected: AffectedSets,
    /// Against the world the session started from.
    pub kpis: KpiReport,
    pub committed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResponse {
    pub round: Option<RoundReport>,
    pub finished: bool,
    /// Present once the stepped run has been committed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<RunSummary>,
}

/// What readers see; replaced wholesale after every commit.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub initial: World,
    pub world: World,
    pub history: Vec<Action>,
    pub kpis: KpiReport,
    pub trace: Vec<TraceRecord>,
    pub stepping: bool,
}

pub struct SessionCore {
    initial: World,
    config: EngineConfig,
    current: World,
    history: Vec<Action>,
    kpis: KpiReport,
    trace: Vec<TraceRecord>,
    stepper: Option<(Action, Negotiation)>,
}

impl SessionCore {
    pub fn new(scenario: LoadedScenario) -> Result<Self, ApiError> {
        let LoadedScenario { world, events, config, .. } = scenario;
        let mut core = SessionCore {
            initial: world.clone(),
            config,
            current: world,
            history: Vec::new(),
            kpis: KpiReport::identity(),
            trace: Vec::new(),
            stepper: None,
        };
        if !events.is_empty() {
            core.run(Action::Disruption { events }, false)?;
        }
        Ok(core)
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            initial: self.initial.clone(),
            world: self.current.clone(),
            history: self.history.clone(),
            kpis: self.kpis.clone(),
            trace: self.trace.clone(),
            stepping: self.stepper.is_some(),
        }
    }

    fn start(&self, action: &Action) -> Result<Negotiation, ApiError> {
        let mut world = self.current.clone();
        let mut affected = std::collections::BTreeSet::new();
        match action {
            Action::Disruption { events } => {
                if events.is_empty() {
                    return Err(ApiError::bad("no events given"));
                }
                for e in events {
                    world = apply_disruption(&world, e)?.0;
                }
                affected.extend(trigger(&self.current, &world));
            }
            Action::Intervention { intervention } => {
                let (next, hit) = apply_intervention(&world, intervention)?;
                world = next;
                affected = hit;
            }
        }
        Ok(Negotiation::new(world, affected, self.config.clone())?)
    }

    fn summarize(&self, result: &RunResult, committed: bool) -> Result<RunSummary, ApiError> {
        let kpis = compute_kpis(&self.initial, result).map_err(|e| ApiError::Internal(e.to_string()))?;
        Ok(RunSummary {
            stabilized: result.stabilized,
            iterations: result.iterations_used,
            rounds: result.rounds.clone(),
            affected: result.affected.clone(),
            kpis,
            committed,
        })
    }

    fn commit(&mut self, action: Action, result: RunResult, summary: &RunSummary) {
        self.current = result.world;
        self.trace = result.trace;
        self.kpis = summary.kpis.clone();
        self.history.push(action);
    }

    /// Runs `action` to the end from the committed world. Sandbox runs leave
    /// the session untouched.
    pub fn run(&mut self, action: Action, sandbox: bool) -> Result<RunSummary, ApiError> {
        if self.stepper.is_some() {
            return Err(ApiError::Conflict("a stepped run is in progress".into()));
        }
        let result = self.start(&action)?.run()?;
        let summary = self.summarize(&result, !sandbox)?;
        if !sandbox {
            self.commit(action, result, &summary);
        }
        Ok(summary)
    }

    /// Advances a stepped run by one round, starting it from `action` when
    /// none is pending. The run is committed once it finishes.
    pub fn step(&mut self, action: Option<Action>) -> Result<StepResponse, ApiError> {
        if self.stepper.is_none() {
            let action = action.ok_or_else(|| ApiError::bad("no stepped run in progress; post events to start one"))?;
            let negotiation = self.start(&action)?;
            self.stepper = Some((action, negotiation));
        } else if action.is_some() {
            return Err(ApiError::Conflict("a stepped run is in progress".into()));
        }
        let (_, negotiation) = self.stepper.as_mut().expect("stepper present");
        let round = negotiation.step()?;
        if !negotiation.is_finished() {
            return Ok(StepResponse { round, finished: false, summary: None });
        }
        let (action, negotiation) = self.stepper.take().expect("stepper present");
        let result = negotiation.finish()?;
        let summary = self.summarize(&result, true)?;
        self.commit(action, result, &summary);
        Ok(StepResponse { round, finished: true, summary: Some(summary) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDiff {
    pub baseline: Vec<u64>,
    pub current: Vec<u64>,
    /// current - baseline on the days that differ.
    pub delta: BTreeMap<Day, i64>,
}

impl SeriesDiff {
    fn of(baseline: &[u64], current: &[u64]) -> Option<Self> {
        let delta: BTreeMap<Day, i64> = baseline
            .iter()
            .zip(current)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(d, (a, b))| (d as Day, *b as i64 - *a as i64))
            .collect();
        (!delta.is_empty()).then(|| SeriesDiff { baseline: baseline.to_vec(), current: current.to_vec(), delta })
    }
}

/// Schedule differences between the session's first and current world.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDiff {
    pub production: BTreeMap<String, SeriesDiff>,
    pub deliveries: BTreeMap<String, SeriesDiff>,
    pub capacity: BTreeMap<String, SeriesDiff>,
    pub load: BTreeMap<String, SeriesDiff>,
}

pub fn diff(initial: &World, current: &World) -> ScheduleDiff {
    let mut out = ScheduleDiff::default();
    for id in current.materials().keys() {
        if let Some(d) = SeriesDiff::of(initial.production(id).unwrap_or(&[]), current.production(id).unwrap_or(&[])) {
            out.production.insert(id.clone(), d);
        }
    }
    for (id, after) in current.deliveries() {
        if let Some(d) = SeriesDiff::of(&initial.deliveries()[id], after) {
            out.deliveries.insert(id.clone(), d);
        }
    }
    for (id, pkg) in current.capacities() {
        if let Some(d) = SeriesDiff::of(&initial.capacities()[id].profile.per_day, &pkg.profile.per_day) {
            out.capacity.insert(id.clone(), d);
        }
        if let (Ok(a), Ok(b)) = (initial.capacity_load(id), current.capacity_load(id)) {
            if let Some(d) = SeriesDiff::of(&a, &b) {
                out.load.insert(id.clone(), d);
            }
        }
    }
    out
}

/// Per-agent supply and demand views of a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub level: u32,
    pub is_finished_good: bool,
    pub capacity: Option<String>,
    pub production: Vec<u64>,
    /// Cumulative stock, arrivals and production.
    pub supply: Vec<u64>,
    /// Cumulative supply net of quarantine holds.
    pub usable: Vec<u64>,
    /// Cumulative quantity promised to customers.
    pub demand: Vec<u64>,
    pub outflow: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityView {
    pub per_day: Vec<u64>,
    pub load: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldView {
    pub world: World,
    pub agents: BTreeMap<String, AgentView>,
    pub capacities: BTreeMap<String, CapacityView>,
}

pub fn world_view(world: &World) -> WorldView {
    let agents = world
        .materials()
        .iter()
        .map(|(id, node)| {
            let view = AgentView {
                level: node.level,
                is_finished_good: node.is_finished_good,
                capacity: node.capacity_link.clone(),
                production: world.production(id).unwrap_or(&[]).to_vec(),
                supply: world.gross_supply(id).unwrap_or_default(),
                usable: world.usable_supply(id).unwrap_or_default(),
                demand: world.commitments(id).unwrap_or_default(),
                outflow: world.outflow(id).unwrap_or_default(),
            };
            (id.clone(), view)
        })
        .collect();
    let capacities = world
        .capacities()
        .iter()
        .map(|(id, pkg)| {
            let view = CapacityView { per_day: pkg.profile.per_day.clone(), load: world.capacity_load(id).unwrap_or_default() };
            (id.clone(), view)
        })
        .collect();
    WorldView { world: world.clone(), agents, capacities }
}
