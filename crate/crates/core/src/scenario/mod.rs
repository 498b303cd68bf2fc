//! Scenario files: JSON layout, loading with pointer diagnostics, canonical
//! serialization, and the synthetic generator.

mod generator;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{EngineConfig, FulfillmentMode};
use crate::error::ScenarioError;
use crate::model::{
    build_world, CapacityDef, DisruptionEvent, MaterialDef, OrderDef, SupplyDef, World,
};
use crate::solver::WeightConfig;

pub use generator::{generate_scenario, sweep_targets, GeneratorParams, SweepTarget};

pub const VERSION: &str = "resched/1";

/// The bundled two-product example network.
pub const FIG2_JSON: &str = include_str!("../../scenarios/fig2.json");

/// Engine settings a scenario may override. The horizon always comes from
/// the scenario itself.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fulfillment_mode: Option<FulfillmentMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inventory_reduction_enabled: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deterministic_order: Option<bool>,
}

impl ConfigOverrides {
    fn is_empty(&self) -> bool {
        *self == ConfigOverrides::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub horizon_days: u32,
    pub materials: Vec<MaterialDef>,
    #[serde(default)]
    pub capacities: Vec<CapacityDef>,
    #[serde(default)]
    pub orders: Vec<OrderDef>,
    /// Initial stock, arrivals and the baseline production plan per material.
    #[serde(default)]
    pub supply: BTreeMap<String, SupplyDef>,
    #[serde(default)]
    pub events: Vec<DisruptionEvent>,
    #[serde(default, skip_serializing_if = "ConfigOverrides::is_empty")]
    pub config: ConfigOverrides,
}

/// A validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub file: ScenarioFile,
    pub world: World,
    pub events: Vec<DisruptionEvent>,
    pub config: EngineConfig,
}

impl ScenarioFile {
    pub fn parse(bytes: &[u8]) -> Result<Self, ScenarioError> {
        let text = std::str::from_utf8(bytes).map_err(|e| ScenarioError::Schema {
            path: String::new(),
            message: format!("not UTF-8: {e}"),
        })?;
        let mut de = serde_json::Deserializer::from_str(text);
        let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| ScenarioError::Schema {
            path: pointer(e.path()),
            message: e.inner().to_string(),
        })?;
        de.end().map_err(|e| ScenarioError::Schema { path: String::new(), message: e.to_string() })?;
        if file.version != VERSION {
            return Err(ScenarioError::Schema {
                path: "/version".into(),
                message: format!("unsupported version `{}`, expected `{VERSION}`", file.version),
            });
        }
        Ok(file)
    }

    pub fn build(&self) -> Result<World, ScenarioError> {
        Ok(build_world(&self.materials, &self.capacities, &self.orders, &self.supply, self.horizon_days)?)
    }

    pub fn engine_config(&self) -> EngineConfig {
        let base = EngineConfig { horizon_days: self.horizon_days, ..EngineConfig::default() };
        let c = &self.config;
        EngineConfig {
            max_iterations: c.max_iterations.unwrap_or(base.max_iterations),
            fulfillment_mode: c.fulfillment_mode.unwrap_or(base.fulfillment_mode),
            weights: c.weights.clone().unwrap_or(base.weights.clone()),
            inventory_reduction_enabled: c.inventory_reduction_enabled.unwrap_or(base.inventory_reduction_enabled),
            deterministic_order: c.deterministic_order.unwrap_or(base.deterministic_order),
            ..base
        }
    }

    /// Sorted keys, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        crate::canonical_json(self)
    }

    /// Average daily consumption per material over the horizon: production
    /// of its customers plus external demand.
    pub fn daily_consumption(&self) -> BTreeMap<String, f64> {
        let h = self.horizon_days.max(1) as f64;
        let mut total: BTreeMap<String, u64> = self.materials.iter().map(|m| (m.id.clone(), 0)).collect();
        for m in &self.materials {
            let produced: u64 =
                self.supply.get(&m.id).map_or(0, |s| s.planned_production.values().sum());
            for link in &m.suppliers {
                *total.get_mut(&link.material).unwrap() += link.per_unit * produced;
            }
        }
        for o in &self.orders {
            if let Some(t) = total.get_mut(&o.material) {
                *t += o.demand.values().sum::<u64>();
            }
        }
        total.into_iter().map(|(id, t)| (id, t as f64 / h)).collect()
    }

    /// Network days on hand: total initial stock over total average daily
    /// consumption of the materials that are consumed at all.
    pub fn days_on_hand(&self) -> f64 {
        let consumption = self.daily_consumption();
        let (mut stock, mut daily) = (0.0, 0.0);
        for (id, c) in &consumption {
            if *c > 0.0 {
                daily += c;
                stock += self.supply.get(id).map_or(0, |s| s.in_stock) as f64;
            }
        }
        if daily == 0.0 {
            0.0
        } else {
            stock / daily
        }
    }

    /// Same scenario with every consumed material's initial stock set to
    /// `days` of its average consumption. Stock is rounded per material
    /// with the remainders carried forward, so the network figure lands
    /// within half a unit of stock of the target.
    pub fn with_days_on_hand(&self, days: f64) -> ScenarioFile {
        let mut next = self.clone();
        let mut carry = 0.0;
        for (id, c) in self.daily_consumption() {
            let entry = next.supply.entry(id).or_default();
            if c > 0.0 {
                let exact = days * c + carry;
                let stock = exact.round().max(0.0);
                carry = exact - stock;
                entry.in_stock = stock as u64;
            } else {
                entry.in_stock = 0;
            }
        }
        next.supply.retain(|_, s| *s != SupplyDef::default());
        next
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    out
}

/// Parses, validates and builds a scenario.
pub fn load_scenario(bytes: &[u8]) -> Result<LoadedScenario, ScenarioError> {
    let file = ScenarioFile::parse(bytes)?;
    let world = file.build()?;
    for (i, event) in file.events.iter().enumerate() {
        crate::model::apply_disruption(&world, event).map_err(|e| ScenarioError::Schema {
            path: format!("/events/{i}"),
            message: e.to_string(),
        })?;
    }
    let config = file.engine_config();
    Ok(LoadedScenario { events: file.events.clone(), config, world, file })
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<LoadedScenario, ScenarioError> {
    load_scenario(&std::fs::read(path)?)
}

pub fn fig2() -> LoadedScenario {
    load_scenario(FIG2_JSON.as_bytes()).expect("bundled scenario is valid")
}
