use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{AgentId, Day, Hold, World};
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisruptionKind {
    /// In-transit arrivals of a material are pushed to the end of the window.
    RawMaterialDelay,
    /// A material's on-hand stock and new output cannot be used during the window.
    SfgQuarantine,
    /// A capacity package has zero capacity during the window.
    LineStoppage,
}

impl DisruptionKind {
    pub const ALL: [DisruptionKind; 3] =
        [DisruptionKind::LineStoppage, DisruptionKind::RawMaterialDelay, DisruptionKind::SfgQuarantine];

    pub fn as_str(self) -> &'static str {
        match self {
            DisruptionKind::RawMaterialDelay => "raw_material_delay",
            DisruptionKind::SfgQuarantine => "sfg_quarantine",
            DisruptionKind::LineStoppage => "line_stoppage",
        }
    }
}

impl fmt::Display for DisruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DisruptionKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw_material_delay" | "rm-delay" | "delay" => Ok(DisruptionKind::RawMaterialDelay),
            "sfg_quarantine" | "quarantine" => Ok(DisruptionKind::SfgQuarantine),
            "line_stoppage" | "stoppage" | "line-stoppage" => Ok(DisruptionKind::LineStoppage),
            other => Err(ModelError::InvalidEvent(format!("unknown disruption kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisruptionEvent {
    pub kind: DisruptionKind,
    pub target: AgentId,
    pub start_day: Day,
    pub duration_days: u32,
    /// Units delayed or quarantined; `None` means everything in the window.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affected_quantity: Option<u64>,
}

impl DisruptionEvent {
    pub fn new(kind: DisruptionKind, target: impl Into<AgentId>, start_day: Day, duration_days: u32) -> Self {
        DisruptionEvent { kind, target: target.into(), start_day, duration_days, affected_quantity: None }
    }

    pub fn with_quantity(mut self, quantity: u64) -> Self {
        self.affected_quantity = Some(quantity);
        self
    }

    /// First day after the window.
    pub fn end_day(&self) -> Day {
        self.start_day + self.duration_days
    }
}

/// `kind:target:start:duration[:qty]`, e.g. `rm-delay:RM1:2:4`.
impl FromStr for DisruptionEvent {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if !(4..=5).contains(&parts.len()) {
            return Err(ModelError::InvalidEvent(format!("`{s}`: expected kind:target:start:duration[:qty]")));
        }
        let num = |field: &str, v: &str| -> Result<u64, ModelError> {
            v.parse().map_err(|_| ModelError::InvalidEvent(format!("`{s}`: {field} `{v}` is not a non-negative integer")))
        };
        let mut event = DisruptionEvent::new(
            parts[0].parse()?,
            parts[1],
            num("start", parts[2])? as Day,
            num("duration", parts[3])? as u32,
        );
        if let Some(q) = parts.get(4) {
            event.affected_quantity = Some(num("quantity", q)?);
        }
        Ok(event)
    }
}

impl fmt::Display for DisruptionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            DisruptionKind::RawMaterialDelay => "rm-delay",
            DisruptionKind::SfgQuarantine => "quarantine",
            DisruptionKind::LineStoppage => "stoppage",
        };
        write!(f, "{kind}:{}:{}:{}", self.target, self.start_day, self.duration_days)?;
        if let Some(q) = self.affected_quantity {
            write!(f, ":{q}")?;
        }
        Ok(())
    }
}

/// Applies a disruption to a copy of `world` and returns it together with the
/// agents whose supply or capacity profile actually changed.
pub fn apply_disruption(world: &World, event: &DisruptionEvent) -> Result<(World, BTreeSet<AgentId>), ModelError> {
    if event.duration_days == 0 {
        return Err(ModelError::InvalidEvent("duration must be at least one day".into()));
    }
    if event.start_day >= world.horizon_days {
        return Err(ModelError::InvalidEvent(format!(
            "window starts on day {} outside the {}-day horizon",
            event.start_day, world.horizon_days
        )));
    }
    let mut next = world.clone();
    match event.kind {
        DisruptionKind::LineStoppage => {
            let Some(pkg) = next.capacities.get_mut(&event.target) else {
                return Err(target_error(world, event, "capacity package"));
            };
            let end = (event.end_day() as usize).min(world.horizon());
            for d in event.start_day as usize..end {
                pkg.profile.per_day[d] = 0;
            }
        }
        DisruptionKind::RawMaterialDelay => {
            let Some(profile) = next.supply.get_mut(&event.target) else {
                return Err(target_error(world, event, "material"));
            };
            let mut remaining = event.affected_quantity.unwrap_or(u64::MAX);
            let in_window: Vec<(Day, u64)> = profile
                .in_transit
                .range(event.start_day..event.end_day())
                .map(|(d, q)| (*d, *q))
                .collect();
            let mut moved = 0u64;
            for (day, q) in in_window {
                let take = q.min(remaining);
                if take == 0 {
                    break;
                }
                remaining -= take;
                moved += take;
                let left = q - take;
                if left == 0 {
                    profile.in_transit.remove(&day);
                } else {
                    profile.in_transit.insert(day, left);
                }
            }
            if moved > 0 {
                *profile.in_transit.entry(event.end_day()).or_insert(0) += moved;
            }
        }
        DisruptionKind::SfgQuarantine => {
            if !next.materials.contains_key(&event.target) {
                return Err(target_error(world, event, "material"));
            }
            if event.affected_quantity != Some(0) {
                next.supply.get_mut(&event.target).unwrap().holds.push(Hold {
                    start: event.start_day,
                    end: event.end_day().min(world.horizon_days),
                    quantity: event.affected_quantity,
                });
            }
        }
    }
    let affected = trigger(world, &next);
    Ok((next, affected))
}

/// Agents whose supply or capacity situation differs between two worlds.
///
/// A hold that blocks nothing leaves the agent untriggered.
pub fn trigger(before: &World, after: &World) -> BTreeSet<AgentId> {
    let mut affected = BTreeSet::new();
    for (id, profile) in &after.supply {
        let old = &before.supply[id];
        let changed = if old.in_stock != profile.in_stock
            || old.in_transit != profile.in_transit
            || old.planned_production != profile.planned_production
        {
            true
        } else if old.holds != profile.holds {
            before.blocked(id).ok() != after.blocked(id).ok()
        } else {
            false
        };
        if changed {
            affected.insert(id.clone());
        }
    }
    for (id, pkg) in &after.capacities {
        if before.capacities[id].profile != pkg.profile {
            affected.insert(id.clone());
        }
    }
    affected
}

fn target_error(world: &World, event: &DisruptionEvent, expected: &'static str) -> ModelError {
    if world.is_material(&event.target) || world.is_capacity(&event.target) {
        ModelError::InvalidEvent(format!("{} must target a {expected}, `{}` is not one", event.kind, event.target))
    } else {
        ModelError::UnknownId { path: "/target".into(), kind: expected, id: event.target.clone() }
    }
}
