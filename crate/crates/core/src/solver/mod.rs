//! Exact solvers for the agents' local allocation and consolidation problems.
//!
//! Every solver is a pure function of its inputs. Each has a brute-force
//! counterpart in [`oracle`] for small instances.

mod all_or_nothing;
mod capacity;
mod consolidation;
pub mod oracle;
mod partial;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SolveError;
use crate::model::Day;

pub use all_or_nothing::solve_all_or_nothing;
pub use capacity::solve_capacity;
pub use consolidation::solve_consolidation;
pub use oracle::brute_force_oracle;
pub use partial::solve_partial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Partial,
    AllOrNothing,
    Capacity,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Partial => "partial",
            Mode::AllOrNothing => "all_or_nothing",
            Mode::Capacity => "capacity",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn default_priority() -> u32 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationOrder {
    pub id: String,
    /// Day -> demanded quantity (`d_mn`).
    pub demand: BTreeMap<Day, u64>,
    #[serde(default = "default_priority")]
    pub priority: u32,
}

impl AllocationOrder {
    pub fn new(id: impl Into<String>, demand: impl IntoIterator<Item = (Day, u64)>, priority: u32) -> Self {
        AllocationOrder { id: id.into(), demand: demand.into_iter().collect(), priority }
    }

    pub(crate) fn dense(&self, horizon: usize) -> Vec<u64> {
        let mut v = vec![0; horizon];
        for (&d, &q) in &self.demand {
            v[d as usize] = q;
        }
        v
    }

    pub fn total(&self) -> u64 {
        self.demand.values().sum()
    }
}

/// One local allocation problem.
///
/// `supply` is per day: cumulative for the material modes (what arrives on
/// day `n` stays available afterwards), expiring for [`Mode::Capacity`].
/// With `allow_early = false` an order's cumulative allocation may never run
/// ahead of its cumulative demand, i.e. quantities can only be cut or moved
/// later. All-or-nothing allocations only ever land on demand days, so the
/// flag does not change that mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationProblem {
    pub orders: Vec<AllocationOrder>,
    pub supply: Vec<u64>,
    pub horizon: usize,
    pub mode: Mode,
    #[serde(default = "yes")]
    pub allow_early: bool,
}

impl AllocationProblem {
    pub fn new(mode: Mode, horizon: usize, supply: Vec<u64>, orders: Vec<AllocationOrder>) -> Self {
        AllocationProblem { orders, supply, horizon, mode, allow_early: true }
    }

    pub fn no_early(mut self) -> Self {
        self.allow_early = false;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if self.supply.len() != self.horizon {
            return Err(SolveError::Malformed(format!(
                "supply has {} days, horizon is {}",
                self.supply.len(),
                self.horizon
            )));
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.orders {
            if !seen.insert(o.id.as_str()) {
                return Err(SolveError::Malformed(format!("duplicate order `{}`", o.id)));
            }
            if o.priority == 0 {
                return Err(SolveError::Malformed(format!("order `{}` has priority 0", o.id)));
            }
            if let Some((&d, _)) = o.demand.iter().find(|(&d, _)| d as usize >= self.horizon) {
                return Err(SolveError::Malformed(format!("order `{}` demands on day {d} >= horizon", o.id)));
            }
        }
        Ok(())
    }

    pub(crate) fn expect(&self, mode: Mode, expected: &'static str) -> Result<(), SolveError> {
        if self.mode != mode {
            return Err(SolveError::WrongMode { expected, actual: self.mode.as_str() });
        }
        self.validate()
    }

    /// Largest single-day demand in the problem.
    pub fn max_demand(&self) -> u64 {
        self.orders.iter().flat_map(|o| o.demand.values().copied()).max().unwrap_or(0)
    }
}

/// Objective weights. Empty maps fall back to the defaults: `W_m` equal to
/// the priority, `F_m = 1`, `L_m = 2 * max demand * F_m`, `W_n = N - n`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub priority_weight: BTreeMap<u32, i64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fulfillment_weight: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub adherence_weight: BTreeMap<String, i64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub day_attenuation: Vec<i64>,
}

impl WeightConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        let mut last: Option<i64> = None;
        for (p, w) in &self.priority_weight {
            if *w <= 0 {
                return Err(SolveError::InvalidWeights(format!("priority {p} has non-positive weight {w}")));
            }
            if last.is_some_and(|l| *w <= l) {
                return Err(SolveError::InvalidWeights("priority weights must increase with priority".into()));
            }
            last = Some(*w);
        }
        for (id, f) in &self.fulfillment_weight {
            if *f <= 0 {
                return Err(SolveError::InvalidWeights(format!("F for `{id}` must be positive")));
            }
        }
        for (id, l) in &self.adherence_weight {
            if *l <= 0 {
                return Err(SolveError::InvalidWeights(format!("L for `{id}` must be positive")));
            }
        }
        validate_attenuation(&self.day_attenuation)
    }

    pub fn priority_weight(&self, priority: u32) -> Result<i64, SolveError> {
        if self.priority_weight.is_empty() {
            return Ok(priority as i64);
        }
        self.priority_weight
            .get(&priority)
            .copied()
            .ok_or_else(|| SolveError::InvalidWeights(format!("no weight for priority {priority}")))
    }

    pub fn fulfillment(&self, order: &str) -> i64 {
        self.fulfillment_weight.get(order).copied().unwrap_or(1)
    }

    pub fn adherence(&self, order: &str, max_demand: u64) -> i64 {
        self.adherence_weight
            .get(order)
            .copied()
            .unwrap_or_else(|| 2 * (max_demand.max(1) as i64) * self.fulfillment(order))
    }

    /// `W_n` for a horizon of `n` days.
    pub fn day_weights(&self, horizon: usize) -> Result<Vec<i64>, SolveError> {
        if self.day_attenuation.is_empty() {
            return Ok(default_day_weights(horizon));
        }
        if self.day_attenuation.len() < horizon {
            return Err(SolveError::InvalidWeights(format!(
                "day attenuation covers {} days, horizon is {horizon}",
                self.day_attenuation.len()
            )));
        }
        Ok(self.day_attenuation[..horizon].to_vec())
    }
}

pub fn default_day_weights(horizon: usize) -> Vec<i64> {
    (0..horizon).map(|n| (horizon - n) as i64).collect()
}

pub(crate) fn validate_attenuation(w: &[i64]) -> Result<(), SolveError> {
    if w.iter().any(|x| *x <= 0) {
        return Err(SolveError::InvalidWeights("day weights must be positive".into()));
    }
    if w.windows(2).any(|p| p[1] >= p[0]) {
        return Err(SolveError::InvalidWeights("day weights must strictly decrease".into()));
    }
    Ok(())
}

/// Solver output: `x[order][day]` (non-zero entries only) and the objective.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub x: BTreeMap<String, BTreeMap<Day, u64>>,
    pub objective: i64,
}

impl Allocation {
    pub(crate) fn from_dense(orders: &[AllocationOrder], x: &[Vec<u64>], objective: i64) -> Self {
        let x = orders
            .iter()
            .zip(x)
            .map(|(o, row)| {
                let days = row.iter().enumerate().filter(|(_, q)| **q > 0).map(|(d, q)| (d as Day, *q)).collect();
                (o.id.clone(), days)
            })
            .collect();
        Allocation { x, objective }
    }

    pub fn get(&self, order: &str, day: Day) -> u64 {
        self.x.get(order).and_then(|m| m.get(&day)).copied().unwrap_or(0)
    }

    pub fn dense(&self, order: &str, horizon: usize) -> Vec<u64> {
        let mut v = vec![0; horizon];
        if let Some(m) = self.x.get(order) {
            for (&d, &q) in m {
                v[d as usize] = q;
            }
        }
        v
    }

    pub fn total(&self, order: &str) -> u64 {
        self.x.get(order).map_or(0, |m| m.values().sum())
    }

    /// Checks the demand and supply constraints of `problem`.
    pub fn check(&self, problem: &AllocationProblem) -> Result<(), String> {
        let n = problem.horizon;
        let mut per_day = vec![0u64; n];
        for o in &problem.orders {
            let x = self.dense(&o.id, n);
            let total: u64 = x.iter().sum();
            if total > o.total() {
                return Err(format!("order `{}` allocated {total} > demand {}", o.id, o.total()));
            }
            if !problem.allow_early || problem.mode == Mode::AllOrNothing {
                let d = o.dense(n);
                let (mut cx, mut cd) = (0, 0);
                for day in 0..n {
                    cx += x[day];
                    cd += d[day];
                    if problem.mode == Mode::AllOrNothing && x[day] > d[day] {
                        return Err(format!("order `{}` day {day} allocated above demand", o.id));
                    }
                    if cx > cd {
                        return Err(format!("order `{}` allocated ahead of demand on day {day}", o.id));
                    }
                }
            }
            for day in 0..n {
                per_day[day] += x[day];
            }
        }
        for id in self.x.keys() {
            if !problem.orders.iter().any(|o| &o.id == id) {
                return Err(format!("allocation names unknown order `{id}`"));
            }
        }
        let (mut cx, mut cs) = (0, 0);
        for day in 0..n {
            match problem.mode {
                Mode::Capacity => {
                    if per_day[day] > problem.supply[day] {
                        return Err(format!("day {day} uses {} > capacity {}", per_day[day], problem.supply[day]));
                    }
                }
                _ => {
                    cx += per_day[day];
                    cs += problem.supply[day];
                    if cx > cs {
                        return Err(format!("cumulative allocation {cx} > supply {cs} on day {day}"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Customer-side consolidation of several suppliers' requested reductions.
///
/// `requests[supplier][day]` is the per-day requested change `q_mn` in the
/// customer's own units. A negative entry gives back part of an earlier
/// reduction (a reschedule); each supplier's running sum must stay
/// non-negative.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReductionProblem {
    pub requests: BTreeMap<String, BTreeMap<Day, i64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub day_weights: Vec<i64>,
    pub horizon: usize,
}

impl ReductionProblem {
    pub fn new(horizon: usize) -> Self {
        ReductionProblem { requests: BTreeMap::new(), day_weights: Vec::new(), horizon }
    }

    pub fn request(mut self, supplier: impl Into<String>, q: impl IntoIterator<Item = (Day, i64)>) -> Self {
        self.requests.insert(supplier.into(), q.into_iter().collect());
        self
    }

    pub fn weights(&self) -> Result<Vec<i64>, SolveError> {
        if self.day_weights.is_empty() {
            return Ok(default_day_weights(self.horizon));
        }
        if self.day_weights.len() != self.horizon {
            return Err(SolveError::InvalidWeights(format!(
                "{} day weights for a {}-day horizon",
                self.day_weights.len(),
                self.horizon
            )));
        }
        validate_attenuation(&self.day_weights)?;
        Ok(self.day_weights.clone())
    }

    /// Each supplier's cumulative request per day.
    pub fn cumulative_requests(&self) -> Result<BTreeMap<&str, Vec<i64>>, SolveError> {
        let mut out = BTreeMap::new();
        for (supplier, q) in &self.requests {
            let mut per_day = vec![0i64; self.horizon];
            for (&d, &v) in q {
                if d as usize >= self.horizon {
                    return Err(SolveError::Malformed(format!("request from `{supplier}` on day {d} >= horizon")));
                }
                per_day[d as usize] = v;
            }
            let mut acc = 0;
            let cum: Vec<i64> = per_day
                .iter()
                .map(|v| {
                    acc += v;
                    acc
                })
                .collect();
            if let Some(day) = cum.iter().position(|c| *c < 0) {
                return Err(SolveError::Malformed(format!(
                    "request from `{supplier}` gives back more than it took by day {day}"
                )));
            }
            out.insert(supplier.as_str(), cum);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionPlan {
    /// Per-day reduction `r_n`; negative entries restore earlier reductions.
    pub r: Vec<i64>,
    pub objective: i64,
}

impl ReductionPlan {
    pub fn cumulative(&self) -> Vec<i64> {
        let mut acc = 0;
        self.r
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect()
    }

    /// Checks the cumulative dominance constraint against every supplier.
    pub fn check(&self, problem: &ReductionProblem) -> Result<(), String> {
        let cum = self.cumulative();
        if cum.len() != problem.horizon {
            return Err(format!("plan covers {} days, horizon {}", cum.len(), problem.horizon));
        }
        if let Some(day) = cum.iter().position(|c| *c < 0) {
            return Err(format!("cumulative reduction negative on day {day}"));
        }
        let requests = problem.cumulative_requests().map_err(|e| e.to_string())?;
        for (supplier, q) in requests {
            for (day, (r, q)) in cum.iter().zip(&q).enumerate() {
                if r < q {
                    return Err(format!("day {day}: reduction {r} below `{supplier}` request {q}"));
                }
            }
        }
        Ok(())
    }
}

/// Suffix minimum of cumulative supply: the binding cumulative cap per day.
pub(crate) fn effective_cumulative(supply: &[u64]) -> Vec<u64> {
    let mut cum = crate::model::cumulative(supply);
    for i in (0..cum.len().saturating_sub(1)).rev() {
        cum[i] = cum[i].min(cum[i + 1]);
    }
    cum
}
