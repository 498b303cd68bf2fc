//! Run-level KPIs and disruption sweeps.

mod sweep;

use serde::{Deserialize, Serialize};

use crate::engine::RunResult;
use crate::error::MetricsError;
use crate::model::World;

pub use sweep::{
    cell_events, sweep, write_csv, SweepConfig, SweepGrid, SweepMean, SweepReport, SweepRow, SweepSource, CSV_HEADER,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiReport {
    pub iterations: u32,
    pub rescheduled_material_agents: usize,
    pub rescheduled_capacity_agents: usize,
    pub rescheduled_finished_goods: usize,
    pub fg_fulfillment_by_orders: f64,
    pub fg_fulfillment_by_volume: f64,
    pub max_delay_days: u32,
}

impl KpiReport {
    /// What an undisturbed run reports.
    pub fn identity() -> Self {
        KpiReport {
            iterations: 0,
            rescheduled_material_agents: 0,
            rescheduled_capacity_agents: 0,
            rescheduled_finished_goods: 0,
            fg_fulfillment_by_orders: 1.0,
            fg_fulfillment_by_volume: 1.0,
            max_delay_days: 0,
        }
    }

    /// Same KPIs with the iteration count ignored.
    pub fn is_identity_row(&self) -> bool {
        KpiReport { iterations: 0, ..self.clone() } == KpiReport::identity()
    }
}

/// Day on which cumulative deliveries first reach `total`.
fn completion_day(deliveries: &[u64], total: u64) -> Option<usize> {
    let mut sum = 0;
    deliveries.iter().position(|q| {
        sum += q;
        sum >= total
    })
}

fn same_shape(baseline: &World, result: &World) -> Result<(), MetricsError> {
    if baseline.horizon_days() != result.horizon_days() {
        return Err(MetricsError::Mismatch(format!(
            "horizon {} vs {}",
            baseline.horizon_days(),
            result.horizon_days()
        )));
    }
    let keys = |a: Vec<&String>, b: Vec<&String>, what: &str| {
        if a == b {
            Ok(())
        } else {
            Err(MetricsError::Mismatch(format!("{what} differ")))
        }
    };
    keys(baseline.materials().keys().collect(), result.materials().keys().collect(), "materials")?;
    keys(baseline.capacities().keys().collect(), result.capacities().keys().collect(), "capacity packages")?;
    keys(baseline.orders().keys().collect(), result.orders().keys().collect(), "orders")
}

/// KPIs of `result` against the undisturbed world it started from.
///
/// An agent counts as rescheduled when its production or outflow (material)
/// or its load (capacity) differs from `baseline`. Delays are measured on the
/// day each fully delivered order completes.
pub fn compute_kpis(baseline: &World, result: &RunResult) -> Result<KpiReport, MetricsError> {
    let end = &result.world;
    same_shape(baseline, end)?;
    let mut report = KpiReport { iterations: result.iterations_used, ..KpiReport::identity() };

    for (id, node) in end.materials() {
        let changed = end.production(id).ok() != baseline.production(id).ok()
            || end.outflow(id).ok() != baseline.outflow(id).ok();
        if changed {
            report.rescheduled_material_agents += 1;
            if node.is_finished_good {
                report.rescheduled_finished_goods += 1;
            }
        }
    }
    report.rescheduled_capacity_agents =
        end.capacities().keys().filter(|id| end.capacity_load(id).ok() != baseline.capacity_load(id).ok()).count();

    let (mut full, mut volume, mut base_volume) = (0usize, 0u64, 0u64);
    for (id, order) in baseline.orders() {
        let before = &baseline.deliveries()[id];
        let after = &end.deliveries()[id];
        let total = order.total_demand();
        let delivered: u64 = after.iter().sum();
        base_volume += before.iter().sum::<u64>();
        volume += delivered;
        if delivered >= total {
            full += 1;
            if let (Some(a), Some(b)) = (completion_day(after, total), completion_day(before, total)) {
                report.max_delay_days = report.max_delay_days.max(a.saturating_sub(b) as u32);
            }
        }
    }
    let orders = baseline.orders().len();
    if orders > 0 {
        report.fg_fulfillment_by_orders = full as f64 / orders as f64;
    }
    if base_volume > 0 {
        report.fg_fulfillment_by_volume = (volume as f64 / base_volume as f64).min(1.0);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run_until_stable;
    use crate::model::{DisruptionEvent, DisruptionKind};
    use crate::scenario::fig2;

    #[test]
    fn no_disruption_is_identity() {
        let s = fig2();
        let r = run_until_stable(&s.world, &[], &s.config).unwrap();
        assert_eq!(compute_kpis(&s.world, &r).unwrap(), KpiReport::identity());
    }

    #[test]
    fn fig2_delay_reschedules_one_group() {
        let s = fig2();
        let event = DisruptionEvent::new(DisruptionKind::RawMaterialDelay, "RM1", 4, 2);
        let r = run_until_stable(&s.world, &[event], &s.config).unwrap();
        let k = compute_kpis(&s.world, &r).unwrap();
        assert_eq!(k.iterations, 3);
        // SFG1 and FG1 move production; RM1 and RM2 see their outflow shift
        assert_eq!(k.rescheduled_material_agents, 4);
        assert_eq!(k.rescheduled_finished_goods, 1);
        assert_eq!(k.rescheduled_capacity_agents, 2);
        assert_eq!((k.fg_fulfillment_by_orders, k.fg_fulfillment_by_volume, k.max_delay_days), (1.0, 1.0, 0));
    }

    #[test]
    fn completion_day_is_first_full_day() {
        assert_eq!(completion_day(&[0, 3, 0, 2, 0], 5), Some(3));
        assert_eq!(completion_day(&[0, 3], 5), None);
    }

    #[test]
    fn mismatched_worlds_are_rejected() {
        let s = fig2();
        let r = run_until_stable(&s.world, &[], &s.config).unwrap();
        let other = crate::scenario::generate_scenario(&Default::default()).unwrap().build().unwrap();
        assert!(matches!(compute_kpis(&other, &r), Err(MetricsError::Mismatch(_))));
    }
}
