use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use resched_core::model::{apply_disruption, build_world, DisruptionEvent, DisruptionKind, MaterialDef, SupplyDef};
use resched_core::scenario::{fig2, generate_scenario, sweep_targets, GeneratorParams};

fn single_rm(supply: SupplyDef, horizon: u32) -> resched_core::model::World {
    let m = MaterialDef { id: "RM".into(), location: String::new(), suppliers: vec![], capacity: None, substitutes: vec![] };
    build_world(&[m], &[], &[], &BTreeMap::from([("RM".to_string(), supply)]), horizon).unwrap()
}

#[test]
fn cumulative_available_adds_arrivals() {
    let w = single_rm(SupplyDef { in_stock: 5, in_transit: BTreeMap::from([(2, 3)]), ..Default::default() }, 4);
    assert_eq!(w.cumulative_available("RM", 1).unwrap(), 5);
    assert_eq!(w.cumulative_available("RM", 2).unwrap(), 8);
    let empty = single_rm(SupplyDef::default(), 4);
    assert!((0..4).all(|d| empty.cumulative_available("RM", d).unwrap() == 0));
    assert!(w.cumulative_available("RM", 4).is_err());
    assert!(w.cumulative_available("NOPE", 0).is_err());
}

#[test]
fn fig2_rm1_delay_triggers_only_rm1() {
    let s = fig2();
    let (after, affected) =
        apply_disruption(&s.world, &DisruptionEvent::new(DisruptionKind::RawMaterialDelay, "RM1", 4, 2)).unwrap();
    assert_eq!(affected, BTreeSet::from(["RM1".to_string()]));
    assert_eq!(after.supply()["RM1"].in_transit, BTreeMap::from([(0, 12), (6, 12), (8, 12)]));
}

#[test]
fn delay_without_arrivals_changes_nothing() {
    let s = fig2();
    let (after, affected) =
        apply_disruption(&s.world, &DisruptionEvent::new(DisruptionKind::RawMaterialDelay, "RM1", 1, 2)).unwrap();
    assert!(affected.is_empty());
    assert_eq!(after, s.world);
    let zero = DisruptionEvent::new(DisruptionKind::RawMaterialDelay, "RM1", 4, 2).with_quantity(0);
    assert!(apply_disruption(&s.world, &zero).unwrap().1.is_empty());
}

#[test]
fn stoppage_zeroes_the_window() {
    let s = fig2();
    let (after, affected) =
        apply_disruption(&s.world, &DisruptionEvent::new(DisruptionKind::LineStoppage, "CAP1", 3, 3)).unwrap();
    assert_eq!(affected, BTreeSet::from(["CAP1".to_string()]));
    let per_day = &after.capacities()["CAP1"].profile.per_day;
    assert_eq!(&per_day[2..7], &[20, 0, 0, 0, 20]);
}

#[test]
fn bad_events_are_rejected() {
    let s = fig2();
    for e in [
        DisruptionEvent::new(DisruptionKind::LineStoppage, "NOPE", 1, 1),
        DisruptionEvent::new(DisruptionKind::LineStoppage, "CAP1", 14, 1),
        DisruptionEvent::new(DisruptionKind::LineStoppage, "CAP1", 1, 0),
        DisruptionEvent::new(DisruptionKind::RawMaterialDelay, "CAP1", 1, 1),
    ] {
        assert!(apply_disruption(&s.world, &e).is_err(), "{e}");
    }
}

#[test]
fn event_syntax_round_trips() {
    for text in ["rm-delay:RM1:2:4", "quarantine:SFG1:0:3:5", "stoppage:CAP2:1:9"] {
        let e: DisruptionEvent = text.parse().unwrap();
        assert_eq!(e.to_string(), text);
    }
    assert!("stoppage:CAP2:1".parse::<DisruptionEvent>().is_err());
    assert!("flood:CAP2:1:2".parse::<DisruptionEvent>().is_err());
    assert!("stoppage:CAP2:x:2".parse::<DisruptionEvent>().is_err());
}

#[test]
fn capacity_slack_does_not_carry_over() {
    let s = fig2();
    let w = &s.world;
    let day0 = w.available_capacity("CAP1", 0).unwrap();
    assert!(day0 > 0);
    assert_eq!(w.available_capacity("CAP1", 1).unwrap(), 20 - w.capacity_load("CAP1").unwrap()[1] as i64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn disruption_then_restore_is_identity(seed in 0u64..500, kind in prop::sample::select(DisruptionKind::ALL.to_vec()), start in 0u32..10, len in 1u32..6) {
        let world = generate_scenario(&GeneratorParams { seed, ..Default::default() }).unwrap().build().unwrap();
        let targets = sweep_targets(&world);
        let events = resched_core::metrics::cell_events(&targets, kind, start, len);
        let mut w = world.clone();
        for e in &events {
            w = apply_disruption(&w, e).unwrap().0;
        }
        w.restore_baseline();
        prop_assert_eq!(w.canonical_json(), world.canonical_json());
    }

    #[test]
    fn cumulative_supply_never_falls(seed in 0u64..500) {
        let world = generate_scenario(&GeneratorParams { seed, ..Default::default() }).unwrap().build().unwrap();
        for id in world.materials().keys() {
            let mut last = 0;
            for d in 0..world.horizon_days() {
                let c = world.cumulative_supply(id, d).unwrap();
                prop_assert!(c >= last);
                last = c;
                prop_assert!(world.cumulative_available(id, d).unwrap() >= 0);
            }
        }
    }
}
