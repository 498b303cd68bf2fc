//! Multi-agent production rescheduling.
//!
//! Material agents and capacity agents each own a small slice of a supply
//! network. After a disruption they solve local exact allocation problems
//! and exchange change proposals until no agent has anything left to change.

pub mod engine;
pub mod error;
pub mod metrics;
pub mod model;
pub mod scenario;
pub mod solver;

pub use error::{EngineError, MetricsError, ModelError, ScenarioError, SolveError};

/// Compact JSON with object keys in sorted order.
pub fn canonical_json<T: serde::Serialize + ?Sized>(value: &T) -> String {
    // serde_json's `Value` map is a BTreeMap (no `preserve_order`), so a
    // round trip through it sorts every object's keys.
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("value to string")
}
