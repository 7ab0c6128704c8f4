//! Scenario orchestration: rigid-motion fitting, ball-chain growth of the
//! agreement set, configuration and reports.

pub mod adapters;
pub mod config;
pub mod grow;
pub mod motion;
pub mod report;
pub mod run;

pub use config::{builtin, ScenarioConfig, BUILTIN_SCENARIOS, CATALOG};
pub use grow::{principal_match_search, region_grow, GrowthReport, MatchReport};
pub use motion::{fit_rigid_motion_jet, kabsch, RigidMotion};
pub use report::{validate_report, RigidityReport, StageReport, Verdict};
pub use run::{run_scenario, RunOptions};
