//! Minimum-fuel trajectory planning for a vehicle approaching a signalized
//! intersection, under exact or uncertain switching-time information.
//!
//! The crate models light-duty longitudinal dynamics and power-based fuel
//! consumption, streams per-step switching-time predictions, plans controls
//! with a receding-horizon two-section heuristic search guarded by a red-light
//! risk assessment, and runs the full study matrix with seeded Monte Carlo
//! replication.

pub mod baseline;
pub mod config;
pub mod fuel;
pub mod harness;
pub mod optimizer;
pub mod report;
pub mod spat;
pub mod trajectory;
pub mod vehicle;

pub use baseline::{baseline_trajectory, fuel_savings, BaselineParams};
pub use config::{ConfigError, ExperimentConfig};
pub use fuel::{fuel_rate, trajectory_fuel, vehicle_power, FuelRecord};
pub use harness::{
    default_sweep_combos, default_sweep_levels, derive_seed, run_scenario,
    savings_proportion_surface, sensitivity_sweep, table_matrix, GradeDirection, HarnessError,
    ProportionCell, RunResult, ScenarioKind, ScenarioSpec, SweepCombo,
};
pub use optimizer::{
    admissible_controls, critical_stopping_distance, next_control, plan_trajectory, risk_check,
    two_section_cost, OptimizerConfig, Phase, PlanError, PlanState,
};
pub use spat::{
    error_bound, sample_prediction, PredictionModel, SignalTiming, SpatSample, SpatSource,
};
pub use trajectory::{advance, Step, Trajectory};
pub use vehicle::{
    resistance_force, step_dynamics, tractive_force, Control, RoadParams, VehicleParams,
    VehicleState,
};
