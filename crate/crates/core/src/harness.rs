//! Scenario matrix execution: single cells, Monte Carlo replication, the
//! bias/SD sensitivity sweep, and the savings-proportion surface.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{baseline_trajectory, BaselineParams};
use crate::optimizer::{plan_trajectory, OptimizerConfig, PlanError};
use crate::spat::{PredictionModel, SignalTiming, SpatSource};
use crate::trajectory::Trajectory;
use crate::vehicle::{RoadParams, VehicleParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Uninformed,
    Deterministic,
    Stochastic,
}

impl ScenarioKind {
    pub fn label(&self) -> &'static str {
        match self {
            ScenarioKind::Uninformed => "uninformed",
            ScenarioKind::Deterministic => "deterministic",
            ScenarioKind::Stochastic => "stochastic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradeDirection {
    Downhill,
    Uphill,
}

impl GradeDirection {
    pub fn grade(&self) -> f64 {
        match self {
            GradeDirection::Downhill => -0.03,
            GradeDirection::Uphill => 0.03,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GradeDirection::Downhill => "downhill",
            GradeDirection::Uphill => "uphill",
        }
    }
}

/// One cell of the study matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub grade: GradeDirection,
    pub initial_speed_mps: f64,
    pub ttg_s: f64,
    #[serde(default)]
    pub bias_s: f64,
    #[serde(default)]
    pub sd_s: f64,
    pub replications: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.kind != ScenarioKind::Stochastic && (self.bias_s != 0.0 || self.sd_s != 0.0) {
            problems.push(format!(
                "ScenarioSpec: bias_s and sd_s must be 0 for {} scenarios",
                self.kind.label()
            ));
        }
        if self.replications < 1 {
            problems.push("ScenarioSpec.replications must be >= 1".into());
        }
        if !(self.initial_speed_mps > 0.0) {
            problems.push("ScenarioSpec.initial_speed_mps must be > 0".into());
        }
        if !(self.ttg_s >= 0.0) {
            problems.push("ScenarioSpec.ttg_s must be >= 0".into());
        }
        problems.extend(
            PredictionModel { bias_s: self.bias_s, sd_s: self.sd_s, seed: 0 }
                .validate()
                .into_iter()
                .map(|p| format!("ScenarioSpec: {p}")),
        );
        problems
    }

    pub fn road(&self) -> RoadParams {
        RoadParams {
            grade: self.grade.grade(),
            ..RoadParams::default()
        }
    }

    pub fn cell_id(&self) -> String {
        format!(
            "{}_{}_ttg{}_b{}_sd{}",
            self.kind.label(),
            self.grade.label(),
            self.ttg_s,
            self.bias_s,
            self.sd_s
        )
    }
}

/// Aggregated outcome of one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub spec: ScenarioSpec,
    pub fuel_per_rep_l: Vec<f64>,
    pub mean_fuel_l: f64,
    /// Fuel of the uninformed-driver run over the same course; None when the
    /// cell itself is the baseline.
    pub baseline_fuel_l: Option<f64>,
    pub savings_vs_baseline_pct: Option<f64>,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
}

/// splitmix64 step; the seeding chain for cells and replications.
fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-(cell, replication) generator seed.
pub fn derive_seed(master_seed: u64, cell_index: u64, replication_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master_seed) ^ cell_index) ^ replication_index)
}

fn mean_or_first(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    if values.windows(2).all(|w| w[0] == w[1]) {
        values[0]
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Executes one cell: builds road and timing, dispatches to the baseline
/// driver or the planner, and aggregates fuel and savings. Deterministic
/// given the spec (including its seed).
pub fn run_scenario(
    spec: &ScenarioSpec,
    config: &OptimizerConfig,
    baseline_params: &BaselineParams,
    vehicle: &VehicleParams,
) -> Result<RunResult, HarnessError> {
    let problems = spec.validate();
    if !problems.is_empty() {
        return Err(HarnessError::InvalidSpec(problems.join("; ")));
    }
    let road = spec.road();
    let timing = SignalTiming::red_until(spec.ttg_s);
    let base = baseline_trajectory(
        &timing,
        spec.initial_speed_mps,
        baseline_params,
        config,
        vehicle,
        &road,
    );
    let baseline_fuel = base.total_fuel_l();

    let (trajectories, baseline_fuel_l): (Vec<Trajectory>, Option<f64>) = match spec.kind {
        ScenarioKind::Uninformed => (vec![base.clone(); spec.replications], None),
        ScenarioKind::Deterministic => {
            let traj = plan_trajectory(
                &timing,
                &mut SpatSource::exact(),
                spec.initial_speed_mps,
                config,
                vehicle,
                &road,
            )?;
            (vec![traj; spec.replications], Some(baseline_fuel))
        }
        ScenarioKind::Stochastic => {
            // a degenerate distribution makes every replication identical
            let effective_reps = if spec.sd_s == 0.0 { 1 } else { spec.replications };
            let runs: Vec<Result<Trajectory, PlanError>> = (0..effective_reps)
                .into_par_iter()
                .map(|rep| {
                    let model = PredictionModel {
                        bias_s: spec.bias_s,
                        sd_s: spec.sd_s,
                        seed: derive_seed(spec.seed, 0, rep as u64),
                    };
                    plan_trajectory(
                        &timing,
                        &mut SpatSource::from_model(model),
                        spec.initial_speed_mps,
                        config,
                        vehicle,
                        &road,
                    )
                })
                .collect();
            let mut trajectories = Vec::with_capacity(spec.replications);
            for r in runs {
                trajectories.push(r?);
            }
            while trajectories.len() < spec.replications {
                let first = trajectories[0].clone();
                trajectories.push(first);
            }
            (trajectories, Some(baseline_fuel))
        }
    };

    let fuel_per_rep_l: Vec<f64> = trajectories.iter().map(|t| t.total_fuel_l()).collect();
    let mean_fuel_l = mean_or_first(&fuel_per_rep_l);
    let savings_vs_baseline_pct = baseline_fuel_l
        .map(|fb| 100.0 * (fb - mean_fuel_l) / fb);

    Ok(RunResult {
        spec: *spec,
        fuel_per_rep_l,
        mean_fuel_l,
        baseline_fuel_l,
        savings_vs_baseline_pct,
        trajectories,
    })
}

/// The full study matrix: 2 grades x 4 switching times x
/// {uninformed, deterministic, stochastic} = 24 cells.
pub fn table_matrix(
    initial_speed_mps: f64,
    stochastic_bias_s: f64,
    stochastic_sd_s: f64,
    stochastic_reps: usize,
    master_seed: u64,
) -> Vec<ScenarioSpec> {
    let mut specs = Vec::new();
    let mut cell = 0u64;
    for kind in [
        ScenarioKind::Uninformed,
        ScenarioKind::Deterministic,
        ScenarioKind::Stochastic,
    ] {
        for grade in [GradeDirection::Downhill, GradeDirection::Uphill] {
            for ttg in [10.0, 15.0, 20.0, 25.0] {
                let stochastic = kind == ScenarioKind::Stochastic;
                specs.push(ScenarioSpec {
                    kind,
                    grade,
                    initial_speed_mps,
                    ttg_s: ttg,
                    bias_s: if stochastic { stochastic_bias_s } else { 0.0 },
                    sd_s: if stochastic { stochastic_sd_s } else { 0.0 },
                    replications: if stochastic { stochastic_reps } else { 1 },
                    seed: derive_seed(master_seed, cell, 0),
                });
                cell += 1;
            }
        }
    }
    specs
}

/// One (grade, switching-time) slice of the sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCombo {
    pub grade: GradeDirection,
    pub ttg_s: f64,
}

/// The eight bias/SD levels of the default sweep grid (s).
pub fn default_sweep_levels() -> Vec<f64> {
    vec![0.0, 0.4, 0.8, 1.25, 2.0, 4.0, 6.0, 8.0]
}

/// Default sweep slices. Five slices x an 8x8 bias/SD grid = 320 cells
/// before replication.
pub fn default_sweep_combos() -> Vec<SweepCombo> {
    vec![
        SweepCombo { grade: GradeDirection::Downhill, ttg_s: 15.0 },
        SweepCombo { grade: GradeDirection::Downhill, ttg_s: 20.0 },
        SweepCombo { grade: GradeDirection::Uphill, ttg_s: 15.0 },
        SweepCombo { grade: GradeDirection::Uphill, ttg_s: 20.0 },
        SweepCombo { grade: GradeDirection::Downhill, ttg_s: 25.0 },
    ]
}

/// Cross-product sensitivity sweep over (combo, bias, sd) cells, each with
/// `replications` seeded Monte Carlo runs. Cells execute in parallel; the
/// result order is the deterministic enumeration order.
pub fn sensitivity_sweep(
    combos: &[SweepCombo],
    bias_levels: &[f64],
    sd_levels: &[f64],
    initial_speed_mps: f64,
    replications: usize,
    master_seed: u64,
    config: &OptimizerConfig,
    baseline_params: &BaselineParams,
    vehicle: &VehicleParams,
) -> Result<Vec<RunResult>, HarnessError> {
    for &level in bias_levels.iter().chain(sd_levels) {
        if !(0.0..=8.0).contains(&level) {
            return Err(HarnessError::InvalidSpec(format!(
                "sweep level {level} outside the studied [0, 8] s range"
            )));
        }
    }
    let mut specs = Vec::new();
    let mut cell = 0u64;
    for combo in combos {
        for &bias in bias_levels {
            for &sd in sd_levels {
                specs.push(ScenarioSpec {
                    kind: ScenarioKind::Stochastic,
                    grade: combo.grade,
                    initial_speed_mps,
                    ttg_s: combo.ttg_s,
                    bias_s: bias,
                    sd_s: sd,
                    replications,
                    seed: derive_seed(master_seed, cell, 0),
                });
                cell += 1;
            }
        }
    }
    specs
        .par_iter()
        .map(|spec| run_scenario(spec, config, baseline_params, vehicle))
        .collect()
}

/// One cell of the savings-proportion surface: the fraction of the maximum
/// possible (deterministic-information) savings retained under uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProportionCell {
    pub grade: GradeDirection,
    pub ttg_s: f64,
    pub bias_s: f64,
    pub sd_s: f64,
    pub mean_fuel_l: f64,
    pub deterministic_fuel_l: f64,
    pub baseline_fuel_l: f64,
    /// (baseline - stochastic) / (baseline - deterministic); None when the
    /// deterministic run saves nothing over the baseline (degenerate cell).
    pub proportion: Option<f64>,
}

/// Builds the proportion surface from sweep results, running the
/// deterministic reference for each (grade, ttg, v0) slice once.
pub fn savings_proportion_surface(
    sweep: &[RunResult],
    config: &OptimizerConfig,
    baseline_params: &BaselineParams,
    vehicle: &VehicleParams,
) -> Result<Vec<ProportionCell>, HarnessError> {
    let mut references: Vec<((GradeDirection, u64, u64), (f64, f64))> = Vec::new();
    let mut cells = Vec::with_capacity(sweep.len());
    for result in sweep {
        let spec = &result.spec;
        let key = (spec.grade, spec.ttg_s.to_bits(), spec.initial_speed_mps.to_bits());
        let (det_fuel, base_fuel) = match references.iter().find(|(k, _)| *k == key) {
            Some((_, v)) => *v,
            None => {
                let det_spec = ScenarioSpec {
                    kind: ScenarioKind::Deterministic,
                    bias_s: 0.0,
                    sd_s: 0.0,
                    replications: 1,
                    ..*spec
                };
                let det = run_scenario(&det_spec, config, baseline_params, vehicle)?;
                let v = (det.mean_fuel_l, det.baseline_fuel_l.unwrap_or(f64::NAN));
                references.push((key, v));
                v
            }
        };
        let denom = base_fuel - det_fuel;
        let proportion = if denom.abs() < 1e-12 {
            None
        } else if result.mean_fuel_l == det_fuel {
            // bitwise-degenerate cell (sd = bias = 0): exactly the maximum
            Some(1.0)
        } else {
            Some((base_fuel - result.mean_fuel_l) / denom)
        };
        cells.push(ProportionCell {
            grade: spec.grade,
            ttg_s: spec.ttg_s,
            bias_s: spec.bias_s,
            sd_s: spec.sd_s,
            mean_fuel_l: result.mean_fuel_l,
            deterministic_fuel_l: det_fuel,
            baseline_fuel_l: base_fuel,
            proportion,
        });
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn srx() -> VehicleParams {
        VehicleParams::cadillac_srx_2014()
    }

    #[test]
    fn matrix_has_twenty_four_cells() {
        let specs = table_matrix(17.88, 2.0, 2.0, 5, 42);
        assert_eq!(specs.len(), 24);
        let stochastic = specs.iter().filter(|s| s.kind == ScenarioKind::Stochastic).count();
        assert_eq!(stochastic, 8);
        for s in &specs {
            assert!(s.validate().is_empty(), "{:?}", s.validate());
        }
    }

    #[test]
    fn default_sweep_enumerates_320_cells() {
        let combos = default_sweep_combos();
        let levels = default_sweep_levels();
        assert_eq!(combos.len() * levels.len() * levels.len(), 320);
    }

    #[test]
    fn degenerate_stochastic_cell_equals_the_deterministic_cell() {
        let cfg = OptimizerConfig::default();
        let base = BaselineParams::default();
        let veh = srx();
        let det = ScenarioSpec {
            kind: ScenarioKind::Deterministic,
            grade: GradeDirection::Downhill,
            initial_speed_mps: 17.88,
            ttg_s: 20.0,
            bias_s: 0.0,
            sd_s: 0.0,
            replications: 1,
            seed: 1,
        };
        let sto = ScenarioSpec { kind: ScenarioKind::Stochastic, replications: 5, seed: 7, ..det };
        let a = run_scenario(&det, &cfg, &base, &veh).unwrap();
        let b = run_scenario(&sto, &cfg, &base, &veh).unwrap();
        assert_eq!(a.mean_fuel_l.to_bits(), b.mean_fuel_l.to_bits());
        assert_eq!(b.fuel_per_rep_l.len(), 5);
    }

    #[test]
    fn identical_specs_reproduce_identical_results() {
        let cfg = OptimizerConfig::default();
        let base = BaselineParams::default();
        let veh = srx();
        let spec = ScenarioSpec {
            kind: ScenarioKind::Stochastic,
            grade: GradeDirection::Uphill,
            initial_speed_mps: 17.88,
            ttg_s: 15.0,
            bias_s: 2.0,
            sd_s: 4.0,
            replications: 4,
            seed: 123,
        };
        let a = run_scenario(&spec, &cfg, &base, &veh).unwrap();
        let b = run_scenario(&spec, &cfg, &base, &veh).unwrap();
        assert_eq!(a.fuel_per_rep_l.len(), b.fuel_per_rep_l.len());
        for (x, y) in a.fuel_per_rep_l.iter().zip(&b.fuel_per_rep_l) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn seed_derivation_separates_cells_and_replications() {
        let a = derive_seed(42, 0, 0);
        let b = derive_seed(42, 0, 1);
        let c = derive_seed(42, 1, 0);
        let d = derive_seed(43, 0, 0);
        assert!(a != b && a != c && a != d && b != c);
    }

    #[test]
    fn sweep_rejects_levels_outside_the_studied_range() {
        let cfg = OptimizerConfig::default();
        let err = sensitivity_sweep(
            &default_sweep_combos()[..1],
            &[9.0],
            &[0.0],
            17.88,
            1,
            1,
            &cfg,
            &BaselineParams::default(),
            &srx(),
        );
        assert!(err.is_err());
    }
}
