//! Trajectory container, the comfort-limited stepper shared by the planner
//! and the synthetic driver, and the stable CSV schema for exported runs.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fuel::step_fuel_rate;
use crate::vehicle::{control_accel, Control, RoadParams, VehicleParams, VehicleState};

/// Columns of every exported trajectory CSV, in order.
pub const TRAJECTORY_CSV_HEADER: [&str; 10] = [
    "run_id",
    "t",
    "x",
    "v",
    "a",
    "control_kind",
    "control_value",
    "fuel_rate",
    "cum_fuel",
    "predicted_ttg",
];

/// One recorded step. `fuel_rate_lps` covers the step that ended at
/// `state.time_s`; it is zero for the initial state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: VehicleState,
    /// True while the forced maximum-deceleration policy was engaged.
    pub forced_brake: bool,
    /// Switching-time prediction consumed when this step was planned.
    pub predicted_switch_s: Option<f64>,
    pub fuel_rate_lps: f64,
    /// Upstream/downstream fuel estimates of the chosen policy, when the
    /// planner produced them.
    pub planned_cost_l: Option<(f64, f64)>,
}

impl Step {
    pub fn initial(state: VehicleState) -> Self {
        Self {
            state,
            forced_brake: false,
            predicted_switch_s: None,
            fuel_rate_lps: 0.0,
            planned_cost_l: None,
        }
    }
}

/// Time-ordered state sequence with per-step fuel; the unit of all evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub dt_s: f64,
    pub steps: Vec<Step>,
}

impl Trajectory {
    pub fn new(initial: VehicleState, dt_s: f64) -> Self {
        Self {
            dt_s,
            steps: vec![Step::initial(initial)],
        }
    }

    pub fn last_state(&self) -> &VehicleState {
        &self.steps.last().expect("trajectory never empty").state
    }

    pub fn states(&self) -> Vec<VehicleState> {
        self.steps.iter().map(|s| s.state).collect()
    }

    /// Total fuel, L, summed from the recorded per-step rates.
    pub fn total_fuel_l(&self) -> f64 {
        self.steps.iter().map(|s| s.fuel_rate_lps).sum::<f64>() * self.dt_s
    }

    pub fn duration_s(&self) -> f64 {
        self.last_state().time_s - self.steps[0].state.time_s
    }

    /// Appends the state reached by `advance`, recording fuel for the step.
    pub fn push(
        &mut self,
        next: VehicleState,
        forced_brake: bool,
        predicted_switch_s: Option<f64>,
        planned_cost_l: Option<(f64, f64)>,
        vehicle: &VehicleParams,
        road: &RoadParams,
    ) {
        let prev_speed = self.last_state().speed_mps;
        let fuel_rate_lps = step_fuel_rate(prev_speed, next.accel_mps2, vehicle, road);
        self.steps.push(Step {
            state: next,
            forced_brake,
            predicted_switch_s,
            fuel_rate_lps,
            planned_cost_l,
        });
    }
}

/// Speed gained while ramping a positive acceleration down to zero at the
/// jerk limit, on the discrete step grid. Used to keep accelerating states
/// recoverable below the speed limit without the governor undercutting the
/// jerk band.
pub fn jerk_ramp_down_gain(accel_mps2: f64, dt_s: f64, jerk_limit_mps3: f64) -> f64 {
    let mut a = accel_mps2.max(0.0);
    let mut gain = 0.0;
    while a > 0.0 {
        a = (a - jerk_limit_mps3 * dt_s).max(0.0);
        gain += a * dt_s;
    }
    gain
}

/// Advances one step with the applied acceleration rate-limited to the
/// comfort jerk bound around the previous step's acceleration. The forced
/// emergency brake bypasses the limiter (safety overrides comfort). Positive
/// acceleration is additionally governed so the speed limit is never crossed
/// mid-step.
pub fn advance(
    state: &VehicleState,
    control: Control,
    forced: bool,
    dt_s: f64,
    jerk_limit_mps3: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> VehicleState {
    let desired = control_accel(control, state.speed_mps, vehicle, road);
    let mut applied = if forced {
        desired
    } else {
        let band = jerk_limit_mps3 * dt_s;
        desired.clamp(state.accel_mps2 - band, state.accel_mps2 + band)
    };
    if applied > 0.0 {
        applied = applied.min(((road.speed_limit_mps - state.speed_mps) / dt_s).max(0.0));
    }
    let speed = (state.speed_mps + applied * dt_s).clamp(0.0, road.speed_limit_mps);
    VehicleState {
        time_s: state.time_s + dt_s,
        position_m: state.position_m + 0.5 * (state.speed_mps + speed) * dt_s,
        speed_mps: speed,
        accel_mps2: applied,
        control,
    }
}

/// Writes trajectories under the stable schema, one row per step.
pub fn write_trajectories_csv<W: io::Write>(
    writer: W,
    runs: &[(String, &Trajectory)],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRAJECTORY_CSV_HEADER)?;
    for (run_id, traj) in runs {
        let mut cum_fuel = 0.0;
        for step in &traj.steps {
            cum_fuel += step.fuel_rate_lps * traj.dt_s;
            let predicted_ttg = step
                .predicted_switch_s
                .map(|p| (p - step.state.time_s).to_string())
                .unwrap_or_default();
            w.write_record([
                run_id.clone(),
                step.state.time_s.to_string(),
                step.state.position_m.to_string(),
                step.state.speed_mps.to_string(),
                step.state.accel_mps2.to_string(),
                step.state.control.kind_str().to_string(),
                step.state.control.value().to_string(),
                step.fuel_rate_lps.to_string(),
                cum_fuel.to_string(),
                predicted_ttg,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectories_csv_path(
    path: &Path,
    runs: &[(String, &Trajectory)],
) -> csv::Result<()> {
    let file = std::fs::File::create(path).map_err(csv::Error::from)?;
    write_trajectories_csv(io::BufWriter::new(file), runs)
}

/// Parsed view of one CSV row; floats round-trip exactly because rows are
/// written with the shortest representation that re-parses to the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub run_id: String,
    pub time_s: f64,
    pub position_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub control: Control,
    pub fuel_rate_lps: f64,
    pub cum_fuel_l: f64,
    pub predicted_ttg_s: Option<f64>,
}

pub fn read_trajectories_csv<R: io::Read>(reader: R) -> csv::Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default().to_string();
        let parse = |i: usize| get(i).parse::<f64>().unwrap_or(f64::NAN);
        let control = match get(5).as_str() {
            "brake" => Control::Brake(parse(6)),
            _ => Control::Throttle(parse(6)),
        };
        rows.push(TrajectoryRow {
            run_id: get(0),
            time_s: parse(1),
            position_m: parse(2),
            speed_mps: parse(3),
            accel_mps2: parse(4),
            control,
            fuel_rate_lps: parse(7),
            cum_fuel_l: parse(8),
            predicted_ttg_s: record.get(9).filter(|s| !s.is_empty()).map(|s| s.parse().unwrap_or(f64::NAN)),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::VehicleParams;

    fn srx() -> VehicleParams {
        VehicleParams::cadillac_srx_2014()
    }

    fn flat() -> RoadParams {
        RoadParams::default()
    }

    #[test]
    fn advance_rate_limits_acceleration_changes() {
        let state = VehicleState::initial(10.0);
        // full throttle from rest-accel: desired jumps, applied saturates
        let next = advance(&state, Control::Throttle(1.0), false, 0.5, 1.3, &srx(), &flat());
        assert!((next.accel_mps2 - 0.65).abs() < 1e-12, "got {}", next.accel_mps2);
        // forced braking bypasses the limiter
        let forced = advance(&state, Control::Brake(-6.0), true, 0.5, 1.3, &srx(), &flat());
        assert_eq!(forced.accel_mps2, -6.0);
    }

    #[test]
    fn advance_governs_speed_at_the_limit() {
        let mut state = VehicleState::initial(17.88);
        state.accel_mps2 = 0.0;
        let road = flat();
        // downhill coast would push past the limit; governor pins it
        let downhill = RoadParams { grade: -0.03, ..road };
        let next = advance(&state, Control::COAST, false, 0.5, 1.3, &srx(), &downhill);
        assert!(next.speed_mps <= downhill.speed_limit_mps + 1e-12);
        assert!((next.accel_mps2).abs() < 1e-12);
    }

    #[test]
    fn launch_from_standstill_ramps_through_the_jerk_band() {
        // generous limit keeps the governor out of the picture
        let road = RoadParams { speed_limit_mps: 30.0, ..flat() };
        let mut s = VehicleState::initial(0.0);
        let mut prev_a = s.accel_mps2;
        for _ in 0..20 {
            s = advance(&s, Control::Throttle(0.6), false, 0.5, 1.3, &srx(), &road);
            assert!((s.accel_mps2 - prev_a).abs() <= 1.3 * 0.5 + 1e-12);
            prev_a = s.accel_mps2;
        }
        assert!(s.speed_mps > 3.0);
    }

    #[test]
    fn total_fuel_matches_recorded_rates() {
        let veh = srx();
        let road = flat();
        let mut traj = Trajectory::new(VehicleState::initial(17.88), 0.5);
        let mut s = *traj.last_state();
        for _ in 0..10 {
            let next = advance(&s, Control::Throttle(0.2), false, 0.5, 1.3, &veh, &road);
            traj.push(next, false, None, None, &veh, &road);
            s = next;
        }
        let from_states = crate::fuel::trajectory_fuel(&traj.states(), 0.5, &veh, &road);
        assert!((traj.total_fuel_l() - from_states).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip_preserves_full_precision() {
        let veh = srx();
        let road = flat();
        let mut traj = Trajectory::new(VehicleState::initial(17.88), 0.5);
        let mut s = *traj.last_state();
        for i in 0..25 {
            let control = if i % 7 == 3 { Control::Brake(-1.0) } else { Control::Throttle(0.3) };
            let next = advance(&s, control, false, 0.5, 1.3, &veh, &road);
            traj.push(next, false, Some(10.0), None, &veh, &road);
            s = next;
        }
        let mut buf = Vec::new();
        write_trajectories_csv(&mut buf, &[("run0".to_string(), &traj)]).unwrap();
        let rows = read_trajectories_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), traj.steps.len());
        for (row, step) in rows.iter().zip(&traj.steps) {
            assert_eq!(row.time_s, step.state.time_s);
            assert_eq!(row.position_m, step.state.position_m);
            assert_eq!(row.speed_mps, step.state.speed_mps);
            assert_eq!(row.accel_mps2, step.state.accel_mps2);
            assert_eq!(row.fuel_rate_lps, step.fuel_rate_lps);
            assert_eq!(row.control, step.state.control);
        }
    }
}
