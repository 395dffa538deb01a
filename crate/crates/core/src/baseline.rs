//! Synthetic uninformed-driver model and fuel-savings scoring.
//!
//! The driver cruises at the entry speed, brakes comfortably to a stop at the
//! bar when the red light demands it, idles until green plus a reaction time,
//! and accelerates back to the desired speed through the downstream section.
//! All parameters are exposed so users with field data can recalibrate.

use serde::{Deserialize, Serialize};

use crate::fuel::trajectory_fuel;
use crate::optimizer::OptimizerConfig;
use crate::spat::SignalTiming;
use crate::trajectory::{advance, Trajectory};
use crate::vehicle::{cruise_hold_control, Control, RoadParams, VehicleParams, VehicleState};

/// Stop-at-the-bar placement margin, m.
const STOP_MARGIN_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineParams {
    pub comfort_decel_mps2: f64,
    pub accel_throttle: f64,
    pub reaction_time_s: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            comfort_decel_mps2: -2.0,
            accel_throttle: 0.6,
            reaction_time_s: 1.0,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.comfort_decel_mps2 < 0.0) {
            problems.push("BaselineParams.comfort_decel_mps2 must be < 0".into());
        }
        if !(self.accel_throttle > 0.0 && self.accel_throttle <= 1.0) {
            problems.push("BaselineParams.accel_throttle must be in (0, 1]".into());
        }
        if !(self.reaction_time_s >= 0.0) {
            problems.push("BaselineParams.reaction_time_s must be >= 0".into());
        }
        problems
    }
}

/// Where the vehicle would come to rest if it cruised one more step and then
/// braked at the comfort rate (rate-limited like the real profile).
fn stop_position_after_waiting(
    state: &VehicleState,
    params: &BaselineParams,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    let cruise = cruise_hold_control(state.speed_mps, vehicle, road);
    let mut s = advance(state, cruise, false, config.dt_s, config.jerk_limit_mps3, vehicle, road);
    for _ in 0..600 {
        if s.speed_mps <= 0.0 {
            break;
        }
        s = advance(
            &s,
            Control::Brake(params.comfort_decel_mps2),
            false,
            config.dt_s,
            config.jerk_limit_mps3,
            vehicle,
            road,
        );
    }
    s.position_m
}

/// Throttle-or-hold choice while accelerating back to the target speed: eases
/// to a speed hold early enough that the jerk-limited ramp-down lands at the
/// target without crossing the limit.
fn acceleration_control(
    state: &VehicleState,
    params: &BaselineParams,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Control {
    let target = config.desired_exit_speed_mps.min(road.speed_limit_mps);
    let a = state.accel_mps2.max(0.0);
    let landing = state.speed_mps
        + a * config.dt_s
        + a * a / (2.0 * config.jerk_limit_mps3);
    if landing >= target {
        cruise_hold_control(state.speed_mps, vehicle, road)
    } else {
        Control::Throttle(params.accel_throttle)
    }
}

/// Rolls out the uninformed-driver trajectory over the same course geometry
/// as the planner.
pub fn baseline_trajectory(
    timing: &SignalTiming,
    initial_speed_mps: f64,
    params: &BaselineParams,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Trajectory {
    let end_m = config.course_length_m();
    let go_time_s = timing.true_switch_time_s + params.reaction_time_s;
    let mut traj = Trajectory::new(VehicleState::initial(initial_speed_mps), config.dt_s);
    let mut state = *traj.last_state();
    let mut braking = false;

    for _ in 0..config.step_cap {
        if state.position_m >= end_m {
            break;
        }
        let now = state.time_s;
        let red = timing.is_red(now);
        let control = if now >= go_time_s {
            acceleration_control(&state, params, config, vehicle, road)
        } else if braking {
            if state.speed_mps > 0.0 {
                Control::Brake(params.comfort_decel_mps2)
            } else {
                Control::Brake(0.0) // holding at the light
            }
        } else if red
            && stop_position_after_waiting(&state, params, config, vehicle, road)
                > config.upstream_length_m - STOP_MARGIN_M
        {
            braking = true;
            Control::Brake(params.comfort_decel_mps2)
        } else {
            cruise_hold_control(state.speed_mps, vehicle, road)
        };
        let next = advance(
            &state,
            control,
            false,
            config.dt_s,
            config.jerk_limit_mps3,
            vehicle,
            road,
        );
        traj.push(next, false, None, None, vehicle, road);
        state = next;
    }
    traj
}

/// Percent fuel saved by the optimized trajectory relative to the baseline:
/// 100 (fuel_base - fuel_opt) / fuel_base. Negative when the baseline wins.
pub fn fuel_savings(
    optimized: &Trajectory,
    base: &Trajectory,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    let fo = trajectory_fuel(&optimized.states(), optimized.dt_s, vehicle, road);
    let fb = trajectory_fuel(&base.states(), base.dt_s, vehicle, road);
    100.0 * (fb - fo) / fb
}
