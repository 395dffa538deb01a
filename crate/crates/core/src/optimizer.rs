//! Receding-horizon trajectory planner for the signalized approach.
//!
//! Every planning period the vehicle receives a switching-time prediction,
//! a risk assessment decides whether the forced maximum-deceleration policy
//! must engage, and otherwise the next control is chosen by a two-section
//! heuristic search: each candidate control is held until the predicted
//! switch (upstream fuel U_i), then the cheapest constant downstream policy
//! completes the course (downstream fuel D_ij), and the candidate minimizing
//! U_i + min_j D_ij wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spat::{SignalTiming, SpatSample, SpatSource};
use crate::trajectory::{advance, Trajectory};
use crate::vehicle::{
    control_accel, Control, RoadParams, VehicleParams, VehicleState, MAX_BRAKE_MPS2,
};

/// Distance margin added to the critical stopping distance by the planner's
/// lookahead guard and rollout feasibility check. Covers the discretization
/// slack of a braking profile that starts on a step boundary.
pub const RISK_MARGIN_M: f64 = 1.0;

/// A downstream roll-out counts as having reached the desired exit speed
/// once it is within this tolerance of it.
pub const EXIT_SPEED_TOL_MPS: f64 = 0.5;

/// Relative cost band within which the incumbent control is kept in
/// preference to a marginally cheaper challenger. The two-section totals are
/// constant-policy estimates whose approximation error is of this order, so
/// swapping policies inside the band only amplifies prediction noise.
pub const POLICY_HYSTERESIS_REL: f64 = 0.05;

/// Step caps for candidate roll-outs.
const DOWNSTREAM_ROLLOUT_CAP: usize = 240;
const UPSTREAM_ROLLOUT_CAP: usize = 2048;

/// Planner configuration; defaults reproduce the study geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub dt_s: f64,
    pub throttle_grid: Vec<f64>,
    pub brake_grid: Vec<f64>,
    pub jerk_limit_mps3: f64,
    pub max_brake_mps2: f64,
    /// Distance from the initial position to the stop bar, m.
    pub upstream_length_m: f64,
    /// Distance from the stop bar to the exit point, m.
    pub downstream_length_m: f64,
    pub desired_exit_speed_mps: f64,
    pub step_cap: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            dt_s: 0.5,
            throttle_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            brake_grid: vec![-6.0, -5.0, -4.0, -3.0, -2.0, -1.0, -0.5],
            jerk_limit_mps3: 1.3,
            max_brake_mps2: MAX_BRAKE_MPS2,
            upstream_length_m: 250.0,
            downstream_length_m: 180.0,
            desired_exit_speed_mps: 17.88,
            step_cap: 600,
        }
    }
}

impl OptimizerConfig {
    pub fn course_length_m(&self) -> f64 {
        self.upstream_length_m + self.downstream_length_m
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.dt_s > 0.0) {
            problems.push("OptimizerConfig.dt_s must be > 0".into());
        }
        if !(self.jerk_limit_mps3 > 0.0) {
            problems.push("OptimizerConfig.jerk_limit_mps3 must be > 0".into());
        }
        if self.throttle_grid.is_empty() {
            problems.push("OptimizerConfig.throttle_grid must be non-empty".into());
        }
        if self.brake_grid.is_empty() {
            problems.push("OptimizerConfig.brake_grid must be non-empty".into());
        }
        for &f in &self.throttle_grid {
            problems.extend(Control::Throttle(f).validate());
        }
        for &d in &self.brake_grid {
            if !(self.max_brake_mps2..=0.0).contains(&d) {
                problems.push(format!(
                    "Control bounds: brake level {d} outside [{}, 0]",
                    self.max_brake_mps2
                ));
            }
        }
        if !(self.max_brake_mps2 < 0.0) {
            problems.push("OptimizerConfig.max_brake_mps2 must be < 0".into());
        }
        if !(self.upstream_length_m > 0.0 && self.downstream_length_m > 0.0) {
            problems.push("OptimizerConfig section lengths must be > 0".into());
        }
        if !(self.desired_exit_speed_mps > 0.0) {
            problems.push("OptimizerConfig.desired_exit_speed_mps must be > 0".into());
        }
        if self.step_cap == 0 {
            problems.push("OptimizerConfig.step_cap must be > 0".into());
        }
        problems
    }
}

/// Which section of the course the vehicle is planning in. The phase flips
/// exactly once, at the true switch time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Upstream,
    Downstream,
}

/// Planner-visible state for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanState {
    pub vehicle: VehicleState,
    pub last_spat: SpatSample,
    pub phase: Phase,
    /// Distance traveled when the signal switched (X_S bookkeeping).
    pub distance_covered_upstream_m: f64,
}

/// Resolved control for one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub control: Control,
    /// True when the forced maximum-deceleration policy is engaged.
    pub forced: bool,
    /// (upstream, downstream) fuel estimate of the chosen policy.
    pub planned_cost_l: Option<(f64, f64)>,
}

/// Cost estimate of one upstream candidate over both sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSectionCost {
    pub upstream_fuel_l: f64,
    pub best_downstream_fuel_l: f64,
    pub feasible: bool,
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("step cap of {steps} exhausted at t={time_s:.1}s, x={position_m:.1}m")]
    StepCapExceeded {
        steps: usize,
        time_s: f64,
        position_m: f64,
    },
}

/// Constant-deceleration stopping distance v^2 / (2 |brake|), m.
pub fn critical_stopping_distance(speed_mps: f64, max_brake_mps2: f64) -> f64 {
    debug_assert!(speed_mps >= 0.0 && max_brake_mps2 < 0.0);
    speed_mps * speed_mps / (2.0 * max_brake_mps2.abs())
}

/// Remaining distance to the stop bar, m.
fn remaining_to_bar(state: &VehicleState, config: &OptimizerConfig) -> f64 {
    config.upstream_length_m - state.position_m
}

/// True when the state sits inside the protected stopping zone: closer to the
/// bar than the critical stopping distance plus the planner margin.
fn inside_risk_zone(state: &VehicleState, config: &OptimizerConfig) -> bool {
    state.speed_mps > 0.0
        && remaining_to_bar(state, config)
            <= critical_stopping_distance(state.speed_mps, config.max_brake_mps2) + RISK_MARGIN_M
}

/// Red-light risk assessment. While the signal is red, a moving vehicle whose
/// remaining distance to the bar is within the critical stopping distance can
/// only avoid running the light by braking at the maximum allowable rate.
pub fn risk_check(plan: &PlanState, config: &OptimizerConfig) -> Option<Control> {
    let v = plan.vehicle.speed_mps;
    if v <= 0.0 {
        return None;
    }
    let remaining = remaining_to_bar(&plan.vehicle, config);
    if remaining <= critical_stopping_distance(v, config.max_brake_mps2) {
        Some(Control::Brake(config.max_brake_mps2))
    } else {
        None
    }
}

/// Controls whose one-step successor respects the speed limit and stays
/// recoverable below it under the jerk bound. Coasting is always admissible;
/// the speed governor pins a coasting vehicle at the limit on downgrades.
pub fn admissible_controls(
    plan: &PlanState,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Vec<Control> {
    let state = &plan.vehicle;
    let band = config.jerk_limit_mps3 * config.dt_s;
    let mut out = Vec::with_capacity(config.brake_grid.len() + config.throttle_grid.len());
    let mut push_if_ok = |control: Control| {
        if control == Control::COAST {
            out.push(control);
            return;
        }
        let desired = control_accel(control, state.speed_mps, vehicle, road);
        let applied = desired.clamp(state.accel_mps2 - band, state.accel_mps2 + band);
        let next_speed = state.speed_mps + applied * config.dt_s;
        if next_speed > road.speed_limit_mps + 1e-9 {
            return;
        }
        // still able to ease the acceleration to zero before the limit
        if applied > 0.0 {
            let overshoot = next_speed + applied * applied / (2.0 * config.jerk_limit_mps3);
            if overshoot > road.speed_limit_mps + 1e-9 {
                return;
            }
        }
        out.push(control);
    };
    for &d in &config.brake_grid {
        push_if_ok(Control::Brake(d));
    }
    for &f in &config.throttle_grid {
        push_if_ok(Control::Throttle(f));
    }
    out
}

/// Rolls the vehicle forward holding `control` until the predicted switch.
/// Returns the section fuel and the state at the switch, or `None` when the
/// roll-out violates the expected red-light condition.
///
/// Under an exact countdown (zero bias and spread) the condition is strict:
/// the roll-out may not even enter the protected stopping zone before the
/// switch, which is what lets perfect-information approaches glide to the bar
/// without ever arming the forced brake. Noisy predictions are consumed
/// risk-neutrally — only crossing the bar before the expected switch is
/// rejected, and the runtime risk assessment covers the residual risk.
fn upstream_rollout(
    start: &VehicleState,
    control: Control,
    spat: &SpatSample,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Option<(f64, VehicleState)> {
    let predicted_switch_s = spat.predicted_switch_time_s;
    let exact = spat.bias_s == 0.0 && spat.sd_s == 0.0;
    // a planned zone entry earlier than one period past the switch would trip
    // the runtime guard before the light could reveal green
    let zone_open_s = predicted_switch_s + config.dt_s - 1e-9;
    let mut s = *start;
    let mut fuel = 0.0;
    for _ in 0..UPSTREAM_ROLLOUT_CAP {
        let next = advance(&s, control, false, config.dt_s, config.jerk_limit_mps3, vehicle, road);
        fuel += crate::fuel::step_fuel_rate(s.speed_mps, next.accel_mps2, vehicle, road)
            * config.dt_s;
        if exact && next.time_s < zone_open_s && inside_risk_zone(&next, config) {
            return None;
        }
        if s.position_m < config.upstream_length_m && next.position_m >= config.upstream_length_m {
            // interpolated bar-crossing instant must not precede the switch
            let travel = next.position_m - s.position_m;
            let frac = (config.upstream_length_m - s.position_m) / travel;
            if s.time_s + frac * config.dt_s < predicted_switch_s - 1e-9 {
                return None;
            }
        }
        s = next;
        if s.time_s >= predicted_switch_s - 1e-9 || s.position_m >= config.course_length_m() {
            break;
        }
    }
    Some((fuel, s))
}

/// Fuel to complete the course from `start` holding `control` until the
/// desired exit speed is reached, then cruising to the exit point. Infinite
/// when the policy cannot deliver the vehicle to the exit at speed.
fn downstream_cost(
    start: &VehicleState,
    control: Control,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    let end_m = config.course_length_m();
    let target = config.desired_exit_speed_mps - EXIT_SPEED_TOL_MPS;
    let cruise_tail = |state: &VehicleState| -> f64 {
        let remaining = (end_m - state.position_m).max(0.0);
        if state.speed_mps <= 0.05 {
            return f64::INFINITY;
        }
        crate::fuel::step_fuel_rate(state.speed_mps, 0.0, vehicle, road) * remaining
            / state.speed_mps
    };
    // always rolls at least one step so candidates differentiate even when
    // the start state is already at the exit speed
    let mut s = *start;
    let mut fuel = 0.0;
    for _ in 0..DOWNSTREAM_ROLLOUT_CAP {
        let next = advance(&s, control, false, config.dt_s, config.jerk_limit_mps3, vehicle, road);
        fuel += crate::fuel::step_fuel_rate(s.speed_mps, next.accel_mps2, vehicle, road)
            * config.dt_s;
        if next.speed_mps >= target {
            return fuel + cruise_tail(&next);
        }
        if next.position_m >= end_m {
            // covered the course without reaching the desired exit speed
            return f64::INFINITY;
        }
        // sinking toward a stop with the acceleration no longer climbing:
        // a held non-positive policy cannot recover (a launch ramp from a
        // stop is still climbing through the jerk band and stays alive)
        if next.speed_mps < 1.0
            && next.accel_mps2 <= 0.0
            && next.accel_mps2 <= s.accel_mps2 + 1e-12
        {
            return f64::INFINITY;
        }
        s = next;
    }
    f64::INFINITY
}

fn best_downstream(
    at_switch: &VehicleState,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    // braking cannot raise the speed to the exit target, so the inner loop
    // iterates over throttle levels only
    config
        .throttle_grid
        .iter()
        .map(|&f| downstream_cost(at_switch, Control::Throttle(f), config, vehicle, road))
        .fold(f64::INFINITY, f64::min)
}

/// Two-section heuristic cost of holding `upstream_control` until the
/// predicted switch and finishing with the best constant downstream policy.
pub fn two_section_cost(
    plan: &PlanState,
    upstream_control: Control,
    spat: &SpatSample,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> TwoSectionCost {
    match upstream_rollout(&plan.vehicle, upstream_control, spat, config, vehicle, road) {
        None => TwoSectionCost {
            upstream_fuel_l: f64::INFINITY,
            best_downstream_fuel_l: f64::INFINITY,
            feasible: false,
        },
        Some((upstream_fuel_l, at_switch)) => {
            let best = best_downstream(&at_switch, config, vehicle, road);
            TwoSectionCost {
                upstream_fuel_l,
                best_downstream_fuel_l: best,
                feasible: best.is_finite(),
            }
        }
    }
}

/// Candidate comparison: minimum total cost, ties broken toward the control
/// closest to the current one, then toward the gentler control.
fn better(
    challenger: (f64, Control),
    incumbent: (f64, Control),
    current: Control,
) -> bool {
    let (c_cost, c_ctl) = challenger;
    let (i_cost, i_ctl) = incumbent;
    if c_cost != i_cost {
        return c_cost < i_cost;
    }
    let c_dist = (c_ctl.key() - current.key()).abs();
    let i_dist = (i_ctl.key() - current.key()).abs();
    if c_dist != i_dist {
        return c_dist < i_dist;
    }
    c_ctl.key() < i_ctl.key()
}

/// Selects the control for the next step.
///
/// While the signal is red the risk assessment runs first; otherwise the
/// upstream phase minimizes U_i + D_best over feasible candidates (falling
/// back to the strongest admissible deceleration when none is feasible), and
/// the downstream phase minimizes the completion cost alone. A one-step
/// lookahead refuses to carry the vehicle into the protected stopping zone
/// while the light is still red.
pub fn next_control(
    plan: &PlanState,
    spat: &SpatSample,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Decision {
    let red = plan.phase == Phase::Upstream;
    if red {
        if let Some(control) = risk_check(plan, config) {
            return Decision { control, forced: true, planned_cost_l: None };
        }
    }
    let admissible = admissible_controls(plan, config, vehicle, road);
    let current = plan.vehicle.control;

    let (planned, costs) = match plan.phase {
        // a prediction pointing at or before the next step leaves no horizon
        // to plan against while the light is still visibly red: hold course
        // (easing off any brake) until the switch actually reveals itself
        Phase::Upstream
            if spat.predicted_switch_time_s <= plan.vehicle.time_s + config.dt_s =>
        {
            let hold = if current.is_throttle() { current } else { Control::COAST };
            (hold, None)
        }
        Phase::Upstream => {
            let mut best: Option<(f64, Control, (f64, f64))> = None;
            let mut incumbent: Option<(f64, (f64, f64))> = None;
            for &u in &admissible {
                let cost = two_section_cost(plan, u, spat, config, vehicle, road);
                if !cost.feasible {
                    continue;
                }
                let total = cost.upstream_fuel_l + cost.best_downstream_fuel_l;
                let split = (cost.upstream_fuel_l, cost.best_downstream_fuel_l);
                if u == current {
                    incumbent = Some((total, split));
                }
                match &best {
                    Some((t, c, _)) if !better((total, u), (*t, *c), current) => {}
                    _ => best = Some((total, u, split)),
                }
            }
            match best {
                Some((best_total, control, c)) => match incumbent {
                    // keep the incumbent policy while it stays within the
                    // heuristic's error band of the best challenger
                    Some((t, split)) if t <= best_total * (1.0 + POLICY_HYSTERESIS_REL) => {
                        (current, Some(split))
                    }
                    _ => (control, Some(c)),
                },
                None => {
                    // every candidate violates the expected red-light
                    // condition: adopt the strongest admissible deceleration
                    let fallback = admissible
                        .iter()
                        .copied()
                        .min_by(|a, b| a.key().partial_cmp(&b.key()).unwrap())
                        .unwrap_or(Control::Brake(config.max_brake_mps2));
                    (fallback, None)
                }
            }
        }
        Phase::Downstream => {
            let mut best: Option<(f64, Control)> = None;
            let mut incumbent: Option<f64> = None;
            for &c in &admissible {
                let cost = downstream_cost(&plan.vehicle, c, config, vehicle, road);
                if !cost.is_finite() {
                    continue;
                }
                if c == current {
                    incumbent = Some(cost);
                }
                match &best {
                    Some(inc) if !better((cost, c), *inc, current) => {}
                    _ => best = Some((cost, c)),
                }
            }
            match best {
                Some((d, control)) => match incumbent {
                    Some(t) if t <= d * (1.0 + POLICY_HYSTERESIS_REL) => {
                        (current, Some((0.0, t)))
                    }
                    _ => (control, Some((0.0, d))),
                },
                // end-of-course residual: no candidate can still reach the
                // exit speed in the distance left, so hold the current policy
                None => (current, None),
            }
        }
    };

    if red {
        let successor = advance(
            &plan.vehicle,
            planned,
            false,
            config.dt_s,
            config.jerk_limit_mps3,
            vehicle,
            road,
        );
        if inside_risk_zone(&successor, config) {
            return Decision {
                control: Control::Brake(config.max_brake_mps2),
                forced: true,
                planned_cost_l: None,
            };
        }
    }
    Decision { control: planned, forced: false, planned_cost_l: costs }
}

/// Runs the full receding-horizon loop from the course entry to the exit
/// point: receive a prediction, assess risk, choose a control, advance one
/// step; the phase flips to downstream when the signal actually switches.
pub fn plan_trajectory(
    timing: &SignalTiming,
    source: &mut SpatSource,
    initial_speed_mps: f64,
    config: &OptimizerConfig,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> Result<Trajectory, PlanError> {
    let end_m = config.course_length_m();
    let initial = VehicleState::initial(initial_speed_mps);
    let mut traj = Trajectory::new(initial, config.dt_s);
    let mut plan = PlanState {
        vehicle: initial,
        last_spat: SpatSample::exact(timing.true_switch_time_s, 0.0),
        phase: if timing.is_red(0.0) { Phase::Upstream } else { Phase::Downstream },
        distance_covered_upstream_m: 0.0,
    };
    if plan.phase == Phase::Downstream {
        plan.distance_covered_upstream_m = 0.0;
    }
    let mut latched = false;
    let mut prev_forced = false;

    for _ in 0..config.step_cap {
        if plan.vehicle.position_m >= end_m {
            return Ok(traj);
        }
        let now = plan.vehicle.time_s;
        let red = timing.is_red(now);
        if !red && plan.phase == Phase::Upstream {
            plan.phase = Phase::Downstream;
            plan.distance_covered_upstream_m =
                plan.vehicle.position_m.min(config.upstream_length_m);
        }
        // releasing the forced brake ends the emergency: the pedal comes off
        // at once and comfort limiting resumes from a zero-accel reference
        if prev_forced {
            plan.vehicle.accel_mps2 = 0.0;
        }

        let mut predicted = None;
        let decision = if red {
            let sample = source.next_sample(timing, now);
            predicted = Some(sample.predicted_switch_time_s);
            plan.last_spat = sample;
            if latched && plan.vehicle.speed_mps > 0.0 {
                // hold the forced deceleration to a stop while the signal
                // stays red
                Decision {
                    control: Control::Brake(config.max_brake_mps2),
                    forced: true,
                    planned_cost_l: None,
                }
            } else {
                latched = false;
                let d = next_control(&plan, &sample, config, vehicle, road);
                if d.forced {
                    latched = true;
                }
                d
            }
        } else {
            latched = false;
            let sample = plan.last_spat;
            next_control(&plan, &sample, config, vehicle, road)
        };

        let next = advance(
            &plan.vehicle,
            decision.control,
            decision.forced,
            config.dt_s,
            config.jerk_limit_mps3,
            vehicle,
            road,
        );
        traj.push(next, decision.forced, predicted, decision.planned_cost_l, vehicle, road);
        plan.vehicle = next;
        prev_forced = decision.forced;
    }
    Err(PlanError::StepCapExceeded {
        steps: config.step_cap,
        time_s: plan.vehicle.time_s,
        position_m: plan.vehicle.position_m,
    })
}
