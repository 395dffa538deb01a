//! Light-duty longitudinal vehicle dynamics: tractive and resistance forces
//! and the kinematic step update.
//!
//! The force and power formulas follow the power-based light-duty vehicle
//! model convention: internal state is SI (m, m/s, s), but speed enters the
//! force/power expressions in km/h and engine power in kW, which is where the
//! 3600 and 25.91 factors come from.

use serde::{Deserialize, Serialize};

/// km/h per m/s.
pub const KMH_PER_MPS: f64 = 3.6;

/// Standard gravitational acceleration, m/s^2.
pub const STANDARD_GRAVITY_MPS2: f64 = 9.8066;

/// Engine-force speed floor, km/h. The power term of the tractive force
/// diverges as v -> 0; below this speed the tire adhesion limit governs
/// anyway, so the floor only removes the singularity.
pub const ENGINE_SPEED_FLOOR_KMH: f64 = 5.0;

/// Maximum allowable service-brake deceleration, m/s^2.
pub const MAX_BRAKE_MPS2: f64 = -6.0;

/// Calibrated physical and fuel constants of the simulated vehicle.
///
/// `fuel_alpha0..2` are the coefficients of the quadratic power-to-fuel-rate
/// map (L/s per kW); the remaining fields parameterize the force balance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub driveline_efficiency: f64,
    /// Gear shift factor; 1.0 for light-duty vehicles.
    pub gear_factor: f64,
    pub max_power_kw: f64,
    pub frontal_area_m2: f64,
    pub drag_coeff: f64,
    pub altitude_factor: f64,
    pub air_density_kg_m3: f64,
    pub rolling_c0: f64,
    pub rolling_c1: f64,
    pub rolling_c2: f64,
    /// Fraction of vehicle mass carried by the tractive axle.
    pub tractive_mass_fraction: f64,
    /// Tire-road adhesion coefficient (dry asphalt default).
    pub friction_coeff: f64,
    pub fuel_alpha0: f64,
    pub fuel_alpha1: f64,
    pub fuel_alpha2: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self::cadillac_srx_2014()
    }
}

impl VehicleParams {
    /// Calibrated 2014 Cadillac SRX parameters.
    pub fn cadillac_srx_2014() -> Self {
        Self {
            mass_kg: 2388.0,
            driveline_efficiency: 0.92,
            gear_factor: 1.0,
            max_power_kw: 229.7,
            frontal_area_m2: 3.33,
            drag_coeff: 0.39,
            altitude_factor: 0.95,
            air_density_kg_m3: 1.2256,
            rolling_c0: 1.75,
            rolling_c1: 0.0328,
            rolling_c2: 4.55,
            tractive_mass_fraction: 0.54,
            friction_coeff: 0.60,
            fuel_alpha0: 7.89e-4,
            fuel_alpha1: -5.77e-19,
            fuel_alpha2: 2.27e-6,
        }
    }

    /// Tire adhesion force limit, N.
    pub fn tire_force_limit_n(&self, gravity_mps2: f64) -> f64 {
        self.tractive_mass_fraction * self.mass_kg * gravity_mps2 * self.friction_coeff
    }

    /// Returns every violated invariant, empty when the parameters are valid.
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.mass_kg > 0.0) {
            problems.push("VehicleParams.mass_kg must be > 0".into());
        }
        if !(self.driveline_efficiency > 0.0 && self.driveline_efficiency <= 1.0) {
            problems.push("VehicleParams.driveline_efficiency must be in (0, 1]".into());
        }
        if !(self.tractive_mass_fraction > 0.0 && self.tractive_mass_fraction <= 1.0) {
            problems.push("VehicleParams.tractive_mass_fraction must be in (0, 1]".into());
        }
        if !(self.max_power_kw > 0.0) {
            problems.push("VehicleParams.max_power_kw must be > 0".into());
        }
        if !(self.friction_coeff > 0.0) {
            problems.push("VehicleParams.friction_coeff must be > 0".into());
        }
        if !(self.fuel_alpha0 > 0.0) {
            problems.push("VehicleParams.fuel_alpha0 must be > 0".into());
        }
        problems
    }
}

/// Roadway description for one approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoadParams {
    /// Signed vertical grade, rise/run.
    pub grade: f64,
    pub speed_limit_mps: f64,
    pub gravity_mps2: f64,
}

impl Default for RoadParams {
    fn default() -> Self {
        Self {
            grade: 0.0,
            speed_limit_mps: 17.88,
            gravity_mps2: STANDARD_GRAVITY_MPS2,
        }
    }
}

impl RoadParams {
    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if !(self.grade.abs() < 0.2) {
            problems.push("RoadParams.grade must satisfy |grade| < 0.2".into());
        }
        if !(self.speed_limit_mps > 0.0) {
            problems.push("RoadParams.speed_limit_mps must be > 0".into());
        }
        problems
    }
}

/// A single scalar driving decision: a throttle fraction or a commanded
/// braking deceleration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value")]
pub enum Control {
    /// Normalized engine power command in [0, 1].
    Throttle(f64),
    /// Commanded deceleration in [MAX_BRAKE_MPS2, 0].
    Brake(f64),
}

impl Control {
    pub const COAST: Control = Control::Throttle(0.0);

    pub fn is_throttle(&self) -> bool {
        matches!(self, Control::Throttle(_))
    }

    pub fn value(&self) -> f64 {
        match *self {
            Control::Throttle(f) => f,
            Control::Brake(d) => d,
        }
    }

    /// Scalar key used for "closest control" tie-breaking: brakes map to
    /// their (negative) deceleration, throttles to their fraction, so the
    /// ordering runs from hard braking through coast to full throttle.
    pub fn key(&self) -> f64 {
        self.value()
    }

    pub fn kind_str(&self) -> &'static str {
        match self {
            Control::Throttle(_) => "throttle",
            Control::Brake(_) => "brake",
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut problems = Vec::new();
        match *self {
            Control::Throttle(f) => {
                if !(0.0..=1.0).contains(&f) {
                    problems.push(format!("Control bounds: throttle {f} outside [0, 1]"));
                }
            }
            Control::Brake(d) => {
                if !(MAX_BRAKE_MPS2..=0.0).contains(&d) {
                    problems.push(format!(
                        "Control bounds: brake {d} outside [{MAX_BRAKE_MPS2}, 0]"
                    ));
                }
            }
        }
        problems
    }
}

/// Time-stamped kinematic state. `accel_mps2` and `control` describe what was
/// applied over the step that *ended* at `time_s`; the initial state of a
/// trajectory carries zero acceleration and a coast control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub time_s: f64,
    pub position_m: f64,
    pub speed_mps: f64,
    pub accel_mps2: f64,
    pub control: Control,
}

impl VehicleState {
    pub fn initial(speed_mps: f64) -> Self {
        Self {
            time_s: 0.0,
            position_m: 0.0,
            speed_mps,
            accel_mps2: 0.0,
            control: Control::COAST,
        }
    }
}

/// Sum of rolling, aerodynamic, and grade resistance forces, N.
pub fn resistance_force(speed_mps: f64, vehicle: &VehicleParams, road: &RoadParams) -> f64 {
    debug_assert!(speed_mps >= 0.0);
    let v_kmh = speed_mps * KMH_PER_MPS;
    let aero = vehicle.air_density_kg_m3 / 25.91
        * vehicle.drag_coeff
        * vehicle.altitude_factor
        * vehicle.frontal_area_m2
        * v_kmh
        * v_kmh;
    let mg = vehicle.mass_kg * road.gravity_mps2;
    let rolling = mg * vehicle.rolling_c0 / 1000.0 * (vehicle.rolling_c1 * v_kmh + vehicle.rolling_c2);
    let grade = mg * road.grade;
    aero + rolling + grade
}

/// Engine tractive force for a throttle control, N, bounded above by the tire
/// adhesion limit.
///
/// Panics on a brake control; braking commands a deceleration directly and
/// never passes through the force balance.
pub fn tractive_force(
    control: Control,
    speed_mps: f64,
    vehicle: &VehicleParams,
    gravity_mps2: f64,
) -> f64 {
    let throttle = match control {
        Control::Throttle(f) => f,
        Control::Brake(_) => panic!("tractive_force expects a throttle control"),
    };
    let v_kmh = (speed_mps * KMH_PER_MPS).max(ENGINE_SPEED_FLOOR_KMH);
    let engine = 3600.0 * throttle * vehicle.driveline_efficiency * vehicle.gear_factor
        * vehicle.max_power_kw
        / v_kmh;
    engine.min(vehicle.tire_force_limit_n(gravity_mps2))
}

/// Net acceleration produced by a control at the given speed, m/s^2.
///
/// Throttle: (F - R)/m from the force balance. Brake: the commanded
/// deceleration itself; grade and rolling effects during braking are absorbed
/// into the commanded value.
pub fn control_accel(
    control: Control,
    speed_mps: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    match control {
        Control::Throttle(_) => {
            let f = tractive_force(control, speed_mps, vehicle, road.gravity_mps2);
            let r = resistance_force(speed_mps, vehicle, road);
            (f - r) / vehicle.mass_kg
        }
        Control::Brake(decel) => decel,
    }
}

/// Advances the kinematic state one step under a control.
///
/// Speed is clamped to [0, speed limit]; position uses a trapezoidal update.
/// The recorded acceleration is the commanded one, so a braking command held
/// through the stop keeps its value while the speed clamp pins v at zero.
pub fn step_dynamics(
    state: &VehicleState,
    control: Control,
    dt_s: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> VehicleState {
    debug_assert!(dt_s > 0.0);
    let accel = control_accel(control, state.speed_mps, vehicle, road);
    let speed = (state.speed_mps + accel * dt_s).clamp(0.0, road.speed_limit_mps);
    VehicleState {
        time_s: state.time_s + dt_s,
        position_m: state.position_m + 0.5 * (state.speed_mps + speed) * dt_s,
        speed_mps: speed,
        accel_mps2: accel,
        control,
    }
}

/// Control that holds the current speed exactly: a force-balance throttle
/// where resistance is positive, a zero-deceleration brake hold otherwise
/// (downhill, where gravity would accelerate a coasting vehicle).
pub fn cruise_hold_control(speed_mps: f64, vehicle: &VehicleParams, road: &RoadParams) -> Control {
    let r = resistance_force(speed_mps, vehicle, road);
    if r <= 0.0 {
        return Control::Brake(0.0);
    }
    let v_kmh = (speed_mps * KMH_PER_MPS).max(ENGINE_SPEED_FLOOR_KMH);
    let tire_limit = vehicle.tire_force_limit_n(road.gravity_mps2);
    if r >= tire_limit {
        return Control::Throttle(1.0);
    }
    let f = r * v_kmh
        / (3600.0 * vehicle.driveline_efficiency * vehicle.gear_factor * vehicle.max_power_kw);
    Control::Throttle(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn srx() -> VehicleParams {
        VehicleParams::cadillac_srx_2014()
    }

    fn flat() -> RoadParams {
        RoadParams::default()
    }

    #[test]
    fn resistance_at_rest_is_rolling_only() {
        // mg * c_r0/1000 * c_r2 = 40.982 * 4.55
        let r = resistance_force(0.0, &srx(), &flat());
        assert!((r - 186.5).abs() < 0.1, "got {r}");
    }

    #[test]
    fn resistance_at_cruise_speed() {
        let r = resistance_force(17.88, &srx(), &flat());
        assert!((r - 515.1).abs() < 0.5, "got {r}");
    }

    #[test]
    fn resistance_with_grade_adds_weight_component() {
        let road = RoadParams { grade: 0.03, ..flat() };
        let r = resistance_force(0.0, &srx(), &road);
        let expected = 186.5 + 2388.0 * STANDARD_GRAVITY_MPS2 * 0.03;
        assert!((r - expected).abs() < 0.2, "got {r}, expected {expected}");
    }

    #[test]
    fn tractive_zero_throttle_is_zero() {
        assert_eq!(
            tractive_force(Control::Throttle(0.0), 10.0, &srx(), STANDARD_GRAVITY_MPS2),
            0.0
        );
    }

    #[test]
    fn tractive_full_throttle_at_cruise_is_tire_limited() {
        let f = tractive_force(Control::Throttle(1.0), 17.88, &srx(), STANDARD_GRAVITY_MPS2);
        assert!((f - 7587.5).abs() < 1.0, "got {f}");
    }

    #[test]
    fn tractive_near_standstill_hits_tire_limit() {
        let f = tractive_force(Control::Throttle(1.0), 0.0, &srx(), STANDARD_GRAVITY_MPS2);
        assert!((f - 7587.5).abs() < 1.0, "got {f}");
    }

    #[test]
    #[should_panic(expected = "throttle control")]
    fn tractive_rejects_brake_controls() {
        tractive_force(Control::Brake(-2.0), 10.0, &srx(), STANDARD_GRAVITY_MPS2);
    }

    #[test]
    fn step_accel_from_force_balance() {
        // a = (F - R)/m with full-throttle tire-limited force at cruise speed
        let state = VehicleState::initial(17.88);
        let next = step_dynamics(&state, Control::Throttle(1.0), 0.5, &srx(), &flat());
        assert!((next.accel_mps2 - 2.962).abs() < 2e-3, "got {}", next.accel_mps2);
    }

    #[test]
    fn step_zero_accel_advances_position_trapezoidally() {
        let state = VehicleState::initial(17.88);
        let cruise = cruise_hold_control(17.88, &srx(), &flat());
        let next = step_dynamics(&state, cruise, 0.5, &srx(), &flat());
        assert!((next.speed_mps - 17.88).abs() < 1e-9);
        assert!((next.position_m - 8.94).abs() < 1e-9);
    }

    #[test]
    fn step_clamps_speed_at_zero() {
        let mut state = VehicleState::initial(0.5);
        state.accel_mps2 = -6.0;
        let next = step_dynamics(&state, Control::Brake(-6.0), 0.5, &srx(), &flat());
        assert_eq!(next.speed_mps, 0.0);
        assert_eq!(next.accel_mps2, -6.0);
    }

    #[test]
    fn cruise_hold_balances_forces() {
        let veh = srx();
        for &(grade, v) in &[(0.0, 17.88), (0.03, 17.88), (0.03, 10.0), (0.0, 5.0)] {
            let road = RoadParams { grade, ..flat() };
            let c = cruise_hold_control(v, &veh, &road);
            let mut s = VehicleState::initial(v);
            for _ in 0..20 {
                s = step_dynamics(&s, c, 0.5, &veh, &road);
            }
            assert!((s.speed_mps - v).abs() < 1e-9, "grade {grade} v {v} -> {}", s.speed_mps);
        }
    }

    #[test]
    fn srx_parameters_match_calibration_table() {
        let v = srx();
        assert_eq!(v.mass_kg, 2388.0);
        assert_eq!(v.max_power_kw, 229.7);
        assert_eq!(v.fuel_alpha0, 7.89e-4);
        assert_eq!(v.fuel_alpha1, -5.77e-19);
        assert_eq!(v.fuel_alpha2, 2.27e-6);
        assert_eq!(v.rolling_c0, 1.75);
        assert_eq!(v.rolling_c1, 0.0328);
        assert_eq!(v.rolling_c2, 4.55);
        assert_eq!(v.drag_coeff, 0.39);
        assert_eq!(v.altitude_factor, 0.95);
        assert_eq!(v.air_density_kg_m3, 1.2256);
        assert_eq!(v.frontal_area_m2, 3.33);
        assert_eq!(v.driveline_efficiency, 0.92);
        assert_eq!(v.tractive_mass_fraction, 0.54);
        assert!(v.validate().is_empty());
    }

    proptest! {
        #[test]
        fn resistance_strictly_increasing_in_speed(v in 0.01f64..40.0, dv in 0.01f64..5.0) {
            let r1 = resistance_force(v, &srx(), &flat());
            let r2 = resistance_force(v + dv, &srx(), &flat());
            prop_assert!(r2 > r1);
        }

        #[test]
        fn tractive_never_exceeds_tire_limit(f in 0.0f64..=1.0, v in 0.0f64..40.0) {
            let force = tractive_force(Control::Throttle(f), v, &srx(), STANDARD_GRAVITY_MPS2);
            prop_assert!(force <= srx().tire_force_limit_n(STANDARD_GRAVITY_MPS2) + 1e-9);
        }

        #[test]
        fn grade_symmetry(v in 0.0f64..40.0, g in 0.0f64..0.19) {
            let up = RoadParams { grade: g, ..flat() };
            let down = RoadParams { grade: -g, ..flat() };
            let diff = resistance_force(v, &srx(), &up) - resistance_force(v, &srx(), &down);
            let expected = 2.0 * 2388.0 * STANDARD_GRAVITY_MPS2 * g;
            prop_assert!((diff - expected).abs() < 1e-6);
        }

        #[test]
        fn step_keeps_speed_in_bounds(
            v in 0.0f64..17.88,
            f in 0.0f64..=1.0,
            brake in -6.0f64..=0.0,
            use_brake: bool,
        ) {
            let control = if use_brake { Control::Brake(brake) } else { Control::Throttle(f) };
            let state = VehicleState::initial(v);
            let next = step_dynamics(&state, control, 0.5, &srx(), &flat());
            prop_assert!(next.speed_mps >= 0.0);
            prop_assert!(next.speed_mps <= flat().speed_limit_mps + 1e-12);
            prop_assert!(next.position_m >= state.position_m);
        }
    }
}
