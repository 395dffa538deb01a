//! Instantaneous vehicle power and the power-based fuel-rate model, plus
//! trajectory fuel integration (the quantity every run is scored on).

use serde::{Deserialize, Serialize};

use crate::vehicle::{resistance_force, RoadParams, VehicleParams, VehicleState, KMH_PER_MPS};

/// One power/fuel-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelRecord {
    pub power_kw: f64,
    pub fuel_rate_lps: f64,
}

/// Instantaneous vehicle power, kW. Negative while decelerating hard enough
/// that the inertia term dominates resistance.
pub fn vehicle_power(
    speed_mps: f64,
    accel_mps2: f64,
    resistance_n: f64,
    vehicle: &VehicleParams,
) -> f64 {
    debug_assert!(speed_mps >= 0.0);
    let v_kmh = speed_mps * KMH_PER_MPS;
    (resistance_n + 1.04 * vehicle.mass_kg * accel_mps2) * v_kmh
        / (3600.0 * vehicle.driveline_efficiency)
}

/// Fuel rate, L/s: quadratic in power for non-negative power, the constant
/// idle rate alpha0 otherwise. The idle floor on negative power is what
/// removes the bang-bang incentive from the underlying model.
///
/// Note the quadratic coefficient is alpha2; the calibration table lists all
/// three coefficients and alpha2 is the quadratic one.
pub fn fuel_rate(power_kw: f64, vehicle: &VehicleParams) -> f64 {
    if power_kw >= 0.0 {
        vehicle.fuel_alpha0 + vehicle.fuel_alpha1 * power_kw + vehicle.fuel_alpha2 * power_kw * power_kw
    } else {
        vehicle.fuel_alpha0
    }
}

/// Power and fuel rate for one step: speed at the start of the step, the
/// acceleration applied across it.
pub fn fuel_record(
    speed_mps: f64,
    accel_mps2: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> FuelRecord {
    let r = resistance_force(speed_mps, vehicle, road);
    let power_kw = vehicle_power(speed_mps, accel_mps2, r, vehicle);
    FuelRecord {
        power_kw,
        fuel_rate_lps: fuel_rate(power_kw, vehicle),
    }
}

/// Fuel rate over one step, L/s.
pub fn step_fuel_rate(
    speed_mps: f64,
    accel_mps2: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    fuel_record(speed_mps, accel_mps2, vehicle, road).fuel_rate_lps
}

/// Integrates fuel over a time-ordered, uniformly spaced state sequence, L.
///
/// Step i (from state i-1 to state i) is costed at the speed where it began
/// and the acceleration applied across it. An empty or single-state sequence
/// consumes nothing.
pub fn trajectory_fuel(
    states: &[VehicleState],
    dt_s: f64,
    vehicle: &VehicleParams,
    road: &RoadParams,
) -> f64 {
    states
        .windows(2)
        .map(|w| step_fuel_rate(w[0].speed_mps, w[1].accel_mps2, vehicle, road) * dt_s)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicle::Control;
    use proptest::prelude::*;

    fn srx() -> VehicleParams {
        VehicleParams::cadillac_srx_2014()
    }

    fn flat() -> RoadParams {
        RoadParams::default()
    }

    #[test]
    fn cruise_power_at_forty_mph() {
        let p = vehicle_power(17.88, 0.0, 515.1, &srx());
        assert!((p - 10.01).abs() < 0.02, "got {p}");
    }

    #[test]
    fn accelerating_power_at_forty_mph() {
        let p = vehicle_power(17.88, 2.962, 515.1, &srx());
        assert!((p - 152.9).abs() < 0.2, "got {p}");
    }

    #[test]
    fn strong_deceleration_gives_negative_power() {
        let p = vehicle_power(17.88, -3.0, 515.1, &srx());
        assert!(p < 0.0);
    }

    #[test]
    fn negative_power_fuel_is_idle_rate() {
        assert_eq!(fuel_rate(-50.0, &srx()), 7.89e-4);
    }

    #[test]
    fn zero_power_fuel_is_idle_rate() {
        assert_eq!(fuel_rate(0.0, &srx()), 7.89e-4);
    }

    #[test]
    fn cruise_fuel_rate() {
        let rate = fuel_rate(10.01, &srx());
        assert!((rate - 1.0165e-3).abs() < 1e-6, "got {rate}");
    }

    #[test]
    fn empty_trajectory_consumes_nothing() {
        assert_eq!(trajectory_fuel(&[], 0.5, &srx(), &flat()), 0.0);
        assert_eq!(
            trajectory_fuel(&[VehicleState::initial(0.0)], 0.5, &srx(), &flat()),
            0.0
        );
    }

    #[test]
    fn idling_burns_the_idle_rate() {
        // 60 s of standstill at dt = 0.5
        let mut states = vec![VehicleState::initial(0.0)];
        for i in 1..=120 {
            let mut s = VehicleState::initial(0.0);
            s.time_s = i as f64 * 0.5;
            states.push(s);
        }
        let fuel = trajectory_fuel(&states, 0.5, &srx(), &flat());
        assert!((fuel - 0.04734).abs() < 1e-9, "got {fuel}");
    }

    #[test]
    fn cruise_fuel_over_the_upstream_length() {
        // 250 m at 17.88 m/s: constant-speed steps, duration 13.98 s
        let duration = 250.0 / 17.88;
        let n = 100;
        let dt = duration / n as f64;
        let mut states = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut s = VehicleState::initial(17.88);
            s.time_s = i as f64 * dt;
            s.position_m = 17.88 * s.time_s;
            s.control = Control::Throttle(0.1);
            states.push(s);
        }
        let fuel = trajectory_fuel(&states, dt, &srx(), &flat());
        assert!((fuel - 0.01422).abs() < 1e-4, "got {fuel}");
    }

    proptest! {
        #[test]
        fn fuel_rate_nondecreasing_in_power(p in 0.0f64..230.0, dp in 0.0f64..50.0) {
            prop_assert!(fuel_rate(p + dp, &srx()) >= fuel_rate(p, &srx()));
        }

        #[test]
        fn negative_power_floors_at_idle(p in -500.0f64..0.0) {
            prop_assert_eq!(fuel_rate(p, &srx()), fuel_rate(-1e-12, &srx()));
        }

        #[test]
        fn trajectory_fuel_additive_over_concatenation(
            speeds in proptest::collection::vec(0.0f64..17.88, 3..20),
            split in 1usize..2,
        ) {
            let dt = 0.5;
            let states: Vec<VehicleState> = speeds
                .iter()
                .enumerate()
                .map(|(i, &v)| {
                    let mut s = VehicleState::initial(v);
                    s.time_s = i as f64 * dt;
                    s.accel_mps2 = if i == 0 { 0.0 } else { (v - speeds[i - 1]) / dt };
                    s
                })
                .collect();
            let k = split.min(states.len() - 1);
            let whole = trajectory_fuel(&states, dt, &srx(), &flat());
            let a = trajectory_fuel(&states[..=k], dt, &srx(), &flat());
            let b = trajectory_fuel(&states[k..], dt, &srx(), &flat());
            prop_assert!((whole - (a + b)).abs() < 1e-12);
        }
    }
}
