use criterion::{black_box, criterion_group, criterion_main, Criterion};

use glosa_core::optimizer::Phase;
use glosa_core::{
    next_control, plan_trajectory, resistance_force, OptimizerConfig, PlanState, PredictionModel,
    RoadParams, SignalTiming, SpatSample, SpatSource, VehicleParams, VehicleState,
};

fn bench_force_and_fuel(c: &mut Criterion) {
    let vehicle = VehicleParams::cadillac_srx_2014();
    let road = RoadParams::default();
    c.bench_function("resistance_force", |b| {
        b.iter(|| resistance_force(black_box(17.88), &vehicle, &road))
    });
    c.bench_function("fuel_pipeline_step", |b| {
        b.iter(|| {
            let r = resistance_force(black_box(17.88), &vehicle, &road);
            let p = glosa_core::vehicle_power(17.88, 0.5, r, &vehicle);
            glosa_core::fuel_rate(p, &vehicle)
        })
    });
}

fn bench_planner_decision(c: &mut Criterion) {
    let vehicle = VehicleParams::cadillac_srx_2014();
    let road = RoadParams { grade: -0.03, ..RoadParams::default() };
    let config = OptimizerConfig::default();
    let spat = SpatSample::exact(15.0, 0.0);
    let plan = PlanState {
        vehicle: VehicleState::initial(17.88),
        last_spat: spat,
        phase: Phase::Upstream,
        distance_covered_upstream_m: 0.0,
    };
    c.bench_function("next_control_upstream", |b| {
        b.iter(|| next_control(black_box(&plan), &spat, &config, &vehicle, &road))
    });
}

fn bench_full_runs(c: &mut Criterion) {
    let vehicle = VehicleParams::cadillac_srx_2014();
    let road = RoadParams { grade: -0.03, ..RoadParams::default() };
    let config = OptimizerConfig::default();
    let timing = SignalTiming::red_until(15.0);
    c.bench_function("plan_deterministic_ttg15", |b| {
        b.iter(|| {
            plan_trajectory(
                &timing,
                &mut SpatSource::exact(),
                black_box(17.88),
                &config,
                &vehicle,
                &road,
            )
            .unwrap()
        })
    });
    c.bench_function("plan_stochastic_ttg15_sd4", |b| {
        b.iter(|| {
            let model = PredictionModel { bias_s: 0.0, sd_s: 4.0, seed: 7 };
            plan_trajectory(
                &timing,
                &mut SpatSource::from_model(model),
                black_box(17.88),
                &config,
                &vehicle,
                &road,
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_force_and_fuel, bench_planner_decision, bench_full_runs);
criterion_main!(benches);
