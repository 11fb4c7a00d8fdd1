use super::{Scenario, Segment, Sun, Throttle};
use crate::powertrain::POT_FULL_SCALE;
use crate::pv::{wire_array, PanelSpec};
use crate::units::mph_to_mps;
use crate::Direction;

fn seg(duration_s: f64) -> Segment {
    Segment { duration_s, ..Segment::default() }
}

fn pot(duty: f64) -> Throttle {
    Throttle::Potentiometer(duty * POT_FULL_SCALE)
}

/// Reference scenarios exercised by the conservation, convergence and
/// determinism checks.
pub fn standard_suite() -> Vec<Scenario> {
    let idle = Scenario::with_segments("idle", vec![seg(600.0)]);

    let pedal = Scenario::with_segments("pedal-only", vec![Segment { pedal_power_w: 120.0, ..seg(600.0) }]);

    let motor = Scenario {
        initial_speed: mph_to_mps(6.0),
        ..Scenario::with_segments("motor-only", vec![Segment { throttle: pot(1.0), ..seg(60.0) }])
    };

    let mixed = Scenario::with_segments(
        "mixed-sun",
        vec![
            Segment { pedal_power_w: 120.0, sun: Sun::ClearSky, ..seg(120.0) },
            Segment { pedal_power_w: 120.0, throttle: Throttle::SpeedTarget(5.0), sun: Sun::ClearSky, ..seg(300.0) },
            Segment { pedal_power_w: 80.0, throttle: Throttle::SpeedTarget(4.0), grade_angle: 0.02, ..seg(300.0) },
            Segment { brake_force_n: 400.0, sun: Sun::ClearSky, ..seg(60.0) },
            Segment { sun: Sun::ClearSky, ..seg(600.0) },
        ],
    );

    let mut exhaustion = Scenario::with_segments(
        "soc-exhaustion",
        vec![
            Segment { throttle: pot(1.0), ..seg(120.0) },
            Segment { throttle: pot(0.6), sun: Sun::ClearSky, ..seg(120.0) },
        ],
    );
    exhaustion.initial_soc = 0.01;
    exhaustion.initial_speed = mph_to_mps(6.0);
    exhaustion.supervisor.override_enabled = true;

    let reverse = Scenario::with_segments(
        "reverse",
        vec![
            Segment { pedal_power_w: 120.0, ..seg(60.0) },
            Segment { direction: Direction::Reverse, brake_force_n: 300.0, ..seg(15.0) },
            Segment { direction: Direction::Reverse, throttle: pot(0.3), ..seg(30.0) },
            Segment { direction: Direction::Forward, brake_force_n: 300.0, ..seg(15.0) },
            Segment { pedal_power_w: 120.0, ..seg(60.0) },
        ],
    );

    // Every duty level from standstill, each followed by a hard stop.
    let mut sweep_segments = Vec::new();
    for i in 1..=10 {
        sweep_segments.push(Segment { throttle: pot(f64::from(i) / 10.0), sun: Sun::ClearSky, ..seg(12.0) });
        sweep_segments.push(Segment { brake_force_n: 3000.0, sun: Sun::ClearSky, ..seg(8.0) });
    }
    let mut sweep = Scenario::with_segments("ratings-sweep", sweep_segments);
    sweep.supervisor.override_enabled = true;
    sweep.initial_soc = 0.5;
    sweep.array = wire_array(PanelSpec::vehicle_panel(), 2, 12).expect("valid wiring");

    vec![idle, pedal, motor, mixed, exhaustion, reverse, sweep]
}
