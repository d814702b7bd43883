//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero on any unexpected result.
//!
//! Runs without the libtest harness so the report is always printed.
//! Regenerate the golden trace with `UPDATE_GOLDEN=1 cargo test --test acceptance`.

use std::collections::VecDeque;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scooter_guard::dynamics::{integrate_step, PhysicalParams, VehicleState};
use scooter_guard::filter::{
    alpha_from_time_constant, critical_distance, time_constant_from_alpha,
    weighted_critical_distance, DistanceFilter, FilterConfig, FusionConfig, MinMemory,
};
use scooter_guard::safety::SafetyConfig;
use scooter_guard::scenario::{
    run, scenario_crossing, scenario_curve, scenario_straight, sweep, SeedSpec, SweepGrid,
    MOVING_SPEED,
};
use scooter_guard::sensor::SensorMount;

// Pinned tolerances.
const ALPHA_TOL: f64 = 1e-8;
const ROUND_TRIP_REL_TOL: f64 = 1e-12;
/// Slack for the continuity bound: the perturbed abscissa `d + eps` is
/// itself rounded, which can move the difference by a few ulps.
const CONTINUITY_SLACK: f64 = 4.0 * f64::EPSILON;
const SETTLE_BAND: f64 = 0.05;
const ENERGY_REL_TOL: f64 = 1e-6;
const RADIUS_REL_TOL: f64 = 0.01;
const STRAIGHT_LINE_TOL: f64 = 1e-12;
const STANDSTILL_RANGE: (f64, f64) = (0.40, 1.00);
const RECOVERY_SPEED: f64 = 0.95;
const SWEEP_MIN_DISTANCE: f64 = 0.05;
const RANDOM_CASES: usize = 100_000;

// Frozen oracle values, evaluated independently with 30-digit arithmetic.
/// Literal target of the first filter-constant check.
const ALPHA_RISE_TARGET: f64 = 0.02500906;
/// 1 - exp(-0.02 / 0.79).
const ALPHA_RISE_EXACT: f64 = 0.024_998_681_518_223_356;
/// Literal target of the second check; 1 - exp(-0.02 / 0.03) = 0.486582880967...
const ALPHA_FALL_TARGET: f64 = 0.48658288;
/// 0.9 / tan(0.4).
const REAR_RADIUS: f64 = 2.128_700_178_035_199_5;

/// Checks whose literal target is known to be unreachable; see the README.
const EXPECTED_FAILURES: &[&str] = &["1a"];

struct Outcome {
    id: &'static str,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome {
        id,
        name,
        pass,
        detail,
    }
}

fn within_runtime(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

fn criterion_1() -> Vec<Outcome> {
    let rise = alpha_from_time_constant(0.79, 0.02).unwrap();
    let fall = alpha_from_time_constant(0.03, 0.02).unwrap();
    let mut worst = 0.0f64;
    // Below about dt / 5 alpha is within 1e-9 of 1 and its rounding alone
    // limits the recoverable T, so the probes start at dt / 4.
    for t in [0.79, 0.03, 0.005, 0.02, 1.0, 10.0, 123.456] {
        let back =
            time_constant_from_alpha(alpha_from_time_constant(t, 0.02).unwrap(), 0.02).unwrap();
        worst = worst.max(((back - t) / t).abs());
    }
    vec![
        outcome(
            "1a",
            "alpha(0.79 s, 0.02 s) = 0.02500906 within 1e-8",
            (rise - ALPHA_RISE_TARGET).abs() <= ALPHA_TOL,
            format!(
                "got {rise:.12}; 1-exp(-0.02/0.79) is {ALPHA_RISE_EXACT:.12}, off the target by {:.2e}",
                (ALPHA_RISE_EXACT - ALPHA_RISE_TARGET).abs()
            ),
        ),
        outcome(
            "1a'",
            "alpha(0.79 s, 0.02 s) = 1-exp(-0.02/0.79) (independent evaluation) within 1e-8",
            (rise - ALPHA_RISE_EXACT).abs() <= ALPHA_TOL,
            format!("diff {:.2e}", (rise - ALPHA_RISE_EXACT).abs()),
        ),
        outcome(
            "1b",
            "alpha(0.03 s, 0.02 s) = 0.48658288 within 1e-8",
            (fall - ALPHA_FALL_TARGET).abs() <= ALPHA_TOL,
            format!("got {fall:.12}, diff {:.2e}", (fall - ALPHA_FALL_TARGET).abs()),
        ),
        outcome(
            "1c",
            "round trip T(alpha(T)) relative error < 1e-12",
            worst < ROUND_TRIP_REL_TOL,
            format!("worst {worst:.2e}"),
        ),
    ]
}

fn criterion_2() -> Vec<Outcome> {
    let cfg = SafetyConfig::new(0.5, 2.0).unwrap();
    let exact = cfg.beta(2.5) == 1.0 && cfg.beta(0.4) == 0.0 && cfg.beta(1.25) == 0.5;

    let mut worst_excess = f64::NEG_INFINITY;
    for d in [0.5, 2.0] {
        for eps in [1e-3, 1e-6] {
            for p in [d - eps, d + eps] {
                let excess = (cfg.beta(p) - cfg.beta(d)).abs() - eps / 1.5;
                worst_excess = worst_excess.max(excess);
            }
        }
    }
    let continuous = worst_excess <= CONTINUITY_SLACK;

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    for _ in 0..RANDOM_CASES {
        let a: f64 = rng.random_range(-1.0..4.0);
        let b: f64 = rng.random_range(-1.0..4.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        if cfg.beta(lo) > cfg.beta(hi) {
            violations += 1;
        }
    }
    vec![
        outcome(
            "2a",
            "beta(2.5)=1, beta(0.4)=0, beta(1.25)=0.5 exactly",
            exact,
            String::new(),
        ),
        outcome(
            "2b",
            "continuity |beta(d+-eps)-beta(d)| <= eps/1.5 at both breakpoints",
            continuous,
            format!("worst excess {worst_excess:.2e} (slack {CONTINUITY_SLACK:.1e})"),
        ),
        outcome(
            "2c",
            "beta monotone over 1e5 random pairs",
            violations == 0,
            format!("{violations} violations"),
        ),
    ]
}

fn criterion_3() -> Vec<Outcome> {
    let cfg = SafetyConfig::default();
    assert!(!cfg.block_reverse_inside_stop);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut above, mut passthrough, mut stop) = (0, 0, 0);
    for i in 0..RANDOM_CASES {
        let v_cmd: f64 = if i % 50 == 0 {
            0.0
        } else {
            rng.random_range(-2.0..2.0)
        };
        let d: f64 = rng.random_range(0.0..4.5);
        let v = cfg.safe_velocity(v_cmd, d);
        if v > v_cmd {
            above += 1;
        }
        if (d > 2.0 || v_cmd < 0.0) && v != v_cmd {
            passthrough += 1;
        }
        if v_cmd >= 0.0 && d < 0.5 && v != 0.0 {
            stop += 1;
        }
    }
    vec![outcome(
        "3",
        "safe velocity contract over 1e5 random (v_cmd, d_crit)",
        above + passthrough + stop == 0,
        format!("violations: above v_cmd {above}, pass-through {passthrough}, stop {stop}"),
    )]
}

/// First step (1-based) at which `series` enters and stays in `target +- band`.
fn settle_step(series: &[f64], target: f64, band: f64) -> Option<usize> {
    let last_out = series.iter().rposition(|v| (v - target).abs() > band);
    match last_out {
        None => Some(1),
        Some(i) if i + 1 < series.len() => Some(i + 2),
        Some(_) => None,
    }
}

fn criterion_4() -> Vec<Outcome> {
    let start = Instant::now();
    let dt = 0.02;
    let tau_mem = 5;
    let cfg = FilterConfig {
        rise_time_constant: 0.79,
        fall_time_constant: 0.03,
        memory_len: tau_mem,
        dt,
    };
    let steps = 400;
    let simulate = |from: f64, to: f64| -> Vec<f64> {
        let mut f = DistanceFilter::settled(&cfg, from).unwrap();
        (0..steps).map(|_| f.step(to).unwrap()).collect()
    };
    let down = simulate(4.0, 1.0);
    let up = simulate(1.0, 4.0);

    // Closed form: the error contracts by (1 - alpha) per step once the
    // memory holds only the new level, which takes tau_mem - 1 extra steps
    // on a rising step and none on a falling one.
    let a_fall = 1.0 - (-dt / 0.03f64).exp();
    let a_rise = 1.0 - (-dt / 0.79f64).exp();
    let band_down = SETTLE_BAND * 1.0;
    let n_down = ((band_down / 3.0).ln() / (1.0 - a_fall).ln()).ceil() as usize;
    // "Within 5 %" read both ways for the rising step: 5 % of the final
    // value and 5 % of the step height; the faster one is the bound.
    let band_up_final = SETTLE_BAND * 4.0;
    let band_up_step = SETTLE_BAND * 3.0;
    let hold = tau_mem - 1;
    let n_up_final = hold + ((band_up_final / 3.0).ln() / (1.0 - a_rise).ln()).ceil() as usize;
    let n_up_step = hold + ((band_up_step / 3.0).ln() / (1.0 - a_rise).ln()).ceil() as usize;

    let sim_down = settle_step(&down, 1.0, band_down);
    let sim_up_final = settle_step(&up, 4.0, band_up_final);
    let sim_up_step = settle_step(&up, 4.0, band_up_step);
    let t_down = sim_down.map_or(f64::INFINITY, |n| n as f64 * dt);
    let t_up = sim_up_final.map_or(f64::INFINITY, |n| n as f64 * dt);

    // Closed-form value of every sample on the rising step.
    let max_dev = up
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let k = i + 1;
            let expect = if k <= hold {
                1.0
            } else {
                4.0 - 3.0 * (1.0 - a_rise).powi((k - hold) as i32)
            };
            (v - expect).abs()
        })
        .fold(0.0, f64::max);
    let elapsed = start.elapsed();
    vec![
        outcome(
            "4a",
            "4.0 -> 1.0 step settles within 5 % in <= 0.2 s (closed form agrees)",
            sim_down == Some(n_down) && t_down <= 0.2 + 1e-12,
            format!("settled after {sim_down:?} steps = {t_down:.2} s, closed form {n_down}"),
        ),
        outcome(
            "4b",
            "1.0 -> 4.0 step needs >= 2.0 s to settle within 5 % (closed form agrees)",
            sim_up_final == Some(n_up_final)
                && sim_up_step == Some(n_up_step)
                && t_up >= 2.0
                && max_dev < 1e-12
                && within_runtime(elapsed, 1.0),
            format!(
                "5 % of final: {sim_up_final:?} steps = {t_up:.2} s (closed form {n_up_final}); \
                 5 % of step: {sim_up_step:?} (closed form {n_up_step}); max deviation {max_dev:.1e}"
            ),
        ),
    ]
}

fn criterion_5() -> Vec<Outcome> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut mismatches = 0;
    let mut pushes = 0;
    for len in [1usize, 2, 3, 5, 10, 64] {
        let mut fast = MinMemory::new(len);
        let mut naive: VecDeque<f64> = VecDeque::new();
        for _ in 0..RANDOM_CASES {
            // Coarse values so ties are common.
            let v = if rng.random_bool(0.3) {
                4.0
            } else {
                (rng.random_range(0.0..40.0f64)).floor() / 10.0
            };
            naive.push_back(v);
            if naive.len() > len {
                naive.pop_front();
            }
            let expect = naive.iter().copied().fold(f64::INFINITY, f64::min);
            if fast.push(v) != expect || fast.len() != naive.len() {
                mismatches += 1;
            }
            pushes += 1;
        }
    }
    let elapsed = start.elapsed();
    vec![outcome(
        "5",
        "memory_min matches a naive sliding-window minimum",
        mismatches == 0 && within_runtime(elapsed, 5.0),
        format!(
            "{pushes} pushes, {mismatches} mismatches, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )]
}

fn energy(s: &VehicleState, p: &PhysicalParams) -> f64 {
    0.5 * p.roll_inertia * s.roll_rate.powi(2) + p.mass * p.gravity * p.com_height * s.roll.cos()
}

fn criterion_6() -> Vec<Outcome> {
    let start = Instant::now();
    let p = PhysicalParams::default();
    let dt = 1e-3;

    let mut s = VehicleState {
        roll: 0.1,
        ..Default::default()
    };
    let e0 = energy(&s, &p);
    let mut drift = 0.0f64;
    for _ in 0..10_000 {
        s = integrate_step(&s, 0.0, &p, dt).unwrap();
        drift = drift.max(((energy(&s, &p) - e0) / e0).abs());
    }

    let delta = 0.4;
    let v = 1.0;
    let mut s = VehicleState {
        speed: v,
        steering: delta,
        ..Default::default()
    };
    let yaw_rate = v * f64::tan(delta) / p.wheelbase;
    let n = (2.0 * std::f64::consts::PI / yaw_rate / dt).round() as usize;
    let mut rear = Vec::with_capacity(n);
    for _ in 0..n {
        rear.push(s.rear_axle(p.wheelbase));
        s = integrate_step(&s, 0.0, &p, dt).unwrap();
    }
    // Samples are uniform in angle over one revolution, so their centroid
    // is the turning centre.
    let cx = rear.iter().map(|q| q.0).sum::<f64>() / n as f64;
    let cy = rear.iter().map(|q| q.1).sum::<f64>() / n as f64;
    let radii: Vec<f64> = rear.iter().map(|q| (q.0 - cx).hypot(q.1 - cy)).collect();
    let mean_r = radii.iter().sum::<f64>() / n as f64;
    let worst_r = radii
        .iter()
        .map(|r| ((r - REAR_RADIUS) / REAR_RADIUS).abs())
        .fold(0.0, f64::max);

    let mut s = VehicleState {
        speed: 1.0,
        ..Default::default()
    };
    let mut worst_y = 0.0f64;
    for _ in 0..10_000 {
        s = integrate_step(&s, 0.0, &p, dt).unwrap();
        let (_, ry) = s.rear_axle(p.wheelbase);
        worst_y = worst_y.max(s.y.abs()).max(ry.abs());
    }
    let elapsed = start.elapsed();
    vec![
        outcome(
            "6a",
            "undriven roll pendulum energy drift < 1e-6 over 10 s at 1 kHz",
            drift < ENERGY_REL_TOL,
            format!("max relative drift {drift:.2e}"),
        ),
        outcome(
            "6b",
            "rear-wheel turning radius 0.9/tan(0.4) = 2.1287 m within 1 % over one revolution",
            worst_r < RADIUS_REL_TOL,
            format!("mean radius {mean_r:.6} m, worst relative error {worst_r:.2e}"),
        ),
        outcome(
            "6c",
            "zero steering drives exactly straight (|y| < 1e-12)",
            worst_y < STRAIGHT_LINE_TOL && s.x > 9.9 && within_runtime(elapsed, 5.0),
            format!("max |y| {worst_y:.1e}, x after 10 s {:.6}", s.x),
        ),
    ]
}

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/straight_golden.csv")
}

fn criterion_7() -> Vec<Outcome> {
    let start = Instant::now();
    let scenario = scenario_straight();
    let out = run(&scenario).unwrap();
    let m = &out.metrics;
    let removal = scenario.obstacles[0].active_until.unwrap();
    let recovered = out
        .trace
        .records
        .iter()
        .filter(|r| r.t >= removal)
        .map(|r| r.speed)
        .fold(f64::NEG_INFINITY, f64::max);
    let csv = out.trace.to_csv_string().unwrap();
    let elapsed = start.elapsed();

    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &csv).unwrap();
    }
    let golden = std::fs::read_to_string(&path).ok();
    let standstill = m.standstill_distance.unwrap_or(f64::NAN);
    vec![
        outcome(
            "7a",
            "straight: stops without collision, standstill distance in [0.40, 1.00] m",
            out.is_ok()
                && !m.collided
                && m.stop_events() >= 1
                && (STANDSTILL_RANGE.0..=STANDSTILL_RANGE.1).contains(&standstill),
            format!(
                "stops {:?}, standstill {standstill:.4} m, min distance {:?}",
                m.stop_times, m.min_true_distance
            ),
        ),
        outcome(
            "7b",
            "straight: speed recovers to >= 0.95 m/s after obstacle removal",
            recovered >= RECOVERY_SPEED,
            format!(
                "max speed after removal {recovered:.4} m/s, recovery time {:?}",
                m.recovery_time
            ),
        ),
        outcome(
            "7c",
            "straight: golden-seed CSV byte-identical to the committed fixture",
            golden.as_deref() == Some(csv.as_str()) && within_runtime(elapsed, 10.0),
            match &golden {
                None => format!("fixture {} missing", path.display()),
                Some(g) => format!("{} bytes vs fixture {} bytes", csv.len(), g.len()),
            },
        ),
    ]
}

fn criterion_8() -> Vec<Outcome> {
    let start = Instant::now();
    let scenario = scenario_curve();
    let out = run(&scenario).unwrap();
    let m = &out.metrics;
    let d_stop = scenario.safety.stop_distance;
    let records = &out.trace.records;
    let unsafe_ticks = records
        .iter()
        .filter(|r| r.v_safe > 0.0 && r.true_wedge.iter().flatten().any(|&d| d < d_stop))
        .count();
    let stop_steering = m
        .stop_times
        .first()
        .and_then(|&t| records.iter().find(|r| r.t == t))
        .map(|r| r.steering);
    let resumed = m
        .stop_times
        .first()
        .is_some_and(|&t| records.iter().any(|r| r.t > t && r.speed >= MOVING_SPEED));
    let elapsed = start.elapsed();
    vec![outcome(
        "8",
        "curve: stops while turning, no collision, no forward command while an obstacle is inside d_stop of any wedge",
        out.is_ok()
            && !m.collided
            && m.stop_events() >= 1
            && stop_steering.is_some_and(|s| s.abs() > 0.1)
            && unsafe_ticks == 0
            && resumed
            && within_runtime(elapsed, 10.0),
        format!(
            "stops {:?} at steering {stop_steering:?}, unsafe ticks {unsafe_ticks}, resumed {resumed}",
            m.stop_times
        ),
    )]
}

fn criterion_9() -> Vec<Outcome> {
    let start = Instant::now();
    let out = run(&scenario_crossing()).unwrap();
    let m = &out.metrics;
    let elapsed = start.elapsed();
    vec![outcome(
        "9",
        "crossing: exactly two stop events and no collision on the golden seed",
        out.is_ok() && m.stop_events() == 2 && !m.collided && within_runtime(elapsed, 10.0),
        format!(
            "stops {:?}, min distance {:?}",
            m.stop_times, m.min_true_distance
        ),
    )]
}

fn criterion_10() -> Vec<Outcome> {
    let start = Instant::now();
    let grid = SweepGrid {
        dropout_prob: vec![0.0, 0.25, 0.5],
        v_cmd: Vec::new(),
        seeds: SeedSpec::Range {
            start: 0,
            count: 100,
        },
    };
    let report = sweep(&scenario_straight(), &grid).unwrap();
    let elapsed = start.elapsed();
    let close = report
        .rows
        .iter()
        .filter(|r| {
            r.metrics
                .min_true_distance
                .is_none_or(|d| d <= SWEEP_MIN_DISTANCE)
        })
        .count();
    let s = &report.summary;
    vec![outcome(
        "10",
        "straight sweep, dropout {0, 0.25, 0.5} x 100 seeds: no collision, min distance > 0.05 m",
        s.runs == 300
            && s.failed == 0
            && s.collisions == 0
            && close == 0
            && within_runtime(elapsed, 300.0),
        format!(
            "{} runs, {} failed, {} collisions, {close} runs too close, worst {:?}, {:.1} s",
            s.runs,
            s.failed,
            s.collisions,
            s.worst_min_true_distance,
            elapsed.as_secs_f64()
        ),
    )]
}

fn criterion_11() -> Vec<Outcome> {
    let mounts = SensorMount::default_cluster();
    let fusion = FusionConfig {
        blend_lambda: 1.0,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut mismatches = 0;
    for i in 0..RANDOM_CASES {
        let mut d: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..4.0));
        if i % 10 == 0 {
            d[1] = d[0];
        }
        let w = weighted_critical_distance(d, &mounts, &fusion);
        if w.to_bits() != critical_distance(d[0], d[1], d[2]).to_bits() {
            mismatches += 1;
        }
    }
    vec![outcome(
        "11",
        "weighted fusion with blend 1 equals the plain minimum bit-exactly",
        mismatches == 0,
        format!("{mismatches} mismatches over {RANDOM_CASES} triples"),
    )]
}

fn main() -> ExitCode {
    let checks: [fn() -> Vec<Outcome>; 11] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
        criterion_11,
    ];
    let results: Vec<Outcome> = checks.iter().flat_map(|c| c()).collect();
    let mut unexpected = 0;
    for r in &results {
        let expected_fail = EXPECTED_FAILURES.contains(&r.id);
        let tag = match (r.pass, expected_fail) {
            (true, false) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
            (true, true) => "PASS (unexpected; update EXPECTED_FAILURES)",
        };
        if r.pass == expected_fail {
            unexpected += 1;
        }
        println!("{tag:<5} [{:>3}] {} -- {}", r.id, r.name, r.detail);
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!(
        "acceptance: {passed}/{} checks passed, {} expected failure(s), {unexpected} unexpected result(s)",
        results.len(),
        EXPECTED_FAILURES.len()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
