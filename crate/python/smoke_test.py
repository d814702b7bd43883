"""Smoke test for the Python bindings.

Build and install first, e.g.

    pip install maturin
    maturin build -m crates/py/Cargo.toml --release -o dist
    pip install dist/scooter_guard-*.whl

then run ``python python/smoke_test.py``.
"""

import math

import scooter_guard as sg


def main() -> None:
    a = sg.alpha_from_time_constant(0.79, 0.02)
    assert abs(a - (1.0 - math.exp(-0.02 / 0.79))) < 1e-15
    assert abs(sg.time_constant_from_alpha(a, 0.02) - 0.79) < 1e-12

    safety = sg.SafetyConfig()
    assert safety.beta(2.5) == 1.0 and safety.beta(0.4) == 0.0 and safety.beta(1.25) == 0.5
    assert safety.safe_velocity(1.0, 1.25) == 0.5
    assert safety.safe_velocity(-0.3, 0.1) == -0.3

    f = sg.DistanceFilter(initial=4.0)
    falling = [f.step(1.0) for _ in range(10)]
    assert abs(falling[-1] - 1.0) < 0.01, falling

    assert sg.critical_distance(1.0, 0.7, 2.0) == 0.7
    assert sg.moving_average([0.0, 3.0, 0.0], 3) == [1.5, 1.0, 1.5]

    state = sg.VehicleState(speed=1.0)
    for _ in range(1000):
        state = sg.integrate_step(state, 0.0)
    assert abs(state.x - 1.0) < 1e-9 and state.y == 0.0

    assert sg.builtin_scenarios() == ["straight", "curve", "crossing"]
    scenario = sg.Scenario.builtin("straight").with_overrides(["duration=14"])
    result = scenario.run(seed=7)
    m = result.metrics()
    assert not result.collided and result.failure is None
    assert len(m["stop_times"]) == 1
    assert 0.4 <= m["standstill_distance"] <= 1.0
    assert len(result) == len(result.column("v_safe")) == 14 * 50
    assert result.to_csv().startswith("t,x,y,yaw,")

    again = sg.Scenario.from_json(scenario.to_json()).run(seed=7)
    assert again.to_csv() == result.to_csv()

    try:
        sg.Scenario.builtin("nope")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown scenario accepted")

    print("python smoke test ok: standstill %.3f m" % m["standstill_distance"])


if __name__ == "__main__":
    main()
