"""Smoke test for the `resched` extension module.

Build and install first:
    pip install --no-build-isolation ./crates/py
Then run with pytest or plain python.
"""

import json

import resched


def nonzero_days(series):
    return {d: q for d, q in enumerate(series) if q}


def test_two_product_delay():
    s = resched.Scenario.fig2()
    r = s.run(["rm-delay:RM1:4:2"])
    assert r.stabilized
    assert r.iterations == 3
    assert nonzero_days(r.production("SFG1")) == {0: 12, 4: 4, 6: 8, 8: 12}
    assert nonzero_days(r.production("FG1")) == {1: 12, 5: 6, 6: 6, 9: 12}
    k = r.kpis()
    assert k["fg_fulfillment_by_orders"] == 1.0
    assert k["rescheduled_finished_goods"] == 1
    lines = r.trace_jsonl().splitlines()
    assert lines and all("agent" in json.loads(l) for l in lines)


def test_no_events_is_identity():
    s = resched.Scenario.fig2()
    r = s.run()
    assert r.iterations == 0
    assert r.kpis()["rescheduled_material_agents"] == 0
    assert r.production("FG1") == s.production("FG1")


def test_generate_is_deterministic():
    a = resched.Scenario.generate(seed=4, days_on_hand=3.8)
    b = resched.Scenario.generate(seed=4, days_on_hand=3.8)
    assert a.to_json() == b.to_json()
    assert abs(a.days_on_hand - 3.8) <= 0.5
    again = resched.Scenario.from_json(a.to_json())
    assert again.to_json() == a.to_json()


def test_solvers():
    problem = {
        "mode": "partial",
        "horizon": 2,
        "supply": [3, 0],
        "orders": [
            {"id": "A", "demand": {"1": 2}, "priority": 2},
            {"id": "B", "demand": {"1": 2}, "priority": 1},
        ],
    }
    a = resched.solve(problem)
    # higher priority is served in full; partial mode may deliver early
    assert sum(a["x"]["A"].values()) == 2
    assert sum(a["x"]["B"].values()) == 1
    plan = resched.solve_consolidation(
        {"horizon": 2, "requests": {"S1": {"0": 2}, "S2": {"1": 1}}}
    )
    assert plan["r"] == [2, 0]


def test_bad_input_raises():
    try:
        resched.Scenario.from_json("{}")
    except ValueError as e:
        assert "version" in str(e) or "missing" in str(e)
    else:
        raise AssertionError("expected ValueError")
    try:
        resched.Scenario.fig2().run(["stoppage:NOPE:1:1"])
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
            print(f"ok {name}")
