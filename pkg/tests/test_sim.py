import pytest

from gclsynth.model import Flow, WindowConfig
from gclsynth.schedule import Schedule
from gclsynth.sim import (ConfigError, GateTimeline, SimConfig, gate_state, simulate, strict_priority_select,
                          transmission_eligible, tx_time_ns)

from conftest import line_instance

R1 = ("ES1", "SW1", "SW2", "ES3")
R2 = ("ES2", "SW1", "SW2", "ES3")


def _open(instance):
    return Schedule.from_assignment({k: WindowConfig(0, 1, 1) for k in instance.st_queues()})


def test_gate_state():
    w = WindowConfig(3, 4, 10)
    assert gate_state(w, 5)
    assert not gate_state(w, 8)
    assert gate_state(w, 13)
    assert not gate_state(w, 7) and gate_state(w, 3)


def test_look_ahead():
    w = WindowConfig(0, 10, 20)
    assert not transmission_eligible(12, w, 7)       # 3 us left
    assert transmission_eligible(3, w, 7)            # fits exactly
    assert transmission_eligible(1000, WindowConfig(0, 20, 20), 7)
    assert transmission_eligible(1000, None, 7)
    assert not transmission_eligible(1, w, 15)


def test_strict_priority():
    assert strict_priority_select({7: "a", 5: "b"}, lambda q, f: True) == 7
    assert strict_priority_select({7: None, 5: "b"}, lambda q, f: True) == 5
    assert strict_priority_select({7: "a", 5: "b"}, lambda q, f: q != 7) == 5
    assert strict_priority_select({7: None}, lambda q, f: True) is None


def test_gate_timeline():
    g = GateTimeline([WindowConfig(3, 4, 10)], 1000)
    assert g.is_open(3000) and not g.is_open(7000)
    assert g.next_fit(5000, 3000) == 13000
    assert g.next_fit(4000, 3000) == 4000
    assert GateTimeline([WindowConfig(0, 10, 10)], 1000).always_open


def test_uncontended_path(single_flow):
    res = simulate(single_flow, _open(single_flow), SimConfig(seed=1))
    tx = tx_time_ns(1000, 100)
    assert res.flows["f1"].max_delay_ns == 3 * tx
    assert res.dropped == 0


def test_race_walkthrough():
    inst = line_instance([Flow("f1", 250, 100, 7, 100, R1), Flow("f2", 250, 100, 7, 100, R2)])
    sched = Schedule.from_assignment({(("SW1", "SW2"), 7): WindowConfig(0, 45, 100),
                                      (("SW2", "ES3"), 7): WindowConfig(0, 100, 100)})
    res = simulate(inst, sched, SimConfig(phases_ns={"f1": 0, "f2": 0}, trace=True))
    # both arrive at SW1 at 20 us; f1 leaves 20-40, f2 no longer fits before 45 and waits for 100
    first = {r.flow: r for r in res.trace if r.index == 0}
    assert [(h.start_ns, h.end_ns) for h in first["f1"].hops] == [(0, 20000), (20000, 40000), (40000, 60000)]
    assert [(h.start_ns, h.end_ns) for h in first["f2"].hops] == [(0, 20000), (100000, 120000),
                                                                  (120000, 140000)]
    assert res.flows["f1"].max_delay_ns == 60000
    assert res.flows["f2"].max_delay_ns == 140000


def test_determinism(two_flows):
    sched = Schedule.from_assignment({k: WindowConfig(0, 500, 1000) for k in two_flows.st_queues()})
    a = simulate(two_flows, sched, SimConfig(seed=4, trace=True))
    b = simulate(two_flows, sched, SimConfig(seed=4, trace=True))
    assert a.phases_ns == b.phases_ns
    assert [(r.flow, r.index, [(h.start_ns, h.end_ns) for h in r.hops]) for r in a.trace] == \
           [(r.flow, r.index, [(h.start_ns, h.end_ns) for h in r.hops]) for r in b.trace]


def _busy_instance():
    flows = [Flow(f"f{i}", 200 + 100 * i, p, pr, p, r)
             for i, (p, pr, r) in enumerate([(500, 7, R1), (1000, 7, R2), (500, 6, R1), (1000, 6, R2)])]
    inst = line_instance(flows)
    sched = Schedule.from_assignment({
        (("SW1", "SW2"), 7): WindowConfig(0, 200, 500), (("SW1", "SW2"), 6): WindowConfig(200, 250, 500),
        (("SW2", "ES3"), 7): WindowConfig(100, 200, 500), (("SW2", "ES3"), 6): WindowConfig(300, 200, 500)})
    return inst, sched


def test_gate_honor_and_fifo():
    inst, sched = _busy_instance()
    for seed in range(5):
        res = simulate(inst, sched, SimConfig(seed=seed, trace=True))
        per_queue = {}
        for rec in res.trace:
            for h in rec.hops:
                if h.start_ns < 0 or not inst.is_switch(h.link[0]):
                    continue
                (w,) = sched.windows[(h.link, h.queue)]
                base = h.start_ns - h.start_ns % (w.period * 1000)
                assert base + w.offset * 1000 <= h.start_ns
                assert h.end_ns <= base + (w.offset + w.length) * 1000
                per_queue.setdefault((h.link, h.queue), []).append((h.enqueued_ns, h.start_ns))
        for hops in per_queue.values():
            hops.sort()
            starts = [s for _, s in hops]
            assert starts == sorted(starts)


def test_delays_above_floor():
    inst, sched = _busy_instance()
    res = simulate(inst, sched, SimConfig(seed=2))
    for f in inst.flows:
        st = res.flows[f.id]
        assert st.frames > 0
        assert st.max_delay_ns >= st.mean_delay_ns >= 3 * tx_time_ns(f.payload_bytes, 100)


def test_config_errors(two_flows):
    sched = Schedule.from_assignment({k: WindowConfig(0, 500, 1000) for k in two_flows.st_queues()})
    with pytest.raises(ConfigError):
        simulate(two_flows, sched, SimConfig(duration_us=100))
    with pytest.raises(ConfigError):
        simulate(two_flows, sched, SimConfig(phases_ns={"f1": 0, "f2": 10 ** 9}))
    with pytest.raises(ConfigError):
        simulate(two_flows, Schedule({}), SimConfig())


def test_queue_capacity_reports_drops():
    inst, sched = _busy_instance()
    res = simulate(inst, sched, SimConfig(seed=0, queue_capacity=0))
    assert res.dropped > 0
