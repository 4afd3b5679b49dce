from fractions import Fraction

import pytest

from gclsynth.model import (Flow, Instance, Link, NoFlowsOnPort, Problem, WindowConfig, divisors, guard_band,
                            hyperperiod_of_port, iter_route_pairs, max_frame_size, queue_flow_sets,
                            validate_instance, window_count)

from conftest import line_instance


def _flows(*periods):
    return [Flow(f"f{i}", 100, p, 7, p, ("ES1", "SW1", "SW2", "ES3")) for i, p in enumerate(periods)]


@pytest.mark.parametrize("periods, expected", [((5, 6, 15), 30), ((10,), 10), ((1500, 2500), 7500)])
def test_hyperperiod_of_port(periods, expected):
    assert hyperperiod_of_port(("SW1", "SW2"), _flows(*periods)) == expected


def test_hyperperiod_without_flows():
    with pytest.raises(NoFlowsOnPort):
        hyperperiod_of_port(("SW2", "SW1"), _flows(10))


def test_guard_band_and_max_frame():
    link = Link("SW1", "SW2", 100)
    a = Flow("a", 150, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3"))
    b = Flow("b", 100, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3"))
    assert guard_band(link, [a]) == 12
    assert guard_band(link, [a, b]) == 12
    assert guard_band(link, []) == 0
    assert max_frame_size([a, b]) == 150
    assert max_frame_size([]) == 0


def test_guard_band_brute_force():
    link = Link("SW1", "SW2", 100)
    sizes = [64, 777, 1518, 200]
    flows = [Flow(str(i), s, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3")) for i, s in enumerate(sizes)]
    expected = max(-(-s * 8 // 100) for s in sizes)
    assert guard_band(link, flows) == expected


def test_queue_flow_sets_split_by_previous_hop():
    f = Flow("f", 100, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3"))
    inst = line_instance([f])
    sets = queue_flow_sets(inst)
    first = sets[(("SW1", "SW2"), 7)]
    second = sets[(("SW2", "ES3"), 7)]
    assert first.all_flows == [f] and first.from_switch == []
    assert second.all_flows == [f] and second.from_switch == [f]
    assert window_count(inst) == 2


def test_switch_arriving_subset_in_worked_scenario():
    f1 = Flow("f1", 64, 5, 7, 5, ("ES1", "SW1", "ES3"))
    f2 = Flow("f2", 64, 6, 7, 6, ("ES2", "SW1", "ES3"))
    f3 = Flow("f3", 100, 15, 7, 15, ("ES4", "SW2", "SW1", "ES3"))
    inst = Instance.build(["SW1", "SW2"], ["ES1", "ES2", "ES3", "ES4"],
                          [("ES1", "SW1"), ("ES2", "SW1"), ("SW1", "ES3"), ("SW2", "SW1"), ("ES4", "SW2")],
                          [f1, f2, f3])
    qf = queue_flow_sets(inst)[(("SW1", "ES3"), 7)]
    assert [f.id for f in qf.all_flows] == ["f1", "f2", "f3"]
    assert [f.id for f in qf.from_switch] == ["f3"]
    assert hyperperiod_of_port(("SW1", "ES3"), inst.flows) == 30


def test_validate_well_formed(two_flows):
    assert validate_instance(two_flows) == []


def test_validate_disconnected_route():
    inst = line_instance([Flow("f", 100, 100, 7, 100, ("ES1", "SW2", "ES3"))])
    kinds = {v.kind for v in validate_instance(inst)}
    assert Problem.DISCONNECTED_ROUTE in kinds


def test_validate_oversized_frame():
    inst = line_instance([Flow("f", 20000, 100, 7, 100, ("ES1", "SW1", "SW2", "ES3"))])
    assert Problem.FRAME_SIZE in {v.kind for v in validate_instance(inst)}


def test_validate_missing_reverse_link():
    inst = line_instance(_flows(10))
    links = dict(inst.links)
    del links[("SW2", "SW1")]
    broken = Instance(inst.nodes, links, inst.flows)
    assert Problem.MISSING_REVERSE_LINK in {v.kind for v in validate_instance(broken)}


def test_interior_nodes_are_switches(two_flows):
    for f in two_flows.flows:
        for (a, x), (_, b) in iter_route_pairs(f):
            assert two_flows.is_switch(x)


def test_window_invariants():
    with pytest.raises(ValueError):
        WindowConfig(8, 4, 10)
    with pytest.raises(ValueError):
        WindowConfig(0, 1, 0)
    assert WindowConfig(3, 4, 10).utilization == Fraction(2, 5)


def test_divisors():
    assert divisors(30) == [1, 2, 3, 5, 6, 10, 15, 30]


def test_gated_ports_only_switch_egress(two_flows):
    ports = {p.id for p in two_flows.gated_ports()}
    assert ports == {("SW1", "SW2"), ("SW2", "ES3")}
    assert two_flows.st_queues() == [(("SW1", "SW2"), 7), (("SW1", "SW2"), 6), (("SW2", "ES3"), 7),
                                     (("SW2", "ES3"), 6)]
