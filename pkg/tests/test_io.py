import json

import pytest

from gclsynth.io import (ParseError, ValidationFailed, file_digest, instance_from_doc, instance_to_doc,
                         load_instance, load_schedule, save_instance, save_schedule)
from gclsynth.model import Flow, WindowConfig
from gclsynth.schedule import Schedule
from gclsynth.testgen import GenSpec, generate

from conftest import line_instance


def test_instance_round_trip(tmp_path):
    inst = generate(GenSpec("mm", 4, 5, 13, seed=3))
    save_instance(inst, tmp_path / "i.json")
    back = load_instance(tmp_path / "i.json")
    assert instance_to_doc(back) == instance_to_doc(inst)
    assert back.flows == inst.flows
    assert back.links == inst.links


def test_schedule_round_trip(tmp_path, two_flows):
    sched = Schedule({(("SW1", "SW2"), 7): (WindowConfig(0, 40, 100),),
                      (("SW1", "SW2"), 6): (WindowConfig(40, 30, 100), WindowConfig(80, 10, 200))},
                     method="wnd", queue_map={(("SW1", "SW2"), "f2"): 6}, meta={"note": 1})
    save_schedule(sched, tmp_path / "s.json", two_flows)
    back = load_schedule(tmp_path / "s.json")
    assert back.windows == sched.windows
    assert back.queue_map == sched.queue_map
    assert back.method == "wnd" and back.meta == {"note": 1}


def test_schedule_file_is_stable(tmp_path, two_flows):
    sched = Schedule.from_assignment({(("SW1", "SW2"), 7): WindowConfig(0, 40, 100)})
    save_schedule(sched, tmp_path / "a.json", two_flows)
    save_schedule(sched, tmp_path / "b.json", two_flows)
    assert file_digest(tmp_path / "a.json") == file_digest(tmp_path / "b.json")


def test_malformed_route(tmp_path, single_flow):
    doc = instance_to_doc(single_flow)
    doc["flows"][0]["route"] = "ES1"
    with pytest.raises(ParseError) as err:
        instance_from_doc(doc, "x.json")
    assert "flows[0].route" in str(err.value)


def test_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{\n  \"nodes\": [,]\n}")
    with pytest.raises(ParseError) as err:
        load_instance(p)
    assert "line 2" in str(err.value)


def test_wrong_types():
    doc = {"nodes": [{"id": "A", "kind": "es"}], "links": [{"src": "A", "dst": "B", "speed_mbps": "fast"}],
           "flows": []}
    with pytest.raises(ParseError):
        instance_from_doc(doc)
    with pytest.raises(ParseError):
        instance_from_doc({"nodes": [{"id": "A", "kind": "router"}], "links": [], "flows": []})


def test_validation_failure(tmp_path):
    inst = line_instance([Flow("f", 100, 100, 7, 100, ("ES1", "SW2", "ES3"))])
    save_instance(inst, tmp_path / "i.json")
    with pytest.raises(ValidationFailed):
        load_instance(tmp_path / "i.json")
    assert load_instance(tmp_path / "i.json", validate=False).flows == inst.flows


def test_schedule_file_has_gcl(tmp_path, two_flows):
    sched = Schedule.from_assignment({(("SW1", "SW2"), 7): WindowConfig(3, 4, 10)})
    save_schedule(sched, tmp_path / "s.json", two_flows)
    doc = json.loads((tmp_path / "s.json").read_text())
    (port,) = doc["gcl"]
    assert port["cycle"] == 10
    assert [e["time"] for e in port["entries"]] == [0, 3, 7]
    assert port["entries"][1]["gates"][0] == "o"
