import pytest

from gclsynth.model import Flow, Instance

# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE: list[str] = []


def record(criterion: str, ok: bool, detail: str = "") -> bool:
    line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def line_instance(flows, switches=("SW1", "SW2"), speed=100, mt=1, **kw):
    """ES1, ES2 -> SW1 -> SW2 -> ES3, plus ES4 on SW2."""
    edges = [("ES1", "SW1"), ("ES2", "SW1"), ("SW1", "SW2"), ("SW2", "ES3"), ("ES4", "SW2")]
    return Instance.build(list(switches), ["ES1", "ES2", "ES3", "ES4"], edges, flows,
                          speed_mbps=speed, macrotick_us=mt, **kw)


def race_instance(period=200, payload=250, mt=10):
    """Two equal flows from different end systems merging at SW1 towards ES3."""
    flows = [Flow("f1", payload, period, 7, period, ("ES1", "SW1", "SW2", "ES3")),
             Flow("f2", payload, period, 7, period, ("ES2", "SW1", "SW2", "ES3"))]
    return line_instance(flows, mt=mt)


@pytest.fixture
def single_flow():
    return line_instance([Flow("f1", 1000, 1000, 7, 1000, ("ES1", "SW1", "SW2", "ES3"))])


@pytest.fixture
def two_flows():
    return line_instance([Flow("f1", 500, 1000, 7, 1000, ("ES1", "SW1", "SW2", "ES3")),
                          Flow("f2", 300, 2000, 6, 2000, ("ES2", "SW1", "SW2", "ES3"))])


def window_race_instance():
    """Two flows of different periods merging at SW1; every hyperperiod is 800 us, macrotick 20 us."""
    flows = [Flow("f1", 250, 400, 7, 400, ("ES1", "SW1", "SW2", "ES3")),
             Flow("f2", 400, 800, 7, 800, ("ES2", "SW1", "SW2", "ES3"))]
    return line_instance(flows, mt=20)
