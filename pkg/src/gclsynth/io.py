"""JSON instance and schedule files.

Both formats are plain JSON documents written with sorted keys so that identical
content always produces identical bytes.  See README.md for the schemas.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any

from .model import Flow, Instance, Link, NodeKind, Violation, WindowConfig, validate_instance
from .schedule import Schedule, gcl_entries, port_cycle

INSTANCE_FORMAT = "gclsynth-instance"
SCHEDULE_FORMAT = "gclsynth-schedule"
FORMAT_VERSION = 1


class ParseError(ValueError):
    def __init__(self, source: str, where: str, message: str):
        self.source, self.where, self.message = source, where, message
        super().__init__(f"{source}: {where}: {message}")


class ValidationFailed(ValueError):
    def __init__(self, report: list[Violation]):
        self.report = report
        super().__init__("instance failed validation:\n" + "\n".join(f"  {v}" for v in report))


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return hashlib.sha256(text).hexdigest()


def file_digest(path: str | os.PathLike) -> str:
    return digest(Path(path).read_bytes())


# -- instance ------------------------------------------------------------

def instance_to_doc(instance: Instance) -> dict:
    links = []
    emitted: set[tuple[str, str]] = set()
    for (a, b), lk in instance.links.items():
        if (a, b) in emitted:
            continue
        rev = instance.links.get((b, a))
        duplex = rev is not None and (rev.speed_mbps, rev.macrotick_us) == (lk.speed_mbps, lk.macrotick_us)
        entry = {"src": a, "dst": b, "speed_mbps": lk.speed_mbps, "macrotick_us": lk.macrotick_us}
        if not duplex:
            entry["duplex"] = False
        links.append(entry)
        emitted.add((a, b))
        if duplex:
            emitted.add((b, a))
    return {
        "format": INSTANCE_FORMAT,
        "version": FORMAT_VERSION,
        "name": instance.name,
        "frame_overhead_bytes": instance.overhead_bytes,
        "frame_bytes": [instance.min_frame_bytes, instance.max_frame_bytes],
        "nodes": [{"id": n, "kind": k.value} for n, k in instance.nodes.items()],
        "links": links,
        "flows": [
            {"id": f.id, "payload_bytes": f.payload_bytes, "period_us": f.period_us,
             "priority": f.priority, "deadline_us": f.deadline_us, "route": list(f.route)}
            for f in instance.flows
        ],
    }


def _field(obj: dict, key: str, kind, where: str, source: str, default=...):
    if key not in obj:
        if default is not ...:
            return default
        raise ParseError(source, where, f"missing field '{key}'")
    value = obj[key]
    if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
        raise ParseError(source, f"{where}.{key}", f"expected integer, got {value!r}")
    if kind is str and not isinstance(value, str):
        raise ParseError(source, f"{where}.{key}", f"expected string, got {value!r}")
    if kind is list and not isinstance(value, list):
        raise ParseError(source, f"{where}.{key}", f"expected list, got {value!r}")
    return value


def instance_from_doc(doc: dict, source: str = "<instance>") -> Instance:
    if not isinstance(doc, dict):
        raise ParseError(source, "$", "top level must be an object")
    if doc.get("format", INSTANCE_FORMAT) != INSTANCE_FORMAT:
        raise ParseError(source, "format", f"not an instance file: {doc.get('format')!r}")
    nodes: dict[str, NodeKind] = {}
    for i, n in enumerate(_field(doc, "nodes", list, "$", source)):
        where = f"nodes[{i}]"
        kind = _field(n, "kind", str, where, source)
        try:
            nodes[_field(n, "id", str, where, source)] = NodeKind(kind)
        except ValueError:
            raise ParseError(source, f"{where}.kind", f"unknown node kind {kind!r}") from None
    links: dict[tuple[str, str], Link] = {}
    for i, e in enumerate(_field(doc, "links", list, "$", source)):
        where = f"links[{i}]"
        a, b = _field(e, "src", str, where, source), _field(e, "dst", str, where, source)
        speed = _field(e, "speed_mbps", int, where, source)
        mt = _field(e, "macrotick_us", int, where, source, default=1)
        try:
            links[(a, b)] = Link(a, b, speed, mt)
            if e.get("duplex", True):
                links[(b, a)] = Link(b, a, speed, mt)
        except ValueError as exc:
            raise ParseError(source, where, str(exc)) from None
    flows = []
    for i, f in enumerate(_field(doc, "flows", list, "$", source)):
        where = f"flows[{i}]"
        route = _field(f, "route", list, where, source)
        if len(route) < 2 or not all(isinstance(n, str) for n in route):
            raise ParseError(source, f"{where}.route", "route must list at least two node ids")
        flows.append(Flow(
            id=str(_field(f, "id", str, where, source)),
            payload_bytes=_field(f, "payload_bytes", int, where, source),
            period_us=_field(f, "period_us", int, where, source),
            priority=_field(f, "priority", int, where, source),
            deadline_us=_field(f, "deadline_us", int, where, source),
            route=tuple(route),
        ))
    lo, hi = doc.get("frame_bytes", [64, 1518])
    return Instance(nodes=nodes, links=links, flows=tuple(flows),
                    overhead_bytes=int(doc.get("frame_overhead_bytes", 0)),
                    min_frame_bytes=int(lo), max_frame_bytes=int(hi), name=str(doc.get("name", "")))


def _parse_json(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(source, f"line {exc.lineno} column {exc.colno}", exc.msg) from None


def save_instance(instance: Instance, path: str | os.PathLike) -> str:
    text = dumps(instance_to_doc(instance))
    write_atomic(path, text)
    return digest(text)


def load_instance(path: str | os.PathLike, validate: bool = True) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    inst = instance_from_doc(_parse_json(text, str(path)), str(path))
    if validate:
        report = validate_instance(inst)
        if report:
            raise ValidationFailed(report)
    return inst


def instance_digest(instance: Instance) -> str:
    return digest(dumps(instance_to_doc(instance)))


# -- schedule ------------------------------------------------------------

def schedule_to_doc(schedule: Schedule, instance: Instance | None = None,
                    manifest: dict | None = None) -> dict:
    rows = []
    for (link, q), w in schedule.all_windows():
        mt = instance.links[link].macrotick_us if instance else 1
        rows.append({"node": link[0], "src": link[0], "dst": link[1], "queue": q,
                     "offset": w.offset, "length": w.length, "period": w.period,
                     "macrotick_us": mt})
    gcl = []
    for link in schedule.ports():
        cycle = port_cycle(schedule, link)
        gcl.append({"node": link[0], "src": link[0], "dst": link[1], "cycle": cycle,
                    "entries": gcl_entries(schedule, link, cycle)})
    doc = {
        "format": SCHEDULE_FORMAT,
        "version": FORMAT_VERSION,
        "method": schedule.method,
        "windows": rows,
        "gcl": gcl,
        "queue_map": [{"src": lk[0], "dst": lk[1], "flow": fid, "queue": q}
                      for (lk, fid), q in sorted(schedule.queue_map.items())],
    }
    if instance is not None:
        doc["instance_digest"] = instance_digest(instance)
    if schedule.meta:
        doc["meta"] = schedule.meta
    if manifest is not None:
        doc["manifest"] = manifest
    return doc


def schedule_from_doc(doc: dict, source: str = "<schedule>") -> Schedule:
    if not isinstance(doc, dict) or doc.get("format") != SCHEDULE_FORMAT:
        raise ParseError(source, "format", "not a schedule file")
    windows: dict = {}
    for i, r in enumerate(_field(doc, "windows", list, "$", source)):
        where = f"windows[{i}]"
        key = ((_field(r, "src", str, where, source), _field(r, "dst", str, where, source)),
               _field(r, "queue", int, where, source))
        try:
            w = WindowConfig(_field(r, "offset", int, where, source),
                             _field(r, "length", int, where, source),
                             _field(r, "period", int, where, source))
        except ValueError as exc:
            raise ParseError(source, where, str(exc)) from None
        windows.setdefault(key, []).append(w)
    qmap = {}
    for i, r in enumerate(doc.get("queue_map", [])):
        where = f"queue_map[{i}]"
        qmap[((_field(r, "src", str, where, source), _field(r, "dst", str, where, source)),
              _field(r, "flow", str, where, source))] = _field(r, "queue", int, where, source)
    return Schedule({k: tuple(v) for k, v in windows.items()}, method=str(doc.get("method", "")),
                    queue_map=qmap, meta=dict(doc.get("meta", {})))


def save_schedule(schedule: Schedule, path: str | os.PathLike, instance: Instance | None = None,
                  manifest: dict | None = None) -> str:
    text = dumps(schedule_to_doc(schedule, instance, manifest))
    write_atomic(path, text)
    return digest(text)


def load_schedule(path: str | os.PathLike) -> Schedule:
    text = Path(path).read_text(encoding="utf-8")
    return schedule_from_doc(_parse_json(text, str(path)), str(path))
