"""Instance ingestion: PSPLib single-mode ``.sm`` files and the native JSON format."""

from __future__ import annotations

import json
import os
import re

import jsonschema

from .model import Instance, Job, ResourceProfile, Semantics

DEFAULT_PROFIT = 1.0
DEFAULT_RATE = 0.001


class ParseError(ValueError):
    def __init__(self, msg: str, line: int | None = None, pointer: str | None = None):
        self.line = line
        self.pointer = pointer
        where = f"line {line}: " if line is not None else (f"{pointer}: " if pointer is not None else "")
        super().__init__(where + msg)


class UnsupportedFormat(ParseError):
    pass


# --- PSPLib -----------------------------------------------------------------------


_HEADERS = ("PRECEDENCE RELATIONS:", "REQUESTS/DURATIONS:", "RESOURCEAVAILABILITIES:")
_KNOWN = _HEADERS + ("PROJECT INFORMATION:",)


def parse_psplib(text: str, profit_default: float = DEFAULT_PROFIT, r: float = DEFAULT_RATE,
                 semantics: Semantics = Semantics.CUMULATIVE, name: str = "") -> Instance:
    """Read a single-mode PSPLib file.

    Dummy jobs (zero duration, zero demand) get profit 0, every other job
    ``profit_default``. Availabilities become constant rates.
    """
    lines = text.splitlines()
    n_jobs = horizon = None
    sections: dict[str, int] = {}
    for i, raw in enumerate(lines):
        s = raw.strip()
        low = s.lower()
        if low.startswith("jobs (incl. supersource/sink"):
            n_jobs = _int_after_colon(s, i + 1)
        elif low.startswith("horizon"):
            horizon = _int_after_colon(s, i + 1)
        elif s.endswith(":") and s.isupper() and s not in _KNOWN and not s.startswith("*"):
            raise ParseError(f"unknown section header {s!r}", i + 1)
        elif s in _HEADERS:
            sections[s] = i
    for key, val in (("jobs (incl. supersource/sink )", n_jobs), ("horizon", horizon)):
        if val is None:
            raise ParseError(f"missing field {key!r}")
    for h in _HEADERS:
        if h not in sections:
            raise ParseError(f"missing section {h!r}")

    succ: dict[int, list[int]] = {}
    i = sections["PRECEDENCE RELATIONS:"] + 2
    for _ in range(n_jobs):
        toks = _row(lines, i, "PRECEDENCE RELATIONS")
        if len(toks) < 3:
            raise ParseError("short precedence row", i + 1)
        jid, modes, ns = toks[0], toks[1], toks[2]
        if modes != 1:
            raise UnsupportedFormat(f"job {jid} has {modes} modes; only single-mode files are supported", i + 1)
        if len(toks) != 3 + ns:
            raise ParseError(f"job {jid} lists {len(toks) - 3} successors, header says {ns}", i + 1)
        succ[jid] = toks[3:]
        i += 1

    i = sections["REQUESTS/DURATIONS:"] + 1
    while i < len(lines) and not lines[i].strip().startswith("-"):
        i += 1
    i += 1
    dur: dict[int, int] = {}
    req: dict[int, list[float]] = {}
    K = None
    for _ in range(n_jobs):
        toks = _row(lines, i, "REQUESTS/DURATIONS")
        if len(toks) < 3:
            raise ParseError("short request row", i + 1)
        jid, mode, d, *qs = toks
        if mode != 1:
            raise UnsupportedFormat(f"job {jid} mode {mode}; only single-mode files are supported", i + 1)
        if K is None:
            K = len(qs)
        elif len(qs) != K:
            raise ParseError(f"job {jid} has {len(qs)} requests, expected {K}", i + 1)
        dur[jid] = d
        req[jid] = [float(q) for q in qs]
        i += 1

    i = sections["RESOURCEAVAILABILITIES:"] + 2
    avail = _row(lines, i, "RESOURCEAVAILABILITIES")
    if len(avail) != K:
        raise ParseError(f"{len(avail)} availabilities for {K} resources", i + 1)

    preds: dict[int, set[int]] = {j: set() for j in succ}
    for j, ss in succ.items():
        for k in ss:
            if k not in preds:
                raise ParseError(f"job {j} has unknown successor {k}")
            preds[k].add(j)
    jobs = []
    for j in sorted(succ):
        dummy = dur[j] == 0 and not any(req[j])
        jobs.append(Job(j, dur[j], 0.0 if dummy else float(profit_default), tuple(req[j]), frozenset(preds[j])))
    resources = tuple(ResourceProfile(k + 1, rate=float(a)) for k, a in enumerate(avail))
    return Instance(tuple(jobs), resources, horizon, float(r), Semantics(semantics), name)


def _int_after_colon(s: str, line: int) -> int:
    m = re.search(r":\s*(-?\d+)", s)
    if not m:
        raise ParseError(f"expected an integer in {s!r}", line)
    return int(m.group(1))


def _row(lines: list[str], i: int, section: str) -> list[int]:
    if i >= len(lines) or not lines[i].strip() or lines[i].strip().startswith("*"):
        raise ParseError(f"section {section} is truncated", i + 1)
    try:
        return [int(t) for t in lines[i].split()]
    except ValueError:
        raise ParseError(f"non-integer field in section {section}", i + 1) from None


# --- JSON ---------------------------------------------------------------------------

INSTANCE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["T", "rate", "resources", "jobs"],
    "properties": {
        "name": {"type": "string"},
        "T": {"type": "integer", "minimum": 1},
        "rate": {"type": "number", "minimum": 0},
        "semantics": {"enum": ["cumulative", "renewable"]},
        "resources": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "availability"],
                "properties": {
                    "id": {"type": "integer"},
                    "availability": {
                        "oneOf": [
                            {"type": "number", "minimum": 0},
                            {"type": "array", "items": {"type": "number", "minimum": 0}},
                        ]
                    },
                },
                "additionalProperties": False,
            },
        },
        "jobs": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "p", "profit"],
                "properties": {
                    "id": {"type": "integer", "minimum": 0},
                    "p": {"type": "integer", "minimum": 0},
                    "profit": {"type": "number"},
                    "demands": {"type": "array", "items": {"type": "number", "minimum": 0}},
                    "preds": {"type": "array", "items": {"type": "integer"}},
                },
                "additionalProperties": False,
            },
        },
    },
    "additionalProperties": False,
}

_validator = jsonschema.Draft202012Validator(INSTANCE_SCHEMA)


def _pointer(path) -> str:
    return "/" + "/".join(str(p) for p in path)


def instance_from_dict(data: dict) -> Instance:
    e = jsonschema.exceptions.best_match(_validator.iter_errors(data))
    if e is not None:
        raise ParseError(e.message, pointer=_pointer(e.absolute_path))
    resources = []
    for res in data["resources"]:
        a = res["availability"]
        if isinstance(a, list):
            resources.append(ResourceProfile(res["id"], values=tuple(a)))
        else:
            resources.append(ResourceProfile(res["id"], rate=float(a)))
    jobs = tuple(
        Job(j["id"], j["p"], float(j["profit"]), tuple(j.get("demands", ())), frozenset(j.get("preds", ())))
        for j in data["jobs"]
    )
    return Instance(jobs, tuple(resources), data["T"], float(data["rate"]),
                    Semantics(data.get("semantics", "cumulative")), data.get("name", ""))


def parse_json(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", e.lineno) from None
    return instance_from_dict(data)


def instance_to_dict(inst: Instance) -> dict:
    out = {
        "T": inst.T,
        "rate": inst.r,
        "semantics": inst.semantics.value,
        "resources": [
            {"id": r.id, "availability": list(r.values) if r.values is not None else r.rate}
            for r in inst.resources
        ],
        "jobs": [
            {"id": j.id, "p": j.p, "profit": j.profit, "demands": list(j.demands), "preds": sorted(j.preds)}
            for j in inst.jobs
        ],
    }
    if inst.name:
        out["name"] = inst.name
    return out


def write_json(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=1)


def load_instance(path: str, profit_default: float = DEFAULT_PROFIT, r: float | None = None,
                  semantics: Semantics | None = None) -> Instance:
    """Read ``.json`` natively, anything else as PSPLib. ``r`` and
    ``semantics`` override the file's values when given."""
    with open(path) as fh:
        text = fh.read()
    name = os.path.splitext(os.path.basename(path))[0]
    if path.endswith(".json"):
        inst = parse_json(text)
        if not inst.name:
            inst = Instance(inst.jobs, inst.resources, inst.T, inst.r, inst.semantics, name)
    else:
        inst = parse_psplib(text, profit_default, DEFAULT_RATE, Semantics.CUMULATIVE, name)
    if r is not None:
        inst = inst.with_rate(r)
    if semantics is not None:
        inst = inst.with_semantics(semantics)
    return inst
