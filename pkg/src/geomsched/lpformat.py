"""LP-format text for MipModel (Maximize / Subject To / Bounds / Binaries / End)."""

from __future__ import annotations

import math
import re

from .mip import Constraint, MipModel, Var

TERMS_PER_LINE = 8
_NAME = re.compile(r"^([xXY])_(\d+)_(\d+)$")
_SECTIONS = {
    "maximize": "obj", "maximum": "obj", "max": "obj",
    "subject to": "rows", "such that": "rows", "st": "rows", "s.t.": "rows",
    "bounds": "bounds", "binaries": "bin", "binary": "bin", "end": "end",
}


class LPFormatError(ValueError):
    pass


def _num(c: float) -> str:
    if not math.isfinite(c):
        raise LPFormatError(f"non-finite coefficient {c}")
    s = format(c, ".12g")
    return "0" if s == "-0" else s


def _expr(terms, indent: str) -> str:
    parts = []
    for i, (name, c) in enumerate(terms):
        s = _num(c)
        if i == 0:
            parts.append(f"{s} {name}")
        elif s.startswith("-"):
            parts.append(f"- {s[1:]} {name}")
        else:
            parts.append(f"+ {s} {name}")
    lines = [" ".join(parts[i:i + TERMS_PER_LINE]) for i in range(0, len(parts), TERMS_PER_LINE)]
    return ("\n" + indent).join(lines)


def _sort_key(v: Var):
    return (v.job, v.index, v.name)


def write_lp(model: MipModel) -> str:
    out = [f"\\ {model.name}", "Maximize"]
    order = sorted(model.vars, key=_sort_key)
    obj = [(v.name, model.objective[v.name]) for v in order if v.name in model.objective]
    out.append(" obj: " + _expr(obj, "   ") if obj else " obj:")
    out.append("Subject To")
    for con in model.constraints:
        if not con.terms:
            raise LPFormatError(f"constraint {con.name} has no terms")
        out.append(f" {con.name}: {_expr(con.terms, '   ')} {con.sense} {_num(con.rhs)}")
    out.append("Bounds")
    out.append("Binaries")
    names = [v.name for v in order]
    for i in range(0, len(names), TERMS_PER_LINE):
        out.append(" " + " ".join(names[i:i + TERMS_PER_LINE]))
    out.append("End")
    return "\n".join(out) + "\n"


def _parse_expr(tokens: list[str], where: str) -> list[tuple[str, float]]:
    terms = []
    sign = 1.0
    coef = None
    for tok in tokens:
        if tok in "+-":
            sign = -1.0 if tok == "-" else 1.0
            continue
        try:
            coef = float(tok)
            continue
        except ValueError:
            pass
        terms.append((tok, sign * (1.0 if coef is None else coef)))
        sign, coef = 1.0, None
    if coef is not None:
        raise LPFormatError(f"dangling constant in {where}")
    return terms


def _var(name: str) -> Var:
    m = _NAME.match(name)
    return Var(name, int(m.group(2)), int(m.group(3))) if m else Var(name)


def parse_lp(text: str) -> MipModel:
    """Read back the subset of LP format that ``write_lp`` emits."""
    section = None
    name = "model"
    buf: dict[str, list[str]] = {"obj": [], "rows": [], "bounds": [], "bin": []}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if raw.startswith("\\"):
            if lineno == 1:
                name = raw[1:].strip() or name
            continue
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key is not None:
            section = key
            if key == "end":
                break
            continue
        if section is None:
            raise LPFormatError(f"line {lineno}: text before the first section")
        buf[section].append(line)
    obj_text = " ".join(buf["obj"])
    if ":" in obj_text:
        obj_text = obj_text.split(":", 1)[1]
    objective = dict(_parse_expr(obj_text.split(), "objective"))
    # constraints may continue across lines; each starts with "name:"
    rows: list[str] = []
    for line in buf["rows"]:
        if re.match(r"^[A-Za-z_][\w.\[\]]*\s*:", line):
            rows.append(line)
        elif rows:
            rows[-1] += " " + line
        else:
            raise LPFormatError(f"unnamed constraint: {line}")
    constraints = []
    for row in rows:
        cname, body = row.split(":", 1)
        m = re.match(r"^(.*?)(<=|>=|=<|=>|=|<|>)\s*(\S+)\s*$", body)
        if not m:
            raise LPFormatError(f"cannot parse constraint {cname.strip()}")
        sense = {"<": "<=", "=<": "<=", ">": ">=", "=>": ">="}.get(m.group(2), m.group(2))
        constraints.append(Constraint(cname.strip(), tuple(_parse_expr(m.group(1).split(), cname)), sense, float(m.group(3))))
    binaries = " ".join(buf["bin"]).split()
    declared = list(dict.fromkeys(binaries))
    seen = set(declared)
    for nm in list(objective) + [t for c in constraints for t, _ in c.terms]:
        if nm not in seen:
            seen.add(nm)
            declared.append(nm)
    model = MipModel(name=name, vars=[_var(n) for n in declared], objective=objective, constraints=constraints)
    kinds = {v.name[0] for v in model.vars if v.job >= 0}
    if len(kinds) == 1:
        from .mip import FormulationKind

        model.kind = {"x": FormulationKind.ORIG_AT, "X": FormulationKind.AGG_AT, "Y": FormulationKind.AGG_BY}[kinds.pop()]
    return model.validate()
