"""Line-delimited JSON instance files.

The first line is a header object::

    {"format": "onlinepack-instance", "version": 1, "dims": 3,
     "objective": {"type": "modular"}, "meta": {...},
     "opt_witness": [0, 2], "opt_value": "3/2"}

followed by one object per item, in arrival order::

    {"id": 0, "coords": [[dim, num, den], ...], "value": "1/2"}

Coverage instances carry ``"covers": [...]`` per item and may list
``"element_weights"`` in the objective header (missing elements weigh 1).
Rationals are written as ``"num/den"`` strings or integers.
"""
from __future__ import annotations

import json
from pathlib import Path

from gmpy2 import mpq

from .core import Item, Q, SparseWeightVector
from .generators import InstanceSample
from .objective import Cardinality, Coverage, Modular

FORMAT = "onlinepack-instance"
VERSION = 1


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


def rational_str(x) -> str:
    x = Q(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def jsonable(obj):
    """Recursively convert rationals, tuples, sets and numpy scalars for json."""
    if isinstance(obj, type(mpq(0))):
        return rational_str(obj)
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(jsonable(v) for v in obj)
    if hasattr(obj, "item") and callable(obj.item):
        return obj.item()
    return obj


def dumps_instance(sample: InstanceSample) -> str:
    obj = sample.objective
    header = {"format": FORMAT, "version": VERSION, "dims": sample.dim_count}
    if isinstance(obj, Modular):
        header["objective"] = {"type": "modular"}
    elif isinstance(obj, Coverage):
        header["objective"] = {
            "type": "coverage",
            "element_weights": {str(e): rational_str(w) for e, w in obj.element_weights.items()},
        }
    else:
        header["objective"] = {"type": "cardinality"}
    header["meta"] = jsonable(sample.meta)
    header["opt_witness"] = sorted(sample.opt_witness) if sample.opt_witness is not None else None
    header["opt_value"] = rational_str(sample.opt_value) if sample.opt_value is not None else None
    lines = [json.dumps(header, sort_keys=True)]
    for it in sample.items:
        rec = {
            "id": it.id,
            "coords": [[i, int(w.numerator), int(w.denominator)] for i, w in it.weights.items()],
        }
        if isinstance(obj, Modular):
            rec["value"] = rational_str(obj.values[it.id])
        elif isinstance(obj, Coverage):
            rec["covers"] = sorted(str(e) for e in obj.covers[it.id])
        lines.append(json.dumps(rec))
    return "\n".join(lines) + "\n"


def write_instance(sample: InstanceSample, path) -> None:
    Path(path).write_text(dumps_instance(sample))


def _rational(raw, line, what):
    try:
        if isinstance(raw, bool):
            raise ValueError
        return Q(raw) if not isinstance(raw, float) else Q(str(raw))
    except (ValueError, TypeError, ZeroDivisionError):
        raise ParseError(f"bad rational for {what}: {raw!r}", line) from None


def loads_instance(text: str) -> InstanceSample:
    lines = [(n, ln) for n, ln in enumerate(text.splitlines(), start=1) if ln.strip()]
    if not lines:
        raise ParseError("empty file, header expected", 1)
    records = []
    for n, ln in lines:
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", n) from None
        if not isinstance(rec, dict):
            raise ParseError("expected a JSON object", n)
        records.append((n, rec))

    hline, header = records[0]
    if "dims" not in header or "objective" not in header:
        raise ParseError("header needs 'dims' and 'objective'", hline)
    d = header["dims"]
    if not isinstance(d, int) or d < 0:
        raise ParseError(f"bad dimension count {d!r}", hline)
    otype = header["objective"].get("type") if isinstance(header["objective"], dict) else None
    if otype not in ("modular", "cardinality", "coverage"):
        raise ParseError(f"unknown objective type {otype!r}", hline)

    items, values, covers = [], {}, {}
    for n, rec in records[1:]:
        vid = rec.get("id")
        if not isinstance(vid, int):
            raise ParseError("item needs an integer 'id'", n)
        if vid != len(items):
            raise ParseError(f"item id {vid} out of arrival order (expected {len(items)})", n)
        coords = rec.get("coords", [])
        wmap = {}
        try:
            for dim, num, den in coords:
                if not isinstance(dim, int) or dim in wmap:
                    raise ValueError
                wmap[dim] = mpq(int(num), int(den))
            vec = SparseWeightVector.from_mapping(wmap, d)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise ParseError(f"bad coords {coords!r} {exc}".rstrip(), n) from None
        items.append(Item(vid, vec))
        if otype == "modular":
            if "value" not in rec:
                raise ParseError("modular item needs 'value'", n)
            values[vid] = _rational(rec["value"], n, "value")
            if values[vid] < 0:
                raise ParseError("negative value", n)
        elif otype == "coverage":
            cov = rec.get("covers")
            if not isinstance(cov, list):
                raise ParseError("coverage item needs a 'covers' list", n)
            covers[vid] = frozenset(str(e) for e in cov)

    ids = frozenset(it.id for it in items)
    if otype == "modular":
        objective = Modular(values)
    elif otype == "coverage":
        raw = header["objective"].get("element_weights", {})
        ew = {str(e): _rational(w, hline, f"element {e}") for e, w in raw.items()}
        for elems in covers.values():
            for e in elems:
                ew.setdefault(e, mpq(1))
        objective = Coverage(covers, ew)
    else:
        objective = Cardinality(ids)

    witness = header.get("opt_witness")
    value = header.get("opt_value")
    witness = frozenset(witness) if witness is not None else None
    value = _rational(value, hline, "opt_value") if value is not None else None
    try:
        return InstanceSample(items, objective, d, witness, value, dict(header.get("meta") or {}))
    except AssertionError as exc:
        raise ParseError(f"declared optimum rejected: {exc}", hline) from None


def read_instance(path) -> InstanceSample:
    return loads_instance(Path(path).read_text())
