"""TOML model files describing piecewise-affine systems.

Layout::

    dim = 2
    x0 = [2.0, 0.0]          # optional initial state

    [[events]]
    row = [1.0, 0.0]
    offset = 0.0

    [[pieces]]
    signs = [-1]
    A = [[0.0, 1.0], [0.0, 0.0]]
    b = [0.0, -9.81]

``A`` is row-major (a list of rows). One piece is required for every sign
pattern of the events; an event value of exactly zero selects the ``+1`` piece.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .errors import ModelParseError, ModelValidationError
from .oracles import AffinePiece, AffinePiecewiseSystem

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


def _vector(value, where, size=None):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        raise ModelParseError(f"{where}: expected a list of numbers")
    if size is not None and len(value) != size:
        raise ModelValidationError(f"{where}: expected {size} entries, got {len(value)}")
    return np.array(value, dtype=float)


def parse_model(text: str, source: str = "<string>") -> AffinePiecewiseSystem:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ModelParseError(f"{source}: {exc}") from exc

    for key in ("dim", "events", "pieces"):
        if key not in doc:
            raise ModelParseError(f"{source}: missing field '{key}'")
    n = doc["dim"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ModelParseError(f"{source}: field 'dim' must be a positive integer")
    events = doc["events"]
    if not isinstance(events, list) or not events:
        raise ModelParseError(f"{source}: 'events' must be a non-empty array of tables")
    rows, offsets = [], []
    for i, ev in enumerate(events):
        where = f"{source}: events[{i}]"
        if not isinstance(ev, dict) or "row" not in ev or "offset" not in ev:
            raise ModelParseError(f"{where}: needs 'row' and 'offset'")
        rows.append(_vector(ev["row"], f"{where}.row", n))
        off = ev["offset"]
        if not isinstance(off, (int, float)) or isinstance(off, bool):
            raise ModelParseError(f"{where}.offset: expected a number")
        offsets.append(float(off))
    m = len(rows)

    pieces = {}
    for i, pc in enumerate(doc["pieces"]):
        where = f"{source}: pieces[{i}]"
        if not isinstance(pc, dict) or not {"signs", "A", "b"} <= pc.keys():
            raise ModelParseError(f"{where}: needs 'signs', 'A' and 'b'")
        signs = pc["signs"]
        if not isinstance(signs, list) or any(s not in (-1, 1) or isinstance(s, bool) for s in signs):
            raise ModelParseError(f"{where}.signs: expected a list of +1/-1")
        if len(signs) != m:
            raise ModelValidationError(f"{where}.signs: expected {m} entries, got {len(signs)}")
        A = pc["A"]
        if not isinstance(A, list) or len(A) != n:
            raise ModelValidationError(f"{where}.A: expected {n} rows")
        A = np.array([_vector(r, f"{where}.A[{j}]", n) for j, r in enumerate(A)])
        b = _vector(pc["b"], f"{where}.b", n)
        region = tuple(signs)
        if region in pieces:
            raise ModelValidationError(f"{where}: duplicate sign pattern {region}")
        pieces[region] = AffinePiece(A, b, region)

    x0 = _vector(doc["x0"], f"{source}: x0", n) if "x0" in doc else None
    return AffinePiecewiseSystem(np.array(rows), np.array(offsets), pieces, name=Path(source).stem, x0=x0)


def load_model(path) -> AffinePiecewiseSystem:
    """Read a model file. ``.as_hybrid()`` on the result gives the integrable system."""
    path = Path(path)
    return parse_model(path.read_text(encoding="utf-8"), str(path))


def _num(v: float) -> str:
    return repr(float(v))


def _list(vs) -> str:
    return "[" + ", ".join(_num(v) for v in vs) + "]"


def dump_model(system: AffinePiecewiseSystem) -> str:
    """Serialize with shortest round-trip float formatting; pieces sorted by sign pattern."""
    lines = [f"dim = {system.dim_state}"]
    if system.x0 is not None:
        lines.append(f"x0 = {_list(system.x0)}")
    lines.append("")
    for row, off in zip(system.event_rows, system.event_offsets):
        lines += ["[[events]]", f"row = {_list(row)}", f"offset = {_num(off)}", ""]
    for region in sorted(system.pieces):
        p = system.pieces[region]
        lines += [
            "[[pieces]]",
            "signs = [" + ", ".join(str(s) for s in region) + "]",
            "A = [" + ", ".join(_list(r) for r in p.A) + "]",
            f"b = {_list(p.b)}",
            "",
        ]
    return "\n".join(lines)


def save_model(system: AffinePiecewiseSystem, path):
    Path(path).write_text(dump_model(system), encoding="utf-8")
