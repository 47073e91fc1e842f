"""Text field files: a JSON header plus values with complex entries stored as
``[re, im]`` pairs. Floats are written with ``repr`` so values round-trip
bit-exactly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import lie
from .calculus import Grid
from .lie import OrbitParams

FORMAT = "grassflow-field"
KINDS = ("skew_field", "grassmann_path", "scalar_field")
ORBIT_TOL = 1e-8
BASE_TOL = 1e-6


class FieldParseError(ValueError):
    pass


class FieldValidationError(ValueError):
    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        super().__init__(f"invariant violated: {invariant}" + (f" ({detail})" if detail else ""))


@dataclass
class FieldData:
    kind: str
    values: np.ndarray
    grid: Grid
    params: OrbitParams | None
    metadata: dict = field(default_factory=dict)

    def header(self) -> dict:
        h = {"format": FORMAT, "version": 1, "kind": self.kind, "L": self.grid.L, "N": self.grid.N}
        if self.params is not None:
            h.update(n=self.params.n, k=self.params.k)
        h["metadata"] = self.metadata
        return h


def _encode(values: np.ndarray):
    if np.iscomplexobj(values):
        return np.stack([values.real, values.imag], axis=-1).tolist()
    return values.tolist()


def _decode(obj, complex_: bool) -> np.ndarray:
    arr = np.asarray(obj, dtype=float)
    if complex_:
        if arr.shape[-1:] != (2,):
            raise FieldValidationError("complex entries as [re, im] pairs")
        return arr[..., 0] + 1j * arr[..., 1]
    return arr


def validate(fd: FieldData) -> None:
    v = fd.values
    N = fd.grid.N
    if fd.kind not in KINDS:
        raise FieldValidationError("known kind", fd.kind)
    if not np.all(np.isfinite(v)):
        raise FieldValidationError("finite values")
    if fd.kind == "scalar_field":
        if v.shape != (N,):
            raise FieldValidationError("value shape", f"expected ({N},), got {v.shape}")
        return
    p = fd.params
    if p is None:
        raise FieldValidationError("orbit sizes n, k present")
    if v.shape != (N, p.n, p.n):
        raise FieldValidationError("value shape", f"expected {(N, p.n, p.n)}, got {v.shape}")
    scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
    if lie.skew_defect(v) > lie.SKEW_TOL * scale:
        raise FieldValidationError("skew-Hermitian values", f"defect {lie.skew_defect(v):.2e}")
    if fd.kind == "grassmann_path":
        dev = float(np.max(np.abs(v[0] - p.a)))
        if dev > BASE_TOL:
            raise FieldValidationError("left boundary base point", f"|gamma(x_0) - a| = {dev:.2e}")
        orb = float(np.max(lie.orbit_residual(v, p)))
        if orb > ORBIT_TOL:
            raise FieldValidationError("orbit membership", f"residual {orb:.2e}")


def dumps(fd: FieldData) -> str:
    validate(fd)
    doc = {"header": fd.header(), "values": _encode(fd.values)}
    return json.dumps(doc, indent=None, separators=(",", ":")) + "\n"


def save_field(fd: FieldData, path) -> None:
    Path(path).write_text(dumps(fd), encoding="utf-8")


def loads(text: str) -> FieldData:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FieldParseError(f"malformed field file at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict) or "header" not in doc or "values" not in doc:
        raise FieldParseError("field file needs 'header' and 'values' entries")
    h = doc["header"]
    if h.get("format") != FORMAT:
        raise FieldParseError(f"unknown format {h.get('format')!r}")
    kind = h.get("kind")
    if kind not in KINDS:
        raise FieldValidationError("known kind", repr(kind))
    try:
        grid = Grid(float(h["L"]), int(h["N"]))
        params = OrbitParams(int(h["n"]), int(h["k"])) if kind != "scalar_field" else None
    except KeyError as e:
        raise FieldParseError(f"header is missing {e.args[0]!r}") from e
    values = _decode(doc["values"], kind != "scalar_field")
    fd = FieldData(kind, values, grid, params, dict(h.get("metadata", {})))
    validate(fd)
    return fd


def load_field(path) -> FieldData:
    return loads(Path(path).read_text(encoding="utf-8"))
