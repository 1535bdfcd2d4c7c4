"""JSON documents describing states.

A document is an object with

``modes``
    list of mode labels (ints or strings), in algebra order.
``kind``
    ``"vector"``, ``"density"`` or ``"named"``.
``amplitudes``
    for vectors: list of ``[re, im]`` pairs, one per basis state.
``matrix``
    for densities: row-major nested list of ``[re, im]`` pairs.
``name``, ``parameters``
    for named states (see :mod:`carsep.named_states`).

Numbers may be JSON numbers or strings holding a fraction such as
``"1/3"``. Writing always emits the shortest float repr, so a document
read back reproduces the same arrays bit for bit.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

import numpy as np

from .car_algebra import FermionAlgebra
from .named_states import NamedStateSpec
from .state_kit import QuantumState, StateError, vector_state

FORMAT = "carsep-state/1"
KINDS = ("vector", "density", "named")


class SpecError(StateError):
    pass


def _number(x) -> float:
    if isinstance(x, bool):
        raise SpecError(f"expected a number, got {x!r}")
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(Fraction(x.strip()))
        except (ValueError, ZeroDivisionError):
            raise SpecError(f"cannot read {x!r} as a number") from None
    raise SpecError(f"expected a number, got {type(x).__name__}")


def _complex(pair) -> complex:
    if isinstance(pair, (list, tuple)) and len(pair) == 2:
        return complex(_number(pair[0]), _number(pair[1]))
    return complex(_number(pair), 0.0)


def _pair(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _parameter(v):
    if isinstance(v, str):
        try:
            return _number(v)
        except SpecError:
            return v  # operator expression
    return v


def vector_document(modes, amplitudes) -> dict:
    return {"format": FORMAT, "modes": list(modes), "kind": "vector",
            "amplitudes": [_pair(z) for z in np.asarray(amplitudes, dtype=complex).ravel()]}


def state_document(state: QuantumState) -> dict:
    rho = state.density
    return {"format": FORMAT, "modes": list(state.labels), "kind": "density",
            "matrix": [[_pair(z) for z in row] for row in rho]}


def named_document(spec: NamedStateSpec) -> dict:
    return {"format": FORMAT, "kind": "named", "name": spec.name, "parameters": dict(spec.parameters)}


def to_document(obj) -> dict:
    if isinstance(obj, QuantumState):
        return state_document(obj)
    if isinstance(obj, NamedStateSpec):
        return named_document(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def from_document(doc: dict) -> QuantumState:
    if not isinstance(doc, dict):
        raise SpecError("a state document must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}, got {kind!r}")
    if kind == "named":
        if "name" not in doc:
            raise SpecError("named state without a name")
        params = {k: _parameter(v) for k, v in (doc.get("parameters") or {}).items()}
        return NamedStateSpec(doc["name"], params).build()
    modes = doc.get("modes")
    if not isinstance(modes, list) or not modes:
        raise SpecError("modes must be a nonempty list")
    alg = FermionAlgebra(modes)
    if kind == "vector":
        amps = np.array([_complex(p) for p in doc.get("amplitudes", [])], dtype=complex)
        return vector_state(alg, amps)
    rows = doc.get("matrix")
    if not isinstance(rows, list):
        raise SpecError("density documents need a matrix")
    rho = np.array([[_complex(p) for p in row] for row in rows], dtype=complex)
    if rho.shape != (alg.dim, alg.dim):
        raise SpecError(f"matrix shape {rho.shape} does not match {len(modes)} modes")
    return QuantumState(rho, alg)


def dumps(obj) -> str:
    doc = obj if isinstance(obj, dict) else to_document(obj)
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def write_state(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def read_state(path) -> QuantumState:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: not valid JSON ({exc.msg})") from None
    return from_document(doc)
