"""JSON model files: parsing, validation and construction of backends.

A model file is a JSON object with a ``kind`` and a backend payload.
Complex numbers are written ``[re, im]`` (plain numbers are real), matrices
as row-major nested arrays.  States are ``{"vector": [...]}`` or
``{"matrix": [[...]]}`` so that the two are never confused.

``classical``::

    {"kind": "classical", "points": ["w1", "w2"], "weights": [0.5, 0.5],
     "variables": {"a": {"values": [1, -1]}},
     "contexts": {"C": ["w1"]}}

A variable is either a bare array of values (one per point) or an object
with ``values`` and optionally ``outcomes`` (declared order) and
``numeric`` (``{"heads": 1, "tails": -1}``) mapping string labels to numbers.

``von_neumann`` and ``instrument``::

    {"kind": "von_neumann", "observables": {"Z": [[1, 0], [0, -1]]},
     "states": {"zero": {"vector": [1, 0]}},
     "instruments": [{"name": "mp", "observable": "M", "kind": "measure_and_prepare",
                      "outcomes": [1, -1],
                      "data": {"effects": [...], "states": [{"vector": [...]}, ...]}}]}

``measure_lsr``::

    {"kind": "measure_lsr", "support": ["w1", "w2"],
     "instruments": {"a": {"outcomes": [0, 1], "matrices": [[[1, 0], [0, 0]], [[0, 0], [0, 1]]]}},
     "contexts": {"mu": [0.5, 0.5]}}

Every kind accepts ``"tolerances": {"oe": 1e-9, ...}``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import linalg
from .classical import ClassicalModel, FiniteProbSpace, RandomVariable
from .errors import CMMError, InputError, InvariantError
from .lsr import MeasureModel, MeasureVector, MInstrument
from .quantum.instruments import Instrument, povm_from_instrument
from .quantum.model import QuantumModel
from .quantum.states import DensityMatrix, HermitianObservable, check_density
from .tolerances import DEFAULT, Tolerances

KINDS = ("classical", "von_neumann", "instrument", "measure_lsr")


class ModelFileError(InputError):
    """Malformed model file; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    residual: float | None = None
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "residual": self.residual, "detail": self.detail}


def load_tree(path: str | Path) -> dict:
    text = Path(path).read_text()
    try:
        tree = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    if not isinstance(tree, dict):
        raise ModelFileError("", "top level must be an object")
    return tree


def digest(tree: dict) -> str:
    """SHA-256 of the canonical JSON form of a model tree."""
    blob = json.dumps(tree, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ---------------------------------------------------------------------------
# field parsing


def _need(tree: dict, key: str, path: str):
    if key not in tree:
        raise ModelFileError(f"{path}.{key}" if path else key, "missing field")
    return tree[key]


def _complex(v, path: str) -> complex:
    if isinstance(v, bool):
        raise ModelFileError(path, "expected a number")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v):
        return complex(v[0], v[1])
    raise ModelFileError(path, "expected a number or [re, im]")


def parse_matrix(v, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v or not all(isinstance(r, list) for r in v):
        raise ModelFileError(path, "expected a nested array (list of rows)")
    n = len(v[0])
    for i, row in enumerate(v):
        if len(row) != n:
            raise ModelFileError(f"{path}[{i}]", f"row has {len(row)} entries, expected {n}")
    return np.array([[_complex(x, f"{path}[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(v)])


def parse_vector(v, path: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ModelFileError(path, "expected a nonempty array")
    return np.array([_complex(x, f"{path}[{i}]") for i, x in enumerate(v)])


def parse_state(v, path: str) -> np.ndarray:
    """A state as a density matrix (vectors become projectors)."""
    if not isinstance(v, dict) or len(set(v) & {"vector", "matrix"}) != 1:
        raise ModelFileError(path, 'state must be {"vector": [...]} or {"matrix": [[...]]}')
    if "vector" in v:
        psi = parse_vector(v["vector"], f"{path}.vector")
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ModelFileError(f"{path}.vector", "zero vector")
        psi = psi / norm
        return np.outer(psi, psi.conj())
    return parse_matrix(v["matrix"], f"{path}.matrix")


def parse_tolerances(tree: dict) -> Tolerances:
    over = tree.get("tolerances", {})
    if not isinstance(over, dict):
        raise ModelFileError("tolerances", "expected an object")
    try:
        return DEFAULT.override(**{k: float(v) for k, v in over.items()})
    except KeyError as exc:
        raise ModelFileError(f"tolerances.{exc.args[0]}", "unknown tolerance") from None


def _outcome(v, path: str):
    if isinstance(v, bool) or not isinstance(v, (int, float, str)):
        raise ModelFileError(path, "outcome labels must be numbers or strings")
    return v


# ---------------------------------------------------------------------------
# validation


FAILED = object()


def _try(checks: list[Check], name: str, fn: Callable[[], Any]) -> Any:
    """Run ``fn`` as a named check; returns its value or :data:`FAILED`."""
    try:
        out = fn()
    except InvariantError as exc:
        checks.append(Check(name, False, exc.residual, str(exc)))
        return FAILED
    except CMMError as exc:
        checks.append(Check(name, False, None, str(exc)))
        return FAILED
    checks.append(Check(name, True, 0.0))
    return out


def _kraus_entry(v, path: str) -> np.ndarray:
    """One outcome's Kraus operator: a matrix, or ``{"family": [matrix, ...]}``."""
    if isinstance(v, dict):
        fam = _need(v, "family", path)
        return np.array([parse_matrix(m, f"{path}.family[{k}]") for k, m in enumerate(fam)])
    return parse_matrix(v, path)


def _classical_checks(tree: dict, tol: Tolerances, checks: list[Check]) -> ClassicalModel | None:
    points = _need(tree, "points", "")
    weights = _need(tree, "weights", "")
    if not isinstance(points, list) or not isinstance(weights, list):
        raise ModelFileError("points", "points and weights must be arrays")
    w = np.array([_complex(x, f"weights[{i}]").real for i, x in enumerate(weights)])
    for i, x in enumerate(w):
        label = points[i] if i < len(points) else i
        checks.append(Check(f"weight nonnegative at point {label!r}", bool(x >= 0), float(max(0.0, -x))))
    checks.append(Check("weights sum to 1", bool(abs(w.sum() - 1) <= 1e-12), float(abs(w.sum() - 1))))
    space = _try(checks, "probability space", lambda: FiniteProbSpace(points, w, tol))
    if space is FAILED:
        return None
    variables = []
    for name, spec in tree.get("variables", {}).items():
        path = f"variables.{name}"
        if isinstance(spec, list):
            spec = {"values": spec}
        values = _need(spec, "values", path)
        if not isinstance(values, list):
            raise ModelFileError(f"{path}.values", "expected an array")
        values = [_outcome(v, f"{path}.values[{i}]") for i, v in enumerate(values)]
        if "numeric" in spec:
            table = spec["numeric"]
            missing = [v for v in values if v not in table]
            if missing:
                raise ModelFileError(f"{path}.numeric", f"no numeric value for {missing[0]!r}")
            values = [table[v] for v in values]
        outcomes = spec.get("outcomes")
        if outcomes is not None:
            outcomes = [_outcome(v, f"{path}.outcomes[{i}]") for i, v in enumerate(outcomes)]
        checks.append(Check(f"variable {name!r} defined on every point", len(values) == len(points),
                            float(abs(len(values) - len(points)))))
        rv = _try(checks, f"variable {name!r}", lambda: RandomVariable(name, values, outcomes))
        if rv is not FAILED and len(values) == len(points):
            variables.append(rv)
    contexts = {}
    for name, labels in tree.get("contexts", {}).items():
        e = _try(checks, f"context {name!r} names known points", lambda: space.event(labels))
        if e is not FAILED:
            p = space.prob(e)
            checks.append(Check(f"context {name!r} has positive probability", p > tol.cond, p))
            if p > tol.cond:
                contexts[name] = e
    if not all(c.passed for c in checks):
        return None
    return ClassicalModel(space, variables, contexts, tol)


def _quantum_checks(tree: dict, tol: Tolerances, checks: list[Check]) -> QuantumModel | None:
    observables = []
    for name, m in tree.get("observables", {}).items():
        mat = parse_matrix(m, f"observables.{name}")
        checks.append(Check(f"observable {name!r} hermitian", linalg.is_hermitian(mat, tol),
                            linalg.hermitian_residual(mat)))
        a = _try(checks, f"observable {name!r} spectral reconstruction", lambda: HermitianObservable(name, mat, tol))
        if a is not FAILED:
            observables.append(a)
    states = {}
    for name, s in _need(tree, "states", "").items():
        rho = parse_state(s, f"states.{name}")
        checks.append(Check(f"state {name!r} hermitian", linalg.hermitian_residual(rho) <= tol.state,
                            linalg.hermitian_residual(rho)))
        tr = float(abs(np.trace(rho) - 1))
        checks.append(Check(f"state {name!r} trace=1", tr <= tol.state, tr))
        if _try(checks, f"state {name!r} density matrix", lambda: check_density(rho, tol)) is not FAILED:
            states[name] = DensityMatrix.trusted(rho)
    instruments = []
    for i, spec in enumerate(tree.get("instruments", [])):
        path = f"instruments[{i}]"
        kind = _need(spec, "kind", path)
        data = dict(_need(spec, "data", path))
        parsed = {}
        for key, val in data.items():
            p = f"{path}.data.{key}"
            if key == "states":
                parsed[key] = [parse_state(s, f"{p}[{j}]") for j, s in enumerate(val)]
            elif key == "kraus":
                parsed[key] = [_kraus_entry(v, f"{p}[{j}]") for j, v in enumerate(val)]
            else:
                parsed[key] = [parse_matrix(m, f"{p}[{j}]") for j, m in enumerate(val)]
        label = spec.get("name", f"#{i}")
        inst = _try(checks, f"instrument {label!r} structure", lambda: Instrument(
            kind, parsed, outcomes=spec.get("outcomes"), observable=spec.get("observable"), name=spec.get("name")))
        if inst is FAILED:
            continue
        if _try(checks, f"instrument {label!r} invariants", lambda: inst.validate(tol)) is FAILED:
            continue
        if _try(checks, f"instrument {label!r} POVM", lambda: povm_from_instrument(inst, tol)) is not FAILED:
            instruments.append(inst)
    if not all(c.passed for c in checks):
        return None
    model = _try(checks, "model assembly", lambda: QuantumModel(observables, states, instruments, tol))
    return None if model is FAILED else model


def _lsr_checks(tree: dict, tol: Tolerances, checks: list[Check]) -> MeasureModel | None:
    support = _need(tree, "support", "")
    insts = []
    for name, spec in _need(tree, "instruments", "").items():
        path = f"instruments.{name}"
        mats = [np.real(parse_matrix(m, f"{path}.matrices[{j}]")) for j, m in enumerate(_need(spec, "matrices", path))]
        outcomes = spec.get("outcomes", list(range(len(mats))))
        inst = _try(checks, f"instrument {name!r}", lambda: MInstrument(outcomes, mats, name, tol))
        if inst is not FAILED:
            insts.append(inst)
    contexts = {}
    for name, v in tree.get("contexts", {}).items():
        mu = MeasureVector(support, np.real(parse_vector(v, f"contexts.{name}")))
        ok = mu.is_state()
        checks.append(Check(f"context {name!r} is a probability vector", ok, abs(mu.mass() - 1.0)))
        contexts[name] = mu
    if not all(c.passed for c in checks):
        return None
    model = _try(checks, "model assembly", lambda: MeasureModel(support, insts, contexts, tol))
    return None if model is FAILED else model


def validate_tree(tree: dict, tol: Tolerances | None = None):
    """Run every invariant check; returns ``(model or None, checks)``."""
    kind = _need(tree, "kind", "")
    if kind not in KINDS:
        raise ModelFileError("kind", f"unknown kind {kind!r}; expected one of {KINDS}")
    tol = tol or parse_tolerances(tree)
    checks: list[Check] = []
    if kind == "classical":
        model = _classical_checks(tree, tol, checks)
    elif kind == "measure_lsr":
        model = _lsr_checks(tree, tol, checks)
    else:
        if kind == "von_neumann" and tree.get("instruments"):
            raise ModelFileError("instruments", "von_neumann models take observables only; use kind 'instrument'")
        model = _quantum_checks(tree, tol, checks)
    return model, checks


def build_model(tree: dict, tol: Tolerances | None = None):
    """Parse and validate; raise :class:`InvariantError` on the first failed check."""
    model, checks = validate_tree(tree, tol)
    for c in checks:
        if not c.passed:
            raise InvariantError(c.name, c.residual, c.detail)
    return model


def load_model(path: str | Path, tol: Tolerances | None = None):
    return build_model(load_tree(path), tol)


# ---------------------------------------------------------------------------
# serialisation helpers for fixtures


def encode_complex(z: complex):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def encode_matrix(m) -> list:
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def encode_vector(v) -> list:
    return [encode_complex(z) for z in np.asarray(v).reshape(-1)]
