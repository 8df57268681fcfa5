"""Quantum instruments, POVMs and the checks that tie them together.

Superoperators act on column-stacked operators: ``vec(X rho Y) =
(Y^T ⊗ X) vec(rho)``.  The adjoint of a superoperator with respect to the
trace inner product ``<A|B> = Tr(A^dagger B)`` is therefore its conjugate
transpose, and the effect of outcome ``x`` is ``unvec(S(x)^dagger vec(I))``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .. import linalg
from ..errors import DomainError, InputError, InvariantError, ShapeError
from ..tolerances import DEFAULT, Tolerances
from .states import DensityMatrix, HermitianObservable, _rho, random_density

KINDS = ("projection", "atomic", "measure_and_prepare", "general")


@dataclass(frozen=True)
class Povm:
    """Effects ``A(x) >= 0`` summing to the identity."""

    outcomes: tuple
    effects: tuple

    def __post_init__(self):
        if len(self.outcomes) != len(self.effects):
            raise InputError("one effect per outcome required")

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def effect(self, x) -> np.ndarray:
        return self.effects[self.outcomes.index(x)]

    def subset(self, xs: Sequence) -> np.ndarray:
        """``A(Δ) = sum_{x in Δ} A(x)``."""
        return sum((self.effect(x) for x in xs), np.zeros((self.dim, self.dim), dtype=complex))

    def prob(self, rho, x) -> float:
        return float(np.real(np.trace(self.effect(x) @ _rho(rho))))

    def validate(self, tol: Tolerances = DEFAULT) -> None:
        for x, e in zip(self.outcomes, self.effects):
            h = linalg.hermitian_residual(e)
            if h > tol.instrument:
                raise InvariantError("effect hermitian", h, f"outcome {x!r}")
            if not linalg.psd_check(0.5 * (e + e.conj().T), tol):
                raise InvariantError("effect psd", -linalg.min_eigenvalue(0.5 * (e + e.conj().T)), f"outcome {x!r}")
        resid = float(np.max(np.abs(sum(self.effects) - np.eye(self.dim))))
        if resid > tol.instrument:
            raise InvariantError("effects sum to I", resid)

    def is_projective(self, tol: float = 1e-9) -> bool:
        return all(np.max(np.abs(e @ e - e)) <= tol for e in self.effects)


def _kraus_superop(ks: Sequence[np.ndarray]) -> np.ndarray:
    return sum(np.kron(k.conj(), k) for k in ks)


@dataclass
class Instrument:
    """Outcome-indexed family of superoperators.

    ``kind`` selects how ``data`` is read:

    * ``projection``: ``{"projectors": [E(x) ...]}``
    * ``atomic``: ``{"kraus": [V(x) or [V_1(x), ...] ...]}``
    * ``measure_and_prepare``: ``{"effects": [A(x) ...], "states": [phi_x ...]}``
      (states as vectors or density matrices)
    * ``general``: ``{"superops": [S(x) ...]}``, each ``dim^2 x dim^2``

    Outcomes default to ``(1, -1)`` for two outcomes and ``(0, 1, ...)``
    otherwise.
    """

    kind: str
    data: dict
    outcomes: tuple = None
    observable: str | None = None
    name: str | None = None
    _superops: tuple = field(default=None, init=False, repr=False)
    _kraus: tuple | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown instrument kind {self.kind!r}")
        if self.kind == "projection":
            parts = [[linalg.cmatrix(p)] for p in self.data["projectors"]]
        elif self.kind == "atomic":
            parts = []
            for k in self.data["kraus"]:
                arr = np.asarray(k, dtype=complex)
                parts.append([linalg.cmatrix(m) for m in arr] if arr.ndim == 3 else [linalg.cmatrix(arr)])
        else:
            parts = None
        self._kraus = tuple(tuple(p) for p in parts) if parts is not None else None
        n = self.n_outcomes
        if self.outcomes is None:
            self.outcomes = (1, -1) if n == 2 else tuple(range(n))
        self.outcomes = tuple(self.outcomes)
        if len(self.outcomes) != n or len(set(self.outcomes)) != n:
            raise InputError(f"need {n} distinct outcome labels, got {self.outcomes}")
        if self.kind == "measure_and_prepare":
            effects = [linalg.cmatrix(e) for e in self.data["effects"]]
            states = []
            for s in self.data["states"]:
                arr = np.asarray(s, dtype=complex)
                states.append(linalg.projector(arr) if arr.ndim == 1 else linalg.cmatrix(arr))
            if len(states) != len(effects):
                raise InputError("one prepared state per effect required")
            self.data = {"effects": effects, "states": states}
        if self.kind == "general":
            self.data = {"superops": [linalg.cmatrix(s) for s in self.data["superops"]]}
            d2 = self.data["superops"][0].shape[0]
            d = int(round(np.sqrt(d2)))
            if d * d != d2 or any(s.shape != (d2, d2) for s in self.data["superops"]):
                raise ShapeError("general superoperators must all be dim^2 x dim^2")

    @property
    def n_outcomes(self) -> int:
        key = {"projection": "projectors", "atomic": "kraus",
               "measure_and_prepare": "effects", "general": "superops"}[self.kind]
        return len(self.data[key])

    @property
    def dim(self) -> int:
        if self._kraus is not None:
            return self._kraus[0][0].shape[0]
        if self.kind == "measure_and_prepare":
            return self.data["effects"][0].shape[0]
        return int(round(np.sqrt(self.data["superops"][0].shape[0])))

    def index(self, x) -> int:
        try:
            return self.outcomes.index(x)
        except ValueError:
            raise KeyError(x) from None

    def kraus(self, x) -> tuple | None:
        return None if self._kraus is None else self._kraus[self.index(x)]

    def superop(self, x) -> np.ndarray:
        if self._superops is None:
            d = self.dim
            if self._kraus is not None:
                ops = [_kraus_superop(ks) for ks in self._kraus]
            elif self.kind == "measure_and_prepare":
                ops = [np.outer(linalg.vec(s), linalg.vec(e).conj())
                       for e, s in zip(self.data["effects"], self.data["states"])]
            else:
                ops = list(self.data["superops"])
            if any(o.shape != (d * d, d * d) for o in ops):
                raise ShapeError("superoperator shape mismatch")
            self._superops = tuple(ops)
        return self._superops[self.index(x)]

    def apply(self, x, rho) -> np.ndarray:
        """The subnormalised post-measurement operator ``I(x) rho``."""
        r = _rho(rho)
        i = self.index(x)
        if self._kraus is not None:
            return sum(k @ r @ k.conj().T for k in self._kraus[i])
        if self.kind == "measure_and_prepare":
            p = np.trace(self.data["effects"][i] @ r)
            return p * self.data["states"][i]
        return linalg.unvec(self.superop(x) @ linalg.vec(r), self.dim)

    def total_superop(self) -> np.ndarray:
        return sum(self.superop(x) for x in self.outcomes)

    def validate(self, tol: Tolerances = DEFAULT, seed: int = 0, samples: int = 50) -> None:
        """Check the kind-specific invariants; raise :class:`InvariantError`."""
        d = self.dim
        eye = np.eye(d)
        if self.kind == "projection":
            projs = [ks[0] for ks in self._kraus]
            for a, p in enumerate(projs):
                r = max(linalg.hermitian_residual(p), float(np.max(np.abs(p @ p - p))))
                if r > tol.instrument:
                    raise InvariantError("projector", r, f"outcome {self.outcomes[a]!r}")
                for b in range(a + 1, len(projs)):
                    r = float(np.max(np.abs(p @ projs[b])))
                    if r > tol.instrument:
                        raise InvariantError("orthogonal projectors", r)
            r = float(np.max(np.abs(sum(projs) - eye)))
            if r > tol.instrument:
                raise InvariantError("projectors sum to I", r)
        elif self.kind == "atomic":
            total = sum(k.conj().T @ k for ks in self._kraus for k in ks)
            r = float(np.max(np.abs(total - eye)))
            if r > tol.instrument:
                raise InvariantError("sum V^dagger V = I", r)
        elif self.kind == "measure_and_prepare":
            Povm(self.outcomes, tuple(self.data["effects"])).validate(tol)
            for x, s in zip(self.outcomes, self.data["states"]):
                try:
                    DensityMatrix(s, tol)
                except InvariantError as exc:
                    raise InvariantError(f"prepared state {x!r}: {exc.invariant}", exc.residual) from None
        else:
            rng = np.random.default_rng(seed)
            for _ in range(samples):
                rho = random_density(d, rng, rank=int(rng.integers(1, d + 1)))
                for x in self.outcomes:
                    out = self.apply(x, rho)
                    h = linalg.hermitian_residual(out)
                    if h > tol.instrument:
                        raise InvariantError("maps PSD to Hermitian", h, f"outcome {x!r}")
                    low = linalg.min_eigenvalue(0.5 * (out + out.conj().T), tol.override(hermitian=1.0))
                    if low < -tol.instrument:
                        raise InvariantError("positive on PSD inputs", -low, f"outcome {x!r}")
        unit = linalg.unvec(self.total_superop().conj().T @ linalg.vec(eye), d)
        r = float(np.max(np.abs(unit - eye)))
        if r > tol.instrument:
            raise InvariantError("trace preserving", r)


@dataclass(frozen=True)
class InstrumentResult:
    subnormalized: np.ndarray
    prob: float
    updated: DensityMatrix | None


def instrument_apply(inst: Instrument, x, rho, tol: Tolerances = DEFAULT) -> InstrumentResult:
    """Probability ``Tr(I(x) rho)`` and the normalised update when it is defined."""
    sub = inst.apply(x, rho)
    p = float(np.real(np.trace(sub)))
    if p <= tol.cond:
        return InstrumentResult(sub, max(p, 0.0), None)
    upd = sub / p
    return InstrumentResult(sub, min(1.0, p), DensityMatrix.trusted(0.5 * (upd + upd.conj().T)))


def luders_instrument(a: HermitianObservable) -> Instrument:
    """Projection instrument ``rho -> E(x) rho E(x)`` from the spectral family."""
    return Instrument("projection", {"projectors": list(a.projectors)}, outcomes=a.outcomes,
                      observable=a.name, name=a.name)


def povm_from_instrument(inst: Instrument, tol: Tolerances = DEFAULT) -> Povm:
    """Effects ``A(x) = I(x)^* (identity)``; raises if they do not form a POVM."""
    d = inst.dim
    one = linalg.vec(np.eye(d, dtype=complex))
    effects = []
    for x in inst.outcomes:
        e = linalg.unvec(inst.superop(x).conj().T @ one, d)
        effects.append(0.5 * (e + e.conj().T) if linalg.hermitian_residual(e) <= tol.instrument else e)
    povm = Povm(inst.outcomes, tuple(effects))
    try:
        povm.validate(tol)
    except (InvariantError, DomainError) as exc:
        raise InvariantError("instrument normalisation", getattr(exc, "residual", None), str(exc)) from None
    return povm


@dataclass(frozen=True)
class JointPovm:
    """Outcome of :func:`povm_compat_verify`.

    When ``compatible`` is true, :meth:`jpd` gives ``Tr(C(x, y) rho)``.
    """

    compatible: bool
    table: np.ndarray
    outcomes_a: tuple
    outcomes_b: tuple
    residual: float
    reason: str = ""

    def jpd(self, rho) -> dict:
        if not self.compatible:
            raise DomainError("the joint effect table is not a valid joint POVM")
        r = _rho(rho)
        return {
            (x, y): float(np.real(np.trace(self.table[i, j] @ r)))
            for i, x in enumerate(self.outcomes_a)
            for j, y in enumerate(self.outcomes_b)
        }


def povm_compat_verify(a: Povm, b: Povm, table, tol: Tolerances = DEFAULT) -> JointPovm:
    """Check that ``table[x][y]`` is a PSD joint POVM with marginals ``a`` and ``b``."""
    t = np.asarray(table, dtype=complex)
    if t.shape[:2] != (len(a.outcomes), len(b.outcomes)) or t.shape[2:] != (a.dim, a.dim):
        raise InputError(
            f"joint table shape {t.shape} does not match {len(a.outcomes)}x{len(b.outcomes)}x{a.dim}x{a.dim}"
        )
    for i in range(t.shape[0]):
        for j in range(t.shape[1]):
            c = t[i, j]
            h = linalg.hermitian_residual(c)
            if h > tol.instrument:
                return JointPovm(False, t, a.outcomes, b.outcomes, h, f"C{(a.outcomes[i], b.outcomes[j])} not Hermitian")
            low = linalg.min_eigenvalue(0.5 * (c + c.conj().T), tol.override(hermitian=1.0))
            if low < -tol.psd:
                return JointPovm(False, t, a.outcomes, b.outcomes, -low, f"C{(a.outcomes[i], b.outcomes[j])} not PSD")
    ra = max(float(np.max(np.abs(t[i].sum(axis=0) - e))) for i, e in enumerate(a.effects))
    rb = max(float(np.max(np.abs(t[:, j].sum(axis=0) - e))) for j, e in enumerate(b.effects))
    resid = max(ra, rb)
    ok = resid <= tol.instrument
    return JointPovm(ok, t, a.outcomes, b.outcomes, resid, "" if ok else "marginals mismatch")


def product_table(a: Povm, b: Povm) -> np.ndarray:
    """``C(x, y) = A(x) B(y)``, the joint table of commuting PVMs."""
    return np.array([[ea @ eb for eb in b.effects] for ea in a.effects])


def choi_matrix(superop: np.ndarray, dim: int) -> np.ndarray:
    """``sum_ij |i><j| ⊗ S(|i><j|)``."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[i, j] = 1.0
            out += np.kron(e, linalg.unvec(superop @ linalg.vec(e), dim))
    return out


def cp_check(inst: Instrument, tol: Tolerances = DEFAULT) -> dict:
    """Complete positivity per outcome.

    Kraus-form and measure-and-prepare instruments are CP by construction;
    general instruments are tested through the Choi matrix.
    """
    if inst.kind != "general":
        return {x: True for x in inst.outcomes}
    if inst.dim > 8:
        raise ShapeError("Choi test supports dimension <= 8")
    out = {}
    for x in inst.outcomes:
        c = choi_matrix(inst.superop(x), inst.dim)
        if linalg.hermitian_residual(c) > tol.instrument:
            out[x] = False
            continue
        out[x] = linalg.min_eigenvalue(0.5 * (c + c.conj().T), tol.override(hermitian=1.0)) >= -tol.instrument
    return out


def transpose_superop(dim: int) -> np.ndarray:
    """Superoperator of ``rho -> rho^T`` (positive but not completely positive)."""
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            # vec index of (i, j) under column stacking is i + j*dim
            s[j + i * dim, i + j * dim] = 1.0
    return s


def jpd_product(a: HermitianObservable | Povm, b: HermitianObservable | Povm, rho) -> dict:
    """Joint distribution ``Tr(E_A(x) E_B(y) rho)`` of compatible PVMs."""
    ea = a.projectors if isinstance(a, HermitianObservable) else a.effects
    eb = b.projectors if isinstance(b, HermitianObservable) else b.effects
    r = _rho(rho)
    return {
        (x, y): float(np.real(np.trace(p @ q @ r)))
        for x, p in zip(a.outcomes, ea)
        for y, q in zip(b.outcomes, eb)
    }


def jpd_sequential(ia: Instrument, ib: Instrument, rho) -> dict:
    """``Tr(I_B(y) I_A(x) rho)``: the conditional joint distribution of two instruments."""
    return {
        (x, y): float(np.real(np.trace(ib.apply(y, ia.apply(x, rho)))))
        for x in ia.outcomes
        for y in ib.outcomes
    }


def measure_and_prepare(effects: Sequence, states: Sequence, outcomes=None, name=None, observable=None) -> Instrument:
    return Instrument("measure_and_prepare", {"effects": list(effects), "states": list(states)},
                      outcomes=outcomes, name=name, observable=observable)


def atomic(kraus: Sequence, outcomes=None, name=None, observable=None) -> Instrument:
    return Instrument("atomic", {"kraus": list(kraus)}, outcomes=outcomes, name=name, observable=observable)


def general(superops: Sequence, outcomes=None, name=None, observable=None) -> Instrument:
    return Instrument("general", {"superops": list(superops)}, outcomes=outcomes, name=name, observable=observable)


def instrument_from_mapping(spec: Mapping) -> Instrument:
    return Instrument(spec["kind"], dict(spec["data"]), outcomes=spec.get("outcomes"),
                      observable=spec.get("observable"), name=spec.get("name"))
