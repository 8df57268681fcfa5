"""Quantum contextual models: von Neumann observables and instruments."""

from __future__ import annotations

from dataclasses import replace
from typing import Iterable, Mapping

import numpy as np

from .. import core, linalg
from ..core import ContextualInstrument, ContextualModel, InterferenceDatum
from ..errors import ConditioningError, InputError, InvariantError, ModelLookupError
from ..tolerances import DEFAULT, Tolerances
from .instruments import Instrument, Povm, instrument_apply, povm_from_instrument
from .states import DensityMatrix, HermitianObservable, _rho, luders_update, random_pure_state

N_HAAR = 20


def _as_state(s) -> DensityMatrix:
    if isinstance(s, DensityMatrix):
        return s
    arr = np.asarray(s, dtype=complex)
    return DensityMatrix.from_vector(arr) if arr.ndim == 1 else DensityMatrix(arr)


class QuantumModel(ContextualModel):
    """Contexts are density matrices; observables carry Lüders instruments.

    Parameters
    ----------
    observables
        Hermitian observables (each gets a Lüders instrument of the same name).
    states
        Named contexts, as :class:`DensityMatrix`, amplitude vectors or matrices.
    instruments
        Extra instruments.  An instrument whose ``observable`` names a
        Hermitian observable must reproduce its spectral family as POVM;
        otherwise its POVM defines a new observable.
    """

    def __init__(
        self,
        observables: Iterable[HermitianObservable] = (),
        states: Mapping[str, object] | None = None,
        instruments: Iterable[Instrument] = (),
        tol: Tolerances = DEFAULT,
    ):
        self.tol = tol
        self._obs: dict[str, HermitianObservable | Povm] = {}
        self._insts: dict[str, list[ContextualInstrument]] = {}
        self._raw: dict[str, Instrument | HermitianObservable] = {}
        self.dim = None
        for a in observables:
            self._set_dim(a.dim)
            if a.name in self._obs:
                raise InputError(f"duplicate observable {a.name!r}")
            self._obs[a.name] = a
            self._add(a.name, a.name, lambda rho, x, a=a: luders_update(rho, a, x, self.tol), "luders", a)
        for k, inst in enumerate(instruments):
            self.add_instrument(inst, k)
        self._states = {name: _as_state(s) for name, s in (states or {}).items()}
        for s in self._states.values():
            self._set_dim(s.dim)
        self.kind = "von_neumann" if all(
            i.kind == "luders" for insts in self._insts.values() for i in insts
        ) else "instrument"

    def _set_dim(self, d: int) -> None:
        if self.dim is None:
            self.dim = d
        elif d != self.dim:
            raise InputError(f"dimension mismatch: {d} vs {self.dim}")

    def _add(self, obs, name, update, kind, raw) -> None:
        if name in self._raw:
            raise InputError(f"duplicate instrument name {name!r}")
        self._insts.setdefault(obs, []).append(ContextualInstrument(obs, name, update, kind))
        self._raw[name] = raw

    def add_instrument(self, inst: Instrument, index: int = 0) -> None:
        inst.validate(self.tol)
        self._set_dim(inst.dim)
        povm = povm_from_instrument(inst, self.tol)
        obs = inst.observable or inst.name or f"I{index}"
        name = inst.name or f"{obs}:{inst.kind}"
        existing = self._obs.get(obs)
        if existing is None:
            self._obs[obs] = povm
        else:
            ref = existing.projectors if isinstance(existing, HermitianObservable) else existing.effects
            for x, e in zip(povm.outcomes, povm.effects):
                try:
                    i = _outcome_index(existing.outcomes, x)
                except KeyError:
                    raise InvariantError("instrument outcome is an outcome of its observable", None,
                                         f"{x!r} not in {existing.outcomes}") from None
                r = float(np.max(np.abs(e - ref[i])))
                if r > self.tol.instrument:
                    raise InvariantError("instrument POVM matches its observable", r, f"outcome {x!r}")

        def update(rho, x, inst=inst):
            res = instrument_apply(inst, x, rho, self.tol)
            if res.updated is None:
                raise ConditioningError("rho", obs, x, res.prob)
            return res.updated

        self._add(obs, name, update, inst.kind, inst)

    # -- ContextualModel interface -------------------------------------------

    def observables(self) -> list[str]:
        return list(self._obs)

    def observable(self, name: str) -> HermitianObservable | Povm:
        try:
            return self._obs[name]
        except KeyError:
            raise ModelLookupError(f"unknown observable {name!r}") from None

    def outcomes(self, observable: str) -> tuple:
        return tuple(self.observable(observable).outcomes)

    def distribution(self, context, observable: str) -> dict:
        a = self.observable(observable)
        r = _rho(self.context(context))
        effects = a.projectors if isinstance(a, HermitianObservable) else a.effects
        out = {}
        for x, e in zip(a.outcomes, effects):
            p = float(np.real(np.trace(e @ r)))
            if p < -1e-10 or p > 1 + 1e-10:
                raise InvariantError("probability in [0, 1]", max(-p, p - 1), f"{observable}={x!r}")
            out[x] = min(1.0, max(0.0, p))
        return out

    def instruments(self, observable: str | None = None) -> list[ContextualInstrument]:
        if observable is None:
            return [i for insts in self._insts.values() for i in insts]
        if observable not in self._obs:
            raise ModelLookupError(f"unknown observable {observable!r}")
        return list(self._insts.get(observable, []))

    def raw_instrument(self, name: str) -> Instrument | HermitianObservable:
        """The backing :class:`Instrument` (or observable, for Lüders)."""
        return self._raw[name]

    def contexts(self) -> dict[str, DensityMatrix]:
        return dict(self._states)

    def context(self, c):
        if isinstance(c, str):
            return super().context(c)
        return _as_state(c)

    def add_context(self, name: str, state) -> DensityMatrix:
        s = _as_state(state)
        self._set_dim(s.dim)
        self._states[name] = s
        return s

    def default_contexts(self, seed: int | None = None) -> dict[str, DensityMatrix]:
        """Named states, 20 Haar-random pure states and ``I/d``."""
        rng = np.random.default_rng(0 if seed is None else seed)
        out = dict(self._states)
        for k in range(N_HAAR):
            out[f"haar{k}"] = random_pure_state(self.dim, rng)
        out["mixed"] = DensityMatrix.maximally_mixed(self.dim)
        return out

    def chsh_maximizer(self):
        if self.dim != 4:
            return None
        from .search import chsh_maximize

        def run(seed: int = 0, restarts: int = 4):
            res = chsh_maximize(4, seed=seed, restarts=restarts)
            return res.value, {"source": "chsh_maximize", "seed": seed, **res.witness_summary()}

        return run


def _outcome_index(outcomes, x, tol: float = 1e-9) -> int:
    for i, o in enumerate(outcomes):
        if o == x or (isinstance(o, float) and isinstance(x, (int, float)) and abs(o - x) <= tol):
            return i
    raise KeyError(x)


def vn_model(observables: Iterable[HermitianObservable], states: Mapping[str, object] | None = None,
             tol: Tolerances = DEFAULT) -> QuantumModel:
    return QuantumModel(observables, states, (), tol)


def quantum_interference(state, a: HermitianObservable, b: HermitianObservable, y,
                         tol: Tolerances = DEFAULT) -> InterferenceDatum:
    """Interference term of ``B=y`` given ``A`` under Lüders updates.

    The value is computed through the generic contextual calculus.  For pure
    states it is also computed from the cross terms
    ``sum_{x != x'} <psi|E_A(x) E_B(y) E_A(x')|psi>`` and stored in
    ``delta_crossterm``.
    """
    s = _as_state(state)
    m = QuantumModel([a, b] if a.name != b.name else [a], {"state": s}, tol=tol)
    datum = core.ftp_interference(m, "state", a.name, b.name, y)
    psi = s.vector
    if psi is None:
        vals, vecs = linalg.jacobi_eigh(s.matrix)
        if vals[0] > 1 - 1e-10:
            psi = vecs[:, 0]
    if psi is None:
        return datum
    eb = b.projector(y)
    cross = 0.0
    for i, p in enumerate(a.projectors):
        for j, q in enumerate(a.projectors):
            if i != j:
                cross += float(np.real(psi.conj() @ p @ eb @ q @ psi))
    return replace(datum, delta_crossterm=cross)
