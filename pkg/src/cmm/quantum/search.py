"""Numerical searches: CHSH maximisation and OE+RRE instrument pairs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import core, linalg
from ..errors import InputError
from ..tolerances import DEFAULT, Tolerances
from .instruments import Instrument, atomic, measure_and_prepare
from .model import QuantumModel
from .states import DensityMatrix, HermitianObservable, random_density, random_pure_state, random_unitary

PAULI = np.array([linalg.SX, linalg.SY, linalg.SZ])
TSIRELSON = 2.0 * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# CHSH


def bloch(theta: float, phi: float) -> np.ndarray:
    return np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])


def spin(n: np.ndarray) -> np.ndarray:
    """``n . sigma`` for a unit vector ``n``."""
    return np.tensordot(n, PAULI, axes=1)


def correlation_tensor(psi: np.ndarray) -> np.ndarray:
    """``T_kl = <psi| sigma_k ⊗ sigma_l |psi>`` for a two-qubit vector."""
    m = psi.reshape(2, 2)
    # <psi|s_k ⊗ s_l|psi> = Tr(M^dagger s_k M s_l^T)
    return np.real(np.einsum("ai,kab,bj,lij->kl", m.conj(), PAULI, m, PAULI))


def _state(params: np.ndarray, separable: bool) -> np.ndarray:
    if separable:
        u = np.array([math.cos(params[0] / 2), np.exp(1j * params[1]) * math.sin(params[0] / 2)])
        v = np.array([math.cos(params[2] / 2), np.exp(1j * params[3]) * math.sin(params[2] / 2)])
        return np.kron(u, v)
    psi = params[:4] + 1j * params[4:8]
    return psi / np.linalg.norm(psi)


def _chsh(params: np.ndarray, separable: bool) -> float:
    a1, a2, b1, b2 = (bloch(params[2 * k], params[2 * k + 1]) for k in range(4))
    t = correlation_tensor(_state(params[8:], separable))
    return abs(a1 @ t @ (b1 + b2) + a2 @ t @ (b1 - b2))


@dataclass
class CHSHResult:
    """Best CHSH value found, with the observables and state achieving it."""

    value: float
    state: np.ndarray
    directions: dict[str, np.ndarray]
    separable: bool
    history: list[float] = field(default_factory=list)

    def observables(self) -> list[HermitianObservable]:
        i2 = linalg.I2
        d = self.directions
        return [
            HermitianObservable("A1", np.kron(spin(d["A1"]), i2)),
            HermitianObservable("A2", np.kron(spin(d["A2"]), i2)),
            HermitianObservable("B1", np.kron(i2, spin(d["B1"]))),
            HermitianObservable("B2", np.kron(i2, spin(d["B2"]))),
        ]

    def as_model(self, tol: Tolerances = DEFAULT) -> QuantumModel:
        """The witness as a model with context ``"psi"`` and observables A1, A2, B1, B2."""
        return QuantumModel(self.observables(), {"psi": self.state}, tol=tol)

    def verify(self) -> float:
        """CHSH value recomputed by the generic calculus on :meth:`as_model`."""
        return core.chsh_value(self.as_model(), "psi", ["A1", "A2"], ["B1", "B2"])

    def witness_summary(self) -> dict:
        return {
            "value": float(self.value),
            "separable": self.separable,
            "state": [[float(z.real), float(z.imag)] for z in self.state],
            **{k: [float(c) for c in v] for k, v in self.directions.items()},
        }


def _ascend(f, x: np.ndarray, step: float = 0.5, min_step: float = 1e-7, max_sweeps: int = 400):
    """Cyclic coordinate ascent with step halving."""
    best = f(x)
    for _ in range(max_sweeps):
        start = best
        for i in range(x.size):
            for s in (step, -step):
                x[i] += s
                v = f(x)
                if v > best:
                    best = v
                    break
                x[i] -= s
        # creeping along a ridge counts as stalled
        if best - start <= 1e-10:
            step *= 0.5
            if step < min_step:
                break
    return best, x


def chsh_maximize(dim: int = 4, seed: int = 0, restarts: int = 8, separable: bool = False) -> CHSHResult:
    """Maximise ``|<A1B1> + <A2B1> + <A1B2> - <A2B2>|`` over two qubits.

    ``A_i`` act on the first qubit and ``B_j`` on the second, so every
    ``(A_i, B_j)`` pair commutes.  Each restart draws random Bloch angles and
    a random pure state (a product state when ``separable``) from
    ``default_rng(seed)`` and refines them by coordinate ascent.
    """
    if dim != 4:
        raise InputError("chsh_maximize searches two qubits (dim=4) only")
    rng = np.random.default_rng(seed)
    n_state = 4 if separable else 8
    best_v, best_x, history = -1.0, None, []
    for _ in range(max(1, restarts)):
        x = np.concatenate([rng.uniform(0, 2 * math.pi, 8),
                            rng.uniform(0, 2 * math.pi, 4) if separable else rng.normal(size=8)])
        v, x = _ascend(lambda p: _chsh(p, separable), x)
        history.append(v)
        if v > best_v:
            best_v, best_x = v, x.copy()
    names = ("A1", "A2", "B1", "B2")
    dirs = {n: bloch(best_x[2 * k], best_x[2 * k + 1]) for k, n in enumerate(names)}
    return CHSHResult(float(best_v), _state(best_x[8:8 + n_state], separable), dirs, separable, history)


def singlet_witness() -> CHSHResult:
    """The textbook optimum: singlet state with ``z, x`` versus ``(z ± x)/sqrt 2``."""
    psi = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    z, xx = np.array([0, 0, 1.0]), np.array([1.0, 0, 0])
    dirs = {"A1": z, "A2": xx, "B1": (z + xx) / math.sqrt(2), "B2": (z - xx) / math.sqrt(2)}
    t = correlation_tensor(psi)
    v = abs(z @ t @ (dirs["B1"] + dirs["B2"]) + xx @ t @ (dirs["B1"] - dirs["B2"]))
    return CHSHResult(float(v), psi, dirs, False)


# ---------------------------------------------------------------------------
# OE + RRE


FAMILIES = ("mixed", "luders", "diagonal", "atomic", "measure_and_prepare")


@dataclass
class OERRESearch:
    found: bool
    instruments: tuple[Instrument, Instrument] | None
    context: DensityMatrix | None
    margins: dict
    tried: int

    def as_model(self, tol: Tolerances = DEFAULT) -> QuantumModel:
        if not self.found:
            raise InputError("no witness to package")
        return QuantumModel((), {"witness": self.context}, self.instruments, tol)


def _random_projector(basis: np.ndarray, rank: int, rng) -> np.ndarray:
    """Random rank-``rank`` projector inside the span of ``basis`` columns."""
    k = basis.shape[1]
    c = rng.normal(size=(k, rank)) + 1j * rng.normal(size=(k, rank))
    q, _ = np.linalg.qr(c)
    w = basis @ q
    return w @ w.conj().T


def _dichotomous_pvm(u: np.ndarray, rank: int) -> tuple[np.ndarray, np.ndarray]:
    d = u.shape[0]
    p = u[:, :rank] @ u[:, :rank].conj().T
    return p, np.eye(d) - p


def _candidate(family: str, dim: int, rng) -> tuple[Instrument, Instrument]:
    if family == "luders":
        pa = _dichotomous_pvm(random_unitary(dim, rng), max(1, dim // 2))
        pb = _dichotomous_pvm(random_unitary(dim, rng), max(1, dim // 2))
        return (Instrument("projection", {"projectors": list(pa)}, name="A", observable="A"),
                Instrument("projection", {"projectors": list(pb)}, name="B", observable="B"))
    if family == "diagonal":
        ka = rng.permutation(dim)[: max(1, dim // 2)]
        kb = rng.permutation(dim)[: max(1, dim // 2)]
        da = np.zeros(dim)
        da[ka] = 1
        db = np.zeros(dim)
        db[kb] = 1
        pa = (np.diag(da).astype(complex), np.diag(1 - da).astype(complex))
        pb = (np.diag(db).astype(complex), np.diag(1 - db).astype(complex))
        return (Instrument("projection", {"projectors": list(pa)}, name="A", observable="A"),
                Instrument("projection", {"projectors": list(pb)}, name="B", observable="B"))
    if family == "atomic":
        out = []
        for name in ("A", "B"):
            w = rng.uniform(0.05, 0.95, dim)
            u = random_unitary(dim, rng)
            s = u @ np.diag(np.sqrt(w)) @ u.conj().T
            sc = u @ np.diag(np.sqrt(1 - w)) @ u.conj().T
            out.append(atomic([random_unitary(dim, rng) @ s, random_unitary(dim, rng) @ sc],
                              name=name, observable=name))
        return tuple(out)
    if family == "measure_and_prepare":
        # Both instruments prepare the same pair of orthogonal states, each
        # lying in the matching effect of both observables; the effects
        # themselves differ on the orthogonal complement.
        u = random_unitary(dim, rng)
        plus, minus = u[:, 0], u[:, 1]
        rest = u[:, 2:]
        insts = []
        for name in ("A", "B"):
            extra = _random_projector(rest, max(1, rest.shape[1] // 2), rng) if rest.shape[1] else 0
            e_plus = np.outer(plus, plus.conj()) + extra
            insts.append(measure_and_prepare([e_plus, np.eye(dim) - e_plus], [plus, minus],
                                             name=name, observable=name))
        return tuple(insts)
    raise InputError(f"unknown search family {family!r}")


def _score(inst_a: Instrument, inst_b: Instrument, contexts: dict, tol: Tolerances):
    m = QuantumModel((), contexts, (inst_a, inst_b), tol)
    best = None
    for name in contexts:
        oe = core.order_effect(m, name, "A", "B")
        rre, _ = core.rre_residual(m, name, "A", "B")
        if best is None or (rre < 1e-9, oe.max_discrepancy) > (best[1] < 1e-9, best[0]):
            best = (oe.max_discrepancy, rre, name)
    return best


def search_oe_rre(dim: int = 4, seed: int = 0, budget: int = 200, family: str = "mixed",
                  tol: Tolerances = DEFAULT) -> OERRESearch:
    """Random search for an instrument pair showing OE together with RRE.

    ``family`` selects the candidate generator; ``"mixed"`` alternates
    atomic and measure-and-prepare pairs.  Each candidate is scored on ten
    seeded contexts (random pure and mixed states) through the generic
    ``order_effect`` and ``rre_residual``; a pair is accepted when some
    context gives an order-effect margin above ``1e-3`` with RRE residual
    below ``1e-9``.  Running out of ``budget`` returns ``found=False``.
    """
    if dim not in (2, 4):
        raise InputError("search_oe_rre supports dim 2 and 4")
    if family not in FAMILIES:
        raise InputError(f"unknown search family {family!r}")
    rng = np.random.default_rng(seed)
    contexts = {f"pure{k}": random_pure_state(dim, rng) for k in range(5)}
    contexts.update({f"mixed{k}": random_density(dim, rng) for k in range(5)})
    best_margins = {"oe_margin": 0.0, "rre_residual": math.inf}
    for k in range(budget):
        fam = family if family != "mixed" else ("atomic", "measure_and_prepare")[k % 2]
        ia, ib = _candidate(fam, dim, rng)
        oe, rre, cname = _score(ia, ib, contexts, tol)
        if rre < 1e-9 and oe > best_margins["oe_margin"]:
            best_margins = {"oe_margin": oe, "rre_residual": rre, "context": cname, "family": fam}
        if oe > 1e-3 and rre < 1e-9:
            return OERRESearch(True, (ia, ib), contexts[cname],
                               {"oe_margin": oe, "rre_residual": rre, "context": cname, "family": fam}, k + 1)
    return OERRESearch(False, None, None, best_margins, budget)
