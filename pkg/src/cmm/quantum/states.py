"""Density matrices, von Neumann observables and the Lüders rule."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .. import linalg
from ..errors import ConditioningError, InvariantError, ModelLookupError, ShapeError
from ..tolerances import DEFAULT, Tolerances

MAX_DIM = 16


def _snap(x: float) -> float:
    """Round eigenvalues that are float noise away from a short decimal."""
    r = round(x, 10)
    return r + 0.0 if abs(x - r) <= 1e-11 else x


class DensityMatrix:
    """A quantum state: Hermitian, unit trace, positive semidefinite.

    Construct from a matrix, or from an amplitude vector with
    :meth:`from_vector`.  Pure states built from vectors keep the vector in
    ``self.vector``.
    """

    __slots__ = ("matrix", "vector")

    def __init__(self, matrix, tol: Tolerances = DEFAULT, validate: bool = True):
        m = linalg.cmatrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise ShapeError(f"density matrix must be square, got {m.shape}")
        if m.shape[0] > MAX_DIM:
            raise ShapeError(f"dimension {m.shape[0]} exceeds {MAX_DIM}")
        if validate:
            check_density(m, tol)
        self.matrix = m
        self.vector = None

    @classmethod
    def from_vector(cls, psi, tol: Tolerances = DEFAULT) -> "DensityMatrix":
        v = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InvariantError("nonzero state vector")
        v = v / norm
        out = cls(np.outer(v, v.conj()), tol)
        out.vector = v
        return out

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityMatrix":
        return cls(np.eye(dim, dtype=complex) / dim)

    @classmethod
    def trusted(cls, matrix: np.ndarray) -> "DensityMatrix":
        """Wrap a matrix already known to be a state (no validation)."""
        out = cls.__new__(cls)
        out.matrix = matrix
        out.vector = None
        return out

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def check_density(m: np.ndarray, tol: Tolerances = DEFAULT) -> None:
    """Raise :class:`InvariantError` naming the first violated state invariant."""
    herm = linalg.hermitian_residual(m)
    if herm > tol.state:
        raise InvariantError("hermitian", herm)
    tr = abs(np.trace(m) - 1.0)
    if tr > tol.state:
        raise InvariantError("trace=1", float(tr))
    low = linalg.min_eigenvalue(m, tol.override(hermitian=max(tol.hermitian, tol.state)))
    if low < -tol.psd:
        raise InvariantError("psd", -low)


def random_pure_state(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Haar-random pure state."""
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return DensityMatrix.from_vector(v)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Random mixed state ``G G^dagger / Tr`` with ``G`` Ginibre of the given rank."""
    k = dim if rank is None else rank
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


class HermitianObservable:
    """A von Neumann observable with its clustered spectral family.

    ``outcomes`` are the distinct eigenvalues (descending) and ``projectors``
    the matching eigenspace projectors.
    """

    def __init__(self, name: str, matrix, tol: Tolerances = DEFAULT, spectral=None):
        self.name = name
        self.matrix = linalg.cmatrix(matrix)
        if self.matrix.shape[0] > MAX_DIM:
            raise ShapeError(f"dimension {self.matrix.shape[0]} exceeds {MAX_DIM}")
        self.tol = tol
        if spectral is None:
            spectral = linalg.hermitian_eig(self.matrix, tol=tol)
            spectral = linalg.SpectralDecomposition(
                np.array([_snap(x) for x in spectral.eigenvalues]), spectral.projectors
            )
        self.spectral = spectral
        resid = float(np.max(np.abs(spectral.reconstruct() - self.matrix)))
        if resid > 1e-9:
            raise InvariantError("spectral reconstruction", resid)

    @classmethod
    def from_projectors(cls, name: str, outcomes: Sequence[float], projectors: Sequence, tol: Tolerances = DEFAULT):
        projs = tuple(linalg.cmatrix(p) for p in projectors)
        order = np.argsort(-np.asarray(outcomes, dtype=float), kind="stable")
        vals = np.asarray(outcomes, dtype=float)[order]
        projs = tuple(projs[i] for i in order)
        matrix = sum(x * p for x, p in zip(vals, projs))
        return cls(name, matrix, tol, spectral=linalg.SpectralDecomposition(vals, projs))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def outcomes(self) -> tuple[float, ...]:
        return tuple(float(x) for x in self.spectral.eigenvalues)

    @property
    def projectors(self) -> tuple[np.ndarray, ...]:
        return self.spectral.projectors

    def projector(self, x: float) -> np.ndarray:
        try:
            return self.spectral.projectors[self.spectral.index_of(x, self.tol.cluster)]
        except KeyError:
            raise ModelLookupError(f"{x!r} is not an eigenvalue of {self.name!r}") from None

    def __repr__(self) -> str:
        return f"HermitianObservable({self.name!r}, outcomes={self.outcomes})"


def _rho(state) -> np.ndarray:
    return state.matrix if isinstance(state, DensityMatrix) else np.asarray(state, dtype=complex)


def born_prob(rho, a: HermitianObservable, x: float) -> float:
    """``Tr(E_A(x) rho)`` clamped to ``[0, 1]``."""
    p = float(np.real(np.trace(a.projector(x) @ _rho(rho))))
    if p < -1e-10 or p > 1 + 1e-10:
        raise InvariantError("born probability in [0, 1]", max(-p, p - 1))
    return min(1.0, max(0.0, p))


def luders_update(rho, a: HermitianObservable, x: float, tol: Tolerances = DEFAULT) -> DensityMatrix:
    """``E rho E / Tr(E rho E)`` for the eigenprojector ``E`` of outcome ``x``."""
    p = born_prob(rho, a, x)
    if p <= tol.cond:
        raise ConditioningError("rho", a.name, x, p)
    e = a.projector(x)
    out = e @ _rho(rho) @ e
    out = out / np.trace(out).real
    return DensityMatrix.trusted(0.5 * (out + out.conj().T))


def function_of_observable(a: HermitianObservable, f: Callable[[float], float], name: str | None = None) -> HermitianObservable:
    """``f(A) = sum_x f(x) E_A(x)`` with projectors merged where ``f`` collides."""
    merged: dict[float, np.ndarray] = {}
    for x, p in zip(a.outcomes, a.projectors):
        fx = _snap(float(f(x)))
        key = next((k for k in merged if abs(k - fx) <= a.tol.cluster * max(1.0, abs(fx))), None)
        if key is None:
            merged[fx] = p.copy()
        else:
            merged[key] = merged[key] + p
    return HermitianObservable.from_projectors(
        name or f"f({a.name})", list(merged), list(merged.values()), a.tol
    )


def pushforward_check(a: HermitianObservable, fa: HermitianObservable, f, rho) -> float:
    """Max deviation of ``P^{f(A)}(y)`` from ``P^A(f^{-1}(y))`` on one state."""
    worst = 0.0
    for y in fa.outcomes:
        pre = sum(born_prob(rho, a, x) for x in a.outcomes if abs(f(x) - y) <= 1e-9 * max(1.0, abs(y)))
        worst = max(worst, abs(born_prob(rho, fa, y) - pre))
    return worst
