"""Dense complex-matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; the helpers here
add shape checking and the Hermitian eigendecomposition used to build
spectral projectors.  The eigensolver is a cyclic complex Jacobi method,
which is robust for the small dimensions (``<= 64``) this package handles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ShapeError
from .tolerances import DEFAULT, Tolerances

MAX_DIM = 64


def cmatrix(data) -> np.ndarray:
    """Coerce ``data`` to a finite 2-D complex matrix."""
    m = np.array(data, dtype=complex)
    if m.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("matrix has non-finite entries")
    return m


def add(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ShapeError(f"cannot add {a.shape} and {b.shape}")
    return a + b


def multiply(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def scale(a, s: complex) -> np.ndarray:
    return complex(s) * np.asarray(a, dtype=complex)


def adjoint(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ShapeError(f"adjoint needs a 2-D matrix, got shape {a.shape}")
    return a.conj().T


def trace(a) -> complex:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError(f"trace needs a square matrix, got shape {a.shape}")
    return complex(np.trace(a))


def kron(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=complex), np.asarray(b, dtype=complex)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError("kron needs 2-D matrices")
    return np.kron(a, b)


def hermitian_residual(m) -> float:
    """``max |m - m^dagger|`` over all entries."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    return float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0


def is_hermitian(m, tol: Tolerances = DEFAULT) -> bool:
    m = np.asarray(m, dtype=complex)
    scale_ = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return hermitian_residual(m) <= tol.hermitian * scale_


def _require_hermitian(m, tol: Tolerances) -> np.ndarray:
    m = cmatrix(m)
    if m.shape[0] != m.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {m.shape}")
    if m.shape[0] > MAX_DIM:
        raise ShapeError(f"dimension {m.shape[0]} exceeds the supported maximum {MAX_DIM}")
    if not is_hermitian(m, tol):
        raise DomainError(
            f"matrix is not Hermitian (residual {hermitian_residual(m):.3e})"
        )
    return m


def jacobi_eigh(m, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Returns ``(eigenvalues, vectors)`` with eigenvalues in descending order
    and eigenvectors as the columns of ``vectors``.  No Hermiticity check is
    made here; see :func:`hermitian_eig`.
    """
    a = 0.5 * (np.array(m, dtype=complex) + np.array(m, dtype=complex).conj().T)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    norm = float(np.linalg.norm(a))
    if n < 2 or norm == 0.0:
        vals = a.diagonal().real.copy()
        order = np.argsort(-vals, kind="stable")
        return vals[order], v[:, order]
    stop = np.finfo(float).eps * norm
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        # summing the off-diagonal entries directly; subtracting the diagonal
        # from the full norm cancels catastrophically near convergence
        off = float(np.linalg.norm(a[offdiag]))
        if off <= stop:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= stop * 1e-3:
                    continue
                phase = apq / mag
                theta = 0.5 * math.atan2(2.0 * mag, a[q, q].real - a[p, p].real)
                c, s = math.cos(theta), math.sin(theta)
                u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u
                a[idx, :] = u.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, idx] = v[:, idx] @ u
    vals = a.diagonal().real.copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (descending) and their eigenspace projectors."""

    eigenvalues: np.ndarray
    projectors: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(int(round(np.trace(p).real)) for p in self.projectors)

    def reconstruct(self) -> np.ndarray:
        return sum(x * p for x, p in zip(self.eigenvalues, self.projectors))

    def index_of(self, x: float, tol: float = 1e-8) -> int:
        """Index of the eigenvalue cluster matching ``x``."""
        radius = max(1.0, float(np.max(np.abs(self.eigenvalues))))
        diffs = np.abs(self.eigenvalues - x)
        i = int(np.argmin(diffs))
        if diffs[i] > tol * radius:
            raise KeyError(x)
        return i


def hermitian_eig(m, cluster_tol: float | None = None, tol: Tolerances = DEFAULT) -> SpectralDecomposition:
    """Spectral decomposition with eigenvalue clustering.

    Eigenvalues closer than ``cluster_tol * spectral_radius`` are merged into
    one cluster whose value is their mean; the cluster's projector spans all
    of the merged eigenvectors.
    """
    m = _require_hermitian(m, tol)
    ctol = tol.cluster if cluster_tol is None else cluster_tol
    vals, vecs = jacobi_eigh(m)
    radius = float(np.max(np.abs(vals))) if vals.size else 0.0
    gap = ctol * radius
    groups: list[list[int]] = []
    for i, x in enumerate(vals):
        if groups and vals[groups[-1][-1]] - x <= gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    eigenvalues = np.array([float(np.mean(vals[g])) for g in groups])
    projectors = []
    for g in groups:
        w = vecs[:, g]
        p = w @ w.conj().T
        projectors.append(0.5 * (p + p.conj().T))
    return SpectralDecomposition(eigenvalues, tuple(projectors))


def eigvalsh(m, tol: Tolerances = DEFAULT) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix in descending order (unclustered)."""
    return jacobi_eigh(_require_hermitian(m, tol))[0]


def min_eigenvalue(m, tol: Tolerances = DEFAULT) -> float:
    return float(eigvalsh(m, tol)[-1])


def psd_check(m, tol: Tolerances = DEFAULT, psd_tol: float | None = None) -> bool:
    """True iff the Hermitian matrix ``m`` has min eigenvalue ``>= -psd_tol``."""
    threshold = tol.psd if psd_tol is None else psd_tol
    return min_eigenvalue(m, tol) >= -threshold


def projector(vec) -> np.ndarray:
    """Rank-one projector ``|v><v|`` for a (normalised) vector."""
    v = np.asarray(vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation."""
    return np.asarray(m).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(v).reshape((dim, dim), order="F")


# Pauli matrices, used throughout tests and fixtures.
I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
