"""Independent reference computations for the test-suite.

Nothing here imports the package under test.  Classical quantities are
enumerated with exact fractions; quantum quantities use LAPACK via
``numpy.linalg`` rather than the package's Jacobi solver.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


# -- classical ---------------------------------------------------------------


def prob(weights, event) -> Fraction:
    return sum((Fraction(weights[i]) for i in event), Fraction(0))


def cond(weights, context, level) -> Fraction:
    return prob(weights, context & level) / prob(weights, context)


def level(values, x) -> set:
    return {i for i, v in enumerate(values) if v == x}


# -- quantum -----------------------------------------------------------------


def eig_projectors(m, tol=1e-8) -> dict:
    """Eigenvalue -> projector, with LAPACK and eigenvalue merging."""
    vals, vecs = np.linalg.eigh(np.asarray(m, dtype=complex))
    out: dict[float, np.ndarray] = {}
    for v, col in zip(vals, vecs.T):
        key = next((k for k in out if abs(k - v) <= tol), None)
        p = np.outer(col, col.conj())
        if key is None:
            out[float(v)] = p
        else:
            out[key] = out[key] + p
    return out


def born(rho, proj) -> float:
    return float(np.real(np.trace(proj @ rho)))


def luders(rho, proj) -> np.ndarray:
    out = proj @ rho @ proj
    return out / np.trace(out).real


def ket(*amps) -> np.ndarray:
    v = np.array(amps, dtype=complex)
    return v / np.linalg.norm(v)


def dm(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def sequential(rho, steps) -> float:
    """Chained Lüders probability of a list of projectors."""
    total = 1.0
    r = rho
    for p in steps:
        q = born(r, p)
        if q <= 1e-15:
            return 0.0
        total *= q
        r = luders(r, p)
    return total


def chsh_brute(m: np.ndarray) -> float:
    """Largest |M11 + M21 + M12 - M22| over ordered observable choices."""
    n = m.shape[0]
    best = 0.0
    for a1, a2, b1, b2 in product(range(n), repeat=4):
        best = max(best, abs(m[a1, b1] + m[a2, b1] + m[a1, b2] - m[a2, b2]))
    return best
