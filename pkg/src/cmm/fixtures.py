"""Reference models used by the demos and the test-suite.

Each fixture is a model-file tree (see :mod:`cmm.modelfile`), so the same
definitions can be written to disk with :func:`write_all` and fed to the
command-line tool.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .modelfile import build_model, encode_matrix, encode_vector

R2 = 1 / math.sqrt(2)
I2 = np.eye(2)
SX = np.array([[0, 1], [1, 0]])
SZ = np.array([[1, 0], [0, -1]])


def _vec(v) -> dict:
    return {"vector": encode_vector(np.asarray(v, dtype=complex))}


def classical_coins() -> dict:
    """Two fair, independent +-1 coins on four points."""
    return {
        "kind": "classical",
        "points": ["hh", "ht", "th", "tt"],
        "weights": [0.25, 0.25, 0.25, 0.25],
        "variables": {
            "a": {"values": [1, 1, -1, -1]},
            "b": {"values": [1, -1, 1, -1]},
            "parity": {"values": [1, -1, -1, 1]},
        },
        "contexts": {"first_heads": ["hh", "ht"], "agree": ["hh", "tt"]},
    }


def fair_coin() -> dict:
    return {
        "kind": "classical",
        "points": ["heads", "tails"],
        "weights": [0.5, 0.5],
        "variables": {"coin": {"values": ["H", "T"], "numeric": {"H": 1, "T": -1}}},
    }


def qubit_interference() -> dict:
    """Single qubit with ``sigma_x`` and ``sigma_z``; ``|0>`` gives interference 1/2."""
    return {
        "kind": "von_neumann",
        "observables": {"X": encode_matrix(SX), "Z": encode_matrix(SZ)},
        "states": {"zero": _vec([1, 0]), "plus": _vec([R2, R2]), "mixed": {"matrix": encode_matrix(I2 / 2)}},
    }


def two_qubit_bell() -> dict:
    """Two qubits with the CHSH-optimal observables and singlet / product states."""
    return {
        "kind": "von_neumann",
        "observables": {
            "A1": encode_matrix(np.kron(SZ, I2)),
            "A2": encode_matrix(np.kron(SX, I2)),
            "B1": encode_matrix(np.kron(I2, (SZ + SX) * R2)),
            "B2": encode_matrix(np.kron(I2, (SZ - SX) * R2)),
            "Z2": encode_matrix(np.kron(I2, SZ)),
        },
        "states": {
            "singlet": _vec([0, R2, -R2, 0]),
            "phi_plus": _vec([R2, 0, 0, R2]),
            "zero": _vec([1, 0, 0, 0]),
            "plus_plus": _vec([0.5, 0.5, 0.5, 0.5]),
        },
    }


def oe_rre_instruments() -> dict:
    """Measure-and-prepare pair on four levels with order effects and RRE.

    Both instruments prepare ``e0`` on ``+1`` and ``e1`` on ``-1``.  Their
    ``+1`` effects share ``e0`` and differ on the span of ``e2, e3``, so the
    state ``e2`` gives ``P(A=+1) = 1`` but ``P(B=+1) = 1/2``.
    """
    e = np.eye(4)
    plus23 = (e[2] + e[3]) * R2
    a_plus = np.outer(e[0], e[0]) + np.outer(e[2], e[2])
    b_plus = np.outer(e[0], e[0]) + np.outer(plus23, plus23)

    def inst(name, eff):
        return {
            "name": name, "observable": name, "kind": "measure_and_prepare", "outcomes": [1, -1],
            "data": {"effects": [encode_matrix(eff), encode_matrix(np.eye(4) - eff)],
                     "states": [_vec(e[0]), _vec(e[1])]},
        }

    return {
        "kind": "instrument",
        "observables": {},
        "states": {"e2": _vec(e[2]), "e0": _vec(e[0]), "mixed": {"matrix": encode_matrix(np.eye(4) / 4)}},
        "instruments": [inst("A", a_plus), inst("B", b_plus)],
    }


def lsr_conditioning() -> dict:
    """Three-point measure model: conditioning on ``a`` and a blurred readout."""
    return {
        "kind": "measure_lsr",
        "support": ["w1", "w2", "w3"],
        "instruments": {
            "a": {"outcomes": [0, 1], "matrices": [np.diag([1.0, 1.0, 0.0]).tolist(), np.diag([0.0, 0.0, 1.0]).tolist()]},
            "blur": {"outcomes": [0, 1], "matrices": [
                [[0.5, 0.25, 0.0], [0.25, 0.5, 0.0], [0.0, 0.0, 0.25]],
                [[0.25, 0.0, 0.0], [0.0, 0.25, 0.25], [0.0, 0.0, 0.5]],
            ]},
        },
        "contexts": {"uniform": [1 / 3, 1 / 3, 1 / 3], "point1": [1.0, 0.0, 0.0]},
    }


FIXTURES = {
    "classical_coins": classical_coins,
    "fair_coin": fair_coin,
    "qubit_interference": qubit_interference,
    "two_qubit_bell": two_qubit_bell,
    "oe_rre_instruments": oe_rre_instruments,
    "lsr_conditioning": lsr_conditioning,
}


def tree(name: str) -> dict:
    return FIXTURES[name]()


def model(name: str):
    return build_model(tree(name))


def write_all(directory: str | Path) -> list[Path]:
    out = []
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    for name, fn in FIXTURES.items():
        p = d / f"{name}.json"
        p.write_text(json.dumps(fn(), indent=1) + "\n")
        out.append(p)
    return out
