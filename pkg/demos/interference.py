"""Interference and order effects on a single qubit.

Walks through how a sequential measurement of X then Z on |0> breaks the
classical total-probability formula, how large the break is, and how the
interference term sorts into a regime (trigonometric or hyperbolic).

Run:  python demos/interference.py
"""

from __future__ import annotations

import numpy as np

from cmm import core, fixtures
from cmm.quantum import HermitianObservable, measure_and_prepare, vn_model
from cmm.quantum.model import QuantumModel


def banner(text: str) -> None:
    print(f"\n== {text} ==")


def main() -> None:
    qubit = fixtures.model("qubit_interference")

    banner("Born probabilities")
    for ctx in ("zero", "plus", "mixed"):
        print(f"{ctx:>6}: X -> {core.prob_dist(qubit, ctx, 'X')}, Z -> {core.prob_dist(qubit, ctx, 'Z')}")

    banner("Total probability, X then Z, starting from |0>")
    for y in (1.0, -1.0):
        d = core.ftp_interference(qubit, "zero", "X", "Z", y)
        print(f"y={y:+.0f}: P(Z=y)={d.prob_b:.3f}  classical sum={d.classical_part:.3f}  "
              f"delta={d.delta:+.3f}  lambda={d.lam:+.3f}  regime={d.regime}")
    print("Measuring X first wipes out the certainty of Z, so the classical sum is 1/2.")

    banner("Sweeping the state around the Bloch circle")
    x = HermitianObservable("X", np.array([[0.0, 1.0], [1.0, 0.0]]))
    z = HermitianObservable("Z", np.diag([1.0, -1.0]))
    for t in np.linspace(0, np.pi, 5):
        psi = np.array([np.cos(t / 2), np.sin(t / 2)])
        m = vn_model([x, z], {"psi": psi})
        d = core.ftp_interference(m, "psi", "X", "Z", 1.0)
        lam = "undefined" if d.lam is None else f"{d.lam:+.4f}"
        print(f"t={t:5.3f}  delta={d.delta:+.4f}  lambda={lam}  ({d.regime})")
    print("At t=pi/2 the state is an X eigenstate, one branch has zero weight and lambda is undefined.")

    banner("Order effects")
    oe = core.order_effect(qubit, "zero", "X", "Z")
    print(f"X then Z vs Z then X from |0>: max gap {oe.max_discrepancy:.3f} at outcomes {oe.witness}")
    print(f"replicability of X on |0>: {core.replicability(qubit, 'zero', 'X')}")

    banner("A hyperbolic interference term")
    # Read out X, then always prepare a state heavily tilted towards |1>.
    phi = np.array([0.1, np.sqrt(0.99)])
    plus, minus = np.array([1, 1]) / np.sqrt(2), np.array([1, -1]) / np.sqrt(2)
    inst = measure_and_prepare([np.outer(plus, plus), np.outer(minus, minus)], [phi, phi],
                               name="A", observable="A")
    m = QuantumModel([z], {"zero": np.array([1.0, 0.0])}, [inst])
    d = core.ftp_interference(m, "zero", "A", "Z", 1.0)
    print(f"delta={d.delta:+.3f}  lambda={d.lam:+.1f}  regime={d.regime}")
    print("Projective updates can never do this: their |lambda| stays at most 1.")


if __name__ == "__main__":
    main()
