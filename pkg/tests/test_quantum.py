from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from oracles import I2, SX, SY, SZ
from cmm import core
from cmm.errors import ConditioningError, InvariantError, ModelLookupError
from cmm.quantum import (
    DensityMatrix,
    HermitianObservable,
    QuantumModel,
    born_prob,
    function_of_observable,
    luders_instrument,
    luders_update,
    pushforward_check,
    quantum_interference,
    random_density,
    random_pure_state,
    vn_model,
)

ZERO = oracles.ket(1, 0)
PLUS = oracles.ket(1, 1)
X = HermitianObservable("X", SX)
Z = HermitianObservable("Z", SZ)


def random_hermitian(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (a + a.conj().T) / 2


class TestDensityMatrix:
    def test_trace_violation(self):
        with pytest.raises(InvariantError) as exc:
            DensityMatrix(np.diag([0.5, 0.4]))
        assert exc.value.residual == pytest.approx(0.1, abs=1e-12)

    def test_not_psd(self):
        with pytest.raises(InvariantError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_not_hermitian(self):
        with pytest.raises(InvariantError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_from_vector_normalises(self):
        rho = DensityMatrix.from_vector([1, 1])
        assert np.allclose(rho.matrix, oracles.dm(PLUS))

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_random_states_valid(self, d, seed):
        rng = np.random.default_rng(seed)
        for s in (random_pure_state(d, rng), random_density(d, rng)):
            DensityMatrix(s.matrix)


class TestBorn:
    def test_eigenstate(self):
        assert born_prob(oracles.dm(ZERO), Z, 1.0) == 1.0

    def test_mixed(self):
        assert born_prob(I2 / 2, X, 1.0) == pytest.approx(0.5, abs=1e-15)

    def test_rotated(self):
        t = math.pi / 6
        assert born_prob(oracles.dm(oracles.ket(math.cos(t), math.sin(t))), Z, 1.0) == pytest.approx(0.75, abs=1e-12)

    def test_invalid_outcome(self):
        with pytest.raises(ModelLookupError):
            born_prob(I2 / 2, Z, 0.5)


class TestLuders:
    def test_plus_to_zero(self):
        assert np.allclose(luders_update(oracles.dm(PLUS), Z, 1.0).matrix, oracles.dm(ZERO))

    def test_eigenstate_unchanged(self):
        assert np.allclose(luders_update(oracles.dm(ZERO), Z, 1.0).matrix, oracles.dm(ZERO))

    def test_mixed_to_one(self):
        assert np.allclose(luders_update(I2 / 2, Z, -1.0).matrix, np.diag([0, 1]))

    def test_null(self):
        with pytest.raises(ConditioningError):
            luders_update(oracles.dm(ZERO), Z, -1.0)

    @given(st.integers(0, 2**32 - 1))
    def test_against_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = HermitianObservable("A", np.kron(SZ, I2) + 0.5 * np.kron(SX, SX))
        rho = random_density(4, rng)
        ref = oracles.eig_projectors(a.matrix)
        for x in a.outcomes:
            key = min(ref, key=lambda k: abs(k - x))
            p = oracles.born(rho.matrix, ref[key])
            assert abs(born_prob(rho, a, x) - p) < 1e-10
            if p > 1e-9:
                assert np.max(np.abs(luders_update(rho, a, x).matrix - oracles.luders(rho.matrix, ref[key]))) < 1e-9


class TestLudersInstrument:
    def test_sigma_z(self):
        inst = luders_instrument(Z)
        assert np.allclose(inst.kraus(1.0)[0], np.diag([1, 0]))
        assert np.allclose(inst.kraus(-1.0)[0], np.diag([0, 1]))

    def test_identity(self):
        inst = luders_instrument(HermitianObservable("I", I2))
        assert inst.outcomes == (1.0,)
        assert np.allclose(inst.kraus(1.0)[0], I2)

    def test_degenerate_dim4(self):
        inst = luders_instrument(HermitianObservable("XX", np.kron(SX, SX)))
        assert [int(round(np.trace(inst.kraus(x)[0]).real)) for x in inst.outcomes] == [2, 2]


class TestFunctionOfObservable:
    def test_identity(self):
        assert np.allclose(function_of_observable(Z, lambda x: x).matrix, SZ)

    def test_square(self):
        f = function_of_observable(Z, lambda x: x * x)
        assert f.outcomes == (1.0,)
        assert np.allclose(f.matrix, I2)

    def test_sign(self):
        a = HermitianObservable("A", np.diag([2.0, -3.0]))
        assert np.allclose(function_of_observable(a, np.sign).matrix, SZ)

    @given(st.integers(0, 2**32 - 1))
    def test_pushforward(self, seed):
        rng = np.random.default_rng(seed)
        a = HermitianObservable("A", np.diag([2.0, 1.0, -1.0, -2.0]))
        fa = function_of_observable(a, abs)
        rho = random_density(4, rng)
        assert pushforward_check(a, fa, abs, rho) <= 1e-10


class TestIdentifiability:
    PAULIS = [HermitianObservable(n, m) for n, m in (("X", SX), ("Y", SY), ("Z", SZ))]

    @given(st.integers(0, 2**32 - 1))
    def test_states(self, seed):
        rng = np.random.default_rng(seed)
        r1, r2 = random_density(2, rng), random_density(2, rng)
        gap = max(abs(born_prob(r1, a, 1.0) - born_prob(r2, a, 1.0)) for a in self.PAULIS)
        dist = 0.5 * np.abs(np.linalg.eigvalsh(r1.matrix - r2.matrix)).sum()
        if dist > 1e-6:
            assert gap > 1e-8

    @given(st.integers(0, 2**32 - 1))
    def test_observables(self, seed):
        rng = np.random.default_rng(seed)
        a, b = random_hermitian(rng, 3), random_hermitian(rng, 3)
        # distinct operators differ in expectation on some pure state
        vals, vecs = np.linalg.eigh(a - b)
        psi = vecs[:, np.argmax(np.abs(vals))]
        ea = float(np.real(psi.conj() @ a @ psi))
        eb = float(np.real(psi.conj() @ b @ psi))
        m = vn_model([HermitianObservable("a", a), HermitianObservable("b", b)], {"psi": psi})
        assert abs(core.average(m, "psi", "a") - ea) < 1e-9
        assert abs(core.average(m, "psi", "b") - eb) < 1e-9
        assert abs(core.average(m, "psi", "a") - core.average(m, "psi", "b")) > 1e-8


class TestQuantumInterference:
    def test_zero_state(self):
        d = quantum_interference(ZERO, X, Z, 1.0)
        assert d.delta == pytest.approx(0.5, abs=1e-12)
        assert d.delta_crossterm == pytest.approx(0.5, abs=1e-12)

    def test_commuting(self):
        d = quantum_interference(PLUS, Z, HermitianObservable("Z2", 2 * SZ), 2.0)
        assert d.delta == pytest.approx(0.0, abs=1e-15)

    def test_mixed(self):
        d = quantum_interference(I2 / 2, X, Z, 1.0)
        assert d.delta == pytest.approx(0.0, abs=1e-15)
        assert d.delta_crossterm is None

    def test_pure_density_matrix_gets_crossterm(self):
        d = quantum_interference(DensityMatrix(oracles.dm(ZERO)), X, Z, 1.0)
        assert d.delta_crossterm == pytest.approx(0.5, abs=1e-12)

    @given(st.integers(0, 2**32 - 1))
    def test_routes_agree(self, seed):
        rng = np.random.default_rng(seed)
        psi = random_pure_state(3, rng)
        u1 = np.linalg.qr(rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)))[0]
        a = HermitianObservable("A", u1 @ np.diag([1.0, 0.0, -1.0]) @ u1.conj().T)
        b = HermitianObservable("B", random_hermitian(rng, 3))
        for y in b.outcomes:
            d = quantum_interference(psi, a, b, y)
            assert abs(d.delta - d.delta_crossterm) < 1e-9


class TestModel:
    def test_lookup(self):
        m = vn_model([Z], {"zero": ZERO})
        with pytest.raises(ModelLookupError):
            m.distribution("zero", "Q")

    def test_default_contexts(self):
        m = vn_model([Z], {"zero": ZERO})
        ctx = m.default_contexts(seed=3)
        assert len(ctx) == 22 and "mixed" in ctx
        again = m.default_contexts(seed=3)
        assert all(np.array_equal(ctx[k].matrix, again[k].matrix) for k in ctx)

    def test_instrument_must_match_observable(self):
        from cmm.quantum import atomic
        noisy = atomic([np.diag([1, 0.5]), np.diag([0, math.sqrt(0.75)])], name="noisy", observable="Z")
        with pytest.raises(InvariantError):
            QuantumModel([Z], {}, [noisy])

    def test_luders_replicability_everywhere(self, rng):
        m = vn_model([X, Z], {f"s{k}": random_density(2, rng) for k in range(10)})
        assert all(core.replicability(m, c, a) for c in m.contexts() for a in ("X", "Z"))

    @given(st.integers(0, 2**32 - 1))
    def test_oe_for_noncommuting(self, seed):
        # a non-commuting pair shows an order effect on some sampled state
        rng = np.random.default_rng(seed)
        m = vn_model([X, Z], {})
        best = max(core.order_effect(m, random_pure_state(2, rng), "X", "Z").max_discrepancy for _ in range(20))
        assert best > 1e-3
