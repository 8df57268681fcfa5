from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from oracles import SX, SY, SZ
from cmm import core, fixtures
from cmm.classical import ClassicalModel, FiniteProbSpace, RandomVariable
from cmm.errors import InputError, InvariantError, ModelLookupError
from cmm.lsr import (
    MeasureVector,
    MInstrument,
    classical_equivalence,
    conditioning_instrument,
    effect_eval,
    m_instrument_apply,
    m_povm_from_instrument,
    mackey_embed,
    measure_model_from_classical,
    unit_functional,
)
from cmm.quantum import HermitianObservable, random_pure_state, vn_model

SUPPORT = ("w1", "w2", "w3", "w4")
A = RandomVariable("a", [0, 0, 1, 1])


class TestMeasureVector:
    def test_state(self):
        assert MeasureVector.uniform(SUPPORT).is_state()
        assert not MeasureVector(SUPPORT, [0.5, 0.5, 0.5, -0.5]).is_state()
        assert MeasureVector(SUPPORT, [0.5, 0.5, 0.5, -0.5]).norm() == 2.0

    def test_size(self):
        with pytest.raises(InputError):
            MeasureVector(SUPPORT, [1.0])


class TestMInstrument:
    def test_invariants(self):
        with pytest.raises(InvariantError):
            MInstrument((0,), [np.array([[1.0, -0.1], [0.0, 1.1]])])
        with pytest.raises(InvariantError):
            MInstrument((0,), [np.eye(2) * 0.9])

    def test_identity(self):
        mu = MeasureVector(SUPPORT, [0.1, 0.2, 0.3, 0.4])
        res = m_instrument_apply(MInstrument.identity(4), 0, mu)
        assert res.prob == pytest.approx(1.0, abs=1e-15)
        assert np.array_equal(res.updated.values, mu.values)

    def test_half_indicator(self):
        res = m_instrument_apply(conditioning_instrument(A), 1, MeasureVector.uniform(SUPPORT))
        assert res.prob == 0.5
        assert np.allclose(res.updated.values, [0, 0, 0.5, 0.5])

    def test_null_update(self):
        mu = MeasureVector(SUPPORT, [0.5, 0.5, 0, 0])
        assert m_instrument_apply(conditioning_instrument(A), 1, mu).updated is None

    def test_bayes_update_matches_classical(self):
        sp = FiniteProbSpace(SUPPORT, [0.1, 0.2, 0.3, 0.4])
        cl = ClassicalModel(sp, [A])
        mu = MeasureVector(SUPPORT, sp.weights)
        res = m_instrument_apply(conditioning_instrument(A), 1, mu)
        e = cl.instrument("a").update(sp.omega, 1)
        assert np.allclose(res.updated.values, MeasureVector.from_event(sp, e).values, atol=1e-15)

    def test_unknown_outcome(self):
        with pytest.raises(ModelLookupError):
            conditioning_instrument(A).matrix(7)


class TestEffects:
    def test_conditioning(self):
        eff = m_povm_from_instrument(conditioning_instrument(A))
        assert np.array_equal(eff[0].coefficients, [1, 1, 0, 0])
        assert np.array_equal(eff[1].coefficients, [0, 0, 1, 1])

    def test_identity(self):
        eff = m_povm_from_instrument(MInstrument.identity(3))
        assert list(eff) == [0] and np.array_equal(eff[0].coefficients, np.ones(3))

    def test_blur(self):
        blur = np.array([[0.5, 0.25, 0.0], [0.25, 0.5, 0.25], [0.25, 0.25, 0.75]])
        ind = conditioning_instrument(RandomVariable("r", [0, 0, 1]))
        inst = MInstrument((0, 1), [ind.matrix(x) @ blur for x in (0, 1)])
        eff = m_povm_from_instrument(inst)
        # column sums of the blurred indicators, by hand
        assert np.allclose(eff[0].coefficients, [0.75, 0.75, 0.25])
        assert np.allclose(eff[1].coefficients, [0.25, 0.25, 0.75])
        assert all(((0 < e.coefficients) & (e.coefficients < 1)).all() for e in eff.values())


class TestModel:
    def test_fixture(self):
        m = fixtures.model("lsr_conditioning")
        assert core.prob_dist(m, "uniform", "a") == pytest.approx({0: 2 / 3, 1: 1 / 3}, abs=1e-15)
        assert core.replicability(m, "uniform", "a")

    def test_blur_not_replicable(self):
        m = fixtures.model("lsr_conditioning")
        assert not core.replicability(m, "point1", "blur")

    @given(st.integers(1, 6), st.integers(0, 2**32 - 1))
    def test_equivalence_with_classical(self, n, seed):
        rng = np.random.default_rng(seed)
        raw = rng.integers(0, 4, n)
        raw[0] += 1
        w = [float(Fraction(int(r), int(raw.sum()))) for r in raw]
        w[-1] = 1 - sum(w[:-1])
        sp = FiniteProbSpace(list(range(n)), np.clip(w, 0, None))
        m = ClassicalModel(sp, [RandomVariable("a", list(rng.integers(0, 2, n))),
                                RandomVariable("b", list(rng.integers(0, 3, n)))])
        assert classical_equivalence(m) <= 1e-12

    def test_feature_table_matches_classical(self):
        cl = fixtures.model("classical_coins")
        mm = measure_model_from_classical(cl)
        ctx = {k: MeasureVector.from_event(cl.space, e) for k, e in cl.default_contexts().items()
               if cl.space.prob(e) > 0}
        assert core.feature_report(mm, ctx).table() == core.feature_report(cl).table()


class TestMackey:
    PAULIS = [HermitianObservable(n, m) for n, m in (("X", SX), ("Y", SY), ("Z", SZ))]

    def test_quantum_states_separated(self):
        rng = np.random.default_rng(7)
        m = vn_model(self.PAULIS, {f"s{k}": random_pure_state(2, rng) for k in range(10)})
        emb = mackey_embed(m)
        assert emb.separated and emb.collision is None
        assert np.allclose(emb.block_sums(), 1.0, atol=1e-12)

    def test_null_point_collision(self):
        sp = FiniteProbSpace([1, 2, 3], [0.5, 0.5, 0.0])
        m = ClassicalModel(sp, [RandomVariable("v", [1, 2, 3])],
                           {"c12": sp.event([1, 2]), "c123": sp.event([1, 2, 3])})
        emb = mackey_embed(m, ["c12", "c123"])
        assert not emb.separated and set(emb.collision) == {"c12", "c123"}

    def test_single_context(self):
        m = vn_model(self.PAULIS, {"zero": oracles.ket(1, 0)})
        assert mackey_embed(m).separated

    def test_coordinates_and_mixture(self):
        rng = np.random.default_rng(11)
        r1, r2 = random_pure_state(2, rng), random_pure_state(2, rng)
        mix = 0.3 * r1.matrix + 0.7 * r2.matrix
        m = vn_model(self.PAULIS, {"r1": r1, "r2": r2, "mix": mix})
        emb = mackey_embed(m)
        for a in self.PAULIS:
            for x in a.outcomes:
                assert effect_eval(emb, a.name, x, emb.vector("r1")) == core.prob_dist(m, "r1", a.name)[x]
        v = emb.mixture({"r1": 0.3, "r2": 0.7})
        assert np.max(np.abs(v - emb.vector("mix"))) < 1e-10
        assert unit_functional(emb, "X", v) == pytest.approx(1.0, abs=1e-12)
        with pytest.raises(ModelLookupError):
            emb.coordinate("Q", 1.0)

    def test_to_dict(self):
        import json
        m = vn_model(self.PAULIS, {"zero": oracles.ket(1, 0)})
        json.dumps(mackey_embed(m).to_dict())

    @given(st.integers(0, 2**32 - 1), st.floats(0, 1))
    def test_effects_affine(self, seed, p):
        rng = np.random.default_rng(seed)
        m = vn_model(self.PAULIS, {"a": random_pure_state(2, rng), "b": random_pure_state(2, rng)})
        emb = mackey_embed(m)
        v = emb.mixture({"a": p, "b": 1 - p})
        for a, x in emb.index:
            lhs = effect_eval(emb, a, x, v)
            rhs = p * effect_eval(emb, a, x, emb.vector("a")) + (1 - p) * effect_eval(emb, a, x, emb.vector("b"))
            assert abs(lhs - rhs) <= 1e-15
