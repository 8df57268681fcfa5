"""Linear-space representations of contextual models.

Two constructions live here:

* a finite ordered-space model whose states are probability vectors on a
  finite set and whose instruments are nonnegative matrices
  (:class:`MeasureModel`);
* the embedding of any contextual model into ``[0, 1]^(observable, outcome)``
  coordinates, one vector per context (:func:`mackey_embed`).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .classical import ClassicalModel, Event, FiniteProbSpace, RandomVariable
from .core import ContextualInstrument, ContextualModel
from .errors import ConditioningError, InputError, InvariantError, ModelLookupError
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class MeasureVector:
    """A signed measure on a finite labelled support."""

    support: tuple
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).reshape(-1)
        if v.size != len(self.support):
            raise InputError(f"{v.size} values for {len(self.support)} points")
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "values", v)

    def mass(self) -> float:
        return float(np.sum(self.values))

    def is_state(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.values >= -tol)) and abs(self.mass() - 1.0) <= tol

    def norm(self) -> float:
        """Total variation (absolute-sum) norm."""
        return float(np.sum(np.abs(self.values)))

    def __getitem__(self, label) -> float:
        return float(self.values[self.support.index(label)])

    @classmethod
    def uniform(cls, support: Sequence) -> "MeasureVector":
        return cls(tuple(support), np.full(len(support), 1.0 / len(support)))

    @classmethod
    def from_event(cls, space: FiniteProbSpace, e: Event) -> "MeasureVector":
        """``P(. | e)`` as a vector."""
        w = np.where([i in e for i in range(len(space))], space.weights, 0.0)
        total = w.sum()
        if total <= 0:
            raise ConditioningError(str(space.labels(e)), "context", None, float(total))
        return cls(space.points, w / total)


@dataclass(frozen=True)
class MEffect:
    """Linear functional ``mu -> <coefficients, mu>`` with coefficients in ``[0, 1]``."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        object.__setattr__(self, "coefficients", c)

    def is_effect(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.coefficients >= -tol) and np.all(self.coefficients <= 1 + tol))

    def __call__(self, mu: MeasureVector) -> float:
        return float(self.coefficients @ mu.values)


class MInstrument:
    """Outcome-indexed nonnegative matrices ``J(x)`` with column-stochastic sum.

    ``J(x)`` acts on measure vectors by left multiplication.
    """

    def __init__(self, outcomes: Sequence[Hashable], matrices: Sequence, name: str | None = None,
                 tol: Tolerances = DEFAULT):
        self.outcomes = tuple(outcomes)
        self.matrices = tuple(np.asarray(m, dtype=float) for m in matrices)
        self.name = name
        if len(self.outcomes) != len(self.matrices) or len(set(self.outcomes)) != len(self.outcomes):
            raise InputError("one matrix per distinct outcome required")
        n = self.matrices[0].shape[0]
        if any(m.shape != (n, n) for m in self.matrices):
            raise InputError("instrument matrices must be square and of equal size")
        low = min(float(m.min()) for m in self.matrices)
        if low < -tol.distribution:
            raise InvariantError("entrywise nonnegative", -low, name or "")
        cols = sum(self.matrices).sum(axis=0)
        r = float(np.max(np.abs(cols - 1.0)))
        if r > tol.distribution:
            raise InvariantError("column-stochastic total", r, name or "")

    @property
    def dim(self) -> int:
        return self.matrices[0].shape[0]

    def matrix(self, x) -> np.ndarray:
        try:
            return self.matrices[self.outcomes.index(x)]
        except ValueError:
            raise ModelLookupError(f"{x!r} is not an outcome of {self.name!r}") from None

    @classmethod
    def identity(cls, n: int, name: str = "id") -> "MInstrument":
        return cls((0,), [np.eye(n)], name)


@dataclass(frozen=True)
class MResult:
    prob: float
    updated: MeasureVector | None


def m_instrument_apply(inst: MInstrument, x, mu: MeasureVector, tol: Tolerances = DEFAULT) -> MResult:
    """``P_mu(A=x) = <u, J(x) mu>`` and the normalised update when defined."""
    out = inst.matrix(x) @ mu.values
    p = float(np.sum(out))
    if p <= tol.cond:
        return MResult(max(p, 0.0), None)
    return MResult(p, MeasureVector(mu.support, out / p))


def m_povm_from_instrument(inst: MInstrument) -> dict:
    """Effects ``A(x) = J(x)^T u`` keyed by outcome."""
    effects = {x: MEffect(m.sum(axis=0)) for x, m in zip(inst.outcomes, inst.matrices)}
    for x, e in effects.items():
        if not e.is_effect():
            raise InputError(f"effect for {x!r} has coefficients outside [0, 1]")
    total = sum(e.coefficients for e in effects.values())
    if np.max(np.abs(total - 1.0)) > 1e-12:
        raise InputError("effects do not sum to the unit functional")
    return effects


def conditioning_instrument(a: RandomVariable) -> MInstrument:
    """Bayes conditioning on the level sets of ``a`` as diagonal indicators."""
    values = list(a.values)
    mats = [np.diag([1.0 if v == x else 0.0 for v in values]) for x in a.outcomes]
    return MInstrument(a.outcomes, mats, a.name)


class MeasureModel(ContextualModel):
    """Contexts are probability vectors; observables are :class:`MInstrument` s."""

    def __init__(self, support: Sequence, instruments: Iterable[MInstrument],
                 contexts: Mapping[str, MeasureVector] | None = None, tol: Tolerances = DEFAULT):
        self.support = tuple(support)
        self.tol = tol
        self._inst: dict[str, MInstrument] = {}
        self._effects: dict[str, dict] = {}
        self._ci: dict[str, ContextualInstrument] = {}
        for inst in instruments:
            if inst.dim != len(self.support):
                raise InputError(f"instrument {inst.name!r} has dimension {inst.dim}")
            if inst.name in self._inst:
                raise InputError(f"duplicate observable {inst.name!r}")
            self._inst[inst.name] = inst
            self._effects[inst.name] = m_povm_from_instrument(inst)
            self._ci[inst.name] = ContextualInstrument(inst.name, inst.name, self._updater(inst), "measure")
        self._contexts: dict[str, MeasureVector] = {}
        for name, mu in (contexts or {}).items():
            self.add_context(name, mu)

    def _updater(self, inst: MInstrument):
        def update(mu, x):
            res = m_instrument_apply(inst, x, mu, self.tol)
            if res.updated is None:
                raise ConditioningError("mu", inst.name, x, res.prob)
            return res.updated
        return update

    def add_context(self, name: str, mu: MeasureVector) -> None:
        if not mu.is_state():
            raise InvariantError("context is a probability vector", abs(mu.mass() - 1.0), name)
        self._contexts[name] = mu

    def observables(self) -> list[str]:
        return list(self._inst)

    def outcomes(self, observable: str) -> tuple:
        return self._instrument(observable).outcomes

    def _instrument(self, name: str) -> MInstrument:
        try:
            return self._inst[name]
        except KeyError:
            raise ModelLookupError(f"unknown observable {name!r}") from None

    def distribution(self, context, observable: str) -> dict:
        mu = self.context(context)
        self._instrument(observable)
        return {x: e(mu) for x, e in self._effects[observable].items()}

    def instruments(self, observable: str | None = None) -> list[ContextualInstrument]:
        if observable is None:
            return list(self._ci.values())
        self._instrument(observable)
        return [self._ci[observable]]

    def contexts(self) -> dict[str, MeasureVector]:
        return dict(self._contexts)

    def context_name(self, c) -> str:
        if isinstance(c, str):
            return c
        for name, mu in self._contexts.items():
            if mu is c or np.array_equal(mu.values, c.values):
                return name
        return repr(c)


def measure_model_from_classical(model: ClassicalModel, contexts: Mapping[str, Event] | None = None) -> MeasureModel:
    """Re-express a classical model with conditioning instruments.

    Each event context ``C`` becomes the vector ``P(. | C)``.
    """
    space = model.space
    insts = [conditioning_instrument(model.variable(a)) for a in model.observables()]
    events = model.contexts() if contexts is None else contexts
    ctx = {name: MeasureVector.from_event(space, e) for name, e in events.items()}
    return MeasureModel(space.points, insts, ctx, model.tol)


def classical_equivalence(model: ClassicalModel, events: Iterable[Event] | None = None) -> float:
    """Max deviation between a classical model and its measure re-expression.

    Compares ``P_C(a=x)`` and the updated distributions of every observable
    after ``T_a(x)`` over all (context, variable, outcome) triples.
    """
    space = model.space
    mm = measure_model_from_classical(model, {})
    if events is None:
        events = [e for e in space.all_events() if space.prob(e) > model.tol.cond]
    worst = 0.0
    for e in events:
        mu = MeasureVector.from_event(space, e)
        for a in model.observables():
            pc = model.distribution(e, a)
            pm = mm.distribution(mu, a)
            for x in model.outcomes(a):
                worst = max(worst, abs(pc[x] - pm[x]))
                if pc[x] <= model.tol.cond:
                    continue
                ce = model.instrument(a).update(e, x)
                me = mm.instrument(a).update(mu, x)
                for b in model.observables():
                    qc = model.distribution(ce, b)
                    qm = mm.distribution(me, b)
                    worst = max(worst, max(abs(qc[y] - qm[y]) for y in qc))
    return worst


# ---------------------------------------------------------------------------
# embedding into function space


@dataclass(frozen=True)
class MackeyEmbedding:
    """Contexts as points of ``[0, 1]^X`` with ``X`` the (observable, outcome) pairs.

    ``matrix`` has one row per context (in ``names`` order) and one column
    per entry of ``index``.
    """

    index: tuple
    names: tuple
    matrix: np.ndarray
    separated: bool
    collision: tuple | None

    def coordinate(self, observable: str, x) -> int:
        try:
            return self.index.index((observable, x))
        except ValueError:
            raise ModelLookupError(f"no coordinate ({observable!r}, {x!r})") from None

    def vector(self, name: str) -> np.ndarray:
        return self.matrix[self.names.index(name)]

    def mixture(self, weights: Mapping[str, float]) -> np.ndarray:
        return sum(w * self.vector(n) for n, w in weights.items())

    def block_sums(self) -> np.ndarray:
        """Per-observable coordinate sums for every context (all ones)."""
        obs = list(dict.fromkeys(a for a, _ in self.index))
        return np.array([[row[[i for i, (b, _) in enumerate(self.index) if b == a]].sum() for a in obs]
                         for row in self.matrix])

    def to_dict(self) -> dict:
        return {
            "columns": [[a, x] for a, x in self.index],
            "rows": list(self.names),
            "matrix": self.matrix.tolist(),
            "separated": self.separated,
            "collision": list(self.collision) if self.collision else None,
        }


def mackey_embed(model: ContextualModel, contexts=None, observables=None,
                 tol: Tolerances | None = None) -> MackeyEmbedding:
    """Embed a sample of contexts and report whether it is separated.

    Two contexts collide when all their coordinates agree within
    ``tol.separation``; the first colliding pair is reported.
    """
    tol = tol or model.tol
    if contexts is None:
        contexts = model.contexts()
    items = list(contexts.items()) if isinstance(contexts, Mapping) else [
        (model.context_name(c), model.context(c)) for c in contexts
    ]
    obs = list(observables or model.observables())
    index = tuple((a, x) for a in obs for x in model.outcomes(a))
    rows = []
    for _, c in items:
        row = []
        for a in obs:
            dist = model.distribution(c, a)
            row.extend(dist[x] for x in model.outcomes(a))
        rows.append(row)
    matrix = np.array(rows, dtype=float).reshape(len(items), len(index))
    names = tuple(n for n, _ in items)
    collision = None
    for i in range(len(items)):
        if collision:
            break
        diffs = np.max(np.abs(matrix[i + 1:] - matrix[i]), axis=1) if i + 1 < len(items) else np.array([])
        hits = np.nonzero(diffs <= tol.separation)[0]
        if hits.size:
            collision = (names[i], names[i + 1 + int(hits[0])])
    return MackeyEmbedding(index, names, matrix, collision is None, collision)


def effect_eval(embedding: MackeyEmbedding, observable: str, x, vector) -> float:
    """The functional ``f_(A,x)``: read coordinate ``(A, x)`` of a context vector."""
    return float(np.asarray(vector)[embedding.coordinate(observable, x)])


def unit_functional(embedding: MackeyEmbedding, observable: str, vector) -> float:
    """``sum_x f_(A,x)``, equal to 1 on every context vector and mixture."""
    v = np.asarray(vector)
    return float(sum(v[i] for i, (a, _) in enumerate(embedding.index) if a == observable))
