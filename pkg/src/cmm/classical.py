"""Finite Kolmogorov probability spaces as contextual models.

Contexts are events of positive probability, observables are random
variables, and measuring ``a`` with outcome ``x`` intersects the context
with the level set ``{a = x}``.  Events are bitsets over at most 64 points.
"""

from __future__ import annotations

import math

from dataclasses import dataclass
from itertools import combinations
from numbers import Real
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .core import ContextualInstrument, ContextualModel
from .errors import ConditioningError, InputError, InvariantError, ModelLookupError
from .tolerances import DEFAULT, Tolerances

MAX_POINTS = 64


@dataclass(frozen=True)
class Event:
    """A subset of the sample space stored as a bitmask over point indices."""

    mask: int

    def __and__(self, other: "Event") -> "Event":
        return Event(self.mask & other.mask)

    def __or__(self, other: "Event") -> "Event":
        return Event(self.mask | other.mask)

    def __xor__(self, other: "Event") -> "Event":
        return Event(self.mask ^ other.mask)

    def __contains__(self, i: int) -> bool:
        return bool(self.mask >> i & 1)

    def indices(self) -> list[int]:
        return [i for i in range(self.mask.bit_length()) if self.mask >> i & 1]

    def issubset(self, other: "Event") -> bool:
        return self.mask & ~other.mask == 0


class FiniteProbSpace:
    """Labelled sample points with nonnegative weights summing to one."""

    def __init__(self, points: Sequence[Hashable], weights: Sequence[float], tol: Tolerances = DEFAULT):
        points = list(points)
        w = np.asarray(weights, dtype=float)
        if len(points) != len(w):
            raise InputError(f"{len(points)} points but {len(w)} weights")
        if not 1 <= len(points) <= MAX_POINTS:
            raise InputError(f"sample space must have 1..{MAX_POINTS} points, got {len(points)}")
        if len(set(points)) != len(points):
            raise InputError("point labels must be distinct")
        if not np.all(np.isfinite(w)):
            raise InvariantError("finite weights", detail="non-finite weight")
        neg = [points[i] for i in np.flatnonzero(w < 0)]
        if neg:
            raise InvariantError("nonnegative weights", float(-w.min()), f"negative weight at point {neg[0]!r}")
        total = float(np.sum(w))
        if abs(total - 1.0) > 1e-12:
            raise InvariantError("weights sum to 1", abs(total - 1.0))
        self.points = tuple(points)
        self.weights = w
        self.tol = tol
        self._index = {p: i for i, p in enumerate(points)}
        self._mass: dict[int, float] = {}

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"FiniteProbSpace(points={list(self.points)}, weights={self.weights.tolist()})"

    @property
    def omega(self) -> Event:
        return Event((1 << len(self.points)) - 1)

    def event(self, labels: Iterable[Hashable]) -> Event:
        mask = 0
        for lab in labels:
            try:
                mask |= 1 << self._index[lab]
            except KeyError:
                raise ModelLookupError(f"unknown sample point {lab!r}") from None
        return Event(mask)

    def labels(self, e: Event) -> list:
        return [self.points[i] for i in e.indices()]

    def prob(self, e: Event) -> float:
        m = e.mask
        cached = self._mass.get(m)
        if cached is None:
            cached = float(sum(self.weights[i] for i in e.indices()))
            self._mass[m] = cached
        return cached

    def null_points(self) -> list[int]:
        return [i for i, w in enumerate(self.weights) if w == 0.0]

    def all_events(self) -> list[Event]:
        return [Event(m) for m in range(1 << len(self.points))]


class RandomVariable:
    """A total map from sample points to a finite set of outcomes."""

    def __init__(self, name: str, values: Sequence[Hashable], outcomes: Sequence[Hashable] | None = None):
        self.name = name
        self.values = tuple(values)
        if outcomes is None:
            uniq = list(dict.fromkeys(self.values))
            if all(isinstance(v, Real) and not isinstance(v, bool) for v in uniq):
                uniq.sort()
            outcomes = uniq
        self.outcomes = tuple(outcomes)
        missing = set(self.values) - set(self.outcomes)
        if missing:
            raise InputError(f"values {sorted(map(repr, missing))} missing from outcomes of {name!r}")

    def __repr__(self) -> str:
        return f"RandomVariable({self.name!r}, {list(self.values)})"

    def level_set(self, x) -> Event:
        mask = 0
        for i, v in enumerate(self.values):
            if v == x:
                mask |= 1 << i
        return Event(mask)

    @classmethod
    def indicator(cls, name: str, e: Event, n: int) -> "RandomVariable":
        return cls(name, [1 if i in e else 0 for i in range(n)], outcomes=(0, 1))


# ---------------------------------------------------------------------------
# operations on a space


def cond_prob(space: FiniteProbSpace, context: Event, a: RandomVariable, x) -> float:
    """``P(a = x | C)`` by the Bayes formula."""
    pc = space.prob(context)
    if pc <= space.tol.cond:
        raise ConditioningError(space.labels(context), "context", None, pc)
    return space.prob(context & a.level_set(x)) / pc


def context_update(space: FiniteProbSpace, context: Event, a: RandomVariable, x) -> Event:
    """``C -> C ∩ {a = x}``."""
    out = context & a.level_set(x)
    p = space.prob(out)
    if p <= space.tol.cond:
        raise ConditioningError(space.labels(context), a.name, x, p)
    return out


def compose_rv(a: RandomVariable, f: Callable | Mapping, name: str | None = None) -> RandomVariable:
    """The random variable ``f(a)``; ``f`` must be defined on every outcome of ``a``."""
    table = {}
    for x in a.outcomes:
        try:
            table[x] = f[x] if isinstance(f, Mapping) else f(x)
        except Exception as exc:
            raise InputError(f"outcome map undefined at {x!r}") from exc
    outs = list(dict.fromkeys(table[x] for x in a.outcomes))
    if all(isinstance(v, Real) and not isinstance(v, bool) for v in outs):
        outs.sort()
    return RandomVariable(name or f"f({a.name})", [table[v] for v in a.values], outcomes=outs)


@dataclass(frozen=True)
class Canonicalizer:
    """Quotient by null sets: drops zero-weight points.

    ``keep`` lists the retained point indices of the original space.
    """

    original: FiniteProbSpace
    space: FiniteProbSpace
    keep: tuple[int, ...]

    def event(self, e: Event) -> Event:
        mask = 0
        for j, i in enumerate(self.keep):
            if i in e:
                mask |= 1 << j
        return Event(mask)

    def rv(self, a: RandomVariable) -> RandomVariable:
        return RandomVariable(a.name, [a.values[i] for i in self.keep], outcomes=a.outcomes)

    def equivalent_events(self, e1: Event, e2: Event) -> bool:
        """``P(e1 Δ e2) = 0``, up to the points dropped as null."""
        return all((i in e1) == (i in e2) for i in self.keep)

    def equivalent_rvs(self, a1: RandomVariable, a2: RandomVariable) -> bool:
        """``P(a1 != a2) = 0``."""
        return all(a1.values[i] == a2.values[i] for i in self.keep)


def quotient_null(space: FiniteProbSpace) -> Canonicalizer:
    """Drop points whose weight is at most ``tol.cond``.

    That is the same cut below which conditioning is undefined, so round-off
    weights such as 1e-16 count as null.  The survivors are renormalized.
    """
    keep = tuple(i for i, w in enumerate(space.weights) if w > space.tol.cond)
    if len(keep) == len(space):
        return Canonicalizer(space, space, keep)
    w = space.weights[list(keep)]
    reduced = FiniteProbSpace([space.points[i] for i in keep], w / math.fsum(w), space.tol)
    return Canonicalizer(space, reduced, keep)


@dataclass(frozen=True)
class UniquenessResult:
    observables_separated: bool
    contexts_separated: bool
    observable_collision: tuple | None = None
    context_collision: tuple | None = None


def uniqueness_check(
    space: FiniteProbSpace,
    variables: Sequence[RandomVariable] | None = None,
    contexts: Sequence[Event] | None = None,
) -> UniquenessResult:
    """Check that probabilities separate observables and contexts.

    Contexts default to every event of positive probability.  Observables
    default to the indicator variables of all events, which is also the
    family used to separate contexts.  Distinct variables are compared as
    value tables; distinct contexts as point sets.
    """
    n = len(space)
    if contexts is None:
        contexts = [e for e in space.all_events() if space.prob(e) > space.tol.cond]
    indicators = [RandomVariable.indicator(f"1[{e.mask}]", e, n) for e in space.all_events()]
    if variables is None:
        variables = indicators
    tol = space.tol.separation

    # Context rows: P_C(a = 1) for every indicator a; the indicator family is
    # enough to separate contexts.
    masses = np.array([space.prob(c) for c in contexts])
    inter = np.array([[space.prob(c & Event(m)) for m in range(1 << n)] for c in contexts])
    rows = inter / masses[:, None]
    ctx_collision = None
    for i, j in combinations(range(len(contexts)), 2):
        if contexts[i] != contexts[j] and np.max(np.abs(rows[i] - rows[j])) <= tol:
            ctx_collision = (space.labels(contexts[i]), space.labels(contexts[j]))
            break

    # Observable rows: the full distribution of each variable in each context.
    obs_collision = None
    labels = list(dict.fromkeys(x for a in variables for x in a.outcomes))
    col = {x: k for k, x in enumerate(labels)}
    table = np.zeros((len(variables), len(labels), len(contexts)))
    for i, a in enumerate(variables):
        for x in a.outcomes:
            lv = a.level_set(x)
            table[i, col[x]] = [space.prob(c & lv) for c in contexts]
    table = (table / masses).reshape(len(variables), -1)
    for i, j in combinations(range(len(variables)), 2):
        if variables[i].values == variables[j].values:
            continue
        if np.max(np.abs(table[i] - table[j]), initial=0.0) <= tol:
            obs_collision = (variables[i].name, variables[j].name)
            break
    return UniquenessResult(obs_collision is None, ctx_collision is None, obs_collision, ctx_collision)


# ---------------------------------------------------------------------------
# the model


class ClassicalModel(ContextualModel):
    """Contextual model of a finite probability space.

    Parameters
    ----------
    space:
        The sample space.
    variables:
        Random variables, registered by name.  Each one is its own
        observable with a single (Bayes conditioning) instrument.
    contexts:
        Named events; ``"Omega"`` is always present.
    """

    def __init__(
        self,
        space: FiniteProbSpace,
        variables: Iterable[RandomVariable] = (),
        contexts: Mapping[str, Event] | None = None,
        tol: Tolerances | None = None,
    ):
        self.space = space
        self.tol = tol or space.tol
        self._vars: dict[str, RandomVariable] = {}
        self._levels: dict[str, dict] = {}
        self._insts: dict[str, ContextualInstrument] = {}
        for a in variables:
            self.add_variable(a)
        self._contexts = {"Omega": space.omega}
        for name, e in (contexts or {}).items():
            if space.prob(e) <= self.tol.cond:
                raise InvariantError("context has positive probability", 0.0, f"context {name!r} is null")
            self._contexts[name] = e

    def add_variable(self, a: RandomVariable) -> None:
        if len(a.values) != len(self.space):
            raise InputError(f"variable {a.name!r} has {len(a.values)} values for {len(self.space)} points")
        self._vars[a.name] = a
        self._levels[a.name] = {x: a.level_set(x) for x in a.outcomes}
        levels = self._levels[a.name]
        self._insts[a.name] = ContextualInstrument(
            a.name, a.name, lambda c, x, _lv=levels: c & _lv[x], kind="bayes"
        )

    def variable(self, name: str) -> RandomVariable:
        try:
            return self._vars[name]
        except KeyError:
            raise ModelLookupError(f"unknown observable {name!r}") from None

    def observables(self) -> list[str]:
        return list(self._vars)

    def outcomes(self, observable: str) -> tuple:
        return self.variable(observable).outcomes

    def contexts(self) -> dict[str, Event]:
        return self._contexts

    def context(self, c):
        c = super().context(c)
        if not isinstance(c, Event):
            raise ModelLookupError(f"{c!r} is not an event")
        return c

    def context_name(self, c) -> str:
        if isinstance(c, str):
            return c
        for name, e in self._contexts.items():
            if e == c:
                return name
        return "{" + ",".join(map(str, self.space.labels(c))) + "}"

    def distribution(self, context, observable: str) -> dict:
        c = self.context(context)
        pc = self.space.prob(c)
        if pc <= self.tol.cond:
            raise ConditioningError(self.context_name(c), "context", None, pc)
        self.variable(observable)
        return {x: self.space.prob(c & lv) / pc for x, lv in self._levels[observable].items()}

    def instruments(self, observable: str | None = None) -> list[ContextualInstrument]:
        if observable is None:
            return list(self._insts.values())
        self.variable(observable)
        return [self._insts[observable]]

    def default_contexts(self, seed: int | None = None) -> dict[str, Event]:
        """All events of positive probability when ``|Omega| <= 8``, else the named ones."""
        if len(self.space) > 8:
            return dict(self._contexts)
        out = {}
        for e in self.space.all_events():
            if self.space.prob(e) > self.tol.cond:
                out[self.context_name(e)] = e
        return out
