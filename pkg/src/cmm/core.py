"""Backend-agnostic calculus of contextual measurement models.

Every function takes a :class:`ContextualModel` and works only through its
interface: outcome distributions ``P_C^A`` and instrument updates
``C -> T_A(x) C``.  Contexts may be passed either as backend handles or as
names registered with the model.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from itertools import combinations
from numbers import Real
from typing import Any, Callable, Hashable, Iterable, Sequence

from .errors import (
    ConditioningError,
    DomainError,
    InputError,
    ModelLookupError,
    PreconditionError,
)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class ContextualInstrument:
    """An observable paired with one context-update rule ``T_A(x)``."""

    observable: str
    name: str
    update: Callable[[Any, Hashable], Any] = field(compare=False, repr=False)
    kind: str = "generic"

    def __str__(self) -> str:
        return self.name


class ContextualModel(ABC):
    """Interface shared by the classical, quantum and measure-space backends."""

    tol: Tolerances = DEFAULT

    @abstractmethod
    def observables(self) -> list[str]:
        """Names of all observables."""

    @abstractmethod
    def outcomes(self, observable: str) -> tuple:
        """Outcome labels of ``observable`` in declared order."""

    @abstractmethod
    def distribution(self, context, observable: str) -> dict:
        """``{x: P_C(A=x)}`` in declared outcome order."""

    @abstractmethod
    def instruments(self, observable: str | None = None) -> list[ContextualInstrument]:
        """Instruments for one observable, or for all observables."""

    @abstractmethod
    def contexts(self) -> dict[str, Any]:
        """Named contexts known to the model."""

    def context(self, c):
        """Resolve a context name to its handle; handles pass through."""
        if isinstance(c, str):
            try:
                return self.contexts()[c]
            except KeyError:
                raise ModelLookupError(f"unknown context {c!r}") from None
        return c

    def context_name(self, c) -> str:
        if isinstance(c, str):
            return c
        for name, handle in self.contexts().items():
            if handle is c:
                return name
        return repr(c)

    def instrument(self, observable: str, name: str | None = None) -> ContextualInstrument:
        """The named instrument of ``observable`` (default: its first one)."""
        insts = self.instruments(observable)
        if not insts:
            raise ModelLookupError(f"observable {observable!r} has no instrument")
        if name is None:
            return insts[0]
        for inst in insts:
            if inst.name == name:
                return inst
        raise ModelLookupError(f"no instrument {name!r} for observable {observable!r}")

    def find_instrument(self, name: str) -> ContextualInstrument:
        for inst in self.instruments():
            if inst.name == name:
                return inst
        if name in self.observables():
            return self.instrument(name)
        raise ModelLookupError(f"unknown instrument {name!r}")

    def default_contexts(self, seed: int | None = None) -> dict[str, Any]:
        """Context sample used by :func:`feature_report` when none is given."""
        return dict(self.contexts())

    def chsh_maximizer(self) -> Callable[..., Any] | None:
        """Backend-specific CHSH maximiser, if the backend offers one."""
        return None


# ---------------------------------------------------------------------------
# argument normalisation


def _inst(model: ContextualModel, inst) -> ContextualInstrument:
    if isinstance(inst, ContextualInstrument):
        return inst
    return model.find_instrument(inst)


def _obs(model: ContextualModel, obs) -> str:
    if isinstance(obs, ContextualInstrument):
        return obs.observable
    if obs not in model.observables():
        raise ModelLookupError(f"unknown observable {obs!r}")
    return obs


def _prob(model: ContextualModel, c, observable: str, x) -> float:
    dist = model.distribution(c, observable)
    try:
        return dist[x]
    except KeyError:
        raise ModelLookupError(f"{x!r} is not an outcome of {observable!r}") from None


def _update(model: ContextualModel, c, inst: ContextualInstrument, x):
    p = _prob(model, c, inst.observable, x)
    if p <= model.tol.cond:
        raise ConditioningError(model.context_name(c), inst.observable, x, p)
    return inst.update(c, x)


def _numeric(values: Iterable, what: str) -> None:
    for v in values:
        if isinstance(v, bool) or not isinstance(v, Real):
            raise DomainError(f"{what} has non-numeric outcome {v!r}")


# ---------------------------------------------------------------------------
# probabilities


def prob_dist(model: ContextualModel, context, observable) -> dict:
    """The outcome distribution ``P_C^A``."""
    return dict(model.distribution(model.context(context), _obs(model, observable)))


def average(model: ContextualModel, context, observable) -> float:
    """``<A>_C = sum_x x P_C(A=x)``; outcomes must be real numbers."""
    dist = prob_dist(model, context, observable)
    _numeric(dist, f"observable {observable!r}")
    return float(sum(x * p for x, p in dist.items()))


def conditional_prob(model: ContextualModel, context, inst_a, x, observable_b, y) -> float:
    """``P_C(B=y | A=x)`` computed in the context updated by ``inst_a``."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    return _prob(model, _update(model, c, ia, x), b, y)


def sequential_prob(model: ContextualModel, context, steps: Sequence[tuple]) -> float:
    """Probability of a measurement sequence ``[(I_1, x_1), (I_2, x_2), ...]``.

    Contexts are chained through the instrument updates.  The last step may
    name a bare observable since its update is never applied.  A prefix with
    probability ``<= tol.cond`` makes the whole sequence probability zero.
    """
    c = model.context(context)
    p = 1.0
    for k, (step, x) in enumerate(steps):
        obs = step.observable if isinstance(step, ContextualInstrument) else _obs(model, step)
        q = _prob(model, c, obs, x)
        p *= q
        if k == len(steps) - 1:
            break
        if q <= model.tol.cond:
            return 0.0
        c = _inst(model, step).update(c, x)
    return p


def conditional_jpd(model: ContextualModel, context, inst_a, observable_b) -> dict:
    """Sequential joint distribution ``P_C(A=x, B=y) = P_C(A=x) P_C(B=y|A=x)``."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    out = {}
    for x, px in model.distribution(c, ia.observable).items():
        if px <= model.tol.cond:
            for y in model.outcomes(b):
                out[(x, y)] = 0.0
            continue
        after = ia.update(c, x)
        for y, py in model.distribution(after, b).items():
            out[(x, y)] = px * py
    return out


@dataclass(frozen=True)
class OrderEffect:
    present: bool
    max_discrepancy: float
    witness: tuple | None


def order_effect(model: ContextualModel, context, inst_a, inst_b) -> OrderEffect:
    """Compare ``P_C(A=x, B=y)`` with ``P_C(B=y, A=x)`` over all outcome pairs."""
    ia, ib = _inst(model, inst_a), _inst(model, inst_b)
    ab = conditional_jpd(model, context, ia, ib.observable)
    ba = conditional_jpd(model, context, ib, ia.observable)
    worst, witness = 0.0, None
    for (x, y), p in ab.items():
        d = abs(p - ba[(y, x)])
        if witness is None or d > worst:
            worst, witness = d, (x, y)
    return OrderEffect(worst > model.tol.oe, worst, witness)


def conditionally_compatible(model: ContextualModel, context, inst_a, inst_b) -> bool:
    return not order_effect(model, context, inst_a, inst_b).present


def bayes_infer(model: ContextualModel, context, inst_a, x, inst_b) -> dict:
    """Posterior over the hypotheses ``X_B`` after observing ``A=x``.

    Uses the standard Bayes theorem with likelihoods ``P_C(A=x|B=H)`` from the
    ``B`` instrument; requires the two instruments to be conditionally
    compatible in the context.
    """
    c = model.context(context)
    ia, ib = _inst(model, inst_a), _inst(model, inst_b)
    if not conditionally_compatible(model, c, ia, ib):
        raise PreconditionError(
            f"{ia.name} and {ib.name} are not conditionally compatible in {model.context_name(c)}"
        )
    px = _prob(model, c, ia.observable, x)
    if px <= model.tol.cond:
        raise ConditioningError(model.context_name(c), ia.observable, x, px)
    joint = {}
    for h, ph in model.distribution(c, ib.observable).items():
        if ph <= model.tol.cond:
            joint[h] = 0.0
        else:
            joint[h] = ph * _prob(model, ib.update(c, h), ia.observable, x)
    total = sum(joint.values())
    return {h: v / total for h, v in joint.items()}


# ---------------------------------------------------------------------------
# interference


@dataclass(frozen=True)
class InterferenceDatum:
    """Interference term of the total-probability formula.

    ``regime`` is ``"trigonometric"`` when ``|lambda| <= 1``, ``"hyperbolic"``
    above that, and ``"degenerate"`` when ``lambda`` is undefined (a factor
    under the square root is numerically zero, or ``A`` is not dichotomous).
    """

    delta: float
    lam: float | None
    regime: str
    theta: float | None
    sign: int
    classical_part: float
    prob_b: float
    delta_crossterm: float | None = None

    def reconstruct(self, factors: tuple[float, float]) -> float:
        """``2 cos(theta) sqrt(f1 f2)`` for the trigonometric regime."""
        return 2.0 * math.cos(self.theta) * math.sqrt(factors[0] * factors[1])


def interference_factors(model: ContextualModel, context, inst_a, observable_b, y) -> list[float]:
    """``P_C(B=y|A=x) P_C(A=x)`` for every outcome ``x`` of ``A``."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    out = []
    for x, px in model.distribution(c, ia.observable).items():
        out.append(0.0 if px <= model.tol.cond else px * _prob(model, ia.update(c, x), b, y))
    return out


def ftp_interference(model: ContextualModel, context, inst_a, observable_b, y) -> InterferenceDatum:
    c = model.context(context)
    b = _obs(model, observable_b)
    factors = interference_factors(model, c, inst_a, b, y)
    pb = _prob(model, c, b, y)
    classical = math.fsum(factors)
    delta = pb - classical
    sign = (delta > 0) - (delta < 0)
    if len(factors) != 2 or min(factors) <= model.tol.cond:
        return InterferenceDatum(delta, None, "degenerate", None, sign, classical, pb)
    lam = delta / (2.0 * math.sqrt(factors[0] * factors[1]))
    if abs(lam) <= 1.0 + model.tol.lambda_slack:
        theta = math.acos(max(-1.0, min(1.0, lam)))
        return InterferenceDatum(delta, lam, "trigonometric", theta, sign, classical, pb)
    return InterferenceDatum(delta, lam, "hyperbolic", None, sign, classical, pb)


# ---------------------------------------------------------------------------
# replicability


def replicability_residual(model: ContextualModel, context, inst_a) -> tuple[float, Hashable | None]:
    """Largest ``1 - P_{C_{A=x}}(A=x)`` over admissible ``x``, with its outcome."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    worst, arg = 0.0, None
    for x, px in model.distribution(c, ia.observable).items():
        if px <= model.tol.cond:
            continue
        r = 1.0 - _prob(model, ia.update(c, x), ia.observable, x)
        if arg is None or r > worst:
            worst, arg = r, x
    return worst, arg


def replicability(model: ContextualModel, context, inst_a) -> bool:
    return replicability_residual(model, context, inst_a)[0] <= model.tol.rep


def rre_residual(model: ContextualModel, context, inst_a, inst_b) -> tuple[float, tuple | None]:
    """Largest violation of the two response-replicability identities.

    Returns ``(residual, (order, x, y))`` where ``order`` is ``"ABA"`` or
    ``"BAB"``.
    """
    c = model.context(context)
    ia, ib = _inst(model, inst_a), _inst(model, inst_b)
    worst, arg = 0.0, None
    for x in model.outcomes(ia.observable):
        for y in model.outcomes(ib.observable):
            for order, seq3 in (
                ("ABA", [(ia, x), (ib, y), (ia, x)]),
                ("BAB", [(ib, y), (ia, x), (ib, y)]),
            ):
                r = abs(sequential_prob(model, c, seq3) - sequential_prob(model, c, seq3[:2]))
                if arg is None or r > worst:
                    worst, arg = r, (order, x, y)
    return worst, arg


def rre_check(model: ContextualModel, context, inst_a, inst_b) -> bool:
    return rre_residual(model, context, inst_a, inst_b)[0] <= model.tol.rep


# ---------------------------------------------------------------------------
# correlations and CHSH


def correlation(model: ContextualModel, context, inst_a, inst_b, force: bool = False) -> float:
    """``<AB>_C`` from the joint distribution of a conditionally compatible pair.

    With ``force=True`` the compatibility check is skipped and the
    A-then-B sequential distribution is used.
    """
    c = model.context(context)
    ia, ib = _inst(model, inst_a), _inst(model, inst_b)
    _numeric(model.outcomes(ia.observable), ia.observable)
    _numeric(model.outcomes(ib.observable), ib.observable)
    if not force and not conditionally_compatible(model, c, ia, ib):
        raise PreconditionError(
            f"{ia.name} and {ib.name} are not conditionally compatible in {model.context_name(c)}"
        )
    jpd = conditional_jpd(model, c, ia, ib.observable)
    return float(math.fsum(x * y * p for (x, y), p in jpd.items()))


def chsh_value(model: ContextualModel, context, insts_a: Sequence, insts_b: Sequence, force: bool = False) -> float:
    """``|<A1B1> + <A2B1> + <A1B2> - <A2B2>|``.

    All four pairs must be conditionally compatible unless ``force`` is set,
    in which case the sequential (A-then-B) value is returned.
    """
    a1, a2 = (_inst(model, i) for i in insts_a)
    b1, b2 = (_inst(model, i) for i in insts_b)
    for inst in (a1, a2, b1, b2):
        outs = model.outcomes(inst.observable)
        _numeric(outs, inst.observable)
        if any(abs(v) > 1.0 for v in outs):
            raise DomainError(f"{inst.observable} has outcomes outside [-1, 1]")
    e = {
        (i, j): correlation(model, context, ai, bj, force=force)
        for i, ai in ((1, a1), (2, a2))
        for j, bj in ((1, b1), (2, b2))
    }
    return abs(e[1, 1] + e[2, 1] + e[1, 2] - e[2, 2])


def chsh_from_correlations(corr) -> float:
    """CHSH expression from a 2x2 table ``corr[i][j] = <A_i B_j>``."""
    return abs(corr[0][0] + corr[1][0] + corr[0][1] - corr[1][1])


# ---------------------------------------------------------------------------
# dependence and entanglement


def _conditionals(model: ContextualModel, c, ia: ContextualInstrument, b: str):
    """Map admissible ``alpha`` to ``P_C(B=. | A=alpha)``; also the excluded ones."""
    admissible, excluded = {}, []
    for alpha, pa in model.distribution(c, ia.observable).items():
        if pa <= model.tol.cond:
            excluded.append(alpha)
        else:
            admissible[alpha] = model.distribution(ia.update(c, alpha), b)
    return admissible, excluded


def depends_on(model: ContextualModel, context, inst_a, observable_b, beta) -> bool:
    """Whether ``P_C(B=beta | A=alpha)`` differs between two outcomes ``alpha``."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    conds, _ = _conditionals(model, c, ia, b)
    if len(conds) < 2:
        raise PreconditionError(
            f"{ia.observable} has fewer than two admissible outcomes in {model.context_name(c)}"
        )
    if beta not in model.outcomes(b):
        raise ModelLookupError(f"{beta!r} is not an outcome of {b!r}")
    values = [d[beta] for d in conds.values()]
    return max(values) - min(values) > model.tol.dep


def ab_entangled(model: ContextualModel, context, inst_a, inst_b) -> bool:
    """Every outcome of ``B`` depends on the outcomes of ``A``."""
    b = _inst(model, inst_b).observable
    return all(depends_on(model, context, inst_a, b, beta) for beta in model.outcomes(b))


@dataclass(frozen=True)
class Concurrence:
    value: float
    excluded: tuple
    degenerate: bool


def concurrence(model: ContextualModel, context, inst_a, observable_b) -> Concurrence:
    """Sum over ``beta`` and unordered ``alpha != alpha'`` of conditional gaps.

    Outcomes of ``A`` with zero probability are excluded and reported.
    """
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    conds, excluded = _conditionals(model, c, ia, b)
    total = math.fsum(
        abs(conds[a1][beta] - conds[a2][beta])
        for beta in model.outcomes(b)
        for a1, a2 in combinations(conds, 2)
    )
    return Concurrence(total, tuple(excluded), bool(excluded))


def concurrence_dichotomous(model: ContextualModel, context, inst_a, observable_b) -> float:
    """``2 |P(B=b1|A=a2) - P(B=b1|A=a1)|`` for two-outcome observables."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    xs, ys = model.outcomes(ia.observable), model.outcomes(b)
    if len(xs) != 2 or len(ys) != 2:
        raise DomainError("dichotomous concurrence needs two-outcome observables")
    p1 = conditional_prob(model, c, ia, xs[0], b, ys[0])
    p2 = conditional_prob(model, c, ia, xs[1], b, ys[0])
    return 2.0 * abs(p2 - p1)


@dataclass(frozen=True)
class EPRResult:
    holds: bool
    complete: bool
    min_conditional: float


def epr_entangled(model: ContextualModel, context, inst_a, observable_b, gamma) -> EPRResult:
    """Perfect conditional correlation ``P_C(B=beta|A=alpha) = 1`` on ``gamma``."""
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, observable_b)
    pairs = list(gamma)
    alphas = [a for a, _ in pairs]
    betas = [bb for _, bb in pairs]
    if len(set(alphas)) != len(alphas):
        raise InputError(f"gamma repeats an A outcome: {pairs}")
    xs, ys = model.outcomes(ia.observable), model.outcomes(b)
    for a, bb in pairs:
        if a not in xs or bb not in ys:
            raise InputError(f"pair {(a, bb)!r} is not in X_A x X_B")
    complete = set(alphas) == set(xs) and set(betas) == set(ys) and len(set(betas)) == len(betas)
    worst = min((conditional_prob(model, c, ia, a, b, bb) for a, bb in pairs), default=1.0)
    return EPRResult(worst >= 1.0 - model.tol.epr, complete, worst)


def complete_gammas(xs: Sequence, ys: Sequence) -> list[list[tuple]]:
    """All complete pairings between equally sized outcome sets."""
    from itertools import permutations

    if len(xs) != len(ys):
        return []
    return [list(zip(xs, perm)) for perm in permutations(ys)]


# ---------------------------------------------------------------------------
# feature report


@dataclass
class DiagnosticsReport:
    """Yes/no feature table with witnesses that can be re-checked.

    Existential rows (FTP violation, OE, OE+RRE, Bell) carry the example that
    makes them true; universal rows (replicability, RRE) carry a
    counterexample when false.
    """

    ftp_violated: bool
    ftp_max_delta: float
    ftp_witness: dict | None
    order_effect: bool
    oe_max_discrepancy: float
    oe_witness: dict | None
    replicability: bool
    replicability_witness: dict | None
    rre: bool
    rre_witness: dict | None
    oe_and_rre: bool
    oe_rre_witness: dict | None
    bell_violated: bool
    chsh_max: float
    chsh_witness: dict | None
    n_contexts: int = 0
    n_instruments: int = 0

    ROWS = (
        ("violation of FTP", "ftp_violated"),
        ("OE", "order_effect"),
        ("replicability", "replicability"),
        ("RRE", "rre"),
        ("OE+RRE", "oe_and_rre"),
        ("violation of Bell inequalities", "bell_violated"),
    )

    def table(self) -> dict[str, bool]:
        return {label: getattr(self, attr) for label, attr in self.ROWS}

    def to_dict(self) -> dict:
        from dataclasses import asdict

        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticsReport":
        return cls(**d)

    def to_text(self) -> str:
        lines = [f"contexts: {self.n_contexts}   instruments: {self.n_instruments}"]
        for label, attr in self.ROWS:
            lines.append(f"  {label:<32} {'yes' if getattr(self, attr) else 'no'}")
        lines.append(f"  max |delta| = {self.ftp_max_delta:.6g}")
        lines.append(f"  max OE discrepancy = {self.oe_max_discrepancy:.6g}")
        lines.append(f"  CHSH max = {self.chsh_max:.6g}")
        for name in ("ftp_witness", "oe_witness", "replicability_witness", "rre_witness",
                     "oe_rre_witness", "chsh_witness"):
            w = getattr(self, name)
            if w:
                lines.append(f"  {name}: {w}")
        return "\n".join(lines)


def _context_items(model: ContextualModel, contexts) -> list[tuple[str, Any]]:
    if contexts is None:
        contexts = model.contexts()
    if isinstance(contexts, dict):
        return list(contexts.items())
    return [(model.context_name(c), model.context(c)) for c in contexts]


def feature_report(
    model: ContextualModel,
    contexts=None,
    instruments=None,
    chsh_max: tuple[float, dict] | None = None,
    seed: int | None = None,
) -> DiagnosticsReport:
    """Evaluate the distinguishing-feature checklist over a sample.

    ``contexts`` is a ``{name: handle}`` mapping or a list of names/handles
    (default: ``model.default_contexts()``); ``instruments`` defaults to all
    instruments of the model.  ``chsh_max`` may carry a precomputed
    ``(value, witness)``; when it is omitted and the backend offers a
    maximiser, that maximiser is run with ``seed``.  The larger of this and
    the best CHSH value over the sample is reported.
    """
    items = _context_items(model, model.default_contexts(seed) if contexts is None else contexts)
    insts = [_inst(model, i) for i in (instruments or model.instruments())]
    if not items or not insts:
        raise InputError("feature_report needs at least one context and one instrument")
    tol = model.tol

    ftp_max, ftp_w = 0.0, None
    oe_max, oe_w = 0.0, None
    rep_ok, rep_w = True, None
    rre_ok, rre_w = True, None
    both_w = None
    best_chsh, chsh_w = 0.0, None
    numeric = [
        i for i in insts
        if all(not isinstance(v, bool) and isinstance(v, Real) and abs(v) <= 1.0
               for v in model.outcomes(i.observable))
    ]

    for cname, c in items:
        for ia in insts:
            r, x = replicability_residual(model, c, ia)
            if r > tol.rep and rep_ok:
                rep_ok, rep_w = False, {"context": cname, "A": ia.name, "x": x, "residual": r}
        compat: dict[tuple[str, str], bool] = {}
        for ia in insts:
            for ib in insts:
                if ia.name == ib.name:
                    continue
                for y in model.outcomes(ib.observable):
                    d = ftp_interference(model, c, ia, ib.observable, y).delta
                    if abs(d) > ftp_max:
                        ftp_max = abs(d)
                        ftp_w = {"context": cname, "A": ia.name, "B": ib.observable, "y": y, "delta": d}
                oe = order_effect(model, c, ia, ib)
                compat[ia.name, ib.name] = not oe.present
                if oe.max_discrepancy > oe_max:
                    oe_max = oe.max_discrepancy
                    oe_w = {"context": cname, "A": ia.name, "B": ib.name,
                            "x": oe.witness[0], "y": oe.witness[1],
                            "discrepancy": oe.max_discrepancy}
                rr, arg = rre_residual(model, c, ia, ib)
                if rr > tol.rep and rre_ok:
                    rre_ok = False
                    rre_w = {"context": cname, "A": ia.name, "B": ib.name,
                             "sequence": arg[0], "x": arg[1], "y": arg[2], "residual": rr}
                if oe.present and rr <= tol.rep and (
                    both_w is None or oe.max_discrepancy > both_w["discrepancy"]
                ):
                    both_w = {"context": cname, "A": ia.name, "B": ib.name,
                              "discrepancy": oe.max_discrepancy, "rre_residual": rr}
        corr = {}
        for ia in numeric:
            for ib in numeric:
                if ia.name != ib.name and compat.get((ia.name, ib.name)):
                    corr[ia.name, ib.name] = correlation(model, c, ia, ib, force=True)
        for a1 in numeric:
            for a2 in numeric:
                for b1 in numeric:
                    for b2 in numeric:
                        keys = [(a1.name, b1.name), (a2.name, b1.name),
                                (a1.name, b2.name), (a2.name, b2.name)]
                        if not all(k in corr for k in keys):
                            continue
                        v = abs(corr[keys[0]] + corr[keys[1]] + corr[keys[2]] - corr[keys[3]])
                        if v > best_chsh:
                            best_chsh = v
                            chsh_w = {"context": cname, "A1": a1.name, "A2": a2.name,
                                      "B1": b1.name, "B2": b2.name, "value": v}
    if chsh_max is None and model.chsh_maximizer() is not None:
        chsh_max = model.chsh_maximizer()(seed=0 if seed is None else seed)
    if chsh_max is not None and chsh_max[0] > best_chsh:
        best_chsh, chsh_w = chsh_max

    return DiagnosticsReport(
        ftp_violated=ftp_max > tol.ftp,
        ftp_max_delta=ftp_max,
        ftp_witness=ftp_w if ftp_max > tol.ftp else None,
        order_effect=oe_max > tol.oe,
        oe_max_discrepancy=oe_max,
        oe_witness=oe_w if oe_max > tol.oe else None,
        replicability=rep_ok,
        replicability_witness=rep_w,
        rre=rre_ok,
        rre_witness=rre_w,
        oe_and_rre=both_w is not None,
        oe_rre_witness=both_w,
        bell_violated=best_chsh > 2.0 + tol.oe,
        chsh_max=best_chsh,
        chsh_witness=chsh_w,
        n_contexts=len(items),
        n_instruments=len(insts),
    )
