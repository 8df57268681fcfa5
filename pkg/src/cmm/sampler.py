"""Seeded Monte-Carlo sampling of measurement outcomes.

Random numbers come from :class:`CounterRNG`, a counter-based SplitMix64
generator.  The algorithm, in full, for a 64-bit ``key``:

* ``mix64(z)``: ``z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27;
  z *= 0x94D049BB133111EB; z ^= z >> 31`` (all arithmetic mod 2**64);
* draw number ``i = 0, 1, 2, ...`` is ``mix64(key + (i + 1) * 0x9E3779B97F4A7C15)``;
* a uniform double is ``(draw >> 11) * 2**-53``;
* child stream ``j`` of ``key`` has key ``mix64(mix64(key ^ 0x6A09E667F3BCC909) + j * 0x9E3779B97F4A7C15)``.

Uniforms are mapped to outcomes by inverse CDF over the declared outcome
order: the first index whose cumulative probability exceeds ``u``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import ContextualModel, _inst, _obs
from .errors import CMMError, InputError

GAMMA = 0x9E3779B97F4A7C15
SPLIT = 0x6A09E667F3BCC909
MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    """SplitMix64 finaliser on a Python int."""
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(0xBF58476D1CE4E5B9)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


class CounterRNG:
    """Counter-based, splittable 64-bit generator (stateless per draw)."""

    def __init__(self, key: int):
        if not 0 <= int(key) <= MASK:
            raise InputError("seed must be an unsigned 64-bit integer")
        self.key = int(key)
        self.counter = 0

    def uint64(self, n: int) -> np.ndarray:
        """The next ``n`` raw draws; advances the counter."""
        ctr = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            z = np.uint64(self.key) + ctr * np.uint64(GAMMA)
            return _mix64_array(z)

    def uniform(self, n: int) -> np.ndarray:
        return (self.uint64(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def split(self, j: int) -> "CounterRNG":
        return CounterRNG(mix64(mix64(self.key ^ SPLIT) + j * GAMMA))


def categorical(probs: Sequence[float], u: np.ndarray) -> np.ndarray:
    """Inverse-CDF indices for uniforms ``u``; zero-probability outcomes never occur."""
    p = np.asarray(probs, dtype=float)
    cdf = np.cumsum(p)
    idx = np.searchsorted(cdf, u, side="right")
    # cdf[-1] can fall just short of 1; send the overflow to the last outcome with mass
    last = int(np.flatnonzero(p > 0)[-1])
    return np.minimum(idx, last)


@dataclass(frozen=True)
class OutcomeSequence:
    context: str
    observable: str
    labels: tuple
    indices: np.ndarray = field(repr=False)
    seed: int
    N: int

    @property
    def outcomes(self) -> list:
        return [self.labels[i] for i in self.indices]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "outcome"])
        for j, i in enumerate(self.indices):
            w.writerow([j, self.labels[i]])
        return buf.getvalue()


@dataclass(frozen=True)
class PairedSequence:
    """Trials ``z_j = (x_j, y_j)`` of ``A`` followed by ``B``.

    ``y_index`` is ``-1`` on trials flagged in ``failed`` (the update after
    ``x_j`` was undefined).
    """

    context: str
    observables: tuple[str, str]
    labels: tuple[tuple, tuple]
    x_index: np.ndarray = field(repr=False)
    y_index: np.ndarray = field(repr=False)
    failed: np.ndarray = field(repr=False)
    seed: int
    N: int

    @property
    def pairs(self) -> list[tuple]:
        la, lb = self.labels
        return [(la[x], None if y < 0 else lb[y]) for x, y in zip(self.x_index, self.y_index)]

    def joint_counts(self) -> np.ndarray:
        out = np.zeros((len(self.labels[0]), len(self.labels[1])), dtype=np.int64)
        ok = ~self.failed
        np.add.at(out, (self.x_index[ok], self.y_index[ok]), 1)
        return out

    def joint_frequencies(self) -> dict:
        c = self.joint_counts()
        return {(x, y): float(c[i, j] / self.N) for i, x in enumerate(self.labels[0])
                for j, y in enumerate(self.labels[1])}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "outcome", "outcome2"])
        for j, (x, y) in enumerate(self.pairs):
            w.writerow([j, x, "" if y is None else y])
        return buf.getvalue()


@dataclass(frozen=True)
class FrequencyEstimate:
    labels: tuple
    counts: tuple[int, ...]
    N: int

    @property
    def nu(self) -> dict:
        return {x: c / self.N for x, c in zip(self.labels, self.counts)}

    def bound(self, p: float, k: float = 3.0) -> float:
        """``k`` standard deviations of a frequency with true value ``p``."""
        return k * math.sqrt(p * (1.0 - p) / self.N)

    def to_dict(self) -> dict:
        return {"labels": list(self.labels), "counts": list(self.counts), "N": self.N,
                "nu": [c / self.N for c in self.counts]}


def _context_label(model: ContextualModel, context) -> str:
    return model.context_name(context)


def sample(model: ContextualModel, context, inst_a, N: int, seed: int) -> OutcomeSequence:
    """``N`` i.i.d. outcomes of ``A`` in context ``C``."""
    if N < 1:
        raise InputError("N must be at least 1")
    a = _obs(model, inst_a)
    dist = model.distribution(model.context(context), a)
    labels = tuple(dist)
    idx = categorical(list(dist.values()), CounterRNG(seed).uniform(N))
    return OutcomeSequence(_context_label(model, context), a, labels, idx, seed, N)


def estimate(seq: OutcomeSequence) -> FrequencyEstimate:
    if seq.N < 1:
        raise InputError("empty sequence")
    counts = np.bincount(seq.indices, minlength=len(seq.labels))
    return FrequencyEstimate(seq.labels, tuple(int(c) for c in counts), seq.N)


def sample_sequential(model: ContextualModel, context, inst_a, inst_b, N: int, seed: int) -> PairedSequence:
    """Measure ``A`` then ``B`` on a fresh copy of ``C`` in each of ``N`` trials.

    ``x`` uses child stream 0 of the seed and ``y`` child stream 1.  Since the
    updated context depends only on ``x``, the conditional distribution of
    ``B`` is computed once per outcome.
    """
    if N < 1:
        raise InputError("N must be at least 1")
    c = model.context(context)
    ia = _inst(model, inst_a)
    b = _obs(model, inst_b)
    dist_a = model.distribution(c, ia.observable)
    la = tuple(dist_a)
    lb = tuple(model.outcomes(b))
    root = CounterRNG(seed)
    xs = categorical(list(dist_a.values()), root.split(0).uniform(N))
    us = root.split(1).uniform(N)
    ys = np.full(N, -1, dtype=np.int64)
    failed = np.zeros(N, dtype=bool)
    for i, x in enumerate(la):
        sel = xs == i
        if not sel.any():
            continue
        try:
            cond = model.distribution(ia.update(c, x), b)
        except CMMError:
            failed[sel] = True
            continue
        ys[sel] = categorical([cond[y] for y in lb], us[sel])
    return PairedSequence(_context_label(model, context), (ia.observable, b), (la, lb), xs, ys, failed, seed, N)


@dataclass(frozen=True)
class CombinabilityResult:
    """Pair-sequence marginals versus stand-alone runs.

    ``residuals[(observable, x)]`` is the stand-alone frequency minus the
    marginal of the paired sequence.
    """

    marginals_match: bool
    max_residual: float
    threshold: float
    residuals: dict

    def to_dict(self) -> dict:
        return {"marginals_match": self.marginals_match, "max_residual": self.max_residual,
                "threshold": self.threshold,
                "residuals": [[a, x, r] for (a, x), r in self.residuals.items()]}


def combinability_check(pair: PairedSequence, single_a: OutcomeSequence, single_b: OutcomeSequence) -> CombinabilityResult:
    """Compare the marginals of ``pair`` with single-observable runs at the same ``N``.

    The marginals match when every residual is below ``2 * 3 * sqrt(0.25 / N)``.
    """
    if pair.N < 1:
        raise InputError("empty sequence")
    if single_a.N != pair.N or single_b.N != pair.N:
        raise InputError("sequences must have matching N")
    joint = pair.joint_counts() / pair.N
    marg = {pair.observables[0]: joint.sum(axis=1), pair.observables[1]: joint.sum(axis=0)}
    residuals = {}
    for seq, labels in ((single_a, pair.labels[0]), (single_b, pair.labels[1])):
        nu = estimate(seq).nu
        m = marg[seq.observable]
        for i, x in enumerate(labels):
            residuals[seq.observable, x] = nu.get(x, 0.0) - float(m[i])
    threshold = 2.0 * 3.0 * math.sqrt(0.25 / pair.N)
    worst = max(abs(r) for r in residuals.values())
    return CombinabilityResult(worst < threshold, worst, threshold, residuals)


def combinability_run(model: ContextualModel, context, inst_a, inst_b, N: int, seed: int) -> CombinabilityResult:
    """Sample the pair and both stand-alone sequences from split streams of ``seed``."""
    root = CounterRNG(seed)
    keys = [root.split(k).key for k in range(3)]
    pair = sample_sequential(model, context, inst_a, inst_b, N, keys[0])
    sa = sample(model, context, _inst(model, inst_a).observable, N, keys[1])
    sb = sample(model, context, _obs(model, inst_b), N, keys[2])
    return combinability_check(pair, sa, sb)
