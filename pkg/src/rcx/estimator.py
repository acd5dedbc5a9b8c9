"""Empirical random-context estimator of transition probabilities.

For every string ``w`` the estimator scores each symbol by the upper
confidence value ``p̂(a|w) + conf(w, a)`` and takes the minorant estimate
``p̂₋(a|w)`` as the minimum score over all left extensions of w.  Walking
back into a query past, the first depth at which the minorant estimates sum
to at least one is the truncation point ``ĥ(x)``; the prediction adds the
per-depth increments of ``p̂₋`` and renormalizes the last one.

Scores are constant on automaton classes of the count index, so the minimum
over all (infinitely many) left extensions reduces to a subtree minimum plus
the constant ``1/|A| + 1`` that every non-occurring extension scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Distribution, Past
from .counts import CountIndex, Sample
from .errors import ContextExhausted, InvariantViolation, ParameterError

SQRT2 = math.sqrt(2.0)
CONF_SQRT_COEF = 2 * SQRT2 + 2
CONF_LINEAR_COEF = 3 + 2 * SQRT2
BOUND_SQRT_COEF = 4 + 4 * SQRT2
BOUND_LINEAR_COEF = 6 + 4 * SQRT2


def t_star(n: int, delta: float, alphabet_size: int) -> float:
    """Per-symbol log factor ln(|A| (14 + 2 log₂ n)(1 + n(n-1)/2) / δ)."""
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    if not 0 < delta < 1:
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if int(alphabet_size) != alphabet_size or alphabet_size < 1:
        raise ParameterError(f"alphabet size must be a positive integer, got {alphabet_size}")
    return math.log(alphabet_size * (14 + 2 * math.log2(n)) * (1 + n * (n - 1) / 2) / delta)


def conf_radius(next_count, occurrences, tstar: float):
    """Confidence radius from N_n(wa) and N_{n-1}(w); 1 when N_{n-1}(w) = 0.

    Works elementwise on arrays.
    """
    nxt = np.asarray(next_count, dtype=float)
    occ = np.asarray(occurrences, dtype=float)
    safe = np.where(occ > 0, occ, 1.0)
    p = nxt / safe
    raw = CONF_SQRT_COEF * np.sqrt(p * tstar / safe) + CONF_LINEAR_COEF * tstar / safe
    out = np.where(occ > 0, np.minimum(raw, 1.0), 1.0)
    return float(out) if out.ndim == 0 else out


def oracle_bound(t: float, p_minus_sum: float, count: int) -> float:
    """Right-hand side of the pastwise oracle inequality at a truncation depth.

    ``t`` is the full log factor |A|·t*, ``p_minus_sum`` the true minorant mass
    at the depth and ``count`` the occurrences N_{n-1} of that suffix.
    """
    if count <= 0:
        return math.inf
    return (1 - p_minus_sum) + BOUND_SQRT_COEF * math.sqrt(t / count) + BOUND_LINEAR_COEF * t / count


@dataclass(frozen=True)
class EstimatorConfig:
    delta: float

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ParameterError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class Component:
    """One mixture term of the empirical RCR: depth, weight and kernel."""

    k: int
    weight: float
    kernel: Distribution


@dataclass(frozen=True)
class Query:
    """Minorant estimates along one past, depth 0..ĥ."""

    h: int
    minorants: np.ndarray  # shape (h+1, |A|)


@dataclass(eq=False)
class FittedEstimator:
    index: CountIndex
    delta: float
    t_star: float = field(init=False)
    t: float = field(init=False)

    def __post_init__(self):
        EstimatorConfig(self.delta)
        self.alphabet = self.index.alphabet
        self.n = self.index.n
        k = self.alphabet.size
        self.t_star = t_star(self.n, self.delta, k)
        self.t = k * self.t_star
        self.floor = 1.0 / k + 1.0
        idx = self.index
        occ = idx.occurrences.astype(float)[:, None]
        nxt = idx.next_counts.astype(float)
        # every class occurs in X_1^{n-1}, so occ > 0 throughout
        self._p_hat = nxt / occ
        self._conf = conf_radius(nxt, np.broadcast_to(occ, nxt.shape), self.t_star)
        score = self._p_hat + self._conf
        sub = np.minimum(score, self.floor)
        for v in idx._order:
            parent = idx._link[v]
            np.minimum(sub[parent], sub[v], out=sub[parent])
        self._subtree_min = sub

    # -- per-string quantities -----------------------------------------------

    def p_hat(self, w: Sequence[int], a: int) -> float:
        v = self.index.locate(w)
        if v is None:
            return 1.0 / self.alphabet.size
        return float(self._p_hat[v, a])

    def conf(self, w: Sequence[int], a: int) -> float:
        v = self.index.locate(w)
        if v is None:
            return 1.0
        return float(self._conf[v, a])

    def _minorants_at(self, state: int | None) -> np.ndarray:
        if state is None:
            return np.full(self.alphabet.size, self.floor)
        return self._subtree_min[state]

    def p_hat_min(self, w: Sequence[int], a: int) -> float:
        return float(self._minorants_at(self.index.locate(w))[a])

    # -- queries ---------------------------------------------------------------

    def query(self, x: Past | Sequence[int]) -> Query:
        buf = x.buffer if isinstance(x, Past) else tuple(x)
        rows = []
        h = 0
        for h, state in enumerate(self.index.walk_left(buf)):
            pm = self._minorants_at(state)
            rows.append(pm)
            if pm.sum() >= 1.0:
                return Query(h, np.array(rows))
        # the walk ended with every suffix of the buffer occurring and no crossing
        raise ContextExhausted(len(buf), len(buf) + 1,
                               f"past of depth {len(buf)} occurs in the sample without "
                               f"certifying the truncation point; supply at least "
                               f"{len(buf) + 1} symbols (any depth >= {self.n} suffices)")

    def h_hat(self, x: Past | Sequence[int]) -> int:
        return self.query(x).h

    @staticmethod
    def _increments(q: Query) -> np.ndarray:
        prev = np.vstack([np.zeros((1, q.minorants.shape[1])), q.minorants[:-1]])
        inc = q.minorants - prev
        if np.any(inc < 0):
            raise InvariantViolation("minorant estimates decreased with depth")
        return inc

    def rcr_components(self, x: Past | Sequence[int]) -> list[Component]:
        q = self.query(x)
        inc = self._increments(q)
        uniform = Distribution.uniform(self.alphabet)
        out = []
        for k in range(q.h):
            lam = inc[k].sum()
            kern = Distribution(self.alphabet, inc[k] / lam) if lam > 0 else uniform
            out.append(Component(k, float(lam), kern))
        below = q.minorants[q.h - 1].sum() if q.h > 0 else 0.0
        denom = inc[q.h].sum()
        if not denom > 0:
            raise InvariantViolation("zero increment at the truncation point")
        out.append(Component(q.h, float(1.0 - below), Distribution(self.alphabet, inc[q.h] / denom)))
        return out

    def predict_rcr(self, x: Past | Sequence[int]) -> Distribution:
        probs = np.zeros(self.alphabet.size)
        for comp in self.rcr_components(x):
            probs += comp.weight * comp.kernel.probs
        return Distribution(self.alphabet, probs)

    def predict_alt(self, x: Past | Sequence[int]) -> Distribution:
        q = self.query(x)
        return Distribution(self.alphabet, self._closed_form(q))

    def _closed_form(self, q: Query) -> np.ndarray:
        inc = self._increments(q)
        prev = q.minorants[q.h - 1] if q.h > 0 else np.zeros(self.alphabet.size)
        denom = inc[q.h].sum()
        if not denom > 0:
            raise InvariantViolation("zero increment at the truncation point")
        return prev + (1.0 - prev.sum()) * inc[q.h] / denom

    def predict(self, x: Past | Sequence[int]) -> Distribution:
        return self.predict_alt(x)

    def predict_probs(self, x: Past | Sequence[int]) -> np.ndarray:
        """Like :meth:`predict` but returns the raw probability vector."""
        return self._closed_form(self.query(x))

    def oracle_bound(self, p_minus_sum: float, count: int) -> float:
        return oracle_bound(self.t, p_minus_sum, count)


def fit(sample: Sample | CountIndex, delta: float) -> FittedEstimator:
    """Fit on a sample; passing a prebuilt index reuses it across deltas."""
    index = sample if isinstance(sample, CountIndex) else CountIndex(sample)
    return FittedEstimator(index, delta)
