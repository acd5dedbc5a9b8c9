"""Simulatable process models with exact transition probabilities and minorants.

Three model kinds are supported:

* :class:`RenewalModel`, a stationary binary renewal process with arrival law
  given by an :class:`ArrivalDistribution`;
* :class:`ContextTreeModel`, a variable length Markov chain given by a complete
  suffix-free context set with one kernel per context;
* :class:`RCRModel`, an explicit random context representation of bounded
  depth.

Renewal and context-tree models expose the exact minorant ``p_minus(w)``, the
essential infimum of the kernel over positive-probability pasts extending w,
from which :func:`minimal_rcr` builds the minimal representation.

Every ``simulate`` call returns a :class:`Trajectory`: the sample together
with a prehistory long enough that the true kernel is defined at each step.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import EMPTY, SIMPLEX_TOL, Alphabet, Distribution, FiniteString, Past, d_tv
from .counts import Sample
from .errors import (
    ContextExhausted,
    DepthError,
    InvalidRCRError,
    ModelError,
    ParameterError,
    UnsupportedModelError,
    ZeroProbabilityPastError,
)

PROB_TOL = 1e-12


# --------------------------------------------------------------------------
# arrival distributions
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ArrivalDistribution:
    """Law μ of the gaps between ones, on {1, 2, ...}.

    ``table`` lists μ(1..m).  ``success`` is the parameter of a geometric
    tail: with no table the law is geometric, μ(k) = s(1-s)^(k-1); with a
    table whose mass r = 1 - Σ table is positive, μ(m + j) = r s (1-s)^(j-1).
    """

    table: tuple[float, ...] = ()
    success: float | None = None

    def __post_init__(self):
        table = tuple(float(x) for x in self.table)
        object.__setattr__(self, "table", table)
        if any(x < 0 for x in table):
            raise ParameterError("arrival pmf entries must be nonnegative")
        mass = math.fsum(table)
        if self.success is None:
            if not table:
                raise ParameterError("arrival needs a pmf table or a geometric success parameter")
            if abs(mass - 1) > SIMPLEX_TOL:
                raise ParameterError(f"arrival pmf must sum to 1, sums to {mass!r}")
        else:
            if not 0 < self.success <= 1:
                raise ParameterError(f"geometric success must lie in (0, 1], got {self.success}")
            if mass > 1 + SIMPLEX_TOL:
                raise ParameterError(f"arrival pmf table exceeds total mass 1 ({mass!r})")
            if table and 1 - mass <= SIMPLEX_TOL:
                raise ParameterError("table already has mass 1; drop the geometric tail")
        tail_mass = 0.0 if self.success is None else max(0.0, 1.0 - mass)
        object.__setattr__(self, "tail_mass", tail_mass)
        m = len(table)
        # survival[k] = μ_≥(k) for k = 0..m+1
        surv = np.zeros(m + 2)
        acc = tail_mass
        surv[m + 1] = acc
        for k in range(m, 0, -1):
            acc += table[k - 1]
            surv[k] = acc
        surv[0] = surv[1]
        object.__setattr__(self, "_surv", surv)

    @classmethod
    def geometric(cls, success: float) -> "ArrivalDistribution":
        return cls((), success)

    @classmethod
    def uniform(cls, m: int) -> "ArrivalDistribution":
        return cls(tuple([1.0 / m] * m))

    @classmethod
    def power_law(cls, exponent: float, m: int) -> "ArrivalDistribution":
        """μ(k) ∝ k^(-exponent) on {1..m}."""
        w = np.arange(1, m + 1, dtype=float) ** (-exponent)
        return cls(tuple(w / w.sum()))

    @property
    def table_length(self) -> int:
        return len(self.table)

    @property
    def finite_support(self) -> bool:
        return self.success is None or (self.table and self.tail_mass == 0.0)

    @property
    def support_max(self) -> int | None:
        """Largest k with μ(k) > 0, or None for unbounded support."""
        if not self.finite_support:
            return None
        nz = [k for k, x in enumerate(self.table, start=1) if x > 0]
        return nz[-1] if nz else 0

    def pmf(self, k: int) -> float:
        if k < 1:
            return 0.0
        m = len(self.table)
        if k <= m:
            return self.table[k - 1]
        if self.success is None:
            return 0.0
        return self.tail_mass * self.success * (1 - self.success) ** (k - m - 1)

    def survival(self, k: int) -> float:
        """μ_≥(k) = Σ_{j≥k} μ(j)."""
        if k <= len(self.table) + 1:
            return float(self._surv[max(k, 0)])
        if self.success is None:
            return 0.0
        return self.tail_mass * (1 - self.success) ** (k - len(self.table) - 1)

    def hazard(self, k: int) -> float:
        """μ(k)/μ_≥(k); raises for k with μ_≥(k) = 0."""
        m = len(self.table)
        if k > m and self.success is not None:
            return self.success
        s = self.survival(k)
        if s <= 0:
            raise ZeroProbabilityPastError(f"μ_≥({k}) = 0")
        return min(1.0, self.pmf(k) / s)

    def hazard_array(self, ks: np.ndarray) -> np.ndarray:
        ks = np.asarray(ks, dtype=np.int64)
        m = len(self.table)
        table_h = np.zeros(m + 2)
        for k in range(1, m + 1):
            s = self._surv[k]
            table_h[k] = min(1.0, self.table[k - 1] / s) if s > 0 else np.nan
        if self.success is not None:
            table_h[m + 1] = self.success
            return np.where(ks > m, self.success, table_h[np.minimum(ks, m + 1)])
        out = table_h[np.minimum(ks, m + 1)]
        if np.any(ks > m) or np.any(np.isnan(out)):
            raise ZeroProbabilityPastError("age beyond the support of the arrival law")
        return out

    @property
    def mean(self) -> float:
        """Z = Σ_k μ_≥(k) = E[gap]."""
        m = len(self.table)
        z = math.fsum(k * x for k, x in enumerate(self.table, start=1))
        if self.success is not None:
            z += self.tail_mass * (m + 1 / self.success)
        return z

    def moment(self, p: float) -> float:
        """E[gap^p], summing the geometric tail until it is negligible."""
        m = len(self.table)
        total = math.fsum(x * k ** p for k, x in enumerate(self.table, start=1))
        if self.success is not None and self.tail_mass > 0:
            s = self.success
            if s == 1:
                return total + self.tail_mass * (m + 1) ** p
            j = 1
            acc = 0.0
            while True:
                term = self.tail_mass * s * (1 - s) ** (j - 1) * (m + j) ** p
                acc += term
                if j > 10 and term < 1e-17 * max(acc, 1e-300):
                    break
                j += 1
            total += acc
        return total

    # -- sampling (vectorized) -----------------------------------------------

    def _inverse_survival(self, v: np.ndarray) -> np.ndarray:
        """min{j >= 1 : μ_≥(j+1) < v} for v in (0, 1]."""
        v = np.asarray(v, dtype=float)
        m = len(self.table)
        surv = self._surv[2 : m + 2]  # μ_≥(2..m+1), nonincreasing
        # number of entries >= v, in a nonincreasing array
        j = 1 + np.searchsorted(-surv, -v, side="right")
        if self.success is not None and self.tail_mass > 0:
            deep = j > m
            if np.any(deep):
                s = self.success
                if s == 1:
                    extra = np.ones(int(deep.sum()), dtype=np.int64)
                else:
                    ratio = np.log(v[deep] / self.tail_mass) / math.log1p(-s)
                    # smallest integer e >= 1 with r (1-s)^e < v
                    extra = np.maximum(np.floor(ratio).astype(np.int64) + 1, 1)
                j = j.copy()
                j[deep] = m + extra
        return j.astype(np.int64)

    def sample_gaps(self, size, rng: np.random.Generator) -> np.ndarray:
        u = rng.random(size)
        return self._inverse_survival(1.0 - u)

    def sample_gaps_at_least(self, k: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Gaps drawn from μ conditioned on gap >= k (elementwise)."""
        k = np.asarray(k, dtype=np.int64)
        surv_k = np.array([self.survival(int(x)) for x in k.ravel()]).reshape(k.shape)
        u = rng.random(k.shape)
        out = self._inverse_survival((1.0 - u) * surv_k)
        return np.maximum(out, k)

    def age_table(self) -> tuple[np.ndarray, float]:
        """Cumulative law of μ_≥(k)/Z on k = 1..m and the remaining tail mass."""
        m = len(self.table)
        z = self.mean
        probs = self._surv[1 : m + 1] / z
        return np.cumsum(probs), max(0.0, 1.0 - probs.sum())

    def sample_age(self, size, rng: np.random.Generator) -> np.ndarray:
        """Draw from Pr{k} = μ_≥(k)/Z (the law of the first arrival time)."""
        cdf, tail = self.age_table()
        m = len(self.table)
        u = rng.random(size)
        out = 1 + np.searchsorted(cdf, u, side="right")
        if self.success is None:
            out = np.minimum(out, self.support_max)
        if self.success is not None:
            deep = out > m
            if np.any(deep):
                # conditional law of k - m beyond the table is geometric(s)
                g = rng.geometric(self.success, size=int(deep.sum()))
                out = out.copy()
                out[deep] = m + g
        return out.astype(np.int64)


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sample with its prehistory and the true kernels along it.

    ``kernels[i]`` is p(·|Y_{≤ i}) where position i = 0 is the end of the
    prehistory, i.e. the law of X_{i+1}; row n is the law of the next symbol
    after the sample.
    """

    sample: Sample
    prehistory: FiniteString
    kernels: np.ndarray

    @property
    def past(self) -> Past:
        return Past(self.sample.data)

    @property
    def next_kernel(self) -> Distribution:
        return Distribution(self.sample.alphabet, self.kernels[-1])

    @property
    def full(self) -> FiniteString:
        return self.prehistory + self.sample.data


# --------------------------------------------------------------------------
# renewal model
# --------------------------------------------------------------------------


def _most_recent_one(w: Sequence[int]) -> int | None:
    for j in range(1, len(w) + 1):
        if w[-j] == 1:
            return j
    return None


@dataclass(frozen=True)
class RenewalModel:
    arrival: ArrivalDistribution
    alphabet: Alphabet = field(default_factory=Alphabet.binary)

    def __post_init__(self):
        if self.alphabet.size != 2:
            raise ModelError("renewal processes are binary")

    # exact word probabilities ------------------------------------------------

    def word_prob(self, w: Sequence[int]) -> float:
        """Pr{X^{-1}_{-|w|} = w}."""
        w = tuple(w)
        mu = self.arrival
        z = mu.mean
        L = len(w)
        ones = [j for j in range(1, L + 1) if w[-j] == 1]
        if not ones:
            # Pr{K > L} = Σ_{k>L} μ_≥(k)/Z = 1 - Σ_{k<=L} μ_≥(k)/Z
            return max(0.0, 1.0 - math.fsum(mu.survival(k) for k in range(1, L + 1)) / z)
        prob = mu.survival(ones[0]) * mu.survival(L - ones[-1] + 1) / z
        for a, b in zip(ones, ones[1:]):
            prob *= mu.pmf(b - a)
        return prob

    def positive(self, w: Sequence[int]) -> bool:
        return self.word_prob(w) > PROB_TOL

    def longest_positive_suffix(self, w: Sequence[int]) -> FiniteString:
        w = tuple(w)
        for k in range(len(w), -1, -1):
            s = w[len(w) - k:] if k else EMPTY
            if self.positive(s):
                return s
        return EMPTY

    # kernels -----------------------------------------------------------------

    def _zero_run_hazards(self, L: int) -> tuple[float, float]:
        """(inf, sup) of the hazard over ages k > L with μ_≥(k) > 0."""
        mu = self.arrival
        m = mu.table_length
        hs = [mu.hazard(k) for k in range(L + 1, m + 1) if mu.survival(k) > 0]
        if mu.success is not None and mu.tail_mass > 0:
            hs.append(mu.success)
        if not hs:
            raise ZeroProbabilityPastError(f"no positive-probability past extends 0^{L}")
        return min(hs), max(hs)

    def p_minus(self, w: Sequence[int]) -> np.ndarray:
        w = self.longest_positive_suffix(w)
        j = _most_recent_one(w)
        if j is not None:
            h = self.arrival.hazard(j)
            return np.array([1.0 - h, h])
        lo, hi = self._zero_run_hazards(len(w))
        return np.array([1.0 - hi, lo])

    def true_p(self, x: Past | Sequence[int]) -> Distribution:
        buf = x.buffer if isinstance(x, Past) else tuple(x)
        j = _most_recent_one(buf)
        if j is not None:
            if self.arrival.survival(j) > 0:
                h = self.arrival.hazard(j)
                return Distribution(self.alphabet, np.array([1.0 - h, h]))
            pm = self.p_minus(buf)
            return Distribution(self.alphabet, pm + (1.0 - pm.sum()) / 2)
        L = len(buf)
        if self.arrival.survival(L + 1) <= 0:
            raise ZeroProbabilityPastError(f"the all-zero past of depth {L} has probability 0")
        lo, hi = self._zero_run_hazards(L)
        if hi - lo > PROB_TOL:
            raise ContextExhausted(L, L + 1, "all-zero buffer does not determine the renewal age")
        return Distribution(self.alphabet, np.array([1.0 - lo, lo]))

    # sampling ----------------------------------------------------------------

    def _indicators(self, first: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
        """0/1 paths of length n with the first arrival at ``first`` and iid gaps."""
        reps = first.shape[0]
        x = np.zeros((reps, n), dtype=np.int8)
        block = int(n / self.arrival.mean * 1.1) + 16
        rows = np.arange(reps)
        pos = first.astype(np.int64)
        hit = pos <= n
        x[rows[hit], pos[hit] - 1] = 1
        while np.any(hit):
            rows, pos = rows[hit], pos[hit]
            gaps = self.arrival.sample_gaps((rows.size, block), rng)
            arrivals = pos[:, None] + np.cumsum(gaps, axis=1)
            ok = arrivals <= n
            r_idx = np.broadcast_to(rows[:, None], arrivals.shape)[ok]
            x[r_idx, arrivals[ok] - 1] = 1
            pos = arrivals[:, -1]
            hit = pos <= n
        return x

    def sample_stationary(self, n: int, rng: np.random.Generator) -> Sample:
        """Exactly stationary sample: τ₀ ~ μ_≥(k)/Z, then iid gaps."""
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        tau0 = self.arrival.sample_age(1, rng)
        x = self._indicators(tau0, n, rng)[0]
        return Sample(self.alphabet, tuple(int(v) for v in x))

    def simulate_batch(self, n: int, reps: int, rng: np.random.Generator):
        """Independent stationary paths with prehistory ages.

        Returns ``(x, ages)``: ``x`` has shape (reps, n) and ``ages[r]`` is the
        distance from position 1 back to the last one at or before position 0.
        The first arrival is 1 - age + G with G ~ μ conditioned on G >= age,
        which has the stationary law μ_≥(k)/Z.
        """
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        ages = self.arrival.sample_age(reps, rng)
        g = self.arrival.sample_gaps_at_least(ages, rng)
        first = 1 - ages + g
        return self._indicators(first, n, rng), ages

    def batch_hazards(self, x: np.ndarray, ages: np.ndarray) -> np.ndarray:
        """p(1|past) before each of positions 1..n+1, shape (reps, n+1)."""
        reps, n = x.shape
        idx = np.arange(1, n + 1)
        last = np.where(x == 1, idx[None, :], np.iinfo(np.int64).min)
        last = np.concatenate([(1 - ages)[:, None].astype(np.int64), last], axis=1)
        last = np.maximum.accumulate(last, axis=1)  # last one at or before position i
        age = np.arange(1, n + 2)[None, :] - last
        return self.arrival.hazard_array(age)

    def simulate(self, n: int, rng: np.random.Generator) -> Trajectory:
        x, ages = self.simulate_batch(n, 1, rng)
        h = self.batch_hazards(x, ages)[0]
        kernels = np.stack([1.0 - h, h], axis=1)
        pre = (1,) + (0,) * (int(ages[0]) - 1)
        return Trajectory(Sample(self.alphabet, tuple(int(v) for v in x[0])), pre, kernels)

    def as_context_tree(self) -> "ContextTreeModel":
        """Finite-support renewal as a context tree of depth max support."""
        m = self.arrival.support_max
        if m is None:
            raise UnsupportedModelError("only finite-support arrivals have a finite context tree")
        contexts: dict[FiniteString, np.ndarray] = {}
        for k in range(1, m + 1):
            ctx = (1,) + (0,) * (k - 1)
            if self.arrival.survival(k) > 0:
                h = self.arrival.hazard(k)
                contexts[ctx] = np.array([1.0 - h, h])
            else:
                contexts[ctx] = np.array([0.5, 0.5])
        contexts[(0,) * m] = np.array([0.5, 0.5])
        return ContextTreeModel(self.alphabet, contexts)


# --------------------------------------------------------------------------
# context tree model
# --------------------------------------------------------------------------


def _words(k: int, length: int) -> Iterable[FiniteString]:
    return itertools.product(range(k), repeat=length)


class ContextTreeModel:
    """Variable length Markov chain on a complete suffix-free context set."""

    def __init__(self, alphabet: Alphabet, contexts: dict[FiniteString, Sequence[float]]):
        self.alphabet = alphabet
        k = alphabet.size
        ctx = {}
        for c, kern in contexts.items():
            c = tuple(int(s) for s in c)
            if any(s < 0 or s >= k for s in c):
                raise ModelError(f"context {c} uses symbols outside the alphabet")
            ctx[c] = Distribution(alphabet, kern).probs
        if not ctx:
            raise ModelError("a context tree needs at least one context")
        self.contexts = ctx
        self._check_complete()
        self.depth = max(len(c) for c in ctx)
        self._build_chain()

    def _check_complete(self):
        keys = list(self.contexts)
        for c in keys:
            for j in range(len(c)):
                if c[len(c) - j:] in self.contexts:
                    raise ModelError(f"context {c} has another context as a suffix")
        kraft = sum(Fraction(1, self.alphabet.size ** len(c)) for c in keys)
        if kraft != 1:
            raise ModelError("context set is not complete: some pasts have no context")

    def context_of(self, x: Sequence[int]) -> FiniteString:
        x = tuple(x)
        for j in range(0, min(len(x), self.depth) + 1):
            c = x[len(x) - j:] if j else EMPTY
            if c in self.contexts:
                return c
        raise ContextExhausted(len(x), len(x) + 1, "past is shorter than its context")

    def _code(self, v: Sequence[int]) -> int:
        k = self.alphabet.size
        code = 0
        for s in v:
            code = code * k + s
        return code

    def _build_chain(self):
        k = self.alphabet.size
        D = self.depth
        N = k ** D
        self.num_states = N
        kern = np.zeros((N, k))
        P = np.zeros((N, N))
        words = list(_words(k, D))
        for code, v in enumerate(words):
            kern[code] = self.contexts[self.context_of(v)]
            for a in range(k):
                nxt = self._code(v[1:] + (a,)) if D else 0
                P[code, nxt] += kern[code, a]
        self._state_kernel = kern
        self._transition = P
        M = P.T - np.eye(N)
        if np.linalg.matrix_rank(M) != N - 1:
            raise ModelError("stationary law of the context tree chain is not unique")
        aug = np.vstack([M, np.ones((1, N))])
        rhs = np.zeros(N + 1)
        rhs[-1] = 1.0
        pi, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        pi[np.abs(pi) < PROB_TOL] = 0.0
        if np.any(pi < 0):
            raise ModelError("stationary law has negative entries")
        pi /= pi.sum()
        resid = np.abs(pi @ P - pi).max()
        if resid > 1e-10:
            raise ModelError(f"stationary residual {resid:.3g} exceeds 1e-10")
        self.stationary = pi
        self._words = words

    def word_prob(self, w: Sequence[int]) -> float:
        w = tuple(w)
        D = self.depth
        k = self.alphabet.size
        if len(w) <= D:
            if not w:
                return 1.0
            lw = len(w)
            # sum over depth-D words with w as suffix: those codes are
            # prefix * k^lw + code(w)
            base = self._code(w)
            step = k ** lw
            return float(self.stationary[base::step].sum())
        prob = float(self.stationary[self._code(w[:D])])
        for i in range(D, len(w)):
            prob *= float(self.contexts[self.context_of(w[:i])][w[i]])
            if prob == 0.0:
                break
        return prob

    def positive(self, w: Sequence[int]) -> bool:
        return self.word_prob(w) > PROB_TOL

    def longest_positive_suffix(self, w: Sequence[int]) -> FiniteString:
        w = tuple(w)
        for k in range(len(w), -1, -1):
            s = w[len(w) - k:] if k else EMPTY
            if self.positive(s):
                return s
        return EMPTY

    def p_minus(self, w: Sequence[int]) -> np.ndarray:
        w = self.longest_positive_suffix(w)
        for j in range(len(w) + 1):
            c = w[len(w) - j:] if j else EMPTY
            if c in self.contexts:
                return self.contexts[c].copy()
        above = [kern for c, kern in self.contexts.items()
                 if len(c) > len(w) and c[len(c) - len(w):] == w and self.positive(c)]
        if not above:
            raise ModelError(f"no positive-probability context extends {w}")
        return np.min(np.array(above), axis=0)

    def p_minus_bruteforce(self, w: Sequence[int]) -> np.ndarray:
        """Minimum kernel over positive-π depth-D words extending w."""
        w = tuple(w)
        while True:
            L = max(self.depth, len(w))
            vals = []
            for head in _words(self.alphabet.size, L - len(w)):
                v = head + w
                if L == self.depth:
                    ok = self.stationary[self._code(v)] > PROB_TOL
                else:
                    ok = self.word_prob(v) > PROB_TOL
                if ok:
                    vals.append(self._state_kernel[self._code(v[len(v) - self.depth:])])
            if vals:
                return np.min(np.array(vals), axis=0)
            w = w[1:]

    def true_p(self, x: Past | Sequence[int]) -> Distribution:
        buf = x.buffer if isinstance(x, Past) else tuple(x)
        return Distribution(self.alphabet, self.contexts[self.context_of(buf)])

    def simulate(self, n: int, rng: np.random.Generator) -> Trajectory:
        """Start the order-D chain from π (the prehistory) and run n steps."""
        if n < 1:
            raise ParameterError(f"n must be >= 1, got {n}")
        k = self.alphabet.size
        D = self.depth
        N = self.num_states
        code = int(np.searchsorted(np.cumsum(self.stationary), rng.random(), side="right"))
        code = min(code, N - 1)
        pre = tuple(int(c) for c in np.unravel_index(code, (k,) * D)) if D else EMPTY
        cum = np.cumsum(self._state_kernel, axis=1).tolist()
        u = rng.random(n).tolist()
        data = []
        codes = [code]
        mod = N // k if D else 1
        for i in range(n):
            row = cum[code]
            a = 0
            while a < k - 1 and u[i] >= row[a]:
                a += 1
            data.append(a)
            code = (code % mod) * k + a if D else 0
            codes.append(code)
        kernels = self._state_kernel[np.asarray(codes)]
        return Trajectory(Sample(self.alphabet, tuple(data)), pre, kernels)

    def sample_stationary(self, n: int, rng: np.random.Generator) -> Sample:
        return self.simulate(n, rng).sample


# --------------------------------------------------------------------------
# explicit random context representations
# --------------------------------------------------------------------------


class RCRModel:
    """Weights λ_i(w) and kernels p_i(·|w) for |w| = i <= depth.

    Missing weights are 0 and missing kernels uniform.  At construction every
    path of full depth must carry total weight 1, i.e. the residual δ is 0.
    """

    def __init__(self, alphabet: Alphabet, depth: int,
                 weights: dict[FiniteString, float],
                 kernels: dict[FiniteString, Sequence[float]]):
        self.alphabet = alphabet
        self.depth = int(depth)
        if self.depth < 0:
            raise InvalidRCRError("depth must be >= 0")
        k = alphabet.size
        self.weights = {tuple(w): float(v) for w, v in weights.items()}
        self.kernels = {tuple(w): Distribution(alphabet, p).probs for w, p in kernels.items()}
        for w, lam in self.weights.items():
            if len(w) > self.depth:
                raise InvalidRCRError(f"weight for {w} is deeper than the depth bound")
            if not -PROB_TOL <= lam <= 1 + PROB_TOL:
                raise InvalidRCRError(f"weight {lam} for {w} is outside [0, 1]")
        self._uniform = np.full(k, 1.0 / k)
        for v in _words(k, self.depth):
            total = math.fsum(self.weight(v[len(v) - i:] if i else EMPTY) for i in range(self.depth + 1))
            if abs(total - 1) > 1e-12:
                raise InvalidRCRError(f"weights along past {v} sum to {total!r}, not 1")

    def weight(self, w: FiniteString) -> float:
        return self.weights.get(w, 0.0)

    def kernel(self, w: FiniteString) -> np.ndarray:
        return self.kernels.get(w, self._uniform)

    def components(self, x: Past | Sequence[int]) -> list[tuple[int, float, np.ndarray]]:
        """Nonzero mixture terms along a past, stopping once the mass reaches 1."""
        buf = x.buffer if isinstance(x, Past) else tuple(x)
        out = []
        acc = 0.0
        for i in range(self.depth + 1):
            if acc >= 1 - 1e-12:
                break
            if i > len(buf):
                raise ContextExhausted(len(buf), i)
            w = buf[len(buf) - i:] if i else EMPTY
            lam = self.weight(w)
            if lam > 0:
                out.append((i, lam, self.kernel(w)))
                acc += lam
        if abs(acc - 1) > 1e-12:
            raise InvalidRCRError(f"weights along the past sum to {acc!r}")
        return out

    def true_p(self, x: Past | Sequence[int]) -> Distribution:
        probs = np.zeros(self.alphabet.size)
        for _, lam, kern in self.components(x):
            probs += lam * kern
        return Distribution(self.alphabet, probs)

    def as_context_tree(self) -> ContextTreeModel:
        contexts = {v: self.true_p(v).probs for v in _words(self.alphabet.size, self.depth)}
        return ContextTreeModel(self.alphabet, contexts)

    def simulate(self, n: int, rng: np.random.Generator) -> Trajectory:
        return self.as_context_tree().simulate(n, rng)

    def sample_stationary(self, n: int, rng: np.random.Generator) -> Sample:
        return self.simulate(n, rng).sample


ProcessModel = RenewalModel | ContextTreeModel | RCRModel


# --------------------------------------------------------------------------
# operations on models
# --------------------------------------------------------------------------


def p_minus(model, w: Sequence[int]) -> np.ndarray:
    if not hasattr(model, "p_minus"):
        raise UnsupportedModelError(f"{type(model).__name__} has no exact minorants")
    return model.p_minus(tuple(w))


def continuity_defect(model, w: Sequence[int]) -> float:
    """1 − Σ_a p₋(a|w)."""
    return float(1.0 - p_minus(model, w).sum())


def minimal_rcr(model, depth_bound: int) -> RCRModel:
    """Minimal random context representation up to ``depth_bound``.

    λ_0(o) = Σ_a p₋(a|o) and, for |w| = k >= 1, λ_k(w) is the total increment
    of p₋ from w without its deepest symbol to w; kernels are the normalized
    increments.  Positive-probability words of full depth must have zero
    continuity defect.  Zero-probability words keep their leftover mass at
    full depth with a uniform kernel, so the mixture equals
    p₋ + defect/|A| there.
    """
    if not hasattr(model, "p_minus"):
        raise UnsupportedModelError(f"{type(model).__name__} has no exact minorants")
    k = model.alphabet.size
    uniform = np.full(k, 1.0 / k)
    pm: dict[FiniteString, np.ndarray] = {}
    for L in range(depth_bound + 1):
        for w in _words(k, L):
            pm[w] = model.p_minus(w)
    weights: dict[FiniteString, float] = {}
    kernels: dict[FiniteString, np.ndarray] = {}
    for w, cur in pm.items():
        prev = pm[w[1:]] if w else np.zeros(k)
        inc = cur - prev
        if np.any(inc < -1e-12):
            raise ModelError(f"minorants decrease from {w[1:]} to {w}")
        inc = np.clip(inc, 0.0, None)
        lam = float(inc.sum())
        if len(w) == depth_bound:
            defect = 1.0 - float(cur.sum())
            if defect > 1e-12:
                if model.positive(w):
                    raise DepthError(
                        f"continuity defect {defect:.3g} at {w}: depth bound {depth_bound} too small")
                inc = inc + defect * uniform
                lam = float(inc.sum())
        if lam > 0:
            weights[w] = lam
            kernels[w] = inc / lam
    return RCRModel(model.alphabet, depth_bound, weights, kernels)


def rcr_step(rcr: RCRModel, x: Past | Sequence[int], rng: np.random.Generator) -> tuple[int, int]:
    """Two-step draw: depth K from the weights, then X_0 from that kernel."""
    comps = rcr.components(x)
    u = rng.random()
    acc = 0.0
    chosen = comps[-1]
    for comp in comps:
        acc += comp[1]
        if u < acc:
            chosen = comp
            break
    kern = chosen[2]
    a = int(np.searchsorted(np.cumsum(kern), rng.random(), side="right"))
    return chosen[0], min(a, rcr.alphabet.size - 1)


def truncated_p(model, x: Past | Sequence[int], L: int) -> Distribution:
    """Kernel of the minimal RCR cut at depth L; the leftover mass goes to '?'."""
    buf = x.buffer if isinstance(x, Past) else tuple(x)
    w = Past(buf).suffix(L)
    pm = p_minus(model, w)
    ext = model.alphabet.extended("?")
    return Distribution(ext, np.append(pm, 1.0 - pm.sum()))


def truncation_gap(model, x: Past | Sequence[int], L: int) -> float:
    """d_TV between the true kernel and its depth-L truncation."""
    pl = truncated_p(model, x, L)
    return d_tv(model.true_p(x).extend(pl.alphabet), pl)
