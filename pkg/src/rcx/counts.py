"""Substring occurrence counts N_j(w) over a sample.

:class:`CountIndex` is a suffix automaton of the truncated sample X_1..X_{n-1}.
Each automaton state is an end-position equivalence class: all strings in a
state share the same set of end positions, hence the same value of N_{n-1}(w)
and of every next-symbol count N_n(wa).  The suffix-link tree of the
automaton is the suffix tree of the reversed sample, so walking *leftwards*
from a string to its left extensions is a walk down that tree.  This is what
the estimator needs: the left extensions of ``w`` are exactly the strings of
``w``'s state that are at least as long as ``w``, plus every string in the
link subtree below it.

:class:`NaiveCountIndex` enumerates all substrings into a dict and is kept as
the reference the automaton is tested against.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .core import EMPTY, Alphabet, FiniteString
from .errors import InvalidSampleError, ParameterError


@dataclass(frozen=True)
class Sample:
    alphabet: Alphabet
    data: FiniteString

    def __post_init__(self):
        data = tuple(int(s) for s in self.data)
        object.__setattr__(self, "data", data)
        if not data:
            raise InvalidSampleError("a sample needs at least one symbol")
        k = self.alphabet.size
        if any(s < 0 or s >= k for s in data):
            raise InvalidSampleError(f"sample contains symbols outside 0..{k - 1}")

    @classmethod
    def from_text(cls, alphabet: Alphabet, text: str) -> "Sample":
        return cls(alphabet, alphabet.encode(text))

    @property
    def n(self) -> int:
        return len(self.data)

    def __len__(self) -> int:
        return len(self.data)

    def text(self) -> str:
        return self.alphabet.decode(self.data)


def brute_force_count(data: Sequence[int], w: Sequence[int], horizon: int) -> int:
    """Literal #{|w| <= i <= j : X^i_{i-|w|+1} = w}, scanning every end position."""
    w = tuple(w)
    lw = len(w)
    data = tuple(data)
    if lw == 0:
        return horizon + 1
    return sum(1 for i in range(lw, horizon + 1) if data[i - lw:i] == w)


class NaiveCountIndex:
    """Dict of every substring of the sample to its counts at horizons n-1 and n."""

    def __init__(self, sample: Sample):
        self.sample = sample
        self.n = sample.n
        data = sample.data
        self._counts = {self.n - 1: self._registry(data[: self.n - 1]), self.n: self._registry(data)}

    @staticmethod
    def _registry(data: tuple[int, ...]) -> Counter:
        reg: Counter = Counter()
        m = len(data)
        for i in range(m):
            for j in range(i + 1, m + 1):
                reg[data[i:j]] += 1
        return reg

    def count(self, w: Sequence[int], horizon: int) -> int:
        if horizon not in self._counts:
            raise ParameterError(f"horizon must be n-1 or n, got {horizon}")
        w = tuple(w)
        if not w:
            return horizon + 1
        return self._counts[horizon].get(w, 0)

    def substrings(self, horizon: int) -> set[FiniteString]:
        """Distinct substrings of X_1^horizon, including the empty string."""
        return set(self._counts[horizon]) | {EMPTY}

    def occurring_left_extensions(self, w: Sequence[int]) -> set[FiniteString]:
        w = tuple(w)
        lw = len(w)
        return {v for v in self.substrings(self.n - 1) if len(v) >= lw and v[len(v) - lw:] == w}


class CountIndex:
    """Suffix automaton over X_1..X_{n-1} with per-class count tables.

    Arrays are indexed by state id; state 0 is the root (the empty string).

    ``length[v]``      longest string length in class v
    ``link[v]``        suffix link (parent in the reversed-sample suffix tree)
    ``endpos[v]``      first end position (1-based) of the longest string in v
    ``occurrences[v]`` N_{n-1}(w) for w in v; the root holds n
    ``next_counts[v]`` row of N_n(wa) over symbols a
    """

    def __init__(self, sample: Sample):
        self.sample = sample
        self.alphabet = sample.alphabet
        self.n = sample.n
        self._data = sample.data
        self._build(self._data[: self.n - 1])
        self._finish()

    def _build(self, text: Sequence[int]) -> None:
        length = [0]
        link = [-1]
        trans: list[dict[int, int]] = [{}]
        endpos = [0]
        prefix_state = [0]  # prefix_state[i] = state of X_1..X_i
        last = 0
        for i, c in enumerate(text, start=1):
            cur = len(length)
            length.append(length[last] + 1)
            link.append(-1)
            trans.append({})
            endpos.append(i)
            p = last
            while p != -1 and c not in trans[p]:
                trans[p][c] = cur
                p = link[p]
            if p == -1:
                link[cur] = 0
            else:
                q = trans[p][c]
                if length[p] + 1 == length[q]:
                    link[cur] = q
                else:
                    clone = len(length)
                    length.append(length[p] + 1)
                    link.append(link[q])
                    trans.append(dict(trans[q]))
                    endpos.append(endpos[q])
                    while p != -1 and trans[p].get(c) == q:
                        trans[p][c] = clone
                        p = link[p]
                    link[q] = clone
                    link[cur] = clone
            last = cur
            prefix_state.append(cur)
        self._length = length
        self._link = link
        self._trans = trans
        self._endpos = endpos
        self._prefix_state = prefix_state

    def _finish(self) -> None:
        n_states = len(self._length)
        self.num_states = n_states
        self.length = np.asarray(self._length, dtype=np.int64)
        self.link = np.asarray(self._link, dtype=np.int64)
        self.endpos = np.asarray(self._endpos, dtype=np.int64)
        # children in the link tree, keyed by the symbol that extends to the left
        children: list[dict[int, int]] = [{} for _ in range(n_states)]
        data = self._data
        for v in range(1, n_states):
            parent = self._link[v]
            # the longest string of v occupies positions endpos-len+1..endpos (1-based);
            # the symbol left of the parent's longest string sits at endpos - len(parent)
            c = data[self._endpos[v] - self._length[parent] - 1]
            children[parent][c] = v
        self._children = children
        # states ordered by decreasing length: children before parents
        self._order = sorted(range(1, n_states), key=lambda v: -self._length[v])

        k = self.alphabet.size
        one_hot = np.zeros((self.n, k))
        one_hot[np.arange(self.n), np.asarray(data, dtype=np.int64)] = 1.0
        self.next_counts = np.rint(self.aggregate(one_hot)).astype(np.int64)
        occ = np.zeros(n_states, dtype=np.int64)
        for i in range(1, self.n):
            occ[self._prefix_state[i]] += 1
        for v in self._order:
            occ[self._link[v]] += occ[v]
        occ[0] = self.n
        self.occurrences = occ

    # -- per-class aggregation -------------------------------------------------

    def aggregate(self, values: np.ndarray) -> np.ndarray:
        """Sum per-position rows over each class's end positions.

        ``values[i]`` is attached to end position i for i = 0..n-1, where
        position 0 is the empty prefix; it typically describes the symbol that
        follows position i.  Position 0 only contributes to the root, matching
        N_{n-1}(o) = n.
        """
        values = np.asarray(values, dtype=float)
        if values.shape[0] != self.n:
            raise ParameterError(f"need {self.n} rows, got {values.shape[0]}")
        out = np.zeros((self.num_states,) + values.shape[1:])
        ps = self._prefix_state
        for i in range(1, self.n):
            out[ps[i]] += values[i]
        for v in self._order:
            out[self._link[v]] += out[v]
        out[0] += values[0]
        return out

    # -- navigation --------------------------------------------------------------

    def locate(self, w: Sequence[int]) -> int | None:
        """State of w in X_1^{n-1}, or None when w does not occur there."""
        v = 0
        trans = self._trans
        for c in w:
            v = trans[v].get(c)
            if v is None:
                return None
        return v

    def extend_left(self, state: int, depth: int, symbol: int) -> int | None:
        """State of ``symbol + w`` given the state of w (of length ``depth``)."""
        if depth < self._length[state]:
            c = self._data[self._endpos[state] - depth - 1]
            return state if c == symbol else None
        return self._children[state].get(symbol)

    def walk_left(self, past: Sequence[int]) -> Iterator[int | None]:
        """Yield the states of x^{-1}_{-h} for h = 0, 1, ..., len(past).

        Once a suffix stops occurring every longer one is absent too; the
        walk then yields a single None and stops.
        """
        v: int | None = 0
        yield v
        for h in range(1, len(past) + 1):
            v = self.extend_left(v, h - 1, past[-h])
            yield v
            if v is None:
                return

    # -- counts ------------------------------------------------------------------

    def count(self, w: Sequence[int], horizon: int) -> int:
        """N_horizon(w) for horizon in {n-1, n}."""
        if horizon not in (self.n - 1, self.n):
            raise ParameterError(f"horizon must be n-1 or n, got {horizon}")
        w = tuple(w)
        if not w:
            return horizon + 1
        v = self.locate(w)
        c = 0 if v is None else int(self.occurrences[v])
        if horizon == self.n and len(w) <= self.n and self._data[self.n - len(w):] == w:
            c += 1
        return c

    def occurs(self, w: Sequence[int]) -> bool:
        """True when w occurs in X_1^{n-1}."""
        return self.locate(w) is not None

    def class_strings(self, state: int, min_length: int = 0) -> Iterator[FiniteString]:
        lo = 0 if state == 0 else int(self._length[self._link[state]]) + 1
        hi = int(self._length[state])
        end = int(self._endpos[state])
        for m in range(max(lo, min_length), hi + 1):
            yield tuple(self._data[end - m:end])

    def subtree(self, state: int) -> Iterator[int]:
        stack = [state]
        while stack:
            v = stack.pop()
            yield v
            stack.extend(self._children[v].values())

    def occurring_left_extensions(self, w: Sequence[int]) -> set[FiniteString]:
        """Every w' ⪰ w with N_{n-1}(w') > 0 (may be quadratic in n)."""
        w = tuple(w)
        v = self.locate(w)
        if v is None:
            return set()
        out = set(self.class_strings(v, len(w)))
        for u in self.subtree(v):
            if u != v:
                out.update(self.class_strings(u))
        return out

    def distinct_substrings(self) -> int:
        """Number of distinct substrings of X_1^{n-1}, including the empty one."""
        lens = self.length[1:]
        return 1 + int((lens - self.length[self.link[1:]]).sum())

    def class_size(self) -> np.ndarray:
        """Number of distinct strings in each class (1 for the root)."""
        size = np.ones(self.num_states, dtype=np.int64)
        size[1:] = self.length[1:] - self.length[self.link[1:]]
        return size

    def representative(self, state: int) -> FiniteString:
        """Shortest string of a class."""
        lo = 0 if state == 0 else int(self._length[self._link[state]]) + 1
        end = int(self._endpos[state])
        return tuple(self._data[end - lo:end])


def build_index(sample: Sample) -> CountIndex:
    return CountIndex(sample)
