"""Alphabet, string, past and distribution primitives.

Orientation is fixed everywhere in the package: a finite string is a tuple of
symbol indices read left to right with the *rightmost* entry the most recent
symbol.  A past ``x`` therefore stores ``(..., x_{-2}, x_{-1})`` and the suffix
of depth ``k`` is ``x[-k:]``.  Samples ``X_1..X_n`` are stored in time order,
so the part of a sample ending at position ``i`` is already a valid past.
"""

from __future__ import annotations

import string
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import AlphabetMismatchError, ContextExhausted, ParameterError

SIMPLEX_TOL = 1e-12

# single-character serialization is used when every symbol is one character
_SHORT_SYMBOLS = string.digits + string.ascii_letters

FiniteString = tuple[int, ...]
EMPTY: FiniteString = ()


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        syms = tuple(str(s) for s in self.symbols)
        object.__setattr__(self, "symbols", syms)
        if not syms:
            raise ParameterError("alphabet must contain at least one symbol")
        if len(set(syms)) != len(syms):
            raise ParameterError(f"alphabet symbols must be distinct: {syms}")
        object.__setattr__(self, "_lookup", {s: i for i, s in enumerate(syms)})

    @classmethod
    def binary(cls) -> "Alphabet":
        return cls(("0", "1"))

    @classmethod
    def of(cls, symbols: str | Iterable[str]) -> "Alphabet":
        """Build from a compact string (``"ab"``) or an iterable of tokens."""
        if isinstance(symbols, str):
            symbols = symbols.split(",") if "," in symbols else list(symbols)
        return cls(tuple(symbols))

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        try:
            return self._lookup[symbol]
        except KeyError:
            raise ParameterError(f"symbol {symbol!r} is not in alphabet {self.symbols}") from None

    @property
    def compact(self) -> bool:
        """True when words serialize as one visible character per symbol."""
        return self.size <= 62 and all(len(s) == 1 and s in _SHORT_SYMBOLS for s in self.symbols)

    def encode(self, text: str | Sequence[str]) -> FiniteString:
        """Parse a serialized word into a tuple of symbol indices."""
        if isinstance(text, str):
            if self.compact:
                tokens = list(text.strip())
            else:
                text = text.strip()
                tokens = text.split(",") if text else []
        else:
            tokens = list(text)
        return tuple(self.index(t) for t in tokens)

    def decode(self, word: Sequence[int]) -> str:
        sep = "" if self.compact else ","
        return sep.join(self.symbols[int(i)] for i in word)

    def extended(self, extra: str = "?") -> "Alphabet":
        return Alphabet(self.symbols + (extra,))


def is_suffix(w: Sequence[int], y: Sequence[int]) -> bool:
    """``w ⪯ y``: w equals the rightmost ``len(w)`` symbols of y."""
    lw = len(w)
    if lw > len(y):
        return False
    return lw == 0 or tuple(y[len(y) - lw:]) == tuple(w)


@dataclass(frozen=True)
class Past:
    """A finitely buffered past; ``buffer[-1]`` is x_{-1}."""

    buffer: FiniteString

    def __post_init__(self):
        object.__setattr__(self, "buffer", tuple(int(s) for s in self.buffer))

    @property
    def depth(self) -> int:
        return len(self.buffer)

    def suffix(self, k: int) -> FiniteString:
        """Return x^{-1}_{-k}; asking for more than the buffer holds raises."""
        if k < 0:
            raise ParameterError(f"suffix depth must be >= 0, got {k}")
        if k > len(self.buffer):
            raise ContextExhausted(len(self.buffer), k)
        return self.buffer[len(self.buffer) - k:] if k else EMPTY

    def symbol(self, j: int) -> int:
        """x_{-j} for j >= 1."""
        if j < 1:
            raise ParameterError("x_{-j} needs j >= 1")
        if j > len(self.buffer):
            raise ContextExhausted(len(self.buffer), j)
        return self.buffer[-j]

    def agrees_with(self, other: "Past", k: int) -> bool:
        return self.suffix(k) == other.suffix(k)


@dataclass(frozen=True, eq=False)
class Distribution:
    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.shape != (self.alphabet.size,):
            raise ParameterError(
                f"distribution needs {self.alphabet.size} entries, got shape {p.shape}"
            )
        if np.any(p < -SIMPLEX_TOL) or np.any(p > 1 + SIMPLEX_TOL):
            raise ParameterError(f"probabilities must lie in [0, 1]: {p}")
        if abs(p.sum() - 1.0) > SIMPLEX_TOL:
            raise ParameterError(f"probabilities must sum to 1 (got {p.sum()!r})")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "Distribution":
        return cls(alphabet, np.full(alphabet.size, 1.0 / alphabet.size))

    def __getitem__(self, a: int) -> float:
        return float(self.probs[a])

    def __eq__(self, other):
        if not isinstance(other, Distribution):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.probs, other.probs)

    def as_dict(self) -> dict[str, float]:
        return {s: float(p) for s, p in zip(self.alphabet.symbols, self.probs)}

    def extend(self, alphabet: Alphabet) -> "Distribution":
        """Embed into a larger alphabet whose prefix is this one."""
        if alphabet.symbols[: self.alphabet.size] != self.alphabet.symbols:
            raise AlphabetMismatchError("target alphabet does not extend this one")
        p = np.zeros(alphabet.size)
        p[: self.alphabet.size] = self.probs
        return Distribution(alphabet, p)


def d_tv(p: Distribution, q: Distribution) -> float:
    """Total variation distance ½ Σ_a |p(a) − q(a)|."""
    if p.alphabet != q.alphabet:
        raise AlphabetMismatchError(f"{p.alphabet.symbols} vs {q.alphabet.symbols}")
    return 0.5 * float(np.abs(p.probs - q.probs).sum())


def d_tv_positive_part(p: Distribution, q: Distribution) -> float:
    """Σ_a (p(a) − q(a))₊, equal to :func:`d_tv` on the simplex."""
    if p.alphabet != q.alphabet:
        raise AlphabetMismatchError(f"{p.alphabet.symbols} vs {q.alphabet.symbols}")
    return float(np.clip(p.probs - q.probs, 0.0, None).sum())
