"""Alphabets, token sequences, and autoregressive generation.

Token sequences use 1-based positions with inclusive slices, and negative
positions count from the end (``seq[-1]`` is the last token, ``seq[i:j]``
keeps both endpoints). Every other module indexes sequences through this
one utility so the convention cannot drift. All types are immutable;
generation operators return new sequences.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Iterator, Sequence


class AlphabetMismatchError(ValueError):
    """A sequence was combined with a generator over a different alphabet."""


class NotRealizableError(ValueError):
    """No member of the hypothesis family is consistent with the data."""


class GuardExceededError(ValueError):
    """A brute-force operation was asked to run outside its guarded range."""


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite token set; token ``i`` renders as ``symbols[i]``."""

    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise ValueError("alphabet must be non-empty")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.symbols)

    @cached_property
    def _index_of(self) -> dict[str, int]:
        return {text: i for i, text in enumerate(self.symbols)}

    def index(self, text: str) -> int:
        try:
            return self._index_of[text]
        except KeyError:
            raise ValueError(f"unknown token {text!r}") from None

    def render(self, token: int) -> str:
        return self.symbols[token]

    def seq(self, tokens: Iterable[int] = ()) -> "TokenSeq":
        return TokenSeq(self, tuple(tokens))

    def parse_seq(self, text: str) -> "TokenSeq":
        """Parse the comma-separated text form (empty text is the empty sequence)."""
        text = text.strip()
        if not text:
            return self.seq()
        return self.seq(self.index(part.strip()) for part in text.split(","))


BINARY = Alphabet(("0", "1"))


@dataclass(frozen=True)
class TokenSeq:
    """Immutable sequence of alphabet indices.

    Indexing is 1-based and slices are inclusive on both endpoints:
    ``s[1]`` is the first token, ``s[-t]`` the t-th from the end, and
    ``s[:-k]`` keeps everything up to and including position ``-k``.
    This intentionally differs from Python list slicing.
    """

    alphabet: Alphabet
    tokens: tuple[int, ...]

    def __post_init__(self):
        if self.tokens:
            if min(self.tokens) < 0 or max(self.tokens) >= len(self.alphabet):
                raise ValueError("token index out of range for the alphabet")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[int]:
        return iter(self.tokens)

    def _pos(self, i: int) -> int:
        """Resolve a nonzero 1-based position to a 0-based offset."""
        n = len(self.tokens)
        if i > 0:
            j = i - 1
        elif i < 0:
            j = n + i
        else:
            raise IndexError("positions are 1-based; 0 is not a position")
        if not 0 <= j < n:
            raise IndexError(f"position {i} out of range for length {n}")
        return j

    def __getitem__(self, key):
        if not isinstance(key, slice):
            return self.tokens[self._pos(key)]
        if key.step is not None:
            raise IndexError("step slices are not supported")
        n = len(self.tokens)

        def resolve(endpoint: int) -> int:
            if endpoint == 0:
                raise IndexError("positions are 1-based; 0 is not a position")
            return endpoint if endpoint > 0 else n + endpoint + 1

        start = 1 if key.start is None else resolve(key.start)
        stop = n if key.stop is None else resolve(key.stop)
        if stop == start - 1 and 0 <= stop <= n:
            return TokenSeq(self.alphabet, ())
        if not (1 <= start and stop >= start and stop <= n):
            raise IndexError(f"slice [{key.start}:{key.stop}] out of range for length {n}")
        return TokenSeq(self.alphabet, self.tokens[start - 1:stop])

    def append(self, token: int) -> "TokenSeq":
        if not 0 <= token < len(self.alphabet):
            raise ValueError("token index out of range for the alphabet")
        return TokenSeq(self.alphabet, self.tokens + (token,))

    def render(self) -> str:
        return ",".join(self.alphabet.render(t) for t in self.tokens)

    def __str__(self) -> str:
        return self.render()


class Generator(ABC):
    """Deterministic next-token function over a fixed alphabet.

    Subclasses are immutable value objects: two generators with equal
    parameters behave identically on every input.
    """

    alphabet: Alphabet

    @abstractmethod
    def next_token(self, x: TokenSeq) -> int:
        ...

    def __call__(self, x: TokenSeq) -> int:
        return self.next_token(x)


@dataclass(frozen=True)
class ConstantGenerator(Generator):
    """Emits the same token regardless of the input."""

    alphabet: Alphabet
    token: int

    def next_token(self, x: TokenSeq) -> int:
        return self.token


def _check_alphabet(f: Generator, x: TokenSeq) -> None:
    if f.alphabet != x.alphabet:
        raise AlphabetMismatchError("generator and sequence use different alphabets")


def apply_and_append(f: Generator, x: TokenSeq) -> TokenSeq:
    """Return ``x`` with ``f(x)`` appended; ``x`` itself is unchanged."""
    _check_alphabet(f, x)
    return x.append(f.next_token(x))


def cot(f: Generator, x: TokenSeq, T: int) -> TokenSeq:
    """Iterate apply-and-append ``T`` times; the result has length ``len(x) + T``."""
    if T < 1:
        raise ValueError("generation length T must be at least 1")
    _check_alphabet(f, x)
    seq = x
    for _ in range(T):
        seq = seq.append(f.next_token(seq))
    return seq


def e2e(f: Generator, x: TokenSeq, T: int) -> int:
    """Final token of the T-step generation; the prompt-to-answer map."""
    return cot(f, x, T).tokens[-1]


def cot_time_dependent(fs: Sequence[Generator], x: TokenSeq) -> TokenSeq:
    """Apply ``fs[0]``, then ``fs[1]``, ... appending each output in turn."""
    if not fs:
        raise ValueError("need at least one generator")
    for f in fs:
        if f.alphabet != fs[0].alphabet:
            raise AlphabetMismatchError("generators must share one alphabet")
    seq = x
    for f in fs:
        seq = apply_and_append(f, seq)
    return seq


class GeneratorFamily(ABC):
    """An enumerable or oracle-backed base class of generators.

    ``members()`` enumerates the family in its canonical order where that
    is feasible (guarded); learners that need a canonical tie-break take
    the first member of this order.
    """

    alphabet: Alphabet

    @abstractmethod
    def size(self) -> int | None:
        """Number of members, or None when the family is not enumerable."""

    @abstractmethod
    def members(self) -> Iterator[Generator]:
        ...

    @abstractmethod
    def random_member(self, rng) -> Generator:
        ...

    def default_member(self) -> Generator:
        return next(iter(self.members()))

    def cons_oracle(self) -> Callable[[Sequence[tuple[TokenSeq, int]]], Generator] | None:
        """Family-specific next-token consistency procedure, if one exists."""
        return None

    def find_e2e_consistent(self, pairs: Sequence[tuple[TokenSeq, int]], T: int) -> Generator | None:
        """First member (canonical order) whose T-step answers match all pairs.

        The default implementation scans ``members()``; families may
        override with an equivalent faster search.
        """
        for f in self.members():
            if all(e2e(f, x, T) == y for x, y in pairs):
                return f
        return None
