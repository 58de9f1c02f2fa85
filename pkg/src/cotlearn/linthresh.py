"""Linear-threshold generators over bits and their LP-feasibility learners.

A threshold generator reads only the last ``d`` bits of its input (fewer
when the input is shorter), so every consistency constraint is linear in
the weights and the bias. Strict "< 0" constraints are solved as
"<= -1": on a finite binary domain any strictly separating solution can
be rescaled to margin one, so feasibility is unchanged and the program
becomes closed and exactly solvable.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .seqcore import (
    BINARY,
    Generator,
    GeneratorFamily,
    GuardExceededError,
    NotRealizableError,
    TokenSeq,
)
from .simplex import solve_feasibility

SPARSE_SUPPORT_GUARD = 100_000
ENUMERATION_MAX_D = 4


@dataclass(frozen=True)
class LinearThreshold(Generator):
    """Threshold on the last ``d`` input bits: 1 iff sum(w[-i] * x[-i]) + b >= 0.

    ``weights[-1]`` applies to the most recent bit. Arithmetic is exact;
    evaluation internally scales to integers, which only rescales the
    compared sum by a positive factor.
    """

    weights: tuple[Fraction, ...]
    bias: Fraction

    alphabet = BINARY

    @property
    def d(self) -> int:
        return len(self.weights)

    def next_token(self, x: TokenSeq) -> int:
        if x.alphabet != BINARY:
            raise ValueError("linear thresholds are defined over the binary alphabet")
        nz, bias = _scaled_parts(self)
        tokens = x.tokens
        n = len(tokens)
        acc = bias
        for i, w in nz:
            if i <= n and tokens[n - i]:
                acc += w
        return 1 if acc >= 0 else 0


@lru_cache(maxsize=None)
def _scaled_parts(f: LinearThreshold) -> tuple[tuple[tuple[int, int], ...], int]:
    """Integer form of (weights, bias): ((offset, scaled weight) for nonzeros, scaled bias)."""
    denoms = [w.denominator for w in f.weights] + [f.bias.denominator]
    scale = math.lcm(*denoms)
    d = len(f.weights)
    nz = tuple(
        (d - j, int(w * scale))
        for j, w in enumerate(f.weights)
        if w != 0
    )
    return nz, int(f.bias * scale)


def make_threshold(weights: Iterable, bias) -> LinearThreshold:
    return LinearThreshold(tuple(Fraction(w) for w in weights), Fraction(bias))


@dataclass(frozen=True)
class SparseLinearThreshold(Generator):
    """Threshold whose weight vector has support on at most k window offsets.

    ``support`` holds ascending offsets from the end of the window
    (offset 1 is the most recent bit); ``weights`` aligns with it.
    """

    d: int
    k: int
    support: tuple[int, ...]
    weights: tuple[Fraction, ...]
    bias: Fraction

    alphabet = BINARY

    def __post_init__(self):
        if len(self.support) > self.k or len(self.support) != len(self.weights):
            raise ValueError("support exceeds sparsity budget or misaligns with weights")
        if any(not 1 <= i <= self.d for i in self.support):
            raise ValueError("support offsets must lie within the window")

    def to_dense(self) -> LinearThreshold:
        w = [Fraction(0)] * self.d
        for i, wv in zip(self.support, self.weights):
            w[self.d - i] = wv
        return LinearThreshold(tuple(w), self.bias)

    def next_token(self, x: TokenSeq) -> int:
        return self.to_dense().next_token(x)


def eval_threshold(f: LinearThreshold, x: TokenSeq) -> int:
    """Evaluate the threshold on a binary sequence (truncating to the window)."""
    return f.next_token(x)


def _window_coeffs(u: TokenSeq, offsets: Sequence[int]) -> list[int]:
    """Bit of ``u`` at each offset from the end, zero when the input is shorter."""
    tokens = u.tokens
    n = len(tokens)
    return [tokens[n - i] if i <= n else 0 for i in offsets]


def _threshold_constraints(pairs: Iterable[tuple[TokenSeq, int]], offsets: Sequence[int]):
    constraints = []
    for u, v in pairs:
        if u.alphabet != BINARY or v not in (0, 1):
            raise ValueError("LP consistency needs binary prefixes and labels")
        coeffs = _window_coeffs(u, offsets) + [1]  # trailing 1 is the bias column
        if v == 1:
            constraints.append((coeffs, ">=", 0))
        else:
            constraints.append((coeffs, "<=", -1))
    return constraints


def cons_lp(pairs: Sequence[tuple[TokenSeq, int]], d: int) -> LinearThreshold:
    """Linear threshold consistent with every (prefix, next-bit) pair.

    Raises NotRealizableError when the constraint system is infeasible.
    The returned hypothesis is re-checked against all pairs before it is
    handed back.
    """
    if d < 0:
        raise ValueError("window length must be nonnegative")
    if not pairs:
        return LinearThreshold(tuple(Fraction(0) for _ in range(d)), Fraction(0))
    offsets = list(range(1, d + 1))
    solution = solve_feasibility(_threshold_constraints(pairs, offsets), d + 1)
    if solution is None:
        raise NotRealizableError(f"no window-{d} linear threshold is consistent with the data")
    weights = tuple(reversed(solution[:d]))  # solution[j] is the weight at offset j+1
    f = LinearThreshold(weights, solution[d])
    for u, v in pairs:
        assert f.next_token(u) == v, "LP solution failed post-verification"
    return f


def cons_sparse(pairs: Sequence[tuple[TokenSeq, int]], d: int, k: int) -> SparseLinearThreshold:
    """First sparse threshold (supports in size-then-lexicographic order) fitting the data."""
    if not 0 <= k <= d:
        raise ValueError("need 0 <= k <= d")
    total = sum(math.comb(d, j) for j in range(k + 1))
    if total > SPARSE_SUPPORT_GUARD:
        raise GuardExceededError(f"{total} candidate supports exceed the enumeration guard")
    for size in range(k + 1):
        for support in itertools.combinations(range(1, d + 1), size):
            solution = solve_feasibility(_threshold_constraints(pairs, support), size + 1)
            if solution is None:
                continue
            f = SparseLinearThreshold(d, k, support, solution[:size], solution[size])
            for u, v in pairs:
                assert f.next_token(u) == v, "sparse LP solution failed post-verification"
            return f
    raise NotRealizableError(f"no {k}-sparse window-{d} threshold is consistent with the data")


def enumerate_threshold_functions(d: int) -> set[tuple[int, ...]]:
    """All dichotomies of {0,1}^d realizable by a window-d threshold.

    Each function is returned as its truth table over the 2^d points in
    lexicographic order; every candidate dichotomy is decided by its own
    LP feasibility problem.
    """
    if d > ENUMERATION_MAX_D:
        raise GuardExceededError(f"d={d} exceeds the exhaustive-enumeration guard {ENUMERATION_MAX_D}")
    points = list(itertools.product((0, 1), repeat=d))
    seqs = [BINARY.seq(p) for p in points]
    offsets = list(range(1, d + 1))
    realizable: set[tuple[int, ...]] = set()
    for labels in itertools.product((0, 1), repeat=len(points)):
        constraints = _threshold_constraints(zip(seqs, labels), offsets)
        if solve_feasibility(constraints, d + 1) is not None:
            realizable.add(labels)
    return realizable


@dataclass(frozen=True)
class ThresholdFamily(GeneratorFamily):
    """Window-d thresholds as an oracle-backed (non-enumerable) family."""

    d: int

    alphabet = BINARY

    def size(self) -> None:
        return None

    def members(self):
        raise GuardExceededError("threshold weights form a continuum; the family is not enumerable")

    def default_member(self) -> LinearThreshold:
        return LinearThreshold(tuple(Fraction(0) for _ in range(self.d)), Fraction(0))

    def random_member(self, rng) -> LinearThreshold:
        weights = tuple(Fraction(rng.randint(-3, 3)) for _ in range(self.d))
        return LinearThreshold(weights, Fraction(rng.randint(-6, 6), 2))

    def cons_oracle(self):
        return lambda pairs: cons_lp(pairs, self.d)


@dataclass(frozen=True)
class SparseThresholdFamily(GeneratorFamily):
    """Window-d thresholds with at most k nonzero weights, oracle-backed."""

    d: int
    k: int

    alphabet = BINARY

    def size(self) -> None:
        return None

    def members(self):
        raise GuardExceededError("sparse threshold weights form a continuum; the family is not enumerable")

    def default_member(self) -> SparseLinearThreshold:
        return SparseLinearThreshold(self.d, self.k, (), (), Fraction(0))

    def random_member(self, rng) -> SparseLinearThreshold:
        size = rng.randint(0, self.k)
        support = tuple(sorted(rng.sample(range(1, self.d + 1), size)))
        weights = tuple(Fraction(rng.choice([-3, -2, -1, 1, 2, 3])) for _ in support)
        return SparseLinearThreshold(self.d, self.k, support, weights, Fraction(rng.randint(-6, 6), 2))

    def cons_oracle(self):
        return lambda pairs: cons_sparse(pairs, self.d, self.k)


def format_threshold(f: LinearThreshold) -> str:
    """Serialize as "d b w_1 ... w_d" with exact fraction strings."""
    parts = [str(f.d), _frac_str(f.bias)] + [_frac_str(w) for w in f.weights]
    return " ".join(parts)


def parse_threshold(text: str) -> LinearThreshold:
    parts = text.split()
    if len(parts) < 2:
        raise ValueError("threshold line needs at least 'd b'")
    d = int(parts[0])
    if len(parts) != d + 2:
        raise ValueError(f"expected {d} weights, got {len(parts) - 2}")
    bias = Fraction(parts[1])
    weights = tuple(Fraction(p) for p in parts[2:])
    return LinearThreshold(weights, bias)


def _frac_str(x: Fraction) -> str:
    return str(x)  # Fraction renders as "num/den" or "num"
