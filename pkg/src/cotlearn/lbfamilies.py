"""Explicit lookup families with known base and end-to-end dimensions,
plus brute-force shattering and growth-function estimators.

Each family indexes members by a bit vector b and evaluates by decoding
the input against a canonical point set: strings "1 followed by the bit
representation of the point number" (numbering from zero so the fixed
bit width is never overflowed), optionally extended by a continuation
that must replay earlier b-bits. Everything off-pattern maps to 0.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

from .seqcore import (
    BINARY,
    Generator,
    GeneratorFamily,
    GuardExceededError,
    NotRealizableError,
    TokenSeq,
    cot,
    e2e,
)

E1_ENUM_GUARD_BITS = 16
LDIM_MAX_D = 8
COLLAPSE_MAX_D = 10
POOL_GUARD = 20
VC_MEMBER_GUARD = 1 << 16
POOL_CAP = 20


def _numbered_points(count: int, trailing_one: bool = False) -> tuple[tuple[int, ...], ...]:
    """Point k (1-based) is 1 + (k-1 in fixed-width binary), optionally + 1."""
    width = max(0, (count - 1).bit_length()) if count > 1 else 0
    pts = []
    for k in range(count):
        bits = tuple((k >> (width - 1 - j)) & 1 for j in range(width))
        pts.append((1,) + bits + ((1,) if trailing_one else ()))
    return tuple(pts)


def _strip_zeros(tokens: Sequence[int]) -> tuple[int, ...]:
    idx = 0
    while idx < len(tokens) and tokens[idx] == 0:
        idx += 1
    return tuple(tokens[idx:])


@dataclass(frozen=True)
class LookupGenerator(Generator):
    """Member f_b of a lookup family."""

    family: "LookupFamily"
    b: tuple[int, ...]

    alphabet = BINARY

    def next_token(self, x: TokenSeq) -> int:
        return self.family._eval(self.b, x.tokens)


class LookupFamily(GeneratorFamily):
    """Shared enumeration plumbing for the bit-indexed families."""

    alphabet = BINARY

    @property
    def index_bits(self) -> int:
        raise NotImplementedError

    def _eval(self, b: tuple[int, ...], tokens: Sequence[int]) -> int:
        raise NotImplementedError

    def size(self) -> int:
        return 1 << self.index_bits

    def member(self, code: int) -> LookupGenerator:
        bits = tuple((code >> j) & 1 for j in range(self.index_bits))
        return LookupGenerator(self, bits)

    def from_bits(self, bits: Sequence[int]) -> LookupGenerator:
        return LookupGenerator(self, tuple(bits))

    def _enum_guard(self) -> None:
        if self.index_bits > E1_ENUM_GUARD_BITS:
            raise GuardExceededError(
                f"2^{self.index_bits} members exceed the enumeration guard 2^{E1_ENUM_GUARD_BITS}"
            )

    def members(self) -> Iterator[LookupGenerator]:
        self._enum_guard()
        for code in range(self.size()):
            yield self.member(code)

    def default_member(self) -> LookupGenerator:
        return self.member(0)

    def random_member(self, rng) -> LookupGenerator:
        return self.member(rng.getrandbits(self.index_bits))

    def canonical_points(self) -> tuple[TokenSeq, ...]:
        return tuple(BINARY.seq(p) for p in self._points)

    def cons_oracle(self):
        def oracle(pairs):
            for f in self.members():
                if all(f.next_token(u) == v for u, v in pairs):
                    return f
            raise NotRealizableError("no family member is consistent with the data")

        return oracle


@dataclass(frozen=True)
class E1Family(LookupFamily):
    """DT-bit family whose T-step answers shatter its D*T canonical points.

    On point k with column c = ((k-1) mod D) + 1, member f_b emits the
    column bits b_c, b_{D+c}, ... for T-1 steps and then the point's own
    bit b_k; any input that is not a point plus a faithful partial replay
    of its column maps to 0.
    """

    D: int
    T: int

    def __post_init__(self):
        if self.D < 1 or self.T < 1:
            raise ValueError("need D >= 1 and T >= 1")

    @property
    def index_bits(self) -> int:
        return self.D * self.T

    @cached_property
    def _points(self) -> tuple[tuple[int, ...], ...]:
        return _numbered_points(self.D * self.T)

    @cached_property
    def point_len(self) -> int:
        return len(self._points[0])

    def _decode(self, tokens: Sequence[int]):
        body = _strip_zeros(tokens)
        plen = self.point_len
        if len(body) < plen:
            return None
        value = 0
        for bit in body[1:plen]:
            value = (value << 1) | bit
        k = value + 1
        if body[0] != 1 or k > self.D * self.T:
            return None
        return k, body[plen:]

    def _column_index(self, k: int, row: int) -> int:
        # 1-based position in b of the row-th column emission for point k
        return row * self.D + ((k - 1) % self.D) + 1

    def _eval(self, b: tuple[int, ...], tokens: Sequence[int]) -> int:
        dec = self._decode(tokens)
        if dec is None:
            return 0
        k, cont = dec
        ell = len(cont)
        if ell > self.T - 1:
            return 0
        for r, bit in enumerate(cont):
            if b[self._column_index(k, r) - 1] != bit:
                return 0
        if ell == self.T - 1:
            return b[k - 1]
        return b[self._column_index(k, ell) - 1]

    def cons_oracle(self):
        """Consistency for (prefix, next-bit) pairs without enumerating 2^(DT) members.

        Every pair either forces specific b-bits (when the prefix replays
        a column, which is always the case for data generated by a family
        member) or is satisfiable only with label 0. If the forced bits
        conflict, the solver falls back to enumeration where the guard
        allows; data that needs the fallback cannot have come from a
        single member.
        """

        def oracle(pairs):
            assign: dict[int, int] = {}
            unified = True
            for u, v in pairs:
                if u.alphabet != BINARY or v not in (0, 1):
                    raise ValueError("family data must be binary")
                dec = self._decode(u.tokens)
                forced: list[tuple[int, int]] = []
                if dec is None:
                    needs_zero = True
                else:
                    k, cont = dec
                    ell = len(cont)
                    if ell > self.T - 1:
                        needs_zero = True
                    else:
                        needs_zero = False
                        forced = [
                            (self._column_index(k, r), bit) for r, bit in enumerate(cont)
                        ]
                        out_idx = k if ell == self.T - 1 else self._column_index(k, ell)
                        forced.append((out_idx, v))
                if needs_zero:
                    if v != 0:
                        raise NotRealizableError(
                            "label 1 on an input every family member maps to 0"
                        )
                    continue
                for idx, bit in forced:
                    if assign.setdefault(idx, bit) != bit:
                        unified = False
                        break
                if not unified:
                    break
            if unified:
                bits = tuple(assign.get(j + 1, 0) for j in range(self.index_bits))
                f = self.from_bits(bits)
                assert all(f.next_token(u) == v for u, v in pairs)
                return f
            # Mutually inconsistent replays: decidable only by search.
            self._enum_guard()
            for f in self.members():
                if all(f.next_token(u) == v for u, v in pairs):
                    return f
            raise NotRealizableError("no family member is consistent with the data")

        return oracle

    def find_e2e_consistent(self, pairs, T: int):
        """Fast path for canonical-point prompts: answer k pins bit b_k.

        Matches the generic first-member scan exactly (the zero fill is
        the enumeration-minimal completion of forced bits); non-point
        prompts fall back to the generic scan.
        """
        if T != self.T:
            return super().find_e2e_consistent(pairs, T)
        assign: dict[int, int] = {}
        for x, y in pairs:
            dec = self._decode(x.tokens)
            if dec is None or dec[1] != ():
                return super().find_e2e_consistent(pairs, T)
            k = dec[0]
            if assign.setdefault(k, y) != y:
                return None
        bits = tuple(assign.get(j + 1, 0) for j in range(self.index_bits))
        f = self.from_bits(bits)
        assert all(e2e(f, x, T) == y for x, y in pairs)
        return f


@dataclass(frozen=True)
class LdimFamily(LookupFamily):
    """D-bit family: replay b_1..b_D from any point, then repeat the point's bit."""

    D: int

    def __post_init__(self):
        if not 1 <= self.D <= LDIM_MAX_D:
            raise ValueError(f"need 1 <= D <= {LDIM_MAX_D}")

    @property
    def index_bits(self) -> int:
        return self.D

    @cached_property
    def _points(self) -> tuple[tuple[int, ...], ...]:
        return _numbered_points(self.D)

    @cached_property
    def point_len(self) -> int:
        return len(self._points[0])

    def _decode(self, tokens: Sequence[int]):
        body = _strip_zeros(tokens)
        plen = self.point_len
        if len(body) < plen or body[0] != 1:
            return None
        value = 0
        for bit in body[1:plen]:
            value = (value << 1) | bit
        k = value + 1
        if k > self.D:
            return None
        return k, body[plen:]

    def _eval(self, b: tuple[int, ...], tokens: Sequence[int]) -> int:
        dec = self._decode(tokens)
        if dec is None:
            return 0
        k, cont = dec
        ell = len(cont)
        if ell < self.D:
            for r in range(ell):
                if cont[r] != b[r]:
                    return 0
            return b[ell]
        if cont[:self.D] != b:
            return 0
        if any(bit != b[k - 1] for bit in cont[self.D:]):
            return 0
        return b[k - 1]


@dataclass(frozen=True)
class CollapseFamily(LookupFamily):
    """D-bit family mapping point k to b_k and everything else to 0.

    Points carry a trailing 1, so appending any generated token leaves
    the point set; after two steps every member answers 0.
    """

    D: int

    def __post_init__(self):
        if not 1 <= self.D <= COLLAPSE_MAX_D:
            raise ValueError(f"need 1 <= D <= {COLLAPSE_MAX_D}")

    @property
    def index_bits(self) -> int:
        return self.D

    @cached_property
    def _points(self) -> tuple[tuple[int, ...], ...]:
        return _numbered_points(self.D, trailing_one=True)

    def _eval(self, b: tuple[int, ...], tokens: Sequence[int]) -> int:
        body = _strip_zeros(tokens)
        try:
            k = self._points.index(body) + 1
        except ValueError:
            return 0
        return b[k - 1]


def make_e1_family(D: int, T: int) -> E1Family:
    return E1Family(D, T)


def make_ldim_family(D: int) -> LdimFamily:
    return LdimFamily(D)


def make_collapse_family(D: int) -> CollapseFamily:
    return CollapseFamily(D)


@dataclass(frozen=True)
class PointPool:
    """The finite search domain a brute-force dimension estimate ran over."""

    points: tuple[TokenSeq, ...]

    def __post_init__(self):
        seen = set()
        for p in self.points:
            key = p.tokens
            if key in seen:
                raise ValueError("pool points must be distinct")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.points)


def default_pool(family: LookupFamily) -> PointPool:
    """Canonical points plus their one-token continuations, capped at the guard."""
    pts = [p.tokens for p in family.canonical_points()]
    extended = list(pts)
    for p in pts:
        for bit in (0, 1):
            if len(extended) >= POOL_CAP:
                break
            cand = p + (bit,)
            if cand not in extended:
                extended.append(cand)
    return PointPool(tuple(BINARY.seq(p) for p in extended[:POOL_CAP]))


def _behavior_masks(family: GeneratorFamily, points: Sequence[TokenSeq], mode: str, T: int | None) -> set[int]:
    size = family.size()
    if size is None or size > VC_MEMBER_GUARD:
        raise GuardExceededError("family too large for brute-force behavior enumeration")
    if mode == "base":
        label = lambda f, x: f.next_token(x)
    elif mode == "e2e":
        if T is None:
            raise ValueError("e2e mode needs a generation length T")
        label = lambda f, x: e2e(f, x, T)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    masks = set()
    for f in family.members():
        mask = 0
        for j, x in enumerate(points):
            bit = label(f, x)
            if bit not in (0, 1):
                raise ValueError("brute-force dimensions assume binary outputs")
            mask |= bit << j
        masks.add(mask)
    return masks


def vcdim_bruteforce(family: GeneratorFamily, pool: PointPool, mode: str = "base", T: int | None = None) -> int:
    """Largest pool subset on which the family realizes all labelings.

    Searches subset sizes in increasing order and stops at the first size
    with no shattered subset, which is valid because shattering is
    monotone under taking subsets.
    """
    if len(pool) > POOL_GUARD:
        raise GuardExceededError(f"pool of {len(pool)} exceeds the guard {POOL_GUARD}")
    masks = _behavior_masks(family, pool.points, mode, T)
    npoints = len(pool)
    dim = 0
    for k in range(1, npoints + 1):
        if len(masks) < (1 << k):
            break
        found = False
        for subset in itertools.combinations(range(npoints), k):
            projections = {
                sum(((m >> p) & 1) << j for j, p in enumerate(subset)) for m in masks
            }
            if len(projections) == (1 << k):
                found = True
                break
        if not found:
            break
        dim = k
    return dim


def growth_count(family: GeneratorFamily, points: Sequence[TokenSeq], mode: str = "base", T: int | None = None) -> int:
    """Number of distinct behavior vectors the family induces on the points."""
    return len(_behavior_masks(family, points, mode, T))


def loss_class_behavior_count(family: GeneratorFamily, seqs: Sequence[TokenSeq], T: int) -> int:
    """Behaviors of the full-generation 0/1 loss on given generation records.

    For each member, the vector over records z of "does the member's
    T-step generation from z's prompt reproduce z exactly".
    """
    size = family.size()
    if size is None or size > VC_MEMBER_GUARD:
        raise GuardExceededError("family too large for brute-force behavior enumeration")
    behaviors = set()
    for f in family.members():
        vec = []
        for z in seqs:
            prompt = z[:-(T + 1)]
            vec.append(0 if cot(f, prompt, T).tokens == z.tokens else 1)
        behaviors.add(tuple(vec))
    return len(behaviors)


def parse_family_spec(text: str):
    """Parse "e1:D=2,T=4", "ldim:D=3", or "collapse:D=4"."""
    name, _, arg_text = text.partition(":")
    name = name.strip().lower()
    args = {}
    if arg_text.strip():
        for part in arg_text.split(","):
            key, _, val = part.partition("=")
            if not val:
                raise ValueError(f"malformed family argument {part!r}")
            args[key.strip().lower()] = int(val)
    try:
        if name == "e1":
            return E1Family(args.pop("d"), args.pop("t"))
        if name == "ldim":
            return LdimFamily(args.pop("d"))
        if name == "collapse":
            return CollapseFamily(args.pop("d"))
    except KeyError as missing:
        raise ValueError(f"family {name!r} needs argument {missing}") from None
    raise ValueError(f"unknown family {name!r}")
