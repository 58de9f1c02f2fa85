"""Datasets, consistency learning rules, and the PAC trial harness.

Two supervision regimes share one evaluation target, the T-step answer.
Full-generation supervision reduces to a single next-token consistency
call: each length-(|x|+T) record expands into T (prefix, next token)
pairs, and any generator consistent with all of them reproduces every
record end to end. Answer-only supervision searches the family for a
member whose T-step answers match.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .seqcore import (
    BINARY,
    Alphabet,
    Generator,
    GeneratorFamily,
    NotRealizableError,
    TokenSeq,
    cot,
    e2e,
)

EXACT_EVAL_SUPPORT = 4096


@dataclass(frozen=True)
class E2EDataset:
    """(prompt, final answer) pairs for a declared generation length."""

    pairs: tuple[tuple[TokenSeq, int], ...]
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("generation length T must be at least 1")
        for x, y in self.pairs:
            if x.alphabet != self.alphabet:
                raise ValueError("all prompts must share one alphabet")
            if not 0 <= y < len(self.alphabet):
                raise ValueError("label outside the alphabet")

    @property
    def alphabet(self) -> Alphabet:
        if not self.pairs:
            raise ValueError("empty dataset has no alphabet")
        return self.pairs[0][0].alphabet

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class CoTDataset:
    """Full generation records; record i is the prompt followed by its T outputs."""

    seqs: tuple[TokenSeq, ...]
    T: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("generation length T must be at least 1")
        for z in self.seqs:
            if len(z) < self.T + 1:
                raise ValueError(
                    f"record of length {len(z)} cannot carry {self.T} generated tokens"
                )
            if z.alphabet != self.seqs[0].alphabet:
                raise ValueError("all records must share one alphabet")

    def __len__(self) -> int:
        return len(self.seqs)

    def prompt(self, i: int) -> TokenSeq:
        return self.seqs[i][:-(self.T + 1)]


@dataclass(frozen=True)
class PrefixDataset:
    """(prefix, next token) supervision pairs."""

    pairs: tuple[tuple[TokenSeq, int], ...]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def prefix_expand(dataset: CoTDataset) -> PrefixDataset:
    """Expand each record into its T (prefix, next token) pairs.

    For a record z and each t = 1..T the pair is (z without its last t
    tokens, the t-th token from the end), so the output has exactly
    len(dataset) * T pairs.
    """
    pairs = []
    for z in dataset.seqs:
        for t in range(1, dataset.T + 1):
            pairs.append((z[:-(t + 1)], z[-t]))
    return PrefixDataset(tuple(pairs))


ConsistencyOracle = Callable[[Sequence[tuple[TokenSeq, int]]], Generator]


def cons_cot(dataset: CoTDataset, oracle: ConsistencyOracle) -> Generator:
    """Generator whose full T-step generations reproduce every record.

    Runs the family's next-token consistency procedure on the prefix
    expansion, then re-verifies the returned generator against each
    record in full.
    """
    pairs = prefix_expand(dataset).pairs
    f = oracle(pairs)
    for i, z in enumerate(dataset.seqs):
        if cot(f, dataset.prompt(i), dataset.T).tokens != z.tokens:
            raise NotRealizableError(
                f"oracle returned a generator that fails to reproduce record {i}"
            )
    return f


def cons_e2e(dataset: E2EDataset, family: GeneratorFamily) -> Generator:
    """First family member (canonical order) matching every final answer."""
    if not dataset.pairs:
        return family.default_member()
    f = family.find_e2e_consistent(dataset.pairs, dataset.T)
    if f is None:
        raise NotRealizableError("no family member matches all the final answers")
    return f


def zero_one_error(h: Callable[[TokenSeq], int], eval_set: E2EDataset) -> Fraction:
    """Fraction of evaluation pairs the predictor gets wrong."""
    if not eval_set.pairs:
        raise ValueError("cannot score on an empty evaluation set")
    wrong = sum(1 for x, y in eval_set.pairs if h(x) != y)
    return Fraction(wrong, len(eval_set.pairs))


def e2e_predictor(f: Generator, T: int) -> Callable[[TokenSeq], int]:
    return lambda x: e2e(f, x, T)


class PromptDist:
    """A sampleable prompt distribution; uniform over ``support()`` when finite."""

    def sample(self, rng: random.Random) -> TokenSeq:
        raise NotImplementedError

    def support(self) -> tuple[TokenSeq, ...] | None:
        """All prompts when the distribution is uniform over an enumerable set."""
        return None


@dataclass(frozen=True)
class FiniteUniformPrompts(PromptDist):
    points: tuple[TokenSeq, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("need at least one prompt")

    def sample(self, rng: random.Random) -> TokenSeq:
        return self.points[rng.randrange(len(self.points))]

    def support(self) -> tuple[TokenSeq, ...]:
        return self.points


@dataclass(frozen=True)
class BitStringPrompts(PromptDist):
    """Uniform over binary strings with lengths in [min_len, max_len].

    A length is drawn uniformly, then bits uniformly; the support is
    reported only when small enough for exact evaluation.
    """

    min_len: int
    max_len: int

    def __post_init__(self):
        if not 0 <= self.min_len <= self.max_len:
            raise ValueError("need 0 <= min_len <= max_len")

    def sample(self, rng: random.Random) -> TokenSeq:
        n = rng.randint(self.min_len, self.max_len)
        return BINARY.seq(rng.randint(0, 1) for _ in range(n))

    def support(self) -> tuple[TokenSeq, ...] | None:
        total = sum(2 ** n for n in range(self.min_len, self.max_len + 1))
        if total > EXACT_EVAL_SUPPORT:
            return None
        pts = []
        for n in range(self.min_len, self.max_len + 1):
            for bits in itertools.product((0, 1), repeat=n):
                pts.append(BINARY.seq(bits))
        return tuple(pts)


@dataclass(frozen=True)
class PacTrialResult:
    error: Fraction
    m: int
    mode: str
    learned: Generator
    exact_eval: bool


def trial_seed(experiment_seed: int, trial_index: int) -> int:
    """Stable 64-bit per-trial seed so result rows are reproducible."""
    x = (experiment_seed * 0x9E3779B97F4A7C15 + trial_index * 0xBF58476D1CE4E5B9) & (2**64 - 1)
    x ^= x >> 31
    return x


def pac_trial(
    family: GeneratorFamily,
    f_star: Generator,
    input_dist: PromptDist,
    m: int,
    T: int,
    mode: str,
    eval_n: int,
    seed: int,
) -> PacTrialResult:
    """One learning trial: sample m prompts, learn, score held out.

    The error is exact (full support average) when the distribution
    exposes a support of at most 4096 prompts, otherwise a Monte Carlo
    estimate on eval_n fresh prompts. A fixed seed fixes the output.
    """
    if mode not in ("cot", "e2e"):
        raise ValueError("mode must be 'cot' or 'e2e'")
    if m < 0 or eval_n < 1:
        raise ValueError("need m >= 0 and eval_n >= 1")
    rng = random.Random(seed)
    prompts = [input_dist.sample(rng) for _ in range(m)]

    if mode == "cot":
        oracle = family.cons_oracle()
        if oracle is None:
            raise ValueError("family offers no next-token consistency oracle")
        data = CoTDataset(tuple(cot(f_star, x, T) for x in prompts), T)
        learned = cons_cot(data, oracle)
    else:
        pairs = tuple((x, e2e(f_star, x, T)) for x in prompts)
        learned = cons_e2e(E2EDataset(pairs, T), family)

    support = input_dist.support()
    if support is not None and len(support) <= EXACT_EVAL_SUPPORT:
        eval_pairs = tuple((x, e2e(f_star, x, T)) for x in support)
        exact = True
    else:
        eval_pairs = tuple(
            (x, e2e(f_star, x, T)) for x in (input_dist.sample(rng) for _ in range(eval_n))
        )
        exact = False
    err = zero_one_error(e2e_predictor(learned, T), E2EDataset(eval_pairs, T))
    return PacTrialResult(error=err, m=m, mode=mode, learned=learned, exact_eval=exact)


def load_cot_dataset(path: str, alphabet: Alphabet, T: int) -> CoTDataset:
    """One comma-separated record per line."""
    seqs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                seqs.append(alphabet.parse_seq(line))
    return CoTDataset(tuple(seqs), T)


def load_e2e_dataset(path: str, alphabet: Alphabet, T: int) -> E2EDataset:
    """One "sequence<TAB>label" pair per line."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            try:
                seq_text, label_text = line.split("\t")
            except ValueError:
                raise ValueError(f"expected 'sequence<TAB>label', got {line!r}") from None
            pairs.append((alphabet.parse_seq(seq_text), alphabet.index(label_text.strip())))
    return E2EDataset(tuple(pairs), T)


def save_cot_dataset(path: str, dataset: CoTDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for z in dataset.seqs:
            fh.write(z.render() + "\n")


def save_e2e_dataset(path: str, dataset: E2EDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for x, y in dataset.pairs:
            fh.write(f"{x.render()}\t{x.alphabet.render(y)}\n")
