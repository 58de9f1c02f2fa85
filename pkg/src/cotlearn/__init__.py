"""Time-invariant autoregressive chain-of-thought generation and learning."""

from .seqcore import (
    BINARY,
    Alphabet,
    AlphabetMismatchError,
    ConstantGenerator,
    Generator,
    GeneratorFamily,
    GuardExceededError,
    NotRealizableError,
    TokenSeq,
    apply_and_append,
    cot,
    cot_time_dependent,
    e2e,
)

__all__ = [
    "Alphabet",
    "AlphabetMismatchError",
    "BINARY",
    "ConstantGenerator",
    "Generator",
    "GeneratorFamily",
    "GuardExceededError",
    "NotRealizableError",
    "TokenSeq",
    "apply_and_append",
    "cot",
    "cot_time_dependent",
    "e2e",
]
