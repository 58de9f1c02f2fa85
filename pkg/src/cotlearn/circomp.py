"""Layered threshold circuits and their embedding into one iterated threshold.

A circuit value is thr(z) = 1 iff z >= 0 at every gate; gates read the
inputs and all earlier layers. The compiler turns a normalized circuit
into a single fixed weight vector that, iterated autoregressively on a
padded copy of the input, writes every gate value at a scheduled step
and a 0 everywhere else, finishing with the circuit output. Gate
scheduling works by spacing gate weights with zero padding so that at
each scheduled step exactly one embedded gate aligns with the live part
of the sequence; a large negative sentinel aligned with the leading 1
forces the output to 0 at every unscheduled step.

All arithmetic is exact: the off-schedule argument compares pre-threshold
sums against -1, which floating point must not be allowed to blur.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .seqcore import BINARY, GuardExceededError, TokenSeq
from .linthresh import LinearThreshold

VERIFY_MAX_INPUTS = 12


@dataclass(frozen=True)
class ThresholdCircuit:
    """Layered threshold circuit; the output is the last gate of the last layer.

    ``layers[l][i]`` is the weight vector of gate i in layer l+1, over
    the ``n + (width of earlier layers)`` predecessors in order: inputs,
    then layer 1 gates, then layer 2 gates, and so on.
    """

    n: int
    layers: tuple[tuple[tuple[Fraction, ...], ...], ...]

    def __post_init__(self):
        if self.n < 1 or not self.layers or any(not layer for layer in self.layers):
            raise ValueError("circuit needs at least one input and one gate per layer")
        preds = self.n
        for layer in self.layers:
            for gate in layer:
                if len(gate) != preds:
                    raise ValueError(
                        f"gate arity {len(gate)} does not match its {preds} predecessors"
                    )
            preds += len(layer)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def widths(self) -> tuple[int, ...]:
        return tuple(len(layer) for layer in self.layers)

    @property
    def width(self) -> int:
        return max(self.widths)


def make_circuit(n: int, layers) -> ThresholdCircuit:
    return ThresholdCircuit(
        n,
        tuple(tuple(tuple(Fraction(w) for w in gate) for gate in layer) for layer in layers),
    )


def eval_circuit_values(circuit: ThresholdCircuit, x: Sequence[int]) -> list[tuple[int, ...]]:
    """Values of every gate, one tuple per layer."""
    if len(x) != circuit.n:
        raise ValueError(f"input length {len(x)} does not match n={circuit.n}")
    if any(bit not in (0, 1) for bit in x):
        raise ValueError("circuit inputs are bits")
    known: list[int] = list(x)
    out: list[tuple[int, ...]] = []
    for layer in circuit.layers:
        vals = tuple(
            1 if sum(w * v for w, v in zip(gate, known) if w != 0) >= 0 else 0
            for gate in layer
        )
        out.append(vals)
        known.extend(vals)
    return out


def eval_circuit(circuit: ThresholdCircuit, x: Sequence[int]) -> int:
    """Circuit output: the value of the last gate of the last layer."""
    return eval_circuit_values(circuit, x)[-1][-1]


def is_normalized(circuit: ThresholdCircuit) -> bool:
    """Uniform layer widths, and the last node of the input layer and of
    every earlier gate layer has zero weight into all later gates."""
    widths = circuit.widths
    if len(set(widths)) != 1:
        return False
    s = widths[0]
    for l, layer in enumerate(circuit.layers):
        for gate in layer:
            if gate[circuit.n - 1] != 0:
                return False
            for earlier in range(l):
                if gate[circuit.n + earlier * s + (s - 1)] != 0:
                    return False
    return True


def normalize_circuit(circuit: ThresholdCircuit) -> ThresholdCircuit:
    """Pad to uniform width with zero-weight dummy gates and a dummy input.

    Dummy gates go last in every layer except the output layer, where
    they are inserted before the output gate so it stays last. The added
    input and gates carry zero weight everywhere, so evaluation is
    unchanged on the original inputs. Idempotent: a circuit that already
    satisfies the convention is returned as is.
    """
    if is_normalized(circuit):
        return circuit
    n_new = circuit.n + 1
    s_new = circuit.width + 1
    old_widths = circuit.widths
    new_layers = []
    for l, layer in enumerate(circuit.layers):
        remapped = [_remap_gate(circuit, gate, n_new, s_new) for gate in layer]
        preds = n_new + l * s_new
        dummy = tuple(Fraction(0) for _ in range(preds))
        pad = [dummy] * (s_new - old_widths[l])
        if l == len(circuit.layers) - 1:
            new_layer = remapped[:-1] + pad + [remapped[-1]]
        else:
            new_layer = remapped + pad
        new_layers.append(tuple(new_layer))
    return ThresholdCircuit(n_new, tuple(new_layers))


def _remap_gate(circuit: ThresholdCircuit, gate, n_new: int, s_new: int):
    """Re-lay a gate's weights over the padded predecessor layout."""
    out = list(gate[:circuit.n]) + [Fraction(0)] * (n_new - circuit.n)
    offset = circuit.n
    for width in circuit.widths:
        block = gate[offset:offset + width]
        if not block:
            break
        out.extend(block)
        out.extend(Fraction(0) for _ in range(s_new - width))
        offset += width
    return tuple(out)


def feature_map(x: Sequence[int], T: int) -> TokenSeq:
    """Generation prompt for input bits: a 1, then T-1 zeros, then x."""
    if any(bit not in (0, 1) for bit in x):
        raise ValueError("inputs are bits")
    return BINARY.seq([1] + [0] * (T - 1) + list(x))


@dataclass(frozen=True)
class CompiledThreshold:
    """Iterated-threshold embedding of a circuit.

    ``w`` concatenates the step-schedule sentinel block with the padded
    per-layer gate blocks (deepest layer first); ``gate_times[l][i]`` is
    the generation step at which gate (l+1, i+1) is emitted, and those
    steps make up ``t_indices``. ``B`` exceeds the total l1 weight of the
    circuit, which is what pins off-schedule sums at or below -1.
    """

    w: tuple[Fraction, ...]
    T: int
    d: int
    tilde_p: tuple[int, ...]
    gate_times: tuple[tuple[int, ...], ...]
    t_indices: frozenset[int]
    B: Fraction
    n: int
    s: int
    L: int

    def generator(self) -> LinearThreshold:
        return LinearThreshold(self.w, Fraction(0))


def compile_circuit(circuit: ThresholdCircuit) -> CompiledThreshold:
    """Embed a normalized circuit into one time-invariant linear threshold.

    The block sizes follow the ladder p[1] = n, p[l+1] = (s+1) p[l]; each
    gate weight from layer l gets p[l] - 1 zeros inserted in front of it
    so that, at the gate's scheduled step, circuit weights align exactly
    with previously emitted gate values and everything else aligns with
    padding zeros.
    """
    if not is_normalized(circuit):
        raise ValueError("compile requires a normalized circuit")
    n = circuit.n
    s = circuit.width
    L = circuit.depth

    tilde_p = [n]
    for _ in range(L):
        tilde_p.append((s + 1) * tilde_p[-1])
    # tilde_p[l - 1] is the padded block size for layer l gates.

    def embed(gate, l: int) -> list[Fraction]:
        out = list(gate[:n])
        for earlier in range(1, l + 1):
            pad = [Fraction(0)] * (tilde_p[earlier - 1] - 1)
            for j in range(s):
                out.extend(pad)
                out.append(gate[n + (earlier - 1) * s + j])
        return out

    blocks: list[list[Fraction]] = []  # v_L, ..., v_1 in emission-reverse order
    total_l1 = Fraction(0)
    for l in range(L, 0, -1):
        layer = circuit.layers[l - 1]
        block: list[Fraction] = []
        for gate in reversed(layer):
            emb = embed(gate, l - 1)
            assert len(emb) == tilde_p[l - 1], "padded gate size must equal the ladder value"
            block.extend(emb)
        blocks.append(block)
        total_l1 += sum(abs(w) for gate in layer for w in gate)

    T = tilde_p[L] - n
    gate_times = []
    prev_last = 0
    for l in range(1, L + 1):
        times = tuple(prev_last + i * tilde_p[l - 1] for i in range(1, s + 1))
        gate_times.append(times)
        prev_last = times[-1]
    assert gate_times[-1][-1] == T, "the output gate must be scheduled at step T"
    scheduled = frozenset(t for times in gate_times for t in times)

    B = 1 + total_l1
    sentinel = [Fraction(0)] * T
    for t in range(1, T + 1):
        if t not in scheduled:
            sentinel[T - t] = -B  # sentinel[-t] pairs with the leading 1 at step t

    w = list(sentinel)
    for block in blocks:
        w.extend(block)
    w.extend(Fraction(0) for _ in range(n - 1))
    d = len(w)
    assert d == T + tilde_p[L] - 1 and d <= 2 * tilde_p[L]

    return CompiledThreshold(
        w=tuple(w),
        T=T,
        d=d,
        tilde_p=tuple(tilde_p),
        gate_times=tuple(gate_times),
        t_indices=scheduled,
        B=B,
        n=n,
        s=s,
        L=L,
    )


@dataclass(frozen=True)
class VerificationFailure:
    x: tuple[int, ...]
    step: int  # 0 marks the final-answer check
    kind: str
    detail: str


@dataclass(frozen=True)
class VerificationReport:
    ok: bool
    inputs_checked: int
    failures: tuple[VerificationFailure, ...]
    T: int
    d: int

    def summary(self) -> str:
        if self.ok:
            return f"OK {self.inputs_checked}/{self.inputs_checked} inputs (T={self.T}, d={self.d})"
        return (
            f"FAILED {len(self.failures)} checks over {self.inputs_checked} inputs "
            f"(T={self.T}, d={self.d})"
        )


def verify_compilation(circuit: ThresholdCircuit, compiled: CompiledThreshold) -> VerificationReport:
    """Exhaustively check the compiled threshold against the circuit.

    For every input: (a) the step-T answer equals the circuit output,
    (b) the token at each scheduled step equals that gate's value,
    (c) every off-schedule token is 0 with pre-threshold sum <= -1.
    Failures are reported, not raised.
    """
    n = circuit.n
    if n > VERIFY_MAX_INPUTS:
        raise GuardExceededError(f"refusing to enumerate 2^{n} inputs (guard is {VERIFY_MAX_INPUTS})")

    scale = math.lcm(*[f.denominator for f in compiled.w] or [1])
    w_int = [int(f * scale) for f in compiled.w]
    d = compiled.d
    T = compiled.T
    time_of_gate = {
        (l + 1, i + 1): t
        for l, times in enumerate(compiled.gate_times)
        for i, t in enumerate(times)
    }

    failures: list[VerificationFailure] = []
    count = 0
    for x in itertools.product((0, 1), repeat=n):
        count += 1
        gate_vals = eval_circuit_values(circuit, x)
        seq = list(feature_map(x, T).tokens)
        produced: list[int] = []
        sums: list[int] = []
        for _ in range(T):
            m = len(seq)
            window = min(d, m)
            acc = 0
            for i in range(1, window + 1):
                if seq[m - i]:
                    acc += w_int[d - i]
            bit = 1 if acc >= 0 else 0
            produced.append(bit)
            sums.append(acc)
            seq.append(bit)

        for (l, i), t in time_of_gate.items():
            expect = gate_vals[l - 1][i - 1]
            if produced[t - 1] != expect:
                failures.append(VerificationFailure(x, t, "gate-step", f"gate ({l},{i}) expected {expect} got {produced[t - 1]}"))
        for t in range(1, T + 1):
            if t in compiled.t_indices:
                continue
            if produced[t - 1] != 0:
                failures.append(VerificationFailure(x, t, "off-schedule-token", f"got {produced[t - 1]}"))
            if sums[t - 1] > -scale:
                failures.append(VerificationFailure(x, t, "off-schedule-sum", f"sum {Fraction(sums[t - 1], scale)} > -1"))
        answer = eval_circuit(circuit, x)
        if produced[-1] != answer:
            failures.append(VerificationFailure(x, 0, "final-answer", f"expected {answer} got {produced[-1]}"))

    return VerificationReport(
        ok=not failures,
        inputs_checked=count,
        failures=tuple(failures),
        T=T,
        d=d,
    )


def random_normalized_circuit(rng, n: int, s: int, L: int, weight_range: int = 2) -> ThresholdCircuit:
    """Random integer-weight circuit already satisfying the normal form."""
    layers = []
    for l in range(L):
        preds = n + l * s
        layer = []
        for _ in range(s):
            gate = [Fraction(rng.randint(-weight_range, weight_range)) for _ in range(preds)]
            gate[n - 1] = Fraction(0)
            for earlier in range(l):
                gate[n + earlier * s + (s - 1)] = Fraction(0)
            layer.append(tuple(gate))
        layers.append(tuple(layer))
    return ThresholdCircuit(n, tuple(layers))


def fold_bias(n: int, layers_with_bias) -> ThresholdCircuit:
    """Build a circuit whose gates carry a bias, folded onto an extra always-one input.

    ``layers_with_bias`` holds (weights, bias) pairs per gate; the result
    has n + 1 inputs and must be evaluated on x extended with a 1.
    """
    new_layers = []
    for layer in layers_with_bias:
        new_layer = []
        for weights, bias in layer:
            weights = [Fraction(w) for w in weights]
            pred_inputs = weights[:n]
            rest = weights[n:]
            new_layer.append(tuple(pred_inputs + [Fraction(bias)] + rest))
        new_layers.append(tuple(new_layer))
    return ThresholdCircuit(n + 1, tuple(new_layers))


def eval_with_bias(circuit: ThresholdCircuit, x: Sequence[int]) -> int:
    """Evaluate a bias-folded circuit on the original n-bit input."""
    return eval_circuit(circuit, list(x) + [1])


def format_circuit(circuit: ThresholdCircuit) -> str:
    """Serialize a uniform-width circuit: "n s L" header, then one gate per line."""
    widths = set(circuit.widths)
    if len(widths) != 1:
        raise ValueError("only uniform-width circuits have a file form; normalize first")
    s = widths.pop()
    lines = [f"{circuit.n} {s} {circuit.depth}"]
    for l, layer in enumerate(circuit.layers, start=1):
        for i, gate in enumerate(layer, start=1):
            lines.append(f"{l} {i} : " + " ".join(str(w) for w in gate))
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> ThresholdCircuit:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ValueError("empty circuit file")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError("header must be 'n s L'")
    n, s, L = (int(p) for p in head)
    gates: dict[tuple[int, int], tuple[Fraction, ...]] = {}
    for ln in lines[1:]:
        try:
            lhs, rhs = ln.split(":", 1)
            l_s, i_s = lhs.split()
            weights = tuple(Fraction(p) for p in rhs.split())
        except ValueError:
            raise ValueError(f"malformed gate line: {ln!r}") from None
        l, i = int(l_s), int(i_s)
        if not (1 <= l <= L and 1 <= i <= s):
            raise ValueError(f"gate ({l},{i}) outside the declared {L}x{s} grid")
        if (l, i) in gates:
            raise ValueError(f"duplicate gate ({l},{i})")
        expected = n + (l - 1) * s
        if len(weights) != expected:
            raise ValueError(f"gate ({l},{i}) needs {expected} weights, got {len(weights)}")
        gates[(l, i)] = weights
    if len(gates) != L * s:
        raise ValueError(f"expected {L * s} gates, got {len(gates)}")
    layers = tuple(
        tuple(gates[(l, i)] for i in range(1, s + 1)) for l in range(1, L + 1)
    )
    return ThresholdCircuit(n, layers)
