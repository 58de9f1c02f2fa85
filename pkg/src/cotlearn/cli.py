"""Command-line front end: generation, learning, circuit compilation,
machine simulation, dimension estimates, and experiment grids.

Exit codes: 0 success, 1 invariant or verification failure, 2 input
error. Worker count for experiment grids comes from COTLEARN_WORKERS.
"""

from __future__ import annotations

import argparse
import csv
import os
import statistics
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import circomp, lbfamilies, linthresh, turing
from .learning import (
    BitStringPrompts,
    FiniteUniformPrompts,
    PromptDist,
    cons_cot,
    cons_e2e,
    load_cot_dataset,
    load_e2e_dataset,
    pac_trial,
    trial_seed,
)
from .seqcore import BINARY, GuardExceededError, NotRealizableError, cot

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _fail(msg: str, code: int) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------- generate


def cmd_generate(args) -> int:
    try:
        if args.kind == "tm":
            spec = turing.parse_tm(_read(args.file))
            omega = _parse_bits(args.input if args.input is not None else "")
            prompt = turing.pre(omega, spec.S)
            f = turing.generator_for(spec)
        else:
            f = linthresh.parse_threshold(_read(args.file).strip())
            prompt = BINARY.parse_seq(args.prompt or "")
        T = args.T
        out = cot(f, prompt, T)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    print(out.render())
    return EXIT_OK


def _parse_bits(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    if any(ch not in "01" for ch in text):
        raise ValueError(f"input must be a bit string, got {text!r}")
    return [int(ch) for ch in text]


# ------------------------------------------------------------------- learn


@dataclass(frozen=True)
class _FamilyHandle:
    family: object
    T_default: int | None


def _resolve_family(spec_text: str):
    name, _, arg_text = spec_text.partition(":")
    name = name.strip().lower()
    if name in ("e1", "ldim", "collapse"):
        fam = lbfamilies.parse_family_spec(spec_text)
        T_default = fam.T if isinstance(fam, lbfamilies.E1Family) else None
        return _FamilyHandle(fam, T_default)
    kv = {}
    for part in arg_text.split(","):
        if part.strip():
            key, _, value = part.partition("=")
            if not value:
                raise ValueError(f"malformed family argument {part!r}")
            kv[key.strip().lower()] = int(value)
    try:
        if name == "tm":
            return _FamilyHandle(turing.TMFamily(kv["s"]), None)
        if name == "linthresh":
            return _FamilyHandle(linthresh.ThresholdFamily(kv["d"]), None)
        if name == "sparse":
            return _FamilyHandle(linthresh.SparseThresholdFamily(kv["d"], kv["k"]), None)
    except KeyError as missing:
        raise ValueError(f"family {name!r} needs argument {missing}") from None
    raise ValueError(f"unknown family {name!r}")


def _serialize_generator(f, T: int) -> str:
    if isinstance(f, linthresh.LinearThreshold):
        return linthresh.format_threshold(f) + "\n"
    if isinstance(f, linthresh.SparseLinearThreshold):
        return linthresh.format_threshold(f.to_dense()) + "\n"
    if isinstance(f, turing.TMGenerator):
        return turing.format_tm(turing.TMSpec(f.S, T, f.table))
    if isinstance(f, lbfamilies.LookupGenerator):
        return "b=" + "".join(str(bit) for bit in f.b) + "\n"
    return repr(f) + "\n"


def cmd_learn(args) -> int:
    try:
        handle = _resolve_family(args.family)
        fam = handle.family
        T = args.T if args.T is not None else handle.T_default
        if T is None:
            raise ValueError("this family needs an explicit --T")
        alphabet = fam.alphabet
        if args.mode == "cot":
            data = load_cot_dataset(args.data, alphabet, T)
        else:
            data = load_e2e_dataset(args.data, alphabet, T)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    try:
        if args.mode == "cot":
            oracle = fam.cons_oracle()
            if oracle is None:
                return _fail("family offers no next-token consistency oracle", EXIT_INPUT)
            learned = cons_cot(data, oracle)
        else:
            learned = cons_e2e(data, fam)
    except NotRealizableError as exc:
        return _fail(f"not realizable: {exc}", EXIT_FAIL)
    except GuardExceededError as exc:
        return _fail(str(exc), EXIT_INPUT)
    text = _serialize_generator(learned, T)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    print(text.rstrip("\n"))
    return EXIT_OK


# --------------------------------------------------------- compile-circuit


def cmd_compile_circuit(args) -> int:
    try:
        circuit = circomp.parse_circuit(_read(args.circuit))
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    normalized = circomp.normalize_circuit(circuit)
    compiled = circomp.compile_circuit(normalized)

    if args.compiled:
        try:
            loaded_w, loaded_T = _load_compiled(args.compiled)
        except (ValueError, OSError) as exc:
            return _fail(str(exc), EXIT_INPUT)
        if loaded_w != compiled.w or loaded_T != compiled.T:
            print("compiled file does not match this circuit", file=sys.stderr)
            return EXIT_FAIL

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(linthresh.format_threshold(compiled.generator()) + "\n")
            fh.write(f"T={compiled.T}\n")

    print(f"compiled: T={compiled.T} d={compiled.d} (from n={normalized.n}, s={normalized.width}, L={normalized.depth})")

    if args.verify:
        if normalized.n > circomp.VERIFY_MAX_INPUTS:
            return _fail(
                f"verification enumerates 2^{normalized.n} inputs; guard is {circomp.VERIFY_MAX_INPUTS}",
                EXIT_INPUT,
            )
        report = circomp.verify_compilation(normalized, compiled)
        print(report.summary())
        if not report.ok:
            for failure in report.failures[:10]:
                print(f"  x={failure.x} step={failure.step} {failure.kind}: {failure.detail}")
            return EXIT_FAIL
    return EXIT_OK


def _load_compiled(path: str) -> tuple[tuple[Fraction, ...], int]:
    lines = [ln for ln in _read(path).splitlines() if ln.strip()]
    if len(lines) < 2 or not lines[1].startswith("T="):
        raise ValueError("compiled file must hold a threshold line and a T= line")
    f = linthresh.parse_threshold(lines[0])
    return f.weights, int(lines[1][2:])


# --------------------------------------------------------------- simulate-tm


def cmd_simulate_tm(args) -> int:
    try:
        spec = turing.parse_tm(_read(args.machine))
        omega = _parse_bits(args.input if args.input is not None else "")
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)

    def run(via: str) -> int:
        if via == "direct":
            out, _ = turing.simulate_tm(spec, omega)
            return out
        prompt = turing.pre(omega, spec.S)
        if via == "autoregressive":
            f = turing.generator_for(spec)
        else:
            from .attention import AttentionTMGenerator

            f = AttentionTMGenerator(spec.S, spec.table)
        z = cot(f, prompt, spec.T)
        return turing.post(turing.decode_token(spec.S, z.tokens[-1]))

    if args.check:
        results = {via: run(via) for via in ("direct", "autoregressive", "attention")}
        if len(set(results.values())) != 1:
            print(f"disagreement: {results}", file=sys.stderr)
            return EXIT_FAIL
        print(results["direct"])
        return EXIT_OK

    out = run(args.via)
    print(out)
    if args.trace:
        _, trace = turing.simulate_tm(spec, omega)
        print(f"# s0={trace.s0} p0={trace.p0}")
        for t, (s, a, b, p, r) in enumerate(trace.steps, start=1):
            print(f"# t={t} read={r} -> state={s} write={a} move={b:+d} head={p}")
    return EXIT_OK


# -------------------------------------------------------------------- vcdim


def cmd_vcdim(args) -> int:
    try:
        fam = lbfamilies.parse_family_spec(args.family)
        pool = lbfamilies.default_pool(fam)
        if args.mode == "e2e":
            T = args.T if args.T is not None else getattr(fam, "T", None)
            if T is None:
                raise ValueError("e2e mode needs a generation length --T")
            dim = lbfamilies.vcdim_bruteforce(fam, pool, "e2e", T)
        else:
            dim = lbfamilies.vcdim_bruteforce(fam, pool, "base")
    except (ValueError, OSError, GuardExceededError) as exc:
        return _fail(str(exc), EXIT_INPUT)
    print(dim)
    return EXIT_OK


# --------------------------------------------------------------- experiment


_CONFIG_KEYS = {"family", "mode", "t", "sizes", "trials", "seed", "eval_n", "out", "input_len"}


def _parse_config(text: str) -> dict:
    cfg: dict = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if not value or key not in _CONFIG_KEYS:
            raise ValueError(f"bad config line {raw!r}")
        cfg[key] = value.strip()
    for required in ("family", "mode", "t", "sizes", "trials", "seed", "out"):
        if required not in cfg:
            raise ValueError(f"config is missing {required}=")
    sizes = [int(p) for p in cfg["sizes"].split(",")]
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if int(cfg["trials"]) < 1:
        raise ValueError("trials must be at least 1")
    if cfg["mode"] not in ("cot", "e2e"):
        raise ValueError("mode must be cot or e2e")
    cfg["sizes"] = sizes
    cfg["t"] = int(cfg["t"])
    cfg["trials"] = int(cfg["trials"])
    cfg["seed"] = int(cfg["seed"])
    cfg["eval_n"] = int(cfg.get("eval_n", 200))
    cfg["input_len"] = int(cfg.get("input_len", 4))
    return cfg


def _experiment_dist(handle: _FamilyHandle, input_len: int, T: int) -> PromptDist:
    fam = handle.family
    if isinstance(fam, lbfamilies.LookupFamily):
        return FiniteUniformPrompts(fam.canonical_points())
    if isinstance(fam, turing.TMFamily):
        import itertools

        pts = []
        for n in range(0, input_len + 1):
            for bits in itertools.product((0, 1), repeat=n):
                pts.append(turing.pre(list(bits), fam.S))
        return FiniteUniformPrompts(tuple(pts))
    return BitStringPrompts(1, input_len)


def _run_trial(packed):
    family, f_star, dist, m, T, mode, eval_n, seed = packed
    t0 = time.perf_counter()
    try:
        result = pac_trial(family, f_star, dist, m, T, mode, eval_n, seed)
        wall_ms = (time.perf_counter() - t0) * 1000.0
        return result.error, wall_ms, "ok"
    except (NotRealizableError, GuardExceededError, ValueError) as exc:
        wall_ms = (time.perf_counter() - t0) * 1000.0
        return None, wall_ms, f"failed:{type(exc).__name__}"


def cmd_experiment(args) -> int:
    try:
        cfg = _parse_config(_read(args.config))
        if args.seed is not None:
            cfg["seed"] = args.seed
        handle = _resolve_family(cfg["family"])
        T = cfg["t"]
        dist = _experiment_dist(handle, cfg["input_len"], T)
    except (ValueError, OSError) as exc:
        return _fail(str(exc), EXIT_INPUT)

    fam = handle.family
    jobs = []
    index = 0
    import random as _random

    for m in cfg["sizes"]:
        for trial in range(cfg["trials"]):
            seed = trial_seed(cfg["seed"], index)
            f_star = fam.random_member(_random.Random(seed ^ 0xA5A5A5A5))
            jobs.append((m, trial, seed, (fam, f_star, dist, m, T, cfg["mode"], cfg["eval_n"], seed)))
            index += 1

    workers = int(os.environ.get("COTLEARN_WORKERS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_trial, [packed for (_, _, _, packed) in jobs]))
    else:
        outcomes = [_run_trial(packed) for (_, _, _, packed) in jobs]

    rows = []
    for (m, trial, seed, _), (error, wall_ms, status) in zip(jobs, outcomes):
        rows.append(
            {
                "family": cfg["family"],
                "mode": cfg["mode"],
                "T": T,
                "m": m,
                "trial": trial,
                "seed": seed,
                "error": f"{float(error):.6f}" if error is not None else "",
                "error_frac": f"{error.numerator}/{error.denominator}" if error is not None else "",
                "wall_ms": f"{wall_ms:.3f}",
                "status": status,
            }
        )

    fieldnames = ["family", "mode", "T", "m", "trial", "seed", "error", "error_frac", "wall_ms", "status"]
    new_file = not os.path.exists(cfg["out"])
    with open(cfg["out"], "a", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        if new_file:
            writer.writeheader()
        writer.writerows(rows)

    for m in cfg["sizes"]:
        errs = [float(r["error"]) for r in rows if r["m"] == m and r["status"] == "ok"]
        if errs:
            print(f"m={m}: median error {statistics.median(errs):.6f} over {len(errs)} trials")
        else:
            print(f"m={m}: no successful trials")
    return EXIT_OK


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cotlearn")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="print the T-step generation of a stored generator")
    p.add_argument("file", help="generator file (machine or threshold format)")
    p.add_argument("--kind", choices=("tm", "threshold"), required=True)
    p.add_argument("--input", help="bit string fed through the input map (tm kind)")
    p.add_argument("--prompt", help="comma-separated prompt tokens (threshold kind)")
    p.add_argument("--T", type=int, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("learn", help="fit a family member to a dataset file")
    p.add_argument("--family", required=True, help="e.g. e1:D=2,T=4 | tm:S=3 | linthresh:d=4 | sparse:d=8,k=1")
    p.add_argument("--mode", choices=("cot", "e2e"), required=True)
    p.add_argument("--T", type=int)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("compile-circuit", help="embed a circuit into one iterated threshold")
    p.add_argument("circuit")
    p.add_argument("--out")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--compiled", help="verify this existing compiled file against the circuit")
    p.set_defaults(func=cmd_compile_circuit)

    p = sub.add_parser("simulate-tm", help="run a machine directly, autoregressively, or via attention")
    p.add_argument("machine")
    p.add_argument("--input", required=True)
    p.add_argument("--via", choices=("direct", "autoregressive", "attention"), default="direct")
    p.add_argument("--check", action="store_true", help="run all three routes and compare")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_simulate_tm)

    p = sub.add_parser("vcdim", help="brute-force a family dimension on its default pool")
    p.add_argument("--family", required=True)
    p.add_argument("--mode", choices=("base", "e2e"), default="base")
    p.add_argument("--T", type=int)
    p.set_defaults(func=cmd_vcdim)

    p = sub.add_parser("experiment", help="run a learning-curve grid from a key=value config")
    p.add_argument("config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
