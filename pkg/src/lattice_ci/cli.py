"""Command-line interface.

Subcommands write CSV to stdout (or ``--output``).  Numbers carry 10
significant digits, and output is byte-identical for identical flags.

Exit status: 0 on success, 2 for bad or inconsistent flags, 3 when the
inputs fall outside a method's domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .datarand import TrialSequence, sequence_rank, split_by_order
from .dist import BinomialSample, binom_pmf_vector, hypergeom_pmf, hypergeom_support
from .errors import ConfigurationError, DomainError
from .evaluation import (
    conditional_expected_length,
    coverage,
    distinct_value_count,
    p_grid,
    upper_bound_range,
)
from .intervals import (
    HypergeometricZ,
    Method,
    MethodSpec,
    RandomizationDraw,
    RankU,
    StevensNu,
    UniformNoise,
    construct,
    split_sample_sizes,
)

PRNG_NAME = "numpy-PCG64"
THREADS_ENV = "LATTICE_CI_THREADS"


class FlagError(Exception):
    """Inconsistent command-line flags; carries the offending flag name."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.10g}"
    return str(value)


def draw_randomization(spec: MethodSpec, sample: BinomialSample, seed: int) -> RandomizationDraw:
    """Draw the external randomization of ``spec`` from PCG64 seeded with ``seed``."""
    if not spec.method.externally_randomized:
        raise DomainError(f"{spec.method.value} is not externally randomized")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.random()
    if spec.method is Method.U_NOISE_WILSON:
        return UniformNoise(u - 0.5)
    if spec.method is Method.STEVENS:
        return StevensNu(1.0 - u)
    # Inverse cdf over the exact hypergeometric pmf.
    n1 = split_sample_sizes(sample.n).n1
    support = hypergeom_support(sample.n, sample.x, n1)
    cum = 0.0
    for z in support:
        cum += hypergeom_pmf(sample.n, sample.x, n1, z)
        if u < cum:
            return HypergeometricZ(z)
    return HypergeometricZ(support[-1])


def _worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        count = int(raw)
    except ValueError:
        raise FlagError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if count < 1:
        raise FlagError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return count


def _fan_out(func, args: list, workers: int) -> list:
    """Apply ``func`` to each tuple in ``args``; results come back in input order."""
    if workers <= 1 or len(args) <= 1:
        return [func(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        return list(pool.map(func, *zip(*args)))


def _coverage_chunk(spec: MethodSpec, n: int, ps: tuple[float, ...]) -> list[float]:
    return [coverage(spec, n, p) for p in ps]


def _chunks(values: np.ndarray, parts: int) -> list[tuple[float, ...]]:
    return [tuple(float(v) for v in c) for c in np.array_split(values, parts) if len(c)]


def _interval_rows(args, spec: MethodSpec) -> list[list]:
    method = spec.method
    if (args.x is None) == (args.sequence is None):
        raise FlagError("--x / --sequence: supply exactly one")
    seq = TrialSequence.parse(args.sequence) if args.sequence is not None else None
    if seq is not None and args.n is not None and args.n != seq.n:
        raise FlagError(f"--n: {args.n} does not match sequence length {seq.n}")
    if seq is None and args.n is None:
        raise FlagError("--n is required with --x")
    sample = seq.sample if seq is not None else BinomialSample(args.n, args.x)

    external = method.externally_randomized and seq is None
    if external and args.seed is None:
        raise FlagError(f"--seed is required for {method.value} with --x")
    if not external and args.seed is not None:
        raise FlagError(f"--seed is not accepted for {method.value} here")
    if method.data_randomized and seq is None:
        raise FlagError(f"--sequence is required for {method.value}")

    draw = None
    draw_value = None
    if external:
        draw = draw_randomization(spec, sample, args.seed)
        draw_value = {HypergeometricZ: "z", UniformNoise: "y", StevensNu: "nu1"}[type(draw)]
        draw_value = getattr(draw, draw_value)
    elif method.data_randomized:
        draw = RankU(sequence_rank(seq).u)
        draw_value = draw.u
    elif method is Method.SPLIT_WILSON:
        n1 = split_sample_sizes(seq.n).n1
        draw = HypergeometricZ(sum(seq.bits[:n1]))
        draw_value = draw.z
        split_by_order(seq)  # validates the split for this n
    elif method is Method.U_NOISE_WILSON or method is Method.STEVENS:
        raise FlagError(f"--x and --seed are required for {method.value}")

    iv = construct(spec, sample, draw)
    header = ["method", "n", "x", "sequence", "alpha", "seed", "prng", "draw", "lower", "upper"]
    row = [
        method.value,
        sample.n,
        sample.x,
        str(seq) if seq is not None else None,
        spec.alpha,
        args.seed,
        PRNG_NAME if external else None,
        draw_value,
        iv.lower,
        iv.upper,
    ]
    return [header, row]


def _grid(args) -> np.ndarray:
    if args.points < 1:
        raise FlagError("--points must be >= 1")
    if not 0.0 <= args.p_start <= args.p_stop <= 1.0:
        raise FlagError("--p-start/--p-stop must satisfy 0 <= start <= stop <= 1")
    return p_grid(args.p_start, args.p_stop, args.points)


def _coverage_rows(args, spec: MethodSpec) -> list[list]:
    grid = _grid(args)
    workers = _worker_count()
    chunks = _chunks(grid, workers)
    values = [v for part in _fan_out(_coverage_chunk, [(spec, args.n, c) for c in chunks], workers) for v in part]
    rows = [["method", "n", "p", "alpha", "coverage"]]
    rows += [[spec.method.value, args.n, p, spec.alpha, c] for p, c in zip(grid, values)]
    return rows


def _length_rows(args, spec: MethodSpec) -> list[list]:
    grid = _grid(args)
    lengths = np.array(
        _fan_out(
            conditional_expected_length,
            [(spec, args.n, x) for x in range(args.n + 1)],
            _worker_count(),
        )
    )
    rows = [["method", "n", "p", "alpha", "expected_length"]]
    for p in grid:
        value = math.fsum(binom_pmf_vector(args.n, float(p)) * lengths)
        rows.append([spec.method.value, args.n, p, spec.alpha, value])
    return rows


def _range_rows(args, spec: MethodSpec) -> list[list]:
    if not spec.method.randomized:
        raise FlagError(f"--method: {spec.method.value} is not randomized")
    rows = [["method", "n", "x", "alpha", "min_upper", "max_upper", "range"]]
    for x in range(args.n + 1):
        r = upper_bound_range(spec, args.n, x)
        rows.append([spec.method.value, args.n, x, spec.alpha, r.min_upper, r.max_upper, r.range])
    return rows


def _distinct_rows(args) -> list[list]:
    split_count, korn_count = distinct_value_count(args.n)
    return [["n", "split_count", "korn_count"], [args.n, split_count, korn_count]]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-ci",
        description="Randomized and split-sample confidence intervals for a binomial proportion.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    methods = [m.value for m in Method]

    def common(p: argparse.ArgumentParser, needs_method: bool = True, n_required: bool = True) -> None:
        if needs_method:
            p.add_argument("--method", required=True, choices=methods)
            p.add_argument("--alpha", type=float, default=0.05)
        p.add_argument("--n", type=int, required=n_required)
        p.add_argument("--output", "-o", default="-", help="output file (default: stdout)")

    p = sub.add_parser("interval", help="compute one interval")
    common(p, n_required=False)
    p.add_argument("--x", type=int)
    p.add_argument("--sequence", help="trial outcomes as a 0/1 string, e.g. 0010110")
    p.add_argument("--seed", type=int, help="PRNG seed for externally randomized methods")

    for name, text in (("coverage", "exact coverage curve"), ("length", "expected length curve")):
        p = sub.add_parser(name, help=text)
        common(p)
        p.add_argument("--p-start", type=float, default=0.001)
        p.add_argument("--p-stop", type=float, default=0.999)
        p.add_argument("--points", type=int, default=999)

    p = sub.add_parser("range", help="range of the upper bound for x = 0..n")
    common(p)

    p = sub.add_parser("distinct", help="distinct-value counts of the smoothed statistic")
    common(p, needs_method=False)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "distinct":
            rows = _distinct_rows(args)
        else:
            if not 0.0 < args.alpha < 1.0:
                raise FlagError("--alpha must lie in (0, 1)")
            seed = getattr(args, "seed", None)
            if seed is not None and not 0 <= seed < 2**64:
                raise FlagError("--seed must be an unsigned 64-bit integer")
            spec = MethodSpec(Method(args.method), args.alpha)
            if args.command != "interval" and args.n < 1:
                raise FlagError("--n must be >= 1")
            handler = {
                "interval": _interval_rows,
                "coverage": _coverage_rows,
                "length": _length_rows,
                "range": _range_rows,
            }[args.command]
            rows = handler(args, spec)
    except FlagError as exc:
        parser.print_usage(sys.stderr)
        print(f"lattice-ci: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ConfigurationError) as exc:
        print(f"lattice-ci: domain error: {exc}", file=sys.stderr)
        return 3

    text = _render(rows)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def _render(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(rows[0])
    for row in rows[1:]:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
