"""``dunklkit`` command line: ``eval``, ``validate`` and ``table``.

Exit codes: 0 success, 1 validation failure, 2 invalid input, 3 a result
flagged against its tolerance while ``--strict`` is set.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence


from dunklkit.errors import CostGuardError, DunklError, IntertwineSolveError
from dunklkit.intertwine import DEFAULT_MAX_DEGREE, kernel_series
from dunklkit.kernel import (
    DominantPoint,
    EvalReport,
    KernelConfig,
    estimate_evals,
    kernel_a1_closed,
    kernel_compact,
    kernel_reduce,
    kernel_symmetrized,
    kernel_xu,
)
from dunklkit.validation import run_suite

log = logging.getLogger("dunklkit")

METHODS = ("reduce", "series", "xu", "a1", "compact", "symmetrized")
TABLE_HEADER = ["param", "value", "error_estimate", "evals", "elapsed_ms"]


class InputError(ValueError):
    """Malformed command-line input (exit code 2)."""


@dataclass
class RunConfig:
    """Kernel settings plus output plumbing for one CLI invocation."""

    kernel: KernelConfig = field(default_factory=KernelConfig)
    fmt: str = "json"
    out: Optional[str] = None
    seed: int = 0
    threads: int = 1
    strict: bool = False
    timing: bool = True


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_vector(text: str, name: str) -> List[float]:
    """Comma-separated decimals (fractions like ``1/2`` are accepted too)."""
    try:
        vals = [float(Fraction(tok.strip())) for tok in text.split(",") if tok.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(f"cannot parse {name} {text!r}: {exc}") from None
    if not vals:
        raise InputError(f"{name} is empty")
    return vals


def parse_scalar(text: str, name: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"cannot parse {name} {text!r}") from None


def parse_range(text: str) -> List[float]:
    """``start:stop:step`` (inclusive of ``stop`` up to rounding) or a comma list."""
    if ":" not in text:
        return parse_vector(text, "range")
    parts = text.split(":")
    if len(parts) != 3:
        raise InputError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = (parse_scalar(p, "range bound") for p in parts)
    if step <= 0 or stop < start:
        raise InputError(f"empty or malformed range {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    if count > 100000:
        raise InputError(f"range {text!r} has too many points")
    return [start + i * step for i in range(count)]


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config {path!r}: {exc}") from None
    allowed = {"nodes_per_level", "series_order", "min_gap", "tolerance", "threads"}
    if not isinstance(data, dict) or set(data) - allowed:
        raise InputError(f"config keys must be a subset of {sorted(allowed)}")
    return data


def build_run_config(args) -> RunConfig:
    file_cfg = _load_config(getattr(args, "config", None))
    nodes = file_cfg.get("nodes_per_level")
    if getattr(args, "nodes", None):
        nodes = [int(v) for v in parse_vector(args.nodes, "nodes")]
    threads = getattr(args, "threads", None) or file_cfg.get("threads") \
        or KernelConfig.threads_from_env(1)
    kw = dict(
        nodes_per_level=tuple(int(v) for v in nodes) if nodes else None,
        series_order=getattr(args, "series_order", None) or file_cfg.get("series_order"),
        min_gap=getattr(args, "min_gap", None) or file_cfg.get("min_gap"),
        tolerance=getattr(args, "tolerance", None) or file_cfg.get("tolerance", 1e-8),
        parallel_width=int(threads),
    )
    try:
        kcfg = KernelConfig(**kw)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return RunConfig(kernel=kcfg, fmt=getattr(args, "format", "json"), out=getattr(args, "out", None),
                     seed=getattr(args, "seed", 0) or 0, threads=int(threads),
                     strict=bool(getattr(args, "strict", False)),
                     timing=not getattr(args, "no_timing", False))


# ---------------------------------------------------------------------------
# evaluation dispatch
# ---------------------------------------------------------------------------

def _axis_argument(X, j):
    """Return ``(x, j0)`` for ``X = x e_j`` (``j`` 1-based or None)."""
    nz = [i for i, v in enumerate(X) if v != 0.0]
    if j is not None:
        j0 = j - 1
        if not 0 <= j0 < len(X):
            raise InputError(f"--j must lie in 1..{len(X)}")
        if any(i != j0 for i in nz):
            raise InputError("method xu needs X supported on coordinate j")
        return X[j0], j0
    if len(nz) > 1:
        raise InputError("method xu needs X with at most one nonzero coordinate")
    return (X[nz[0]], nz[0]) if nz else (0.0, len(X) - 1)


def _timed_report(method, fn, fine_fn, evals, cfg: KernelConfig) -> EvalReport:
    t0 = time.perf_counter()
    value = fn()
    err = abs(fine_fn() - value) if fine_fn is not None else 0.0
    return EvalReport(value=float(value), method=method, error_estimate=float(err),
                      integrand_evals=int(evals), elapsed=time.perf_counter() - t0,
                      flagged=err > cfg.tolerance)


def evaluate(X, lam, k, method: str, cfg: KernelConfig, j: Optional[int] = None) -> EvalReport:
    """Dispatch one kernel evaluation by CLI method name."""
    n = len(lam) - 1
    if method == "reduce":
        return kernel_reduce(X, lam, k, cfg)
    if method == "compact":
        return kernel_compact(X, lam, k, cfg)
    if method == "series":
        M = cfg.series_order or DEFAULT_MAX_DEGREE.get(n + 1, 12)
        return kernel_series(X, lam, k, M, tolerance=cfg.tolerance)
    DominantPoint.of(lam, cfg.min_gap)
    N = cfg.nodes_for(max(n, 1))[0]
    finer = cfg.replace(nodes_per_level=(2 * N,) + cfg.nodes_for(max(n, 1))[1:])
    if method == "a1":
        if n != 1:
            raise InputError("method a1 needs two coordinates")
        return _timed_report("a1_closed", lambda: kernel_a1_closed(X, lam, k, cfg),
                             lambda: kernel_a1_closed(X, lam, k, finer), 3 * N, cfg)
    if method == "xu":
        x, j0 = _axis_argument(X, j)
        Ns = max(N, 16)
        return _timed_report("xu", lambda: kernel_xu(x, j0, lam, k, cfg),
                             lambda: kernel_xu(x, j0, lam, k, finer), 3 * Ns ** n, cfg)
    if method == "symmetrized":
        evals = 2 * math.factorial(n + 1) * estimate_evals(n, cfg.nodes_for(n))
        return _timed_report("symmetrized", lambda: kernel_symmetrized(X, lam, k, cfg),
                             lambda: kernel_symmetrized(X, lam, k, finer), evals, cfg)
    raise InputError(f"unknown method {method!r}")


def _emit(text: str, out: Optional[str]):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fmt(v) -> str:
    return repr(float(v))


def _read_point(args, run: RunConfig):
    X = parse_vector(args.x, "--x")
    lam = parse_vector(args.lam, "--lambda")
    if len(X) != len(lam):
        raise InputError(f"--x has {len(X)} coordinates, --lambda has {len(lam)}")
    if args.n is not None and len(lam) != args.n + 1:
        raise InputError(f"--n {args.n} needs {args.n + 1} coordinates, got {len(lam)}")
    DominantPoint.of(lam, run.kernel.min_gap)
    return X, lam


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_eval(args) -> int:
    run = build_run_config(args)
    X, lam = _read_point(args, run)
    k = parse_scalar(args.k, "--k")
    rep = evaluate(X, lam, k, args.method, run.kernel, args.j)
    if not run.timing:
        rep.elapsed = 0.0
    if run.fmt == "json":
        text = rep.to_json() + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["value", "method", "error_estimate", "integrand_evals", "elapsed", "flagged"])
        w.writerow([_fmt(rep.value), rep.method, _fmt(rep.error_estimate), rep.integrand_evals,
                    _fmt(rep.elapsed), int(rep.flagged)])
        text = buf.getvalue()
    _emit(text, run.out)
    if rep.flagged:
        log.warning("error estimate %.3g exceeds tolerance %.3g", rep.error_estimate, run.kernel.tolerance)
        if run.strict:
            return 3
    return 0


def cmd_validate(args) -> int:
    results = []
    failed = False
    suites = [args.suite] if args.suite != "all" else ["identities", "quadrature", "oracles", "eigen"]
    for name in suites:
        for r in run_suite(name, args.n_max, args.seed):
            results.append(r)
            failed |= not r.passed
            if args.format != "json":
                sys.stdout.write(r.line() + "\n")
            if failed and args.strict:
                break
        if failed and args.strict:
            break
    if args.format == "json":
        text = json.dumps({"schema": 1, "passed": not failed,
                           "checks": [r.to_dict() for r in results]}, sort_keys=True) + "\n"
        _emit(text, args.out)
    else:
        summary = f"{sum(r.passed for r in results)}/{len(results)} checks passed\n"
        sys.stdout.write(summary)
        if args.out:
            _emit("".join(r.line() + "\n" for r in results) + summary, args.out)
    return 1 if failed else 0


def cmd_table(args) -> int:
    run = build_run_config(args)
    grid = parse_range(args.range)
    lam = parse_vector(args.lam, "--lambda")
    if args.n is not None and len(lam) != args.n + 1:
        raise InputError(f"--n {args.n} needs {args.n + 1} coordinates, got {len(lam)}")
    DominantPoint.of(lam, run.kernel.min_gap)
    n = len(lam) - 1
    if args.sweep == "k":
        if args.k is not None:
            raise InputError("--k is the swept parameter; pass the grid through --range")
        X = parse_vector(args.x or ",".join(["0"] * (n + 1)), "--x")
        if len(X) != n + 1:
            raise InputError(f"--x has {len(X)} coordinates, --lambda has {n + 1}")
        points = [(p, X, p) for p in grid]
    else:
        if args.k is None:
            raise InputError("--k is required for an x sweep")
        k = parse_scalar(args.k, "--k")
        j = (args.j or n + 1) - 1
        if not 0 <= j <= n:
            raise InputError(f"--j must lie in 1..{n + 1}")
        points = []
        for p in grid:
            X = [0.0] * (n + 1)
            X[j] = p
            points.append((p, X, k))
    if args.sweep == "k" and any(p <= 0 for p in grid):
        raise InputError("multiplicity grid must be positive")
    compare = args.compare
    if compare == "a1" and n != 1:
        raise InputError("--compare a1 needs two coordinates")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TABLE_HEADER + (["delta"] if compare else []))
    worst_flag = False
    for p, X, k in points:
        rep = evaluate(X, lam, k, args.method, run.kernel, args.j if args.method == "xu" else None)
        worst_flag |= rep.flagged
        elapsed_ms = rep.elapsed * 1000.0 if run.timing else 0.0
        row = [_fmt(p), _fmt(rep.value), _fmt(rep.error_estimate), rep.integrand_evals, _fmt(elapsed_ms)]
        if compare:
            other = evaluate(X, lam, k, compare, run.kernel)
            row.append(_fmt(abs(rep.value - other.value)))
        w.writerow(row)
    _emit(buf.getvalue(), run.out)
    return 3 if (worst_flag and run.strict) else 0


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def _add_kernel_flags(p):
    p.add_argument("--n", type=int, help="rank n (point has n+1 coordinates); checked if given")
    p.add_argument("--lambda", dest="lam", required=True, help="dominant point, e.g. 1,0,-1")
    p.add_argument("--method", choices=METHODS, default="reduce")
    p.add_argument("--j", type=int, help="1-based coordinate for the xu method / x sweep")
    p.add_argument("--nodes", help="nodes per recursion level, e.g. 24,16,12")
    p.add_argument("--series-order", type=int, help="truncation degree for the series method")
    p.add_argument("--tolerance", type=float, help="flagging threshold for error estimates")
    p.add_argument("--min-gap", type=float, help="minimum coordinate gap of lambda")
    p.add_argument("--threads", type=int, help="worker threads (fallback: DUNKLKIT_THREADS)")
    p.add_argument("--config", help="JSON file with nodes_per_level, series_order, min_gap, tolerance, threads")
    p.add_argument("--out", help="write output to this file instead of stdout")
    p.add_argument("--strict", action="store_true", help="exit 3 when a result is flagged")
    p.add_argument("--no-timing", action="store_true",
                   help="report zero elapsed time, making output byte-reproducible")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dunklkit", description="Type-A Dunkl kernel toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    pe = sub.add_parser("eval", help="evaluate E_k(X, lambda)")
    _add_kernel_flags(pe)
    pe.add_argument("--k", required=True, help="multiplicity k > 0")
    pe.add_argument("--x", required=True, help="argument X, e.g. 1,0")
    pe.add_argument("--format", choices=("json", "csv"), default="json")
    pe.set_defaults(func=cmd_eval)

    pv = sub.add_parser("validate", help="run property and oracle suites")
    pv.add_argument("--suite", choices=("identities", "oracles", "eigen", "quadrature", "all"), default="all")
    pv.add_argument("--n-max", type=int, default=2)
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--strict", action="store_true", help="stop at the first failing check")
    pv.add_argument("--format", choices=("text", "json"), default="text")
    pv.add_argument("--out")
    pv.set_defaults(func=cmd_validate)

    pt = sub.add_parser("table", help="sweep k or x and write CSV")
    _add_kernel_flags(pt)
    pt.add_argument("--sweep", choices=("k", "x"), required=True)
    pt.add_argument("--range", required=True, help="start:stop:step or a comma list")
    pt.add_argument("--k", help="fixed multiplicity (x sweep)")
    pt.add_argument("--x", help="fixed argument (k sweep; default 0)")
    pt.add_argument("--compare", choices=METHODS, help="add a |delta| column against this method")
    pt.set_defaults(func=cmd_table, format="csv")
    return parser


_VALUE_FLAGS = {"--x", "--lambda", "--range", "--k", "--nodes"}
_NEGATIVE = re.compile(r"^-[0-9.]")


def _join_negative_values(argv: Sequence[str]) -> List[str]:
    """Turn ``--x -1,0`` into ``--x=-1,0`` so argparse does not read a flag."""
    out: List[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is not None and _NEGATIVE.match(nxt):
                out.append(f"{tok}={nxt}")
                continue
            out.append(tok)
            if nxt is not None:
                out.append(nxt)
        else:
            out.append(tok)
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    argv = _join_negative_values(sys.argv[1:] if argv is None else list(argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) if exc.code not in (None, 0) else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, DunklError, ValueError, CostGuardError) as exc:
        # DegenerateLambdaError and ArityMismatchError are ValueErrors
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except IntertwineSolveError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
