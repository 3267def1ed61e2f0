"""Command-line entry point.

Data goes to stdout (or ``--out``); log messages go to stderr. Exit codes:
0 success, 1 internal error or failed check, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

log = logging.getLogger("modcdpr")


class ValidationError(Exception):
    pass


def _emit(args, payload, rows: list[dict] | None = None) -> None:
    if args.output == "csv":
        rows = rows if rows is not None else [_flatten(payload)]
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        log.info("wrote %s", args.out)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def _flatten(obj: dict) -> dict:
    return {k: (json.dumps(v, default=_json_default) if isinstance(v, (list, dict)) else v) for k, v in obj.items()}


def _parse_ks(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


# subcommands -----------------------------------------------------------------


def cmd_primes(args) -> int:
    from .splitntt import PAPER_COMPAT_MIN_PRIME, find_split_primes

    if args.n < 1 or args.n & (args.n - 1):
        raise ValidationError("--n must be a power of two")
    if args.target < 1:
        raise ValidationError("--target must be >= 1")
    min_prime = args.min_prime
    if args.paper_compat:
        min_prime = max(min_prime, PAPER_COMPAT_MIN_PRIME)
    basis = find_split_primes(args.n, args.target, min_prime)
    _emit(args, {"p_list": basis.primes, "P": basis.P})
    return 0


def cmd_signopt(args) -> int:
    from .signopt import SignProblem, solve

    if args.k < 4:
        raise ValidationError("--k must be >= 4")
    prob = SignProblem.for_k(args.k)
    if args.method == "exhaustive" and prob.N_s > 20:
        raise ValidationError(f"exhaustive search needs N_s <= 20 (k <= 6), got N_s = {prob.N_s}")
    sol = solve(prob, args.method, seed=args.seed, budget=args.budget)
    payload = sol.to_json_obj(prob)
    if math.isnan(payload["discrepancy"]):
        payload["discrepancy"] = None
    _emit(args, payload)
    return 0


def cmd_reduce(args) -> int:
    from .modgs import basis_from_json
    from .pipeline import reduce_module

    path = Path(args.input)
    if not path.is_file():
        raise ValidationError(f"input file not found: {path}")
    try:
        basis = basis_from_json(path.read_text())
    except (ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"malformed basis file: {exc}") from exc
    mode = {"off": "off", "coord": "coord", "crt": "crt"}[args.size_reduce]
    report = reduce_module(basis, size_reduce_mode=mode, signs=args.signs,
                           crt_min_prime=12289 if args.paper_compat else 2)
    payload = report.to_json_obj()
    if args.output == "csv":
        payload.pop("output")
    _emit(args, payload)
    return 0 if report.checks_pass() else 1


def cmd_table1(args) -> int:
    from .harness import ExperimentConfig, table1_experiment

    cfg = ExperimentConfig(ks=args.ks or [6, 7, 8, 9, 10], d=args.d, eta=args.eta, trials=args.trials,
                           seed=args.seed, output=args.out, paper_compat=args.paper_compat, jobs=args.jobs)
    rows = table1_experiment(cfg)
    _emit(args, {"config": cfg.__dict__, "rows": rows}, rows)
    return 0


def cmd_table2(args) -> int:
    from .harness import ExperimentConfig, table2_experiment

    ks = args.ks or list(range(4, 11))
    if any(k < 4 or k > 10 for k in ks):
        raise ValidationError("table2 supports k in [4, 10]")
    cfg = ExperimentConfig(ks=ks, seed=args.seed, output=args.out, jobs=args.jobs, timing=args.timing,
                           bnb_budget=args.budget)
    rows = table2_experiment(cfg)
    _emit(args, {"rows": rows}, rows)
    return 0


def cmd_probe(args) -> int:
    from .harness import covering_probe

    if args.k < 3:
        raise ValidationError("--k must be >= 3")
    res = covering_probe(args.k, args.strategy, retries=args.retries, seed=args.seed)
    _emit(args, res)
    return 0


def selftest_checks() -> list[tuple[str, bool, str]]:
    from .cyclotomic import embed_coeffs
    from .modgs import ModuleVector, k_gram_schmidt, k_inner
    from .signopt import SignProblem, solve_exhaustive
    from .splitntt import SplitPrimeContext

    checks = []
    n = 64
    E = embed_coeffs(np.eye(n))
    G = (E @ E.conj().T).real
    ok = np.allclose(G, n * np.eye(n), atol=1e-6 * n)
    checks.append(("trace orthogonality n=64", bool(ok), f"max dev {np.abs(G - n * np.eye(n)).max():.2e}"))

    ctx = SplitPrimeContext(12289, 256)
    rng = np.random.default_rng(0)
    a = rng.integers(0, 12289, (100, 256))
    ok = bool(np.array_equal(ctx.intt(ctx.ntt(a)), a))
    checks.append(("NTT round trip (256, 12289)", ok, "100 polynomials"))

    k, d = 4, 3
    basis = [ModuleVector.from_int_arrays(rng.integers(-3, 4, (d, 8)), k) for _ in range(d)]
    gs = k_gram_schmidt(basis)
    ok = all(k_inner(gs.gs[i], gs.gs[j]).is_zero() for i in range(d) for j in range(i))
    checks.append(("K-Gram-Schmidt orthogonality k=4 d=3", ok, "exact"))

    v = solve_exhaustive(SignProblem.for_k(4)).discrepancy
    checks.append(("delta*(4) = 0.4407", abs(v - 0.4407) <= 5e-4, f"{v:.6f}"))
    return checks


def cmd_selftest(args) -> int:
    checks = selftest_checks()
    rows = [{"check": name, "pass": ok, "detail": detail} for name, ok, detail in checks]
    for r in rows:
        log.info("%s %s (%s)", "PASS" if r["pass"] else "FAIL", r["check"], r["detail"])
    _emit(args, {"checks": rows, "all_pass": all(r["pass"] for r in rows)}, rows)
    return 0 if all(r["pass"] for r in rows) else 1


# parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", choices=["json", "csv"], default="json", help="output format")
    common.add_argument("--out", default=None, help="write data to this file instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=1000)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for trial loops")
    common.add_argument("--paper-compat", action="store_true", help="compatibility profile: p >= 12289 and 10^4 trials")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="modcdpr", description="Module CDPR reduction toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("primes", parents=[common], help="totally split primes for x^n + 1")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--target", type=int, default=1)
    sp.add_argument("--min-prime", type=int, default=2)
    sp.set_defaults(func=cmd_primes)

    sp = sub.add_parser("signopt", parents=[common], help="balanced sign selection")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--method", choices=["exhaustive", "greedy", "local", "bnb", "lp"], default="bnb")
    sp.add_argument("--budget", type=int, default=10_000, help="branch-and-bound node budget")
    sp.set_defaults(func=cmd_signopt)

    sp = sub.add_parser("reduce", parents=[common], help="reduce a module basis given as JSON")
    sp.add_argument("--input", required=True)
    sp.add_argument("--signs", choices=["milp", "greedy", "none"], default="none")
    sp.add_argument("--size-reduce", choices=["off", "coord", "crt"], default="off")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("table1", parents=[common], help="balance constant statistics")
    sp.add_argument("--ks", type=_parse_ks, default=None, help="e.g. 6-10 or 6,8")
    sp.add_argument("--d", type=int, default=4)
    sp.add_argument("--eta", type=int, default=2)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("table2", parents=[common], help="sign-selection comparison table")
    sp.add_argument("--ks", type=_parse_ks, default=None)
    sp.add_argument("--budget", type=int, default=10_000)
    sp.add_argument("--timing", action="store_true", help="add a wall-time column")
    sp.set_defaults(func=cmd_table2)

    sp = sub.add_parser("probe", parents=[common], help="covering-radius probe")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--strategy", choices=["coordinate", "randomized", "exhaustive"], default="coordinate")
    sp.add_argument("--retries", type=int, default=100)
    sp.set_defaults(func=cmd_probe)

    sp = sub.add_parser("selftest", parents=[common], help="run the invariant checks")
    sp.set_defaults(func=cmd_selftest)
    return p


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "selftest" else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.trials < 1:
        print("error: --trials must be >= 1", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        code = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return 1
    log.info("%s finished in %.2fs", args.command, time.perf_counter() - t0)
    return code


def main() -> None:
    sys.exit(run())
