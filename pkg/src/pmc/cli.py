"""Command-line front end: ``pmc <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional, Sequence

from . import entropy, harness, intlinalg, scheme
from .ffield import field_from_q, field_from_spec, parse_field_spec


class UsageError(Exception):
    pass


def parse_matrix(source: str) -> list[list[int]]:
    """Inline JSON array-of-arrays, or a path to a file holding one."""
    text = source
    if not source.lstrip().startswith("["):
        if not os.path.exists(source):
            raise UsageError(f"--matrix: not JSON and no such file: {source!r}")
        with open(source) as fh:
            text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--matrix: malformed JSON ({exc})") from None
    if (
        not isinstance(data, list)
        or not data
        or not all(isinstance(r, list) and r and all(isinstance(x, int) and not isinstance(x, bool) for x in r) for r in data)
    ):
        raise UsageError("--matrix: expected a non-empty JSON array of non-empty integer arrays")
    if len({len(r) for r in data}) != 1:
        raise UsageError("--matrix: rows have different lengths")
    return data


def parse_seed(text: str) -> int:
    try:
        seed = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {text!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return seed


def parse_q_grid(text: str) -> list[int]:
    out = []
    for item in text.split(","):
        try:
            p, k = parse_field_spec(item)
        except ValueError:
            raise argparse.ArgumentTypeError(f"q-grid entry {item!r} is not a prime power") from None
        out.append(p**k)
    return out


def parse_field(text: str):
    try:
        return field_from_spec(text)
    except ValueError as exc:
        raise UsageError(f"--field: {exc}") from None


def _monomials(matrix) -> entropy.MonomialSet:
    try:
        return entropy.MonomialSet(matrix)
    except ValueError as exc:
        raise UsageError(f"--matrix: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmc", description="Private monomial computation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, field=False, matrix=False, n=False, seed=False, trials=False):
        if field:
            p.add_argument("--field", required=True, help='field spec "p^k" (or a bare prime power)')
        if matrix:
            p.add_argument("--matrix", required=True, help="degree matrix: inline JSON or path to a JSON file")
        if n:
            p.add_argument("--n", type=int, default=2, help="number of databases (default 2)")
        if seed:
            p.add_argument("--seed", type=parse_seed, default=0, help="64-bit unsigned seed (default 0)")
        if trials:
            p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trial count")
        p.add_argument("--output", help="write here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("entropy", help="entropy of monomials (or of a linear map over Z_m)")
    common(p, field=True, matrix=True)
    p.add_argument(
        "--method", choices=("auto", "formula", "decomposition", "brute_force"), default="auto",
        help="formula needs a single row; auto picks formula, else decomposition",
    )
    p.add_argument("--lin-modulus", type=int, help="report H(AY) for Y uniform on Z_m^t instead")

    p = sub.add_parser("snf", help="Smith normal form, ranks and minors gcd")
    common(p, matrix=True)
    p.add_argument("--modulus", type=int, help="also report the rank over Z_m")

    p = sub.add_parser("scheme-run", help="one protocol transcript, or an experiment with --trials")
    common(p, field=True, matrix=True, n=True, seed=True, trials=True)
    p.add_argument("--v", type=int, default=0, help="desired function index, 0-based (single run)")
    p.add_argument("--user-seed", type=parse_seed, default=None, help="user randomness seed (default: --seed + 1)")

    p = sub.add_parser("convergence", help="rate versus field size")
    common(p, matrix=True, n=True, seed=True, trials=True)
    p.add_argument("--q-grid", type=parse_q_grid, required=True, help="comma-separated prime powers")

    p = sub.add_parser("privacy-audit", help="query-distribution audit across desired indices")
    common(p, field=True, matrix=True, n=True, seed=True)
    p.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    p.add_argument("--budget", type=int, default=10**6, help="enumeration limit or sample count")

    p = sub.add_parser("capacity", help="C_PIR(n, f), or the two-function capacity with --matrix")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--f", type=int, help="message count for C_PIR")
    p.add_argument("--field", help="field for the two-function capacity")
    p.add_argument("--matrix", help="2-row degree matrix for the two-function capacity")
    p.add_argument("--output")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return parser


def _cmd_entropy(args) -> dict:
    A = parse_matrix(args.matrix)
    if args.lin_modulus is not None:
        if args.lin_modulus <= 1:
            raise UsageError("--lin-modulus must be > 1")
        res = entropy.h_lin_vec(A, args.lin_modulus)
        return res.to_dict()
    field = parse_field(args.field)
    ms = _monomials(A)
    method = args.method
    if method == "auto":
        method = "formula" if ms.mu == 1 else "decomposition"
    if method == "formula":
        if ms.mu != 1:
            raise UsageError("--method formula needs a single-row matrix")
        res = entropy.h_mono_single(ms.degree_matrix[0], field)
    elif method == "decomposition":
        res = entropy.h_mono_set_decomposition(ms, field)
    else:
        try:
            res = entropy.h_mono_set_bruteforce(ms, field)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    return res.to_dict()


def _cmd_snf(args) -> dict:
    A = parse_matrix(args.matrix)
    snf = intlinalg.smith_normal_form(A)
    out = entropy.rank_report(A)
    out.update({"D": [list(r) for r in snf.D], "P": [list(r) for r in snf.P], "Q": [list(r) for r in snf.Q]})
    if args.modulus is not None:
        if args.modulus <= 1:
            raise UsageError("--modulus must be > 1")
        out["rank_mod"] = intlinalg.rank_mod(A, args.modulus)
    return out


def _config(args, field) -> scheme.SchemeConfig:
    if args.n < 2:
        raise UsageError(f"--n must be >= 2, got {args.n}")
    return scheme.SchemeConfig(args.n, _monomials(parse_matrix(args.matrix)), field)


def _check_trials(args):
    if args.trials is not None and args.trials < 1:
        raise UsageError(f"--trials must be >= 1, got {args.trials}")


def _cmd_scheme_run(args):
    _check_trials(args)
    cfg = _config(args, parse_field(args.field))
    if args.trials is not None:
        return [harness.run_experiment(cfg, args.trials, args.seed)]
    if not 0 <= args.v < cfg.mu:
        raise UsageError(f"--v must be in [0, {cfg.mu}), got {args.v}")
    user = args.user_seed if args.user_seed is not None else (args.seed + 1) % 2**64
    return scheme.run_protocol(cfg, args.v, args.seed, user).to_dict()


def _cmd_convergence(args):
    _check_trials(args)
    cfg0 = _config(args, field_from_q(args.q_grid[0]))
    trials = args.trials or 1000
    return harness.convergence_study(cfg0.monomials.degree_matrix, args.n, args.q_grid, trials, args.seed)


def _cmd_privacy_audit(args) -> dict:
    cfg = _config(args, parse_field(args.field))
    try:
        res = harness.privacy_audit(cfg, args.mode, args.budget, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return res.to_dict()


def _cmd_capacity(args) -> dict:
    if args.matrix is not None:
        if args.field is None:
            raise UsageError("--matrix needs --field for the two-function capacity")
        try:
            value = harness.two_function_capacity(_monomials(parse_matrix(args.matrix)), parse_field(args.field))
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return {"two_function_capacity": value}
    if args.f is None:
        raise UsageError("capacity needs --f (or --matrix with --field)")
    try:
        return {"n": args.n, "f": args.f, "c_pir": harness.c_pir(args.n, args.f)}
    except ValueError as exc:
        raise UsageError(str(exc)) from None


COMMANDS = {
    "entropy": _cmd_entropy,
    "snf": _cmd_snf,
    "scheme-run": _cmd_scheme_run,
    "convergence": _cmd_convergence,
    "privacy-audit": _cmd_privacy_audit,
    "capacity": _cmd_capacity,
}


def render(result, fmt: str) -> str:
    reports = result if isinstance(result, list) else None
    if fmt == "csv":
        buf = io.StringIO()
        if reports is not None:
            w = csv.DictWriter(buf, fieldnames=harness.CSV_COLUMNS, lineterminator="\n")
            w.writeheader()
            for r in reports:
                w.writerow(r.csv_row())
        else:
            flat = {k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in result.items()}
            w = csv.DictWriter(buf, fieldnames=list(flat), lineterminator="\n")
            w.writeheader()
            w.writerow(flat)
        return buf.getvalue()
    if reports is not None:
        result = [r.to_dict() for r in reports]
        if len(result) == 1:
            result = result[0]
    return json.dumps(result, indent=2, sort_keys=True) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = render(COMMANDS[args.command](args), args.format)
    except UsageError as exc:
        print(f"pmc {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
