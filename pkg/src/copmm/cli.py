"""Command-line interface: ``copmm {threshold,run,audit,bench,verify-tensor}``.

Exit codes: 0 success, 2 validation error, 3 below threshold or too few
responsive workers, 4 a check failed (oracle mismatch, audit, tensor).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audit import (
    AuditConfig,
    check_lemma1_condition,
    exhaustive_privacy_audit,
    exhaustive_security_audit,
    structural_sweep,
)
from .bilinear import builtin_tensor, save_tensor, tensor_from_json, verify_tensor
from .config import RunConfig
from .costs import closed_form_costs
from .errors import BelowThresholdError, CopmmError, EnumerationTooLargeError, ValidationError
from .field import DEFAULT_MODULUS, FieldConfig
from .matrix import Matrix, PartitionSpec, write_fqmx
from .private import LibraryA, LibraryB, StrategyConfig
from .sim import Job, simulate
from .smm import recovery_threshold

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_THRESHOLD = 3
EXIT_CHECK = 4

COMPARISON_ROWS = ((2, 2, 2, 7), (3, 3, 3, 23), (5, 5, 5, 98))

BENCH_COLUMNS = (
    "problem", "family", "size", "m", "p", "n", "T", "N", "K", "V", "U",
    "encode_s", "worker_s", "decode_s", "encode_ops", "worker_ops", "decode_ops",
    "upload_symbols", "query_scalars", "download_symbols",
)


def _write_json(path, obj):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


# -- threshold ------------------------------------------------------------------


def _threshold_rows(problem, family, m, p, n, T, R, variant, N):
    rows = []
    if family in ("poly", "all"):
        fam = "poly-min" if variant.lower() == "min" else f"poly-{variant.lower()}"
        rep = recovery_threshold(fam, m, p, n, T)
        rows.append(("poly", rep))
    if family in ("lagrange", "all"):
        if R is None:
            if family == "lagrange":
                raise ValidationError("the lagrange family needs --R (bilinear rank)")
        else:
            rows.append(("lagrange", recovery_threshold("lagrange", m, p, n, T, R=R)))
    out = []
    for fam, rep in rows:
        P_u, P_d = closed_form_costs(problem, N or 0, rep.K, m, p, n)
        out.append(
            {
                "family": fam,
                "variant": rep.family,
                "K": rep.K,
                "candidates": rep.candidates,
                "P_u": "neglected (queries only)" if problem == "FPMM" else (f"{P_u}" if N else f"N/{m * p}"),
                "P_d": str(P_d),
            }
        )
    return out


def cmd_threshold(args) -> int:
    problem = args.problem.upper()
    if args.table1:
        Ts = [args.T] if args.T is not None else [1, 2, 3]
        print("m,p,n,R,T,poly_V1,poly_V2,poly_V3,poly_min,lagrange")
        for m, p, n, R in COMPARISON_ROWS:
            for T in Ts:
                poly = recovery_threshold("poly-min", m, p, n, T)
                lag = recovery_threshold("lagrange", m, p, n, T, R=R)
                c = poly.candidates
                print(f"{m},{p},{n},{R},{T},{c['poly-v1']},{c['poly-v2']},{c['poly-v3']},{poly.K},{lag.K}")
        return EXIT_OK
    T = 1 if args.T is None else args.T
    rows = _threshold_rows(problem, args.family, args.m, args.p, args.n, T, args.R, args.variant, args.N)
    if args.json:
        print(json.dumps(rows, indent=1))
        return EXIT_OK
    print(f"problem={problem} m={args.m} p={args.p} n={args.n} T={T}" + (f" R={args.R}" if args.R else ""))
    for row in rows:
        extra = ""
        if row["candidates"]:
            extra = " (" + ", ".join(f"{k}={v}" for k, v in row["candidates"].items()) + ")"
        print(f"{row['family']:9s} {row['variant']:9s} K={row['K']}{extra}  P_u={row['P_u']}  P_d={row['P_d']}")
    return EXIT_OK


# -- run ------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = RunConfig.load(args.config)
    job, oracle, shape_c = cfg.build_job(pad=args.pad)
    res = job.config.resolve(job.family)
    profiles = cfg.full_profiles(res.N)
    run, metrics = simulate(job, profiles, threads=args.threads)
    C = run.C
    if C.shape != shape_c:
        C = Matrix._wrap(C.data[: shape_c[0], : shape_c[1]], C.field)
        oracle = Matrix._wrap(oracle.data[: shape_c[0], : shape_c[1]], oracle.field)
    out = Path(args.out)
    transcript = run.to_json()
    transcript["padded"] = bool(args.pad and run.C.shape != shape_c)
    _write_json(out, transcript)
    _write_json(out.with_name(out.stem + ".cost.json"), run.cost.to_json())
    result = Path(args.result) if args.result else out.with_name(out.stem + ".C.fqmx")
    write_fqmx(result, C)
    verdict = ""
    if args.verify_oracle:
        ok = C == oracle
        verdict = " oracle=" + ("match" if ok else "MISMATCH")
        if not ok:
            print(f"decoded product differs from the direct product{verdict}", file=sys.stderr)
            return EXIT_CHECK
    print(
        f"{run.problem}/{run.family}: K={run.K} N={run.N} used={metrics.responses_used} "
        f"P_u={run.cost.P_u} P_d={run.cost.P_d}{verdict}"
    )
    return EXIT_OK


# -- audit ----------------------------------------------------------------------


def cmd_audit(args) -> int:
    report_path = args.report
    if args.mode == "structure":
        obj = json.loads(Path(args.config).read_text()) if args.config else {}
        field = FieldConfig(int(obj.get("modulus", DEFAULT_MODULUS)))
        if "alphas" in obj:
            rep = check_lemma1_condition(
                field,
                obj["alphas"],
                int(obj["T"]),
                exponents=obj.get("exponents"),
                betas=obj.get("betas"),
                basis_indices=obj.get("basis_indices"),
            )
            body = rep.to_json()
            ok = rep.ok
        else:
            rows = structural_sweep(field, int(obj.get("N_max", 10)), int(obj.get("T_max", 3)))
            ok = all(r["ok"] for r in rows)
            body = {"checks": len(rows), "failed": [r for r in rows if not r["ok"]], "ok": ok}
        body["mode"] = "structure"
    else:
        if not args.config:
            raise ValidationError(f"audit --mode {args.mode} needs a config file")
        obj = json.loads(Path(args.config).read_text())
        colluders = obj.pop("colluders", [1])
        zeroed = [(name, tuple(idx)) for name, idx in obj.pop("zeroed", [])]
        for long, short in (("lambda", "lam"),):
            if long in obj:
                obj[short] = obj.pop(long)
        try:
            cfg = AuditConfig(**obj)
        except TypeError as exc:
            raise ValidationError(f"bad audit config: {exc}") from None
        try:
            if args.mode == "privacy":
                rep = exhaustive_privacy_audit(cfg, colluders, zeroed=zeroed)
            else:
                rep = exhaustive_security_audit(cfg, colluders, zeroed=zeroed)
        except EnumerationTooLargeError as exc:
            refusal = {"mode": args.mode, "refused": True, "required": exc.required, "limit": exc.limit}
            if report_path:
                _write_json(report_path, refusal)
            print(f"refused: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
        body = rep.to_json()
        ok = rep.ok
    if report_path:
        _write_json(report_path, body)
    print(f"audit {args.mode}: {'pass' if ok else 'FAIL'}")
    if args.mode != "structure" and "tv" in body:
        for pair, tv in body["tv"].items():
            print(f"  TV({pair}) = {tv}")
    return EXIT_OK if ok else EXIT_CHECK


# -- bench ----------------------------------------------------------------------


def _parse_list(text, cast=str):
    items = [x.strip() for x in (text or "").split(",") if x.strip()]
    return [cast(x) for x in items]


def cmd_bench(args) -> int:
    sizes = _parse_list(args.sizes, int)
    families = _parse_list(args.families)
    if not sizes:
        raise ValidationError("bench needs a non-empty --sizes list")
    if not families:
        raise ValidationError("bench needs a non-empty --families list")
    for fam in families:
        if fam not in ("poly", "lagrange"):
            raise ValidationError(f"unknown family {fam!r} in --families")
    problem = args.problem.upper()
    spec = PartitionSpec(args.m, args.p, args.n)
    field = FieldConfig(args.modulus)
    rng = np.random.default_rng(args.seed)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(BENCH_COLUMNS)
        for size in sizes:
            for fam in families:
                cfg = StrategyConfig(spec, args.T, field=field, seed=args.seed)
                libB = LibraryB([Matrix.random(field, size, size, rng) for _ in range(args.V)], spec)
                if problem == "FPMM":
                    libA = LibraryA([Matrix.random(field, size, size, rng) for _ in range(args.U)], spec)
                    job = Job("FPMM", fam, cfg, libA=libA, libB=libB)
                elif problem == "PSMM":
                    job = Job("PSMM", fam, cfg, A=Matrix.random(field, size, size, rng), libB=libB)
                else:
                    job = Job("SMM", fam, cfg, A=Matrix.random(field, size, size, rng), B=libB[1])
                run, met = simulate(job, threads=args.threads)
                sec = met.seconds
                writer.writerow(
                    [
                        problem, fam, size, spec.m, spec.p, spec.n, args.T, run.N, run.K,
                        args.V, args.U if problem == "FPMM" else 0,
                        f"{sec['encode']:.6f}", f"{sec['worker']:.6f}", f"{sec['decode']:.6f}",
                        met.encode_ops, max(met.worker_ops.values()), met.decode_ops,
                        met.uploaded_symbols, met.query_scalars, met.downloaded_symbols,
                    ]
                )
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# -- verify-tensor --------------------------------------------------------------


def cmd_verify_tensor(args) -> int:
    field = FieldConfig(args.modulus)
    path = Path(args.tensor)
    if path.exists():
        t = tensor_from_json(json.loads(path.read_text()), name=path.stem)
    else:
        t = builtin_tensor(args.tensor)
    rep = verify_tensor(t, args.trials, field, rng=args.seed)
    body = {
        "tensor": t.name,
        "shape": list(t.shape),
        "R": t.R,
        "trials": rep.trials,
        "random_passed": rep.random_passed,
        "symbolic_passed": rep.symbolic_passed,
        "passed": rep.passed,
        "witness": rep.witness,
    }
    print(json.dumps(body, indent=1))
    if args.save:
        save_tensor(args.save, t)
    return EXIT_OK if rep.passed else EXIT_CHECK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="copmm", description="Coded secure and private matrix multiplication over F_q.")
    ap.add_argument("--version", action="version", version=f"copmm {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    th = sub.add_parser("threshold", help="recovery thresholds and closed-form costs")
    th.add_argument("--problem", default="PSMM", choices=["SMM", "PSMM", "FPMM", "smm", "psmm", "fpmm"])
    th.add_argument("--family", default="all", choices=["poly", "lagrange", "all"])
    th.add_argument("--m", type=int, default=1)
    th.add_argument("--p", type=int, default=1)
    th.add_argument("--n", type=int, default=1)
    th.add_argument("--T", type=int, default=None)
    th.add_argument("--R", type=int, default=None, help="bilinear rank (lagrange family)")
    th.add_argument("--N", type=int, default=None, help="number of workers, for a numeric P_u")
    th.add_argument("--variant", default="min", choices=["min", "V1", "V2", "V3", "v1", "v2", "v3"])
    th.add_argument("--table1", action="store_true", help="the (2,2,2)/(3,3,3)/(5,5,5) comparison rows")
    th.add_argument("--json", action="store_true")
    th.set_defaults(func=cmd_threshold)

    run = sub.add_parser("run", help="run a strategy from a JSON config")
    run.add_argument("config")
    run.add_argument("--out", default="transcript.json", help="transcript JSON path")
    run.add_argument("--result", default=None, help="decoded matrix path (FQMX)")
    run.add_argument("--verify-oracle", action="store_true", help="compare against the direct product")
    run.add_argument("--pad", action="store_true", help="zero-pad inputs to divisible dimensions")
    run.add_argument("--threads", type=int, default=None)
    run.set_defaults(func=cmd_run)

    au = sub.add_parser("audit", help="security and privacy checks")
    au.add_argument("--mode", required=True, choices=["privacy", "security", "structure"])
    au.add_argument("config", nargs="?")
    au.add_argument("--report", default=None, help="JSON report path")
    au.set_defaults(func=cmd_audit)

    be = sub.add_parser("bench", help="timing and operation counts as CSV")
    be.add_argument("--sizes", required=True, help="comma-separated square matrix sizes")
    be.add_argument("--families", default="poly,lagrange")
    be.add_argument("--problem", default="PSMM", choices=["SMM", "PSMM", "FPMM"])
    be.add_argument("--m", type=int, default=2)
    be.add_argument("--p", type=int, default=2)
    be.add_argument("--n", type=int, default=2)
    be.add_argument("--T", type=int, default=1)
    be.add_argument("--V", type=int, default=2)
    be.add_argument("--U", type=int, default=2)
    be.add_argument("--modulus", type=int, default=DEFAULT_MODULUS)
    be.add_argument("--seed", type=int, default=0)
    be.add_argument("--threads", type=int, default=None)
    be.add_argument("--out", default=None)
    be.set_defaults(func=cmd_bench)

    vt = sub.add_parser("verify-tensor", help="check a bilinear tensor file or built-in")
    vt.add_argument("tensor", help="JSON file, or strassen, strassen^k, naive:m,p,n")
    vt.add_argument("--trials", type=int, default=100)
    vt.add_argument("--modulus", type=int, default=DEFAULT_MODULUS)
    vt.add_argument("--seed", type=int, default=0)
    vt.add_argument("--save", default=None, help="write the tensor as JSON")
    vt.set_defaults(func=cmd_verify_tensor)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BelowThresholdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_THRESHOLD
    except (ValidationError, ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CopmmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
