"""Command-line front end: ``ptband {check-pt,sweep,classify,oracle}``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bloch import SolverError, galerkin_eigvals, monodromy
from .classify import classify
from .localization import disk_containment, estimate_constants
from .potential import PotentialError, PotentialSpec, RealityError, validate_pt
from .sweep import run_sweep, t_grid

EXIT_OK, EXIT_FALSE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, default=_json_default))


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_sweep(spec, args):
    if args.t_points < 3:
        raise PotentialError("--t-points must be at least 3")
    window = tuple(args.window) if args.window else None
    return run_sweep(spec, K=args.K, ts=t_grid(args.t_points), window=window)


def cmd_check_pt(spec, args) -> int:
    ok, offenders = validate_pt(spec)
    print("PT-symmetric" if ok else "not PT-symmetric")
    for n, i, j in offenders:
        c = spec.coeff(n)[i, j]
        print(f"  offender n={n} (i={i}, j={j}): C = {c.real:.6g}{c.imag:+.6g}i")
    return EXIT_OK if ok else EXIT_FALSE


def cmd_sweep(spec, args) -> int:
    sweep = _run_sweep(spec, args)
    out = _out_dir(args)
    with open(out / "bands.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re", "im", "mult", "k", "j", "residual"])
        for p, (k, j) in zip(sweep.points, sweep.labels):
            w.writerow([_fmt(p.t), _fmt(p.lam.real), _fmt(p.lam.imag), p.mult, k, j,
                        _fmt(p.residual_rows)])
    _write_json(out / "sweep.json", sweep.to_json())
    print(f"{len(sweep.points)} eigenvalue clusters over {len(sweep.ts)} t-points -> {out}")
    return EXIT_OK


def cmd_classify(spec, args) -> int:
    sweep = _run_sweep(spec, args)
    config = estimate_constants(sweep, k_max=min(40, args.K - 8))
    containment = disk_containment(sweep, config, k_max=config.k_max)
    report = classify(sweep, config, lambda_max=args.lambda_max)
    out = _out_dir(args)
    data = report.to_json()
    data["localization"] = config.to_json(containment.violations)
    data["run"] = {"K": args.K, "t_points": args.t_points, "seed": args.seed,
                   "lambda_max": args.lambda_max}
    _write_json(out / "report.json", data)
    with open(out / "bands.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        for row in report.bands_csv_rows():
            w.writerow([_fmt(x) if isinstance(x, float) else x for x in row])
    bd, hl = report.bounded, report.halfline
    print(f"N1_hat={config.N1_hat} c_hat={config.c_hat:.6g} bands={len(report.real_bands)}")
    if bd.applicable:
        print(f"no-real-eigenvalue case: hull={bd.hull} threshold={bd.threshold:.6g} ok={bd.ok}")
    if hl.applicable:
        print(f"half-line: d={report.diam.d:.6g} verdict={hl.verdict} H_hat={hl.H_hat} {hl.note}")
    failed = not containment.ok or (bd.applicable and not bd.ok) or hl.verdict is False
    return EXIT_FALSE if failed else EXIT_OK


def cmd_oracle(spec, args) -> int:
    t = args.t
    if not -1 < t <= 1:
        raise PotentialError(f"t must lie in (-1, 1], got {t}")
    ev = galerkin_eigvals(spec, t, args.K)
    rho = np.exp(1j * np.pi * t)
    print("lambda\t|detM-1|\tmin|rho-e^(i pi t)|\tgalerkin_dist")
    status = EXIT_OK
    for lam in args.lam:
        try:
            res = monodromy(spec, lam)
        except SolverError as exc:
            print(f"{lam}\tFAILED\t{exc}")
            status = EXIT_NUMERIC
            continue
        det_err = abs(res.detM - 1)
        hit = float(np.min(np.abs(res.multipliers - rho)))
        dist = float(np.min(np.abs(ev - lam)))
        print(f"{lam:.17g}\t{det_err:.3e}\t{hit:.3e}\t{dist:.3e}")
        if det_err > 1e-8 and status == EXIT_OK:
            status = EXIT_FALSE
    return status


COMMANDS = {"check-pt": cmd_check_pt, "sweep": cmd_sweep,
            "classify": cmd_classify, "oracle": cmd_oracle}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptband", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--spec", required=True, help="potential JSON file")
        p.add_argument("--K", type=int, default=64, help="Fourier truncation")
        p.add_argument("--t-points", type=int, default=201)
        p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"))
        p.add_argument("--out", default="ptband-out")
        p.add_argument("--seed", type=int, default=0)
        if name == "classify":
            p.add_argument("--lambda-max", type=float, default=2000.0)
        if name == "oracle":
            p.add_argument("--t", type=float, required=True)
            p.add_argument("--lam", type=complex, nargs="+", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PotentialSpec.load(args.spec)
        return COMMANDS[args.command](spec, args)
    except (PotentialError, RealityError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
