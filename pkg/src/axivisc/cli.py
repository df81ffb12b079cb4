"""Command line interface: run / norms / reconstruct / check.

Exit codes: 0 success, 1 a verification check failed, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

if "AXIVISC_THREADS" in os.environ:
    # cap BLAS/FFT worker pools before numpy is first imported
    _n = os.environ["AXIVISC_THREADS"]
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _n)

from . import diagnostics, norms
from .biot_savart import KernelTable, velocity_from_vorticity
from .experiment import (ExperimentConfig, parse_config, run_checks,
                         run_experiment)
from .grid import load_field, save_field


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="axivisc")
    sub = p.add_subparsers(dest="command", required=True)

    pr = sub.add_parser("run", help="run an experiment and write diagnostics")
    pr.add_argument("--config", help="key=value config file (defaults if omitted)")
    pr.add_argument("--out", help="output directory (overrides config)")

    pn = sub.add_parser("norms", help="print norms of a snapshot field")
    pn.add_argument("--snapshot", required=True, help="snapshot path (no extension)")
    pn.add_argument("--p", type=float, action="append", default=[],
                    help="Lebesgue exponent (repeatable)")
    pn.add_argument("--q", type=float, action="append", default=[],
                    help="Lorentz second exponent paired with --p (repeatable)")

    pc = sub.add_parser("reconstruct", help="reconstruct velocity from a vorticity snapshot")
    pc.add_argument("--snapshot", required=True)
    pc.add_argument("--out", required=True)
    pc.add_argument("--n-theta", type=int, default=64)

    pk = sub.add_parser("check", help="replay all diagnostics on a run directory")
    pk.add_argument("--out", required=True, help="run directory")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "norms":
            return _cmd_norms(args)
        if args.command == "reconstruct":
            return _cmd_reconstruct(args)
        return _cmd_check(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _cmd_run(args) -> int:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
    else:
        cfg = ExperimentConfig()
    _, verdicts = run_experiment(cfg, out_dir=args.out)
    for v in verdicts:
        print(v.line())
    return 0 if all(v.passed is not False for v in verdicts) else 1


def _cmd_norms(args) -> int:
    f, t = load_field(args.snapshot)
    ps = args.p or [2.0]
    qs = args.q
    print(f"# snapshot role={f.role} t={t!r}")
    for i, p in enumerate(ps):
        if i < len(qs):
            q = qs[i]
            val = norms.lorentz_norm(f, (p, q))
            print(f"lorentz p={p:g} q={q:g} {val:.17g}")
        else:
            val = norms.lebesgue_norm(f, p)
            print(f"lebesgue p={p:g} {val:.17g}")
    return 0


def _cmd_reconstruct(args) -> int:
    omega, t = load_field(args.snapshot)
    kt = KernelTable(args.n_theta)
    u = velocity_from_vorticity(omega, kt)
    os.makedirs(args.out, exist_ok=True)
    save_field(os.path.join(args.out, "u_r"), u.u_r, time=t)
    save_field(os.path.join(args.out, "u_z"), u.u_z, time=t)
    print(f"wrote u_r, u_z to {args.out}")
    return 0


def _cmd_check(args) -> int:
    csv_path = os.path.join(args.out, "diagnostics.csv")
    with open(csv_path, "r", encoding="utf-8") as fh:
        records = diagnostics.parse_csv(fh.read())
    failed = False

    # replay the final CSV row from its snapshot; must reproduce bit-exactly
    if len(records) >= 2:
        final = records[-1]
        tag = f"{final.t:.6f}"
        snap = os.path.join(args.out, f"q_t{tag}")
        if os.path.exists(snap + ".hdr"):
            replay = _replay_final_row(args.out, snap, records)
            if replay is not None and not _rows_equal(replay, final):
                print("replay: FAIL (final CSV row does not match snapshot)")
                failed = True
            else:
                print("replay: PASS")

    for v in run_checks(records):
        print(v.line())
        if v.passed is False:
            failed = True
    return 1 if failed else 0


def _replay_final_row(out_dir, snap_path, records):
    from .evolution import SimState
    from .experiment import parse_config

    cfg_path = os.path.join(out_dir, "config.txt")
    if not os.path.exists(cfg_path):
        return None
    with open(cfg_path, "r", encoding="utf-8") as fh:
        cfg = parse_config(fh.read())
    q, t = load_field(snap_path)
    g = q.grid
    kt = KernelTable(cfg.n_theta)
    omega, _ = load_field(snap_path.replace("q_t", "omega_t"))
    u = velocity_from_vorticity(omega, kt)
    state = SimState(t, records[-1].step_index, q, omega, u)
    return diagnostics.compute_record(state, first=records[0],
                                      prev=records[-2])


def _rows_equal(a, b) -> bool:
    for c in diagnostics.CSV_COLUMNS:
        va, vb = getattr(a, c), getattr(b, c)
        if isinstance(va, float) and math.isnan(va) and math.isnan(vb):
            continue
        if va != vb:
            return False
    return True


if __name__ == "__main__":
    sys.exit(main())
