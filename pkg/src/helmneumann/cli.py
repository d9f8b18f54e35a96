"""Command-line driver: identity checks, convergence sweeps, design runs and solves.

Exit codes: 0 when every check passes, 1 when a criterion fails, 2 for
configuration errors. All tables are CSV with a header row; complex values
are written as ``*_re``/``*_im`` column pairs.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .design import (
    DesignParams,
    assemble_linear_system,
    continue_design,
    load_matrix,
    read_history,
    replay,
    start_run,
)
from .experiments import (
    bem_reference,
    bem_scattering,
    growth_domain,
    identity_suite,
    inflate_sweep,
    perturb_orders,
)
from .geometry import ConfigError, load_domain, save_domain

logger = logging.getLogger("helmneumann")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2
DEFAULT_DRS = (0.04, 0.02, 0.01, 0.005)
SLOPE_MIN = 0.9
PERTURB_MIN = {"far": 2.5, "boundary": 2.5, "seed": 0.8}


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _positive(kind):
    def parse(text):
        try:
            v = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def _grid_size(text):
    n = _positive(int)(text)
    if n < 16 or n & (n - 1):
        raise argparse.ArgumentTypeError(f"must be a power of two >= 16, got {n}")
    return n


def _existing(text):
    p = Path(text)
    if not p.is_file():
        raise argparse.ArgumentTypeError(f"no such file: {text}")
    return p


def _out_dir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    logger.info("wrote %s", path)


def _fmt(x):
    return f"{x:.10g}"


def _complex_json(v):
    v = np.asarray(v, dtype=complex)
    return {"re": v.real.tolist(), "im": v.imag.tolist()}


def _load_vector(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict) or "re" not in data or "im" not in data:
        raise ConfigError(f"{path}: needs fields 're' and 'im'")
    re, im = np.asarray(data["re"], dtype=float), np.asarray(data["im"], dtype=float)
    if re.shape != im.shape or re.ndim != 1:
        raise ConfigError(f"{path}: 're' and 'im' must be vectors of equal length")
    return re + 1j * im


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_verify(args):
    checks = identity_suite(args.tolerance, args.only)
    if not checks:
        raise ConfigError(f"--only {args.only!r} matches no check")
    width = max(len(c.name) for c in checks)
    print(f"{'check':<{width}}  {'max deviation':>13}  {'tolerance':>9}  result")
    for c in checks:
        print(f"{c.name:<{width}}  {c.deviation:13.3e}  {c.tolerance:9.1e}  "
              f"{'pass' if c.passed else 'FAIL'}")
    if args.out:
        _write_csv(_out_dir(args) / "verify.csv", ("check", "deviation", "tolerance", "passed"),
                   [(c.name, f"{c.deviation:.6e}", c.tolerance, int(c.passed)) for c in checks])
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def cmd_inflate_convergence(args):
    domain = growth_domain(1.0, args.k)
    if args.domain:
        domain, _ = load_domain(args.domain)
    drs = args.dr or list(DEFAULT_DRS)
    out = _out_dir(args)
    rows, slope, _ = inflate_sweep(
        drs, domain, nf=args.nf, nc=args.nc, r0=args.r0, variant=args.variant,
        diagnostics=lambda dr: out / f"steps_dr{dr:g}.csv")
    _write_csv(out / "convergence.csv",
               ("dr", "mean_error", "max_error", "steps", "symmetry", "seconds"),
               [(_fmt(r.dr), f"{r.mean_error:.6e}", f"{r.max_error:.6e}", r.steps,
                 f"{r.symmetry:.3e}", f"{r.seconds:.2f}") for r in rows])
    for r in rows:
        print(f"dr={r.dr:<8g} mean error {r.mean_error:.3e}  max error {r.max_error:.3e}  "
              f"steps {r.steps}")
    if len(rows) < 2:
        return EXIT_OK
    ok = slope >= SLOPE_MIN
    print(f"log-log slope {slope:.3f} (need >= {SLOPE_MIN}): {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_perturb_order(args):
    res = perturb_orders(k=args.k, nc=args.nc)
    _write_csv(_out_dir(args) / "perturb_order.csv", ("radius", "far", "boundary", "seed"),
               [(_fmt(r), f"{a:.6e}", f"{b:.6e}", f"{c:.6e}")
                for r, a, b, c in zip(res["radii"], res["far"], res["boundary"], res["seed"])])
    ok = True
    for key, need in PERTURB_MIN.items():
        s = res["slopes"][key]
        ok &= s >= need
        print(f"{key:<9} slope {s:.3f} (need >= {need}): {'pass' if s >= need else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_design(args):
    A = load_matrix(args.target)
    params = DesignParams(k=args.k, sources=A.shape[0], nf=args.nf, dr=args.dr[0] if args.dr else
                          DesignParams.dr)
    out = _out_dir(args)
    history = out / "history.csv"
    if args.resume:
        records = read_history(args.resume)
        logger.info("replaying %d recorded actions", len(records))
        run = replay(A, params, records)
    else:
        run = start_run(A, params)
    e0 = run.history[0].e_before if run.history else run.e
    run = continue_design(run, history)
    save_domain(run.domain, out / "domain.json", A.shape[0])
    hist = [h.e_after for h in run.history]
    monotone = all(b < a for a, b in zip([e0] + hist, hist))
    print(f"disks {len(run.domain.disks)}  e: {e0:.6e} -> {run.e:.6e}  actions {len(run.history)}")
    if run.e >= e0 and run.e > 0:
        warnings.warn("no action lowered e; returning the starting domain", RuntimeWarning)
    if not monotone:
        print("accepted e-history is not strictly decreasing: FAIL")
        return EXIT_FAIL
    return EXIT_OK


def cmd_solve(args):
    domain, sources = load_domain(args.domain)
    sm = bem_scattering(domain, sources, args.nc)
    if args.b:
        b = _load_vector(args.b)
        if b.size != sources:
            raise ConfigError(f"{args.b}: vector length {b.size} != source count {sources}")
    else:
        rng = np.random.default_rng(args.seed)
        b = rng.standard_normal(sources) + 1j * rng.standard_normal(sources)
    try:
        res = assemble_linear_system(sm.S, sm.companion, b)
    except np.linalg.LinAlgError as exc:
        print(f"rank deficient: {exc}")
        return EXIT_FAIL
    report = {"intensities": _complex_json(res.intensities), "residual": res.residual,
              "u_residual": res.u_residual, "u_condition": res.u_condition,
              "singular_values": res.singular_values.tolist()}
    path = _out_dir(args) / "intensities.json"
    path.write_text(json.dumps(report, indent=2) + "\n")
    print(f"intensity residual {res.residual:.3e}  u-system residual {res.u_residual:.3e}  "
          f"cond {res.u_condition:.3e}")
    return EXIT_OK if res.residual <= args.tolerance else EXIT_FAIL


def cmd_bem_reference(args):
    domain = growth_domain(1.0, args.k)
    if args.domain:
        domain, _ = load_domain(args.domain)
    if not 0 <= args.disk < len(domain.disks):
        raise ConfigError(f"--disk {args.disk} out of range for {len(domain.disks)} disks")
    if args.nc % args.nf:
        raise ConfigError(f"--nf {args.nf} must divide --nc {args.nc}")
    t0 = time.perf_counter()
    table = bem_reference(domain, args.nf, args.nc, args.disk)
    n = table.shape[0]
    _write_csv(_out_dir(args) / "bem_reference.csv", ("a", "b", "value_re", "value_im"),
               [(i, j, repr(float(table[i, j].real)), repr(float(table[i, j].imag)))
                for i in range(n) for j in range(n)])
    print(f"boundary table {n}x{n} at nc={args.nc} in {time.perf_counter() - t0:.1f} s")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--k", type=_positive(float), default=1.0, help="wavenumber")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized inputs")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="helmneumann", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="closed-form identity suite")
    s.add_argument("--tolerance", type=_positive(float), default=1e-8)
    s.add_argument("--only", help="run checks whose name contains this text")
    s.set_defaults(func=cmd_verify, out=None)

    s = sub.add_parser("inflate-convergence", parents=[common],
                       help="radius-inflation error against the BEM for several dr")
    s.add_argument("--domain", type=_existing, help="disk 0 grows, the rest is background")
    s.add_argument("--nf", type=_grid_size, default=256)
    s.add_argument("--nc", type=_grid_size, default=2048)
    s.add_argument("--dr", type=_positive(float), action="append")
    s.add_argument("--r0", type=_positive(float), default=0.01)
    s.add_argument("--variant", choices=("stable", "simplified"), default="stable")
    s.set_defaults(func=cmd_inflate_convergence)

    s = sub.add_parser("perturb-order", parents=[common],
                       help="orders of the small-disk formulas against the BEM")
    s.add_argument("--nc", type=_grid_size, default=64)
    s.set_defaults(func=cmd_perturb_order)

    s = sub.add_parser("design", parents=[common], help="greedy disk placement toward a target")
    s.add_argument("--target", type=_existing, required=True, help="JSON with 're' and 'im'")
    s.add_argument("--nf", type=_grid_size, default=64)
    s.add_argument("--dr", type=_positive(float), action="append", help="growth increment")
    s.add_argument("--resume", type=_existing, help="history CSV to replay first")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("solve", parents=[common], help="intensities for a right-hand side")
    s.add_argument("--domain", type=_existing, required=True)
    s.add_argument("--b", type=_existing, help="JSON vector with 're' and 'im' (random if omitted)")
    s.add_argument("--nc", type=_grid_size, default=256)
    s.add_argument("--tolerance", type=_positive(float), default=1e-8)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("bem-reference", parents=[common],
                       help="BEM boundary-pair table of one disk")
    s.add_argument("--domain", type=_existing)
    s.add_argument("--disk", type=int, default=0)
    s.add_argument("--nf", type=_grid_size, default=256)
    s.add_argument("--nc", type=_grid_size, default=2048)
    s.set_defaults(func=cmd_bem_reference)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
