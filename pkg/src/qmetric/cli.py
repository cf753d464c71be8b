"""Command-line front end.

Exit codes: 0 success, 1 a requested check failed, 2 invalid input, 3 solver failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .algebra import ShapeError
from .convex import DEFAULT_TOL, SolverError
from .io import FormatError, load_bridge, load_lipnorm, load_space, load_treks, read_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


def fmt(x) -> str:
    """12 significant digits; floats keep a decimal point; None is an empty cell."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        s = f"{float(x):.12g}"
        if s in ("inf", "-inf", "nan"):
            return s
        if "." not in s and "e" not in s:
            s += ".0"
        return s
    return str(x)


def write_csv(out, header: Sequence[str] | None, rows: Sequence[Sequence]) -> None:
    w = csv.writer(out, lineterminator="\n")
    if header is not None:
        w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])


class _Output:
    def __init__(self, path: str | None):
        self.path = path
        self.buf = io.StringIO()

    def flush(self) -> None:
        text = self.buf.getvalue()
        if self.path is None:
            sys.stdout.write(text)
        else:
            with open(self.path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)


def _check_common(args) -> None:
    if not 0 < args.tol <= 1e-2:
        raise ValueError("--tol must lie in (0, 1e-2]")
    if args.threads < 1:
        raise ValueError("--threads must be at least 1")
    if not -2 ** 63 <= args.seed < 2 ** 64:
        raise ValueError("--seed must be a 64-bit integer")


def _seed(args) -> int:
    return args.seed % 2 ** 32


def _write_trace(args, reports) -> None:
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="\n") as fh:
            for r in reports:
                fh.write(r.to_json() + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_mk(args, out) -> int:
    from .metric import mk_distance
    sp = load_space(args.space)
    trace = []
    v = mk_distance(sp.L, sp.state(args.phi), sp.state(args.psi), args.tol, trace)
    _write_trace(args, trace)
    out.write(fmt(v) + "\n")
    return EXIT_OK


def cmd_bl(args, out) -> int:
    from .metric import bl_distance
    sp = load_space(args.space)
    trace = []
    v = bl_distance(sp.L, args.r, sp.state(args.phi), sp.state(args.psi), args.tol, trace)
    _write_trace(args, trace)
    out.write(fmt(v) + "\n")
    return EXIT_OK


def _bounds_rows(d: dict) -> list:
    return [[k, b.lower, b.upper, b.certified] for k, b in d.items()]


def cmd_bridge_length(args, out) -> int:
    from .bridge import bridge_length_bounds
    g, L_A, L_B, _ = load_bridge(args.bridge)
    res = bridge_length_bounds(g, L_A, L_B, directions=args.samples or 8, net_size=args.net,
                               seed=_seed(args), tol=args.tol, threads=args.threads)
    write_csv(out, ["quantity", "lower", "upper", "certified"], _bounds_rows(res))
    return EXIT_OK


def cmd_tunnel(args, out) -> int:
    from .bridge import bridge_length_bounds
    from .tunnel import tunnel_from_bridge, tunnel_quantities
    g, L_A, L_B, _ = load_bridge(args.bridge)
    lam = args.lam
    if lam is None:
        est = bridge_length_bounds(g, L_A, L_B, net_size=args.net, seed=_seed(args), tol=args.tol,
                                   threads=args.threads)["length"]
        lam = 10.0 * max(est.upper, args.tol)
    t = tunnel_from_bridge(g, L_A, L_B, lam, check_samples=args.samples or 20, seed=_seed(args),
                           tol=args.tol)
    q = tunnel_quantities(t, net_size=args.net, seed=_seed(args), tol=args.tol,
                          threads=args.threads)
    rows = _bounds_rows(q)
    iso = t.isometry
    rows.append(["lambda", lam, lam, True])
    rows.append(["isometry_margin", max(iso.margin_A, iso.margin_B), None, iso.passed])
    write_csv(out, ["quantity", "lower", "upper", "certified"], rows)
    return EXIT_OK if iso.passed else EXIT_FAIL


def cmd_propinquity_bound(args, out) -> int:
    from .bridge import bridge_length_bounds
    from .metric import Bounds
    from .tunnel import propinquity_upper_bound
    lengths = []
    rows = []
    for i, trek in enumerate(load_treks(args.trek)):
        parts = []
        for k, (g, L_A, L_B, known) in enumerate(trek):
            if known is None:
                known = bridge_length_bounds(g, L_A, L_B, net_size=args.net,
                                             seed=_seed(args) + k, tol=args.tol,
                                             threads=args.threads)["length"]
            parts.append(known)
        b = Bounds(sum(p.lower for p in parts), sum(p.upper for p in parts),
                   all(p.certified for p in parts))
        lengths.append(b)
        rows.append([i, b.lower, b.upper, b.certified])
    bound = propinquity_upper_bound(lengths)
    rows.append(["bound", None, bound, bound is not None])
    write_csv(out, ["trek", "lower", "upper", "certified"], rows)
    return EXIT_OK


def cmd_check(args, out) -> int:
    from .lipnorm import check_quasi_leibniz
    L = load_lipnorm(args.lipnorm)
    if args.what == "leibniz":
        rep = check_quasi_leibniz(L, samples=args.samples or 1000, seed=_seed(args),
                                  threads=args.threads)
        out.write(rep.line() + "\n")
        return EXIT_OK if rep.passed else EXIT_FAIL
    k = L.kernel_dim()
    ok = k == 1
    out.write(f"kernel_dim={k} {'pass' if ok else 'fail'}\n")
    return EXIT_OK if ok else EXIT_FAIL


def _ints(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip()]


def _floats(s) -> list[float]:
    if isinstance(s, (list, tuple)):
        return [float(x) for x in s]
    return [float(x) for x in str(s).split(",") if x.strip()]


EXPERIMENT_DEFAULTS = {
    "commutator": {"N": 2, "M": 3, "d": 1, "m": "1", "k": None},
    "collapse": {"n": 5, "js": "1,2,4,8,16", "H": "1,0", "p": 1},
    "fejer": {"orders": "9", "radii": "0,1,2,3,4", "length": "torus"},
    "fuzzy-torus": {"ns": "4,8,16,32,64", "theta": 0.0},
    "berezin": {"j": "0.5,1,1.5,2", "n_theta": 25, "n_phi": 48},
}


def cmd_experiment(args, out) -> int:
    from . import models
    cfg = read_json(args.config) if args.config else {}
    for k, v in EXPERIMENT_DEFAULTS[args.name].items():
        if getattr(args, k, None) is None:
            setattr(args, k, cfg.get(k, v))
    name = args.name
    if name == "commutator":
        m = _ints(args.m)
        k = _ints(args.k) if args.k else None
        r = models.commutator_bound_check(int(args.N), int(args.M), int(args.d), m, k)
        write_csv(out, None, [r.row()])
        return EXIT_OK if r.passed else EXIT_FAIL
    if name == "collapse":
        H = _ints(args.H)
        gens = [H[i:i + 2] for i in range(0, len(H), 2)]
        rows = models.collapse_experiment(int(args.n), gens, _ints(args.js), args.samples or 50,
                                          _seed(args), int(args.p))
        write_csv(out, models.CollapseRow.HEADER, [r.row() for r in rows])
        return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL
    if name == "fejer":
        orders = _ints(args.orders)
        G = models.FiniteAbelianGroup(orders)
        rows = []
        for K in _ints(args.radii):
            f = models.fejer_data(G, [K] * len(orders))
            rows.append([K, f.defect(args.length), f.range_residual(), float(f.weights.min())])
        write_csv(out, ["K", "defect", "range_residual", "min_weight"], rows)
        return EXIT_OK
    if name == "fuzzy-torus":
        rows = models.fuzzy_torus_convergence_experiment(_ints(args.ns), float(args.theta))
        write_csv(out, models.CONVERGENCE_HEADER, rows)
        return EXIT_OK
    if name == "berezin":
        rows = []
        ok = True
        for j in _floats(args.j):
            c = models.berezin(j, int(args.n_theta), int(args.n_phi)).checks(
                samples=args.samples or 5, seed=_seed(args))
            passed = (c["symbol_one"] <= 1e-10 and c["quantize_one"] <= 1e-3
                      and c["symbol_min"] >= -1e-10 and c["quantize_min"] >= -1e-10
                      and c["equivariance"] <= 1e-3)
            ok &= passed
            rows.append([j, c["symbol_one"], c["quantize_one"], c["symbol_min"],
                         c["quantize_min"], c["equivariance"], "pass" if passed else "fail"])
        write_csv(out, ["j", "symbol_one", "quantize_one", "symbol_min", "quantize_min",
                        "equivariance", "status"], rows)
        return EXIT_OK if ok else EXIT_FAIL
    raise ValueError(f"unknown experiment {name!r}")


# ---------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser) -> None:
    env_threads = os.environ.get("QMETRIC_THREADS")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL, help="solver tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=None, help="sample count (command specific)")
    p.add_argument("--net", type=int, default=8, help="state net size for matrix blocks")
    p.add_argument("--threads", type=int, default=int(env_threads) if env_threads else 1)
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--trace", default=None, help="write solver reports (JSON lines) here")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmetric", description="Distances between finite quantum metric spaces.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    for name, help_ in (("mk", "Monge-Kantorovich distance"), ("bl", "bounded-Lipschitz distance")):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--space", required=True)
        s.add_argument("--phi", required=True)
        s.add_argument("--psi", required=True)
        if name == "bl":
            s.add_argument("--r", type=float, required=True, help="norm cut-off")
        _common(s)
        s.set_defaults(func=cmd_mk if name == "mk" else cmd_bl)

    s = sub.add_parser("bridge-length", help="reach, height and length bounds of a bridge")
    s.add_argument("--bridge", required=True)
    _common(s)
    s.set_defaults(func=cmd_bridge_length)

    s = sub.add_parser("tunnel", help="tunnel built from a bridge, with its quantities")
    s.add_argument("--bridge", required=True)
    s.add_argument("--lam", type=float, default=None, help="default: 10x the estimated length")
    _common(s)
    s.set_defaults(func=cmd_tunnel)

    s = sub.add_parser("propinquity-bound", help="certified upper bound from trek lengths")
    s.add_argument("--trek", required=True)
    _common(s)
    s.set_defaults(func=cmd_propinquity_bound)

    s = sub.add_parser("check", help="sampled Leibniz check or kernel check of a seminorm")
    s.add_argument("what", choices=["leibniz", "kernel"])
    s.add_argument("--lipnorm", required=True)
    _common(s)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("experiment", help="model experiments (CSV output)")
    s.add_argument("name", choices=sorted(EXPERIMENT_DEFAULTS))
    s.add_argument("--config", default=None, help="JSON file with experiment parameters")
    for flag in ("N", "M", "d", "m", "k", "n", "js", "H", "p", "orders", "radii", "length", "ns",
                 "theta", "j", "n_theta", "n_phi"):
        s.add_argument(f"--{flag}", dest=flag, default=None)
    _common(s)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK
    out = _Output(args.out)
    try:
        _check_common(args)
        code = args.func(args, out.buf)
    except SolverError as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (FormatError, ShapeError, ValueError, KeyError, IndexError, OSError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT
    out.flush()
    return code


if __name__ == "__main__":
    sys.exit(main())
