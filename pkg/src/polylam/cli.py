"""Command-line front end.

Tables go out as CSV (``#`` comment header, 17 significant digits) or JSON.
Exit status is 0 on success, 2 for invalid input and 3 when the requested
construction does not exist.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from . import __version__
from .attainable import (
    check_inclusion,
    full_boundary,
    identity_suite,
    nm_vertices,
    uniaxial_points,
)
from .errors import InfeasibleError, ValidationError
from .laminate import (
    barycenter,
    build_sequence,
    classify_support,
    make_schedule,
    moment,
    segment_point,
)
from .linalg import CrystalSpectrum, certificate_tol, project_unit_trace
from .polycrystal import g_closure_slice
from .rank_one import admissible_lambdas, build_connection, normal_squares
from .t2set import (
    BRANCHES,
    admissible_arc,
    branch_point,
    make_t2_point,
    sample_t2_curve,
    solve_double_connection,
)


def fmt(x: Any) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def triple(text: str) -> tuple[float, float, float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    try:
        vals = tuple(float(Fraction(p)) for p in parts)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad number in {text!r}: {exc}") from None
    return vals  # type: ignore[return-value]


def number(text: str) -> float:
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def positive_count(text: str) -> int:
    n = int(text)
    if n < 2:
        raise argparse.ArgumentTypeError("count must be at least 2")
    return n


class Table:
    def __init__(self, columns: Sequence[str], rows: list[Sequence[Any]],
                 comments: list[str], summary: dict | None = None):
        self.columns = list(columns)
        self.rows = rows
        self.comments = comments
        self.summary = summary

    def csv(self) -> str:
        lines = [f"# {c}" for c in self.comments]
        if self.summary is not None:
            lines.append("# summary: " + json.dumps(_jsonable(self.summary), sort_keys=True))
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        writer.writerows([fmt(v) for v in row] for row in self.rows)
        return "\n".join(lines) + "\n" + buf.getvalue()

    def json(self) -> str:
        doc: dict[str, Any] = {"meta": self.comments,
                               "rows": [dict(zip(self.columns, r)) for r in self.rows]}
        if self.summary is not None:
            doc["summary"] = self.summary
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n"


def _header(command: str, **items: Any) -> list[str]:
    out = [f"polylam {__version__} {command}", f"numpy {np.__version__}",
           f"certificate_tol = {fmt(certificate_tol())}"]
    for k, v in items.items():
        if isinstance(v, (tuple, list, np.ndarray)):
            v = ",".join(fmt(x) for x in v)
        else:
            v = fmt(v)
        out.append(f"{k} = {v}")
    return out


def cmd_connect(args) -> Table | dict:
    S = CrystalSpectrum(*args.s)
    T = np.array(args.t)
    A = admissible_lambdas(T, S)
    report: dict[str, Any] = {
        "S": S.array(), "T": T,
        "a_alpha": None if A.a_alpha.empty else [A.a_alpha.lo, A.a_alpha.hi],
        "a_beta": None if A.a_beta.empty else [A.a_beta.lo, A.a_beta.hi],
    }
    if args.lam is not None:
        squares = normal_squares(T, S, args.lam)
        conn = build_connection(T, S, args.lam)
        report.update({"lambda": args.lam, "n_squares": list(squares), "n": conn.n,
                       "R": conn.R, "residual": conn.residual, "degenerate": conn.degenerate})
    return report


def cmd_t2(args) -> Table:
    S = CrystalSpectrum(*args.s)
    rows = []
    arcs = {}
    for branch in BRANCHES:
        arcs[branch] = admissible_arc(S, branch)
        for P in sample_t2_curve(S, branch, args.count):
            xy = project_unit_trace(P.t)
            rows.append([branch, *P.t, P.lambda1, P.lambda2, xy.x, xy.y])
    comments = _header("t2", S=S.array(), count=args.count,
                       alpha_arc=arcs["alpha"], beta_arc=arcs["beta"])
    return Table(["branch", "t1", "t2", "t3", "lambda1", "lambda2", "x", "y"], rows, comments)


def _laminate_data(args) -> dict:
    S = CrystalSpectrum(*args.s)
    if not 0.0 < args.t_param < 1.0:
        raise ValidationError("--t-param must lie strictly between 0 and 1")
    start, end = admissible_arc(S, args.branch)
    drive = start + args.t_param * (end - start)
    P = make_t2_point(branch_point(S, args.branch, drive), S, args.branch)
    conn = solve_double_connection(P, S)
    sched = make_schedule(conn, segment_point(conn, S, args.p), S)
    if args.r:
        rs = list(args.r)
    elif math.isfinite(sched.r_bar):
        rs = [sched.r_bar - 0.5, sched.r_bar + 0.5]
    else:
        rs = [1.0, 2.0]
    gens = []
    for mu in build_sequence(sched, args.kmax):
        gens.append({
            "k": mu.generation,
            "barycenter_drift": float(np.linalg.norm(barycenter(mu) - sched.A)),
            "residual_mass": (1.0 - sched.p) * sched.q ** mu.generation,
            "mass_outside": classify_support(mu, S).mass_outside,
            "moment_r": [moment(mu, r) for r in rs],
        })
    return {
        "S": S.array(), "branch": args.branch, "T": P.t,
        "schedule": {"p": sched.p, "q": sched.q, "lambda": sched.lam, "r_bar": sched.r_bar,
                     "lambda1": sched.lambda1, "lambda2": sched.lambda2,
                     "ratio_at_r": [sched.ratio(r) for r in rs]},
        "r": rs,
        "generations": gens,
    }


def cmd_laminate(args) -> Table | dict:
    data = _laminate_data(args)
    if args.format == "json":
        return data
    rs = data["r"]
    cols = ["k", "barycenter_drift", "residual_mass", "mass_outside"] + [f"moment_{i + 1}" for i in range(len(rs))]
    rows = [[g["k"], g["barycenter_drift"], g["residual_mass"], g["mass_outside"], *g["moment_r"]]
            for g in data["generations"]]
    sch = data["schedule"]
    comments = _header("laminate", S=data["S"], branch=args.branch, T=data["T"], p=sch["p"], q=sch["q"],
                       **{"lambda": sch["lambda"]}, r_bar=sch["r_bar"], r=rs)
    return Table(cols, rows, comments)


def cmd_region(args) -> Table:
    S = CrystalSpectrum(*args.s)
    region = full_boundary(S, args.count)
    up = uniaxial_points(S)
    va, vb = nm_vertices(S)
    summary: dict[str, Any] = {"u_alpha": up.u_alpha, "u_beta": up.u_beta, "v_alpha": va, "v_beta": vb,
                               "inclusion_ok": None, "min_clearance": None}
    if args.compare_nm:
        rep = check_inclusion(S, max(args.count, 64))
        summary["inclusion_ok"] = rep.inclusion_ok
        summary["min_clearance"] = min(rep.min_clearance_alpha, rep.min_clearance_beta)
    if args.summary:
        with open(args.summary, "w", encoding="utf-8") as fh:
            fh.write(json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n")
    rows = [[region.arc[i], region.perm[i], region.p[i], *region.triples[i], *region.points[i]]
            for i in range(len(region.points))]
    comments = _header("region", S=S.array(), count=args.count)
    return Table(["arc", "perm", "p", "m1", "m2", "m3", "x", "y"], rows, comments, summary)


def cmd_polycrystal(args) -> Table:
    problem, rows = g_closure_slice(args.sigma, args.count)
    table = [[r.kind, *r.m, *r.result.sigma_star, r.result.residual] for r in rows]
    comments = _header("polycrystal", sigma=problem.sigma, theta=problem.theta, S=problem.S.array())
    cols = ["kind", "src_m1", "src_m2", "src_m3", "sigma1_star", "sigma2_star", "sigma3_star", "bound_residual"]
    return Table(cols, table, comments)


def cmd_identities(args) -> Table:
    spectra = [CrystalSpectrum(*args.s)]
    if args.random:
        rng = np.random.default_rng(args.seed)
        while len(spectra) < args.random + 1:
            s = np.sort(rng.dirichlet(np.ones(3)))
            if np.min(np.diff(s)) < 1e-3:
                continue
            s[1] = 1.0 - s[0] - s[2]
            spectra.append(CrystalSpectrum(*map(float, s)))
    rows = []
    for idx, S in enumerate(spectra):
        for c in identity_suite(S):
            rows.append([idx, *S.array(), c.name, c.lhs, c.rhs, c.residual])
    comments = _header("identities", S=spectra[0].array(), random=args.random, seed=args.seed)
    return Table(["spectrum", "s1", "s2", "s3", "identity", "lhs", "rhs", "residual"], rows, comments)


COMMANDS = {
    "connect": cmd_connect,
    "t2": cmd_t2,
    "laminate": cmd_laminate,
    "region": cmd_region,
    "polycrystal": cmd_polycrystal,
    "identities": cmd_identities,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polylam", description="Rank-one laminates and attainable spectra.")
    parser.add_argument("--version", action="version", version=f"polylam {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--tol", type=float, help="certificate tolerance (overrides LAMINATE_TOL)")
    sub = parser.add_subparsers(dest="command", required=True)

    def spectrum_cmd(name, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.add_argument("--s", type=triple, required=True, help="s1,s2,s3 ascending, summing to 1")
        return p

    p = spectrum_cmd("connect", "admissible lambdas and a certified connection")
    p.add_argument("--t", type=triple, required=True, help="t1,t2,t3 ascending, summing to 1")
    p.add_argument("--lambda", dest="lam", type=number)

    p = spectrum_cmd("t2", "sample both doubly connected arcs")
    p.add_argument("--count", type=positive_count, default=64)

    p = spectrum_cmd("laminate", "lamination schedule and per-generation diagnostics")
    p.add_argument("--branch", choices=BRANCHES, default="alpha")
    p.add_argument("--t-param", type=number, default=0.5, help="position along the arc, in (0,1)")
    p.add_argument("--p", type=number, default=0.5)
    p.add_argument("--kmax", type=int, default=40)
    p.add_argument("--r", type=number, action="append", help="moment order (repeatable)")

    p = spectrum_cmd("region", "boundary of the attainable region")
    p.add_argument("--count", type=int, default=256)
    p.add_argument("--compare-nm", action="store_true")
    p.add_argument("--summary", help="also write the JSON summary here")

    p = sub.add_parser("polycrystal", parents=[common], help="effective conductivities of region samples")
    p.add_argument("--sigma", type=triple, required=True, help="sigma1,sigma2,sigma3 descending")
    p.add_argument("--count", type=positive_count, default=64)

    p = spectrum_cmd("identities", "closed-form identity checks")
    p.add_argument("--random", type=int, default=0, help="also check this many random spectra")
    p.add_argument("--seed", type=int, default=0)
    return parser


DEFAULT_FORMAT = {"connect": "json", "laminate": "json"}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.format is None:
        args.format = DEFAULT_FORMAT.get(args.command, "csv")
    if args.tol is not None:
        os.environ["LAMINATE_TOL"] = repr(args.tol)
    try:
        result = COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    if isinstance(result, Table):
        text = result.json() if args.format == "json" else result.csv()
    elif args.format == "json":
        text = json.dumps(_jsonable(result), indent=2, sort_keys=True) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for key, value in _flat(result):
            if isinstance(value, (list, tuple, np.ndarray)):
                writer.writerow([key, *(fmt(x) for x in np.ravel(value))])
            else:
                writer.writerow([key, fmt(value)])
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _flat(d: dict, prefix: str = ""):
    for k, v in d.items():
        if isinstance(v, dict):
            yield from _flat(v, f"{prefix}{k}.")
        elif isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
            for i, item in enumerate(v):
                yield from _flat(item, f"{prefix}{k}.{i}.")
        else:
            yield f"{prefix}{k}", ("" if v is None else v)
