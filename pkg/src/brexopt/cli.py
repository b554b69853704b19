"""Command-line interface.

Subcommands: solve, calibrate, landscape, benchmark, enumerate, gen.
Problem files are JSON documents:

    {"schema": 1,
     "fidelity": {"kind": "ls" | "lr" | "kl", "y": [...], "b": 0.1},
     "A": [[...], ...]  (or {"rows": M, "cols": N, "data": [...] row-major}),
     "lambda0": 0.5, "lambda2": 0.0,
     "constraint": "reals" | "nonneg"}

Exit codes: 2 parse error, 3 domain error, 4 calibration failure.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys
import time

import numpy as np

from . import certify, datagen, fidelity as fid, solver
from .calibration import (CalibrationReport, GeneratorKind, Mode, calibrate,
                          relaxation_from_gammas)
from .errors import CalibrationError, ConvergenceError, DomainError, EnumerationLimitError
from .fidelity import Constraint, FidelitySpec, Kind
from .problem import ProblemSpec
from .solver import Backtracking, Fixed, SolverConfig, objective_J0, objective_JPsi, solve

EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_CALIBRATION = 4


class ParseError(ValueError):
    pass


# ---------------------------------------------------------------------------
# problem file I/O
# ---------------------------------------------------------------------------

def load_problem(path: str) -> ProblemSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read problem file {path}: {exc}") from exc
    try:
        fdoc = doc["fidelity"]
        kind = Kind(fdoc["kind"].lower())
        y = np.asarray(fdoc["y"], dtype=float)
        b = float(fdoc.get("b", 0.0))
        araw = doc["A"]
        if isinstance(araw, dict):
            A = np.asarray(araw["data"], dtype=float).reshape(araw["rows"], araw["cols"])
        else:
            A = np.asarray(araw, dtype=float)
        lam0 = float(doc["lambda0"])
        lam2 = float(doc.get("lambda2", 0.0))
        cons = Constraint(doc.get("constraint", "nonneg" if kind is Kind.KL else "reals"))
        return ProblemSpec(FidelitySpec(kind, y, b=b), A, lambda0=lam0, lambda2=lam2,
                           constraint=cons)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed problem file {path}: {exc}") from exc


def problem_to_doc(problem: ProblemSpec) -> dict:
    doc = {
        "schema": 1,
        "fidelity": {"kind": problem.fidelity.kind.value,
                     "y": problem.fidelity.y.tolist()},
        "A": problem.A.tolist(),
        "lambda0": problem.lambda0,
        "lambda2": problem.lambda2,
        "constraint": problem.constraint.value,
    }
    if problem.fidelity.kind is Kind.KL:
        doc["fidelity"]["b"] = problem.fidelity.b
    return doc


def save_problem(problem: ProblemSpec, path: str):
    with open(path, "w") as fh:
        json.dump(problem_to_doc(problem), fh)


# ---------------------------------------------------------------------------
# flag grammars
# ---------------------------------------------------------------------------

def parse_psi(text: str) -> GeneratorKind:
    head, _, rest = text.partition(":")
    head = head.lower()
    if head == "power":
        return GeneratorKind.power(float(rest) if rest else 2.0)
    if head == "shannon":
        return GeneratorKind.shannon()
    if head == "kl":
        y, b = 1.0, None
        for part in filter(None, rest.split(",")):
            key, _, val = part.partition("=")
            if key == "y":
                y = float(val)
            elif key == "b":
                b = float(val)
            else:
                raise ParseError(f"unknown kl generator option {key!r}")
        return GeneratorKind.klgen(y=y, b=b)
    if head == "matched":
        a = float(rest.partition("=")[2]) if rest.startswith("a=") else (float(rest) if rest else 1.0)
        return GeneratorKind.matched(a=a)
    raise ParseError(f"unknown generator kind {text!r}")


def parse_gamma(text: str):
    """'thr' | 'thrx<factor>' | 'list:v1,...,vN' -> (mode, margin, explicit-list)."""
    text = text.strip().lower()
    if text == "thr":
        return Mode.AT_THRESHOLD, 0.0, None
    if text.startswith("thrx"):
        factor = float(text[4:])
        if factor < 1.0:
            raise ParseError("thrx factor must be >= 1")
        return Mode.STRICT, factor - 1.0, None
    if text.startswith("list:"):
        vals = np.asarray([float(v) for v in text[5:].split(",")], dtype=float)
        return None, 0.0, vals
    raise ParseError(f"bad gamma spec {text!r}")


def build_relaxation(problem: ProblemSpec, psi: GeneratorKind, gamma_spec: str):
    mode, margin, explicit = parse_gamma(gamma_spec)
    if explicit is not None:
        return relaxation_from_gammas(problem, psi, explicit), None
    rel, report = calibrate(problem, psi, mode if mode else Mode.AT_THRESHOLD, margin)
    return rel, report


def parse_step(text: str):
    head, _, rest = text.partition(":")
    if head == "fixed":
        return Fixed(float(rest))
    if head == "backtrack":
        return Backtracking(rho0=float(rest) if rest else None)
    raise ParseError(f"bad step spec {text!r}")


def _dump_json(doc, path: str | None):
    out = json.dumps(doc, indent=2)
    if path:
        with open(path, "w") as fh:
            fh.write(out + "\n")
    else:
        print(out)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    config = SolverConfig(step=parse_step(args.step), max_iter=args.max_iter,
                          rel_tol=args.tol,
                          x0=np.asarray([float(v) for v in args.x0.split(",")], dtype=float)
                          if args.x0 else None)
    if args.penalty == "l0":
        result = solve(problem, "l0", config)
        cert = {"is_localmin_J0": certify.check_localmin_J0(problem, result.x)}
        j_psi = objective_J0(problem, result.x)
    else:
        rel, _report = build_relaxation(problem, parse_psi(args.psi), args.gamma)
        result = solve(problem, rel, config)
        rec = certify.check_localmin_JPsi(problem, rel, result.x)
        cert = json.loads(rec.to_json())
        j_psi = objective_JPsi(problem, rel, result.x)
    doc = {
        "schema": 1,
        "x": result.x.tolist(),
        "J0": objective_J0(problem, result.x),
        "JPsi": j_psi,
        "iterations": result.iterations,
        "stop_reason": result.stop_reason.value,
        "cert": cert,
    }
    _dump_json(doc, args.out)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iter", "J_psi", "J_0", "step", "delta"])
            for row in result.trace_rows():
                w.writerow([row[0]] + [f"{v:.17g}" for v in row[1:]])
    return 0


def cmd_calibrate(args) -> int:
    problem = load_problem(args.problem)
    mode, margin, explicit = parse_gamma(args.gamma)
    if explicit is not None:
        raise ParseError("calibrate expects 'thr' or 'thrx<factor>'")
    _rel, report = calibrate(problem, parse_psi(args.psi), mode, margin)
    _dump_json(json.loads(report.to_json()), args.out)
    return 0


def cmd_enumerate(args) -> int:
    problem = load_problem(args.problem)
    found = certify.enumerate_minimizers(problem, args.max_support)
    doc = {
        "schema": 1,
        "minimizers": [
            {"x": x.tolist(), "J0": j, "support": list(rec.support),
             "strict": rec.is_strict}
            for x, rec, j in found
        ],
    }
    _dump_json(doc, args.out)
    return 0


def cmd_landscape(args) -> int:
    problem = load_problem(args.problem)
    if problem.n > 2:
        raise ParseError("landscape rendering is limited to 1 or 2 variables")
    rel, _report = build_relaxation(problem, parse_psi(args.psi), args.gamma)
    found = certify.enumerate_minimizers(problem, problem.n)
    lo, hi = args.lo, args.hi
    if lo is None or hi is None:
        xs = np.concatenate([x for x, _, _ in found]) if found else np.zeros(1)
        span = max(1.0, np.max(np.abs(xs)) * 1.5)
        lo = 0.0 if problem.constraint is Constraint.NONNEG else -span
        hi = span
    grid = np.linspace(lo, hi, args.points)
    rows = []
    if problem.n == 1:
        for v in grid:
            x = np.array([v])
            try:
                rows.append((v, objective_J0(problem, x), objective_JPsi(problem, rel, x)))
            except DomainError:
                continue
    else:
        for v1 in grid:
            for v2 in grid:
                x = np.array([v1, v2])
                try:
                    rows.append((v1, v2, objective_J0(problem, x),
                                 objective_JPsi(problem, rel, x)))
                except DomainError:
                    continue
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "J0", "JPsi"] if problem.n == 1 else ["x1", "x2", "J0", "JPsi"])
        for row in rows:
            w.writerow([f"{v:.17g}" for v in row])
    side = {
        "schema": 1,
        "minimizers": [{"x": x.tolist(), "J0": j, "support": list(rec.support)}
                       for x, rec, j in found],
    }
    side_path = args.minimizers or (os.path.splitext(args.out)[0] + ".minimizers.json")
    _dump_json(side, side_path)
    return 0


def cmd_gen(args) -> int:
    config = datagen.DataGenConfig(kind=Kind(args.kind), m=args.m, n=args.n, k=args.k,
                                   eta=args.eta, tau=args.tau, s=args.s,
                                   alpha=args.alpha, b=args.b, seed=args.seed)
    problem, x_true = datagen.make_problem(config, args.lambda0_scale, args.lambda2)
    save_problem(problem, args.out)
    if args.truth:
        _dump_json({"schema": 1, "x_true": x_true.tolist()}, args.truth)
    return 0


# -- benchmark ---------------------------------------------------------------

def _bench_one(payload):
    """Worker: one instance, all methods. Deterministic per derived seed."""
    cfg_doc, methods, lambda0_scale, lambda2, max_iter, tol, index = payload
    config = datagen.DataGenConfig(kind=Kind(cfg_doc["kind"]), m=cfg_doc["m"],
                                   n=cfg_doc["n"], k=cfg_doc["k"], eta=cfg_doc["eta"],
                                   tau=cfg_doc["tau"], s=cfg_doc["s"],
                                   alpha=cfg_doc["alpha"], b=cfg_doc["b"],
                                   seed=cfg_doc["seed"] + index)
    problem, _ = datagen.make_problem(config, lambda0_scale, lambda2)
    out = []
    for name in methods:
        t0 = time.perf_counter()
        try:
            if name == "l0":
                res = solve(problem, "l0",
                            SolverConfig(step=Backtracking(), max_iter=max_iter, rel_tol=tol))
            else:
                rel, _ = calibrate(problem, parse_psi(name), Mode.AT_THRESHOLD)
                res = solve(problem, rel,
                            SolverConfig(step=Backtracking(), max_iter=max_iter, rel_tol=tol))
            j0 = objective_J0(problem, res.x)
            out.append({"method": name, "J0": j0, "seconds": time.perf_counter() - t0,
                        "iterations": res.iterations, "error": None})
        except Exception as exc:  # recorded, not fatal
            out.append({"method": name, "J0": None, "seconds": time.perf_counter() - t0,
                        "iterations": 0, "error": str(exc)})
    return index, out


def rank_with_ties(values, rtol: float = 1e-12):
    """Sorted ranks; ties (within rtol relative) all receive the block's best rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0] * len(values)
    rank = 0
    prev = None
    for pos, i in enumerate(order):
        if prev is not None and abs(values[i] - prev) <= rtol * max(1.0, abs(prev)):
            ranks[i] = rank
        else:
            rank = pos
            ranks[i] = rank
            prev = values[i]
    return [r + 1 for r in ranks]


def cmd_benchmark(args) -> int:
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    cfg_doc = {"kind": args.kind, "m": args.m, "n": args.n, "k": args.k,
               "eta": args.eta, "tau": args.tau, "s": args.s, "alpha": args.alpha,
               "b": args.b, "seed": args.seed}
    payloads = [(cfg_doc, methods, args.lambda0_scale, args.lambda2,
                 args.max_iter, args.tol, i) for i in range(args.instances)]
    threads = int(os.environ.get("BREX_THREADS", "0")) or None
    results = [None] * args.instances
    if threads == 1 or args.instances == 1:
        for payload in payloads:
            i, rows = _bench_one(payload)
            results[i] = rows
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            for i, rows in pool.map(_bench_one, payloads):
                results[i] = rows

    rank_counts = {m: [0] * len(methods) for m in methods}
    times = {m: [] for m in methods}
    per_instance = []
    for i, rows in enumerate(results):
        vals = [r["J0"] if r["J0"] is not None else float("inf") for r in rows]
        ranks = rank_with_ties(vals)
        for r, rk in zip(rows, ranks):
            if r["J0"] is not None:
                rank_counts[r["method"]][rk - 1] += 1
            times[r["method"]].append(r["seconds"])
        per_instance.append({"instance": i,
                             "J0": {r["method"]: r["J0"] for r in rows},
                             "rank": {r["method"]: rk for r, rk in zip(rows, ranks)},
                             "errors": {r["method"]: r["error"] for r in rows
                                        if r["error"]}})
    doc = {
        "schema": 1,
        "methods": methods,
        "instances": args.instances,
        "rank_counts": rank_counts,
        "seconds_mean": {m: float(np.mean(ts)) for m, ts in times.items()},
        "seconds_std": {m: float(np.std(ts)) for m, ts in times.items()},
        "per_instance": per_instance,
    }
    _dump_json(doc, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["instance"] + [f"J0_{m}" for m in methods]
                       + [f"rank_{m}" for m in methods])
            for row in per_instance:
                w.writerow([row["instance"]]
                           + [f"{row['J0'][m]:.17g}" if row["J0"][m] is not None else ""
                              for m in methods]
                           + [row["rank"][m] for m in methods])
    return 0


def run_self_check() -> int:
    """Small oracle cross-check; returns a process exit code."""
    from .generating import KLGenerator, PowerGenerator, ShannonGenerator
    from .oracles import oracle_beta, oracle_prox
    from .prox import ProxQuery, prox_beta

    rng = np.random.default_rng(0)
    gens = [PowerGenerator(p=2.0, gamma=1.5, lambda0=0.5),
            PowerGenerator(p=1.5, gamma=0.9, lambda0=0.5),
            ShannonGenerator(gamma=1.1, lambda0=0.4),
            KLGenerator(y=1.0, b=0.1, gamma=0.8, lambda0=0.3)]
    worst_beta, worst_prox = 0.0, 0.0
    for g in gens:
        for _ in range(25):
            x = float(rng.uniform(0.0 if g.alpha_minus == 0 else -2.0, 2.0))
            worst_beta = max(worst_beta, abs(float(np.asarray(g.beta(x))) - oracle_beta(g, x)))
            rho = float(rng.uniform(0.05, 5.0))
            u = prox_beta(ProxQuery(g, rho, x)).u
            uo = oracle_prox(g, rho, x)
            phi = lambda v: float(np.asarray(g.beta(v))) + (v - x) ** 2 / (2 * rho)
            worst_prox = max(worst_prox, phi(u) - phi(uo))
    ok = worst_beta < 1e-6 and worst_prox < 1e-8
    print(f"self-check: beta gap {worst_beta:.2e}, prox gap {worst_prox:.2e} -> "
          f"{'ok' if ok else 'FAIL'}")
    return 0 if ok else 1


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brexopt",
                                     description="Sparse optimization via exact "
                                                 "continuous relaxations")
    parser.add_argument("--self-check", action="store_true",
                        help="run the built-in oracle cross-check and exit")
    sub = parser.add_subparsers(dest="command")

    ps = sub.add_parser("solve", help="run proximal gradient descent on a problem file")
    ps.add_argument("problem")
    ps.add_argument("--penalty", choices=["l0", "brex"], default="brex")
    ps.add_argument("--psi", default="power:2")
    ps.add_argument("--gamma", default="thr")
    ps.add_argument("--step", default="backtrack")
    ps.add_argument("--max-iter", type=int, default=5000)
    ps.add_argument("--tol", type=float, default=1e-6)
    ps.add_argument("--x0", default=None)
    ps.add_argument("--out", default=None)
    ps.add_argument("--trace", default=None)
    ps.set_defaults(func=cmd_solve)

    pc = sub.add_parser("calibrate", help="compute curvature thresholds")
    pc.add_argument("problem")
    pc.add_argument("--psi", default="power:2")
    pc.add_argument("--gamma", default="thr")
    pc.add_argument("--out", default=None)
    pc.set_defaults(func=cmd_calibrate)

    pe = sub.add_parser("enumerate", help="exhaustively list local minimizers (small N)")
    pe.add_argument("problem")
    pe.add_argument("--max-support", type=int, default=20)
    pe.add_argument("--out", default=None)
    pe.set_defaults(func=cmd_enumerate)

    pl = sub.add_parser("landscape", help="dense objective grid for 1D/2D problems")
    pl.add_argument("problem")
    pl.add_argument("--psi", default="power:2")
    pl.add_argument("--gamma", default="thr")
    pl.add_argument("--lo", type=float, default=None)
    pl.add_argument("--hi", type=float, default=None)
    pl.add_argument("--points", type=int, default=201)
    pl.add_argument("--out", required=True)
    pl.add_argument("--minimizers", default=None)
    pl.set_defaults(func=cmd_landscape)

    pg = sub.add_parser("gen", help="generate a synthetic problem file")
    pg.add_argument("--kind", choices=["ls", "lr", "kl"], required=True)
    pg.add_argument("--m", type=int, required=True)
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--k", type=int, required=True)
    pg.add_argument("--eta", type=float, default=0.0)
    pg.add_argument("--tau", type=float, default=8.0)
    pg.add_argument("--s", type=float, default=0.5)
    pg.add_argument("--alpha", type=float, default=50.0)
    pg.add_argument("--b", type=float, default=0.1)
    pg.add_argument("--seed", type=int, default=0)
    pg.add_argument("--lambda0-scale", type=float, default=4e-3)
    pg.add_argument("--lambda2", type=float, default=0.0)
    pg.add_argument("--truth", default=None)
    pg.add_argument("--out", required=True)
    pg.set_defaults(func=cmd_gen)

    pb = sub.add_parser("benchmark", help="seeded multi-method ranking harness")
    pb.add_argument("--kind", choices=["ls", "lr", "kl"], required=True)
    pb.add_argument("--m", type=int, required=True)
    pb.add_argument("--n", type=int, required=True)
    pb.add_argument("--k", type=int, required=True)
    pb.add_argument("--eta", type=float, default=0.0)
    pb.add_argument("--tau", type=float, default=8.0)
    pb.add_argument("--s", type=float, default=0.5)
    pb.add_argument("--alpha", type=float, default=50.0)
    pb.add_argument("--b", type=float, default=0.1)
    pb.add_argument("--seed", type=int, default=0)
    pb.add_argument("--lambda0-scale", type=float, default=4e-3)
    pb.add_argument("--lambda2", type=float, default=0.0)
    pb.add_argument("--instances", type=int, default=20)
    pb.add_argument("--methods", default="l0,power:2")
    pb.add_argument("--max-iter", type=int, default=5000)
    pb.add_argument("--tol", type=float, default=1e-6)
    pb.add_argument("--csv", default=None)
    pb.add_argument("--out", default=None)
    pb.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.self_check:
        return run_self_check()
    if not getattr(args, "command", None):
        parser.print_help()
        return 0
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (CalibrationError, ConvergenceError) as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except EnumerationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
