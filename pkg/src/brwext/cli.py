"""Command-line interface.

Exit status: 0 on success, 2 when a result is unresolved (non-converged
bracket, overlapping brackets, inconclusive bisection or failed projection
check), 1 on errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .critical import bisect_local_survival, closed_form
from .core import FiniteModel
from .errors import InvalidLaw, PreconditionError, ReducibleModel, TruncationIncomplete
from .geometry import CombGraph, TreeGraph
from .model import build_model, read_model_doc
from .montecarlo import RNG_NAME, SimConfig, estimate_extinction, estimate_no_hit, trajectories_csv
from .projection import (check_projection, check_q_transport, comb_prime_to_comb, comb_to_singleton,
                         fiber_law_tv, gadget_to_tooth, tree_to_comb)
from .sets import Full, parse_set
from .solver import compute_q, compute_q0

EXIT_OK, EXIT_ERROR, EXIT_UNRESOLVED = 0, 1, 2


def _ints(text):
    return tuple(int(t) for t in text.split(",") if t.strip())


def _emit(args, stem, payload: dict, table: str | None = None):
    """Write ``table`` (CSV) and/or ``payload`` (JSON) to ``--out`` or stdout."""
    text_json = json.dumps(payload, indent=2, sort_keys=True, default=str)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.format == "csv" and table is not None:
            (out / f"{stem}.csv").write_text(table)
            (out / f"{stem}.meta.json").write_text(text_json + "\n")
        else:
            (out / f"{stem}.json").write_text(text_json + "\n")
    elif args.format == "csv" and table is not None:
        sys.stdout.write(table)
    else:
        sys.stdout.write(text_json + "\n")


def _load(args):
    if not args.model:
        doc = {"family": "tree", "m": 3, "lambda": 0.35}
    else:
        doc = read_model_doc(args.model)
    if getattr(args, "lam", None) is not None:
        doc = dict(doc, **{"lambda": args.lam})
    return build_model(doc), doc


def cmd_solve(args):
    graph, doc = _load(args)
    target = parse_set(graph, args.set) if not isinstance(graph, FiniteModel) else _finite_set(graph, args.set)
    fn = compute_q0 if args.quantity == "q0" else compute_q
    br = fn(graph, target, args.radius, scheme=args.scheme)
    if isinstance(graph, FiniteModel):
        watch = list(graph.vertices)
        fmt = str
    else:
        watch = [graph.parse_vertex(w) for w in args.watch.split(",")] if args.watch else [graph.root]
        fmt = graph.format_vertex
    rec = br.record(watch, fmt)
    rec.update({"quantity": args.quantity, "scheme": args.scheme, "model": doc})
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ex.CSV_COLUMNS)
    for item in rec["watch"]:
        w.writerow([br.set_name, item["vertex"], br.radius, repr(item["lower"]), repr(item["upper"]),
                    repr(item["width"]), int(br.converged)])
    _emit(args, "solve", rec, buf.getvalue())
    return EXIT_OK if br.converged else EXIT_UNRESOLVED


def _finite_set(model, text):
    from .sets import Explicit

    if text in ("X", "full"):
        return Full()
    return Explicit(text.split(";"), name=f"{{{text}}}")


def cmd_simulate(args):
    graph, doc = _load(args)
    cfg = SimConfig(seed=args.seed, trials=args.trials, max_generations=args.max_generations,
                    particle_cap=args.particle_cap)
    x0 = graph.vertices[0] if isinstance(graph, FiniteModel) else graph.root
    records = []
    if args.set:
        target = parse_set(graph, args.set) if not isinstance(graph, FiniteModel) else _finite_set(graph, args.set)
        est = estimate_no_hit(x0, target, args.horizon, graph, cfg, records)
        kind = "no_hit"
    else:
        est = estimate_extinction(x0, graph, cfg, records)
        kind = "extinction"
    payload = {"estimate": kind, "result": est.to_json(), "model": doc, "seed": args.seed,
               "trials": args.trials, "horizon": args.horizon, "rng": RNG_NAME}
    _emit(args, "simulate", payload, trajectories_csv(records))
    return EXIT_OK


def cmd_critical(args):
    _, doc = _load(args)
    family = doc["family"]
    param = doc.get("m", 3) if family.startswith("tree") else doc.get("alpha", 1)
    pair = closed_form("tree" if family.startswith("tree") else family, param)
    payload = pair.to_json()
    status = EXIT_OK
    if args.bisect:
        graph = build_model(doc)
        est = bisect_local_survival(graph, args.lo, args.hi, args.radius, args.tol)
        payload["bisection"] = est.to_json()
        payload["interval"] = list(est.interval)
        if est.lambda_s is None:
            status = EXIT_UNRESOLVED
    _emit(args, "critical", payload)
    return status


def cmd_project_check(args):
    graph, doc = _load(args)
    rng = np.random.default_rng(args.seed)
    reports = []
    if isinstance(graph, TreeGraph):
        maps = [tree_to_comb(graph)]
    elif isinstance(graph, CombGraph):
        maps = [comb_to_singleton(graph), gadget_to_tooth(graph.alpha, graph.lam, 1),
                comb_prime_to_comb(graph.alpha, graph.lam, 1)]
    else:
        raise PreconditionError("projection checks need a tree or comb model")
    ok = True
    for pmap in maps:
        rep = check_projection(pmap, args.radius)
        if rep.exact_pass and hasattr(pmap.source, "rate_law") and not pmap.name.startswith("comb'"):
            rep.tv_distance = fiber_law_tv(pmap, pmap.source.root, args.samples, rng)
        if rep.exact_pass and pmap.name.startswith(("tree", "comb(")):
            target = parse_set(pmap.target, args.set) if args.set and isinstance(pmap.target, CombGraph) else Full()
            rep.q_transport = check_q_transport(pmap, target, min(args.radius, 40))
            ok &= rep.q_transport["overlap"]
        ok &= rep.exact_pass
        reports.append(rep.to_json())
    _emit(args, "project_check", {"model": doc, "reports": reports})
    return EXIT_OK if ok else EXIT_UNRESOLVED


def cmd_experiment(args):
    name = args.name
    if name not in ex.EXPERIMENTS:
        raise PreconditionError(f"unknown experiment {name!r}; choose from {sorted(ex.EXPERIMENTS)}")
    kw = {}
    lam = args.lam
    if name == "finite_two_points":
        doc = read_model_doc(args.model or "finite_supercritical")
        result = ex.exp_finite_two_points(build_model(doc), starts=args.starts, seed=args.seed,
                                          model_doc=doc)
    else:
        if lam is not None:
            kw["lam"] = lam
        if name == "line_extinction":
            kw["radius"] = args.radius or 40
        else:
            kw["schedule"] = _ints(args.schedule) if args.schedule else (
                (args.radius,) if args.radius else ex.DEFAULT_SCHEDULE)
        if args.n_max is not None and name in ("lemma_countable", "line_extinction", "loop"):
            kw["n_max"] = args.n_max
        if name in ("uncountable", "comb"):
            kw["I1"] = _ints(args.I1)
            kw["I2"] = _ints(args.I2)
        if name == "comb":
            kw["alpha"] = args.alpha
        if name == "loop":
            kw["loop_rate"] = args.loop_rate
        result = ex.EXPERIMENTS[name](**kw)
    _emit(args, name, result.to_json(), result.csv())
    return EXIT_UNRESOLVED if result.unresolved else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="brwext", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--model", help="model JSON file or shipped model name")
        sp.add_argument("--lambda", dest="lam", type=float, help="override the breeding parameter")
        sp.add_argument("--radius", type=int, default=None)
        sp.add_argument("--out", help="output directory (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--trials", type=int, default=1000)
        sp.add_argument("--format", choices=("csv", "json"), default="json")

    sp = sub.add_parser("solve", help="bracket q(., A) or q_0(., A)")
    common(sp)
    sp.add_argument("--set", default="X", help="target set, e.g. 'T:y1', 'pt:o', 'tx:1,3', 'V:2'")
    sp.add_argument("--quantity", choices=("q", "q0"), default="q")
    sp.add_argument("--scheme", choices=("tail", "clamp"), default="tail")
    sp.add_argument("--watch", help="comma-separated vertices to report (default: root)")
    sp.set_defaults(func=cmd_solve, radius=30)

    sp = sub.add_parser("simulate", help="Monte Carlo extinction or no-hit frequencies")
    common(sp)
    sp.add_argument("--set", help="target set for no-hit estimates")
    sp.add_argument("--horizon", type=int, default=30)
    sp.add_argument("--max-generations", type=int, default=200)
    sp.add_argument("--particle-cap", type=int, default=10_000)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("critical", help="critical parameters")
    common(sp)
    sp.add_argument("--bisect", action="store_true")
    sp.add_argument("--lo", type=float, default=0.30)
    sp.add_argument("--hi", type=float, default=0.45)
    sp.add_argument("--tol", type=float, default=0.02)
    sp.set_defaults(func=cmd_critical, radius=25)

    sp = sub.add_parser("project-check", help="verify the canonical projections")
    common(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--set", help="comb set for the q-transport check")
    sp.set_defaults(func=cmd_project_check, radius=12)

    sp = sub.add_parser("experiment", help="run a named experiment")
    common(sp)
    sp.add_argument("name", help="one of: " + ", ".join(sorted(ex.EXPERIMENTS)))
    sp.add_argument("--schedule", help="comma-separated increasing radii")
    sp.add_argument("--n-max", type=int, default=None)
    sp.add_argument("--I1", default="1")
    sp.add_argument("--I2", default="2")
    sp.add_argument("--alpha", type=int, default=1)
    sp.add_argument("--loop-rate", type=float, default=3.0)
    sp.add_argument("--starts", type=int, default=100)
    sp.set_defaults(func=cmd_experiment, format="csv")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidLaw, PreconditionError, ReducibleModel, TruncationIncomplete, ValueError,
            FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
