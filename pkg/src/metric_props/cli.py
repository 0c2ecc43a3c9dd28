"""Command-line entry point: ``metric-props <command> ...``.

Exit codes: 0 success / property holds, 1 property violated, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import arcs, constructions, search
from .core import FiniteMetricSpace, load_space, save_space
from .embeddings import distortion_summary, load_map
from .errors import MetricPropsError, OracleMismatchError
from .properties import check

EXIT_OK, EXIT_VIOLATED, EXIT_INPUT = 0, 1, 2

_PROPERTY = {"ultrametric": ("ultrametric", 0), "gp": ("de_groot", None), "np": ("nagata", None)}


class InputError(Exception):
    pass


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, sort_keys=True, default=_jsonable))
    else:
        print(human)


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serializable: {type(obj).__name__}")


# --- check -----------------------------------------------------------------------------

def cmd_check(args) -> int:
    space = load_space(args.space)
    kind, n = _PROPERTY[args.property]
    n = args.n if n is None else n
    report = check(space, kind, n, args.strategy)
    if report.holds:
        human = f"{kind}[{n}] holds on {space.size} points ({report.tuples_examined} tuples examined)"
    else:
        human = f"{kind}[{n}] violated\n" + report.witness.describe(space)
    _emit(args, report.to_dict(), human)
    return EXIT_OK if report.holds else EXIT_VIOLATED


# --- construct ---------------------------------------------------------------------------

def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"{args.name} needs {', '.join(missing)}")


def _construct(args) -> FiniteMetricSpace:
    name = args.name
    if name == "euclidean":
        _need(args, "a", "b", "m")
        return constructions.euclidean_interval(args.a, args.b, args.m)
    if name == "two-point":
        _need(args, "a")
        return constructions.two_point_space(args.a)
    if name == "equilateral-centroid":
        return constructions.equilateral_with_centroid(1.0 if args.side is None else args.side)
    if name == "triode-rho":
        _need(args, "m")
        return constructions.triode_rho(args.m)
    if name == "triode-path":
        _need(args, "m")
        return constructions.triode_path(args.m)
    if name == "i-space":
        _need(args, "a", "m")
        return constructions.i_space(args.a, args.m)
    if name == "random-ultrametric":
        _need(args, "m", "seed")
        return constructions.random_ultrametric(args.m, args.seed)
    if name == "random-metric":
        _need(args, "m", "seed")
        return constructions.random_metric(args.m, args.seed)
    if name == "lm-sample":
        _need(args, "m", "seed", "levels", "group_order")
        return constructions.lm_sample(args.group_order, args.levels, args.m, args.seed)
    raise InputError(f"unknown constructor {name!r}")


def cmd_construct(args) -> int:
    space = _construct(args)
    save_space(space, args.out)
    _emit(args, {"file": str(args.out), "size": space.size, "diameter": space.diameter},
          f"wrote {args.out}: {space.size} points, diameter {space.diameter:.12g}")
    return EXIT_OK


# --- distort -----------------------------------------------------------------------------

def cmd_distort(args) -> int:
    domain, codomain = load_space(args.domain), load_space(args.codomain)
    f = load_map(args.map, domain, codomain)
    s = distortion_summary(f)
    lines = [f"lipschitz          {s['lipschitz']}",
             f"inverse lipschitz  {s['inverse_lipschitz']}",
             f"distortion         {s['distortion']!r}",
             f"similarity         {s['similarity']}"]
    if s["argmax_pair"] is not None:
        i, j = s["argmax_pair"]
        lines.append(f"most stretched     ({domain.label(i)}, {domain.label(j)})")
        i, j = s["argmin_pair"]
        lines.append(f"most compressed    ({domain.label(i)}, {domain.label(j)})")
    _emit(args, s, "\n".join(lines))
    return EXIT_OK


# --- arc ----------------------------------------------------------------------------------

def load_arc(path, host: FiniteMetricSpace) -> arcs.ArcSample:
    """Arc file: a JSON list of host indices, or ``{"order": [...], "params": [...]}``."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if isinstance(obj, list):
        return arcs.ArcSample.from_order(host, obj)
    if not isinstance(obj, dict) or "order" not in obj:
        raise InputError(f'{path}: expected a list or an object with "order"')
    return arcs.ArcSample.from_order(host, obj["order"], obj.get("params"))


def _arc_obtuse(args, host, arc):
    rep = arcs.check_obtuse(arc)
    human = "obtuse" if rep.holds else f"not obtuse: condition {rep.condition} fails on subarc {rep.subarc}"
    return rep.holds, rep.to_dict(), human


def _arc_slice(args, host, arc):
    if args.x is not None:
        reports = [arcs.slice_analysis(host, arc, args.x, args.mode)]
    else:
        reports = arcs.slice_batch(host, arc, args.mode)
    ok = all(r.conclusion_holds for r in reports)
    expansion = arcs.retraction_expansion(host, [r for r in reports if r.asserted])
    if args.mode == "gp1-interval" and expansion > 1e-9 * max(1.0, host.diameter):
        ok = False
    payload = {"reports": [r.to_dict() for r in reports], "retraction_expansion": expansion, "holds": ok}
    worst = max((r.formula_residual or 0.0 for r in reports), default=0.0)
    human = (f"{len(reports)} points analysed, {sum(r.asserted for r in reports)} asserted, "
             f"max formula residual {worst:.3g}, retraction expansion {expansion:.3g}, "
             f"{'all conclusions hold' if ok else 'conclusions FAIL'}")
    return ok, payload, human


def _arc_separation(args, host, arc):
    if args.x is not None and args.y is not None:
        pairs = [(args.x, args.y)]
    else:
        V = np.setdiff1d(np.flatnonzero(arcs.neighbourhood(host, arc, args.mode)), arc.order)
        level, _ = arcs.levels(host, arc)
        tol = 1e-9 * max(1.0, host.diameter)
        pairs = [(int(a), int(b)) for i, a in enumerate(V) for b in V[i + 1:]
                 if abs(level[a] - level[b]) > tol]
    reports = [arcs.separation_check(host, arc, x, y, args.mode) for x, y in pairs]
    ok = all(r.holds for r in reports)
    failing = [r for r in reports if not r.holds]
    human = f"{len(reports)} pairs checked, {len(failing)} fail"
    for r in failing[:10]:
        human += f"\n  ({host.label(r.x)}, {host.label(r.y)}) d={r.distance:.12g} levels {r.level_x:.12g}, {r.level_y:.12g}"
        if r.quadruple is not None:
            human += "\n    " + r.quadruple.describe(host).replace("\n", "\n    ")
    return ok, {"holds": ok, "reports": [r.to_dict() for r in reports]}, human


def _arc_openness(args, host, arc):
    rep = arcs.openness_probe(host, arc, args.eps, args.mode)
    human = f"locally flat (V has {rep.v_size} points)" if rep.locally_flat else \
        f"{len(rep.offenders)} offending edges: " + ", ".join(
            f"({host.label(u)}, {host.label(v)})" for u, v in rep.offenders[:10])
    if not rep.precondition_ok:
        human += "\nnote: arc precondition for this mode fails; nothing is asserted"
    return rep.locally_flat, rep.to_dict(), human


def cmd_arc(args) -> int:
    host = load_space(args.host)
    arc = load_arc(args.arc, host)
    run = {"obtuse": _arc_obtuse, "slice": _arc_slice,
           "separation": _arc_separation, "openness": _arc_openness}[args.analysis]
    ok, payload, human = run(args, host, arc)
    _emit(args, payload, human)
    return EXIT_OK if ok else EXIT_VIOLATED


# --- experiment -----------------------------------------------------------------------------

def _write_results(out: Path, results) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for r in results:
        (out / f"result_seed{r.seed}.json").write_text(
            json.dumps(r.to_dict(), sort_keys=True) + "\n", encoding="utf-8")
        (out / f"trace_seed{r.seed}.csv").write_text(r.trace_csv(), encoding="utf-8")
        save_space(r.best, out / f"best_seed{r.seed}.json")


def _anneal(args, problem) -> int:
    config = search.AnnealConfig(seed=args.seed, steps=args.steps, move_size=args.move_size)
    seeds = [args.seed + k for k in range(args.chains)]
    best, results = search.anneal_many(problem, config, seeds, args.threads)
    out = Path(args.out)
    _write_results(out, results)
    summary = {"best": best.to_dict(), "chains": [r.to_dict() for r in results],
               "min_violations": min(r.violations for r in results), "exploratory": True}
    (out / "summary.json").write_text(json.dumps(summary, sort_keys=True) + "\n", encoding="utf-8")
    lines = [f"seed {r.seed}: {r.status}, violations {r.violations}, objective {r.objective:.6g}, "
             f"steps {r.steps}, distortion {r.achieved_distortion:.6g}" for r in results]
    lines.append("exploratory run: a finite search neither proves nor refutes feasibility")
    if best.reference:
        lines.append(f"see {best.reference}")
    _emit(args, summary, "\n".join(lines))
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.experiment == "separation":
        rep = search.separation_experiment(args.a, args.b, args.eps, args.m, args.seed)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "separation.json").write_text(json.dumps(rep.to_dict(), sort_keys=True) + "\n",
                                             encoding="utf-8")
        save_space(rep.host, out / "separation_host.json")
        human = (f"gp1_holds {rep.gp1_holds}, sup distance {rep.sup_distance:.12g}, "
                 f"copies isometric {rep.copies_isometric}")
        if rep.witness is not None:
            human += "\n" + rep.witness.describe(rep.host)
        if not rep.assertion_applicable:
            human += "\ninformational: eps is outside the range where failure is predicted"
        _emit(args, rep.to_dict(), human)
        return EXIT_OK
    if args.experiment == "triode-extension":
        problem = search.triode_extension_problem(args.arm_points, args.delta, args.init)
    else:
        problem = search.load_problem(args.problem)
    return _anneal(args, problem)


# --- parser ------------------------------------------------------------------------------------

def _fraction(text: str) -> float:
    """Accept ``0.25`` as well as ``1/4``."""
    try:
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metric-props", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                        help="worker processes for parallel work (default: available cores)")

    c = sub.add_parser("check", help="test ultrametric / GP[n] / NP[n]")
    c.add_argument("space")
    c.add_argument("property", choices=sorted(_PROPERTY))
    c.add_argument("n", type=int, nargs="?", default=1)
    c.add_argument("--strategy", choices=["fast", "brute", "both"], default="fast")
    common(c)
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("construct", help="write a built-in space to a file")
    k.add_argument("name", choices=["euclidean", "two-point", "equilateral-centroid", "triode-rho",
                                    "triode-path", "i-space", "random-ultrametric", "random-metric",
                                    "lm-sample"])
    k.add_argument("--a", type=_fraction)
    k.add_argument("--b", type=_fraction)
    k.add_argument("--m", type=int)
    k.add_argument("--side", type=float)
    k.add_argument("--seed", type=int)
    k.add_argument("--levels", type=float, nargs="+")
    k.add_argument("--group-order", type=int)
    k.add_argument("--out", required=True)
    common(k)
    k.set_defaults(func=cmd_construct)

    d = sub.add_parser("distort", help="Lipschitz constants and distortion of a map")
    d.add_argument("domain")
    d.add_argument("codomain")
    d.add_argument("map")
    common(d)
    d.set_defaults(func=cmd_distort)

    a = sub.add_parser("arc", help="arc analyses")
    a.add_argument("host")
    a.add_argument("arc", help="JSON list of host indices or {order, params}")
    a.add_argument("analysis", choices=["obtuse", "slice", "separation", "openness"])
    a.add_argument("--mode", choices=list(arcs.MODES), default="gp1-interval")
    a.add_argument("--x", type=int)
    a.add_argument("--y", type=int)
    a.add_argument("--eps", type=float)
    common(a)
    a.set_defaults(func=cmd_arc)

    e = sub.add_parser("experiment", help="annealing and separation experiments")
    esub = e.add_subparsers(dest="experiment", required=True)
    for name in ("triode-extension", "problem"):
        sp = esub.add_parser(name)
        if name == "problem":
            sp.add_argument("problem", help="problem JSON file")
        else:
            sp.add_argument("--arm-points", type=int, default=5)
            sp.add_argument("--delta", type=float, help="distortion bound on the base")
            sp.add_argument("--init", choices=["path", "rho"], default="path")
        sp.add_argument("--seed", type=int, required=True)
        sp.add_argument("--chains", type=int, default=1, help="seeds seed, seed+1, ...")
        sp.add_argument("--steps", type=int, default=10_000)
        sp.add_argument("--move-size", type=float, default=0.1)
        sp.add_argument("--out", default="experiment_out")
        common(sp)
        sp.set_defaults(func=cmd_experiment)
    sp = esub.add_parser("separation")
    sp.add_argument("--a", type=_fraction, required=True)
    sp.add_argument("--b", type=_fraction, required=True)
    sp.add_argument("--eps", type=_fraction, required=True)
    sp.add_argument("--m", type=int, default=33)
    sp.add_argument("--seed", type=int, help="randomise cross links in [eps/2, eps]")
    sp.add_argument("--out", default="experiment_out")
    common(sp)
    sp.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except OracleMismatchError:
        raise
    except (MetricPropsError, InputError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
