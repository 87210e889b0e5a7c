"""Command line front end.

Commands: ``validate``, ``sandwich``, ``simulate``, ``rates`` and ``report``.
Output files go to ``--out``, else to ``$INCLUSION_META_OUT``, else to the
current directory.  Exit status: 0 success, 1 I/O or parse error,
2 validation error, 3 numerical failure.
"""

import argparse
import csv
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from .analysis import (
    h1_ratio,
    level3_partition,
    limit_generator,
    marginal_check,
    mean_rate_via_capacities,
)
from .errors import InclusionError, ModelParseError, StateSpaceTooLarge
from .io import load_model, parse_schedule
from .model import InclusionModel, count_configurations, validate_model, DEFAULT_STATE_CAP
from .potential import InclusionChain, exact_mean_hitting
from .simulate import (
    hitting_time_samples,
    occupation_fraction,
    summary_json,
    thermalization_exact,
    thermalization_probability,
)
from .variational import capacity_sandwich, resistance_set

OUT_ENV = "INCLUSION_META_OUT"


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma separated list of integers: {text!r}")
    if not vals or any(v < 1 for v in vals) or any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("N list must be nonempty, positive and increasing")
    return vals


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser():
    p = argparse.ArgumentParser(prog="inclusion-meta", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="model file (YAML or JSON)")
    common.add_argument("--N", type=_int_list, default=[16], help="particle counts, e.g. 16,32,64")
    common.add_argument("--dN", default="N^-2", help="diffusion rule: 0.05, N^-2 or c*N^-a")
    common.add_argument("--partition", default=None,
                        help="sites on the first side, comma separated (default: first component)")
    common.add_argument("--seed", type=int, default=12345)
    common.add_argument("--replicas", type=_positive_int, default=200)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--tolerance", type=float, default=1e-9,
                        help="relative slack for bracket ordering checks")
    for name, text in (("validate", "check detailed balance and irreducibility"),
                       ("sandwich", "capacity bracket over the N sweep"),
                       ("simulate", "Monte Carlo hitting, thermalization and occupation"),
                       ("rates", "mean jump rates between components"),
                       ("report", "consolidated exact and Monte Carlo report")):
        sub.add_parser(name, parents=[common], help=text)
    return p


def _out_dir(args):
    out = args.out or os.environ.get(OUT_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _partition(graph, text):
    if text is None:
        return (0,)
    comps = set()
    for s in text.split(","):
        s = s.strip()
        if not s:
            continue
        try:
            x = graph.index(s)
        except KeyError:
            raise ModelParseError(f"unknown site {s!r}", key="--partition") from None
        c = graph.component_of(x)
        if c < 0:
            raise ModelParseError(f"site {s!r} is not metastable", key="--partition")
        comps.add(c)
    if not comps:
        raise ModelParseError("empty partition", key="--partition")
    return tuple(sorted(comps))


def _load(args):
    mf = load_model(args.model)
    validate_model(mf.graph, strict=True)
    sched = parse_schedule(args.dN)
    return mf, sched


def _model(mf, sched, N):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return InclusionModel(mf.graph, N, sched(N), schedule_tag=sched.text)


def _plan(args):
    return {"command": args.command, "model": os.path.basename(args.model), "N": args.N,
            "dN": args.dN, "partition": args.partition, "seed": args.seed,
            "replicas": args.replicas, "tolerance": args.tolerance}


def _write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def cmd_validate(args, out):
    mf = load_model(args.model)
    rep = validate_model(mf.graph, strict=False)
    payload = {"model": mf.name, "ok": rep.ok, **rep.as_dict()}
    text = summary_json(payload)
    _write(os.path.join(out, "validate.json"), text)
    sys.stdout.write(text)
    return 0 if rep.ok else 2


SANDWICH_FIELDS = ["N", "d_N", "cap", "lower", "upper", "target", "cap_norm", "lower_norm",
                   "upper_norm", "ordered", "seconds", "note"]


def cmd_sandwich(args, out):
    mf, sched = _load(args)
    sched.check(args.N)
    A = _partition(mf.graph, args.partition)
    path = os.path.join(out, "sandwich.csv")
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    status = 0
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=SANDWICH_FIELDS)
        if fresh:
            w.writeheader()
        for N in args.N:
            t0 = time.perf_counter()
            count = count_configurations(mf.graph.n_sites, N)
            if count > DEFAULT_STATE_CAP:
                row = {"N": N, "d_N": sched(N), "note": f"skipped: {StateSpaceTooLarge(count, DEFAULT_STATE_CAP)}"}
                w.writerow(row)
                print(f"N={N}: skipped ({count} configurations)")
                continue
            chain = InclusionChain(_model(mf, sched, N))
            rep = capacity_sandwich(chain, A)
            ordered = rep.ordered(args.tolerance)
            status = status or (0 if ordered else 3)
            row = rep.as_row()
            row.update(ordered=ordered, seconds=round(time.perf_counter() - t0, 3))
            w.writerow(row)
            n = rep.normalized
            print(f"N={N} d={rep.d:.3e} cap*N/d^2={n['cap']:.6f} "
                  f"[{n['lower']:.6f}, {n['upper']:.6f}] target={rep.target:.6f} "
                  f"{'ok' if ordered else 'ORDER VIOLATED'}")
    return status


def _hitting_block(model, chain, seed, replicas):
    graph = model.graph
    start = graph.level2_components[0][0]
    target = [x for x in graph.s_star if graph.component_of(x) != 0]
    if not target:
        return None
    s = hitting_time_samples(model, start, target, replicas, seed)
    exact = exact_mean_hitting(chain, chain.valley(start), chain.valleys(target))
    z = (s.mean - exact) / s.stderr if s.stderr and s.stderr > 0 else math.nan
    return {"start": graph.sites[start], "target": [graph.sites[x] for x in target],
            **s.as_dict(), "exact": exact, "z_score": z, "mean_over_theta2": s.mean / model.theta2}


def cmd_simulate(args, out):
    mf, sched = _load(args)
    graph = mf.graph
    runs = []
    for N in args.N:
        model = _model(mf, sched, N)
        chain = InclusionChain(model)
        entry = {"N": N, "d_N": model.d, "theta2": model.theta2,
                 "hitting": _hitting_block(model, chain, args.seed, args.replicas)}
        thermal = {}
        for i, comp in enumerate(graph.level2_components):
            if len(comp) < 2:
                continue
            mc = thermalization_probability(model, i, args.replicas, args.seed)
            ex = thermalization_exact(chain, i)
            d = mc.as_dict(graph.sites)
            d["exact"] = {f"{graph.sites[a]}->{graph.sites[b]}": v for (a, b), v in ex.items()}
            thermal[str(i)] = d
        entry["thermalization"] = thermal
        occ = occupation_fraction(model, graph.s_star[0], model.theta2, args.replicas, args.seed)
        entry["outside_fraction"] = {**occ.as_dict(), "horizon": model.theta2}
        runs.append(entry)
    text = summary_json({"plan": _plan(args), "runs": runs})
    _write(os.path.join(out, "simulate.json"), text)
    sys.stdout.write(text)
    return 0


def _rates_payload(mf, sched, Ns):
    graph = mf.graph
    res = resistance_set(graph)
    lim = limit_generator(graph, "second", res)
    rows = []
    for N in Ns:
        chain = InclusionChain(_model(mf, sched, N))
        rep = mean_rate_via_capacities(chain)
        rep.h1_ratios = {i: h1_ratio(chain, i) for i in range(graph.kappa_star)}
        rows.append({"N": N, "d_N": chain.model.d, **rep.as_dict(),
                     "relative_error": rep.relative_error().tolist()})
    return {
        "components": [[graph.sites[x] for x in c] for c in graph.level2_components],
        "resistance": [[None if not math.isfinite(v) else v for v in row]
                       for row in res.r_continuum.tolist()],
        "limit_rate": lim.rate.tolist(),
        "level3_partition": [list(b) for b in level3_partition(lim)],
        "sweep": rows,
    }


def cmd_rates(args, out):
    mf, sched = _load(args)
    if mf.graph.kappa_star < 2:
        payload = {"plan": _plan(args), "message": "no second scale needed: a single metastable component"}
    else:
        payload = {"plan": _plan(args), **_rates_payload(mf, sched, args.N)}
    text = summary_json(payload)
    _write(os.path.join(out, "rates.json"), text)
    sys.stdout.write(text)
    return 0


def cmd_report(args, out):
    mf, sched = _load(args)
    graph = mf.graph
    payload = {"plan": _plan(args), "model": mf.name, "validation": validate_model(graph).as_dict()}
    first = limit_generator(graph, "first")
    payload["first_scale"] = {"states": list(first.states), "rate": first.rate.tolist()}
    if graph.kappa_star < 2:
        payload["message"] = "no second scale needed: a single metastable component"
    else:
        payload.update(_rates_payload(mf, sched, args.N))
        flags = []
        checks = []
        for N in args.N:
            model = _model(mf, sched, N)
            start = graph.level2_components[0][0]
            mc = marginal_check(model, start, [0.0, 0.1, 0.25, 0.5], args.replicas, args.seed)
            emp, lim, se = (np.array(mc[k]) for k in ("empirical", "limit", "stderr"))
            bad = np.argwhere(np.abs(emp - lim) > 3 * se)
            for t_i, c in bad:
                flags.append({"N": N, "time": mc["times"][t_i], "component": int(c),
                              "empirical": float(emp[t_i, c]), "limit": float(lim[t_i, c])})
            checks.append({"N": N, **mc})
        payload["marginal_check"] = checks
        payload["discrepancies_beyond_3_sigma"] = flags
    text = summary_json(payload)
    _write(os.path.join(out, "report.json"), text)
    sys.stdout.write(text)
    return 0


COMMANDS = {"validate": cmd_validate, "sandwich": cmd_sandwich, "simulate": cmd_simulate,
            "rates": cmd_rates, "report": cmd_report}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        out = _out_dir(args)
        return COMMANDS[args.command](args, out)
    except InclusionError as exc:
        payload = exc.as_dict() if hasattr(exc, "as_dict") else {"error": type(exc).__name__,
                                                                 "message": str(exc)}
        sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"I/O error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
