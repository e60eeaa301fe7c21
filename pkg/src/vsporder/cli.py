"""Command-line interface: simulate, fit, summarize, compare, count-le, check-vsp."""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, export
from .config import RunConfig, load_config
from .counting import count_le_value
from .data import Actor, dataset_hash, filter_lpa, parse_dataset, write_dataset
from .errors import ConfigError, InterruptedRun, NotVsp, ParseError, VspError
from .mcmc import run_chain
from .observation import simulate_dataset
from .poset import PartialOrder, enumerate_linear_extensions, find_forbidden, transitive_closure
from .prior import Dist
from .traceio import TraceWriter, read_trace
from .trees import Mdt, sample_bdt_prior, vsp_to_mdt

BRUTE_FORCE_LIMIT = 10


def _write_atomic(path, text: str) -> None:
    """Write via ``<path>.partial`` and rename once complete."""
    path = Path(path)
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    os.replace(tmp, path)


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def _order_from_doc(doc):
    """A partial order ``{"actors": [...], "edges": [[a, b], ...]}`` or a tree (bare or under "tree")."""
    if isinstance(doc, dict) and "edges" in doc:
        actors = doc.get("actors")
        edges = [tuple(e) for e in doc["edges"]]
        if actors is None:
            actors = sorted({a for e in edges for a in e})
        labels = list(actors)
        idx = {a: i for i, a in enumerate(labels)}
        raw = np.zeros((len(labels), len(labels)), dtype=bool)
        for a, b in edges:
            if a not in idx or b not in idx:
                raise ParseError(f"edge ({a}, {b}) names an undeclared actor")
            raw[idx[a], idx[b]] = True
        return transitive_closure(raw, labels)
    if isinstance(doc, dict) and "tree" in doc:
        doc = doc["tree"]
    return Mdt.from_key(Mdt._from_parsed(doc).key())


def cmd_count_le(args) -> int:
    obj = _order_from_doc(_load_json(args.input))
    if isinstance(obj, PartialOrder):
        try:
            obj = vsp_to_mdt(obj)
        except NotVsp:
            if obj.n > BRUTE_FORCE_LIMIT:
                raise NotVsp(f"order on {obj.n} actors is not a VSP and is too large to count by enumeration") from None
            print(len(enumerate_linear_extensions(obj, bound=BRUTE_FORCE_LIMIT)))
            return 0
    print(count_le_value(obj))
    return 0


def cmd_check_vsp(args) -> int:
    obj = _order_from_doc(_load_json(args.input))
    if not isinstance(obj, PartialOrder):
        print("true")
        return 0
    w = find_forbidden(obj)
    if w is None:
        print("true")
    else:
        print("false")
        print("witness: " + json.dumps(list(w)))
    return 0


def cmd_simulate(args) -> int:
    rng = np.random.default_rng(args.seed)
    if args.tree:
        tree = _order_from_doc(_load_json(args.tree))
        if isinstance(tree, PartialOrder):
            tree = vsp_to_mdt(tree)
    else:
        if not args.n:
            raise ConfigError("simulate needs --tree or --n")
        tree = sample_bdt_prior(args.n, args.q, rng)
    actors = sorted(tree.leaf_of)
    length = args.list_length or len(actors)
    if not 1 <= length <= len(actors):
        raise ConfigError(f"--list-length must lie in [1, {len(actors)}]")
    memberships = [rng.choice(actors, size=length, replace=False).tolist() for _ in range(args.lists)]
    ds = simulate_dataset(tree, args.model, args.p, args.phi, memberships, rng, [Actor(a, str(a), "") for a in actors])
    out = Path(args.out)
    tmp = out.with_name(out.name + ".partial")
    write_dataset(ds, tmp)
    os.replace(tmp, out)
    if args.truth:
        _write_atomic(args.truth, json.dumps({"tree": Mdt.from_key(tree.key()).to_nested()}) + "\n")
    return 0


def cmd_fit(args) -> int:
    overrides = {
        "seed": args.seed,
        "model": args.model,
        "parameterization": args.param,
        "iterations": args.iterations,
        "thin": args.thin,
        "burn_in": args.burn_in,
        "lpa": args.lpa,
        "data": args.data,
        "out": args.out,
    }
    cfg = load_config(args.config, overrides) if args.config else RunConfig.from_dict({}, overrides)
    if cfg.data is None:
        raise ConfigError("no dataset given (positional argument or config field data)")
    if cfg.out is None:
        raise ConfigError("no output directory given (--out or config field out)")
    ds = parse_dataset(cfg.data)
    if cfg.lpa:
        ds = filter_lpa(ds, cfg.lpa)
    if cfg.mcmc.seed is None:
        cfg.mcmc.seed = int(np.random.SeedSequence().entropy % (2**63))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.jsonl"
    tmp = out / "trace.jsonl.partial"
    with TraceWriter(tmp) as w:
        try:
            trace = run_chain(ds, cfg.mcmc, cfg.priors, writer=w)
        except InterruptedRun as exc:
            raise InterruptedRun(f"{exc}; samples so far kept in {tmp}", exc.trace) from None
    os.replace(tmp, trace_path)
    manifest = {
        "config": cfg.to_dict(),
        "seed": cfg.mcmc.seed,
        "data_hash": dataset_hash(ds),
        "n_samples": len(trace),
        "acceptance_rates": trace.acceptance_rates(),
    }
    _write_atomic(out / "manifest.json", json.dumps(_clean(manifest), indent=1) + "\n")
    return 0


def _clean(obj):
    """Replace non-finite floats with None so reports are strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def cmd_summarize(args) -> int:
    trace = read_trace(args.trace)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    marg = analysis.edge_marginals(trace)
    cons = analysis.consensus_order(marg, args.eps_weak, args.eps_strong)
    actors = trace.header["actors"]
    groups = {a["id"]: a.get("group", "") for a in actors}
    names = {a["id"]: a.get("name", str(a["id"])) for a in actors}
    key = "group" if any(groups.values()) else "actor"
    grouping = groups if key == "group" else {a: str(a) for a in groups}
    ranks = analysis.average_rank(trace, grouping)
    depth = analysis.depth_posterior(trace)
    _write_atomic(out / "marginals.csv", export.marginals_csv(marg))
    _write_atomic(out / "consensus.dot", export.export_dot(cons, groups, names))
    _write_atomic(out / "ranks.csv", export.rank_table_csv(ranks))
    _write_atomic(out / "depth.csv", export.depth_csv(depth))
    summary = {
        "n_samples": len(trace),
        "eps_weak": args.eps_weak,
        "eps_strong": args.eps_strong,
        "weak_edges": sorted([list(e) for e in cons.weak]),
        "strong_edges": sorted([list(e) for e in cons.strong]),
        "acceptance_rates": trace.acceptance_rates(),
    }
    _write_atomic(out / "summary.json", json.dumps(_clean(summary), indent=1) + "\n")
    return 0


def cmd_compare(args) -> int:
    report = {"traces": []}
    for path in args.traces:
        trace = read_trace(path)
        w = analysis.waic_elpd(trace.pointwise())
        entry = {
            "path": str(path),
            "model": trace.model,
            "parameterization": trace.header.get("parameterization"),
            "n_samples": len(trace),
            "elpd_waic": w.elpd,
            "se": w.se,
            "p_waic": w.p_waic,
        }
        if trace.model == "qjb":
            prior = Dist.from_dict(trace.header["hyperprior"]["phi_prior"])
            phi = trace.values("phi")
            entry["savage_dickey"] = analysis.savage_dickey_bf(phi, prior, args.delta).to_dict()
            entry["delta_sensitivity"] = {
                str(d): analysis.savage_dickey_bf(phi, prior, d).to_dict() for d in (0.01, 0.02, 0.05)
            }
        report["traces"].append(entry)
    text = json.dumps(_clean(report), indent=1) + "\n"
    if args.out:
        _write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vsporder", description="Bayesian inference of series-parallel orders from rank lists.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count-le", help="count linear extensions of a tree or partial order")
    p.add_argument("input")
    p.set_defaults(func=cmd_count_le)

    p = sub.add_parser("check-vsp", help="test a partial order for the series-parallel property")
    p.add_argument("input")
    p.set_defaults(func=cmd_check_vsp)

    p = sub.add_parser("simulate", help="simulate a dataset of rank lists")
    p.add_argument("--tree", help="tree or partial-order JSON; omit to draw one from the prior")
    p.add_argument("--n", type=int, help="number of actors when drawing the tree")
    p.add_argument("--q", type=float, default=0.5)
    p.add_argument("--model", default="qj-u", choices=["qj-u", "qj-d", "qj-b"])
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--phi", type=float, default=0.5)
    p.add_argument("--lists", type=int, default=50)
    p.add_argument("--list-length", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--truth", help="also write the generating tree here")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="run the MCMC sampler")
    p.add_argument("data", nargs="?")
    p.add_argument("--config")
    p.add_argument("--seed", type=int)
    p.add_argument("--model", choices=["qj-u", "qj-d", "qj-b"])
    p.add_argument("--param", choices=["bdt", "mdt"])
    p.add_argument("--iterations", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--lpa", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("summarize", help="marginals, consensus, ranks and depth from a trace")
    p.add_argument("trace")
    p.add_argument("--out", required=True)
    p.add_argument("--eps-weak", type=float, default=0.5)
    p.add_argument("--eps-strong", type=float, default=0.9)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("compare", help="WAIC and boundary Bayes factors across traces")
    p.add_argument("traces", nargs="+")
    p.add_argument("--delta", type=float, default=0.02)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VspError, OSError, ValueError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
