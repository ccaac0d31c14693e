"""Command-line front end (``bnclab``)."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import repro
from .branching import (CAPPED, DEVIATION, PERTURBED, PREFER_Y1, SMALLEST_INDEX, STRONG, Node, PolicySpec,
                        choose)
from .cutsel import (BOUND_IMPROVEMENT, CSV_HEADER, EFFICACY, PARALLELISM, CutContext, LambdaMix, root_value,
                     score_pool, select_top_m)
from .engine import TreeRecord, export_dot, run_bnb, tree_from_json
from .instances import (BLOCKS, DEFAULT_ETA, FAMILIES, GADGET, SCALED_BLOCKS, TOY, TRIANGLES, FamilySpec, build)
from .lp import Relaxation
from .model import Instance, ModelError, dumps_instance, instance_from_json, parse_fixings
from .numeric import ext, ext_str
from .oracle import ANY_UNFIXED, FRACTIONAL_ONLY, min_tree_size

POLICIES = {"sb": STRONG, "perturbed-sb": PERTURBED, "capped-sb": CAPPED, "deviation": DEVIATION}
TIEBREAKS = {"smallest": SMALLEST_INDEX, "prefer-y1": PREFER_Y1}
SCORERS = {"efficacy": EFFICACY, "parallelism": PARALLELISM, "bound-improvement": BOUND_IMPROVEMENT,
           "bound_improvement": BOUND_IMPROVEMENT}
SUMMARY_HEADER = ["family", "params", "policy", "cutPool", "treeSize", "bound", "boundSatisfied"]


class UsageError(Exception):
    pass


def rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def int_range(text: str) -> list[int]:
    """``"3"``, ``"1..3"`` or comma lists of either."""
    out: list[int] = []
    try:
        for part in text.split(","):
            if ".." in part:
                lo, hi = part.split("..")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer range: {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("empty range")
    return out


def rational_list(text: str) -> list[Fraction]:
    return [rational(p) for p in text.split(",")]


# ---------------------------------------------------------------------------
# instance and policy assembly

def _one(values, flag):
    if values is None:
        return None
    if len(values) != 1:
        raise UsageError(f"{flag} takes a single value here")
    return values[0]


def family_spec(args) -> FamilySpec:
    fam = args.family
    n, m = _one(args.n, "--n"), _one(args.m, "--m")
    if fam == TOY:
        return FamilySpec(TOY, {"s": args.s if args.s is not None else Fraction(3, 2)})
    if fam == GADGET:
        if m is None:
            raise UsageError("gadget2d needs --m")
        return FamilySpec(GADGET, {"m": m})
    if fam == TRIANGLES:
        if n is None and m is not None:
            n = 3 * m + 1
        if n is None:
            raise UsageError("triangles needs --n (or --m for n = 3m+1)")
        eps = _one(args.eps, "--eps")
        return FamilySpec(TRIANGLES, {"n": n, "eps": eps if eps is not None else Fraction(1)})
    if fam in (BLOCKS, SCALED_BLOCKS):
        if n is None:
            raise UsageError(f"{fam} needs --n")
        params = {"n": n}
        if fam == SCALED_BLOCKS:
            params["eta"] = args.eta if args.eta is not None else DEFAULT_ETA
        return FamilySpec(fam, params)
    raise UsageError(f"unknown family {fam!r}")


def load_instance(args) -> tuple[Instance, dict]:
    if getattr(args, "instance", None):
        return instance_from_json(json.loads(Path(args.instance).read_text()))
    if not args.family:
        raise UsageError("give --family or --instance")
    return build(family_spec(args))


def select_cuts(instance: Instance, pools: dict, text: str) -> tuple[str, list]:
    """Resolve ``--cuts``: ``none``, a pool name, or ``select:SCORER:M``."""
    if text in (None, "", "none"):
        return "none", []
    if text.startswith("select:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError("use select:SCORER:M")
        _, name, m = parts
        if name.startswith("lambda="):
            scorer = LambdaMix(Fraction(name[len("lambda="):]))
        elif name in SCORERS:
            scorer = SCORERS[name]
        else:
            raise UsageError(f"unknown scorer {name!r}")
        pool = [c for p in pools.values() for c in p]
        chosen = select_top_m(pool, scorer, int(m), CutContext(instance))
        return text, chosen
    if text not in pools:
        raise UsageError(f"unknown cut pool {text!r}; available: {', '.join(pools) or 'none'}")
    return text, list(pools[text])


def policy_spec(args) -> PolicySpec:
    kind = POLICIES[args.policy]
    return PolicySpec(kind, eta=args.eta_sb, epsilon=args.epsilon, kappa=args.kappa, k=args.k,
                      tie_break=TIEBREAKS[args.tiebreak])


def incumbent_arg(args):
    if args.no_warm_start:
        return None
    if args.incumbent is not None:
        return ext(args.incumbent)
    return "opt"


def known_bound(instance: Instance, pools: dict, cuts: list, policy: PolicySpec) -> Optional[tuple]:
    """The tree-size bound the theory gives for this configuration, as ``(text, check)``."""
    p = dict(instance.params)
    ids = {c.id for c in cuts}
    fam = instance.family
    if fam in (BLOCKS, SCALED_BLOCKS) and not cuts:
        n = int(p["n"])
        lower = 2 ** (n + 1) - 1
        if policy.kind == STRONG or (policy.kind == CAPPED and policy.tie_break == SMALLEST_INDEX):
            return f"= 2n+1 = {2 * n + 1}", lambda t: t == 2 * n + 1
        if (policy.kind == CAPPED and policy.tie_break == PREFER_Y1) or (
                policy.kind == PERTURBED and fam == SCALED_BLOCKS):
            return f">= 2^(n+1)-1 = {lower}", lambda t: t >= lower
        if policy.kind == DEVIATION and fam == BLOCKS:
            lb = Fraction(2 ** (policy.k + 1) * n, 7)
            return f">= 2^(k+1) n/7 = {lb}", lambda t: t >= lb
    if fam == GADGET and policy.kind == STRONG:
        m = int(p["m"])
        if ids == {c.id for c in pools.get("C1", [])}:
            return f"<= 2m+1 = {2 * m + 1}", lambda t: t <= 2 * m + 1
        if ids == {c.id for c in pools.get("C2", [])}:
            lb = 1 + 6 * (2 ** (m // 9) - 1)
            return f">= 1+6(2^floor(m/9)-1) = {lb}", lambda t: t >= lb
    if fam == TRIANGLES and ids and ids == {c.id for c in pools.get("Ctilde", [])}:
        lb = 2 ** (int(p["n"]) // 3 + 1) - 1
        return f">= 2^(m+1)-1 = {lb}", lambda t: t >= lb
    return None


def summary_row(tree: TreeRecord, pool_id: str, pools: dict) -> list:
    inst = tree.instance
    params = ";".join(f"{k}={v}" for k, v in inst.params)
    b = known_bound(inst, pools, list(tree.cuts), tree.policy)
    bound, ok = ("", "") if b is None else (b[0], b[1](tree.tree_size))
    return [inst.family, params, tree.policy.kind, pool_id, tree.tree_size, bound, ok]


# ---------------------------------------------------------------------------
# output

def emit(args, text: str):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


# ---------------------------------------------------------------------------
# subcommands

def cmd_generate(args) -> int:
    inst, pools = load_instance(args)
    emit(args, dumps_instance(inst, pools))
    return 0


def cmd_solve(args) -> int:
    inst, pools = load_instance(args)
    pool_id, cuts = select_cuts(inst, pools, args.cuts)
    tree = run_bnb(inst, cuts, policy_spec(args), incumbent_arg(args), cut_set_id=pool_id,
                   record_scores=args.scores)
    row = summary_row(tree, pool_id, pools)
    if args.format == "dot":
        emit(args, export_dot(tree))
    elif args.format == "csv":
        emit(args, _csv(SUMMARY_HEADER, [row]))
    else:
        d = tree.to_json()
        d["summary"] = dict(zip(SUMMARY_HEADER, row))
        emit(args, _dump(d))
    return 0 if row[-1] in ("", True) else 1


def cmd_score_cuts(args) -> int:
    inst, pools = load_instance(args)
    if args.pool:
        if args.pool not in pools:
            raise UsageError(f"unknown cut pool {args.pool!r}")
        pool = list(pools[args.pool])
    else:
        pool = [c for p in pools.values() for c in p]
    if not pool:
        raise UsageError("instance has no cuts to score")
    ctx = CutContext(inst)
    reports = score_pool(pool, ctx, args.lambdas or ())
    if args.format == "csv":
        emit(args, _csv(CSV_HEADER, [r.csv_row() for r in reports]))
    elif args.format == "json":
        emit(args, _dump({"instance": inst.name, "rootValue": str(root_value(inst)),
                          "rootVertex": [str(v) for v in ctx.x_lp],
                          "cuts": [r.to_json() for r in reports]}))
    else:
        raise UsageError("score-cuts supports json and csv")
    return 0


def cmd_score_branching(args) -> int:
    inst, pools = load_instance(args)
    pool_id, cuts = select_cuts(inst, pools, args.cuts)
    rel = Relaxation(inst, cuts)
    fx = parse_fixings(inst, args.fixings or "")
    node = Node.at(rel, fx)
    if not node.outcome.optimal:
        raise UsageError(f"node LP is {node.outcome.status.value}")
    _, rep = choose(policy_spec(args), node, report=True)
    if args.format == "csv":
        labels = inst.labels
        emit(args, _csv(["var", "label", "d0", "d1", "score", "chosen"],
                        [[j, labels[j], ext_str(a), ext_str(b), ext_str(s), j == rep.chosen]
                         for j, a, b, s in rep.candidates]))
    elif args.format == "json":
        d = rep.to_json(inst.labels)
        d["fixings"] = fx.describe(inst)
        d["lpValue"] = ext_str(node.outcome.value)
        emit(args, _dump(d))
    else:
        raise UsageError("score-branching supports json and csv")
    return 0


def cmd_oracle(args) -> int:
    inst, pools = load_instance(args)
    if inst.family == TRIANGLES and int(dict(inst.params)["n"]) // 3 > 3 and not args.force:
        raise UsageError("triangles beyond m = 3 needs --force")
    pool_id, cuts = select_cuts(inst, pools, args.cuts)
    cls = ANY_UNFIXED if args.branch_class == "any" else FRACTIONAL_ONLY
    res = min_tree_size(inst, cuts, cls, incumbent_arg(args), force=args.force)
    d = res.to_json(inst)
    d["cuts"] = pool_id
    if args.format != "json":
        raise UsageError("oracle supports json only")
    emit(args, _dump(d))
    return 0


def cmd_reproduce(args) -> int:
    params: dict = {}
    s = args.suite
    if args.n is not None:
        params["ns"] = args.n
    if args.m is not None:
        params["ms"] = args.m
    if args.k is not None:
        params["ks"] = args.k
    if s == "thm2":
        params["force"] = args.force
        if args.eps is not None:
            params["eps"] = _one(args.eps, "--eps")
    if s == "thm3":
        if args.eps is not None:
            params["epsilons"] = args.eps
        if args.eta is not None:
            params["eta"] = args.eta
    if s == "prop1" and args.kappa is not None:
        params["kappas"] = args.kappa
    if s == "toy":
        if args.s is not None:
            params["s"] = args.s
        if args.lambdas:
            params["lambdas"] = args.lambdas
    if s == "thm1" and args.c2_max is not None:
        params["c2_max"] = args.c2_max
    try:
        report = repro.reproduce(s, checks=not args.no_checks, artifacts_dir=args.artifacts, **params)
    except TypeError as e:
        raise UsageError(f"{s}: unsupported parameter ({e})") from None
    if args.format == "csv":
        emit(args, report.to_csv())
    elif args.format == "json":
        emit(args, report.dumps(runtime=not args.no_runtime))
    else:
        raise UsageError("reproduce supports json and csv")
    for c in report.failed():
        print(f"claim failed: {c.description} {c.params}: observed {c.observed}, expected {c.bound}",
              file=sys.stderr)
    return 0 if report.ok else 1


def cmd_export_dot(args) -> int:
    d = json.loads(Path(args.tree).read_text())
    if args.instance:
        inst, _ = instance_from_json(json.loads(Path(args.instance).read_text()))
    else:
        meta = d["meta"]
        inst, _ = build(FamilySpec(meta["family"], dict(meta["params"])))
    emit(args, export_dot(tree_from_json(d, inst)))
    return 0


# ---------------------------------------------------------------------------

def _family_args(p):
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--instance", help="instance JSON written by 'generate'")
    p.add_argument("--n", type=int_range, help="size parameter")
    p.add_argument("--m", type=int_range)
    p.add_argument("--s", type=rational, help="toy parameter, 1 < s < 2")
    p.add_argument("--eps", type=rational_list, help="triangle-family epsilon")
    p.add_argument("--eta", type=rational, help="scaled-block eta")


def _policy_args(p):
    p.add_argument("--policy", choices=sorted(POLICIES), default="sb")
    p.add_argument("--eta-sb", type=rational, default=DEFAULT_ETA, help="strong branching clamp (default 1/10^6)")
    p.add_argument("--epsilon", type=rational)
    p.add_argument("--kappa", type=rational)
    p.add_argument("--k", type=int)
    p.add_argument("--tiebreak", choices=sorted(TIEBREAKS), default="smallest")


def _incumbent_args(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--incumbent", type=rational, help="warm-start incumbent value")
    g.add_argument("--no-warm-start", action="store_true", help="start without an incumbent")


def _out_args(p, formats=("json", "csv", "dot")):
    p.add_argument("--format", choices=formats, default="json")
    p.add_argument("--out", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bnclab", description="Exact branch-and-cut laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write an instance and its cut pools as JSON")
    _family_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_generate, format="json")

    p = sub.add_parser("solve", help="run branch-and-bound and emit the tree")
    _family_args(p)
    p.add_argument("--cuts", default="none", help="none, a pool name, or select:SCORER:M")
    _policy_args(p)
    _incumbent_args(p)
    p.add_argument("--scores", action="store_true", help="record branching scores at every node")
    _out_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("score-cuts", help="efficacy, parallelism and bound improvement per cut")
    _family_args(p)
    p.add_argument("--pool", help="score one pool (default: all)")
    p.add_argument("--lambda", dest="lambdas", type=rational_list, help="LambdaMix weights, comma separated")
    _out_args(p, ("json", "csv"))
    p.set_defaults(func=cmd_score_cuts)

    p = sub.add_parser("score-branching", help="branching scores at one node")
    _family_args(p)
    p.add_argument("--cuts", default="none")
    p.add_argument("--fixings", help="e.g. b_1=0,y_2,1=1")
    _policy_args(p)
    _out_args(p, ("json", "csv"))
    p.set_defaults(func=cmd_score_branching)

    p = sub.add_parser("oracle", help="exact minimum tree size")
    _family_args(p)
    p.add_argument("--cuts", default="none")
    p.add_argument("--branch-class", choices=["fractional", "any"], default="fractional")
    p.add_argument("--force", action="store_true")
    _incumbent_args(p)
    _out_args(p, ("json",))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("reproduce", help="run a reproduction suite and check its claims")
    p.add_argument("suite", choices=repro.SUITES)
    p.add_argument("--n", type=int_range)
    p.add_argument("--m", type=int_range)
    p.add_argument("--k", type=int_range)
    p.add_argument("--s", type=rational)
    p.add_argument("--eps", type=rational_list)
    p.add_argument("--eta", type=rational)
    p.add_argument("--kappa", type=rational_list)
    p.add_argument("--lambda", dest="lambdas", type=rational_list)
    p.add_argument("--c2-max", type=int, help="thm1: largest m for the C2 runs")
    p.add_argument("--force", action="store_true")
    p.add_argument("--artifacts", help="directory for TreeRecord JSON files")
    p.add_argument("--no-checks", action="store_true", help="skip certificates and tree checks")
    p.add_argument("--no-runtime", action="store_true", help="omit runtimeMs from the JSON")
    _out_args(p, ("json", "csv"))
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("export-dot", help="convert a TreeRecord JSON file to DOT")
    p.add_argument("tree")
    p.add_argument("--instance", help="instance JSON, if the tree's family cannot be rebuilt")
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_dot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ModelError, ValueError) as e:
        print(f"bnclab {args.command}: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
