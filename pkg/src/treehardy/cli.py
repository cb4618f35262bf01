"""Command-line front end: scenario generation, checks and deterministic reports.

Exit codes: 0 every asserted invariant holds, 1 an invariant failed, 2 input error.
"""
from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Callable

import click
import numpy as np

from . import bellman, conditions, conformal, hardy, potential
from .measures import Exponent, cumulate, weight_from_rule
from .scenarios import SCENARIOS, Scenario, generate, parse_params
from .tree import RootedTree, TreeError, build_homogeneous

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2
PLAIN_LIMIT = 200_000


class InputError(Exception):
    pass


# ------------------------------------------------------------ serialization
def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "null"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    return json.dumps(str(x))


def dumps(obj, indent: int = 0) -> str:
    """JSON with floats at 17 significant digits, keys in insertion order."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_fmt(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in seq) + "\n" + pad + "]"
    return _fmt(obj)


def write_json(path: Path, obj) -> None:
    path.write_text(dumps(obj) + "\n")


def write_csv(path: Path, columns: dict) -> None:
    names = list(columns)
    rows = [",".join(names)]
    n = len(next(iter(columns.values())))
    for i in range(n):
        rows.append(",".join(_fmt(columns[c][i]) if not isinstance(columns[c][i], str)
                             else columns[c][i] for c in names))
    path.write_text("\n".join(rows) + "\n")


# ------------------------------------------------------------------ inputs
def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_inputs(tree_file, measure_file, weights, p) -> Scenario:
    try:
        tree = RootedTree.from_dict(_read_json(tree_file))
    except TreeError as exc:
        raise InputError(str(exc)) from exc
    index = {str(lab): i for i, lab in enumerate(tree.labels)}
    mass = np.zeros(tree.n_edges)
    if measure_file:
        doc = _read_json(measure_file)
        if not isinstance(doc, dict):
            raise InputError("measure file must map vertex ids to masses")
        for k, v in doc.items():
            if str(k) not in index:
                raise InputError(f"measure names unknown vertex {k!r}")
            mass[index[str(k)]] = float(v)
    else:
        mass[tree.leaves] = 1.0 / tree.leaves.size
    try:
        mu = cumulate(tree, mass)
        pi = _load_weights(tree, weights, p, index)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc)) from exc
    return Scenario("files", {"tree": str(tree_file)}, 0, tree, pi, mu, p)


def _load_weights(tree, weights, p, index) -> np.ndarray:
    if not weights:
        return np.ones(tree.n_edges)
    if Path(weights).is_file():
        doc = _read_json(weights)
        pi = np.full(tree.n_edges, np.nan)
        for k, v in doc.items():
            if str(k) not in index:
                raise InputError(f"weight file names unknown edge {k!r}")
            pi[index[str(k)]] = float(v)
        if np.isnan(pi).any():
            raise InputError("weight file does not cover every edge")
        return pi
    return weight_from_rule(tree, weights, p).values


# ------------------------------------------------------------------ checks
def _check_me_sb(sc: Scenario, opts) -> dict:
    me, sb = conditions.me_sb_constants(sc.tree, sc.mu, sc.pi, sc.p)
    recheck = conditions.me_ratio_at(sc.tree, sc.mu, sc.pi, sc.p, me.witness)
    ok = abs(recheck - me.extra["ratio"]) <= 1e-10 * max(recheck, 1.0)
    out = {"me_constant": me.value, "me_witness": sc.tree.labels[me.witness],
           "sb_constant": sb.value, "sb_witness": sc.tree.labels[sb.witness], "ok": ok}
    if sc.name == "counterexample83":
        K = sc.params["K"]
        trend = []
        for k in range(1, K + 1):
            s = generate("counterexample83", {"K": k})
            m, b = conditions.me_sb_constants(s.tree, s.mu, s.pi, s.p)
            trend.append({"K": k, "root_me_ratio": m.table["ratio"][0], "sb_constant": b.value})
        inc = [b["root_me_ratio"] - a["root_me_ratio"] for a, b in zip(trend, trend[1:])]
        out["trend"] = trend
        out["annotation"] = "divergence trend" if all(d > 0 for d in inc) else "no trend"
    return out


def _check_capacity(sc: Scenario, opts) -> dict:
    leaves = sc.tree.leaves.tolist()
    res = potential.capacity(sc.tree, leaves, sc.pi, sc.p)
    top = potential.single_edge_capacities(sc.tree, sc.pi, sc.p)[0]
    ok = res.value <= top * (1 + 1e-12)
    return {"capacity_all_leaves": res.value, "residual": res.residual,
            "root_edge_capacity": float(top), "ok": bool(ok)}


def _check_norm(sc: Scenario, opts) -> dict:
    br = hardy.norm_bracket(sc.tree, sc.mu, sc.pi, sc.p, rng=np.random.default_rng(opts["seed"]))
    me = br.extra["me_constant"]
    ok = me <= br.upper * (1 + 1e-9) and br.lower <= sc.p ** sc.p * me * (1 + 1e-9)
    return {"lower": br.lower, "upper": br.upper, "lower_method": br.lower_method,
            "upper_method": br.upper_method, "me_constant": me, "ok": bool(ok)}


def _check_iso(sc: Scenario, opts) -> dict:
    r = conditions.iso_bracket(sc.tree, sc.mu, sc.pi, sc.p)
    return {"lower": r.lower, "upper": r.upper, "exact": bool(r.extra.get("exact")),
            "witness": [sc.tree.labels[i] for i in r.witness], "ok": r.lower <= r.upper * (1 + 1e-12)}


def _plain(sc: Scenario):
    if not sc.tree.is_compressed:
        return sc.tree, sc.pi
    if sc.tree.n_unit_edges > PLAIN_LIMIT:
        raise TreeError(f"check needs the expanded tree ({sc.tree.n_unit_edges} unit edges)")
    plain, origin = sc.tree.expand()
    return plain, sc.pi[origin]


def _check_sci(sc: Scenario, opts) -> dict:
    tree, pi = _plain(sc)
    rng = np.random.default_rng(opts["seed"])
    phi = rng.random(tree.n_edges) * (rng.random(tree.n_edges) < 0.5)
    phi[0] += 1.0
    rep = potential.sci_audit(tree, phi, pi, sc.p)
    return {"lhs": rep.lhs, "norm": rep.norm, "ratio": rep.ratio, "bound": rep.bound,
            "proven_bound": rep.proven_bound, "proven_ok": rep.proven_ok,
            "levels": len(rep.levels), "ok": rep.ok}


def _check_s_testing(sc: Scenario, opts) -> dict:
    if sc.p != 2.0 or not np.all(sc.pi == 1.0):
        return {"skipped": "s-testing is defined for p = 2 and pi = 1", "ok": True}
    s = opts["s"] if opts["s"] >= 1 else 2.0
    me, _ = conditions.me_sb_constants(sc.tree, sc.mu, sc.pi, 2.0)
    one = conditions.s_testing(sc.tree, sc.mu, 1.0).value
    val = conditions.s_testing(sc.tree, sc.mu, s).value
    ok = abs(one - me.value) <= 1e-10 * max(me.value, 1.0) and me.value <= val ** (1 / s) * (1 + 1e-12)
    return {"s": s, "s_constant": val, "s1_constant": one, "me_constant": me.value, "ok": bool(ok)}


def _check_mw(sc: Scenario, opts) -> dict:
    s = opts["s"] if 0 < opts["s"] < 1 else 0.5
    rep = conditions.mw_quantities(sc.tree, sc.mu, s, sc.p)
    return {"s": s, "L": rep.L, "M": rep.M, "M_energy": rep.M_energy, "R": rep.R,
            "ok": bool(rep.chain_ok and rep.pointwise_ok)}


def _check_bessel(sc: Scenario, opts) -> dict:
    s = opts["s"] if 0 < opts["s"] < 1 else 0.5
    rep = conditions.bessel_check(sc.tree, sc.mu, s, sc.p)
    return {"s": s, "max_abs_diff": rep.max_abs_diff, "energy_ratio": rep.energy_ratio,
            "ok": bool(rep.bounds_ok and rep.max_abs_diff <= 1e-12 * max(1.0, float(np.max(rep.direct))))}


def _check_tails(sc: Scenario, opts) -> dict:
    rep = conditions.compact_tails(sc.tree, sc.mu, sc.pi, sc.p, capacitary=not sc.tree.is_compressed)
    return {"me_tail": rep.me, "capacitary_tail": rep.capacitary, "ok": rep.nonincreasing}


def _check_bellman(sc: Scenario, opts) -> dict:
    tree, _ = _plain(sc)
    rng = np.random.default_rng(opts["seed"])
    p = sc.p
    sigma, lam = bellman.admissible_instance(tree, p, rng)
    phi = rng.random(tree.n_edges)
    step = bellman.step_check(tree, sigma, lam, phi, p)
    cet = bellman.cet_verify(tree, sigma, lam, p, trials=200, rng=rng)
    conc = bellman.concavity_probe(p, samples=50, rng=rng, pairs=2000)
    return {"step_min_slack": step.min_slack, "recursion_residual": step.recursion_residual,
            "cet_max_ratio": cet.max_ratio, "concavity_max_eig": conc.max_rel_eigenvalue,
            "ok": bool(step.ok and cet.ok and conc.ok)}


def _check_conformal(sc: Scenario, opts) -> dict:
    radius = opts["depth"] or 3
    tr = conformal.build_truncation(radius)
    rng = np.random.default_rng(opts["seed"])
    m = conformal.leaf_masses(tr, rng.random(tr.leaves.size))
    _, inf_o = conformal.rooted_norm_profile(tr, m)
    rep = conformal.inv_constant_estimate(tr, m)
    ch = rep.extra["ch_constant"]
    ok = rep.value <= ch * (1 + 1e-9) and ch <= inf_o * (1 + 1e-9)
    return {"radius": radius, "inf_rooted_norm": inf_o, "ch_constant": ch,
            "condenser_ratio": rep.value, "ok": bool(ok)}


CHECKS: dict[str, Callable] = {
    "me_sb": _check_me_sb, "iso": _check_iso, "norm": _check_norm, "capacity": _check_capacity,
    "sci": _check_sci, "s_testing": _check_s_testing, "mw": _check_mw, "bessel": _check_bessel,
    "tails": _check_tails, "bellman": _check_bellman, "conformal": _check_conformal,
}
DEFAULT_REPORT = ("me_sb", "capacity", "norm", "tails")


def _table(sc: Scenario) -> dict:
    me, sb = conditions.me_sb_constants(sc.tree, sc.mu, sc.pi, sc.p)
    sigma = sc.pi ** (1.0 - Exponent(sc.p).conj)
    return {"edge_id": [str(lab) for lab in sc.tree.labels],
            "d(alpha)": sc.tree.depth.tolist(),
            "tent": sc.mu.tent.tolist(),
            "ratio": me.table["ratio"].tolist(),
            "sb": sb.table["sb"].tolist(),
            "d_pi": sc.tree.prefix(sigma).tolist(),
            "mass": sc.mu.mass.tolist(),
            "length": sc.tree.length.tolist()}


def run_report(sc: Scenario, checks, out: Path | None, fmt: str = "json", seed: int = 0,
               s: float = 0.0, depth: int | None = None, echo=print) -> int:
    """Run the named checks, write report.json (and table.csv) to ``out``; return the exit code."""
    unknown = [c for c in checks if c not in CHECKS]
    if unknown:
        raise InputError(f"unknown check {unknown[0]!r}; choose from {', '.join(CHECKS)}")
    opts = {"seed": seed, "s": s, "depth": depth}
    results = {}
    for name in checks:
        try:
            results[name] = CHECKS[name](sc, opts)
        except TreeError as exc:  # structural precondition, e.g. compressed or non-homogeneous
            results[name] = {"skipped": str(exc), "ok": True}
        except ValueError as exc:
            results[name] = {"error": str(exc), "ok": False}
    ok = all(r["ok"] for r in results.values())
    report = {"scenario": sc.name, "params": sc.params, "seed": sc.seed, "p": sc.p,
              "edges": sc.tree.n_edges, "unit_edges": sc.tree.n_unit_edges,
              "checks": results, "ok": ok}
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "report.json", report)
        if fmt == "csv":
            write_csv(out / "table.csv", _table(sc))
    for name, r in results.items():
        echo(f"{name}: {'skipped' if 'skipped' in r else 'ok' if r['ok'] else 'FAILED'}")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- commands
def _resolve(scenario, params, tree_file, measure_file, weights, p, seed) -> Scenario:
    if scenario:
        prm = parse_params(params)
        if p is not None:
            prm.setdefault("p", p)
        try:
            sc = generate(scenario, prm, seed)
        except (ValueError, TreeError) as exc:
            raise InputError(str(exc)) from exc
        if p is not None and sc.p != p:
            raise InputError(f"scenario {scenario} fixes p = {sc.p}")
        return sc
    if not tree_file:
        raise InputError("give --scenario or --tree")
    return load_inputs(tree_file, measure_file, weights, 2.0 if p is None else p)


def _input_options(f):
    for opt in reversed([
        click.option("--scenario", type=str, default=None, help="Scenario name."),
        click.option("--param", "params", multiple=True, help="Scenario parameter key=value."),
        click.option("--tree", "tree_file", type=str, default=None),
        click.option("--measure", "measure_file", type=str, default=None),
        click.option("--weights", type=str, default=None, help="Rule or JSON file."),
        click.option("--p", type=float, default=None),
        click.option("--s", type=float, default=0.0),
        click.option("--depth", type=int, default=None),
        click.option("--seed", type=int, default=0),
        click.option("--out", type=click.Path(file_okay=False), default=None),
        click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json"),
    ]):
        f = opt(f)
    return f


def _run(checks, scenario, params, tree_file, measure_file, weights, p, s, depth, seed, out, fmt):
    try:
        sc = _resolve(scenario, params, tree_file, measure_file, weights, p, seed)
        code = run_report(sc, checks, Path(out) if out else None, fmt, seed, s, depth, click.echo)
    except InputError as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    sys.exit(code)


@click.group()
def main():
    """Potential theory and Hardy inequality checks on finite trees."""


@main.command()
@click.option("--depth", type=int, required=True)
@click.option("--q", type=int, default=2, help="Branching number.")
@click.option("--out", type=click.Path(file_okay=False), required=True)
def build(depth, q, out):
    """Write a homogeneous tree document."""
    try:
        tree = build_homogeneous(q, depth)
    except (ValueError, TreeError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    Path(out).mkdir(parents=True, exist_ok=True)
    write_json(Path(out) / "tree.json", tree.to_dict())


@main.command("generate")
@click.argument("name", type=click.Choice(SCENARIOS))
@click.option("--param", "params", multiple=True, help="key=value, repeatable.")
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(file_okay=False), required=True)
def generate_cmd(name, params, seed, out):
    """Write tree, weights and measure documents for a scenario."""
    try:
        sc = generate(name, parse_params(params), seed)
    except (ValueError, TreeError) as exc:
        click.echo(f"input error: {exc}", err=True)
        sys.exit(EXIT_INPUT)
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    write_json(d / "tree.json", sc.tree.to_dict())
    write_json(d / "weights.json", sc.weight_doc())
    write_json(d / "measure.json", sc.measure_doc())
    write_json(d / "scenario.json", {"name": sc.name, "params": sc.params, "seed": sc.seed,
                                     "p": sc.p, "claim": sc.claim, "expected": sc.expected})


@main.command()
@click.argument("names", nargs=-1, required=True)
@_input_options
def check(names, **kw):
    """Run the named checks."""
    _run(list(names), **kw)


def _single(name, doc):
    @_input_options
    def cmd(**kw):
        _run([name], **kw)
    cmd.__doc__ = doc
    return main.command(name)(cmd)


norm = _single("norm", "Bracket the Hardy operator norm.")
capacity = _single("capacity", "Capacity of the full leaf set.")
sci = _single("sci", "Strong capacitary inequality audit.")
mw = _single("mw", "Muckenhoupt-Wheeden quantities.")
bellman_cmd = _single("bellman", "Bellman function checks on an admissible instance.")
conformal_cmd = _single("conformal", "Conformal constant checks on a truncation of radius --depth.")


@main.command()
@click.option("--checks", default=",".join(DEFAULT_REPORT), help="Comma separated check names.")
@_input_options
def report(checks, **kw):
    """Run a set of checks and write report.json plus an optional table."""
    _run([c for c in checks.split(",") if c], **kw)


if __name__ == "__main__":
    main()
