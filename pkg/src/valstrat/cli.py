"""Command-line front end: JSON in, a text table on stdout, optional JSON out."""
from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import lipschitz as lip
from .config import Config
from .errors import (
    NoConvergence,
    PrecisionExhausted,
    ResourceError,
    SingularSeed,
    SizeCapExceeded,
    UnfitSamples,
    ValstratError,
)
from .gamma import Gamma
from .puiseux import PSeries, format_series, nth_root, precision, ps_rv, ps_val
from .riso import check_risometry, find_risometry
from .strat import (
    Ball,
    StratSpec,
    candidate_grid,
    crit_function_eval,
    crit_values_at_point,
    fit_monomial_pieces,
    is_dir_trivial_on_ball,
)
from .vla import KVector, ResSubspace, Subspace, delta_distance

EXIT_OK, EXIT_VERDICT, EXIT_INPUT, EXIT_PRECISION = 0, 1, 2, 3
RESOURCE_ERRORS = (PrecisionExhausted, ResourceError, SizeCapExceeded, NoConvergence, SingularSeed)


class InputError(Exception):
    pass


class Outcome:
    def __init__(self, lines: list[str], payload, code: int = EXIT_OK):
        self.lines = lines
        self.payload = payload
        self.code = code


# -- parsing helpers ------------------------------------------------------------


def load_json(arg: str):
    """Parse a JSON literal, or the contents of the file it names."""
    if os.path.exists(arg):
        with open(arg) as fh:
            text, where = fh.read(), arg
    else:
        text, where = arg, "argument"
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"malformed JSON in {where}: {err.msg} at line {err.lineno}, column {err.colno}")


def load_strat(arg: str) -> StratSpec:
    if arg.startswith("cusp:") or arg in ("trumpet", "parabola"):
        return StratSpec.from_name(arg)
    return StratSpec.from_json(load_json(arg))


def _gammas(obj) -> list[Gamma]:
    if not isinstance(obj, list):
        raise InputError("a lambda vector must be a JSON list")
    return [Gamma.from_json(g) for g in obj]


def _residue_vector(obj) -> np.ndarray:
    out = []
    for c in obj:
        if isinstance(c, list):
            out.append(complex(c[0], c[1]))
        else:
            out.append(complex(c))
    return np.array(out, dtype=complex)


def _subspace(obj) -> Subspace:
    if isinstance(obj, dict):
        return Subspace.from_json(obj)
    vecs = [KVector.from_json(v) for v in obj]
    if not vecs:
        raise InputError("a bare list of vectors must be non-empty")
    return Subspace(len(vecs[0]), vecs)


def fmt_gamma(g: Gamma) -> str:
    if g.is_zero:
        return "0"
    if g.is_inf:
        return "Inf"
    if g.exp == 0:
        return "1"
    return f"<{g.exp}>"


def fmt_set(values) -> str:
    return "{" + ", ".join(fmt_gamma(g) for g in sorted(values, reverse=True)) + "}"


def _gjson(values) -> list:
    return [g.to_json() for g in sorted(values, reverse=True)]


# -- subcommands ------------------------------------------------------------------


def cmd_series(a, cfg) -> Outcome:
    x = PSeries.from_json(load_json(a.x))
    if a.op == "eval":
        r = x
    elif a.op in ("add", "mul"):
        if a.y is None:
            raise InputError(f"series {a.op} needs --y")
        y = PSeries.from_json(load_json(a.y))
        r = x + y if a.op == "add" else x * y
    elif a.op == "inv":
        r = x.inverse()
    else:
        r = nth_root(x, a.k, a.branch)
    lines = [f"value: {format_series(r)}"]
    payload = {"value": r.to_json()}
    if not r.is_zero_to_prec:
        v = ps_val(r)
        rv = ps_rv(r)
        lines += [f"val: {fmt_gamma(v)}", f"rv: {rv}"]
        payload["val"] = v.to_json()
    return Outcome(lines, payload)


def cmd_delta(a, cfg) -> Outcome:
    U = _subspace(load_json(a.u))
    W = _subspace(load_json(a.w))
    d = delta_distance(U, W)
    return Outcome([f"delta: {fmt_gamma(d)}"], {"delta": d.to_json()})


def _vec_or_series(obj) -> KVector:
    if isinstance(obj, list):
        return KVector.from_json(obj)
    return KVector([PSeries.from_json(obj)])


def cmd_risometry(a, cfg) -> Outcome:
    obj = load_json(a.points)
    if a.op == "check":
        pairs = [(_vec_or_series(x), _vec_or_series(y)) for x, y in obj["pairs"]]
        rep = check_risometry(pairs)
        if rep:
            return Outcome([f"risometry holds on {len(pairs)} points"], {"ok": True})
        x, y = rep.witness
        return Outcome([f"violation: rv differs on the pair {x}, {y}"],
                       {"ok": False, "witness": [x.to_json(), y.to_json()]}, EXIT_VERDICT)
    X = [_vec_or_series(p) for p in obj["X"]]
    Y = [_vec_or_series(p) for p in obj["Y"]]
    m = find_risometry(X, Y)
    if m is None:
        return Outcome(["no risometry between the point sets"], {"map": None}, EXIT_VERDICT)
    return Outcome([f"{i} -> {j}" for i, j in sorted(m.items())], {"map": [[i, j] for i, j in sorted(m.items())]})


def cmd_trivial(a, cfg) -> Outcome:
    S = load_strat(a.strat)
    ball = Ball.from_json(load_json(a.ball))
    L = ResSubspace(S.n, [_residue_vector(load_json(a.dir))])
    v = is_dir_trivial_on_ball(S, ball, L, cfg.n_fibers, cfg.rng("trivial"))
    lines = [f"verdict: {v.status}"]
    if v.note:
        lines.append(f"note: {v.note}")
    if v.witness is not None:
        lines.append(f"witness: {v.witness}")
    code = {"non_trivial": EXIT_VERDICT, "inconclusive": EXIT_PRECISION}.get(v.status, EXIT_OK)
    return Outcome(lines, {"status": v.status, "note": v.note, "witness": repr(v.witness) if v.witness else None}, code)


def cmd_critvals(a, cfg) -> Outcome:
    S = load_strat(a.strat)
    c = KVector.from_json(load_json(a.point))
    r = crit_values_at_point(S, c, sorted(candidate_grid(S)), cfg, cfg.rng("critvals"))
    lines = [f"crit: {fmt_set(r.values)}"]
    if r.inconclusive:
        lines.append(f"inconclusive: {fmt_set(r.inconclusive)}")
    return Outcome(lines, {"values": _gjson(r.values), "inconclusive": _gjson(r.inconclusive)})


def cusp_grid() -> list[list[Gamma]]:
    """40 lambda vectors covering every row of the cusp contact table."""
    out = []
    for e0 in [Fraction(-4), Fraction(-3), Fraction(-2), Fraction(-1), Fraction(-1, 2),
               Fraction(1, 2), Fraction(1), Fraction(2), Fraction(3), Fraction(4)]:
        out.append([Gamma.of(e0), Gamma.zero()])
        for step in (Fraction(1, 2), Fraction(1), Fraction(2)):
            out.append([Gamma.of(e0), Gamma.of(e0 + step)])
    return out


def cmd_critfn(a, cfg) -> Outcome:
    S = load_strat(a.strat)
    if a.grid:
        lams = cusp_grid()
    elif a.lam is None:
        raise InputError("critfn needs --lambda or --grid")
    else:
        obj = load_json(a.lam)
        lams = [_gammas(x) for x in obj] if obj and isinstance(obj[0], list) else [_gammas(obj)]
    lines, rows, samples = [], [], []
    for lam in lams:
        r = crit_function_eval(S, lam, cfg)
        head = "(" + ", ".join(fmt_gamma(g) for g in lam) + ")"
        if r.unrealized:
            lines.append(f"{head}  unrealized")
        else:
            lines.append(f"{head}  {fmt_set(r.values)}")
            samples.append((lam, r.values))
        rows.append({"lambda": [g.to_json() for g in lam], "values": _gjson(r.values),
                     "unrealized": r.unrealized})
    payload = {"samples": rows}
    code = EXIT_OK
    if a.fit:
        try:
            fn = fit_monomial_pieces(samples)
        except UnfitSamples as err:
            lines.append(f"fit failed: {err}")
            return Outcome(lines, payload, EXIT_VERDICT)
        payload["crit_function"] = fn.to_json()
        lines.append(f"fit: {len(fn.pieces)} pieces")
    return Outcome(lines, payload, code)


def cmd_valchain(a, cfg) -> Outcome:
    S = load_strat(a.strat)
    obj = load_json(a.chain)
    rng = cfg.rng("valchain")
    if a.op == "validate":
        chain = lip.ValChain.from_json(obj)
        v = lip.validate_val_chain(S, chain, rng)
        tag = " (on sample)" if v.sampled else ""
        if v:
            lam = ", ".join(fmt_gamma(g) for g in v.lambdas)
            return Outcome([f"valid val-chain{tag}", f"lambdas: {lam}"],
                           {"ok": True, "lambdas": [g.to_json() for g in v.lambdas], "sampled": v.sampled})
        return Outcome([f"condition {v.condition} fails{tag}", f"witness: {v.witness}"],
                       {"ok": False, "condition": v.condition, "witness": repr(v.witness)}, EXIT_VERDICT)
    a0 = KVector.from_json(obj["a0"])
    pool = [KVector.from_json(p) for p in obj.get("pool", [])]
    chains = lip.enumerate_val_chains(S, a0, int(obj.get("max_m", 2)), pool, rng)
    lines = []
    for c in chains:
        lines.append(f"dims {tuple(c.dims)}  lambdas " + ", ".join(fmt_gamma(g) for g in c.lambdas))
    return Outcome(lines, {"chains": [c.to_json() for c in chains]})


def cmd_nested(a, cfg) -> Outcome:
    W = lip.SubspaceGrid.from_json(load_json(a.grid))
    V = lip.nested_subspaces(W)
    rep = lip.check_nested_output(W, V)
    payload = {"grid": V.to_json(), "ok": rep.ok, "failures": [list(f) for f in rep.failures]}
    if rep:
        return Outcome([f"nested grid built for m = {W.m}", "all properties hold"], payload)
    lines = ["property failures:"] + [f"  {name} at ({i}, {j})" for name, i, j in rep.failures]
    return Outcome(lines, payload, EXIT_VERDICT)


def cmd_taylor(a, cfg) -> Outcome:
    if a.family in ("square", "hier1", "hier2", "identity"):
        fam = lip.family_by_name(a.family)
    else:
        fam = lip.polynomial_family(load_json(a.family))
    rep = lip.taylor_order_check(fam, a.order, cfg.n_tuples, cfg.rng("taylor", a.family))
    lines = [f"family {fam.name}, order {a.order}: {rep.passed}/{rep.total} tuples pass"]
    payload = {"family": fam.name, "order": a.order, "passed": rep.passed, "total": rep.total,
               "ok": rep.ok}
    if rep.forms_agree is not None:
        lines.append("quadratic forms agree" if rep.forms_agree else "quadratic forms disagree")
        payload["forms_agree"] = rep.forms_agree
    if rep.violation:
        b, u0, u1, lhs, rhs = rep.violation
        lines.append(f"violation at u0 = {u0}, u1 = {u1}: residual {fmt_gamma(lhs)} vs bound {fmt_gamma(rhs)}")
        payload["violation"] = {"u0": u0.to_json(), "u1": u1.to_json(),
                                "lhs": lhs.to_json(), "rhs": rhs.to_json()}
    return Outcome(lines, payload, EXIT_OK if rep.ok else EXIT_VERDICT)


# -- entry point ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--precision", type=Fraction)
    common.add_argument("--json", dest="json_out", metavar="PATH")
    common.add_argument("--config", metavar="PATH")

    p = argparse.ArgumentParser(prog="valstrat", parents=[common],
                                description="Valued-field stratification toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("series", parents=[common], help="Puiseux series arithmetic")
    s.add_argument("op", choices=["eval", "add", "mul", "inv", "root"])
    s.add_argument("--x", required=True)
    s.add_argument("--y")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--branch", type=int, default=0)
    s.set_defaults(fn=cmd_series)

    s = sub.add_parser("delta", parents=[common], help="distance between subspaces")
    s.add_argument("--u", required=True)
    s.add_argument("--w", required=True)
    s.set_defaults(fn=cmd_delta)

    s = sub.add_parser("risometry", parents=[common], help="check or find risometries")
    s.add_argument("op", choices=["check", "find"])
    s.add_argument("--points", required=True)
    s.set_defaults(fn=cmd_risometry)

    s = sub.add_parser("trivial", parents=[common], help="direction triviality on a ball")
    s.add_argument("--strat", required=True)
    s.add_argument("--ball", required=True)
    s.add_argument("--dir", required=True)
    s.set_defaults(fn=cmd_trivial)

    s = sub.add_parser("critvals", parents=[common], help="critical values at a point")
    s.add_argument("--strat", required=True)
    s.add_argument("--point", required=True)
    s.set_defaults(fn=cmd_critvals)

    s = sub.add_parser("critfn", parents=[common], help="critical value function")
    s.add_argument("--strat", required=True)
    s.add_argument("--lambda", dest="lam")
    s.add_argument("--grid", action="store_true")
    s.add_argument("--fit", action="store_true")
    s.set_defaults(fn=cmd_critfn)

    s = sub.add_parser("valchain", parents=[common], help="validate or enumerate val-chains")
    s.add_argument("op", choices=["validate", "enumerate"])
    s.add_argument("--strat", required=True)
    s.add_argument("--chain", required=True)
    s.set_defaults(fn=cmd_valchain)

    s = sub.add_parser("nested", parents=[common], help="nested subspace construction")
    s.add_argument("--grid", required=True)
    s.set_defaults(fn=cmd_nested)

    s = sub.add_parser("taylor", parents=[common], help="Taylor order check")
    s.add_argument("--family", required=True)
    s.add_argument("--order", type=int, required=True)
    s.set_defaults(fn=cmd_taylor)
    return p


def _config(a) -> Config:
    cfg = Config.load(a.config) if a.config else Config()
    if a.seed is not None:
        cfg.seed = a.seed & (2 ** 64 - 1)
    if a.precision is not None:
        if a.precision <= 0:
            raise InputError("precision must be positive")
        cfg.precision = a.precision
    return cfg


def run_command(argv: Sequence[str]) -> tuple[int, str]:
    parser = build_parser()
    try:
        a = parser.parse_args(list(argv))
    except SystemExit as exc:
        return (EXIT_OK if exc.code == 0 else EXIT_INPUT), ""
    try:
        cfg = _config(a)
        with precision(cfg.precision):
            out = a.fn(a, cfg)
    except InputError as err:
        return EXIT_INPUT, f"input error: {err}"
    except RESOURCE_ERRORS as err:
        return EXIT_PRECISION, f"precision or resource limit: {err}"
    except (ValstratError, ValueError, KeyError, TypeError, IndexError, OSError) as err:
        return EXIT_INPUT, f"input error: {type(err).__name__}: {err}"
    if a.json_out:
        with open(a.json_out, "w") as fh:
            json.dump(out.payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return out.code, "\n".join(out.lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    if text:
        stream = sys.stderr if code == EXIT_INPUT or code == EXIT_PRECISION else sys.stdout
        print(text, file=stream)
    return code


if __name__ == "__main__":
    sys.exit(main())
