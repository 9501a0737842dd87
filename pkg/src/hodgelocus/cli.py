"""Command line interface: ``hodgelocus <command> --instance PATH``.

Exit status 0 on success, 2 on validation diagnostics, 1 on internal errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__, numeric
from . import degeneration_lab as dl
from .exact_core import GQ, bilinear, vec
from .extended_locus import (
    ClosureHypothesisError,
    binomials_vanish_on_parametrization,
    closure_equation_system,
    limit_hodge_candidates,
)
from .filtrations import check_weight_axioms, weight_filtration_of
from .hodge_core import (
    Diagnostic,
    PureHodgeStructure,
    enumerate_bounded_classes,
    epsilon_functional,
    hodge_decompose_and_norm,
    validate_polarized_hs,
)
from .instance import Instance, InstanceError, dumps, load
from .orbits import evaluate_nilpotent_exact, horizontality_check

COMMANDS = ("validate", "wf", "deligne", "norm", "enumerate", "closure", "candidates", "simulate", "verify")


class ValidationFailure(Exception):
    """A diagnostic about the input; maps to exit status 2."""

    def __init__(self, message: str, report: dict | None = None):
        super().__init__(message)
        self.report = report or {"ok": False, "diagnostic": message}


# ---------------------------------------------------------------------------
# helpers


def _parse_vector(text: str | None, rank: int, what: str = "--vector") -> tuple:
    if text is None:
        raise ValidationFailure(f"{what} is required for this command")
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if len(parts) != rank:
        raise ValidationFailure(f"{what} needs {rank} comma-separated entries")
    try:
        return vec(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise ValidationFailure(f"{what} entries must be rationals") from None


def _int_vector(v: tuple) -> tuple[int, ...]:
    if any(x.im or x.re.denominator != 1 for x in v):
        raise ValidationFailure("the vector must be integral")
    return tuple(int(x.re) for x in v)


def base_structure(inst: Instance):
    """The polarized Hodge structure at the instance base point (exact when possible)."""
    P = inst.period()
    if inst.base_point is None:
        F = inst.filtration()
        where = "reference filtration F"
    elif not inst.gamma:
        F = evaluate_nilpotent_exact(P, inst.base_point)
        where = "exp(zN)F at the base point"
    else:
        z = np.array([complex(x) for x in inst.base_point])
        F = P.evaluate(z).F
        where = "Phi(z) at the base point (float)"
    return validate_polarized_hs(P.lattice, F), where


def _require_hs(inst: Instance) -> PureHodgeStructure:
    hs, where = base_structure(inst)
    if not isinstance(hs, PureHodgeStructure):
        raise ValidationFailure(f"{where} is not a polarized Hodge structure: {hs.message}", {"ok": False, "diagnostic": hs.to_json()})
    return hs


def _schedule(inst: Instance, m_max: int):
    if inst.schedule is None:
        raise ValidationFailure("the instance has no schedule")
    s = inst.schedule
    S = dl.build_schedule(s["A"], s["t_rule"], s["w_rule"], inst.period(), m_max=m_max, Ys=inst.Yk)
    if isinstance(S, Diagnostic):
        raise ValidationFailure(S.message, {"ok": False, "diagnostic": S.to_json()})
    return S


def _K(args, inst):
    return Fraction(str(args.K)) if args.K is not None else Fraction(str(inst.param("K")))


def _R(args, inst):
    return Fraction(str(args.R)) if args.R is not None else Fraction(str(inst.param("R")))


def _m_max(args, inst):
    return int(args.m_max) if args.m_max is not None else int(inst.param("m_max"))


# ---------------------------------------------------------------------------
# commands; each returns (report dict, text lines, csv tables {name: text})


def cmd_validate(inst: Instance, args):
    hs, where = base_structure(inst)
    P = inst.period()
    hor = horizontality_check(P)
    rep = {
        "instance": inst.name,
        "checked": where,
        "valid": isinstance(hs, PureHodgeStructure),
        "monodromy_integral": P.integral_monodromy,
        "non_integral_monodromy": P.monodromy_integrality(),
        "horizontality": hor.to_json(),
    }
    if isinstance(hs, PureHodgeStructure):
        rep["hodge_numbers"] = {str(p): h for p, h in sorted(hs.hodge_numbers().items())}
        text = ["valid polarized HS", f"hodge numbers: {rep['hodge_numbers']}"]
        if not P.integral_monodromy:
            text.append(f"note: exp(N_j) is not integral for j in {rep['non_integral_monodromy']}")
        return rep, text, {}
    rep["diagnostic"] = hs.to_json()
    raise ValidationFailure(f"not a polarized HS: {hs.message}", rep)


def cmd_wf(inst: Instance, args):
    P = inst.period()
    coeffs = None
    if args.coefficients:
        coeffs = [Fraction(c) for c in args.coefficients.split(",")]
        if len(coeffs) != P.n:
            raise ValidationFailure(f"--coefficients needs {P.n} entries")
    T = P.monodromy_cone(coeffs)
    W = weight_filtration_of(T)
    bad = check_weight_axioms(W, T)
    rep = {
        "instance": inst.name,
        "W": W.to_json(),
        "gr_dims": {str(k): W.gr_dim(k) for k in W.indices()},
        "axioms_hold": bad is None,
    }
    if bad is not None:
        rep["diagnostic"] = bad.to_json()
        raise ValidationFailure(bad.message, rep)
    singles = [weight_filtration_of(Nj) for Nj in P.N]
    rep["cone_weight_equals_W_of_each_N_j"] = [Wj == W for Wj in singles]
    text = [f"weight filtration of the monodromy cone ({P.n} operators)"]
    text += [f"gr_{k}: dim {d}" for k, d in rep["gr_dims"].items() if d]
    return rep, text, {}


def cmd_deligne(inst: Instance, args):
    P = inst.period()
    M = P.limit_mhs()
    if isinstance(M, Diagnostic):
        raise ValidationFailure(M.message, {"ok": False, "diagnostic": M.to_json()})
    rep = {"instance": inst.name, "splitting": M.to_json(), "Y": M.grading().to_json()}
    text = [f"Deligne splitting ({'R-split' if M.r_split else 'not R-split'})"]
    text += [f"I^{{{p},{q}}}: dim {S.dim}" for (p, q), S in sorted(M.I.items())]
    return rep, text, {}


def cmd_norm(inst: Instance, args):
    hs = _require_hs(inst)
    h = _parse_vector(args.vector, inst.rank)
    comps, n2 = hodge_decompose_and_norm(hs, h)
    eps = epsilon_functional(hs, h)
    rep = {
        "instance": inst.name,
        "vector": [x.to_json() for x in h],
        "hodge_norm2": str(n2) if isinstance(n2, Fraction) else float(n2),
        "components": {str(p): ([x.to_json() for x in c] if hs.layer == "exact" else [numeric.fmt_complex(x) for x in c]) for p, c in sorted(comps.items())},
        "epsilon": [x.to_json() if isinstance(x, GQ) else numeric.fmt_complex(x) for x in eps],
    }
    return rep, [f"hodge norm^2 = {rep['hodge_norm2']}"], {}


def cmd_enumerate(inst: Instance, args):
    hs = _require_hs(inst)
    K, R = _K(args, inst), _R(args, inst)
    cls = enumerate_bounded_classes(hs, K, R)
    rep = {"instance": inst.name, "K": str(K), "R": str(R), "count": len(cls), "classes": [list(c) for c in cls]}
    text = [f"{len(cls)} classes"] + [" ".join(str(x) for x in c) for c in cls]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"h{i}" for i in range(inst.rank)])
    w.writerows(cls)
    return rep, text, {"classes": buf.getvalue()}


def cmd_closure(inst: Instance, args):
    P = inst.period()
    h = _parse_vector(args.vector, inst.rank)
    try:
        cs = closure_equation_system(
            P, h, degree_cap=int(inst.param("degree_cap")), samples=args.samples, seed=args.seed, tol=args.tol or 1e-8
        )
    except ClosureHypothesisError as exc:
        raise ValidationFailure(f"closure hypothesis fails: {exc}") from None
    rep = {"instance": inst.name, "system": cs.to_json(), "binomials_vanish_exactly": binomials_vanish_on_parametrization(cs)}
    text = [f"closure-1 levels: {cs.closure1}", "closure-2: " + (", ".join(str(b) for b in cs.binomials.binomials) or "none")]
    if cs.certificate:
        text.append(f"sampling certificate: {'passed' if cs.certificate['passed'] else 'FAILED'}")
    return rep, text, {}


def _candidates(inst: Instance, K, R, box, a_max):
    P = inst.period()
    out = []
    for h, a in limit_hodge_candidates(P, K, R=R, box=box, a_max=a_max):
        q = bilinear(P.lattice.Q, vec(h), vec(h)).re
        out.append({"h": list(h), "a": list(a), "self_pairing": str(q * inst.intersection_sign)})
    return out


def cmd_candidates(inst: Instance, args):
    K, R = _K(args, inst), _R(args, inst)
    box = args.box if args.box is not None else int(inst.param("box"))
    a_max = args.a_max if args.a_max is not None else int(inst.param("a_max"))
    cands = _candidates(inst, K, R, box, a_max)
    rep = {"instance": inst.name, "K": str(K), "R": str(R), "box": box, "a_max": a_max, "count": len(cands), "candidates": cands}
    text = [f"{len(cands)} candidates"] + [f"h={c['h']} a={c['a']} Q={c['self_pairing']}" for c in cands]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"h{i}" for i in range(inst.rank)] + [f"a{j + 1}" for j in range(inst.period().n)] + ["self_pairing"])
    for c in cands:
        w.writerow(c["h"] + c["a"] + [c["self_pairing"]])
    return rep, text, {"candidates": buf.getvalue()}


def _sequences(inst: Instance, args):
    seqs = list(inst.sequences)
    if args.h_rule:
        seqs = [{"name": "command_line", "h_rule": [s.strip() for s in args.h_rule.split(",")]}]
    if not seqs:
        raise ValidationFailure("the instance has no sequences (give --h-rule)")
    return seqs


def cmd_simulate(inst: Instance, args):
    m_max = _m_max(args, inst)
    S = _schedule(inst, m_max)
    sc = dl.scaling_and_limit(
        S, inst.Yk, m_max=m_max, tol=args.tol or dl.LIMIT_TOL, F_hat=inst.F_hat_filtration(), T_hat=(inst.T_hat or [None])[0]
    )
    rep = {"instance": inst.name, "schedule": S.to_json(), "scaling": sc.to_json(), "trajectories": {}}
    tables = {}
    for q in _sequences(inst, args):
        r = dl.verify_degeneration(S, q["h_rule"], q.get("b_rule"), K=None, Ys=inst.Yk, m_max=m_max, alpha_min=inst.param("alpha_min"))
        tables[q["name"]] = r.to_csv()
        rep["trajectories"][q["name"]] = {"columns": r.columns, "boundedness": r.sections["boundedness"]}
    text = [
        f"F_sharp tail {sc.tail:.3g} ({'converged' if sc.converged else 'NOT converged'})",
        f"closed form distance: {sc.closed_form_distance}",
    ]
    return rep, text, tables


def cmd_verify(inst: Instance, args):
    m_max = _m_max(args, inst)
    S = _schedule(inst, m_max)
    K = _K(args, inst)
    rep = {"instance": inst.name, "K": str(K), "schedule": S.to_json(), "sequences": {}}
    tables = {}
    text = []
    for q in _sequences(inst, args):
        try:
            r = dl.verify_degeneration(S, q["h_rule"], q.get("b_rule"), K=K, Ys=inst.Yk, m_max=m_max, alpha_min=inst.param("alpha_min"))
        except dl.CongruenceError as exc:
            raise ValidationFailure(f"sequence {q['name']}: {exc}") from None
        body = r.to_json()
        if "expect" in q:
            body["expected"] = q["expect"]
            body["as_expected"] = q["expect"] == r.verdict
        rep["sequences"][q["name"]] = body
        tables[q["name"]] = r.to_csv()
        text.append(f"{q['name']}: {r.verdict}")
    R = _R(args, inst)
    cands = _candidates(inst, K, R, int(inst.param("box")), int(inst.param("a_max")))
    listed = {tuple(c["h"]): c for c in cands}
    rep["candidates"] = {"K": str(K), "R": str(R), "count": len(cands), "list": cands}
    marked = {}
    for name, h in inst.classes.items():
        c = listed.get(tuple(h))
        q = bilinear(inst.Q, vec(h), vec(h)).re * inst.intersection_sign
        marked[name] = {"h": h, "listed": c is not None, "self_pairing": str(q)}
        text.append(f"{name} {h}: self-pairing {q}, {'listed' if c else 'NOT listed'} as a limit candidate")
    if marked:
        rep["classes"] = marked
    return rep, text, tables


HANDLERS = {
    "validate": cmd_validate,
    "wf": cmd_wf,
    "deligne": cmd_deligne,
    "norm": cmd_norm,
    "enumerate": cmd_enumerate,
    "closure": cmd_closure,
    "candidates": cmd_candidates,
    "simulate": cmd_simulate,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hodgelocus", description="Hodge classes near the boundary: exact and numerical checks.")
    p.add_argument("--version", action="version", version=f"hodgelocus {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--instance", required=True, help="instance JSON file")
        sp.add_argument("--out", help="directory for the report and CSV trajectories")
        sp.add_argument("--format", choices=("json", "csv", "text"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--m-max", type=int, dest="m_max")
        sp.add_argument("--tol", type=float)
        sp.add_argument("-K", type=str, dest="K")
        sp.add_argument("-R", type=str, dest="R")
        if name in ("norm", "closure"):
            sp.add_argument("--vector", help="comma separated rational entries")
        if name == "closure":
            sp.add_argument("--samples", type=int, default=200)
        if name == "candidates":
            sp.add_argument("--box", type=int)
            sp.add_argument("--a-max", type=int, dest="a_max")
        if name == "wf":
            sp.add_argument("--coefficients", help="positive cone coefficients, comma separated")
        if name in ("simulate", "verify"):
            sp.add_argument("--h-rule", dest="h_rule", help="comma separated rule for h(m), overrides the instance")
    return p


def _emit(args, report: dict, text: list[str], tables: dict, out=sys.stdout) -> None:
    if args.out:
        d = Path(args.out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{args.command}.json").write_text(dumps(report))
        for name, body in sorted(tables.items()):
            (d / f"{args.command}_{name}.csv").write_text(body)
    if args.format == "json":
        out.write(dumps(report))
    elif args.format == "text":
        out.write("\n".join(text) + "\n")
    else:
        if not tables:
            raise ValidationFailure(f"no CSV output for {args.command}")
        if len(tables) == 1:
            out.write(next(iter(tables.values())))
        else:
            for name, body in sorted(tables.items()):
                out.write(f"# {name}\n{body}")


def run_command(argv=None, out=sys.stdout, err=sys.stderr) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        inst = load(args.instance)
        report, text, tables = HANDLERS[args.command](inst, args)
        _emit(args, report, text, tables, out)
        return 0
    except InstanceError as exc:
        err.write(f"error: invalid instance: {exc}\n")
        return 2
    except ValidationFailure as exc:
        if args.out:
            d = Path(args.out)
            d.mkdir(parents=True, exist_ok=True)
            (d / f"{args.command}.json").write_text(dumps(exc.report))
        err.write(f"error: {exc}\n")
        return 2
    except Exception as exc:  # noqa: BLE001 - report and map to status 1
        err.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 1


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
