"""Instance files (JSON, schema 1): parsing with field-precise errors and
canonical serialization."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .exact_core import GQ, Matrix, parse_scalar
from .hodge_core import HodgeFiltration, PolarizedLattice
from .orbits import PeriodNormalForm
from .rules import Rule, RuleError

SCHEMA = 1

DEFAULT_PARAMETERS = {
    "K": "2",
    "R": "1",
    "alpha_min": 1e-3,
    "m_max": 10000,
    "degree_cap": 8,
    "a_max": 20,
    "box": 4,
}

_TOP_KEYS = {
    "schema",
    "name",
    "description",
    "rank",
    "Q",
    "F",
    "N",
    "Gamma",
    "Yk",
    "F_hat",
    "T_hat",
    "schedule",
    "sequences",
    "parameters",
    "base_point",
    "intersection_sign",
    "classes",
}


class InstanceError(ValueError):
    def __init__(self, where: str, message: str):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where
        self.detail = message


def _scalar(x, where: str) -> GQ:
    if isinstance(x, float):
        raise InstanceError(where, f"exact entries must be integers or 'p/q' strings, got float {x!r}")
    try:
        return parse_scalar(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise InstanceError(where, f"cannot parse scalar {x!r} ({exc})") from None


def _matrix(x, where: str, shape: tuple[int, int] | None = None, integral: bool = False) -> Matrix:
    if not isinstance(x, list) or not x or not all(isinstance(r, list) for r in x):
        raise InstanceError(where, "expected a nonempty list of rows")
    rows = [[_scalar(v, f"{where}[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(x)]
    ncols = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != ncols:
            raise InstanceError(f"{where}[{i}]", f"row has {len(r)} entries, expected {ncols}")
    if shape and (len(rows), ncols) != shape:
        raise InstanceError(where, f"expected shape {shape[0]}x{shape[1]}, got {len(rows)}x{ncols}")
    if integral:
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                if v.im or v.re.denominator != 1:
                    raise InstanceError(f"{where}[{i}][{j}]", f"expected an integer, got {v}")
    return Matrix(rows)


def _levels(x, where: str, rank: int) -> dict:
    if not isinstance(x, dict) or not x:
        raise InstanceError(where, "expected an object mapping levels p to lists of basis rows")
    out = {}
    for key, rows in x.items():
        try:
            p = int(key)
        except ValueError:
            raise InstanceError(f"{where}.{key}", "level keys must be integers") from None
        if not isinstance(rows, list):
            raise InstanceError(f"{where}.{key}", "expected a list of basis rows")
        vecs = []
        for i, r in enumerate(rows):
            if not isinstance(r, list) or len(r) != rank:
                raise InstanceError(f"{where}.{key}[{i}]", f"basis row must have {rank} entries")
            vecs.append([_scalar(v, f"{where}.{key}[{i}][{j}]") for j, v in enumerate(r)])
        out[p] = vecs
    return out


def _rule_list(x, where: str, length: int | None = None) -> list[str]:
    if not isinstance(x, list):
        raise InstanceError(where, "expected a list of rule strings")
    if length is not None and len(x) != length:
        raise InstanceError(where, f"expected {length} components, got {len(x)}")
    out = []
    for i, r in enumerate(x):
        if isinstance(r, bool) or not isinstance(r, (str, int)):
            raise InstanceError(f"{where}[{i}]", "rule components must be strings or integers")
        try:
            Rule(r)
        except RuleError as exc:
            raise InstanceError(f"{where}[{i}]", str(exc)) from None
        out.append(str(r))
    return out


def _levels_json(levels: dict) -> dict:
    return {str(p): [[x.to_json() for x in r] for r in rows] for p, rows in sorted(levels.items(), reverse=True)}


@dataclass
class Instance:
    name: str
    rank: int
    Q: Matrix
    F: dict  # p -> list of rows (GQ)
    N: list
    gamma: list  # [(exponent tuple, Matrix)]
    Yk: list | None = None
    F_hat: dict | None = None
    T_hat: list | None = None
    schedule: dict | None = None
    sequences: list = field(default_factory=list)
    parameters: dict = field(default_factory=dict)
    base_point: list | None = None  # GQ per variable
    intersection_sign: int = 1
    classes: dict = field(default_factory=dict)
    description: str = ""

    # -- module inputs ----------------------------------------------------

    def lattice(self) -> PolarizedLattice:
        return PolarizedLattice(self.Q)

    def filtration(self) -> HodgeFiltration:
        return HodgeFiltration(self.F, self.rank)

    def period(self) -> PeriodNormalForm:
        return PeriodNormalForm(self.lattice(), self.filtration(), self.N, self.gamma, name=self.name)

    def param(self, key):
        return self.parameters.get(key, DEFAULT_PARAMETERS.get(key))

    def F_hat_filtration(self) -> HodgeFiltration | None:
        return None if self.F_hat is None else HodgeFiltration(self.F_hat, self.rank)

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "schema": SCHEMA,
            "name": self.name,
            "rank": self.rank,
            "Q": self.Q.to_json(),
            "F": _levels_json(self.F),
            "N": [M.to_json() for M in self.N],
            "Gamma": [{"exponent": list(e), "coeff": C.to_json()} for e, C in self.gamma],
        }
        if self.description:
            out["description"] = self.description
        if self.Yk is not None:
            out["Yk"] = [Y.to_json() for Y in self.Yk]
        if self.F_hat is not None:
            out["F_hat"] = _levels_json(self.F_hat)
        if self.T_hat is not None:
            out["T_hat"] = [T.to_json() for T in self.T_hat]
        if self.schedule is not None:
            out["schedule"] = self.schedule
        if self.sequences:
            out["sequences"] = self.sequences
        if self.parameters:
            out["parameters"] = self.parameters
        if self.base_point is not None:
            out["base_point"] = [x.to_json() for x in self.base_point]
        if self.intersection_sign != 1:
            out["intersection_sign"] = self.intersection_sign
        if self.classes:
            out["classes"] = self.classes
        return out

    def dumps(self) -> str:
        return dumps(self.to_json())


def dumps(doc) -> str:
    """Deterministic JSON text."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def from_json(doc) -> Instance:
    if not isinstance(doc, dict):
        raise InstanceError("", "instance must be a JSON object")
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise InstanceError(unknown[0], "unknown field")
    if doc.get("schema") != SCHEMA:
        raise InstanceError("schema", f"expected schema {SCHEMA}, got {doc.get('schema')!r}")
    for key in ("rank", "Q", "F", "N"):
        if key not in doc:
            raise InstanceError(key, "missing required field")
    rank = doc["rank"]
    if isinstance(rank, bool) or not isinstance(rank, int) or rank <= 0:
        raise InstanceError("rank", "expected a positive integer")
    Q = _matrix(doc["Q"], "Q", (rank, rank))
    if not Q.is_real():
        raise InstanceError("Q", "the polarization must be rational")
    F = _levels(doc["F"], "F", rank)
    if not isinstance(doc["N"], list):
        raise InstanceError("N", "expected a list of integer matrices")
    N = [_matrix(M, f"N[{j}]", (rank, rank), integral=True) for j, M in enumerate(doc["N"])]
    n = len(N)
    gamma = []
    G = doc.get("Gamma", [])
    if not isinstance(G, list):
        raise InstanceError("Gamma", "expected a list of {exponent, coeff} terms")
    for i, term in enumerate(G):
        where = f"Gamma[{i}]"
        if not isinstance(term, dict) or set(term) != {"exponent", "coeff"}:
            raise InstanceError(where, "expected an object with keys exponent and coeff")
        e = term["exponent"]
        if not isinstance(e, list) or len(e) != n or not all(isinstance(x, int) and x >= 0 for x in e):
            raise InstanceError(f"{where}.exponent", f"expected {n} nonnegative integers")
        if not any(e):
            raise InstanceError(f"{where}.exponent", "Gamma(0) must vanish; the zero exponent is not allowed")
        gamma.append((tuple(e), _matrix(term["coeff"], f"{where}.coeff", (rank, rank))))
    inst = Instance(doc.get("name", ""), rank, Q, F, N, gamma, description=doc.get("description", ""))
    if "Yk" in doc:
        if not isinstance(doc["Yk"], list):
            raise InstanceError("Yk", "expected a list of matrices")
        inst.Yk = [_matrix(Y, f"Yk[{k}]", (rank, rank)) for k, Y in enumerate(doc["Yk"])]
    if "F_hat" in doc:
        inst.F_hat = _levels(doc["F_hat"], "F_hat", rank)
    if "T_hat" in doc:
        if not isinstance(doc["T_hat"], list):
            raise InstanceError("T_hat", "expected a list of matrices")
        inst.T_hat = [_matrix(T, f"T_hat[{k}]", (rank, rank)) for k, T in enumerate(doc["T_hat"])]
    if "schedule" in doc:
        inst.schedule = _schedule(doc["schedule"], n)
    if "sequences" in doc:
        seqs = doc["sequences"]
        if isinstance(seqs, dict):
            seqs = [seqs]
        if not isinstance(seqs, list):
            raise InstanceError("sequences", "expected an object or a list of objects")
        inst.sequences = [_sequence(s, f"sequences[{i}]", rank) for i, s in enumerate(seqs)]
    if "parameters" in doc:
        inst.parameters = _parameters(doc["parameters"])
    if "base_point" in doc:
        bp = doc["base_point"]
        if not isinstance(bp, list) or len(bp) != n:
            raise InstanceError("base_point", f"expected {n} entries")
        inst.base_point = [_scalar(x, f"base_point[{j}]") for j, x in enumerate(bp)]
        if any(x.im <= 0 for x in inst.base_point):
            raise InstanceError("base_point", "the base point must lie in the upper half plane")
    if "intersection_sign" in doc:
        s = doc["intersection_sign"]
        if s not in (1, -1):
            raise InstanceError("intersection_sign", "expected 1 or -1")
        inst.intersection_sign = s
    if "classes" in doc:
        c = doc["classes"]
        if not isinstance(c, dict):
            raise InstanceError("classes", "expected an object mapping names to integer vectors")
        for k, v in c.items():
            if not isinstance(v, list) or len(v) != rank or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
                raise InstanceError(f"classes.{k}", f"expected {rank} integers")
        inst.classes = {k: list(v) for k, v in sorted(c.items())}
    # the mathematical checks live in the modules; rephrase their errors by field
    try:
        inst.lattice()
    except ValueError as exc:
        raise InstanceError("Q", str(exc)) from None
    try:
        inst.filtration()
    except ValueError as exc:
        raise InstanceError("F", str(exc)) from None
    try:
        inst.period()
    except ValueError as exc:
        raise InstanceError("Gamma" if "Gamma" in str(exc) else "N", str(exc)) from None
    return inst


def _schedule(x, n: int) -> dict:
    if not isinstance(x, dict):
        raise InstanceError("schedule", "expected an object with A, t_rule, w_rule")
    for key in ("A", "t_rule"):
        if key not in x:
            raise InstanceError(f"schedule.{key}", "missing required field")
    unknown = sorted(set(x) - {"A", "t_rule", "w_rule"})
    if unknown:
        raise InstanceError(f"schedule.{unknown[0]}", "unknown field")
    A = x["A"]
    if not isinstance(A, list) or len(A) != n or not all(isinstance(r, list) for r in A):
        raise InstanceError("schedule.A", f"expected {n} rows")
    d = len(A[0]) if A else 0
    rows = []
    for j, r in enumerate(A):
        if len(r) != d or d == 0:
            raise InstanceError(f"schedule.A[{j}]", f"expected {d} entries")
        row = []
        for k, a in enumerate(r):
            v = _scalar(a, f"schedule.A[{j}][{k}]")
            if v.im or v.re < 0:
                raise InstanceError(f"schedule.A[{j}][{k}]", "entries must be nonnegative rationals")
            row.append(str(v.re))
        rows.append(row)
    t = _rule_list(x["t_rule"], "schedule.t_rule", d)
    w = _rule_list(x.get("w_rule", ["0"] * n), "schedule.w_rule", n)
    return {"A": rows, "t_rule": t, "w_rule": w}


def _sequence(x, where: str, rank: int) -> dict:
    if not isinstance(x, dict) or "h_rule" not in x:
        raise InstanceError(where, "expected an object with h_rule")
    unknown = sorted(set(x) - {"name", "h_rule", "b_rule", "expect"})
    if unknown:
        raise InstanceError(f"{where}.{unknown[0]}", "unknown field")
    out = {"name": str(x.get("name", where)), "h_rule": _rule_list(x["h_rule"], f"{where}.h_rule", rank)}
    if "b_rule" in x:
        out["b_rule"] = _rule_list(x["b_rule"], f"{where}.b_rule", rank)
    if "expect" in x:
        out["expect"] = str(x["expect"])
    return out


def _parameters(x) -> dict:
    if not isinstance(x, dict):
        raise InstanceError("parameters", "expected an object")
    out = {}
    for k, v in x.items():
        if k not in DEFAULT_PARAMETERS:
            raise InstanceError(f"parameters.{k}", "unknown parameter")
        if k in ("K", "R"):
            s = _scalar(v, f"parameters.{k}")
            if s.im or s.re < 0:
                raise InstanceError(f"parameters.{k}", "expected a nonnegative rational")
            out[k] = str(s.re)
        elif k == "alpha_min":
            if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
                raise InstanceError(f"parameters.{k}", "expected a positive number")
            out[k] = float(v)
        else:
            if isinstance(v, bool) or not isinstance(v, int) or v <= 0:
                raise InstanceError(f"parameters.{k}", "expected a positive integer")
            out[k] = v
    return out


def loads(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"line {exc.lineno} column {exc.colno}", exc.msg) from None
    return from_json(doc)


def load(path) -> Instance:
    path = Path(path)
    if not path.exists():
        bundled = fixture_path(path.name)
        if bundled is not None and path.parent.name == "fixtures":
            path = bundled
    try:
        text = path.read_text()
    except OSError as exc:
        raise InstanceError(str(path), f"cannot read instance ({exc.strerror})") from None
    return loads(text)


def fixture_path(name: str) -> Path | None:
    if not name.endswith(".json"):
        name += ".json"
    p = resources.files("hodgelocus") / "fixtures" / name
    return Path(str(p)) if p.is_file() else None


def fixture_names() -> list[str]:
    d = resources.files("hodgelocus") / "fixtures"
    return sorted(p.name[:-5] for p in d.iterdir() if p.name.endswith(".json"))


def load_fixture(name: str) -> Instance:
    p = fixture_path(name)
    if p is None:
        raise InstanceError(name, "no such bundled fixture")
    return load(p)


def scalar_fraction(s) -> Fraction:
    return Fraction(str(s))
