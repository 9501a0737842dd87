"""Sequence rules: small arithmetic expressions in the index m.

Rules come from instance files, so they are parsed with ``ast`` and walked by
hand instead of being passed to ``eval``.
"""

from __future__ import annotations

import ast
import cmath
import math
import operator
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
    ast.FloorDiv: operator.floordiv,
    ast.Mod: operator.mod,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _real_or_complex(f_real, f_complex):
    def f(x):
        if isinstance(x, complex):
            return f_complex(x)
        if isinstance(x, Fraction):
            x = float(x)
        try:
            return f_real(x)
        except ValueError:
            return f_complex(complex(x))

    return f


_FUNCS = {
    "exp": _real_or_complex(math.exp, cmath.exp),
    "log": _real_or_complex(math.log, cmath.log),
    "sqrt": _real_or_complex(math.sqrt, cmath.sqrt),
    "sin": _real_or_complex(math.sin, cmath.sin),
    "cos": _real_or_complex(math.cos, cmath.cos),
    "floor": lambda x: math.floor(x),
    "abs": abs,
}
_CONSTS = {"I": 1j, "pi": math.pi, "e": math.e}


class RuleError(ValueError):
    pass


def _check(node: ast.AST, src: str) -> None:
    for sub in ast.walk(node):
        if isinstance(sub, (ast.Expression, ast.Load, ast.operator, ast.unaryop)):
            continue
        if isinstance(sub, ast.BinOp) and type(sub.op) in _BINOPS:
            continue
        if isinstance(sub, ast.UnaryOp) and type(sub.op) in _UNARY:
            continue
        if isinstance(sub, ast.Constant) and isinstance(sub.value, (int, float, complex)):
            continue
        if isinstance(sub, ast.Name) and (sub.id == "m" or sub.id in _CONSTS or sub.id in _FUNCS):
            continue
        if (
            isinstance(sub, ast.Call)
            and isinstance(sub.func, ast.Name)
            and sub.func.id in _FUNCS
            and len(sub.args) == 1
            and not sub.keywords
        ):
            continue
        raise RuleError(f"unsupported syntax {type(sub).__name__} in rule {src!r}")


def _eval(node: ast.AST, m):
    if isinstance(node, ast.Expression):
        return _eval(node.body, m)
    if isinstance(node, ast.Constant):
        v = node.value
        return Fraction(v) if isinstance(v, int) else v
    if isinstance(node, ast.Name):
        if node.id == "m":
            return m
        return _CONSTS[node.id]
    if isinstance(node, ast.UnaryOp):
        return _UNARY[type(node.op)](_eval(node.operand, m))
    if isinstance(node, ast.BinOp):
        a, b = _eval(node.left, m), _eval(node.right, m)
        if isinstance(node.op, ast.Pow) and isinstance(a, Fraction) and isinstance(b, Fraction):
            if b.denominator != 1:
                return float(a) ** float(b)
        if isinstance(a, Fraction) and isinstance(b, (float, complex)):
            a = float(a)
        if isinstance(b, Fraction) and isinstance(a, (float, complex)):
            b = float(b)
        return _BINOPS[type(node.op)](a, b)
    if isinstance(node, ast.Call):
        return _FUNCS[node.func.id](_eval(node.args[0], m))
    raise RuleError("unreachable")  # pragma: no cover


class Rule:
    """Scalar rule m -> number.  Integer arithmetic stays exact (Fraction)."""

    def __init__(self, src):
        if isinstance(src, (int, float, complex, Fraction)):
            src = repr(src) if not isinstance(src, Fraction) else f"{src.numerator}/{src.denominator}"
        if not isinstance(src, str):
            raise RuleError(f"rule must be a string or number, got {type(src).__name__}")
        self.src = src.strip()
        try:
            self._tree = ast.parse(self.src, mode="eval")
        except SyntaxError as exc:
            raise RuleError(f"cannot parse rule {src!r}: {exc.msg}") from None
        _check(self._tree, self.src)

    def exact(self, m: int):
        """Value at m; Fraction when the expression stays rational."""
        try:
            return _eval(self._tree, Fraction(m))
        except ZeroDivisionError:
            raise RuleError(f"rule {self.src!r} divides by zero at m={m}") from None
        except OverflowError:
            return math.inf

    def __call__(self, m):
        v = self.exact(m)
        if isinstance(v, Fraction):
            return float(v)
        return v

    def __repr__(self):
        return f"Rule({self.src!r})"


class VectorRule:
    """Componentwise vector rule m -> C^k."""

    def __init__(self, srcs: Sequence):
        if isinstance(srcs, (str, int, float)):
            raise RuleError("vector rule must be a list")
        self.rules = [Rule(s) for s in srcs]
        self.src = [r.src for r in self.rules]

    def __len__(self):
        return len(self.rules)

    def __call__(self, m) -> np.ndarray:
        return np.array([complex(r(m)) for r in self.rules], dtype=complex)

    def real(self, m) -> np.ndarray:
        v = self(m)
        if np.abs(v.imag).max(initial=0) > 0:
            raise RuleError(f"rule {self.src} is not real at m={m}")
        return v.real

    def exact(self, m) -> list:
        return [r.exact(m) for r in self.rules]

    def integral(self, m) -> tuple[int, ...] | None:
        """Integer vector at m, or None when some entry is not an integer."""
        out = []
        for r in self.rules:
            v = r.exact(m)
            if isinstance(v, Fraction):
                if v.denominator != 1:
                    return None
                out.append(int(v))
            elif isinstance(v, float) and v.is_integer():
                out.append(int(v))
            else:
                return None
        return tuple(out)


def as_callable(rule) -> Callable:
    if callable(rule):
        return rule
    if isinstance(rule, (list, tuple)):
        return VectorRule(rule)
    return Rule(rule)
