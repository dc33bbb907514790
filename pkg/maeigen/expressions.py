"""Safe evaluation of user formulas such as ``exp(x) * (1 - 2*t)``.

Formulas are parsed once, checked against a whitelist of syntax nodes and
names, then evaluated with ``eval`` and an empty ``__builtins__`` on numpy
arrays, one call per batch of points.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from maeigen.errors import InvalidSpec

_FUNCTIONS: dict[str, Any] = {
    "sqrt": np.sqrt,
    "exp": np.exp,
    "log": np.log,
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "arctan": np.arctan,
    "arctan2": np.arctan2,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "abs": np.abs,
    "minimum": np.minimum,
    "maximum": np.maximum,
    "where": np.where,
    "clip": np.clip,
}
_CONSTANTS = {"pi": np.pi, "e": np.e}

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Call,
    ast.Name,
    ast.Load,
    ast.Constant,
    ast.Compare,
    ast.IfExp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.Mod,
    ast.USub,
    ast.UAdd,
    ast.Lt,
    ast.LtE,
    ast.Gt,
    ast.GtE,
)

# largest literal exponent allowed in a power
_MAX_EXPONENT = 64


@dataclass(frozen=True)
class Expression:
    """A compiled formula in the variables ``x``, ``y``, ``r`` and ``t``."""

    text: str
    variables: frozenset[str]
    _code: Any = field(repr=False, compare=False)

    def __call__(self, points: np.ndarray, t: np.ndarray | float | None = None) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        scope: dict[str, Any] = {**_FUNCTIONS, **_CONSTANTS}
        scope["x"] = points[:, 0]
        scope["y"] = points[:, 1] if points.shape[1] > 1 else np.zeros(len(points))
        scope["r"] = np.sqrt(np.sum(points**2, axis=1))
        scope["t"] = np.zeros(len(points)) if t is None else np.asarray(t, dtype=float)
        try:
            value = eval(self._code, {"__builtins__": {}}, scope)
        except Exception as exc:  # noqa: BLE001 - any evaluation failure is a bad formula
            raise InvalidSpec(f"cannot evaluate {self.text!r}: {exc}") from exc
        return np.broadcast_to(np.asarray(value, dtype=float), (len(points),)).copy()

    @property
    def uses_t(self) -> bool:
        return "t" in self.variables


def _check_power(node: ast.BinOp, text: str) -> None:
    exponent = list(ast.walk(node.right))
    if any(isinstance(n, ast.Name) for n in exponent):
        return
    nested = any(isinstance(n, ast.BinOp) and isinstance(n.op, ast.Pow) for n in exponent)
    too_big = any(isinstance(n, ast.Constant) and abs(n.value) > _MAX_EXPONENT for n in exponent)
    if nested or too_big:
        raise InvalidSpec(f"constant exponent in {text!r} exceeds {_MAX_EXPONENT}")


def compile_expression(text: str, allowed: tuple[str, ...] = ("x", "y", "r", "t")) -> Expression:
    """Parse and validate ``text``; raise :class:`InvalidSpec` on anything outside the whitelist."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise InvalidSpec(f"cannot parse expression {text!r}: {exc.msg}") from exc

    used: set[str] = set()
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise InvalidSpec(f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Call) and not (
            isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS
        ):
            raise InvalidSpec(f"unsupported function call in {text!r}")
        if isinstance(node, ast.Name) and node.id not in _FUNCTIONS and node.id not in _CONSTANTS:
            if node.id not in allowed:
                raise InvalidSpec(f"unknown name {node.id!r} in {text!r} (allowed: {', '.join(allowed)})")
            used.add(node.id)
        if isinstance(node, ast.Constant) and (isinstance(node.value, bool) or not isinstance(node.value, (int, float))):
            raise InvalidSpec(f"only numeric literals are allowed in {text!r}")
        if isinstance(node, ast.BinOp) and isinstance(node.op, ast.Pow):
            _check_power(node, text)

    return Expression(text=text.strip(), variables=frozenset(used), _code=compile(tree, "<expression>", "eval"))
