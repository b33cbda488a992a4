"""Restricted arithmetic for user-defined aggregation maps.

Allowed: numeric constants, variables ``x1..xn``, ``+``, ``-``, ``*``,
unary minus, and ``max``/``min`` with two or more arguments. Anything else
is rejected before evaluation, so no user code ever runs.
"""
from __future__ import annotations

import ast
import re
from typing import Callable

import numpy as np

from .errors import InvalidParameterError

_VAR = re.compile(r"^x([1-9][0-9]*)$")
_BINOPS = {ast.Add: np.add, ast.Sub: np.subtract, ast.Mult: np.multiply}
_CALLS = {"max": np.maximum, "min": np.minimum}


def _compile(node, n: int) -> Callable:
    if isinstance(node, ast.Expression):
        return _compile(node.body, n)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        value = float(node.value)
        return lambda x: np.full(x.shape[:-1], value)
    if isinstance(node, ast.Name):
        m = _VAR.match(node.id)
        if not m or int(m.group(1)) > n:
            raise InvalidParameterError(f"unknown variable {node.id!r}; use x1..x{n}")
        k = int(m.group(1)) - 1
        return lambda x: x[..., k]
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        inner = _compile(node.operand, n)
        return (lambda x: -inner(x)) if isinstance(node.op, ast.USub) else inner
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _compile(node.left, n), _compile(node.right, n)
        return lambda x: op(left(x), right(x))
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _CALLS
        and not node.keywords
        and len(node.args) >= 2
    ):
        op = _CALLS[node.func.id]
        args = [_compile(a, n) for a in node.args]

        def call(x):
            out = args[0](x)
            for a in args[1:]:
                out = op(out, a(x))
            return out

        return call
    raise InvalidParameterError(f"unsupported syntax in expression: {ast.dump(node)[:60]}")


def compile_expression(text: str, n: int) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``text`` into a vectorised map from ``(..., n)`` arrays."""
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise InvalidParameterError(f"cannot parse expression: {exc.msg}") from None
    fn = _compile(tree, n)
    return lambda x: np.asarray(fn(np.asarray(x, dtype=float)), dtype=float)
