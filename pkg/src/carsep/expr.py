"""Tiny expression language for operators built from generators.

``a1`` is the annihilator on mode 1 and ``ad1`` its adjoint; ``a(x)`` and
``ad(x)`` address arbitrary labels. Terms combine with ``+ - *`` (``*`` is
the operator product), complex literals and parentheses, e.g.
``"0.5*a1 + 0.5j*ad1"`` or ``"ad1*a2 - a1*ad2"``.
"""

from __future__ import annotations

import ast
import re
from numbers import Number

from .car_algebra import FermionAlgebra, OperatorElement

_NAME = re.compile(r"^(ad|a|n)(\w+)$")


class ExpressionError(ValueError):
    pass


def _label(alg: FermionAlgebra, text: str):
    for cand in (text, int(text) if text.lstrip("-").isdigit() else None):
        if cand is not None and cand in alg.labels:
            return cand
    raise ExpressionError(f"unknown mode {text!r}; algebra has {list(alg.labels)}")


def _generator(alg: FermionAlgebra, kind: str, label) -> OperatorElement:
    return {"a": alg.a, "ad": alg.adag, "n": alg.number}[kind](label)


def parse_operator(text: str, alg: FermionAlgebra) -> OperatorElement:
    """Evaluate ``text`` to an element of ``alg``."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, Number):
            return node.value
        if isinstance(node, ast.Name):
            m = _NAME.match(node.id)
            if not m:
                raise ExpressionError(f"unknown symbol {node.id!r}")
            return _generator(alg, m.group(1), _label(alg, m.group(2)))
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in ("a", "ad", "n"):
            if len(node.args) != 1 or not isinstance(node.args[0], ast.Constant):
                raise ExpressionError("generator calls take a single literal label")
            return _generator(alg, node.func.id, _label(alg, str(node.args[0].value)))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp) and isinstance(node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div)):
            left, right = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Add):
                return left + right
            if isinstance(node.op, ast.Sub):
                return left - right
            if isinstance(node.op, ast.Mult):
                return left * right
            if not isinstance(right, Number):
                raise ExpressionError("division only by scalars")
            return left / right
        raise ExpressionError(f"unsupported syntax in {text!r}")

    out = ev(tree)
    if isinstance(out, Number):
        out = out * alg.identity()
    return out
