"""Small whitelisted expression grammar for closed forms in config files.

Allowed: numbers, the variables passed in, ``pi``, ``+ - * /``, powers
(``**`` or ``^``), and the functions ``abs sin cos exp min max``.
Everything evaluates element-wise on numpy arrays.
"""
from __future__ import annotations

import ast
import operator

import numpy as np

__all__ = ["Expression", "ExpressionError"]


class ExpressionError(ValueError):
    pass


_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: np.power,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


def _reduce(fn):
    def call(*args):
        if len(args) < 2:
            raise ExpressionError("min/max need at least two arguments")
        out = args[0]
        for a in args[1:]:
            out = fn(out, a)
        return out
    return call


_FUNCS = {
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "min": _reduce(np.minimum),
    "max": _reduce(np.maximum),
}
_CONSTS = {"pi": np.pi}


class Expression:
    """Parsed expression over a fixed set of variable names."""

    def __init__(self, text: str, variables):
        self.text = str(text)
        self.variables = tuple(variables)
        try:
            tree = ast.parse(self.text.replace("^", "**"), mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {self.text!r}: {exc.msg}") from None
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"literal {node.value!r} not allowed")
        elif isinstance(node, ast.Name):
            if node.id not in self.variables and node.id not in _CONSTS:
                raise ExpressionError(f"unknown name {node.id!r} in {self.text!r}")
        elif isinstance(node, ast.BinOp):
            if type(node.op) not in _BINOPS:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed")
            self._check(node.operand)
        elif isinstance(node, ast.Call):
            if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCS:
                raise ExpressionError(f"call not allowed in {self.text!r}")
            if node.keywords:
                raise ExpressionError("keyword arguments not allowed")
            for a in node.args:
                self._check(a)
        else:
            raise ExpressionError(f"syntax {type(node).__name__} not allowed in {self.text!r}")

    def _eval(self, node, env):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return env[node.id] if node.id in env else _CONSTS[node.id]
        if isinstance(node, ast.BinOp):
            return _BINOPS[type(node.op)](self._eval(node.left, env), self._eval(node.right, env))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, env))
        return _FUNCS[node.func.id](*(self._eval(a, env) for a in node.args))

    def __call__(self, **env):
        missing = [v for v in self.variables if v not in env]
        if missing:
            raise ExpressionError(f"missing variables {missing}")
        with np.errstate(all="ignore"):
            return self._eval(self._tree, env)

    def __repr__(self):
        return f"Expression({self.text!r})"
