import ast
import math
from typing import Sequence

import numpy as np

from deepteam.exceptions import ModelValidationError

_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Add, ast.Sub, ast.Mult, ast.Div,
    ast.USub, ast.UAdd, ast.Constant, ast.Call, ast.Name, ast.Load,
)
_FUNCTIONS = {"D", "Z", "clamp", "min", "max", "abs"}


def clamp(value: float, low: float = 0.0, high: float = 1.0) -> float:
    return min(max(value, low), high)


class _Resolver(ast.NodeTransformer):
    """Заменяет D("k","x","u") и Z("k","x") на обращения по индексам."""

    def __init__(self, path: str, alphabets: dict[str, tuple[int, Sequence[str], Sequence[str]]]):
        self.path = path
        self.alphabets = alphabets

    def _symbols(self, node: ast.Call) -> list[str]:
        if node.keywords or not all(isinstance(a, ast.Constant) and isinstance(a.value, str) for a in node.args):
            raise ModelValidationError(f"{self.path}: {node.func.id}() takes string symbol arguments only")
        return [a.value for a in node.args]

    def _lookup(self, symbol: str, alphabet: Sequence[str], what: str) -> int:
        if symbol not in alphabet:
            raise ModelValidationError(f"{self.path}: {what} {symbol!r} is not in alphabet {list(alphabet)}")
        return list(alphabet).index(symbol)

    def _subpop(self, name: str) -> tuple[int, Sequence[str], Sequence[str]]:
        if name not in self.alphabets:
            raise ModelValidationError(f"{self.path}: unknown sub-population {name!r}")
        return self.alphabets[name]

    def visit_Call(self, node: ast.Call):
        if node.func.id == "D":
            args = self._symbols(node)
            if len(args) != 3:
                raise ModelValidationError(f"{self.path}: D() takes (subpop, state, action)")
            k, states, actions = self._subpop(args[0])
            x = self._lookup(args[1], states, "state")
            u = self._lookup(args[2], actions, "action")
            return ast.copy_location(_index_call("_d", k, x, u), node)
        if node.func.id == "Z":
            args = self._symbols(node)
            if len(args) != 2:
                raise ModelValidationError(f"{self.path}: Z() takes (subpop, state)")
            k, states, _ = self._subpop(args[0])
            x = self._lookup(args[1], states, "state")
            return ast.copy_location(_index_call("_z", k, x), node)
        self.generic_visit(node)
        return node


def _index_call(name: str, *indices: int) -> ast.Call:
    return ast.Call(func=ast.Name(id=name, ctx=ast.Load()),
                    args=[ast.Constant(value=i) for i in indices], keywords=[])


class Expression:
    """
    Арифметическое выражение над координатами D.

    Грамматика: числа, + - * /, унарный минус, t, вызовы D(k, x, u), Z(k, x),
    clamp(v[, lo, hi]), min, max, abs. Символы разрешаются при компиляции.
    """

    def __init__(self, source: str, path: str, alphabets: dict[str, tuple[int, Sequence[str], Sequence[str]]]):
        self.source = source
        self.path = path
        try:
            tree = ast.parse(source.strip(), mode="eval")
        except SyntaxError as e:
            raise ModelValidationError(f"{path}: cannot parse expression {source!r}: {e.msg}") from None
        for node in ast.walk(tree):
            if not isinstance(node, _ALLOWED):
                raise ModelValidationError(f"{path}: construct {type(node).__name__} is not allowed in {source!r}")
            if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCTIONS):
                raise ModelValidationError(f"{path}: unknown function in {source!r}")
            if isinstance(node, ast.Name) and node.id not in _FUNCTIONS | {"t"}:
                raise ModelValidationError(f"{path}: unknown name {node.id!r} in {source!r}")
            if isinstance(node, ast.Constant) and isinstance(node.value, bool):
                raise ModelValidationError(f"{path}: boolean constants are not allowed in {source!r}")
        tree = ast.fix_missing_locations(_Resolver(path, alphabets).visit(tree))
        if any(isinstance(n, ast.Constant) and isinstance(n.value, str) for n in ast.walk(tree)):
            raise ModelValidationError(f"{path}: string constants are only allowed inside D() and Z() in {source!r}")
        self.reads_distribution = any(isinstance(n, ast.Name) and n.id in ("_d", "_z") for n in ast.walk(tree))
        self._code = compile(tree, filename=path, mode="eval")

    def evaluate(self, t: int, dist: Sequence[np.ndarray]) -> float:
        namespace = {
            "__builtins__": {},
            "_d": lambda k, x, u: float(dist[k][x, u]),
            "_z": lambda k, x: float(dist[k][x].sum()),
            "clamp": clamp, "min": min, "max": max, "abs": abs, "t": t,
        }
        try:
            value = float(eval(self._code, namespace))
        except ZeroDivisionError:
            value = math.nan
        return value

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"
