"""AST visitors for the arithmetic formula grammar used in experiment configs."""

import ast
import math
from collections.abc import Callable
from typing import Any

import numpy as np

from .errors import ConfigError

FUNCTIONS: dict[str, Callable[..., Any]] = {
    "log": np.log,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
    "min": np.minimum,
    "max": np.maximum,
}
CONSTANTS: dict[str, float] = {"e": math.e, "pi": math.pi}
INDEX_VARIABLE = "k"

_BINARY_OPS: dict[type[ast.operator], Callable[[Any, Any], Any]] = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
}


class FormulaVisitor(ast.NodeVisitor):
    """
    AST visitor that checks a parsed formula against the grammar.

    Attributes:
        variables: Free variables read by the formula (only ``k`` is admitted).
        functions: Function names called by the formula.
    """

    __slots__ = ("variables", "functions")

    def __init__(self) -> None:
        self.variables: set[str] = set()
        self.functions: set[str] = set()

    def visit_Expression(self, node: ast.Expression) -> None:
        self.visit(node.body)

    def visit_BinOp(self, node: ast.BinOp) -> None:
        """
        Visit a binary operation (``+ - * / ^``).

        Args:
            node: The BinOp node to visit.

        Raises:
            ConfigError: If the operator is outside the grammar.
        """
        if type(node.op) not in _BINARY_OPS:
            raise ConfigError(f"operator {type(node.op).__name__} is not allowed in formulas")
        self.visit(node.left)
        self.visit(node.right)

    def visit_UnaryOp(self, node: ast.UnaryOp) -> None:
        if not isinstance(node.op, ast.UAdd | ast.USub):
            raise ConfigError(f"unary {type(node.op).__name__} is not allowed in formulas")
        self.visit(node.operand)

    def visit_Call(self, node: ast.Call) -> None:
        """
        Visit a function call; only the whitelisted functions are admitted.

        Args:
            node: The Call node to visit.

        Raises:
            ConfigError: If the callee is unknown or keywords are used.
        """
        if not isinstance(node.func, ast.Name) or node.func.id not in FUNCTIONS:
            raise ConfigError(f"unknown function in formula: {ast.unparse(node.func)}")
        if node.keywords:
            raise ConfigError("keyword arguments are not allowed in formulas")
        arity = len(node.args)
        if node.func.id in {"min", "max"} and arity < 2:
            raise ConfigError(f"{node.func.id} needs at least two arguments")
        if node.func.id not in {"min", "max"} and arity != 1:
            raise ConfigError(f"{node.func.id} takes exactly one argument")
        self.functions.add(node.func.id)
        for arg in node.args:
            self.visit(arg)

    def visit_Name(self, node: ast.Name) -> None:
        if node.id == INDEX_VARIABLE:
            self.variables.add(node.id)
        elif node.id not in CONSTANTS:
            raise ConfigError(f"unknown name in formula: {node.id}")

    def visit_Constant(self, node: ast.Constant) -> None:
        if isinstance(node.value, bool) or not isinstance(node.value, int | float):
            raise ConfigError(f"literal {node.value!r} is not a number")

    def generic_visit(self, node: ast.AST) -> None:
        raise ConfigError(f"{type(node).__name__} is not allowed in formulas")


class FormulaEvaluator(ast.NodeVisitor):
    """Evaluate a checked formula tree at one index or an array of indices."""

    __slots__ = ("k",)

    def __init__(self, k: Any) -> None:
        self.k = k

    def visit_Expression(self, node: ast.Expression) -> Any:
        return self.visit(node.body)

    def visit_BinOp(self, node: ast.BinOp) -> Any:
        return _BINARY_OPS[type(node.op)](self.visit(node.left), self.visit(node.right))

    def visit_UnaryOp(self, node: ast.UnaryOp) -> Any:
        value = self.visit(node.operand)
        return -value if isinstance(node.op, ast.USub) else value

    def visit_Call(self, node: ast.Call) -> Any:
        assert isinstance(node.func, ast.Name)
        func = FUNCTIONS[node.func.id]
        values = [self.visit(arg) for arg in node.args]
        if node.func.id in {"min", "max"}:
            result = values[0]
            for value in values[1:]:
                result = func(result, value)
            return result
        return func(values[0])

    def visit_Name(self, node: ast.Name) -> Any:
        if node.id == INDEX_VARIABLE:
            return self.k
        return CONSTANTS[node.id]

    def visit_Constant(self, node: ast.Constant) -> Any:
        return float(node.value)


class Formula:
    """
    A numeric field that is either a constant or an expression in ``k``.

    ``^`` denotes exponentiation. Evaluation accepts scalars or numpy arrays.
    """

    __slots__ = ("source", "_tree", "variables")

    def __init__(self, source: str | float | int) -> None:
        """
        Parse and check a formula.

        Args:
            source: Formula text or a plain number.

        Raises:
            ConfigError: If the text is not in the grammar.
        """
        if isinstance(source, bool):
            raise ConfigError("booleans are not formulas")
        self.source = str(source)
        try:
            tree = ast.parse(self.source.replace("^", "**").strip(), mode="eval")
        except SyntaxError as err:
            raise ConfigError(f"cannot parse formula {self.source!r}: {err.msg}") from err
        visitor = FormulaVisitor()
        visitor.visit(tree)
        self._tree = tree
        self.variables = frozenset(visitor.variables)

    @property
    def is_constant(self) -> bool:
        return INDEX_VARIABLE not in self.variables

    def __call__(self, k: Any = 0) -> Any:
        with np.errstate(divide="ignore", invalid="ignore"):
            value = FormulaEvaluator(k).visit(self._tree)
        if np.ndim(value) == 0:
            return float(value)
        return np.broadcast_to(np.asarray(value, dtype=float), np.shape(k)).copy()

    def __repr__(self) -> str:
        return f"Formula({self.source!r})"
