"""Tests for the formula grammar visitors."""

import ast
import math

import numpy as np
import pytest

from random_series_lab.errors import ConfigError
from random_series_lab.visitor import Formula, FormulaVisitor


class TestFormulaVisitor:
    """Test suite for FormulaVisitor."""

    def test_collects_index_variable(self):
        """Test that reads of k are recorded."""
        visitor = FormulaVisitor()
        visitor.visit(ast.parse("1/sqrt(k+1)", mode="eval"))

        assert visitor.variables == {"k"}
        assert visitor.functions == {"sqrt"}

    def test_constants_are_not_variables(self):
        """Test that e and pi are constants, not free variables."""
        visitor = FormulaVisitor()
        visitor.visit(ast.parse("e*pi", mode="eval"))

        assert visitor.variables == set()

    def test_unknown_name_rejected(self):
        """Test that names other than k and the constants are rejected."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError, match="unknown name"):
            visitor.visit(ast.parse("n+1", mode="eval"))

    def test_unknown_function_rejected(self):
        """Test that calls outside the whitelist are rejected."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError, match="unknown function"):
            visitor.visit(ast.parse("sin(k)", mode="eval"))

    def test_attribute_access_rejected(self):
        """Test that attribute access is outside the grammar."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError):
            visitor.visit(ast.parse("np.log(k)", mode="eval"))

    def test_modulo_rejected(self):
        """Test that operators outside + - * / ^ are rejected."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError, match="not allowed"):
            visitor.visit(ast.parse("k % 2", mode="eval"))

    def test_arity_checked(self):
        """Test that single-argument functions reject extra arguments."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError, match="exactly one"):
            visitor.visit(ast.parse("log(k, 2)", mode="eval"))

    def test_string_literal_rejected(self):
        """Test that non-numeric literals are rejected."""
        visitor = FormulaVisitor()

        with pytest.raises(ConfigError, match="not a number"):
            visitor.visit(ast.parse("'k'", mode="eval"))


class TestFormula:
    """Test suite for Formula."""

    def test_plain_number(self):
        """Test that a plain number is a constant formula."""
        formula = Formula(0.5)

        assert formula.is_constant
        assert formula() == 0.5

    def test_caret_is_power(self):
        """Test that ^ means exponentiation."""
        formula = Formula("(k+1)^2")

        assert formula(3) == 16.0

    def test_log_weight(self):
        """Test a logarithmic weight schedule."""
        formula = Formula("log(k+2)")

        assert formula(0) == pytest.approx(math.log(2))

    def test_array_evaluation(self):
        """Test that arrays of indices evaluate elementwise."""
        formula = Formula("1/sqrt(k+1)")

        values = formula(np.arange(4))

        np.testing.assert_allclose(values, [1.0, 1 / math.sqrt(2), 1 / math.sqrt(3), 0.5])

    def test_constant_broadcasts_over_array(self):
        """Test that a constant formula broadcasts to the index shape."""
        values = Formula("2")(np.arange(5))

        assert values.shape == (5,)
        assert np.all(values == 2.0)

    def test_min_max(self):
        """Test variadic min and max."""
        assert Formula("min(k, 3, 5)")(10) == 3.0
        assert Formula("max(k, 3)")(1) == 3.0

    def test_unary_minus(self):
        """Test negation."""
        assert Formula("-k")(2) == -2.0

    def test_syntax_error(self):
        """Test that unparsable text raises ConfigError."""
        with pytest.raises(ConfigError, match="cannot parse"):
            Formula("k +")

    def test_boolean_rejected(self):
        """Test that booleans are not accepted as numbers."""
        with pytest.raises(ConfigError):
            Formula(True)

    def test_repr(self):
        """Test the repr shows the source text."""
        assert repr(Formula("k+1")) == "Formula('k+1')"
