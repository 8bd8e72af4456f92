# -*- coding: utf-8 -*-
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alfalab.formula import Assignment
from alfalab.formula import Clause
from alfalab.formula import emit_dimacs
from alfalab.formula import Formula
from alfalab.formula import Literal
from alfalab.formula import load_dimacs
from alfalab.formula import negate
from alfalab.formula import parse_dimacs
from alfalab.formula import satisfies
from alfalab.formula import TautologyException
from alfalab.formula import unsat_clauses
from alfalab.formula import write_dimacs
from alfalab.util import AlfaException
from alfalab.util import DimacsParseException
from tests.conftest import formula_from_dimacs
from tests.conftest import random_formula


dimacs_literals = st.integers(min_value=1, max_value=8).flatmap(lambda v: st.sampled_from([v, -v]))


def test_clause_normalizes_order_and_duplicates():
    clause = Clause.from_dimacs([3, -1, 3, 2])
    assert clause.to_dimacs() == [-1, 2, 3]
    assert clause.width == 3
    assert clause.variables == (0, 1, 2)
    assert Clause(clause) == clause


def test_negative_literal_sorts_before_positive():
    assert Literal(0, False) < Literal(0, True) < Literal(1, False)
    assert negate(Literal(4, True)) == Literal(4, False)


def test_clause_rejects_tautology_and_empty():
    with pytest.raises(TautologyException):
        Clause.from_dimacs([1, -1, 2])
    with pytest.raises(AlfaException):
        Clause([])


@given(st.lists(dimacs_literals, min_size=1, max_size=6))
def test_normalization_is_idempotent(literals):
    if any(-v in literals for v in literals):
        with pytest.raises(TautologyException):
            Clause.from_dimacs(literals)
        return
    clause = Clause.from_dimacs(literals)
    assert Clause(clause) == clause
    assert list(clause) == sorted(set(clause))
    assert set(clause.to_dimacs()) == set(literals)


def test_formula_drops_duplicates_and_keeps_order():
    formula = formula_from_dimacs(3, [[1, 2], [3], [2, 1], [-3, 1]])
    assert formula.num_clauses == 3
    assert formula.duplicates_dropped == 1
    assert [c.to_dimacs() for c in formula] == [[1, 2], [3], [1, -3]]
    assert Clause.from_dimacs([2, 1]) in formula


def test_formula_rejects_out_of_range_variables():
    with pytest.raises(AlfaException):
        formula_from_dimacs(2, [[1, 3]])
    with pytest.raises(AlfaException):
        Formula(0)


def test_extend_appends_and_deduplicates():
    formula = formula_from_dimacs(3, [[1, 2], [3]])
    extended = formula.extend([Clause.from_dimacs([1, 2]), Clause.from_dimacs([-1, 3])])
    assert extended.num_clauses == 3
    assert extended.clauses[:2] == formula.clauses
    assert formula.num_clauses == 2


def test_evaluation():
    formula = formula_from_dimacs(3, [[1, 2], [-1, 3], [-2, -3]])
    assert satisfies(formula, Assignment.from_dimacs([1, -2, 3], 3))
    assert unsat_clauses(formula, Assignment.from_dimacs([1, 2, 3], 3)) == [2]
    assert unsat_clauses(formula, Assignment.from_dimacs([-1, -2, -3], 3)) == [0]


def test_evaluation_checks_assignment_length():
    formula = formula_from_dimacs(3, [[1, 2]])
    with pytest.raises(AlfaException):
        unsat_clauses(formula, Assignment([True, False]))


def test_empty_formula_is_satisfied_by_everything():
    assert satisfies(Formula(2), Assignment([False, False]))


def test_assignment_flip():
    assignment = Assignment([True, False])
    assignment.flip(1)
    assert assignment.to_dimacs() == [1, 2]
    assert Assignment.random(50, np.random.default_rng(0)) == Assignment.random(50, np.random.default_rng(0))


def test_parse_dimacs():
    text = 'c a comment\np cnf 3 2\n1 -2 0\n2 3\n-1 0\n'
    formula = parse_dimacs(text)
    assert formula.num_vars == 3
    assert [c.to_dimacs() for c in formula] == [[1, -2], [-1, 2, 3]]


def test_parse_dimacs_stops_at_percent():
    formula = parse_dimacs(io.StringIO('p cnf 2 1\n1 2 0\n%\n0\n'))
    assert formula.num_clauses == 1


def test_parse_dimacs_accepts_unterminated_last_clause():
    formula = parse_dimacs('p cnf 2 1\n1 2')
    assert formula.num_clauses == 1


def test_parse_dimacs_warns_on_count_mismatch(caplog):
    formula = parse_dimacs('p cnf 2 5\n1 2 0\n')
    assert formula.num_clauses == 1
    assert 'declares 5 clauses but 1 were read' in caplog.text


@pytest.mark.parametrize('text, line_number', [
    ('p cnf 2 1\np cnf 2 1\n1 0\n', 2),
    ('p dnf 2 1\n1 0\n', 1),
    ('p cnf x 1\n1 0\n', 1),
    ('1 2 0\np cnf 2 1\n', 1),
    ('p cnf 2 1\n1 3 0\n', 2),
    ('p cnf 2 1\n1 a 0\n', 2),
    ('p cnf 2 2\n1 0\n0\n', 3),
    ('p cnf 2 1\n1 -1 0\n', 2),
])
def test_parse_dimacs_errors(text, line_number):
    with pytest.raises(DimacsParseException) as excinfo:
        parse_dimacs(text)
    assert excinfo.value.line_number == line_number


def test_parse_dimacs_requires_header():
    with pytest.raises(DimacsParseException):
        parse_dimacs('c nothing here\n')


def test_emit_dimacs_is_canonical():
    formula = formula_from_dimacs(3, [[2, 1], [-3]])
    assert emit_dimacs(formula) == 'p cnf 3 2\n1 2 0\n-3 0\n'
    assert parse_dimacs(emit_dimacs(formula)) == formula


def test_dimacs_files(tmpdir):
    formula = formula_from_dimacs(4, [[1, -4], [2, 3, 4]])
    filename = write_dimacs(formula, str(tmpdir.join('f.cnf')))
    assert load_dimacs(filename) == formula
    with open(filename, 'rb') as fh:
        assert b'\r' not in fh.read()


def test_dimacs_round_trip_on_random_formulas():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(1, 21))
        formula = random_formula(rng, n, int(rng.integers(1, 61)), k=int(rng.integers(1, min(n, 4) + 1)))
        text = emit_dimacs(formula)
        parsed = parse_dimacs(io.StringIO(text))
        assert parsed == formula
        assert emit_dimacs(parsed) == text


def naive_unsat(clauses, values):
    return [index for index, clause in enumerate(clauses)
            if not any(values[abs(v) - 1] == (v > 0) for v in clause)]


def test_unsat_clauses_matches_naive_evaluation():
    rng = np.random.default_rng(8)
    for _ in range(200):
        n = int(rng.integers(1, 13))
        formula = random_formula(rng, n, int(rng.integers(1, 40)), k=min(n, 3))
        values = [bool(v) for v in rng.random(n) < 0.5]
        clauses = [clause.to_dimacs() for clause in formula]
        expected = naive_unsat(clauses, values)
        assert unsat_clauses(formula, Assignment(values)) == expected
        assert satisfies(formula, Assignment(values)) == (not expected)
