# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from alfalab.formula import Formula
from alfalab.formula import satisfies
from alfalab.formula import unsat_clauses
from alfalab.gen import gen_hidden
from alfalab.gen import GenSpec
from alfalab.sls import expected_flips_oracle
from alfalab.sls import FLIP_BUDGET_EXHAUSTED
from alfalab.sls import probsat_solve
from alfalab.sls import ProbSatParams
from alfalab.sls import ProbSatSolver
from alfalab.sls import run_with_restarts
from alfalab.sls import SOLVED
from alfalab.sls import srwa_solve
from alfalab.sls import SrwaSolver
from alfalab.sls import UniformStream
from alfalab.sls import WalkState
from alfalab.util import AlfaException
from alfalab.util import BudgetException
from alfalab.util import derive_seed
from alfalab.util import UnsatisfiableException
from tests.conftest import formula_from_dimacs

UNSAT = formula_from_dimacs(2, [[1, 2], [1, -2], [-1, 2], [-1, -2]])


@pytest.fixture
def hidden():
    return gen_hidden(GenSpec(n=30, m=120, seed=12))[0]


def oracle_solvers():
    return [SrwaSolver(), SrwaSolver({'restart_period': None}), ProbSatSolver(),
            ProbSatSolver({'cb': 2.0, 'function_kind': 'exponential'})]


@pytest.mark.parametrize('solve', [
    lambda f, rng: srwa_solve(f, rng),
    lambda f, rng: probsat_solve(f, rng=rng),
])
def test_solvers_find_models(hidden, solve):
    outcome = solve(hidden, np.random.default_rng(1))
    assert outcome.status == SOLVED
    assert outcome.solved
    assert satisfies(hidden, outcome.satisfying_assignment)
    assert outcome.flips > 0


def test_solvers_are_deterministic(hidden):
    first = SrwaSolver().solve(hidden, np.random.default_rng(derive_seed(0, 1, 1)))
    second = SrwaSolver().solve(hidden, np.random.default_rng(derive_seed(0, 1, 1)))
    assert first.flips == second.flips
    assert first.satisfying_assignment == second.satisfying_assignment


def test_flip_budget_is_reported_not_raised():
    outcome = ProbSatSolver().solve(UNSAT, np.random.default_rng(0), max_flips=500)
    assert outcome.status == FLIP_BUDGET_EXHAUSTED
    assert outcome.flips == 500
    assert outcome.satisfying_assignment is None


def test_reinitialization_is_not_a_flip():
    outcome = SrwaSolver({'restart_period': 2}).solve(UNSAT, np.random.default_rng(0), max_flips=101)
    assert outcome.flips == 101


def test_empty_formula_needs_no_flips():
    outcome = SrwaSolver().solve(Formula(3), np.random.default_rng(0))
    assert outcome.solved
    assert outcome.flips == 0


@pytest.mark.parametrize('period, expected', [('3n', 90), ('1.5n', 45), ('n', 30), (17, 17), (None, None),
                                              (0, None), ('none', None)])
def test_reinit_period(hidden, period, expected):
    assert SrwaSolver({'restart_period': period}).reinit_period(hidden) == expected


def test_reinit_period_rejects_garbage(hidden):
    with pytest.raises(AlfaException):
        SrwaSolver({'restart_period': 'often'}).reinit_period(hidden)


def test_probsat_weights():
    polynomial = ProbSatParams(cb=2.3, eps=0.9)
    assert polynomial.weight(0) == pytest.approx(0.9 ** -2.3)
    assert polynomial.weight(2) == pytest.approx(2.9 ** -2.3)
    exponential = ProbSatParams(cb=2.5, function_kind='exponential')
    assert exponential.weight(3) == pytest.approx(2.5 ** -3)
    solver = ProbSatSolver({'cb': 3, 'eps': 1.0})
    assert solver.weight(1) == pytest.approx(2.0 ** -3)


@pytest.mark.parametrize('options', [
    {'cb': 0},
    {'eps': -1},
    {'cb': 1.0, 'function_kind': 'exponential'},
    {'function_kind': 'sigmoid'},
])
def test_probsat_params_validation(options):
    with pytest.raises(AlfaException):
        ProbSatSolver(options)


def test_walk_state_counters_match_rescan(hidden):
    rng = np.random.default_rng(5)
    state = WalkState(hidden, UniformStream(rng))
    state.randomize()
    for _ in range(300):
        state.flip(int(rng.integers(hidden.num_vars)))
        assignment = state.assignment()
        assert sorted(state.unsat) == unsat_clauses(hidden, assignment)
        for index in state.unsat:
            assert state.unsat_position[index] == state.unsat.index(index)
    for variable in range(hidden.num_vars):
        flipped = state.assignment()
        flipped.flip(variable)
        now_false = set(unsat_clauses(hidden, flipped)) - set(state.unsat)
        assert state.break_count(variable) == len(now_false)


def test_uniform_stream_below():
    stream = UniformStream(np.random.default_rng(0), block=7)
    draws = [stream.below(3) for _ in range(3000)]
    assert set(draws) == set([0, 1, 2])
    assert abs(draws.count(0) / 3000.0 - 1 / 3.0) < 0.04


def test_run_with_restarts(hidden):
    plain = run_with_restarts(SrwaSolver(), hidden, None, np.random.default_rng(3))
    direct = SrwaSolver().solve(hidden, np.random.default_rng(3))
    assert plain.flips == direct.flips

    restarted = run_with_restarts(ProbSatSolver(), hidden, 40, np.random.default_rng(3))
    assert restarted.solved
    assert satisfies(hidden, restarted.satisfying_assignment)
    assert restarted.flips <= 40 * restarted.attempts


def test_run_with_restarts_budget():
    with pytest.raises(BudgetException) as excinfo:
        run_with_restarts(SrwaSolver(), UNSAT, 10, np.random.default_rng(0), max_total_flips=95)
    assert excinfo.value.context['flips'] == 95
    assert excinfo.value.context['attempts'] == 10
    with pytest.raises(AlfaException):
        run_with_restarts(SrwaSolver(), UNSAT, 0, np.random.default_rng(0))


def test_oracle_hand_computed():
    # From 00 one flip reaches 10 or 01, each one flip away from 11
    formula = formula_from_dimacs(2, [[1], [2]])
    for solver in oracle_solvers():
        assert expected_flips_oracle(formula, solver) == pytest.approx(1.0)
    assert expected_flips_oracle(formula_from_dimacs(1, [[1]])) == pytest.approx(0.5)


def test_oracle_edge_cases():
    assert expected_flips_oracle(Formula(2)) == 0.0
    with pytest.raises(UnsatisfiableException):
        expected_flips_oracle(UNSAT)
    with pytest.raises(BudgetException):
        expected_flips_oracle(gen_hidden(GenSpec(n=13, m=20, seed=0))[0])
    with pytest.raises(AlfaException):
        expected_flips_oracle(UNSAT, 'walksat')


def test_oracle_with_a_long_reinitialization_period():
    formula = formula_from_dimacs(3, [[1, 2, 3], [-1, -2], [-2, -3]])
    without = expected_flips_oracle(formula, SrwaSolver({'restart_period': None}))
    assert expected_flips_oracle(formula, 'srwa') == pytest.approx(without)
    assert expected_flips_oracle(formula, SrwaSolver({'restart_period': 100})) == pytest.approx(without, rel=1e-6)


def check_against_oracle(formulas, runs, tolerance):
    for index, formula in enumerate(formulas):
        for solver in oracle_solvers():
            expected = expected_flips_oracle(formula, solver)
            flips = np.array([solver.solve(formula, np.random.default_rng(derive_seed(index, 1, j))).flips
                              for j in range(runs)], dtype=float)
            standard_error = flips.std(ddof=1) / math.sqrt(runs)
            assert abs(flips.mean() - expected) <= tolerance * standard_error + 1e-12, (formula, solver.describe())


def test_empirical_flips_match_oracle(tiny_corpus):
    check_against_oracle(tiny_corpus, 2000, 4.0)


@pytest.mark.slow
def test_empirical_flips_match_oracle_full(tiny_corpus):
    check_against_oracle(tiny_corpus, 100000, 4.0)


class RecordingSrwaSolver(SrwaSolver):
    """ Records the position of every flipped variable within its clause. """

    def __init__(self, options=None):
        super(RecordingSrwaSolver, self).__init__(options)
        self.positions = []

    def choose_variable(self, state, clause_index):
        variable = super(RecordingSrwaSolver, self).choose_variable(state, clause_index)
        clause = state.clauses[clause_index]
        self.positions.append([lit.variable for lit in clause].index(variable))
        return variable


def check_selection_law(runs, max_flips):
    # Every sign pattern over x1, x2, x3 keeps the walk going until the budget runs out
    signs = [(a, b, c) for a in (1, -1) for b in (1, -1) for c in (1, -1)]
    formula = formula_from_dimacs(5, [[a * 1, b * 2, c * 3] for a, b, c in signs] + [[a * 3, b * 4, c * 5] for a, b, c in signs])
    solver = RecordingSrwaSolver()
    for j in range(runs):
        solver.solve(formula, np.random.default_rng(derive_seed(6, 1, j)), max_flips)
    counts = np.bincount(solver.positions, minlength=3)
    assert counts.sum() == runs * max_flips
    assert chisquare(counts).pvalue > 1e-3


def test_srwa_flips_a_uniform_variable_of_the_clause():
    check_selection_law(5, 2000)


@pytest.mark.slow
def test_srwa_flips_a_uniform_variable_of_the_clause_full():
    check_selection_law(50, 20000)


def restarted_flips(solver, formula, cutoff, runs, base):
    return np.array([run_with_restarts(solver, formula, cutoff, np.random.default_rng(derive_seed(base, 2, j))).flips
                     for j in range(runs)], dtype=float)


def test_restarts_on_a_unit_clause():
    # Either the initial assignment satisfies x1 or one flip does
    formula = formula_from_dimacs(1, [[1]])
    flips = restarted_flips(SrwaSolver(), formula, 1, 20000, 0)
    assert set(np.unique(flips)) <= set([0.0, 1.0])
    assert abs(flips.mean() - 0.5) <= 4 * math.sqrt(0.25 / 20000)


def check_restart_identity(runs):
    # E[X_t] = E[min(X, t)] / P(X <= t) for i.i.d. attempts of the plain walk X
    formula = formula_from_dimacs(3, [[1, 2, 3], [-1, -2], [-2, -3], [1, 3]])
    solver = SrwaSolver({'restart_period': None})
    plain = np.array([solver.solve(formula, np.random.default_rng(derive_seed(9, 1, j))).flips for j in range(runs)],
                     dtype=float)
    for cutoff in (1, 2, 4):
        capped, success = np.minimum(plain, cutoff), (plain <= cutoff).astype(float)
        predicted = capped.mean() / success.mean()
        predicted_se = (capped - predicted * success).std(ddof=1) / (math.sqrt(runs) * success.mean())
        restarted = restarted_flips(solver, formula, cutoff, runs, cutoff)
        restarted_se = restarted.std(ddof=1) / math.sqrt(runs)
        assert abs(restarted.mean() - predicted) <= 4 * math.hypot(predicted_se, restarted_se), cutoff


def test_restarted_mean_matches_plain_distribution():
    check_restart_identity(5000)


@pytest.mark.slow
def test_restarted_mean_matches_plain_distribution_full():
    check_restart_identity(100000)
