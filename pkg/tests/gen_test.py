# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest
from scipy.special import comb
from scipy.stats import chisquare

from alfalab.formula import satisfies
from alfalab.gen import ChanceVector
from alfalab.gen import clause_count
from alfalab.gen import dpll_sat
from alfalab.gen import dpll_solve
from alfalab.gen import gen_hidden
from alfalab.gen import gen_uniform
from alfalab.gen import gen_uniform_sat
from alfalab.gen import generate
from alfalab.gen import GenSpec
from alfalab.gen import SATISFIABILITY_THRESHOLD_3SAT
from alfalab.util import AlfaException
from alfalab.util import BudgetException
from tests.conftest import formula_from_dimacs
from tests.conftest import models_of
from tests.conftest import random_formula


def test_chance_vector_validation():
    assert ChanceVector.default(3) == (0.0, 0.05, 0.25, 0.70)
    assert ChanceVector.parse('0,0.5,0.5,1').k == 3
    with pytest.raises(AlfaException):
        ChanceVector((0.1, 0.5))
    with pytest.raises(AlfaException):
        ChanceVector((0.0, 0.0, 0.0))
    with pytest.raises(AlfaException):
        ChanceVector((0.0, 1.5))


def test_default_chances_for_other_widths():
    chances = ChanceVector.default(4)
    assert chances.k == 4
    assert chances[0] == 0.0 and chances[-1] == 1.0


def test_gen_spec_validation():
    with pytest.raises(AlfaException):
        GenSpec(n=2, m=5, k=3)
    with pytest.raises(AlfaException):
        GenSpec(n=5, m=0)
    with pytest.raises(AlfaException):
        GenSpec(n=5, m=5, kind='factoring')


@pytest.mark.parametrize('seed', range(5))
def test_hidden_instances_are_satisfied_by_the_planted_assignment(seed):
    formula, planted = gen_hidden(GenSpec(n=40, m=170, seed=seed))
    assert formula.num_clauses == 170
    assert formula.duplicates_dropped == 0
    assert all(clause.width == 3 for clause in formula)
    assert satisfies(formula, planted)


def test_hidden_generator_is_deterministic():
    first = gen_hidden(GenSpec(n=20, m=60, seed=9))
    second = gen_hidden(GenSpec(n=20, m=60, seed=9))
    assert first[0] == second[0]
    assert first[1] == second[1]
    assert gen_hidden(GenSpec(n=20, m=60, seed=10))[0] != first[0]


def test_hidden_generator_follows_the_chances():
    # Only clauses with exactly three agreeing literals are accepted
    formula, planted = gen_hidden(GenSpec(n=30, m=50, seed=1), chances=(0.0, 0.0, 0.0, 1.0))
    for clause in formula:
        assert all(planted.satisfies_literal(lit) for lit in clause)


def test_hidden_generator_candidate_budget():
    # With n = k = 3 a single clause agrees fully with the planted assignment
    with pytest.raises(BudgetException):
        gen_hidden(GenSpec(n=3, m=5, seed=1), chances=(0.0, 0.0, 0.0, 1.0), max_candidates=2000)


def test_hidden_generator_checks_chance_width():
    with pytest.raises(AlfaException):
        gen_hidden(GenSpec(n=10, m=5, k=3), chances=(0.0, 1.0))


def test_uniform_instances():
    formula = gen_uniform(GenSpec(n=50, m=200, seed=3, kind='uniform'))
    assert formula.num_clauses + formula.duplicates_dropped == 200
    assert all(len(set(clause.variables)) == 3 for clause in formula)


def test_uniform_duplicates_are_merged():
    formula = gen_uniform(GenSpec(n=3, m=50, k=3, seed=0, kind='uniform'))
    assert formula.num_clauses <= 8
    assert formula.duplicates_dropped == 50 - formula.num_clauses


def test_dpll_agrees_with_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(60):
        n = int(rng.integers(3, 9))
        formula = random_formula(rng, n, int(rng.integers(n, 6 * n)))
        model = dpll_solve(formula)
        if models_of(formula):
            assert model is not None and satisfies(formula, model)
        else:
            assert model is None


def test_dpll_node_budget():
    formula = formula_from_dimacs(3, [[1, 2], [1, -2], [-1, 3], [-1, -3]])
    assert not dpll_sat(formula)
    with pytest.raises(BudgetException):
        dpll_sat(formula, max_nodes=1)


def test_clause_count():
    assert clause_count(100, SATISFIABILITY_THRESHOLD_3SAT) == 427
    assert clause_count(40, 4.267) == 171


def test_uniform_sat_filter():
    formula, draws = gen_uniform_sat(30, rng=np.random.default_rng(2))
    assert draws >= 1
    assert dpll_sat(formula)
    assert formula.num_clauses + formula.duplicates_dropped == 128


def test_uniform_sat_filter_gives_up():
    with pytest.raises(BudgetException):
        gen_uniform_sat(8, ratio=12.0, rng=np.random.default_rng(0), max_formulas=3)


def test_generate_manifest():
    formula, planted, manifest = generate(GenSpec(n=20, m=80, seed=4), chances=(0, 0.1, 0.3, 0.6))
    assert manifest['kind'] == 'hidden'
    assert manifest['chances'] == [0.0, 0.1, 0.3, 0.6]
    assert manifest['planted'] == planted.to_dimacs()
    assert manifest['effective_m'] == 80

    formula, planted, manifest = generate(GenSpec(n=20, m=1, seed=4, kind='uniform'), ratio=3.0)
    assert planted is None
    assert manifest['m'] == 60
    assert manifest['draws'] >= 1


def agreement_counts(chances, seeds, n=200, m=2000):
    counts = np.zeros(len(chances), dtype=int)
    for seed in seeds:
        formula, planted = gen_hidden(GenSpec(n=n, m=m, seed=seed), chances=chances)
        for clause in formula:
            counts[sum(1 for lit in clause if planted.satisfies_literal(lit))] += 1
    return counts


def check_acceptance_law(chances, seeds):
    # A uniform candidate has i agreeing literals with probability C(k, i) / 2^k, and is kept with q_i
    k = len(chances) - 1
    weights = np.array([comb(k, i) * q for i, q in enumerate(chances)])
    expected = weights / weights.sum()
    counts = agreement_counts(chances, seeds)
    total = counts.sum()
    for i in range(k + 1):
        bound = 4 * math.sqrt(total * expected[i] * (1 - expected[i]))
        assert abs(counts[i] - total * expected[i]) <= bound, (i, counts, expected)
    assert counts[0] == 0


@pytest.mark.parametrize('chances', [(0.0, 0.05, 0.25, 0.70), (0.0, 0.5, 0.2, 0.1)])
def test_hidden_acceptance_frequencies(chances):
    check_acceptance_law(chances, range(3))


@pytest.mark.slow
def test_hidden_acceptance_frequencies_full():
    check_acceptance_law(ChanceVector.default(3), range(50))


def check_uniform_frequencies(seeds, n=30, m=2000):
    variables = np.zeros(n, dtype=int)
    positive = 0
    for seed in seeds:
        formula = gen_uniform(GenSpec(n=n, m=m, seed=seed, kind='uniform'))
        for clause in formula:
            for lit in clause:
                variables[lit.variable] += 1
                positive += lit.polarity
    total = variables.sum()
    assert chisquare(variables).pvalue > 1e-3
    assert abs(positive - total / 2.0) <= 4 * math.sqrt(total / 4.0)


def test_uniform_variable_and_polarity_frequencies():
    check_uniform_frequencies(range(3))


@pytest.mark.slow
def test_uniform_variable_and_polarity_frequencies_full():
    check_uniform_frequencies(range(50))


def test_uniform_sat_default_seed_is_fixed():
    assert gen_uniform_sat(20)[0] == gen_uniform_sat(20)[0]
