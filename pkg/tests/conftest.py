# -*- coding: utf-8 -*-
import itertools
import logging
import math

import numpy as np
import pytest

from alfalab.formula import Assignment
from alfalab.formula import Clause
from alfalab.formula import Formula
from alfalab.formula import satisfies
from alfalab.restart import DistModel
from alfalab.util import StatsException


@pytest.fixture(scope='function', autouse=True)
def reset_loggers():
    """Prevent logging handlers from capturing temporary file handles.

    For example, a test that uses the `capsys` fixture and calls
    `logging.exception()` will initialize logging with a default handler that
    captures `sys.stderr`.  When the test ends, the file handles will be closed
    and `sys.stderr` will be returned to its original handle, but the logging
    will have a dangling reference to the temporary handle used in the `capsys`
    fixture.

    """
    logger = logging.getLogger()
    for handler in logger.handlers:
        logger.removeHandler(handler)


class WeibullModel(DistModel):
    """ Reference distribution for tests. Shape > 1 has a strictly increasing hazard rate. """
    kind = 'weibull_reference'

    def __init__(self, shape, scale=1.0):
        self.shape = float(shape)
        self.scale = float(scale)

    def cdf(self, x):
        return -math.expm1(-(x / self.scale) ** self.shape) if x > 0 else 0.0

    def sf(self, x):
        return math.exp(-(x / self.scale) ** self.shape) if x > 0 else 1.0

    def pdf(self, x):
        if x <= 0:
            return 0.0
        z = x / self.scale
        return self.shape / self.scale * z ** (self.shape - 1) * math.exp(-z ** self.shape)

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise StatsException('Quantile level must lie in (0, 1)')
        return self.scale * (-math.log1p(-p)) ** (1.0 / self.shape)

    def mean(self):
        return self.scale * math.gamma(1.0 + 1.0 / self.shape)

    def sample(self, size, rng=None):
        return self.scale * np.random.default_rng(rng).weibull(self.shape, size)


def formula_from_dimacs(num_vars, clauses):
    return Formula(num_vars, [Clause.from_dimacs(c) for c in clauses])


def all_assignments(num_vars):
    for values in itertools.product([False, True], repeat=num_vars):
        yield Assignment(values)


def models_of(formula):
    """ Satisfying assignments by full enumeration, as DIMACS literal tuples. """
    return set(tuple(a.to_dimacs()) for a in all_assignments(formula.num_vars) if satisfies(formula, a))


def random_formula(rng, num_vars, num_clauses, k=3):
    clauses = []
    for _ in range(num_clauses):
        variables = rng.choice(num_vars, size=min(k, num_vars), replace=False)
        clauses.append([int(v) + 1 if rng.random() < 0.5 else -(int(v) + 1) for v in variables])
    return formula_from_dimacs(num_vars, clauses)


# Satisfiable formulas with at most four variables, small enough for the exact flip oracle
TINY_CORPUS = [
    (2, [[1, 2], [-1, 2]]),
    (2, [[1, -2], [-1, 2], [1, 2]]),
    (3, [[1, 2, 3], [-1, -2], [-2, -3]]),
    (3, [[1], [-1, 2], [-2, 3]]),
    (3, [[1, 2], [-1, 3], [-2, -3], [2, 3]]),
    (3, [[-1, -2, -3], [1, 2], [1, 3], [2, 3]]),
    (4, [[1, 2, 3], [-1, 4], [-2, -4], [3, -4], [-3, 1]]),
    (4, [[1, -2, 3], [-1, 2, 4], [2, -3, -4], [-1, -2, 3], [1, 2, 4]]),
    (4, [[1, 2], [-1, 3], [-3, 4], [-4, -2]]),
    (4, [[-1, -2], [-2, -3], [-3, -4], [1, 3], [2, 4]]),
]


@pytest.fixture
def tiny_corpus():
    return [formula_from_dimacs(n, clauses) for n, clauses in TINY_CORPUS]


@pytest.fixture
def weibull2():
    return WeibullModel(2.0)
