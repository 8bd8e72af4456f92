# -*- coding: utf-8 -*-
""" Flip-counting stochastic local search solvers.

A run starts from a uniformly random complete assignment and flips one variable of a randomly
chosen unsatisfied clause per step. Only flips are counted; re-initializations are free.
"""
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import spsolve

from alfalab.formula import Assignment
from alfalab.formula import unsat_clauses
from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import make_rng
from alfalab.util import UnsatisfiableException

SOLVED = 'solved'
FLIP_BUDGET_EXHAUSTED = 'flip_budget_exhausted'

DEFAULT_MAX_FLIPS = 10 ** 10
MAX_ORACLE_VARS = 12


@dataclass
class SolveOutcome(object):
    status: str
    flips: int
    satisfying_assignment: object = None
    attempts: int = 1

    @property
    def solved(self):
        return self.status == SOLVED


@dataclass(frozen=True)
class ProbSatParams(object):
    """ Break-only probSAT weighting. Defaults are the usual 3-SAT polynomial settings. """
    cb: float = 2.3
    eps: float = 0.9
    function_kind: str = 'polynomial'

    def __post_init__(self):
        if self.function_kind == 'polynomial':
            if self.cb <= 0:
                raise AlfaException('Polynomial probSAT needs cb > 0, got %s' % (self.cb))
            if self.eps < 0:
                raise AlfaException('probSAT needs eps >= 0, got %s' % (self.eps))
            if self.eps == 0:
                alfalab_logger.warning('eps = 0 gives break-free variables an infinite weight')
        elif self.function_kind == 'exponential':
            if self.cb <= 1:
                raise AlfaException('Exponential probSAT needs cb > 1, got %s' % (self.cb))
        else:
            raise AlfaException('Unknown probSAT function kind %r' % (self.function_kind))

    def weight(self, breaks):
        if self.function_kind == 'polynomial':
            return (self.eps + breaks) ** -self.cb
        return self.cb ** -breaks


class UniformStream(object):
    """ Buffered uniform floats from a numpy Generator. Calling the Generator once per flip is
    slower than the flip itself. """

    def __init__(self, rng, block=256):
        self.rng = rng
        self.block = block
        self.buffer = []
        self.position = 0

    def next(self):
        if self.position >= len(self.buffer):
            self.buffer = self.rng.random(self.block).tolist()
            self.position = 0
        value = self.buffer[self.position]
        self.position += 1
        return value

    def below(self, k):
        return min(int(self.next() * k), k - 1)


class WalkState(object):
    """ Assignment plus per-clause true-literal counters and the list of unsatisfied clauses.

    Counters are updated on every flip, so break values and the unsatisfied set never need a
    full rescan.
    """

    def __init__(self, formula, stream=None):
        self.num_vars = formula.num_vars
        self.stream = stream
        self.clauses = [tuple((lit.variable, lit.polarity) for lit in clause) for clause in formula.clauses]
        self.occurrences = [[] for _ in range(self.num_vars)]
        for index, clause in enumerate(self.clauses):
            for variable, polarity in clause:
                self.occurrences[variable].append((index, polarity))
        self.values = [False] * self.num_vars
        self.true_count = [0] * len(self.clauses)
        self.unsat = []
        self.unsat_position = [-1] * len(self.clauses)

    def set_values(self, values):
        self.values = [bool(v) for v in values]
        self.unsat = []
        for index, clause in enumerate(self.clauses):
            count = sum(1 for variable, polarity in clause if self.values[variable] == polarity)
            self.true_count[index] = count
            if count == 0:
                self.unsat_position[index] = len(self.unsat)
                self.unsat.append(index)
            else:
                self.unsat_position[index] = -1

    def randomize(self):
        self.set_values([self.stream.next() < 0.5 for _ in range(self.num_vars)])

    def _add_unsat(self, index):
        self.unsat_position[index] = len(self.unsat)
        self.unsat.append(index)

    def _remove_unsat(self, index):
        position = self.unsat_position[index]
        last = self.unsat.pop()
        if last != index:
            self.unsat[position] = last
            self.unsat_position[last] = position
        self.unsat_position[index] = -1

    def flip(self, variable):
        value = not self.values[variable]
        self.values[variable] = value
        true_count = self.true_count
        for index, polarity in self.occurrences[variable]:
            if polarity == value:
                true_count[index] += 1
                if true_count[index] == 1:
                    self._remove_unsat(index)
            else:
                true_count[index] -= 1
                if true_count[index] == 0:
                    self._add_unsat(index)

    def break_count(self, variable):
        """ Number of satisfied clauses that flipping variable would falsify. """
        value = self.values[variable]
        true_count = self.true_count
        return sum(1 for index, polarity in self.occurrences[variable]
                   if polarity == value and true_count[index] == 1)

    def pick_unsat(self):
        return self.unsat[self.stream.below(len(self.unsat))]

    def assignment(self):
        return Assignment(self.values)


class SlsSolver(object):
    """ Base class of the flip-counting solvers.

    Subclasses implement ``variable_weights``. Weights need not be normalized; the variable to flip
    is drawn from the cumulative weights.

    :param options: A dictionary of solver options, usually ``solver_options`` of an experiment.
    """
    name = None
    required_options = frozenset()

    def __init__(self, options=None):
        self.options = dict(options or {})

    def variable_weights(self, state, clause_index):
        """ Returns one weight per variable of clause clause_index under the current state. """
        raise NotImplementedError()

    def reinit_period(self, formula):
        """ Flips after which the walk restarts from a fresh random assignment, or None. """
        return None

    def choose_variable(self, state, clause_index):
        clause = state.clauses[clause_index]
        weights = self.variable_weights(state, clause_index)
        threshold = state.stream.next() * sum(weights)
        cumulative = 0.0
        for (variable, _), weight in zip(clause, weights):
            cumulative += weight
            if threshold < cumulative:
                return variable
        return clause[-1][0]

    def describe(self):
        return dict(self.options, solver=self.name)

    def solve(self, formula, rng, max_flips=DEFAULT_MAX_FLIPS):
        """ Runs until the formula is satisfied or max_flips flips were performed. """
        stream = UniformStream(make_rng(rng))
        state = WalkState(formula, stream)
        state.randomize()
        period = self.reinit_period(formula)
        flips = 0
        since_init = 0
        while state.unsat and flips < max_flips:
            if period and since_init >= period:
                state.randomize()
                since_init = 0
                continue
            clause_index = state.pick_unsat()
            state.flip(self.choose_variable(state, clause_index))
            flips += 1
            since_init += 1

        if state.unsat:
            return SolveOutcome(FLIP_BUDGET_EXHAUSTED, flips)
        assignment = state.assignment()
        if unsat_clauses(formula, assignment):
            raise AlfaException('%s reported a model that does not satisfy the formula' % (self.name))
        return SolveOutcome(SOLVED, flips, assignment)


class SrwaSolver(SlsSolver):
    """ Schöning's random walk: flip a uniformly random variable of a uniformly random unsatisfied
    clause, re-initializing every ``restart_period`` flips (default 3n, 0 or None disables). """
    name = 'srwa'

    def reinit_period(self, formula):
        period = self.options.get('restart_period', '3n')
        if period in (None, 0, 'none'):
            return None
        if isinstance(period, str):
            if not period.endswith('n'):
                raise AlfaException('restart_period must be an integer or "<factor>n", got %r' % (period))
            try:
                factor = float(period[:-1] or 1)
            except ValueError:
                raise AlfaException('restart_period must be an integer or "<factor>n", got %r' % (period))
            return max(1, int(round(factor * formula.num_vars)))
        return int(period)

    def variable_weights(self, state, clause_index):
        return [1.0] * len(state.clauses[clause_index])

    def choose_variable(self, state, clause_index):
        clause = state.clauses[clause_index]
        return clause[state.stream.below(len(clause))][0]


class ProbSatSolver(SlsSolver):
    """ probSAT: a variable of the chosen clause is flipped with probability proportional to
    g(break), g polynomial (eps + b)^-cb or exponential cb^-b. """
    name = 'probsat'

    def __init__(self, options=None):
        super(ProbSatSolver, self).__init__(options)
        self.params = ProbSatParams(cb=float(self.options.get('cb', 2.3)),
                                    eps=float(self.options.get('eps', 0.9)),
                                    function_kind=self.options.get('function_kind', 'polynomial'))
        self._weights = {}

    @classmethod
    def from_params(cls, params):
        return cls({'cb': params.cb, 'eps': params.eps, 'function_kind': params.function_kind})

    def weight(self, breaks):
        weight = self._weights.get(breaks)
        if weight is None:
            weight = self._weights[breaks] = self.params.weight(breaks)
        return weight

    def variable_weights(self, state, clause_index):
        return [self.weight(state.break_count(variable)) for variable, _ in state.clauses[clause_index]]


def srwa_solve(formula, rng, max_flips=DEFAULT_MAX_FLIPS, restart_period='3n'):
    return SrwaSolver({'restart_period': restart_period}).solve(formula, rng, max_flips)


def probsat_solve(formula, params=None, rng=None, max_flips=DEFAULT_MAX_FLIPS):
    return ProbSatSolver.from_params(params or ProbSatParams()).solve(formula, rng, max_flips)


def run_with_restarts(solver, formula, cutoff, rng, max_total_flips=DEFAULT_MAX_FLIPS):
    """ Runs solver with flip budget cutoff from fresh random assignments until one attempt succeeds.

    The returned flips are the total over all attempts. A cutoff of None or infinity is a plain run.

    :raises BudgetException: if max_total_flips flips are spent without success.
    """
    rng = make_rng(rng)
    if cutoff is None or cutoff == math.inf:
        return solver.solve(formula, rng, max_total_flips)
    cutoff = int(cutoff)
    if cutoff < 1:
        raise AlfaException('Restart cutoff must be at least 1, got %s' % (cutoff))

    total = 0
    attempts = 0
    while total < max_total_flips:
        attempts += 1
        outcome = solver.solve(formula, rng, min(cutoff, max_total_flips - total))
        total += outcome.flips
        if outcome.solved:
            return SolveOutcome(SOLVED, total, outcome.satisfying_assignment, attempts)
    raise BudgetException('No success within %d flips over %d attempts of cutoff %d' % (total, attempts, cutoff),
                          {'attempts': attempts, 'flips': total})


def _oracle_solver(solver_kind, params):
    if isinstance(solver_kind, SlsSolver):
        return solver_kind
    if solver_kind == 'srwa':
        return SrwaSolver(params if isinstance(params, dict) else {'restart_period': None})
    if solver_kind == 'probsat':
        if isinstance(params, dict):
            return ProbSatSolver(params)
        return ProbSatSolver.from_params(params or ProbSatParams())
    raise AlfaException('Unknown solver kind %r' % (solver_kind,))


def expected_flips_oracle(formula, solver_kind='srwa', params=None):
    """ Exact expected number of flips of a solver on a tiny formula.

    Solves the linear system of the walk's Markov chain over all 2^n assignments, satisfying
    assignments absorbing, averaged over the uniform initial assignment. With a re-initialization
    period P the state is (assignment, flips since the last re-initialization).

    :param solver_kind: 'srwa', 'probsat' or an SlsSolver instance.
    :param params: srwa options dict or ProbSatParams. A bare 'srwa' has no re-initialization.
    :raises BudgetException: if the formula has more than MAX_ORACLE_VARS variables.
    :raises UnsatisfiableException: if no assignment satisfies the formula.
    """
    solver = _oracle_solver(solver_kind, params)
    n = formula.num_vars
    if n > MAX_ORACLE_VARS:
        raise BudgetException('State space of 2^%d assignments is too large for the oracle' % (n), {'num_vars': n})

    count = 1 << n
    state = WalkState(formula)
    transitions = {}
    for code in range(count):
        state.set_values([(code >> v) & 1 for v in range(n)])
        if not state.unsat:
            continue
        moves = defaultdict(float)
        share = 1.0 / len(state.unsat)
        for clause_index in state.unsat:
            weights = solver.variable_weights(state, clause_index)
            total = float(sum(weights))
            for (variable, _), weight in zip(state.clauses[clause_index], weights):
                moves[code ^ (1 << variable)] += share * weight / total
        transitions[code] = moves
    if len(transitions) == count:
        raise UnsatisfiableException('The oracle needs a satisfiable formula')
    if not transitions:
        return 0.0

    period = solver.reinit_period(formula)
    transient = sorted(transitions)
    if not period:
        index = {code: i for i, code in enumerate(transient)}
        rows, cols, data = [], [], []
        for code in transient:
            row = index[code]
            rows.append(row)
            cols.append(row)
            data.append(1.0)
            for target, probability in transitions[code].items():
                if target in index:
                    rows.append(row)
                    cols.append(index[target])
                    data.append(-probability)
        size = len(transient)
        matrix = csr_matrix((data, (rows, cols)), shape=(size, size))
        expected = spsolve(matrix, np.ones(size))
        return float(np.sum(expected) / count)

    # Unknowns: E(a, c) for transient a and 0 <= c <= period, plus R = mean over a of E(a, 0).
    width = period + 1
    index = {code: i for i, code in enumerate(transient)}
    size = len(transient) * width + 1
    restart_unknown = size - 1
    rows, cols, data = [], [], []
    rhs = np.zeros(size)
    for code in transient:
        base = index[code] * width
        for phase in range(width):
            row = base + phase
            rows.append(row)
            cols.append(row)
            data.append(1.0)
            if phase == period:
                rows.append(row)
                cols.append(restart_unknown)
                data.append(-1.0)
                continue
            rhs[row] = 1.0
            for target, probability in transitions[code].items():
                if target in index:
                    rows.append(row)
                    cols.append(index[target] * width + phase + 1)
                    data.append(-probability)
    rows.append(restart_unknown)
    cols.append(restart_unknown)
    data.append(1.0)
    for code in transient:
        rows.append(restart_unknown)
        cols.append(index[code] * width)
        data.append(-1.0 / count)
    matrix = csr_matrix((data, (rows, cols)), shape=(size, size))
    expected = spsolve(matrix, rhs)
    return float(expected[restart_unknown])
