# -*- coding: utf-8 -*-
""" Instance generators: hidden-solution k-SAT, uniform random k-SAT and a DPLL satisfiability filter. """
from dataclasses import dataclass

from alfalab.formula import Assignment
from alfalab.formula import Clause
from alfalab.formula import Formula
from alfalab.formula import Literal
from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import make_rng

SATISFIABILITY_THRESHOLD_3SAT = 4.267
DEFAULT_MAX_CANDIDATES = 10 ** 7
DEFAULT_MAX_NODES = 10 ** 6
DEFAULT_MAX_FORMULAS = 1000

GENERATOR_KINDS = ('hidden', 'uniform')


class ChanceVector(tuple):
    """ Acceptance probabilities q_0..q_k of a hidden-solution candidate clause, indexed by the
    number of its literals that agree with the planted assignment. """

    def __new__(cls, chances):
        chances = tuple(float(q) for q in chances)
        if len(chances) < 2:
            raise AlfaException('A chance vector needs entries for 0..k agreeing literals')
        if any(q < 0.0 or q > 1.0 for q in chances):
            raise AlfaException('Chances must lie in [0, 1]: %s' % (chances,))
        if chances[0] != 0.0:
            raise AlfaException('q_0 must be 0, a clause without agreeing literals falsifies the planted assignment')
        if not any(q > 0.0 for q in chances[1:]):
            raise AlfaException('At least one of q_1..q_k must be positive')
        return super(ChanceVector, cls).__new__(cls, chances)

    @property
    def k(self):
        return len(self) - 1

    @classmethod
    def default(cls, k):
        if k == 3:
            return cls((0.0, 0.05, 0.25, 0.70))
        # Linear ramp for other widths; there is no established default.
        return cls([0.0] + [i / float(k) for i in range(1, k + 1)])

    @classmethod
    def parse(cls, text):
        return cls(float(q) for q in text.split(','))


@dataclass(frozen=True)
class GenSpec(object):
    n: int
    m: int
    k: int = 3
    seed: int = 0
    kind: str = 'hidden'

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise AlfaException('Unknown generator kind %r, expected one of %s' % (self.kind, ', '.join(GENERATOR_KINDS)))
        if self.n < 1 or self.k < 1 or self.k > self.n:
            raise AlfaException('Need 1 <= k <= n, got k=%s n=%s' % (self.k, self.n))
        if self.m < 1:
            raise AlfaException('Need m >= 1, got %s' % (self.m))


def _candidate_clause(n, k, rng):
    variables = rng.choice(n, size=k, replace=False)
    polarities = rng.random(k) < 0.5
    return [Literal(int(v), bool(p)) for v, p in zip(variables, polarities)]


def gen_hidden(spec, chances=None, rng=None, max_candidates=DEFAULT_MAX_CANDIDATES):
    """ Generates a formula with a planted solution.

    Candidates are drawn like uniform k-SAT clauses and accepted with probability q_i, where i is
    the number of literals that agree with the planted assignment. Duplicates of an accepted clause
    are not accepted again, so the formula has exactly spec.m clauses.

    :returns: (formula, planted assignment)
    :raises BudgetException: after max_candidates candidates without reaching m clauses.
    """
    chances = ChanceVector.default(spec.k) if chances is None else ChanceVector(chances)
    if chances.k != spec.k:
        raise AlfaException('Chance vector is for k=%d, spec asks for k=%d' % (chances.k, spec.k))
    rng = make_rng(spec.seed if rng is None else rng)

    planted = Assignment.random(spec.n, rng)
    accepted = []
    seen = set()
    candidates = 0
    duplicates = 0
    while len(accepted) < spec.m:
        if candidates >= max_candidates:
            raise BudgetException('Accepted only %d of %d clauses after %d candidates' % (len(accepted), spec.m, candidates),
                                  {'accepted': len(accepted), 'candidates': candidates})
        candidates += 1
        literals = _candidate_clause(spec.n, spec.k, rng)
        agreeing = sum(1 for lit in literals if planted.satisfies_literal(lit))
        if rng.random() >= chances[agreeing]:
            continue
        clause = Clause(literals)
        if clause in seen:
            duplicates += 1
            continue
        seen.add(clause)
        accepted.append(clause)

    if duplicates:
        alfalab_logger.warning('Hidden-solution generator skipped %d duplicate clauses' % (duplicates))
    alfalab_logger.info('Generated hidden-solution instance n=%d m=%d k=%d from %d candidates' %
                        (spec.n, spec.m, spec.k, candidates))
    return Formula(spec.n, accepted), planted


def gen_uniform(spec, rng=None):
    """ Generates m uniform random k-clauses, variables drawn without replacement within a clause.

    Repeated clauses are merged by Formula, so the result may hold fewer than m clauses.
    """
    rng = make_rng(spec.seed if rng is None else rng)
    clauses = [Clause(_candidate_clause(spec.n, spec.k, rng)) for _ in range(spec.m)]
    formula = Formula(spec.n, clauses)
    if formula.duplicates_dropped:
        alfalab_logger.warning('Uniform generator merged %d duplicate clauses, effective m=%d' %
                               (formula.duplicates_dropped, formula.num_clauses))
    return formula


def _dpll(clauses, assignment, budget):
    """ Recursive DPLL over DIMACS-style integer clauses. Returns a model dict or None. """
    budget['nodes'] += 1
    if budget['nodes'] > budget['limit']:
        raise BudgetException('DPLL node budget of %d exceeded' % (budget['limit']), {'nodes': budget['nodes']})

    assignment = dict(assignment)
    while True:
        simplified = []
        unit = None
        for clause in clauses:
            remaining = []
            satisfied = False
            for lit in clause:
                value = assignment.get(abs(lit))
                if value is None:
                    remaining.append(lit)
                elif value == (lit > 0):
                    satisfied = True
                    break
            if satisfied:
                continue
            if not remaining:
                return None
            if len(remaining) == 1 and unit is None:
                unit = remaining[0]
            simplified.append(remaining)
        clauses = simplified
        if unit is None:
            break
        assignment[abs(unit)] = unit > 0

    if not clauses:
        return assignment

    # Branch on the most frequent variable of the shortest clauses.
    shortest = min(len(c) for c in clauses)
    counts = {}
    for clause in clauses:
        if len(clause) == shortest:
            for lit in clause:
                counts[lit] = counts.get(lit, 0) + 1
    branch = max(sorted(counts), key=lambda lit: counts[lit])
    for value in (branch > 0, branch < 0):
        trial = dict(assignment)
        trial[abs(branch)] = value
        model = _dpll(clauses, trial, budget)
        if model is not None:
            return model
    return None


def dpll_solve(formula, max_nodes=DEFAULT_MAX_NODES):
    """ Complete search with unit propagation and branching.

    :returns: A satisfying Assignment or None if the formula is unsatisfiable.
    :raises BudgetException: if more than max_nodes search nodes are needed.
    """
    clauses = [clause.to_dimacs() for clause in formula.clauses]
    model = _dpll(clauses, {}, {'nodes': 0, 'limit': max_nodes})
    if model is None:
        return None
    return Assignment([model.get(v + 1, False) for v in range(formula.num_vars)])


def dpll_sat(formula, max_nodes=DEFAULT_MAX_NODES):
    return dpll_solve(formula, max_nodes) is not None


def clause_count(n, ratio):
    return int(round(ratio * n))


def gen_uniform_sat(n, ratio=SATISFIABILITY_THRESHOLD_3SAT, k=3, rng=0, max_formulas=DEFAULT_MAX_FORMULAS,
                    max_nodes=DEFAULT_MAX_NODES):
    """ Draws uniform formulas with m = round(ratio * n) until one is satisfiable.

    :param rng: A Generator or a seed. The default seed 0 keeps direct calls reproducible.

    :returns: (formula, number of formulas drawn)
    :raises BudgetException: if none of max_formulas formulas is satisfiable.
    """
    if ratio <= 0:
        raise AlfaException('Clause-to-variable ratio must be positive, got %s' % (ratio))
    rng = make_rng(rng)
    spec = GenSpec(n=n, m=clause_count(n, ratio), k=k, kind='uniform')
    for attempt in range(1, max_formulas + 1):
        formula = gen_uniform(spec, rng)
        if dpll_sat(formula, max_nodes):
            alfalab_logger.info('Found a satisfiable uniform formula after %d draws' % (attempt))
            return formula, attempt
    raise BudgetException('No satisfiable formula among %d draws (n=%d, ratio=%s)' % (max_formulas, n, ratio),
                          {'draws': max_formulas})


def generate(spec, chances=None, ratio=None, rng=None):
    """ Dispatches on spec.kind. Returns (formula, planted assignment or None, manifest dict). """
    rng = make_rng(spec.seed if rng is None else rng)
    manifest = {'kind': spec.kind, 'n': spec.n, 'm': spec.m, 'k': spec.k, 'seed': spec.seed}
    if spec.kind == 'hidden':
        chances = ChanceVector.default(spec.k) if chances is None else ChanceVector(chances)
        formula, planted = gen_hidden(spec, chances, rng)
        manifest['chances'] = list(chances)
        manifest['planted'] = planted.to_dimacs()
    else:
        planted = None
        if ratio is not None:
            formula, draws = gen_uniform_sat(spec.n, ratio, spec.k, rng)
            manifest['ratio'] = ratio
            manifest['m'] = clause_count(spec.n, ratio)
            manifest['draws'] = draws
        else:
            formula = gen_uniform(spec, rng)
    manifest['effective_m'] = formula.num_clauses
    return formula, planted, manifest
