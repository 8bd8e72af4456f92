# -*- coding: utf-8 -*-
""" Bounded-width resolution closure and random sampling of implied clause sets. """
from collections import defaultdict
from dataclasses import dataclass
from dataclasses import field

from scipy.special import comb

from alfalab.formula import Clause
from alfalab.formula import negate
from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import make_rng
from alfalab.util import UnsatisfiableException

DEFAULT_MAX_POOL_SIZE = 10 ** 7


@dataclass(frozen=True)
class ModificationParams(object):
    w: int = 4
    p: float = 1.0
    shuffle: bool = True
    seed: int = 0

    def __post_init__(self):
        if int(self.w) < 1:
            raise AlfaException('Width bound must be positive, got %s' % (self.w))
        if not 0.0 < self.p <= 1.0:
            raise AlfaException('Inclusion probability must lie in (0, 1], got %s' % (self.p))


@dataclass(frozen=True)
class ResolventPool(object):
    """ Res*_w(F) minus F, in canonical clause order. """
    base: object
    width_bound: int
    clauses: tuple
    rounds: int = 0
    stats: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)


def resolve_pair(c1, c2):
    """ Returns all non-tautological resolvents of c1 and c2, one per clashing variable.

    :raises UnsatisfiableException: if the clauses resolve to the empty clause.
    """
    resolvents = set()
    second = set(c2)
    for literal in c1:
        complement = negate(literal)
        if complement not in second:
            continue
        rest = set(c1)
        rest.discard(literal)
        rest.update(lit for lit in c2 if lit != complement)
        if not rest:
            raise UnsatisfiableException('Resolved %r and %r to the empty clause' % (c1, c2))
        if any(negate(lit) in rest for lit in rest):
            continue
        resolvents.add(Clause(rest))
    return sorted(resolvents)


def _bounded_resolvents(c1, c2, w):
    # resolve_pair restricted to |R| <= w. Wider candidates are skipped before normalization.
    second = set(c2)
    for literal in c1:
        complement = negate(literal)
        if complement not in second:
            continue
        rest = set(c1)
        rest.discard(literal)
        rest.update(lit for lit in c2 if lit != complement)
        if len(rest) > w:
            continue
        if not rest:
            raise UnsatisfiableException('Resolved %r and %r to the empty clause' % (c1, c2))
        if any(negate(lit) in rest for lit in rest):
            continue
        yield Clause(rest)


def res_w_closure(formula, w, max_pool_size=DEFAULT_MAX_POOL_SIZE):
    """ Computes Res*_w(F) \\ F by semi-naive iteration.

    Each round only resolves pairs with at least one clause that was new in the previous round,
    which reaches the same fixpoint as iterating Res_w over all pairs.

    :raises UnsatisfiableException: if the empty clause is derived.
    :raises BudgetException: if the pool grows beyond max_pool_size clauses.
    """
    if int(w) < 1:
        raise AlfaException('Width bound must be positive, got %s' % (w))

    known = set(formula.clauses)
    occurrences = defaultdict(list)
    for clause in formula.clauses:
        for literal in clause:
            occurrences[literal].append(clause)

    frontier = list(formula.clauses)
    pool_size = 0
    rounds = 0
    pairs = 0
    while frontier:
        rounds += 1
        new = set()
        for clause in frontier:
            for literal in clause:
                for partner in occurrences[negate(literal)]:
                    pairs += 1
                    for resolvent in _bounded_resolvents(clause, partner, w):
                        if resolvent not in known and resolvent not in new:
                            new.add(resolvent)
        if not new:
            break
        pool_size += len(new)
        if pool_size > max_pool_size:
            raise BudgetException('Resolvent pool exceeds %d clauses after %d rounds' % (max_pool_size, rounds),
                                  {'rounds': rounds, 'pool_size': pool_size})
        frontier = sorted(new)
        known.update(frontier)
        for clause in frontier:
            for literal in clause:
                occurrences[literal].append(clause)
        alfalab_logger.debug('Closure round %d added %d resolvents' % (rounds, len(frontier)))

    pool = sorted(known - formula.clause_set)
    alfalab_logger.info('Res*_%d closure: %d resolvents in %d rounds (%d pairs inspected)' % (w, len(pool), rounds, pairs))
    return ResolventPool(base=formula, width_bound=int(w), clauses=tuple(pool), rounds=rounds,
                         stats={'pairs': pairs})


def sample_resolvent_set(pool, params, rng=None):
    """ Keeps every pool clause independently with probability params.p.

    The kept clauses come back in a uniformly random order if params.shuffle, in the pool's
    canonical order otherwise.
    """
    rng = make_rng(params.seed if rng is None else rng)
    clauses = pool.clauses
    if not clauses:
        return []
    keep = rng.random(len(clauses)) < params.p
    selected = [clause for clause, kept in zip(clauses, keep) if kept]
    if params.shuffle and selected:
        order = rng.permutation(len(selected))
        selected = [selected[i] for i in order]
    return selected


def alfa_modify(formula, params, rng=None, pool=None):
    """ Returns F ∪ L with L sampled from Res*_w(F) \\ F.

    :param pool: A precomputed ResolventPool of formula with width bound params.w. Computed when omitted.
    """
    if pool is None:
        pool = res_w_closure(formula, params.w)
    elif pool.width_bound != params.w or pool.base is not formula and pool.base != formula:
        raise AlfaException('Resolvent pool was built for a different formula or width bound')
    added = sample_resolvent_set(pool, params, rng)
    return formula.extend(added)


def naive_closure(formula, w):
    """ Res*_w(F) by iterating Res_w over all clause pairs until nothing changes. """
    current = set(formula.clauses)
    while True:
        clauses = sorted(current)
        grown = set(current)
        for i, first in enumerate(clauses):
            for second in clauses[i + 1:]:
                grown.update(_bounded_resolvents(first, second, w))
        if grown == current:
            return current
        current = grown


def pool_size_bound(num_vars, w):
    """ Number of non-tautological clauses of width at most w over num_vars variables. """
    return int(sum(comb(num_vars, k, exact=True) * 2 ** k for k in range(1, min(w, num_vars) + 1)))
