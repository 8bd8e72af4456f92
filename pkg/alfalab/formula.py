# -*- coding: utf-8 -*-
""" CNF formulas, assignments and DIMACS interchange.

Variables are 0-based inside the package and 1-based in DIMACS text. The conversion happens
only in :func:`parse_dimacs`, :func:`emit_dimacs` and the ``*_dimacs`` helpers of the types.
"""
import io
from collections import namedtuple

import numpy as np

from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import DimacsParseException

# Tuple order (variable, polarity) is the canonical literal order: ascending by variable,
# negative before positive on ties.
Literal = namedtuple('Literal', ['variable', 'polarity'])


class TautologyException(AlfaException):
    """ A clause contains a variable with both polarities. """
    pass


def negate(literal):
    return Literal(literal.variable, not literal.polarity)


def literal_from_dimacs(value):
    return Literal(abs(value) - 1, value > 0)


def literal_to_dimacs(literal):
    return literal.variable + 1 if literal.polarity else -(literal.variable + 1)


class Clause(tuple):
    """ An immutable, normalized disjunction of literals.

    Construction merges duplicate literals, sorts them canonically and rejects tautologies and
    empty clauses. Normalizing a Clause again returns an equal Clause.
    """

    def __new__(cls, literals):
        normalized = sorted(set(Literal(int(v), bool(p)) for v, p in literals))
        if not normalized:
            raise AlfaException('Empty clause')
        for first, second in zip(normalized, normalized[1:]):
            if first.variable == second.variable:
                raise TautologyException('Tautological clause on variable %d' % (first.variable + 1))
        return super(Clause, cls).__new__(cls, normalized)

    @classmethod
    def from_dimacs(cls, values):
        return cls(literal_from_dimacs(v) for v in values)

    def to_dimacs(self):
        return [literal_to_dimacs(lit) for lit in self]

    @property
    def width(self):
        return len(self)

    @property
    def variables(self):
        return tuple(lit.variable for lit in self)

    def __repr__(self):
        return 'Clause(%s)' % (' '.join(str(v) for v in self.to_dimacs()))


class Formula(object):
    """ A CNF formula over ``num_vars`` variables.

    Clauses keep their insertion order; later duplicates of an already stored clause are dropped
    and counted in ``duplicates_dropped``.
    """

    def __init__(self, num_vars, clauses=()):
        if int(num_vars) < 1:
            raise AlfaException('A formula needs at least one variable, got %s' % (num_vars))
        self.num_vars = int(num_vars)
        stored = []
        seen = set()
        dropped = 0
        for clause in clauses:
            if not isinstance(clause, Clause):
                clause = Clause(clause)
            if clause[-1].variable >= self.num_vars:
                raise AlfaException('Clause %r uses a variable beyond num_vars=%d' % (clause, self.num_vars))
            if clause in seen:
                dropped += 1
                continue
            seen.add(clause)
            stored.append(clause)
        self.clauses = tuple(stored)
        self.duplicates_dropped = dropped
        self._clause_set = frozenset(seen)

    @property
    def num_clauses(self):
        return len(self.clauses)

    @property
    def clause_set(self):
        return self._clause_set

    def __len__(self):
        return len(self.clauses)

    def __iter__(self):
        return iter(self.clauses)

    def __contains__(self, clause):
        return clause in self._clause_set

    def __eq__(self, other):
        if not isinstance(other, Formula):
            return NotImplemented
        return self.num_vars == other.num_vars and self.clauses == other.clauses

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __hash__(self):
        return hash((self.num_vars, self.clauses))

    def __repr__(self):
        return 'Formula(n=%d, m=%d)' % (self.num_vars, self.num_clauses)

    def extend(self, clauses):
        """ Returns F ∪ clauses, the new clauses appended after the existing ones. """
        return Formula(self.num_vars, self.clauses + tuple(clauses))


class Assignment(object):
    """ A complete truth assignment. Mutable; owned by one solver run at a time. """

    def __init__(self, values):
        self.values = np.array(values, dtype=bool)

    @classmethod
    def random(cls, num_vars, rng):
        return cls(rng.random(num_vars) < 0.5)

    @classmethod
    def from_dimacs(cls, literals, num_vars):
        values = np.zeros(num_vars, dtype=bool)
        for value in literals:
            if value != 0:
                values[abs(value) - 1] = value > 0
        return cls(values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, variable):
        return bool(self.values[variable])

    def __eq__(self, other):
        if not isinstance(other, Assignment):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    def __ne__(self, other):
        result = self.__eq__(other)
        return result if result is NotImplemented else not result

    def __repr__(self):
        return 'Assignment(%s)' % (''.join('1' if v else '0' for v in self.values))

    def flip(self, variable):
        self.values[variable] = not self.values[variable]

    def satisfies_literal(self, literal):
        return bool(self.values[literal.variable]) == literal.polarity

    def to_dimacs(self):
        return [v + 1 if value else -(v + 1) for v, value in enumerate(self.values)]


def unsat_clauses(formula, assignment):
    """ Returns the indices of clauses that have no satisfied literal under assignment. """
    if len(assignment) != formula.num_vars:
        raise AlfaException('Assignment of length %d does not match a formula over %d variables' %
                            (len(assignment), formula.num_vars))
    values = assignment.values
    return [index for index, clause in enumerate(formula.clauses)
            if not any(values[lit.variable] == lit.polarity for lit in clause)]


def satisfies(formula, assignment):
    return not unsat_clauses(formula, assignment)


def parse_dimacs(text):
    """ Parses DIMACS CNF from a string or a text stream.

    :raises DimacsParseException: on a malformed or repeated header, a literal out of range, a
        tautological or empty clause or clauses before the header.
    """
    if isinstance(text, str):
        text = io.StringIO(text)

    num_vars = None
    declared = None
    clauses = []
    current = []
    for line_number, line in enumerate(text, 1):
        line = line.strip()
        if not line or line.startswith('c'):
            continue
        if line.startswith('%'):
            break
        if line.startswith('p'):
            if num_vars is not None:
                raise DimacsParseException('Repeated header', line_number)
            fields = line.split()
            if len(fields) != 4 or fields[1] != 'cnf':
                raise DimacsParseException('Malformed header %r' % (line), line_number)
            try:
                num_vars, declared = int(fields[2]), int(fields[3])
            except ValueError:
                raise DimacsParseException('Malformed header %r' % (line), line_number)
            if num_vars < 1 or declared < 0:
                raise DimacsParseException('Malformed header %r' % (line), line_number)
            continue
        if num_vars is None:
            raise DimacsParseException('Clause before header', line_number)
        for token in line.split():
            try:
                value = int(token)
            except ValueError:
                raise DimacsParseException('Not a literal: %r' % (token), line_number)
            if value == 0:
                if not current:
                    raise DimacsParseException('Empty clause', line_number)
                try:
                    clauses.append(Clause.from_dimacs(current))
                except TautologyException as e:
                    raise DimacsParseException('Tautological clause: %s' % (e), line_number)
                current = []
            elif abs(value) > num_vars:
                raise DimacsParseException('Literal %d out of range 1..%d' % (value, num_vars), line_number)
            else:
                current.append(value)

    if num_vars is None:
        raise DimacsParseException('Missing "p cnf" header')
    if current:
        alfalab_logger.warning('Last clause is not terminated by 0, accepting it anyway')
        try:
            clauses.append(Clause.from_dimacs(current))
        except TautologyException as e:
            raise DimacsParseException('Tautological clause: %s' % (e))
    if len(clauses) != declared:
        alfalab_logger.warning('Header declares %d clauses but %d were read' % (declared, len(clauses)))

    formula = Formula(num_vars, clauses)
    if formula.duplicates_dropped:
        alfalab_logger.info('Merged %d duplicate clauses' % (formula.duplicates_dropped))
    return formula


def emit_dimacs(formula):
    """ Returns canonical DIMACS text: LF line endings, single spaces, clauses in stored order. """
    lines = ['p cnf %d %d' % (formula.num_vars, formula.num_clauses)]
    for clause in formula.clauses:
        lines.append(' '.join(str(v) for v in clause.to_dimacs()) + ' 0')
    return '\n'.join(lines) + '\n'


def dimacs_model_line(assignment):
    """ The solution line of SAT solver output, e.g. 'v 1 -2 3 0'. """
    return 'v ' + ' '.join(str(v) for v in assignment.to_dimacs() + [0])


def load_dimacs(filename):
    with open(filename) as fh:
        return parse_dimacs(fh)


def write_dimacs(formula, filename):
    with open(filename, 'w', newline='\n') as fh:
        fh.write(emit_dimacs(formula))
    return filename
