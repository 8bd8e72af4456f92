# -*- coding: utf-8 -*-
""" Fixed-cutoff restarts of Las Vegas runtimes.

For a runtime X with cdf F, quantile Q and finite mean, restarting every t = Q(p) steps has
expected runtime E[X_t] = (integral of 1 - F over [0, t]) / F(t). Restarts pay off for some t
exactly when the restart functional

    R(p) = ((1 - p) Q(p) + integral of x f(x) over [0, Q(p)]) / E[X]

drops below p for some p in (0, 1). Long-tailed distributions such as the lognormal always
have such a p; the exponential has R(p) = p everywhere.
"""
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import expit
from scipy.special import ndtr

from alfalab import stats
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import encode_float
from alfalab.util import make_rng
from alfalab.util import StatsException

USEFULNESS_THRESHOLD = -1e-10
GRID_POINTS = 129
GRID_LOGIT = math.log((1.0 - 1e-8) / 1e-8)
QUAD_EPSREL = 1e-10
QUAD_TOLERANCE = 1e-6
BREAKPOINT_LEVELS = (1e-6, 1e-3, 0.05, 0.25, 0.5, 0.75, 0.95, 0.999, 1 - 1e-6, 1 - 1e-9)
CUTOFF_SEARCH_LEVELS = (1e-4, 1 - 1e-9)
DEFAULT_MAX_ROUNDS = 10 ** 6


def _integrate(function, low, high, breaks=()):
    """ Adaptive quadrature over [low, high], split at the given interior points. """
    if high <= low:
        return 0.0
    points = [low] + sorted(b for b in set(breaks) if low < b < high) + [high]
    total = 0.0
    for a, b in zip(points, points[1:]):
        result = quad(function, a, b, epsabs=0.0, epsrel=QUAD_EPSREL, limit=200, full_output=1)
        value, error = result[0], result[1]
        if len(result) > 3 and error > QUAD_TOLERANCE * abs(value) + 1e-300:
            raise StatsException('Quadrature over [%s, %s] did not converge: %s' % (a, b, result[3]))
        total += value
    return total


class DistModel(object):
    """ A runtime distribution on [lower, inf). Subclasses provide cdf, pdf, quantile, mean and
    sample; the integrals default to quadrature. """
    kind = None
    lower = 0.0

    def cdf(self, x):
        raise NotImplementedError()

    def pdf(self, x):
        raise NotImplementedError()

    def sf(self, x):
        return 1.0 - self.cdf(x)

    def quantile(self, p):
        raise NotImplementedError()

    def mean(self):
        raise NotImplementedError()

    def sample(self, size, rng=None):
        raise NotImplementedError()

    def hazard(self, t):
        survival = self.sf(t)
        if survival <= 0:
            raise StatsException('Survival is zero at %s, the hazard rate is undefined' % (t))
        return self.pdf(t) / survival

    def breakpoints(self):
        return [float(self.quantile(level)) for level in BREAKPOINT_LEVELS]

    def partial_expectation(self, t):
        """ Integral of x f(x) over [0, t]. """
        return _integrate(lambda x: x * self.pdf(x), self.lower, t, self.breakpoints())

    def integrated_survival(self, t):
        """ Integral of 1 - F(u) over [0, t], which equals E[min(X, t)]. """
        if t <= self.lower:
            return float(t)
        return self.lower + _integrate(self.sf, self.lower, t, self.breakpoints())

    def describe(self):
        return {'kind': self.kind}


class Lognormal3Model(DistModel):
    kind = 'lognormal3'

    def __init__(self, params):
        self.params = params
        self.lower = params.gamma

    def cdf(self, x):
        return stats.lognormal3_cdf(self.params, x)

    def pdf(self, x):
        return stats.lognormal3_pdf(self.params, x)

    def sf(self, x):
        return stats.survival(self.params, x)

    def quantile(self, p):
        return stats.lognormal3_quantile(self.params, p)

    def mean(self):
        return stats.lognormal3_mean(self.params)

    def sample(self, size, rng=None):
        return stats.lognormal3_sample(self.params, size, rng)

    def hazard(self, t):
        return stats.hazard_rate(self.params, t)

    def partial_expectation(self, t):
        # E[X; X <= t] = gamma F(t) + exp(mu + sigma^2 / 2) Phi((ln(t - gamma) - mu - sigma^2) / sigma)
        mu, sigma, gamma = self.params.mu, self.params.sigma, self.params.gamma
        if t <= gamma:
            return 0.0
        shifted = (math.log(t - gamma) - mu - sigma ** 2) / sigma
        return gamma * self.cdf(t) + math.exp(mu + 0.5 * sigma ** 2) * float(ndtr(shifted))

    def describe(self):
        description = {'kind': self.kind}
        description.update(self.params.to_dict())
        return description


class ExponentialModel(DistModel):
    """ The memoryless reference: restarts never change its expected runtime. """
    kind = 'exponential_reference'

    def __init__(self, rate=1.0):
        if not rate > 0:
            raise StatsException('Rate must be positive, got %s' % (rate))
        self.rate = float(rate)

    def cdf(self, x):
        return -math.expm1(-self.rate * x) if x > 0 else 0.0

    def pdf(self, x):
        return self.rate * math.exp(-self.rate * x) if x >= 0 else 0.0

    def sf(self, x):
        return math.exp(-self.rate * x) if x > 0 else 1.0

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise StatsException('Quantile level must lie in (0, 1), got %s' % (p))
        return -math.log1p(-p) / self.rate

    def mean(self):
        return 1.0 / self.rate

    def sample(self, size, rng=None):
        return make_rng(rng).exponential(1.0 / self.rate, size)

    def describe(self):
        return {'kind': self.kind, 'rate': self.rate}


class EmpiricalModel(DistModel):
    """ Plug-in model of a hardness sample: ecdf, sample mean and empirical quantile. Noisy, meant for
    model-free sanity checks. There is no density; the integrals are exact sums. """
    kind = 'empirical'

    def __init__(self, values):
        values = values.values if isinstance(values, stats.Sample) else values
        self.values = np.sort(np.asarray(values, dtype=float))
        if len(self.values) == 0:
            raise StatsException('An empirical model needs at least one value')
        self._ecdf = stats.ecdf(self.values)

    def cdf(self, x):
        return float(self._ecdf(x))

    def pdf(self, x):
        raise StatsException('The empirical model has no density')

    def quantile(self, p):
        if not 0.0 < p < 1.0:
            raise StatsException('Quantile level must lie in (0, 1), got %s' % (p))
        index = int(math.ceil(p * len(self.values))) - 1
        return float(self.values[min(max(index, 0), len(self.values) - 1)])

    def mean(self):
        return float(self.values.mean())

    def sample(self, size, rng=None):
        return make_rng(rng).choice(self.values, size=size, replace=True)

    def hazard(self, t):
        raise StatsException('The empirical model has no hazard rate')

    def partial_expectation(self, t):
        return float(np.sum(np.where(self.values <= t, self.values, 0.0))) / len(self.values)

    def integrated_survival(self, t):
        return float(np.minimum(self.values, t).mean())

    def describe(self):
        return {'kind': self.kind, 'n': len(self.values)}


models_mapping = {
    'lognormal3': Lognormal3Model,
    'exponential_reference': ExponentialModel,
    'empirical': EmpiricalModel,
}


def model_from_fit(data):
    """ Builds a Lognormal3Model from a FitReport, Lognormal3Params or their dict form. """
    if isinstance(data, stats.FitReport):
        return Lognormal3Model(data.params)
    if isinstance(data, stats.Lognormal3Params):
        return Lognormal3Model(data)
    return Lognormal3Model(stats.Lognormal3Params.from_dict(data))


@dataclass
class RestartAnalysis(object):
    useful: bool
    expected_plain: float
    witness_p: float = None
    witness_cutoff: float = None
    expected_restarted: float = None
    curve: list = field(default_factory=list)
    infinite_mean: bool = False
    optimal_cutoff: float = None
    optimal_expected: float = None
    model: dict = field(default_factory=dict)

    def to_dict(self):
        return {'useful': self.useful, 'infinite_mean': self.infinite_mean, 'model': self.model,
                'expected_plain': encode_float(self.expected_plain), 'witness_p': self.witness_p,
                'witness_cutoff': encode_float(self.witness_cutoff),
                'expected_restarted': encode_float(self.expected_restarted),
                'optimal_cutoff': encode_float(self.optimal_cutoff),
                'optimal_expected': encode_float(self.optimal_expected)}

    def curve_frame(self):
        return pd.DataFrame([{'p': p, 'R': r, 'R_minus_p': r - p} for p, r in self.curve],
                            columns=['p', 'R', 'R_minus_p'])


def _check_level(p):
    if not 0.0 < p < 1.0:
        raise StatsException('p must lie in (0, 1), got %s' % (p))


def restart_functional(d, p):
    """ R(p) = ((1 - p) Q(p) + integral of x f(x) over [0, Q(p)]) / E[X].

    An infinite mean makes every restart strategy useful; the degenerate value 0 is returned.
    """
    _check_level(p)
    mean = d.mean()
    if not math.isfinite(mean):
        alfalab_logger.warning('Infinite mean, R(p) degenerates to 0')
        return 0.0
    cutoff = float(d.quantile(p))
    return ((1.0 - p) * cutoff + d.partial_expectation(cutoff)) / mean


def expected_runtime_with_restart(d, t):
    """ E[X_t] = (integral of 1 - F over [0, t]) / F(t) for restarts after t steps. """
    if t == math.inf:
        return d.mean()
    success = float(d.cdf(t))
    if success <= 0:
        raise StatsException('F(%s) = 0, a run never finishes before the cutoff' % (t))
    return d.integrated_survival(t) / success


def restarts_useful(d, grid_points=GRID_POINTS, threshold=USEFULNESS_THRESHOLD):
    """ Decides whether some fixed cutoff beats running to completion.

    Scans R(p) - p over a logit-spaced grid of p, refines the best grid point by golden-section
    search on the logit and calls restarts useful if the minimum is below ``threshold``.
    """
    mean = d.mean()
    if not math.isfinite(mean):
        alfalab_logger.info('Infinite mean: restarts are useful')
        return RestartAnalysis(useful=True, expected_plain=math.inf, infinite_mean=True, model=d.describe())

    logits = np.linspace(-GRID_LOGIT, GRID_LOGIT, grid_points)
    levels = expit(logits)
    values = [restart_functional(d, float(p)) for p in levels]
    curve = list(zip(levels.tolist(), values))
    gaps = np.array(values) - levels
    best = int(np.argmin(gaps))
    best_p, best_gap = float(levels[best]), float(gaps[best])

    if 0 < best < grid_points - 1:
        def gap_at(logit):
            p = float(expit(logit))
            return restart_functional(d, p) - p
        try:
            result = minimize_scalar(gap_at, bracket=(logits[best - 1], logits[best], logits[best + 1]),
                                     method='golden')
            logit = float(np.clip(result.x, logits[best - 1], logits[best + 1]))
            refined_gap = gap_at(logit)
            if refined_gap < best_gap:
                best_p, best_gap = float(expit(logit)), refined_gap
        except ValueError:
            pass

    analysis = RestartAnalysis(useful=best_gap < threshold, expected_plain=mean, curve=curve, model=d.describe())
    if analysis.useful:
        analysis.witness_p = best_p
        analysis.witness_cutoff = float(d.quantile(best_p))
        analysis.expected_restarted = expected_runtime_with_restart(d, analysis.witness_cutoff)
    alfalab_logger.info('min R(p) - p = %.3g at p = %.6g: restarts %s' %
                        (best_gap, best_p, 'useful' if analysis.useful else 'not useful'))
    return analysis


def optimal_restart_cutoff(d, analysis=None):
    """ Minimizes E[X_t] over t by a log-spaced scan and golden-section search on log t.

    :returns: (t*, E[X_t*])
    :raises StatsException: if restarts are not useful for d.
    """
    analysis = analysis or restarts_useful(d)
    if not analysis.useful:
        raise StatsException('Restarts are not useful for this model, there is no optimal cutoff')

    low, high = (math.log(float(d.quantile(level))) for level in CUTOFF_SEARCH_LEVELS)
    if d.lower > 0:
        low = max(low, math.log(d.lower) + 1e-12)
    log_grid = np.linspace(low, high, GRID_POINTS)

    def runtime_at(log_t):
        try:
            return expected_runtime_with_restart(d, math.exp(log_t))
        except StatsException:
            return math.inf

    runtimes = np.array([runtime_at(s) for s in log_grid])
    best = int(np.argmin(runtimes))
    log_t, expected = float(log_grid[best]), float(runtimes[best])
    if 0 < best < GRID_POINTS - 1:
        try:
            result = minimize_scalar(runtime_at, bracket=(log_grid[best - 1], log_grid[best], log_grid[best + 1]),
                                     method='golden', tol=1e-6)
            refined = float(np.clip(result.x, log_grid[best - 1], log_grid[best + 1]))
            refined_runtime = runtime_at(refined)
            if refined_runtime <= expected:
                log_t, expected = refined, refined_runtime
        except ValueError:
            pass
    if analysis.witness_cutoff is not None:
        witness_runtime = expected_runtime_with_restart(d, analysis.witness_cutoff)
        if witness_runtime < expected:
            log_t, expected = math.log(analysis.witness_cutoff), witness_runtime
    return math.exp(log_t), expected


def analyze_restarts(d):
    """ restarts_useful plus the optimal cutoff when restarts are useful and the mean is finite. """
    analysis = restarts_useful(d)
    if analysis.useful and not analysis.infinite_mean:
        analysis.optimal_cutoff, analysis.optimal_expected = optimal_restart_cutoff(d, analysis)
        alfalab_logger.info('Optimal cutoff %.6g: E[X_t] = %.6g against E[X] = %.6g' %
                            (analysis.optimal_cutoff, analysis.optimal_expected, analysis.expected_plain))
    return analysis


def simulate_restarts(d, t, size, rng=None, max_rounds=DEFAULT_MAX_ROUNDS):
    """ Draws ``size`` restarted runtimes: runs are drawn from d, every run longer than t is cut off
    after t steps and replaced by a fresh one.

    :raises BudgetException: if some trial is still running after max_rounds attempts.
    """
    rng = make_rng(rng)
    totals = np.zeros(int(size))
    pending = np.arange(int(size))
    rounds = 0
    while len(pending):
        if rounds >= max_rounds:
            raise BudgetException('%d restarted trials unfinished after %d rounds' % (len(pending), rounds),
                                  {'pending': len(pending), 'cutoff': t})
        rounds += 1
        draws = np.asarray(d.sample(len(pending), rng), dtype=float)
        finished = draws <= t
        totals[pending] += np.where(finished, draws, t)
        pending = pending[~finished]
    return totals
