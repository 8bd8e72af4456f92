# -*- coding: utf-8 -*-
""" Hardness distribution statistics: ecdf, three-parameter lognormal model, maximum likelihood
fitting, chi-square goodness of fit and a parametric bootstrap test for noisy means. """
import math
from dataclasses import dataclass
from dataclasses import field

import numpy as np
from joblib import delayed
from joblib import Parallel
from scipy.optimize import minimize_scalar
from scipy.special import log_ndtr
from scipy.special import ndtr
from scipy.special import ndtri
from scipy.stats import chi2
from statsmodels.distributions.empirical_distribution import ECDF

from alfalab.util import alfalab_logger
from alfalab.util import decode_float
from alfalab.util import derive_seed
from alfalab.util import encode_float
from alfalab.util import make_rng
from alfalab.util import StatsException

LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

MIN_FIT_SIZE = 10
GAMMA_GRID_POINTS = 256
GAMMA_MARGIN = 1e-6
MIN_EXPECTED_PER_BIN = 5.0
MIN_BINS = 5
FITTED_PARAMETERS = 3
FLOOR_WARN_FRACTION = 1e-3
P_VALUE_GAP = 0.25

ACCEPT = 'accept'
REJECT = 'reject'


@dataclass
class Sample(object):
    """ Hardness values (mean flips per modified instance) and optionally the sample variance of the
    runs behind each mean. ``runs_per_value`` is the number of runs averaged into each value. """
    values: np.ndarray
    per_value_variance: np.ndarray = None
    runs_per_value: int = 100

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1:
            raise StatsException('A sample is a one-dimensional collection of values')
        if np.any(~np.isfinite(self.values)) or np.any(self.values <= 0):
            raise StatsException('Sample values must be finite and positive')
        if self.per_value_variance is not None:
            self.per_value_variance = np.asarray(self.per_value_variance, dtype=float)
            if self.per_value_variance.shape != self.values.shape:
                raise StatsException('Per-value variances must match the values in length')
            if np.any(self.per_value_variance < 0):
                raise StatsException('Per-value variances must be non-negative')
        if int(self.runs_per_value) < 1:
            raise StatsException('runs_per_value must be positive')

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class Lognormal3Params(object):
    """ log(X - gamma) is normal with mean mu and standard deviation sigma. """
    mu: float
    sigma: float
    gamma: float = 0.0

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise StatsException('sigma must be positive and finite, got %s' % (self.sigma))
        if not (self.gamma >= 0 and math.isfinite(self.gamma)):
            raise StatsException('gamma must be non-negative and finite, got %s' % (self.gamma))
        if not math.isfinite(self.mu):
            raise StatsException('mu must be finite, got %s' % (self.mu))

    def to_dict(self):
        return {'mu': self.mu, 'sigma': self.sigma, 'gamma': self.gamma}

    @classmethod
    def from_dict(cls, data):
        return cls(mu=float(data['mu']), sigma=float(data['sigma']), gamma=float(data['gamma']))


@dataclass
class GofReport(object):
    chi2_statistic: float
    degrees_of_freedom: int
    p_value: float
    bin_edges: list
    observed: list
    expected: list
    bin_rule: str = 'ceil(2 n^0.4) equiprobable, merged to >= 5 expected'

    def to_dict(self):
        return {'stat': self.chi2_statistic, 'df': self.degrees_of_freedom, 'p': self.p_value,
                'bins': {'edges': [encode_float(e) for e in self.bin_edges], 'observed': self.observed,
                         'expected': self.expected, 'rule': self.bin_rule}}


@dataclass
class BootstrapReport(object):
    observed_statistic: float
    resampled_statistics: tuple
    verdict: str
    alpha: float
    p_boot: float
    floored_fraction: float = 0.0
    floored_flag: bool = False
    noise_source: str = 'per_value'

    @property
    def rounds(self):
        return len(self.resampled_statistics)

    def to_dict(self):
        return {'N': self.rounds, 'alpha': self.alpha, 'p_boot': self.p_boot, 'verdict': self.verdict,
                'floored_fraction': self.floored_fraction, 'floored_flag': self.floored_flag,
                'noise_source': self.noise_source, 'observed_statistic': self.observed_statistic}


@dataclass
class FitReport(object):
    """ Everything known about the hardness distribution of one base instance. """
    n: int
    params: Lognormal3Params
    loglik: float
    gof: GofReport = None
    bootstrap: BootstrapReport = None
    restart: dict = None
    labels: dict = field(default_factory=dict)

    @property
    def p_value_gap(self):
        """ True when chi-square and bootstrap p-values disagree enough to ask for more runs per value. """
        if self.gof is None or self.bootstrap is None:
            return False
        return abs(self.gof.p_value - self.bootstrap.p_boot) > P_VALUE_GAP

    def to_dict(self):
        report = {'n': self.n, 'loglik': self.loglik, 'labels': dict(self.labels),
                  'chi2': self.gof.to_dict() if self.gof else None,
                  'bootstrap': self.bootstrap.to_dict() if self.bootstrap else None,
                  'restart': self.restart, 'p_value_gap': self.p_value_gap}
        report.update(self.params.to_dict())
        return report

    @classmethod
    def from_dict(cls, data):
        report = cls(n=int(data['n']), params=Lognormal3Params.from_dict(data), loglik=decode_float(data.get('loglik')),
                     restart=data.get('restart'), labels=data.get('labels') or {})
        if data.get('chi2'):
            chi = data['chi2']
            bins = chi.get('bins') or {}
            report.gof = GofReport(chi2_statistic=chi['stat'], degrees_of_freedom=chi['df'], p_value=chi['p'],
                                   bin_edges=[decode_float(e) for e in bins.get('edges', [])],
                                   observed=bins.get('observed', []), expected=bins.get('expected', []))
        if data.get('bootstrap'):
            boot = data['bootstrap']
            report.bootstrap = BootstrapReport(observed_statistic=boot.get('observed_statistic'),
                                               resampled_statistics=(None,) * int(boot['N']),
                                               verdict=boot['verdict'], alpha=boot['alpha'], p_boot=boot['p_boot'],
                                               floored_fraction=boot.get('floored_fraction', 0.0),
                                               floored_flag=boot.get('floored_flag', False),
                                               noise_source=boot.get('noise_source', 'per_value'))
        return report


def ecdf(s):
    """ Right-continuous empirical cdf t -> #{x_i <= t} / n. """
    values = s.values if isinstance(s, Sample) else np.asarray(s, dtype=float)
    if len(values) == 0:
        raise StatsException('The ecdf of an empty sample is undefined')
    return ECDF(values)


def empirical_survival(s):
    cdf = ecdf(s)

    def survival(t):
        return 1.0 - cdf(t)
    return survival


def _scalar_or_array(result, x):
    return float(result) if np.ndim(x) == 0 else result


def _standardized(params, x):
    x = np.asarray(x, dtype=float)
    above = x > params.gamma
    shifted = np.where(above, x - params.gamma, 1.0)
    return (np.log(shifted) - params.mu) / params.sigma, above, shifted


def lognormal3_cdf(params, x):
    z, above, _ = _standardized(params, x)
    return _scalar_or_array(np.where(above, ndtr(z), 0.0), x)


def lognormal3_logpdf(params, x):
    z, above, shifted = _standardized(params, x)
    logpdf = -np.log(shifted) - math.log(params.sigma) - LOG_SQRT_2PI - 0.5 * z * z
    return _scalar_or_array(np.where(above, logpdf, -np.inf), x)


def lognormal3_pdf(params, x):
    return _scalar_or_array(np.exp(lognormal3_logpdf(params, x)), x)


def lognormal3_logsf(params, x):
    z, above, _ = _standardized(params, x)
    return _scalar_or_array(np.where(above, log_ndtr(-z), 0.0), x)


def lognormal3_quantile(params, p):
    p_array = np.asarray(p, dtype=float)
    if np.any(~(p_array > 0)) or np.any(~(p_array < 1)):
        raise StatsException('Quantile level must lie in (0, 1), got %s' % (p,))
    return _scalar_or_array(params.gamma + np.exp(params.mu + params.sigma * ndtri(p_array)), p)


def lognormal3_mean(params):
    return params.gamma + math.exp(params.mu + 0.5 * params.sigma ** 2)


def lognormal3_sample(params, size, rng=None):
    rng = make_rng(rng)
    return params.gamma + np.exp(rng.normal(params.mu, params.sigma, size))


def lognormal3_loglik(params, values):
    values = values.values if isinstance(values, Sample) else np.asarray(values, dtype=float)
    return float(np.sum(lognormal3_logpdf(params, values)))


def survival(params, x):
    return _scalar_or_array(np.exp(lognormal3_logsf(params, x)), x)


def hazard_rate(params, t):
    """ pdf(t) / (1 - cdf(t)), evaluated in log space so it stays finite far in the tail. """
    logsf = lognormal3_logsf(params, t)
    if np.any(np.isneginf(logsf)):
        raise StatsException('Survival is zero at %s, the hazard rate is undefined' % (t,))
    return _scalar_or_array(np.exp(lognormal3_logpdf(params, t) - logsf), t)


def long_tail_ratio(params, x, y):
    """ S(x + y) / S(x); tends to 1 for every y when the distribution is long-tailed. """
    logsf = lognormal3_logsf(params, x)
    if np.any(np.isneginf(logsf)):
        raise StatsException('Survival is zero at %s, the ratio is undefined' % (x,))
    return _scalar_or_array(np.exp(lognormal3_logsf(params, np.asarray(x) + y) - logsf), x)


def _profile(logs_of, gamma):
    # Profile log-likelihood: mu and sigma at their closed-form optimum for this location.
    shifted = logs_of(gamma)
    n = len(shifted)
    sigma = shifted.std()
    if not sigma > 0:
        return -np.inf, None
    mu = shifted.mean()
    loglik = -shifted.sum() - n * math.log(sigma) - n * LOG_SQRT_2PI - 0.5 * n
    return loglik, (mu, sigma)


def fit_lognormal3_mle(s, fixed_gamma=None, grid_points=GAMMA_GRID_POINTS):
    """ Maximum likelihood fit of the three-parameter lognormal.

    gamma maximizes the profile log-likelihood over [0, (1 - 1e-6) * min(values)]: a grid that is
    geometric in the distance to min(values), then golden-section refinement between the
    neighbours of the best grid point. mu and sigma are the mean and the population standard
    deviation of log(x - gamma).

    :param fixed_gamma: Fit only mu and sigma with this location.
    :raises StatsException: on fewer than 10 values, a degenerate sample or a non-finite likelihood.
    """
    if not isinstance(s, Sample):
        s = Sample(s)
    values = s.values
    if len(values) < MIN_FIT_SIZE:
        raise StatsException('Need at least %d values to fit, got %d' % (MIN_FIT_SIZE, len(values)))
    if np.all(values == values[0]):
        raise StatsException('Degenerate sample: all %d values equal %s' % (len(values), values[0]))

    def logs_of(gamma):
        return np.log(values - gamma)

    if fixed_gamma is not None:
        loglik, estimate = _profile(logs_of, float(fixed_gamma))
        if estimate is None or not np.isfinite(loglik):
            raise StatsException('Non-finite log-likelihood at gamma=%s' % (fixed_gamma))
        return Lognormal3Params(mu=float(estimate[0]), sigma=float(estimate[1]), gamma=float(fixed_gamma))

    smallest = float(values.min())
    distances = np.geomspace(smallest, GAMMA_MARGIN * smallest, grid_points)
    grid = smallest - distances
    grid[0] = 0.0
    scores = np.array([_profile(logs_of, g)[0] for g in grid])
    if not np.any(np.isfinite(scores)):
        raise StatsException('Non-finite log-likelihood over the whole location grid')
    best = int(np.nanargmax(np.where(np.isfinite(scores), scores, -np.inf)))
    gamma, score = grid[best], scores[best]

    if 0 < best < grid_points - 1:
        low, high = grid[best - 1], grid[best + 1]
        try:
            result = minimize_scalar(lambda g: -_profile(logs_of, g)[0], bracket=(low, gamma, high), method='golden')
            refined = float(np.clip(result.x, low, high))
            refined_score = _profile(logs_of, refined)[0]
            if refined_score >= score:
                gamma, score = refined, refined_score
        except ValueError:
            # Flat neighbourhood, no strict bracket. The grid point stands.
            pass
    elif best == grid_points - 1:
        alfalab_logger.warning('Location estimate sits at the search boundary just below min(values)')

    _, (mu, sigma) = _profile(logs_of, gamma)
    params = Lognormal3Params(mu=float(mu), sigma=float(sigma), gamma=float(gamma))
    alfalab_logger.debug('Fitted %s with log-likelihood %s' % (params, score))
    return params


def _merge_bins(observed, expected, edges, min_expected):
    merged_observed, merged_expected, merged_edges = [], [], [edges[0]]
    acc_observed = acc_expected = 0
    for i in range(len(expected)):
        acc_observed += observed[i]
        acc_expected += expected[i]
        if acc_expected >= min_expected:
            merged_observed.append(acc_observed)
            merged_expected.append(acc_expected)
            merged_edges.append(edges[i + 1])
            acc_observed = acc_expected = 0
    if acc_expected > 0 or acc_observed > 0:
        if merged_expected:
            merged_observed[-1] += acc_observed
            merged_expected[-1] += acc_expected
            merged_edges[-1] = edges[-1]
        else:
            merged_observed.append(acc_observed)
            merged_expected.append(acc_expected)
            merged_edges.append(edges[-1])
    return merged_observed, merged_expected, merged_edges


def bin_count(n):
    return int(math.ceil(2.0 * n ** 0.4))


def chi_square_gof(s, params, min_expected=MIN_EXPECTED_PER_BIN):
    """ Chi-square goodness of fit with ceil(2 n^0.4) equiprobable bins under the fitted cdf.

    Adjacent bins are merged until each expects at least min_expected values. Three parameters
    were estimated, so df = bins - 1 - 3.

    :raises StatsException: if fewer than five bins remain after merging.
    """
    values = s.values if isinstance(s, Sample) else np.asarray(s, dtype=float)
    n = len(values)
    bins = bin_count(n)
    inner = np.asarray(lognormal3_quantile(params, np.arange(1, bins) / float(bins)), dtype=float).reshape(-1)
    edges = [params.gamma] + inner.tolist() + [math.inf]
    indices = np.searchsorted(inner, values, side='right')
    observed = np.bincount(indices, minlength=bins).tolist()
    expected = [n / float(bins)] * bins

    observed, expected, edges = _merge_bins(observed, expected, edges, min_expected)
    if len(expected) < MIN_BINS:
        raise StatsException('Only %d bins with at least %s expected values for n=%d, need %d' %
                             (len(expected), min_expected, n, MIN_BINS))

    statistic = float(sum((o - e) ** 2 / e for o, e in zip(observed, expected)))
    dof = len(expected) - 1 - FITTED_PARAMETERS
    return GofReport(chi2_statistic=statistic, degrees_of_freedom=dof, p_value=float(chi2.sf(statistic, dof)),
                     bin_edges=edges, observed=[int(o) for o in observed], expected=expected)


def noise_variance(s):
    """ Variance of the normal noise added to bootstrap resamples, and where it came from.

    A mean of r runs has variance (run variance) / r. Without per-run data the variance of the
    sample itself is used for every coordinate.
    """
    runs = float(s.runs_per_value)
    if s.per_value_variance is not None:
        return s.per_value_variance / runs, 'per_value'
    pooled = float(np.var(s.values, ddof=1)) / runs
    alfalab_logger.warning('No per-value variances, bootstrap noise uses the pooled variance %s' % (pooled))
    return np.full(len(s), pooled), 'pooled'


def _bootstrap_round(params, variance, seed):
    rng = np.random.default_rng(seed)
    n = len(variance)
    resample = lognormal3_sample(params, n, rng) + rng.normal(0.0, 1.0, n) * np.sqrt(variance)
    non_positive = resample <= 0
    floored = int(np.count_nonzero(non_positive))
    if floored:
        resample[non_positive] = params.gamma * (1.0 + 1e-9) + 1e-12
    refit = fit_lognormal3_mle(Sample(resample))
    return chi_square_gof(resample, refit).chi2_statistic, floored


def critical_index(rounds, alpha):
    """ 0-based index of the floor((1 - alpha) * N)-th order statistic. """
    return max(int(math.floor((1.0 - alpha) * rounds)), 1) - 1


def bootstrap_test(s, N=200, alpha=0.05, rng=None, params=None, n_jobs=1):
    """ Parametric bootstrap test of the lognormal hypothesis for noisy sample means.

    Each round draws n values from the fitted lognormal, adds independent normal noise with the
    variance of each mean, refits and recomputes the chi-square statistic. The hypothesis is
    rejected if the observed statistic exceeds the floor((1 - alpha) N)-th sorted round statistic.
    Rounds use streams derived from one seed and are reduced in round order, so the result does
    not depend on n_jobs.
    """
    if not isinstance(s, Sample):
        s = Sample(s)
    if int(N) < 1:
        raise StatsException('Need at least one bootstrap round')
    if not 0.0 < alpha < 1.0:
        raise StatsException('alpha must lie in (0, 1), got %s' % (alpha))
    rng = make_rng(rng)
    params = params or fit_lognormal3_mle(s)
    observed = chi_square_gof(s, params).chi2_statistic
    variance, source = noise_variance(s)
    base_seed = int(rng.integers(0, 2 ** 63))

    rounds = Parallel(n_jobs=n_jobs)(delayed(_bootstrap_round)(params, variance, derive_seed(base_seed, j + 1))
                                     for j in range(int(N)))
    statistics = np.sort(np.array([r[0] for r in rounds]))
    floored = sum(r[1] for r in rounds)
    floored_fraction = floored / float(N * len(s))
    flag = floored_fraction > FLOOR_WARN_FRACTION
    if flag:
        alfalab_logger.warning('%.3f%% of bootstrap resamples were floored to stay positive' % (100 * floored_fraction))

    critical = statistics[critical_index(len(statistics), alpha)]
    verdict = REJECT if observed > critical else ACCEPT
    p_boot = float(np.mean(statistics >= observed))
    alfalab_logger.info('Bootstrap test: X2=%.4g critical=%.4g p_boot=%.3f -> %s' % (observed, critical, p_boot, verdict))
    return BootstrapReport(observed_statistic=observed, resampled_statistics=tuple(statistics.tolist()),
                           verdict=verdict, alpha=alpha, p_boot=p_boot, floored_fraction=floored_fraction,
                           floored_flag=flag, noise_source=source)


def build_fit_report(s, bootstrap_rounds=0, alpha=0.05, rng=None, n_jobs=1, labels=None):
    """ Fits, runs the chi-square test and, if bootstrap_rounds > 0, the bootstrap test. A sample too
    small for binning still gets its fit; the tests are left out. """
    if not isinstance(s, Sample):
        s = Sample(s)
    params = fit_lognormal3_mle(s)
    report = FitReport(n=len(s), params=params, loglik=lognormal3_loglik(params, s), labels=dict(labels or {}))
    try:
        report.gof = chi_square_gof(s, params)
    except StatsException as e:
        alfalab_logger.warning('Skipping goodness of fit: %s' % (e))
        return report
    alfalab_logger.info('Lognormal fit mu=%.4g sigma=%.4g gamma=%.4g, chi2=%.4g df=%d p=%.4g' %
                        (params.mu, params.sigma, params.gamma, report.gof.chi2_statistic,
                         report.gof.degrees_of_freedom, report.gof.p_value))
    if bootstrap_rounds:
        report.bootstrap = bootstrap_test(s, bootstrap_rounds, alpha, rng, params, n_jobs)
    return report
