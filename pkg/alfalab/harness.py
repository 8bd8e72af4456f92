# -*- coding: utf-8 -*-
""" Experiment orchestration: base instance, M modified instances, N solver runs per instance,
the hardness sample and everything derived from it. """
import copy
import os
import time
from dataclasses import dataclass
from dataclasses import field

import numpy as np
import pandas as pd
import scipy
from joblib import delayed
from joblib import Parallel

import alfalab
from alfalab import stats
from alfalab.formula import load_dimacs
from alfalab.formula import satisfies
from alfalab.formula import write_dimacs
from alfalab.gen import ChanceVector
from alfalab.gen import dpll_solve
from alfalab.gen import generate
from alfalab.resolve import ModificationParams
from alfalab.resolve import res_w_closure
from alfalab.resolve import sample_resolvent_set
from alfalab.restart import analyze_restarts
from alfalab.restart import Lognormal3Model
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import derive_seed
from alfalab.util import dt_to_ts
from alfalab.util import dump_json
from alfalab.util import ensure_dir
from alfalab.util import load_json
from alfalab.util import StatsException
from alfalab.util import stream_rng
from alfalab.util import ts_now
from alfalab.util import UnsatisfiableException
from alfalab.util import write_table

RUN_COLUMNS = ['instance_index', 'run_index', 'seed', 'flips', 'status']
HARDNESS_COLUMNS = ['instance_index', 'mean_flips', 'run_variance']
MODIFICATION_COLUMNS = ['instance_index', 'w', 'p', 'seed', 'pool_size', 'added']
PLOT_POINTS = 512
DEFAULT_RUNS_PER_VALUE = 100

# Stream (0, 0) is never used for modifications (instance indices start at 1)
BOOTSTRAP_STREAM = (0, 0)


@dataclass
class ExperimentResult(object):
    runs: pd.DataFrame
    hardness: pd.DataFrame
    modifications: pd.DataFrame
    runs_per_value: int
    fit: stats.FitReport = None
    restart: object = None
    manifest: dict = field(default_factory=dict)

    @property
    def total_flips(self):
        return int(self.runs['flips'].sum())

    def sample(self):
        return stats.Sample(self.hardness['mean_flips'].values, self.hardness['run_variance'].values,
                            runs_per_value=self.runs_per_value)


def calibrate_p(formula, w, fraction, pool=None, max_pool_size=10 ** 7):
    """ Inclusion probability that adds fraction * |F| resolvents in expectation.

    p = min(1, fraction * |F| / |pool|). An empty pool leaves nothing to add; 1.0 is returned.
    """
    if pool is None:
        pool = res_w_closure(formula, w, max_pool_size)
    if not len(pool):
        alfalab_logger.warning('Resolvent pool of width %d is empty, modified instances equal the base instance' % (w))
        return 1.0
    p = min(1.0, fraction * formula.num_clauses / float(len(pool)))
    alfalab_logger.info('Calibrated p=%.6g for %d expected resolvents out of a pool of %d' %
                        (p, fraction * formula.num_clauses, len(pool)))
    return p


def instance_type(base_instance):
    if isinstance(base_instance, str):
        return 'file'
    spec = base_instance['spec']
    if spec.kind == 'uniform':
        return 'uniform'
    chances = base_instance.get('chances')
    if chances is not None and ChanceVector(chances) != ChanceVector.default(spec.k):
        return 'different_chances'
    return 'hidden'


def load_base_instance(base_instance, max_nodes=None):
    """ Reads or generates the base formula and makes sure it is satisfiable.

    :param base_instance: A DIMACS path or the generator mapping produced by config.load_generator_spec.
    :returns: (formula, info dict for the manifest)
    :raises UnsatisfiableException: if the base formula has no model.
    """
    if isinstance(base_instance, str):
        formula = load_dimacs(base_instance)
        info = {'path': base_instance}
        planted = None
    else:
        spec = base_instance['spec']
        formula, planted, info = generate(spec, base_instance.get('chances'), base_instance.get('ratio'))

    if planted is not None:
        if not satisfies(formula, planted):
            raise UnsatisfiableException('Planted assignment does not satisfy the generated formula')
    else:
        model = dpll_solve(formula, max_nodes) if max_nodes else dpll_solve(formula)
        if model is None:
            raise UnsatisfiableException('Base instance is unsatisfiable')
    info['instance_type'] = instance_type(base_instance)
    info['num_vars'] = formula.num_vars
    info['num_clauses'] = formula.num_clauses
    return formula, info


def modify_instances(formula, pool, p, M, base_seed, shuffle=True):
    """ Builds F^(i) = F ∪ L_i for i = 1..M, L_i drawn from stream (i, 0).

    :returns: (list of formulas, modifications DataFrame)
    """
    formulas = []
    rows = []
    for i in range(1, M + 1):
        seed = derive_seed(base_seed, i, 0)
        params = ModificationParams(w=pool.width_bound, p=p, shuffle=shuffle, seed=seed)
        added = sample_resolvent_set(pool, params, np.random.default_rng(seed))
        formulas.append(formula.extend(added))
        rows.append({'instance_index': i, 'w': pool.width_bound, 'p': p, 'seed': seed,
                     'pool_size': len(pool), 'added': len(added)})
    return formulas, pd.DataFrame(rows, columns=MODIFICATION_COLUMNS)


def solve_instance(solver, formula, instance_index, base_seed, N, max_flips):
    """ N runs of solver on one modified instance, run j seeded with stream (instance_index, j).
    Stops at the first run that exhausts max_flips. """
    rows = []
    for j in range(1, N + 1):
        seed = derive_seed(base_seed, instance_index, j)
        outcome = solver.solve(formula, np.random.default_rng(seed), max_flips)
        rows.append({'instance_index': instance_index, 'run_index': j, 'seed': seed,
                     'flips': outcome.flips, 'status': outcome.status})
        if not outcome.solved:
            break
    return rows


def hardness_table(runs):
    """ Mean flips and run variance per instance. The variance of a single run is taken as 0. """
    grouped = runs.groupby('instance_index', sort=True)['flips']
    frame = pd.DataFrame({'mean_flips': grouped.mean().astype(float),
                          'run_variance': grouped.var(ddof=1).fillna(0.0).astype(float)})
    frame = frame.reset_index()
    return frame[HARDNESS_COLUMNS]


def _manifest_config(conf):
    manifest = {}
    for key, value in conf.items():
        if key == 'solver':
            manifest[key] = value.describe()
        elif key == 'base_instance' and isinstance(value, dict):
            spec = value['spec']
            manifest[key] = {'kind': spec.kind, 'n': spec.n, 'm': spec.m, 'k': spec.k, 'seed': spec.seed,
                             'chances': value.get('chances'), 'ratio': value.get('ratio')}
        else:
            manifest[key] = copy.deepcopy(value)
    return manifest


def versions():
    return {'alfalab': alfalab.__version__, 'numpy': np.__version__, 'scipy': scipy.__version__,
            'pandas': pd.__version__}


def fit_hardness(result, conf, labels):
    """ Fit and goodness-of-fit tests of the hardness sample. Returns None when the sample is
    too small or degenerate for a fit. """
    if len(result.hardness) < stats.MIN_FIT_SIZE:
        alfalab_logger.warning('Only %d modified instances, skipping the distribution fit' % (len(result.hardness)))
        return None
    try:
        sample = result.sample()
        report = stats.build_fit_report(sample, conf['bootstrap_rounds'], conf['alpha'],
                                        stream_rng(conf['base_seed'], *BOOTSTRAP_STREAM), conf['workers'], labels)
    except StatsException as e:
        alfalab_logger.warning('Skipping the distribution fit: %s' % (e))
        return None
    return report


def run_experiment(conf, output_dir=None):
    """ Runs the full protocol of an experiment configuration.

    Modified instances are built in order in this process. Each instance's runs are one work item of
    the worker pool; results are collected in instance order, so every table is identical for any
    number of workers.

    :param conf: A configuration from config.load_configuration or config.build_configuration.
    :param output_dir: Overrides conf['output_dir']. Artifacts are written only if one of them is set.
    :raises BudgetException: if a run exhausts max_flips, naming its (instance_index, run_index).
    """
    started = ts_now()
    clock = time.time()
    formula, base_info = load_base_instance(conf['base_instance'])
    pool = res_w_closure(formula, conf['w'], conf['max_pool_size'])
    p = calibrate_p(formula, conf['w'], conf['resolvent_budget_fraction'], pool)
    formulas, modifications = modify_instances(formula, pool, p, conf['M'], conf['base_seed'], conf['shuffle'])
    alfalab_logger.info('Built %d modified instances, %.1f added clauses on average' %
                        (conf['M'], modifications['added'].mean()))

    solver = conf['solver']
    batches = Parallel(n_jobs=conf['workers'])(
        delayed(solve_instance)(solver, modified, i, conf['base_seed'], conf['N'], conf['max_flips'])
        for i, modified in enumerate(formulas, 1))
    rows = [row for batch in batches for row in batch]
    for row in rows:
        if row['status'] != 'solved':
            raise BudgetException('Run %d of instance %d used up max_flips=%d without a solution' %
                                  (row['run_index'], row['instance_index'], conf['max_flips']),
                                  {'instance_index': row['instance_index'], 'run_index': row['run_index']})
    runs = pd.DataFrame(rows, columns=RUN_COLUMNS)
    alfalab_logger.info('Finished %d runs, %d flips in total' % (len(runs), runs['flips'].sum()))

    result = ExperimentResult(runs=runs, hardness=hardness_table(runs), modifications=modifications,
                              runs_per_value=conf['N'])
    labels = dict(conf.get('labels') or {})
    labels.setdefault('name', conf['name'])
    labels.setdefault('instance_type', base_info['instance_type'])
    labels.setdefault('num_vars', formula.num_vars)
    labels.setdefault('solver', conf.get('solver_name', solver.name))
    labels.setdefault('fraction', conf['resolvent_budget_fraction'])

    result.fit = fit_hardness(result, conf, labels)
    if result.fit is not None:
        result.restart = analyze_restarts(Lognormal3Model(result.fit.params))
        result.fit.restart = result.restart.to_dict()

    result.manifest = {
        'config': _manifest_config(conf),
        'base_instance': base_info,
        'versions': versions(),
        'started': dt_to_ts(started),
        'finished': dt_to_ts(ts_now()),
        'wall_clock_seconds': time.time() - clock,
        'total_flips': result.total_flips,
        'pool_size': len(pool),
        'p': p,
    }

    output_dir = output_dir or conf.get('output_dir')
    if output_dir:
        write_artifacts(result, output_dir, formula)
    return result


def run_sweep(conf, fractions, output_dir=None):
    """ Runs the experiment once per resolvent budget fraction, each into its own sub-directory. """
    output_dir = output_dir or conf['output_dir']
    results = {}
    for fraction in fractions:
        swept = dict(conf, resolvent_budget_fraction=fraction)
        swept['labels'] = dict(conf.get('labels') or {}, fraction=fraction)
        results[fraction] = run_experiment(swept, os.path.join(output_dir, 'fraction_%g' % (fraction)))
    return results


def write_artifacts(result, output_dir, base_formula=None):
    """ Writes the run, hardness and modification tables, the fit and restart reports, plot data and
    the manifest. Returns the written paths by name. """
    ensure_dir(output_dir)
    paths = {
        'runs': write_table(result.runs, os.path.join(output_dir, 'runs.csv')),
        'hardness': write_table(result.hardness, os.path.join(output_dir, 'hardness.csv')),
        'modifications': write_table(result.modifications, os.path.join(output_dir, 'modifications.csv')),
    }
    if base_formula is not None:
        paths['base'] = write_dimacs(base_formula, os.path.join(output_dir, 'base.cnf'))
    if result.fit is not None:
        paths['fit'] = os.path.join(output_dir, 'fit.json')
        dump_json(result.fit.to_dict(), paths['fit'])
        paths.update(emit_plot_data(result, output_dir))
    if result.restart is not None:
        paths['restart'] = os.path.join(output_dir, 'restart.json')
        dump_json(result.restart.to_dict(), paths['restart'])
        paths['restart_curve'] = write_table(result.restart.curve_frame(), os.path.join(output_dir, 'restart_curve.csv'))
    paths['manifest'] = os.path.join(output_dir, 'manifest.json')
    dump_json(result.manifest, paths['manifest'])
    for name in sorted(paths):
        alfalab_logger.info('Wrote %s to %s' % (name, paths[name]))
    return paths


def plot_frames(sample, params, points=PLOT_POINTS):
    """ Empirical against fitted curves on grids spanning [min, max] of the sample.

    :returns: dict with 'cdf_linear' (x, ecdf, fitted_cdf, empirical_survival, fitted_survival),
        'cdf_loglog' (x, ecdf, fitted_cdf) and 'survival_loglog' (x, empirical_survival, fitted_survival).
        The log-log grids are geometric.
    """
    values = sample.values if isinstance(sample, stats.Sample) else np.asarray(sample, dtype=float)
    cdf = stats.ecdf(values)
    low, high = float(values.min()), float(values.max())

    def frame(grid):
        empirical = cdf(grid)
        fitted = np.asarray(stats.lognormal3_cdf(params, grid), dtype=float)
        return pd.DataFrame({'x': grid, 'ecdf': empirical, 'fitted_cdf': fitted,
                             'empirical_survival': 1.0 - empirical,
                             'fitted_survival': np.asarray(stats.survival(params, grid), dtype=float)},
                            columns=['x', 'ecdf', 'fitted_cdf', 'empirical_survival', 'fitted_survival'])

    linear = frame(np.linspace(low, high, points))
    logarithmic = frame(np.geomspace(low, high, points))
    return {'cdf_linear': linear,
            'cdf_loglog': logarithmic[['x', 'ecdf', 'fitted_cdf']],
            'survival_loglog': logarithmic[['x', 'empirical_survival', 'fitted_survival']]}


def emit_plot_data(result, output_dir, points=PLOT_POINTS):
    """ Writes plot_<name>.csv for every frame of plot_frames. """
    if result.fit is None:
        return {}
    ensure_dir(output_dir)
    paths = {}
    for name, frame in plot_frames(result.sample(), result.fit.params, points).items():
        paths['plot_' + name] = write_table(frame, os.path.join(output_dir, 'plot_%s.csv' % (name)))
    return paths


def runs_per_value_for(filename, default=DEFAULT_RUNS_PER_VALUE):
    """ N of the experiment that wrote filename, read from a manifest.json next to it, else default. """
    manifest = os.path.join(os.path.dirname(os.path.abspath(filename)), 'manifest.json')
    if not os.path.exists(manifest):
        return default
    runs = load_json(manifest).get('config', {}).get('N')
    if not isinstance(runs, int) or runs < 1:
        alfalab_logger.warning('%s has no usable N, assuming %d runs per value' % (manifest, default))
        return default
    return runs


def load_sample(filename, runs_per_value=None):
    """ Reads a hardness sample from CSV: the mean_flips and run_variance columns of a hardness table,
    or else the first column as values without variances.

    runs_per_value defaults to the N of a manifest.json next to the file, or DEFAULT_RUNS_PER_VALUE.
    """
    if runs_per_value is None:
        runs_per_value = runs_per_value_for(filename)
    frame = pd.read_csv(filename)
    if 'mean_flips' in frame.columns:
        variance = frame['run_variance'].values if 'run_variance' in frame.columns else None
        return stats.Sample(frame['mean_flips'].values, variance, runs_per_value=runs_per_value)
    return stats.Sample(frame.iloc[:, 0].values, runs_per_value=runs_per_value)
