# -*- coding: utf-8 -*-
import argparse
import logging
import os
import signal
import sys

import numpy as np

from alfalab import harness
from alfalab import restart
from alfalab import stats
from alfalab.config import load_configuration
from alfalab.config import load_solver
from alfalab.formula import dimacs_model_line
from alfalab.formula import load_dimacs
from alfalab.formula import write_dimacs
from alfalab.gen import ChanceVector
from alfalab.gen import GenSpec
from alfalab.gen import generate
from alfalab.resolve import alfa_modify
from alfalab.resolve import ModificationParams
from alfalab.resolve import res_w_closure
from alfalab.sls import DEFAULT_MAX_FLIPS
from alfalab.sls import expected_flips_oracle
from alfalab.sls import FLIP_BUDGET_EXHAUSTED
from alfalab.sls import run_with_restarts
from alfalab.sls import SolveOutcome
from alfalab.sls import SOLVED
from alfalab.summary import load_reports
from alfalab.summary import render_summary
from alfalab.summary import summarize
from alfalab.util import AlfaException
from alfalab.util import alfalab_logger
from alfalab.util import BudgetException
from alfalab.util import ConfigException
from alfalab.util import derive_seed
from alfalab.util import dump_json
from alfalab.util import ensure_dir
from alfalab.util import load_json
from alfalab.util import write_table

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_IO = 4


def parse_fractions(text):
    try:
        fractions = [float(f) for f in text.split(',')]
    except ValueError:
        raise argparse.ArgumentTypeError('Expected comma separated numbers, got %r' % (text))
    if any(f <= 0 for f in fractions):
        raise argparse.ArgumentTypeError('Fractions must be positive')
    return fractions


def parse_chances(text):
    try:
        return ChanceVector.parse(text)
    except (AlfaException, ValueError) as e:
        raise argparse.ArgumentTypeError(str(e))


def parse_option(text):
    """ key=value, the value read as a number when it looks like one. """
    if '=' not in text:
        raise argparse.ArgumentTypeError('Expected key=value, got %r' % (text))
    key, value = text.split('=', 1)
    for cast in (int, float):
        try:
            return key, cast(value)
        except ValueError:
            pass
    return key, value


class AlfaLab(object):
    """ Command line front end. Every subcommand is a ``run_<name>`` method returning an exit code;
    exceptions are mapped to exit codes in main. """

    def parse_args(self, args):
        parser = argparse.ArgumentParser(prog='alfalab')
        parser.add_argument('--verbose', action='store_true', dest='verbose', help='Log progress at INFO level')
        parser.add_argument('--debug', action='store_true', dest='debug', help='Log at DEBUG level. Implies --verbose')
        subparsers = parser.add_subparsers(dest='command', metavar='command')
        subparsers.required = True

        gen = subparsers.add_parser('gen', help='Generate a hidden-solution or uniform random instance')
        gen.add_argument('kind', choices=['hidden', 'uniform'])
        gen.add_argument('--n', type=int, required=True, help='Number of variables')
        gen.add_argument('--m', type=int, help='Number of clauses')
        gen.add_argument('--k', type=int, default=3, help='Clause width (default: 3)')
        gen.add_argument('--seed', type=int, default=0)
        gen.add_argument('--chances', type=parse_chances, help='q_0,...,q_k for hidden-solution instances')
        gen.add_argument('--ratio', type=float, help='Draw uniform instances with m = ratio * n until one is satisfiable')
        gen.add_argument('-o', '--output', required=True, help='DIMACS file to write')
        gen.add_argument('--manifest', help='Generator manifest JSON (default: <output>.json)')

        modify = subparsers.add_parser('modify', help='Add a random subset of bounded-width resolvents')
        modify.add_argument('instance', help='DIMACS file')
        modify.add_argument('--w', type=int, default=4, help='Width bound (default: 4)')
        group = modify.add_mutually_exclusive_group()
        group.add_argument('--p', type=float, help='Inclusion probability of each resolvent')
        group.add_argument('--fraction', type=float, default=0.1,
                           help='Expected resolvents added as a fraction of the clause count (default: 0.1)')
        modify.add_argument('--seed', type=int, default=0)
        modify.add_argument('--no-shuffle', action='store_false', dest='shuffle', help='Keep canonical resolvent order')
        modify.add_argument('--max-pool-size', type=int, default=10 ** 7)
        modify.add_argument('-o', '--output', required=True, help='DIMACS file to write')
        modify.add_argument('--manifest', help='Modification manifest JSON (default: <output>.json)')

        solve = subparsers.add_parser('solve', help='Run a solver and report flips')
        solve.add_argument('instance', help='DIMACS file')
        solve.add_argument('--solver', default='srwa', help='srwa, probsat or module.Class (default: srwa)')
        solve.add_argument('--option', type=parse_option, action='append', default=[], dest='options',
                           help='Solver option key=value, may be repeated')
        solve.add_argument('--seed', type=int, default=0)
        solve.add_argument('--runs', type=int, default=1, help='Independent runs, run j uses stream (seed, j)')
        solve.add_argument('--max-flips', type=int, default=DEFAULT_MAX_FLIPS)
        solve.add_argument('--cutoff', type=int, help='Restart from a fresh assignment every CUTOFF flips')
        solve.add_argument('--oracle', action='store_true', help='Also print the exact expected flips (n <= 12)')
        solve.add_argument('--model', action='store_true', help='Add the model of solved runs as a DIMACS v-line')

        experiment = subparsers.add_parser('experiment', help='Run an experiment configuration')
        experiment.add_argument('config', help='Experiment YAML file')
        experiment.add_argument('--workers', type=int, help='Worker processes, overrides config and ALFALAB_WORKERS')
        experiment.add_argument('--fraction', type=parse_fractions, help='Run once per resolvent budget fraction f1,f2,...')
        experiment.add_argument('--output-dir', dest='output_dir', help='Overrides output_dir of the configuration')

        for name, description in (('fit', 'Fit a three-parameter lognormal and run the chi-square test'),
                                  ('bootstrap', 'Fit and run the bootstrap test for noisy means')):
            command = subparsers.add_parser(name, help=description)
            command.add_argument('sample', help='hardness.csv or a one-column CSV of values')
            command.add_argument('--runs-per-value', type=int, dest='runs_per_value',
                                 help='Runs averaged into each value (default: N of a manifest.json next to the '
                                      'sample, else 100)')
            command.add_argument('--rounds', type=int, default=200 if name == 'bootstrap' else 0,
                                 help='Bootstrap rounds')
            command.add_argument('--alpha', type=float, default=0.05)
            command.add_argument('--seed', type=int, default=0)
            command.add_argument('--workers', type=int, default=1)
            command.add_argument('-o', '--output', help='FitReport JSON to write')

        analyze = subparsers.add_parser('restart-analyze', help='Decide whether fixed-cutoff restarts are useful')
        analyze.add_argument('fit', nargs='?', help='FitReport JSON')
        analyze.add_argument('--model', choices=sorted(restart.models_mapping), default='lognormal3')
        analyze.add_argument('--rate', type=float, default=1.0, help='Rate of the exponential reference')
        analyze.add_argument('--sample', help='Sample CSV for the empirical model')
        analyze.add_argument('-o', '--output-dir', dest='output_dir', help='Directory for restart.json and restart_curve.csv')

        plot = subparsers.add_parser('plot-data', help='Write ecdf and fitted cdf/survival tables')
        plot.add_argument('sample', help='hardness.csv or a one-column CSV of values')
        plot.add_argument('fit', help='FitReport JSON')
        plot.add_argument('-o', '--output-dir', dest='output_dir', required=True)
        plot.add_argument('--points', type=int, default=harness.PLOT_POINTS)

        summary = subparsers.add_parser('summarize', help='Tabulate test verdicts of many fit reports')
        summary.add_argument('reports', nargs='+', help='fit.json files or directories holding them')
        summary.add_argument('--group-by', dest='group_by', default='instance_type')
        summary.add_argument('--alpha', type=float, default=0.05)

        self.args = parser.parse_args(args)

    def __init__(self, args):
        self.parse_args(args)
        if self.args.debug:
            alfalab_logger.setLevel(logging.DEBUG)
        elif self.args.verbose:
            alfalab_logger.setLevel(logging.INFO)

    def run(self):
        return getattr(self, 'run_' + self.args.command.replace('-', '_'))()

    def run_gen(self):
        args = self.args
        if args.m is None and args.ratio is None:
            raise ConfigException('gen needs --m or --ratio')
        if args.ratio is not None and args.kind != 'uniform':
            raise ConfigException('--ratio applies to uniform instances only')
        m = args.m if args.m is not None else max(1, int(round(args.ratio * args.n)))
        try:
            spec = GenSpec(n=args.n, m=m, k=args.k, seed=args.seed, kind=args.kind)
        except AlfaException as e:
            raise ConfigException(str(e)) from e
        formula, _, manifest = generate(spec, args.chances, args.ratio)
        write_dimacs(formula, args.output)
        dump_json(manifest, args.manifest or args.output + '.json')
        alfalab_logger.info('Wrote %r to %s' % (formula, args.output))
        return EXIT_OK

    def run_modify(self):
        args = self.args
        formula = load_dimacs(args.instance)
        pool = res_w_closure(formula, args.w, args.max_pool_size)
        p = args.p if args.p is not None else harness.calibrate_p(formula, args.w, args.fraction, pool)
        try:
            params = ModificationParams(w=args.w, p=p, shuffle=args.shuffle, seed=args.seed)
        except AlfaException as e:
            raise ConfigException(str(e)) from e
        modified = alfa_modify(formula, params, np.random.default_rng(args.seed), pool)
        write_dimacs(modified, args.output)
        manifest = {'instance': args.instance, 'w': args.w, 'p': p, 'fraction': args.fraction if args.p is None else None,
                    'seed': args.seed, 'shuffle': args.shuffle, 'pool_size': len(pool),
                    'added': modified.num_clauses - formula.num_clauses, 'num_clauses': modified.num_clauses}
        dump_json(manifest, args.manifest or args.output + '.json')
        alfalab_logger.info('Added %d of %d resolvents (w=%d, p=%.6g, seed=%d)' %
                            (manifest['added'], len(pool), args.w, p, args.seed))
        return EXIT_OK

    def run_solve(self):
        args = self.args
        formula = load_dimacs(args.instance)
        solver = load_solver(args.solver, dict(args.options))
        runs = []
        for j in range(1, args.runs + 1):
            seed = derive_seed(args.seed, 0, j)
            try:
                outcome = run_with_restarts(solver, formula, args.cutoff, np.random.default_rng(seed), args.max_flips)
            except BudgetException as e:
                outcome = SolveOutcome(FLIP_BUDGET_EXHAUSTED, e.context['flips'], attempts=e.context['attempts'])
            run = {'run_index': j, 'seed': seed, 'status': outcome.status, 'flips': outcome.flips,
                   'attempts': outcome.attempts}
            if args.model and outcome.solved:
                run['model'] = dimacs_model_line(outcome.satisfying_assignment)
            runs.append(run)
        solved = [r['flips'] for r in runs if r['status'] == SOLVED]
        report = {'solver': solver.describe(), 'runs': runs, 'solved': len(solved),
                  'mean_flips': float(np.mean(solved)) if solved else None}
        if args.oracle:
            report['expected_flips'] = expected_flips_oracle(formula, solver)
        print(dump_json(report), end='')
        if len(solved) < len(runs):
            alfalab_logger.warning('%d of %d runs used up max_flips=%d' % (len(runs) - len(solved), len(runs), args.max_flips))
            return EXIT_BUDGET
        return EXIT_OK

    def run_experiment(self):
        args = self.args
        conf = load_configuration(args.config, args)
        if args.fraction:
            harness.run_sweep(conf, args.fraction, args.output_dir)
        else:
            harness.run_experiment(conf, args.output_dir)
        return EXIT_OK

    def _fit_report(self):
        args = self.args
        sample = harness.load_sample(args.sample, args.runs_per_value)
        report = stats.build_fit_report(sample, args.rounds, args.alpha, np.random.default_rng(args.seed), args.workers,
                                        {'sample': os.path.basename(args.sample)})
        if args.output:
            dump_json(report.to_dict(), args.output)
        print(dump_json(report.to_dict()), end='')
        return EXIT_OK

    def run_fit(self):
        return self._fit_report()

    def run_bootstrap(self):
        if self.args.rounds < 1:
            raise ConfigException('bootstrap needs --rounds >= 1')
        return self._fit_report()

    def run_restart_analyze(self):
        args = self.args
        if args.model == 'lognormal3':
            if not args.fit:
                raise ConfigException('The lognormal model needs a FitReport')
            model = restart.model_from_fit(load_json(args.fit))
        elif args.model == 'empirical':
            if not args.sample:
                raise ConfigException('The empirical model needs --sample')
            model = restart.EmpiricalModel(harness.load_sample(args.sample))
        else:
            model = restart.ExponentialModel(args.rate)
        analysis = restart.analyze_restarts(model)
        if args.output_dir:
            ensure_dir(args.output_dir)
            dump_json(analysis.to_dict(), os.path.join(args.output_dir, 'restart.json'))
            write_table(analysis.curve_frame(), os.path.join(args.output_dir, 'restart_curve.csv'))
        print(dump_json(analysis.to_dict()), end='')
        return EXIT_OK

    def run_plot_data(self):
        args = self.args
        sample = harness.load_sample(args.sample)
        params = stats.Lognormal3Params.from_dict(load_json(args.fit))
        ensure_dir(args.output_dir)
        for name, frame in harness.plot_frames(sample, params, args.points).items():
            write_table(frame, os.path.join(args.output_dir, 'plot_%s.csv' % (name)))
        return EXIT_OK

    def run_summarize(self):
        args = self.args
        reports = load_reports(args.reports)
        if not reports:
            raise ConfigException('No fit reports found')
        print(render_summary(summarize(reports, args.group_by, args.alpha)))
        return EXIT_OK


def handle_signal(signal, frame):
    alfalab_logger.info('SIGINT received, stopping alfalab...')
    # use os._exit to exit immediately and avoid someone catching SystemExit
    os._exit(130)


def main(args=None):
    signal.signal(signal.SIGINT, handle_signal)
    if args is None:
        args = sys.argv[1:]
    try:
        return AlfaLab(args).run()
    except ConfigException as e:
        alfalab_logger.error('Configuration error: %s' % (e))
        return EXIT_CONFIG
    except BudgetException as e:
        alfalab_logger.error('Aborted: %s %s' % (e, e.context or ''))
        return EXIT_BUDGET
    except (IOError, OSError) as e:
        alfalab_logger.error('I/O error: %s' % (e))
        return EXIT_IO
    except AlfaException as e:
        alfalab_logger.error('%s' % (e))
        return EXIT_ERROR


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
