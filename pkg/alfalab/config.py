# -*- coding: utf-8 -*-
import copy
import os

import jsonschema
import yaml
import yaml.scanner
from envparse import Env
from staticconf.loader import yaml_loader

from alfalab import sls
from alfalab.gen import GenSpec
from alfalab.util import AlfaException
from alfalab.util import ConfigException

# schema for experiment yaml
with open(os.path.join(os.path.dirname(__file__), 'schema.yaml')) as schema_file:
    experiment_schema = jsonschema.Draft4Validator(yaml.safe_load(schema_file))

required_options = frozenset(['base_instance', 'output_dir'])

# Settings that can be derived from ENV variables
env_settings = {'ALFALAB_WORKERS': 'workers'}

env = Env(ALFALAB_WORKERS=int)

# Used to map the names of solvers to their classes
solvers_mapping = {
    'srwa': sls.SrwaSolver,
    'probsat': sls.ProbSatSolver,
}

defaults = {
    'solver': 'srwa',
    'solver_options': {},
    'w': 4,
    'resolvent_budget_fraction': 0.1,
    'shuffle': True,
    'M': 200,
    'N': 25,
    'base_seed': 0,
    'max_flips': sls.DEFAULT_MAX_FLIPS,
    'max_pool_size': 10 ** 7,
    'bootstrap_rounds': 200,
    'alpha': 0.05,
    'workers': 1,
    'labels': {},
}


def get_module(module_name):
    """ Loads a module and returns a specific object.
    module_name should 'module.file.object'.
    Returns object or raises ConfigException on error. """
    try:
        module_path, module_class = module_name.rsplit('.', 1)
        base_module = __import__(module_path, globals(), locals(), [module_class])
        module = getattr(base_module, module_class)
    except (ImportError, AttributeError, ValueError) as e:
        raise ConfigException('Could not import module %s: %s' % (module_name, e)) from e
    return module


def load_configuration(filename, args=None):
    """ Load a yaml experiment file, fill in defaults and instantiate the solver.

    :param filename: The name of an experiment configuration file.
    :param args: Parsed command line arguments. ``workers`` overrides the file and the environment.
    :return: The experiment configuration, a dictionary.
    """
    conf = load_experiment_yaml(filename)
    load_options(conf, filename, args)
    load_modules(conf)
    return conf


def load_experiment_yaml(filename):
    conf = {
        'config_file': filename,
    }

    while True:
        try:
            loaded = yaml_loader(filename)
        except yaml.scanner.ScannerError as e:
            raise ConfigException('Could not parse file %s: %s' % (filename, e))
        except (IOError, OSError) as e:
            raise ConfigException('Could not read file %s: %s' % (filename, e))

        # Nested option dictionaries merge, the importing file wins
        for key in ('solver_options', 'labels'):
            if key in conf and key in loaded:
                conf[key] = dict(loaded[key], **conf[key])

        # A relative base instance path is relative to the file that names it
        if isinstance(loaded.get('base_instance'), str) and 'base_instance' not in conf:
            if not os.path.isabs(loaded['base_instance']):
                loaded['base_instance'] = os.path.join(os.path.dirname(filename), loaded['base_instance'])

        loaded.update(conf)
        conf = loaded
        if 'import' in conf:
            # Find the path of the next file.
            if os.path.isabs(conf['import']):
                filename = conf['import']
            else:
                filename = os.path.join(os.path.dirname(filename), conf['import'])
            del(conf['import'])  # or we could go on forever!
        else:
            break

    return conf


def load_options(conf, filename=None, args=None):
    """ Validates an experiment dictionary and sets defaults.

    :param conf: A dictionary of parsed YAML from an experiment config file.
    :param filename: Used for the default name and error messages.
    """
    bookkeeping = dict((key, conf.pop(key)) for key in ('config_file',) if key in conf)
    try:
        experiment_schema.validate(conf)
    except jsonschema.ValidationError as e:
        raise ConfigException('Invalid experiment file: %s\n%s' % (filename, e))
    conf.update(bookkeeping)

    for key, val in defaults.items():
        conf.setdefault(key, copy.deepcopy(val))
    if filename:
        conf.setdefault('name', os.path.splitext(os.path.basename(filename))[0])
    else:
        conf.setdefault('name', 'experiment')

    for env_var, conf_var in env_settings.items():
        val = env(env_var, default=None)
        if val is not None:
            conf[conf_var] = val
    if args is not None and getattr(args, 'workers', None) is not None:
        conf['workers'] = args.workers
    if conf['workers'] == 0:
        raise ConfigException('workers must be positive, or negative to count back from the number of CPUs')

    conf['max_flips'] = int(conf['max_flips'])
    if isinstance(conf['base_instance'], dict):
        conf['base_instance'] = load_generator_spec(conf['base_instance'])

    # Make sure we have required options
    if required_options - frozenset(conf.keys()):
        raise ConfigException('Missing required option(s): %s' % (', '.join(required_options - frozenset(conf.keys()))))
    return conf


def load_generator_spec(mapping):
    """ Turns a ``base_instance`` mapping into a GenSpec, keeping chances and ratio alongside. """
    mapping = dict(mapping)
    if 'm' not in mapping and 'ratio' not in mapping:
        raise ConfigException('A generated base instance needs m or ratio')
    if 'ratio' in mapping and mapping['kind'] != 'uniform':
        raise ConfigException('ratio applies to uniform instances only')
    if 'chances' in mapping and mapping['kind'] != 'hidden':
        raise ConfigException('chances apply to hidden-solution instances only')
    ratio = mapping.pop('ratio', None)
    chances = mapping.pop('chances', None)
    if 'm' not in mapping:
        mapping['m'] = max(1, int(round(ratio * mapping['n'])))
    try:
        spec = GenSpec(**mapping)
    except AlfaException as e:
        raise ConfigException('Invalid base instance generator: %s' % (e)) from e
    return {'spec': spec, 'ratio': ratio, 'chances': chances}


def load_solver(name, options=None):
    """ Returns an instance of the named solver. ``name`` is a key of solvers_mapping or a
    dotted path to an SlsSolver subclass. """
    options = dict(options or {})
    if name in solvers_mapping:
        solver_class = solvers_mapping[name]
    else:
        solver_class = get_module(name)
        if not isinstance(solver_class, type) or not issubclass(solver_class, sls.SlsSolver):
            raise ConfigException('Solver module %s is not a subclass of SlsSolver' % (name))

    reqs = solver_class.required_options
    if reqs - frozenset(options.keys()):
        raise ConfigException('Missing required solver option(s): %s' % (', '.join(sorted(reqs - frozenset(options.keys())))))
    try:
        return solver_class(options)
    except (KeyError, ValueError, TypeError, AlfaException) as e:
        raise ConfigException('Error initializing solver %s: %s' % (name, e)) from e


def load_modules(conf):
    """ Converts the solver name into an SlsSolver object. """
    conf['solver_name'] = conf['solver']
    conf['solver'] = load_solver(conf['solver'], conf['solver_options'])
    return conf


def build_configuration(mapping, filename=None, args=None):
    """ Same as load_configuration for a dictionary that did not come from a file. """
    conf = copy.deepcopy(mapping)
    load_options(conf, filename, args)
    load_modules(conf)
    return conf
