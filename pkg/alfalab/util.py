# -*- coding: utf-8 -*-
import datetime
import logging
import os

import dateutil.tz
import numpy as np
import simplejson

logging.basicConfig()
alfalab_logger = logging.getLogger('alfalab')

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class AlfaException(Exception):
    pass


class ConfigException(AlfaException):
    pass


class BudgetException(AlfaException):
    """ Raised when a configurable budget runs out. ``context`` names where it happened,
    for example {'instance_index': 3, 'run_index': 17}. """

    def __init__(self, message, context=None):
        super(BudgetException, self).__init__(message)
        self.context = context or {}


class DimacsParseException(AlfaException):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = 'line %d: %s' % (line_number, message)
        super(DimacsParseException, self).__init__(message)
        self.line_number = line_number


class UnsatisfiableException(AlfaException):
    pass


class StatsException(AlfaException):
    pass


def splitmix64(x):
    """ The splitmix64 finalizer. A bijection on 64 bit integers. """
    x = (x + GOLDEN_GAMMA) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed, instance_index, run_index=0):
    """ Derives the seed of stream (instance_index, run_index) of an experiment.

    seed = splitmix64(base_seed + (i * 2**32 + j) * GOLDEN_GAMMA mod 2**64)

    Injective in (i, j) as long as both are below 2**32: the packing is injective, multiplying by
    an odd constant and adding base_seed are bijections mod 2**64, and so is splitmix64.
    Run index 0 is reserved for the modification stream of an instance.
    """
    if not (0 <= instance_index < 2 ** 32 and 0 <= run_index < 2 ** 32):
        raise AlfaException('Stream index out of range: (%s, %s)' % (instance_index, run_index))
    packed = (instance_index << 32) | run_index
    return splitmix64((int(base_seed) + packed * GOLDEN_GAMMA) & MASK64)


def make_rng(seed):
    """ Returns a numpy Generator. Accepts a seed, an existing Generator or None. """
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def stream_rng(base_seed, instance_index, run_index=0):
    return np.random.default_rng(derive_seed(base_seed, instance_index, run_index))


def ts_now():
    return datetime.datetime.now(dateutil.tz.tzutc())


def dt_to_ts(dt):
    if not isinstance(dt, datetime.datetime):
        logging.warning('Expected datetime, got %s' % (type(dt)))
        return dt
    ts = dt.isoformat()
    if dt.tzinfo is None:
        # Implicitly convert local times to UTC
        return ts + 'Z'
    return ts.replace('+00:00', 'Z')


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, datetime.datetime):
        return dt_to_ts(obj)
    raise TypeError('%r is not JSON serializable' % (obj,))


def encode_float(value):
    """ JSON has no infinity. Infinite means are written as the string 'inf'. """
    if value is None:
        return None
    value = float(value)
    if np.isinf(value):
        return 'inf' if value > 0 else '-inf'
    if np.isnan(value):
        return None
    return value


def decode_float(value):
    if value is None:
        return None
    return float(value)


def dump_json(obj, filename=None):
    """ Serializes obj deterministically. Writes it to filename if given and returns the text. """
    text = simplejson.dumps(obj, sort_keys=True, indent=2, default=_json_default, ignore_nan=True) + '\n'
    if filename is not None:
        with open(filename, 'w', newline='\n') as fh:
            fh.write(text)
    return text


def load_json(filename):
    with open(filename) as fh:
        return simplejson.load(fh)


def write_table(frame, filename):
    """ Writes a DataFrame as CSV so that equal frames give identical bytes. """
    frame.to_csv(filename, index=False, lineterminator='\n', float_format='%.17g')
    return filename


def ensure_dir(path):
    if path and not os.path.isdir(path):
        os.makedirs(path)
    return path
