import os
import dataclasses
import typing
import numpy as np
import torch

from cascadesr.errors import ConfigError, NumericError

FALSY_STRINGS = {'off', 'false', '0', 'no'}
TRUTHY_STRINGS = {'on', 'true', '1', 'yes'}


def bool_flag(s):
    """
    Parse boolean arguments from the command line.
    """
    if isinstance(s, bool):
        return s
    if s.lower() in FALSY_STRINGS:
        return False
    elif s.lower() in TRUTHY_STRINGS:
        return True
    else:
        raise ConfigError("invalid value for a boolean flag: {}".format(s))


def assert_finite(value, name='input'):
    """
    Check ndarray/Tensor or list of them, raise NumericError on NaN or Inf.
    """
    if isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            assert_finite(v, '{}[{}]'.format(name, i))
        return value
    if isinstance(value, torch.Tensor):
        ok = bool(torch.isfinite(value).all())
    else:
        ok = bool(np.isfinite(np.asarray(value)).all())
    if not ok:
        raise NumericError('{} contains NaN or Inf'.format(name))
    return value


def acquire_keys(d, keys, msg):
    """Check and get required keys
    """
    single = False
    if isinstance(keys, str):
        single = True
        keys = [keys]
    r = []
    for k in keys:
        if k not in d:
            raise ConfigError('Key {} is not found, with message {}'.format(k, msg))
        r.append(d[k])
    return r[0] if single else r


###################################################
# flat key-value config files
###################################################


def load_config(file):
    """Read `key = value` lines, `#` starts a comment.
    Returns an ordered dict of raw strings.
    """
    if not os.path.isfile(file):
        raise ConfigError(f'config file {file} does not exist')
    kv = {}
    with open(file, encoding='utf-8') as f:
        for lineno, line in enumerate(f, 1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            if '=' not in line:
                raise ConfigError(f'{file}:{lineno}: expected key = value, got {line!r}')
            k, v = line.split('=', 1)
            k, v = k.strip(), v.strip()
            if not k:
                raise ConfigError(f'{file}:{lineno}: empty key')
            if k in kv:
                raise ConfigError(f'{file}:{lineno}: duplicate key {k}')
            kv[k] = v
    return kv


def _format_value(v):
    if isinstance(v, bool):
        return 'true' if v else 'false'
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ','.join(_format_value(x) for x in v)
    if v is None:
        return 'none'
    return str(v)


def save_config(obj, file, header=None):
    """Write a dataclass instance or a dict in the flat format."""
    items = dataclasses.asdict(obj).items() if dataclasses.is_dataclass(obj) else obj.items()
    with open(file, 'w', encoding='utf-8') as wt:
        if header:
            for line in header.splitlines():
                wt.write(f'# {line}\n')
        for k, v in items:
            wt.write(f'{k} = {_format_value(v)}\n')


def parse_value(tp, s, key='value'):
    """Convert the string s to type tp (a dataclass field annotation)."""
    if not isinstance(s, str):
        return s
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    try:
        if origin is typing.Union:
            inner = [a for a in args if a is not type(None)]
            if s.lower() in ('none', ''):
                return None
            return parse_value(inner[0], s, key)
        if origin in (list, tuple):
            elem = args[0] if args else str
            values = [parse_value(elem, x.strip(), key) for x in s.split(',') if x.strip()]
            return tuple(values) if origin is tuple else values
        if tp is bool:
            return bool_flag(s)
        if tp in (int, float, str):
            return tp(s)
    except ValueError as e:
        raise ConfigError(f'cannot parse {key} = {s!r} as {tp}: {e}')
    return s


def config_from_dict(cls, kv, base=None, strict=True):
    """Build dataclass cls from raw strings, starting from base (or the class defaults)."""
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = [k for k in kv if k not in names]
    if strict and unknown:
        raise ConfigError(f'unknown keys for {cls.__name__}: {unknown}, expected {sorted(names)}')
    values = dataclasses.asdict(base) if base is not None else {}
    for k, v in kv.items():
        if k in names:
            values[k] = parse_value(names[k].type, v, k)
    return cls(**values)
