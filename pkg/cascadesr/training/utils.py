import json
import inspect
from torch import optim

from cascadesr.errors import ConfigError, ParameterError


def save_args(args, file):
    with open(file, 'w') as wt:
        kwargs = args._get_kwargs()
        json.dump(kwargs, wt)


#######################################################
# optimizer and lr scheduler specs: method,arg1=float1,arg2=float2...
#######################################################


def split_method_kwargs(s):
    """s: method,arg1=float1,arg2=float2..."""
    if "," in s:
        method = s[:s.find(',')]
        kwargs = {}
        for x in s[s.find(',') + 1:].split(','):
            split = x.split('=')
            if len(split) != 2:
                raise ConfigError(f'bad option {x!r} in {s!r}, expected name=value')
            try:
                kwargs[split[0]] = float(split[1])
            except ValueError:
                raise ConfigError(f'bad value for {split[0]} in {s!r}')
    else:
        method = s
        kwargs = {}
    return method, kwargs


def get_optimizer(parameters, s):
    """
    Parse optimizer parameters.
    Input should be of the form:
        - "adam,lr=1e-4,beta1=0.9,beta2=0.999,eps=1e-8"
        - "sgd,lr=0.01"
    """
    method, optim_params = split_method_kwargs(s)

    if method in ('adam', 'adamw'):
        optim_fn = optim.Adam if method == 'adam' else optim.AdamW
        if 'beta1' in optim_params or 'beta2' in optim_params:
            optim_params['betas'] = (optim_params.get('beta1', 0.9), optim_params.get('beta2', 0.999))
            optim_params.pop('beta1', None)
            optim_params.pop('beta2', None)
    elif method == 'sgd':
        optim_fn = optim.SGD
        if 'lr' not in optim_params:
            raise ConfigError('sgd requires lr')
    else:
        raise ConfigError('Unknown optimization method: "%s"' % method)

    expected_args = inspect.signature(optim_fn.__init__)
    expected_args = list(expected_args.parameters.keys())
    assert expected_args[:2] == ['self', 'params']
    if not all(k in expected_args[2:] for k in optim_params.keys()):
        raise ConfigError('Unexpected parameters: expected "%s", got "%s"' % (
            str(expected_args[2:]), str(optim_params.keys())))

    return optim_fn(parameters, **optim_params)


def get_lr_scheduler(optimizer, s):
    """
    s:
        - none
        - steplr,step_size=100,gamma=0.5
    """
    if s == 'none' or not s:
        return None
    method, kwargs = split_method_kwargs(s)
    from .lr_scheduler import StepLR
    if method == 'steplr':
        return StepLR(optimizer, **kwargs)
    raise ConfigError(f'Unknown lr scheduler {s}')


def adam_step(optimizer, params, grads):
    """
    One update of optimizer with externally computed gradients, in parameter order.
    """
    params = list(params)
    grads = list(grads)
    if len(params) != len(grads):
        raise ParameterError(f'{len(params)} parameters but {len(grads)} gradients')
    for p, g in zip(params, grads):
        p.grad = None if g is None else g.detach().clone()
    optimizer.step()
    return params
