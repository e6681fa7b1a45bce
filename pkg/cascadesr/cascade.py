"""
Two-stage super-resolution: multi-frame reconstruction then the single-frame network (mfsf),
or the network on every frame then multi-frame reconstruction (sfmf).
"""
import os
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from cascadesr.errors import ParameterError, ConfigError
from cascadesr.data.degradation import FrameSequence, rescale_sequence
from cascadesr.model.erbpn import ERBPN, erbpn_forward
from cascadesr.model.weights import load_weights
from cascadesr.solver.lorig import LorigConfig, lorig_reconstruct
from cascadesr.utils import load_config, parse_value

logger = logging.getLogger()

ORDERS = ('mfsf', 'sfmf')


@dataclass
class CascadePlan:
    order: str = 'mfsf'
    stage1_scale: int = 2
    stage2_scale: int = 2
    lorig_cfg: LorigConfig = field(default_factory=LorigConfig)
    model: Optional[ERBPN] = None
    # 'erbpn' and 'lorig' invocations
    counters: Counter = field(default_factory=Counter)

    def __post_init__(self):
        if self.order not in ORDERS:
            raise ParameterError(f'order should be one of {ORDERS}, got {self.order}')
        for s in (self.stage1_scale, self.stage2_scale):
            if int(s) != s or s < 1:
                raise ParameterError(f'stage scales should be integers >= 1, got {s}')

    @property
    def total_scale(self):
        return self.stage1_scale * self.stage2_scale

    @property
    def network_scale(self):
        return self.stage2_scale if self.order == 'mfsf' else self.stage1_scale

    def check_model(self):
        if self.model is None:
            raise ParameterError(f'{self.order} cascade needs a network')
        if self.model.scale != self.network_scale:
            raise ParameterError(f'network scale {self.model.scale} does not match the '
                                 f'{self.order} network stage scale {self.network_scale}')

    @classmethod
    def from_config(cls, file):
        """
        Keys: order, stage1_scale, stage2_scale, solver_config, model. Paths are relative to the file.
        """
        kv = load_config(file)
        unknown = set(kv) - {'order', 'stage1_scale', 'stage2_scale', 'solver_config', 'model'}
        if unknown:
            raise ConfigError(f'unknown keys in {file}: {sorted(unknown)}')
        base = os.path.dirname(os.path.abspath(file))
        lorig_cfg = LorigConfig()
        if 'solver_config' in kv:
            lorig_cfg = LorigConfig.from_dict(load_config(os.path.join(base, kv['solver_config'])))
        model = load_weights(os.path.join(base, kv['model'])) if 'model' in kv else None
        return cls(
            order=kv.get('order', 'mfsf'),
            stage1_scale=parse_value(int, kv.get('stage1_scale', '2'), 'stage1_scale'),
            stage2_scale=parse_value(int, kv.get('stage2_scale', '2'), 'stage2_scale'),
            lorig_cfg=lorig_cfg,
            model=model,
        )


def _check_plan(plan, order):
    if plan.order != order:
        raise ParameterError(f'plan order is {plan.order}, expected {order}')
    plan.check_model()


def mfsf_sr(seq, plan, executor=None):
    """Reconstruct at stage1_scale from all frames, then refine with the network."""
    _check_plan(plan, 'mfsf')
    z = lorig_reconstruct(seq, plan.lorig_cfg, scale=plan.stage1_scale, executor=executor)
    plan.counters['lorig'] += 1
    out = erbpn_forward(z, plan.model)
    plan.counters['erbpn'] += 1
    return out


def sfmf_sr(seq, plan, executor=None):
    """Upscale every frame with the network, then reconstruct at stage2_scale from the
    enhanced frames. Motions stay in pixels of the final grid."""
    _check_plan(plan, 'sfmf')
    mapper = executor.map if executor is not None else map
    enhanced = list(mapper(lambda f: erbpn_forward(f, plan.model), seq.frames))
    plan.counters['erbpn'] += len(enhanced)
    target = rescale_sequence(seq, plan.total_scale)
    enhanced_seq = FrameSequence(
        frames=enhanced,
        motions=target.motions,
        spec=target.spec.replace(scale=plan.stage2_scale),
        reference_index=seq.reference_index,
    )
    out = lorig_reconstruct(enhanced_seq, plan.lorig_cfg, scale=plan.stage2_scale, executor=executor)
    plan.counters['lorig'] += 1
    return out


def cascade_sr(seq, plan, executor=None):
    fn = mfsf_sr if plan.order == 'mfsf' else sfmf_sr
    logger.info(f'{plan.order} cascade: x{plan.stage1_scale} then x{plan.stage2_scale} on {len(seq)} frames')
    return fn(seq, plan, executor=executor)
