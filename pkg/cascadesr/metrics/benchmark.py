"""
Simulate, register, reconstruct and score every (image, noise level) cell of a test set.
"""
import os
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional
import numpy as np

from cascadesr.errors import ParameterError, ConfigError
from cascadesr.cascade import CascadePlan, mfsf_sr, sfmf_sr
from cascadesr.data.degradation import DegradationSpec, simulate_sequence
from cascadesr.data.registration import register_sequence, REGISTRATION_MODES
from cascadesr.data.patches import crop_to_multiple
from cascadesr.image.color import luminance
from cascadesr.image.io import read_image
from cascadesr.image.ops import resize_bicubic, shift_subpixel
from cascadesr.metrics.quality import psnr, ssim
from cascadesr.metrics.report import MetricsReport
from cascadesr.model.erbpn import erbpn_forward
from cascadesr.model.weights import load_weights
from cascadesr.solver.lorig import LorigConfig, lorig_reconstruct
from cascadesr.utils import load_config, config_from_dict

logger = logging.getLogger()

METHODS = ('bicubic', 'lorig', 'erbpn', 'mfsf', 'sfmf')


@dataclass
class BenchmarkSuite:
    images: List[str] = field(default_factory=list)
    methods: List[str] = field(default_factory=lambda: list(METHODS))
    scale: int = 4
    stage1_scale: int = 2
    stage2_scale: int = 2
    frames: int = 16
    blur_sigma: float = 1.5
    blur_radius: int = 4
    noise_variances: List[float] = field(default_factory=lambda: [0.0])
    shift_mode: str = 'grid'
    registration: str = 'ground_truth'
    seed: int = 1
    solver_config: Optional[str] = None
    erbpn_model: Optional[str] = None
    mfsf_model: Optional[str] = None
    sfmf_model: Optional[str] = None

    def __post_init__(self):
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f'unknown methods {unknown}, expected a subset of {METHODS}')
        if self.registration not in REGISTRATION_MODES:
            raise ConfigError(f'registration should be one of {REGISTRATION_MODES}')
        if self.stage1_scale * self.stage2_scale != self.scale and \
                ('mfsf' in self.methods or 'sfmf' in self.methods):
            raise ConfigError(f'stage scales {self.stage1_scale} x {self.stage2_scale} '
                              f'do not multiply to scale {self.scale}')

    @classmethod
    def from_file(cls, path):
        """Paths in the file are relative to it."""
        suite = config_from_dict(cls, load_config(path))
        base = os.path.dirname(os.path.abspath(path))

        def resolve(p):
            return p if p is None or os.path.isabs(p) else os.path.join(base, p)

        suite.images = [resolve(p) for p in suite.images]
        for key in ('solver_config', 'erbpn_model', 'mfsf_model', 'sfmf_model'):
            setattr(suite, key, resolve(getattr(suite, key)))
        return suite


class _Resources:
    """Solver config and networks shared read-only by all cells."""

    def __init__(self, suite):
        self.lorig_cfg = LorigConfig()
        if suite.solver_config:
            self.lorig_cfg = LorigConfig.from_dict(load_config(suite.solver_config))
        needed = {
            'erbpn': ('erbpn_model', suite.scale),
            'mfsf': ('mfsf_model', suite.stage2_scale),
            'sfmf': ('sfmf_model', suite.stage1_scale),
        }
        self.models = {}
        for method, (key, scale) in needed.items():
            if method not in suite.methods:
                continue
            path = getattr(suite, key)
            if not path:
                raise ConfigError(f'method {method} needs {key} in the suite')
            model = load_weights(path)
            if model.scale != scale:
                raise ParameterError(f'{key} has scale {model.scale}, {method} needs {scale}')
            model.eval()
            self.models[method] = model


def _score(hr, sr):
    return psnr(hr, sr), ssim(hr, sr)


def _cell_seed(seed, image_index, noise_index):
    return int(np.random.SeedSequence([seed, image_index, noise_index]).generate_state(1)[0])


def run_cell(suite, resources, image_index, noise_index):
    """Returns rows (image, method, psnr, ssim) of one image at one noise level."""
    path = suite.images[image_index]
    noise = suite.noise_variances[noise_index]
    name = os.path.splitext(os.path.basename(path))[0]
    hr = crop_to_multiple(luminance(read_image(path)), suite.scale)
    spec = DegradationSpec(scale=suite.scale, blur_sigma=suite.blur_sigma, blur_radius=suite.blur_radius,
                           noise_variance=noise, seed=_cell_seed(suite.seed, image_index, noise_index))
    truth = simulate_sequence(hr, spec, suite.frames, shift_mode=suite.shift_mode)
    seq = register_sequence(truth, mode=suite.registration)
    # multi-frame outputs live on the grid of the registered motions' origin
    if suite.registration == 'ground_truth':
        recon_hr = hr
    else:
        recon_hr = shift_subpixel(hr, *truth.motions[truth.reference_index])

    rows = []
    methods = set(suite.methods)
    if methods:
        methods.add('bicubic')
    for method in sorted(methods):
        if method == 'bicubic':
            ref_hr = shift_subpixel(hr, *truth.motions[truth.reference_index])
            scores = _score(ref_hr, np.clip(resize_bicubic(seq.reference, suite.scale), 0.0, 1.0))
        elif method == 'lorig':
            scores = _score(recon_hr, lorig_reconstruct(seq, resources.lorig_cfg, scale=suite.scale))
        elif method == 'erbpn':
            model = resources.models['erbpn']
            per_frame = [_score(shift_subpixel(hr, *m), erbpn_forward(f, model))
                         for f, m in zip(seq.frames, truth.motions)]
            scores = tuple(float(np.mean(v)) for v in zip(*per_frame))
        else:
            plan = CascadePlan(order=method, stage1_scale=suite.stage1_scale, stage2_scale=suite.stage2_scale,
                               lorig_cfg=resources.lorig_cfg, model=resources.models[method])
            fn = mfsf_sr if method == 'mfsf' else sfmf_sr
            scores = _score(recon_hr, fn(seq, plan))
        rows.append((name, method, noise, *scores))
        logger.info(f'{name} noise {noise:g} {method}: psnr {scores[0]:.4f} dB, ssim {scores[1]:.4f}')
    return rows


def benchmark(suite, threads=1):
    """Score every method on every (image, noise level) cell; rows sorted by image, method, noise."""
    report = MetricsReport(metadata={
        'scale': suite.scale,
        'frames': suite.frames,
        'blur_sigma': suite.blur_sigma,
        'blur_radius': suite.blur_radius,
        'shift_mode': suite.shift_mode,
        'registration': suite.registration,
        'seed': suite.seed,
        'methods': ','.join(suite.methods),
    })
    if not suite.methods:
        return report
    if not suite.images:
        raise ParameterError('benchmark suite has no images')
    resources = _Resources(suite)
    report.metadata['lambda'] = resources.lorig_cfg.lam
    for method, model in sorted(resources.models.items()):
        report.metadata[f'{method}_training_mode'] = model.metadata.get('training_mode', 'unknown')
    cells = [(i, j) for i in range(len(suite.images)) for j in range(len(suite.noise_variances))]
    logger.info(f'Benchmark: {len(suite.images)} images x {len(suite.noise_variances)} noise levels, '
                f'methods {suite.methods}, {threads} threads')
    with ThreadPoolExecutor(max_workers=max(1, threads)) as executor:
        results = executor.map(lambda c: run_cell(suite, resources, *c), cells)
        for rows in results:
            for name, method, noise, p, s in rows:
                report.add(name, method, suite.scale, noise, p, s)
    return report
