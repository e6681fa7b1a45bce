"""
Synthetic LR sequences and the observation operator W_k = D B M_k.
"""
import os
import math
import logging
import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Tuple
import numpy as np

from cascadesr.errors import ParameterError, FormatError, ConfigError
from cascadesr.image.ops import (
    as_plane, gaussian_kernel, delta_kernel, kernel_radius, convolve_circular,
    correlate_circular, shift_subpixel, shift_subpixel_adjoint, decimate, upsample_zero,
)
from cascadesr.image.color import rgb_to_ycbcr, ycbcr_to_rgb
from cascadesr.image.io import read_image, write_image
from cascadesr.utils import acquire_keys, load_config, save_config, parse_value

logger = logging.getLogger()

MANIFEST = 'manifest.txt'
MANIFEST_VERSION = 1
NOISE_SWEEP = (0.001, 0.002, 0.003, 0.004, 0.005)


@dataclass(frozen=True)
class DegradationSpec:
    """Decimation scale, Gaussian blur on the HR grid and AWGN variance on the [0, 1] scale.
    blur_sigma = 0 gives a delta kernel. kernel, when set, replaces the Gaussian.
    """
    scale: int = 4
    blur_sigma: float = 1.5
    blur_radius: int = 4
    noise_variance: float = 0.0
    seed: int = 1
    kernel: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if int(self.scale) != self.scale or self.scale < 1:
            raise ParameterError(f'scale should be an integer >= 1, got {self.scale}')
        if self.noise_variance < 0:
            raise ParameterError(f'noise_variance should be >= 0, got {self.noise_variance}')
        if self.blur_sigma < 0:
            raise ParameterError(f'blur_sigma should be >= 0, got {self.blur_sigma}')
        if self.kernel is not None:
            k = np.asarray(self.kernel, dtype=np.float64)
            kernel_radius(k)
            if not np.isfinite(k).all() or abs(k.sum()) == 0:
                raise ParameterError('kernel should be finite with non-zero sum')
            object.__setattr__(self, 'kernel', k / k.sum())
        elif self.blur_radius < 1:
            raise ParameterError(f'blur_radius should be >= 1, got {self.blur_radius}')

    @cached_property
    def blur(self):
        if self.kernel is not None:
            return self.kernel
        if self.blur_sigma == 0:
            return delta_kernel(self.blur_radius)
        return gaussian_kernel(self.blur_sigma, self.blur_radius)

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


def identity_spec():
    return DegradationSpec(scale=1, blur_sigma=0.0, blur_radius=1, noise_variance=0.0)


@dataclass
class FrameSequence:
    """Observed LR frames, their motions in pixels of the HR grid (spec.scale x LR)
    and the shared degradation. chroma holds (cb, cr) LR planes per frame for colour input.
    """
    frames: List[np.ndarray]
    motions: List[Tuple[float, float]]
    spec: DegradationSpec
    reference_index: int = 0
    chroma: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None

    def __post_init__(self):
        if len(self.frames) == 0:
            raise ParameterError('sequence has no frames')
        self.frames = [as_plane(f, 'frame') for f in self.frames]
        self.motions = [(float(dx), float(dy)) for dx, dy in self.motions]
        if len(self.frames) != len(self.motions):
            raise ParameterError(f'{len(self.frames)} frames but {len(self.motions)} motions')
        shapes = {f.shape for f in self.frames}
        if len(shapes) != 1:
            raise ParameterError(f'frames differ in shape: {sorted(shapes)}')
        if not 0 <= self.reference_index < len(self.frames):
            raise ParameterError(f'reference_index {self.reference_index} out of range [0, {len(self.frames)})')
        if self.chroma is not None and len(self.chroma) != len(self.frames):
            raise ParameterError(f'{len(self.chroma)} chroma pairs for {len(self.frames)} frames')

    def __len__(self):
        return len(self.frames)

    @property
    def lr_shape(self):
        return self.frames[0].shape

    @property
    def hr_shape(self):
        h, w = self.lr_shape
        return h * self.spec.scale, w * self.spec.scale

    @property
    def reference(self):
        return self.frames[self.reference_index]

    @property
    def is_color(self):
        return self.chroma is not None

    def replace(self, **kwargs):
        return dataclasses.replace(self, **kwargs)


def apply_W(z, motion, spec):
    """decimate(convolve(shift(z, motion), blur), s)"""
    dx, dy = motion
    return decimate(convolve_circular(shift_subpixel(z, dx, dy), spec.blur), spec.scale)


def apply_W_adjoint(g, motion, spec):
    dx, dy = motion
    return shift_subpixel_adjoint(correlate_circular(upsample_zero(g, spec.scale), spec.blur), dx, dy)


def add_awgn(img, variance, seed):
    """i.i.d. N(0, variance) samples added to img; seed may be an int or a tuple of ints."""
    img = as_plane(img)
    if variance < 0:
        raise ParameterError(f'variance should be >= 0, got {variance}')
    if variance == 0:
        return img.copy()
    rng = np.random.default_rng(seed)
    return img + rng.normal(0.0, math.sqrt(variance), size=img.shape)


def grid_motions(count, scale):
    """Row-major lattice of side ceil(sqrt(count)) with step scale / side HR pixels."""
    side = math.ceil(math.sqrt(count))
    step = scale / side
    return [((k % side) * step, (k // side) * step) for k in range(count)]


def random_motions(count, scale, seed):
    rng = np.random.default_rng([seed, count, 0x5EED])
    return [(float(dx), float(dy)) for dx, dy in rng.uniform(0.0, scale, size=(count, 2))]


def simulate_sequence(hr, spec, count, shift_mode='grid', chroma=None, executor=None):
    """Frame k = W_k hr + AWGN, the noise stream seeded by (spec.seed, k).
    chroma: optional (cb, cr) HR planes, degraded without noise.
    """
    hr = as_plane(hr, 'hr')
    if count < 1:
        raise ParameterError(f'count should be >= 1, got {count}')
    h, w = hr.shape
    if h % spec.scale or w % spec.scale:
        raise ParameterError(f'hr shape {hr.shape} is not divisible by scale {spec.scale}')
    if shift_mode == 'grid':
        motions = grid_motions(count, spec.scale)
    elif shift_mode == 'random':
        motions = random_motions(count, spec.scale, spec.seed)
    else:
        raise ParameterError(f'unknown shift_mode {shift_mode}, expected grid or random')

    def frame(k):
        return add_awgn(apply_W(hr, motions[k], spec), spec.noise_variance, (spec.seed, k))

    mapper = executor.map if executor is not None else map
    frames = list(mapper(frame, range(count)))
    chroma_frames = None
    if chroma is not None:
        cb, cr = as_plane(chroma[0], 'cb'), as_plane(chroma[1], 'cr')
        chroma_frames = [(apply_W(cb, m, spec), apply_W(cr, m, spec)) for m in motions]
    logger.info(f'Simulated {count} frames of shape {frames[0].shape} ({shift_mode} shifts, '
                f'scale {spec.scale}, sigma {spec.blur_sigma}, noise variance {spec.noise_variance})')
    return FrameSequence(frames, motions, spec, reference_index=count // 2, chroma=chroma_frames)


def rescale_sequence(seq, scale):
    """Express motions and blur on a grid of `scale` x LR instead of spec.scale x LR."""
    if int(scale) != scale or scale < 1:
        raise ParameterError(f'scale should be an integer >= 1, got {scale}')
    if scale == seq.spec.scale:
        return seq
    r = scale / seq.spec.scale
    if seq.spec.kernel is not None:
        raise ParameterError('a user-provided kernel cannot be resampled to another scale')
    spec = seq.spec.replace(
        scale=int(scale),
        blur_sigma=seq.spec.blur_sigma * r,
        blur_radius=max(1, math.ceil(seq.spec.blur_radius * r)),
    )
    motions = [(dx * r, dy * r) for dx, dy in seq.motions]
    return seq.replace(motions=motions, spec=spec)


def save_sequence(seq, directory, ext='.png'):
    """Numbered frames plus a flat key-value manifest."""
    os.makedirs(directory, exist_ok=True)
    kv = {
        'version': MANIFEST_VERSION,
        'scale': seq.spec.scale,
        'blur_sigma': seq.spec.blur_sigma,
        'blur_radius': seq.spec.blur_radius,
        'noise_variance': seq.spec.noise_variance,
        'seed': seq.spec.seed,
        'reference_index': seq.reference_index,
        'count': len(seq),
        'color': seq.is_color,
    }
    if seq.spec.kernel is not None:
        np.savetxt(os.path.join(directory, 'kernel.txt'), seq.spec.kernel, fmt='%.17g')
        kv['kernel_file'] = 'kernel.txt'
    for k, (frame, (dx, dy)) in enumerate(zip(seq.frames, seq.motions)):
        name = f'frame_{k:03d}{ext}'
        if seq.is_color:
            cb, cr = seq.chroma[k]
            write_image(os.path.join(directory, name), np.stack(ycbcr_to_rgb((frame, cb, cr)), axis=-1))
        else:
            write_image(os.path.join(directory, name), frame)
        kv[f'frame_{k:03d}'] = [name, repr(float(dx)), repr(float(dy))]
    save_config(kv, os.path.join(directory, MANIFEST), header='cascadesr sequence manifest')
    logger.info(f'Saved {len(seq)} frames to {directory}')
    return directory


def load_sequence(directory):
    file = os.path.join(directory, MANIFEST)
    if not os.path.isfile(file):
        raise FileNotFoundError(f'no {MANIFEST} in {directory}')
    kv = load_config(file)
    try:
        version = int(acquire_keys(kv, 'version', file))
        if version != MANIFEST_VERSION:
            raise FormatError(f'unsupported manifest version {version}')
        scale, blur_sigma, blur_radius, noise_variance, seed, count, reference_index = acquire_keys(
            kv, ['scale', 'blur_sigma', 'blur_radius', 'noise_variance', 'seed', 'count', 'reference_index'],
            file)
        kernel = None
        if 'kernel_file' in kv:
            kernel = np.loadtxt(os.path.join(directory, kv['kernel_file']), ndmin=2)
        spec = DegradationSpec(
            scale=int(scale),
            blur_sigma=float(blur_sigma),
            blur_radius=int(blur_radius),
            noise_variance=float(noise_variance),
            seed=int(seed),
            kernel=kernel,
        )
        count = int(count)
        reference_index = int(reference_index)
        color = parse_value(bool, kv.get('color', 'false'), 'color')
    except (KeyError, ValueError, ConfigError) as e:
        raise FormatError(f'bad manifest {file}: {e}')
    frames, motions, chroma = [], [], []
    for k in range(count):
        entry = kv.get(f'frame_{k:03d}')
        if entry is None:
            raise FormatError(f'manifest {file} misses frame_{k:03d}')
        parts = [p.strip() for p in entry.split(',')]
        if len(parts) != 3:
            raise FormatError(f'bad frame entry {entry!r} in {file}')
        img = read_image(os.path.join(directory, parts[0]))
        if img.ndim == 3:
            y, cb, cr = rgb_to_ycbcr((img[..., 0], img[..., 1], img[..., 2]))
            frames.append(y)
            chroma.append((cb, cr))
        else:
            frames.append(img)
        motions.append((float(parts[1]), float(parts[2])))
    if color and len(chroma) != count:
        logger.warning(f'manifest {file} marks colour frames but some frames are gray, chroma dropped')
    return FrameSequence(frames, motions, spec, reference_index,
                         chroma=chroma if len(chroma) == count else None)
