"""
Translational subpixel registration by circular cross-correlation.
"""
import logging
import numpy as np

from cascadesr.errors import ParameterError, DegenerateInputError
from cascadesr.image.ops import as_plane

logger = logging.getLogger()

REGISTRATION_MODES = ('estimate', 'ground_truth')


def cross_correlation(reference, target):
    """c(ty, tx) = sum_x target(x) reference(x - t), circular, mean removed."""
    a = reference - reference.mean()
    b = target - target.mean()
    return np.real(np.fft.ifft2(np.fft.fft2(b) * np.conj(np.fft.fft2(a))))


def _parabola_offset(cm, c0, cp):
    denom = cm - 2.0 * c0 + cp
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (cm - cp) / denom, -0.5, 0.5))


def estimate_shift(reference, target, scale=1):
    """(dx, dy) such that target ~ shift_subpixel(reference, dx, dy), in LR pixels times scale.
    The integer peak is refined by a quadratic fit along each axis of its 3x3 neighbourhood.
    """
    reference = as_plane(reference, 'reference')
    target = as_plane(target, 'target')
    if reference.shape != target.shape:
        raise ParameterError(f'shapes differ: {reference.shape} vs {target.shape}')
    if reference.std() == 0 or target.std() == 0:
        raise DegenerateInputError('cannot register a flat image')
    c = cross_correlation(reference, target)
    h, w = c.shape
    py, px = np.unravel_index(np.argmax(c), c.shape)
    c0 = c[py, px]
    oy = _parabola_offset(c[(py - 1) % h, px], c0, c[(py + 1) % h, px]) if h >= 3 else 0.0
    ox = _parabola_offset(c[py, (px - 1) % w], c0, c[py, (px + 1) % w]) if w >= 3 else 0.0
    # wrap peaks past the half period to negative shifts
    dy = py - h if py > h // 2 else py
    dx = px - w if px > w // 2 else px
    return (dx + ox) * scale, (dy + oy) * scale


def register_sequence(seq, mode='ground_truth', executor=None):
    """ground_truth keeps the motions already in seq; estimate measures each frame
    against the reference, giving motions relative to it in HR pixels."""
    if mode not in REGISTRATION_MODES:
        raise ParameterError(f'unknown registration mode {mode}, expected one of {REGISTRATION_MODES}')
    if mode == 'ground_truth':
        return seq.replace(motions=list(seq.motions))
    ref = seq.reference
    s = seq.spec.scale

    def estimate(k):
        if k == seq.reference_index:
            return 0.0, 0.0
        return estimate_shift(ref, seq.frames[k], scale=s)

    mapper = executor.map if executor is not None else map
    motions = list(mapper(estimate, range(len(seq))))
    for k, (dx, dy) in enumerate(motions):
        logger.debug(f'frame {k}: dx {dx:.4f}, dy {dy:.4f}')
    logger.info(f'Registered {len(seq)} frames against reference {seq.reference_index}')
    return seq.replace(motions=motions)
