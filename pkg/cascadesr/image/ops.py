"""
Image operators on 2-D float64 arrays.
Everything used inside the solver has a circular boundary and an exact adjoint;
only resize_bicubic replicates edges.
"""
import math
from collections import namedtuple
import numpy as np
from scipy import ndimage

from cascadesr.errors import ParameterError
from cascadesr.utils import assert_finite

GradientPair = namedtuple('GradientPair', ['gx', 'gy'])

# cubic convolution coefficient
BICUBIC_A = -0.5


def as_plane(img, name='image', check_finite=True):
    plane = np.asarray(img, dtype=np.float64)
    if plane.ndim != 2:
        raise ParameterError(f'{name} should be 2-D, got shape {plane.shape}')
    if plane.size == 0:
        raise ParameterError(f'{name} is empty')
    if check_finite:
        assert_finite(plane, name)
    return plane


def gaussian_kernel(sigma, radius):
    """Sampled isotropic Gaussian on a (2 radius + 1)^2 grid, normalized to unit sum."""
    if not sigma > 0:
        raise ParameterError(f'sigma should be positive, got {sigma}')
    if int(radius) != radius or radius < 1:
        raise ParameterError(f'radius should be an integer >= 1, got {radius}')
    radius = int(radius)
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    xx, yy = np.meshgrid(ax, ax)
    k = np.exp(-(xx ** 2 + yy ** 2) / (2.0 * sigma ** 2))
    return k / k.sum()


def delta_kernel(radius=1):
    k = np.zeros((2 * radius + 1, 2 * radius + 1))
    k[radius, radius] = 1.0
    return k


def kernel_radius(k):
    k = np.asarray(k)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.shape[0] % 2 != 1:
        raise ParameterError(f'kernel should be square with odd size, got shape {k.shape}')
    return k.shape[0] // 2


def _check_kernel_fits(img, k):
    r = kernel_radius(k)
    if 2 * r + 1 > min(img.shape):
        raise ParameterError(f'kernel of size {2 * r + 1} does not fit image of shape {img.shape}')


def convolve_circular(img, k):
    img = as_plane(img)
    k = np.asarray(k, dtype=np.float64)
    _check_kernel_fits(img, k)
    return ndimage.convolve(img, k, mode='wrap')


def correlate_circular(img, k):
    """Transpose of convolve_circular."""
    img = as_plane(img)
    k = np.asarray(k, dtype=np.float64)
    _check_kernel_fits(img, k)
    return ndimage.correlate(img, k, mode='wrap')


def _bilinear_terms(dx, dy):
    """Yield (weight, row roll, col roll) of the four integer shifts whose weighted sum
    is the bilinear shift by (dx, dy). Zero weights are skipped."""
    fx, fy = math.floor(dx), math.floor(dy)
    ax, ay = dx - fx, dy - fy
    for wy, ry in ((1.0 - ay, fy), (ay, fy + 1)):
        for wx, rx in ((1.0 - ax, fx), (ax, fx + 1)):
            w = wy * wx
            if w != 0.0:
                yield w, ry, rx


def shift_subpixel(img, dx, dy):
    """out(r, c) = img(r - dy, c - dx), bilinear on the circularly extended grid."""
    img = as_plane(img)
    out = np.zeros_like(img)
    for w, ry, rx in _bilinear_terms(dx, dy):
        out += w * np.roll(img, (ry, rx), axis=(0, 1))
    return out


def shift_subpixel_adjoint(img, dx, dy):
    img = as_plane(img)
    out = np.zeros_like(img)
    for w, ry, rx in _bilinear_terms(dx, dy):
        out += w * np.roll(img, (-ry, -rx), axis=(0, 1))
    return out


def _check_scale(s):
    if int(s) != s or s < 1:
        raise ParameterError(f'scale should be an integer >= 1, got {s}')
    return int(s)


def decimate(img, s):
    """Keep samples (s i, s j)."""
    img = as_plane(img)
    s = _check_scale(s)
    h, w = img.shape
    if h % s or w % s:
        raise ParameterError(f'image shape {img.shape} is not divisible by scale {s}')
    return img[::s, ::s].copy()


def upsample_zero(img, s):
    """Zero insertion, the transpose of decimate."""
    img = as_plane(img)
    s = _check_scale(s)
    h, w = img.shape
    out = np.zeros((h * s, w * s), dtype=np.float64)
    out[::s, ::s] = img
    return out


def cubic_weight(t, a=BICUBIC_A):
    t = np.abs(t)
    t2, t3 = t * t, t * t * t
    return np.where(
        t <= 1, (a + 2) * t3 - (a + 3) * t2 + 1,
        np.where(t < 2, a * t3 - 5 * a * t2 + 8 * a * t - 4 * a, 0.0)
    )


def _cubic_taps(n_in, n_out, scale):
    # output sample i sits at input coordinate i / scale, matching decimation offset 0
    x = np.arange(n_out, dtype=np.float64) / scale
    x0 = np.floor(x)
    t = x - x0
    offsets = np.arange(-1, 3)
    idx = np.clip(x0[:, None].astype(np.int64) + offsets[None, :], 0, n_in - 1)
    weights = cubic_weight(t[:, None] - offsets[None, :])
    return idx, weights


def _resize_rows(img, n_out, scale):
    idx, weights = _cubic_taps(img.shape[0], n_out, scale)
    out = np.zeros((n_out, img.shape[1]), dtype=np.float64)
    for j in range(4):
        out += weights[:, j:j + 1] * img[idx[:, j], :]
    return out


def resize_bicubic(img, scale):
    """Cubic convolution resize with edge replication.
    Output dims are round(scale * input dims)."""
    img = as_plane(img)
    if not scale > 0:
        raise ParameterError(f'scale should be positive, got {scale}')
    h, w = img.shape
    oh, ow = int(math.floor(h * scale + 0.5)), int(math.floor(w * scale + 0.5))
    if oh < 1 or ow < 1:
        raise ParameterError(f'scale {scale} gives an empty output for shape {img.shape}')
    out = _resize_rows(img, oh, scale)
    return _resize_rows(out.T, ow, scale).T.copy()


def gradient_forward(img):
    """Circular forward differences."""
    img = as_plane(img)
    gx = np.roll(img, -1, axis=1) - img
    gy = np.roll(img, -1, axis=0) - img
    return GradientPair(gx, gy)


def gradient_adjoint(gp):
    """Negative divergence, the transpose of gradient_forward."""
    gx, gy = as_plane(gp.gx, 'gx'), as_plane(gp.gy, 'gy')
    if gx.shape != gy.shape:
        raise ParameterError(f'gradient components differ in shape: {gx.shape} vs {gy.shape}')
    return (np.roll(gx, 1, axis=1) - gx) + (np.roll(gy, 1, axis=0) - gy)


def clip_unit(img):
    return np.clip(img, 0.0, 1.0)
