"""
BT.601 full-range YCbCr with chroma centred at 0.5.
"""
import numpy as np

from cascadesr.errors import ParameterError
from cascadesr.image.ops import as_plane

RGB_TO_YCBCR = np.array([
    [0.299, 0.587, 0.114],
    [-0.168736, -0.331264, 0.5],
    [0.5, -0.418688, -0.081312],
])
YCBCR_TO_RGB = np.linalg.inv(RGB_TO_YCBCR)
CHROMA_OFFSET = np.array([0.0, 0.5, 0.5])


def _stack(planes, names):
    if len(planes) != 3:
        raise ParameterError(f'expected 3 planes, got {len(planes)}')
    planes = [as_plane(p, n) for p, n in zip(planes, names)]
    if len({p.shape for p in planes}) != 1:
        raise ParameterError(f'planes differ in shape: {[p.shape for p in planes]}')
    return np.stack(planes, axis=-1)


def rgb_to_ycbcr(rgb):
    """(r, g, b) planes -> (y, cb, cr) planes."""
    x = _stack(rgb, ('r', 'g', 'b'))
    out = x @ RGB_TO_YCBCR.T + CHROMA_OFFSET
    return out[..., 0].copy(), out[..., 1].copy(), out[..., 2].copy()


def ycbcr_to_rgb(ycbcr):
    x = _stack(ycbcr, ('y', 'cb', 'cr'))
    out = (x - CHROMA_OFFSET) @ YCBCR_TO_RGB.T
    return out[..., 0].copy(), out[..., 1].copy(), out[..., 2].copy()


def luminance(img):
    """Y of an H x W x 3 array, or the array itself when it is already 2-D."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    return rgb_to_ycbcr((img[..., 0], img[..., 1], img[..., 2]))[0]
