import math
import numpy as np
from skimage.metrics import mean_squared_error, structural_similarity

from cascadesr.errors import ParameterError
from cascadesr.image.ops import as_plane

# Gaussian window of sigma 1.5 truncated at radius 5, i.e. 11 x 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _pair(reference, test):
    reference, test = as_plane(reference, 'reference'), as_plane(test, 'test')
    if reference.shape != test.shape:
        raise ParameterError(f'images differ in shape: {reference.shape} vs {test.shape}')
    return reference, test


def psnr(reference, test, peak=1.0):
    """10 log10(peak^2 / MSE) in dB; math.inf for identical images."""
    if not peak > 0:
        raise ParameterError(f'peak should be positive, got {peak}')
    reference, test = _pair(reference, test)
    mse = mean_squared_error(reference, test)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def ssim(reference, test):
    """Mean SSIM over valid 11 x 11 Gaussian windows, dynamic range 1."""
    reference, test = _pair(reference, test)
    if min(reference.shape) < 11:
        raise ParameterError(f'ssim needs images of at least 11 x 11, got {reference.shape}')
    return float(structural_similarity(
        reference, test, data_range=1.0, gaussian_weights=True, sigma=SSIM_SIGMA,
        use_sample_covariance=False, K1=SSIM_K1, K2=SSIM_K2,
    ))


def shave(img, border):
    """Drop `border` pixels on every side."""
    if border < 0:
        raise ParameterError(f'border should be >= 0, got {border}')
    if border == 0:
        return img
    if 2 * border >= min(img.shape[:2]):
        raise ParameterError(f'border {border} leaves nothing of shape {img.shape}')
    return np.asarray(img)[border:-border, border:-border]
