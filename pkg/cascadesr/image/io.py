"""
8-bit PNG and PGM/PPM files <-> float64 arrays in [0, 1].
"""
import os
import logging
import numpy as np
import imageio.v2 as imageio

from cascadesr.errors import FormatError
from cascadesr.utils import assert_finite

logger = logging.getLogger()

IMAGE_EXTENSIONS = ('.png', '.pgm', '.ppm', '.pnm')


def read_image(path):
    """Returns H x W (gray) or H x W x 3 (RGB) float64 in [0, 1]."""
    if not os.path.isfile(path):
        raise FileNotFoundError(f'image {path} does not exist')
    try:
        data = np.asarray(imageio.imread(path))
    except (ValueError, OSError) as e:
        raise FormatError(f'cannot read image {path}: {e}')
    if data.ndim == 3:
        if data.shape[-1] == 4:
            data = data[..., :3]
        elif data.shape[-1] == 1:
            data = data[..., 0]
        if data.ndim == 3 and data.shape[-1] == 3 and (data[..., 0] == data[..., 1]).all() \
                and (data[..., 1] == data[..., 2]).all():
            data = data[..., 0]
    if data.ndim not in (2, 3):
        raise FormatError(f'unsupported image shape {data.shape} in {path}')
    if data.dtype == np.uint8:
        img = data.astype(np.float64) / 255.0
    elif data.dtype == np.uint16:
        img = data.astype(np.float64) / 65535.0
    else:
        raise FormatError(f'unsupported pixel type {data.dtype} in {path}')
    return img


def to_uint8(img):
    img = np.asarray(img, dtype=np.float64)
    assert_finite(img, 'image')
    n_out = int(((img < 0) | (img > 1)).sum())
    if n_out:
        logger.warning(f'{n_out} pixels out of [0, 1] are clipped when saving')
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_image(path, img):
    """img: H x W or H x W x 3 in [0, 1]; format follows the file extension."""
    ext = os.path.splitext(path)[1].lower()
    if ext not in IMAGE_EXTENSIONS:
        raise FormatError(f'unsupported image extension {ext}, use one of {IMAGE_EXTENSIONS}')
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    imageio.imwrite(path, to_uint8(img))
    return path


def list_images(path):
    """A file, a directory of images or a comma separated list of files."""
    if os.path.isdir(path):
        files = [os.path.join(path, f) for f in sorted(os.listdir(path))
                 if f.lower().endswith(IMAGE_EXTENSIONS)]
    else:
        files = [p for p in path.split(',') if p]
    return files
