import argparse
import numpy as np
from scipy import ndimage

from cascadesr.model.erbpn import ERBPN
from cascadesr.training.trainer import add_train_args


def textured_image(h, w, seed=0, sigma=2.0):
    """Smoothed circular noise plus a few flat blocks, scaled into [0.1, 0.9]."""
    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma, mode='wrap')
    for _ in range(3):
        i, j = rng.integers(0, h // 2), rng.integers(0, w // 2)
        img[i:i + h // 4, j:j + w // 4] += rng.uniform(-1, 1) * img.std() * 2
    img = (img - img.min()) / (img.max() - img.min())
    return 0.1 + 0.8 * img


def smooth_image(h, w, seed=0, sigma=3.0):
    rng = np.random.default_rng(seed)
    img = ndimage.gaussian_filter(rng.standard_normal((h, w)), sigma, mode='wrap')
    return (img - img.min()) / (img.max() - img.min())


def dense_matrix(op, shape):
    """Matrix of a linear operator on arrays of `shape`, assembled column by column."""
    n = int(np.prod(shape))
    cols = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cols.append(np.asarray(op(e.reshape(shape))).ravel())
    return np.stack(cols, axis=1)


def tiny_model(scale=2, num_features=4, num_units=2, init_features=4, seed=0):
    return ERBPN(scale=scale, num_features=num_features, init_features=init_features,
                 num_units=num_units, seed=seed)


def parse_train_args(argline):
    parser = argparse.ArgumentParser()
    parser.add_argument('--seed', type=int, default=1)
    add_train_args(parser)
    return parser.parse_args(argline.split())
