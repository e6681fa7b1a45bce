"""
(LR, HR) patch pairs for training the single-frame network, and the torch dataset serving them.

Pairs keep the zero-offset sampling convention: LR pixel (i, j) sits on HR pixel (s i, s j).
Flips are taken around pixel 0 (x[-i mod n]) so the convention survives augmentation. That
puts the far edge next to row (column) 0, so patches are cut with one extra leading LR row and
column and the dataset drops them after augmenting.
"""
import logging
import numpy as np
import torch

from cascadesr.errors import ParameterError
from cascadesr.data import register_dataset
from cascadesr.data.degradation import DegradationSpec, apply_W, simulate_sequence
from cascadesr.image.ops import as_plane, resize_bicubic
from cascadesr.utils import bool_flag

logger = logging.getLogger()

TRAINING_MODES = ('degradation', 'lorig')
NUM_AUGMENTATIONS = 8
# the 180 degree rotation among the eight dihedral ops
ROTATE_180 = 3
# leading LR rows / columns dropped after augmentation
MARGIN = 1


def _flip(x, axis):
    return np.roll(np.flip(x, axis), 1, axis)


def augment(x, op):
    """
    Dihedral transform op in [0, 8): bit 0 flips rows, bit 1 flips columns, bit 2 transposes.
    """
    if not 0 <= op < NUM_AUGMENTATIONS:
        raise ParameterError(f'augmentation op should be in [0, {NUM_AUGMENTATIONS}), got {op}')
    if op & 1:
        x = _flip(x, 0)
    if op & 2:
        x = _flip(x, 1)
    if op & 4:
        x = x.T
    return np.ascontiguousarray(x)


def augment_pair(lr, hr, op, scale):
    """Same dihedral op on both planes, then MARGIN leading LR rows and columns dropped
    (scale * MARGIN on hr), which removes the wrap seam of the flips."""
    lr, hr = augment(lr, op), augment(hr, op)
    m = MARGIN * scale
    return lr[MARGIN:, MARGIN:], hr[m:, m:]


def crop_to_multiple(img, scale):
    h, w = img.shape
    return img[:h - h % scale, :w - w % scale]


def random_patch_pairs(lr, hr, scale, patch_size, count, rng):
    """`count` aligned crops: patch_size^2 from lr, (scale patch_size)^2 from hr."""
    h, w = lr.shape
    if hr.shape != (h * scale, w * scale):
        raise ParameterError(f'hr shape {hr.shape} is not {scale} x lr shape {lr.shape}')
    if patch_size > min(h, w):
        raise ParameterError(f'patch size {patch_size} exceeds LR image {lr.shape}')
    pairs = []
    for _ in range(count):
        i = int(rng.integers(0, h - patch_size + 1))
        j = int(rng.integers(0, w - patch_size + 1))
        pairs.append((
            lr[i:i + patch_size, j:j + patch_size].copy(),
            hr[i * scale:(i + patch_size) * scale, j * scale:(j + patch_size) * scale].copy(),
        ))
    return pairs


def build_training_pairs(images, scale, patch_size=32, patches_per_image=16, mode='degradation',
                         spec=None, lorig_scale=2, frames=16, lorig_cfg=None, seed=1):
    """
    degradation: LR = W hr with zero motion, at `scale`.
    lorig: LR = multi-frame reconstruction at lorig_scale of a sequence simulated at
    lorig_scale * scale, so the network learns to refine solver output.
    """
    if mode not in TRAINING_MODES:
        raise ParameterError(f'unknown training mode {mode}, expected one of {TRAINING_MODES}')
    spec = spec or DegradationSpec()
    rng = np.random.default_rng([seed, 0x9A7C])
    pairs = []
    for idx, img in enumerate(images):
        if mode == 'degradation':
            hr = crop_to_multiple(as_plane(img, 'hr'), scale)
            lr = apply_W(hr, (0.0, 0.0), spec.replace(scale=scale))
        else:
            from cascadesr.solver.lorig import lorig_reconstruct
            total = lorig_scale * scale
            hr = crop_to_multiple(as_plane(img, 'hr'), total)
            seq = simulate_sequence(hr, spec.replace(scale=total, seed=seed + idx), frames)
            lr = lorig_reconstruct(seq, lorig_cfg, scale=lorig_scale)
        pairs.extend(random_patch_pairs(lr, hr, scale, patch_size + MARGIN, patches_per_image, rng))
    logger.info(f'Built {len(pairs)} {mode} patch pairs ({patch_size}x{patch_size} LR, x{scale}) '
                f'from {len(images)} images')
    return pairs


@register_dataset('sr_patches')
class PatchPairDataset(torch.utils.data.Dataset):
    """
    Items are {'lr', 'lr_up', 'hr'} float64 tensors of shape (1, h, w); lr_up is the bicubic
    upscale of lr. The augmentation of item i in epoch e is drawn from (seed, e, i); served
    patches are MARGIN LR pixels smaller than the stored pairs.
    """
    def __init__(self, pairs, scale, augment=True, seed=1):
        if not pairs:
            raise ParameterError('empty training set')
        for lr, hr in pairs:
            if hr.shape != (lr.shape[0] * scale, lr.shape[1] * scale):
                raise ParameterError(f'patch pair {lr.shape} -> {hr.shape} does not match scale {scale}')
            if min(lr.shape) <= MARGIN:
                raise ParameterError(f'LR patch {lr.shape} is too small')
        self.pairs = [(as_plane(lr, 'lr'), as_plane(hr, 'hr')) for lr, hr in pairs]
        self.scale = scale
        self.augment = augment
        self.seed = seed
        self.epoch = 0

    def set_epoch(self, epoch):
        self.epoch = epoch

    def __len__(self):
        return len(self.pairs)

    def __getitem__(self, index):
        lr, hr = self.pairs[index]
        op = 0
        if self.augment:
            op = int(np.random.default_rng([self.seed, self.epoch, index]).integers(NUM_AUGMENTATIONS))
        lr, hr = augment_pair(lr, hr, op, self.scale)
        lr_up = resize_bicubic(lr, self.scale)
        return {
            'lr': torch.from_numpy(lr.copy())[None],
            'lr_up': torch.from_numpy(lr_up)[None],
            'hr': torch.from_numpy(hr.copy())[None],
        }

    @staticmethod
    def add_args(parser, arglist=None):
        parser.add_argument('--scale', type=int, default=2, help='Network scale')
        parser.add_argument('--mode', type=str, default='degradation', choices=TRAINING_MODES,
                            help='How LR inputs of the training pairs are made')
        parser.add_argument('--patch-size', type=int, default=32, help='LR patch size seen by the network')
        parser.add_argument('--patches-per-image', type=int, default=16)
        parser.add_argument('--augment', type=bool_flag, default=True)

    @classmethod
    def build(cls, args, pairs):
        return cls(pairs, args.scale, augment=args.augment, seed=args.seed)
