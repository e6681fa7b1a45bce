"""
Enhanced residual back-projection network for single-frame super-resolution.

    lr -> init conv 3x3 -> pool conv 1x1 -> L0
    for t = 1..T:
        H_t = up(SFF(L0..L_{t-1}))
        L_t = down(SFF(H1..H_t))            (t < T)
    sr = conv3x3(SFF(H1..H_T)) + bicubic(lr)
"""
import logging
import numpy as np
import torch
from torch import nn

from cascadesr.errors import ParameterError
from cascadesr.image.ops import as_plane, resize_bicubic
from cascadesr.model import register_model
from cascadesr.model.base import BaseModel
from cascadesr.module.projection import (
    ConvBlock, SequentialFeatureFusion, UpProjectionUnit, DownsampleUnit, stage_geometry,
)

logger = logging.getLogger()


@register_model('erbpn')
class ERBPN(BaseModel):
    def __init__(self, scale=2, num_features=32, init_features=64, num_units=3, in_channels=1,
                 seed=None, args=None):
        super().__init__(args)
        stage_geometry(scale)
        if num_units < 1:
            raise ParameterError(f'num_units should be >= 1, got {num_units}')
        self.scale = scale
        self.num_features = num_features
        self.init_features = init_features
        self.num_units = num_units
        self.in_channels = in_channels
        # training mode of the weights, carried in the weight file header
        self.metadata = {}

        self.init_conv = ConvBlock(in_channels, init_features, 3, 1, 1)
        self.pool = ConvBlock(init_features, num_features, 1, 1, 0)
        self.up_fusions = nn.ModuleList(
            [SequentialFeatureFusion(t, num_features) for t in range(1, num_units + 1)])
        self.up_units = nn.ModuleList(
            [UpProjectionUnit(num_features, scale) for _ in range(num_units)])
        self.down_fusions = nn.ModuleList(
            [SequentialFeatureFusion(t, num_features) for t in range(1, num_units)])
        self.down_units = nn.ModuleList(
            [DownsampleUnit(num_features, scale) for _ in range(num_units - 1)])
        self.recon_fusion = SequentialFeatureFusion(num_units, num_features)
        self.recon = ConvBlock(num_features, in_channels, 3, 1, 1, activation=False)
        self.double()
        if seed is not None:
            self.init_weights(seed)

    @staticmethod
    def add_args(parser, arglist=None):
        parser.add_argument('--n-f', dest='num_features', type=int, default=32)
        parser.add_argument('--n-0', dest='init_features', type=int, default=64)
        parser.add_argument('--units', dest='num_units', type=int, default=3)

    @classmethod
    def build(cls, args, dataset=None):
        return cls(
            scale=args.scale,
            num_features=args.num_features,
            init_features=args.init_features,
            num_units=args.num_units,
            seed=args.seed,
            args=args,
        )

    def forward(self, lr, lr_up):
        """
        lr: (N, C, h, w); lr_up: its bicubic upscale (N, C, scale h, scale w)
        """
        n, c, h, w = lr.shape
        if c != self.in_channels or lr_up.shape != (n, c, h * self.scale, w * self.scale):
            raise ParameterError(f'lr {tuple(lr.shape)} and lr_up {tuple(lr_up.shape)} do not match '
                                 f'{self.in_channels} channels at scale {self.scale}')
        l_maps = [self.pool(self.init_conv(lr))]
        h_maps = []
        for t in range(self.num_units):
            h_maps.append(self.up_units[t](self.up_fusions[t](l_maps)))
            if t < self.num_units - 1:
                l_maps.append(self.down_units[t](self.down_fusions[t](h_maps)))
        detail = self.recon(self.recon_fusion(h_maps))
        return {
            'sr': detail + lr_up,
        }

    def zero_reconstruction(self):
        """Zero the final conv so the network output is the bicubic upscale."""
        with torch.no_grad():
            self.recon.conv.weight.zero_()
            self.recon.conv.bias.zero_()


def erbpn_forward(lr, model, clip=True):
    """Super-resolve one plane; returns scale x the input dims, clipped to [0, 1] unless clip=False."""
    lr = as_plane(lr, 'lr')
    if model.in_channels != 1:
        raise ParameterError(f'model expects {model.in_channels} channels, got a single plane')
    lr_up = resize_bicubic(lr, model.scale)
    dtype = next(model.parameters()).dtype
    x = torch.from_numpy(lr).to(dtype)[None, None]
    x_up = torch.from_numpy(lr_up).to(dtype)[None, None]
    was_training = model.training
    model.eval()
    with torch.no_grad():
        sr = model(x, x_up)['sr'][0, 0].numpy().astype(np.float64)
    model.train(was_training)
    return np.clip(sr, 0.0, 1.0) if clip else sr
