"""
Building blocks of the back-projection network: conv/deconv layers with a parametric rectifier,
sequential feature fusion, the dense up-projection unit and the downsampling unit.
"""
import torch
from torch import nn

from cascadesr.errors import ParameterError
from cascadesr.module.functions import conv2d, deconv2d, prelu


PRELU_INIT = 0.25

# scale -> (kernel_size, stride, padding) of the scale-changing layers
GEOMETRY = {
    2: (6, 2, 2),
    4: (8, 4, 2),
    8: (12, 8, 2),
}


def stage_geometry(scale):
    if scale not in GEOMETRY:
        raise ParameterError(f'unsupported stage scale {scale}, available {sorted(GEOMETRY)}')
    return GEOMETRY[scale]


class ConvBlock(nn.Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0, activation=True):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.conv = nn.Conv2d(in_channels, out_channels, kernel_size, stride, padding)
        self.act = nn.PReLU(out_channels, init=PRELU_INIT) if activation else None

    def forward(self, x):
        x = conv2d(x, self.conv.weight, self.conv.bias, self.stride, self.padding)
        if self.act is not None:
            x = prelu(x, self.act.weight)
        return x


class DeconvBlock(nn.Module):
    def __init__(self, in_channels, out_channels, kernel_size, stride=1, padding=0):
        super().__init__()
        self.stride = stride
        self.padding = padding
        self.deconv = nn.ConvTranspose2d(in_channels, out_channels, kernel_size, stride, padding)
        self.act = nn.PReLU(out_channels, init=PRELU_INIT)

    def forward(self, x):
        x = deconv2d(x, self.deconv.weight, self.deconv.bias, self.stride, self.padding)
        return prelu(x, self.act.weight)


class SequentialFeatureFusion(nn.Module):
    """
    Folds an ordered list of n maps: y0 = 0, yt = act(conv3x3([mt ; y(t-1)])), returns yn.
    """
    def __init__(self, num_maps, num_features):
        super().__init__()
        if num_maps < 1:
            raise ParameterError('feature fusion needs at least one map')
        self.num_features = num_features
        self.layers = nn.ModuleList(
            [ConvBlock(2 * num_features, num_features, 3, 1, 1) for _ in range(num_maps)]
        )

    def forward(self, maps):
        if len(maps) == 0:
            raise ParameterError('feature fusion over an empty list of maps')
        if len(maps) != len(self.layers):
            raise ParameterError(f'expected {len(self.layers)} maps, got {len(maps)}')
        shape = maps[0].shape
        if shape[1] != self.num_features:
            raise ParameterError(f'maps have {shape[1]} channels, expected {self.num_features}')
        if any(m.shape != shape for m in maps):
            raise ParameterError(f'maps disagree in shape: {[tuple(m.shape) for m in maps]}')
        y = torch.zeros_like(maps[0])
        for m, layer in zip(maps, self.layers):
            y = layer(torch.cat([m, y], dim=1))
        return y


class UpProjectionUnit(nn.Module):
    """h0 = up(L); l0 = down(h0); h1 = up(l0 - L); returns h0 + h1."""
    def __init__(self, num_features, scale):
        super().__init__()
        k, s, p = stage_geometry(scale)
        self.up1 = DeconvBlock(num_features, num_features, k, s, p)
        self.down = ConvBlock(num_features, num_features, k, s, p)
        self.up2 = DeconvBlock(num_features, num_features, k, s, p)

    def forward(self, x):
        h0 = self.up1(x)
        l0 = self.down(h0)
        h1 = self.up2(l0 - x)
        return h0 + h1


class DownsampleUnit(nn.Module):
    def __init__(self, num_features, scale):
        super().__init__()
        k, s, p = stage_geometry(scale)
        self.down = ConvBlock(num_features, num_features, k, s, p)

    def forward(self, x):
        return self.down(x)
