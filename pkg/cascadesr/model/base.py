import torch
from torch import nn


class BaseModel(nn.Module):
    def __init__(self, args=None):
        super().__init__()
        self.args = args

    @staticmethod
    def add_args(parser, arglist=None):
        pass

    @classmethod
    def build(cls, args, dataset=None):
        raise NotImplementedError('')

    def init_weights(self, seed):
        """
        Fan-in scaled Gaussian weights and zero biases for every conv/deconv layer, drawn from a
        private stream so the global torch RNG is left untouched.
        """
        with torch.random.fork_rng(devices=[]):
            torch.manual_seed(seed)
            for m in self.modules():
                if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d)):
                    nn.init.kaiming_normal_(m.weight, a=0.25, mode='fan_in', nonlinearity='leaky_relu')
                    if m.bias is not None:
                        nn.init.zeros_(m.bias)

    def num_parameters(self):
        return sum(p.numel() for p in self.parameters())
