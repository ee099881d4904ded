"""Small convolutional generators and patch discriminators.

Shared by the inpainter and the vanilla staging model. Deliberately
compact (two stride-2 downsamplings, two dilated residual blocks, nearest
upsampling) so desk-scale training runs in minutes on CPU. All modules are
fully convolutional; input sides must be divisible by 4.
"""

from __future__ import annotations

import torch
import torch.nn as nn


class ResidualBlock(nn.Module):
    def __init__(self, channels: int, dilation: int = 2):
        super().__init__()
        self.body = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=dilation, dilation=dilation),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
        )

    def forward(self, x):
        return torch.relu(x + self.body(x))


class Generator(nn.Module):
    """Encoder / dilated-residual / decoder generator with sigmoid output."""

    def __init__(self, in_channels: int, out_channels: int, base: int = 32):
        super().__init__()
        self.encoder = nn.Sequential(
            nn.Conv2d(in_channels, base, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(base, base * 2, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
        )
        self.middle = nn.Sequential(
            ResidualBlock(base * 2, dilation=2),
            ResidualBlock(base * 2, dilation=4),
        )
        self.decoder = nn.Sequential(
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(base * 2, base, 3, padding=1),
            nn.ReLU(inplace=True),
            nn.Upsample(scale_factor=2, mode="nearest"),
            nn.Conv2d(base, out_channels, 3, padding=1),
        )

    def forward(self, x):
        return torch.sigmoid(self.decoder(self.middle(self.encoder(x))))


class PatchDiscriminator(nn.Module):
    """Three-layer patch discriminator returning logits plus the
    intermediate activations used for feature matching."""

    def __init__(self, in_channels: int, base: int = 32):
        super().__init__()
        self.layers = nn.ModuleList([
            nn.Sequential(nn.Conv2d(in_channels, base, 4, stride=2, padding=1),
                          nn.LeakyReLU(0.2, inplace=True)),
            nn.Sequential(nn.Conv2d(base, base * 2, 4, stride=2, padding=1),
                          nn.LeakyReLU(0.2, inplace=True)),
            nn.Sequential(nn.Conv2d(base * 2, base * 2, 3, padding=1),
                          nn.LeakyReLU(0.2, inplace=True)),
        ])
        self.head = nn.Conv2d(base * 2, 1, 3, padding=1)

    def forward(self, x):
        feats = []
        for layer in self.layers:
            x = layer(x)
            feats.append(x)
        return self.head(x), feats


def state_to_numpy(module: nn.Module) -> dict:
    """float32 numpy copies of a module's parameters and buffers."""
    return {name: tensor.detach().cpu().numpy().astype("float32", copy=True)
            for name, tensor in module.state_dict().items()}


def load_numpy_state(module: nn.Module, state: dict, prefix: str) -> None:
    tensors = {}
    for name, arr in state.items():
        if name.startswith(prefix + "."):
            tensors[name[len(prefix) + 1:]] = torch.from_numpy(arr.copy())
    module.load_state_dict(tensors)


def deterministic_mode(seed: int, threads: int = 1) -> None:
    """Pin torch to a reproducible single-threaded CPU configuration."""
    torch.manual_seed(seed)
    torch.set_num_threads(threads)
    torch.use_deterministic_algorithms(True)
