"""Two-stream fusion network.

One stream digests the upsampled coarse hyperspectral cube, the other the
fine conventional image. Each stream is a 3x3 head convolution with PReLU
followed by a chain of residual blocks (conv-BN-PReLU-conv-BN plus an
identity sum). The stream features are concatenated, fused by one more
convolution, and the head features of the hyperspectral stream are added
back through a global skip connection before the final projection to the
output band count. All convolutions are 3x3, stride 1, zero-padded by 1, so
any spatial size works and the output matches the input grid.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import torch
from torch import nn
from torch.nn.utils.fusion import fuse_conv_bn_eval

from .errors import ParameterError, ShapeError


@dataclass(frozen=True)
class NetworkConfig:
    """Architecture sizes.

    in_bands: hyperspectral band count B (also the output band count);
    aux_bands: conventional-image channel count; p_blocks/q_blocks: residual
    blocks in the hyperspectral/conventional streams; filters: feature width
    everywhere except the final layer; skip: enable the global skip add.
    """

    in_bands: int
    aux_bands: int
    p_blocks: int = 6
    q_blocks: int = 6
    filters: int = 64
    skip: bool = True

    def __post_init__(self):
        if self.in_bands < 1 or self.aux_bands < 1:
            raise ParameterError(f"band counts must be >= 1, got "
                                 f"({self.in_bands}, {self.aux_bands})")
        if self.p_blocks < 1 or self.q_blocks < 1:
            raise ParameterError(f"block counts must be >= 1, got "
                                 f"({self.p_blocks}, {self.q_blocks})")
        if self.filters < 1:
            raise ParameterError(f"filter count must be >= 1, got "
                                 f"{self.filters}")

    def to_dict(self) -> dict:
        return {"in_bands": self.in_bands, "aux_bands": self.aux_bands,
                "p_blocks": self.p_blocks, "q_blocks": self.q_blocks,
                "filters": self.filters, "skip": self.skip}


def _conv(c_in: int, c_out: int) -> nn.Conv2d:
    return nn.Conv2d(c_in, c_out, kernel_size=3, stride=1, padding=1)


class ResidualBlock(nn.Module):
    """conv-BN-PReLU-conv-BN with an identity sum; no activation after it."""

    def __init__(self, filters: int):
        super().__init__()
        self.conv1 = _conv(filters, filters)
        self.bn1 = nn.BatchNorm2d(filters)
        self.act = nn.PReLU()
        self.conv2 = _conv(filters, filters)
        self.bn2 = nn.BatchNorm2d(filters)

    def forward(self, x):
        t = self.act(self.bn1(self.conv1(x)))
        return x + self.bn2(self.conv2(t))


class TwoStreamNet(nn.Module):
    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        f = cfg.filters
        self.y_head = nn.Sequential(_conv(cfg.in_bands, f), nn.PReLU())
        self.z_head = nn.Sequential(_conv(cfg.aux_bands, f), nn.PReLU())
        self.y_blocks = nn.Sequential(*[ResidualBlock(f)
                                        for _ in range(cfg.p_blocks)])
        self.z_blocks = nn.Sequential(*[ResidualBlock(f)
                                        for _ in range(cfg.q_blocks)])
        self.fuse = nn.Sequential(_conv(2 * f, f), nn.PReLU())
        self.out_conv = _conv(f, cfg.in_bands)

    def forward(self, y_up: torch.Tensor, z: torch.Tensor) -> torch.Tensor:
        """Inputs (N, B, H, W) and (N, b, H, W); 3-D inputs are treated as a
        single unbatched sample and returned unbatched."""
        unbatched = y_up.dim() == 3
        if unbatched:
            y_up = y_up.unsqueeze(0)
        if z.dim() == 3:
            z = z.unsqueeze(0)
        if y_up.dim() != 4 or z.dim() != 4:
            raise ShapeError(f"expected 3-D or 4-D inputs, got "
                             f"{tuple(y_up.shape)} and {tuple(z.shape)}")
        if y_up.shape[1] != self.cfg.in_bands:
            raise ShapeError(f"hyperspectral input has {y_up.shape[1]} bands, "
                             f"model takes {self.cfg.in_bands}")
        if z.shape[1] != self.cfg.aux_bands:
            raise ShapeError(f"conventional input has {z.shape[1]} channels, "
                             f"model takes {self.cfg.aux_bands}")
        if y_up.shape[2:] != z.shape[2:] or y_up.shape[0] != z.shape[0]:
            raise ShapeError(f"input grids disagree: {tuple(y_up.shape)} vs "
                             f"{tuple(z.shape)}")
        f0 = self.y_head(y_up)
        fy = self.y_blocks(f0)
        fz = self.z_blocks(self.z_head(z))
        h = self.fuse(torch.cat([fy, fz], dim=1))
        if self.cfg.skip:
            h = h + f0
        out = self.out_conv(h)
        return out.squeeze(0) if unbatched else out


def l1_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Sum of elementwise absolute differences over the whole batch."""
    if pred.shape != target.shape:
        raise ShapeError(f"loss inputs disagree: {tuple(pred.shape)} vs "
                         f"{tuple(target.shape)}")
    return (pred - target).abs().sum()


def fold_batchnorm(net: TwoStreamNet) -> TwoStreamNet:
    """Inference copy with every batch-norm folded into its convolution.

    Running statistics and affine parameters are absorbed into the preceding
    conv's weights, so the returned network computes the same function as the
    original in eval mode but contains no normalization layers.
    """
    folded = copy.deepcopy(net).eval()
    for module in folded.modules():
        if isinstance(module, ResidualBlock):
            module.conv1 = fuse_conv_bn_eval(module.conv1, module.bn1)
            module.conv2 = fuse_conv_bn_eval(module.conv2, module.bn2)
            module.bn1 = nn.Identity()
            module.bn2 = nn.Identity()
    return folded
