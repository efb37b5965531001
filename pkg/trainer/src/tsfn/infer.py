"""Prior inference: run a trained network on an observation pair."""

from __future__ import annotations

import numpy as np
import torch

from .degrade import bicubic_upsample
from .errors import ShapeError
from .hsc import write_hsc
from .network import TwoStreamNet, fold_batchnorm
from .train import load_checkpoint


def infer_prior(checkpoint, y: np.ndarray, z: np.ndarray,
                dec: tuple[int, int]) -> np.ndarray:
    """Fine-grid prior cube from a coarse cube and a conventional image.

    ``checkpoint`` is a checkpoint directory (or file) or an already loaded
    network. The coarse cube is upsampled by the per-axis factors ``dec``,
    the network runs with batch normalization folded away, and the result is
    clipped to [0, 1]. Output shape is (B, H, W) on z's grid.
    """
    if isinstance(checkpoint, TwoStreamNet):
        net = checkpoint.eval()
    else:
        net, _ = load_checkpoint(checkpoint)
    s_row, s_col = int(dec[0]), int(dec[1])
    if y.ndim != 3 or z.ndim != 3:
        raise ShapeError(f"inputs must be 3-D cubes, got {y.shape} and "
                         f"{z.shape}")
    if y.shape[0] != net.cfg.in_bands:
        raise ShapeError(f"coarse cube has {y.shape[0]} bands, model takes "
                         f"{net.cfg.in_bands}")
    if z.shape[0] != net.cfg.aux_bands:
        raise ShapeError(f"conventional image has {z.shape[0]} channels, "
                         f"model takes {net.cfg.aux_bands}")
    if (y.shape[1] * s_row, y.shape[2] * s_col) != z.shape[1:]:
        raise ShapeError(f"coarse grid {y.shape[1:]} times ({s_row}, {s_col}) "
                         f"does not match conventional grid {z.shape[1:]}")
    y_up = bicubic_upsample(np.asarray(y, dtype=np.float64), s_row, s_col)
    folded = fold_batchnorm(net)
    with torch.no_grad():
        out = folded(torch.from_numpy(y_up).float(),
                     torch.from_numpy(np.asarray(z)).float())
    return np.clip(out.numpy().astype(np.float64), 0.0, 1.0)


def export_prior(prior: np.ndarray, path) -> None:
    """Write an inferred prior as a cube file."""
    write_hsc(prior, path)
