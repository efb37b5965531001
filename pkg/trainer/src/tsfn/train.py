"""Training loop: patch sampling, augmentation, synthesis, optimization.

A training corpus is a directory of truth cubes (``*.hsc``) plus a
degradation manifest (``manifest.json``) describing the blur kernel,
decimation, and spectral mixing to train against. Each step samples a square
patch from a random cube, augments it (axis flips and quarter-turn
rotations), picks a decimation factor from the configured list, synthesizes
the (upsampled-coarse, conventional) input pair with the shared degradation
conventions, and takes one optimizer step on the absolute-difference loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch
import yaml

from .degrade import DegradationSpec, synthesize_pair
from .errors import DataError, ParameterError
from .hsc import read_hsc
from .network import NetworkConfig, TwoStreamNet, l1_loss

CHECKPOINT_NAME = "checkpoint.pt"
CONFIG_SNAPSHOT_NAME = "config.yaml"


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings.

    epochs x steps_per_epoch optimizer steps are taken in total. ``scales``
    lists the decimation factors sampled during training (empty = use the
    manifest's factor); ``patch`` must be divisible by every factor so the
    coarse grid is exact.
    """

    lr: float = 2e-4
    batch: int = 16
    epochs: int = 500
    steps_per_epoch: int = 100
    patch: int = 128
    flip: bool = True
    rotate: bool = True
    scales: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0:
            raise ParameterError(f"learning rate must be > 0, got {self.lr}")
        if self.batch < 1 or self.epochs < 1 or self.steps_per_epoch < 1:
            raise ParameterError("batch, epochs, and steps_per_epoch must "
                                 "all be >= 1")
        if self.patch < 1:
            raise ParameterError(f"patch size must be >= 1, got {self.patch}")
        scales = tuple(int(s) for s in self.scales)
        for s in scales:
            if s < 1:
                raise ParameterError(f"scale factors must be >= 1, got {s}")
            if self.patch % s:
                raise ParameterError(f"patch {self.patch} not divisible by "
                                     f"scale {s}")
        object.__setattr__(self, "scales", scales)

    def to_dict(self) -> dict:
        return {"lr": self.lr, "batch": self.batch, "epochs": self.epochs,
                "steps_per_epoch": self.steps_per_epoch, "patch": self.patch,
                "flip": self.flip, "rotate": self.rotate,
                "scales": list(self.scales), "seed": self.seed}


def load_corpus(data_dir) -> tuple[list[np.ndarray], DegradationSpec]:
    """Truth cubes and the degradation spec from a corpus directory."""
    root = Path(data_dir)
    manifest = root / "manifest.json"
    if not manifest.exists():
        raise DataError(f"{root}: no manifest.json")
    spec = DegradationSpec.from_manifest(manifest)
    cubes = []
    for p in sorted(root.glob("*.hsc")):
        arr = read_hsc(p)
        if arr.shape[0] != spec.fine_bands:
            raise DataError(f"{p}: {arr.shape[0]} bands, manifest expects "
                            f"{spec.fine_bands}")
        cubes.append(arr)
    if not cubes:
        raise DataError(f"{root}: no .hsc truth cubes")
    return cubes, spec


def _sample_patch(cubes: list[np.ndarray], patch: int,
                  rng: np.random.Generator, flip: bool,
                  rotate: bool) -> np.ndarray:
    x = cubes[int(rng.integers(len(cubes)))]
    _, height, width = x.shape
    if height < patch or width < patch:
        raise DataError(f"patch {patch} exceeds cube grid {height}x{width}")
    r0 = int(rng.integers(height - patch + 1))
    c0 = int(rng.integers(width - patch + 1))
    out = x[:, r0:r0 + patch, c0:c0 + patch]
    if flip:
        if rng.integers(2):
            out = out[:, ::-1, :]
        if rng.integers(2):
            out = out[:, :, ::-1]
    if rotate:
        out = np.rot90(out, k=int(rng.integers(4)), axes=(1, 2))
    return np.ascontiguousarray(out)


def _make_batch(cubes, spec, cfg, rng, device):
    scales = cfg.scales or (spec.s_row,)
    s = int(scales[int(rng.integers(len(scales)))])
    step_spec = spec if (s == spec.s_row and s == spec.s_col) \
        else spec.with_scale(s)
    xs, yups, zs = [], [], []
    for _ in range(cfg.batch):
        truth = _sample_patch(cubes, cfg.patch, rng, cfg.flip, cfg.rotate)
        y_up, z = synthesize_pair(truth, step_spec)
        xs.append(truth)
        yups.append(y_up)
        zs.append(z)
    to = lambda a: torch.from_numpy(np.stack(a)).float().to(device)
    return to(yups), to(zs), to(xs)


def train(net: TwoStreamNet, cfg: TrainConfig, data_dir,
          out_dir) -> Path:
    """Optimize the network on a corpus; returns the checkpoint directory.

    The directory holds ``checkpoint.pt`` (weights, both configs, seed, and
    the per-step loss trace) and ``config.yaml`` (a human-readable snapshot).
    With a fixed seed and single-threaded data generation the loss trace is
    identical across runs on one device.
    """
    cubes, spec = load_corpus(data_dir)
    device = torch.device("cpu")
    net = net.to(device).train()
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    optimizer = torch.optim.Adam(net.parameters(), lr=cfg.lr)
    trace: list[float] = []
    for _ in range(cfg.epochs * cfg.steps_per_epoch):
        y_up, z, truth = _make_batch(cubes, spec, cfg, rng, device)
        optimizer.zero_grad()
        loss = l1_loss(net(y_up, z), truth)
        loss.backward()
        optimizer.step()
        trace.append(float(loss.detach()))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    torch.save({"format_version": 1,
                "state_dict": net.state_dict(),
                "network": net.cfg.to_dict(),
                "train": cfg.to_dict(),
                "seed": cfg.seed,
                "loss_trace": trace},
               out / CHECKPOINT_NAME)
    with open(out / CONFIG_SNAPSHOT_NAME, "w", encoding="utf-8") as fh:
        yaml.safe_dump({"network": net.cfg.to_dict(), "train": cfg.to_dict()},
                       fh, sort_keys=True)
    return out


def load_checkpoint(ckpt_dir) -> tuple[TwoStreamNet, dict]:
    """Rebuild the trained network (eval mode) and return the raw payload."""
    path = Path(ckpt_dir)
    if path.is_dir():
        path = path / CHECKPOINT_NAME
    payload = torch.load(path, map_location="cpu", weights_only=True)
    net = TwoStreamNet(NetworkConfig(**payload["network"]))
    net.load_state_dict(payload["state_dict"])
    return net.eval(), payload
