"""Command line entry points: ``tsfn train`` and ``tsfn infer``.

Both take a single ``--config`` YAML file.

train config keys:
  data_dir: corpus directory (truth .hsc cubes + manifest.json)
  out_dir: checkpoint directory to create
  network: {in_bands, aux_bands, p_blocks, q_blocks, filters, skip}
  train: {lr, batch, epochs, steps_per_epoch, patch, flip, rotate, scales,
          seed}

infer config keys:
  checkpoint: checkpoint directory (or .pt file)
  y: coarse hyperspectral cube (.hsc)
  z: fine conventional cube (.hsc)
  out: prior cube path to write (.hsc)
  scale: per-axis upsampling factor (or [s_row, s_col])
"""

from __future__ import annotations

import argparse
import sys

import yaml

from .errors import TsfnError
from .hsc import read_hsc
from .infer import export_prior, infer_prior
from .network import NetworkConfig, TwoStreamNet
from .train import TrainConfig, train


def _load_config(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise TsfnError(f"{path}: config must be a YAML mapping")
    return doc


def _require(doc: dict, key: str, path):
    if key not in doc:
        raise TsfnError(f"{path}: missing config key {key!r}")
    return doc[key]


def _cmd_train(args) -> int:
    doc = _load_config(args.config)
    net_cfg = NetworkConfig(**_require(doc, "network", args.config))
    train_cfg = TrainConfig(**doc.get("train", {}))
    out = train(TwoStreamNet(net_cfg), train_cfg,
                _require(doc, "data_dir", args.config),
                _require(doc, "out_dir", args.config))
    print(out)
    return 0


def _cmd_infer(args) -> int:
    doc = _load_config(args.config)
    scale = doc.get("scale", 1)
    dec = (scale, scale) if isinstance(scale, int) \
        else (int(scale[0]), int(scale[1]))
    y = read_hsc(_require(doc, "y", args.config))
    z = read_hsc(_require(doc, "z", args.config))
    prior = infer_prior(_require(doc, "checkpoint", args.config), y, z, dec)
    out = _require(doc, "out", args.config)
    export_prior(prior, out)
    print(out)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tsfn", description="Two-stream fusion-prior trainer")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("train", _cmd_train), ("infer", _cmd_infer)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML config file")
        p.set_defaults(fn=fn)
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (TsfnError, OSError, TypeError, ValueError) as exc:
        print(f"tsfn: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
