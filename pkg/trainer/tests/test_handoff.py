"""End-to-end handoff: a toy-trained network's prior, exported as a cube
file, must flow through the fusion toolkit and beat its builtin bicubic
prior on held-out images. The toolkit is driven exclusively through its
command line; the two packages share nothing in-process."""

import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import torch
import yaml

from tsfn import (NetworkConfig, TrainConfig, TwoStreamNet, export_prior,
                  infer_prior, read_hsc, train, write_hsc)

from toy import (TOY_AUX, TOY_BANDS, TOY_SCALE, build_corpus, eval_psnr,
                 run_hsfuse, simulate_observation, toy_truth)

N_HELD_OUT = 4


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Train on two toy images, then fuse four held-out observations twice:
    once with the toolkit's bicubic prior, once with the network prior."""
    work = tmp_path_factory.mktemp("handoff")
    corpus, srf, _ = build_corpus(work / "corpus", 2, seed=11)

    rng = np.random.default_rng(99)
    held = []
    for i in range(N_HELD_OUT):
        path = work / f"held_{i}.hsc"
        write_hsc(toy_truth(rng), path)
        held.append(path)

    torch.manual_seed(0)
    net = TwoStreamNet(NetworkConfig(in_bands=TOY_BANDS, aux_bands=TOY_AUX,
                                     p_blocks=2, q_blocks=2, filters=16))
    ckpt = train(net, TrainConfig(lr=1e-3, batch=8, epochs=3,
                                  steps_per_epoch=100, patch=16, seed=0),
                 corpus, work / "ckpt")

    results = []
    for i, truth in enumerate(held):
        sim = simulate_observation(truth, work / f"sim_{i}", srf,
                                   seed=100 + i)
        prior = infer_prior(ckpt, read_hsc(sim / "Y.hsc"),
                            read_hsc(sim / "Z.hsc"), (TOY_SCALE, TOY_SCALE))
        prior_path = work / f"prior_{i}.hsc"
        export_prior(prior, prior_path)

        run_bic = work / f"fuse_bicubic_{i}"
        run_net = work / f"fuse_network_{i}"
        run_hsfuse("fuse", "--lr", sim / "Y.hsc", "--hr-rgb", sim / "Z.hsc",
                   "--out", run_bic, "--mu", "mdc")
        run_hsfuse("fuse", "--lr", sim / "Y.hsc", "--hr-rgb", sim / "Z.hsc",
                   "--out", run_net, "--mu", "mdc",
                   "--prior", f"file:{prior_path}")
        results.append({
            "truth": truth,
            "bicubic": eval_psnr(truth, run_bic / "xhat.hsc",
                                 work / f"psnr_bic_{i}.json"),
            "network": eval_psnr(truth, run_net / "xhat.hsc",
                                 work / f"psnr_net_{i}.json"),
            "net_xhat": run_net / "xhat.hsc",
        })
    return work, ckpt, results


def test_network_prior_fuses_without_error(pipeline):
    _, _, results = pipeline
    assert len(results) == N_HELD_OUT
    for row in results:
        xhat = read_hsc(row["net_xhat"])
        assert xhat.shape == (TOY_BANDS, 32, 32)
        assert np.all(np.isfinite(xhat))


def test_network_prior_beats_bicubic_prior(pipeline):
    _, _, results = pipeline
    wins = sum(row["network"] >= row["bicubic"] for row in results)
    lines = ", ".join(f"{row['network']:.2f} vs {row['bicubic']:.2f}"
                      for row in results)
    print(f"HANDOFF network-vs-bicubic fused PSNR: {lines} "
          f"({wins}/{N_HELD_OUT} wins)")
    assert wins >= 3, f"network prior won only {wins}/{N_HELD_OUT}: {lines}"


# --- the command line ------------------------------------------------------

def run_tsfn(*args):
    return subprocess.run([sys.executable, "-m", "tsfn.cli",
                           *[str(a) for a in args]],
                          capture_output=True, text=True)


def test_cli_train_and_infer(pipeline, tmp_path):
    work, _, _ = pipeline
    corpus = work / "corpus"
    train_cfg = tmp_path / "train.yaml"
    train_cfg.write_text(yaml.safe_dump({
        "data_dir": str(corpus),
        "out_dir": str(tmp_path / "ckpt"),
        "network": {"in_bands": TOY_BANDS, "aux_bands": TOY_AUX,
                    "p_blocks": 1, "q_blocks": 1, "filters": 8},
        "train": {"lr": 1e-3, "batch": 4, "epochs": 1, "steps_per_epoch": 10,
                  "patch": 16, "seed": 2},
    }), encoding="utf-8")
    proc = run_tsfn("train", "--config", train_cfg)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "ckpt" / "checkpoint.pt").exists()
    assert (tmp_path / "ckpt" / "config.yaml").exists()

    sim = work / "sim_0"
    infer_cfg = tmp_path / "infer.yaml"
    infer_cfg.write_text(yaml.safe_dump({
        "checkpoint": str(tmp_path / "ckpt"),
        "y": str(sim / "Y.hsc"),
        "z": str(sim / "Z.hsc"),
        "out": str(tmp_path / "prior.hsc"),
        "scale": TOY_SCALE,
    }), encoding="utf-8")
    proc = run_tsfn("infer", "--config", infer_cfg)
    assert proc.returncode == 0, proc.stderr
    prior = read_hsc(tmp_path / "prior.hsc")
    assert prior.shape == (TOY_BANDS, 32, 32)

    fuse_out = tmp_path / "fused"
    run_hsfuse("fuse", "--lr", sim / "Y.hsc", "--hr-rgb", sim / "Z.hsc",
               "--out", fuse_out, "--mu", "0.05",
               "--prior", f"file:{tmp_path / 'prior.hsc'}")
    assert (fuse_out / "xhat.hsc").exists()


def test_cli_rejects_bad_config(tmp_path):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("data_dir: /nonexistent\n", encoding="utf-8")
    proc = run_tsfn("train", "--config", cfg)
    assert proc.returncode == 1
    assert "error" in proc.stderr


def test_cli_rejects_missing_config_file(tmp_path):
    proc = run_tsfn("infer", "--config", tmp_path / "nope.yaml")
    assert proc.returncode == 1
