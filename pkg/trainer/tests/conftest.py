from __future__ import annotations

from pathlib import Path

import pytest

from helpers import write_sft_jsonl


@pytest.fixture(scope="session")
def sft_file(tmp_path_factory) -> Path:
    return write_sft_jsonl(tmp_path_factory.mktemp("data") / "sft.jsonl")


@pytest.fixture(scope="session")
def trained_checkpoint(tmp_path_factory, sft_file) -> Path:
    """A small trained run shared by the serve/integration tests."""
    from triage_trainer.config import TINY_BASE_MODEL, TrainConfig
    from triage_trainer.train import train

    out = tmp_path_factory.mktemp("run")
    cfg = TrainConfig(base_model=TINY_BASE_MODEL, max_steps=6, seq_len=256, save_every=3)
    train(sft_file, cfg, out)
    return out / "adapter"
