"""Base-model construction: a tiny byte-vocabulary stand-in, or a pretrained LM."""

from __future__ import annotations

from pathlib import Path

import torch

from .config import TrainConfig
from .errors import ModelLoadError
from .tokenizer import VOCAB_SIZE

TINY_BASE_WEIGHTS = "base_model.pt"


def build_tiny_model(seed: int) -> torch.nn.Module:
    """Small randomly-initialized causal LM over the 256-byte vocabulary."""
    from transformers import LlamaConfig, LlamaForCausalLM

    torch.manual_seed(seed)
    config = LlamaConfig(
        vocab_size=VOCAB_SIZE,
        hidden_size=64,
        intermediate_size=128,
        num_hidden_layers=2,
        num_attention_heads=4,
        num_key_value_heads=4,
        max_position_embeddings=2048,
        bos_token_id=None,
        eos_token_id=0,
        pad_token_id=0,
    )
    return LlamaForCausalLM(config)


def load_base_model(cfg: TrainConfig) -> torch.nn.Module:
    """Resolve the configured base model; quantization only where supported."""
    if cfg.is_tiny():
        return build_tiny_model(cfg.seed)
    try:
        from transformers import AutoModelForCausalLM

        kwargs: dict = {}
        if torch.cuda.is_available():
            try:
                from transformers import BitsAndBytesConfig

                kwargs["quantization_config"] = BitsAndBytesConfig(
                    load_in_4bit=True,
                    bnb_4bit_quant_type=cfg.quant_storage,
                    bnb_4bit_compute_dtype=getattr(torch, cfg.compute_dtype),
                )
            except ImportError:
                pass
        return AutoModelForCausalLM.from_pretrained(cfg.base_model, **kwargs)
    except Exception as exc:
        raise ModelLoadError(f"cannot load base model {cfg.base_model!r}: {exc}") from exc


def save_tiny_base(model: torch.nn.Module, out_dir: str | Path) -> None:
    torch.save(model.state_dict(), Path(out_dir) / TINY_BASE_WEIGHTS)


def load_tiny_base(out_dir: str | Path, seed: int) -> torch.nn.Module:
    model = build_tiny_model(seed)
    path = Path(out_dir) / TINY_BASE_WEIGHTS
    if not path.exists():
        raise ModelLoadError(f"tiny base weights not found at {path}")
    model.load_state_dict(torch.load(path, map_location="cpu"))
    return model
