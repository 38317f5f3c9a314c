"""Training configuration with the published recipe as defaults."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

TINY_BASE_MODEL = "tiny-byte-llama"

TARGET_MODULES = ("q_proj", "k_proj", "v_proj", "o_proj", "gate_proj", "up_proj", "down_proj")


@dataclass(frozen=True)
class TrainConfig:
    base_model: str = "DeepSeek-R1-Distill-Llama-8B"
    lora_r: int = 16
    lora_alpha: float = 16.0
    lora_dropout: float = 0.0
    target_modules: tuple[str, ...] = TARGET_MODULES
    quant_storage: str = "nf4"       # applied only with CUDA + bitsandbytes
    compute_dtype: str = "float16"
    batch_size: int = 2
    grad_accumulation: int = 4       # effective batch 8
    max_steps: int = 500
    learning_rate: float = 2e-4
    weight_decay: float = 0.01
    warmup_ratio: float = 0.03
    optimizer: str = "adamw"
    schedule: str = "linear"
    seq_len: int = 2048
    seed: int = 3407
    save_every: int | None = None    # default: one intermediate checkpoint mid-run

    def effective_batch(self) -> int:
        return self.batch_size * self.grad_accumulation

    def is_tiny(self) -> bool:
        return self.base_model == TINY_BASE_MODEL

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["target_modules"] = list(self.target_modules)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        obj["target_modules"] = tuple(obj.get("target_modules", TARGET_MODULES))
        return cls(**obj)


def write_manifest(out_dir: str | Path, cfg: TrainConfig, data_path: str | Path,
                   extra: dict | None = None) -> Path:
    """Snapshot the run configuration next to the checkpoints."""
    import hashlib

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256(Path(data_path).read_bytes()).hexdigest()
    manifest = {
        "config": cfg.to_json(),
        "seed": cfg.seed,
        "data": {str(data_path): digest},
        **(extra or {}),
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path
