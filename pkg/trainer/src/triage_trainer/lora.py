"""Low-rank adapters applied to frozen linear projections.

Adapters are saved as adapter_config.json plus a plain state dict
(adapter_model.pt) keyed by module path, mirroring the standard adapter
checkpoint layout.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import torch
from torch import nn

from .config import TrainConfig

ADAPTER_CONFIG = "adapter_config.json"
ADAPTER_WEIGHTS = "adapter_model.pt"


class LoRALinear(nn.Module):
    """Frozen base linear plus trainable low-rank update B @ A, scaled alpha/r."""

    def __init__(self, base: nn.Linear, r: int, alpha: float, dropout: float):
        super().__init__()
        self.base = base
        for param in self.base.parameters():
            param.requires_grad_(False)
        self.lora_A = nn.Parameter(torch.empty(r, base.in_features))
        self.lora_B = nn.Parameter(torch.zeros(base.out_features, r))
        nn.init.kaiming_uniform_(self.lora_A, a=math.sqrt(5))
        self.scaling = alpha / r
        self.dropout = nn.Dropout(dropout) if dropout > 0 else nn.Identity()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        update = self.dropout(x) @ self.lora_A.T @ self.lora_B.T
        return self.base(x) + update * self.scaling


def apply_lora(model: nn.Module, cfg: TrainConfig) -> list[nn.Parameter]:
    """Freeze the model and wrap every target projection; returns trainables."""
    for param in model.parameters():
        param.requires_grad_(False)
    replaced = 0
    for module in list(model.modules()):
        for name, child in list(module.named_children()):
            if name in cfg.target_modules and isinstance(child, nn.Linear):
                setattr(module, name, LoRALinear(child, cfg.lora_r, cfg.lora_alpha,
                                                 cfg.lora_dropout))
                replaced += 1
    if replaced == 0:
        raise ValueError(f"no target modules {cfg.target_modules} found in model")
    return [p for p in model.parameters() if p.requires_grad]


def adapter_state_dict(model: nn.Module) -> dict[str, torch.Tensor]:
    return {
        name: param.detach().cpu().clone()
        for name, param in model.named_parameters()
        if "lora_A" in name or "lora_B" in name
    }


def save_adapter(model: nn.Module, cfg: TrainConfig, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = {
        "peft_type": "LORA",
        "task_type": "CAUSAL_LM",
        "base_model_name_or_path": cfg.base_model,
        "r": cfg.lora_r,
        "lora_alpha": cfg.lora_alpha,
        "lora_dropout": cfg.lora_dropout,
        "target_modules": list(cfg.target_modules),
    }
    (out_dir / ADAPTER_CONFIG).write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    torch.save(adapter_state_dict(model), out_dir / ADAPTER_WEIGHTS)
    return out_dir


def load_adapter(model: nn.Module, adapter_dir: str | Path) -> None:
    """Load adapter weights into an already-wrapped model (strict key match)."""
    state = torch.load(Path(adapter_dir) / ADAPTER_WEIGHTS, map_location="cpu")
    own = {name for name, _ in model.named_parameters() if "lora_" in name}
    missing = own - set(state)
    unexpected = set(state) - own
    if missing or unexpected:
        raise ValueError(f"adapter mismatch: missing={sorted(missing)} unexpected={sorted(unexpected)}")
    model.load_state_dict(state, strict=False)


def read_adapter_config(adapter_dir: str | Path) -> dict:
    return json.loads((Path(adapter_dir) / ADAPTER_CONFIG).read_text(encoding="utf-8"))
