"""Supervised fine-tuning loop: AdamW, linear decay with warmup, anchor-masked loss."""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import Iterator

import torch
from torch.optim import AdamW
from torch.optim.lr_scheduler import LambdaLR

from .config import TrainConfig, write_manifest
from .data import Example, build_example, collate, load_records
from .errors import OutOfMemory
from .lora import apply_lora, save_adapter
from .model import load_base_model, save_tiny_base
from .tokenizer import ByteLevelTokenizer

TRAIN_LOG = "train_log.jsonl"


def set_seed(seed: int) -> None:
    random.seed(seed)
    torch.manual_seed(seed)


def _batches(examples: list[Example], batch_size: int, seed: int) -> Iterator[list[Example]]:
    """Endless deterministic stream: reshuffle every epoch with the run seed."""
    rng = random.Random(seed)
    while True:
        order = list(range(len(examples)))
        rng.shuffle(order)
        for start in range(0, len(order), batch_size):
            chunk = [examples[i] for i in order[start:start + batch_size]]
            if len(chunk) == batch_size:
                yield chunk


def _linear_schedule(optimizer, warmup_steps: int, total_steps: int) -> LambdaLR:
    def factor(step: int) -> float:
        if step < warmup_steps:
            return (step + 1) / max(1, warmup_steps)
        remaining = total_steps - step
        return max(0.0, remaining / max(1, total_steps - warmup_steps))

    return LambdaLR(optimizer, factor)


def train(sft_jsonl: str | Path, cfg: TrainConfig, out_dir: str | Path) -> list[Path]:
    """Fine-tune LoRA adapters on the shaped JSONL; returns checkpoint dirs.

    Loss is computed only on tokens after the assignee anchor. Intermediate
    and final adapters are saved; per-step loss and learning rate go to
    train_log.jsonl.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    set_seed(cfg.seed)

    tokenizer = ByteLevelTokenizer()
    records = load_records(sft_jsonl)
    examples = [build_example(rec, tokenizer, cfg.seq_len) for rec in records]

    model = load_base_model(cfg)
    if cfg.is_tiny():
        save_tiny_base(model, out_dir)
    trainable = apply_lora(model, cfg)
    model.train()

    optimizer = AdamW(trainable, lr=cfg.learning_rate, weight_decay=cfg.weight_decay)
    warmup_steps = int(cfg.warmup_ratio * cfg.max_steps)
    scheduler = _linear_schedule(optimizer, warmup_steps, cfg.max_steps)
    save_every = cfg.save_every or max(1, cfg.max_steps // 2)

    write_manifest(out_dir, cfg, sft_jsonl, extra={"records": len(records)})
    checkpoints: list[Path] = []
    stream = _batches(examples, cfg.batch_size, cfg.seed)

    try:
        with (out_dir / TRAIN_LOG).open("w", encoding="utf-8") as log:
            for step in range(cfg.max_steps):
                optimizer.zero_grad()
                step_loss = 0.0
                for _ in range(cfg.grad_accumulation):
                    batch = collate(next(stream))
                    out = model(**batch)
                    loss = out.loss / cfg.grad_accumulation
                    loss.backward()
                    step_loss += float(loss.detach())
                optimizer.step()
                scheduler.step()
                log.write(json.dumps({
                    "step": step,
                    "loss": step_loss,
                    "lr": scheduler.get_last_lr()[0],
                }) + "\n")
                if (step + 1) % save_every == 0 and step + 1 < cfg.max_steps:
                    checkpoints.append(save_adapter(model, cfg, out_dir / f"checkpoint-{step + 1}"))
    except (MemoryError, torch.cuda.OutOfMemoryError) as exc:
        raise OutOfMemory(str(exc)) from exc

    checkpoints.append(save_adapter(model, cfg, out_dir / "adapter"))
    return checkpoints


def read_train_log(out_dir: str | Path) -> list[dict]:
    lines = (Path(out_dir) / TRAIN_LOG).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]
