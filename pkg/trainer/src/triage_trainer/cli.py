"""`triage-trainer` executable: train LoRA adapters, serve the result."""

from __future__ import annotations

import argparse
import json
import sys
import time

from .config import TINY_BASE_MODEL, TrainConfig
from .errors import TrainerError
from .serve import serve
from .train import train


def cmd_train(args) -> int:
    overrides = {
        k: v for k, v in {
            "max_steps": args.max_steps,
            "batch_size": args.batch_size,
            "grad_accumulation": args.grad_accumulation,
            "learning_rate": args.learning_rate,
            "seq_len": args.seq_len,
            "seed": args.seed,
            "save_every": args.save_every,
        }.items() if v is not None
    }
    if args.tiny:
        overrides["base_model"] = TINY_BASE_MODEL
    elif args.base_model:
        overrides["base_model"] = args.base_model
    cfg = TrainConfig(**overrides)
    checkpoints = train(args.data, cfg, args.out)
    print(f"saved {len(checkpoints)} checkpoints under {args.out} (final: {checkpoints[-1]})")
    return 0


def cmd_serve(args) -> int:
    server = serve(args.adapter, args.port, args.host)
    print(f"serving {args.adapter} at {server.url}")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        server.stop()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="triage-trainer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fine-tune LoRA adapters on shaped JSONL")
    p.add_argument("--data", required=True, help="conversational SFT JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--tiny", action="store_true", help="use the byte-vocabulary stand-in model")
    p.add_argument("--base-model")
    p.add_argument("--max-steps", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--grad-accumulation", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--seq-len", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--save-every", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    p.add_argument("--adapter", required=True, help="checkpoint directory")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainerError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
