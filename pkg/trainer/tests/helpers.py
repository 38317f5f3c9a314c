from __future__ import annotations

import json
from pathlib import Path

DEVS = ["alice@x.io", "bob@x.io", "carol@x.io", "dan@x.io"]

SYSTEM = "You are an expert bug triager."


def write_sft_jsonl(path: Path, n: int = 64, devs: list[str] | None = None) -> Path:
    devs = devs or DEVS
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n):
            fh.write(json.dumps({
                "system": SYSTEM,
                "user": f"Crash {i} in module {i % 4}\n\nSteps: open file {i} and save.",
                "assistant": devs[i % len(devs)],
            }) + "\n")
    return path
