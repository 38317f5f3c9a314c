"""LoRA supervised fine-tuning and wire-protocol serving for the triage toolchain."""

__version__ = "0.1.0"
