"""Bug-triage toolchain: tracker ETL, prompt shaping, roster-constrained
decoding, and Top-K evaluation."""

__version__ = "0.1.0"
