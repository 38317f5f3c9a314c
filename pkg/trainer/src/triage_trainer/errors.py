"""Trainer-specific exception types."""

from __future__ import annotations


class TrainerError(Exception):
    """Base class for trainer failures."""


class DataFormatError(TrainerError):
    def __init__(self, line: int, detail: str):
        self.line = line
        self.detail = detail
        super().__init__(f"line {line}: {detail}")


class ModelLoadError(TrainerError):
    pass


class PortInUse(TrainerError):
    def __init__(self, port: int):
        self.port = port
        super().__init__(f"port {port} is already in use")


class OutOfMemory(TrainerError):
    pass
