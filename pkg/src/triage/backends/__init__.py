from .base import (
    CompletionRequest,
    CompletionResponse,
    ScoreRequest,
    ScoreResponse,
    ScoringBackend,
    TokenizerHandle,
)
from .http import ENDPOINT_ENV_VAR, HttpBackend, HttpTokenizer, endpoint_from_env
from .mock import EOT_TOKEN_ID, VOCAB_SIZE, ByteTokenizer, MockBackend, ScriptedBackend, mock_score
from .server import BackendServer

__all__ = [
    "BackendServer",
    "ByteTokenizer",
    "CompletionRequest",
    "CompletionResponse",
    "ENDPOINT_ENV_VAR",
    "EOT_TOKEN_ID",
    "HttpBackend",
    "HttpTokenizer",
    "MockBackend",
    "ScoreRequest",
    "ScoreResponse",
    "ScoringBackend",
    "ScriptedBackend",
    "TokenizerHandle",
    "VOCAB_SIZE",
    "endpoint_from_env",
    "mock_score",
]
