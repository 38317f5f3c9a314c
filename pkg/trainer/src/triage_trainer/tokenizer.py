"""Byte-level tokenizer for the desk-scale stand-in model.

Token ids are UTF-8 byte values 0..255; byte 0 never occurs in text and
serves as both EOS and padding.
"""

from __future__ import annotations

from typing import Sequence

VOCAB_SIZE = 256
EOS_TOKEN_ID = 0
PAD_TOKEN_ID = 0


class ByteLevelTokenizer:
    name = "byte-256"
    vocab_size = VOCAB_SIZE
    eos_token_id = EOS_TOKEN_ID
    pad_token_id = PAD_TOKEN_ID

    def tokenize(self, text: str) -> list[int]:
        return list(text.encode("utf-8"))

    def detokenize(self, ids: Sequence[int]) -> str:
        return bytes(i for i in ids if i != EOS_TOKEN_ID).decode("utf-8", errors="ignore")
