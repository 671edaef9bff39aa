"""Deterministic tokenizer with the frozen text encoder's id-space contract.

The id space mirrors a CLIP-style vocabulary: 49,408 ids with <|start|> at
49,406 and <|end|> at 49,407, context length 77. Instead of shipping a BPE
merge table, lowercase alphabetic words map to a stable FNV-1a hash bucket in
[256, 49406) and every other character falls back to its UTF-8 bytes
(ids 0..255). Digits therefore tokenize character by character, which is what
the digit-text numeral scheme expects.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

_WORD_RE = re.compile(r"[a-z]+|[^\sa-z]")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3


def _fnv1a(text: str) -> int:
    h = _FNV_OFFSET
    for byte in text.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


@dataclass(frozen=True)
class TokenizerSpec:
    """Id-space contract shared by the tokenizer, encoder, and decoder."""

    vocab_size: int = 49408
    start_token: int = 49406
    end_token: int = 49407
    context_length: int = 77

    def __post_init__(self):
        if self.end_token != self.vocab_size - 1:
            raise ValueError("end token must be the last id of the vocabulary")


class SimpleTokenizer:
    """Pure word-hash tokenizer implementing :class:`TokenizerSpec`."""

    def __init__(self, spec: TokenizerSpec | None = None):
        self.spec = spec or TokenizerSpec()
        self._word_space = self.spec.start_token - 256

    def word_id(self, word: str) -> int:
        """Stable id of a single lowercase alphabetic word."""
        if not word.isalpha():
            raise ValueError(f"word_id expects an alphabetic word, got {word!r}")
        return 256 + _fnv1a(word.casefold()) % self._word_space

    def encode_interior(self, text: str) -> list[int]:
        """Token ids without start/end brackets and without truncation."""
        ids: list[int] = []
        for piece in _WORD_RE.findall(text.casefold()):
            if piece.isalpha() and piece.isascii():
                ids.append(256 + _fnv1a(piece) % self._word_space)
            else:
                ids.extend(piece.encode("utf-8"))
        return ids

    def encode(self, text: str) -> list[int]:
        """Bracketed ids, truncated to the context length with the end id kept."""
        ids = [self.spec.start_token] + self.encode_interior(text) + [self.spec.end_token]
        if len(ids) > self.spec.context_length:
            ids = ids[: self.spec.context_length - 1] + [self.spec.end_token]
        return ids
