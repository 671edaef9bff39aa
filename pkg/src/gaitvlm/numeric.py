"""Numerical text embeddings: value-scaled base vector inside a token sequence.

A gait-parameter sentence is embedded in two steps: each parameter phrase is
encoded on its own into one feature vector, then the sequence
[start, phrase, IS, value * NUM, ...] * 4 [end] is pushed through the frozen
text encoder. The NUM base is a unit vector orthogonal to every row of the
encoder's positional embedding, so the value signal stays separable from
position information inside self-attention. The similarity diagnostic compares
this scheme against digit tokenization and positional-row lookup.
"""

from __future__ import annotations

import numpy as np
import torch

from gaitvlm.encoders import FrozenTextEncoder, TokenEmbeddingSequence
from gaitvlm.params import VALUE_RANGE, NumericSentence
from gaitvlm.tokenizer import SimpleTokenizer

SCHEMES = ("digit-text", "positional", "num-base")


def build_num_base(
    positional_matrix: np.ndarray, seed: int, max_attempts: int = 16
) -> np.ndarray:
    """Seeded unit vector orthogonal to every positional row.

    Draws a random vector and removes its component in the row span of the
    positional matrix (projection against an orthonormalized basis, applied
    twice for float hygiene). Retries with the next seed if the residual
    collapses.
    """
    pos = np.asarray(positional_matrix, dtype=np.float64)
    rows, width = pos.shape
    if width <= rows:
        raise ValueError(f"width {width} must exceed positional rows {rows}")
    q, _ = np.linalg.qr(pos.T)  # (width, rows), orthonormal columns spanning the rows
    for attempt in range(max_attempts):
        rng = np.random.default_rng(seed + attempt)
        v = rng.standard_normal(width)
        v = v - q @ (q.T @ v)
        v = v - q @ (q.T @ v)
        norm = float(np.linalg.norm(v))
        if norm >= 1e-8:
            return v / norm
    raise RuntimeError(f"num-base projection collapsed for {max_attempts} seeds in a row")


def embed_value(v_norm: float, num_base: np.ndarray | torch.Tensor):
    """Scale the unit base by the normalized value: zero maps to the zero vector."""
    if isinstance(num_base, torch.Tensor):
        return num_base * v_norm
    return np.asarray(num_base) * v_norm


class NumericEmbedder:
    """Composes and encodes numeric sentences against one frozen text encoder."""

    def __init__(
        self,
        encoder: FrozenTextEncoder,
        tokenizer: SimpleTokenizer | None = None,
        seed: int = 0,
        num_base: np.ndarray | None = None,
    ):
        self.encoder = encoder
        self.tokenizer = tokenizer or SimpleTokenizer(encoder.tokenizer_spec)
        if num_base is None:
            num_base = build_num_base(encoder.positional_matrix, seed)
        self.num_base_array = np.asarray(num_base, dtype=np.float64)
        dtype = encoder.positional.dtype
        self.num_base = torch.from_numpy(self.num_base_array).to(dtype)
        emb = encoder.token_embedding.weight
        self.is_embedding = emb[self.tokenizer.word_id("is")].detach()
        self._start = emb[self.tokenizer.spec.start_token].detach()
        self._end = emb[self.tokenizer.spec.end_token].detach()
        self._phrase_cache: dict[str, torch.Tensor] = {}

    def phrase_feature(self, phrase: str) -> torch.Tensor:
        """Full encoder feature of the phrase alone; cached per phrase."""
        if phrase not in self._phrase_cache:
            with torch.no_grad():
                feat = self.encoder.encode_ids(self.tokenizer.encode(phrase))
            self._phrase_cache[phrase] = feat
        return self._phrase_cache[phrase]

    def prime_phrases(self, phrases: list[str]) -> None:
        """Batch-fill the phrase cache."""
        todo = [p for p in dict.fromkeys(phrases) if p not in self._phrase_cache]
        if not todo:
            return
        with torch.no_grad():
            feats = self.encoder.encode_ids_batch([self.tokenizer.encode(p) for p in todo])
        for phrase, feat in zip(todo, feats):
            self._phrase_cache[phrase] = feat

    def compose(
        self, phrase_features: list[torch.Tensor], values: list[float]
    ) -> TokenEmbeddingSequence:
        """[start] + (phrase, IS, value*NUM) per parameter + [end]; no connectors."""
        if len(phrase_features) != len(values):
            raise ValueError("phrase/value count mismatch")
        slots = [self._start]
        for feat, value in zip(phrase_features, values):
            if not np.isfinite(value) or abs(value) > VALUE_RANGE + 1e-9:
                raise ValueError(
                    f"normalized value {value} outside [-{VALUE_RANGE}, {VALUE_RANGE}]"
                )
            slots.extend([feat, self.is_embedding, self.num_base * value])
        slots.append(self._end)
        vectors = torch.stack(slots)
        return TokenEmbeddingSequence(vectors=vectors, end_position=vectors.shape[0] - 1)

    def encode_sentence(self, sentence: NumericSentence) -> torch.Tensor:
        feats = [self.phrase_feature(p) for p, _ in sentence.items]
        values = [v for _, v in sentence.items]
        return self.encoder.encode_embeddings(self.compose(feats, values))

    def encode_sentences(self, sentences: list[NumericSentence]) -> torch.Tensor:
        self.prime_phrases([p for s in sentences for p, _ in s.items])
        seqs = [
            self.compose([self.phrase_feature(p) for p, _ in s.items], [v for _, v in s.items])
            for s in sentences
        ]
        return self.encoder.encode_embeddings_batch(seqs)


def _normalize_grid(values: np.ndarray) -> np.ndarray:
    lo, hi = float(values[0]), float(values[-1])
    center, half = (lo + hi) / 2.0, (hi - lo) / 2.0
    return (values - center) / half * VALUE_RANGE


def diagnose_similarity(
    embedder: NumericEmbedder,
    scheme: str,
    value_grid: np.ndarray,
    template_phrase: str = "the walking speed",
) -> np.ndarray:
    """Cosine similarity matrix of one-parameter sentences over a value grid.

    Schemes: ``digit-text`` tokenizes the literal number string, ``positional``
    maps the value to a positional-embedding row, ``num-base`` uses this
    module's value-scaled base.
    """
    values = np.asarray(value_grid, dtype=np.float64)
    if np.any(np.diff(values) <= 0):
        raise ValueError("value grid must be sorted ascending")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    encoder, tokenizer = embedder.encoder, embedder.tokenizer
    with torch.no_grad():
        if scheme == "digit-text":
            texts = [f"{template_phrase} is {v:g}" for v in values]
            feats = encoder.encode_ids_batch([tokenizer.encode(t) for t in texts])
        else:
            phrase_feat = embedder.phrase_feature(template_phrase)
            omegas = _normalize_grid(values)
            seqs = []
            if scheme == "positional":
                rows = encoder.positional.detach()
                row_idx = np.rint(
                    (values - values[0]) / (values[-1] - values[0]) * (rows.shape[0] - 1)
                ).astype(int)
            for i, omega in enumerate(omegas):
                if scheme == "num-base":
                    number_slot = embedder.num_base * float(omega)
                else:
                    number_slot = rows[row_idx[i]]
                vectors = torch.stack(
                    [
                        embedder._start,
                        phrase_feat,
                        embedder.is_embedding,
                        number_slot,
                        embedder._end,
                    ]
                )
                seqs.append(TokenEmbeddingSequence(vectors=vectors, end_position=4))
            feats = encoder.encode_embeddings_batch(seqs)
    feats = feats.to(torch.float64).numpy()
    feats = feats / np.linalg.norm(feats, axis=1, keepdims=True)
    return np.clip(feats @ feats.T, -1.0, 1.0)


def continuity_metrics(
    matrix: np.ndarray, near_offset: int = 1, far_offset: int = 100
) -> dict[str, float]:
    """Anchor-wise near-vs-far ordering rate and mean adjacent dissimilarity.

    An anchor passes when every available near-neighbor similarity is at least
    every available far-neighbor similarity.
    """
    n = matrix.shape[0]
    passed = 0
    counted = 0
    for i in range(n):
        near = [matrix[i, j] for j in (i - near_offset, i + near_offset) if 0 <= j < n]
        far = [matrix[i, j] for j in (i - far_offset, i + far_offset) if 0 <= j < n]
        if not near or not far:
            continue
        counted += 1
        if min(near) >= max(far):
            passed += 1
    adjacent = 1.0 - np.array([matrix[i, i + 1] for i in range(n - 1)])
    return {
        "near_far_pass_rate": passed / counted if counted else float("nan"),
        "mean_adjacent_dissimilarity": float(adjacent.mean()),
        "max_adjacent_dissimilarity": float(adjacent.max()),
    }
