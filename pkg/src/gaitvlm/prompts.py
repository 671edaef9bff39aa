"""Knowledge-aware text prompts and class feature assembly.

Per class the text branch concatenates 8 learnable prompt vectors (initialized
by projecting an encoded medical description), the frozen token embeddings of
curated keywords, and the class-name tokens, then reads the frozen text
encoder's feature. Classification compares a video feature against the class
features by temperature-scaled cosine softmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from torch import nn

from gaitvlm import blobio
from gaitvlm.encoders import FrozenTextEncoder, TokenEmbeddingSequence
from gaitvlm.tokenizer import SimpleTokenizer

KNOWLEDGE_DIM = 768
PROMPT_COUNT = 8
KEYWORD_BUDGET = 32


class ContextOverflowError(ValueError):
    """Raised when a class's assembled prompt sequence exceeds the context."""


@dataclass(frozen=True)
class ClassSpec:
    """Class name, free-text medical description, and curated keywords."""

    class_name: str
    description: str
    keywords: tuple[str, ...]

    def __post_init__(self):
        if not self.keywords:
            raise ValueError(f"class {self.class_name!r} has no keywords")


def load_class_specs(path: str | Path) -> list[ClassSpec]:
    payload = json.loads(Path(path).read_text())
    specs = [
        ClassSpec(
            class_name=entry["class_name"],
            description=entry["description"],
            keywords=tuple(entry["keywords"]),
        )
        for entry in payload
    ]
    names = [s.class_name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("class names must be unique")
    return specs


def save_class_specs(path: str | Path, specs: list[ClassSpec]) -> None:
    payload = [
        {"class_name": s.class_name, "description": s.description, "keywords": list(s.keywords)}
        for s in specs
    ]
    Path(path).write_text(json.dumps(payload, indent=2))


class EncoderKnowledgeProvider:
    """Default knowledge source: frozen-encoder feature padded to the knowledge dim."""

    def __init__(self, encoder: FrozenTextEncoder, tokenizer: SimpleTokenizer,
                 dim: int = KNOWLEDGE_DIM):
        self.encoder = encoder
        self.tokenizer = tokenizer
        self.dim = dim

    def embed(self, description: str) -> np.ndarray:
        if not description:
            raise ValueError("description must be non-empty")
        with torch.no_grad():
            feat = self.encoder.encode_ids(self.tokenizer.encode(description))
        vec = feat.to(torch.float64).numpy()
        if vec.shape[0] >= self.dim:
            return vec[: self.dim]
        return np.concatenate([vec, np.zeros(self.dim - vec.shape[0])])


class VectorFileKnowledgeProvider:
    """Per-class knowledge vectors imported from a blob directory, keyed by class name."""

    def __init__(self, directory: str | Path, dim: int = KNOWLEDGE_DIM):
        self.vectors = blobio.load_tensors(directory)
        self.dim = dim

    def embed(self, description: str, class_name: str | None = None) -> np.ndarray:
        key = class_name if class_name is not None else description
        if key not in self.vectors:
            raise KeyError(f"no knowledge vector for {key!r}")
        vec = np.asarray(self.vectors[key], dtype=np.float64).reshape(-1)
        if vec.shape[0] != self.dim:
            raise ValueError(f"knowledge vector for {key!r} has dim {vec.shape[0]}, expected {self.dim}")
        return vec


def knowledge_matrix(provider, class_specs: list[ClassSpec]) -> np.ndarray:
    """(N_cls, K) matrix of per-class knowledge embeddings."""
    rows = []
    for spec in class_specs:
        try:
            rows.append(provider.embed(spec.description, class_name=spec.class_name))
        except TypeError:
            rows.append(provider.embed(spec.description))
    return np.stack(rows)


class PromptState(nn.Module):
    """Learnable per-class prompt vectors plus shared knowledge projections.

    ``prompts(knowledge)`` returns projected knowledge added to the learnable
    parameters; the final projection layer is zero-initialized so training
    starts from the learnable parameters alone.
    """

    def __init__(
        self,
        n_classes: int,
        knowledge_dim: int = KNOWLEDGE_DIM,
        prompt_count: int = PROMPT_COUNT,
        width: int = 512,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.n_classes = n_classes
        self.prompt_count = prompt_count
        gen = torch.Generator().manual_seed(seed)
        x = torch.empty(n_classes, prompt_count, width).normal_(0.0, 0.02, generator=gen)
        self.learnable = nn.Parameter(x)
        projections = []
        for _ in range(prompt_count):
            hidden = nn.Linear(knowledge_dim, width)
            hidden.weight.data.normal_(0.0, knowledge_dim**-0.5, generator=gen)
            hidden.bias.data.zero_()
            out = nn.Linear(width, width)
            out.weight.data.zero_()
            out.bias.data.zero_()
            projections.append(nn.Sequential(hidden, nn.GELU(), out))
        self.projections = nn.ModuleList(projections)
        self.to(dtype)

    def build_prompts(self, knowledge: torch.Tensor, use_knowledge: bool = True) -> torch.Tensor:
        """(N_cls, prompt_count, width) prompt vectors; knowledge optional."""
        if not use_knowledge:
            return self.learnable
        if knowledge.shape[0] != self.n_classes:
            raise ValueError(
                f"knowledge rows {knowledge.shape[0]} != classes {self.n_classes}"
            )
        projected = torch.stack(
            [proj(knowledge) for proj in self.projections], dim=1
        )  # (N, k, width)
        return projected + self.learnable


def build_automatic_prompt(
    keywords: tuple[str, ...] | list[str],
    tokenizer: SimpleTokenizer,
    encoder: FrozenTextEncoder,
    budget: int = KEYWORD_BUDGET,
) -> torch.Tensor:
    """Frozen token embeddings of the space-joined keywords, truncated to budget."""
    if not keywords:
        raise ValueError("keywords must be non-empty")
    ids = tokenizer.encode_interior(" ".join(keywords))[:budget]
    with torch.no_grad():
        seq = encoder.embed_tokens(ids)
    return seq.vectors


def validate_context_budget(
    class_specs: list[ClassSpec],
    tokenizer: SimpleTokenizer,
    encoder: FrozenTextEncoder,
    prompt_count: int = PROMPT_COUNT,
    keyword_budget: int = KEYWORD_BUDGET,
    use_auto_prompts: bool = True,
) -> None:
    """Fail at configuration time if any class would overflow the context length."""
    limit = encoder.config.context_length
    for spec in class_specs:
        auto = len(tokenizer.encode_interior(" ".join(spec.keywords))[:keyword_budget])
        name = len(tokenizer.encode_interior(spec.class_name))
        total = 1 + prompt_count + (auto if use_auto_prompts else 0) + name + 1
        if total > limit:
            raise ContextOverflowError(
                f"class {spec.class_name!r}: prompt sequence length {total} "
                f"exceeds context {limit}"
            )


def assemble_class_features(
    prompts: torch.Tensor,
    class_specs: list[ClassSpec],
    tokenizer: SimpleTokenizer,
    encoder: FrozenTextEncoder,
    auto_prompts: list[torch.Tensor] | None = None,
) -> torch.Tensor:
    """(N_cls, 512) class features from [start, prompts, keywords, name, end]."""
    if prompts.shape[0] != len(class_specs):
        raise ValueError("prompt rows must match class count")
    emb = encoder.token_embedding.weight
    start = emb[tokenizer.spec.start_token].detach()
    end = emb[tokenizer.spec.end_token].detach()
    seqs = []
    for i, spec in enumerate(class_specs):
        name_ids = tokenizer.encode_interior(spec.class_name)
        with torch.no_grad():
            name_vectors = encoder.embed_tokens(name_ids).vectors if name_ids else None
        parts = [start.unsqueeze(0), prompts[i]]
        if auto_prompts is not None:
            parts.append(auto_prompts[i])
        if name_vectors is not None:
            parts.append(name_vectors)
        parts.append(end.unsqueeze(0))
        vectors = torch.cat(parts, dim=0)
        if vectors.shape[0] > encoder.config.context_length:
            raise ContextOverflowError(
                f"class {spec.class_name!r}: sequence length {vectors.shape[0]} "
                f"exceeds context {encoder.config.context_length}"
            )
        seqs.append(TokenEmbeddingSequence(vectors=vectors, end_position=vectors.shape[0] - 1))
    return encoder.encode_embeddings_batch(seqs)


def class_probabilities(
    video_features: torch.Tensor, text_features: torch.Tensor, tau: float = 0.01
) -> torch.Tensor:
    """Softmax over cosine similarity / tau; shared by classify and the video loss."""
    if video_features.dim() == 1:
        video_features = video_features.unsqueeze(0)
    v_norm = video_features.norm(dim=-1, keepdim=True)
    t_norm = text_features.norm(dim=-1, keepdim=True)
    if float(v_norm.detach().min()) == 0.0 or float(t_norm.detach().min()) == 0.0:
        raise ValueError("zero-norm feature in cosine similarity")
    cos = (video_features / v_norm) @ (text_features / t_norm).T
    return torch.softmax(cos / tau, dim=-1)


def classify(
    video_feature: torch.Tensor, text_features: torch.Tensor, tau: float = 0.01
) -> tuple[np.ndarray, int]:
    """Probability simplex over classes and the argmax (lowest index on ties)."""
    probs = class_probabilities(video_feature, text_features, tau)[0]
    probs_np = probs.detach().to(torch.float64).numpy()
    return probs_np, int(np.argmax(probs_np))
