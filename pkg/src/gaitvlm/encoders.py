"""Frozen contrastive text and vision backbones with injection entry points.

Both encoders are pre-LN transformers initialized from a seeded generator and
frozen immediately; gradients flow through them into injected prompt tokens
but never into backbone weights. The text encoder reads its feature at the
end-token position (causal attention, CLIP-style); the vision encoder exposes
a layer-wise forward that appends caller-provided prompt tokens before each
block and strips them afterwards.

Desk-scale defaults keep the full dimensional contracts (width 512 text
features, 77 positional rows, 49,408-token vocabulary) while staying trainable
in minutes on a CPU.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable

import numpy as np
import torch
from torch import nn

from gaitvlm import blobio
from gaitvlm.tokenizer import TokenizerSpec

ENCODER_CONFIG_NAME = "encoders.json"


@dataclass(frozen=True)
class TextEncoderConfig:
    vocab_size: int = 49408
    width: int = 512
    depth: int = 4
    heads: int = 8
    context_length: int = 77
    mlp_ratio: int = 4
    token_embed_std: float = 0.02
    positional_std: float = 0.02


@dataclass(frozen=True)
class VisionEncoderConfig:
    image_size: int = 64
    patch_size: int = 16
    width: int = 192
    depth: int = 6
    heads: int = 6
    mlp_ratio: int = 4
    output_dim: int = 512
    channels: int = 1

    @property
    def tokens_per_frame(self) -> int:
        # patch grid plus one leading frame-summary token
        return (self.image_size // self.patch_size) ** 2 + 1


@dataclass
class TokenEmbeddingSequence:
    """Width-dim vectors plus the index whose output becomes the feature."""

    vectors: torch.Tensor  # (L, width)
    end_position: int

    def __post_init__(self):
        if not 0 <= self.end_position < self.vectors.shape[0]:
            raise ValueError("end position outside sequence")


class SelfAttention(nn.Module):
    def __init__(self, width: int, heads: int):
        super().__init__()
        if width % heads:
            raise ValueError("width must be divisible by heads")
        self.heads = heads
        self.head_dim = width // heads
        self.qkv = nn.Linear(width, 3 * width)
        self.out = nn.Linear(width, width)

    def forward(self, x: torch.Tensor, attn_mask: torch.Tensor | None = None) -> torch.Tensor:
        b, L, d = x.shape
        qkv = self.qkv(x).reshape(b, L, 3, self.heads, self.head_dim).permute(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = (q @ k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        if attn_mask is not None:
            scores = scores + attn_mask
        y = scores.softmax(dim=-1) @ v
        y = y.transpose(1, 2).reshape(b, L, d)
        return self.out(y)


class Block(nn.Module):
    def __init__(self, width: int, heads: int, mlp_ratio: int):
        super().__init__()
        self.ln_1 = nn.LayerNorm(width)
        self.attn = SelfAttention(width, heads)
        self.ln_2 = nn.LayerNorm(width)
        self.mlp = nn.Sequential(
            nn.Linear(width, mlp_ratio * width),
            nn.GELU(),
            nn.Linear(mlp_ratio * width, width),
        )

    def forward(self, x: torch.Tensor, attn_mask: torch.Tensor | None = None) -> torch.Tensor:
        x = x + self.attn(self.ln_1(x), attn_mask)
        return x + self.mlp(self.ln_2(x))


def _init_linear(module: nn.Module, std: float, gen: torch.Generator) -> None:
    for m in module.modules():
        if isinstance(m, nn.Linear):
            m.weight.data.normal_(0.0, std, generator=gen)
            if m.bias is not None:
                m.bias.data.zero_()


def _causal_mask(length: int, dtype: torch.dtype) -> torch.Tensor:
    mask = torch.full((length, length), float("-inf"), dtype=dtype)
    return mask.triu(1)


class FrozenTextEncoder(nn.Module):
    """Causal transformer over token embeddings, feature read at the end token."""

    def __init__(
        self,
        config: TextEncoderConfig | None = None,
        tokenizer_spec: TokenizerSpec | None = None,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.config = config or TextEncoderConfig()
        self.tokenizer_spec = tokenizer_spec or TokenizerSpec()
        if self.tokenizer_spec.vocab_size != self.config.vocab_size:
            raise ValueError("tokenizer and encoder vocab sizes disagree")
        cfg = self.config
        self.token_embedding = nn.Embedding(cfg.vocab_size, cfg.width)
        self.positional = nn.Parameter(torch.empty(cfg.context_length, cfg.width))
        self.blocks = nn.ModuleList(
            Block(cfg.width, cfg.heads, cfg.mlp_ratio) for _ in range(cfg.depth)
        )
        self.ln_final = nn.LayerNorm(cfg.width)
        self.projection = nn.Parameter(torch.empty(cfg.width, cfg.width))

        gen = torch.Generator().manual_seed(seed)
        self.token_embedding.weight.data.normal_(0.0, cfg.token_embed_std, generator=gen)
        self.positional.data.normal_(0.0, cfg.positional_std, generator=gen)
        for block in self.blocks:
            _init_linear(block, 0.02, gen)
        self.projection.data.normal_(0.0, cfg.width**-0.5, generator=gen)
        self.to(dtype)
        self.requires_grad_(False)
        self.eval()

    @property
    def positional_matrix(self) -> np.ndarray:
        return self.positional.detach().to(torch.float64).numpy()

    def embed_tokens(self, ids: list[int] | torch.Tensor) -> TokenEmbeddingSequence:
        """Vocabulary embeddings only; positions are added inside encode_*."""
        ids_t = torch.as_tensor(ids, dtype=torch.long)
        if ids_t.numel() == 0:
            raise ValueError("cannot embed an empty id sequence")
        if int(ids_t.min()) < 0 or int(ids_t.max()) >= self.config.vocab_size:
            raise ValueError(
                f"token id out of range [0, {self.config.vocab_size}): "
                f"{int(ids_t.min())}..{int(ids_t.max())}"
            )
        vectors = self.token_embedding(ids_t)
        return TokenEmbeddingSequence(vectors=vectors, end_position=len(ids_t) - 1)

    def _forward_batch(self, x: torch.Tensor, end_positions: torch.Tensor) -> torch.Tensor:
        # x: (B, L, width) token embeddings without positions
        length = x.shape[1]
        if length > self.config.context_length:
            raise ValueError(
                f"sequence length {length} exceeds context {self.config.context_length}"
            )
        x = x + self.positional[:length]
        mask = _causal_mask(length, x.dtype)
        for block in self.blocks:
            x = block(x, mask)
        x = self.ln_final(x)
        feats = x[torch.arange(x.shape[0]), end_positions]
        return feats @ self.projection

    def encode_embeddings(self, seq: TokenEmbeddingSequence) -> torch.Tensor:
        """512-dim feature of one (possibly prompt-injected) embedding sequence."""
        return self._forward_batch(
            seq.vectors.unsqueeze(0), torch.tensor([seq.end_position])
        )[0]

    def encode_embeddings_batch(self, seqs: list[TokenEmbeddingSequence]) -> torch.Tensor:
        max_len = max(s.vectors.shape[0] for s in seqs)
        if max_len > self.config.context_length:
            raise ValueError(
                f"sequence length {max_len} exceeds context {self.config.context_length}"
            )
        width = self.config.width
        x = torch.zeros(len(seqs), max_len, width, dtype=seqs[0].vectors.dtype)
        ends = torch.zeros(len(seqs), dtype=torch.long)
        for i, s in enumerate(seqs):
            x[i, : s.vectors.shape[0]] = s.vectors
            ends[i] = s.end_position
        return self._forward_batch(x, ends)

    def encode_ids(self, ids: list[int]) -> torch.Tensor:
        return self.encode_embeddings(self.embed_tokens(ids))

    def encode_ids_batch(self, ids_batch: list[list[int]]) -> torch.Tensor:
        return self.encode_embeddings_batch([self.embed_tokens(ids) for ids in ids_batch])

    def encode_text(self, text: str, tokenizer) -> torch.Tensor:
        return self.encode_ids(tokenizer.encode(text))


class FrozenVisionEncoder(nn.Module):
    """Per-frame patch tokenizer plus a transformer with prompt injection slots."""

    def __init__(
        self,
        config: VisionEncoderConfig | None = None,
        seed: int = 1,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.config = config or VisionEncoderConfig()
        cfg = self.config
        if cfg.image_size % cfg.patch_size:
            raise ValueError("image size must be divisible by patch size")
        self.patch_embed = nn.Conv2d(
            cfg.channels, cfg.width, kernel_size=cfg.patch_size, stride=cfg.patch_size
        )
        self.class_token = nn.Parameter(torch.empty(cfg.width))
        self.spatial_positional = nn.Parameter(torch.empty(cfg.tokens_per_frame, cfg.width))
        self.blocks = nn.ModuleList(
            Block(cfg.width, cfg.heads, cfg.mlp_ratio) for _ in range(cfg.depth)
        )
        self.ln_post = nn.LayerNorm(cfg.width)
        self.projection = nn.Parameter(torch.empty(cfg.width, cfg.output_dim))

        gen = torch.Generator().manual_seed(seed)
        self.patch_embed.weight.data.normal_(0.0, 0.02, generator=gen)
        self.patch_embed.bias.data.zero_()
        self.class_token.data.normal_(0.0, 0.02, generator=gen)
        self.spatial_positional.data.normal_(0.0, 0.01, generator=gen)
        for block in self.blocks:
            _init_linear(block, 0.02, gen)
        self.projection.data.normal_(0.0, cfg.width**-0.5, generator=gen)
        self.to(dtype)
        self.requires_grad_(False)
        self.eval()

    def tokenize_frames(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, T, H, W[, C]) pixels in [0, 255] -> (B, T, tokens, width) grids."""
        if frames.dim() == 4:
            frames = frames.unsqueeze(-1)
        b, t, h, w, c = frames.shape
        cfg = self.config
        if h != cfg.image_size or w != cfg.image_size or c != cfg.channels:
            raise ValueError(
                f"expected frames of {cfg.image_size}x{cfg.image_size}x{cfg.channels}, "
                f"got {h}x{w}x{c}"
            )
        dtype = self.class_token.dtype
        x = frames.to(dtype).div(255.0).permute(0, 1, 4, 2, 3).reshape(b * t, c, h, w)
        x = self.patch_embed(x)  # (b*t, width, g, g)
        x = x.flatten(2).transpose(1, 2)  # (b*t, patches, width)
        cls = self.class_token.expand(b * t, 1, cfg.width)
        x = torch.cat([cls, x], dim=1) + self.spatial_positional
        return x.reshape(b, t, cfg.tokens_per_frame, cfg.width)

    def forward_layerwise(
        self,
        grids: torch.Tensor,
        inject: Callable[[int, torch.Tensor], torch.Tensor | None] | None = None,
    ) -> dict[str, torch.Tensor]:
        """Run all blocks, appending injected prompts per layer and stripping after.

        ``inject(layer, grids)`` receives the previous layer's (B, T, tokens,
        width) state and returns (B, M, width) prompt tokens or None. Returns
        per-frame summary features after projection plus, when prompts were
        injected at the last layer, the final output at the first injected
        (summary) prompt position.
        """
        b, t, n, d = grids.shape
        x = grids.reshape(b, t * n, d)
        prompt_out = None
        for layer, block in enumerate(self.blocks):
            prompts = inject(layer, x.reshape(b, t, n, d)) if inject is not None else None
            if prompts is None:
                x = block(x)
                continue
            if prompts.shape[-1] != d:
                raise ValueError(
                    f"prompt width {prompts.shape[-1]} does not match encoder width {d}"
                )
            y = block(torch.cat([x, prompts], dim=1))
            if layer == len(self.blocks) - 1:
                prompt_out = y[:, t * n]
            x = y[:, : t * n]
        frame_summaries = self.ln_post(x.reshape(b, t, n, d)[:, :, 0])
        out = {"frame_features": frame_summaries @ self.projection}
        if prompt_out is not None:
            out["summary_feature"] = self.ln_post(prompt_out) @ self.projection
        return out


def make_encoder_pair(
    seed: int = 0,
    text_config: TextEncoderConfig | None = None,
    vision_config: VisionEncoderConfig | None = None,
    dtype: torch.dtype = torch.float32,
) -> tuple[FrozenTextEncoder, FrozenVisionEncoder]:
    text = FrozenTextEncoder(text_config, seed=seed, dtype=dtype)
    vision = FrozenVisionEncoder(vision_config, seed=seed + 1, dtype=dtype)
    return text, vision


def backbone_checksum(*modules: nn.Module) -> str:
    """SHA-256 over all parameter bytes; constant across training iff frozen."""
    digest = hashlib.sha256()
    for module in modules:
        for name, param in sorted(module.named_parameters()):
            digest.update(name.encode())
            digest.update(param.detach().cpu().numpy().tobytes())
    return digest.hexdigest()


def save_encoders(
    directory: str | Path, text: FrozenTextEncoder, vision: FrozenVisionEncoder
) -> None:
    directory = Path(directory)
    tensors: dict[str, np.ndarray] = {}
    for prefix, module in (("text", text), ("vision", vision)):
        for name, param in module.state_dict().items():
            tensors[f"{prefix}.{name}"] = param.detach().cpu().numpy().astype(np.float32)
    blobio.save_tensors(directory, tensors)
    config = {
        "text": asdict(text.config),
        "vision": asdict(vision.config),
        "tokenizer": asdict(text.tokenizer_spec),
    }
    (directory / ENCODER_CONFIG_NAME).write_text(json.dumps(config, indent=2))


def load_pretrained(directory: str | Path) -> tuple[FrozenTextEncoder, FrozenVisionEncoder]:
    """Load a frozen encoder pair from a blob directory, validating shapes."""
    directory = Path(directory)
    config_path = directory / ENCODER_CONFIG_NAME
    if not config_path.exists():
        raise blobio.BlobFormatError(f"missing encoder config: {config_path}")
    config = json.loads(config_path.read_text())
    text = FrozenTextEncoder(
        TextEncoderConfig(**config["text"]), TokenizerSpec(**config["tokenizer"])
    )
    vision = FrozenVisionEncoder(VisionEncoderConfig(**config["vision"]))
    tensors = blobio.load_tensors(directory)
    for prefix, module in (("text", text), ("vision", vision)):
        state = {}
        for name, param in module.state_dict().items():
            key = f"{prefix}.{name}"
            if key not in tensors:
                raise blobio.BlobFormatError(f"missing tensor {key} in {directory}")
            loaded = tensors[key]
            if tuple(loaded.shape) != tuple(param.shape):
                raise blobio.BlobFormatError(
                    f"shape mismatch for {key}: file has {tuple(loaded.shape)}, "
                    f"config implies {tuple(param.shape)}"
                )
            state[name] = torch.from_numpy(loaded).to(param.dtype)
        module.load_state_dict(state)
        module.requires_grad_(False)
        module.eval()
    return text, vision
