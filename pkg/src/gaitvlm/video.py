"""Video branch: sliding windows, layer-wise visual prompts, video features.

Every clip is cut into 70-frame windows (stride 25 for training,
non-overlapping for evaluation; short clips are padded by repeating the last
frame). A fixed number of frames is sampled per window before entering the
frozen vision transformer. At each encoder layer the prompt learner reads the
previous layer's frame-summary tokens and produces one attention-pooled
summary token, a handful of input-independent global tokens, and one locally
projected token per frame; these are appended for the block and stripped
afterwards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from gaitvlm.encoders import FrozenVisionEncoder


@dataclass(frozen=True)
class WindowSpec:
    window: int = 70
    train_stride: int = 25


def sliding_windows(
    video_length: int, spec: WindowSpec | None = None, mode: str = "train"
) -> list[tuple[int, int]]:
    """[start, start+window) ranges; eval windows are non-overlapping.

    Videos shorter than the window yield a single range whose extraction pads
    by repeating the last frame.
    """
    spec = spec or WindowSpec()
    if video_length < 1:
        raise ValueError("video length must be at least 1")
    if mode not in ("train", "eval"):
        raise ValueError(f"unknown mode {mode!r}")
    if video_length < spec.window:
        return [(0, spec.window)]
    stride = spec.train_stride if mode == "train" else spec.window
    return [
        (start, start + spec.window)
        for start in range(0, video_length - spec.window + 1, stride)
    ]


def extract_window(frames: np.ndarray, start: int, window: int) -> np.ndarray:
    """Slice one window, repeating the last frame when the clip runs out."""
    clip = frames[start : start + window]
    if clip.shape[0] < window:
        pad = np.repeat(clip[-1:], window - clip.shape[0], axis=0)
        clip = np.concatenate([clip, pad], axis=0)
    return clip


def sample_frame_indices(window: int, count: int) -> np.ndarray:
    """Evenly spaced frame indices covering the window, endpoints included."""
    if count >= window:
        return np.arange(window)
    return np.round(np.linspace(0, window - 1, count)).astype(int)


def temporal_encoding(length: int, width: int, dtype: torch.dtype) -> torch.Tensor:
    """Sinusoidal position encoding over frame index."""
    position = torch.arange(length, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(
        torch.arange(0, width, 2, dtype=torch.float64) * (-math.log(10000.0) / width)
    )
    enc = torch.zeros(length, width, dtype=torch.float64)
    enc[:, 0::2] = torch.sin(position * div)
    enc[:, 1::2] = torch.cos(position * div)
    return enc.to(dtype)


class VisualPromptLearner(nn.Module):
    """Per-layer summary, global, and local prompt tokens for the vision encoder."""

    def __init__(
        self,
        depth: int,
        width: int,
        global_tokens: int = 4,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.depth = depth
        self.width = width
        gen = torch.Generator().manual_seed(seed)

        def linear():
            layer = nn.Linear(width, width)
            layer.weight.data.normal_(0.0, width**-0.5, generator=gen)
            layer.bias.data.zero_()
            return layer

        self.pool_query = nn.Parameter(
            torch.empty(depth, width).normal_(0.0, 0.02, generator=gen)
        )
        self.pool_key = nn.ModuleList(linear() for _ in range(depth))
        self.pool_value = nn.ModuleList(linear() for _ in range(depth))
        self.local_proj = nn.ModuleList(linear() for _ in range(depth))
        self.global_tokens = nn.Parameter(
            torch.empty(depth, global_tokens, width).normal_(0.0, 0.02, generator=gen)
        )
        self.to(dtype)

    def forward(self, layer: int, frame_summaries: torch.Tensor) -> torch.Tensor:
        """(B, T, width) frame-summary tokens -> (B, 1 + M_g + T, width) prompts."""
        if not 0 <= layer < self.depth:
            raise ValueError(f"layer {layer} outside depth {self.depth}")
        b, t, d = frame_summaries.shape
        tpe = temporal_encoding(t, d, frame_summaries.dtype)
        pooled_in = frame_summaries + tpe
        keys = self.pool_key[layer](pooled_in)
        values = self.pool_value[layer](pooled_in)
        scores = (keys @ self.pool_query[layer]) / math.sqrt(d)  # (B, T)
        weights = scores.softmax(dim=-1)
        summary = (weights.unsqueeze(-1) * values).sum(dim=1, keepdim=True)  # (B, 1, d)
        global_toks = self.global_tokens[layer].unsqueeze(0).expand(b, -1, -1)
        local = self.local_proj[layer](frame_summaries) + tpe
        return torch.cat([summary, global_toks, local], dim=1)


def encode_video_batch(
    frames: np.ndarray | torch.Tensor,
    encoder: FrozenVisionEncoder,
    prompt_learner: VisualPromptLearner | None = None,
    pooling: str = "summary",
) -> torch.Tensor:
    """(B, T, H, W) pixel batch -> (B, 512) video features.

    With prompts enabled, the feature is the last block's output at the
    summary-prompt position; without prompts (or with pooling="mean") it is
    the mean of per-frame summary features.
    """
    if isinstance(frames, np.ndarray):
        frames = torch.from_numpy(frames)
    grids = encoder.tokenize_frames(frames)
    inject = None
    if prompt_learner is not None:
        inject = lambda layer, g: prompt_learner(layer, g[:, :, 0, :])
    out = encoder.forward_layerwise(grids, inject)
    if pooling == "summary" and "summary_feature" in out:
        return out["summary_feature"]
    return out["frame_features"].mean(dim=1)


def encode_video(
    frames: np.ndarray | torch.Tensor,
    encoder: FrozenVisionEncoder,
    prompt_learner: VisualPromptLearner | None = None,
    pooling: str = "summary",
) -> torch.Tensor:
    """Single-clip wrapper around :func:`encode_video_batch`."""
    if isinstance(frames, np.ndarray):
        frames = torch.from_numpy(frames)
    return encode_video_batch(frames.unsqueeze(0), encoder, prompt_learner, pooling)[0]
