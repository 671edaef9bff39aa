"""Training objectives: focal, cross-modal contrastive, ordinal, prefix LM.

The video-text loss and the classifier share one probability computation
(temperature-scaled cosine softmax). The numeric-text loss projects numeric
features through per-class heads and the class features through a shared head,
pairing head i's output with projected class feature i as logit i. Number
tokens in decoder targets additionally receive an ordinal penalty scaled by
the absolute id distance between prediction and target.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from gaitvlm.prompts import class_probabilities

PROB_EPS = 1e-12
EOS_ID = 49407


@dataclass(frozen=True)
class LossWeights:
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0
    temperature: float = 0.01
    gp_weight: float = 0.05
    n_num: int = 200

    def __post_init__(self):
        if min(self.focal_alpha, self.temperature, self.n_num) <= 0:
            raise ValueError("loss weights must be positive")
        if self.focal_gamma < 0 or self.gp_weight < 0:
            raise ValueError("focal gamma and gp weight must be non-negative")


def focal_loss(
    probs: torch.Tensor, label: int, alpha: float = 0.25, gamma: float = 2.0
) -> torch.Tensor:
    """-alpha * (1 - p_label)^gamma * log(p_label) for one probability simplex."""
    if abs(float(probs.sum()) - 1.0) > 1e-6:
        raise ValueError("probabilities must sum to 1")
    p = probs[label].clamp(min=PROB_EPS)
    return -alpha * (1.0 - p) ** gamma * torch.log(p)


def video_text_loss(
    video_features: torch.Tensor,
    text_features: torch.Tensor,
    labels: torch.Tensor,
    tau: float = 0.01,
    alpha: float = 0.25,
    gamma: float = 2.0,
) -> torch.Tensor:
    """Batch-mean focal loss over the shared cosine-softmax probabilities."""
    if video_features.shape[0] == 0:
        raise ValueError("empty batch")
    probs = class_probabilities(video_features, text_features, tau)
    p_true = probs[torch.arange(probs.shape[0]), labels].clamp(min=PROB_EPS)
    return (-alpha * (1.0 - p_true) ** gamma * torch.log(p_true)).mean()


class ProjectionHeads(nn.Module):
    """Shared text projection and per-class numeric projections (512->256->128)."""

    def __init__(
        self,
        n_classes: int,
        in_dim: int = 512,
        hidden_dim: int = 256,
        out_dim: int = 128,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.n_classes = n_classes
        gen = torch.Generator().manual_seed(seed)

        def mlp():
            first = nn.Linear(in_dim, hidden_dim)
            second = nn.Linear(hidden_dim, out_dim)
            for layer in (first, second):
                layer.weight.data.normal_(0.0, layer.in_features**-0.5, generator=gen)
                layer.bias.data.zero_()
            return nn.Sequential(first, nn.GELU(), second)

        self.text_head = mlp()
        self.numeric_heads = nn.ModuleList(mlp() for _ in range(n_classes))
        self.to(dtype)

    def project_text(self, text_features: torch.Tensor) -> torch.Tensor:
        return self.text_head(text_features)

    def project_numeric(self, numeric_features: torch.Tensor) -> torch.Tensor:
        """(B, 512) -> (B, N_cls, out_dim), one slice per class head."""
        return torch.stack(
            [head(numeric_features) for head in self.numeric_heads], dim=1
        )

    def project_numeric_single(
        self, numeric_features: torch.Tensor, class_index: int
    ) -> torch.Tensor:
        return self.numeric_heads[class_index](numeric_features)


def gp_contrastive_loss(
    numeric_features: torch.Tensor,
    text_features: torch.Tensor,
    labels: torch.Tensor,
    heads: ProjectionHeads,
    tau: float = 0.01,
) -> torch.Tensor:
    """Cross-entropy over per-class cosine logits between projected features."""
    p_text = heads.project_text(text_features)  # (N, out)
    p_num = heads.project_numeric(numeric_features)  # (B, N, out)
    p_text = p_text / p_text.norm(dim=-1, keepdim=True)
    p_num = p_num / p_num.norm(dim=-1, keepdim=True)
    logits = (p_num * p_text.unsqueeze(0)).sum(dim=-1) / tau  # (B, N)
    return F.cross_entropy(logits, labels)


def total_loss(
    video_loss: torch.Tensor, numeric_loss: torch.Tensor | float, weight: float = 0.05
) -> torch.Tensor:
    """Global objective: video-text loss plus weighted numeric-text loss."""
    if not bool(torch.isfinite(torch.as_tensor(video_loss).detach()).all()):
        raise ValueError("video loss is not finite")
    return video_loss + weight * numeric_loss


def ordinal_weight(
    predicted: torch.Tensor, target: torch.Tensor, eos: int = EOS_ID, n_num: int = 200
) -> torch.Tensor:
    """|predicted - target| / (eos + n_num - 1), the Eq-style distance weight."""
    return (predicted - target).abs().to(torch.float64) / float(eos + n_num - 1)


def ordinal_ce(
    logits: torch.Tensor, target_tok: int, eos: int = EOS_ID, n_num: int = 200
) -> torch.Tensor:
    """Distance-weighted cross-entropy for one number-token position.

    The argmax distance acts as a constant scale on the cross-entropy; no
    gradient flows through the weight.
    """
    if not eos + 1 <= target_tok <= eos + n_num:
        raise ValueError(
            f"target {target_tok} outside number-token range [{eos + 1}, {eos + n_num}]"
        )
    predicted = int(logits.detach().argmax())
    weight = float(abs(predicted - target_tok)) / float(eos + n_num - 1)
    ce = F.cross_entropy(logits.unsqueeze(0), torch.tensor([target_tok]))
    return weight * ce


def prefix_lm_loss(
    logits: torch.Tensor,
    targets: torch.Tensor,
    number_mask: torch.Tensor,
    ignore_index: int = -1,
    eos: int = EOS_ID,
    n_num: int = 200,
) -> torch.Tensor:
    """Mean per-position CE plus ordinal CE at number-token positions.

    Positions whose target equals ``ignore_index`` (padding) are dropped from
    the mean.
    """
    if logits.shape[:2] != targets.shape or targets.shape != number_mask.shape:
        raise ValueError("logits/targets/mask shapes are misaligned")
    flat_logits = logits.reshape(-1, logits.shape[-1])
    flat_targets = targets.reshape(-1)
    flat_mask = number_mask.reshape(-1)
    valid = flat_targets != ignore_index
    n_valid = int(valid.sum())
    if n_valid == 0:
        raise ValueError("no valid target positions")
    # ignore_index keeps padded positions at zero loss without gathering a copy
    # of the (positions x vocab) logits
    ce = F.cross_entropy(
        flat_logits, flat_targets, reduction="none", ignore_index=ignore_index
    )
    predicted = flat_logits.detach().argmax(dim=-1)
    weights = ordinal_weight(
        predicted, flat_targets.clamp(min=0), eos, n_num
    ).to(ce.dtype)
    ordinal = torch.where(flat_mask & valid, weights * ce, torch.zeros_like(ce))
    return (ce + ordinal).sum() / n_valid
