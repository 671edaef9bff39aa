"""Caption decoder: numeric features back into gait-parameter sentences.

Numbers live in an extended vocabulary: 200 graduated ids directly after the
base vocabulary's end token, covering the normalized value range [-2.5, 2.5].
A 4-layer causal transformer is trained with prefix language modeling: the
numeric feature occupies input position 0 through a learned adapter and the
decoder reconstructs the token ids of the sentence, with an ordinal penalty on
number positions. Class descriptions are decoded from a cosine-weighted linear
combination of banked numeric features.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, asdict, field
from pathlib import Path

import numpy as np
import torch
from torch import nn

from gaitvlm import blobio
from gaitvlm.encoders import Block
from gaitvlm.losses import ProjectionHeads, prefix_lm_loss
from gaitvlm.params import VALUE_RANGE, NumericSentence, Schema
from gaitvlm.tokenizer import SimpleTokenizer

logger = logging.getLogger(__name__)

BASE_VOCAB = 49408
EOS_ID = 49407
N_NUM = 200
EXTENDED_VOCAB = BASE_VOCAB + N_NUM  # 49608
NUM_FIRST = EOS_ID + 1  # 49408
NUM_LAST = EOS_ID + N_NUM  # 49607

DECODER_CONFIG_NAME = "decoder.json"


def value_to_token(v_norm: float, n_num: int = N_NUM) -> int:
    """Normalized value in [-2.5, 2.5] -> graduated number id in [49408, 49607]."""
    if not math.isfinite(v_norm):
        raise ValueError(f"non-finite value {v_norm}")
    scale = math.floor((v_norm + VALUE_RANGE) / (2 * VALUE_RANGE) * (n_num - 1) + 0.5) + 1
    scale = min(max(scale, 1), n_num)
    return EOS_ID + scale


def token_to_value(tok: int, n_num: int = N_NUM) -> float:
    """Inverse of :func:`value_to_token` up to quantization."""
    if not NUM_FIRST <= tok <= EOS_ID + n_num:
        raise ValueError(f"token {tok} is not a number token")
    scale = tok - EOS_ID
    return (scale - 1) / (n_num - 1) * (2 * VALUE_RANGE) - VALUE_RANGE


def is_number_token(tok: int) -> bool:
    return NUM_FIRST <= tok <= NUM_LAST


def encode_target(
    sentence: NumericSentence,
    tokenizer: SimpleTokenizer,
    max_length: int = 64,
) -> list[int]:
    """Token ids of a numeric sentence: phrases, "is", number ids, "and" joins."""
    spec = tokenizer.spec
    and_id = tokenizer.word_id("and")
    is_id = tokenizer.word_id("is")
    ids = [spec.start_token]
    for i, (phrase, value) in enumerate(sentence.items):
        if i:
            ids.append(and_id)
        ids.extend(tokenizer.encode_interior(phrase))
        ids.append(is_id)
        ids.append(value_to_token(value))
    ids.append(spec.end_token)
    if len(ids) > max_length:
        raise ValueError(f"target length {len(ids)} exceeds max {max_length}")
    return ids


@dataclass(frozen=True)
class DecoderConfig:
    layers: int = 4
    width: int = 512
    heads: int = 8
    mlp_ratio: int = 4
    max_length: int = 64
    vocab_size: int = EXTENDED_VOCAB
    prefix_dim: int = 512
    embed_rank: int = 128


class CaptionDecoder(nn.Module):
    """Causal transformer over the extended vocabulary, prefix at position 0.

    Input embedding and output projection share one factorized matrix
    (vocab x rank times rank x width), so the output distribution covers
    exactly ``vocab_size`` ids while the per-step vocabulary matmul stays
    CPU-friendly. Number-token rows are initialized along a line in rank
    space ordered by their value, which speeds up ordinal learning; all rows
    remain trainable.
    """

    def __init__(
        self,
        config: DecoderConfig | None = None,
        seed: int = 0,
        dtype: torch.dtype = torch.float32,
    ):
        super().__init__()
        self.config = config or DecoderConfig()
        cfg = self.config
        gen = torch.Generator().manual_seed(seed)
        rank = cfg.embed_rank
        vocab_factor = torch.empty(cfg.vocab_size, rank).normal_(0.0, 0.02, generator=gen)
        direction = torch.empty(rank).normal_(0.0, 1.0, generator=gen)
        direction = direction / direction.norm() * 0.02 * math.sqrt(rank)
        for tok in range(NUM_FIRST, NUM_LAST + 1):
            line = direction * (token_to_value(tok) / VALUE_RANGE)
            vocab_factor[tok] = line + vocab_factor[tok] * 0.25
        self.vocab_factor = nn.Parameter(vocab_factor)
        self.width_factor = nn.Parameter(
            torch.empty(rank, cfg.width).normal_(0.0, rank**-0.5, generator=gen)
        )
        self.positional = nn.Parameter(
            torch.empty(cfg.max_length + 1, cfg.width).normal_(0.0, 0.01, generator=gen)
        )
        self.prefix_adapter = nn.Linear(cfg.prefix_dim, cfg.width)
        self.prefix_adapter.weight.data.normal_(0.0, cfg.prefix_dim**-0.5, generator=gen)
        self.prefix_adapter.bias.data.zero_()
        self.blocks = nn.ModuleList(
            Block(cfg.width, cfg.heads, cfg.mlp_ratio) for _ in range(cfg.layers)
        )
        for block in self.blocks:
            for m in block.modules():
                if isinstance(m, nn.Linear):
                    m.weight.data.normal_(0.0, 0.02, generator=gen)
                    if m.bias is not None:
                        m.bias.data.zero_()
        self.ln_final = nn.LayerNorm(cfg.width)
        self.to(dtype)

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        return nn.functional.embedding(ids, self.vocab_factor) @ self.width_factor

    def _hidden(self, prefix: torch.Tensor, input_ids: torch.Tensor) -> torch.Tensor:
        # prefix (B, prefix_dim), input_ids (B, L); returns hidden (B, L+1, width)
        if prefix.dim() == 1:
            prefix = prefix.unsqueeze(0)
        b, length = input_ids.shape
        if length + 1 > self.config.max_length + 1:
            raise ValueError(f"sequence length {length} exceeds max {self.config.max_length}")
        head = self.prefix_adapter(prefix).unsqueeze(1)
        x = torch.cat([head, self.embed_ids(input_ids)], dim=1)
        x = x + self.positional[: length + 1]
        mask = torch.full((length + 1, length + 1), float("-inf"), dtype=x.dtype).triu(1)
        for block in self.blocks:
            x = block(x, mask)
        return self.ln_final(x)

    def _logits(self, hidden: torch.Tensor) -> torch.Tensor:
        return (hidden @ self.width_factor.T) @ self.vocab_factor.T

    def forward(self, prefix: torch.Tensor, input_ids: torch.Tensor) -> torch.Tensor:
        """Logits (B, L+1, vocab): position j predicts target id j."""
        return self._logits(self._hidden(prefix, input_ids))

    def next_logits(self, prefix: torch.Tensor, generated: torch.Tensor) -> torch.Tensor:
        """Logits for the next id only; avoids the full-vocab matmul per position."""
        return self._logits(self._hidden(prefix, generated)[:, -1])


def pad_targets(
    targets: list[list[int]], pad_to: int | None = None, ignore_index: int = -1
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """(input_ids, target_ids, number_mask) batch tensors from id lists."""
    max_len = pad_to or max(len(t) for t in targets)
    b = len(targets)
    input_ids = torch.full((b, max_len - 1), EOS_ID, dtype=torch.long)
    target_ids = torch.full((b, max_len), ignore_index, dtype=torch.long)
    number_mask = torch.zeros(b, max_len, dtype=torch.bool)
    for i, ids in enumerate(targets):
        input_ids[i, : len(ids) - 1] = torch.tensor(ids[:-1])
        target_ids[i, : len(ids)] = torch.tensor(ids)
        number_mask[i, : len(ids)] = torch.tensor([is_number_token(t) for t in ids])
    return input_ids, target_ids, number_mask


@dataclass
class DecoderTrainState:
    step: int = 0
    history: list[dict] = field(default_factory=list)


def train_decoder(
    features: torch.Tensor,
    targets: list[list[int]],
    config: DecoderConfig | None = None,
    steps: int = 2500,
    batch_size: int = 24,
    lr: float = 1e-3,
    weight_decay: float = 0.01,
    seed: int = 0,
    val_features: torch.Tensor | None = None,
    val_targets: list[list[int]] | None = None,
    eval_every: int = 200,
    target_exact_match: float | None = None,
    out_dir: str | Path | None = None,
    log_every: int = 25,
) -> tuple[CaptionDecoder, DecoderTrainState]:
    """Prefix-LM training with teacher forcing; optional early stop on held-out match."""
    if features.shape[0] == 0:
        raise ValueError("empty decoder training corpus")
    if features.shape[0] != len(targets):
        raise ValueError("feature/target count mismatch")
    decoder = CaptionDecoder(config, seed=seed)
    optimizer = torch.optim.AdamW(decoder.parameters(), lr=lr, weight_decay=weight_decay)
    warmup = max(1, min(100, steps // 10))
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer,
        lambda s: (s + 1) / warmup
        if s < warmup
        else 0.5 * (1.0 + math.cos(math.pi * (s - warmup) / max(steps - warmup, 1))),
    )
    rng = np.random.default_rng(seed)
    state = DecoderTrainState()
    n = features.shape[0]
    for step in range(1, steps + 1):
        idx = rng.choice(n, size=min(batch_size, n), replace=False)
        input_ids, target_ids, number_mask = pad_targets([targets[i] for i in idx])
        logits = decoder(features[idx], input_ids)
        loss = prefix_lm_loss(logits, target_ids, number_mask)
        if not torch.isfinite(loss.detach()):
            raise RuntimeError(f"decoder loss diverged at step {step}")
        optimizer.zero_grad(set_to_none=True)
        loss.backward()
        optimizer.step()
        scheduler.step()
        state.step = step
        if step % log_every == 0 or step == 1:
            state.history.append({"step": step, "loss": loss.item()})
        if (
            val_features is not None
            and target_exact_match is not None
            and (step % eval_every == 0 or step == steps)
        ):
            metrics = decoder_round_trip_metrics(decoder, val_features, val_targets)
            state.history.append({"step": step, **metrics})
            logger.info(
                "decoder step %d: loss %.4f, val word match %.3f, val value err %.4f",
                step, loss.item(), metrics["word_exact_match"], metrics["mean_value_error"],
            )
            if metrics["word_exact_match"] >= target_exact_match:
                break
    if out_dir is not None:
        save_decoder(out_dir, decoder)
    return decoder, state


def decode_greedy(
    decoder: CaptionDecoder, prefix: torch.Tensor, max_length: int | None = None
) -> list[list[int]]:
    """Greedy id sequences (start..end inclusive) for one or a batch of prefixes."""
    if prefix.dim() == 1:
        prefix = prefix.unsqueeze(0)
    max_length = max_length or decoder.config.max_length
    spec_start, spec_end = BASE_VOCAB - 2, EOS_ID
    b = prefix.shape[0]
    generated = torch.full((b, 1), spec_start, dtype=torch.long)
    finished = torch.zeros(b, dtype=torch.bool)
    with torch.no_grad():
        while generated.shape[1] < max_length and not bool(finished.all()):
            logits = decoder.next_logits(prefix, generated)
            nxt = logits.argmax(dim=-1)
            nxt[finished] = spec_end
            generated = torch.cat([generated, nxt.unsqueeze(1)], dim=1)
            finished |= nxt == spec_end
    out = []
    for row in generated.tolist():
        if spec_end in row:
            row = row[: row.index(spec_end) + 1]
        out.append(row)
    return out


@dataclass
class DecodedSentence:
    ids: list[int]
    items: list[tuple[str, float]]
    text: str
    warnings: list[str] = field(default_factory=list)


def parse_decoded(ids: list[int], schema: Schema, tokenizer: SimpleTokenizer) -> DecodedSentence:
    """Recover (phrase, normalized value) pairs by matching schema phrase ids.

    Unparseable stretches produce a warning and a raw token dump in the text.
    """
    phrase_by_ids = {
        tuple(tokenizer.encode_interior(p.name)): p.name for p in schema.parameters
    }
    is_id, and_id = tokenizer.word_id("is"), tokenizer.word_id("and")
    start, end = tokenizer.spec.start_token, tokenizer.spec.end_token
    body = [t for t in ids if t not in (start, end)]
    items: list[tuple[str, float]] = []
    warnings: list[str] = []
    clauses: list[str] = []
    cursor = 0
    while cursor < len(body):
        try:
            is_pos = body.index(is_id, cursor)
        except ValueError:
            warnings.append(f"no 'is' separator after position {cursor}: {body[cursor:]}")
            clauses.append("<unparsed " + " ".join(map(str, body[cursor:])) + ">")
            break
        phrase_ids = tuple(body[cursor:is_pos])
        phrase = phrase_by_ids.get(phrase_ids)
        if phrase is None:
            warnings.append(f"unknown phrase ids {list(phrase_ids)}")
            phrase = "<unknown " + " ".join(map(str, phrase_ids)) + ">"
        if is_pos + 1 >= len(body) or not is_number_token(body[is_pos + 1]):
            warnings.append(f"missing number token after {phrase!r}")
            clauses.append(f"{phrase} is <missing>")
            cursor = is_pos + 1
            continue
        value = token_to_value(body[is_pos + 1])
        items.append((phrase, value))
        clauses.append(f"{phrase} is {value:.2f}")
        cursor = is_pos + 2
        if cursor < len(body) and body[cursor] == and_id:
            cursor += 1
    if warnings:
        for msg in warnings:
            logger.warning("decode parse: %s", msg)
    return DecodedSentence(
        ids=ids, items=items, text=" and ".join(clauses), warnings=warnings
    )


def decoder_round_trip_metrics(
    decoder: CaptionDecoder,
    features: torch.Tensor,
    targets: list[list[int]],
) -> dict[str, float]:
    """Held-out word-token exact match rate and mean |decoded - true| value error."""
    decoded = decode_greedy(decoder, features)
    word_hits = 0
    value_errors: list[float] = []
    for got, want in zip(decoded, targets):
        got_words = [t for t in got if not is_number_token(t)]
        want_words = [t for t in want if not is_number_token(t)]
        word_hits += int(got_words == want_words)
        got_nums = [t for t in got if is_number_token(t)]
        want_nums = [t for t in want if is_number_token(t)]
        for g, w in zip(got_nums, want_nums):
            value_errors.append(abs(token_to_value(g) - token_to_value(w)))
        # unmatched number slots count as the worst-case error
        value_errors.extend([2 * VALUE_RANGE] * abs(len(got_nums) - len(want_nums)))
    return {
        "word_exact_match": word_hits / len(targets),
        "mean_value_error": float(np.mean(value_errors)) if value_errors else float("nan"),
    }


@dataclass
class NumericBank:
    """Numeric features with labels, capped by uniform reservoir subsampling."""

    features: torch.Tensor
    labels: np.ndarray

    @classmethod
    def build(
        cls, features: torch.Tensor, labels: np.ndarray, cap: int = 4096, seed: int = 0
    ) -> "NumericBank":
        if features.shape[0] == 0:
            raise ValueError("numeric bank must be non-empty")
        labels = np.asarray(labels)
        if features.shape[0] > cap:
            keep = np.sort(np.random.default_rng(seed).choice(
                features.shape[0], size=cap, replace=False
            ))
            features, labels = features[keep], labels[keep]
        return cls(features=features, labels=labels)


def class_description(
    class_index: int,
    text_features: torch.Tensor,
    heads: ProjectionHeads,
    bank: NumericBank,
    decoder: CaptionDecoder,
    schema: Schema,
    tokenizer: SimpleTokenizer,
    tau_d: float = 0.01,
) -> DecodedSentence:
    """Decode one class's learned text feature via a weighted numeric mixture."""
    if bank.features.shape[0] == 0:
        raise ValueError("numeric bank is empty")
    with torch.no_grad():
        p_text = heads.project_text(text_features[class_index : class_index + 1])[0]
        p_bank = heads.project_numeric_single(bank.features, class_index)
        p_text = p_text / p_text.norm()
        p_bank = p_bank / p_bank.norm(dim=-1, keepdim=True)
        weights = torch.softmax((p_bank @ p_text) / tau_d, dim=0)
        mixed = weights @ bank.features
    ids = decode_greedy(decoder, mixed)[0]
    return parse_decoded(ids, schema, tokenizer)


def save_decoder(directory: str | Path, decoder: CaptionDecoder) -> None:
    directory = Path(directory)
    tensors = {
        name: p.detach().cpu().numpy().astype(np.float32)
        for name, p in decoder.state_dict().items()
    }
    blobio.save_tensors(directory, tensors)
    (directory / DECODER_CONFIG_NAME).write_text(json.dumps(asdict(decoder.config)))


def load_decoder(directory: str | Path) -> CaptionDecoder:
    directory = Path(directory)
    config_path = directory / DECODER_CONFIG_NAME
    if not config_path.exists():
        raise blobio.BlobFormatError(f"missing decoder config: {config_path}")
    config = DecoderConfig(**json.loads(config_path.read_text()))
    decoder = CaptionDecoder(config)
    tensors = blobio.load_tensors(directory)
    state = {name: torch.from_numpy(arr) for name, arr in tensors.items()}
    decoder.load_state_dict(state)
    return decoder
