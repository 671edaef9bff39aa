"""Experiment harness: folds, the training loop, metrics, and checkpoints.

Training optimizes only the prompt state, the visual prompt learner, and the
projection heads under the global objective (video-text focal loss plus the
weighted numeric-text contrastive loss); both backbones stay frozen and their
checksum is verified at the end of every run. Ablation flags: knowledge
prompts off zeroes the knowledge pathway and drops keyword prompts, numeric
text off skips the contrastive term entirely.
"""

from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, asdict, field, replace
from pathlib import Path

import numpy as np
import torch

from gaitvlm import blobio
from gaitvlm.decoder import NumericBank
from gaitvlm.encoders import (
    FrozenTextEncoder,
    FrozenVisionEncoder,
    TextEncoderConfig,
    VisionEncoderConfig,
    backbone_checksum,
    make_encoder_pair,
)
from gaitvlm.losses import LossWeights, ProjectionHeads, gp_contrastive_loss, total_loss, video_text_loss
from gaitvlm.numeric import NumericEmbedder
from gaitvlm.params import (
    Combination,
    NormalizationStats,
    NumericSentence,
    Schema,
    enumerate_combinations,
    fit_normalization,
    render_sentence,
)
from gaitvlm.prompts import (
    ClassSpec,
    EncoderKnowledgeProvider,
    PromptState,
    VectorFileKnowledgeProvider,
    assemble_class_features,
    build_automatic_prompt,
    class_probabilities,
    knowledge_matrix,
    load_class_specs,
    save_class_specs,
    validate_context_budget,
)
from gaitvlm.synth import SyntheticDataset
from gaitvlm.tokenizer import SimpleTokenizer
from gaitvlm.video import (
    VisualPromptLearner,
    WindowSpec,
    encode_video_batch,
    extract_window,
    sample_frame_indices,
    sliding_windows,
)

logger = logging.getLogger(__name__)

TASKS = {"dementia-group": 3, "gait-scoring": 4}


@dataclass
class ExperimentConfig:
    task: str = "dementia-group"
    use_kapt: bool = True
    use_nte: bool = True
    seed: int = 0
    encoder_seed: int = 100
    epochs: int = 20
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 8
    numeric_batch_size: int = 32
    fold_count: int = 10
    frames_per_window: int = 12
    pooling: str = "summary"
    aggregation: str = "mean-prob"
    global_prompt_tokens: int = 4
    sentences_per_record: int = 6
    combo_threshold: float = 0.4
    require_param: str | None = None
    knowledge_dim: int = 768
    knowledge_vectors: str | None = None
    keyword_budget: int = 32
    bank_cap: int = 4096
    window: WindowSpec = field(default_factory=WindowSpec)
    loss: LossWeights = field(default_factory=LossWeights)
    text_encoder: TextEncoderConfig = field(default_factory=TextEncoderConfig)
    vision_encoder: VisionEncoderConfig = field(default_factory=VisionEncoderConfig)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}, expected one of {sorted(TASKS)}")

    @property
    def ablation_name(self) -> str:
        return {
            (False, False): "baseline",
            (True, False): "baseline+KAPT",
            (False, True): "baseline+NTE",
            (True, True): "full",
        }[(self.use_kapt, self.use_nte)]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, payload: dict) -> "ExperimentConfig":
        payload = dict(payload)
        for key, sub in (
            ("window", WindowSpec),
            ("loss", LossWeights),
            ("text_encoder", TextEncoderConfig),
            ("vision_encoder", VisionEncoderConfig),
        ):
            if key in payload and isinstance(payload[key], dict):
                payload[key] = sub(**payload[key])
        return cls(**payload)

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


@dataclass(frozen=True)
class FoldPlan:
    """Subject-disjoint (train, validation) partitions."""

    folds: tuple[tuple[tuple[str, ...], tuple[str, ...]], ...]

    def __len__(self) -> int:
        return len(self.folds)

    def __getitem__(self, i: int) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return self.folds[i]


def make_folds(subject_ids: list[str], k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle subjects by seed and deal them round-robin into k validation groups."""
    subjects = sorted(set(subject_ids))
    if len(subjects) < k:
        raise ValueError(f"need at least {k} subjects for {k}-fold CV, got {len(subjects)}")
    order = list(np.array(subjects)[np.random.default_rng(seed).permutation(len(subjects))])
    folds = []
    for i in range(k):
        val = tuple(order[i::k])
        train = tuple(s for s in order if s not in set(val))
        folds.append((train, val))
    return FoldPlan(folds=tuple(folds))


class MetricsLogger:
    """Line-oriented JSON metrics log, kept in memory and optionally on disk."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[dict] = []
        self._fh = None
        if path is not None:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            self._fh = Path(path).open("w")

    def log(self, **record) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(json.dumps(record, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


@dataclass
class WindowSample:
    clip_id: str
    subject_id: str
    label: int
    start: int


def build_window_index(
    dataset: SyntheticDataset, subjects, spec: WindowSpec, mode: str
) -> list[WindowSample]:
    """One WindowSample per sliding window of every clip of the given subjects."""
    samples = []
    for cid in dataset.clips_for_subjects(subjects):
        length = dataset.videos[cid].shape[0]
        for start, _stop in sliding_windows(length, spec, mode):
            samples.append(
                WindowSample(
                    clip_id=cid,
                    subject_id=dataset.clip_subjects[cid],
                    label=dataset.clip_labels[cid],
                    start=start,
                )
            )
    return samples


def fetch_window_frames(
    dataset: SyntheticDataset, sample: WindowSample, spec: WindowSpec, frames_per_window: int
) -> np.ndarray:
    window = extract_window(dataset.videos[sample.clip_id], sample.start, spec.window)
    return window[sample_frame_indices(spec.window, frames_per_window)]


def build_sentence_corpus(
    records,
    stats: NormalizationStats,
    schema: Schema,
    combos: list[Combination],
    per_record: int,
    seed: int,
    require_param_index: int | None = None,
) -> list[NumericSentence]:
    """Sample combinations per record and render their numeric sentences."""
    pool = combos
    if require_param_index is not None:
        pool = [c for c in combos if require_param_index in c.indices]
    if not pool:
        raise ValueError("no combinations available for the sentence corpus")
    rng = np.random.default_rng(seed)
    sentences = []
    for rec in records:
        chosen = rng.choice(len(pool), size=min(per_record, len(pool)), replace=False)
        for ci in np.sort(chosen):
            sentences.append(render_sentence(pool[int(ci)], rec, stats, schema))
    return sentences


def encode_corpus(
    embedder: NumericEmbedder, sentences: list[NumericSentence], chunk: int = 512
) -> torch.Tensor:
    feats = []
    for lo in range(0, len(sentences), chunk):
        feats.append(embedder.encode_sentences(sentences[lo : lo + chunk]))
    return torch.cat(feats) if feats else torch.empty(0, 512)


@dataclass
class GaitModel:
    """Everything needed to score videos and decode class features."""

    config: ExperimentConfig
    schema: Schema
    class_specs: list[ClassSpec]
    tokenizer: SimpleTokenizer
    text_encoder: FrozenTextEncoder
    vision_encoder: FrozenVisionEncoder
    prompt_state: PromptState
    visual_prompts: VisualPromptLearner
    heads: ProjectionHeads
    stats: NormalizationStats
    embedder: NumericEmbedder
    knowledge: torch.Tensor | None = None
    auto_prompts: list[torch.Tensor] | None = None
    bank: NumericBank | None = None

    @property
    def n_classes(self) -> int:
        return len(self.class_specs)

    def text_features(self) -> torch.Tensor:
        prompts = self.prompt_state.build_prompts(
            self.knowledge, use_knowledge=self.config.use_kapt and self.knowledge is not None
        )
        return assemble_class_features(
            prompts,
            self.class_specs,
            self.tokenizer,
            self.text_encoder,
            self.auto_prompts if self.config.use_kapt else None,
        )

    def encode_windows(self, frames: np.ndarray | torch.Tensor) -> torch.Tensor:
        return encode_video_batch(
            frames, self.vision_encoder, self.visual_prompts, self.config.pooling
        )

    def trainable_parameters(self):
        for module in (self.prompt_state, self.visual_prompts, self.heads):
            yield from module.parameters()


def build_model(
    config: ExperimentConfig,
    schema: Schema,
    class_specs: list[ClassSpec],
    stats: NormalizationStats,
) -> GaitModel:
    if config.vision_encoder.output_dim != config.text_encoder.width:
        raise ValueError("vision output dim must match the text feature width")
    text_enc, vision_enc = make_encoder_pair(
        config.encoder_seed, config.text_encoder, config.vision_encoder
    )
    tokenizer = SimpleTokenizer(text_enc.tokenizer_spec)
    validate_context_budget(
        class_specs, tokenizer, text_enc,
        keyword_budget=config.keyword_budget, use_auto_prompts=config.use_kapt,
    )
    n_classes = len(class_specs)
    feature_dim = config.text_encoder.width
    prompt_state = PromptState(
        n_classes, knowledge_dim=config.knowledge_dim, width=feature_dim,
        seed=config.seed + 3,
    )
    vpl = VisualPromptLearner(
        depth=config.vision_encoder.depth,
        width=config.vision_encoder.width,
        global_tokens=config.global_prompt_tokens,
        seed=config.seed + 4,
    )
    heads = ProjectionHeads(n_classes, in_dim=feature_dim, seed=config.seed + 5)
    embedder = NumericEmbedder(text_enc, tokenizer, seed=config.seed)

    knowledge = None
    auto_prompts = None
    if config.use_kapt:
        if config.knowledge_vectors:
            provider = VectorFileKnowledgeProvider(config.knowledge_vectors, config.knowledge_dim)
        else:
            provider = EncoderKnowledgeProvider(text_enc, tokenizer, config.knowledge_dim)
        knowledge = torch.from_numpy(knowledge_matrix(provider, class_specs)).to(
            text_enc.positional.dtype
        )
        auto_prompts = [
            build_automatic_prompt(s.keywords, tokenizer, text_enc, config.keyword_budget)
            for s in class_specs
        ]
    return GaitModel(
        config=config,
        schema=schema,
        class_specs=class_specs,
        tokenizer=tokenizer,
        text_encoder=text_enc,
        vision_encoder=vision_enc,
        prompt_state=prompt_state,
        visual_prompts=vpl,
        heads=heads,
        stats=stats,
        embedder=embedder,
        knowledge=knowledge,
        auto_prompts=auto_prompts,
    )


@dataclass
class EvalResult:
    accuracy: float
    macro_f1: float
    confusion: np.ndarray
    clip_predictions: dict[str, int]


def macro_f1_from_confusion(confusion: np.ndarray) -> float:
    scores = []
    for c in range(confusion.shape[0]):
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def evaluate(
    model: GaitModel,
    dataset: SyntheticDataset,
    subjects,
    text_features: torch.Tensor | None = None,
    chunk: int = 16,
) -> EvalResult:
    """Per-video accuracy, macro-F1, and confusion over the subjects' clips."""
    config = model.config
    samples = build_window_index(dataset, subjects, config.window, "eval")
    if not samples:
        raise ValueError("no evaluation windows for the given subjects")
    with torch.no_grad():
        if text_features is None:
            text_features = model.text_features()
        probs = []
        for lo in range(0, len(samples), chunk):
            part = samples[lo : lo + chunk]
            frames = np.stack(
                [fetch_window_frames(dataset, s, config.window, config.frames_per_window)
                 for s in part]
            )
            feats = model.encode_windows(frames)
            probs.append(
                class_probabilities(feats, text_features, config.loss.temperature)
            )
        probs = torch.cat(probs).to(torch.float64).numpy()

    by_clip: dict[str, list[int]] = {}
    for i, s in enumerate(samples):
        by_clip.setdefault(s.clip_id, []).append(i)
    n = model.n_classes
    confusion = np.zeros((n, n), dtype=np.int64)
    predictions: dict[str, int] = {}
    for cid, rows in by_clip.items():
        clip_probs = probs[rows]
        if config.aggregation == "majority":
            votes = np.bincount(clip_probs.argmax(axis=1), minlength=n)
            pred = int(np.argmax(votes))
        else:
            pred = int(np.argmax(clip_probs.mean(axis=0)))
        predictions[cid] = pred
        confusion[dataset.clip_labels[cid], pred] += 1
    accuracy = float(np.trace(confusion) / confusion.sum())
    return EvalResult(
        accuracy=accuracy,
        macro_f1=macro_f1_from_confusion(confusion),
        confusion=confusion,
        clip_predictions=predictions,
    )


@dataclass
class TrainResult:
    model: GaitModel
    history: list[dict]
    best_epoch: int
    best_accuracy: float
    best_macro_f1: float
    fold: tuple[tuple[str, ...], tuple[str, ...]]


def train(
    config: ExperimentConfig,
    dataset: SyntheticDataset,
    fold: tuple[tuple[str, ...], tuple[str, ...]],
    log_path: str | Path | None = None,
) -> TrainResult:
    """Optimize prompts and heads on one fold; returns the best-epoch model."""
    train_subjects, val_subjects = fold
    torch.manual_seed(config.seed)
    train_records = dataset.records_for_subjects(train_subjects)
    stats = fit_normalization(train_records, dataset.schema.healthy_label)
    model = build_model(config, dataset.schema, dataset.class_specs, stats)
    metrics = MetricsLogger(log_path)

    checksum_before = backbone_checksum(model.text_encoder, model.vision_encoder)

    numeric_feats = None
    numeric_labels = None
    combos = enumerate_combinations(train_records, config.combo_threshold)
    require_idx = None
    if config.require_param is not None:
        require_idx = dataset.schema.names().index(config.require_param)
    sentences = build_sentence_corpus(
        train_records, stats, dataset.schema, combos,
        config.sentences_per_record, config.seed, require_idx,
    )
    numeric_feats = encode_corpus(model.embedder, sentences)
    numeric_labels = torch.tensor([s.label for s in sentences], dtype=torch.long)

    windows = build_window_index(dataset, train_subjects, config.window, "train")
    if not windows:
        raise ValueError("no training windows")
    frame_cache = [
        fetch_window_frames(dataset, s, config.window, config.frames_per_window)
        for s in windows
    ]
    labels_all = torch.tensor([s.label for s in windows], dtype=torch.long)

    params = list(model.trainable_parameters())
    optimizer = torch.optim.AdamW(params, lr=config.lr, weight_decay=config.weight_decay)
    steps_per_epoch = (len(windows) + config.batch_size - 1) // config.batch_size
    scheduler = torch.optim.lr_scheduler.CosineAnnealingLR(
        optimizer, T_max=max(config.epochs * steps_per_epoch, 1)
    )
    rng = np.random.default_rng([config.seed, 1])

    best = {"epoch": -1, "accuracy": -1.0, "macro_f1": -1.0, "state": None}
    step = 0
    for epoch in range(config.epochs):
        order = rng.permutation(len(windows))
        epoch_lk, epoch_lgp = [], []
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            frames = np.stack([frame_cache[i] for i in idx])
            video_feats = model.encode_windows(frames)
            text_feats = model.text_features()
            l_k = video_text_loss(
                video_feats, text_feats, labels_all[idx],
                config.loss.temperature, config.loss.focal_alpha, config.loss.focal_gamma,
            )
            if config.use_nte:
                pick = rng.choice(
                    numeric_feats.shape[0],
                    size=min(config.numeric_batch_size, numeric_feats.shape[0]),
                    replace=False,
                )
                l_gp = gp_contrastive_loss(
                    numeric_feats[pick], text_feats, numeric_labels[pick],
                    model.heads, config.loss.temperature,
                )
                loss = total_loss(l_k, l_gp, config.loss.gp_weight)
            else:
                l_gp = None
                loss = l_k
            if not torch.isfinite(loss.detach()):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch} step {step}: "
                    f"L_k={l_k.item()} L_gp={None if l_gp is None else l_gp.item()}"
                )
            optimizer.zero_grad(set_to_none=True)
            loss.backward()
            optimizer.step()
            scheduler.step()
            step += 1
            epoch_lk.append(l_k.item())
            epoch_lgp.append(l_gp.item() if l_gp is not None else 0.0)
            metrics.log(
                kind="step", step=step, epoch=epoch,
                L_k=l_k.item(), L_gp=l_gp.item() if l_gp is not None else None,
                L=loss.item(),
            )

        result = evaluate(model, dataset, val_subjects)
        metrics.log(
            kind="epoch", epoch=epoch,
            L_k=float(np.mean(epoch_lk)), L_gp=float(np.mean(epoch_lgp)),
            accuracy=result.accuracy, macro_f1=result.macro_f1,
        )
        logger.info(
            "epoch %d: L_k %.4f, val acc %.3f, val F1 %.3f",
            epoch, np.mean(epoch_lk), result.accuracy, result.macro_f1,
        )
        if result.accuracy > best["accuracy"]:
            best.update(
                epoch=epoch, accuracy=result.accuracy, macro_f1=result.macro_f1,
                state={
                    "prompt_state": copy.deepcopy(model.prompt_state.state_dict()),
                    "visual_prompts": copy.deepcopy(model.visual_prompts.state_dict()),
                    "heads": copy.deepcopy(model.heads.state_dict()),
                },
            )
    metrics.close()

    if backbone_checksum(model.text_encoder, model.vision_encoder) != checksum_before:
        raise RuntimeError("frozen backbone changed during training")
    if best["state"] is not None:
        model.prompt_state.load_state_dict(best["state"]["prompt_state"])
        model.visual_prompts.load_state_dict(best["state"]["visual_prompts"])
        model.heads.load_state_dict(best["state"]["heads"])
    if numeric_feats is not None and numeric_feats.shape[0]:
        model.bank = NumericBank.build(
            numeric_feats, numeric_labels.numpy(), config.bank_cap, config.seed
        )
    return TrainResult(
        model=model,
        history=metrics.records,
        best_epoch=int(best["epoch"]),
        best_accuracy=float(best["accuracy"]),
        best_macro_f1=float(best["macro_f1"]),
        fold=fold,
    )


def run_cv(
    config: ExperimentConfig,
    dataset: SyntheticDataset,
    out_dir: str | Path | None = None,
    fold_limit: int | None = None,
) -> dict:
    """Train and evaluate every fold; report per-fold and mean metrics."""
    plan = make_folds(dataset.subject_ids(), config.fold_count, config.seed)
    rows = []
    n_folds = len(plan) if fold_limit is None else min(fold_limit, len(plan))
    for i in range(n_folds):
        log_path = None
        if out_dir is not None:
            log_path = Path(out_dir) / f"fold{i}_metrics.jsonl"
        result = train(config, dataset, plan[i], log_path=log_path)
        rows.append(
            {"fold": i, "accuracy": result.best_accuracy, "macro_f1": result.best_macro_f1}
        )
        logger.info("fold %d: acc %.3f, F1 %.3f", i, result.best_accuracy, result.best_macro_f1)
    report = {
        "task": config.task,
        "configuration": config.ablation_name,
        "folds": rows,
        "mean": {
            "accuracy": float(np.mean([r["accuracy"] for r in rows])),
            "macro_f1": float(np.mean([r["macro_f1"] for r in rows])),
        },
    }
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        (Path(out_dir) / "report.json").write_text(json.dumps(report, indent=2))
    return report


def ablation_grid(
    config: ExperimentConfig,
    dataset: SyntheticDataset,
    out_dir: str | Path | None = None,
    fold_limit: int | None = None,
) -> list[dict]:
    """The four configuration rows: baseline, +KAPT, +NTE, full."""
    grid = []
    for kapt, nte in ((False, False), (True, False), (False, True), (True, True)):
        row_config = replace(config, use_kapt=kapt, use_nte=nte)
        sub_dir = None
        if out_dir is not None:
            sub_dir = Path(out_dir) / row_config.ablation_name.replace("+", "_")
        report = run_cv(row_config, dataset, sub_dir, fold_limit)
        grid.append(
            {
                "configuration": row_config.ablation_name,
                "accuracy": report["mean"]["accuracy"],
                "macro_f1": report["mean"]["macro_f1"],
            }
        )
    if out_dir is not None:
        (Path(out_dir) / "ablation_grid.json").write_text(json.dumps(grid, indent=2))
    return grid


def format_grid(rows: list[dict]) -> str:
    lines = [f"{'configuration':<18} {'Acc.':>8} {'Fscore':>8}"]
    for row in rows:
        lines.append(
            f"{row['configuration']:<18} {100 * row['accuracy']:>7.2f}% "
            f"{100 * row['macro_f1']:>7.2f}%"
        )
    return "\n".join(lines)


def export_embeddings(
    model: GaitModel,
    dataset: SyntheticDataset,
    out_path: str | Path,
    space: str = "projected",
    sentences: list[NumericSentence] | None = None,
) -> int:
    """CSV of numeric-sentence vectors plus flagged per-class feature rows."""
    if space not in ("original", "projected"):
        raise ValueError("space must be 'original' or 'projected'")
    if sentences is None:
        combos = enumerate_combinations(dataset.records, model.config.combo_threshold)
        sentences = build_sentence_corpus(
            dataset.records, model.stats, dataset.schema, combos,
            model.config.sentences_per_record, model.config.seed,
        )
    with torch.no_grad():
        feats = encode_corpus(model.embedder, sentences)
        text_feats = model.text_features()
        if space == "projected":
            labels_t = torch.tensor([s.label for s in sentences], dtype=torch.long)
            projected = model.heads.project_numeric(feats)
            feats = projected[torch.arange(projected.shape[0]), labels_t]
            text_feats = model.heads.project_text(text_feats)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    dim = feats.shape[1]
    with out_path.open("w") as fh:
        fh.write("id,kind,label," + ",".join(f"v{i}" for i in range(dim)) + "\n")
        for i, (sent, vec) in enumerate(zip(sentences, feats)):
            values = ",".join(repr(float(v)) for v in vec)
            fh.write(f"sent_{i},numeric,{sent.label},{values}\n")
        for c in range(text_feats.shape[0]):
            values = ",".join(repr(float(v)) for v in text_feats[c])
            fh.write(f"class_{c},class_text,{c},{values}\n")
    return len(sentences) + text_feats.shape[0]


CHECKPOINT_CONFIG = "checkpoint.json"


def save_checkpoint(directory: str | Path, model: GaitModel) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    tensors: dict[str, np.ndarray] = {}
    for prefix, module in (
        ("prompt_state", model.prompt_state),
        ("visual_prompts", model.visual_prompts),
        ("heads", model.heads),
    ):
        for name, param in module.state_dict().items():
            tensors[f"{prefix}.{name}"] = param.detach().cpu().numpy().astype(np.float32)
    for name, arr in model.stats.to_arrays().items():
        tensors[f"stats.{name}"] = arr
    tensors["num_base"] = model.embedder.num_base_array
    if model.bank is not None:
        tensors["bank.features"] = model.bank.features.detach().cpu().numpy()
        tensors["bank.labels"] = model.bank.labels.astype(np.int64)
    if model.knowledge is not None:
        tensors["knowledge"] = model.knowledge.detach().cpu().numpy()
    blobio.save_tensors(directory, tensors)
    save_class_specs(directory / "classes.json", model.class_specs)
    model.schema.to_json(directory / "schema.json")
    (directory / CHECKPOINT_CONFIG).write_text(json.dumps(model.config.to_dict(), indent=2))


def load_checkpoint(directory: str | Path) -> GaitModel:
    directory = Path(directory)
    config = ExperimentConfig.from_dict(
        json.loads((directory / CHECKPOINT_CONFIG).read_text())
    )
    schema = Schema.from_json(directory / "schema.json")
    class_specs = load_class_specs(directory / "classes.json")
    tensors = blobio.load_tensors(directory)
    stats = NormalizationStats.from_arrays(
        {k.split(".", 1)[1]: v for k, v in tensors.items() if k.startswith("stats.")}
    )
    model = build_model(config, schema, class_specs, stats)
    model.embedder = NumericEmbedder(
        model.text_encoder, model.tokenizer, num_base=tensors["num_base"]
    )
    for prefix, module in (
        ("prompt_state", model.prompt_state),
        ("visual_prompts", model.visual_prompts),
        ("heads", model.heads),
    ):
        state = {
            k.split(".", 1)[1]: torch.from_numpy(v)
            for k, v in tensors.items()
            if k.startswith(prefix + ".")
        }
        module.load_state_dict(state)
    if "bank.features" in tensors:
        model.bank = NumericBank(
            features=torch.from_numpy(tensors["bank.features"]),
            labels=tensors["bank.labels"].astype(np.int64),
        )
    if "knowledge" in tensors:
        model.knowledge = torch.from_numpy(tensors["knowledge"]).to(
            model.text_encoder.positional.dtype
        )
    return model


def classify_clip(
    model: GaitModel, dataset: SyntheticDataset, clip_id: str
) -> tuple[np.ndarray, int]:
    """Per-video probabilities and predicted class for one clip."""
    if clip_id not in dataset.videos:
        raise KeyError(f"unknown clip {clip_id!r}")
    config = model.config
    frames = dataset.videos[clip_id]
    samples = [
        WindowSample(clip_id, dataset.clip_subjects.get(clip_id, ""), -1, start)
        for start, _ in sliding_windows(frames.shape[0], config.window, "eval")
    ]
    with torch.no_grad():
        text_feats = model.text_features()
        batch = np.stack(
            [fetch_window_frames(dataset, s, config.window, config.frames_per_window)
             for s in samples]
        )
        feats = model.encode_windows(batch)
        probs = class_probabilities(feats, text_feats, config.loss.temperature)
        mean_probs = probs.mean(dim=0).to(torch.float64).numpy()
    return mean_probs, int(np.argmax(mean_probs))
