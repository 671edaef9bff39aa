"""Gait parameter corpus: ingestion, normalization, combination filtering, sentences.

A corpus is a table of per-trial gait parameter vectors (29 values by default)
with a subject id and a class label. Values are normalized against the mean of
the healthy subjects so that the healthy regime sits at zero, scaled so the fit
corpus spans [-2.5, 2.5]. Four-parameter subsets whose pairwise Pearson
correlations all stay within a threshold are turned into short sentences of the
form "<name> is <value> and ...".
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

VALUE_RANGE = 2.5  # normalized values live in [-VALUE_RANGE, VALUE_RANGE]


class CorpusParseError(ValueError):
    """Raised when a corpus file violates the expected CSV layout."""


class DegenerateParameterError(ValueError):
    """Raised when a parameter has zero dispersion over the fit corpus."""


@dataclass(frozen=True)
class ParameterDescriptor:
    """One named gait parameter, e.g. ("the walking speed", "cm/s")."""

    name: str
    unit: str
    index: int


@dataclass(frozen=True)
class Schema:
    """Parameter vocabulary plus the label of the healthy reference class."""

    parameters: tuple[ParameterDescriptor, ...]
    healthy_label: int

    def __post_init__(self):
        names = [p.name for p in self.parameters]
        if len(set(names)) != len(names):
            raise ValueError("parameter names must be unique")
        indices = [p.index for p in self.parameters]
        if indices != list(range(len(self.parameters))):
            raise ValueError("parameter indices must be contiguous from 0")

    @property
    def size(self) -> int:
        return len(self.parameters)

    def names(self) -> list[str]:
        return [p.name for p in self.parameters]

    def to_json(self, path: str | Path) -> None:
        payload = {
            "healthy_label": self.healthy_label,
            "parameters": [{"name": p.name, "unit": p.unit} for p in self.parameters],
        }
        Path(path).write_text(json.dumps(payload, indent=2))

    @classmethod
    def from_json(cls, path: str | Path) -> "Schema":
        payload = json.loads(Path(path).read_text())
        params = tuple(
            ParameterDescriptor(name=entry["name"], unit=entry["unit"], index=i)
            for i, entry in enumerate(payload["parameters"])
        )
        return cls(parameters=params, healthy_label=int(payload["healthy_label"]))


@dataclass
class ParameterRecord:
    """One subject-trial's parameter vector in original units."""

    subject_id: str
    label: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"record {self.subject_id}: non-finite parameter value")


@dataclass
class NormalizationStats:
    """Healthy-reference normalization fitted on a corpus.

    ``healthy_mean`` and ``dispersion`` are per-parameter; ``max_abs_z`` is the
    largest absolute standardized value seen at fit time, so that rescaling by
    2.5 / max_abs_z maps the fit corpus into [-2.5, 2.5] with at least one
    value landing exactly on an endpoint.
    """

    healthy_mean: np.ndarray
    dispersion: np.ndarray
    max_abs_z: float

    @property
    def scale_factor(self) -> float:
        return VALUE_RANGE / self.max_abs_z

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "healthy_mean": np.asarray(self.healthy_mean, dtype=np.float64),
            "dispersion": np.asarray(self.dispersion, dtype=np.float64),
            "max_abs_z": np.array([self.max_abs_z], dtype=np.float64),
        }

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "NormalizationStats":
        return cls(
            healthy_mean=np.asarray(arrays["healthy_mean"], dtype=np.float64),
            dispersion=np.asarray(arrays["dispersion"], dtype=np.float64),
            max_abs_z=float(np.asarray(arrays["max_abs_z"]).reshape(-1)[0]),
        )


@dataclass(frozen=True)
class Combination:
    """Four distinct parameter indices in ascending order."""

    indices: tuple[int, int, int, int]

    def __post_init__(self):
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("combination indices must be distinct and ascending")


@dataclass
class NumericSentence:
    """Four (parameter phrase, normalized value) pairs plus display text.

    ``items`` stores normalized values (the payload fed to the embedding
    pipeline); ``display_values`` keeps the original-unit values used in the
    rendered text.
    """

    items: list[tuple[str, float]]
    text: str
    label: int
    display_values: list[float] = field(default_factory=list)


def load_corpus(path: str | Path, schema: Schema) -> list[ParameterRecord]:
    """Read a parameter corpus CSV; header is subject_id,label,<param names...>."""
    path = Path(path)
    expected = ["subject_id", "label"] + schema.names()
    records: list[ParameterRecord] = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusParseError(f"{path}: empty file, expected header row") from None
        if header != expected:
            raise CorpusParseError(
                f"{path}: header mismatch, expected {expected[:4]}... got {header[:4]}..."
            )
        for row_num, row in enumerate(reader, start=2):
            if len(row) != len(expected):
                raise CorpusParseError(
                    f"{path}: row {row_num} has {len(row)} cells, expected {len(expected)}"
                )
            subject_id = row[0]
            try:
                label = int(row[1])
            except ValueError:
                raise CorpusParseError(
                    f"{path}: row {row_num}, column 'label': not an integer ({row[1]!r})"
                ) from None
            values = np.empty(schema.size, dtype=np.float64)
            for j, cell in enumerate(row[2:]):
                try:
                    value = float(cell)
                except ValueError:
                    raise CorpusParseError(
                        f"{path}: row {row_num}, column {schema.parameters[j].name!r}: "
                        f"non-numeric cell ({cell!r})"
                    ) from None
                if not math.isfinite(value):
                    raise CorpusParseError(
                        f"{path}: row {row_num}, column {schema.parameters[j].name!r}: "
                        f"non-finite cell ({cell!r})"
                    )
                values[j] = value
            records.append(ParameterRecord(subject_id=subject_id, label=label, values=values))
    return records


def save_corpus(path: str | Path, records: list[ParameterRecord], schema: Schema) -> None:
    """Write records in the CSV layout accepted by :func:`load_corpus`."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject_id", "label"] + schema.names())
        for rec in records:
            writer.writerow([rec.subject_id, rec.label] + [repr(v) for v in rec.values])


def fit_normalization(records: list[ParameterRecord], healthy_label: int) -> NormalizationStats:
    """Fit healthy-mean zero reference and [-2.5, 2.5] scaling on a corpus.

    The per-parameter mean is taken over healthy records only, the dispersion
    (standard deviation) over all records, and the scale maps the largest
    standardized magnitude in the corpus to 2.5 exactly.
    """
    healthy = [r for r in records if r.label == healthy_label]
    if len(healthy) < 2:
        raise ValueError(f"need at least 2 records with healthy label {healthy_label}")
    all_values = np.stack([r.values for r in records])
    healthy_values = np.stack([r.values for r in healthy])

    healthy_mean = healthy_values.mean(axis=0)
    dispersion = all_values.std(axis=0)
    degenerate = np.flatnonzero(dispersion <= 0.0)
    if degenerate.size:
        raise DegenerateParameterError(
            f"zero dispersion for parameter indices {degenerate.tolist()}"
        )
    z = (all_values - healthy_mean) / dispersion
    max_abs_z = float(np.max(np.abs(z)))
    if max_abs_z <= 0.0:
        raise DegenerateParameterError("corpus is identical to the healthy mean everywhere")
    return NormalizationStats(
        healthy_mean=healthy_mean, dispersion=dispersion, max_abs_z=max_abs_z
    )


def normalize(value: float, param_index: int, stats: NormalizationStats) -> float:
    """Map an original-unit value to the clamped [-2.5, 2.5] normalized scale."""
    z = (value - stats.healthy_mean[param_index]) / stats.dispersion[param_index]
    scaled = VALUE_RANGE * (z / stats.max_abs_z)
    return float(np.clip(scaled, -VALUE_RANGE, VALUE_RANGE))


def normalize_record(record: ParameterRecord, stats: NormalizationStats) -> np.ndarray:
    """Vectorized :func:`normalize` over one record."""
    z = (record.values - stats.healthy_mean) / stats.dispersion
    return np.clip(VALUE_RANGE * (z / stats.max_abs_z), -VALUE_RANGE, VALUE_RANGE)


def pearson(xs, ys) -> float:
    """Sample Pearson correlation of two equal-length sequences."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson expects two 1-d sequences of equal length")
    if x.size < 2:
        raise ValueError("pearson needs at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    if denom == 0.0:
        raise DegenerateParameterError("zero variance in pearson input")
    return float(np.clip((xc @ yc) / denom, -1.0, 1.0))


def correlation_matrix(records: list[ParameterRecord]) -> np.ndarray:
    """Pairwise Pearson matrix over all parameters of a corpus."""
    values = np.stack([r.values for r in records])
    if np.any(values.std(axis=0) <= 0.0):
        bad = np.flatnonzero(values.std(axis=0) <= 0.0)
        raise DegenerateParameterError(
            f"zero variance for parameter indices {bad.tolist()}"
        )
    return np.corrcoef(values, rowvar=False)


def enumerate_combinations(
    records: list[ParameterRecord], threshold: float = 0.4, k: int = 4
) -> list[Combination]:
    """All k-subsets whose pairwise |Pearson| stays within the threshold.

    Output is in lexicographic index order regardless of record order.
    """
    n = records[0].values.shape[0] if records else 0
    if n < k:
        raise ValueError(f"need at least {k} parameters, corpus has {n}")
    corr = correlation_matrix(records)
    ok = np.abs(corr) <= threshold
    combos: list[Combination] = []
    for subset in itertools.combinations(range(n), k):
        if all(ok[a, b] for a, b in itertools.combinations(subset, 2)):
            combos.append(Combination(indices=subset))
    return combos


def render_sentence(
    combo: Combination,
    record: ParameterRecord,
    stats: NormalizationStats,
    schema: Schema,
    decimals: int = 1,
) -> NumericSentence:
    """Render "<name> is <value> and ..." for one combination of a record.

    Display values stay in original units with fixed decimal formatting; the
    stored numeric payload uses the normalized scale.
    """
    items: list[tuple[str, float]] = []
    display: list[float] = []
    clauses: list[str] = []
    for idx in combo.indices:
        phrase = schema.parameters[idx].name
        raw = float(record.values[idx])
        items.append((phrase, normalize(raw, idx, stats)))
        display.append(raw)
        clauses.append(f"{phrase} is {raw:.{decimals}f}")
    return NumericSentence(
        items=items,
        text=" and ".join(clauses),
        label=record.label,
        display_values=display,
    )
