"""Synthetic gait dataset: parameter tables paired with point-light walker clips.

Each clip draws a 29-parameter vector from its class distribution (a few
parameters are derived from others so the Pearson filter has real structure),
then drives a 13-joint point-light walker: limb oscillation frequency follows
the cadence, horizontal translation follows the walking speed, leg swing
amplitude follows the step length, and arm amplitude follows the arm-swing
parameters. Frames are Gaussian splats on a 64x64 grayscale canvas.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from gaitvlm import blobio
from gaitvlm.params import ParameterDescriptor, ParameterRecord, Schema, load_corpus, save_corpus
from gaitvlm.prompts import ClassSpec, load_class_specs, save_class_specs

DEFAULT_PARAMETERS: list[tuple[str, str]] = [
    ("the walking speed", "cm/s"),
    ("the cadence", "steps/min"),
    ("the left step length", "cm"),
    ("the right step length", "cm"),
    ("the left stride length", "cm"),
    ("the right stride length", "cm"),
    ("the left step time", "s"),
    ("the right step time", "s"),
    ("the cycle time", "s"),
    ("the left swing percentage", "%"),
    ("the right swing percentage", "%"),
    ("the left stance percentage", "%"),
    ("the right stance percentage", "%"),
    ("the left single support percentage", "%"),
    ("the right single support percentage", "%"),
    ("the double support percentage", "%"),
    ("the base of support", "cm"),
    ("the left toe out angle", "deg"),
    ("the right toe out angle", "deg"),
    ("the left arm swing amplitude", "deg"),
    ("the right arm swing amplitude", "deg"),
    ("the trunk sway amplitude", "deg"),
    ("the step length variability", "cm"),
    ("the step time variability", "s"),
    ("the stride velocity variability", "cm/s"),
    ("the left foot clearance", "cm"),
    ("the right foot clearance", "cm"),
    ("the gait asymmetry index", "%"),
    ("the functional ambulation score", "points"),
]

# indices used across the module
SPEED, CADENCE, STEP_L, STEP_R = 0, 1, 2, 3
STRIDE_L, STRIDE_R, STEP_TIME_L, STEP_TIME_R, CYCLE_TIME = 4, 5, 6, 7, 8
SWING_L, SWING_R, STANCE_L, STANCE_R = 9, 10, 11, 12
SINGLE_L, SINGLE_R, DOUBLE_SUPPORT, BASE_SUPPORT = 13, 14, 15, 16
TOE_L, TOE_R, ARM_L, ARM_R, TRUNK_SWAY = 17, 18, 19, 20, 21
VAR_STEP_LEN, VAR_STEP_TIME, VAR_STRIDE_VEL = 22, 23, 24
CLEAR_L, CLEAR_R, ASYMMETRY, FUNCTIONAL = 25, 26, 27, 28

DISCRIMINATIVE = (SPEED, CADENCE, STEP_L, STEP_R, ARM_L, ARM_R)

N_JOINTS = 13  # head, neck, shoulders, elbows, wrists, pelvis, knees, ankles


def default_schema(healthy_label: int = 0) -> Schema:
    return Schema(
        parameters=tuple(
            ParameterDescriptor(name=n, unit=u, index=i)
            for i, (n, u) in enumerate(DEFAULT_PARAMETERS)
        ),
        healthy_label=healthy_label,
    )


@dataclass
class ClassDistribution:
    """Per-class parameter means plus residual noise scales."""

    name: str
    mean: np.ndarray
    noise_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        self.noise_std = np.asarray(self.noise_std, dtype=np.float64)
        if np.any(self.noise_std <= 0):
            raise ValueError(f"class {self.name!r}: noise std must be positive")


def _base_healthy() -> tuple[np.ndarray, np.ndarray]:
    mean = np.zeros(29)
    std = np.zeros(29)
    base = {
        CADENCE: (110.0, 6.0),
        STEP_L: (62.0, 4.0),
        STEP_R: (62.0, 4.0),
        SWING_L: (38.0, 1.5),
        SWING_R: (38.0, 1.5),
        DOUBLE_SUPPORT: (22.0, 2.5),
        BASE_SUPPORT: (9.0, 1.5),
        TOE_L: (7.0, 2.0),
        TOE_R: (7.0, 2.0),
        ARM_L: (28.0, 4.0),
        ARM_R: (28.0, 4.0),
        TRUNK_SWAY: (3.5, 0.8),
        VAR_STEP_LEN: (2.2, 0.6),
        VAR_STEP_TIME: (0.02, 0.006),
        VAR_STRIDE_VEL: (4.5, 1.2),
        CLEAR_L: (12.0, 1.5),
        CLEAR_R: (12.0, 1.5),
        ASYMMETRY: (2.5, 1.0),
        FUNCTIONAL: (95.0, 3.0),
    }
    for idx, (m, s) in base.items():
        mean[idx], std[idx] = m, s
    return mean, std


# residual noise added on top of the derived-parameter formulas
_DERIVED_STD = {
    SPEED: 3.0,
    STRIDE_L: 1.5,
    STRIDE_R: 1.5,
    STEP_TIME_L: 0.012,
    STEP_TIME_R: 0.012,
    CYCLE_TIME: 0.02,
    STANCE_L: 0.4,
    STANCE_R: 0.4,
    SINGLE_L: 0.8,
    SINGLE_R: 0.8,
}

_BASE_INDICES = [
    CADENCE, STEP_L, STEP_R, SWING_L, SWING_R, DOUBLE_SUPPORT, BASE_SUPPORT,
    TOE_L, TOE_R, ARM_L, ARM_R, TRUNK_SWAY, VAR_STEP_LEN, VAR_STEP_TIME,
    VAR_STRIDE_VEL, CLEAR_L, CLEAR_R, ASYMMETRY, FUNCTIONAL,
]


def _fill_derived_means(mean: np.ndarray) -> np.ndarray:
    """Derived parameter means consistent with the sampling formulas."""
    mean = mean.copy()
    mean[SPEED] = mean[CADENCE] * (mean[STEP_L] + mean[STEP_R]) / 2.0 / 60.0
    mean[STRIDE_L] = mean[STEP_L] + mean[STEP_R]
    mean[STRIDE_R] = mean[STEP_L] + mean[STEP_R]
    mean[STEP_TIME_L] = 60.0 / mean[CADENCE]
    mean[STEP_TIME_R] = 60.0 / mean[CADENCE]
    mean[CYCLE_TIME] = 120.0 / mean[CADENCE]
    mean[STANCE_L] = 100.0 - mean[SWING_L]
    mean[STANCE_R] = 100.0 - mean[SWING_R]
    mean[SINGLE_L] = mean[SWING_R]
    mean[SINGLE_R] = mean[SWING_L]
    return mean


def _class_from_offsets(name: str, offsets: dict[int, float]) -> ClassDistribution:
    """Build a class by shifting healthy base means in units of the base std."""
    mean, std = _base_healthy()
    for idx, shift in offsets.items():
        mean[idx] += shift * std[idx]
    mean = _fill_derived_means(mean)
    noise = std.copy()
    for idx, s in _DERIVED_STD.items():
        noise[idx] = s
    return ClassDistribution(name=name, mean=mean, noise_std=noise)


def _sample_parameters(dist: ClassDistribution, rng: np.random.Generator) -> np.ndarray:
    values = np.empty(29)
    noise = rng.standard_normal(29) * dist.noise_std
    for idx in _BASE_INDICES:
        values[idx] = dist.mean[idx] + noise[idx]
    values[CADENCE] = max(values[CADENCE], 40.0)
    values[STEP_L] = max(values[STEP_L], 10.0)
    values[STEP_R] = max(values[STEP_R], 10.0)
    values[SPEED] = values[CADENCE] * (values[STEP_L] + values[STEP_R]) / 2.0 / 60.0 + noise[SPEED]
    values[STRIDE_L] = values[STEP_L] + values[STEP_R] + noise[STRIDE_L]
    values[STRIDE_R] = values[STEP_L] + values[STEP_R] + noise[STRIDE_R]
    values[STEP_TIME_L] = 60.0 / values[CADENCE] + noise[STEP_TIME_L]
    values[STEP_TIME_R] = 60.0 / values[CADENCE] + noise[STEP_TIME_R]
    values[CYCLE_TIME] = 120.0 / values[CADENCE] + noise[CYCLE_TIME]
    values[STANCE_L] = 100.0 - values[SWING_L] + noise[STANCE_L]
    values[STANCE_R] = 100.0 - values[SWING_R] + noise[STANCE_R]
    values[SINGLE_L] = values[SWING_R] + noise[SINGLE_L]
    values[SINGLE_R] = values[SWING_L] + noise[SINGLE_R]
    return values


def dementia_group_classes() -> list[ClassDistribution]:
    return [
        _class_from_offsets("healthy gait", {}),
        _class_from_offsets(
            "mildly slowed gait",
            {
                CADENCE: -2.0, STEP_L: -2.5, STEP_R: -2.5, ARM_L: -2.0, ARM_R: -2.0,
                TRUNK_SWAY: 1.0, CLEAR_L: -1.5, CLEAR_R: -1.5, DOUBLE_SUPPORT: 1.5,
                VAR_STEP_LEN: 1.0, VAR_STEP_TIME: 1.0, VAR_STRIDE_VEL: 1.0,
                ASYMMETRY: 1.0, FUNCTIONAL: -2.0, SWING_L: -0.5, SWING_R: -0.5,
            },
        ),
        _class_from_offsets(
            "severely slowed shuffling gait",
            {
                CADENCE: -3.5, STEP_L: -5.0, STEP_R: -5.0, ARM_L: -4.0, ARM_R: -4.0,
                TRUNK_SWAY: 2.5, CLEAR_L: -3.0, CLEAR_R: -3.0, DOUBLE_SUPPORT: 3.5,
                VAR_STEP_LEN: 2.5, VAR_STEP_TIME: 2.5, VAR_STRIDE_VEL: 2.5,
                ASYMMETRY: 2.5, FUNCTIONAL: -5.0, SWING_L: -1.5, SWING_R: -1.5,
            },
        ),
    ]


def gait_scoring_classes() -> list[ClassDistribution]:
    grades = [0.0, -1.4, -2.8, -4.6]
    names = [
        "normal gait pattern",
        "slightly impaired gait",
        "mildly impaired gait",
        "moderately impaired gait",
    ]
    classes = []
    for name, g in zip(names, grades):
        classes.append(
            _class_from_offsets(
                name,
                {
                    CADENCE: 0.7 * g, STEP_L: g, STEP_R: g, ARM_L: 0.8 * g, ARM_R: 0.8 * g,
                    TRUNK_SWAY: -0.5 * g, CLEAR_L: 0.6 * g, CLEAR_R: 0.6 * g,
                    DOUBLE_SUPPORT: -0.7 * g, VAR_STEP_LEN: -0.5 * g,
                    VAR_STEP_TIME: -0.5 * g, VAR_STRIDE_VEL: -0.5 * g,
                    ASYMMETRY: -0.5 * g, FUNCTIONAL: g, SWING_L: 0.3 * g, SWING_R: 0.3 * g,
                },
            )
        )
    return classes


def default_class_specs(task: str = "dementia-group") -> list[ClassSpec]:
    if task == "dementia-group":
        return [
            ClassSpec(
                class_name="healthy gait",
                description=(
                    "Walking looks brisk and fluid. Steps are long and evenly timed, "
                    "both arms swing freely, the feet clear the ground well, and the "
                    "trunk stays upright with little sway."
                ),
                keywords=("brisk", "fluid", "long steps", "free arm swing", "steady rhythm"),
            ),
            ClassSpec(
                class_name="mildly slowed gait",
                description=(
                    "Walking is noticeably slower than expected. Steps shorten and the "
                    "arms swing less, while the rhythm stays fairly regular with mild "
                    "hesitancy and slightly longer time on both feet."
                ),
                keywords=("slowed pace", "shortened steps", "reduced arm swing", "mild hesitancy"),
            ),
            ClassSpec(
                class_name="severely slowed shuffling gait",
                description=(
                    "Walking is markedly slow with short shuffling steps that barely "
                    "clear the floor. Arm swing is minimal, the trunk sways, and weight "
                    "lingers on both feet between steps."
                ),
                keywords=(
                    "shuffling", "very slow", "minimal arm swing",
                    "poor foot clearance", "prolonged double support",
                ),
            ),
        ]
    if task == "gait-scoring":
        texts = [
            ("normal gait pattern",
             "Walking is free and brisk with long symmetric steps, full arm swing, "
             "and no visible hesitation.",
             ("normal", "brisk", "symmetric", "full arm swing")),
            ("slightly impaired gait",
             "Walking is independent but subtly slow, with slightly shortened steps "
             "and a modest drop in arm swing.",
             ("slightly slow", "subtle", "shortened steps", "independent")),
            ("mildly impaired gait",
             "Walking is clearly slowed with short steps, reduced foot clearance, "
             "and diminished arm swing, yet without assistance.",
             ("slow", "short steps", "reduced clearance", "diminished arm swing")),
            ("moderately impaired gait",
             "Walking is very slow and effortful with shuffling steps, minimal arm "
             "swing, marked sway, and long double support.",
             ("very slow", "shuffling", "minimal arm swing", "marked sway")),
        ]
        return [
            ClassSpec(class_name=n, description=d, keywords=k) for n, d, k in texts
        ]
    raise ValueError(f"unknown task {task!r}")


@dataclass
class SyntheticSpec:
    """Dataset sizing and per-class parameter distributions."""

    classes: list[ClassDistribution]
    subjects_per_class: tuple[int, ...]
    clips_per_subject: int = 2
    frames_min: int = 96
    frames_max: int = 150
    image_size: int = 64
    fps: int = 30

    def __post_init__(self):
        if isinstance(self.subjects_per_class, int):
            self.subjects_per_class = tuple(
                [self.subjects_per_class] * len(self.classes)
            )
        if len(self.subjects_per_class) != len(self.classes):
            raise ValueError("subjects_per_class must match class count")
        self.validate_separation()

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def validate_separation(self, min_params: int = 3) -> None:
        """Class means must differ by >= 1 pooled std on enough discriminative params."""
        for a in range(len(self.classes)):
            for b in range(a + 1, len(self.classes)):
                ca, cb = self.classes[a], self.classes[b]
                pooled = np.sqrt((ca.noise_std**2 + cb.noise_std**2) / 2.0)
                separated = sum(
                    abs(ca.mean[i] - cb.mean[i]) >= pooled[i] for i in DISCRIMINATIVE
                )
                if separated < min_params:
                    raise ValueError(
                        f"classes {ca.name!r} and {cb.name!r} separated on only "
                        f"{separated} discriminative parameters (need {min_params})"
                    )


def default_synthetic_spec(task: str = "dementia-group", scale: str = "default") -> SyntheticSpec:
    classes = dementia_group_classes() if task == "dementia-group" else gait_scoring_classes()
    if scale == "default":
        return SyntheticSpec(classes=classes, subjects_per_class=8,
                             clips_per_subject=2, frames_min=96, frames_max=150)
    if scale == "paper-scale-synthetic":
        # ~43 subjects / ~130 clips sized so one 10-fold training split sees
        # on the order of 900 windows
        per_class = (15, 14, 14) if len(classes) == 3 else (11, 11, 11, 10)
        return SyntheticSpec(classes=classes, subjects_per_class=per_class,
                             clips_per_subject=3, frames_min=180, frames_max=350)
    raise ValueError(f"unknown scale {scale!r}")


@dataclass(frozen=True)
class ClipPlan:
    clip_id: str
    subject_id: str
    label: int
    length: int
    rng_key: tuple[int, int]


def plan_clips(spec: SyntheticSpec, seed: int) -> list[ClipPlan]:
    """Deterministic list of clips (ids, labels, lengths) for a spec and seed."""
    rng = np.random.default_rng([seed, 0xC11B])
    plans: list[ClipPlan] = []
    idx = 0
    for label, count in enumerate(spec.subjects_per_class):
        for s in range(count):
            subject = f"s{label}_{s:02d}"
            for c in range(spec.clips_per_subject):
                length = int(rng.integers(spec.frames_min, spec.frames_max + 1))
                plans.append(
                    ClipPlan(
                        clip_id=f"{subject}_c{c}",
                        subject_id=subject,
                        label=label,
                        length=length,
                        rng_key=(seed, idx),
                    )
                )
                idx += 1
    return plans


_SEGMENTS = {
    "pelvis_y": 34.0, "shoulder_y": 20.0, "neck_y": 16.0, "head_y": 11.0,
    "thigh": 8.0, "shank": 9.0, "upper_arm": 7.0, "forearm": 7.0,
    "px_per_cm": 0.27,
}


def _walker_joints(values: np.ndarray, length: int, fps: int, rng: np.random.Generator,
                   size: int) -> np.ndarray:
    """(length, 13, 2) joint positions in pixel coordinates (x, y), y down."""
    g = _SEGMENTS
    speed_px = values[SPEED] * g["px_per_cm"] / fps
    freq = values[CADENCE] / 120.0 / fps  # gait cycles per frame
    leg_len = g["thigh"] + g["shank"]
    step_px = (values[STEP_L] + values[STEP_R]) / 2.0 * g["px_per_cm"]
    a_leg = np.arcsin(np.clip(step_px / 2.0 / leg_len, 0.05, 0.95))
    a_knee = np.clip(values[[CLEAR_L, CLEAR_R]].mean() * 0.030, 0.05, 0.9)
    a_arm_l = np.deg2rad(max(values[ARM_L], 1.0)) * 0.9
    a_arm_r = np.deg2rad(max(values[ARM_R], 1.0)) * 0.9
    sway_px = values[TRUNK_SWAY] * 0.25
    phase0 = rng.uniform(0.0, 2.0 * np.pi)
    x0 = rng.uniform(0.0, size)

    t = np.arange(length)
    phi = 2.0 * np.pi * freq * t + phase0
    x = (x0 + speed_px * t) % size
    bob = 1.1 * np.cos(2.0 * phi)
    pelvis_y = g["pelvis_y"] - bob
    sway = sway_px * np.sin(phi)

    joints = np.zeros((length, N_JOINTS, 2))
    # 0 head, 1 neck, 2/3 shoulders, 4/5 elbows, 6/7 wrists,
    # 8 pelvis, 9/10 knees, 11/12 ankles
    joints[:, 8, 0], joints[:, 8, 1] = x, pelvis_y
    joints[:, 1, 0], joints[:, 1, 1] = x + sway, g["neck_y"] - bob
    joints[:, 0, 0], joints[:, 0, 1] = x + sway, g["head_y"] - bob
    for side, (phase_off, knee_j, ankle_j) in enumerate(((0.0, 9, 11), (np.pi, 10, 12))):
        hip_angle = a_leg * np.sin(phi + phase_off)
        swing = np.maximum(0.0, np.sin(phi + phase_off + 0.5))
        shank_angle = hip_angle - a_knee * swing
        kx = x + g["thigh"] * np.sin(hip_angle)
        ky = pelvis_y + g["thigh"] * np.cos(hip_angle)
        joints[:, knee_j, 0], joints[:, knee_j, 1] = kx, ky
        joints[:, ankle_j, 0] = kx + g["shank"] * np.sin(shank_angle)
        joints[:, ankle_j, 1] = ky + g["shank"] * np.cos(shank_angle)
    for side, (phase_off, a_arm, sh_j, el_j, wr_j) in enumerate(
        ((np.pi, a_arm_l, 2, 4, 6), (0.0, a_arm_r, 3, 5, 7))
    ):
        sx = x + sway
        sy = g["shoulder_y"] - bob
        arm_angle = a_arm * np.sin(phi + phase_off)
        joints[:, sh_j, 0], joints[:, sh_j, 1] = sx, sy
        ex = sx + g["upper_arm"] * np.sin(arm_angle)
        ey = sy + g["upper_arm"] * np.cos(arm_angle)
        joints[:, el_j, 0], joints[:, el_j, 1] = ex, ey
        joints[:, wr_j, 0] = ex + g["forearm"] * np.sin(arm_angle + 0.35)
        joints[:, wr_j, 1] = ey + g["forearm"] * np.cos(arm_angle + 0.35)
    joints[:, :, 0] %= size
    return joints


def render_walker(values: np.ndarray, length: int, size: int, fps: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Render Gaussian-splat point-light frames, uint8 (length, size, size)."""
    joints = _walker_joints(values, length, fps, rng, size)
    frames = np.zeros((length, size, size))
    radius, sigma, amplitude = 3, 1.0, 230.0
    offsets = np.arange(-radius, radius + 1)
    oy, ox = np.meshgrid(offsets, offsets, indexing="ij")
    for t in range(length):
        canvas = frames[t]
        for j in range(N_JOINTS):
            jx, jy = joints[t, j]
            cx, cy = int(round(jx)), int(round(jy))
            ys, xs = cy + oy, cx + ox
            blob = amplitude * np.exp(
                -(((xs - jx) ** 2) + ((ys - jy) ** 2)) / (2.0 * sigma**2)
            )
            valid = (ys >= 0) & (ys < size) & (xs >= 0) & (xs < size)
            np.add.at(canvas, (ys[valid], xs[valid] % size), blob[valid])
    return np.clip(frames, 0.0, 255.0).astype(np.uint8)


@dataclass
class SyntheticDataset:
    """Clips, aligned parameter records, and the prompt/class metadata."""

    schema: Schema
    class_specs: list[ClassSpec]
    records: list[ParameterRecord]
    clip_ids: list[str]
    videos: dict[str, np.ndarray]
    clip_subjects: dict[str, str]
    clip_labels: dict[str, int]

    def subject_ids(self) -> list[str]:
        return sorted(set(self.clip_subjects.values()))

    def clips_for_subjects(self, subjects) -> list[str]:
        wanted = set(subjects)
        return [c for c in self.clip_ids if self.clip_subjects[c] in wanted]

    def records_for_subjects(self, subjects) -> list[ParameterRecord]:
        wanted = set(subjects)
        return [
            rec
            for rec, cid in zip(self.records, self.clip_ids)
            if self.clip_subjects[cid] in wanted
        ]


def gen_synthetic_dataset(
    spec: SyntheticSpec,
    seed: int,
    task: str = "dementia-group",
    render: bool = True,
) -> SyntheticDataset:
    """Deterministic dataset for a spec and seed; ``render=False`` skips frames."""
    schema = default_schema()
    class_specs = default_class_specs(task)
    if len(class_specs) != spec.n_classes:
        raise ValueError("class spec count does not match distribution count")
    plans = plan_clips(spec, seed)
    records: list[ParameterRecord] = []
    videos: dict[str, np.ndarray] = {}
    clip_ids: list[str] = []
    clip_subjects: dict[str, str] = {}
    clip_labels: dict[str, int] = {}
    for plan in plans:
        rng = np.random.default_rng(list(plan.rng_key))
        values = _sample_parameters(spec.classes[plan.label], rng)
        records.append(
            ParameterRecord(subject_id=plan.subject_id, label=plan.label, values=values)
        )
        clip_ids.append(plan.clip_id)
        clip_subjects[plan.clip_id] = plan.subject_id
        clip_labels[plan.clip_id] = plan.label
        if render:
            videos[plan.clip_id] = render_walker(
                values, plan.length, spec.image_size, spec.fps, rng
            )
    return SyntheticDataset(
        schema=schema,
        class_specs=class_specs,
        records=records,
        clip_ids=clip_ids,
        videos=videos,
        clip_subjects=clip_subjects,
        clip_labels=clip_labels,
    )


def save_dataset(dataset: SyntheticDataset, out_dir: str | Path) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset.schema.to_json(out_dir / "schema.json")
    save_class_specs(out_dir / "classes.json", dataset.class_specs)
    save_corpus(out_dir / "params.csv", dataset.records, dataset.schema)
    meta = [
        {
            "clip_id": cid,
            "subject_id": dataset.clip_subjects[cid],
            "label": dataset.clip_labels[cid],
            "length": int(dataset.videos[cid].shape[0]) if cid in dataset.videos else 0,
        }
        for cid in dataset.clip_ids
    ]
    (out_dir / "clips.json").write_text(json.dumps(meta, indent=1))
    if dataset.videos:
        blobio.save_tensors(out_dir / "videos", dataset.videos)


def load_dataset(directory: str | Path) -> SyntheticDataset:
    directory = Path(directory)
    schema = Schema.from_json(directory / "schema.json")
    class_specs = load_class_specs(directory / "classes.json")
    records = load_corpus(directory / "params.csv", schema)
    meta = json.loads((directory / "clips.json").read_text())
    videos = {}
    if (directory / "videos").exists():
        videos = blobio.load_tensors(directory / "videos")
    return SyntheticDataset(
        schema=schema,
        class_specs=class_specs,
        records=records,
        clip_ids=[m["clip_id"] for m in meta],
        videos=videos,
        clip_subjects={m["clip_id"]: m["subject_id"] for m in meta},
        clip_labels={m["clip_id"]: int(m["label"]) for m in meta},
    )
