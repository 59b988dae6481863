"""Dataset construction: windowing, scaling, flattening, synthetic tasks.

A dataset is a plain list of :class:`LabeledSequence`.  Records group
windows through ``record_id``: all windows from one source record share
the id, vote together at evaluation time, and are never split across
cross-validation folds.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataLoadError, InvalidArgumentError
from .matio import check_finite

ANOMALY_KINDS = ("burst", "freq_shift", "long_range")


@dataclass
class LabeledSequence:
    steps: np.ndarray  # (T, d)
    label: int
    record_id: str

    def __post_init__(self):
        self.steps = check_finite(self.steps, f"sequence {self.record_id!r}")
        if self.steps.ndim != 2 or self.steps.shape[0] < 1:
            raise InvalidArgumentError(
                f"sequence {self.record_id!r} must be non-empty (T, d)"
            )


@dataclass
class FeatureBlock:
    height: int
    width: int
    channels: int
    data: np.ndarray  # (H, W, C)

    def __post_init__(self):
        self.data = check_finite(self.data, "feature block")
        if self.data.shape != (self.height, self.width, self.channels):
            raise InvalidArgumentError(
                f"feature block data shape {self.data.shape} != "
                f"({self.height}, {self.width}, {self.channels})"
            )
        if min(self.height, self.width, self.channels) < 1:
            raise InvalidArgumentError("feature block dims must be positive")


def sliding_window(
    signal: np.ndarray, window_len: int, overlap_fraction: float
) -> list[np.ndarray]:
    """Fixed-length windows with fractional overlap; trailing rest dropped.

    stride = floor(window_len * (1 - overlap_fraction)), floored at 1;
    windows start at 0, stride, 2*stride, ...
    """
    signal = check_finite(signal, "signal")
    if signal.ndim == 1:
        signal = signal[:, np.newaxis]
    if not (0.0 <= overlap_fraction < 1.0):
        raise InvalidArgumentError(
            f"overlap_fraction must be in [0, 1), got {overlap_fraction}"
        )
    T = signal.shape[0]
    if window_len > T:
        warnings.warn(
            f"window_len {window_len} exceeds series length {T}; no windows",
            stacklevel=2,
        )
        return []
    if window_len < 1:
        raise InvalidArgumentError("window_len must be >= 1")
    stride = max(1, int(np.floor(window_len * (1.0 - overlap_fraction))))
    return [
        signal[start : start + window_len].copy()
        for start in range(0, T - window_len + 1, stride)
    ]


def minmax_scale(window: np.ndarray) -> np.ndarray:
    """Per-channel map onto [0, 1]; constant channels map to zeros."""
    window = np.asarray(window, dtype=np.float64)
    if np.isnan(window).any():
        raise InvalidArgumentError("minmax_scale: NaN in input")
    lo = window.min(axis=0)
    hi = window.max(axis=0)
    span = hi - lo
    out = np.zeros_like(window)
    nondeg = span > 0
    out[:, nondeg] = (window[:, nondeg] - lo[nondeg]) / span[nondeg]
    return out


def flatten_feature_map(block: FeatureBlock) -> np.ndarray:
    """Row-wise (top-left to bottom-right) flattening into (H*W, C) steps."""
    return block.data.reshape(block.height * block.width, block.channels).copy()


def unflatten_feature_map(steps: np.ndarray, height: int, width: int) -> FeatureBlock:
    steps = np.asarray(steps, dtype=np.float64)
    channels = steps.shape[1]
    return FeatureBlock(height, width, channels, steps.reshape(height, width, channels))


def majority_vote(
    window_predictions: list[int], window_probs: list[np.ndarray]
) -> int:
    """Modal class; ties resolve by highest mean probability, then lower index."""
    if not window_predictions:
        raise InvalidArgumentError("majority_vote: empty prediction list")
    if len(window_probs) != len(window_predictions):
        raise InvalidArgumentError(
            "majority_vote: predictions and probabilities differ in length"
        )
    num_classes = len(window_probs[0])
    counts = np.zeros(num_classes, dtype=int)
    for p in window_predictions:
        counts[p] += 1
    top = int(np.max(counts))
    tied = np.flatnonzero(counts == top)
    if len(tied) == 1:
        return int(tied[0])
    mean_probs = np.mean(np.asarray(window_probs), axis=0)
    best = tied[np.argmax(mean_probs[tied])]  # argmax takes the lower index on ties
    return int(best)


@dataclass
class SynthConfig:
    n_records: int = 100
    steps: int = 100
    channels: int = 1
    anomaly_kind: str = "long_range"
    noise_sd: float = 0.2
    windows_per_record: int = 1
    seed: int = 0

    def validate(self) -> None:
        if min(self.n_records, self.steps, self.channels, self.windows_per_record) < 1:
            raise InvalidArgumentError("synthetic sizes must be positive")
        if self.anomaly_kind not in ANOMALY_KINDS:
            raise InvalidArgumentError(
                f"anomaly_kind {self.anomaly_kind!r} not in {ANOMALY_KINDS}"
            )
        if self.noise_sd < 0:
            raise InvalidArgumentError("noise_sd must be >= 0")


# Base waveform shared by both classes: two fixed-frequency sinusoids.
_FREQ_A = 5.0
_FREQ_B = 11.0
_MARKER_AMPLITUDE = 3.0


def _base_signal(steps: int, channels: int, rng: np.random.Generator, noise_sd: float):
    t = np.linspace(0.0, 1.0, steps, endpoint=False)
    wave = 0.6 * np.sin(2 * np.pi * _FREQ_A * t) + 0.4 * np.sin(2 * np.pi * _FREQ_B * t)
    sig = np.tile(wave[:, np.newaxis], (1, channels))
    if noise_sd > 0:
        sig = sig + rng.normal(0.0, noise_sd, sig.shape)
    return sig


def synth_generate(config: SynthConfig) -> list[LabeledSequence]:
    """Balanced two-class synthetic anomaly dataset.

    Normal records are sinusoids plus noise.  The abnormal class depends on
    ``anomaly_kind``:

    * ``burst``: a short high-amplitude transient;
    * ``freq_shift``: the dominant frequency changes mid-sequence;
    * ``long_range``: every record carries an early and a late marker spike;
      matching signs are normal, mismatched signs abnormal.  The label is a
      deterministic function of the two markers, so only a model that can
      relate widely separated positions can solve it.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    dataset: list[LabeledSequence] = []
    for rec in range(config.n_records):
        label = rec % 2  # balanced within +-1 record
        record_id = f"synth-{config.anomaly_kind}-{rec:05d}"
        for _ in range(config.windows_per_record):
            sig = _base_signal(config.steps, config.channels, rng, config.noise_sd)
            if config.anomaly_kind == "burst":
                if label == 1:
                    start = rng.integers(0, max(1, config.steps - 5))
                    sig[start : start + 5] += _MARKER_AMPLITUDE
            elif config.anomaly_kind == "freq_shift":
                if label == 1:
                    t = np.linspace(0.0, 1.0, config.steps, endpoint=False)
                    half = config.steps // 2
                    shifted = 0.6 * np.sin(2 * np.pi * (2.5 * _FREQ_A) * t[half:])
                    sig[half:, :] += (
                        shifted[:, np.newaxis] - 0.6 * np.sin(2 * np.pi * _FREQ_A * t[half:])[:, np.newaxis]
                    )
            else:  # long_range
                early_sign = 1.0 if rng.random() < 0.5 else -1.0
                late_sign = early_sign if label == 0 else -early_sign
                early_pos = int(rng.integers(2, max(3, config.steps // 10)))
                late_pos = int(
                    rng.integers(config.steps - max(3, config.steps // 10),
                                 config.steps - 1)
                )
                sig[early_pos, 0] += early_sign * _MARKER_AMPLITUDE
                sig[late_pos, 0] += late_sign * _MARKER_AMPLITUDE
            dataset.append(LabeledSequence(sig, label, record_id))
    return dataset


def load_csv(manifest_path) -> list[LabeledSequence]:
    """Load a dataset from a JSON manifest of CSV time-series files.

    The manifest is a JSON list of ``{"path", "label", "record_id"}``;
    paths resolve relative to the manifest.  Each CSV holds one row per
    time step and one column per channel.  A top-level object form
    ``{"header": bool, "files": [...]}`` skips a header row when set.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise DataLoadError(f"manifest not found: {manifest_path}")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataLoadError(f"{manifest_path}: invalid JSON: {exc}") from exc
    header = False
    if isinstance(manifest, dict):
        header = bool(manifest.get("header", False))
        manifest = manifest.get("files", [])
    dataset = []
    for entry in manifest:
        try:
            path = manifest_path.parent / entry["path"]
            label = int(entry["label"])
            record_id = str(entry["record_id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataLoadError(f"{manifest_path}: malformed entry {entry!r}") from exc
        if not path.exists():
            raise DataLoadError(f"missing data file: {path}")
        rows = []
        width = None
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if header and lineno == 1:
                    continue
                if not row:
                    continue
                if width is None:
                    width = len(row)
                elif len(row) != width:
                    raise DataLoadError(
                        f"{path}:{lineno}: ragged row ({len(row)} cells, expected {width})"
                    )
                try:
                    rows.append([float(cell) for cell in row])
                except ValueError as exc:
                    raise DataLoadError(
                        f"{path}:{lineno}: non-numeric cell: {exc}"
                    ) from exc
        if not rows:
            raise DataLoadError(f"{path}: no data rows")
        dataset.append(LabeledSequence(np.asarray(rows), label, record_id))
    dims = {seq.steps.shape[1] for seq in dataset}
    if len(dims) > 1:
        raise DataLoadError(
            f"{manifest_path}: inconsistent channel counts across files: {sorted(dims)}"
        )
    return dataset


def save_csv(dataset: list[LabeledSequence], out_dir) -> Path:
    """Write a dataset as CSV files plus manifest; returns the manifest path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, seq in enumerate(dataset):
        name = f"seq-{i:05d}.csv"
        with open(out_dir / name, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in seq.steps:
                writer.writerow([repr(float(x)) for x in row])
        entries.append({"path": name, "label": seq.label, "record_id": seq.record_id})
    manifest = out_dir / "manifest.json"
    with open(manifest, "w") as fh:
        json.dump(entries, fh, indent=1, sort_keys=True)
    return manifest


def load_feature_block(path) -> FeatureBlock:
    """Read a feature block from JSON {H, W, C, data: flat row-major}."""
    with open(path) as fh:
        doc = json.load(fh)
    try:
        h, w, c = int(doc["H"]), int(doc["W"]), int(doc["C"])
        data = np.asarray(doc["data"], dtype=np.float64).reshape(h, w, c)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataLoadError(f"{path}: malformed feature block: {exc}") from exc
    return FeatureBlock(h, w, c, data)
