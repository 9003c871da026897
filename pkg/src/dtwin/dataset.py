"""Labelled FRF-amplitude datasets from the stochastic lumped model."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import rng as streams
from .dynamics import HarmonicLoad, RayleighDamping, frf_solve
from .errors import ConfigError, DatasetFormatError, SingularSystem
from .lumped import (
    DOF_COUNT,
    DamageScenario,
    LumpedParameters,
    UncertaintyConfig,
    apply_damage,
    build_lumped,
    default_scenarios,
    realize_stochastic,
)

log = logging.getLogger(__name__)

MAX_RESAMPLE = 16


@dataclass(frozen=True)
class GenerationConfig:
    scenarios: tuple[DamageScenario, ...] = field(default_factory=lambda: tuple(default_scenarios()))
    samples_per_scenario: int = 300
    excitation: HarmonicLoad = field(default_factory=lambda: HarmonicLoad(6, 1e4))
    excitation_frequency: float = 3800.0  # Hz
    uncertainty: UncertaintyConfig = field(default_factory=UncertaintyConfig)
    damage_fluctuation: bool = True
    frequency_fluctuation: bool = True
    # half-width of the damage and frequency fluctuation, relative
    fluctuation_bound: float = 0.05
    noise_sigma: float = 1e-6  # m
    sensor_dofs: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    master_seed: int = 0
    seed_domain: int = streams.TRAIN
    model: LumpedParameters = field(default_factory=LumpedParameters)

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(self.scenarios))
        object.__setattr__(self, "sensor_dofs", tuple(int(s) for s in self.sensor_dofs))
        if self.samples_per_scenario < 1:
            raise ConfigError("samples_per_scenario must be >= 1")
        if not self.sensor_dofs:
            raise ConfigError("sensor set must be nonempty")
        if len(set(self.sensor_dofs)) != len(self.sensor_dofs) or not all(
                1 <= s <= DOF_COUNT for s in self.sensor_dofs):
            raise ConfigError(f"sensor_dofs must be distinct values in 1..{DOF_COUNT}")
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        labels = [s.label for s in self.scenarios]
        if len(set(labels)) != len(labels):
            raise ConfigError("scenario labels must be unique")
        keys = [s.spring_index or 0 for s in self.scenarios]
        if len(set(keys)) != len(keys):
            raise ConfigError("a spring may appear in only one scenario")
        if self.excitation.dof_index > DOF_COUNT:
            raise ConfigError("excitation dof_index must be in 1..6")
        if not self.excitation_frequency >= 0:
            raise ConfigError("excitation_frequency must be >= 0")
        if not 0 <= self.fluctuation_bound < 1:
            raise ConfigError("fluctuation_bound must lie in [0, 1)")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.scenarios]

    def to_dict(self) -> dict:
        return {
            "scenarios": [
                {"label": s.label, "spring_index": s.spring_index, "severity": s.severity}
                for s in self.scenarios
            ],
            "samples_per_scenario": self.samples_per_scenario,
            "excitation": {"dof_index": self.excitation.dof_index,
                           "magnitude": self.excitation.magnitude},
            "excitation_frequency": self.excitation_frequency,
            "uncertainty": {"bound_fraction": self.uncertainty.bound_fraction},
            "damage_fluctuation": self.damage_fluctuation,
            "frequency_fluctuation": self.frequency_fluctuation,
            "fluctuation_bound": self.fluctuation_bound,
            "noise_sigma": self.noise_sigma,
            "sensor_dofs": list(self.sensor_dofs),
            "master_seed": self.master_seed,
            "seed_domain": self.seed_domain,
            "model": {"mass": self.model.mass, "stiffness": self.model.stiffness,
                      "alpha0": self.model.damping.alpha0, "beta0": self.model.damping.beta0},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(d)
        try:
            if "scenarios" in kw:
                kw["scenarios"] = tuple(DamageScenario(**s) for s in kw["scenarios"])
            if "excitation" in kw:
                kw["excitation"] = HarmonicLoad(**kw["excitation"])
            if "uncertainty" in kw:
                kw["uncertainty"] = UncertaintyConfig(**kw["uncertainty"])
            if "model" in kw:
                m = dict(kw["model"])
                damping = RayleighDamping(m.pop("alpha0", 1e3), m.pop("beta0", 3e-7))
                kw["model"] = LumpedParameters(damping=damping, **m)
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from exc

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def with_(self, **changes) -> "GenerationConfig":
        return replace(self, **changes)


def load_config(path) -> GenerationConfig:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return GenerationConfig.from_dict(d)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    config: GenerationConfig | None = None

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels).astype(str)
        if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[1] != len(self.feature_names):
            raise ConfigError("features, labels and feature_names disagree in shape")
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", x)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self):
        return self.features.shape[0]

    @property
    def classes(self) -> list[str]:
        """Distinct labels in order of first appearance."""
        _, first = np.unique(self.labels, return_index=True)
        return [str(self.labels[i]) for i in sorted(first)]

    def subset(self, index) -> "Dataset":
        return replace(self, features=self.features[index], labels=self.labels[index])

    def with_features(self, features) -> "Dataset":
        return replace(self, features=features)


def _feature_names(sensor_dofs) -> tuple[str, ...]:
    return tuple(f"sensor_{d}" for d in sensor_dofs)


def _sample(config: GenerationConfig, scenario: DamageScenario, index: int) -> np.ndarray:
    key = scenario.spring_index or 0
    fb = config.fluctuation_bound
    for attempt in range(MAX_RESAMPLE):
        g = streams.substream(config.master_seed, config.seed_domain, key, index, attempt)
        params = realize_stochastic(config.model, config.uncertainty, g)
        d = scenario.severity
        if config.damage_fluctuation and not scenario.healthy:
            d *= g.uniform(1.0 - fb, 1.0 + fb)
        f = config.excitation_frequency
        if config.frequency_fluctuation:
            f *= g.uniform(1.0 - fb, 1.0 + fb)
        sys = build_lumped(params, apply_damage(scenario, params.stiffness, severity=d))
        try:
            frf = frf_solve(sys, params.damping, config.excitation, [f])
        except SingularSystem:
            log.warning("singular solve for %s sample %d (attempt %d); resampling",
                        scenario.label, index, attempt)
            continue
        mag = frf.magnitude[0, [s - 1 for s in config.sensor_dofs]]
        if config.noise_sigma > 0:
            mag = mag + g.normal(0.0, config.noise_sigma, size=mag.shape)
        return np.maximum(mag, 0.0)
    raise SingularSystem(config.excitation_frequency)


def generate(config: GenerationConfig, workers: int = 1) -> Dataset:
    """Monte Carlo dataset; rows stacked scenario by scenario.

    The output depends only on ``config``; ``workers`` changes speed, not values.
    """
    jobs = [(s, i) for s in config.scenarios for i in range(config.samples_per_scenario)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda job: _sample(config, *job), jobs))
    else:
        rows = [_sample(config, s, i) for s, i in jobs]
    return Dataset(
        features=np.array(rows),
        labels=np.array([s.label for s, _ in jobs]),
        feature_names=_feature_names(config.sensor_dofs),
        config=config,
    )


@dataclass(frozen=True)
class NormalizationStats:
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "mean", np.asarray(self.mean, dtype=float))
        object.__setattr__(self, "std", np.asarray(self.std, dtype=float))
        if self.mean.shape != self.std.shape or np.any(self.std <= 0):
            raise ConfigError("normalization std must be positive per feature")

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "NormalizationStats":
        return cls(np.array(d["mean"], dtype=float), np.array(d["std"], dtype=float))


def _matrix(data) -> np.ndarray:
    return data.features if isinstance(data, Dataset) else np.asarray(data, dtype=float)


def fit_normalization(train) -> NormalizationStats:
    """Per-feature mean and sample standard deviation (ddof=1)."""
    x = _matrix(train)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigError("normalization needs at least two rows")
    std = x.std(axis=0, ddof=1)
    bad = np.flatnonzero(~(std > 0))
    if bad.size:
        raise ConfigError(f"degenerate feature: column {int(bad[0])} has zero variance")
    return NormalizationStats(x.mean(axis=0), std)


def apply_normalization(stats: NormalizationStats, data):
    x = _matrix(data)
    if x.shape[-1] != stats.mean.shape[0]:
        raise ConfigError(f"dimension mismatch: {x.shape[-1]} features, stats for {stats.mean.shape[0]}")
    z = (x - stats.mean) / stats.std
    return data.with_features(z) if isinstance(data, Dataset) else z


def invert_normalization(stats: NormalizationStats, data):
    x = _matrix(data)
    if x.shape[-1] != stats.mean.shape[0]:
        raise ConfigError("dimension mismatch")
    raw = x * stats.std + stats.mean
    return data.with_features(raw) if isinstance(data, Dataset) else raw


def split(data: Dataset, train_fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified random split; each class keeps round(fraction * n_k) training rows."""
    if not 0 < train_fraction < 1:
        raise ConfigError("train_fraction must lie strictly between 0 and 1")
    g = streams.substream(seed, streams.SPLIT)
    train_idx, val_idx = [], []
    for label in data.classes:
        idx = np.flatnonzero(data.labels == label)
        if idx.size < 2:
            raise ConfigError(f"class {label!r} has fewer than 2 samples")
        idx = g.permutation(idx)
        n_train = min(max(int(round(train_fraction * idx.size)), 1), idx.size - 1)
        train_idx.extend(idx[:n_train])
        val_idx.extend(idx[n_train:])
    return data.subset(np.sort(train_idx)), data.subset(np.sort(val_idx))


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sidecar_path(path) -> Path:
    return Path(f"{path}.meta.json")


def save(data: Dataset, path) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(data.feature_names) + ["label"])
    for row, label in zip(data.features, data.labels):
        w.writerow([f"{v:.16e}" for v in row] + [label])
    atomic_write_text(path, buf.getvalue())
    meta = {"feature_names": list(data.feature_names),
            "config": data.config.to_dict() if data.config else None,
            "master_seed": data.config.master_seed if data.config else None}
    atomic_write_text(sidecar_path(path), json.dumps(meta, indent=2) + "\n")


def load(path) -> Dataset:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise DatasetFormatError(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[-1] != "label" or not all(h.startswith("sensor_") for h in header[:-1]):
        raise DatasetFormatError(f"{path}: bad header {header}")
    names = tuple(header[:-1])
    feats, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DatasetFormatError(
                f"{path}: row {lineno} has {len(row)} columns, expected {len(header)}")
        try:
            feats.append([float(v) for v in row[:-1]])
        except ValueError as exc:
            raise DatasetFormatError(f"{path}: row {lineno}: {exc}") from exc
        labels.append(row[-1])
    if not feats:
        raise DatasetFormatError(f"{path}: no data rows")
    config = None
    meta_path = sidecar_path(path)
    if meta_path.exists():
        try:
            meta = json.loads(meta_path.read_text())
            if meta.get("config") is not None:
                config = GenerationConfig.from_dict(meta["config"])
        except (json.JSONDecodeError, ConfigError) as exc:
            raise DatasetFormatError(f"{meta_path}: {exc}") from exc
        if config is not None and _feature_names(config.sensor_dofs) != names:
            raise DatasetFormatError(f"{path}: header {names} does not match sidecar sensors")
    else:
        warnings.warn(f"{meta_path} not found; dataset config unknown", stacklevel=2)
    return Dataset(features=np.array(feats, dtype=float), labels=np.array(labels),
                   feature_names=names, config=config)
