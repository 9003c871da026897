"""Scripted accuracy studies: reference case, variations, sweeps, generalization
and sample size.

Every run is a pure function of its configuration and master seed. Multi-seed
studies use master seeds ``seed, seed+1, ...``; within one seed all variants
share their random draws (common random numbers), so differences between
variants are not masked by sampling noise.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import rng as streams
from .classify import confusion, cross_validate, fit
from .classify.evaluation import accuracy
from .dataset import Dataset, GenerationConfig, atomic_write_text, generate, split
from .dynamics import HarmonicLoad
from .lumped import DOF_COUNT, UncertaintyConfig, default_scenarios

log = logging.getLogger(__name__)

CLASSIFIERS = ("qda", "lda", "knn", "tree")
TRAIN_PER_CLASS = 200
VALIDATION_PER_CLASS = 100
FOLDS = 5

DEFAULT_DAMAGE_LEVELS = (0.05, 0.10, 0.15, 0.20, 0.25)
DEFAULT_BOUNDS = (0.025, 0.05, 0.10)
DEFAULT_FREQUENCIES = tuple(sorted(set(range(2000, 8001, 500)) | {3800}))
ALL_SENSORS = tuple(range(1, DOF_COUNT + 1))


def _drop(*dofs):
    return tuple(s for s in ALL_SENSORS if s not in dofs)


DEFAULT_SENSOR_SUBSETS = (
    (ALL_SENSORS,)
    + tuple(_drop(s) for s in ALL_SENSORS)
    + (_drop(3, 5), _drop(2, 3, 5))
)
DEFAULT_GENERALIZATION_FREQUENCIES = (3600.0, 3800.0, 4000.0)
DEFAULT_SAMPLE_SIZES = (90, 450, 900, 1800)


@dataclass
class RunRecord:
    parameter: str
    value: object
    seed: int
    config_digest: str
    accuracy: float
    protocol: str  # "cv5" or "holdout"
    classifier: str = "qda"
    reference: bool = False
    confusion: list | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class ExperimentReport:
    experiment: str
    seed: int
    records: list[RunRecord]
    configs: dict  # digest -> GenerationConfig dict, enough to regenerate every run
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.records = sorted(self.records, key=_record_key)

    def summary(self) -> list[dict]:
        """Mean and coefficient of variation per (classifier, parameter, value)."""
        groups: dict = {}
        for r in self.records:
            groups.setdefault((r.classifier, r.parameter, _value_key(r.value)), []).append(r)
        rows = []
        for (clf, param, _), recs in groups.items():
            acc = np.array([r.accuracy for r in recs])
            mean = float(acc.mean())
            cov = float(acc.std(ddof=1) / mean) if acc.size >= 2 and mean > 0 else None
            rows.append({
                "experiment": self.experiment, "classifier": clf, "parameter": param,
                "value": recs[0].value, "runs": int(acc.size), "accuracy_mean": mean,
                "accuracy_cov": cov, "reference": any(r.reference for r in recs),
            })
        return sorted(rows, key=lambda r: (r["classifier"], r["parameter"], _natural(r["value"])))

    def lookup(self, parameter: str, value=None, classifier: str = "qda") -> list[RunRecord]:
        return [r for r in self.records if r.parameter == parameter and r.classifier == classifier
                and (value is None or _value_key(r.value) == _value_key(value))]

    def mean(self, parameter: str, value=None, classifier: str = "qda") -> float:
        return float(np.mean([r.accuracy for r in self.lookup(parameter, value, classifier)]))

    def to_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "seed": self.seed,
            "metadata": self.metadata,
            "summary": self.summary(),
            "records": [asdict(r) for r in self.records],
            "configs": self.configs,
        }

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "parameter", "value", "accuracy_mean", "accuracy_cov"])
        for row in self.summary():
            cov = "" if row["accuracy_cov"] is None else f"{row['accuracy_cov']:.6g}"
            w.writerow([row["experiment"], row["parameter"], _value_text(row["value"]),
                        f"{row['accuracy_mean']:.6g}", cov])
        return buf.getvalue()

    def write(self, out_dir) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        stem = f"{self.experiment}_seed{self.seed}"
        jpath, cpath = out_dir / f"{stem}.json", out_dir / f"{stem}.csv"
        atomic_write_text(jpath, json.dumps(self.to_dict(), indent=2, default=_json_default) + "\n")
        atomic_write_text(cpath, self.summary_csv())
        return jpath, cpath


def _value_key(v):
    return json.dumps(v, default=_json_default)


def _natural(v):
    if isinstance(v, (int, float)):
        return (0, float(v), "")
    if isinstance(v, (list, tuple)):
        return (1, -len(v), _value_key(v))
    return (2, 0.0, str(v))


def _value_text(v) -> str:
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


def _record_key(r: RunRecord):
    return (r.config_digest, r.seed, r.classifier, r.parameter, _value_key(r.value))


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o).__name__)


def seeds_for(seed: int, repeats: int) -> list[int]:
    return [seed + r for r in range(repeats)]


def reference_config(seed: int = 0, **changes) -> GenerationConfig:
    return GenerationConfig(master_seed=seed).with_(**changes)


def _map(fn, jobs, workers: int):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _cv_job(job):
    parameter, value, config, classifiers, reference = job
    data = generate(config)
    return [
        RunRecord(parameter, clf if parameter == "classifier" else value, config.master_seed,
                  config.digest(), cross_validate(data, FOLDS, clf, seed=config.master_seed),
                  "cv5", clf, reference)
        for clf in classifiers
    ]


def _holdout(train_cfg: GenerationConfig, test_cfg: GenerationConfig, classifier: str = "qda"):
    train = generate(train_cfg.with_(samples_per_scenario=TRAIN_PER_CLASS))
    test = generate(_test_config(test_cfg))
    model = fit(classifier, train)
    return model, test


def _reference_job(seed):
    config = reference_config(seed)
    records = _cv_job(("classifier", None, config, CLASSIFIERS, True))
    model, test = _holdout(config, config)
    rep = confusion(model, test)
    records.append(RunRecord(
        "holdout_confusion", "qda", seed, config.digest(), rep.accuracy, "holdout", "qda", True,
        confusion=rep.matrix.counts.tolist(),
        extra={"labels": list(rep.matrix.labels), "recall": rep.recall,
               "false_positive_rate": rep.false_positive_rate,
               "false_negative_rate": rep.false_negative_rate},
    ))
    return records


def _configs(*configs) -> dict:
    return {c.digest(): c.to_dict() for c in configs}


def run_reference(seed: int = 0, repeats: int = 1, workers: int = 1) -> ExperimentReport:
    """Default dataset: 5-fold CV for all four classifiers, then QDA trained on
    200 rows per class and scored on a fresh 100 per class."""
    seeds = seeds_for(seed, repeats)
    records = [r for recs in _map(_reference_job, seeds, workers) for r in recs]
    return ExperimentReport("reference", seed, records,
                            _configs(*(reference_config(s) for s in seeds)),
                            {"protocol": "cv5 per classifier; holdout confusion for qda",
                             "seeds": seeds})


def variation_configs(seed: int) -> dict[str, GenerationConfig]:
    base = reference_config(seed)
    return {
        "reference": base,
        "lower_damage_10": base.with_(scenarios=tuple(default_scenarios(0.10))),
        "sensors_23456": base.with_(sensor_dofs=(2, 3, 4, 5, 6)),
        "noise_2sigma": base.with_(noise_sigma=2 * base.noise_sigma),
        "bounds_10": base.with_(uncertainty=UncertaintyConfig(0.10), fluctuation_bound=0.10),
        "frequency_7000": base.with_(excitation_frequency=7000.0),
        "force_dof1": base.with_(excitation=HarmonicLoad(1, base.excitation.magnitude)),
    }


def _sweep(experiment: str, parameter: str, values, make_config, reference_value, seed: int,
           repeats: int, workers: int, metadata: dict | None = None) -> ExperimentReport:
    if not values:
        raise ValueError(f"{experiment}: empty grid")
    values = list(values)
    if reference_value is not None and reference_value not in values:
        values.append(reference_value)
    jobs = [(parameter, v, make_config(v, s), ("qda",), v == reference_value)
            for s in seeds_for(seed, repeats) for v in values]
    records = [r for recs in _map(_cv_job, jobs, workers) for r in recs]
    meta = {"protocol": "cv5", "seeds": seeds_for(seed, repeats)}
    meta.update(metadata or {})
    return ExperimentReport(experiment, seed, records, _configs(*(j[2] for j in jobs)), meta)


def sweep_variations(seed: int = 0, repeats: int = 1, workers: int = 1) -> ExperimentReport:
    names = list(variation_configs(seed))
    return _sweep("variations", "case", names, lambda v, s: variation_configs(s)[v], "reference",
                  seed, repeats, workers,
                  {"noise_2sigma": "dataset noise_sigma doubled to 2e-6 m",
                   "bounds_10": "parameter, damage and frequency bounds all widened to 10%"})


def sweep_damage(levels=DEFAULT_DAMAGE_LEVELS, seed: int = 0, repeats: int = 1,
                 workers: int = 1) -> ExperimentReport:
    return _sweep("damage", "severity", [float(v) for v in levels],
                  lambda v, s: reference_config(s, scenarios=tuple(default_scenarios(v))),
                  0.20, seed, repeats, workers)


def sweep_uncertainty(bounds=DEFAULT_BOUNDS, seed: int = 0, repeats: int = 1,
                      workers: int = 1) -> ExperimentReport:
    return _sweep("uncertainty", "bound_fraction", [float(v) for v in bounds],
                  lambda v, s: reference_config(s, uncertainty=UncertaintyConfig(v),
                                                fluctuation_bound=v),
                  0.05, seed, repeats, workers)


def sweep_frequency(freqs=DEFAULT_FREQUENCIES, seed: int = 0, repeats: int = 1,
                    workers: int = 1) -> ExperimentReport:
    return _sweep("frequency", "excitation_frequency", [float(v) for v in freqs],
                  lambda v, s: reference_config(s, excitation_frequency=v),
                  3800.0, seed, repeats, workers)


def sweep_sensors(subsets=DEFAULT_SENSOR_SUBSETS, seed: int = 0, repeats: int = 1,
                  workers: int = 1) -> ExperimentReport:
    return _sweep("sensors", "sensor_dofs", [list(map(int, s)) for s in subsets],
                  lambda v, s: reference_config(s, sensor_dofs=tuple(v)),
                  list(ALL_SENSORS), seed, repeats, workers)


GENERALIZATION_VARIANTS = {
    # name: (frequency fluctuation in training data, in test data)
    "fluctuating": (True, True),
    "fixed": (False, False),
    "fluctuating_train_fixed_test": (True, False),
}


def _generalization_job(job):
    seed, f_train, f_test, variant = job
    train_fl, test_fl = GENERALIZATION_VARIANTS[variant]
    train_cfg = reference_config(seed, frequency_fluctuation=train_fl, excitation_frequency=f_train)
    test_cfg = reference_config(seed, frequency_fluctuation=test_fl, excitation_frequency=f_test)
    model, test = _holdout(train_cfg, test_cfg)
    return RunRecord(
        variant, [f_train, f_test], seed,
        train_cfg.with_(samples_per_scenario=TRAIN_PER_CLASS).digest(), accuracy(model, test),
        "holdout", "qda", variant == "fluctuating" and f_train == f_test == 3800.0,
        extra={"train_frequency": f_train, "test_frequency": f_test,
               "test_config_digest": _test_config(test_cfg).digest()},
    )


def _test_config(cfg: GenerationConfig) -> GenerationConfig:
    return cfg.with_(samples_per_scenario=VALIDATION_PER_CLASS, seed_domain=streams.VALIDATION)


def generalization_study(train_freqs=DEFAULT_GENERALIZATION_FREQUENCIES,
                         test_freqs=DEFAULT_GENERALIZATION_FREQUENCIES, seed: int = 0,
                         repeats: int = 1, workers: int = 1,
                         variants=tuple(GENERALIZATION_VARIANTS)) -> ExperimentReport:
    """Train at one excitation frequency, validate at another.

    Variants (see ``GENERALIZATION_VARIANTS``) switch the +-5% frequency
    fluctuation on or off separately for training and test data. Within a
    seed, all variants validate against the same draws.
    """
    jobs = [(s, float(ft), float(fv), v) for s in seeds_for(seed, repeats) for v in variants
            for ft in train_freqs for fv in test_freqs]
    records = _map(_generalization_job, jobs, workers)
    cfgs = {}
    for s, ft, fv, v in jobs:
        train_fl, test_fl = GENERALIZATION_VARIANTS[v]
        cfgs.update(_configs(
            reference_config(s, frequency_fluctuation=train_fl, excitation_frequency=ft,
                             samples_per_scenario=TRAIN_PER_CLASS),
            _test_config(reference_config(s, frequency_fluctuation=test_fl, excitation_frequency=fv))))
    return ExperimentReport("generalization", seed, records, cfgs,
                            {"protocol": "holdout: 200/class train, fresh 100/class validation",
                             "value": "[train_frequency, test_frequency]",
                             "seeds": seeds_for(seed, repeats)})


def _prefix(data: Dataset, per_class: int) -> Dataset:
    idx = np.concatenate([np.flatnonzero(data.labels == c)[:per_class] for c in data.classes])
    return data.subset(idx)


def _sample_size_job(job):
    seed, sizes = job
    classes = len(reference_config(seed).scenarios)
    per_class = {n: n // classes for n in sizes}
    # counter-based streams make a smaller dataset the per-class prefix of a larger one
    full = generate(reference_config(seed, samples_per_scenario=max(per_class.values())))
    out = []
    for n in sizes:
        data = _prefix(full, per_class[n])
        train, val = split(data, 2.0 / 3.0, seed)
        model = fit("qda", train)
        cfg = reference_config(seed, samples_per_scenario=per_class[n])
        out.append(RunRecord("total_points", n, seed, cfg.digest(), accuracy(model, val),
                             "holdout", "qda", n == 1800,
                             extra={"per_class": per_class[n], "train_rows": len(train),
                                    "validation_rows": len(val)}))
    return out


def sample_size_study(sizes=DEFAULT_SAMPLE_SIZES, repetitions: int = 100, seed: int = 0,
                      workers: int = 1) -> ExperimentReport:
    """Mean and CoV of held-out QDA accuracy per total dataset size (2/3 train)."""
    if not sizes:
        raise ValueError("empty size grid")
    classes = len(reference_config(seed).scenarios)
    for n in sizes:
        if n % classes:
            log.warning("%d points do not divide into %d classes; using %d per class",
                        n, classes, n // classes)
    seeds = seeds_for(seed, repetitions)
    records = [r for recs in _map(_sample_size_job, [(s, tuple(sizes)) for s in seeds], workers)
               for r in recs]
    cfgs = {}
    for s in seeds:
        cfgs.update(_configs(*(reference_config(s, samples_per_scenario=n // classes) for n in sizes)))
    return ExperimentReport("samplesize", seed, records, cfgs,
                            {"protocol": "stratified 2/3 train, 1/3 validation", "seeds": seeds})


SWEEPS = {
    "reference": run_reference,
    "variations": sweep_variations,
    "damage": sweep_damage,
    "uncertainty": sweep_uncertainty,
    "frequency": sweep_frequency,
    "sensors": sweep_sensors,
    "generalization": generalization_study,
    "samplesize": sample_size_study,
}
