"""Command-line front end.

Exit codes: 0 success, 2 bad input or configuration, 3 numerical failure,
4 ``diagnose`` flagged at least one damaged signal.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import classify, experiments
from .classify.persist import load_model, save_model
from .dataset import GenerationConfig, atomic_write_text, generate, load, load_config, save
from .dynamics import HarmonicLoad, RayleighDamping, frf_solve, modal_analysis
from .errors import ConfigError, NumericalError
from .lumped import DamageScenario, LumpedParameters, apply_damage, build_lumped
from .physical import BarProperties, MeasurementNoise, assemble_bar, noisy_magnitude

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_WARNING = 0, 2, 3, 4
OUT_DIR_ENV = "DTWIN_OUT_DIR"
HEALTHY = "healthy"

log = logging.getLogger("dtwin")


def _model_section(path, key: str) -> dict:
    if not path:
        return {}
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return dict(d.get(key, {}))


def bar_from_config(path) -> BarProperties:
    d = _model_section(path, "bar")
    try:
        damping = RayleighDamping(d.pop("alpha0", 1e3), d.pop("beta0", 3e-7))
        return BarProperties(damping=damping, **d)
    except TypeError as exc:
        raise ConfigError(f"bad bar config: {exc}") from exc


def lumped_from_config(path) -> LumpedParameters:
    d = _model_section(path, "model")
    try:
        damping = RayleighDamping(d.pop("alpha0", 1e3), d.pop("beta0", 3e-7))
        return LumpedParameters(damping=damping, **d)
    except TypeError as exc:
        raise ConfigError(f"bad model config: {exc}") from exc


def _system(args):
    if args.model == "fem":
        bar = bar_from_config(args.config)
        return assemble_bar(bar), bar.damping
    params = lumped_from_config(args.config)
    spring = getattr(args, "damage_spring", None)
    scenario = (DamageScenario.at_spring(spring, args.severity) if spring
                else DamageScenario.healthy_state())
    return build_lumped(params, apply_damage(scenario, params.stiffness)), params.damping


def _emit(text: str, out) -> None:
    if out:
        atomic_write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_modal(args) -> int:
    sys_, damping = _system(args)
    modes = modal_analysis(sys_, damping)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "frequency_hz", "damping_ratio"])
    for i, (f, z) in enumerate(zip(modes.natural_frequencies, modes.damping_ratios), start=1):
        w.writerow([i, f"{f:.6f}", f"{z:.6f}"])
    if args.out:
        atomic_write_text(args.out, buf.getvalue())
    print(f"{'mode':>4}  {'f [Hz]':>12}  {'zeta [%]':>8}")
    for i, (f, z) in enumerate(zip(modes.natural_frequencies, modes.damping_ratios), start=1):
        print(f"{i:>4}  {f:>12.2f}  {100 * z:>8.3f}")
    return EXIT_OK


def frf_csv(frf, noisy=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    n = frf.response.shape[1]
    header = ["frequency_hz"]
    for i in range(1, n + 1):
        header += [f"u{i}_real", f"u{i}_imag", f"u{i}_magnitude"]
        if noisy is not None:
            header.append(f"u{i}_noisy_magnitude")
    w.writerow(header)
    for j, f in enumerate(frf.frequencies):
        row = [f"{f:.10g}"]
        for i in range(n):
            u = frf.response[j, i]
            row += [f"{u.real:.16e}", f"{u.imag:.16e}", f"{abs(u):.16e}"]
            if noisy is not None:
                row.append(f"{noisy[j, i]:.16e}")
        w.writerow(row)
    return buf.getvalue()


def cmd_frf(args) -> int:
    if not args.fmin < args.fmax or args.fmin < 0:
        raise ConfigError("need 0 <= fmin < fmax")
    if args.steps < 2:
        raise ConfigError("steps must be >= 2")
    sys_, damping = _system(args)
    freqs = np.linspace(args.fmin, args.fmax, args.steps)
    dof = sys_.dof_count if args.force_dof is None else args.force_dof
    frf = frf_solve(sys_, damping, HarmonicLoad(dof, args.force_n), freqs)
    noisy = None
    if args.noise_sigma > 0:
        noisy = noisy_magnitude(frf, MeasurementNoise(args.noise_sigma, args.seed))
    _emit(frf_csv(frf, noisy), args.out)
    return EXIT_OK


def cmd_generate(args) -> int:
    config = load_config(args.config) if args.config else GenerationConfig()
    if args.seed is not None:
        config = config.with_(master_seed=args.seed)
    t = time.perf_counter()
    data = generate(config, workers=args.workers)
    save(data, args.out)
    print(f"wrote {len(data)} rows x {data.features.shape[1]} features to {args.out} "
          f"(config {config.digest()}, {time.perf_counter() - t:.2f} s)")
    return EXIT_OK


def cmd_train(args) -> int:
    data = load(args.data)
    model = classify.fit(args.classifier, data)
    save_model(model, args.out)
    print(f"trained {args.classifier} on {len(data)} rows, classes {list(model.classes)}; "
          f"training accuracy {classify.accuracy(model, data):.4f} -> {args.out}")
    return EXIT_OK


def cmd_crossval(args) -> int:
    data = load(args.data)
    mean, folds = classify.cross_validate(data, args.folds, args.classifier, seed=args.seed,
                                          return_folds=True)
    print(f"{args.classifier} {args.folds}-fold accuracy {mean:.4f} "
          f"(folds: {', '.join(f'{f:.4f}' for f in folds)})")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    data = load(args.data)
    rep = classify.confusion(model, data)
    _emit(rep.matrix.to_csv(), args.out)
    print(f"accuracy {rep.accuracy:.4f}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


def cmd_sweep(args) -> int:
    fn = experiments.SWEEPS[args.name]
    kw = {"seed": args.seed, "workers": args.workers}
    if args.name == "samplesize":
        kw["repetitions"] = args.repeats if args.repeats is not None else 100
    else:
        kw["repeats"] = args.repeats if args.repeats is not None else 1
    report = fn(**kw)
    out = args.out or os.environ.get(OUT_DIR_ENV) or "results"
    jpath, cpath = report.write(out)
    for row in report.summary():
        cov = "" if row["accuracy_cov"] is None else f"  cov {row['accuracy_cov']:.4f}"
        print(f"{row['parameter']}={experiments._value_text(row['value'])}: "
              f"{100 * row['accuracy_mean']:.1f}%{cov}")
    print(f"wrote {jpath} and {cpath}")
    return EXIT_OK


def read_signals(path, n_features: int) -> np.ndarray:
    try:
        rows = [r for r in csv.reader(io.StringIO(Path(path).read_text())) if r]
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if rows and not _numeric(rows[0]):
        rows = rows[1:]
    if not rows:
        raise ConfigError(f"{path}: no signal rows")
    out = []
    for i, r in enumerate(rows, start=1):
        if len(r) != n_features:
            raise ConfigError(f"{path}: signal {i} has {len(r)} values, model expects {n_features}")
        try:
            out.append([float(v) for v in r])
        except ValueError as exc:
            raise ConfigError(f"{path}: signal {i}: {exc}") from exc
    x = np.array(out)
    if not np.all(np.isfinite(x)):
        raise ConfigError(f"{path}: non-finite values")
    return x


def _numeric(row) -> bool:
    try:
        [float(v) for v in row]
        return True
    except ValueError:
        return False


def _feature_count(model) -> int:
    for attr in ("means", "points"):
        if hasattr(model, attr):
            return getattr(model, attr).shape[1]
    return model.normalization.mean.shape[0]


def cmd_diagnose(args) -> int:
    model = load_model(args.model)
    x = read_signals(args.input, _feature_count(model))
    labels = model.predict(x)
    post = model.posterior(x)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["signal", "label", *[f"p_{c}" for c in model.classes], "warning"])
    for i, (label, p) in enumerate(zip(labels, post), start=1):
        w.writerow([i, label, *[f"{v:.6g}" for v in p], int(label != HEALTHY)])
    _emit(buf.getvalue(), args.out)
    flagged = int(np.sum(labels != HEALTHY))
    if flagged:
        print(f"WARNING: damage indicated in {flagged} of {len(labels)} signals", file=sys.stderr)
        return EXIT_WARNING
    return EXIT_OK


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    """Show defaults, except for options that default to None."""

    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dtwin", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    defaults = _HelpFormatter

    def model_args(sp):
        sp.add_argument("--model", choices=("fem", "lumped"), default="lumped",
                        help="40-element bar or 6-DOF lumped chain")
        sp.add_argument("--config", help="JSON with a 'bar' or 'model' section overriding nominals")
        sp.add_argument("--damage-spring", type=int, choices=range(1, 6),
                        help="lumped only: damaged spring")
        sp.add_argument("--severity", type=float, default=0.2, help="damage severity d in [0, 1)")

    sp = sub.add_parser("modal", help="natural frequencies and damping ratios", formatter_class=defaults)
    model_args(sp)
    sp.add_argument("--out", help="also write the table as CSV")
    sp.set_defaults(func=cmd_modal)

    sp = sub.add_parser("frf", help="frequency response CSV", formatter_class=defaults)
    model_args(sp)
    sp.add_argument("--force-dof", type=int, default=None,
                    help="1-based loaded DOF (default: free end)")
    sp.add_argument("--force-n", type=float, default=1e4, help="force magnitude [N]")
    sp.add_argument("--fmin", type=float, default=0.0, help="first frequency [Hz]")
    sp.add_argument("--fmax", type=float, default=8000.0, help="last frequency [Hz]")
    sp.add_argument("--steps", type=int, default=801, help="number of frequency points")
    sp.add_argument("--noise-sigma", type=float, default=0.0,
                    help="std of Gaussian noise added to magnitudes [m]; 5e-4 for the measured bar")
    sp.add_argument("--seed", type=int, default=0, help="noise seed")
    sp.add_argument("--out", help="output CSV (default: stdout)")
    sp.set_defaults(func=cmd_frf)

    sp = sub.add_parser("generate", help="Monte Carlo training dataset", formatter_class=defaults)
    sp.add_argument("--config", help="GenerationConfig JSON (default: reference case)")
    sp.add_argument("--out", required=True, help="dataset CSV; a .meta.json sidecar is written next to it")
    sp.add_argument("--seed", type=int, help="override master_seed")
    sp.add_argument("--workers", type=int, default=1, help="threads for sample generation")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("train", help="fit a classifier", formatter_class=defaults)
    sp.add_argument("--data", required=True, help="training dataset CSV")
    sp.add_argument("--classifier", choices=sorted(classify.FITTERS), default="qda", help="classifier kind")
    sp.add_argument("--out", required=True, help="model JSON")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("crossval", help="stratified k-fold accuracy", formatter_class=defaults)
    sp.add_argument("--data", required=True, help="dataset CSV")
    sp.add_argument("--classifier", choices=sorted(classify.FITTERS), default="qda", help="classifier kind")
    sp.add_argument("--folds", type=int, default=5, help="number of stratified folds")
    sp.add_argument("--seed", type=int, default=0, help="fold assignment seed")
    sp.set_defaults(func=cmd_crossval)

    sp = sub.add_parser("evaluate", help="confusion matrix CSV", formatter_class=defaults)
    sp.add_argument("--model", required=True, help="model JSON")
    sp.add_argument("--data", required=True, help="labelled validation CSV")
    sp.add_argument("--out", help="confusion CSV (default: stdout)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("sweep", help="accuracy studies", formatter_class=defaults)
    sp.add_argument("--name", choices=list(experiments.SWEEPS), required=True, help="study to run")
    sp.add_argument("--seed", type=int, default=0, help="first master seed")
    sp.add_argument("--repeats", type=int, default=None,
                    help="master seeds (repetitions for samplesize; default 1, or 100 for samplesize)")
    sp.add_argument("--workers", type=int, default=1, help="worker processes")
    sp.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or ./results)")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("diagnose", help="classify measured signals; exit 4 on damage",
                        formatter_class=defaults)
    sp.add_argument("--model", required=True, help="model JSON")
    sp.add_argument("--input", required=True, help="CSV, one row of raw sensor magnitudes per signal")
    sp.add_argument("--out", help="verdict CSV (default: stdout)")
    sp.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
