"""Finite-element emulation of the monitored asset: a fixed-free elastic bar."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import FrfResult, HarmonicLoad, RayleighDamping, SystemMatrices, frf_solve
from .errors import ConfigError

NOMINAL_DAMPING = RayleighDamping(alpha0=1e3, beta0=3e-7)
MAGNITUDE_FLOOR = 1e-12  # m


@dataclass(frozen=True)
class BarProperties:
    density: float = 7850.0  # kg/m^3
    elastic_modulus: float = 210e9  # Pa
    area: float = 4e-4  # m^2
    length: float = 1.0  # m
    element_count: int = 40
    damping: RayleighDamping = field(default_factory=lambda: NOMINAL_DAMPING)

    def __post_init__(self):
        for name in ("density", "elastic_modulus", "area", "length"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"bar {name} must be > 0")
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise ConfigError("element_count must be a positive integer")

    @property
    def wave_speed(self) -> float:
        return float(np.sqrt(self.elastic_modulus / self.density))


@dataclass(frozen=True)
class MeasurementNoise:
    sigma: float = 5e-4  # m
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("noise sigma must be >= 0")


@dataclass(frozen=True)
class MeasuredFrf:
    clean: FrfResult
    noisy_magnitude: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return self.clean.frequencies


def assemble_bar(props: BarProperties) -> SystemMatrices:
    """Linear two-node elements; node 0 is clamped and removed."""
    n = props.element_count
    le = props.length / n
    me = props.density * props.area * le * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
    ke = props.elastic_modulus * props.area / le * np.array([[1.0, -1.0], [-1.0, 1.0]])
    m = np.zeros((n + 1, n + 1))
    k = np.zeros((n + 1, n + 1))
    for e in range(n):
        m[e:e + 2, e:e + 2] += me
        k[e:e + 2, e:e + 2] += ke
    return SystemMatrices(mass=m[1:, 1:], stiffness=k[1:, 1:])


def measure_frf(props: BarProperties, load: HarmonicLoad, frequencies_hz,
                noise: MeasurementNoise) -> MeasuredFrf:
    """Noiseless FRF plus independent Gaussian noise on every magnitude."""
    clean = frf_solve(assemble_bar(props), props.damping, load, frequencies_hz)
    return MeasuredFrf(clean=clean, noisy_magnitude=noisy_magnitude(clean, noise))


def noisy_magnitude(frf: FrfResult, noise: MeasurementNoise) -> np.ndarray:
    mag = frf.magnitude
    if noise.sigma == 0:
        return mag
    rng = np.random.default_rng(noise.seed)
    return np.maximum(mag + rng.normal(0.0, noise.sigma, size=mag.shape), MAGNITUDE_FLOOR)
