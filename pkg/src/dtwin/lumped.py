"""Six-DOF fixed-free spring-mass chain with single-spring damage.

Spring ``i`` connects mass ``i-1`` to mass ``i`` (spring 1 is grounded), so
the healthy stiffness matrix has diagonal ``(2k, ..., 2k, k)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import HarmonicLoad, RayleighDamping, SystemMatrices, frf_solve
from .errors import ConfigError
from .physical import NOMINAL_DAMPING

DOF_COUNT = 6
DAMAGEABLE_SPRINGS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class LumpedParameters:
    mass: float = 0.3925  # kg
    stiffness: float = 4.914e8  # N/m
    damping: RayleighDamping = field(default_factory=lambda: NOMINAL_DAMPING)

    def __post_init__(self):
        if not (self.mass > 0 and self.stiffness > 0):
            raise ConfigError("lumped mass and stiffness must be > 0")


@dataclass(frozen=True)
class DamageScenario:
    label: str
    spring_index: int | None = None
    severity: float = 0.0

    def __post_init__(self):
        if self.spring_index is None:
            if self.severity != 0:
                raise ConfigError(f"scenario {self.label!r}: healthy scenario must have severity 0")
        else:
            if self.spring_index not in DAMAGEABLE_SPRINGS:
                raise ConfigError(f"scenario {self.label!r}: spring_index must be one of 1..5")
            if not 0 < self.severity:
                raise ConfigError(f"scenario {self.label!r}: damaged scenario needs severity > 0")
        if self.severity >= 1:
            raise ConfigError("total damage not representable (severity must be < 1)")
        if self.severity < 0:
            raise ConfigError("severity must be >= 0")

    @property
    def healthy(self) -> bool:
        return self.spring_index is None

    @classmethod
    def healthy_state(cls) -> "DamageScenario":
        return cls("healthy")

    @classmethod
    def at_spring(cls, spring: int, severity: float) -> "DamageScenario":
        return cls(f"d{spring}", spring, severity)


def default_scenarios(severity: float = 0.20) -> list[DamageScenario]:
    return [DamageScenario.healthy_state()] + [
        DamageScenario.at_spring(i, severity) for i in DAMAGEABLE_SPRINGS
    ]


@dataclass(frozen=True)
class UncertaintyConfig:
    """Independent ``Uniform(x*(1-eps), x*(1+eps))`` on A, E, rho and L."""

    bound_fraction: float = 0.05

    def __post_init__(self):
        if not 0 <= self.bound_fraction < 1:
            raise ConfigError("uncertainty bound_fraction must lie in [0, 1)")


def apply_damage(scenario: DamageScenario, base_k: float, severity: float | None = None) -> np.ndarray:
    """Per-spring stiffnesses k1..k6.

    ``severity`` overrides the scenario's nominal value (used for fluctuating
    damage draws).
    """
    d = scenario.severity if severity is None else severity
    if d >= 1:
        raise ConfigError("total damage not representable (severity must be < 1)")
    springs = np.full(DOF_COUNT, float(base_k))
    if not scenario.healthy:
        springs[scenario.spring_index - 1] *= 1.0 - d
    return springs


def build_lumped(params: LumpedParameters, springs) -> SystemMatrices:
    springs = np.asarray(springs, dtype=float)
    if springs.shape != (DOF_COUNT,) or np.any(springs <= 0):
        raise ConfigError("need six strictly positive spring stiffnesses")
    k = np.zeros((DOF_COUNT, DOF_COUNT))
    for i, ki in enumerate(springs):
        k[i, i] += ki
        if i > 0:
            k[i - 1, i - 1] += ki
            k[i - 1, i] -= ki
            k[i, i - 1] -= ki
    return SystemMatrices(mass=params.mass * np.eye(DOF_COUNT), stiffness=k)


def realize_stochastic(params: LumpedParameters, uc: UncertaintyConfig,
                       rng: np.random.Generator) -> LumpedParameters:
    """One realisation of (m, k) from random bar properties.

    Draw order is A, E, rho, L. Nominal m and k are rescaled by rho*A*L and
    E*A/L relative to their nominal values; damping stays deterministic.
    """
    eps = uc.bound_fraction
    a_r, e_r, rho_r, l_r = rng.uniform(1.0 - eps, 1.0 + eps, size=4)
    return LumpedParameters(
        mass=params.mass * (rho_r * a_r * l_r),
        stiffness=params.stiffness * (e_r * a_r / l_r),
        damping=params.damping,
    )


def stochastic_envelope(params: LumpedParameters, uc: UncertaintyConfig, load: HarmonicLoad,
                        frequencies_hz, dof: int, samples: int = 500, level: float = 0.95,
                        seed: int = 0, scenario: DamageScenario | None = None):
    """Pointwise ``level`` quantile band of ``|u_dof|`` over Monte Carlo realisations.

    Returns ``(lower, median, upper)`` arrays over ``frequencies_hz``.
    """
    scenario = scenario or DamageScenario.healthy_state()
    seq = np.random.SeedSequence(seed)
    mags = []
    for child in seq.spawn(samples):
        p = realize_stochastic(params, uc, np.random.default_rng(child))
        sys = build_lumped(p, apply_damage(scenario, p.stiffness))
        mags.append(frf_solve(sys, p.damping, load, frequencies_hz).magnitude[:, dof - 1])
    mags = np.array(mags)
    tail = (1.0 - level) / 2.0 * 100.0
    lo, med, hi = np.percentile(mags, [tail, 50.0, 100.0 - tail], axis=0)
    return lo, med, hi
