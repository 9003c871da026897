"""Linear structural dynamics kernel.

Modal analysis, Rayleigh damping and steady-state harmonic response for any
discrete system ``M u'' + C u' + K u = f`` with ``C = alpha0*M + beta0*K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .errors import ConfigError, InvalidMassMatrix, ModalAnalysisFailed, SingularSystem

# reciprocal 1-norm condition number below which a dynamic stiffness is singular
RCOND_SINGULAR = 1e-14


@dataclass(frozen=True)
class SystemMatrices:
    mass: np.ndarray
    stiffness: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float)
        k = np.asarray(self.stiffness, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ConfigError(f"mass must be a square matrix, got shape {m.shape}")
        if k.shape != m.shape:
            raise ConfigError(f"stiffness shape {k.shape} does not match mass {m.shape}")
        if not np.allclose(k, k.T, rtol=1e-12, atol=0.0):
            raise ConfigError("stiffness matrix is not symmetric")
        m.setflags(write=False)
        k.setflags(write=False)
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "stiffness", k)

    @property
    def dof_count(self) -> int:
        return self.mass.shape[0]


@dataclass(frozen=True)
class RayleighDamping:
    alpha0: float = 0.0  # 1/s, mass-proportional
    beta0: float = 0.0  # s, stiffness-proportional

    def __post_init__(self):
        if self.alpha0 < 0 or self.beta0 < 0:
            raise ConfigError("Rayleigh coefficients must be non-negative")

    def matrix(self, sys: SystemMatrices) -> np.ndarray:
        return self.alpha0 * sys.mass + self.beta0 * sys.stiffness

    def ratio(self, omega):
        """Modal damping ratio at circular frequency ``omega`` (rad/s)."""
        omega = np.asarray(omega, dtype=float)
        return self.alpha0 / (2.0 * omega) + self.beta0 * omega / 2.0


@dataclass(frozen=True)
class ModalData:
    natural_frequencies: np.ndarray  # Hz, ascending
    damping_ratios: np.ndarray
    mode_shapes: np.ndarray  # columns, mass-normalised

    @property
    def omegas(self) -> np.ndarray:
        return 2.0 * np.pi * self.natural_frequencies


@dataclass(frozen=True)
class HarmonicLoad:
    dof_index: int  # 1-based
    magnitude: float  # N

    def __post_init__(self):
        if int(self.dof_index) != self.dof_index or self.dof_index < 1:
            raise ConfigError(f"load dof_index must be a positive integer, got {self.dof_index}")
        if not self.magnitude > 0:
            raise ConfigError(f"load magnitude must be > 0, got {self.magnitude}")

    def vector(self, dof_count: int) -> np.ndarray:
        if self.dof_index > dof_count:
            raise ConfigError(f"load dof_index {self.dof_index} exceeds dof_count {dof_count}")
        f = np.zeros(dof_count)
        f[self.dof_index - 1] = self.magnitude
        return f


@dataclass(frozen=True)
class FrfResult:
    frequencies: np.ndarray  # Hz
    response: np.ndarray  # complex, shape (n_freq, dof_count), metres

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.response)


def _mass_cholesky(mass: np.ndarray) -> np.ndarray:
    if not np.allclose(mass, mass.T, rtol=1e-12, atol=0.0):
        raise InvalidMassMatrix("not symmetric")
    try:
        return la.cholesky(mass, lower=True)
    except la.LinAlgError as exc:
        raise InvalidMassMatrix("not positive definite") from exc


def modal_analysis(sys: SystemMatrices, damping: RayleighDamping) -> ModalData:
    """Solve ``K phi = lambda M phi`` through a Cholesky reduction of ``M``.

    Returns every mode, sorted by frequency, with mass-normalised shapes and
    the Rayleigh damping ratio of each mode.
    """
    chol = _mass_cholesky(sys.mass)
    # A = L^-1 K L^-T is symmetric; its eigenvectors y give phi = L^-T y
    tmp = la.solve_triangular(chol, sys.stiffness, lower=True)
    a = la.solve_triangular(chol, tmp.T, lower=True)
    a = 0.5 * (a + a.T)
    try:
        lam, y = la.eigh(a)
    except la.LinAlgError as exc:
        raise ModalAnalysisFailed(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise ModalAnalysisFailed("non-finite eigenvalues")
    if np.any(lam <= 0):
        raise ModalAnalysisFailed("stiffness is not positive definite (unconstrained system?)")
    phi = la.solve_triangular(chol.T, y, lower=False)
    omega = np.sqrt(lam)
    return ModalData(
        natural_frequencies=omega / (2.0 * np.pi),
        damping_ratios=damping.ratio(omega),
        mode_shapes=phi,
    )


def _rcond(a: np.ndarray) -> float:
    try:
        inv = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        return 0.0
    norm = np.linalg.norm(a, 1) * np.linalg.norm(inv, 1)
    if not np.isfinite(norm) or norm == 0:
        return 0.0
    return 1.0 / norm


def dynamic_stiffness(sys: SystemMatrices, damping: RayleighDamping, frequency_hz: float) -> np.ndarray:
    w = 2.0 * np.pi * frequency_hz
    return sys.stiffness - w * w * sys.mass + 1j * w * damping.matrix(sys)


def frf_solve(sys: SystemMatrices, damping: RayleighDamping, load: HarmonicLoad,
              frequencies_hz) -> FrfResult:
    """Steady-state complex displacement ``(K - w^2 M + j w C)^-1 f`` per frequency."""
    freqs = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
    if np.any(freqs < 0) or not np.all(np.isfinite(freqs)):
        raise ConfigError("frequencies must be finite and non-negative")
    f = load.vector(sys.dof_count)
    out = np.empty((freqs.size, sys.dof_count), dtype=complex)
    for i, fr in enumerate(freqs):
        z = dynamic_stiffness(sys, damping, fr)
        if _rcond(z) < RCOND_SINGULAR:
            raise SingularSystem(fr)
        out[i] = np.linalg.solve(z, f)
    return FrfResult(frequencies=freqs, response=out)


def frf_modal_superposition(sys: SystemMatrices, damping: RayleighDamping, load: HarmonicLoad,
                            frequencies_hz) -> FrfResult:
    """Same contract as :func:`frf_solve`, evaluated in modal coordinates.

    Kept independent of the direct solver so the two can check each other.
    """
    freqs = np.atleast_1d(np.asarray(frequencies_hz, dtype=float))
    modes = modal_analysis(sys, damping)
    phi = modes.mode_shapes
    wn = modes.omegas
    modal_force = phi.T @ load.vector(sys.dof_count)
    w = 2.0 * np.pi * freqs[:, None]
    # modal damping term 2 zeta_i w_i = alpha0 + beta0 w_i^2
    denom = wn**2 - w**2 + 1j * w * (damping.alpha0 + damping.beta0 * wn**2)
    if np.any(denom == 0):
        bad = freqs[np.any(denom == 0, axis=1)][0]
        raise SingularSystem(bad)
    q = modal_force / denom
    return FrfResult(frequencies=freqs, response=q @ phi.T)
