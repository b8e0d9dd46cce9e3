"""Monte Carlo simulation of the system qubit coupled to one kicked environment qubit.

Between kicks the Hamiltonian (omega/2) Z1 + (pi J/2) Z1 Z2 is diagonal, so the
four-dimensional pure state evolves by phases only.  A kick rotates the
environment qubit about y by its angle.  Each realization yields the
per-trajectory factor f(t) = rho_eg(t) e^{i omega t} / rho_eg(0).

Realization ``i`` draws from ``SeedSequence(seed, spawn_key=(i,))``.  Partial
sums are accumulated over fixed-size chunks and merged in chunk order, so the
result is bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, FitError
from .kernels import DecoherenceKernel
from .qstate import SystemParams

SCHEDULES = ("fixed", "poisson")
KICK_MODES = ("full", "small-angle", "none")
CHUNK = 256

_Z = np.array([1.0, -1.0])


@dataclass(frozen=True, eq=False)
class KickRealization:
    kick_times: np.ndarray
    kick_angles: np.ndarray

    def __post_init__(self) -> None:
        if len(self.kick_times) != len(self.kick_angles):
            raise DomainError("one angle per kick is required")
        if np.any(np.diff(self.kick_times) <= 0):
            raise DomainError("kick times must be strictly increasing")

    @classmethod
    def empty(cls) -> "KickRealization":
        return cls(np.empty(0), np.empty(0))


@dataclass(frozen=True)
class MCConfig:
    realizations: int = 10_000
    seed: int = 0
    schedule: str = "fixed"
    grid_points: int = 257

    def __post_init__(self) -> None:
        if self.realizations < 1:
            raise DomainError("realizations must be >= 1")
        if self.grid_points < 2:
            raise DomainError("grid_points must be >= 2")
        if self.schedule not in SCHEDULES:
            raise DomainError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True, eq=False)
class EmpiricalFactor:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    realizations: int

    def as_kernel(self) -> "EmpiricalKernel":
        return EmpiricalKernel(self)


class EmpiricalKernel(DecoherenceKernel):
    """Cubic interpolation of a Monte Carlo mean factor."""

    model = "kicked-mc"

    def __init__(self, emp: EmpiricalFactor):
        self.emp = emp
        self._re = CubicSpline(emp.times, emp.mean.real)
        self._im = CubicSpline(emp.times, emp.mean.imag)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < self.emp.times[0] - 1e-12) or np.any(t > self.emp.times[-1] + 1e-12):
            raise DomainError("empirical kernel evaluated outside its sampled window")
        return self._re(t) + 1j * self._im(t)


def sample_kicks(
    kick_rate: float,
    tau: float,
    rng: np.random.Generator,
    mode: str = "full",
    alpha: float = 0.0,
    schedule: str = "fixed",
) -> KickRealization:
    if not kick_rate > 0 or not tau > 0:
        raise DomainError("kick_rate and tau must be > 0")
    if mode not in KICK_MODES:
        raise DomainError(f"mode must be one of {KICK_MODES}, got {mode!r}")
    if schedule not in SCHEDULES:
        raise DomainError(f"schedule must be one of {SCHEDULES}, got {schedule!r}")
    if mode == "none":
        return KickRealization.empty()

    if schedule == "fixed":
        n = int(math.floor(kick_rate * tau * (1.0 + 1e-12)))
        times = np.arange(1, n + 1) / kick_rate
    else:
        times = []
        t = rng.exponential(1.0 / kick_rate)
        while t <= tau:
            times.append(t)
            t += rng.exponential(1.0 / kick_rate)
        times = np.asarray(times, dtype=float)

    if mode == "full":
        angles = rng.uniform(0.0, 2.0 * math.pi, size=len(times))
    else:
        angles = rng.uniform(-alpha, alpha, size=len(times))
    return KickRealization(times, angles)


def _ry(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2.0), math.sin(angle / 2.0)
    return np.array([[c, -s], [s, c]])


def _energies(omega: float, J: float) -> np.ndarray:
    # index [system, env]; 0 is the +1 eigenstate of sigma_z
    return 0.5 * omega * _Z[:, None] + 0.5 * math.pi * J * np.outer(_Z, _Z)


def evolve_states(
    sys: SystemParams,
    J: float,
    env_state: tuple[complex, complex],
    realization: KickRealization,
    grid,
) -> np.ndarray:
    """Full two-qubit state on ``grid``, shape (len(grid), 2, 2) as [t, system, env]."""
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > sys.tau * (1.0 + 1e-12)) or np.any(np.diff(grid) < 0):
        raise DomainError("grid must be nondecreasing and inside [0, tau]")
    a2, b2 = env_state
    if abs(abs(a2) ** 2 + abs(b2) ** 2 - 1.0) > 1e-12:
        raise DomainError("environment state must be normalized")
    half = 0.5 * sys.theta0
    psi = np.outer([math.cos(half), math.sin(half)], [a2, b2]).astype(complex)
    energies = _energies(sys.omega, J)

    out = np.empty((len(grid), 2, 2), dtype=complex)
    t_last = 0.0
    start = 0
    bounds = np.searchsorted(grid, realization.kick_times, side="left")
    for kick_t, angle, stop in zip(realization.kick_times, realization.kick_angles, bounds):
        seg = grid[start:stop]
        out[start:stop] = psi * np.exp(-1j * energies * (seg - t_last)[:, None, None])
        psi = psi * np.exp(-1j * energies * (kick_t - t_last))
        psi = psi @ _ry(angle).T
        t_last = kick_t
        start = stop
    seg = grid[start:]
    out[start:] = psi * np.exp(-1j * energies * (seg - t_last)[:, None, None])
    return out


def evolve_two_qubit(
    sys: SystemParams,
    J: float,
    env_state: tuple[complex, complex],
    realization: KickRealization,
    grid,
) -> np.ndarray:
    """Per-realization decoherence factor on ``grid``."""
    if math.sin(sys.theta0) == 0.0:
        raise DomainError("the system coherence vanishes at the poles; f is undefined")
    grid = np.asarray(grid, dtype=float)
    psi = evolve_states(sys, J, env_state, realization, grid)
    rho_eg = np.einsum("te,te->t", psi[:, 0, :], psi[:, 1, :].conj())
    rho0 = 0.5 * math.sin(sys.theta0)
    return rho_eg * np.exp(1j * sys.omega * grid) / rho0


def _child_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def _chunk_moments(args):
    lo, hi, config, sys, J, env_state, kick_rate, mode, alpha, grid = args
    rows = np.empty((hi - lo, len(grid)), dtype=complex)
    for r, i in enumerate(range(lo, hi)):
        rng = _child_rng(config.seed, i)
        kicks = sample_kicks(kick_rate, sys.tau, rng, mode=mode, alpha=alpha, schedule=config.schedule)
        rows[r] = evolve_two_qubit(sys, J, env_state, kicks, grid)
    n = hi - lo
    mean = rows.mean(axis=0)
    dev = rows - mean
    m2 = np.stack([np.sum(dev.real**2, axis=0), np.sum(dev.imag**2, axis=0)])
    return n, mean, m2


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("GP_THREADS", "1") or 1)
    return max(1, int(threads))


def estimate_factor(
    config: MCConfig,
    sys: SystemParams,
    J: float,
    env_state: tuple[complex, complex],
    kick_rate: float,
    mode: str = "full",
    alpha: float = 0.0,
    threads: int | None = None,
) -> EmpiricalFactor:
    """Ensemble mean of the complex factor with per-time standard errors."""
    grid = np.linspace(0.0, sys.tau, config.grid_points)
    jobs = [
        (lo, min(lo + CHUNK, config.realizations), config, sys, J, env_state, kick_rate, mode, alpha, grid)
        for lo in range(0, config.realizations, CHUNK)
    ]
    n_threads = resolve_threads(threads)
    if n_threads == 1 or len(jobs) == 1:
        parts = [_chunk_moments(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            parts = list(pool.map(_chunk_moments, jobs))

    # Chan et al. pairwise merge, in chunk order
    n_tot, mean, m2 = parts[0]
    for n, mu, m2_part in parts[1:]:
        total = n_tot + n
        delta = mu - mean
        mean = mean + delta * (n / total)
        m2 = m2 + m2_part + np.stack([delta.real**2, delta.imag**2]) * (n_tot * n / total)
        n_tot = total

    if n_tot > 1:
        var = (m2[0] + m2[1]) / (n_tot - 1)
        stderr = np.sqrt(var / n_tot)
    else:
        stderr = np.zeros(len(grid))
    return EmpiricalFactor(times=grid, mean=mean, stderr=stderr, realizations=n_tot)


def fit_decay_rate(emp: EmpiricalFactor, t_min: float, t_max: float) -> tuple[float, float]:
    """Weighted least-squares slope of ln|mean| on [t_min, t_max].

    Returns the decay rate (minus the slope) and its standard error.  Weights
    are 1/sigma^2 with sigma = stderr/|mean|; noiseless input is fitted
    unweighted and the error comes from the residuals.
    """
    sel = (emp.times >= t_min - 1e-12) & (emp.times <= t_max + 1e-12)
    t = emp.times[sel]
    mag = np.abs(emp.mean[sel])
    se = emp.stderr[sel]
    if len(t) < 5:
        raise FitError(f"need at least 5 points in [{t_min}, {t_max}], got {len(t)}")
    bad = np.flatnonzero(~(mag > 3.0 * se))
    if len(bad):
        raise FitError(f"|mean| <= 3 stderr at t = {t[bad[0]]!r}")

    y = np.log(mag)
    if np.all(se == 0):
        w = np.ones_like(t)
    else:
        sigma = np.maximum(se / mag, np.finfo(float).tiny)
        w = 1.0 / sigma**2
    s, sx, sy = w.sum(), (w * t).sum(), (w * y).sum()
    sxx, sxy = (w * t * t).sum(), (w * t * y).sum()
    det = s * sxx - sx * sx
    slope = (s * sxy - sx * sy) / det
    if np.all(se == 0):
        intercept = (sy - slope * sx) / s
        resid = y - (intercept + slope * t)
        slope_err = math.sqrt(float(np.sum(resid**2)) / (len(t) - 2) * s / det)
    else:
        slope_err = math.sqrt(s / det)
    return -float(slope), float(slope_err)
