"""Reduced two-level state under pure dephasing and its eigensystem path.

Basis ordering is (|e>, |g>).  The stored ``coherence`` is the element that
carries the free precession factor exp(-i*omega*t); it sits in the lower-left
corner of the 2x2 matrix, which orients the Bloch loop so that the closed
system acquires the geometric phase +pi*(1 - cos(theta0)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, GaugeError

DEGENERACY_TOL = 1e-14
# below this magnitude the t=0 anchor component cannot fix the phase
_ANCHOR_FLOOR = 1e-8

Kernel = Callable[[np.ndarray], np.ndarray]


def _check_theta(theta0: float) -> None:
    if not (0.0 <= theta0 <= math.pi):
        raise DomainError(f"theta0 must lie in [0, π], got {theta0!r}")


@dataclass(frozen=True)
class SystemParams:
    """Initial polar angle, level splitting and evolution horizon.

    ``tau`` defaults to one free period 2*pi/omega.
    """

    theta0: float
    omega: float = 1.0
    tau: float | None = None

    def __post_init__(self) -> None:
        _check_theta(self.theta0)
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega!r}")
        if self.tau is None:
            object.__setattr__(self, "tau", 2.0 * math.pi / self.omega)
        elif not self.tau > 0:
            raise DomainError(f"tau must be positive, got {self.tau!r}")


@dataclass(frozen=True)
class DensityMatrix:
    p_e: float
    coherence: complex

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_e <= 1.0):
            raise DomainError(f"p_e must lie in [0, 1], got {self.p_e!r}")

    @property
    def p_g(self) -> float:
        return 1.0 - self.p_e

    def matrix(self) -> np.ndarray:
        c = complex(self.coherence)
        return np.array([[self.p_e, c.conjugate()], [c, self.p_g]], dtype=complex)

    def bloch_length(self) -> float:
        return math.hypot(2.0 * self.p_e - 1.0, 2.0 * abs(self.coherence))

    def is_positive(self, atol: float = 1e-12) -> bool:
        return abs(self.coherence) <= math.sqrt(self.p_e * self.p_g) + atol


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eps_plus: float
    eps_minus: float
    v_plus: np.ndarray
    v_minus: np.ndarray
    degenerate: bool = False


def density_from_angle(theta0: float) -> DensityMatrix:
    """Pure state cos(theta0/2)|e> + sin(theta0/2)|g>."""
    _check_theta(theta0)
    return DensityMatrix(p_e=math.cos(theta0 / 2.0) ** 2, coherence=0.5 * math.sin(theta0))


def coherence_trajectory(params: SystemParams, kernel: Kernel, times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if np.any(times < 0):
        raise DomainError("evolution times must be nonnegative")
    factor = np.asarray(kernel(times), dtype=complex)
    return 0.5 * math.sin(params.theta0) * np.exp(-1j * params.omega * times) * factor


def evolve_dephasing(params: SystemParams, kernel: Kernel, t: float) -> DensityMatrix:
    """State at time ``t``: populations frozen, coherence multiplied by F(t).

    Positivity is not enforced here, since approximate kernels may exceed
    |F| = 1; use :meth:`DensityMatrix.is_positive` to check.
    """
    c = coherence_trajectory(params, kernel, np.array([t]))[0]
    return DensityMatrix(p_e=math.cos(params.theta0 / 2.0) ** 2, coherence=complex(c))


def _fix_largest_real(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    a = v[k]
    return v if a == 0 else v * (np.conj(a) / abs(a))


def _closed_form(p_e: float, coh: np.ndarray):
    """Vectorized eigensystem of [[p_e, conj(c)], [c, 1 - p_e]].

    Returns eigenvalues (n, 2), eigenvectors (n, 2, 2) indexed
    [point, branch, component] with branch 0 the larger eigenvalue, and the
    Bloch-vector length.
    """
    z = 2.0 * p_e - 1.0
    mag = np.abs(coh)
    r = np.hypot(z, 2.0 * mag)
    # eps_minus from the determinant avoids cancellation for near-pure states
    pp = p_e * (1.0 - p_e)
    det = pp - mag**2
    # rank-1 states: a roundoff-level determinant would leak a sqrt-sized weight
    det = np.where(np.abs(det) <= 8.0 * np.finfo(float).eps * pp, 0.0, det)
    eps_minus = 2.0 * det / (1.0 + r)
    vals = np.stack([1.0 - eps_minus, eps_minus], axis=-1)

    beta = np.arctan2(2.0 * mag, z)
    cb, sb = np.cos(beta / 2.0), np.sin(beta / 2.0)
    ph = np.exp(1j * np.angle(coh))
    vecs = np.empty(coh.shape + (2, 2), dtype=complex)
    vecs[..., 0, 0] = cb
    vecs[..., 0, 1] = sb * ph
    vecs[..., 1, 0] = sb
    vecs[..., 1, 1] = -cb * ph
    return vals, vecs, r


def eigendecompose(rho: DensityMatrix) -> EigenDecomposition:
    vals, vecs, r = _closed_form(rho.p_e, np.array([complex(rho.coherence)]))
    degenerate = bool(r[0] < DEGENERACY_TOL)
    if degenerate:
        v_plus = np.array([1.0, 0.0], dtype=complex)
        v_minus = np.array([0.0, 1.0], dtype=complex)
    else:
        v_plus = _fix_largest_real(vecs[0, 0])
        v_minus = _fix_largest_real(vecs[0, 1])
    return EigenDecomposition(
        eps_plus=float(vals[0, 0]),
        eps_minus=float(vals[0, 1]),
        v_plus=v_plus,
        v_minus=v_minus,
        degenerate=degenerate,
    )


@dataclass(frozen=True, eq=False)
class EigenPath:
    """Time-sampled eigensystem along [0, tau].

    ``eigvecs[i, k]`` is the unit vector of branch ``k`` at ``times[i]``.
    Branches are followed continuously through eigenvalue crossings, so
    branch 0 is the branch that starts as the dominant eigenvector; it need
    not stay the larger eigenvalue afterwards.
    """

    times: np.ndarray
    eigvals: np.ndarray
    eigvecs: np.ndarray
    degenerate: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.degenerate is None:
            object.__setattr__(self, "degenerate", np.zeros(len(self.times), dtype=bool))

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def degenerate_times(self) -> list[float]:
        return [float(t) for t in self.times[self.degenerate]]

    @property
    def decomps(self) -> list[EigenDecomposition]:
        return [
            EigenDecomposition(
                eps_plus=float(self.eigvals[i, 0]),
                eps_minus=float(self.eigvals[i, 1]),
                v_plus=self.eigvecs[i, 0],
                v_minus=self.eigvecs[i, 1],
                degenerate=bool(self.degenerate[i]),
            )
            for i in range(len(self.times))
        ]

    def overlaps(self, stride: int = 1) -> np.ndarray:
        """Consecutive overlaps <v_k(t_i)|v_k(t_{i+stride})>, shape (n, 2)."""
        v = self.eigvecs[::stride]
        return np.einsum("ikc,ikc->ik", v[:-1].conj(), v[1:])


def _repair_degenerate(vecs: np.ndarray, deg: np.ndarray) -> None:
    good = np.flatnonzero(~deg)
    for i in np.flatnonzero(deg):
        j = np.searchsorted(good, i)
        left, right = good[j - 1], good[j]
        w = (i - left) / (right - left)
        a = vecs[left, 0]
        b = vecs[right, 0]
        ov = np.vdot(a, b)
        if ov != 0:
            b = b * (np.conj(ov) / abs(ov))
        u = (1.0 - w) * a + w * b
        u = u / np.linalg.norm(u)
        vecs[i, 0] = u
        vecs[i, 1] = np.array([-np.conj(u[1]), np.conj(u[0])])


def _propagate_gauge(vecs: np.ndarray) -> None:
    """Anchor each branch on its largest t=0 component, then enforce continuity."""
    for k in range(2):
        anchor = int(np.argmax(np.abs(vecs[0, k])))
        comp = vecs[:, k, anchor]
        mag = np.abs(comp)
        ok = mag > _ANCHOR_FLOOR
        vecs[ok, k] *= (np.conj(comp[ok]) / mag[ok])[:, None]
        if ok.all():
            ov = np.einsum("ic,ic->i", vecs[:-1, k].conj(), vecs[1:, k])
            flips = np.concatenate([[1.0], np.cumprod(np.where(ov.real < 0, -1.0, 1.0))])
            vecs[:, k] *= flips[:, None]
            continue
        for i in range(1, len(vecs)):
            ov = np.vdot(vecs[i - 1, k], vecs[i, k])
            if not ok[i] and ov != 0:
                vecs[i, k] *= np.conj(ov) / abs(ov)
            elif ov.real < 0:
                vecs[i, k] *= -1.0


def build_eigenpath(params: SystemParams, kernel: Kernel, n_steps: int) -> EigenPath:
    if n_steps < 16 or n_steps % 2:
        raise DomainError(f"n_steps must be even and >= 16, got {n_steps!r}")
    times = np.linspace(0.0, params.tau, n_steps + 1)
    coh = coherence_trajectory(params, kernel, times)
    p_e = math.cos(params.theta0 / 2.0) ** 2
    vals, vecs, r = _closed_form(p_e, coh)
    deg = r < DEGENERACY_TOL
    for idx in (0, -1):
        if deg[idx]:
            raise GaugeError("degenerate reduced state at path endpoint", float(times[idx]))

    good = np.flatnonzero(~deg)
    if len(good) > 1:
        a = vecs[good[:-1], 0]
        same = np.abs(np.einsum("ic,ic->i", a.conj(), vecs[good[1:], 0]))
        cross = np.abs(np.einsum("ic,ic->i", a.conj(), vecs[good[1:], 1]))
        swapped = np.concatenate([[0], np.cumsum(cross > same) % 2]).astype(bool)
        sw = good[swapped]
        vals[sw] = vals[sw, ::-1]
        vecs[sw] = vecs[sw, ::-1]

    if deg.any():
        vals[deg] = 0.5
        _repair_degenerate(vecs, deg)
    _propagate_gauge(vecs)
    return EigenPath(times=times, eigvals=vals, eigvecs=vecs, degenerate=deg)
