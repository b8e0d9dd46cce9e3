"""Decoherence factors F(t) multiplying the system coherence.

Spin-boson bath
---------------
Spectral density with exponential cutoff::

    I(w) = gamma0 * w * (w / cutoff)**(n - 1) * exp(-w / cutoff)

The diffusion coefficient and the decoherence exponent both reduce to single
frequency integrals::

    D(s) = int_0^inf I(w) coth(w / 2T) sin(w s) / w  dw
    A(t) = int_0^inf I(w) coth(w / 2T) (1 - cos(w t)) / w**2  dw

Each is split at the first oscillation period: a smooth head on [0, 2*pi/s]
written with sinc factors (no 0/0 at w -> 0), and a tail handled by QUADPACK's
Fourier-weighted rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate

from .errors import DomainError, QuadratureError

QUAD_LIMIT = 10_000  # panel budget
QUAD_EPSABS = 1e-14
D_RTOL = 1e-9
A_RTOL = 1e-8
# e**-60 relative to the peak of the cutoff factor
_TAIL_DECADES = 60.0


@dataclass(frozen=True)
class BathSpec:
    gamma0: float
    cutoff: float
    exponent: float = 1.0
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.gamma0 < 0:
            raise DomainError(f"gamma0 must be >= 0, got {self.gamma0!r}")
        if not self.cutoff > 0:
            raise DomainError(f"cutoff must be > 0, got {self.cutoff!r}")
        if self.exponent < 1:
            raise DomainError(f"exponent must be >= 1, got {self.exponent!r}")
        if self.temperature < 0:
            raise DomainError(f"temperature must be >= 0, got {self.temperature!r}")


@dataclass(frozen=True)
class SpinEnvironment:
    couplings: tuple[float, ...]
    amplitudes: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "couplings", tuple(float(j) for j in self.couplings))
        object.__setattr__(
            self, "amplitudes", tuple((float(a), float(b)) for a, b in self.amplitudes)
        )
        if len(self.couplings) < 1 or len(self.couplings) != len(self.amplitudes):
            raise DomainError("couplings and amplitudes must be equal-length and non-empty")
        for a, b in self.amplitudes:
            if a < 0 or b < 0 or abs(a * a + b * b - 1.0) > 1e-12:
                raise DomainError(f"amplitude pair ({a}, {b}) is not a normalized (|α|, |β|)")

    @classmethod
    def single(cls, coupling: float, polarization: float = 0.0) -> "SpinEnvironment":
        """One environment spin with <sigma_z> = ``polarization``."""
        if abs(polarization) > 1:
            raise DomainError(f"polarization must lie in [-1, 1], got {polarization!r}")
        a = math.sqrt((1.0 + polarization) / 2.0)
        b = math.sqrt((1.0 - polarization) / 2.0)
        return cls(couplings=(coupling,), amplitudes=((a, b),))

    def polarizations(self) -> np.ndarray:
        amp = np.asarray(self.amplitudes)
        return amp[:, 0] ** 2 - amp[:, 1] ** 2


@dataclass(frozen=True)
class KickedParams:
    coupling: float
    kick_rate: float
    polarization: float = 0.0
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if not self.kick_rate > 0:
            raise DomainError(f"kick_rate must be > 0, got {self.kick_rate!r}")
        if abs(self.polarization) > 1:
            raise DomainError(f"polarization must lie in [-1, 1], got {self.polarization!r}")
        if not (0.0 <= self.alpha <= math.pi):
            raise DomainError(f"alpha must lie in [0, π], got {self.alpha!r}")

    @property
    def epsilon(self) -> float:
        return 2.0 / 3.0 * self.alpha**2


# -- spin-boson quadrature ---------------------------------------------------


def spectral_density(bath: BathSpec, w):
    w = np.asarray(w, dtype=float)
    return bath.gamma0 * w * (w / bath.cutoff) ** (bath.exponent - 1.0) * np.exp(-w / bath.cutoff)


def _weights(bath: BathSpec):
    """Return scalar callables g(w) = I(w)/w and q(w) = w*coth(w/2T)."""
    lam, n, kT, g0 = bath.cutoff, bath.exponent, bath.temperature, bath.gamma0
    switch = 1e-8 * max(kT, lam)

    def g(w: float) -> float:
        return g0 * (w / lam) ** (n - 1.0) * math.exp(-w / lam)

    if kT == 0:
        def q(w: float) -> float:
            return w
    else:
        def q(w: float) -> float:
            if w < switch:
                return 2.0 * kT
            return w / math.tanh(w / (2.0 * kT))

    return g, q


def _omega_max(bath: BathSpec) -> float:
    return bath.cutoff * (bath.exponent + _TAIL_DECADES)


def _quad(func, a, b, rtol, what, **kw) -> float:
    val, err, *rest = integrate.quad(
        func, a, b, epsabs=QUAD_EPSABS, epsrel=rtol * 0.1, limit=QUAD_LIMIT, full_output=1, **kw
    )
    # a message after the info dict signals a QUADPACK warning
    if len(rest) > 1 and err > max(QUAD_EPSABS, rtol * abs(val)):
        raise QuadratureError(f"{what}: quadrature did not converge", err)
    return val


def diffusion_D(bath: BathSpec, s: float) -> float:
    """Diffusion coefficient D(s) at time ``s``."""
    if s < 0:
        raise DomainError(f"s must be >= 0, got {s!r}")
    if s == 0 or bath.gamma0 == 0:
        return 0.0
    g, q = _weights(bath)
    wmax = _omega_max(bath)
    split = min(wmax, 2.0 * math.pi / s)

    def head(w: float) -> float:
        x = w * s
        sinc = math.sin(x) / x if x > 1e-8 else 1.0 - x * x / 6.0
        return g(w) * q(w) * s * sinc

    val = _quad(head, 0.0, split, D_RTOL, "D(s) head")
    if split < wmax:
        val += _quad(
            lambda w: g(w) * q(w) / w, split, wmax, D_RTOL, "D(s) tail", weight="sin", wvar=s
        )
    return val


def decoherence_exponent_A(bath: BathSpec, t: float) -> float:
    """Decoherence exponent A(t) = int_0^t D(s) ds, so that F(t) = exp(-A(t))."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t!r}")
    if t == 0 or bath.gamma0 == 0:
        return 0.0
    g, q = _weights(bath)
    wmax = _omega_max(bath)
    split = min(wmax, 2.0 * math.pi / t)

    def head(w: float) -> float:
        x = 0.5 * w * t
        sinc = math.sin(x) / x if x > 1e-8 else 1.0 - x * x / 6.0
        return g(w) * q(w) * 0.5 * t * t * sinc * sinc

    val = _quad(head, 0.0, split, A_RTOL, "A(t) head")
    if split < wmax:
        def tail(w: float) -> float:
            return g(w) * q(w) / (w * w)

        val += _quad(tail, split, wmax, A_RTOL, "A(t) tail")
        val -= _quad(tail, split, wmax, A_RTOL, "A(t) tail", weight="cos", wvar=t)
    return max(val, 0.0)


def factor_spin_boson(bath: BathSpec, t: float) -> complex:
    return complex(math.exp(-decoherence_exponent_A(bath, t)))


# -- closed-form factors -----------------------------------------------------


def factor_spin_spin(env: SpinEnvironment, t):
    t = np.asarray(t, dtype=float)
    out = np.ones(t.shape, dtype=complex)
    for j, p in zip(env.couplings, env.polarizations()):
        x = math.pi * j * t
        out = out * (np.cos(x) + 1j * p * np.sin(x))
    return out if out.ndim else complex(out)


def factor_kicked_fast(params: KickedParams, t):
    t = np.asarray(t, dtype=float)
    j, gam, pz = params.coupling, params.kick_rate, params.polarization
    decay = np.exp(-(math.pi * j) ** 2 * t / (2.0 * gam))
    out = decay - 1j * pz * math.sin(math.pi * j / gam) * decay
    return out if out.ndim else complex(out)


def factor_kicked_small_angle(params: KickedParams, t):
    t = np.asarray(t, dtype=float)
    eps = params.epsilon
    x = math.pi * params.coupling * t
    out = (
        np.exp(-params.kick_rate * t * eps)
        * (1.0 + eps / 2.0)
        * (np.cos(x) - 1j * params.polarization * np.sin(x))
    )
    return out if out.ndim else complex(out)


# -- kernel objects ------------------------------------------------------------


class DecoherenceKernel:
    """Vectorized callable t -> F(t) tagged with its model name."""

    model = "abstract"

    def __call__(self, t) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class UnitKernel(DecoherenceKernel):
    model = "unitary"

    def __call__(self, t) -> np.ndarray:
        return np.ones(np.shape(t), dtype=complex)


@dataclass(frozen=True)
class SpinSpinKernel(DecoherenceKernel):
    env: SpinEnvironment
    model = "spin-spin"

    def __call__(self, t) -> np.ndarray:
        return np.asarray(factor_spin_spin(self.env, np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class KickedFastKernel(DecoherenceKernel):
    params: KickedParams
    model = "kicked-fast"

    def __call__(self, t) -> np.ndarray:
        return np.asarray(factor_kicked_fast(self.params, np.asarray(t, dtype=float)))


@dataclass(frozen=True)
class KickedSmallAngleKernel(DecoherenceKernel):
    params: KickedParams
    model = "kicked-small-angle"

    def __call__(self, t) -> np.ndarray:
        return np.asarray(factor_kicked_small_angle(self.params, np.asarray(t, dtype=float)))


@dataclass(frozen=True, eq=False)
class SpinBosonKernel(DecoherenceKernel):
    """F(t) = exp(-A(t)) served from a Chebyshev table on [0, t_max].

    The table interpolates A in the variable u = asinh(cutoff * t), in which
    both the short-time ln(1 + cutoff^2 t^2) growth and the linear thermal
    regime are smooth.  ``table_error`` is the largest deviation from direct
    quadrature seen at the check points.  Times beyond ``t_max`` fall back to
    direct quadrature.
    """

    bath: BathSpec
    t_max: float = 2.0 * math.pi
    degree: int = 128
    coeffs: np.ndarray = field(init=False, repr=False)
    table_error: float = field(init=False)
    model = "spin-boson"

    def __post_init__(self) -> None:
        if not self.t_max > 0:
            raise DomainError(f"t_max must be > 0, got {self.t_max!r}")
        u_max = math.asinh(self.bath.cutoff * self.t_max)
        nodes = np.cos(np.pi * (np.arange(self.degree + 1) + 0.5) / (self.degree + 1))
        a_nodes = np.array([self._direct(self._t_of(x, u_max)) for x in nodes])
        coeffs = C.chebfit(nodes, a_nodes, self.degree)
        object.__setattr__(self, "coeffs", coeffs)
        check = np.linspace(-1.0, 1.0, 9)[1:-1] + 0.5 / (self.degree + 1)
        err = max(
            abs(C.chebval(x, coeffs) - self._direct(self._t_of(x, u_max))) for x in check
        )
        object.__setattr__(self, "table_error", float(err))

    def _t_of(self, x: float, u_max: float) -> float:
        return math.sinh(0.5 * (x + 1.0) * u_max) / self.bath.cutoff

    def _direct(self, t: float) -> float:
        return decoherence_exponent_A(self.bath, t)

    def exponent(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("t must be >= 0")
        u_max = math.asinh(self.bath.cutoff * self.t_max)
        inside = t <= self.t_max
        x = 2.0 * np.arcsinh(self.bath.cutoff * t[inside]) / u_max - 1.0
        out = np.empty(t.shape)
        out[inside] = C.chebval(x, self.coeffs)
        out[~inside] = [self._direct(float(s)) for s in t[~inside]]
        out[t == 0] = 0.0
        return out

    def __call__(self, t) -> np.ndarray:
        return np.exp(-self.exponent(t)).astype(complex)


def make_spin_spin_single(coupling: float, polarization: float = 0.0) -> SpinSpinKernel:
    return SpinSpinKernel(SpinEnvironment.single(coupling, polarization))

