"""Closed-form first-order corrections and decoherence timescales.

All formulas are perturbative.  Each :class:`Prediction` carries a note on
its regime so that reports never present one as exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate

from .errors import DomainError, QuadratureError, RegimeError
from .kernels import BathSpec, decoherence_exponent_A
from .qstate import SystemParams

PI = math.pi


@dataclass(frozen=True)
class Prediction:
    value: float
    model: str
    formula_id: str
    validity_note: str
    exceeds_tau: bool | None = None

    def __post_init__(self) -> None:
        if not math.isfinite(self.value) and not self.formula_id.startswith("t_D"):
            raise DomainError(f"prediction {self.formula_id} is not finite: {self.value!r}")


def delta_phi_sb_general(
    bath: BathSpec,
    params: SystemParams,
    kernel_derivative: Callable[[float], float] | None = None,
    rtol: float = 1e-8,
) -> float:
    """First-order correction -(gamma0/2) * omega * sin^2(theta0) * int dF/dgamma0 dt.

    ``kernel_derivative(t)`` is dF/dgamma0 at gamma0 = 0.  The default uses the
    fact that A(t) is linear in gamma0, so the derivative is minus A(t)
    evaluated at unit coupling.
    """
    if kernel_derivative is None:
        unit = BathSpec(1.0, bath.cutoff, bath.exponent, bath.temperature)

        def kernel_derivative(t: float) -> float:
            return -decoherence_exponent_A(unit, t)

    val, err = integrate.quad(kernel_derivative, 0.0, params.tau, epsabs=0.0, epsrel=rtol, limit=200)
    if err > max(rtol * abs(val), 1e-300) * 10:
        raise QuadratureError("first-order spin-boson integral did not converge", err)
    return -0.5 * bath.gamma0 * params.omega * math.sin(params.theta0) ** 2 * val


def delta_phi_sb_high_T(gamma0: float, omega: float, kT: float, theta0: float) -> float:
    if gamma0 < 0 or kT < 0 or theta0 < 0 or not omega > 0:
        raise DomainError("gamma0, kT, theta0 must be >= 0 and omega > 0")
    return PI**3 * gamma0 * kT * math.sin(theta0) ** 2 / omega


def delta_phi_sb_zero_T(
    gamma0: float, omega: float, cutoff: float, theta0: float, strict: bool = True
) -> float:
    """Quoted zero-temperature correction (pi/2) gamma0 (ln(2 pi cutoff/omega) - 1) sin^2.

    The formula assumes cutoff * tau >> 1; ``strict=False`` evaluates it anyway.
    """
    if strict and not cutoff > omega:
        raise RegimeError(f"zero-T formula needs cutoff > omega (got {cutoff!r} <= {omega!r})")
    return 0.5 * PI * gamma0 * (math.log(2.0 * PI * cutoff / omega) - 1.0) * math.sin(theta0) ** 2


def delta_phi_sb_zero_T_first_order(gamma0: float, omega: float, cutoff: float, theta0: float) -> float:
    """Asymptotic value of :func:`delta_phi_sb_general` for the T = 0 ohmic kernel.

    Integrating (gamma0/2) ln(1 + cutoff^2 t^2) over one period gives twice
    the quoted :func:`delta_phi_sb_zero_T` for cutoff*tau >> 1.
    """
    return 2.0 * delta_phi_sb_zero_T(gamma0, omega, cutoff, theta0)


def delta_phi_ss_z(J: float, omega: float, theta0: float) -> float:
    if not omega > 0:
        raise DomainError("omega must be > 0")
    return 4.0 * PI**4 / (3.0 * omega**2) * J**2 * math.sin(theta0) ** 2


def delta_phi_ss_cr(J: float, kick_rate: float, omega: float, theta0: float) -> float:
    """Fast-kick correction; derived for p_z = 0 only."""
    if not kick_rate > 0 or not omega > 0:
        raise DomainError("kick_rate and omega must be > 0")
    return PI**4 / (2.0 * kick_rate * omega) * J**2 * math.sin(theta0) ** 2


def delta_phi_ss_sa(J: float, kick_rate: float, alpha: float, omega: float, theta0: float) -> float:
    if not kick_rate > 0 or not omega > 0:
        raise DomainError("kick_rate and omega must be > 0")
    eps = 2.0 / 3.0 * alpha**2
    bracket = (PI * kick_rate - 0.5 * omega) * eps + 2.0 / 3.0 * PI**4 / omega * J**2
    return PI / omega * math.sin(theta0) ** 2 * bracket


_TD_FORMULAS = {
    "spin-boson-high-T": ("t_D = 1/(gamma0 pi kT)", ("gamma0", "kT")),
    "spin-boson-zero-T": ("t_D ~ exp(1/gamma0)/cutoff", ("gamma0", "cutoff")),
    "kicked-fast": ("t_D = 2 Gamma/J^2", ("J", "kick_rate")),
    "kicked-small-angle": ("t_D = 1/(Gamma eps)", ("kick_rate", "alpha")),
}


def decoherence_time(model: str, tau: float | None = None, **params: float) -> Prediction:
    """Decoherence timescale for ``model``; flags whether it exceeds ``tau``."""
    try:
        formula, needed = _TD_FORMULAS[model]
    except KeyError:
        raise DomainError(f"unknown decoherence-time model {model!r}") from None
    missing = [k for k in needed if k not in params]
    if missing:
        raise DomainError(f"{model} decoherence time needs {', '.join(missing)}")
    p = {k: float(params[k]) for k in needed}
    if any(v <= 0 for v in p.values()):
        raise DomainError(f"{model} decoherence time needs positive {', '.join(needed)}")

    if model == "spin-boson-high-T":
        value = 1.0 / (p["gamma0"] * PI * p["kT"])
    elif model == "spin-boson-zero-T":
        x = 1.0 / p["gamma0"]
        value = math.exp(x) / p["cutoff"] if x < 700 else math.inf
    elif model == "kicked-fast":
        value = 2.0 * p["kick_rate"] / p["J"] ** 2
    else:
        value = 1.0 / (p["kick_rate"] * 2.0 / 3.0 * p["alpha"] ** 2)
    return Prediction(
        value=value,
        model=model,
        formula_id=formula,
        validity_note="order-of-magnitude scale" if model == "spin-boson-zero-T" else "e-folding scale",
        exceeds_tau=None if tau is None else value > tau,
    )
